//! Dipole-dipole interactions between Rydberg atoms of the same or different
//! alkali species.
//!
//! The crate covers level energies from quantum-defect series, radial
//! dipole matrix elements, single- and multi-channel Förster eigensystems,
//! angular interaction profiles, resonance scans and the error budget of a
//! blockade-mediated QND readout.
//!
//! ```
//! use std::sync::Arc;
//! use rydpair::atomic::AtomicData;
//! use rydpair::protocol::{full_budget, LatticeGeometry, ProtocolConfig};
//! use rydpair::radial::RadialMatrix;
//! use rydpair::search::{find_resonances, SearchConfig, SpeciesPair};
//! use rydpair::Execution;
//!
//! let radial = RadialMatrix::new(Arc::new(AtomicData::bundled()));
//!
//! let cfg = SearchConfig::new(SpeciesPair::RB_CS, 48, 48);
//! let hits = find_resonances(&radial, &cfg, Execution::Parallel)?;
//! assert!(hits.iter().any(|r| r.channel_index == 3 && r.delta_mhz.abs() < 10.0));
//!
//! let budget = full_budget(&radial, &ProtocolConfig::default(), &LatticeGeometry::default())?;
//! assert!(budget.transfer_error < 2e-3);
//! # Ok::<(), rydpair::Error>(())
//! ```

pub mod angular;
pub mod atomic;
pub mod channel;
pub mod error;
pub mod exec;
pub mod halfint;
pub mod profile;
pub mod protocol;
pub mod radial;
pub mod search;
pub mod units;

pub use error::{Error, Result};
pub use exec::Execution;
pub use halfint::HalfInt;
