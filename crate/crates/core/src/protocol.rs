//! Error budget for blockade-mediated readout of a Cs qubit through its Rb
//! neighbours on a checkerboard lattice.
//!
//! Each Cs atom sits at distance `d/√2` from four Rb atoms; Rb atoms are `d`
//! apart. The Rb Rabi frequency is chosen so that `U_RbCs/Ω = √3`, which
//! suppresses Rb transfer when the Cs atom is excited. Only this two-level
//! nulling condition is modelled; corrections from several Rb atoms sharing
//! one Cs neighbour are not.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::atomic::{FineLevel, Species};
use crate::channel::Channel;
use crate::error::{invalid, Error, Result};
use crate::profile::{f_factor, vdw_angular, SpinConfiguration};
use crate::radial::RadialMatrix;
use crate::search::{channel_levels, enumerate_channels, Assignment, SpeciesPair};
use crate::units::{angular_rad_per_us, MHZ_PER_GHZ};

/// Four-atom transfer error coefficient for `E = c·(U/Ω)²`.
pub const FOUR_ATOM_TRANSFER_COEFFICIENT: f64 = 0.72;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeGeometry {
    /// Same-species period `d` in µm.
    pub period_um: f64,
    /// Angle between the Rb–Cs pair axis and the quantization axis.
    pub theta_interspecies: f64,
    /// Angle between the Rb–Rb pair axis and the quantization axis.
    pub theta_same_species: f64,
}

impl Default for LatticeGeometry {
    /// `d = 4 µm` with the quantization axis normal to the lattice plane.
    fn default() -> Self {
        LatticeGeometry {
            period_um: 4.0,
            theta_interspecies: FRAC_PI_2,
            theta_same_species: FRAC_PI_2,
        }
    }
}

impl LatticeGeometry {
    pub fn with_period(period_um: f64) -> Result<Self> {
        let g = LatticeGeometry {
            period_um,
            ..Self::default()
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period_um > 0.0 && self.period_um.is_finite()) {
            return Err(invalid(format!(
                "lattice period {} µm must be positive",
                self.period_um
            )));
        }
        for t in [self.theta_interspecies, self.theta_same_species] {
            if !t.is_finite() {
                return Err(invalid("lattice angles must be finite"));
            }
        }
        Ok(())
    }

    /// Nearest Rb–Cs distance `d/√2`.
    pub fn interspecies_distance(&self) -> f64 {
        self.period_um / SQRT_2
    }

    pub fn same_species_distance(&self) -> f64 {
        self.period_um
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrosstalkConfig {
    pub wavelength_nm: f64,
    /// Distance to the neighbouring qubit in µm.
    pub distance_um: f64,
    pub numerical_aperture: f64,
    pub optics_efficiency: f64,
    pub detector_efficiency: f64,
}

impl Default for CrosstalkConfig {
    fn default() -> Self {
        let wavelength_nm = 780.0;
        CrosstalkConfig {
            wavelength_nm,
            distance_um: 5.0 * wavelength_nm * 1e-3,
            numerical_aperture: 0.5,
            optics_efficiency: 1.0,
            detector_efficiency: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    /// Rb Rydberg `ns` level.
    pub rb_level: FineLevel,
    /// Cs Rydberg `ns` level.
    pub cs_level: FineLevel,
    /// Fine-structure channel 1..=4 of the Rb–Cs coupling.
    pub channel: u8,
    pub assignment: Assignment,
    /// Ω/2π of the Rb drive in MHz; `None` uses the nulling value.
    pub omega_rb_mhz: Option<f64>,
    /// Ω/2π of the Cs drive in MHz; `None` copies the Rb value.
    pub omega_cs_mhz: Option<f64>,
    /// Rydberg lifetimes in µs; `None` reads the data files.
    pub tau_rb_us: Option<f64>,
    pub tau_cs_us: Option<f64>,
    pub neighbors: u32,
    /// `None` selects the four-atom value when `neighbors == 4`.
    pub transfer_coefficient: Option<f64>,
    pub interspecies_spin: SpinConfiguration,
    pub same_species_spin: SpinConfiguration,
    pub crosstalk: CrosstalkConfig,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            rb_level: FineLevel::s(Species::Rb87, 48).expect("valid level"),
            cs_level: FineLevel::s(Species::Cs133, 51).expect("valid level"),
            channel: 3,
            assignment: Assignment::LowerB,
            omega_rb_mhz: None,
            omega_cs_mhz: None,
            tau_rb_us: None,
            tau_cs_us: None,
            neighbors: 4,
            transfer_coefficient: None,
            interspecies_spin: SpinConfiguration::Antiparallel,
            same_species_spin: SpinConfiguration::Parallel,
            crosstalk: CrosstalkConfig::default(),
        }
    }
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} = {x} must be positive and finite")))
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rb_level.species != Species::Rb87 || self.rb_level.l != 0 {
            return Err(invalid(format!(
                "Rb level must be an Rb ns state, got {}",
                self.rb_level
            )));
        }
        if self.cs_level.species != Species::Cs133 || self.cs_level.l != 0 {
            return Err(invalid(format!(
                "Cs level must be a Cs ns state, got {}",
                self.cs_level
            )));
        }
        if !(1..=4).contains(&self.channel) {
            return Err(invalid(format!("channel {} is not in 1..=4", self.channel)));
        }
        for (name, v) in [
            ("Ω_Rb", self.omega_rb_mhz),
            ("Ω_Cs", self.omega_cs_mhz),
            ("τ_Rb", self.tau_rb_us),
            ("τ_Cs", self.tau_cs_us),
        ] {
            if let Some(x) = v {
                positive(name, x)?;
            }
        }
        if let Some(c) = self.transfer_coefficient {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(invalid(format!(
                    "transfer coefficient {c} must be non-negative"
                )));
            }
        }
        self.transfer_coefficient()?;
        Ok(())
    }

    pub fn transfer_coefficient(&self) -> Result<f64> {
        match (self.transfer_coefficient, self.neighbors) {
            (Some(c), _) => Ok(c),
            (None, 0) => Ok(0.0),
            (None, 4) => Ok(FOUR_ATOM_TRANSFER_COEFFICIENT),
            (None, n) => Err(Error::Unsupported(format!(
                "no transfer-error coefficient for {n} neighbours; pass one explicitly"
            ))),
        }
    }

    /// The Rb–Cs channel driven by the protocol.
    pub fn interspecies_channel(&self, radial: &RadialMatrix) -> Result<Channel> {
        let [a, b, alpha, beta] = channel_levels(
            SpeciesPair::RB_CS,
            self.rb_level.n,
            self.cs_level.n,
            self.assignment,
            self.channel,
        )?;
        Channel::compute(radial, a, b, alpha, beta)
    }

    /// `ns ns → np (n−1)p` channels of the Rb–Rb pair.
    pub fn same_species_channels(&self, radial: &RadialMatrix) -> Result<Vec<Channel>> {
        enumerate_channels(radial, SpeciesPair::RB_RB, self.rb_level.n, self.rb_level.n)
    }
}

/// Pair couplings in MHz (U/2π, magnitudes).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingStrengths {
    pub u_rbcs_mhz: f64,
    /// van der Waals limit of the same coupling, for comparison.
    pub u_rbcs_vdw_mhz: f64,
    pub u_rbrb_mhz: f64,
    pub r_rbcs_um: f64,
    pub r_rbrb_um: f64,
}

impl CouplingStrengths {
    pub fn ratio(&self) -> f64 {
        self.u_rbcs_mhz / self.u_rbrb_mhz
    }
}

pub fn coupling_strengths(
    radial: &RadialMatrix,
    config: &ProtocolConfig,
    geometry: &LatticeGeometry,
) -> Result<CouplingStrengths> {
    config.validate()?;
    geometry.validate()?;
    let r_ab = geometry.interspecies_distance();
    let r_aa = geometry.same_species_distance();

    let ch = config.interspecies_channel(radial)?;
    let psi = config.interspecies_spin.state();
    let f = f_factor(&psi, geometry.theta_interspecies, &ch.coupling())?;
    let u_rbcs = ch.pair_potential(f, r_ab);
    let u_rbcs_vdw = ch.vdw_coefficient(f)? / r_ab.powi(6) * MHZ_PER_GHZ;

    let rr = config.same_species_channels(radial)?;
    let u_rbrb = vdw_angular(
        &config.same_species_spin.state(),
        geometry.theta_same_species,
        &rr,
        r_aa,
    )?;

    Ok(CouplingStrengths {
        u_rbcs_mhz: u_rbcs.abs(),
        u_rbcs_vdw_mhz: u_rbcs_vdw.abs(),
        u_rbrb_mhz: u_rbrb.abs(),
        r_rbcs_um: r_ab,
        r_rbrb_um: r_aa,
    })
}

/// `Ω = U/√3`.
pub fn nulling_rabi(u_mhz: f64) -> Result<f64> {
    if u_mhz == 0.0 || !u_mhz.is_finite() {
        return Err(invalid(format!(
            "no finite nulling Rabi frequency for U = {u_mhz}"
        )));
    }
    Ok(u_mhz.abs() / 3f64.sqrt())
}

/// `|c_Rb|² = Ω²/(Ω²+U²)·sin²(√(1+U²/Ω²)·π/2)`.
pub fn blockade_leakage(omega_mhz: f64, u_mhz: f64) -> Result<f64> {
    positive("Ω", omega_mhz)?;
    let x = u_mhz / omega_mhz;
    let s = ((1.0 + x * x).sqrt() * FRAC_PI_2).sin();
    Ok(s * s / (1.0 + x * x))
}

/// `E = c·(U/Ω)²` with the four-atom coefficient.
pub fn transfer_error(u_mhz: f64, omega_mhz: f64) -> Result<f64> {
    transfer_error_with(FOUR_ATOM_TRANSFER_COEFFICIENT, u_mhz, omega_mhz)
}

pub fn transfer_error_with(coefficient: f64, u_mhz: f64, omega_mhz: f64) -> Result<f64> {
    positive("Ω", omega_mhz)?;
    let x = u_mhz / omega_mhz;
    Ok(coefficient * x * x)
}

/// Rydberg decay probabilities `(P_Rb, P_Cs)`.
///
/// The Rb atom spends `π/2ω_Rb` in the Rydberg level on average and the Cs
/// atom `(2π/ω_Rb + π/ω_Cs)/2`, with `ω = 2π·Ω`.
pub fn spontaneous_emission(
    omega_rb_mhz: f64,
    omega_cs_mhz: f64,
    tau_rb_us: f64,
    tau_cs_us: f64,
) -> Result<(f64, f64)> {
    positive("Ω_Rb", omega_rb_mhz)?;
    positive("Ω_Cs", omega_cs_mhz)?;
    if !(tau_rb_us > 0.0 && tau_cs_us > 0.0) {
        return Err(invalid("lifetimes must be positive"));
    }
    let w_rb = angular_rad_per_us(omega_rb_mhz);
    let w_cs = angular_rad_per_us(omega_cs_mhz);
    let t_rb = 0.5 * PI / w_rb;
    let t_cs = 0.5 * (2.0 * PI / w_rb + PI / w_cs);
    Ok((t_rb / tau_rb_us, t_cs / tau_cs_us))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrosstalkBudget {
    pub eta_abs: f64,
    pub eta_det: f64,
    pub ratio: f64,
}

/// Absorption probability of a scattered photon at a neighbour versus the
/// detection probability at the imaging lens.
pub fn crosstalk_photon_budget(
    wavelength_nm: f64,
    distance_um: f64,
    numerical_aperture: f64,
    optics_efficiency: f64,
    detector_efficiency: f64,
) -> Result<CrosstalkBudget> {
    positive("λ", wavelength_nm)?;
    positive("d", distance_um)?;
    positive("optics efficiency", optics_efficiency)?;
    positive("detector efficiency", detector_efficiency)?;
    if !(numerical_aperture > 0.0 && numerical_aperture < 1.0) {
        return Err(invalid(format!(
            "NA = {numerical_aperture} must lie in (0, 1)"
        )));
    }
    if optics_efficiency > 1.0 || detector_efficiency > 1.0 {
        return Err(invalid("efficiencies cannot exceed 1"));
    }
    let lambda_um = wavelength_nm * 1e-3;
    let sigma = 3.0 * lambda_um * lambda_um / (2.0 * PI);
    let eta_abs = (sigma / (4.0 * PI * distance_um * distance_um)).min(1.0);
    let solid = 0.5 * (1.0 - (1.0 - numerical_aperture * numerical_aperture).sqrt());
    let eta_det = solid * optics_efficiency * detector_efficiency;
    Ok(CrosstalkBudget {
        eta_abs,
        eta_det,
        ratio: eta_abs / eta_det,
    })
}

pub fn crosstalk_from_config(c: &CrosstalkConfig) -> Result<CrosstalkBudget> {
    crosstalk_photon_budget(
        c.wavelength_nm,
        c.distance_um,
        c.numerical_aperture,
        c.optics_efficiency,
        c.detector_efficiency,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorTerm {
    TransferError,
    BlockadeLeakage,
    SpontaneousEmissionRb,
    SpontaneousEmissionCs,
}

impl fmt::Display for ErrorTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorTerm::TransferError => "transfer error",
            ErrorTerm::BlockadeLeakage => "blockade leakage",
            ErrorTerm::SpontaneousEmissionRb => "Rb spontaneous emission",
            ErrorTerm::SpontaneousEmissionCs => "Cs spontaneous emission",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolBudget {
    pub couplings: CouplingStrengths,
    pub coupling_ratio: f64,
    pub omega_null_mhz: f64,
    pub omega_rb_mhz: f64,
    pub omega_cs_mhz: f64,
    pub tau_rb_us: f64,
    pub tau_cs_us: f64,
    pub transfer_error: f64,
    pub blockade_leakage: f64,
    pub p_se_rb: f64,
    pub p_se_cs: f64,
    pub crosstalk: CrosstalkBudget,
    pub dominant: ErrorTerm,
    pub dominant_value: f64,
}

impl ProtocolBudget {
    pub fn terms(&self) -> [(ErrorTerm, f64); 4] {
        [
            (ErrorTerm::TransferError, self.transfer_error),
            (ErrorTerm::BlockadeLeakage, self.blockade_leakage),
            (ErrorTerm::SpontaneousEmissionRb, self.p_se_rb),
            (ErrorTerm::SpontaneousEmissionCs, self.p_se_cs),
        ]
    }

    pub fn to_table(&self) -> String {
        let c = &self.couplings;
        let mut s = String::new();
        let rows: [(&str, String); 15] = [
            ("U_RbCs/2π (MHz)", format!("{:.4}", c.u_rbcs_mhz)),
            ("U_RbCs vdW/2π (MHz)", format!("{:.4}", c.u_rbcs_vdw_mhz)),
            ("U_RbRb/2π (MHz)", format!("{:.4}", c.u_rbrb_mhz)),
            ("U_RbCs/U_RbRb", format!("{:.3}", self.coupling_ratio)),
            ("Ω_null/2π (MHz)", format!("{:.4}", self.omega_null_mhz)),
            ("Ω_Rb/2π (MHz)", format!("{:.4}", self.omega_rb_mhz)),
            ("Ω_Cs/2π (MHz)", format!("{:.4}", self.omega_cs_mhz)),
            ("transfer error E", format!("{:.4e}", self.transfer_error)),
            ("blockade leakage", format!("{:.4e}", self.blockade_leakage)),
            ("P_se Rb", format!("{:.4e}", self.p_se_rb)),
            ("P_se Cs", format!("{:.4e}", self.p_se_cs)),
            ("η_abs", format!("{:.4e}", self.crosstalk.eta_abs)),
            ("η_det", format!("{:.4e}", self.crosstalk.eta_det)),
            ("η_abs/η_det", format!("{:.4e}", self.crosstalk.ratio)),
            (
                "dominant",
                format!("{} ({:.4e})", self.dominant, self.dominant_value),
            ),
        ];
        for (k, v) in rows {
            let _ = writeln!(s, "{k:<22} {v}");
        }
        s
    }
}

fn resolve_lifetime(radial: &RadialMatrix, given: Option<f64>, level: &FineLevel) -> Result<f64> {
    match given {
        Some(t) => Ok(t),
        None => radial.data().lifetime(level),
    }
}

/// Assembles the budget from precomputed couplings and lifetimes.
pub fn budget_from_couplings(
    couplings: CouplingStrengths,
    config: &ProtocolConfig,
    tau_rb_us: f64,
    tau_cs_us: f64,
) -> Result<ProtocolBudget> {
    config.validate()?;
    let omega_null = nulling_rabi(couplings.u_rbcs_mhz)?;
    let omega_rb = config.omega_rb_mhz.unwrap_or(omega_null);
    let omega_cs = config.omega_cs_mhz.unwrap_or(omega_rb);
    let e = transfer_error_with(
        config.transfer_coefficient()?,
        couplings.u_rbrb_mhz,
        omega_rb,
    )?;
    let leak = blockade_leakage(omega_rb, couplings.u_rbcs_mhz)?;
    let (p_rb, p_cs) = spontaneous_emission(omega_rb, omega_cs, tau_rb_us, tau_cs_us)?;
    let crosstalk = crosstalk_from_config(&config.crosstalk)?;

    let mut budget = ProtocolBudget {
        couplings,
        coupling_ratio: couplings.ratio(),
        omega_null_mhz: omega_null,
        omega_rb_mhz: omega_rb,
        omega_cs_mhz: omega_cs,
        tau_rb_us,
        tau_cs_us,
        transfer_error: e,
        blockade_leakage: leak,
        p_se_rb: p_rb,
        p_se_cs: p_cs,
        crosstalk,
        dominant: ErrorTerm::TransferError,
        dominant_value: f64::NEG_INFINITY,
    };
    for (term, v) in budget.terms() {
        if v > budget.dominant_value {
            budget.dominant = term;
            budget.dominant_value = v;
        }
    }
    Ok(budget)
}

pub fn full_budget(
    radial: &RadialMatrix,
    config: &ProtocolConfig,
    geometry: &LatticeGeometry,
) -> Result<ProtocolBudget> {
    let couplings = coupling_strengths(radial, config, geometry)?;
    let tau_rb = resolve_lifetime(radial, config.tau_rb_us, &config.rb_level)?;
    let tau_cs = resolve_lifetime(radial, config.tau_cs_us, &config.cs_level)?;
    budget_from_couplings(couplings, config, tau_rb, tau_cs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atomic::AtomicData;
    use std::sync::Arc;

    fn radial() -> RadialMatrix {
        RadialMatrix::new(Arc::new(AtomicData::bundled()))
    }

    #[test]
    fn nulling_zero() {
        let u = 96.8;
        let om = nulling_rabi(u).unwrap();
        assert!((om - 55.887).abs() < 1e-3);
        assert!(blockade_leakage(om, u).unwrap() < 1e-30);
        assert!(nulling_rabi(0.0).is_err());
    }

    #[test]
    fn leakage_limits() {
        assert!((blockade_leakage(1.0, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(blockade_leakage(1.0, 1e6).unwrap() < 1e-11);
        assert!(blockade_leakage(0.0, 1.0).is_err());
    }

    #[test]
    fn transfer_error_scaling() {
        let e = transfer_error(2.3, 55.9).unwrap();
        assert!((e - 0.0012).abs() < 0.0001);
        assert_eq!(transfer_error(0.0, 55.9).unwrap(), 0.0);
        let q = transfer_error(2.3, 111.8).unwrap();
        assert!((q * 4.0 - e).abs() < 1e-15);
    }

    #[test]
    fn spontaneous_emission_values() {
        let (rb, cs) = spontaneous_emission(55.9, 55.9, 58.0, 63.0).unwrap();
        assert!((rb - 7.7e-5).abs() < 0.1e-5);
        assert!((cs - 2.1e-4).abs() < 0.1e-4);
    }

    #[test]
    fn crosstalk_values() {
        let c = crosstalk_from_config(&CrosstalkConfig::default()).unwrap();
        assert!((c.eta_abs - 0.00152).abs() < 1e-5);
        assert!((c.eta_det - 0.0335).abs() < 1e-4);
        let far = crosstalk_photon_budget(780.0, 1e4, 0.5, 1.0, 0.5).unwrap();
        assert!(far.eta_abs < 1e-9);
        assert!(crosstalk_photon_budget(780.0, 3.9, 1.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn default_budget() {
        let b = full_budget(
            &radial(),
            &ProtocolConfig::default(),
            &LatticeGeometry::default(),
        )
        .unwrap();
        assert!(
            (b.couplings.u_rbcs_mhz - 96.8).abs() < 1.0,
            "{}",
            b.couplings.u_rbcs_mhz
        );
        assert!(
            (b.couplings.u_rbrb_mhz - 2.3).abs() < 0.23,
            "{}",
            b.couplings.u_rbrb_mhz
        );
        assert_eq!(b.dominant, ErrorTerm::TransferError);
        assert!(b.blockade_leakage < 1e-20);
    }

    #[test]
    fn far_from_nulling_leakage_dominates() {
        let r = radial();
        let g = LatticeGeometry::default();
        let u = coupling_strengths(&r, &ProtocolConfig::default(), &g)
            .unwrap()
            .u_rbcs_mhz;
        let cfg = ProtocolConfig {
            omega_rb_mhz: Some(u),
            ..ProtocolConfig::default()
        };
        let b = full_budget(&r, &cfg, &g).unwrap();
        assert_eq!(b.dominant, ErrorTerm::BlockadeLeakage);
    }

    #[test]
    fn composition_is_exact() {
        let r = radial();
        let cfg = ProtocolConfig::default();
        let g = LatticeGeometry::default();
        let b = full_budget(&r, &cfg, &g).unwrap();
        let c = coupling_strengths(&r, &cfg, &g).unwrap();
        let om = nulling_rabi(c.u_rbcs_mhz).unwrap();
        assert_eq!(b.omega_null_mhz.to_bits(), om.to_bits());
        assert_eq!(
            b.transfer_error.to_bits(),
            transfer_error(c.u_rbrb_mhz, om).unwrap().to_bits()
        );
        let (p_rb, p_cs) = spontaneous_emission(om, om, 58.0, 63.0).unwrap();
        assert_eq!(b.p_se_rb.to_bits(), p_rb.to_bits());
        assert_eq!(b.p_se_cs.to_bits(), p_cs.to_bits());
    }

    #[test]
    fn neighbour_count_rules() {
        let mut cfg = ProtocolConfig {
            neighbors: 3,
            ..ProtocolConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Unsupported(_))));
        cfg.transfer_coefficient = Some(0.5);
        assert!(cfg.validate().is_ok());
        cfg.neighbors = 0;
        cfg.transfer_coefficient = None;
        assert_eq!(cfg.transfer_coefficient().unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(LatticeGeometry::with_period(-1.0).is_err());
        assert!(LatticeGeometry::with_period(0.0).is_err());
    }
}
