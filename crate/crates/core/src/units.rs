//! Physical constants and the unit conventions used across the crate.
//!
//! Energies are quoted as frequencies E/h: level energies in GHz, energy
//! defects and pair potentials in MHz. Lengths are in micrometres, `C3` in
//! GHz·µm³ and van der Waals coefficients in GHz·µm⁶. Radial matrix elements
//! are in Bohr radii. Rabi frequencies are given as Ω/2π in MHz.

/// Infinite-mass Rydberg constant in cm⁻¹ (CODATA 2018).
pub const RYDBERG_INFINITY_CM: f64 = 109_737.315_681_60;

/// Speed of light expressed as GHz per cm⁻¹.
pub const GHZ_PER_WAVENUMBER: f64 = 29.979_245_8;

/// Electron mass in unified atomic mass units.
pub const ELECTRON_MASS_U: f64 = 5.485_799_090_65e-4;

/// Hartree energy divided by h, in GHz.
pub const HARTREE_GHZ: f64 = 6.579_683_920_502e6;

/// Bohr radius in micrometres.
pub const BOHR_UM: f64 = 5.291_772_109_03e-5;

pub const MHZ_PER_GHZ: f64 = 1.0e3;

/// One atomic unit of `C3` (E_h·a₀³) in GHz·µm³.
pub fn c3_atomic_unit_in_ghz_um3() -> f64 {
    HARTREE_GHZ * BOHR_UM.powi(3)
}

pub fn c3_from_atomic(c3_au: f64) -> f64 {
    c3_au * c3_atomic_unit_in_ghz_um3()
}

pub fn c3_to_atomic(c3_ghz_um3: f64) -> f64 {
    c3_ghz_um3 / c3_atomic_unit_in_ghz_um3()
}

/// Resonant coupling scale `C3/R³` in MHz.
pub fn dipole_scale_mhz(c3_ghz_um3: f64, r_um: f64) -> f64 {
    c3_ghz_um3 / r_um.powi(3) * MHZ_PER_GHZ
}

/// Converts Ω/2π in MHz to an angular frequency in rad/µs.
pub fn angular_rad_per_us(freq_mhz: f64) -> f64 {
    std::f64::consts::TAU * freq_mhz
}
