//! Orientation dependence of the interaction for pairs of `ns_{1/2}` atoms.
//!
//! The pair axis makes a polar angle θ with the quantization axis. The
//! initial state is rotated into the molecular frame with `d^{1/2}(θ)` on
//! each atom; the azimuth drops out for these states.

use std::fmt::Write as _;

use nalgebra::{DVector, Matrix2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::angular::wigner_d_half;
use crate::channel::{pair_potential, Channel, Coupling, PairLabel, ZeemanPairState};
use crate::error::{invalid, Error, Result};
use crate::exec::Execution;
use crate::halfint::HalfInt;
use crate::units::MHZ_PER_GHZ;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpinConfiguration {
    /// `m_a = m_b = 1/2`.
    Parallel,
    /// `m_a = 1/2, m_b = −1/2`.
    Antiparallel,
}

impl SpinConfiguration {
    pub fn state(self) -> ZeemanPairState {
        let (h, mh) = (HalfInt::HALF, -HalfInt::HALF);
        let m_b = match self {
            SpinConfiguration::Parallel => h,
            SpinConfiguration::Antiparallel => mh,
        };
        ZeemanPairState::product(h, h, h, m_b).expect("valid s-state projections")
    }
}

impl std::str::FromStr for SpinConfiguration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "parallel" | "par" | "up-up" => Ok(SpinConfiguration::Parallel),
            "antiparallel" | "anti" | "up-down" => Ok(SpinConfiguration::Antiparallel),
            other => Err(invalid(format!("unknown spin configuration {other:?}"))),
        }
    }
}

fn require_s_pair(j_a: HalfInt, j_b: HalfInt) -> Result<()> {
    if j_a != HalfInt::HALF || j_b != HalfInt::HALF {
        return Err(Error::Unsupported(format!(
            "angular profiles need j_a = j_b = 1/2 initial states, got {j_a} and {j_b}"
        )));
    }
    Ok(())
}

fn require_s_channel(c: &Channel) -> Result<()> {
    if c.a.l != 0 || c.b.l != 0 {
        return Err(Error::Unsupported(format!(
            "angular profiles need ns initial states, got {}",
            c.label()
        )));
    }
    Ok(())
}

/// `d^{1/2}(θ) ⊗ d^{1/2}(θ) |ψ>`.
pub fn rotate(psi: &ZeemanPairState, theta: f64) -> Result<ZeemanPairState> {
    require_s_pair(psi.j_a(), psi.j_b())?;
    let d: Matrix2<f64> = wigner_d_half(theta);
    let amps = psi.amplitudes();
    let mut out = vec![Complex64::new(0.0, 0.0); 4];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[2 * i + j] += d[(i, k)] * d[(j, l)] * amps[2 * k + l];
                }
            }
        }
    }
    ZeemanPairState::normalized(HalfInt::HALF, HalfInt::HALF, out)
}

/// `c_ℓ(θ) = <u_ℓ| d⊗d |ψ>` over the singlet and triplet states.
pub fn rotation_coefficients(
    psi: &ZeemanPairState,
    theta: f64,
) -> Result<Vec<(PairLabel, Complex64)>> {
    let rotated = rotate(psi, theta)?;
    Ok(PairLabel::ALL
        .into_iter()
        .map(|label| (label, rotated.overlap_real(&label.vector())))
        .collect())
}

/// `D_ℓ` of the four pair states for a coupling, including doubling.
pub fn label_factors(coupling: &Coupling) -> Result<[f64; 4]> {
    require_s_pair(coupling.j_a, coupling.j_b)?;
    let (_, g) = crate::channel::gram_matrix(coupling, None)?;
    Ok(PairLabel::ALL.map(|label| {
        let u: DVector<f64> = label.vector();
        u.dot(&(&g * &u))
    }))
}

/// `f(θ) = Σ_ℓ |c_ℓ(θ)|² D_ℓ`.
pub fn f_factor(psi: &ZeemanPairState, theta: f64, coupling: &Coupling) -> Result<f64> {
    let d = label_factors(coupling)?;
    let c = rotation_coefficients(psi, theta)?;
    Ok(c.iter().zip(d).map(|((_, c), d)| c.norm_sqr() * d).sum())
}

/// `U(θ)·R⁶ = −Σ_k f_k(θ)·C3_k²/δ_k` in GHz·µm⁶.
pub fn vdw_angular_coefficient(
    psi: &ZeemanPairState,
    theta: f64,
    channels: &[Channel],
) -> Result<f64> {
    let mut total = 0.0;
    for c in channels {
        require_s_channel(c)?;
        let f = f_factor(psi, theta, &c.coupling())?;
        total += c.vdw_coefficient(f)?;
    }
    Ok(total)
}

/// Anisotropic van der Waals potential in MHz.
pub fn vdw_angular(
    psi: &ZeemanPairState,
    theta: f64,
    channels: &[Channel],
    r_um: f64,
) -> Result<f64> {
    if r_um <= 0.0 {
        return Err(invalid(format!(
            "separation R = {r_um} µm must be positive"
        )));
    }
    Ok(vdw_angular_coefficient(psi, theta, channels)? / r_um.powi(6) * MHZ_PER_GHZ)
}

/// Single-channel potential with `D` replaced by `f(θ)`, in MHz.
pub fn resonant_angular_potential(
    channel: &Channel,
    psi: &ZeemanPairState,
    theta: f64,
    r_um: f64,
) -> Result<f64> {
    require_s_channel(channel)?;
    if r_um <= 0.0 {
        return Err(invalid(format!(
            "separation R = {r_um} µm must be positive"
        )));
    }
    let f = f_factor(psi, theta, &channel.coupling())?;
    Ok(pair_potential(channel.delta_mhz, channel.c3, f, r_um))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AngularSample {
    pub theta: f64,
    /// One entry per channel.
    pub f: Vec<f64>,
    /// van der Waals energy in GHz.
    pub u_ghz: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AngularProfile {
    pub r_um: f64,
    pub channels: Vec<Channel>,
    pub samples: Vec<AngularSample>,
}

/// `n` equally spaced angles on `[0, π]`.
pub fn theta_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n)
            .map(|i| std::f64::consts::PI * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

pub fn angular_profile(
    psi: &ZeemanPairState,
    channels: &[Channel],
    r_um: f64,
    thetas: &[f64],
    exec: Execution,
) -> Result<AngularProfile> {
    let samples = exec.try_map(thetas, |&theta| {
        let f = channels
            .iter()
            .map(|c| f_factor(psi, theta, &c.coupling()))
            .collect::<Result<Vec<_>>>()?;
        let u = vdw_angular(psi, theta, channels, r_um)? / MHZ_PER_GHZ;
        Ok::<_, Error>(AngularSample { theta, f, u_ghz: u })
    })?;
    Ok(AngularProfile {
        r_um,
        channels: channels.to_vec(),
        samples,
    })
}

impl AngularProfile {
    /// CSV with columns `theta_deg, f_1.., U_GHz`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta_deg");
        for k in 1..=self.channels.len() {
            let _ = write!(out, ",f_{k}");
        }
        out.push_str(",U_GHz\n");
        for s in &self.samples {
            let _ = write!(out, "{}", s.theta.to_degrees());
            for f in &s.f {
                let _ = write!(out, ",{f}");
            }
            let _ = writeln!(out, ",{}", s.u_ghz);
        }
        out
    }
}
