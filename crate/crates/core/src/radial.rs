//! Radial dipole matrix elements between Rydberg states.
//!
//! The fast path is the quasiclassical (Kaulakys) expression in terms of the
//! two effective quantum numbers. A Numerov integration of the Coulomb radial
//! equation at the quantum-defect energy serves as an independent oracle.
//! Wavefunctions are real and positive at large `r`, and the quasiclassical
//! sign follows the same convention.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::angular::{six_j, three_j};
use crate::atomic::{AtomicData, FineLevel};
use crate::error::{invalid, Error, Result};
use crate::halfint::HalfInt;
use crate::units::c3_from_atomic;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadialMethod {
    #[default]
    Quasiclassical,
    NumericOracle,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialElement {
    pub bra: FineLevel,
    pub ket: FineLevel,
    /// Bohr radii.
    pub value: f64,
    pub method: RadialMethod,
}

/// Settings of the Numerov oracle on the grid `t = ln r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumerovConfig {
    /// Inner cutoff as a fraction of `n*²` (smaller of the two states).
    pub cutoff_fraction: f64,
    /// Lower bound on the inner cutoff in a₀.
    pub cutoff_min: f64,
    pub step: f64,
    /// Outer start radius is `2ν(ν + outer_extension)`.
    pub outer_extension: f64,
    /// Allowed relative norm change when the cutoff is doubled.
    pub norm_tolerance: f64,
}

impl Default for NumerovConfig {
    fn default() -> Self {
        NumerovConfig {
            cutoff_fraction: 0.05,
            cutoff_min: 1.0,
            step: 5e-4,
            outer_extension: 15.0,
            norm_tolerance: 0.01,
        }
    }
}

impl NumerovConfig {
    pub fn cutoff(&self, nu_a: f64, nu_b: f64) -> f64 {
        (self.cutoff_fraction * nu_a.min(nu_b).powi(2)).max(self.cutoff_min)
    }
}

/// Anger function `J_ν(z) = (1/π)∫₀^π cos(νθ − z sin θ) dθ`.
pub fn anger(nu: f64, z: f64) -> f64 {
    const INTERVALS: usize = 1024;
    let h = PI / INTERVALS as f64;
    let f = |theta: f64| (nu * theta - z * theta.sin()).cos();
    let mut sum = f(0.0) + f(PI);
    for i in 1..INTERVALS {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(i as f64 * h);
    }
    sum * h / 3.0 / PI
}

fn check_dipole_l(l_a: u32, l_b: u32) -> Result<()> {
    if l_a.abs_diff(l_b) != 1 {
        return Err(invalid(format!(
            "dipole selection rule requires |Δl| = 1, got l = {l_a} and {l_b}"
        )));
    }
    Ok(())
}

/// Quasiclassical radial element `<ν_b l_b | r | ν_a l_a>` in a₀.
pub fn radial_quasiclassical_nu(nu_a: f64, l_a: u32, nu_b: f64, l_b: u32) -> Result<f64> {
    check_dipole_l(l_a, l_b)?;
    let l_max = f64::from(l_a.max(l_b));
    let dl = f64::from(l_b) - f64::from(l_a);
    let s = nu_b - nu_a;
    let nc = 2.0 * nu_a * nu_b / (nu_a + nu_b);
    let ecc2 = 1.0 - (l_max / nc).powi(2);
    if ecc2 <= 0.0 {
        return Err(invalid(format!(
            "quasiclassical element undefined for n* = {nc:.3}, l = {l_max}"
        )));
    }
    let e = ecc2.sqrt();
    if s.abs() < 1e-7 {
        return Ok(1.5 * nc * nc * e);
    }
    let x = dl * l_max / nc;
    let bracket = (1.0 + x) * anger(s - 1.0, -e * s)
        - (1.0 - x) * anger(s + 1.0, -e * s)
        - 2.0 / PI * (PI * s).sin() * (1.0 - e);
    Ok(nc * nc / (2.0 * s) * bracket)
}

struct Grid {
    t_min: f64,
    step: f64,
    len: usize,
}

impl Grid {
    fn new(r_min: f64, r_max: f64, step: f64) -> Grid {
        let t_min = r_min.ln();
        let len = ((r_max.ln() - t_min) / step).ceil() as usize + 1;
        Grid { t_min, step, len }
    }

    fn r(&self, i: usize) -> f64 {
        (self.t_min + i as f64 * self.step).exp()
    }
}

/// Inward Numerov solution `y(t)` with `P(r) = e^{t/2} y`.
fn numerov_inward(nu: f64, l: u32, grid: &Grid) -> Vec<f64> {
    let n = grid.len;
    let h2 = grid.step * grid.step;
    let lh = f64::from(l) + 0.5;
    let g: Vec<f64> = (0..n)
        .map(|i| {
            let r = grid.r(i);
            lh * lh - 2.0 * r + r * r / (nu * nu)
        })
        .collect();
    let f: Vec<f64> = g.iter().map(|gi| 1.0 - h2 * gi / 12.0).collect();
    let mut y = vec![0.0; n];
    y[n - 1] = 1e-30;
    y[n - 2] = 1e-30 * (1.0 + grid.step * g[n - 1].max(0.0).sqrt());
    for i in (1..n - 1).rev() {
        y[i - 1] = ((12.0 - 10.0 * f[i]) * y[i] - f[i + 1] * y[i + 1]) / f[i - 1];
        if y[i - 1].abs() > 1e200 {
            for v in &mut y[i - 1..] {
                *v *= 1e-200;
            }
        }
    }
    y
}

fn trapezoid(step: f64, values: impl Iterator<Item = f64>) -> f64 {
    let mut total = 0.0;
    let mut first = None;
    let mut last = 0.0;
    for v in values {
        first.get_or_insert(v);
        total += v;
        last = v;
    }
    step * (total - 0.5 * (first.unwrap_or(0.0) + last))
}

struct NumerovPair {
    grid: Grid,
    y_a: Vec<f64>,
    y_b: Vec<f64>,
}

impl NumerovPair {
    fn solve(
        nu_a: f64,
        l_a: u32,
        nu_b: f64,
        l_b: u32,
        r_min: f64,
        cfg: &NumerovConfig,
    ) -> Result<Self> {
        if !(nu_a > 0.0 && nu_b > 0.0 && r_min > 0.0) {
            return Err(invalid(
                "effective quantum numbers and cutoff must be positive",
            ));
        }
        let nu_max = nu_a.max(nu_b);
        let r_max = 2.0 * nu_max * (nu_max + cfg.outer_extension);
        let grid = Grid::new(r_min, r_max, cfg.step);
        let y_a = numerov_inward(nu_a, l_a, &grid);
        let y_b = numerov_inward(nu_b, l_b, &grid);
        Ok(NumerovPair { grid, y_a, y_b })
    }

    fn moment(&self, ya: &[f64], yb: &[f64], power: i32, from: usize) -> f64 {
        trapezoid(
            self.grid.step,
            (from..self.grid.len).map(|i| self.grid.r(i).powi(power) * ya[i] * yb[i]),
        )
    }

    fn index_of(&self, r: f64) -> usize {
        (((r.ln() - self.grid.t_min) / self.grid.step).round() as usize).min(self.grid.len - 1)
    }

    fn check_norm(&self, y: &[f64], r_min: f64, tol: f64, label: &str) -> Result<f64> {
        let full = self.moment(y, y, 2, 0);
        let trimmed = self.moment(y, y, 2, self.index_of(2.0 * r_min));
        let change = (full - trimmed).abs() / full;
        if !full.is_finite() || full <= 0.0 || change > tol {
            return Err(Error::NumericFailure(format!(
                "Numerov norm of {label} not converged: relative change {change:.3e} when the \
                 cutoff {r_min:.3} a0 is doubled (tolerance {tol:.1e})"
            )));
        }
        Ok(full)
    }
}

/// Numerov-oracle radial element in a₀ with an explicit inner cutoff.
pub fn radial_numerov_with_cutoff(
    nu_a: f64,
    l_a: u32,
    nu_b: f64,
    l_b: u32,
    r_min: f64,
    cfg: &NumerovConfig,
) -> Result<f64> {
    let pair = NumerovPair::solve(nu_a, l_a, nu_b, l_b, r_min, cfg)?;
    let na = pair.check_norm(&pair.y_a, r_min, cfg.norm_tolerance, "bra")?;
    let nb = pair.check_norm(&pair.y_b, r_min, cfg.norm_tolerance, "ket")?;
    let value = pair.moment(&pair.y_a, &pair.y_b, 3, 0) / (na * nb).sqrt();
    if !value.is_finite() {
        return Err(Error::NumericFailure(format!(
            "Numerov dipole integral is not finite for n* = {nu_a:.4}, {nu_b:.4}"
        )));
    }
    Ok(value)
}

/// Numerov-oracle radial element in a₀ with the configured cutoff.
pub fn radial_numerov_nu(
    nu_a: f64,
    l_a: u32,
    nu_b: f64,
    l_b: u32,
    cfg: &NumerovConfig,
) -> Result<f64> {
    check_dipole_l(l_a, l_b)?;
    radial_numerov_with_cutoff(nu_a, l_a, nu_b, l_b, cfg.cutoff(nu_a, nu_b), cfg)
}

/// Overlap `<P_a|P_b>` of two normalized Numerov solutions.
pub fn numerov_overlap(
    nu_a: f64,
    l_a: u32,
    nu_b: f64,
    l_b: u32,
    cfg: &NumerovConfig,
) -> Result<f64> {
    let r_min = cfg.cutoff(nu_a, nu_b);
    let pair = NumerovPair::solve(nu_a, l_a, nu_b, l_b, r_min, cfg)?;
    let na = pair.check_norm(&pair.y_a, r_min, cfg.norm_tolerance, "bra")?;
    let nb = pair.check_norm(&pair.y_b, r_min, cfg.norm_tolerance, "ket")?;
    Ok(pair.moment(&pair.y_a, &pair.y_b, 2, 0) / (na * nb).sqrt())
}

/// `<l_b‖r‖l_a>` divided by the radial integral.
pub fn orbital_reduced_factor(l_a: u32, l_b: u32) -> Result<f64> {
    check_dipole_l(l_a, l_b)?;
    let (la, lb) = (HalfInt::integer(l_a as i32), HalfInt::integer(l_b as i32));
    let z = HalfInt::ZERO;
    let sign = if l_b.is_multiple_of(2) { 1.0 } else { -1.0 };
    let w = three_j(lb, z, HalfInt::ONE, z, la, z)?;
    Ok(sign * f64::from((2 * l_a + 1) * (2 * l_b + 1)).sqrt() * w)
}

/// `<l_b j_b‖r‖l_a j_a>` divided by the radial integral.
pub fn fine_structure_factor(l_a: u32, j_a: HalfInt, l_b: u32, j_b: HalfInt) -> Result<f64> {
    let spin = HalfInt::HALF;
    let (la, lb) = (HalfInt::integer(l_a as i32), HalfInt::integer(l_b as i32));
    let phase = (lb + spin + j_a + HalfInt::ONE).twice() / 2;
    let sign = if phase.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let w = six_j(lb, j_b, spin, j_a, la, HalfInt::ONE)?;
    let mult = f64::from(j_a.multiplicity() * j_b.multiplicity()).sqrt();
    Ok(sign * mult * w * orbital_reduced_factor(l_a, l_b)?)
}

type CacheKey = (FineLevel, FineLevel, RadialMethod);

/// Radial and reduced matrix elements for one atomic data set, memoized.
#[derive(Debug)]
pub struct RadialMatrix {
    data: Arc<AtomicData>,
    method: RadialMethod,
    numerov: NumerovConfig,
    cache: RwLock<HashMap<CacheKey, f64>>,
}

impl Clone for RadialMatrix {
    fn clone(&self) -> Self {
        RadialMatrix {
            data: Arc::clone(&self.data),
            method: self.method,
            numerov: self.numerov,
            cache: RwLock::new(self.cache.read().expect("radial cache poisoned").clone()),
        }
    }
}

impl RadialMatrix {
    pub fn new(data: Arc<AtomicData>) -> Self {
        RadialMatrix {
            data,
            method: RadialMethod::default(),
            numerov: NumerovConfig::default(),
            cache: RwLock::new(HashMap::new()),
        }
    }

    pub fn with_method(mut self, method: RadialMethod) -> Self {
        self.method = method;
        self
    }

    pub fn with_numerov(mut self, cfg: NumerovConfig) -> Self {
        self.numerov = cfg;
        self.cache.get_mut().expect("radial cache poisoned").clear();
        self
    }

    pub fn data(&self) -> &AtomicData {
        &self.data
    }

    pub fn data_arc(&self) -> Arc<AtomicData> {
        Arc::clone(&self.data)
    }

    pub fn method(&self) -> RadialMethod {
        self.method
    }

    pub fn cached_len(&self) -> usize {
        self.cache.read().expect("radial cache poisoned").len()
    }

    /// Merges entries computed elsewhere, e.g. by a worker-private cache.
    pub fn merge_cache(&self, other: &RadialMatrix) {
        if !Arc::ptr_eq(&self.data, &other.data) {
            return;
        }
        let theirs = other.cache.read().expect("radial cache poisoned").clone();
        self.cache
            .write()
            .expect("radial cache poisoned")
            .extend(theirs);
    }

    fn compute(&self, a: &FineLevel, b: &FineLevel, method: RadialMethod) -> Result<f64> {
        check_dipole_l(a.l, b.l)?;
        let nu_a = self.data.effective_n(a)?;
        let nu_b = self.data.effective_n(b)?;
        match method {
            RadialMethod::Quasiclassical => {
                if nu_a < 10.0 || nu_b < 10.0 {
                    return Err(invalid(format!(
                        "quasiclassical element needs n* >= 10, got {a} ({nu_a:.3}) and {b} ({nu_b:.3})"
                    )));
                }
                radial_quasiclassical_nu(nu_a, a.l, nu_b, b.l)
            }
            RadialMethod::NumericOracle => radial_numerov_nu(nu_a, a.l, nu_b, b.l, &self.numerov),
        }
    }

    pub fn radial_with(
        &self,
        a: &FineLevel,
        b: &FineLevel,
        method: RadialMethod,
    ) -> Result<RadialElement> {
        let key = if a <= b {
            (*a, *b, method)
        } else {
            (*b, *a, method)
        };
        let cached = self
            .cache
            .read()
            .expect("radial cache poisoned")
            .get(&key)
            .copied();
        let value = match cached {
            Some(v) => v,
            None => {
                let v = self.compute(&key.0, &key.1, method)?;
                self.cache
                    .write()
                    .expect("radial cache poisoned")
                    .insert(key, v);
                v
            }
        };
        Ok(RadialElement {
            bra: *b,
            ket: *a,
            value,
            method,
        })
    }

    /// Radial element with the configured method.
    pub fn radial(&self, a: &FineLevel, b: &FineLevel) -> Result<RadialElement> {
        self.radial_with(a, b, self.method)
    }

    pub fn radial_quasiclassical(&self, a: &FineLevel, b: &FineLevel) -> Result<f64> {
        Ok(self.radial_with(a, b, RadialMethod::Quasiclassical)?.value)
    }

    pub fn radial_numeric_oracle(&self, a: &FineLevel, b: &FineLevel) -> Result<f64> {
        Ok(self.radial_with(a, b, RadialMethod::NumericOracle)?.value)
    }

    /// `<γ_b‖r‖γ_a>` in e·a₀.
    pub fn reduced_matrix_element_fs(&self, a: &FineLevel, b: &FineLevel) -> Result<f64> {
        let r = self.radial(a, b)?.value;
        Ok(fine_structure_factor(a.l, a.j, b.l, b.j)? * r)
    }

    /// `C3` in GHz·µm³ for `a b → α β`.
    pub fn c3_coefficient(
        &self,
        a: &FineLevel,
        b: &FineLevel,
        alpha: &FineLevel,
        beta: &FineLevel,
    ) -> Result<f64> {
        let da = self.reduced_matrix_element_fs(a, alpha)?;
        let db = self.reduced_matrix_element_fs(b, beta)?;
        let norm = f64::from(alpha.j.multiplicity() * beta.j.multiplicity()).sqrt();
        Ok(c3_from_atomic(da * db / norm))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atomic::Species;

    fn matrix() -> RadialMatrix {
        RadialMatrix::new(Arc::new(AtomicData::bundled()))
    }

    #[test]
    fn anger_reduces_to_bessel_at_integer_order() {
        // J_0(1) and J_1(2)
        assert!((anger(0.0, 1.0) - 0.765_197_686_557_966_6).abs() < 1e-12);
        assert!((anger(1.0, 2.0) - 0.576_724_807_756_873_4).abs() < 1e-12);
    }

    #[test]
    fn hydrogen_oracle() {
        let cfg = NumerovConfig {
            cutoff_fraction: 0.0,
            cutoff_min: 1e-4,
            ..NumerovConfig::default()
        };
        let v = radial_numerov_nu(1.0, 0, 2.0, 1, &cfg).unwrap();
        let exact = 128.0 * 6f64.sqrt() / 243.0;
        assert!((v.abs() - exact).abs() < 1e-3, "{v}");
    }

    #[test]
    fn same_state_overlap_is_one() {
        let cfg = NumerovConfig::default();
        let o = numerov_overlap(44.87, 0, 44.87, 0, &cfg).unwrap();
        assert!((o - 1.0).abs() < 1e-6);
    }

    #[test]
    fn quasiclassical_matches_oracle() {
        let m = matrix();
        let a = FineLevel::s(Species::Rb87, 48).unwrap();
        let b = FineLevel::p32(Species::Rb87, 48).unwrap();
        let q = m.radial_quasiclassical(&a, &b).unwrap();
        let n = m.radial_numeric_oracle(&a, &b).unwrap();
        assert!(((q - n) / n).abs() < 0.02, "{q} vs {n}");
    }

    #[test]
    fn quasiclassical_is_symmetric() {
        let x = radial_quasiclassical_nu(44.87, 0, 45.36, 1).unwrap();
        let y = radial_quasiclassical_nu(45.36, 1, 44.87, 0).unwrap();
        assert!((x - y).abs() < 1e-9 * x.abs());
        let z = radial_quasiclassical_nu(44.87, 0, 44.87 + 1e-9, 1).unwrap();
        let w = radial_quasiclassical_nu(44.87, 0, 44.87 + 1e-4, 1).unwrap();
        assert!((z - w).abs() < 1e-3 * w.abs());
    }

    #[test]
    fn selection_rule() {
        assert!(radial_quasiclassical_nu(40.0, 1, 41.0, 1).is_err());
        let m = matrix();
        let a = FineLevel::s(Species::Rb87, 48).unwrap();
        let b = FineLevel::s(Species::Rb87, 49).unwrap();
        assert!(m.reduced_matrix_element_fs(&a, &b).is_err());
    }

    #[test]
    fn fine_structure_sum_rule() {
        for (la, lb) in [(0u32, 1u32), (1, 0), (1, 2), (2, 1), (2, 3)] {
            let orbital = orbital_reduced_factor(la, lb).unwrap().powi(2) / f64::from(2 * la + 1);
            for ja in [2 * la as i32 - 1, 2 * la as i32 + 1]
                .into_iter()
                .filter(|&t| t > 0)
            {
                let ja = HalfInt::from_twice(ja);
                let total: f64 = [2 * lb as i32 - 1, 2 * lb as i32 + 1]
                    .into_iter()
                    .filter(|&t| t > 0)
                    .map(|jb| {
                        fine_structure_factor(la, ja, lb, HalfInt::from_twice(jb))
                            .unwrap()
                            .powi(2)
                    })
                    .sum::<f64>()
                    / f64::from(ja.multiplicity());
                assert!((total - orbital).abs() < 1e-12 * orbital);
            }
        }
    }

    #[test]
    fn s_to_p_factors() {
        let h = HalfInt::HALF;
        let p12 = fine_structure_factor(0, h, 1, h).unwrap();
        let p32 = fine_structure_factor(0, h, 1, HalfInt::THREE_HALVES).unwrap();
        assert!((p12.abs() - (2.0f64 / 3.0).sqrt()).abs() < 1e-14);
        assert!((p32.abs() - (4.0f64 / 3.0).sqrt()).abs() < 1e-14);
        assert!((p32.powi(2) / p12.powi(2) - 2.0).abs() < 1e-13);
    }

    #[test]
    fn table_c3_value() {
        let m = matrix();
        let rb = Species::Rb87;
        let cs = Species::Cs133;
        let c3 = m
            .c3_coefficient(
                &FineLevel::s(rb, 48).unwrap(),
                &FineLevel::s(cs, 51).unwrap(),
                &FineLevel::p32(rb, 48).unwrap(),
                &FineLevel::p12(cs, 50).unwrap(),
            )
            .unwrap();
        assert!((c3.abs() - 1.69).abs() / 1.69 < 0.03, "{c3}");
    }

    #[test]
    fn cache_is_symmetric() {
        let m = matrix();
        let a = FineLevel::s(Species::Cs133, 60).unwrap();
        let b = FineLevel::p12(Species::Cs133, 59).unwrap();
        let x = m.radial_quasiclassical(&a, &b).unwrap();
        let y = m.radial_quasiclassical(&b, &a).unwrap();
        assert_eq!(x, y);
        assert_eq!(m.cached_len(), 1);
    }
}
