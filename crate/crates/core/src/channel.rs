//! Single- and multi-channel Förster eigensystems.
//!
//! A channel couples the initial pair `(a b)` to the target pair `(α β)`.
//! Within a sector of fixed total projection `m` the interaction matrix has
//! a zero block on the initial states, `δ` on the diagonal of the target
//! states, and dipole-dipole elements between the two. All energies here are
//! frequencies in MHz (`δ/2π`, `U/h`), distances in µm, `C3` in GHz·µm³.

use std::fmt;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::angular::exact::{PrimeFactorization, Surd, SurdSum};
use crate::angular::{clebsch_gordan, clebsch_gordan_exact};
use crate::atomic::FineLevel;
use crate::error::{invalid, Error, Result};
use crate::halfint::HalfInt;
use crate::radial::RadialMatrix;
use crate::units::{dipole_scale_mhz, MHZ_PER_GHZ};

/// Angular content of a channel: the four `j` values and the doubling flag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Coupling {
    pub j_a: HalfInt,
    pub j_b: HalfInt,
    pub j_alpha: HalfInt,
    pub j_beta: HalfInt,
    pub identical_initials: bool,
}

impl Coupling {
    pub fn new(j_a: HalfInt, j_b: HalfInt, j_alpha: HalfInt, j_beta: HalfInt) -> Result<Self> {
        for (from, to) in [(j_a, j_alpha), (j_b, j_beta)] {
            if from.twice() < 0 || to.twice() < 0 || (from - to).abs() > HalfInt::ONE {
                return Err(invalid(format!("j = {from} -> {to} is not dipole allowed")));
            }
            if (from.twice() + to.twice()) % 2 != 0
                || (from == HalfInt::ZERO && to == HalfInt::ZERO)
            {
                return Err(invalid(format!("j = {from} -> {to} is not dipole allowed")));
            }
        }
        Ok(Coupling {
            j_a,
            j_b,
            j_alpha,
            j_beta,
            identical_initials: false,
        })
    }

    /// The s→p coupling of channel 1–4.
    pub fn sp(channel: u8) -> Result<Self> {
        let (ja, jb) = sp_channel_js(channel)?;
        Self::new(HalfInt::HALF, HalfInt::HALF, ja, jb)
    }

    pub fn doubled(mut self, identical: bool) -> Self {
        self.identical_initials = identical;
        self
    }

    fn doubling(&self) -> f64 {
        if self.identical_initials {
            2.0
        } else {
            1.0
        }
    }

    /// Number of initial states with total projection `m`.
    pub fn initial_count(&self, m: HalfInt) -> usize {
        product_basis(self.j_a, self.j_b, Some(m)).len()
    }

    pub fn target_count(&self, m: HalfInt) -> usize {
        product_basis(self.j_alpha, self.j_beta, Some(m)).len()
    }

    /// Channel number 1–4 for s→p couplings of s initial states.
    pub fn sp_index(&self) -> Option<u8> {
        if self.j_a != HalfInt::HALF || self.j_b != HalfInt::HALF {
            return None;
        }
        (1..=4).find(|&k| sp_channel_js(k).ok() == Some((self.j_alpha, self.j_beta)))
    }
}

fn sp_channel_js(channel: u8) -> Result<(HalfInt, HalfInt)> {
    let (h, t) = (HalfInt::HALF, HalfInt::THREE_HALVES);
    match channel {
        1 => Ok((h, h)),
        2 => Ok((h, t)),
        3 => Ok((t, h)),
        4 => Ok((t, t)),
        _ => Err(invalid(format!("channel index {channel} is not in 1..=4"))),
    }
}

/// Product states `|m_1, m_2>`, optionally restricted to `m_1 + m_2 = m`,
/// ordered with `m_1` then `m_2` descending.
pub fn product_basis(j1: HalfInt, j2: HalfInt, m: Option<HalfInt>) -> Vec<(HalfInt, HalfInt)> {
    j1.projections()
        .flat_map(|m1| j2.projections().map(move |m2| (m1, m2)))
        .filter(|&(m1, m2)| m.is_none_or(|m| m1 + m2 == m))
        .collect()
}

/// `Σ_q C^{20}_{1q,1−q} C^{jα mα}_{ja ma 1q} C^{jβ mβ}_{jb mb 1−q}`.
pub fn angular_amplitude(
    c: &Coupling,
    (m_a, m_b): (HalfInt, HalfInt),
    (m_alpha, m_beta): (HalfInt, HalfInt),
) -> Result<f64> {
    if m_a + m_b != m_alpha + m_beta {
        return Ok(0.0);
    }
    let q = m_alpha - m_a;
    if q.abs() > HalfInt::ONE || !q.is_integer() {
        return Ok(0.0);
    }
    let one = HalfInt::ONE;
    let two = HalfInt::integer(2);
    Ok(clebsch_gordan(one, q, one, -q, two, HalfInt::ZERO)?
        * clebsch_gordan(c.j_a, m_a, one, q, c.j_alpha, m_alpha)?
        * clebsch_gordan(c.j_b, m_b, one, -q, c.j_beta, m_beta)?)
}

fn angular_amplitude_exact(
    c: &Coupling,
    (m_a, m_b): (HalfInt, HalfInt),
    (m_alpha, m_beta): (HalfInt, HalfInt),
) -> Result<Surd> {
    let q = m_alpha - m_a;
    if m_a + m_b != m_alpha + m_beta || q.abs() > HalfInt::ONE || !q.is_integer() {
        return Ok(Surd::zero());
    }
    let one = HalfInt::ONE;
    let first = clebsch_gordan_exact(one, q, one, -q, HalfInt::integer(2), HalfInt::ZERO)?;
    let second = clebsch_gordan_exact(c.j_a, m_a, one, q, c.j_alpha, m_alpha)?;
    let third = clebsch_gordan_exact(c.j_b, m_b, one, -q, c.j_beta, m_beta)?;
    Ok(&(&first * &second) * &third)
}

/// Dipole-dipole matrix element in MHz.
pub fn dipole_dipole_element(
    m_initial: (HalfInt, HalfInt),
    m_target: (HalfInt, HalfInt),
    coupling: &Coupling,
    c3: f64,
    r_um: f64,
) -> Result<f64> {
    if r_um <= 0.0 || !r_um.is_finite() {
        return Err(invalid(format!(
            "separation R = {r_um} µm must be positive"
        )));
    }
    let a = angular_amplitude(coupling, m_initial, m_target)?;
    Ok(-(6f64.sqrt()) * dipole_scale_mhz(c3, r_um) * a)
}

/// `(m_a, m_b)` projections spanning a sector.
pub type ProductBasis = Vec<(HalfInt, HalfInt)>;

/// Angular amplitude matrix `A` (initial rows, target columns) for sector `m`.
fn amplitude_matrix(c: &Coupling, m: Option<HalfInt>) -> Result<(ProductBasis, DMatrix<f64>)> {
    let initial = product_basis(c.j_a, c.j_b, m);
    let target = product_basis(c.j_alpha, c.j_beta, m);
    let mut a = DMatrix::zeros(initial.len(), target.len());
    for (i, &mi) in initial.iter().enumerate() {
        for (t, &mt) in target.iter().enumerate() {
            a[(i, t)] = angular_amplitude(c, mi, mt)?;
        }
    }
    Ok((initial, a))
}

/// Angular Gram matrix `6·A·Aᵀ` (doubled for identical initials). Its
/// eigenvalues are the `D` factors of the sector.
pub fn gram_matrix(c: &Coupling, m: Option<HalfInt>) -> Result<(ProductBasis, DMatrix<f64>)> {
    let (basis, a) = amplitude_matrix(c, m)?;
    let g = &a * a.transpose() * (6.0 * c.doubling());
    Ok((basis, g))
}

/// One Förster eigenvector of the initial manifold with its `D` factor.
#[derive(Clone, Debug, PartialEq)]
pub struct AngularEigenvector {
    pub d: f64,
    pub basis: Vec<(HalfInt, HalfInt)>,
    pub vector: DVector<f64>,
}

fn symmetric_eigen(matrix: DMatrix<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    let dim = matrix.nrows();
    let norm = matrix.norm();
    SymmetricEigen::try_new(matrix, 1e-15, 10_000).ok_or_else(|| {
        Error::NumericFailure(format!(
            "symmetric eigensolver did not converge (dimension {dim}, Frobenius norm {norm:.3e})"
        ))
    })
}

/// `D` factors and eigenvectors of sector `m`, in ascending order of `D`.
pub fn angular_factors(c: &Coupling, m: HalfInt) -> Result<Vec<AngularEigenvector>> {
    let (basis, g) = gram_matrix(c, Some(m))?;
    if basis.is_empty() {
        return Err(invalid(format!("no initial states with m = {m}")));
    }
    let eig = symmetric_eigen(g)?;
    let mut out: Vec<AngularEigenvector> = (0..basis.len())
        .map(|k| AngularEigenvector {
            d: eig.eigenvalues[k].max(0.0),
            basis: basis.clone(),
            vector: canonical_sign(eig.eigenvectors.column(k).into_owned()),
        })
        .collect();
    out.sort_by(|x, y| x.d.total_cmp(&y.d));
    Ok(out)
}

fn canonical_sign(v: DVector<f64>) -> DVector<f64> {
    let lead = v.iter().copied().find(|x| x.abs() > 1e-9).unwrap_or(1.0);
    if lead < 0.0 {
        -v
    } else {
        v
    }
}

/// Closed-form `D(m_a, m_b)` of a product initial state.
pub fn angular_factor_product(c: &Coupling, m_a: HalfInt, m_b: HalfInt) -> Result<f64> {
    let target = product_basis(c.j_alpha, c.j_beta, Some(m_a + m_b));
    let mut sum = 0.0;
    for mt in target {
        sum += angular_amplitude(c, (m_a, m_b), mt)?.powi(2);
    }
    Ok(6.0 * c.doubling() * sum)
}

/// Amplitudes over `|m_a, m_b>` of a two-atom Rydberg state.
#[derive(Clone, Debug, PartialEq)]
pub struct ZeemanPairState {
    j_a: HalfInt,
    j_b: HalfInt,
    amplitudes: DVector<Complex64>,
}

impl ZeemanPairState {
    pub fn new(j_a: HalfInt, j_b: HalfInt, amplitudes: Vec<Complex64>) -> Result<Self> {
        let dim = (j_a.multiplicity() * j_b.multiplicity()) as usize;
        if amplitudes.len() != dim {
            return Err(invalid(format!(
                "expected {dim} amplitudes for j = {j_a}, {j_b}, got {}",
                amplitudes.len()
            )));
        }
        let amplitudes = DVector::from_vec(amplitudes);
        let norm = amplitudes.norm_squared();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("pair state norm is {norm}, expected 1")));
        }
        Ok(ZeemanPairState {
            j_a,
            j_b,
            amplitudes,
        })
    }

    /// Normalizes the given amplitudes.
    pub fn normalized(j_a: HalfInt, j_b: HalfInt, amplitudes: Vec<Complex64>) -> Result<Self> {
        let norm = amplitudes
            .iter()
            .map(Complex64::norm_sqr)
            .sum::<f64>()
            .sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(invalid("pair state has zero norm"));
        }
        Self::new(j_a, j_b, amplitudes.into_iter().map(|c| c / norm).collect())
    }

    pub fn product(j_a: HalfInt, m_a: HalfInt, j_b: HalfInt, m_b: HalfInt) -> Result<Self> {
        let basis = product_basis(j_a, j_b, None);
        let idx = basis.iter().position(|&x| x == (m_a, m_b)).ok_or_else(|| {
            invalid(format!(
                "|{m_a}, {m_b}> is not in the j = {j_a}, {j_b} basis"
            ))
        })?;
        let mut amps = vec![Complex64::zero(); basis.len()];
        amps[idx] = Complex64::one();
        Self::new(j_a, j_b, amps)
    }

    pub fn j_a(&self) -> HalfInt {
        self.j_a
    }

    pub fn j_b(&self) -> HalfInt {
        self.j_b
    }

    pub fn basis(&self) -> Vec<(HalfInt, HalfInt)> {
        product_basis(self.j_a, self.j_b, None)
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, m_a: HalfInt, m_b: HalfInt) -> Complex64 {
        self.basis()
            .iter()
            .position(|&x| x == (m_a, m_b))
            .map_or(Complex64::zero(), |i| self.amplitudes[i])
    }

    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    /// `<ψ|G|ψ>` for a real symmetric operator on the full product basis.
    pub fn expectation(&self, g: &DMatrix<f64>) -> f64 {
        let gc = g.map(Complex64::from);
        self.amplitudes.dotc(&(gc * &self.amplitudes)).re
    }

    /// `<u|ψ>` for a real vector on the full product basis.
    pub fn overlap_real(&self, u: &DVector<f64>) -> Complex64 {
        u.iter()
            .zip(self.amplitudes.iter())
            .map(|(a, b)| b * *a)
            .sum()
    }
}

/// Named two-atom spin states of a pair of `j = 1/2` atoms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PairLabel {
    #[serde(rename = "s")]
    Singlet,
    #[serde(rename = "t0")]
    TripletZero,
    #[serde(rename = "t+")]
    TripletPlus,
    #[serde(rename = "t-")]
    TripletMinus,
}

impl PairLabel {
    pub const ALL: [PairLabel; 4] = [
        PairLabel::Singlet,
        PairLabel::TripletZero,
        PairLabel::TripletPlus,
        PairLabel::TripletMinus,
    ];

    pub fn m(self) -> HalfInt {
        match self {
            PairLabel::Singlet | PairLabel::TripletZero => HalfInt::ZERO,
            PairLabel::TripletPlus => HalfInt::ONE,
            PairLabel::TripletMinus => -HalfInt::ONE,
        }
    }

    /// Real amplitudes over `|+,+>, |+,->, |-,+>, |-,->`.
    pub fn vector(self) -> DVector<f64> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v = match self {
            PairLabel::Singlet => [0.0, h, -h, 0.0],
            PairLabel::TripletZero => [0.0, h, h, 0.0],
            PairLabel::TripletPlus => [1.0, 0.0, 0.0, 0.0],
            PairLabel::TripletMinus => [0.0, 0.0, 0.0, 1.0],
        };
        DVector::from_row_slice(&v)
    }

    pub fn state(self) -> ZeemanPairState {
        let amps = self.vector().iter().map(|&x| Complex64::from(x)).collect();
        ZeemanPairState::normalized(HalfInt::HALF, HalfInt::HALF, amps).expect("unit vector")
    }

    fn exact_vector(self) -> [Surd; 4] {
        let z = Surd::zero;
        let mut half = PrimeFactorization::one();
        half.div_assign(&PrimeFactorization::of(2));
        let h = half.sqrt();
        let mh = h.clone().scale(&-BigRational::one());
        let one = Surd::rational(BigRational::one());
        match self {
            PairLabel::Singlet => [z(), h, mh, z()],
            PairLabel::TripletZero => [z(), h.clone(), h, z()],
            PairLabel::TripletPlus => [one, z(), z(), z()],
            PairLabel::TripletMinus => [z(), z(), z(), one],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PairLabel::Singlet => "s",
            PairLabel::TripletZero => "t0",
            PairLabel::TripletPlus => "t+",
            PairLabel::TripletMinus => "t-",
        }
    }
}

impl fmt::Display for PairLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PairLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "s" | "singlet" => Ok(PairLabel::Singlet),
            "t0" | "triplet0" => Ok(PairLabel::TripletZero),
            "t+" | "tp" | "triplet+" => Ok(PairLabel::TripletPlus),
            "t-" | "tm" | "triplet-" => Ok(PairLabel::TripletMinus),
            other => Err(invalid(format!("unknown pair state {other:?}"))),
        }
    }
}

/// Exact `D` of a labelled `j = 1/2` pair state.
pub fn angular_factor_exact(c: &Coupling, label: PairLabel) -> Result<BigRational> {
    if c.j_a != HalfInt::HALF || c.j_b != HalfInt::HALF {
        return Err(Error::Unsupported(
            "exact labelled D needs j_a = j_b = 1/2".into(),
        ));
    }
    let basis = product_basis(c.j_a, c.j_b, None);
    let u = label.exact_vector();
    let mut total = SurdSum::zero();
    for mt in product_basis(c.j_alpha, c.j_beta, Some(label.m())) {
        let mut amp = SurdSum::zero();
        for (i, &mi) in basis.iter().enumerate() {
            if u[i].is_zero() {
                continue;
            }
            let a: SurdSum = angular_amplitude_exact(c, mi, mt)?.into();
            amp = &amp + &(&SurdSum::from(u[i].clone()) * &a);
        }
        total = &total + &(&amp * &amp);
    }
    let factor = BigRational::from_integer(if c.identical_initials { 12 } else { 6 }.into());
    total
        .scale(&factor)
        .as_rational()
        .ok_or_else(|| Error::NumericFailure(format!("D for {label} did not reduce to a rational")))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AngularFactorRow {
    pub channel: u8,
    pub j_alpha: HalfInt,
    pub j_beta: HalfInt,
    pub label: PairLabel,
    pub d: String,
    pub d_prime: String,
    #[serde(skip)]
    pub d_exact: BigRational,
    #[serde(skip)]
    pub d_prime_exact: BigRational,
}

/// Every `(D, D')` pair for the four s→p channels and four pair states.
pub fn angular_factor_table() -> Result<Vec<AngularFactorRow>> {
    let mut rows = Vec::new();
    for k in 1..=4u8 {
        let c = Coupling::sp(k)?;
        for label in PairLabel::ALL {
            let d = angular_factor_exact(&c, label)?;
            let dp = angular_factor_exact(&c.doubled(true), label)?;
            rows.push(AngularFactorRow {
                channel: k,
                j_alpha: c.j_alpha,
                j_beta: c.j_beta,
                label,
                d: d.to_string(),
                d_prime: dp.to_string(),
                d_exact: d,
                d_prime_exact: dp,
            });
        }
    }
    Ok(rows)
}

/// A coupling `(a b) ↔ (α β)` with its energy defect and `C3`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub a: FineLevel,
    pub b: FineLevel,
    pub alpha: FineLevel,
    pub beta: FineLevel,
    /// δ/2π in MHz.
    pub delta_mhz: f64,
    /// GHz·µm³.
    pub c3: f64,
    pub identical_initials: bool,
}

fn check_transition(from: &FineLevel, to: &FineLevel) -> Result<()> {
    if from.species != to.species {
        return Err(invalid(format!("{from} -> {to} changes species")));
    }
    if from.l.abs_diff(to.l) != 1 || (from.j - to.j).abs() > HalfInt::ONE {
        return Err(invalid(format!("{from} -> {to} is not dipole allowed")));
    }
    Ok(())
}

impl Channel {
    pub fn from_parts(
        a: FineLevel,
        b: FineLevel,
        alpha: FineLevel,
        beta: FineLevel,
        delta_mhz: f64,
        c3: f64,
    ) -> Result<Self> {
        check_transition(&a, &alpha)?;
        check_transition(&b, &beta)?;
        if !delta_mhz.is_finite() || !c3.is_finite() {
            return Err(invalid("channel defect and C3 must be finite"));
        }
        Ok(Channel {
            a,
            b,
            alpha,
            beta,
            delta_mhz,
            c3,
            identical_initials: a == b,
        })
    }

    /// Evaluates `δ` and `C3` from atomic data.
    pub fn compute(
        radial: &RadialMatrix,
        a: FineLevel,
        b: FineLevel,
        alpha: FineLevel,
        beta: FineLevel,
    ) -> Result<Self> {
        check_transition(&a, &alpha)?;
        check_transition(&b, &beta)?;
        let delta = radial.data().pair_defect(&a, &b, &alpha, &beta)?;
        let c3 = radial.c3_coefficient(&a, &b, &alpha, &beta)?;
        Self::from_parts(a, b, alpha, beta, delta, c3)
    }

    pub fn coupling(&self) -> Coupling {
        Coupling {
            j_a: self.a.j,
            j_b: self.b.j,
            j_alpha: self.alpha.j,
            j_beta: self.beta.j,
            identical_initials: self.identical_initials,
        }
    }

    pub fn index(&self) -> Option<u8> {
        if self.a.l == 0 && self.b.l == 0 && self.alpha.l == 1 && self.beta.l == 1 {
            self.coupling().sp_index()
        } else {
            None
        }
    }

    pub fn label(&self) -> String {
        format!("{} + {} -> {} + {}", self.a, self.b, self.alpha, self.beta)
    }

    fn coupling_scale(&self, r_um: f64) -> f64 {
        dipole_scale_mhz(self.c3, r_um)
    }

    /// Interaction matrix in MHz for total projection `m`, initial states first.
    pub fn build_interaction_matrix(&self, m: HalfInt, r_um: f64) -> Result<SectorMatrix> {
        build_sector(&[*self], m, r_um)
    }

    pub fn eigensystem(&self, m: HalfInt, r_um: f64) -> Result<ChannelEigensystem> {
        channel_eigensystem(self, m, r_um)
    }

    /// Potential of an initial-manifold eigenvector with factor `d`, in MHz.
    pub fn pair_potential(&self, d: f64, r_um: f64) -> f64 {
        pair_potential(self.delta_mhz, self.c3, d, r_um)
    }

    pub fn vdw_coefficient(&self, d: f64) -> Result<f64> {
        vdw_coefficient(self.delta_mhz, self.c3, d).map_err(|e| match e {
            Error::ResonantChannel(_) => Error::ResonantChannel(self.label()),
            other => other,
        })
    }

    pub fn crossover_radius(&self, d: f64) -> Result<f64> {
        crossover_radius(self.delta_mhz, self.c3, d)
    }

    /// Angular Gram matrix on the full initial product basis.
    pub fn gram_matrix(&self) -> Result<DMatrix<f64>> {
        Ok(gram_matrix(&self.coupling(), None)?.1)
    }

    /// Largest `D` over all sectors; used to bound the vdW regime.
    pub fn max_d(&self) -> Result<f64> {
        let g = self.gram_matrix()?;
        Ok(symmetric_eigen(g)?
            .eigenvalues
            .iter()
            .fold(0.0, |a: f64, &b| a.max(b)))
    }
}

/// `U = (δ/2)[1 − √(1 + 4DC3²/δ²R⁶)]` in MHz, or `−√D|C3|/R³` when `δ = 0`.
pub fn pair_potential(delta_mhz: f64, c3: f64, d: f64, r_um: f64) -> f64 {
    let s = dipole_scale_mhz(c3, r_um);
    if delta_mhz == 0.0 {
        return -d.max(0.0).sqrt() * s.abs();
    }
    let x = 4.0 * d * s * s / (delta_mhz * delta_mhz);
    -2.0 * d * s * s / (delta_mhz * (1.0 + (1.0 + x).sqrt()))
}

/// `U_vdW·R⁶ = −D·C3²/δ` in GHz·µm⁶.
pub fn vdw_coefficient(delta_mhz: f64, c3: f64, d: f64) -> Result<f64> {
    if delta_mhz == 0.0 {
        return Err(Error::ResonantChannel(format!("with C3 = {c3}")));
    }
    Ok(-d * c3 * c3 / (delta_mhz / MHZ_PER_GHZ))
}

/// `R_c = (D·C3²/δ²)^{1/6}` in µm.
pub fn crossover_radius(delta_mhz: f64, c3: f64, d: f64) -> Result<f64> {
    if delta_mhz == 0.0 {
        return Err(Error::UndefinedCrossover("δ = 0".into()));
    }
    if d <= 0.0 || c3 == 0.0 {
        return Err(Error::UndefinedCrossover(format!(
            "D·C3² = {}",
            d * c3 * c3
        )));
    }
    let delta_ghz = delta_mhz / MHZ_PER_GHZ;
    Ok((d * c3 * c3 / (delta_ghz * delta_ghz)).powf(1.0 / 6.0))
}

/// Block interaction matrix over a shared initial manifold.
#[derive(Clone, Debug, PartialEq)]
pub struct SectorMatrix {
    pub m: HalfInt,
    pub initial: Vec<(HalfInt, HalfInt)>,
    /// Per target state: channel position in the input list and projections.
    pub targets: Vec<(usize, (HalfInt, HalfInt))>,
    pub matrix: DMatrix<f64>,
}

impl SectorMatrix {
    pub fn n_initial(&self) -> usize {
        self.initial.len()
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

fn build_sector(channels: &[Channel], m: HalfInt, r_um: f64) -> Result<SectorMatrix> {
    if r_um <= 0.0 || !r_um.is_finite() {
        return Err(invalid(format!(
            "separation R = {r_um} µm must be positive"
        )));
    }
    let first = channels
        .first()
        .ok_or_else(|| invalid("no channels given"))?;
    for c in channels {
        if (c.a, c.b) != (first.a, first.b) {
            return Err(invalid(format!(
                "channels do not share initial states: {} vs {}",
                c.label(),
                first.label()
            )));
        }
    }
    for (i, c) in channels.iter().enumerate() {
        if channels[..i]
            .iter()
            .any(|d| (d.alpha, d.beta) == (c.alpha, c.beta))
        {
            return Err(invalid(format!(
                "target pair of {} appears twice",
                c.label()
            )));
        }
    }
    let initial = product_basis(first.a.j, first.b.j, Some(m));
    if initial.is_empty() {
        return Err(invalid(format!("no initial states with m = {m}")));
    }
    let mut targets = Vec::new();
    for (k, c) in channels.iter().enumerate() {
        for t in product_basis(c.alpha.j, c.beta.j, Some(m)) {
            targets.push((k, t));
        }
    }
    if targets.is_empty() {
        return Err(Error::DegenerateChannel(m.to_string()));
    }
    let ni = initial.len();
    let n = ni + targets.len();
    let mut matrix = DMatrix::zeros(n, n);
    for (t, &(k, mt)) in targets.iter().enumerate() {
        let c = &channels[k];
        let coupling = c.coupling();
        let scale = -(6.0 * coupling.doubling()).sqrt() * c.coupling_scale(r_um);
        matrix[(ni + t, ni + t)] = c.delta_mhz;
        for (i, &mi) in initial.iter().enumerate() {
            let v = scale * angular_amplitude(&coupling, mi, mt)?;
            matrix[(i, ni + t)] = v;
            matrix[(ni + t, i)] = v;
        }
    }
    Ok(SectorMatrix {
        m,
        initial,
        targets,
        matrix,
    })
}

/// An eigenvalue connected to the initial manifold.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialBranch {
    pub index: usize,
    /// MHz.
    pub energy: f64,
    pub initial_weight: f64,
    /// `D` recovered from `U(U − δ)·R⁶/C3²`.
    pub d: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelEigensystem {
    pub m: HalfInt,
    pub r_um: f64,
    pub n_initial: usize,
    pub n_target: usize,
    /// Ascending, MHz.
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
    pub branches: Vec<InitialBranch>,
}

impl ChannelEigensystem {
    pub fn dim(&self) -> usize {
        self.n_initial + self.n_target
    }
}

fn sorted_eigen(matrix: DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let eig = symmetric_eigen(matrix)?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = DMatrix::from_columns(
        &order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    Ok((values, vectors))
}

/// Full eigen-decomposition of one channel sector.
///
/// Initial branches are the `N_ab` eigenvectors with the largest initial
/// weight among eigenvalues on the same side of `δ/2` as zero.
pub fn channel_eigensystem(channel: &Channel, m: HalfInt, r_um: f64) -> Result<ChannelEigensystem> {
    let sector = channel.build_interaction_matrix(m, r_um)?;
    let ni = sector.n_initial();
    let n = sector.dim();
    let (values, vectors) = sorted_eigen(sector.matrix)?;
    let delta = channel.delta_mhz;
    let scale = channel.coupling_scale(r_um);
    let weight = |k: usize| (0..ni).map(|i| vectors[(i, k)].powi(2)).sum::<f64>();
    let tol = 1e-12 * values.amax().max(delta.abs());
    let mut candidates: Vec<usize> = (0..n)
        .filter(|&k| {
            let u = values[k];
            if delta > 0.0 {
                u < delta / 2.0
            } else if delta < 0.0 {
                u > delta / 2.0
            } else {
                u <= tol
            }
        })
        .collect();
    candidates.sort_by(|&x, &y| {
        weight(y)
            .total_cmp(&weight(x))
            .then(values[x].total_cmp(&values[y]))
    });
    candidates.truncate(ni);
    candidates.sort_unstable();
    let branches = candidates
        .into_iter()
        .map(|k| {
            let u = values[k];
            InitialBranch {
                index: k,
                energy: u,
                initial_weight: weight(k),
                d: (u * (u - delta) / (scale * scale)).max(0.0),
            }
        })
        .collect();
    Ok(ChannelEigensystem {
        m,
        r_um,
        n_initial: ni,
        n_target: n - ni,
        eigenvalues: values,
        eigenvectors: vectors,
        branches,
    })
}

/// Result of the van der Waals sum over channels.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VdwSum {
    /// MHz.
    pub energy_mhz: f64,
    /// GHz·µm⁶.
    pub coefficient: f64,
    pub max_crossover_um: f64,
    pub warning: Option<String>,
}

/// `Σ_k Σ_ℓ |c_kℓ|² U_kℓ,vdW` for a pair state.
pub fn vdw_additive(psi: &ZeemanPairState, channels: &[Channel], r_um: f64) -> Result<VdwSum> {
    if r_um <= 0.0 || !r_um.is_finite() {
        return Err(invalid(format!(
            "separation R = {r_um} µm must be positive"
        )));
    }
    let mut coefficient = 0.0;
    let mut max_rc: f64 = 0.0;
    for c in channels {
        if (c.a.j, c.b.j) != (psi.j_a(), psi.j_b()) {
            return Err(invalid(format!(
                "pair state does not match initial levels of {}",
                c.label()
            )));
        }
        let f = psi.expectation(&c.gram_matrix()?);
        coefficient += c.vdw_coefficient(f)?;
        let dmax = c.max_d()?;
        if dmax > 0.0 && c.c3 != 0.0 {
            max_rc = max_rc.max(c.crossover_radius(dmax)?);
        }
    }
    let warning = (r_um < 2.0 * max_rc).then(|| {
        format!(
            "R = {r_um:.3} µm is below 2·R_c = {:.3} µm; the van der Waals sum is unreliable",
            2.0 * max_rc
        )
    });
    Ok(VdwSum {
        energy_mhz: coefficient / r_um.powi(6) * MHZ_PER_GHZ,
        coefficient,
        max_crossover_um: max_rc,
        warning,
    })
}

/// Second-order effective operator on the initial sector, in MHz.
pub fn vdw_effective_matrix(channels: &[Channel], m: HalfInt, r_um: f64) -> Result<DMatrix<f64>> {
    let first = channels
        .first()
        .ok_or_else(|| invalid("no channels given"))?;
    let n = product_basis(first.a.j, first.b.j, Some(m)).len();
    let mut total = DMatrix::zeros(n, n);
    for c in channels {
        let (_, g) = gram_matrix(&c.coupling(), Some(m))?;
        total += g * (c.vdw_coefficient(1.0)? / r_um.powi(6) * MHZ_PER_GHZ);
    }
    Ok(total)
}

/// Branches of the multichannel problem tracked adiabatically from large R.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiChannelPotential {
    pub m: HalfInt,
    pub r_um: f64,
    /// Ascending, MHz.
    pub energies: Vec<f64>,
    pub min_overlap: f64,
    pub diabatic_crossing: bool,
}

/// Initial-manifold eigenvalues of the block matrix over several channels.
pub fn multi_channel_potential(
    channels: &[Channel],
    m: HalfInt,
    r_um: f64,
) -> Result<MultiChannelPotential> {
    let sector = build_sector(channels, m, r_um)?;
    let ni = sector.n_initial();
    let mut r_far = r_um;
    for c in channels {
        let d = c.max_d()?;
        if c.delta_mhz != 0.0 && d > 0.0 && c.c3 != 0.0 {
            r_far = r_far.max(20.0 * c.crossover_radius(d)?);
        }
    }
    r_far = r_far.max(4.0 * r_um);
    let steps = 200;
    let ratio = (r_um / r_far).powf(1.0 / steps as f64);

    let (values, vectors) = sorted_eigen(build_sector(channels, m, r_far)?.matrix)?;
    let weight = |v: &DMatrix<f64>, k: usize| (0..ni).map(|i| v[(i, k)].powi(2)).sum::<f64>();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&x, &y| weight(&vectors, y).total_cmp(&weight(&vectors, x)));
    let mut tracked: Vec<DVector<f64>> = order[..ni]
        .iter()
        .map(|&k| vectors.column(k).into_owned())
        .collect();
    let mut energies: Vec<f64> = order[..ni].iter().map(|&k| values[k]).collect();
    let mut min_overlap: f64 = 1.0;
    let mut r = r_far;
    for step in 1..=steps {
        r = if step == steps { r_um } else { r * ratio };
        let (values, vectors) = sorted_eigen(build_sector(channels, m, r)?.matrix)?;
        let mut used = vec![false; values.len()];
        for (slot, prev) in tracked.iter_mut().enumerate() {
            let (best, ov) = (0..values.len())
                .filter(|&k| !used[k])
                .map(|k| (k, vectors.column(k).dot(prev).powi(2)))
                .max_by(|x, y| {
                    x.1.total_cmp(&y.1)
                        .then(values[y.0].total_cmp(&values[x.0]))
                })
                .expect("more eigenvectors than tracked branches");
            used[best] = true;
            min_overlap = min_overlap.min(ov);
            let mut v = vectors.column(best).into_owned();
            if v.dot(prev) < 0.0 {
                v = -v;
            }
            *prev = v;
            energies[slot] = values[best];
        }
    }
    energies.sort_by(f64::total_cmp);
    Ok(MultiChannelPotential {
        m,
        r_um,
        energies,
        min_overlap,
        diabatic_crossing: min_overlap < 0.5,
    })
}
