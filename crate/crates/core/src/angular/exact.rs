//! Exact arithmetic for angular-momentum coefficients.
//!
//! Every Clebsch–Gordan and 6-j value has the form `q·√r` with `q` rational
//! and `r` a square-free integer. Square roots of factorial ratios are kept
//! as prime factorizations so the square-free part can be split off exactly.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PrimeFactorization {
    exponents: BTreeMap<u64, i64>,
}

fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut sieve = vec![true; n + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut i = 2;
    while i * i <= n {
        if sieve[i] {
            let mut k = i * i;
            while k <= n {
                sieve[k] = false;
                k += i;
            }
        }
        i += 1;
    }
    sieve
        .iter()
        .enumerate()
        .filter_map(|(p, &is_p)| is_p.then_some(p as u64))
        .collect()
}

impl PrimeFactorization {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn of(mut n: u64) -> Self {
        assert!(n > 0, "cannot factorize zero");
        let mut f = Self::one();
        let mut p = 2;
        while p * p <= n {
            while n.is_multiple_of(p) {
                *f.exponents.entry(p).or_insert(0) += 1;
                n /= p;
            }
            p += 1;
        }
        if n > 1 {
            *f.exponents.entry(n).or_insert(0) += 1;
        }
        f
    }

    /// `n!` via Legendre's formula.
    pub fn factorial(n: u64) -> Self {
        let mut f = Self::one();
        for p in primes_up_to(n) {
            let mut e = 0i64;
            let mut pk = p;
            while pk <= n {
                e += (n / pk) as i64;
                pk = match pk.checked_mul(p) {
                    Some(v) => v,
                    None => break,
                };
            }
            f.exponents.insert(p, e);
        }
        f
    }

    pub fn mul_assign(&mut self, other: &Self) {
        for (&p, &e) in &other.exponents {
            *self.exponents.entry(p).or_insert(0) += e;
        }
        self.exponents.retain(|_, e| *e != 0);
    }

    pub fn div_assign(&mut self, other: &Self) {
        for (&p, &e) in &other.exponents {
            *self.exponents.entry(p).or_insert(0) -= e;
        }
        self.exponents.retain(|_, e| *e != 0);
    }

    pub fn to_rational(&self) -> BigRational {
        let mut num = BigInt::one();
        let mut den = BigInt::one();
        for (&p, &e) in &self.exponents {
            let pe = BigInt::from(p).pow(e.unsigned_abs() as u32);
            if e > 0 {
                num *= pe;
            } else {
                den *= pe;
            }
        }
        BigRational::new(num, den)
    }

    /// The positive square root as `q·√r` with `r` square-free.
    pub fn sqrt(&self) -> Surd {
        let mut num = BigInt::one();
        let mut den = BigInt::one();
        let mut radicand = BigUint::one();
        for (&p, &e) in &self.exponents {
            let half = e.div_euclid(2);
            let pe = BigInt::from(p).pow(half.unsigned_abs() as u32);
            if half >= 0 {
                num *= pe;
            } else {
                den *= pe;
            }
            if e.is_odd() {
                radicand *= BigUint::from(p);
            }
        }
        Surd {
            coeff: BigRational::new(num, den),
            radicand,
        }
    }
}

/// `coeff·√radicand` with a square-free radicand.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Surd {
    coeff: BigRational,
    radicand: BigUint,
}

impl Surd {
    pub fn zero() -> Self {
        Surd {
            coeff: BigRational::zero(),
            radicand: BigUint::one(),
        }
    }

    pub fn rational(q: BigRational) -> Self {
        Surd {
            coeff: q,
            radicand: BigUint::one(),
        }
    }

    pub fn coeff(&self) -> &BigRational {
        &self.coeff
    }

    pub fn radicand(&self) -> &BigUint {
        &self.radicand
    }

    pub fn is_zero(&self) -> bool {
        self.coeff.is_zero()
    }

    pub fn scale(mut self, q: &BigRational) -> Self {
        self.coeff *= q;
        self.normalize()
    }

    fn normalize(mut self) -> Self {
        if self.coeff.is_zero() {
            self.radicand = BigUint::one();
        }
        self
    }

    /// The exact square, always rational.
    pub fn square(&self) -> BigRational {
        &self.coeff * &self.coeff * BigRational::from_integer(BigInt::from(self.radicand.clone()))
    }

    pub fn to_f64(&self) -> f64 {
        ratio_to_f64(&self.coeff) * self.radicand.to_f64().unwrap_or(f64::NAN).sqrt()
    }
}

impl Mul for &Surd {
    type Output = Surd;
    fn mul(self, rhs: &Surd) -> Surd {
        let g = self.radicand.gcd(&rhs.radicand);
        let radicand = (&self.radicand / &g) * (&rhs.radicand / &g);
        let coeff = &self.coeff * &rhs.coeff * BigRational::from_integer(BigInt::from(g));
        Surd { coeff, radicand }.normalize()
    }
}

impl fmt::Display for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.radicand.is_one() {
            write!(f, "{}", self.coeff)
        } else {
            write!(f, "{}*sqrt({})", self.coeff, self.radicand)
        }
    }
}

pub(crate) fn ratio_to_f64(q: &BigRational) -> f64 {
    if let Some(v) = q.to_f64() {
        return v;
    }
    let n = q.numer().to_f64().unwrap_or(f64::NAN);
    let d = q.denom().to_f64().unwrap_or(f64::NAN);
    n / d
}

/// A finite sum of surds grouped by radicand.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SurdSum {
    terms: BTreeMap<BigUint, BigRational>,
}

impl SurdSum {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn add_surd(&mut self, s: &Surd) {
        if s.is_zero() {
            return;
        }
        let entry = self
            .terms
            .entry(s.radicand.clone())
            .or_insert_with(BigRational::zero);
        *entry += &s.coeff;
        if entry.is_zero() {
            self.terms.remove(&s.radicand);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Returns the value when it is rational.
    pub fn as_rational(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => self.terms.get(&BigUint::one()).cloned(),
            _ => None,
        }
    }

    pub fn scale(&self, q: &BigRational) -> SurdSum {
        let mut out = SurdSum::zero();
        for (r, c) in &self.terms {
            out.add_surd(&Surd {
                coeff: c * q,
                radicand: r.clone(),
            });
        }
        out
    }

    pub fn to_f64(&self) -> f64 {
        self.terms
            .iter()
            .map(|(r, c)| ratio_to_f64(c) * r.to_f64().unwrap_or(f64::NAN).sqrt())
            .sum()
    }

    fn surds(&self) -> impl Iterator<Item = Surd> + '_ {
        self.terms.iter().map(|(r, c)| Surd {
            coeff: c.clone(),
            radicand: r.clone(),
        })
    }
}

impl From<Surd> for SurdSum {
    fn from(s: Surd) -> Self {
        let mut out = SurdSum::zero();
        out.add_surd(&s);
        out
    }
}

impl Add for &SurdSum {
    type Output = SurdSum;
    fn add(self, rhs: &SurdSum) -> SurdSum {
        let mut out = self.clone();
        for s in rhs.surds() {
            out.add_surd(&s);
        }
        out
    }
}

impl Mul for &SurdSum {
    type Output = SurdSum;
    fn mul(self, rhs: &SurdSum) -> SurdSum {
        let mut out = SurdSum::zero();
        for a in self.surds() {
            for b in rhs.surds() {
                out.add_surd(&(&a * &b));
            }
        }
        out
    }
}

pub(crate) fn sign_rational(odd: bool) -> BigRational {
    if odd {
        -BigRational::one()
    } else {
        BigRational::one()
    }
}

pub(crate) fn factorial_big(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn factorial_factorization() {
        let f = PrimeFactorization::factorial(10);
        assert_eq!(f.to_rational(), q(3_628_800, 1));
        let mut r = PrimeFactorization::factorial(7);
        r.div_assign(&PrimeFactorization::factorial(9));
        assert_eq!(r.to_rational(), q(1, 72));
    }

    #[test]
    fn sqrt_split() {
        // sqrt(72) = 6 sqrt(2); sqrt(1/12) = (1/6) sqrt(3)
        let s = PrimeFactorization::of(72).sqrt();
        assert_eq!(s.coeff, q(6, 1));
        assert_eq!(s.radicand, BigUint::from(2u32));
        let mut t = PrimeFactorization::one();
        t.div_assign(&PrimeFactorization::of(12));
        let t = t.sqrt();
        assert_eq!(t.coeff, q(1, 6));
        assert_eq!(t.radicand, BigUint::from(3u32));
        assert!((t.to_f64() - (1.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn surd_products_stay_square_free() {
        let a = PrimeFactorization::of(6).sqrt();
        let b = PrimeFactorization::of(10).sqrt();
        let p = &a * &b; // sqrt(60) = 2 sqrt(15)
        assert_eq!(p.coeff, q(2, 1));
        assert_eq!(p.radicand, BigUint::from(15u32));
        let sq = &a * &a;
        assert_eq!(sq.coeff, q(6, 1));
        assert!(sq.radicand.is_one());
    }

    #[test]
    fn sums_cancel_exactly() {
        let a: SurdSum = PrimeFactorization::of(2).sqrt().into();
        let minus_a = a.scale(&q(-1, 1));
        let s = &a + &minus_a;
        assert!(s.is_zero());
        assert_eq!(s.as_rational(), Some(BigRational::zero()));
        let sq = &a * &a;
        assert_eq!(sq.as_rational(), Some(q(2, 1)));
        assert_eq!(a.as_rational(), None);
    }
}
