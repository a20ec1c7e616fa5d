use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use super::exact::{factorial_big, sign_rational, PrimeFactorization, Surd};
use super::{check_j, check_jm, ln_factorial, triangle};
use crate::error::Result;
use crate::halfint::HalfInt;

/// Above this `j` the cached float path skips exact arithmetic.
pub const EXACT_J_LIMIT: HalfInt = HalfInt::integer(20);

fn half(twice: i32) -> u64 {
    debug_assert!(twice >= 0 && twice % 2 == 0);
    (twice / 2) as u64
}

/// `<j1 m1; j2 m2 | J M>` as an exact surd.
pub fn clebsch_gordan_exact(
    j1: HalfInt,
    m1: HalfInt,
    j2: HalfInt,
    m2: HalfInt,
    j: HalfInt,
    m: HalfInt,
) -> Result<Surd> {
    check_jm(j1, m1)?;
    check_jm(j2, m2)?;
    check_jm(j, m)?;
    if m1 + m2 != m || !triangle(j1, j2, j) {
        return Ok(Surd::zero());
    }
    let (a, b, c) = (j1.twice(), j2.twice(), j.twice());
    let (ma, mb, mc) = (m1.twice(), m2.twice(), m.twice());

    let mut under = PrimeFactorization::of((c + 1) as u64);
    for n in [a + b - c, a - b + c, -a + b + c] {
        under.mul_assign(&PrimeFactorization::factorial(half(n)));
    }
    under.div_assign(&PrimeFactorization::factorial(half(a + b + c + 2)));
    for n in [a + ma, a - ma, b + mb, b - mb, c + mc, c - mc] {
        under.mul_assign(&PrimeFactorization::factorial(half(n)));
    }

    let mut sum = BigRational::zero();
    for (k, den) in racah_cg_terms(a, b, c, ma, mb) {
        let term = BigRational::new(BigInt::from(1), den);
        sum += sign_rational(k % 2 == 1) * term;
    }
    Ok(under.sqrt().scale(&sum))
}

fn racah_cg_terms(a: i32, b: i32, c: i32, ma: i32, mb: i32) -> impl Iterator<Item = (i64, BigInt)> {
    let args = cg_sum_args(a, b, c, ma, mb);
    let (kmin, kmax) = args.range();
    (kmin..=kmax).map(move |k| {
        let den = args
            .factorials(k)
            .into_iter()
            .fold(BigInt::from(1), |acc, n| acc * factorial_big(n as u64));
        (k, den)
    })
}

/// Factorial arguments of the Racah sum, all in units of 1.
struct CgSumArgs {
    ab_c: i64,
    a_ma: i64,
    b_mb: i64,
    c_b_ma: i64,
    c_a_mb: i64,
}

fn cg_sum_args(a: i32, b: i32, c: i32, ma: i32, mb: i32) -> CgSumArgs {
    CgSumArgs {
        ab_c: i64::from((a + b - c) / 2),
        a_ma: i64::from((a - ma) / 2),
        b_mb: i64::from((b + mb) / 2),
        c_b_ma: i64::from((c - b + ma) / 2),
        c_a_mb: i64::from((c - a - mb) / 2),
    }
}

impl CgSumArgs {
    fn range(&self) -> (i64, i64) {
        let kmin = 0.max(-self.c_b_ma).max(-self.c_a_mb);
        let kmax = self.ab_c.min(self.a_ma).min(self.b_mb);
        (kmin, kmax)
    }

    fn factorials(&self, k: i64) -> [i64; 6] {
        [
            k,
            self.ab_c - k,
            self.a_ma - k,
            self.b_mb - k,
            self.c_b_ma + k,
            self.c_a_mb + k,
        ]
    }
}

fn clebsch_gordan_float(a: i32, b: i32, c: i32, ma: i32, mb: i32) -> f64 {
    let mc = ma + mb;
    let ln_pref = 0.5
        * (((c + 1) as f64).ln()
            + ln_factorial(half(a + b - c))
            + ln_factorial(half(a - b + c))
            + ln_factorial(half(-a + b + c))
            - ln_factorial(half(a + b + c + 2))
            + [a + ma, a - ma, b + mb, b - mb, c + mc, c - mc]
                .iter()
                .map(|&n| ln_factorial(half(n)))
                .sum::<f64>());
    let args = cg_sum_args(a, b, c, ma, mb);
    let (kmin, kmax) = args.range();
    (kmin..=kmax)
        .map(|k| {
            let ln_den: f64 = args
                .factorials(k)
                .iter()
                .map(|&n| ln_factorial(n as u64))
                .sum();
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * (ln_pref - ln_den).exp()
        })
        .sum()
}

type CgKey = [i32; 5];

fn cache() -> &'static RwLock<HashMap<CgKey, f64>> {
    static CACHE: OnceLock<RwLock<HashMap<CgKey, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// `<j1 m1; j2 m2 | J M>` in the Condon–Shortley convention.
///
/// Zero when `M != m1 + m2` or the triangle rule fails. Values are memoized;
/// for `j <= 20` they come from the exact path.
pub fn clebsch_gordan(
    j1: HalfInt,
    m1: HalfInt,
    j2: HalfInt,
    m2: HalfInt,
    j: HalfInt,
    m: HalfInt,
) -> Result<f64> {
    check_jm(j1, m1)?;
    check_jm(j2, m2)?;
    check_jm(j, m)?;
    if m1 + m2 != m || !triangle(j1, j2, j) {
        return Ok(0.0);
    }
    let key = [j1.twice(), m1.twice(), j2.twice(), m2.twice(), j.twice()];
    if let Some(&v) = cache().read().expect("cg cache poisoned").get(&key) {
        return Ok(v);
    }
    let value = if j1.max(j2).max(j) <= EXACT_J_LIMIT {
        clebsch_gordan_exact(j1, m1, j2, m2, j, m)?.to_f64()
    } else {
        clebsch_gordan_float(key[0], key[2], key[4], key[1], key[3])
    };
    cache()
        .write()
        .expect("cg cache poisoned")
        .insert(key, value);
    Ok(value)
}

/// Wigner 3-j symbol.
pub fn three_j(
    j1: HalfInt,
    m1: HalfInt,
    j2: HalfInt,
    m2: HalfInt,
    j3: HalfInt,
    m3: HalfInt,
) -> Result<f64> {
    check_j(j3)?;
    check_jm(j3, m3)?;
    let cg = clebsch_gordan(j1, m1, j2, m2, j3, -m3)?;
    let phase = (j1 - j2 - m3).twice() / 2;
    let sign = if phase.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    Ok(sign * cg / f64::from(j3.multiplicity()).sqrt())
}
