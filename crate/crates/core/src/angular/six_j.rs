use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;

use super::exact::{factorial_big, sign_rational, PrimeFactorization, Surd};
use super::{check_j, ln_factorial, triangle};
use crate::error::Result;
use crate::halfint::HalfInt;

fn triangle_factorization(a: i32, b: i32, c: i32) -> PrimeFactorization {
    let h = |n: i32| (n / 2) as u64;
    let mut f = PrimeFactorization::factorial(h(a + b - c));
    f.mul_assign(&PrimeFactorization::factorial(h(a - b + c)));
    f.mul_assign(&PrimeFactorization::factorial(h(-a + b + c)));
    f.div_assign(&PrimeFactorization::factorial(h(a + b + c + 2)));
    f
}

struct Racah {
    tri: [[i32; 3]; 4],
    alpha: [i64; 4],
    beta: [i64; 3],
}

impl Racah {
    fn new(j: [HalfInt; 6]) -> Option<Racah> {
        let t: Vec<i32> = j.iter().map(|x| x.twice()).collect();
        let tri = [
            [t[0], t[1], t[2]],
            [t[0], t[4], t[5]],
            [t[3], t[1], t[5]],
            [t[3], t[4], t[2]],
        ];
        let ok = tri.iter().all(|&[a, b, c]| {
            triangle(
                HalfInt::from_twice(a),
                HalfInt::from_twice(b),
                HalfInt::from_twice(c),
            )
        });
        if !ok {
            return None;
        }
        let alpha = tri.map(|[a, b, c]| i64::from((a + b + c) / 2));
        let beta = [
            i64::from((t[0] + t[1] + t[3] + t[4]) / 2),
            i64::from((t[1] + t[2] + t[4] + t[5]) / 2),
            i64::from((t[2] + t[0] + t[5] + t[3]) / 2),
        ];
        Some(Racah { tri, alpha, beta })
    }

    fn range(&self) -> std::ops::RangeInclusive<i64> {
        let lo = *self.alpha.iter().max().expect("four triads");
        let hi = *self.beta.iter().min().expect("three sums");
        lo..=hi
    }

    fn denominators(&self, t: i64) -> impl Iterator<Item = i64> + '_ {
        self.alpha
            .iter()
            .map(move |a| t - a)
            .chain(self.beta.iter().map(move |b| b - t))
    }
}

/// Wigner 6-j symbol `{j1 j2 j3; j4 j5 j6}` as an exact surd.
pub fn six_j_exact(
    j1: HalfInt,
    j2: HalfInt,
    j3: HalfInt,
    j4: HalfInt,
    j5: HalfInt,
    j6: HalfInt,
) -> Result<Surd> {
    let js = [j1, j2, j3, j4, j5, j6];
    for j in js {
        check_j(j)?;
    }
    let Some(r) = Racah::new(js) else {
        return Ok(Surd::zero());
    };
    let mut under = PrimeFactorization::one();
    for [a, b, c] in r.tri {
        under.mul_assign(&triangle_factorization(a, b, c));
    }
    let mut sum = BigRational::zero();
    for t in r.range() {
        let den = r
            .denominators(t)
            .fold(BigInt::from(1), |acc, n| acc * factorial_big(n as u64));
        let num = factorial_big((t + 1) as u64);
        sum += sign_rational(t % 2 == 1) * BigRational::new(num, den);
    }
    Ok(under.sqrt().scale(&sum))
}

/// Wigner 6-j symbol `{j1 j2 j3; j4 j5 j6}` by the Racah sum.
///
/// Zero when any triad violates the triangle rule.
pub fn six_j(
    j1: HalfInt,
    j2: HalfInt,
    j3: HalfInt,
    j4: HalfInt,
    j5: HalfInt,
    j6: HalfInt,
) -> Result<f64> {
    let js = [j1, j2, j3, j4, j5, j6];
    for j in js {
        check_j(j)?;
    }
    if js.iter().all(|&j| j <= super::EXACT_J_LIMIT) {
        return Ok(six_j_exact(j1, j2, j3, j4, j5, j6)?.to_f64());
    }
    let Some(r) = Racah::new(js) else {
        return Ok(0.0);
    };
    let ln_tri: f64 = r
        .tri
        .iter()
        .map(|&[a, b, c]| {
            let h = |n: i32| (n / 2) as u64;
            ln_factorial(h(a + b - c)) + ln_factorial(h(a - b + c)) + ln_factorial(h(-a + b + c))
                - ln_factorial(h(a + b + c + 2))
        })
        .sum::<f64>()
        * 0.5;
    Ok(r.range()
        .map(|t| {
            let ln_den: f64 = r.denominators(t).map(|n| ln_factorial(n as u64)).sum();
            let sign = if t % 2 == 0 { 1.0 } else { -1.0 };
            sign * (ln_tri + ln_factorial((t + 1) as u64) - ln_den).exp()
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    const H: HalfInt = HalfInt::HALF;
    const Z: HalfInt = HalfInt::ZERO;
    const ONE: HalfInt = HalfInt::ONE;
    const TH: HalfInt = HalfInt::THREE_HALVES;

    #[test]
    fn all_halves_and_ones() {
        let s = six_j_exact(H, H, ONE, H, H, ONE).unwrap();
        assert_eq!(s.square(), BigRational::new(1.into(), 36.into()));
        assert!((six_j(H, H, ONE, H, H, ONE).unwrap() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn fine_structure_recoupling_values() {
        // {1 3/2 1/2; 1/2 0 1} = -1/sqrt 6, {1 1/2 1/2; 1/2 0 1} = +1/sqrt 6
        let a = six_j(ONE, TH, H, H, Z, ONE).unwrap();
        let b = six_j(ONE, H, H, H, Z, ONE).unwrap();
        assert!((a + 1.0 / 6f64.sqrt()).abs() < 1e-15);
        assert!((b - 1.0 / 6f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn triangle_violation_is_zero() {
        assert_eq!(six_j(H, H, HalfInt::integer(2), H, H, ONE).unwrap(), 0.0);
        assert_eq!(six_j(H, H, H, H, H, H).unwrap(), 0.0);
    }

    #[test]
    fn zero_argument_closed_form() {
        // {a b c; b a 0} = (-1)^(a+b+c) / sqrt((2a+1)(2b+1))
        for ta in 0..7 {
            for tb in 0..7 {
                for tc in 0..9 {
                    let (a, b, c) = (
                        HalfInt::from_twice(ta),
                        HalfInt::from_twice(tb),
                        HalfInt::from_twice(tc),
                    );
                    let v = six_j(a, b, c, b, a, Z).unwrap();
                    let expect = if triangle(a, b, c) {
                        let p = (ta + tb + tc) / 2;
                        let s = if p % 2 == 0 { 1.0 } else { -1.0 };
                        s / f64::from((ta + 1) * (tb + 1)).sqrt()
                    } else {
                        0.0
                    };
                    assert!((v - expect).abs() < 1e-14, "{a} {b} {c}");
                }
            }
        }
    }

    #[test]
    fn float_path_matches_exact() {
        let js = [
            HalfInt::integer(21),
            HalfInt::integer(20),
            ONE,
            HalfInt::integer(20),
            HalfInt::integer(21),
            HalfInt::integer(2),
        ];
        let big = six_j(js[0], js[1], js[2], js[3], js[4], js[5]).unwrap();
        let exact = six_j_exact(js[0], js[1], js[2], js[3], js[4], js[5])
            .unwrap()
            .to_f64();
        assert!((big - exact).abs() < 1e-12);
    }
}
