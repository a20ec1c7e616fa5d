use nalgebra::Matrix2;

use crate::error::{invalid, Result};
use crate::halfint::HalfInt;

/// Reduced rotation matrix `d^{1/2}(θ)`; row and column 0 is `m = +1/2`.
pub fn wigner_d_half(theta: f64) -> Matrix2<f64> {
    let (s, c) = (theta / 2.0).sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// Single element `d^{1/2}_{m m'}(θ)`.
pub fn wigner_d_half_element(m: HalfInt, m_prime: HalfInt, theta: f64) -> Result<f64> {
    let index = |x: HalfInt| match x.twice() {
        1 => Ok(0),
        -1 => Ok(1),
        _ => Err(invalid(format!("projection {x} is not ±1/2"))),
    };
    Ok(wigner_d_half(theta)[(index(m)?, index(m_prime)?)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    #[test]
    fn identity_at_zero() {
        assert_eq!(wigner_d_half(0.0), Matrix2::identity());
    }

    #[test]
    fn quarter_turn_entries() {
        let d = wigner_d_half(PI / 2.0);
        for v in d.iter() {
            assert!((v.abs() - FRAC_1_SQRT_2).abs() < 1e-15);
        }
        let e = wigner_d_half_element(HalfInt::HALF, -HalfInt::HALF, PI / 2.0).unwrap();
        assert!((e + FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn group_and_orthogonality() {
        for i in 0..50 {
            let a = 0.13 * f64::from(i) - 2.0;
            let b = 0.07 * f64::from(i) + 0.3;
            let prod = wigner_d_half(a) * wigner_d_half(b);
            assert!((prod - wigner_d_half(a + b)).norm() < 1e-14);
            let d = wigner_d_half(a);
            assert!((d.transpose() * d - Matrix2::identity()).norm() < 1e-14);
            assert!((d.determinant() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_non_half_projection() {
        assert!(wigner_d_half_element(HalfInt::THREE_HALVES, HalfInt::HALF, 0.0).is_err());
    }
}
