//! Angular-momentum algebra in the Condon–Shortley phase convention.

mod cg;
pub mod exact;
mod six_j;
mod wigner;

pub use cg::{clebsch_gordan, clebsch_gordan_exact, three_j, EXACT_J_LIMIT};
pub use six_j::{six_j, six_j_exact};
pub use wigner::{wigner_d_half, wigner_d_half_element};

use crate::error::{invalid, Result};
use crate::halfint::HalfInt;

pub(crate) fn check_j(j: HalfInt) -> Result<()> {
    if j.twice() < 0 {
        return Err(invalid(format!("angular momentum {j} is negative")));
    }
    Ok(())
}

pub(crate) fn check_jm(j: HalfInt, m: HalfInt) -> Result<()> {
    check_j(j)?;
    if m.abs() > j {
        return Err(invalid(format!("projection {m} exceeds j = {j}")));
    }
    if (j - m).twice() % 2 != 0 {
        return Err(invalid(format!(
            "projection {m} is incompatible with j = {j}"
        )));
    }
    Ok(())
}

/// Triangle rule with integer perimeter.
pub(crate) fn triangle(a: HalfInt, b: HalfInt, c: HalfInt) -> bool {
    let (a, b, c) = (a.twice(), b.twice(), c.twice());
    c <= a + b && c >= (a - b).abs() && (a + b + c) % 2 == 0
}

/// `ln n!` from a lazily grown table.
pub(crate) fn ln_factorial(n: u64) -> f64 {
    use std::sync::{OnceLock, RwLock};
    static TABLE: OnceLock<RwLock<Vec<f64>>> = OnceLock::new();
    let table = TABLE.get_or_init(|| RwLock::new(vec![0.0]));
    let idx = n as usize;
    if let Some(&v) = table.read().expect("factorial table poisoned").get(idx) {
        return v;
    }
    let mut t = table.write().expect("factorial table poisoned");
    while t.len() <= idx {
        let k = t.len();
        let next = t[k - 1] + (k as f64).ln();
        t.push(next);
    }
    t[idx]
}
