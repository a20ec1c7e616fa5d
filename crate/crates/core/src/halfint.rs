use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// An integer or half-integer stored as twice its value, so `1/2` is `HalfInt(1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HalfInt(i32);

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt(0);
    pub const HALF: HalfInt = HalfInt(1);
    pub const ONE: HalfInt = HalfInt(2);
    pub const THREE_HALVES: HalfInt = HalfInt(3);

    pub const fn from_twice(twice: i32) -> Self {
        HalfInt(twice)
    }

    pub const fn integer(value: i32) -> Self {
        HalfInt(2 * value)
    }

    pub const fn twice(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    pub fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    pub fn abs(self) -> Self {
        HalfInt(self.0.abs())
    }

    /// Multiplicity `2j + 1`.
    pub fn multiplicity(self) -> i32 {
        self.0 + 1
    }

    /// Projections `j, j-1, ..., -j`.
    pub fn projections(self) -> impl DoubleEndedIterator<Item = HalfInt> + Clone {
        let j = self.0;
        (0..=j.max(-1)).map(move |k| HalfInt(j - 2 * k))
    }
}

impl Add for HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 + rhs.0)
    }
}

impl Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 - rhs.0)
    }
}

impl Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt(-self.0)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

impl FromStr for HalfInt {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || Error::invalid(format!("not an integer or half-integer: {s:?}"));
        match s.split_once('/') {
            Some((num, "2")) => {
                let num: i32 = num.trim().parse().map_err(|_| bad())?;
                if num % 2 == 0 {
                    Err(bad())
                } else {
                    Ok(HalfInt(num))
                }
            }
            Some(_) => Err(bad()),
            None => {
                if let Ok(v) = s.parse::<i32>() {
                    return Ok(HalfInt(2 * v));
                }
                let v: f64 = s.parse().map_err(|_| bad())?;
                let twice = 2.0 * v;
                if twice.fract() != 0.0 {
                    return Err(bad());
                }
                Ok(HalfInt(twice as i32))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        assert_eq!("1/2".parse::<HalfInt>().unwrap(), HalfInt::HALF);
        assert_eq!("-3/2".parse::<HalfInt>().unwrap(), HalfInt::from_twice(-3));
        assert_eq!("2".parse::<HalfInt>().unwrap(), HalfInt::integer(2));
        assert_eq!("1.5".parse::<HalfInt>().unwrap(), HalfInt::THREE_HALVES);
        assert!("2/2".parse::<HalfInt>().is_err());
        assert!("1/3".parse::<HalfInt>().is_err());
        assert!("0.3".parse::<HalfInt>().is_err());
        assert_eq!(HalfInt::THREE_HALVES.to_string(), "3/2");
        assert_eq!(HalfInt::integer(-1).to_string(), "-1");
    }

    #[test]
    fn projections_run_from_top() {
        let ms: Vec<_> = HalfInt::THREE_HALVES
            .projections()
            .map(HalfInt::twice)
            .collect();
        assert_eq!(ms, vec![3, 1, -1, -3]);
        assert_eq!(HalfInt::ZERO.projections().count(), 1);
    }
}
