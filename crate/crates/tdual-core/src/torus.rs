//! Exact circle arithmetic.
//!
//! Phases live in Q/Z, written additively: the fraction `k/n` stands for the
//! unit complex number `exp(2*pi*i*k/n)`. Multiplying phases is adding
//! fractions mod 1, so every computation in the crate that "multiplies roots
//! of unity" is integer arithmetic here.

use num_integer::Integer;
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, Mul, Neg, Sub};

/// Element of Q/Z as a reduced fraction in [0,1).
///
/// Invariant: 0 <= num < den, gcd(num, den) = 1, den >= 1.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tor {
    num: i64,
    den: i64,
}

impl Tor {
    pub const ZERO: Tor = Tor { num: 0, den: 1 };

    /// Reduce `num/den` mod 1. Panics on a zero denominator.
    pub fn new(num: i64, den: i64) -> Tor {
        assert!(den != 0, "torus element with zero denominator");
        let (mut num, mut den) = if den < 0 { (-num, -den) } else { (num, den) };
        let g = num.gcd(&den);
        if g > 1 {
            num /= g;
            den /= g;
        }
        num = num.rem_euclid(den);
        Tor { num, den }
    }

    pub fn zero() -> Tor {
        Tor::ZERO
    }

    pub fn is_zero(self) -> bool {
        self.num == 0
    }

    pub fn numer(self) -> i64 {
        self.num
    }

    pub fn denom(self) -> i64 {
        self.den
    }

    /// Order as an element of Q/Z: the least n >= 1 with n*self = 0.
    pub fn order(self) -> i64 {
        self.den
    }

    /// The fraction k/level.
    pub fn from_level(k: i64, level: u32) -> Tor {
        Tor::new(k, i64::from(level))
    }

    /// Writes self as k/level if the level admits it.
    pub fn as_level(self, level: u32) -> Option<i64> {
        let level = i64::from(level);
        if level % self.den == 0 {
            Some(self.num * (level / self.den))
        } else {
            None
        }
    }

    /// Integer multiple n*self.
    pub fn scaled(self, n: i64) -> Tor {
        // num may overflow only for astronomically large n; inputs here are table indices.
        Tor::new(self.num.checked_mul(n.rem_euclid(self.den)).expect("torus scale overflow"), self.den)
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl Add for Tor {
    type Output = Tor;
    fn add(self, rhs: Tor) -> Tor {
        let den = self.den.lcm(&rhs.den);
        Tor::new(self.num * (den / self.den) + rhs.num * (den / rhs.den), den)
    }
}

impl Sub for Tor {
    type Output = Tor;
    fn sub(self, rhs: Tor) -> Tor {
        self + (-rhs)
    }
}

impl Neg for Tor {
    type Output = Tor;
    fn neg(self) -> Tor {
        Tor::new(-self.num, self.den)
    }
}

/// n * t, matching `scaled`.
impl Mul<Tor> for i64 {
    type Output = Tor;
    fn mul(self, rhs: Tor) -> Tor {
        rhs.scaled(self)
    }
}

impl Sum for Tor {
    fn sum<I: Iterator<Item = Tor>>(iter: I) -> Tor {
        iter.fold(Tor::ZERO, Add::add)
    }
}

impl fmt::Display for Tor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl fmt::Debug for Tor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl Serialize for Tor {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Tor {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Tor, D::Error> {
        let s = String::deserialize(deserializer)?;
        parse_tor(&s).map_err(de::Error::custom)
    }
}

/// Parses "p/q" (or a bare integer, which is 0 mod 1).
pub fn parse_tor(s: &str) -> Result<Tor, String> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let p: i64 = p.trim().parse().map_err(|_| format!("bad numerator in {s:?}"))?;
            let q: i64 = q.trim().parse().map_err(|_| format!("bad denominator in {s:?}"))?;
            if q == 0 {
                return Err(format!("zero denominator in {s:?}"));
            }
            Ok(Tor::new(p, q))
        }
        None => {
            let p: i64 = s.parse().map_err(|_| format!("bad rational {s:?}"))?;
            Ok(Tor::new(p, 1))
        }
    }
}

/// Least common level of a family of torus values.
pub fn common_level<I: IntoIterator<Item = Tor>>(values: I) -> i64 {
    values.into_iter().fold(1i64, |l, t| l.lcm(&t.denom()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduction_and_range() {
        assert_eq!(Tor::new(5, 4), Tor::new(1, 4));
        assert_eq!(Tor::new(-1, 4), Tor::new(3, 4));
        assert_eq!(Tor::new(2, 4), Tor::new(1, 2));
        assert_eq!(Tor::new(7, -2), Tor::new(1, 2));
        assert!(Tor::new(4, 2).is_zero());
    }

    #[test]
    fn group_laws() {
        let vals = [Tor::new(1, 3), Tor::new(3, 4), Tor::new(5, 6), Tor::ZERO];
        for a in vals {
            assert!((a - a).is_zero());
            assert_eq!(a + Tor::ZERO, a);
            for b in vals {
                assert_eq!(a + b, b + a);
                for c in vals {
                    assert_eq!((a + b) + c, a + (b + c));
                }
            }
        }
        assert_eq!(Tor::new(1, 2) + Tor::new(1, 2), Tor::ZERO);
        assert_eq!(Tor::new(1, 3) + Tor::new(1, 6), Tor::new(1, 2));
    }

    #[test]
    fn levels() {
        assert_eq!(Tor::from_level(3, 12), Tor::new(1, 4));
        assert_eq!(Tor::new(1, 4).as_level(12), Some(3));
        assert_eq!(Tor::new(1, 5).as_level(12), None);
        assert_eq!(Tor::new(0, 1).as_level(7), Some(0));
        assert_eq!(common_level([Tor::new(1, 4), Tor::new(1, 6)]), 12);
    }

    #[test]
    fn orders_and_scaling() {
        assert_eq!(Tor::new(3, 8).order(), 8);
        assert_eq!(Tor::new(1, 6).scaled(4), Tor::new(2, 3));
        assert_eq!(5 * Tor::new(1, 5), Tor::ZERO);
    }

    #[test]
    fn serde_round_trip() {
        let t = Tor::new(7, 12);
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(s, "\"7/12\"");
        let back: Tor = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
        assert_eq!(parse_tor("3").unwrap(), Tor::ZERO);
        assert!(parse_tor("1/0").is_err());
    }
}
