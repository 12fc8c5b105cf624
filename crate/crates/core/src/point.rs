//! Natural numbers used as domain points.
//!
//! Most points are machine words. Two other shapes occur: evens allocated to
//! very late machine indices overflow 64 bits, and the odd marker points
//! `2·3^e·5^s + c` have an exponent `e` that is itself a code of a program
//! and cannot be written out in binary. Markers stay symbolic above
//! [`MARKER_EXPONENT_LIMIT`] and are materialized below it, so every natural
//! has exactly one representation.
//!
//! Ordering is numeric among `Small` and `Big` values. Symbolic markers sort
//! after every written-out value and among themselves by `(e, s, offset)`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Marker exponents above this stay symbolic.
pub const MARKER_EXPONENT_LIMIT: u64 = 4096;
/// Marker step counts above this stay symbolic.
pub const MARKER_STEP_LIMIT: u64 = 100_000;

/// The symbolic natural `2·3^e·5^s + offset`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Marker {
    pub e: BigUint,
    pub s: u64,
    pub offset: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Point {
    Small(u64),
    /// Always greater than `u64::MAX`.
    Big(BigUint),
    Marker(Marker),
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("not a natural number: {0:?}")]
pub struct ParsePointError(pub String);

impl Point {
    pub fn from_big(n: BigUint) -> Self {
        match n.to_u64() {
            Some(v) => Point::Small(v),
            None => Point::Big(n),
        }
    }

    /// The natural `2·3^e·5^s + offset`, materialized when small enough.
    pub fn marker(e: BigUint, s: u64, offset: u64) -> Self {
        let small_e = e.to_u64().filter(|&v| v <= MARKER_EXPONENT_LIMIT);
        match small_e {
            Some(e_small) if s <= MARKER_STEP_LIMIT => {
                let v =
                    BigUint::from(2u32) * BigUint::from(3u32).pow(e_small as u32) * BigUint::from(5u32).pow(s as u32)
                        + BigUint::from(offset);
                Point::from_big(v)
            }
            _ => Point::Marker(Marker { e, s, offset }),
        }
    }

    pub fn as_u64(&self) -> Option<u64> {
        match self {
            Point::Small(v) => Some(*v),
            _ => None,
        }
    }

    /// Binary value, unless the point is symbolic.
    pub fn to_biguint(&self) -> Option<BigUint> {
        match self {
            Point::Small(v) => Some(BigUint::from(*v)),
            Point::Big(v) => Some(v.clone()),
            Point::Marker(_) => None,
        }
    }

    pub fn is_odd(&self) -> bool {
        match self {
            Point::Small(v) => v % 2 == 1,
            Point::Big(v) => v.is_odd(),
            // 2·3^e·5^s is even
            Point::Marker(m) => m.offset % 2 == 1,
        }
    }

    pub fn is_even(&self) -> bool {
        !self.is_odd()
    }

    /// Strict comparison against a machine word.
    pub fn greater_than(&self, bound: u64) -> bool {
        match self {
            Point::Small(v) => *v > bound,
            _ => true,
        }
    }

    /// True when the point lies in `lo..=hi`.
    pub fn within(&self, lo: u64, hi: u64) -> bool {
        matches!(self, Point::Small(v) if (lo..=hi).contains(v))
    }

    /// Recovers `(e, s)` with `self = 2·3^e·5^s + offset`, if such exist.
    pub fn marker_exponents(&self, offset: u64) -> Option<(BigUint, u64)> {
        match self {
            Point::Marker(m) => (m.offset == offset).then(|| (m.e.clone(), m.s)),
            _ => {
                let v = self.to_biguint()?;
                let off = BigUint::from(offset);
                if v <= off {
                    return None;
                }
                let y = v - off;
                if y.is_odd() {
                    return None;
                }
                let mut rest = y >> 1u32;
                let three = BigUint::from(3u32);
                let five = BigUint::from(5u32);
                let mut e = 0u64;
                while (&rest % &three).is_zero() {
                    rest /= &three;
                    e += 1;
                }
                let mut s = 0u64;
                while (&rest % &five).is_zero() {
                    rest /= &five;
                    s += 1;
                }
                rest.is_one().then(|| (BigUint::from(e), s))
            }
        }
    }
}

impl From<u64> for Point {
    fn from(v: u64) -> Self {
        Point::Small(v)
    }
}

impl From<BigUint> for Point {
    fn from(v: BigUint) -> Self {
        Point::from_big(v)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Small(v) => write!(f, "{v}"),
            Point::Big(v) => write!(f, "{v}"),
            Point::Marker(m) => write!(f, "2*3^{}*5^{}+{}", m.e, m.s, m.offset),
        }
    }
}

impl FromStr for Point {
    type Err = ParsePointError;

    fn from_str(raw: &str) -> Result<Self, Self::Err> {
        let s = raw.trim();
        let err = || ParsePointError(raw.to_string());
        if let Some(rest) = s.strip_prefix("2*3^") {
            let (e, rest) = rest.split_once("*5^").ok_or_else(err)?;
            let (steps, offset) = rest.split_once('+').ok_or_else(err)?;
            let e = BigUint::from_str(e).map_err(|_| err())?;
            let steps = steps.parse::<u64>().map_err(|_| err())?;
            let offset = offset.parse::<u64>().map_err(|_| err())?;
            return Ok(Point::marker(e, steps, offset));
        }
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        BigUint::from_str(s).map(Point::from_big).map_err(|_| err())
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Point::Small(v) => serializer.serialize_u64(*v),
            other => serializer.serialize_str(&other.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Num(v) => Ok(Point::Small(v)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_markers_materialize() {
        assert_eq!(Point::marker(BigUint::zero(), 1, 3), Point::Small(13));
        let p = Point::marker(BigUint::from(5000u32), 2, 3);
        assert!(matches!(p, Point::Marker(_)));
        assert!(p.is_odd());
        assert!(p.greater_than(u64::MAX));
    }

    #[test]
    fn exponents_round_trip() {
        for e in 0..6u64 {
            for s in 0..6u64 {
                let p = Point::marker(BigUint::from(e), s, 5);
                assert_eq!(p.marker_exponents(5), Some((BigUint::from(e), s)));
            }
        }
        assert_eq!(Point::Small(14).marker_exponents(3), None); // 11 odd
        assert_eq!(Point::Small(17).marker_exponents(3), None); // 14 = 2·7
        let huge = Point::marker(BigUint::from(10u32).pow(40), 7, 3);
        assert_eq!(huge.marker_exponents(3), Some((BigUint::from(10u32).pow(40), 7)));
        assert_eq!(huge.marker_exponents(5), None);
    }

    #[test]
    fn text_and_json_forms() {
        let big: Point = "36893488147419103232".parse().unwrap();
        assert!(matches!(big, Point::Big(_)));
        let m = Point::marker(BigUint::from(99_999u32), 4, 3);
        let back: Point = m.to_string().parse().unwrap();
        assert_eq!(back, m);
        let json = serde_json::to_string(&vec![Point::Small(3), big.clone(), m.clone()]).unwrap();
        let parsed: Vec<Point> = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed, vec![Point::Small(3), big, m]);
        assert!("-1".parse::<Point>().is_err());
    }
}
