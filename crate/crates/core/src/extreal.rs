//! Non-negative extended reals.
//!
//! Critical radii live in `[0, +inf]`. Infinity is a distinct variant rather
//! than a sentinel float so that it survives JSON round-trips.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    Infinite,
}

impl ExtReal {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            ExtReal::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, ExtReal::Infinite)
    }

    /// `1/x` with `1/0 = +inf`.
    pub fn recip_of(x: f64) -> Self {
        if x == 0.0 {
            ExtReal::Infinite
        } else {
            ExtReal::Finite(1.0 / x)
        }
    }

    /// Lossy conversion, mapping infinity to `f64::INFINITY` for plotting and comparisons.
    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::Finite(x) => x,
            ExtReal::Infinite => f64::INFINITY,
        }
    }

    pub fn scale(self, factor: f64) -> Self {
        match self {
            ExtReal::Finite(x) => ExtReal::Finite(x * factor),
            ExtReal::Infinite => ExtReal::Infinite,
        }
    }
}

impl From<f64> for ExtReal {
    fn from(x: f64) -> Self {
        if x.is_infinite() && x > 0.0 {
            ExtReal::Infinite
        } else {
            ExtReal::Finite(x)
        }
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (ExtReal::Infinite, ExtReal::Infinite) => Some(Ordering::Equal),
            (ExtReal::Infinite, _) => Some(Ordering::Greater),
            (_, ExtReal::Infinite) => Some(Ordering::Less),
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a.partial_cmp(b),
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(x) => write!(f, "{x}"),
            ExtReal::Infinite => write!(f, "+inf"),
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(x) => serializer.serialize_f64(*x),
            ExtReal::Infinite => serializer.serialize_str("+inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Num(x) => Ok(ExtReal::Finite(x)),
            Repr::Str(s) if s == "+inf" || s == "inf" => Ok(ExtReal::Infinite),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("not an extended real: {s}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_puts_infinity_last() {
        assert!(ExtReal::Infinite > ExtReal::Finite(1e300));
        assert!(ExtReal::Finite(0.5) < ExtReal::Finite(1.0));
        assert_eq!(ExtReal::recip_of(0.0), ExtReal::Infinite);
    }

    #[test]
    fn json_round_trip() {
        let v = vec![ExtReal::Finite(0.25), ExtReal::Infinite];
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"[0.25,"+inf"]"#);
        let back: Vec<ExtReal> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
    }
}
