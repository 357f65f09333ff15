use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A real number or `+∞`.
///
/// Distances to empty sets, envelope values outside the admissible region and
/// ratios with an empty preimage all take the value `+∞`. Variants are
/// declared in order so the derived `PartialOrd` puts `Infinity` above every
/// finite value.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub enum ExtReal {
    Finite(f64),
    Infinity,
}

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal::Finite(0.0);

    /// Maps `f64::INFINITY` to [`ExtReal::Infinity`]. NaN and `-∞` are
    /// rejected with a panic since they never denote a valid value here.
    pub fn from_f64(v: f64) -> Self {
        assert!(!v.is_nan() && v != f64::NEG_INFINITY, "invalid ExtReal {v}");
        if v == f64::INFINITY {
            ExtReal::Infinity
        } else {
            ExtReal::Finite(v)
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::Infinity => None,
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::Finite(v) => v,
            ExtReal::Infinity => f64::INFINITY,
        }
    }

    pub fn max(self, other: ExtReal) -> ExtReal {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: ExtReal) -> ExtReal {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl From<f64> for ExtReal {
    fn from(v: f64) -> Self {
        ExtReal::from_f64(v)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::Infinity => f.write_str("+inf"),
        }
    }
}

// JSON has no infinity literal, so `+∞` travels as the string "+inf".
impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(v) => s.serialize_f64(*v),
            ExtReal::Infinity => s.serialize_str("+inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) if v.is_finite() => Ok(ExtReal::Finite(v)),
            Raw::Str(s) if s == "+inf" || s == "inf" => Ok(ExtReal::Infinity),
            _ => Err(serde::de::Error::custom("expected a finite number or \"+inf\"")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinity_dominates() {
        assert!(ExtReal::Infinity > ExtReal::Finite(1e300));
        assert!(ExtReal::Finite(1.0) < ExtReal::Finite(2.0));
        assert_eq!(ExtReal::Finite(3.0).max(ExtReal::Infinity), ExtReal::Infinity);
        assert_eq!(ExtReal::Finite(3.0).min(ExtReal::Infinity), ExtReal::Finite(3.0));
    }

    #[test]
    fn json_round_trip() {
        let v = vec![ExtReal::Finite(0.25), ExtReal::Infinity];
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"[0.25,"+inf"]"#);
        let back: Vec<ExtReal> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
    }
}
