use std::fmt;

use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeTuple, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Open interval `(lo, hi)` of the extended real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::Parameter(format!("empty interval ({lo}, {hi})")));
        }
        Ok(Self { lo, hi })
    }

    pub const fn real_line() -> Self {
        Self {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub const fn positive() -> Self {
        Self {
            lo: 0.0,
            hi: f64::INFINITY,
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x < self.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    /// `self ⊆ other` as open intervals.
    pub fn is_within(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn negated(&self) -> Self {
        Self {
            lo: -self.hi,
            hi: -self.lo,
        }
    }

    /// Width, or `None` for unbounded intervals.
    pub fn width(&self) -> Option<f64> {
        self.is_bounded().then(|| self.hi - self.lo)
    }

    /// Maps `s ∈ (0, 1)` onto the interval. Bounded intervals use the affine
    /// map, unbounded ends are compactified with `atanh`.
    pub fn from_unit(&self, s: f64) -> f64 {
        match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => {
                let x = self.lo + s * (self.hi - self.lo);
                x.clamp(self.lo, self.hi)
            }
            (true, false) => self.lo + s.atanh(),
            (false, true) => self.hi - (1.0 - s).atanh(),
            (false, false) => (2.0 * s - 1.0).atanh(),
        }
    }

    /// Inverse of [`Interval::from_unit`].
    pub fn to_unit(&self, x: f64) -> f64 {
        match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => (x - self.lo) / (self.hi - self.lo),
            (true, false) => (x - self.lo).tanh(),
            (false, true) => 1.0 - (self.hi - x).tanh(),
            (false, false) => 0.5 * (x.tanh() + 1.0),
        }
    }

    /// Interior point obtained from a unit coordinate kept away from the
    /// endpoints, so that it is always a member of the open interval.
    pub fn interior_point(&self, s: f64) -> f64 {
        let s = s.clamp(1e-9, 1.0 - 1e-9);
        let x = self.from_unit(s);
        if self.contains(x) {
            x
        } else {
            self.midpoint()
        }
    }

    pub fn midpoint(&self) -> f64 {
        self.from_unit(0.5)
    }

    /// `n` points spread over the interior with the compactifying map.
    pub fn grid(&self, n: usize, margin: f64) -> Vec<f64> {
        if n == 1 {
            return vec![self.midpoint()];
        }
        (0..n)
            .map(|i| {
                let s = margin + (1.0 - 2.0 * margin) * i as f64 / (n - 1) as f64;
                self.interior_point(s)
            })
            .collect()
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lo, self.hi)
    }
}

/// JSON encoding of an extended real: a number, or one of the strings
/// `"inf"`, `"+inf"`, `"-inf"`.
mod extended {
    use super::*;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if *x == f64::INFINITY {
            s.serialize_str("inf")
        } else if *x == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(*x)
        }
    }

    pub(super) struct ExtendedVisitor;

    impl Visitor<'_> for ExtendedVisitor {
        type Value = f64;

        fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            f.write_str("a number or \"inf\"/\"-inf\"")
        }

        fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<f64, E> {
            Ok(v)
        }

        fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<f64, E> {
            Ok(v as f64)
        }

        fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<f64, E> {
            match v.trim().to_ascii_lowercase().as_str() {
                "inf" | "+inf" | "infinity" | "+infinity" => Ok(f64::INFINITY),
                "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
                other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
            }
        }
    }

    pub(super) struct Extended(pub f64);

    impl Serialize for Extended {
        fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
            serialize(&self.0, s)
        }
    }

    impl<'de> Deserialize<'de> for Extended {
        fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
            d.deserialize_any(ExtendedVisitor).map(Extended)
        }
    }
}

impl Serialize for Interval {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut t = s.serialize_tuple(2)?;
        t.serialize_element(&extended::Extended(self.lo))?;
        t.serialize_element(&extended::Extended(self.hi))?;
        t.end()
    }
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct PairVisitor;

        impl<'de> Visitor<'de> for PairVisitor {
            type Value = Interval;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an interval [lo, hi] with lo < hi")
            }

            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> std::result::Result<Interval, A::Error> {
                let lo: extended::Extended = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(0, &self))?;
                let hi: extended::Extended = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(1, &self))?;
                if seq.next_element::<de::IgnoredAny>()?.is_some() {
                    return Err(de::Error::invalid_length(3, &self));
                }
                Interval::new(lo.0, hi.0).map_err(de::Error::custom)
            }
        }

        d.deserialize_seq(PairVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership_excludes_endpoints() {
        let i = Interval::new(-1.0, 1.0).unwrap();
        assert!(i.contains(0.0));
        assert!(!i.contains(1.0));
        assert!(!i.contains(-1.0));
        assert!(Interval::new(1.0, 1.0).is_err());
    }

    #[test]
    fn unit_map_round_trips_on_unbounded_intervals() {
        for iv in [
            Interval::real_line(),
            Interval::positive(),
            Interval::new(f64::NEG_INFINITY, 3.0).unwrap(),
            Interval::new(-2.0, 5.0).unwrap(),
        ] {
            for s in [0.01, 0.2, 0.5, 0.7, 0.99] {
                let x = iv.from_unit(s);
                assert!(iv.contains(x), "{iv} does not contain {x}");
                assert!((iv.to_unit(x) - s).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn json_accepts_infinite_endpoints() {
        let iv: Interval = serde_json::from_str(r#"[0, "inf"]"#).unwrap();
        assert_eq!(iv, Interval::positive());
        assert_eq!(serde_json::to_string(&iv).unwrap(), r#"[0.0,"inf"]"#);
        assert!(serde_json::from_str::<Interval>("[2, 1]").is_err());
    }
}
