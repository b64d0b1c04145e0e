//! Closed family of analytic, strictly increasing building blocks.
//!
//! A [`Piece`] is a chain of [`Stage`]s applied left to right. Chains arise
//! from composition and reflection; user input normally supplies single
//! primitives.

use serde::{Deserialize, Serialize};

use super::Interval;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PrimitiveRepr", into = "PrimitiveRepr")]
pub enum Primitive {
    /// `slope·x + intercept`, `slope > 0`.
    Affine { slope: f64, intercept: f64 },
    /// `sign(p)·x^p` on `(0, ∞)`, `p ≠ 0`.
    Power { exponent: f64 },
    /// `sign(c)·exp(c·x)`, `c ≠ 0`.
    Exponential { rate: f64 },
    /// `log_b(x)` on `(0, ∞)`, `b > 1`.
    Logarithm { base: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
enum PrimitiveRepr {
    Affine {
        slope: f64,
        #[serde(default)]
        intercept: f64,
    },
    Power {
        exponent: f64,
    },
    Exponential {
        rate: f64,
    },
    Logarithm {
        #[serde(default = "euler")]
        base: f64,
    },
}

fn euler() -> f64 {
    std::f64::consts::E
}

impl TryFrom<PrimitiveRepr> for Primitive {
    type Error = Error;

    fn try_from(r: PrimitiveRepr) -> Result<Self> {
        match r {
            PrimitiveRepr::Affine { slope, intercept } => Primitive::affine(slope, intercept),
            PrimitiveRepr::Power { exponent } => Primitive::power(exponent),
            PrimitiveRepr::Exponential { rate } => Primitive::exponential(rate),
            PrimitiveRepr::Logarithm { base } => Primitive::logarithm(base),
        }
    }
}

impl From<Primitive> for PrimitiveRepr {
    fn from(p: Primitive) -> Self {
        match p {
            Primitive::Affine { slope, intercept } => PrimitiveRepr::Affine { slope, intercept },
            Primitive::Power { exponent } => PrimitiveRepr::Power { exponent },
            Primitive::Exponential { rate } => PrimitiveRepr::Exponential { rate },
            Primitive::Logarithm { base } => PrimitiveRepr::Logarithm { base },
        }
    }
}

impl Primitive {
    pub fn affine(slope: f64, intercept: f64) -> Result<Self> {
        if !(slope > 0.0 && slope.is_finite()) || !intercept.is_finite() {
            return Err(Error::Parameter(format!(
                "affine primitive needs a positive finite slope, got slope={slope}, intercept={intercept}"
            )));
        }
        Ok(Primitive::Affine { slope, intercept })
    }

    pub fn identity() -> Self {
        Primitive::Affine {
            slope: 1.0,
            intercept: 0.0,
        }
    }

    pub fn power(exponent: f64) -> Result<Self> {
        if exponent == 0.0 || !exponent.is_finite() {
            return Err(Error::Parameter(format!(
                "power primitive needs a finite nonzero exponent, got {exponent}"
            )));
        }
        Ok(Primitive::Power { exponent })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if rate == 0.0 || !rate.is_finite() {
            return Err(Error::Parameter(format!(
                "exponential primitive needs a finite nonzero rate, got {rate}"
            )));
        }
        Ok(Primitive::Exponential { rate })
    }

    pub fn logarithm(base: f64) -> Result<Self> {
        if !(base > 1.0 && base.is_finite()) {
            return Err(Error::Parameter(format!(
                "logarithm primitive needs a finite base > 1, got {base}"
            )));
        }
        Ok(Primitive::Logarithm { base })
    }

    pub fn natural_domain(&self) -> Interval {
        match self {
            Primitive::Affine { .. } | Primitive::Exponential { .. } => Interval::real_line(),
            Primitive::Power { .. } | Primitive::Logarithm { .. } => Interval::positive(),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Primitive::Affine { slope, intercept } => slope * x + intercept,
            Primitive::Power { exponent } => {
                if exponent == 2.0 {
                    x * x
                } else if exponent == 0.5 {
                    x.sqrt()
                } else {
                    exponent.signum() * x.powf(exponent)
                }
            }
            Primitive::Exponential { rate } => rate.signum() * (rate * x).exp(),
            Primitive::Logarithm { base } => log_base(x, base),
        }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        match *self {
            Primitive::Affine { slope, .. } => slope,
            Primitive::Power { exponent } => exponent.abs() * x.powf(exponent - 1.0),
            Primitive::Exponential { rate } => rate.abs() * (rate * x).exp(),
            Primitive::Logarithm { base } => 1.0 / (x * base.ln()),
        }
    }

    pub fn deriv2(&self, x: f64) -> f64 {
        match *self {
            Primitive::Affine { .. } => 0.0,
            Primitive::Power { exponent } => {
                exponent.abs() * (exponent - 1.0) * x.powf(exponent - 2.0)
            }
            Primitive::Exponential { rate } => rate.abs() * rate * (rate * x).exp(),
            Primitive::Logarithm { base } => -1.0 / (x * x * base.ln()),
        }
    }

    pub fn inverse(&self, u: f64) -> f64 {
        match *self {
            Primitive::Affine { slope, intercept } => (u - intercept) / slope,
            Primitive::Power { exponent } => {
                if exponent == 2.0 {
                    u.sqrt()
                } else if exponent == 0.5 {
                    u * u
                } else {
                    (exponent.signum() * u).powf(1.0 / exponent)
                }
            }
            Primitive::Exponential { rate } => (rate.signum() * u).ln() / rate,
            Primitive::Logarithm { base } => {
                if base == std::f64::consts::E {
                    u.exp()
                } else {
                    (u * base.ln()).exp()
                }
            }
        }
    }
}

fn log_base(x: f64, base: f64) -> f64 {
    if base == std::f64::consts::E {
        x.ln()
    } else if base == 2.0 {
        x.log2()
    } else if base == 10.0 {
        x.log10()
    } else {
        x.ln() / base.ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Stage {
    Map(Primitive),
    Negate(NegateTag),
}

/// Serialized as `{"kind": "negate"}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename = "negate", rename_all = "snake_case")]
pub enum NegateTag {
    Negate,
}

impl Stage {
    pub const NEGATE: Stage = Stage::Negate(NegateTag::Negate);

    fn is_negate(&self) -> bool {
        matches!(self, Stage::Negate(_))
    }

    fn eval(&self, x: f64) -> f64 {
        match self {
            Stage::Map(p) => p.eval(x),
            Stage::Negate(_) => -x,
        }
    }

    fn inverse(&self, u: f64) -> f64 {
        match self {
            Stage::Map(p) => p.inverse(u),
            Stage::Negate(_) => -u,
        }
    }

    fn derivs(&self, x: f64) -> (f64, f64) {
        match self {
            Stage::Map(p) => (p.deriv(x), p.deriv2(x)),
            Stage::Negate(_) => (-1.0, 0.0),
        }
    }

    /// Image of an open interval; the interval must sit inside the natural domain.
    fn image(&self, iv: Interval) -> Option<Interval> {
        match self {
            Stage::Map(p) => {
                if !iv.is_within(&p.natural_domain()) {
                    return None;
                }
                Interval::new(p.eval(iv.lo()), p.eval(iv.hi())).ok()
            }
            Stage::Negate(_) => Some(iv.negated()),
        }
    }
}

/// A continuous strictly increasing map built as a chain of stages.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    stages: Vec<Stage>,
}

impl From<Primitive> for Piece {
    fn from(p: Primitive) -> Self {
        Piece {
            stages: vec![Stage::Map(p)],
        }
    }
}

impl Piece {
    pub fn chain(stages: Vec<Stage>) -> Result<Self> {
        let stages = normalize(stages);
        if stages.is_empty() {
            return Ok(Primitive::identity().into());
        }
        if stages.iter().filter(|s| s.is_negate()).count() % 2 == 1 {
            return Err(Error::Parameter(
                "chain with an odd number of negations is decreasing".into(),
            ));
        }
        Ok(Piece { stages })
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    /// Single primitive, if the chain has length one.
    pub fn as_primitive(&self) -> Option<&Primitive> {
        match self.stages.as_slice() {
            [Stage::Map(p)] => Some(p),
            _ => None,
        }
    }

    /// `self` followed by `outer`.
    pub fn then(&self, outer: &Piece) -> Piece {
        let mut stages = self.stages.clone();
        stages.extend_from_slice(&outer.stages);
        Piece {
            stages: normalize(stages),
        }
    }

    /// `x ↦ -self(-x)`.
    pub fn reflected(&self) -> Piece {
        let mut stages = Vec::with_capacity(self.stages.len() + 2);
        stages.push(Stage::NEGATE);
        stages.extend_from_slice(&self.stages);
        stages.push(Stage::NEGATE);
        Piece {
            stages: normalize(stages),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.stages.iter().fold(x, |acc, s| s.eval(acc))
    }

    pub fn inverse(&self, u: f64) -> f64 {
        self.stages.iter().rev().fold(u, |acc, s| s.inverse(acc))
    }

    /// Value, first and second derivative by the chain rule.
    pub fn jet(&self, x: f64) -> (f64, f64, f64) {
        self.stages.iter().fold((x, 1.0, 0.0), |(g, g1, g2), s| {
            let (h1, h2) = s.derivs(g);
            (s.eval(g), h1 * g1, h2 * g1 * g1 + h1 * g2)
        })
    }

    /// Image of `iv`, or the index of the first stage whose natural domain
    /// does not contain the propagated interval.
    pub fn image(&self, iv: Interval) -> std::result::Result<Interval, usize> {
        let mut cur = iv;
        for (i, s) in self.stages.iter().enumerate() {
            cur = s.image(cur).ok_or(i)?;
        }
        Ok(cur)
    }
}

fn normalize(stages: Vec<Stage>) -> Vec<Stage> {
    let mut out: Vec<Stage> = Vec::with_capacity(stages.len());
    for s in stages {
        if s.is_negate() && out.last().is_some_and(Stage::is_negate) {
            out.pop();
        } else {
            out.push(s);
        }
    }
    out
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PieceRepr {
    Single(Primitive),
    Chain(ChainRepr),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename = "chain")]
enum ChainRepr {
    #[serde(rename = "chain")]
    Chain(Vec<Stage>),
}

impl Serialize for Piece {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.as_primitive() {
            Some(p) => PieceRepr::Single(*p),
            None => PieceRepr::Chain(ChainRepr::Chain(self.stages.clone())),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Piece {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(d)?;
        let is_chain = value.get("kind").and_then(|k| k.as_str()) == Some("chain");
        if is_chain {
            let ChainRepr::Chain(stages) =
                serde_json::from_value(value).map_err(serde::de::Error::custom)?;
            Piece::chain(stages).map_err(serde::de::Error::custom)
        } else {
            let p: Primitive = serde_json::from_value(value).map_err(serde::de::Error::custom)?;
            Ok(p.into())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pieces() -> Vec<(Piece, Interval)> {
        vec![
            (Primitive::identity().into(), Interval::new(-3.0, 3.0).unwrap()),
            (Primitive::affine(2.5, -1.0).unwrap().into(), Interval::new(-3.0, 3.0).unwrap()),
            (Primitive::power(2.0).unwrap().into(), Interval::new(0.1, 4.0).unwrap()),
            (Primitive::power(-1.5).unwrap().into(), Interval::new(0.1, 4.0).unwrap()),
            (Primitive::power(0.3).unwrap().into(), Interval::new(0.1, 4.0).unwrap()),
            (Primitive::exponential(1.0).unwrap().into(), Interval::new(-2.0, 2.0).unwrap()),
            (Primitive::exponential(-0.7).unwrap().into(), Interval::new(-2.0, 2.0).unwrap()),
            (Primitive::logarithm(10.0).unwrap().into(), Interval::new(0.1, 40.0).unwrap()),
            (
                Piece::from(Primitive::power(3.0).unwrap()).reflected(),
                Interval::new(-4.0, -0.1).unwrap(),
            ),
        ]
    }

    #[test]
    fn degenerate_parameters_are_rejected() {
        assert!(Primitive::power(0.0).is_err());
        assert!(Primitive::affine(0.0, 1.0).is_err());
        assert!(Primitive::affine(-1.0, 1.0).is_err());
        assert!(Primitive::exponential(0.0).is_err());
        assert!(Primitive::logarithm(1.0).is_err());
        assert!(Piece::chain(vec![Stage::NEGATE]).is_err());
    }

    #[test]
    fn pieces_are_increasing_with_exact_inverses() {
        for (p, iv) in pieces() {
            let xs = iv.grid(200, 0.01);
            for w in xs.windows(2) {
                assert!(p.eval(w[0]) < p.eval(w[1]), "{p:?} not increasing at {}", w[0]);
            }
            for &x in &xs {
                let back = p.inverse(p.eval(x));
                assert!((back - x).abs() <= 1e-12 * (1.0 + x.abs()), "{p:?}: {back} vs {x}");
            }
        }
    }

    #[test]
    fn analytic_derivatives_match_central_differences() {
        for (p, iv) in pieces() {
            for x in iv.grid(17, 0.1) {
                let (_, d1, d2) = p.jet(x);
                let h = 1e-4 * (1.0 + x.abs());
                let fd1 = (p.eval(x + h) - p.eval(x - h)) / (2.0 * h);
                let fd2 = (p.eval(x + h) - 2.0 * p.eval(x) + p.eval(x - h)) / (h * h);
                assert!((d1 - fd1).abs() <= 1e-6 * (1.0 + d1.abs()), "{p:?} d1 at {x}");
                assert!((d2 - fd2).abs() <= 1e-3 * (1.0 + d2.abs()), "{p:?} d2 at {x}");
            }
        }
    }

    #[test]
    fn double_reflection_cancels() {
        let p: Piece = Primitive::logarithm(2.0).unwrap().into();
        assert_eq!(p.reflected().reflected(), p);
    }

    #[test]
    fn image_rejects_stage_outside_natural_domain() {
        let p: Piece = Primitive::power(2.0).unwrap().into();
        assert_eq!(p.image(Interval::new(-1.0, 1.0).unwrap()), Err(0));
        let img = p.image(Interval::new(0.0, 3.0).unwrap()).unwrap();
        assert_eq!((img.lo(), img.hi()), (0.0, 9.0));
    }

    #[test]
    fn json_forms() {
        let p: Piece = serde_json::from_str(r#"{"kind":"power","params":{"exponent":2}}"#).unwrap();
        assert_eq!(p.as_primitive(), Some(&Primitive::Power { exponent: 2.0 }));
        let r = p.reflected();
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(
            s,
            r#"{"kind":"chain","params":[{"kind":"negate"},{"kind":"power","params":{"exponent":2.0}},{"kind":"negate"}]}"#
        );
        let back: Piece = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
        assert!(serde_json::from_str::<Piece>(r#"{"kind":"power","params":{"exponent":0}}"#).is_err());
    }
}
