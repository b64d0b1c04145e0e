use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::Interval;

/// Separately increasing function of `k` real variables.
pub trait Coupler: Send + Sync + fmt::Debug {
    fn arity(&self) -> usize;

    fn eval(&self, x: &[f64]) -> f64;

    /// Whether the coupler is strictly increasing in coordinate `j`.
    fn strictly_increasing_in(&self, j: usize) -> bool;

    fn is_continuous(&self) -> bool;

    /// Whether the box lies in the region where the coupler is defined.
    fn domain_ok(&self, bx: &[Interval]) -> bool;

    /// Convex hull of the image of the open box, when it is a nonempty open interval.
    fn image(&self, bx: &[Interval]) -> Option<Interval> {
        let lo: Vec<f64> = bx.iter().map(Interval::lo).collect();
        let hi: Vec<f64> = bx.iter().map(Interval::hi).collect();
        Interval::new(self.eval(&lo), self.eval(&hi)).ok()
    }

    fn as_builtin(&self) -> Option<&BuiltinCoupler> {
        None
    }

    fn is_separately_strictly_increasing(&self) -> bool {
        (0..self.arity()).all(|j| self.strictly_increasing_in(j))
    }
}

/// Closed family of couplers accepted in problem files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum CouplerKind {
    Sum,
    /// Positive orthant only.
    Product,
    Affine { c0: f64, coeffs: Vec<f64> },
    /// `(Σ x_j^r)^{1/r}` on the positive orthant.
    PowerSum { r: f64 },
    ArithmeticMean,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuiltinCoupler {
    kind: CouplerKind,
    arity: usize,
}

impl BuiltinCoupler {
    pub fn new(kind: CouplerKind, arity: usize) -> Result<Self> {
        if arity == 0 {
            return Err(Error::Parameter("coupler arity must be positive".into()));
        }
        match &kind {
            CouplerKind::Affine { c0, coeffs } => {
                if coeffs.len() != arity {
                    return Err(Error::Arity {
                        expected: arity,
                        found: coeffs.len(),
                    });
                }
                if !c0.is_finite() || coeffs.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
                    return Err(Error::Parameter(
                        "affine coupler needs a finite offset and positive coefficients".into(),
                    ));
                }
            }
            CouplerKind::PowerSum { r } => {
                if !r.is_finite() || *r == 0.0 {
                    return Err(Error::Parameter(format!("power_sum exponent {r} must be finite and nonzero")));
                }
            }
            _ => {}
        }
        Ok(Self { kind, arity })
    }

    pub fn kind(&self) -> &CouplerKind {
        &self.kind
    }

    fn positive_only(&self) -> bool {
        matches!(self.kind, CouplerKind::Product | CouplerKind::PowerSum { .. })
    }
}

impl Coupler for BuiltinCoupler {
    fn arity(&self) -> usize {
        self.arity
    }

    fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.arity);
        match &self.kind {
            CouplerKind::Sum => x.iter().sum(),
            CouplerKind::Product => x.iter().product(),
            CouplerKind::Affine { c0, coeffs } => c0 + coeffs.iter().zip(x).map(|(c, xi)| c * xi).sum::<f64>(),
            CouplerKind::PowerSum { r } => {
                if self.arity == 1 {
                    return x[0];
                }
                x.iter().map(|xi| xi.powf(*r)).sum::<f64>().powf(1.0 / r)
            }
            CouplerKind::ArithmeticMean => x.iter().sum::<f64>() / self.arity as f64,
        }
    }

    fn strictly_increasing_in(&self, j: usize) -> bool {
        j < self.arity
    }

    fn is_continuous(&self) -> bool {
        true
    }

    fn domain_ok(&self, bx: &[Interval]) -> bool {
        bx.len() == self.arity && (!self.positive_only() || bx.iter().all(|i| i.lo() >= 0.0))
    }

    fn as_builtin(&self) -> Option<&BuiltinCoupler> {
        Some(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluation_and_image() {
        let bx = [Interval::new(0.5, 4.0).unwrap(); 2];
        let sum = BuiltinCoupler::new(CouplerKind::Sum, 2).unwrap();
        assert_eq!(sum.eval(&[1.0, 2.0]), 3.0);
        assert_eq!(sum.image(&bx), Some(Interval::new(1.0, 8.0).unwrap()));

        let ps = BuiltinCoupler::new(CouplerKind::PowerSum { r: 2.0 }, 2).unwrap();
        assert!((ps.eval(&[3.0, 4.0]) - 5.0).abs() < 1e-15);
        let ps = BuiltinCoupler::new(CouplerKind::PowerSum { r: -1.0 }, 2).unwrap();
        assert!((ps.eval(&[2.0, 2.0]) - 1.0).abs() < 1e-15);
        assert!(ps.eval(&[2.0, 3.0]) < ps.eval(&[2.0, 4.0]));

        let prod = BuiltinCoupler::new(CouplerKind::Product, 2).unwrap();
        assert!(!prod.domain_ok(&[Interval::real_line(); 2]));
        assert_eq!(
            prod.image(&[Interval::positive(); 2]),
            Some(Interval::positive())
        );

        let aff = BuiltinCoupler::new(
            CouplerKind::Affine {
                c0: 1.0,
                coeffs: vec![2.0, 3.0],
            },
            2,
        )
        .unwrap();
        assert_eq!(aff.eval(&[1.0, 1.0]), 6.0);
        assert!(BuiltinCoupler::new(CouplerKind::Affine { c0: 0.0, coeffs: vec![1.0, 0.0] }, 2).is_err());
        assert!(BuiltinCoupler::new(CouplerKind::PowerSum { r: 0.0 }, 2).is_err());
    }

    #[test]
    fn json_form() {
        let k: CouplerKind = serde_json::from_str(r#"{"kind":"sum"}"#).unwrap();
        assert_eq!(k, CouplerKind::Sum);
        let k: CouplerKind = serde_json::from_str(r#"{"kind":"power_sum","params":{"r":0.5}}"#).unwrap();
        assert_eq!(k, CouplerKind::PowerSum { r: 0.5 });
        assert_eq!(
            serde_json::to_string(&CouplerKind::ArithmeticMean).unwrap(),
            r#"{"kind":"arithmetic_mean"}"#
        );
    }
}
