use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::means::{weighted_qam, WeightVector};
use crate::problems::InequalityProblem;

/// Smallest violation reported as a counterexample.
pub const VIOLATION_THRESHOLD: f64 = 1e-6;
/// Agreement required when a stored counterexample is re-evaluated.
pub const REPLAY_TOL: f64 = 1e-12;

/// `k+1` points and weights for which the weighted inequality fails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub points: Vec<Vec<f64>>,
    pub lambda: WeightVector,
    pub lhs: f64,
    pub rhs: f64,
    pub violation: f64,
}

/// Left and right side of the weighted inequality at the given points.
pub fn sides(p: &InequalityProblem, points: &[Vec<f64>], lambda: &WeightVector) -> Result<(f64, f64)> {
    let k = p.k();
    if points.is_empty() {
        return Err(Error::Arity {
            expected: k + 1,
            found: 0,
        });
    }
    if let Some(x) = points.iter().find(|x| x.len() != k) {
        return Err(Error::Arity {
            expected: k,
            found: x.len(),
        });
    }
    if let Some(x) = points.iter().find(|x| !p.contains(x)) {
        return Err(Error::Problem(format!("point {x:?} lies outside the box")));
    }
    let images: Vec<f64> = points.iter().map(|x| p.phi().eval(x)).collect();
    let lhs = weighted_qam(p.generator(0), &images, lambda)?;
    let means = (0..k)
        .map(|j| {
            let col: Vec<f64> = points.iter().map(|x| x[j]).collect();
            weighted_qam(p.generator(j + 1), &col, lambda)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((lhs, p.big_phi().eval(&means)))
}

impl Counterexample {
    /// Evaluates both sides; the result may have a nonpositive violation.
    pub fn evaluate(p: &InequalityProblem, points: Vec<Vec<f64>>, lambda: WeightVector) -> Result<Self> {
        let (lhs, rhs) = sides(p, &points, &lambda)?;
        Ok(Self {
            points,
            lambda,
            lhs,
            rhs,
            violation: lhs - rhs,
        })
    }

    /// Recomputes the stored sides and returns the fresh violation.
    pub fn replay(&self, p: &InequalityProblem) -> Result<f64> {
        let (lhs, rhs) = sides(p, &self.points, &self.lambda)?;
        let v = lhs - rhs;
        let close = |a: f64, b: f64| (a - b).abs() <= REPLAY_TOL * (1.0 + a.abs().max(b.abs()));
        if !close(lhs, self.lhs) || !close(rhs, self.rhs) || !close(v, self.violation) {
            return Err(Error::Inconsistency(format!(
                "stored counterexample does not replay: lhs {lhs} vs {}, rhs {rhs} vs {}",
                self.lhs, self.rhs
            )));
        }
        Ok(v)
    }

    pub fn is_significant(&self) -> bool {
        self.violation > VIOLATION_THRESHOLD
    }
}
