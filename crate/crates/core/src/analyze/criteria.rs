use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::counterexample::Counterexample;
use crate::error::Result;
use crate::funcspace::GeneratorFn;
use crate::means::WeightVector;
use crate::numeric::random_unit;
use crate::problems::InequalityProblem;

/// Slack allowed in `f_0(Φ(t)) ≥ f_0(φ(t))`.
pub const E2_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum E2Outcome {
    Holds { checked: usize, worst_gap: f64 },
    /// `f_0(Φ(t)) < f_0(φ(t)) − E2_TOL`.
    Violated { t: Vec<f64>, gap: f64 },
}

impl E2Outcome {
    pub fn holds(&self) -> bool {
        matches!(self, E2Outcome::Holds { .. })
    }
}

/// Checks `f_0(Φ(t)) ≥ Ψ(f(t))` on random points of the box.
///
/// Since `f_j^{-1}(f_j(t)) = t` for the generalized inverse, `Ψ(f(t))` is
/// `f_0(φ(t))`, and the compatibility `f_0(φ(x)) ≤ Ψ(f(x))` holds with
/// equality. Both are therefore covered by this single comparison.
pub fn check_e2(p: &InequalityProblem, samples: usize, seed: u64) -> Result<E2Outcome> {
    if p.couplers_coincide() {
        return Ok(E2Outcome::Holds {
            checked: 0,
            worst_gap: 0.0,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f0 = p.generator(0);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..samples {
        let t = p.to_point(&random_unit(&mut rng, p.k()));
        let gap = f0.eval(p.phi().eval(&t))? - f0.eval(p.big_phi().eval(&t))?;
        if gap > E2_TOL {
            return Ok(E2Outcome::Violated { t, gap });
        }
        worst = worst.max(gap);
    }
    Ok(E2Outcome::Holds {
        checked: samples,
        worst_gap: worst.max(0.0),
    })
}

/// Single-point counterexample from a violation of the e2 condition.
pub fn e2_counterexample(p: &InequalityProblem, t: &[f64]) -> Result<Counterexample> {
    let k = p.k();
    let mut weights = vec![0.0; k + 1];
    weights[0] = 1.0;
    Counterexample::evaluate(p, vec![t.to_vec(); k + 1], WeightVector::new(weights)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum JensenVerdict {
    /// `f'' ≡ 0`, or `f'' > 0` with `f'/f''` concave on the sample.
    Holds,
    Fails { x: f64, reason: String },
    Unsupported { reason: String },
}

const JENSEN_SAMPLES: usize = 2001;
const JENSEN_MARGIN: f64 = 1e-3;
const JENSEN_TOL: f64 = 1e-9;

/// Analytic criterion for the midpoint convexity of the quasi-arithmetic mean
/// generated by a single smooth piece: `f'' ≡ 0` or `f'' > 0` with `f'/f''`
/// concave.
pub fn jensen_criterion(f: &GeneratorFn) -> JensenVerdict {
    let [piece] = f.pieces() else {
        return JensenVerdict::Unsupported {
            reason: format!("{} pieces; the criterion needs a single smooth piece", f.pieces().len()),
        };
    };
    let xs = f.domain().grid(JENSEN_SAMPLES, JENSEN_MARGIN);
    let jets: Vec<(f64, f64)> = xs
        .iter()
        .map(|&x| {
            let (_, d1, d2) = piece.jet(x);
            (d1, d2)
        })
        .collect();
    if let Some(i) = jets.iter().position(|(d1, d2)| !d1.is_finite() || !d2.is_finite()) {
        return JensenVerdict::Unsupported {
            reason: format!("derivatives are not finite at {}", xs[i]),
        };
    }
    let scale = jets.iter().fold(0.0_f64, |acc, (d1, _)| acc.max(d1.abs())).max(f64::MIN_POSITIVE);
    if jets.iter().all(|(_, d2)| d2.abs() <= 1e-14 * scale) {
        return JensenVerdict::Holds;
    }
    if let Some(i) = jets.iter().position(|(_, d2)| !(*d2 > 0.0)) {
        return JensenVerdict::Fails {
            x: xs[i],
            reason: "f'' is not positive".into(),
        };
    }
    let r: Vec<f64> = jets.iter().map(|(d1, d2)| d1 / d2).collect();
    for i in 1..xs.len() - 1 {
        let (a, b, c) = (xs[i - 1], xs[i], xs[i + 1]);
        let chord = r[i - 1] + (r[i + 1] - r[i - 1]) * (b - a) / (c - a);
        let tol = JENSEN_TOL * (1.0 + r[i - 1].abs().max(r[i + 1].abs()));
        if r[i] < chord - tol {
            return JensenVerdict::Fails {
                x: b,
                reason: "f'/f'' is not concave".into(),
            };
        }
    }
    JensenVerdict::Holds
}
