use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::counterexample::Counterexample;
use crate::error::{Error, Result};
use crate::funcspace::Interval;
use crate::means::WeightVector;
use crate::numeric::random_unit;
use crate::problems::InequalityProblem;

/// Slack allowed in the midpoint inequality.
pub const MIDPOINT_TOL: f64 = 1e-9;
/// Largest Hessian eigenvalue accepted as nonpositive.
pub const EIGEN_TOL: f64 = 1e-6;
/// A midpoint deficit above this is reported as a witness.
const WITNESS_DEFICIT: f64 = 1e-6;
/// Unit-coordinate margin kept when sampling the domain of `Ψ`.
const SAMPLE_MARGIN: f64 = 1e-3;
const HESSIAN_MARGIN: f64 = 0.1;
/// Relative finite-difference step, as a fraction of the distance to the boundary.
const FD_STEP: f64 = 1e-3;
const PAIR_CHUNK: usize = 256;

/// A score together with the pair of points that produced it.
type Probe = (f64, Vec<f64>, Vec<f64>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcavityConfig {
    pub pairs: usize,
    /// Hessian grid nodes per coordinate.
    pub hessian_grid: usize,
    pub seed: u64,
}

impl Default for ConcavityConfig {
    fn default() -> Self {
        Self {
            pairs: 10_000,
            hessian_grid: 5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcavityStats {
    pub pairs: usize,
    pub worst_deficit: f64,
    pub hessian_points: usize,
    pub max_eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Concavity {
    Concave { stats: ConcavityStats },
    /// `(Ψ(u) + Ψ(v))/2 − Ψ((u+v)/2) = deficit > 0`.
    NotConcave { u: Vec<f64>, v: Vec<f64>, deficit: f64 },
    Unsupported { reason: String },
    /// Neither test is conclusive at the configured tolerances.
    Inconclusive { stats: ConcavityStats },
}

impl Concavity {
    pub fn is_concave(&self) -> bool {
        matches!(self, Concavity::Concave { .. })
    }
}

fn midpoint_deficit(p: &InequalityProblem, u: &[f64], v: &[f64]) -> Result<f64> {
    let m: Vec<f64> = u.iter().zip(v).map(|(a, b)| 0.5 * (a + b)).collect();
    Ok(0.5 * (p.psi_eval(u)? + p.psi_eval(v)?) - p.psi_eval(&m)?)
}

fn to_domain(dom: &[Interval], s: &[f64]) -> Vec<f64> {
    dom.iter().zip(s).map(|(iv, &si)| iv.interior_point(si)).collect()
}

/// Central second difference, one Richardson step.
fn hessian(p: &InequalityProblem, dom: &[Interval], u: &[f64]) -> Result<DMatrix<f64>> {
    let k = u.len();
    let steps: Vec<f64> = dom
        .iter()
        .zip(u)
        .map(|(iv, &x)| {
            let room = (x - iv.lo()).min(iv.hi() - x);
            let room = if room.is_finite() { room } else { 1.0 + x.abs() };
            FD_STEP * room
        })
        .collect();
    let eval = |shift: &[(usize, f64)]| -> Result<f64> {
        let mut y = u.to_vec();
        for &(j, d) in shift {
            y[j] += d;
        }
        p.psi_eval(&y)
    };
    let second = |i: usize, j: usize, scale: f64| -> Result<f64> {
        let (hi, hj) = (steps[i] * scale, steps[j] * scale);
        if i == j {
            Ok((eval(&[(i, hi)])? - 2.0 * eval(&[])? + eval(&[(i, -hi)])?) / (hi * hi))
        } else {
            Ok((eval(&[(i, hi), (j, hj)])? - eval(&[(i, hi), (j, -hj)])? - eval(&[(i, -hi), (j, hj)])?
                + eval(&[(i, -hi), (j, -hj)])?)
                / (4.0 * hi * hj))
        }
    };
    let mut h = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in i..k {
            let coarse = second(i, j, 1.0)?;
            let fine = second(i, j, 0.5)?;
            let v = (4.0 * fine - coarse) / 3.0;
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    Ok(h)
}

fn hessian_grid(n: usize, k: usize) -> Vec<Vec<f64>> {
    let axis: Vec<f64> = if n <= 1 {
        vec![0.5]
    } else {
        (0..n)
            .map(|i| HESSIAN_MARGIN + (1.0 - 2.0 * HESSIAN_MARGIN) * i as f64 / (n - 1) as f64)
            .collect()
    };
    let mut out = vec![vec![]];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<f64>| {
                axis.iter().map(move |&v| {
                    let mut q = prefix.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    out
}

/// Looks for a midpoint witness along the leading eigenvector.
fn eigen_probe(p: &InequalityProblem, dom: &[Interval], u: &[f64], dir: &[f64]) -> Option<(Vec<f64>, Vec<f64>, f64)> {
    let room = dom
        .iter()
        .zip(u)
        .zip(dir)
        .map(|((iv, &x), &d)| {
            if d.abs() < 1e-15 {
                f64::INFINITY
            } else {
                (x - iv.lo()).min(iv.hi() - x) / d.abs()
            }
        })
        .fold(f64::INFINITY, f64::min);
    let room = if room.is_finite() { room } else { 1.0 };
    for frac in [0.9, 0.5, 0.1, 0.01] {
        let s = room * frac;
        let a: Vec<f64> = u.iter().zip(dir).map(|(x, d)| x + s * d).collect();
        let b: Vec<f64> = u.iter().zip(dir).map(|(x, d)| x - s * d).collect();
        if let Ok(d) = midpoint_deficit(p, &a, &b) {
            if d > WITNESS_DEFICIT {
                return Some((a, b, d));
            }
        }
    }
    None
}

/// Numerical concavity check of the transfer function `Ψ` on the product of
/// the range hulls of `f_1..f_k`.
pub fn check_concavity(p: &InequalityProblem, cfg: &ConcavityConfig) -> Result<Concavity> {
    if let Some(j) = (1..=p.k()).find(|&j| !p.generator(j).is_continuous()) {
        return Ok(Concavity::Unsupported {
            reason: format!("generator {j} is discontinuous"),
        });
    }
    let k = p.k();
    let dom = p.psi_domain();
    let chunks = cfg.pairs.div_ceil(PAIR_CHUNK);
    let results: Vec<Result<Probe>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (c as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let n = PAIR_CHUNK.min(cfg.pairs - c * PAIR_CHUNK);
            let mut worst = (f64::NEG_INFINITY, vec![], vec![]);
            for _ in 0..n {
                let su: Vec<f64> = random_unit(&mut rng, k).iter().map(|s| squeeze(*s)).collect();
                let sv: Vec<f64> = random_unit(&mut rng, k).iter().map(|s| squeeze(*s)).collect();
                let (u, v) = (to_domain(&dom, &su), to_domain(&dom, &sv));
                let d = midpoint_deficit(p, &u, &v)?;
                if d > worst.0 || worst.1.is_empty() {
                    worst = (d, u, v);
                }
            }
            Ok(worst)
        })
        .collect();
    let mut worst = (f64::NEG_INFINITY, vec![], vec![]);
    for r in results {
        let r = r?;
        if r.0 > worst.0 || worst.1.is_empty() {
            worst = r;
        }
    }
    if !worst.0.is_finite() && cfg.pairs > 0 {
        return Err(Error::Solver("transfer function produced a non-finite midpoint deficit".into()));
    }
    if worst.0 > WITNESS_DEFICIT {
        return Ok(Concavity::NotConcave {
            u: worst.1,
            v: worst.2,
            deficit: worst.0,
        });
    }

    let grid = hessian_grid(cfg.hessian_grid, k);
    let eigen: Vec<Result<Probe>> = grid
        .par_iter()
        .map(|s| {
            let u = to_domain(&dom, s);
            let h = hessian(p, &dom, &u)?;
            let eig = SymmetricEigen::new(h);
            let (idx, &top) = eig
                .eigenvalues
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .expect("nonempty spectrum");
            let dir = eig.eigenvectors.column(idx).iter().copied().collect();
            Ok((top, u, dir))
        })
        .collect();
    let mut max_eigenvalue = f64::NEG_INFINITY;
    let mut leading = None;
    for r in eigen {
        let (top, u, dir) = r?;
        if !top.is_finite() {
            return Err(Error::Solver(format!("non-finite Hessian eigenvalue at {u:?}")));
        }
        if top > max_eigenvalue {
            max_eigenvalue = top;
            leading = Some((u, dir));
        }
    }
    let stats = ConcavityStats {
        pairs: cfg.pairs,
        worst_deficit: worst.0.max(0.0),
        hessian_points: grid.len(),
        max_eigenvalue,
    };
    if worst.0 <= MIDPOINT_TOL && max_eigenvalue <= EIGEN_TOL {
        return Ok(Concavity::Concave { stats });
    }
    if max_eigenvalue > EIGEN_TOL {
        if let Some((u, dir)) = leading {
            if let Some((a, b, d)) = eigen_probe(p, &dom, &u, &dir) {
                return Ok(Concavity::NotConcave { u: a, v: b, deficit: d });
            }
        }
    }
    Ok(Concavity::Inconclusive { stats })
}

/// Maps a unit draw into `[SAMPLE_MARGIN, 1 − SAMPLE_MARGIN]`.
fn squeeze(s: f64) -> f64 {
    SAMPLE_MARGIN + (1.0 - 2.0 * SAMPLE_MARGIN) * s
}

/// Turns a midpoint witness of non-concavity into a counterexample for `φ = Φ`.
///
/// The two rows are `f^{-1}(u)` and `f^{-1}(v)` with equal weights; the
/// remaining `k − 1` rows carry zero weight.
pub fn concavity_counterexample(p: &InequalityProblem, u: &[f64], v: &[f64]) -> Result<Counterexample> {
    if !p.couplers_coincide() {
        return Err(Error::Precondition(
            "a concavity witness only refutes the inequality when φ = Φ".into(),
        ));
    }
    let k = p.k();
    let back = |w: &[f64]| -> Result<Vec<f64>> {
        w.iter()
            .enumerate()
            .map(|(j, &wj)| p.generator(j + 1).inv(wj))
            .collect()
    };
    let (x1, x2) = (back(u)?, back(v)?);
    let mut points = vec![x1.clone(), x2];
    let mut weights = vec![0.5, 0.5];
    while points.len() < k + 1 {
        points.push(x1.clone());
        weights.push(0.0);
    }
    Counterexample::evaluate(p, points, WeightVector::new(weights)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::{GeneratorFn, Piece, Primitive};
    use crate::problems::{BuiltinCoupler, CouplerKind};
    use std::sync::Arc;

    fn power(p: f64) -> Piece {
        Primitive::power(p).unwrap().into()
    }

    fn minkowski(p: f64) -> InequalityProblem {
        let pos = Interval::new(0.5, 4.0).unwrap();
        let f = GeneratorFn::simple(power(p), Interval::positive()).unwrap();
        let sum = Arc::new(BuiltinCoupler::new(CouplerKind::Sum, 2).unwrap());
        InequalityProblem::new(2, vec![f.clone(), f.clone(), f], sum.clone(), sum, vec![pos, pos]).unwrap()
    }

    fn cfg() -> ConcavityConfig {
        ConcavityConfig {
            pairs: 2000,
            ..ConcavityConfig::default()
        }
    }

    #[test]
    fn minkowski_transfer_is_concave_for_p_at_least_one() {
        for p in [1.0, 2.0, 3.0] {
            let c = check_concavity(&minkowski(p), &cfg()).unwrap();
            assert!(c.is_concave(), "p = {p}: {c:?}");
        }
    }

    #[test]
    fn minkowski_half_has_a_witness_that_becomes_a_counterexample() {
        let p = minkowski(0.5);
        match check_concavity(&p, &cfg()).unwrap() {
            Concavity::NotConcave { u, v, deficit } => {
                assert!(deficit > WITNESS_DEFICIT);
                let cex = concavity_counterexample(&p, &u, &v).unwrap();
                assert!(cex.is_significant(), "{cex:?}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn grid_covers_the_tensor_product() {
        assert_eq!(hessian_grid(3, 2).len(), 9);
        assert_eq!(hessian_grid(1, 3), vec![vec![0.5; 3]]);
    }
}
