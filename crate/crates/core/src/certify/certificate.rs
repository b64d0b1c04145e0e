use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lp::{lp_feasible, Feasibility};
use crate::analyze::Counterexample;
use crate::error::{Error, Result};
use crate::means::WeightVector;
use crate::numeric::{hill_climb, random_unit, UNIT_MARGIN};
use crate::problems::{gamma_density, InequalityProblem};

/// Distance (relative) from a jump of `f_0` below which `Φ(t)` is not treated as a continuity point.
const JUMP_CLEARANCE: f64 = 1e-9;
/// Unit-coordinate offsets of the stencil rows around a base point.
const STENCIL: [f64; 5] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5];
/// Bounding step used by [`certify_at`].
const DEFAULT_BOUND_STEP: f64 = 0.05;
const CLIMB_STARTS: usize = 4;
/// Multiples of `u − s` added along the line through the base point `s` and a violated point `u`.
const LINE_STEPS: [f64; 6] = [-1.0, -0.5, -0.1, -0.01, 0.1, 0.5];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyConfig {
    /// Grid points per coordinate.
    pub grid: usize,
    /// Random rows shared by all base points, and fresh points per refinement round.
    pub sample: usize,
    pub max_rounds: usize,
    pub residual_tol: f64,
    pub seed: u64,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self {
            grid: 5,
            sample: 300,
            max_rounds: 50,
            residual_tol: 1e-9,
            seed: 0,
        }
    }
}

/// Coefficients `a(t) ≥ 0` at one base point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateEntry {
    pub t: Vec<f64>,
    pub coeffs: Vec<f64>,
    pub residual: f64,
}

/// Weights proving a finite constraint family at `base` infeasible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarkasWitness {
    pub points: Vec<Vec<f64>>,
    pub lambda: WeightVector,
    pub base: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AtOutcome {
    Entry(CertificateEntry),
    Witness(FarkasWitness),
}

/// Table of base points and coefficient vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub grid: Vec<Vec<f64>>,
    pub coeffs: Vec<Vec<f64>>,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CertificateOutcome {
    Certified { certificate: Certificate },
    Refuted { counterexample: Counterexample },
    /// Base points in `unresolved` had no clean entry after refinement.
    Undecided {
        certificate: Certificate,
        unresolved: Vec<Vec<f64>>,
        reason: String,
    },
}

/// `f_j(t_j)` and `f_0(Φ(t))` at a base point in `Γ`.
struct Base {
    t: Vec<f64>,
    ft: Vec<f64>,
    f0t: f64,
}

fn base(p: &InequalityProblem, t: &[f64]) -> Result<Base> {
    if !p.contains(t) {
        return Err(Error::Precondition(format!("base point {t:?} lies outside the box")));
    }
    let y = p.big_phi().eval(t);
    let f0 = p.generator(0);
    if !f0.domain().contains(y) {
        return Err(Error::Precondition(format!(
            "Phi({t:?}) = {y} lies outside the domain of generator 0"
        )));
    }
    if let Some(j) = f0
        .discontinuities()
        .into_iter()
        .find(|&j| (y - j).abs() <= JUMP_CLEARANCE * (1.0 + j.abs()))
    {
        return Err(Error::Precondition(format!(
            "Phi({t:?}) = {y} is at the jump {j} of generator 0"
        )));
    }
    let ft = t
        .iter()
        .enumerate()
        .map(|(j, &tj)| p.generator(j + 1).eval(tj))
        .collect::<Result<Vec<_>>>()?;
    Ok(Base {
        t: t.to_vec(),
        ft,
        f0t: f0.eval(y)?,
    })
}

/// `(f_j(x_j) − f_j(t_j))_j` and `f_0(φ(x)) − f_0(Φ(t))`.
fn row(p: &InequalityProblem, b: &Base, x: &[f64]) -> Result<(Vec<f64>, f64)> {
    let g = x
        .iter()
        .enumerate()
        .map(|(j, &xj)| Ok(p.generator(j + 1).eval(xj)? - b.ft[j]))
        .collect::<Result<Vec<_>>>()?;
    Ok((g, p.f0_phi(x)? - b.f0t))
}

fn residual(p: &InequalityProblem, b: &Base, a: &[f64], x: &[f64]) -> Result<f64> {
    let (g, h) = row(p, b, x)?;
    Ok(h - crate::numeric::sum(g.iter().zip(a).map(|(g, a)| g * a)))
}

/// Points `t − ε e_j` bounding each coefficient from above.
fn bounding_points(p: &InequalityProblem, t: &[f64], step: f64) -> Vec<Vec<f64>> {
    let s = p.to_unit(t);
    (0..p.k())
        .map(|j| {
            let mut u = s.clone();
            u[j] -= step.min(0.5 * s[j]);
            let mut x = t.to_vec();
            x[j] = p.box_sides()[j].interior_point(u[j]);
            x
        })
        .filter(|x| x != t)
        .collect()
}

/// Solves the sampled condition at `t` with default bounding rows.
pub fn certify_at(p: &InequalityProblem, t: &[f64], sample: &[Vec<f64>]) -> Result<AtOutcome> {
    certify_at_with(p, t, sample, DEFAULT_BOUND_STEP)
}

/// As [`certify_at`], with bounding rows `t − ε e_j` at unit-coordinate step `bound_step`.
pub fn certify_at_with(
    p: &InequalityProblem,
    t: &[f64],
    sample: &[Vec<f64>],
    bound_step: f64,
) -> Result<AtOutcome> {
    if sample.is_empty() {
        return Err(Error::Precondition("certification needs a nonempty sample".into()));
    }
    let b = base(p, t)?;
    let mut xs: Vec<Vec<f64>> = sample.to_vec();
    xs.extend(bounding_points(p, t, bound_step));
    solve_rows(p, &b, &xs)
}

fn solve_rows(p: &InequalityProblem, b: &Base, xs: &[Vec<f64>]) -> Result<AtOutcome> {
    let k = p.k();
    let mut g = Vec::with_capacity(xs.len());
    let mut h = Vec::with_capacity(xs.len());
    for x in xs {
        let (gi, hi) = row(p, b, x)?;
        g.push(gi);
        h.push(hi);
    }
    match lp_feasible(&g, &h)? {
        Feasibility::Feasible(a) => {
            let worst = xs
                .iter()
                .map(|x| residual(p, b, &a, x))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(0.0_f64, f64::max);
            Ok(AtOutcome::Entry(CertificateEntry {
                t: b.t.clone(),
                coeffs: a,
                residual: worst,
            }))
        }
        Feasibility::Infeasible(lambda) => {
            let support: Vec<usize> = (0..xs.len()).filter(|&i| lambda[i] > 0.0).collect();
            if support.len() > k + 1 {
                return Err(Error::Solver(format!(
                    "dual vertex has {} positive weights, expected at most {}",
                    support.len(),
                    k + 1
                )));
            }
            let mut points: Vec<Vec<f64>> = support.iter().map(|&i| xs[i].clone()).collect();
            let mut weights: Vec<f64> = support.iter().map(|&i| lambda[i]).collect();
            while points.len() < k + 1 {
                points.push(points[0].clone());
                weights.push(0.0);
            }
            Ok(AtOutcome::Witness(FarkasWitness {
                points,
                lambda: WeightVector::new(weights)?,
                base: b.t.clone(),
            }))
        }
    }
}

impl FarkasWitness {
    /// `(Σ_i λ_i (f_j(x_{i,j}) − f_j(t_j)))_j` and `Σ_i λ_i (f_0(φ(x_i)) − f_0(Φ(t)))`.
    pub fn proof_sums(&self, p: &InequalityProblem) -> Result<(Vec<f64>, f64)> {
        let b = base(p, &self.base)?;
        let mut cols = vec![Vec::new(); p.k()];
        let mut zero = Vec::new();
        for (x, &l) in self.points.iter().zip(self.lambda.as_slice()) {
            let (g, h) = row(p, &b, x)?;
            for (c, gj) in cols.iter_mut().zip(g) {
                c.push(l * gj);
            }
            zero.push(l * h);
        }
        Ok((
            cols.into_iter().map(crate::numeric::sum).collect(),
            crate::numeric::sum(zero),
        ))
    }
}

/// Forms the weighted means prescribed by the witness.
pub fn farkas_counterexample(p: &InequalityProblem, w: &FarkasWitness) -> Result<Counterexample> {
    base(p, &w.base)?;
    let cex = Counterexample::evaluate(p, w.points.clone(), w.lambda.clone())?;
    if !(cex.violation > 0.0) {
        return Err(Error::Precondition(format!(
            "witness at {:?} yields no violation ({:e})",
            w.base, cex.violation
        )));
    }
    Ok(cex)
}

impl Certificate {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// `f_0(φ(x)) − f_0(Φ(t)) − Σ a_j (f_j(x_j) − f_j(t_j))` for entry `i`.
    pub fn residual_at(&self, p: &InequalityProblem, i: usize, x: &[f64]) -> Result<f64> {
        let b = base(p, &self.grid[i])?;
        residual(p, &b, &self.coeffs[i], x)
    }

    /// `min_t Ψ_t(u)` with `Ψ_t(u) = f_0(Φ(t)) + Σ a_j (u_j − f_j(t_j))`.
    pub fn envelope(&self, p: &InequalityProblem, u: &[f64]) -> Result<f64> {
        let mut best = f64::INFINITY;
        for (t, a) in self.grid.iter().zip(&self.coeffs) {
            let b = base(p, t)?;
            let v = b.f0t + crate::numeric::sum((0..p.k()).map(|j| a[j] * (u[j] - b.ft[j])));
            best = best.min(v);
        }
        Ok(best)
    }

    /// Largest residual over `n` fresh uniform points (in unit coordinates) per entry.
    pub fn verify(&self, p: &InequalityProblem, n: usize, seed: u64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<Vec<f64>> = (0..n).map(|_| p.to_point(&random_unit(&mut rng, p.k()))).collect();
        let mut worst = f64::NEG_INFINITY;
        for (i, t) in self.grid.iter().enumerate() {
            let b = base(p, t)?;
            for x in &xs {
                worst = worst.max(residual(p, &b, &self.coeffs[i], x)?);
            }
        }
        Ok(worst.max(0.0))
    }

    /// Checks shape and nonnegativity against a problem.
    pub fn validate(&self, p: &InequalityProblem) -> Result<()> {
        if self.grid.len() != self.coeffs.len() {
            return Err(Error::Problem("certificate grid and coefficient table differ in length".into()));
        }
        for (t, a) in self.grid.iter().zip(&self.coeffs) {
            if t.len() != p.k() || a.len() != p.k() {
                return Err(Error::Arity {
                    expected: p.k(),
                    found: t.len().min(a.len()),
                });
            }
            if a.iter().any(|v| !(*v >= 0.0)) {
                return Err(Error::Problem(format!("negative coefficient at base point {t:?}")));
            }
            base(p, t)?;
        }
        Ok(())
    }
}

enum PointResult {
    Clean(CertificateEntry),
    Unresolved(Option<CertificateEntry>, String),
    Refuted(Counterexample),
}

/// Moves a grid point so that `Φ(t)` avoids the jumps of `f_0`.
fn clear_of_jumps(p: &InequalityProblem, s: &[f64], step: f64) -> Option<Vec<f64>> {
    let ok = |u: &[f64]| base(p, &p.to_point(u)).is_ok();
    if ok(s) {
        return Some(s.to_vec());
    }
    let j = (0..p.k()).find(|&j| p.big_phi().strictly_increasing_in(j))?;
    for frac in [0.25, -0.25, 0.125, -0.125, 0.5, -0.5, 0.0625, -0.0625] {
        let mut u = s.to_vec();
        u[j] = (u[j] + frac * step).clamp(UNIT_MARGIN, 1.0 - UNIT_MARGIN);
        if ok(&u) {
            return Some(u);
        }
    }
    None
}

fn grid_points(k: usize, n: usize) -> Vec<Vec<f64>> {
    let axis: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    let mut out = vec![vec![]];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<f64>| {
                axis.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    out
}

fn point_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Certifies every grid point with cutting-plane refinement.
pub fn build_certificate(p: &InequalityProblem, cfg: &CertifyConfig) -> Result<CertificateOutcome> {
    if !gamma_density(p).is_dense() {
        return Err(Error::Precondition(
            "the set of admissible base points is not known to be dense".into(),
        ));
    }
    if cfg.grid == 0 || cfg.sample == 0 || cfg.max_rounds == 0 {
        return Err(Error::Parameter("grid, sample and round budgets must be positive".into()));
    }
    let k = p.k();
    let step = 1.0 / cfg.grid as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let shared: Vec<Vec<f64>> = (0..cfg.sample).map(|_| random_unit(&mut rng, k)).collect();

    let results: Vec<(Vec<f64>, PointResult)> = grid_points(k, cfg.grid)
        .into_par_iter()
        .enumerate()
        .map(|(index, s)| {
            let Some(s) = clear_of_jumps(p, &s, step) else {
                let t = p.to_point(&s);
                return Ok((t, PointResult::Unresolved(None, "no admissible base point near this grid node".into())));
            };
            let t = p.to_point(&s);
            let r = refine_point(p, &s, &shared, step, cfg, point_seed(cfg.seed, index))?;
            Ok((t, r))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut grid = Vec::new();
    let mut coeffs = Vec::new();
    let mut worst = 0.0_f64;
    let mut unresolved = Vec::new();
    let mut reason = String::new();
    for (t, r) in results {
        match r {
            PointResult::Refuted(cex) => {
                return Ok(CertificateOutcome::Refuted { counterexample: cex });
            }
            PointResult::Clean(e) => {
                worst = worst.max(e.residual);
                grid.push(e.t);
                coeffs.push(e.coeffs);
            }
            PointResult::Unresolved(e, why) => {
                if reason.is_empty() {
                    reason = why;
                }
                if let Some(e) = e {
                    worst = worst.max(e.residual);
                }
                unresolved.push(t);
            }
        }
    }
    let certificate = Certificate {
        grid,
        coeffs,
        residual: worst,
    };
    if unresolved.is_empty() {
        Ok(CertificateOutcome::Certified { certificate })
    } else {
        Ok(CertificateOutcome::Undecided {
            certificate,
            unresolved,
            reason,
        })
    }
}

fn refine_point(
    p: &InequalityProblem,
    s: &[f64],
    shared: &[Vec<f64>],
    step: f64,
    cfg: &CertifyConfig,
    seed: u64,
) -> Result<PointResult> {
    let k = p.k();
    let t = p.to_point(s);
    let b = base(p, &t)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut rows: Vec<Vec<f64>> = shared.to_vec();
    for j in 0..k {
        for h in STENCIL {
            for dir in [1.0, -1.0] {
                let mut u = s.to_vec();
                u[j] = (u[j] + dir * h).clamp(UNIT_MARGIN, 1.0 - UNIT_MARGIN);
                rows.push(u);
            }
        }
    }
    for x in bounding_points(p, &t, step) {
        rows.push(p.to_unit(&x));
    }

    let mut last = None;
    for _ in 0..cfg.max_rounds {
        let xs: Vec<Vec<f64>> = rows.iter().map(|u| p.to_point(u)).collect();
        let entry = match solve_rows(p, &b, &xs)? {
            AtOutcome::Witness(w) => {
                return Ok(match farkas_counterexample(p, &w) {
                    Ok(cex) if cex.is_significant() => PointResult::Refuted(cex),
                    Ok(cex) => PointResult::Unresolved(
                        None,
                        format!("infeasible sample with insignificant violation {:e}", cex.violation),
                    ),
                    Err(e) => PointResult::Unresolved(None, e.to_string()),
                });
            }
            AtOutcome::Entry(e) => e,
        };
        let a = entry.coeffs.clone();
        let score = |u: &[f64]| residual(p, &b, &a, &p.to_point(u)).unwrap_or(f64::NEG_INFINITY);

        let mut candidates: Vec<(f64, Vec<f64>)> = (0..cfg.sample)
            .map(|_| random_unit(&mut rng, k))
            .chain(rows.iter().cloned())
            .map(|u| (score(&u), u))
            .collect();
        candidates.sort_by(|x, y| y.0.total_cmp(&x.0));
        let mut found: Vec<(f64, Vec<f64>)> = candidates
            .iter()
            .take(CLIMB_STARTS)
            .map(|(_, u)| hill_climb(score, u, 0.05, 1e-10, 0.5, 400))
            .collect();
        found.extend(candidates.into_iter().take(CLIMB_STARTS));
        let worst = found.iter().map(|f| f.0).fold(f64::NEG_INFINITY, f64::max);
        if worst <= cfg.residual_tol {
            return Ok(PointResult::Clean(CertificateEntry {
                residual: worst.max(entry.residual).max(0.0),
                ..entry
            }));
        }
        for (v, u) in found {
            if v > cfg.residual_tol && !rows.contains(&u) {
                // the line through the base point and a violated point is
                // pinned from both sides at once
                for alpha in LINE_STEPS {
                    let w: Vec<f64> = s.iter().zip(&u).map(|(si, ui)| si + alpha * (ui - si)).collect();
                    if w.iter().all(|&wi| (UNIT_MARGIN..=1.0 - UNIT_MARGIN).contains(&wi)) {
                        rows.push(w);
                    }
                }
                rows.push(u);
            }
        }
        last = Some(CertificateEntry {
            residual: worst,
            ..entry
        });
    }
    Ok(PointResult::Unresolved(last, "refinement round cap reached".into()))
}
