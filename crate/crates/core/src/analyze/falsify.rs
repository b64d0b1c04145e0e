use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::counterexample::{sides, Counterexample};
use crate::error::Result;
use crate::means::WeightVector;
use crate::numeric::{hill_climb, random_unit, UNIT_MARGIN};
use crate::problems::{invert_increasing, InequalityProblem, Precheck};

/// Random draws before each local search.
const DRAWS_PER_RESTART: usize = 64;
/// Sweeps of the local search per restart.
const CLIMB_STEPS: usize = 200;
const STEP_START: f64 = 0.1;
const STEP_END: f64 = 1e-8;
/// Restarts evaluated together before checking for a hit.
const BATCH: usize = 16;
/// Offsets (in unit coordinates) used when seeding near a jump.
const JUMP_OFFSETS: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FalsifyConfig {
    /// Objective evaluations across all restarts.
    pub trials: usize,
    pub seed: u64,
}

impl Default for FalsifyConfig {
    fn default() -> Self {
        Self {
            trials: 100_000,
            seed: 0,
        }
    }
}

/// Search variables: `k+1` points in unit coordinates followed by `k+1` weights.
struct Layout {
    k: usize,
}

impl Layout {
    fn dim(&self) -> usize {
        (self.k + 1) * self.k + self.k + 1
    }

    fn decode(&self, p: &InequalityProblem, z: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
        let n = self.k + 1;
        let points = (0..n)
            .map(|i| p.to_point(&z[i * self.k..(i + 1) * self.k]))
            .collect();
        // a slightly widened map reaches exact zero weights
        let weights = z[n * self.k..]
            .iter()
            .map(|&w| (1.1 * w - 0.1).max(0.0))
            .collect();
        (points, weights)
    }
}

fn objective(p: &InequalityProblem, layout: &Layout, z: &[f64]) -> f64 {
    let (points, weights) = layout.decode(p, z);
    let Ok(lambda) = WeightVector::new(weights) else {
        return f64::NEG_INFINITY;
    };
    match sides(p, &points, &lambda) {
        Ok((lhs, rhs)) if (lhs - rhs).is_finite() => lhs - rhs,
        _ => f64::NEG_INFINITY,
    }
}

/// Moves the coordinates of a draw next to the jump reported by the precheck.
fn seed_near_jump(p: &InequalityProblem, layout: &Layout, z: &mut [f64], jump: (usize, f64), rng: &mut ChaCha8Rng) {
    let k = layout.k;
    let (generator, at) = jump;
    for i in 0..=k {
        if rng.random_bool(0.25) {
            continue;
        }
        let off = JUMP_OFFSETS[rng.random_range(0..JUMP_OFFSETS.len())] * rng.random_range(0.0..1.0);
        let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        if generator >= 1 {
            let j = generator - 1;
            let s = p.box_sides()[j].to_unit(at);
            z[i * k + j] = (s + side * off).clamp(UNIT_MARGIN, 1.0 - UNIT_MARGIN);
        } else {
            // solve φ(x) = at along the first coordinate, then step off it
            let x = p.to_point(&z[i * k..(i + 1) * k]);
            let iv = p.box_sides()[0];
            let root = invert_increasing(
                |v| {
                    let mut y = x.clone();
                    y[0] = v;
                    p.phi().eval(&y)
                },
                iv,
                at,
            );
            let s = iv.to_unit(root);
            z[i * k] = (s + side * off).clamp(UNIT_MARGIN, 1.0 - UNIT_MARGIN);
        }
    }
}

fn restart(p: &InequalityProblem, layout: &Layout, seed: u64, budget: usize, jump: Option<(usize, f64)>) -> (f64, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = layout.dim();
    let mut best = (f64::NEG_INFINITY, vec![0.5; dim]);
    for d in 0..DRAWS_PER_RESTART {
        let mut z = random_unit(&mut rng, dim);
        if let Some(j) = jump {
            if d % 2 == 0 {
                seed_near_jump(p, layout, &mut z, j, &mut rng);
            }
        }
        let v = objective(p, layout, &z);
        if v > best.0 {
            best = (v, z);
        }
    }
    let decay = (STEP_END / STEP_START).powf(1.0 / CLIMB_STEPS as f64);
    let mut used = 0usize;
    let climb_budget = budget.saturating_sub(DRAWS_PER_RESTART);
    let climbed = hill_climb(
        |z| {
            used += 1;
            if used > climb_budget {
                f64::NEG_INFINITY
            } else {
                objective(p, layout, z)
            }
        },
        &best.1,
        STEP_START,
        STEP_END,
        decay,
        CLIMB_STEPS,
    );
    if climbed.0 > best.0 {
        climbed
    } else {
        best
    }
}

/// Per-restart evaluation budget.
fn restart_budget(dim: usize) -> usize {
    DRAWS_PER_RESTART + 2 * dim * CLIMB_STEPS
}

/// Searches for `k+1` points and weights violating the inequality.
///
/// `None` means that nothing was found within the budget, not that the
/// inequality holds.
pub fn falsify(p: &InequalityProblem, cfg: &FalsifyConfig, precheck: Option<Precheck>) -> Result<Option<Counterexample>> {
    let layout = Layout { k: p.k() };
    let per = restart_budget(layout.dim());
    let restarts = cfg.trials.div_ceil(per).max(1);
    let jump = match precheck {
        Some(Precheck::MustFail { generator, at }) => Some((generator, at)),
        _ => None,
    };
    let mut start = 0;
    while start < restarts {
        let end = (start + BATCH).min(restarts);
        let budget_left = cfg.trials.saturating_sub(start * per).max(DRAWS_PER_RESTART);
        let results: Vec<(f64, Vec<f64>)> = (start..end)
            .into_par_iter()
            .map(|i| {
                let seed = cfg.seed.wrapping_add((i as u64).wrapping_mul(0xA24B_AED4_963E_E407));
                restart(p, &layout, seed, per.min(budget_left), jump)
            })
            .collect();
        let mut best: Option<(f64, Vec<f64>)> = None;
        for r in results {
            if r.0 > best.as_ref().map_or(f64::NEG_INFINITY, |b| b.0) {
                best = Some(r);
            }
        }
        if let Some((v, z)) = best {
            if v > super::VIOLATION_THRESHOLD {
                let (points, weights) = layout.decode(p, &z);
                let cex = Counterexample::evaluate(p, points, WeightVector::new(weights)?)?;
                if cex.is_significant() {
                    return Ok(Some(cex));
                }
            }
        }
        start = end;
    }
    Ok(None)
}
