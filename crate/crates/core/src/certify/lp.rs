use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::simplex::{self, SimplexOutcome, StandardForm};
use crate::error::{Error, Result};

/// Substitution tolerance for returned primal and dual vectors.
pub const LP_TOL: f64 = 1e-9;

/// The two branches of the alternative for `{a ≥ 0, Ga ≥ h}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", content = "vector", rename_all = "snake_case")]
pub enum Feasibility {
    /// `a ≥ 0` with `Ga ≥ h`.
    Feasible(Vec<f64>),
    /// `λ ≥ 0`, `λ ≠ 0`, `λᵀG ≤ 0`, `λᵀh > 0`.
    Infeasible(Vec<f64>),
}

/// Decides `{a ∈ ℝ^k : a ≥ 0, Ga ≥ h}`.
///
/// Solves `max hᵀλ` over `{λ ≥ 0 : Gᵀλ ≤ 0, Σλ ≤ 1}`. A positive optimum is a
/// Farkas certificate; otherwise the multipliers of `Gᵀλ ≤ 0` are a feasible `a`.
pub fn lp_feasible(g: &[Vec<f64>], h: &[f64]) -> Result<Feasibility> {
    let m = g.len();
    if m == 0 {
        return Err(Error::Parameter("LP needs at least one constraint".into()));
    }
    let k = g[0].len();
    if k == 0 {
        return Err(Error::Parameter("LP needs at least one variable".into()));
    }
    if h.len() != m {
        return Err(Error::Arity {
            expected: m,
            found: h.len(),
        });
    }
    if let Some(row) = g.iter().find(|r| r.len() != k) {
        return Err(Error::Arity {
            expected: k,
            found: row.len(),
        });
    }
    if g.iter().flatten().chain(h).any(|v| !v.is_finite()) {
        return Err(Error::Parameter("LP entries must be finite".into()));
    }

    // rows scaled to unit max-norm; positive scaling keeps the feasible set
    let scales: Vec<f64> = g
        .iter()
        .zip(h)
        .map(|(row, hi)| {
            let s = row.iter().fold(hi.abs(), |acc, v| acc.max(v.abs()));
            if s > 0.0 {
                1.0 / s
            } else {
                1.0
            }
        })
        .collect();
    let gs: Vec<Vec<f64>> = g
        .iter()
        .zip(&scales)
        .map(|(row, s)| row.iter().map(|v| v * s).collect())
        .collect();
    let hs: Vec<f64> = h.iter().zip(&scales).map(|(v, s)| v * s).collect();

    let n = m + k + 1;
    let mut a = vec![vec![0.0; n]; k + 1];
    for j in 0..k {
        for i in 0..m {
            a[j][i] = gs[i][j];
        }
        a[j][m + j] = 1.0;
    }
    for i in 0..m {
        a[k][i] = 1.0;
    }
    a[k][m + k] = 1.0;
    let mut b = vec![0.0; k + 1];
    b[k] = 1.0;
    let mut c = vec![0.0; n];
    for i in 0..m {
        c[i] = -hs[i];
    }
    let lp = StandardForm { a, b, c };
    let sol = match simplex::solve(&lp)? {
        SimplexOutcome::Optimal(s) => s,
        other => return Err(Error::Solver(format!("normalized Farkas system reported {other:?}"))),
    };
    let value = -sol.objective;
    if value > LP_TOL {
        let lambda_scaled = &sol.x[..m];
        let mut lambda: Vec<f64> = lambda_scaled.iter().zip(&scales).map(|(l, s)| l * s).collect();
        let top = lambda.iter().fold(0.0_f64, |acc, v| acc.max(*v));
        for v in lambda.iter_mut() {
            *v /= top;
        }
        verify_dual(g, h, &lambda)?;
        Ok(Feasibility::Infeasible(lambda))
    } else {
        let raw: Vec<f64> = sol.reduced_costs[m..m + k].iter().map(|v| v.max(0.0)).collect();
        let a = match polished_multipliers(&lp, &sol.basis, k) {
            Some(p) if worst_slack(&gs, &hs, &p) >= worst_slack(&gs, &hs, &raw) => p,
            _ => raw,
        };
        verify_primal(&gs, &hs, &a)?;
        Ok(Feasibility::Feasible(a))
    }
}

/// Recomputes the multipliers of the final basis from the original columns,
/// removing the error accumulated over the pivots.
fn polished_multipliers(lp: &StandardForm, basis: &[usize], k: usize) -> Option<Vec<f64>> {
    let rows = lp.a.len();
    if basis.len() != rows {
        return None;
    }
    let bt = DMatrix::from_fn(rows, rows, |i, j| lp.a[j][basis[i]]);
    let cb = DVector::from_iterator(rows, basis.iter().map(|&j| lp.c[j]));
    let y = bt.full_piv_lu().solve(&cb)?;
    // the slack of row j has cost 0 and unit column e_j
    let a: Vec<f64> = (0..k).map(|j| (-y[j]).max(0.0)).collect();
    a.iter().all(|v| v.is_finite()).then_some(a)
}

fn worst_slack(g: &[Vec<f64>], h: &[f64], a: &[f64]) -> f64 {
    g.iter()
        .zip(h)
        .map(|(row, hi)| dot(row, a) - hi)
        .fold(f64::INFINITY, f64::min)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    crate::numeric::sum(a.iter().zip(b).map(|(x, y)| x * y))
}

fn verify_primal(g: &[Vec<f64>], h: &[f64], a: &[f64]) -> Result<()> {
    let scale = a.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
    for (i, (row, hi)) in g.iter().zip(h).enumerate() {
        let slack = dot(row, a) - hi;
        if slack < -LP_TOL * scale {
            return Err(Error::Solver(format!("primal check failed on row {i}: slack {slack:e}")));
        }
    }
    Ok(())
}

fn verify_dual(g: &[Vec<f64>], h: &[f64], lambda: &[f64]) -> Result<()> {
    let k = g[0].len();
    let scale = g
        .iter()
        .zip(h)
        .zip(lambda)
        .map(|((row, hi), l)| l * row.iter().fold(hi.abs(), |acc, v| acc.max(v.abs())))
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);
    for j in 0..k {
        let col: Vec<f64> = g.iter().map(|r| r[j]).collect();
        let v = dot(&col, lambda);
        if v > LP_TOL * scale {
            return Err(Error::Solver(format!("dual check failed in column {j}: {v:e}")));
        }
    }
    if !(dot(h, lambda) > 0.0) {
        return Err(Error::Solver("dual check failed: λᵀh is not positive".into()));
    }
    Ok(())
}
