//! Dense two-phase simplex with Bland's anti-cycling rule.

use crate::error::{Error, Result};

/// `min cᵀx` subject to `Ax = b`, `x ≥ 0`.
#[derive(Debug, Clone)]
pub struct StandardForm {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// `c_j − A_jᵀy` for every column.
    pub reduced_costs: Vec<f64>,
    /// Basic column of each remaining row.
    pub basis: Vec<usize>,
}

#[derive(Debug, Clone)]
pub enum SimplexOutcome {
    Optimal(Solution),
    Infeasible,
    Unbounded,
}

const PIVOT_EPS: f64 = 1e-11;
const FEASIBILITY_EPS: f64 = 1e-9;
const MAX_PIVOTS: usize = 200_000;

struct Tableau {
    rows: Vec<Vec<f64>>,
    obj: Vec<f64>,
    basis: Vec<usize>,
    /// Columns that may not enter the basis.
    banned: Vec<bool>,
    pivots: usize,
}

impl Tableau {
    fn width(&self) -> usize {
        self.obj.len() - 1
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.obj.len();
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        self.rows[r][c] = 1.0;
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for j in 0..w {
                    row[j] -= f * pivot_row[j];
                }
                row[c] = 0.0;
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for j in 0..w {
                self.obj[j] -= f * pivot_row[j];
            }
            self.obj[c] = 0.0;
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Runs Bland's rule to optimality. Returns `false` when unbounded.
    fn optimize(&mut self) -> Result<bool> {
        let rhs = self.width();
        loop {
            if self.pivots > MAX_PIVOTS {
                return Err(Error::Solver("pivot limit exceeded".into()));
            }
            let Some(c) = (0..rhs).find(|&j| !self.banned[j] && self.obj[j] < -PIVOT_EPS) else {
                return Ok(true);
            };
            let mut best: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[c] > PIVOT_EPS {
                    let ratio = row[rhs] / row[c];
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br.abs());
                            if ratio < br && !tie || tie && self.basis[i] < self.basis[bi] {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, c),
                None => return Ok(false),
            }
        }
    }
}

pub fn solve(lp: &StandardForm) -> Result<SimplexOutcome> {
    let m = lp.a.len();
    let n = lp.c.len();
    if lp.b.len() != m || lp.a.iter().any(|r| r.len() != n) {
        return Err(Error::Solver("inconsistent LP dimensions".into()));
    }
    // flip rows so that b ≥ 0
    let mut a = lp.a.clone();
    let mut b = lp.b.clone();
    for i in 0..m {
        if b[i] < 0.0 {
            b[i] = -b[i];
            for v in a[i].iter_mut() {
                *v = -*v;
            }
        }
    }
    // unit columns give a free starting basis for their rows
    let mut basis = vec![usize::MAX; m];
    let mut used = vec![false; n];
    for j in 0..n {
        let mut hit = None;
        let mut unit = true;
        for i in 0..m {
            let v = a[i][j];
            if v == 1.0 && hit.is_none() {
                hit = Some(i);
            } else if v != 0.0 {
                unit = false;
                break;
            }
        }
        if let (true, Some(i)) = (unit, hit) {
            if basis[i] == usize::MAX && !used[j] {
                basis[i] = j;
                used[j] = true;
            }
        }
    }
    let artificial_rows: Vec<usize> = (0..m).filter(|&i| basis[i] == usize::MAX).collect();
    let n_art = artificial_rows.len();
    let width = n + n_art;
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        let mut row = vec![0.0; width + 1];
        row[..n].copy_from_slice(&a[i]);
        row[width] = b[i];
        rows.push(row);
    }
    for (q, &i) in artificial_rows.iter().enumerate() {
        rows[i][n + q] = 1.0;
        basis[i] = n + q;
    }
    let mut t = Tableau {
        rows,
        obj: vec![0.0; width + 1],
        basis,
        banned: vec![false; width],
        pivots: 0,
    };

    if n_art > 0 {
        for &i in &artificial_rows {
            for j in 0..=width {
                if j < n || j == width {
                    t.obj[j] -= t.rows[i][j];
                }
            }
        }
        t.optimize()?;
        let infeasibility = -t.obj[width];
        if infeasibility > FEASIBILITY_EPS * (1.0 + b.iter().fold(0.0_f64, |s, v| s.max(*v))) {
            return Ok(SimplexOutcome::Infeasible);
        }
        // drive artificials out of the basis, dropping redundant rows
        let mut i = 0;
        while i < t.rows.len() {
            if t.basis[i] >= n {
                match (0..n).find(|&j| t.rows[i][j].abs() > PIVOT_EPS) {
                    Some(j) => t.pivot(i, j),
                    None => {
                        t.rows.remove(i);
                        t.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
        for j in n..width {
            t.banned[j] = true;
        }
    }

    t.obj = vec![0.0; width + 1];
    t.obj[..n].copy_from_slice(&lp.c);
    for (i, &bi) in t.basis.clone().iter().enumerate() {
        let cb = if bi < n { lp.c[bi] } else { 0.0 };
        if cb != 0.0 {
            for j in 0..=width {
                t.obj[j] -= cb * t.rows[i][j];
            }
        }
    }
    if !t.optimize()? {
        return Ok(SimplexOutcome::Unbounded);
    }
    let mut x = vec![0.0; n];
    for (i, &bi) in t.basis.iter().enumerate() {
        if bi < n {
            x[bi] = t.rows[i][width].max(0.0);
        }
    }
    let objective = crate::numeric::sum(lp.c.iter().zip(&x).map(|(c, x)| c * x));
    Ok(SimplexOutcome::Optimal(Solution {
        x,
        objective,
        reduced_costs: t.obj[..n].to_vec(),
        basis: t.basis.clone(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn optimal(lp: &StandardForm) -> Solution {
        match solve(lp).unwrap() {
            SimplexOutcome::Optimal(s) => s,
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn small_textbook_problem() {
        // max 3x + 2y, x + y ≤ 4, x + 3y ≤ 6
        let lp = StandardForm {
            a: vec![vec![1.0, 1.0, 1.0, 0.0], vec![1.0, 3.0, 0.0, 1.0]],
            b: vec![4.0, 6.0],
            c: vec![-3.0, -2.0, 0.0, 0.0],
        };
        let s = optimal(&lp);
        assert!((s.objective + 12.0).abs() < 1e-12);
        assert!((s.x[0] - 4.0).abs() < 1e-12);
        // the multiplier of the binding row is 3
        assert!((s.reduced_costs[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn phase_one_detects_infeasibility() {
        // x + y = 1, x + y = 2
        let lp = StandardForm {
            a: vec![vec![1.0, 1.0], vec![1.0, 1.0]],
            b: vec![1.0, 2.0],
            c: vec![0.0, 0.0],
        };
        assert!(matches!(solve(&lp).unwrap(), SimplexOutcome::Infeasible));
    }

    #[test]
    fn unbounded_and_redundant_rows() {
        let lp = StandardForm {
            a: vec![vec![1.0, -1.0]],
            b: vec![1.0],
            c: vec![0.0, -1.0],
        };
        assert!(matches!(solve(&lp).unwrap(), SimplexOutcome::Unbounded));
        let lp = StandardForm {
            a: vec![vec![1.0, 1.0], vec![2.0, 2.0]],
            b: vec![1.0, 2.0],
            c: vec![1.0, 2.0],
        };
        let s = optimal(&lp);
        assert!((s.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's classic cycling instance
        let lp = StandardForm {
            a: vec![
                vec![0.25, -8.0, -1.0, 9.0, 1.0, 0.0, 0.0],
                vec![0.5, -12.0, -0.5, 3.0, 0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
            ],
            b: vec![0.0, 0.0, 1.0],
            c: vec![-0.75, 20.0, -0.5, 6.0, 0.0, 0.0, 0.0],
        };
        let s = optimal(&lp);
        assert!((s.objective + 1.25).abs() < 1e-12);
    }
}
