/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = CompensatedSum::default();
    for x in xs {
        s.add(x);
    }
    s.value()
}

/// Bounds for unit coordinates, kept strictly inside `(0, 1)`.
pub const UNIT_MARGIN: f64 = 1e-9;

/// Uniform draw from `[UNIT_MARGIN, 1 - UNIT_MARGIN]^k`.
pub fn random_unit(rng: &mut impl rand::Rng, k: usize) -> Vec<f64> {
    (0..k)
        .map(|_| rng.random_range(UNIT_MARGIN..1.0 - UNIT_MARGIN))
        .collect()
}

/// Pattern search (Hooke–Jeeves) on `[0, 1]^d` with a geometrically shrinking step.
///
/// Each iteration tries `±step` along every coordinate; a successful sweep is
/// followed by pattern moves along the accumulated direction, which lets the
/// search follow ridges that are not aligned with the axes. The step is
/// multiplied by `decay` when a sweep fails. Stops after `max_steps`
/// iterations or once `step < min_step`.
pub fn hill_climb(
    mut f: impl FnMut(&[f64]) -> f64,
    start: &[f64],
    step0: f64,
    min_step: f64,
    decay: f64,
    max_steps: usize,
) -> (f64, Vec<f64>) {
    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    let mut x = start.to_vec();
    let mut fx = eval(&x);
    let mut step = step0;
    for _ in 0..max_steps {
        if step < min_step {
            break;
        }
        let (fy, y) = explore(&mut eval, &x, fx, step);
        if fy > fx {
            let (mut base, mut cur, mut fc) = (x, y, fy);
            for _ in 0..64 {
                let trial: Vec<f64> = cur
                    .iter()
                    .zip(&base)
                    .map(|(c, b)| (2.0 * c - b).clamp(UNIT_MARGIN, 1.0 - UNIT_MARGIN))
                    .collect();
                let ft = eval(&trial);
                let (fe, e) = explore(&mut eval, &trial, ft, step);
                if fe > fc {
                    base = std::mem::replace(&mut cur, e);
                    fc = fe;
                } else {
                    break;
                }
            }
            x = cur;
            fx = fc;
        } else {
            step *= decay;
        }
    }
    (fx, x)
}

fn explore(f: &mut impl FnMut(&[f64]) -> f64, start: &[f64], f0: f64, step: f64) -> (f64, Vec<f64>) {
    let mut x = start.to_vec();
    let mut best = f0;
    for i in 0..x.len() {
        let old = x[i];
        for dir in [1.0, -1.0] {
            let cand = (old + dir * step).clamp(UNIT_MARGIN, 1.0 - UNIT_MARGIN);
            if cand == old {
                continue;
            }
            x[i] = cand;
            let v = f(&x);
            if v > best {
                best = v;
                break;
            }
            x[i] = old;
        }
    }
    (best, x)
}
