use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Interval, Piece};
use crate::error::{Error, Result};

/// Number of interior points used by the numerical monotonicity sample.
const MONOTONICITY_SAMPLE: usize = 257;
/// Absolute tolerance of the bisection fallback in the inverse.
const BISECTION_TOL: f64 = 1e-12;

/// Raw, unvalidated description of a generator, as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub domain: Interval,
    pub pieces: Vec<Piece>,
    #[serde(default)]
    pub breakpoints: Vec<f64>,
    /// `f(t_i)`; when absent the midpoint of `[f_-(t_i), f_+(t_i)]` is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jump_values: Option<Vec<f64>>,
}

/// First generator invariant found to be violated.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Violation {
    #[error("expected {expected} pieces for {breakpoints} breakpoints, found {found}")]
    PieceCount {
        expected: usize,
        found: usize,
        breakpoints: usize,
    },
    #[error("expected {expected} jump values, found {found}")]
    JumpValueCount { expected: usize, found: usize },
    #[error("breakpoint {index} ({at}) is not finite")]
    NonFiniteBreakpoint { index: usize, at: f64 },
    #[error("breakpoint {index} ({at}) lies outside the interior of the domain")]
    BreakpointOutside { index: usize, at: f64 },
    #[error("breakpoints {index} and {next} are not strictly increasing")]
    BreakpointOrder { index: usize, next: usize },
    #[error("piece {piece}: stage {stage} is applied outside its natural domain on {interval}")]
    PieceDomain {
        piece: usize,
        stage: usize,
        interval: Interval,
    },
    #[error("violation at breakpoint {index} ({at}): f_-({at}) = {left} > v = {value}")]
    JumpBelowLeftLimit {
        index: usize,
        at: f64,
        left: f64,
        value: f64,
    },
    #[error("violation at breakpoint {index} ({at}): f_+({at}) = {right} < v = {value}")]
    JumpAboveRightLimit {
        index: usize,
        at: f64,
        value: f64,
        right: f64,
    },
    #[error("breakpoint {index} ({at}): one-sided limit is not a finite number")]
    NonFiniteLimit { index: usize, at: f64 },
    #[error("monotonicity sample: f({x}) = {fx} >= f({y}) = {fy} with {x} < {y}")]
    NotIncreasing { x: f64, fx: f64, y: f64, fy: f64 },
}

/// `(f_-(x), f(x), f_+(x))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limits {
    pub left: f64,
    pub value: f64,
    pub right: f64,
}

impl Limits {
    pub fn is_continuous(&self) -> bool {
        self.left == self.right
    }
}

/// Strictly increasing piecewise-analytic function on an open interval.
///
/// Piece `i` acts on `(t_i, t_{i+1})` with `t_0 = domain.lo` and
/// `t_m = domain.hi`; the value at a breakpoint is stored explicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorFn {
    domain: Interval,
    breakpoints: Vec<f64>,
    pieces: Vec<Piece>,
    jump_values: Vec<f64>,
    limits: Vec<(f64, f64)>,
    range_hull: Interval,
}

pub fn validate_generator(spec: &GeneratorSpec) -> std::result::Result<(), Violation> {
    GeneratorFn::build(spec).map(|_| ())
}

impl GeneratorFn {
    pub fn new(spec: &GeneratorSpec) -> Result<Self> {
        Ok(Self::build(spec)?)
    }

    /// Single-piece generator.
    pub fn simple(piece: impl Into<Piece>, domain: Interval) -> Result<Self> {
        Self::new(&GeneratorSpec {
            domain,
            pieces: vec![piece.into()],
            breakpoints: vec![],
            jump_values: None,
        })
    }

    pub fn identity(domain: Interval) -> Self {
        Self::simple(super::Primitive::identity(), domain).expect("identity is a valid generator")
    }

    fn build(spec: &GeneratorSpec) -> std::result::Result<Self, Violation> {
        let domain = spec.domain;
        let m = spec.breakpoints.len();
        if spec.pieces.len() != m + 1 {
            return Err(Violation::PieceCount {
                expected: m + 1,
                found: spec.pieces.len(),
                breakpoints: m,
            });
        }
        for (index, &at) in spec.breakpoints.iter().enumerate() {
            if !at.is_finite() {
                return Err(Violation::NonFiniteBreakpoint { index, at });
            }
            if !domain.contains(at) {
                return Err(Violation::BreakpointOutside { index, at });
            }
            if index + 1 < m && spec.breakpoints[index + 1] <= at {
                return Err(Violation::BreakpointOrder {
                    index,
                    next: index + 1,
                });
            }
        }
        if let Some(v) = &spec.jump_values {
            if v.len() != m {
                return Err(Violation::JumpValueCount {
                    expected: m,
                    found: v.len(),
                });
            }
        }
        for (i, piece) in spec.pieces.iter().enumerate() {
            let iv = sub_interval(domain, &spec.breakpoints, i);
            if let Err(stage) = piece.image(iv) {
                return Err(Violation::PieceDomain {
                    piece: i,
                    stage,
                    interval: iv,
                });
            }
        }
        let mut limits = Vec::with_capacity(m);
        let mut jump_values = Vec::with_capacity(m);
        for (index, &at) in spec.breakpoints.iter().enumerate() {
            let left = spec.pieces[index].eval(at);
            let right = spec.pieces[index + 1].eval(at);
            if !left.is_finite() || !right.is_finite() {
                return Err(Violation::NonFiniteLimit { index, at });
            }
            let value = match &spec.jump_values {
                Some(v) => v[index],
                None => 0.5 * (left + right),
            };
            if !(left <= value) {
                return Err(Violation::JumpBelowLeftLimit {
                    index,
                    at,
                    left,
                    value,
                });
            }
            if !(value <= right) {
                return Err(Violation::JumpAboveRightLimit {
                    index,
                    at,
                    value,
                    right,
                });
            }
            limits.push((left, right));
            jump_values.push(value);
        }
        let f = Self::assemble(domain, spec.breakpoints.clone(), spec.pieces.clone(), jump_values, limits)?;
        f.check_monotone_sample()?;
        Ok(f)
    }

    /// Builds from parts whose breakpoint invariants already hold.
    fn assemble(
        domain: Interval,
        breakpoints: Vec<f64>,
        pieces: Vec<Piece>,
        jump_values: Vec<f64>,
        limits: Vec<(f64, f64)>,
    ) -> std::result::Result<Self, Violation> {
        let lo = pieces[0].eval(domain.lo());
        let hi = pieces[pieces.len() - 1].eval(domain.hi());
        let range_hull = Interval::new(lo, hi).map_err(|_| Violation::NotIncreasing {
            x: domain.lo(),
            fx: lo,
            y: domain.hi(),
            fy: hi,
        })?;
        Ok(GeneratorFn {
            domain,
            breakpoints,
            pieces,
            jump_values,
            limits,
            range_hull,
        })
    }

    fn check_monotone_sample(&self) -> std::result::Result<(), Violation> {
        let mut xs = self.domain.grid(MONOTONICITY_SAMPLE, 1e-6);
        xs.extend_from_slice(&self.breakpoints);
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let mut prev: Option<(f64, f64)> = None;
        for x in xs {
            let fx = self.eval_unchecked(x);
            if let Some((px, pf)) = prev {
                // equal values happen only when floating point cannot resolve
                // the step; a decrease is a genuine violation
                if fx < pf || fx.is_nan() {
                    return Err(Violation::NotIncreasing {
                        x: px,
                        fx: pf,
                        y: x,
                        fy: fx,
                    });
                }
            }
            prev = Some((x, fx));
        }
        Ok(())
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn jump_values(&self) -> &[f64] {
        &self.jump_values
    }

    /// `conv(f(I))`.
    pub fn range_hull(&self) -> Interval {
        self.range_hull
    }

    pub fn to_spec(&self) -> GeneratorSpec {
        GeneratorSpec {
            domain: self.domain,
            pieces: self.pieces.clone(),
            breakpoints: self.breakpoints.clone(),
            jump_values: Some(self.jump_values.clone()),
        }
    }

    /// Location of `x`: `Ok(i)` for breakpoint `i`, `Err(i)` for the interior of piece `i`.
    fn locate(&self, x: f64) -> std::result::Result<usize, usize> {
        let i = self.breakpoints.partition_point(|&t| t < x);
        if i < self.breakpoints.len() && self.breakpoints[i] == x {
            Ok(i)
        } else {
            Err(i)
        }
    }

    fn eval_unchecked(&self, x: f64) -> f64 {
        match self.locate(x) {
            Ok(i) => self.jump_values[i],
            Err(i) => self.pieces[i].eval(x),
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.eval_unchecked(x))
    }

    pub fn eval_with_limits(&self, x: f64) -> Result<Limits> {
        self.check_domain(x)?;
        Ok(match self.locate(x) {
            Ok(i) => Limits {
                left: self.limits[i].0,
                value: self.jump_values[i],
                right: self.limits[i].1,
            },
            Err(i) => {
                let v = self.pieces[i].eval(x);
                Limits {
                    left: v,
                    value: v,
                    right: v,
                }
            }
        })
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        if self.domain.contains(x) {
            Ok(())
        } else {
            Err(Error::Domain {
                x,
                domain: self.domain,
            })
        }
    }

    /// Breakpoints with `f_-(t) < f_+(t)`.
    pub fn discontinuities(&self) -> Vec<f64> {
        self.breakpoints
            .iter()
            .zip(&self.limits)
            .filter(|(_, (l, r))| l < r)
            .map(|(&t, _)| t)
            .collect()
    }

    pub fn is_continuous(&self) -> bool {
        self.limits.iter().all(|(l, r)| l == r)
    }

    pub fn gen_inverse(&self) -> GenInverse<'_> {
        GenInverse {
            source: self,
            range_hull: self.range_hull,
        }
    }

    /// Generalized inverse at `u`; shorthand for `gen_inverse().inv(u)`.
    pub fn inv(&self, u: f64) -> Result<f64> {
        self.gen_inverse().inv(u)
    }

    /// Lower and upper end of the range of piece `i`.
    fn piece_range(&self, i: usize) -> (f64, f64) {
        let lo = if i == 0 {
            self.range_hull.lo()
        } else {
            self.limits[i - 1].1
        };
        let hi = if i == self.pieces.len() - 1 {
            self.range_hull.hi()
        } else {
            self.limits[i].0
        };
        (lo, hi)
    }

    fn piece_inverse(&self, i: usize, u: f64) -> f64 {
        let iv = sub_interval(self.domain, &self.breakpoints, i);
        let piece = &self.pieces[i];
        let x = piece.inverse(u);
        let x = if x.is_finite() && x >= iv.lo() && x <= iv.hi() {
            x
        } else {
            bisect_piece(piece, iv, u)
        };
        x.clamp(iv.lo(), iv.hi())
    }

    /// Restriction to a subinterval of the domain.
    pub fn restrict(&self, to: Interval) -> Result<Self> {
        if !to.is_within(&self.domain) {
            return Err(Error::Parameter(format!(
                "cannot restrict a generator on {} to {to}",
                self.domain
            )));
        }
        let first = self.breakpoints.partition_point(|&t| t <= to.lo());
        let last = self.breakpoints.partition_point(|&t| t < to.hi());
        let f = Self::assemble(
            to,
            self.breakpoints[first..last].to_vec(),
            self.pieces[first..=last].to_vec(),
            self.jump_values[first..last].to_vec(),
            self.limits[first..last].to_vec(),
        )?;
        Ok(f)
    }

    /// `x ↦ -f(-x)` on `-I`.
    pub fn reflect(&self) -> Self {
        let domain = self.domain.negated();
        let breakpoints = self.breakpoints.iter().rev().map(|t| -t).collect();
        let pieces = self.pieces.iter().rev().map(Piece::reflected).collect();
        let jump_values = self.jump_values.iter().rev().map(|v| -v).collect();
        let limits = self.limits.iter().rev().map(|&(l, r)| (-r, -l)).collect();
        Self::assemble(domain, breakpoints, pieces, jump_values, limits)
            .expect("reflection preserves generator invariants")
    }

    /// `self ∘ inner`, i.e. `x ↦ self(inner(x))`.
    pub fn compose(&self, inner: &GeneratorFn) -> Result<Self> {
        let g = inner;
        if !g.range_hull.is_within(&self.domain) {
            return Err(Error::Composition(format!(
                "range hull {} of the inner generator is not inside the domain {} of the outer one",
                g.range_hull, self.domain
            )));
        }
        enum Origin {
            Inner(usize),
            Outer(usize),
        }
        let mut cuts: Vec<(f64, Origin)> = g
            .breakpoints
            .iter()
            .enumerate()
            .map(|(i, &t)| (t, Origin::Inner(i)))
            .collect();
        for (q, &s) in self.breakpoints.iter().enumerate() {
            for i in 0..g.pieces.len() {
                let (lo, hi) = g.piece_range(i);
                if lo < s && s < hi {
                    let iv = sub_interval(g.domain, &g.breakpoints, i);
                    let x = g.piece_inverse(i, s);
                    if iv.contains(x) {
                        cuts.push((x, Origin::Outer(q)));
                    }
                }
            }
        }
        cuts.sort_by(|a, b| a.0.total_cmp(&b.0));
        cuts.dedup_by(|a, b| a.0 == b.0);

        let breakpoints: Vec<f64> = cuts.iter().map(|c| c.0).collect();
        let mut pieces = Vec::with_capacity(breakpoints.len() + 1);
        for i in 0..=breakpoints.len() {
            let iv = sub_interval(g.domain, &breakpoints, i);
            let mid = iv.midpoint();
            let gi = match g.locate(mid) {
                Ok(b) | Err(b) => b,
            };
            let y = g.pieces[gi].eval(mid);
            let fi = match self.locate(y) {
                Ok(b) | Err(b) => b,
            };
            pieces.push(g.pieces[gi].then(&self.pieces[fi]));
        }
        let mut limits = Vec::with_capacity(cuts.len());
        let mut jump_values = Vec::with_capacity(cuts.len());
        for (_, origin) in &cuts {
            match *origin {
                Origin::Inner(i) => {
                    let (gl, gr) = g.limits[i];
                    let left = self.eval_with_limits(gl)?.left;
                    let right = self.eval_with_limits(gr)?.right;
                    let value = self.eval(g.jump_values[i])?.clamp(left, right);
                    limits.push((left, right));
                    jump_values.push(value);
                }
                Origin::Outer(q) => {
                    limits.push(self.limits[q]);
                    jump_values.push(self.jump_values[q]);
                }
            }
        }
        Ok(Self::assemble(g.domain, breakpoints, pieces, jump_values, limits)?)
    }
}

/// Generalized inverse `f^{(-1)}: conv(f(I)) → I`.
#[derive(Debug, Clone, Copy)]
pub struct GenInverse<'a> {
    pub source: &'a GeneratorFn,
    pub range_hull: Interval,
}

impl GenInverse<'_> {
    pub fn inv(&self, u: f64) -> Result<f64> {
        let f = self.source;
        if !self.range_hull.contains(u) {
            return Err(Error::Range {
                u,
                hull: self.range_hull,
            });
        }
        let n = f.pieces.len();
        for i in 0..n {
            let (_, hi) = f.piece_range(i);
            if u < hi {
                return Ok(f.piece_inverse(i, u));
            }
            if i + 1 < n {
                let (next_lo, _) = f.piece_range(i + 1);
                if u <= next_lo {
                    return Ok(f.breakpoints[i]);
                }
            }
        }
        // only reachable through floating point at the upper end of the hull
        Ok(f.piece_inverse(n - 1, u))
    }
}

impl fmt::Display for GeneratorFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "generator on {} with {} piece(s), jumps at {:?}",
            self.domain,
            self.pieces.len(),
            self.discontinuities()
        )
    }
}

fn sub_interval(domain: Interval, breakpoints: &[f64], i: usize) -> Interval {
    let lo = if i == 0 { domain.lo() } else { breakpoints[i - 1] };
    let hi = if i == breakpoints.len() {
        domain.hi()
    } else {
        breakpoints[i]
    };
    Interval::new(lo, hi).expect("breakpoints are strictly increasing")
}

/// Bisection on the compactified coordinate of `iv`.
fn bisect_piece(piece: &Piece, iv: Interval, u: f64) -> f64 {
    let (mut a, mut b) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let x = iv.from_unit(m);
        if piece.eval(x) < u {
            a = m;
        } else {
            b = m;
        }
        let (xa, xb) = (iv.from_unit(a), iv.from_unit(b));
        if (xb - xa).abs() <= BISECTION_TOL {
            break;
        }
    }
    iv.from_unit(0.5 * (a + b))
}
