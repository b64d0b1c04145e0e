//! Inequality instances, the transfer function, and structural prechecks.

mod coupler;
mod problem;

pub use coupler::{BuiltinCoupler, Coupler, CouplerKind};
pub use problem::{InequalityProblem, ProblemSpec};

use serde::Serialize;

use crate::funcspace::Interval;

/// Why `Γ = {t : Φ(t) is a continuity point of f_0}` is dense in the box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "reason", content = "coordinate", rename_all = "snake_case")]
pub enum DensityReason {
    F0Continuous,
    StrictlyIncreasingIn(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum GammaDensity {
    Dense { reason: DensityReason },
    Unknown,
}

impl GammaDensity {
    pub fn is_dense(&self) -> bool {
        matches!(self, GammaDensity::Dense { .. })
    }
}

pub fn gamma_density(p: &InequalityProblem) -> GammaDensity {
    if p.generator(0).is_continuous() {
        return GammaDensity::Dense {
            reason: DensityReason::F0Continuous,
        };
    }
    match (0..p.k()).find(|&j| p.big_phi().strictly_increasing_in(j)) {
        Some(j) => GammaDensity::Dense {
            reason: DensityReason::StrictlyIncreasingIn(j),
        },
        None => GammaDensity::Unknown,
    }
}

/// Outcome of the continuity requirement on generators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Precheck {
    Consistent,
    /// The inequality cannot hold; `generator` has a jump at `at`.
    MustFail { generator: usize, at: f64 },
    /// `φ ≠ Φ` or the couplers are not separately strictly increasing.
    NotApplicable,
}

/// Relative tolerance for identifying two jump locations.
const SAME_JUMP: f64 = 1e-9;

pub fn continuity_precheck(p: &InequalityProblem) -> Precheck {
    if !p.couplers_coincide() || !p.phi().is_separately_strictly_increasing() || !p.phi().is_continuous() {
        return Precheck::NotApplicable;
    }
    if p.k() == 1 {
        return single_variable_precheck(p);
    }
    for j in 1..=p.k() {
        if let Some(&at) = p.generator(j).discontinuities().first() {
            return Precheck::MustFail { generator: j, at };
        }
    }
    if let Some(img) = p.phi_image() {
        if let Some(&at) = p.generator(0).discontinuities().iter().find(|&&y| img.contains(y)) {
            return Precheck::MustFail { generator: 0, at };
        }
    }
    Precheck::Consistent
}

/// For one variable the inequality is a comparison of the means generated by
/// `f_0 ∘ φ` and `f_1`, which forces the two to jump at the same points.
fn single_variable_precheck(p: &InequalityProblem) -> Precheck {
    let iv = p.box_sides()[0];
    let phi_jumps: Vec<(f64, f64)> = match p.phi_image() {
        Some(img) => p
            .generator(0)
            .discontinuities()
            .into_iter()
            .filter(|y| img.contains(*y))
            .map(|y| (y, invert_increasing(|x| p.phi().eval(&[x]), iv, y)))
            .collect(),
        None => vec![],
    };
    let f1_jumps = p.generator(1).discontinuities();
    let same = |a: f64, b: f64| (a - b).abs() <= SAME_JUMP * (1.0 + a.abs().max(b.abs()));
    if let Some(&at) = f1_jumps.iter().find(|&&t| !phi_jumps.iter().any(|&(_, s)| same(s, t))) {
        return Precheck::MustFail { generator: 1, at };
    }
    if let Some(&(at, _)) = phi_jumps.iter().find(|&&(_, s)| !f1_jumps.iter().any(|&t| same(s, t))) {
        return Precheck::MustFail { generator: 0, at };
    }
    Precheck::Consistent
}

/// Solves `h(x) = y` for an increasing `h` on `iv` by bisection in unit coordinates.
pub(crate) fn invert_increasing(h: impl Fn(f64) -> f64, iv: Interval, y: f64) -> f64 {
    let (mut a, mut b) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if h(iv.interior_point(m)) < y {
            a = m;
        } else {
            b = m;
        }
        if b - a < 1e-16 {
            break;
        }
    }
    iv.interior_point(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::funcspace::{GeneratorFn, GeneratorSpec, Piece, Primitive};
    use crate::Error;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    fn affine(a: f64, b: f64) -> Piece {
        Primitive::affine(a, b).unwrap().into()
    }

    fn power(p: f64) -> GeneratorFn {
        GeneratorFn::simple(Primitive::power(p).unwrap(), Interval::positive()).unwrap()
    }

    fn jump(domain: Interval, at: f64) -> GeneratorFn {
        GeneratorFn::new(&GeneratorSpec {
            domain,
            pieces: vec![affine(1.0, 0.0), affine(1.0, 1.0)],
            breakpoints: vec![at],
            jump_values: None,
        })
        .unwrap()
    }

    fn builtin(kind: CouplerKind, k: usize) -> Arc<dyn Coupler> {
        Arc::new(BuiltinCoupler::new(kind, k).unwrap())
    }

    fn problem(gens: Vec<GeneratorFn>, phi: CouplerKind, big_phi: CouplerKind, bx: Vec<Interval>) -> InequalityProblem {
        let k = bx.len();
        InequalityProblem::new(k, gens, builtin(phi, k), builtin(big_phi, k), bx).unwrap()
    }

    fn minkowski(p: f64) -> InequalityProblem {
        problem(vec![power(p), power(p), power(p)], CouplerKind::Sum, CouplerKind::Sum, vec![iv(0.5, 4.0); 2])
    }

    /// `Φ` that ignores its arguments.
    #[derive(Debug)]
    struct Constant(usize, f64);

    impl Coupler for Constant {
        fn arity(&self) -> usize {
            self.0
        }
        fn eval(&self, _: &[f64]) -> f64 {
            self.1
        }
        fn strictly_increasing_in(&self, _: usize) -> bool {
            false
        }
        fn is_continuous(&self) -> bool {
            true
        }
        fn domain_ok(&self, _: &[Interval]) -> bool {
            true
        }
    }

    #[test]
    fn psi_examples() {
        let id = || GeneratorFn::identity(Interval::real_line());
        let chain = problem(vec![id(), id()], CouplerKind::Sum, CouplerKind::Sum, vec![iv(-3.0, 3.0)]);
        for u in [-2.0, 0.0, 1.5] {
            assert_eq!(chain.psi_eval(&[u]).unwrap(), u);
        }

        let m2 = minkowski(2.0);
        for (u, v) in [(1.0, 1.0), (2.0, 5.0), (0.3, 9.0)] {
            let want = (f64::sqrt(u) + f64::sqrt(v)).powi(2);
            assert!((m2.psi_eval(&[u, v]).unwrap() - want).abs() < 1e-12 * want);
        }
        assert!(matches!(m2.psi_eval(&[100.0, 1.0]), Err(Error::Range { .. })));

        let exp = || GeneratorFn::simple(Primitive::exponential(1.0).unwrap(), Interval::real_line()).unwrap();
        let jensen = problem(
            vec![exp(), exp(), exp()],
            CouplerKind::ArithmeticMean,
            CouplerKind::ArithmeticMean,
            vec![iv(-2.0, 2.0); 2],
        );
        let (u, v) = (0.5_f64, 3.0_f64);
        assert!((jensen.psi_eval(&[u, v]).unwrap() - (u * v).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn psi_rejects_discontinuous_generators() {
        let p = problem(
            vec![jump(Interval::real_line(), 0.0), jump(iv(-1.0, 1.0), 0.0)],
            CouplerKind::Sum,
            CouplerKind::Sum,
            vec![iv(-1.0, 1.0)],
        );
        assert!(matches!(p.psi_eval(&[0.5]), Err(Error::Unsupported(_))));
    }

    #[test]
    fn gamma_density_examples() {
        assert_eq!(
            gamma_density(&minkowski(2.0)),
            GammaDensity::Dense {
                reason: DensityReason::F0Continuous
            }
        );
        let id = || GeneratorFn::identity(iv(-1.0, 1.0));
        let p = problem(
            vec![jump(Interval::real_line(), 0.0), id(), id()],
            CouplerKind::Sum,
            CouplerKind::Sum,
            vec![iv(-1.0, 1.0); 2],
        );
        assert_eq!(
            gamma_density(&p),
            GammaDensity::Dense {
                reason: DensityReason::StrictlyIncreasingIn(0)
            }
        );
        let p = InequalityProblem::new(
            2,
            vec![jump(Interval::real_line(), 0.0), id(), id()],
            builtin(CouplerKind::Sum, 2),
            Arc::new(Constant(2, 0.0)),
            vec![iv(-1.0, 1.0); 2],
        )
        .unwrap();
        assert_eq!(gamma_density(&p), GammaDensity::Unknown);
    }

    #[test]
    fn precheck_examples() {
        assert_eq!(continuity_precheck(&minkowski(0.5)), Precheck::Consistent);

        let id = || GeneratorFn::identity(iv(-1.0, 1.0));
        let p = problem(
            vec![GeneratorFn::identity(Interval::real_line()), jump(iv(-1.0, 1.0), 0.0), id()],
            CouplerKind::Sum,
            CouplerKind::Sum,
            vec![iv(-1.0, 1.0); 2],
        );
        assert_eq!(continuity_precheck(&p), Precheck::MustFail { generator: 1, at: 0.0 });

        // φ(I) = (-2, 2) does not reach the jump at 5
        let p = problem(
            vec![jump(Interval::real_line(), 5.0), id(), id()],
            CouplerKind::Sum,
            CouplerKind::Sum,
            vec![iv(-1.0, 1.0); 2],
        );
        assert_eq!(continuity_precheck(&p), Precheck::Consistent);
        let p = problem(
            vec![jump(Interval::real_line(), 1.5), id(), id()],
            CouplerKind::Sum,
            CouplerKind::Sum,
            vec![iv(-1.0, 1.0); 2],
        );
        assert_eq!(continuity_precheck(&p), Precheck::MustFail { generator: 0, at: 1.5 });

        let p = problem(
            vec![GeneratorFn::identity(Interval::real_line()), id(), id()],
            CouplerKind::Sum,
            CouplerKind::ArithmeticMean,
            vec![iv(-1.0, 1.0); 2],
        );
        assert_eq!(continuity_precheck(&p), Precheck::NotApplicable);
    }

    #[test]
    fn single_variable_precheck_compares_jump_sets() {
        let f1 = jump(iv(-1.0, 1.0), 0.0);
        // continuous f_0 with a jumping f_1
        let p = problem(
            vec![GeneratorFn::identity(Interval::real_line()), f1.clone()],
            CouplerKind::Sum,
            CouplerKind::Sum,
            vec![iv(-1.0, 1.0)],
        );
        assert_eq!(continuity_precheck(&p), Precheck::MustFail { generator: 1, at: 0.0 });
        // matching jumps: f_0 = f_1 and φ the identity
        let p = problem(
            vec![jump(Interval::real_line(), 0.0), f1.clone()],
            CouplerKind::Sum,
            CouplerKind::Sum,
            vec![iv(-1.0, 1.0)],
        );
        assert_eq!(continuity_precheck(&p), Precheck::Consistent);
        // φ(x) = 1 + 2x moves the preimage of the f_0 jump at 0 to -0.5
        let p = problem(
            vec![jump(Interval::real_line(), 0.0), f1],
            CouplerKind::Affine {
                c0: 1.0,
                coeffs: vec![2.0],
            },
            CouplerKind::Affine {
                c0: 1.0,
                coeffs: vec![2.0],
            },
            vec![iv(-1.0, 1.0)],
        );
        assert_eq!(continuity_precheck(&p), Precheck::MustFail { generator: 1, at: 0.0 });
    }

    #[test]
    fn problem_validation() {
        let id = || GeneratorFn::identity(iv(-1.0, 1.0));
        // sum maps (-1,1)^2 onto (-2,2), outside the domain of f_0
        let r = InequalityProblem::new(
            2,
            vec![id(), id(), id()],
            builtin(CouplerKind::Sum, 2),
            builtin(CouplerKind::Sum, 2),
            vec![iv(-1.0, 1.0); 2],
        );
        assert!(matches!(r, Err(Error::Problem(_))));
        let r = InequalityProblem::new(
            1,
            vec![power(2.0), GeneratorFn::identity(Interval::real_line())],
            builtin(CouplerKind::Product, 1),
            builtin(CouplerKind::Product, 1),
            vec![iv(-1.0, 1.0)],
        );
        assert!(matches!(r, Err(Error::Problem(_))));

        let json = r#"{
            "k": 2,
            "generators": [
                {"domain": [0, "inf"], "pieces": [{"kind": "power", "params": {"exponent": 2}}]},
                {"domain": [0, "inf"], "pieces": [{"kind": "power", "params": {"exponent": 2}}]},
                {"domain": [0, "inf"], "pieces": [{"kind": "power", "params": {"exponent": 2}}]}
            ],
            "phi": {"kind": "sum"},
            "Phi": {"kind": "sum"},
            "box": [[0.5, 4], [0.5, 4]]
        }"#;
        let spec: ProblemSpec = serde_json::from_str(json).unwrap();
        let p = InequalityProblem::from_spec(&spec).unwrap();
        assert_eq!(p.k(), 2);
        assert_eq!(p.generator(1).domain(), iv(0.5, 4.0));
        assert_eq!(p.psi_domain(), vec![iv(0.25, 16.0); 2]);
    }

    #[test]
    fn psi_is_separately_increasing() {
        let p = minkowski(3.0);
        let hull = p.psi_domain();
        for i in 0..1000 {
            let s = [(i as f64 * 0.618) % 1.0, (i as f64 * 0.414) % 1.0];
            let d = [0.05 * ((i % 7) as f64) / 7.0, 0.03 * ((i % 5) as f64) / 5.0];
            let u: Vec<f64> = (0..2).map(|j| hull[j].interior_point(s[j] * 0.9)).collect();
            let v: Vec<f64> = (0..2).map(|j| hull[j].interior_point(s[j] * 0.9 + d[j])).collect();
            assert!(p.psi_eval(&u).unwrap() <= p.psi_eval(&v).unwrap());
        }
    }
}
