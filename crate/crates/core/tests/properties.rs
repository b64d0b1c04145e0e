mod common;

use std::sync::Arc;

use common::{iv, load, random_generator};
use proptest::prelude::*;
use qamean::analyze::{
    check_concavity, decide, falsify, jensen_criterion, Concavity, ConcavityConfig, DecideConfig, FalsifyConfig,
    JensenVerdict,
};
use qamean::certify::{lp_feasible, Feasibility};
use qamean::funcspace::{compose, reflect, GeneratorFn, Interval, Primitive};
use qamean::means::{qam, weighted_qam, WeightVector};
use qamean::problems::{BuiltinCoupler, CouplerKind, InequalityProblem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn generator(seed: u64) -> GeneratorFn {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jumps = rng.random_range(0..3);
    let kinks = rng.random_range(0..3);
    random_generator(&mut rng, iv(-3.0, 3.0), jumps, kinks)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

fn points() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.9..2.9f64, 1..6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inverse_undoes_the_generator(seed: u64, x in -2.99..2.99f64) {
        let f = generator(seed);
        prop_assert!(close(f.inv(f.eval(x).unwrap()).unwrap(), x, 1e-9));
    }

    #[test]
    fn inverse_is_monotone(seed: u64, a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let f = generator(seed);
        let hull = f.range_hull();
        let (u, v) = (hull.from_unit(a.min(b)), hull.from_unit(a.max(b)));
        let inv = f.gen_inverse();
        prop_assert!(inv.inv(u).unwrap() <= inv.inv(v).unwrap());
    }

    #[test]
    fn mean_is_internal(seed: u64, x in points()) {
        let f = generator(seed);
        let m = qam(&f, &x).unwrap();
        let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lo - 1e-9 <= m && m <= hi + 1e-9, "{m} outside [{lo}, {hi}]");
    }

    #[test]
    fn mean_is_monotone(seed: u64, x in points(), i: prop::sample::Index, d in 0.0..1.0f64) {
        let f = generator(seed);
        let mut y = x.clone();
        let i = i.index(y.len());
        y[i] = (y[i] + d).min(2.99);
        prop_assert!(qam(&f, &x).unwrap() <= qam(&f, &y).unwrap() + 1e-9);
    }

    #[test]
    fn weights_are_scale_free(seed: u64, x in points(), c in 1e-3..1e3f64, w in prop::collection::vec(0.01..1.0f64, 5)) {
        let f = generator(seed);
        let n = x.len();
        let a = WeightVector::new(w[..n].to_vec()).unwrap();
        let b = WeightVector::new(w[..n].iter().map(|v| v * c).collect()).unwrap();
        prop_assert!(close(weighted_qam(&f, &x, &a).unwrap(), weighted_qam(&f, &x, &b).unwrap(), 1e-9));
    }

    #[test]
    fn reflection_negates_the_mean(seed: u64, x in points()) {
        let f = generator(seed);
        let r = reflect(&f);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        prop_assert!(close(qam(&r, &neg).unwrap(), -qam(&f, &x).unwrap(), 1e-9));
        let rr = reflect(&r);
        prop_assert_eq!(rr.discontinuities(), f.discontinuities());
        for &t in &x {
            prop_assert!(close(rr.eval(t).unwrap(), f.eval(t).unwrap(), 1e-12));
        }
    }

    /// A convex outer map keeps the jumps and can only raise the mean.
    #[test]
    fn convex_outer_map_keeps_jumps_and_raises_mean(seed: u64, x in points()) {
        let f = generator(seed);
        let h = GeneratorFn::simple(Primitive::exponential(0.5).unwrap(), Interval::real_line()).unwrap();
        let g = compose(&h, &f).unwrap();
        let (fj, gj) = (f.discontinuities(), g.discontinuities());
        prop_assert!(gj.iter().all(|t| fj.contains(t)));
        // kinks that rounding turned into ulp-sized steps may close up again
        for t in fj {
            let l = f.eval_with_limits(t).unwrap();
            prop_assert!(l.right - l.left < 1e-12 || gj.contains(&t), "jump at {t} lost");
        }
        prop_assert!(qam(&f, &x).unwrap() <= qam(&g, &x).unwrap() + 1e-9);
    }

    #[test]
    fn lp_answers_carry_proofs(
        m in 1usize..7,
        k in 1usize..5,
        entries in prop::collection::vec(-3.0..3.0f64, 36),
        rhs in prop::collection::vec(-3.0..3.0f64, 6),
    ) {
        let g: Vec<Vec<f64>> = (0..m).map(|i| entries[i * 6..i * 6 + k].to_vec()).collect();
        let h = &rhs[..m];
        match lp_feasible(&g, h).unwrap() {
            Feasibility::Feasible(a) => {
                prop_assert!(a.iter().all(|&v| v >= -1e-9));
                for (row, &hi) in g.iter().zip(h) {
                    let s: f64 = row.iter().zip(&a).map(|(r, v)| r * v).sum();
                    prop_assert!(s >= hi - 1e-7, "{s} < {hi}");
                }
            }
            Feasibility::Infeasible(l) => {
                prop_assert!(l.iter().all(|&v| v >= -1e-9));
                for j in 0..k {
                    let s: f64 = g.iter().zip(&l).map(|(row, v)| row[j] * v).sum();
                    prop_assert!(s <= 1e-7);
                }
                let lh: f64 = l.iter().zip(h).map(|(a, b)| a * b).sum();
                prop_assert!(lh > 0.0);
            }
        }
    }
}

fn jensen_problem(prim: Primitive, lo: f64, hi: f64) -> (GeneratorFn, InequalityProblem) {
    let f = GeneratorFn::simple(prim, iv(lo - 0.1, hi + 0.1)).unwrap();
    let mean = || Arc::new(BuiltinCoupler::new(CouplerKind::ArithmeticMean, 2).unwrap());
    let p = InequalityProblem::new(2, vec![f.clone(); 3], mean(), mean(), vec![iv(lo, hi); 2]).unwrap();
    (f, p)
}

fn primitive(i: usize) -> Primitive {
    match i {
        0 => Primitive::power(-1.0),
        1 => Primitive::power(0.5),
        2 => Primitive::power(1.5),
        3 => Primitive::power(2.0),
        4 => Primitive::power(3.0),
        5 => Primitive::exponential(0.5),
        6 => Primitive::exponential(1.0),
        7 => Primitive::exponential(2.0),
        8 => Primitive::exponential(-0.5),
        9 => Primitive::exponential(-1.0),
        10 => Primitive::exponential(-2.0),
        11 => Primitive::logarithm(std::f64::consts::E),
        _ => Primitive::affine(2.0, -1.0),
    }
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// The analytic criterion and the numerical concavity test never contradict each other.
    #[test]
    fn analytic_and_numerical_concavity_agree(i in 0usize..13, lo in 0.2..2.0f64, width in 0.5..3.0f64, seed: u64) {
        let (f, p) = jensen_problem(primitive(i), lo, lo + width);
        let cfg = ConcavityConfig { pairs: 2000, hessian_grid: 4, seed };
        let numeric = check_concavity(&p, &cfg).unwrap();
        match jensen_criterion(&f) {
            JensenVerdict::Holds => prop_assert!(!matches!(numeric, Concavity::NotConcave { .. }), "{numeric:?}"),
            JensenVerdict::Fails { .. } => prop_assert!(!numeric.is_concave(), "{numeric:?}"),
            JensenVerdict::Unsupported { reason } => prop_assert!(false, "{reason}"),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn cauchy_schwarz_is_never_falsified(seed: u64) {
        let p = load("holder_cauchy_schwarz");
        let cfg = FalsifyConfig { trials: 5000, seed };
        prop_assert!(falsify(&p, &cfg, None).unwrap().is_none());
    }

    #[test]
    fn decide_is_deterministic(seed: u64) {
        let p = load("jensen_sqrt");
        let mut cfg = DecideConfig::with_seed(seed);
        cfg.falsify.trials = 3000;
        cfg.concavity.pairs = 1000;
        cfg.e2_samples = 500;
        cfg.certify.sample = 100;
        let a = serde_json::to_string(&decide(&p, &cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&decide(&p, &cfg).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }
}
