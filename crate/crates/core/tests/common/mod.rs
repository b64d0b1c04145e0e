#![allow(dead_code)]

use std::path::PathBuf;

use qamean::funcspace::{GeneratorFn, GeneratorSpec, Interval, Piece, Primitive, Stage};
use qamean::problems::{InequalityProblem, ProblemSpec};
use rand::Rng;

pub fn problems_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../problems")
}

pub fn load_spec(name: &str) -> ProblemSpec {
    let path = problems_dir().join(format!("{name}.json"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    serde_json::from_str(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn load(name: &str) -> InequalityProblem {
    InequalityProblem::from_spec(&load_spec(name)).unwrap()
}

/// Every problem file in the battery directory, sorted by name.
pub fn battery() -> Vec<(String, InequalityProblem)> {
    let mut names: Vec<String> = std::fs::read_dir(problems_dir())
        .unwrap()
        .filter_map(|e| {
            let p = e.ok()?.path();
            (p.extension()? == "json").then(|| p.file_stem()?.to_str().map(str::to_owned))?
        })
        .collect();
    names.sort();
    names.into_iter().map(|n| (n.clone(), load(&n))).collect()
}

fn random_primitive(rng: &mut impl Rng, lo: f64, hi: f64) -> Primitive {
    let positive = lo > 0.0;
    // keeps exponentials from flattening out in floating point on wide domains
    let scale = 1.0 + lo.abs().max(hi.abs());
    loop {
        let choice = rng.random_range(0..4);
        let p = match choice {
            0 => Primitive::affine(rng.random_range(0.3..3.0), 0.0),
            1 => {
                let r: f64 = rng.random_range(0.2..1.0) / scale;
                Primitive::exponential(if rng.random_bool(0.5) { r } else { -r })
            }
            2 if positive => Primitive::power([-1.0, 0.5, 1.5, 2.0, 3.0][rng.random_range(0..5)]),
            3 if positive => Primitive::logarithm(std::f64::consts::E),
            _ => continue,
        };
        return p.unwrap();
    }
}

/// Random strictly increasing generator on `domain` with `jumps` jumps and
/// `kinks` continuous breakpoints. Breakpoints are kept at least a tenth of
/// the average spacing apart.
pub fn random_generator(rng: &mut impl Rng, domain: Interval, jumps: usize, kinks: usize) -> GeneratorFn {
    let (lo, hi) = (domain.lo(), domain.hi());
    assert!(lo.is_finite() && hi.is_finite());
    let n = jumps + kinks;
    let mut bps: Vec<f64>;
    loop {
        bps = (0..n).map(|_| rng.random_range(lo..hi)).collect();
        bps.sort_by(f64::total_cmp);
        let gap = (hi - lo) / (n + 1) as f64 / 10.0;
        let mut edges = vec![lo];
        edges.extend(&bps);
        edges.push(hi);
        if edges.windows(2).all(|w| w[1] - w[0] > gap) {
            break;
        }
    }
    let mut is_jump = vec![true; jumps];
    is_jump.extend(vec![false; kinks]);
    for i in (1..n).rev() {
        is_jump.swap(i, rng.random_range(0..=i));
    }
    let mut pieces = Vec::new();
    let mut last_right = rng.random_range(-2.0..2.0);
    let mut jump_values = Vec::new();
    let explicit = rng.random_bool(0.5);
    for i in 0..=n {
        let a = if i == 0 { lo } else { bps[i - 1] };
        let b = if i == n { hi } else { bps[i] };
        let prim = random_primitive(rng, lo, hi);
        let start = prim.eval(a);
        let target = if i == 0 {
            last_right
        } else {
            last_right + if is_jump[i - 1] { rng.random_range(0.1..2.0) } else { 0.0 }
        };
        let piece = shifted(prim, start, target);
        if i > 0 {
            let (left, right) = (last_right, piece.eval(a));
            let w: f64 = rng.random_range(0.0..=1.0);
            jump_values.push(left + w * (right - left).max(0.0));
        }
        last_right = piece.eval(b);
        pieces.push(piece);
    }
    let spec = GeneratorSpec {
        domain,
        pieces,
        breakpoints: bps,
        jump_values: (explicit && n > 0).then_some(jump_values),
    };
    GeneratorFn::new(&spec).unwrap()
}

/// `prim + c` with `c` nudged so that the value at the left end is exactly `target`.
fn shifted(prim: Primitive, start: f64, target: f64) -> Piece {
    let mut c = target - start;
    for _ in 0..64 {
        if start + c == target {
            break;
        }
        c = if start + c < target { c.next_up() } else { c.next_down() };
    }
    while start + c < target {
        c = c.next_up();
    }
    Piece::chain(vec![Stage::Map(prim), Stage::Map(Primitive::affine(1.0, c).unwrap())]).unwrap()
}

pub fn iv(lo: f64, hi: f64) -> Interval {
    Interval::new(lo, hi).unwrap()
}
