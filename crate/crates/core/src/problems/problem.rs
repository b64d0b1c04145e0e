use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::coupler::{BuiltinCoupler, Coupler, CouplerKind};
use crate::error::{Error, Result};
use crate::funcspace::{GeneratorFn, GeneratorSpec, Interval};

/// Points sampled per coordinate when checking that `φ` maps the box into the domain of `f_0`.
const DOMAIN_SAMPLE: usize = 9;

/// Problem file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub k: usize,
    pub generators: Vec<GeneratorSpec>,
    pub phi: CouplerKind,
    #[serde(rename = "Phi")]
    pub big_phi: CouplerKind,
    #[serde(rename = "box")]
    pub bx: Vec<Interval>,
}

/// `M_0(φ(x_1), …, φ(x_n)) ≤ Φ(M_1(x_{·,1}), …, M_k(x_{·,k}))` over the box `I_1 × … × I_k`.
#[derive(Debug, Clone)]
pub struct InequalityProblem {
    name: Option<String>,
    k: usize,
    generators: Vec<GeneratorFn>,
    phi: Arc<dyn Coupler>,
    big_phi: Arc<dyn Coupler>,
    bx: Vec<Interval>,
    phi_image: Option<Interval>,
}

impl InequalityProblem {
    pub fn from_spec(spec: &ProblemSpec) -> Result<Self> {
        if spec.generators.len() != spec.k + 1 {
            return Err(Error::Problem(format!(
                "k = {} needs {} generators, found {}",
                spec.k,
                spec.k + 1,
                spec.generators.len()
            )));
        }
        let generators = spec
            .generators
            .iter()
            .enumerate()
            .map(|(j, g)| {
                GeneratorFn::new(g).map_err(|e| Error::Problem(format!("generator {j}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let phi = BuiltinCoupler::new(spec.phi.clone(), spec.k).map_err(|e| Error::Problem(format!("phi: {e}")))?;
        let big_phi =
            BuiltinCoupler::new(spec.big_phi.clone(), spec.k).map_err(|e| Error::Problem(format!("Phi: {e}")))?;
        let mut p = Self::new(spec.k, generators, Arc::new(phi), Arc::new(big_phi), spec.bx.clone())?;
        p.name = spec.name.clone();
        Ok(p)
    }

    /// Assembles a problem; generators `f_1..f_k` are restricted to the box.
    pub fn new(
        k: usize,
        generators: Vec<GeneratorFn>,
        phi: Arc<dyn Coupler>,
        big_phi: Arc<dyn Coupler>,
        bx: Vec<Interval>,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::Problem("k must be positive".into()));
        }
        if generators.len() != k + 1 {
            return Err(Error::Problem(format!("expected {} generators, found {}", k + 1, generators.len())));
        }
        if bx.len() != k {
            return Err(Error::Problem(format!("expected a box of dimension {k}, found {}", bx.len())));
        }
        for (name, c) in [("phi", &phi), ("Phi", &big_phi)] {
            if c.arity() != k {
                return Err(Error::Problem(format!("{name} has arity {}, expected {k}", c.arity())));
            }
            if !c.domain_ok(&bx) {
                return Err(Error::Problem(format!("{name} is not defined on the whole box")));
            }
        }
        let mut restricted = Vec::with_capacity(k + 1);
        restricted.push(generators[0].clone());
        for (j, (g, iv)) in generators.iter().skip(1).zip(&bx).enumerate() {
            if !iv.is_within(&g.domain()) {
                return Err(Error::Problem(format!(
                    "box side {iv} is not inside the domain {} of generator {}",
                    g.domain(),
                    j + 1
                )));
            }
            restricted.push(g.restrict(*iv)?);
        }
        let f0_domain = generators[0].domain();
        let phi_image = phi.image(&bx);
        if let Some(img) = phi_image {
            if !img.is_within(&f0_domain) {
                return Err(Error::Problem(format!(
                    "phi maps the box onto {img}, which is not inside the domain {f0_domain} of generator 0"
                )));
            }
        }
        let p = Self {
            name: None,
            k,
            generators: restricted,
            phi,
            big_phi,
            bx,
            phi_image,
        };
        for x in p.box_sample(DOMAIN_SAMPLE) {
            let y = p.phi.eval(&x);
            if !f0_domain.contains(y) {
                return Err(Error::Problem(format!(
                    "phi({x:?}) = {y} lies outside the domain {f0_domain} of generator 0"
                )));
            }
        }
        Ok(p)
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `f_0, …, f_k`, where `f_1..f_k` are restricted to the box.
    pub fn generators(&self) -> &[GeneratorFn] {
        &self.generators
    }

    pub fn generator(&self, j: usize) -> &GeneratorFn {
        &self.generators[j]
    }

    pub fn phi(&self) -> &dyn Coupler {
        self.phi.as_ref()
    }

    pub fn big_phi(&self) -> &dyn Coupler {
        self.big_phi.as_ref()
    }

    pub fn box_sides(&self) -> &[Interval] {
        &self.bx
    }

    /// Convex hull of `φ(I)` for couplers that report one.
    pub fn phi_image(&self) -> Option<Interval> {
        self.phi_image
    }

    /// Whether `φ` and `Φ` are the same builtin coupler.
    pub fn couplers_coincide(&self) -> bool {
        match (self.phi.as_builtin(), self.big_phi.as_builtin()) {
            (Some(a), Some(b)) => a == b,
            _ => false,
        }
    }

    pub fn to_point(&self, unit: &[f64]) -> Vec<f64> {
        self.bx.iter().zip(unit).map(|(iv, &s)| iv.interior_point(s)).collect()
    }

    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        self.bx.iter().zip(x).map(|(iv, &xi)| iv.to_unit(xi)).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.k && self.bx.iter().zip(x).all(|(iv, &xi)| iv.contains(xi))
    }

    /// Tensor grid with `n` points per coordinate.
    fn box_sample(&self, n: usize) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = self.bx.iter().map(|iv| iv.grid(n, 1e-6)).collect();
        let mut out = vec![vec![]];
        for axis in &axes {
            out = out
                .into_iter()
                .flat_map(|prefix| {
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

    /// `f_0(φ(x))`.
    pub fn f0_phi(&self, x: &[f64]) -> Result<f64> {
        self.generators[0].eval(self.phi.eval(x))
    }

    /// `Ψ(u) = f_0(φ(f_1^{-1}(u_1), …, f_k^{-1}(u_k)))`; needs continuous `f_1..f_k`.
    pub fn psi_eval(&self, u: &[f64]) -> Result<f64> {
        if u.len() != self.k {
            return Err(Error::Arity {
                expected: self.k,
                found: u.len(),
            });
        }
        if let Some(j) = (1..=self.k).find(|&j| !self.generators[j].is_continuous()) {
            return Err(Error::Unsupported(format!(
                "generator {j} is discontinuous, so the transfer function is not defined through true inverses"
            )));
        }
        let x = u
            .iter()
            .enumerate()
            .map(|(j, &uj)| self.generators[j + 1].inv(uj))
            .collect::<Result<Vec<_>>>()?;
        self.f0_phi(&x)
    }

    /// Range hulls `conv(f_j(I_j))`, `j = 1..k`.
    pub fn psi_domain(&self) -> Vec<Interval> {
        self.generators[1..].iter().map(GeneratorFn::range_hull).collect()
    }

    pub fn to_spec(&self) -> Option<ProblemSpec> {
        Some(ProblemSpec {
            name: self.name.clone(),
            k: self.k,
            generators: self.generators.iter().map(GeneratorFn::to_spec).collect(),
            phi: self.phi.as_builtin()?.kind().clone(),
            big_phi: self.big_phi.as_builtin()?.kind().clone(),
            bx: self.bx.clone(),
        })
    }
}
