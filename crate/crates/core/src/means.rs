//! Generalized quasi-arithmetic means and their weighted counterparts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::GeneratorFn;
use crate::numeric::CompensatedSum;

/// Element of `[0, ∞)^n \ {0}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Weight("weight vector is empty".into()));
        }
        if let Some(w) = entries.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::Weight(format!("weight {w} is not a finite nonnegative number")));
        }
        if entries.iter().all(|&w| w == 0.0) {
            return Err(Error::Weight("all weights are zero".into()));
        }
        Ok(Self(entries))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0; n.max(1)])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        crate::numeric::sum(self.0.iter().copied())
    }
}

impl<'de> Deserialize<'de> for WeightVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        WeightVector::new(v).map_err(serde::de::Error::custom)
    }
}

/// `f^{(-1)}((f(x_1) + … + f(x_n)) / n)`.
pub fn qam(f: &GeneratorFn, x: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::Arity {
            expected: 1,
            found: 0,
        });
    }
    mean_of(f, x.iter().map(|&xi| (xi, 1.0)))
}

/// `f^{(-1)}(Σ λ_i f(x_i) / Σ λ_i)`.
pub fn weighted_qam(f: &GeneratorFn, x: &[f64], lambda: &WeightVector) -> Result<f64> {
    if x.len() != lambda.len() {
        return Err(Error::Arity {
            expected: lambda.len(),
            found: x.len(),
        });
    }
    mean_of(f, x.iter().copied().zip(lambda.as_slice().iter().copied()))
}

fn mean_of(f: &GeneratorFn, terms: impl Iterator<Item = (f64, f64)>) -> Result<f64> {
    let mut num = CompensatedSum::default();
    let mut den = CompensatedSum::default();
    let (mut fmin, mut fmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut xmin, mut xmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for (x, w) in terms {
        let fx = f.eval(x)?;
        if w == 0.0 {
            continue;
        }
        num.add(w * fx);
        den.add(w);
        fmin = fmin.min(fx);
        fmax = fmax.max(fx);
        xmin = xmin.min(x);
        xmax = xmax.max(x);
    }
    let den = den.value();
    if !(den > 0.0) {
        return Err(Error::Weight("all weights are zero".into()));
    }
    // rounding must not push the average outside the values it averages
    let avg = (num.value() / den).clamp(fmin, fmax);
    let m = f.inv(avg)?;
    Ok(m.clamp(xmin, xmax))
}
