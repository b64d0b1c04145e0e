use serde::{Deserialize, Serialize};

use super::concavity::{check_concavity, concavity_counterexample, Concavity, ConcavityConfig};
use super::counterexample::Counterexample;
use super::criteria::{check_e2, e2_counterexample, E2Outcome};
use super::falsify::{falsify, FalsifyConfig};
use crate::certify::{build_certificate, certify_at, AtOutcome, Certificate, CertificateOutcome, CertifyConfig};
use crate::error::{Error, Result};
use crate::means::weighted_qam;
use crate::problems::{continuity_precheck, gamma_density, GammaDensity, InequalityProblem, Precheck};

/// Entry residual at a counterexample point above which a certificate is
/// considered contradicted.
const ENTRY_CONFLICT_TOL: f64 = 1e-6;
/// Unit-coordinate offsets tried when refuting the certificate at the means of a counterexample.
const REFUTE_OFFSETS: [f64; 6] = [0.0, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecideConfig {
    pub falsify: FalsifyConfig,
    pub certify: CertifyConfig,
    pub concavity: ConcavityConfig,
    pub e2_samples: usize,
    /// Skip the supporting-hyperplane certificate.
    #[serde(default)]
    pub skip_certificate: bool,
}

impl Default for DecideConfig {
    fn default() -> Self {
        Self::with_seed(0)
    }
}

impl DecideConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            falsify: FalsifyConfig {
                seed,
                ..FalsifyConfig::default()
            },
            certify: CertifyConfig {
                seed,
                ..CertifyConfig::default()
            },
            concavity: ConcavityConfig {
                seed,
                ..ConcavityConfig::default()
            },
            e2_samples: 10_000,
            skip_certificate: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    HoldsCertified,
    Fails,
    Undecided,
}

/// What one decision procedure concluded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Channel {
    Holds,
    Fails { violation: f64 },
    Undecided { reason: String },
    Skipped { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Agreement {
    pub precheck: Precheck,
    pub gamma: GammaDensity,
    pub concavity: Channel,
    pub e2: Channel,
    pub certificate: Channel,
    pub falsifier: Channel,
    /// Base point at which the certificate was refuted by the counterexample.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refuted_at: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Counterexample>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub concavity: Option<Concavity>,
    pub agreement: Agreement,
}

fn fails(c: &Counterexample) -> Channel {
    Channel::Fails { violation: c.violation }
}

/// Keeps the candidate with the largest violation, earliest on ties.
fn offer(best: &mut Option<Counterexample>, p: &InequalityProblem, c: Counterexample) -> Result<()> {
    c.replay(p)?;
    if !c.is_significant() {
        return Ok(());
    }
    if best.as_ref().is_none_or(|b| c.violation > b.violation) {
        *best = Some(c);
    }
    Ok(())
}

/// Runs every applicable procedure and reconciles their answers.
pub fn decide(p: &InequalityProblem, cfg: &DecideConfig) -> Result<Verdict> {
    let precheck = continuity_precheck(p);
    let gamma = gamma_density(p);
    let mut best: Option<Counterexample> = None;

    let concavity = check_concavity(p, &cfg.concavity)?;
    let concavity_channel = match &concavity {
        Concavity::Concave { .. } => Channel::Holds,
        Concavity::NotConcave { u, v, deficit } => {
            if p.couplers_coincide() {
                let c = concavity_counterexample(p, u, v)?;
                let ch = if c.is_significant() {
                    fails(&c)
                } else {
                    Channel::Undecided {
                        reason: format!("midpoint deficit {deficit:e} did not yield a significant violation"),
                    }
                };
                offer(&mut best, p, c)?;
                ch
            } else {
                Channel::Undecided {
                    reason: "the transfer function is not concave, which is inconclusive when φ ≠ Φ".into(),
                }
            }
        }
        Concavity::Unsupported { reason } => Channel::Skipped { reason: reason.clone() },
        Concavity::Inconclusive { stats } => Channel::Undecided {
            reason: format!(
                "midpoint deficit {:e}, largest Hessian eigenvalue {:e}",
                stats.worst_deficit, stats.max_eigenvalue
            ),
        },
    };

    let e2 = check_e2(p, cfg.e2_samples, cfg.concavity.seed)?;
    let e2_channel = match &e2 {
        E2Outcome::Holds { .. } => Channel::Holds,
        E2Outcome::Violated { t, .. } => {
            let c = e2_counterexample(p, t)?;
            let ch = fails(&c);
            offer(&mut best, p, c)?;
            ch
        }
    };

    let mut certificate = None;
    let certificate_channel = if cfg.skip_certificate {
        Channel::Skipped {
            reason: "disabled by configuration".into(),
        }
    } else if !gamma.is_dense() {
        Channel::Skipped {
            reason: "admissible base points are not known to be dense".into(),
        }
    } else {
        match build_certificate(p, &cfg.certify)? {
            CertificateOutcome::Certified { certificate: c } => {
                certificate = Some(c);
                Channel::Holds
            }
            CertificateOutcome::Refuted { counterexample } => {
                let ch = fails(&counterexample);
                offer(&mut best, p, counterexample)?;
                ch
            }
            CertificateOutcome::Undecided { certificate: c, reason, .. } => {
                certificate = Some(c);
                Channel::Undecided { reason }
            }
        }
    };

    let found = falsify(p, &cfg.falsify, Some(precheck))?;
    let falsifier_channel = match found {
        Some(c) => {
            let ch = fails(&c);
            offer(&mut best, p, c)?;
            ch
        }
        None => Channel::Undecided {
            reason: format!("no violation within {} trials", cfg.falsify.trials),
        },
    };

    let mut refuted_at = None;
    if let Some(cex) = &best {
        if concavity.is_concave() && e2.holds() {
            return Err(Error::Inconsistency(format!(
                "the transfer function passed the concavity checks, yet a violation of {:e} was found",
                cex.violation
            )));
        }
        if certificate_channel == Channel::Holds {
            let cert = certificate.as_ref().expect("certified outcome carries a certificate");
            check_entries(p, cert, cex)?;
            refuted_at = Some(refute_at_means(p, cex)?);
        }
    }

    let status = if best.is_some() {
        Status::Fails
    } else if matches!(precheck, Precheck::MustFail { .. }) {
        Status::Undecided
    } else if concavity.is_concave() && e2.holds() || certificate_channel == Channel::Holds {
        Status::HoldsCertified
    } else {
        Status::Undecided
    };

    Ok(Verdict {
        status,
        counterexample: best,
        certificate,
        concavity: Some(concavity),
        agreement: Agreement {
            precheck,
            gamma,
            concavity: concavity_channel,
            e2: e2_channel,
            certificate: certificate_channel,
            falsifier: falsifier_channel,
            refuted_at,
        },
    })
}

/// Every certificate entry must majorize the rows of the counterexample.
fn check_entries(p: &InequalityProblem, cert: &Certificate, cex: &Counterexample) -> Result<()> {
    for i in 0..cert.len() {
        for x in &cex.points {
            let r = cert.residual_at(p, i, x)?;
            if r > ENTRY_CONFLICT_TOL {
                return Err(Error::Inconsistency(format!(
                    "certificate entry at {:?} is violated by {r:e} at the counterexample point {x:?}",
                    cert.grid[i]
                )));
            }
        }
    }
    Ok(())
}

/// A grid certificate can coexist with a counterexample only because the
/// sampled condition fails off the grid. The means of the counterexample are
/// such a base point: the rows of the counterexample alone are infeasible there.
fn refute_at_means(p: &InequalityProblem, cex: &Counterexample) -> Result<Vec<f64>> {
    let k = p.k();
    let means = (0..k)
        .map(|j| {
            let col: Vec<f64> = cex.points.iter().map(|x| x[j]).collect();
            weighted_qam(p.generator(j + 1), &col, &cex.lambda)
        })
        .collect::<Result<Vec<_>>>()?;
    let s = p.to_unit(&means);
    for off in REFUTE_OFFSETS {
        let t = p.to_point(&s.iter().map(|v| v + off).collect::<Vec<_>>());
        match certify_at(p, &t, &cex.points) {
            Ok(AtOutcome::Witness(_)) => return Ok(t),
            Ok(AtOutcome::Entry(_)) | Err(Error::Precondition(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Err(Error::Inconsistency(format!(
        "a certificate and a counterexample were both found, and the counterexample does not refute the condition near its means {means:?}"
    )))
}
