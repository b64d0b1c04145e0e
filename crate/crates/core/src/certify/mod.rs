//! Supporting-hyperplane certificates via finite LP feasibility, and the
//! extraction of counterexamples from infeasible systems.

mod certificate;
mod lp;
pub mod simplex;

pub use certificate::{
    build_certificate, certify_at, certify_at_with, farkas_counterexample, AtOutcome, Certificate,
    CertificateEntry, CertificateOutcome, CertifyConfig, FarkasWitness,
};
pub use lp::{lp_feasible, Feasibility, LP_TOL};
