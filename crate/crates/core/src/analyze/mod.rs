//! Counterexample search, transfer-function concavity, and the combined verdict.

mod concavity;
mod counterexample;
mod criteria;
mod decide;
mod falsify;

pub use concavity::{
    check_concavity, concavity_counterexample, Concavity, ConcavityConfig, ConcavityStats, EIGEN_TOL,
    MIDPOINT_TOL,
};
pub use counterexample::{sides, Counterexample, REPLAY_TOL, VIOLATION_THRESHOLD};
pub use criteria::{check_e2, e2_counterexample, jensen_criterion, E2Outcome, JensenVerdict, E2_TOL};
pub use decide::{decide, Agreement, Channel, DecideConfig, Status, Verdict};
pub use falsify::{falsify, FalsifyConfig};
