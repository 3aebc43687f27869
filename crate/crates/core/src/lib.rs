//! Power-regime diagnostics for scalar estimators.
//!
//! An estimate X̂ of a signal X is judged on a third axis beside bias and
//! variance: its mean power relative to the signal. Estimates whose power
//! exceeds the signal's are power-dominant and pay a coupling penalty
//! `E[X̂·e] > ½·MSE`; the MSE-optimal member of any scaled family `t·Z` is
//! never power-dominant.
//!
//! - [`moments`]: mergeable second-moment accumulators.
//! - [`diagnostics`]: regime labels, coupling decomposition, verdicts.
//! - [`scaling`]: `MSE(t)`, `t*`, certificates, controllers and tracking.
//! - [`zoo`]: seeded test problems and estimator families.
//! - [`map`]: the two safe-zone maps as data and SVG.

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod fmt;
pub mod map;
pub mod moments;
pub mod scaling;
pub mod zoo;

pub use diagnostics::{
    check_penalty, check_penalty_with, classify_regime, decompose_coupling, triad_report, CouplingDecomposition,
    PenaltyVerdict, RegimeLabel, Tolerances, TriadReport,
};
pub use error::{Error, Result};
pub use moments::{MomentStats, MomentSummary, PairedSample};
pub use scaling::{ControllerConfig, ControllerKind, ScalingCertificate, ScalingProblem, ScalingTrace, TrackTrace};
