//! Power-regime classification and the coupling-term verdicts.
//!
//! For any estimate X̂ of X with error e = X̂ − X the coupling term splits as
//!
//! ```text
//! E[X̂·e] = ½·MSE + ½·(E[X̂²] − E[X²])
//! ```
//!
//! so an estimate whose mean power exceeds the signal's (power-dominant)
//! carries a coupling strictly above ½·MSE, while a power-conservative one
//! stays at or below it. The functions here evaluate that split on
//! empirical moments and label the outcome.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::MomentStats;

/// Default relative half-width of the power-balance band.
pub const DEFAULT_BALANCE_TOL: f64 = 1e-6;
/// Default threshold under which the coupling counts as zero.
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegimeLabel {
    /// E[X̂²] > E[X²], the forbidden zone.
    PowerDominant,
    /// E[X̂²] < E[X²], the safe zone.
    PowerConservative,
    /// E[X̂²] = E[X²] within the balance band.
    PowerBalance,
}

impl RegimeLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::PowerDominant => "PowerDominant",
            Self::PowerConservative => "PowerConservative",
            Self::PowerBalance => "PowerBalance",
        }
    }

    /// Safe zone in the wide sense: conservative or balanced.
    pub fn is_safe(self) -> bool {
        !matches!(self, Self::PowerDominant)
    }
}

impl std::fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for RegimeLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "PowerDominant" => Ok(Self::PowerDominant),
            "PowerConservative" => Ok(Self::PowerConservative),
            "PowerBalance" => Ok(Self::PowerBalance),
            other => Err(Error::InvalidSpec(format!("unknown regime `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative half-width of the balance band around E[X̂²] = E[X²].
    pub balance: f64,
    /// Coupling below `degeneracy·max(1, mse)` in magnitude is treated as zero.
    pub degeneracy: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            balance: DEFAULT_BALANCE_TOL,
            degeneracy: DEFAULT_DEGENERACY_TOL,
        }
    }
}

/// Labels the regime from the two powers directly.
pub fn classify_powers(signal_power: f64, estimate_power: f64, balance_tol: f64) -> Result<RegimeLabel> {
    if signal_power.is_nan() || signal_power <= 0.0 {
        return Err(Error::ZeroSignalPower);
    }
    if balance_tol.is_nan() || balance_tol < 0.0 {
        return Err(Error::InvalidSpec(format!("balance tolerance {balance_tol} < 0")));
    }
    let gap = estimate_power - signal_power;
    let band = balance_tol * signal_power;
    Ok(if gap.abs() <= band {
        RegimeLabel::PowerBalance
    } else if gap > band {
        RegimeLabel::PowerDominant
    } else {
        RegimeLabel::PowerConservative
    })
}

pub fn classify_regime(stats: &MomentStats, balance_tol: f64) -> Result<RegimeLabel> {
    classify_powers(stats.ex2, stats.ev2, balance_tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingDecomposition {
    pub coupling: f64,
    pub half_mse: f64,
    /// ½·(Ê[X̂²] − Ê[X²])
    pub half_power_gap: f64,
    pub residual: f64,
}

pub fn decompose_coupling(stats: &MomentStats) -> CouplingDecomposition {
    let half_mse = 0.5 * stats.mse;
    let half_power_gap = 0.5 * (stats.ev2 - stats.ex2);
    CouplingDecomposition {
        coupling: stats.coupling,
        half_mse,
        half_power_gap,
        residual: stats.coupling - half_mse - half_power_gap,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyVerdict {
    pub regime: RegimeLabel,
    pub coupling: f64,
    /// ½·mse
    pub bound: f64,
    /// Dominant: coupling sits above the bound. Safe: coupling sits at or
    /// below it.
    pub satisfied: bool,
    /// Coupling is numerically zero (X̂ = 0, X̂ = X or an orthogonal X̂).
    pub degenerate: bool,
    /// Coupling is negative. The upper bound still holds; this only flags
    /// that the point lies below the zero-coupling axis of the maps.
    pub negative_coupling: bool,
}

/// Penalty check with the default balance band.
pub fn check_penalty(stats: &MomentStats, tol: f64) -> Result<PenaltyVerdict> {
    check_penalty_with(
        stats,
        Tolerances {
            balance: DEFAULT_BALANCE_TOL,
            degeneracy: tol,
        },
    )
}

pub fn check_penalty_with(stats: &MomentStats, tol: Tolerances) -> Result<PenaltyVerdict> {
    let regime = classify_regime(stats, tol.balance)?;
    let coupling = stats.coupling;
    let bound = 0.5 * stats.mse;
    let slack = tol.degeneracy * stats.mse.max(1.0);
    let degenerate = coupling.abs() <= slack;
    let satisfied = match regime {
        // the strict inequality is only asserted off the degenerate set
        RegimeLabel::PowerDominant => degenerate || coupling > bound,
        RegimeLabel::PowerConservative => coupling <= bound + slack,
        // a balanced label admits a power excess up to the band edge
        RegimeLabel::PowerBalance => coupling <= bound + slack + 0.5 * tol.balance * stats.ex2,
    };
    Ok(PenaltyVerdict {
        regime,
        coupling,
        bound,
        satisfied,
        degenerate,
        negative_coupling: coupling < -slack,
    })
}

/// Bias, error variance and power ratio with the penalty verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriadReport {
    pub bias: f64,
    pub error_variance: f64,
    pub power_ratio: f64,
    pub mse: f64,
    pub coupling: f64,
    pub regime: RegimeLabel,
    pub verdict: PenaltyVerdict,
}

pub fn triad_report(stats: &MomentStats, balance_tol: f64, tol: f64) -> Result<TriadReport> {
    let verdict = check_penalty_with(
        stats,
        Tolerances {
            balance: balance_tol,
            degeneracy: tol,
        },
    )?;
    let bias = stats.mean_e;
    Ok(TriadReport {
        bias,
        error_variance: stats.mse - bias * bias,
        power_ratio: stats.power_ratio(),
        mse: stats.mse,
        coupling: stats.coupling,
        regime: verdict.regime,
        verdict,
    })
}

impl TriadReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
