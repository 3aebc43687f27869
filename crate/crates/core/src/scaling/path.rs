//! Iterative controllers that drive the scale `t` toward `t*`.
//!
//! Three controllers, one per control objective: plain gradient descent
//! (baseline), Nesterov momentum (speed) and gradient descent projected
//! onto the power-balance interval `|t| ≤ t_balance` (no excursions into the
//! power-dominant zone).

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::ScalingProblem;
use crate::diagnostics::{RegimeLabel, DEFAULT_BALANCE_TOL};
use crate::error::{Error, Result};
use crate::fmt::real;
use crate::moments::csv_error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    Gradient,
    Momentum,
    Projected,
}

impl ControllerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Gradient => "gradient",
            Self::Momentum => "momentum",
            Self::Projected => "projected",
        }
    }
}

impl std::str::FromStr for ControllerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gradient" => Ok(Self::Gradient),
            "momentum" | "nesterov" => Ok(Self::Momentum),
            "projected" => Ok(Self::Projected),
            other => Err(Error::InvalidSpec(format!("unknown controller kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    pub kind: ControllerKind,
    /// Step size η.
    pub eta: f64,
    /// Momentum coefficient β, used by [`ControllerKind::Momentum`] only.
    pub beta: f64,
    pub t0: f64,
    pub conv_tol: f64,
    pub max_steps: usize,
    pub balance_tol: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            kind: ControllerKind::Gradient,
            eta: 0.1,
            beta: 0.5,
            // start from the zero estimate
            t0: 0.0,
            conv_tol: 1e-6,
            max_steps: 1000,
            balance_tol: DEFAULT_BALANCE_TOL,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(Error::InvalidSpec(format!("eta must be positive, got {}", self.eta)));
        }
        if !(self.beta.is_finite() && (0.0..1.0).contains(&self.beta)) {
            return Err(Error::InvalidSpec(format!("beta must lie in [0, 1), got {}", self.beta)));
        }
        if !self.t0.is_finite() {
            return Err(Error::InvalidSpec("t0 must be finite".into()));
        }
        if !(self.conv_tol.is_finite() && self.conv_tol > 0.0) {
            return Err(Error::InvalidSpec(format!("conv_tol must be positive, got {}", self.conv_tol)));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidSpec("max_steps must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathIterate {
    pub k: usize,
    pub t: f64,
    pub mse: f64,
    pub regime: RegimeLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingTrace {
    pub kind: ControllerKind,
    pub iterates: Vec<PathIterate>,
    pub t_star: f64,
    pub t_balance: f64,
    /// First k inside the convergence band; `max_steps` if never reached.
    pub steps_to_converge: usize,
    pub converged: bool,
    /// Largest excursion past `t*` in the direction of travel from `t0`.
    pub max_overshoot: f64,
    /// Iterates labelled power-dominant, i.e. with |t| beyond `t_balance`.
    pub forbidden_steps: usize,
}

/// Summary record without the iterate list.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub kind: ControllerKind,
    pub t_star: f64,
    pub t_balance: f64,
    pub final_t: f64,
    pub final_mse: f64,
    pub steps_to_converge: usize,
    pub converged: bool,
    pub max_overshoot: f64,
    pub forbidden_steps: usize,
}

impl ScalingTrace {
    pub fn summary(&self) -> TraceSummary {
        let last = self.iterates.last().expect("trace holds the start point");
        TraceSummary {
            kind: self.kind,
            t_star: self.t_star,
            t_balance: self.t_balance,
            final_t: last.t,
            final_mse: last.mse,
            steps_to_converge: self.steps_to_converge,
            converged: self.converged,
            max_overshoot: self.max_overshoot,
            forbidden_steps: self.forbidden_steps,
        }
    }

    /// Writes `k,t,mse,regime` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["k", "t", "mse", "regime"]).map_err(csv_error)?;
        for it in &self.iterates {
            wtr.write_record([it.k.to_string(), real(it.t), real(it.mse), it.regime.to_string()])
                .map_err(csv_error)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

pub fn run_path(problem: &ScalingProblem, config: &ControllerConfig) -> Result<ScalingTrace> {
    config.validate()?;
    let t_star = problem.optimal_scale()?;
    let t_balance = problem.balance_scale()?;
    let band = config.conv_tol * t_star.abs().max(1.0);
    let converged = |t: f64| (t - t_star).abs() <= band;
    let iterate = |k: usize, t: f64| -> Result<PathIterate> {
        Ok(PathIterate {
            k,
            t,
            mse: problem.mse_of_t(t),
            regime: problem.regime_at(t, config.balance_tol)?,
        })
    };

    let mut iterates = vec![iterate(0, config.t0)?];
    let mut steps_to_converge = if converged(config.t0) { Some(0) } else { None };
    let mut prev = config.t0;
    let mut t = config.t0;
    let mut k = 0;
    while steps_to_converge.is_none() && k < config.max_steps {
        k += 1;
        let next = match config.kind {
            ControllerKind::Gradient => t - config.eta * problem.gradient(t),
            ControllerKind::Momentum => {
                let look = t + config.beta * (t - prev);
                look - config.eta * problem.gradient(look)
            }
            ControllerKind::Projected => {
                (t - config.eta * problem.gradient(t)).clamp(-t_balance, t_balance)
            }
        };
        if !next.is_finite() {
            // diverged; leave the sentinel in place
            break;
        }
        prev = t;
        t = next;
        iterates.push(iterate(k, t)?);
        if converged(t) {
            steps_to_converge = Some(k);
        }
    }

    let direction = if t_star >= config.t0 { 1.0 } else { -1.0 };
    let max_overshoot = iterates
        .iter()
        .map(|it| direction * (it.t - t_star))
        .fold(0.0, f64::max);
    let forbidden_steps = iterates
        .iter()
        .filter(|it| it.regime == RegimeLabel::PowerDominant)
        .count();

    Ok(ScalingTrace {
        kind: config.kind,
        iterates,
        t_star,
        t_balance,
        steps_to_converge: steps_to_converge.unwrap_or(config.max_steps),
        converged: steps_to_converge.is_some(),
        max_overshoot,
        forbidden_steps,
    })
}
