//! Tracking a drifting `t*` with exponentially forgotten moments.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::ScalingProblem;
use crate::diagnostics::{RegimeLabel, DEFAULT_BALANCE_TOL};
use crate::error::{Error, Result};
use crate::fmt::real;
use crate::moments::{csv_error, PairedSample};

/// Running `m_xz`, `m_zz` with forgetting factor λ.
///
/// For λ < 1 the update is `m ← λ·m + (1 − λ)·sample`. For λ = 1 the
/// weight becomes `1/k`, which is the plain running mean of the prefix, so
/// the tracked scale equals the batch `t*` of everything seen so far.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForgettingTracker {
    lambda: f64,
    m_xz: f64,
    m_zz: f64,
    k: usize,
}

impl ForgettingTracker {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::InvalidSpec(format!("forgetting factor must lie in (0, 1], got {lambda}")));
        }
        Ok(Self {
            lambda,
            m_xz: 0.0,
            m_zz: 0.0,
            k: 0,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Folds in one `(x, z)` pair and returns the updated scale estimate.
    pub fn update(&mut self, sample: PairedSample) -> Result<f64> {
        if !sample.is_finite() {
            return Err(Error::NonFiniteSample { index: self.k });
        }
        self.k += 1;
        let w = if self.lambda == 1.0 {
            1.0 / self.k as f64
        } else {
            1.0 - self.lambda
        };
        self.m_xz += w * (sample.x * sample.v - self.m_xz);
        self.m_zz += w * (sample.v * sample.v - self.m_zz);
        self.estimate()
    }

    pub fn estimate(&self) -> Result<f64> {
        if self.m_zz > 0.0 {
            Ok(self.m_xz / self.m_zz)
        } else {
            Err(Error::DegenerateWindow { step: self.k.saturating_sub(1) })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackStep {
    pub k: usize,
    pub true_t: f64,
    pub tracked_t: f64,
    pub tracking_error: f64,
    /// Regime of `tracked_t · Z` under the true moments at step k.
    pub regime: RegimeLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackTrace {
    pub forgetting: f64,
    pub steps: Vec<TrackStep>,
}

impl TrackTrace {
    /// Number of steps spent in the power-dominant regime.
    pub fn forbidden_residency(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| s.regime == RegimeLabel::PowerDominant)
            .count()
    }

    /// First step `k ≥ from` whose tracked scale lies within
    /// `rel_band·|t*_k|` of the true optimum.
    pub fn first_within(&self, from: usize, rel_band: f64) -> Option<usize> {
        self.steps
            .iter()
            .skip(from)
            .find(|s| s.tracking_error <= rel_band * s.true_t.abs())
            .map(|s| s.k)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["k", "true_t", "tracked_t", "tracking_error", "regime"])
            .map_err(csv_error)?;
        for s in &self.steps {
            wtr.write_record([
                s.k.to_string(),
                real(s.true_t),
                real(s.tracked_t),
                real(s.tracking_error),
                s.regime.to_string(),
            ])
            .map_err(csv_error)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Runs a [`ForgettingTracker`] over `stream`, scoring each step against
/// the population moments in `truth` (same length as `stream`).
pub fn track_moving_optimum(
    stream: &[PairedSample],
    truth: &[ScalingProblem],
    lambda: f64,
) -> Result<TrackTrace> {
    if stream.len() != truth.len() {
        return Err(Error::InvalidSpec(format!(
            "stream has {} samples but truth schedule has {}",
            stream.len(),
            truth.len()
        )));
    }
    let mut tracker = ForgettingTracker::new(lambda)?;
    let mut steps = Vec::with_capacity(stream.len());
    for (k, (sample, problem)) in stream.iter().zip(truth).enumerate() {
        let tracked_t = tracker.update(*sample).map_err(|e| match e {
            Error::NonFiniteSample { .. } => Error::NonFiniteSample { index: k },
            other => other,
        })?;
        let true_t = problem.optimal_scale()?;
        steps.push(TrackStep {
            k,
            true_t,
            tracked_t,
            tracking_error: (tracked_t - true_t).abs(),
            regime: problem.regime_at(tracked_t, DEFAULT_BALANCE_TOL)?,
        });
    }
    Ok(TrackTrace {
        forgetting: lambda,
        steps,
    })
}
