//! The scaled estimator family X̂(t) = t·Z.
//!
//! Three moments fix everything about the family:
//!
//! ```text
//! MSE(t) = t²·E[Z²] − 2t·E[XZ] + E[X²]
//! t*     = E[XZ] / E[Z²]
//! ```
//!
//! At `t*` the estimate is orthogonal to its error and its power is
//! `E[XZ]²/E[Z²] ≤ E[X²]` (Cauchy–Schwarz), with equality only for a
//! candidate collinear with the signal. The MSE-optimal member therefore
//! never sits in the power-dominant regime.

mod path;
mod track;

pub use path::{run_path, ControllerConfig, ControllerKind, PathIterate, ScalingTrace};
pub use track::{track_moving_optimum, ForgettingTracker, TrackStep, TrackTrace};

use serde::{Deserialize, Serialize};

use crate::diagnostics::{classify_powers, RegimeLabel};
use crate::error::{Error, Result};
use crate::moments::{MomentStats, PairedSample};

/// Relative slack allowed on `E[XZ]² ≤ E[X²]·E[Z²]`.
const CAUCHY_SCHWARZ_SLACK: f64 = 1e-12;
/// `conservation_margin` below `COLLINEAR_TOL·E[X²]` counts as equality.
pub const COLLINEAR_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingProblem {
    pub ex2: f64,
    pub ez2: f64,
    pub exz: f64,
}

impl ScalingProblem {
    pub fn new(ex2: f64, ez2: f64, exz: f64) -> Result<Self> {
        if !(ex2.is_finite() && ez2.is_finite() && exz.is_finite()) {
            return Err(Error::InvalidSpec("scaling moments must be finite".into()));
        }
        if ex2 < 0.0 || ez2 < 0.0 {
            return Err(Error::InvalidSpec(format!("negative power: ex2={ex2}, ez2={ez2}")));
        }
        let bound = ex2 * ez2;
        if exz * exz > bound + CAUCHY_SCHWARZ_SLACK * bound {
            return Err(Error::InvalidSpec(format!(
                "moments violate Cauchy-Schwarz: exz^2={} > ex2*ez2={bound}",
                exz * exz
            )));
        }
        Ok(Self { ex2, ez2, exz })
    }

    /// Reads `v` of each pair as the unscaled candidate `Z`.
    pub fn from_stats(stats: &MomentStats) -> Result<Self> {
        Self::new(stats.ex2, stats.ev2, stats.exv)
    }

    pub fn from_samples(samples: &[PairedSample]) -> Result<Self> {
        Self::from_stats(&MomentStats::from_samples(samples)?)
    }

    pub fn mse_of_t(&self, t: f64) -> f64 {
        t * t * self.ez2 - 2.0 * t * self.exz + self.ex2
    }

    /// d MSE / dt
    pub fn gradient(&self, t: f64) -> f64 {
        2.0 * self.ez2 * t - 2.0 * self.exz
    }

    /// E[(tZ)²]
    pub fn power_at(&self, t: f64) -> f64 {
        t * t * self.ez2
    }

    /// E[tZ·(tZ − X)]
    pub fn coupling_at(&self, t: f64) -> f64 {
        t * t * self.ez2 - t * self.exz
    }

    pub fn regime_at(&self, t: f64, balance_tol: f64) -> Result<RegimeLabel> {
        classify_powers(self.ex2, self.power_at(t), balance_tol)
    }

    pub fn optimal_scale(&self) -> Result<f64> {
        self.require_candidate_power()?;
        Ok(self.exz / self.ez2)
    }

    /// The |t| at which `tZ` has exactly the signal's power.
    pub fn balance_scale(&self) -> Result<f64> {
        self.require_candidate_power()?;
        Ok((self.ex2 / self.ez2).sqrt())
    }

    pub fn certify_optimum(&self) -> Result<ScalingCertificate> {
        let t_star = self.optimal_scale()?;
        let power_at_star = self.power_at(t_star);
        let conservation_margin = self.ex2 - power_at_star;
        Ok(ScalingCertificate {
            t_star,
            mse_at_star: self.mse_of_t(t_star),
            orthogonality_residual: self.coupling_at(t_star),
            power_at_star,
            conservation_margin,
            collinear: conservation_margin.abs() <= COLLINEAR_TOL * self.ex2,
        })
    }

    fn require_candidate_power(&self) -> Result<()> {
        if self.ez2 > 0.0 {
            Ok(())
        } else {
            Err(Error::ZeroCandidatePower)
        }
    }
}

/// What holds at the MSE-optimal scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingCertificate {
    pub t_star: f64,
    pub mse_at_star: f64,
    /// Ê[X̂(t*)·e(t*)], zero up to rounding.
    pub orthogonality_residual: f64,
    pub power_at_star: f64,
    /// Ê[X²] − power_at_star, non-negative up to rounding.
    pub conservation_margin: f64,
    pub collinear: bool,
}

impl ScalingCertificate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p121() -> ScalingProblem {
        ScalingProblem::new(1.0, 2.0, 1.0).unwrap()
    }

    #[test]
    fn mse_examples() {
        let p = p121();
        assert_eq!(p.mse_of_t(0.0), 1.0);
        assert_eq!(p.mse_of_t(0.5), 0.5);
        assert_eq!(p.mse_of_t(1.0), 1.0);
    }

    #[test]
    fn optimal_scale_examples() {
        assert_eq!(p121().optimal_scale().unwrap(), 0.5);
        assert_eq!(ScalingProblem::new(1.0, 3.0, 0.0).unwrap().optimal_scale().unwrap(), 0.0);
        assert_eq!(ScalingProblem::new(1.0, 1.0, 1.0).unwrap().optimal_scale().unwrap(), 1.0);
        let zero = ScalingProblem::new(1.0, 0.0, 0.0).unwrap();
        assert!(matches!(zero.optimal_scale(), Err(Error::ZeroCandidatePower)));
        assert!(matches!(zero.balance_scale(), Err(Error::ZeroCandidatePower)));
    }

    #[test]
    fn balance_scale_examples() {
        assert!((p121().balance_scale().unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(ScalingProblem::new(1.0, 1.0, 0.3).unwrap().balance_scale().unwrap(), 1.0);
        assert_eq!(ScalingProblem::new(4.0, 1.0, 0.3).unwrap().balance_scale().unwrap(), 2.0);
    }

    #[test]
    fn certificate_examples() {
        let c = p121().certify_optimum().unwrap();
        assert_eq!(c.t_star, 0.5);
        assert_eq!(c.orthogonality_residual, 0.0);
        assert_eq!(c.power_at_star, 0.5);
        assert_eq!(c.conservation_margin, 0.5);
        assert!(!c.collinear);

        let c = ScalingProblem::new(1.0, 1.0, 1.0).unwrap().certify_optimum().unwrap();
        assert_eq!((c.t_star, c.power_at_star, c.conservation_margin), (1.0, 1.0, 0.0));
        assert!(c.collinear);

        let pairs = [PairedSample::new(1.0, 2.0), PairedSample::new(-1.0, 0.0)];
        let c = ScalingProblem::from_samples(&pairs).unwrap().certify_optimum().unwrap();
        assert_eq!(c.t_star, 0.5);
        // X̂ = (1, 0), e = (0, 1)
        let est: Vec<_> = pairs.iter().map(|p| PairedSample::new(p.x, c.t_star * p.v)).collect();
        let st = MomentStats::from_samples(&est).unwrap();
        assert_eq!(st.coupling, 0.0);
        assert_eq!(c.orthogonality_residual, 0.0);
        assert_eq!(c.power_at_star, 0.5);
    }

    #[test]
    fn rejects_cauchy_schwarz_violation() {
        assert!(ScalingProblem::new(1.0, 1.0, 1.5).is_err());
        assert!(ScalingProblem::new(-1.0, 1.0, 0.0).is_err());
    }

    fn problems() -> impl Strategy<Value = (Vec<PairedSample>, ScalingProblem)> {
        prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64, -2.0..2.0f64), 2..60).prop_map(|v| {
            let samples: Vec<_> = v.iter().map(|&(x, n, a)| PairedSample::new(x, a * x + n)).collect();
            let p = ScalingProblem::from_samples(&samples).unwrap();
            (samples, p)
        })
    }

    proptest! {
        #[test]
        fn quadratic_minimality((_s, p) in problems(), ts in prop::collection::vec(-10.0..10.0f64, 100)) {
            prop_assume!(p.ez2 > 0.0);
            let best = p.mse_of_t(p.optimal_scale().unwrap());
            for t in ts {
                prop_assert!(p.mse_of_t(t) >= best - 1e-12 * p.ex2);
            }
        }

        #[test]
        fn safe_zone_law((_s, p) in problems()) {
            prop_assume!(p.ez2 > 0.0);
            let c = p.certify_optimum().unwrap();
            prop_assert!(c.orthogonality_residual.abs() <= 1e-12 * p.ex2.max(1.0));
            prop_assert!(c.power_at_star <= p.ex2 * (1.0 + 1e-12));
            prop_assert!(c.conservation_margin >= -1e-12 * p.ex2);
            let t_bal = p.balance_scale().unwrap();
            if p.exz >= 0.0 {
                prop_assert!(0.0 <= c.t_star && c.t_star <= t_bal + 1e-12);
            } else {
                prop_assert!(-t_bal - 1e-12 <= c.t_star && c.t_star <= 0.0);
            }
        }

        #[test]
        fn collinear_hits_equality(xs in prop::collection::vec(-5.0..5.0f64, 1..50), a in 0.1..4.0f64, neg in any::<bool>()) {
            let a = if neg { -a } else { a };
            let samples: Vec<_> = xs.iter().map(|&x| PairedSample::new(x, a * x)).collect();
            let p = ScalingProblem::from_samples(&samples).unwrap();
            prop_assume!(p.ez2 > 0.0);
            prop_assert!(p.certify_optimum().unwrap().collinear);
        }

        #[test]
        fn gradient_matches_finite_difference(ex2 in 0.1..2.0f64, ez2 in 0.1..2.0f64, rho in -1.0..1.0f64, t in -2.0..2.0f64) {
            let p = ScalingProblem::new(ex2, ez2, rho * (ex2 * ez2).sqrt()).unwrap();
            let h = 1e-5;
            let fd = (p.mse_of_t(t + h) - p.mse_of_t(t - h)) / (2.0 * h);
            let g = p.gradient(t);
            prop_assert!((fd - g).abs() <= 1e-6 * g.abs().max(1.0), "{fd} vs {g}");
        }
    }
}
