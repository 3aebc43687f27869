//! Seeded synthetic estimation problems with closed-form ground truth.
//!
//! # Random streams
//!
//! Samples are produced in chunks of [`CHUNK_LEN`] consecutive indices.
//! Chunk `c` of a problem with seed `s` draws from ChaCha8 keyed by
//! `ChaCha8Rng::seed_from_u64(s)` on stream `c` (`set_stream(c)`), so a
//! chunk can be generated without touching any other and the output does
//! not depend on how many threads do the work. Within a chunk every index
//! consumes its draws in a fixed order: signal first, then noise.
//!
//! Gaussian draws use `rand_distr::StandardNormal`, exponential draws
//! `rand_distr::Exp1`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::{MomentStats, PairedSample};
use crate::scaling::ScalingProblem;

/// Indices per independently seeded substream.
pub const CHUNK_LEN: usize = 1 << 16;
/// Size of the pilot sample used to vet amplifier estimators.
pub const PILOT_LEN: usize = 4096;
const PILOT_SEED_SALT: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    GaussianShrinkage,
    DeterministicParameter,
    HeavyTail,
    StepChange,
    DriftingPower,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 5] = [
        Self::GaussianShrinkage,
        Self::DeterministicParameter,
        Self::HeavyTail,
        Self::StepChange,
        Self::DriftingPower,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::GaussianShrinkage => "gaussian_shrinkage",
            Self::DeterministicParameter => "deterministic_parameter",
            Self::HeavyTail => "heavy_tail",
            Self::StepChange => "step_change",
            Self::DriftingPower => "drifting_power",
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            Self::GaussianShrinkage => "x ~ N(0, signal), z = x + N(0, noise)",
            Self::DeterministicParameter => "x = sqrt(signal) fixed, z = x + N(0, noise)",
            Self::HeavyTail => "x ~ Laplace with variance signal, z = x + N(0, noise)",
            Self::StepChange => "gaussian_shrinkage whose signal power jumps to `after` at index change_at",
            Self::DriftingPower => "gaussian_shrinkage with signal power signal*(1 + amplitude*sin(2*pi*k/period))",
        }
    }

    pub fn is_time_varying(self) -> bool {
        matches!(self, Self::StepChange | Self::DriftingPower)
    }
}

impl std::str::FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown problem kind `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    /// σx², or θ² for the deterministic parameter.
    pub signal_power: f64,
    /// σn²
    pub noise_power: f64,
    /// step_change: index of the jump.
    pub change_at: usize,
    /// step_change: signal power from `change_at` on.
    pub power_after: f64,
    /// drifting_power: relative amplitude in [0, 1).
    pub drift_amplitude: f64,
    /// drifting_power: period in samples.
    pub drift_period: f64,
    pub seed: u64,
}

impl ProblemSpec {
    pub fn new(kind: ProblemKind, signal_power: f64, noise_power: f64, seed: u64) -> Self {
        Self {
            kind,
            signal_power,
            noise_power,
            change_at: 1000,
            power_after: signal_power / 4.0,
            drift_amplitude: 0.5,
            drift_period: 2000.0,
            seed,
        }
    }

    pub fn gaussian_shrinkage(signal_power: f64, noise_power: f64, seed: u64) -> Self {
        Self::new(ProblemKind::GaussianShrinkage, signal_power, noise_power, seed)
    }

    pub fn step_change(before: f64, after: f64, change_at: usize, noise_power: f64, seed: u64) -> Self {
        Self {
            change_at,
            power_after: after,
            ..Self::new(ProblemKind::StepChange, before, noise_power, seed)
        }
    }

    pub fn drifting_power(base: f64, amplitude: f64, period: f64, noise_power: f64, seed: u64) -> Self {
        Self {
            drift_amplitude: amplitude,
            drift_period: period,
            ..Self::new(ProblemKind::DriftingPower, base, noise_power, seed)
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    /// Parses `kind[:key=value,...]` with keys `signal`, `noise`, `after`,
    /// `change_at`, `amplitude`, `period`, `seed`.
    pub fn parse(text: &str, seed: u64) -> Result<Self> {
        let (kind, params) = split_spec(text);
        let kind: ProblemKind = kind.parse()?;
        let mut spec = Self::new(kind, 1.0, 1.0, seed);
        if kind == ProblemKind::StepChange {
            spec.signal_power = 4.0;
            spec.power_after = 1.0;
        }
        let mut after_given = false;
        for (key, value) in params {
            match key {
                "signal" => spec.signal_power = parse_num(key, value)?,
                "noise" => spec.noise_power = parse_num(key, value)?,
                "after" => {
                    spec.power_after = parse_num(key, value)?;
                    after_given = true;
                }
                "change_at" => spec.change_at = parse_num(key, value)?,
                "amplitude" => spec.drift_amplitude = parse_num(key, value)?,
                "period" => spec.drift_period = parse_num(key, value)?,
                "seed" => spec.seed = parse_num(key, value)?,
                other => return Err(Error::InvalidSpec(format!("unknown problem key `{other}`"))),
            }
        }
        if kind != ProblemKind::StepChange && !after_given {
            spec.power_after = spec.signal_power / 4.0;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if !(self.signal_power.is_finite() && self.signal_power > 0.0) {
            return bad(format!("signal power must be positive, got {}", self.signal_power));
        }
        if !(self.noise_power.is_finite() && self.noise_power >= 0.0) {
            return bad(format!("noise power must be non-negative, got {}", self.noise_power));
        }
        match self.kind {
            ProblemKind::StepChange if !(self.power_after.is_finite() && self.power_after > 0.0) => {
                bad(format!("power after the step must be positive, got {}", self.power_after))
            }
            ProblemKind::DriftingPower
                if !((0.0..1.0).contains(&self.drift_amplitude)
                    && self.drift_period.is_finite()
                    && self.drift_period > 0.0) =>
            {
                bad(format!(
                    "drift needs amplitude in [0,1) and period > 0, got {} and {}",
                    self.drift_amplitude, self.drift_period
                ))
            }
            _ => Ok(()),
        }
    }

    /// σx² at stream index `k`.
    pub fn signal_power_at(&self, k: usize) -> f64 {
        match self.kind {
            ProblemKind::StepChange if k >= self.change_at => self.power_after,
            ProblemKind::DriftingPower => {
                self.signal_power * (1.0 + self.drift_amplitude * (2.0 * PI * k as f64 / self.drift_period).sin())
            }
            _ => self.signal_power,
        }
    }

    /// Population (E[X²], E[Z²], E[XZ]) at index `k`.
    pub fn population_at(&self, k: usize) -> ScalingProblem {
        let s = self.signal_power_at(k);
        ScalingProblem {
            ex2: s,
            ez2: s + self.noise_power,
            exz: s,
        }
    }

    fn draw(&self, k: usize, rng: &mut ChaCha8Rng) -> PairedSample {
        let power = self.signal_power_at(k);
        let x = match self.kind {
            ProblemKind::DeterministicParameter => power.sqrt(),
            ProblemKind::HeavyTail => {
                // Laplace(0, b) has variance 2b²
                let b = (power / 2.0).sqrt();
                let e: f64 = rng.sample(Exp1);
                if rng.random::<bool>() {
                    b * e
                } else {
                    -b * e
                }
            }
            _ => power.sqrt() * rng.sample::<f64, _>(StandardNormal),
        };
        let noise: f64 = rng.sample(StandardNormal);
        PairedSample::new(x, x + self.noise_power.sqrt() * noise)
    }
}

/// `(x, z)` pairs for indices `0..n`.
pub fn generate(problem: &ProblemSpec, n: usize) -> Result<Vec<PairedSample>> {
    problem.validate()?;
    if n == 0 {
        return Err(Error::InvalidSpec("sample count must be at least 1".into()));
    }
    let chunks = n.div_ceil(CHUNK_LEN);
    let parts: Vec<Vec<PairedSample>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(problem.seed);
            rng.set_stream(c as u64);
            let start = c * CHUNK_LEN;
            let end = (start + CHUNK_LEN).min(n);
            (start..end).map(|k| problem.draw(k, &mut rng)).collect()
        })
        .collect();
    Ok(parts.concat())
}

/// Population `t*` for stationary problems.
pub fn true_optimum(problem: &ProblemSpec) -> Result<f64> {
    problem.validate()?;
    if problem.kind.is_time_varying() {
        return Err(Error::NoClosedForm(problem.kind.as_str()));
    }
    problem.population_at(0).optimal_scale()
}

/// Population moments for every index `0..n`.
pub fn population_schedule(problem: &ProblemSpec, n: usize) -> Result<Vec<ScalingProblem>> {
    problem.validate()?;
    Ok((0..n).map(|k| problem.population_at(k)).collect())
}

/// Population `t*_k` for every index `0..n`.
pub fn optimum_schedule(problem: &ProblemSpec, n: usize) -> Result<Vec<f64>> {
    population_schedule(problem, n)?
        .iter()
        .map(ScalingProblem::optimal_scale)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimatorSpec {
    Zero,
    Identity,
    Scale { c: f64 },
    /// Fits `c = Ê[xz]/Ê[z²]` on the leading `calibration` fraction of the
    /// samples and applies it to the rest.
    EmpiricalMmse { calibration: f64 },
    /// `c·z` with `c > 1`, meant to land in the power-dominant regime.
    Amplifier { c: f64 },
}

pub const ESTIMATOR_KINDS: [(&str, &str); 5] = [
    ("zero", "v = 0"),
    ("identity", "v = z"),
    ("scale", "v = c*z (key c)"),
    ("empirical_mmse", "v = c_hat*z, c_hat fitted on a calibration split (key calibration, default 0.5)"),
    ("amplifier", "v = c*z with c > 1, checked to be power-dominant on a pilot sample (key c)"),
];

impl EstimatorSpec {
    /// Parses `zero`, `identity`, `scale:c=0.5`, `empirical_mmse:calibration=0.5`
    /// or `amplifier:c=2`.
    pub fn parse(text: &str) -> Result<Self> {
        let (kind, params) = split_spec(text);
        let mut c = None;
        let mut calibration = 0.5;
        for (key, value) in params {
            match key {
                "c" => c = Some(parse_num(key, value)?),
                "calibration" => calibration = parse_num(key, value)?,
                other => return Err(Error::InvalidSpec(format!("unknown estimator key `{other}`"))),
            }
        }
        let need_c = || c.ok_or_else(|| Error::InvalidSpec(format!("estimator `{kind}` needs c=<value>")));
        let spec = match kind {
            "zero" => Self::Zero,
            "identity" => Self::Identity,
            "scale" => Self::Scale { c: need_c()? },
            "empirical_mmse" => Self::EmpiricalMmse { calibration },
            "amplifier" => Self::Amplifier { c: need_c()? },
            other => return Err(Error::InvalidSpec(format!("unknown estimator kind `{other}`"))),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn name(&self) -> String {
        match self {
            Self::Zero => "zero".into(),
            Self::Identity => "identity".into(),
            Self::Scale { c } => format!("scale(c={c})"),
            Self::EmpiricalMmse { .. } => "empirical_mmse".into(),
            Self::Amplifier { c } => format!("amplifier(c={c})"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Scale { c } if !c.is_finite() => Err(Error::InvalidSpec("scale c must be finite".into())),
            Self::Amplifier { c } if !(c.is_finite() && c > 1.0) => {
                Err(Error::InvalidSpec(format!("amplifier needs finite c > 1, got {c}")))
            }
            Self::EmpiricalMmse { calibration } if !(calibration > 0.0 && calibration < 1.0) => Err(
                Error::InvalidSpec(format!("calibration fraction must lie in (0, 1), got {calibration}")),
            ),
            _ => Ok(()),
        }
    }

    /// Builds an amplifier after checking on a pilot sample of `problem`
    /// that `c·z` out-powers the signal.
    pub fn amplifier(c: f64, problem: &ProblemSpec) -> Result<Self> {
        let spec = Self::Amplifier { c };
        spec.verify_for(problem)?;
        Ok(spec)
    }

    /// Amplifier pilot check; a no-op for the other kinds.
    pub fn verify_for(&self, problem: &ProblemSpec) -> Result<()> {
        self.validate()?;
        if let Self::Amplifier { c } = *self {
            let pilot = generate(&problem.with_seed(problem.seed ^ PILOT_SEED_SALT), PILOT_LEN)?;
            let scaled: Vec<_> = pilot.iter().map(|p| PairedSample::new(p.x, c * p.v)).collect();
            let st = MomentStats::from_samples(&scaled)?;
            if st.ev2 <= st.ex2 {
                return Err(Error::InvalidSpec(format!(
                    "amplifier c={c} is not power-dominant on `{}` (pilot E[v^2]={} <= E[x^2]={})",
                    problem.kind.as_str(),
                    st.ev2,
                    st.ex2
                )));
            }
        }
        Ok(())
    }

    /// Maps candidates `z` (the `v` field of each pair) to estimates.
    pub fn apply(&self, samples: &[PairedSample]) -> Result<EstimatorOutput> {
        self.validate()?;
        let scaled = |c: f64, s: &[PairedSample]| -> Vec<PairedSample> {
            s.iter().map(|p| PairedSample::new(p.x, c * p.v)).collect()
        };
        Ok(match *self {
            Self::Zero => EstimatorOutput {
                gain: 0.0,
                samples: samples.iter().map(|p| PairedSample::new(p.x, 0.0)).collect(),
            },
            Self::Identity => EstimatorOutput {
                gain: 1.0,
                samples: samples.to_vec(),
            },
            Self::Scale { c } | Self::Amplifier { c } => EstimatorOutput {
                gain: c,
                samples: scaled(c, samples),
            },
            Self::EmpiricalMmse { calibration } => {
                let cut = (samples.len() as f64 * calibration).floor() as usize;
                if cut == 0 || cut >= samples.len() {
                    return Err(Error::InvalidSpec(format!(
                        "{} samples are too few to split at fraction {calibration}",
                        samples.len()
                    )));
                }
                let (fit, eval) = samples.split_at(cut);
                let gain = ScalingProblem::from_samples(fit)?.optimal_scale()?;
                EstimatorOutput {
                    gain,
                    samples: scaled(gain, eval),
                }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorOutput {
    /// Multiplier applied to `z`.
    pub gain: f64,
    /// `(x, estimate)` pairs. For `empirical_mmse` only the evaluation split.
    pub samples: Vec<PairedSample>,
}

fn split_spec(text: &str) -> (&str, Vec<(&str, &str)>) {
    let text = text.trim();
    let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
    let params = rest
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            let (k, v) = p.split_once('=').unwrap_or((p, ""));
            (k.trim(), v.trim())
        })
        .collect();
    (kind.trim(), params)
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidSpec(format!("`{value}` is not a valid value for `{key}`")))
}
