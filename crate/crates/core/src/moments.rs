//! Second-moment sufficient statistics for paired (truth, candidate) draws.
//!
//! Every expectation used by the diagnostics is realised as an empirical
//! mean over an explicit sample set, so the algebraic identities between
//! them (MSE expansion, coupling decomposition) hold up to rounding only.
//! Summaries are plain values: build them independently (one per thread or
//! chunk) and combine with [`MomentSummary::merge`].

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmt::real;

/// One aligned draw: the true value `x` and a candidate or estimate `v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedSample {
    pub x: f64,
    pub v: f64,
}

impl PairedSample {
    pub const fn new(x: f64, v: f64) -> Self {
        Self { x, v }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.v.is_finite()
    }
}

impl From<(f64, f64)> for PairedSample {
    fn from((x, v): (f64, f64)) -> Self {
        Self { x, v }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Summation {
    /// Naive left-to-right addition.
    #[default]
    Plain,
    /// Neumaier-compensated addition; worth it for very long streams.
    Compensated,
}

const XX: usize = 0;
const VV: usize = 1;
const XV: usize = 2;
const X: usize = 3;
const V: usize = 4;

/// Mergeable running sums `n, Σx², Σv², Σxv, Σx, Σv`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MomentSummary {
    n: u64,
    sums: [f64; 5],
    comp: [f64; 5],
    summation: Summation,
}

impl MomentSummary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_summation(summation: Summation) -> Self {
        Self {
            summation,
            ..Self::default()
        }
    }

    pub fn compensated() -> Self {
        Self::with_summation(Summation::Compensated)
    }

    pub fn from_samples(samples: &[PairedSample]) -> Result<Self> {
        Self::new().accumulate(samples)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn summation(&self) -> Summation {
        self.summation
    }

    fn total(&self, i: usize) -> f64 {
        self.sums[i] + self.comp[i]
    }

    pub fn sum_xx(&self) -> f64 {
        self.total(XX)
    }

    pub fn sum_vv(&self) -> f64 {
        self.total(VV)
    }

    pub fn sum_xv(&self) -> f64 {
        self.total(XV)
    }

    pub fn sum_x(&self) -> f64 {
        self.total(X)
    }

    pub fn sum_v(&self) -> f64 {
        self.total(V)
    }

    /// Returns a new summary with `batch` folded in. `self` is untouched.
    ///
    /// Fails on the first non-finite pair and reports its index within
    /// `batch`.
    pub fn accumulate(&self, batch: &[PairedSample]) -> Result<Self> {
        let mut out = *self;
        for (index, s) in batch.iter().enumerate() {
            if !s.is_finite() {
                return Err(Error::NonFiniteSample { index });
            }
            out.push_unchecked(*s);
        }
        Ok(out)
    }

    /// In-place single-sample update.
    pub fn push(&mut self, sample: PairedSample) -> Result<()> {
        if !sample.is_finite() {
            return Err(Error::NonFiniteSample { index: 0 });
        }
        self.push_unchecked(sample);
        Ok(())
    }

    fn push_unchecked(&mut self, s: PairedSample) {
        self.n += 1;
        let terms = [s.x * s.x, s.v * s.v, s.x * s.v, s.x, s.v];
        match self.summation {
            Summation::Plain => {
                for (sum, t) in self.sums.iter_mut().zip(terms) {
                    *sum += t;
                }
            }
            Summation::Compensated => {
                for ((sum, comp), t) in self.sums.iter_mut().zip(&mut self.comp).zip(terms) {
                    neumaier_add(sum, comp, t);
                }
            }
        }
    }

    /// Component-wise sum of two summaries. The result is compensated if
    /// either input is.
    pub fn merge(&self, other: &Self) -> Self {
        let summation = if self.summation == Summation::Compensated
            || other.summation == Summation::Compensated
        {
            Summation::Compensated
        } else {
            Summation::Plain
        };
        let mut out = Self {
            n: self.n + other.n,
            sums: self.sums,
            comp: self.comp,
            summation,
        };
        for i in 0..5 {
            match summation {
                Summation::Plain => out.sums[i] += other.sums[i],
                Summation::Compensated => {
                    neumaier_add(&mut out.sums[i], &mut out.comp[i], other.sums[i]);
                    out.comp[i] += other.comp[i];
                }
            }
        }
        out
    }

    pub fn finalize(&self) -> Result<MomentStats> {
        if self.n == 0 {
            return Err(Error::EmptySummary);
        }
        let n = self.n as f64;
        let ex2 = self.sum_xx() / n;
        let ev2 = self.sum_vv() / n;
        let exv = self.sum_xv() / n;
        Ok(MomentStats {
            n: self.n,
            ex2,
            ev2,
            exv,
            mean_e: (self.sum_v() - self.sum_x()) / n,
            mse: ev2 - 2.0 * exv + ex2,
            coupling: ev2 - exv,
        })
    }
}

fn neumaier_add(sum: &mut f64, comp: &mut f64, value: f64) {
    let t = *sum + value;
    if sum.abs() >= value.abs() {
        *comp += (*sum - t) + value;
    } else {
        *comp += (value - t) + *sum;
    }
    *sum = t;
}

/// Empirical moments derived from a [`MomentSummary`].
///
/// `v` plays the role of the estimate X̂, so `mean_e` is the bias Ê[X̂ − X],
/// `mse` is Ê[(X̂ − X)²] and `coupling` is Ê[X̂·(X̂ − X)].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentStats {
    pub n: u64,
    pub ex2: f64,
    pub ev2: f64,
    pub exv: f64,
    pub mean_e: f64,
    pub mse: f64,
    pub coupling: f64,
}

impl MomentStats {
    pub fn from_samples(samples: &[PairedSample]) -> Result<Self> {
        MomentSummary::from_samples(samples)?.finalize()
    }

    /// Ê[V²] / Ê[X²]; infinite when the signal has no power.
    pub fn power_ratio(&self) -> f64 {
        self.ev2 / self.ex2
    }
}

/// Reads the two-column `x,v` CSV format.
pub fn read_csv<R: Read>(reader: R) -> Result<Vec<PairedSample>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "v" {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `x,v`, found `{}`", headers.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(Error::Parse {
                line,
                message: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let parse = |field: &str, name: &str| -> Result<f64> {
            let value: f64 = field.parse().map_err(|_| Error::Parse {
                line,
                message: format!("`{field}` is not a number in column {name}"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    line,
                    message: format!("non-finite value in column {name}"),
                });
            }
            Ok(value)
        };
        out.push(PairedSample::new(parse(&record[0], "x")?, parse(&record[1], "v")?));
    }
    Ok(out)
}

pub fn write_csv<W: Write>(writer: W, samples: &[PairedSample]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["x", "v"]).map_err(csv_error)?;
    for s in samples {
        wtr.write_record([real(s.x), real(s.v)]).map_err(csv_error)?;
    }
    wtr.flush()?;
    Ok(())
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse {
            line,
            message: format!("{other:?}"),
        },
    }
}
