//! Safe-zone maps.
//!
//! Both maps share one coordinate system: the power ratio Ê[X̂²]/Ê[X²] on
//! the horizontal axis and the normalised coupling Ê[X̂·e]/MSE on the
//! vertical axis. In these units the power-balance line is `x = 1` and the
//! penalty line is `y = 0.5` for every estimator, and they cross at the
//! singularity `(1, 0.5)`.
//!
//! The left map is the ROC-style regime picture (green band `x ≤ 1`, red
//! band `x > 1`). The right map shows the optimisation view: the bounded
//! safe box `x ≤ 1, y ≤ 0.5`, the unbounded forbidden quadrant above and
//! right of the singularity, and the ideal path along `y = 0` from the zero
//! estimate to the MSE-optimal scale.

mod svg;

pub use svg::{render_svg, StyleConfig};

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{classify_powers, RegimeLabel, DEFAULT_BALANCE_TOL};
use crate::error::{Error, Result};
use crate::fmt::real;
use crate::moments::{csv_error, MomentStats};
use crate::scaling::ScalingProblem;

pub const BALANCE_LINE: f64 = 1.0;
pub const PENALTY_LINE: f64 = 0.5;
pub const SINGULARITY: [f64; 2] = [BALANCE_LINE, PENALTY_LINE];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapPoint {
    pub label: String,
    pub power_ratio: f64,
    /// Coupling over MSE; `None` when the MSE is zero.
    pub coupling_norm: Option<f64>,
    pub coupling_raw: f64,
    pub regime: RegimeLabel,
}

impl MapPoint {
    fn from_parts(label: &str, ex2: f64, ev2: f64, coupling: f64, mse: f64) -> Result<Self> {
        let regime = classify_powers(ex2, ev2, DEFAULT_BALANCE_TOL)?;
        Ok(Self {
            label: label.to_owned(),
            power_ratio: ev2 / ex2,
            coupling_norm: (mse > 0.0).then(|| coupling / mse),
            coupling_raw: coupling,
            regime,
        })
    }

    /// y-coordinate for plotting; an undefined ratio sits on the zero axis.
    pub fn plot_y(&self) -> f64 {
        self.coupling_norm.unwrap_or(0.0)
    }
}

pub fn map_point(label: &str, stats: &MomentStats) -> Result<MapPoint> {
    MapPoint::from_parts(label, stats.ex2, stats.ev2, stats.coupling, stats.mse)
}

/// Point for the member `t·Z` of a scaled family, from population or
/// empirical moments.
pub fn map_point_scaled(label: &str, problem: &ScalingProblem, t: f64) -> Result<MapPoint> {
    MapPoint::from_parts(
        label,
        problem.ex2,
        problem.power_at(t),
        problem.coupling_at(t),
        problem.mse_of_t(t),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    /// Regime zones, ROC-style.
    Left,
    /// Bounded vs. unbounded optimisation view.
    Right,
}

impl MapKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Left => "left",
            Self::Right => "right",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Safe,
    Boundary,
    Forbidden,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapGeometry {
    /// x of the vertical power-balance line.
    pub balance_line: f64,
    /// y of the horizontal penalty line.
    pub penalty_line: f64,
    pub singularity: [f64; 2],
    pub bounds: Bounds,
    pub safe_region: Vec<[f64; 2]>,
    pub forbidden_region: Vec<[f64; 2]>,
    pub safe_bounded: bool,
    pub forbidden_bounded: bool,
    pub ideal_path: [[f64; 2]; 2],
}

impl MapGeometry {
    /// Region of a point by its power ratio alone.
    pub fn region_of(&self, power_ratio: f64, balance_tol: f64) -> Region {
        let gap = power_ratio - self.balance_line;
        if gap.abs() <= balance_tol * self.balance_line {
            Region::Boundary
        } else if gap > 0.0 {
            Region::Forbidden
        } else {
            Region::Safe
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub label: String,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapDataset {
    pub kind: MapKind,
    pub points: Vec<MapPoint>,
    pub geometry: MapGeometry,
    pub annotations: Vec<Annotation>,
}

fn bounds_for(points: &[MapPoint]) -> Bounds {
    let max_x = points.iter().map(|p| p.power_ratio).fold(0.0, f64::max);
    let ys = points.iter().map(MapPoint::plot_y);
    let (lo, hi) = ys.fold((0.0f64, 0.0f64), |(lo, hi), y| (lo.min(y), hi.max(y)));
    Bounds {
        x_min: 0.0,
        x_max: (1.1 * max_x).max(2.0),
        y_min: (1.1 * lo).min(-0.5),
        y_max: (1.1 * hi).max(1.5),
    }
}

fn rect(x0: f64, x1: f64, y0: f64, y1: f64) -> Vec<[f64; 2]> {
    vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]]
}

fn annotate(points: &[MapPoint]) -> Vec<Annotation> {
    points
        .iter()
        .filter(|p| p.regime == RegimeLabel::PowerBalance)
        .map(|p| Annotation {
            label: p.label.clone(),
            note: "on-boundary".into(),
        })
        .chain(points.iter().filter(|p| p.coupling_norm.is_none()).map(|p| Annotation {
            label: p.label.clone(),
            note: "zero-mse".into(),
        }))
        .collect()
}

fn check_points(points: &[MapPoint]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

pub fn build_left_map(points: &[MapPoint]) -> Result<MapDataset> {
    check_points(points)?;
    let b = bounds_for(points);
    Ok(MapDataset {
        kind: MapKind::Left,
        points: points.to_vec(),
        geometry: MapGeometry {
            balance_line: BALANCE_LINE,
            penalty_line: PENALTY_LINE,
            singularity: SINGULARITY,
            bounds: b,
            safe_region: rect(b.x_min, BALANCE_LINE, b.y_min, b.y_max),
            forbidden_region: rect(BALANCE_LINE, b.x_max, b.y_min, b.y_max),
            safe_bounded: true,
            forbidden_bounded: false,
            ideal_path: [[0.0, 0.0], [BALANCE_LINE, 0.0]],
        },
        annotations: annotate(points),
    })
}

pub fn build_right_map(points: &[MapPoint]) -> Result<MapDataset> {
    check_points(points)?;
    let b = bounds_for(points);
    Ok(MapDataset {
        kind: MapKind::Right,
        points: points.to_vec(),
        geometry: MapGeometry {
            balance_line: BALANCE_LINE,
            penalty_line: PENALTY_LINE,
            singularity: SINGULARITY,
            bounds: b,
            safe_region: rect(b.x_min, BALANCE_LINE, b.y_min, PENALTY_LINE),
            forbidden_region: rect(BALANCE_LINE, b.x_max, PENALTY_LINE, b.y_max),
            safe_bounded: true,
            forbidden_bounded: false,
            ideal_path: [[0.0, 0.0], [BALANCE_LINE, 0.0]],
        },
        annotations: annotate(points),
    })
}

impl MapDataset {
    /// Ends the ideal path at the certified optimum's power ratio
    /// `ρ* = E[XZ]²/(E[X²]·E[Z²])`.
    pub fn with_optimum(mut self, rho_star: f64) -> Self {
        self.geometry.ideal_path[1] = [rho_star, 0.0];
        self
    }

    pub fn geometry_json(&self) -> String {
        #[derive(Serialize)]
        struct Sidecar<'a> {
            kind: MapKind,
            balance_line: f64,
            penalty_line: f64,
            singularity: [f64; 2],
            ideal_path: [[f64; 2]; 2],
            bounds: Bounds,
            safe_region: &'a [[f64; 2]],
            safe_bounded: bool,
            forbidden_region: &'a [[f64; 2]],
            forbidden_bounded: bool,
            annotations: &'a [Annotation],
        }
        let g = &self.geometry;
        serde_json::to_string_pretty(&Sidecar {
            kind: self.kind,
            balance_line: g.balance_line,
            penalty_line: g.penalty_line,
            singularity: g.singularity,
            ideal_path: g.ideal_path,
            bounds: g.bounds,
            safe_region: &g.safe_region,
            safe_bounded: g.safe_bounded,
            forbidden_region: &g.forbidden_region,
            forbidden_bounded: g.forbidden_bounded,
            annotations: &self.annotations,
        })
        .expect("geometry serializes")
    }

    pub fn points_csv(&self) -> Result<String> {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record(["label", "power_ratio", "coupling_norm", "coupling_raw", "regime"])
            .map_err(csv_error)?;
        for p in &self.points {
            wtr.write_record([
                p.label.clone(),
                real(p.power_ratio),
                p.coupling_norm.map(real).unwrap_or_default(),
                real(p.coupling_raw),
                p.regime.to_string(),
            ])
            .map_err(csv_error)?;
        }
        let bytes = wtr.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Emitted files for one dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmittedDataset {
    /// `label,power_ratio,coupling_norm,coupling_raw,regime`; an empty
    /// `coupling_norm` field means the MSE was zero.
    pub csv: String,
    pub geometry_json: String,
}

pub fn emit_dataset(dataset: &MapDataset) -> Result<EmittedDataset> {
    Ok(EmittedDataset {
        csv: dataset.points_csv()?,
        geometry_json: dataset.geometry_json(),
    })
}

/// Parses the points CSV written by [`emit_dataset`].
pub fn read_points_csv<R: Read>(reader: R) -> Result<Vec<MapPoint>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        let err = |message: String| Error::Parse { line, message };
        if record.len() != 5 {
            return Err(err(format!("expected 5 fields, found {}", record.len())));
        }
        let num = |i: usize| -> Result<f64> {
            record[i]
                .parse()
                .map_err(|_| err(format!("`{}` is not a number", &record[i])))
        };
        out.push(MapPoint {
            label: record[0].to_owned(),
            power_ratio: num(1)?,
            coupling_norm: if record[2].is_empty() { None } else { Some(num(2)?) },
            coupling_raw: num(3)?,
            regime: record[4].parse().map_err(|_| err(format!("unknown regime `{}`", &record[4])))?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::PairedSample;

    fn unit_scaled(c: f64) -> MomentStats {
        MomentStats {
            n: 1,
            ex2: 1.0,
            ev2: c * c,
            exv: c,
            mean_e: 0.0,
            mse: (c - 1.0) * (c - 1.0),
            coupling: c * c - c,
        }
    }

    #[test]
    fn point_examples() {
        let p = map_point("amp", &unit_scaled(2.0)).unwrap();
        assert_eq!((p.power_ratio, p.coupling_norm), (4.0, Some(2.0)));
        assert_eq!(p.regime, RegimeLabel::PowerDominant);

        let prob = ScalingProblem::new(1.0, 2.0, 1.0).unwrap();
        let p = map_point_scaled("opt", &prob, prob.optimal_scale().unwrap()).unwrap();
        assert_eq!((p.power_ratio, p.coupling_norm), (0.5, Some(0.0)));
        assert_eq!(p.regime, RegimeLabel::PowerConservative);

        let p = map_point("zero", &unit_scaled(0.0)).unwrap();
        assert_eq!((p.power_ratio, p.coupling_norm), (0.0, Some(0.0)));

        let p = map_point("ideal", &unit_scaled(1.0)).unwrap();
        assert_eq!(p.coupling_norm, None);

        let mut s = unit_scaled(1.0);
        s.ex2 = 0.0;
        assert!(matches!(map_point("bad", &s), Err(Error::ZeroSignalPower)));
    }

    #[test]
    fn left_map_regions() {
        let safe = map_point("half", &unit_scaled(0.5)).unwrap();
        let ds = build_left_map(std::slice::from_ref(&safe)).unwrap();
        assert_eq!(ds.points.len(), 1);
        assert_eq!(ds.geometry.region_of(safe.power_ratio, 1e-6), Region::Safe);
        assert!(ds.annotations.is_empty());

        let amp = map_point("amp", &unit_scaled(2.0)).unwrap();
        let zero = map_point("zero", &unit_scaled(0.0)).unwrap();
        let ds = build_left_map(&[zero, safe, amp.clone()]).unwrap();
        assert_eq!(ds.geometry.region_of(amp.power_ratio, 1e-6), Region::Forbidden);
        let (x0, x1) = (ds.geometry.forbidden_region[0][0], ds.geometry.forbidden_region[1][0]);
        assert!(x0 < amp.power_ratio && amp.power_ratio < x1);

        let flip = map_point("flip", &unit_scaled(-1.0)).unwrap();
        let ds = build_left_map(&[flip]).unwrap();
        assert_eq!(ds.annotations[0].note, "on-boundary");
        assert!(matches!(build_left_map(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn right_map_geometry() {
        let ds = build_right_map(&[map_point("zero", &unit_scaled(0.0)).unwrap()]).unwrap();
        let g = &ds.geometry;
        assert_eq!(g.singularity, [g.balance_line, g.penalty_line]);
        assert_eq!(g.ideal_path, [[0.0, 0.0], [1.0, 0.0]]);
        assert!(g.safe_region.iter().all(|&[x, y]| x <= 1.0 && y <= 0.5));
        assert!(g.forbidden_region.iter().all(|&[x, y]| x >= 1.0 && y >= 0.5));
        assert_eq!(ds.points[0].power_ratio, 0.0);
        assert_eq!(ds.points[0].plot_y(), 0.0);
        let ds = ds.with_optimum(0.5);
        assert_eq!(ds.geometry.ideal_path[1], [0.5, 0.0]);
        assert!(matches!(build_right_map(&[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn amplifier_family_is_above_penalty_line() {
        // z = x + noise with fixed deterministic draws
        let base: Vec<_> = (0..64)
            .map(|i| {
                let x = (i as f64 * 0.37).sin() * 2.0;
                let n = (i as f64 * 1.91).cos();
                PairedSample::new(x, x + n)
            })
            .collect();
        let prob = ScalingProblem::from_samples(&base).unwrap();
        let mut last_raw = f64::NEG_INFINITY;
        for c in [1.5, 2.0, 4.0] {
            // brute force over the samples
            let est: Vec<_> = base.iter().map(|p| PairedSample::new(p.x, c * p.v)).collect();
            let brute = map_point("amp", &MomentStats::from_samples(&est).unwrap()).unwrap();
            let closed = map_point_scaled("amp", &prob, c).unwrap();
            assert!((brute.coupling_raw - closed.coupling_raw).abs() < 1e-12 * closed.coupling_raw.abs());
            assert!(closed.coupling_norm.unwrap() > 0.5);
            assert!(closed.coupling_raw > last_raw);
            last_raw = closed.coupling_raw;
        }
    }

    #[test]
    fn emit_and_parse() {
        let pts = vec![
            map_point("zero", &unit_scaled(0.0)).unwrap(),
            map_point("ideal, exact", &unit_scaled(1.0)).unwrap(),
            map_point("amp", &unit_scaled(1.0 / 3.0 + 2.0)).unwrap(),
        ];
        let ds = build_right_map(&pts).unwrap();
        let out = emit_dataset(&ds).unwrap();
        assert_eq!(out.csv.lines().count(), 4);
        assert_eq!(out.csv.lines().next(), Some("label,power_ratio,coupling_norm,coupling_raw,regime"));
        assert_eq!(read_points_csv(out.csv.as_bytes()).unwrap(), pts);

        let v: serde_json::Value = serde_json::from_str(&out.geometry_json).unwrap();
        assert_eq!(v["singularity"], serde_json::json!([1.0, 0.5]));
        assert_eq!(v["ideal_path"], serde_json::json!([[0.0, 0.0], [1.0, 0.0]]));
    }
}
