use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use powertriad::diagnostics::triad_report;
use powertriad::map::{build_left_map, build_right_map, emit_dataset, map_point, map_point_scaled, render_svg, MapDataset, StyleConfig};
use powertriad::moments::{read_csv, write_csv};
use powertriad::scaling::{run_path, track_moving_optimum, ControllerConfig, ScalingProblem};
use powertriad::zoo::{generate, population_schedule, EstimatorSpec, ProblemKind, ProblemSpec, ESTIMATOR_KINDS};
use powertriad::{MomentStats, PairedSample, RegimeLabel};
use serde::Serialize;

use crate::args::{Format, RunConfig, Which};
use crate::output::{emit, with_newline, write_atomic};

pub const EXIT_OK: u8 = 0;
pub const EXIT_DOMINANT: u8 = 3;
pub const EXIT_VIOLATED: u8 = 4;

const DEFAULT_SAMPLES: usize = 10_000;
const DEFAULT_TRACK_SAMPLES: usize = 3_000;
const DEFAULT_LAMBDA: f64 = 0.99;
const DEFAULT_MAP_ESTIMATORS: [&str; 5] = ["zero", "scale:c=0.5", "empirical_mmse", "identity", "amplifier:c=2"];

fn problem_spec(rc: &RunConfig) -> Result<Option<ProblemSpec>> {
    rc.problem
        .as_deref()
        .map(|p| ProblemSpec::parse(p, rc.seed).map_err(Into::into))
        .transpose()
}

/// `(x, z)` pairs from `--input` or a generated `--problem`.
fn load_pairs(rc: &RunConfig, spec: Option<&ProblemSpec>) -> Result<Vec<PairedSample>> {
    match (&rc.input, spec) {
        (Some(_), Some(_)) => bail!("give either --input or --problem, not both"),
        (Some(path), None) => {
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            read_csv(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))
        }
        (None, Some(spec)) => Ok(generate(spec, rc.samples.unwrap_or(DEFAULT_SAMPLES))?),
        (None, None) => bail!("no data: pass --input FILE or --problem SPEC"),
    }
}

fn estimator(text: &str, spec: Option<&ProblemSpec>) -> Result<EstimatorSpec> {
    let est = EstimatorSpec::parse(text)?;
    if let Some(spec) = spec {
        est.verify_for(spec)?;
    }
    Ok(est)
}

fn single_estimator(rc: &RunConfig, spec: Option<&ProblemSpec>) -> Result<Option<EstimatorSpec>> {
    match rc.estimators.as_slice() {
        [] => Ok(None),
        [one] => estimator(one, spec).map(Some),
        _ => bail!("this command takes at most one --estimator"),
    }
}

fn estimates(rc: &RunConfig) -> Result<Vec<PairedSample>> {
    let spec = problem_spec(rc)?;
    let pairs = load_pairs(rc, spec.as_ref())?;
    Ok(match single_estimator(rc, spec.as_ref())? {
        Some(est) => est.apply(&pairs)?.samples,
        None => pairs,
    })
}

fn reject_format(rc: &RunConfig, allowed: &[Format], command: &str) -> Result<Format> {
    let f = rc.format.unwrap_or(allowed[0]);
    if !allowed.contains(&f) {
        bail!("`{command}` does not write {f:?} output");
    }
    Ok(f)
}

pub fn diagnose(rc: &RunConfig) -> Result<u8> {
    reject_format(rc, &[Format::Json], "diagnose")?;
    let stats = MomentStats::from_samples(&estimates(rc)?)?;
    let report = triad_report(&stats, rc.balance_tol, rc.degeneracy_tol)?;
    emit(rc.out.as_deref(), with_newline(report.to_json()).as_bytes())?;
    Ok(match (report.regime, report.verdict.satisfied) {
        (RegimeLabel::PowerDominant, true) => EXIT_DOMINANT,
        (RegimeLabel::PowerDominant, false) => EXIT_VIOLATED,
        _ => EXIT_OK,
    })
}

fn parse_moments(text: &str) -> Result<ScalingProblem> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>().with_context(|| format!("bad moment `{}`", s.trim())))
        .collect::<Result<_>>()?;
    match parts.as_slice() {
        &[ex2, ez2, exz] => Ok(ScalingProblem::new(ex2, ez2, exz)?),
        _ => bail!("--moments takes three values `ex2,ez2,exz`"),
    }
}

fn scaling_problem(rc: &RunConfig) -> Result<ScalingProblem> {
    match &rc.moments {
        Some(m) => {
            if rc.input.is_some() || rc.problem.is_some() {
                bail!("--moments excludes --input and --problem");
            }
            parse_moments(m)
        }
        None => Ok(ScalingProblem::from_samples(&estimates(rc)?)?),
    }
}

pub fn scale(rc: &RunConfig) -> Result<u8> {
    reject_format(rc, &[Format::Json], "scale")?;
    let cert = scaling_problem(rc)?.certify_optimum()?;
    emit(rc.out.as_deref(), with_newline(cert.to_json()).as_bytes())?;
    Ok(EXIT_OK)
}

fn controller(rc: &RunConfig) -> Result<ControllerConfig> {
    match &rc.controller {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ControllerConfig::parse(&text).with_context(|| format!("in {}", path.display()))
        }
        None => Ok(ControllerConfig::default()),
    }
}

pub fn path(rc: &RunConfig) -> Result<u8> {
    let format = reject_format(rc, &[Format::Csv, Format::Json], "path")?;
    let trace = run_path(&scaling_problem(rc)?, &controller(rc)?)?;
    let summary = with_newline(serde_json::to_string_pretty(&trace.summary())?);
    let mut csv = Vec::new();
    trace.write_csv(&mut csv)?;
    match (&rc.out, format) {
        (Some(out), Format::Csv) => {
            write_atomic(out, &csv)?;
            write_atomic(&out.with_extension("summary.json"), summary.as_bytes())?;
        }
        (out, Format::Csv) => emit(out.as_deref(), &csv)?,
        (out, _) => emit(out.as_deref(), summary.as_bytes())?,
    }
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct TrackSummary {
    problem: ProblemKind,
    lambda: f64,
    steps: usize,
    forbidden_residency: usize,
    mean_tracking_error: f64,
    final_tracking_error: f64,
    reentry_step: Option<usize>,
}

pub fn track(rc: &RunConfig) -> Result<u8> {
    let format = reject_format(rc, &[Format::Csv, Format::Json], "track")?;
    if rc.input.is_some() {
        bail!("`track` scores against the true optimum and needs --problem, not --input");
    }
    let spec = match problem_spec(rc)? {
        Some(s) => s,
        None => ProblemSpec::parse("step_change", rc.seed)?,
    };
    let n = rc.samples.unwrap_or(DEFAULT_TRACK_SAMPLES);
    let lambda = rc.lambda.unwrap_or(DEFAULT_LAMBDA);
    let stream = generate(&spec, n)?;
    let trace = track_moving_optimum(&stream, &population_schedule(&spec, n)?, lambda)?;
    let bytes = match format {
        Format::Csv => {
            let mut buf = Vec::new();
            trace.write_csv(&mut buf)?;
            buf
        }
        _ => {
            let errs = trace.steps.iter().map(|s| s.tracking_error);
            let summary = TrackSummary {
                problem: spec.kind,
                lambda,
                steps: n,
                forbidden_residency: trace.forbidden_residency(),
                mean_tracking_error: errs.sum::<f64>() / n.max(1) as f64,
                final_tracking_error: trace.steps.last().map_or(0.0, |s| s.tracking_error),
                reentry_step: (spec.kind == ProblemKind::StepChange)
                    .then(|| trace.first_within(spec.change_at, 0.05))
                    .flatten(),
            };
            with_newline(serde_json::to_string_pretty(&summary)?).into_bytes()
        }
    };
    emit(rc.out.as_deref(), &bytes)?;
    Ok(EXIT_OK)
}

/// Both maps for the configured estimators plus the certified optimum.
pub fn build_maps(rc: &RunConfig) -> Result<(MapDataset, MapDataset)> {
    let spec = match (problem_spec(rc)?, &rc.input) {
        (None, None) => Some(ProblemSpec::parse("gaussian_shrinkage", rc.seed)?),
        (spec, _) => spec,
    };
    let pairs = load_pairs(rc, spec.as_ref())?;
    let names: Vec<&str> = if rc.estimators.is_empty() {
        DEFAULT_MAP_ESTIMATORS.to_vec()
    } else {
        rc.estimators.iter().map(String::as_str).collect()
    };
    let mut points = Vec::with_capacity(names.len() + 1);
    for name in names {
        let est = estimator(name, spec.as_ref())?;
        let out = est.apply(&pairs)?;
        let stats = MomentStats::from_samples(&out.samples)?;
        points.push(map_point(&est.name(), &stats)?);
    }
    let problem = ScalingProblem::from_samples(&pairs)?;
    let t_star = problem.optimal_scale()?;
    points.push(map_point_scaled("t*", &problem, t_star)?);
    let rho_star = problem.power_at(t_star) / problem.ex2;
    Ok((build_left_map(&points)?, build_right_map(&points)?.with_optimum(rho_star)))
}

pub fn map(rc: &RunConfig) -> Result<u8> {
    let (left, right) = build_maps(rc)?;
    let style = StyleConfig::default();
    match &rc.out {
        Some(dir) => {
            if rc.format.is_some() {
                bail!("--format applies to stdout output; --out writes every format");
            }
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            for (name, ds) in [("left", &left), ("right", &right)] {
                write_dataset(dir, name, ds, &style)?;
            }
        }
        None => {
            let ds = match rc.which {
                Which::Left => &left,
                Which::Right => &right,
            };
            let text = match rc.format.unwrap_or(Format::Svg) {
                Format::Svg => render_svg(ds, &style),
                Format::Csv => ds.points_csv()?,
                Format::Json => with_newline(ds.geometry_json()),
            };
            emit(None, text.as_bytes())?;
        }
    }
    Ok(EXIT_OK)
}

fn write_dataset(dir: &Path, name: &str, ds: &MapDataset, style: &StyleConfig) -> Result<()> {
    let emitted = emit_dataset(ds)?;
    write_atomic(&dir.join(format!("{name}.csv")), emitted.csv.as_bytes())?;
    write_atomic(&dir.join(format!("{name}.json")), with_newline(emitted.geometry_json).as_bytes())?;
    write_atomic(&dir.join(format!("{name}.svg")), render_svg(ds, style).as_bytes())?;
    Ok(())
}

pub fn zoo_list() -> Result<u8> {
    let mut text = String::from("problems:\n");
    for kind in ProblemKind::ALL {
        text.push_str(&format!("  {:<24} {}\n", kind.as_str(), kind.describe()));
    }
    text.push_str("estimators:\n");
    for (name, what) in ESTIMATOR_KINDS {
        text.push_str(&format!("  {name:<24} {what}\n"));
    }
    emit(None, text.as_bytes())?;
    Ok(EXIT_OK)
}

pub fn zoo_run(rc: &RunConfig) -> Result<u8> {
    reject_format(rc, &[Format::Csv], "zoo run")?;
    if rc.input.is_some() {
        bail!("`zoo run` generates data; --input is not accepted");
    }
    let spec = problem_spec(rc)?.ok_or_else(|| anyhow!("`zoo run` needs --problem"))?;
    let pairs = generate(&spec, rc.samples.unwrap_or(DEFAULT_SAMPLES))?;
    let pairs = match single_estimator(rc, Some(&spec))? {
        Some(est) => est.apply(&pairs)?.samples,
        None => pairs,
    };
    let mut buf = Vec::new();
    write_csv(&mut buf, &pairs)?;
    emit(rc.out.as_deref(), &buf)?;
    Ok(EXIT_OK)
}
