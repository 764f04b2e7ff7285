//! One function per experiment: run it, then collect the report files.

use std::io;

use serde::Serialize;
use vparab::bumps::{self, log_points};
use vparab::grid::write_csv;
use vparab::normlab::{
    decay_scan_tl, estimate_opnorm, random_bandlimited, reconstruction_error, trial_seed, uniformity_sweep,
    unboundedness_probe, vdc_scan, DecayFit, DecayScan, OpReport, ProbeReport, Stage, UniformityConfig, VdcPoint,
};

use crate::config::{ConfigError, Experiment, ExperimentConfig, ValidateSection};
use crate::output::{to_json, Cell, Outputs, Table};

/// Why a run stopped; decides the exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Config(String),
    Core(vparab::Error),
    Io(io::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) | Failure::Config(_) => 2,
            Failure::Core(e) if e.is_numerical() => 3,
            Failure::Core(vparab::Error::Io(_)) | Failure::Io(_) => 1,
            Failure::Core(_) => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Failure::Usage(_) => "usage",
            Failure::Config(_) => "config",
            Failure::Core(e) if e.is_numerical() => "numerical",
            Failure::Core(vparab::Error::Io(_)) | Failure::Io(_) => "io",
            Failure::Core(_) => "invalid-config",
        }
    }

    pub fn message(&self) -> String {
        match self {
            Failure::Usage(m) | Failure::Config(m) => m.clone(),
            Failure::Core(e) => e.to_string(),
            Failure::Io(e) => e.to_string(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<vparab::Error> for Failure {
    fn from(e: vparab::Error) -> Self {
        Failure::Core(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

type Result<T> = std::result::Result<T, Failure>;

#[derive(Serialize)]
struct Summary<'a, R: Serialize> {
    artifact: &'static str,
    version: &'static str,
    experiment: &'static str,
    config: ExperimentConfig,
    result: &'a R,
}

fn summary<R: Serialize>(kind: Experiment, cfg: &ExperimentConfig, result: &R) -> Result<String> {
    Ok(to_json(&Summary {
        artifact: "vparab",
        version: env!("CARGO_PKG_VERSION"),
        experiment: kind.name(),
        config: cfg.for_report(),
        result,
    })?)
}

fn stage_name(s: Stage) -> &'static str {
    match s {
        Stage::Random => "random",
        Stage::Structured => "structured",
        Stage::Ascent => "ascent",
    }
}

/// Runs `kind` and returns the files to write.
pub fn run(kind: Experiment, cfg: &ExperimentConfig) -> Result<Outputs> {
    let mut out = Outputs::new(&cfg.output_dir());
    match kind {
        Experiment::ValidateBumps => validate_bumps(cfg, &mut out)?,
        Experiment::Opnorm => opnorm(cfg, &mut out)?,
        Experiment::DecayScan => decay(cfg, &mut out)?,
        Experiment::VdcScan => vdc(cfg, &mut out)?,
        Experiment::Uniformity => uniformity(cfg, &mut out)?,
        Experiment::ProbeUnbounded => probe(cfg, &mut out)?,
        Experiment::Reconstruct => reconstruct(cfg, &mut out)?,
    }
    Ok(out)
}

fn validate_bumps(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let points = cfg.validate.clone().unwrap_or_default().points;
    let v = bumps::validate(points)?;
    let fam = vparab::bumps::PartitionFamily::default();
    let mut t = Table::new(&["t", "partition_sum_minus_one"]);
    for x in log_points(2f64.powi(-8), 2f64.powi(8), points) {
        let s: f64 = (-12..=12).map(|l| fam.psi_l(l, x)).sum();
        t.push(vec![x.into(), (s - 1.0).into()]);
    }
    let mut resolved = cfg.clone();
    resolved.validate = Some(ValidateSection { points });
    out.add("summary.json", summary(Experiment::ValidateBumps, &resolved, &v)?);
    out.add_table("partition", &t);
    Ok(())
}

/// One row per trial record, after the optional leading cell.
fn trial_rows(t: &mut Table, report: &OpReport, lead: impl Fn() -> Option<Cell>) {
    for r in &report.records {
        let mut row: Vec<Cell> = lead().into_iter().collect();
        row.extend([r.trial.into(), r.seed.into(), r.ratio.into(), stage_name(r.stage).into()]);
        t.push(row);
    }
}

fn opnorm(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let grid = cfg.require_grid()?;
    let spec = cfg.require(&cfg.operator, "operator")?;
    let op = spec.build(&grid)?;
    let report = estimate_opnorm(op.as_ref(), &grid, cfg.p, &cfg.sampler, cfg.trials, cfg.seed)?;
    let mut trials = Table::new(&["trial", "seed", "ratio", "stage"]);
    trial_rows(&mut trials, &report, || None);
    let mut best = 0.0f64;
    let mut curve = Table::new(&["trial", "ratio", "running_max"]);
    for r in &report.records {
        best = best.max(r.ratio);
        curve.push(vec![r.trial.into(), r.ratio.into(), best.into()]);
    }
    out.add("summary.json", summary(Experiment::Opnorm, cfg, &report)?);
    out.add("trials.csv", trials.csv());
    out.add("opnorm.dat", curve.dat());
    if let Some(w) = &report.witness {
        let mut buf = Vec::new();
        write_csv(w, &mut buf)?;
        out.add("witness.csv", buf);
    }
    Ok(())
}

#[derive(Serialize)]
struct DecayResult<'a> {
    fit: &'a DecayFit,
    norms: &'a [(i32, f64)],
    best_trials: Vec<(i32, usize)>,
}

fn decay(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let grid = cfg.require_grid()?;
    let d = cfg.require(&cfg.decay, "decay")?;
    let scan = DecayScan {
        grid,
        field: d.field.build(&grid)?,
        l_range: (d.l_min, d.l_max),
        p: cfg.p,
        sampler: cfg.sampler.clone(),
        trials: cfg.trials,
        seed: cfg.seed,
        kernel: d.kernel,
        family: cfg.family,
        eval: cfg.eval,
    };
    let r = decay_scan_tl(&scan)?;
    let mut trials = Table::new(&["l", "trial", "seed", "ratio", "stage"]);
    for ((l, _), rep) in r.norms.iter().zip(&r.reports) {
        trial_rows(&mut trials, rep, || Some((*l).into()));
    }
    let mut data = Table::new(&["l", "norm", "fitted", "used_in_fit"]);
    for &(l, n) in &r.norms {
        let fitted = r.fit.base.powf(r.fit.intercept - r.fit.gamma_hat * l as f64);
        let used = if r.fit.excluded.contains(&(l as f64)) { 0 } else { 1 };
        data.push(vec![l.into(), n.into(), fitted.into(), (used as usize).into()]);
    }
    let result = DecayResult {
        fit: &r.fit,
        norms: &r.norms,
        best_trials: r.norms.iter().zip(&r.reports).map(|((l, _), rep)| (*l, rep.best_trial)).collect(),
    };
    out.add("summary.json", summary(Experiment::DecayScan, cfg, &result)?);
    out.add("trials.csv", trials.csv());
    out.add("decay.dat", data.dat());
    Ok(())
}

#[derive(Serialize)]
struct VdcResult<'a> {
    fit: &'a DecayFit,
    points: &'a [VdcPoint],
}

fn vdc(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let v = cfg.require(&cfg.vdc, "vdc")?;
    let r = vdc_scan(v)?;
    let mut t = Table::new(&["u", "k", "eta", "lambda", "sup_abs", "argmax_s"]);
    for p in &r.points {
        t.push(vec![p.u.into(), p.k.into(), p.eta.into(), p.lambda.into(), p.sup_abs.into(), p.argmax_s.into()]);
    }
    let mut data = Table::new(&["log10_lambda", "log10_sup_abs", "fitted"]);
    for p in &r.points {
        let x = p.lambda.abs().log10();
        data.push(vec![x.into(), p.sup_abs.log10().into(), (r.fit.intercept - r.fit.gamma_hat * x).into()]);
    }
    out.add("summary.json", summary(Experiment::VdcScan, cfg, &VdcResult { fit: &r.fit, points: &r.points })?);
    out.add("vdc.csv", t.csv());
    out.add("vdc.dat", data.dat());
    Ok(())
}

#[derive(Serialize)]
struct UniformEntry {
    k: i32,
    grid: vparab::Grid2D,
    norm_estimate: f64,
    best_trial: usize,
}

#[derive(Serialize)]
struct UniformResult {
    op_id: String,
    max_min_ratio: f64,
    per_k: Vec<UniformEntry>,
}

fn uniformity(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let grid = cfg.require_grid()?;
    let u = cfg.require(&cfg.uniformity, "uniformity")?;
    let r = uniformity_sweep(&UniformityConfig {
        base_grid: grid,
        field: u.field.clone(),
        op: u.op.clone(),
        k_values: u.k_values.clone(),
        p: cfg.p,
        sampler: cfg.sampler.clone(),
        trials: cfg.trials,
        seed: cfg.seed,
        bump: cfg.bump,
        family: cfg.family,
        eval: cfg.eval,
    })?;
    let mut trials = Table::new(&["k", "trial", "seed", "ratio", "stage"]);
    let mut data = Table::new(&["k", "norm_estimate"]);
    for e in &r.per_k {
        trial_rows(&mut trials, &e.report, || Some(e.k.into()));
        data.push(vec![e.k.into(), e.norm_estimate.into()]);
    }
    let result = UniformResult {
        op_id: r.op_id.clone(),
        max_min_ratio: r.max_min_ratio,
        per_k: r
            .per_k
            .iter()
            .map(|e| UniformEntry {
                k: e.k,
                grid: e.grid,
                norm_estimate: e.norm_estimate,
                best_trial: e.report.best_trial,
            })
            .collect(),
    };
    out.add("summary.json", summary(Experiment::Uniformity, cfg, &result)?);
    out.add("trials.csv", trials.csv());
    out.add("uniformity.dat", data.dat());
    Ok(())
}

fn probe(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let p = cfg.require(&cfg.probe, "probe")?;
    let r: ProbeReport = unboundedness_probe(p)?;
    let mut t = Table::new(&["level", "extent", "samples", "k_max", "input_norm", "output_norm", "ratio"]);
    for l in &r.levels {
        t.push(vec![
            l.level.into(),
            l.grid.extent_x().into(),
            l.grid.nx().into(),
            l.k_max.into(),
            l.input_norm.into(),
            l.output_norm.into(),
            match l.ratio {
                Some(v) => v.into(),
                None => "skipped".into(),
            },
        ]);
    }
    out.add("summary.json", summary(Experiment::ProbeUnbounded, cfg, &r)?);
    out.add_table("probe", &t);
    Ok(())
}

#[derive(Serialize)]
struct ReconstructResult {
    levels: i32,
    errors: Vec<f64>,
    max_rel_error: f64,
}

fn reconstruct(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<()> {
    let grid = cfg.require_grid()?;
    let rc = cfg.require(&cfg.reconstruct, "reconstruct")?;
    let field = rc.field.build(&grid)?;
    let mut t = Table::new(&["input", "seed", "rel_error"]);
    let mut errors = Vec::new();
    for i in 0..rc.inputs {
        let s = trial_seed(cfg.seed, i as u64);
        let f = random_bandlimited(&grid, &cfg.sampler, s)?;
        let e = reconstruction_error(&f, &field, rc.levels, &cfg.family, cfg.eval)?;
        t.push(vec![i.into(), s.into(), e.into()]);
        errors.push(e);
    }
    let result = ReconstructResult {
        levels: rc.levels,
        max_rel_error: errors.iter().copied().fold(0.0, f64::max),
        errors,
    };
    out.add("summary.json", summary(Experiment::Reconstruct, cfg, &result)?);
    out.add_table("reconstruct", &t);
    Ok(())
}
