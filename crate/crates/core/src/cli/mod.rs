//! Batch front-end: `weaknull <command> [--config FILE] [flags]`.
//!
//! Every command resolves an [`ExperimentConfig`] (defaults, then the config
//! file, then flags), writes JSON-lines reports, CSV summaries and a manifest
//! under `<out>/<command>/`, and exits 0 on pass, 2 on a failed verdict and 1
//! on error.

mod config;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

pub use config::{parse_real, Command, ExperimentConfig, SolveMode, OUT_ENV};
pub use output::{fmt17, to_json17, Output};

use crate::estimates::{
    check_box_a, check_identity_minus_named, check_identity_plus_named, ks_traveling, weighted_sobolev_at, EnergyCheck,
    EstimateReport, Family, FrameFamily, IdentityReport, KsRegion, Subject, CUT_CASES, FRAME_SCALES, KS_CASES,
};
use crate::estimates::registry::family_grid;
use crate::fieldgrid::GridSpec;
use crate::picard::{
    check_boundedness, fit_decay, run_iteration, run_iteration_in, IterationRecord, PicardConfig, CONTRACTION_BOUND,
    CONTRACTION_FROM, RADIAL_PAD,
};
use crate::wavesolver::{solve, InitialData, Mode, RecordWindow, SolveConfig, DEFAULT_CFL};
use crate::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "weaknull", version, about = "Radial weakly null wave laboratory: solver, estimate checks, Picard driver")]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Subcommand, Debug)]
enum CliCommand {
    /// Evolve calibrated data (homogeneous or semilinear) and store the history.
    Solve(Flags),
    /// Multiplier identities on the registry families, with observed orders.
    Identities(Flags),
    /// Inequality ratios on the registry families, with refinement drift.
    Estimates(Flags),
    /// Run the iteration and report M_k, A_k and contraction ratios.
    Picard(Flags),
    /// Fit decay exponents of a long semilinear solve.
    Decay(Flags),
    /// Run the iteration over several data sizes and check boundedness.
    Sweep(Flags),
}

/// Flags shared by every command; unset ones fall back to the config file,
/// then to the command's defaults.
#[derive(Args, Debug, Default, Clone)]
pub struct Flags {
    /// key = value config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (default: $WEAKNULL_OUT, else ./weaknull-out).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for independent runs.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Radial step; repeat for a refinement ladder. Fractions like 1/32 are accepted.
    #[arg(long, value_parser = parse_real)]
    pub dr: Vec<f64>,
    /// Data size; repeat for a sweep.
    #[arg(long, value_parser = parse_real)]
    pub eps: Vec<f64>,
    #[arg(long = "t-max", value_parser = parse_real)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub kmax: Option<usize>,
    #[arg(long, value_parser = parse_real)]
    pub p: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    pub delta: Option<f64>,
    /// Number of vector fields in the iteration functionals.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long = "stop-tol", value_parser = parse_real)]
    pub stop_tol: Option<f64>,
    #[arg(long, value_enum)]
    pub mode: Option<SolveMode>,
    /// Solver steps between recorded frames.
    #[arg(long)]
    pub stride: Option<usize>,
    /// Registry family; repeat for several.
    #[arg(long)]
    pub family: Vec<String>,
    /// Check name; repeat for several.
    #[arg(long)]
    pub check: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    fn from(ok: bool) -> Self {
        if ok { Verdict::Pass } else { Verdict::Fail }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail => 2,
        }
    }
}

/// Parse `argv` (program name first), run, and return the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (command, flags) = match cli.command {
        CliCommand::Solve(f) => (Command::Solve, f),
        CliCommand::Identities(f) => (Command::Identities, f),
        CliCommand::Estimates(f) => (Command::Estimates, f),
        CliCommand::Picard(f) => (Command::Picard, f),
        CliCommand::Decay(f) => (Command::Decay, f),
        CliCommand::Sweep(f) => (Command::Sweep, f),
    };
    match ExperimentConfig::resolve(command, &flags).and_then(|c| execute(&c)) {
        Ok(v) => v.exit_code(),
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Run a resolved configuration.
pub fn execute(cfg: &ExperimentConfig) -> Result<Verdict> {
    cfg.validate()?;
    let mut out = Output::create(cfg)?;
    let verdict = match cfg.command {
        Command::Solve => run_solve(cfg, &mut out)?,
        Command::Identities => run_identities(cfg, &mut out)?,
        Command::Estimates => run_estimates(cfg, &mut out)?,
        Command::Picard => run_picard(cfg, &mut out)?,
        Command::Decay => run_decay(cfg, &mut out)?,
        Command::Sweep => run_sweep(cfg, &mut out)?,
    };
    out.finish(cfg, verdict)?;
    Ok(verdict)
}

/// `f` over `items` on up to `jobs` threads, results in input order.
pub fn par_map<T: Sync, R: Send>(jobs: usize, items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let slots: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..jobs.clamp(1, items.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                *slots[i].lock().expect("no worker panicked holding the lock") = Some(r);
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().expect("unpoisoned").expect("every item ran")).collect()
}

fn data_for(eps: f64, n: usize) -> Result<InitialData> {
    if eps == 0.0 { Ok(InitialData::zero()) } else { InitialData::calibrated(eps, n) }
}

#[derive(Serialize)]
struct SolveSummary {
    epsilon: f64,
    dr: f64,
    t_max: f64,
    mode: SolveMode,
    data_hash: String,
    support_leak: f64,
    final_max_u: f64,
    final_max_v: f64,
    final_energy_u: f64,
    final_energy_v: f64,
}

fn run_solve(cfg: &ExperimentConfig, out: &mut Output) -> Result<Verdict> {
    let data = data_for(cfg.eps[0], cfg.n)?;
    let grid = GridSpec::for_horizon(cfg.ladder[0], DEFAULT_CFL, cfg.t_max, RADIAL_PAD)?;
    let mode = match cfg.mode {
        SolveMode::Homogeneous => Mode::Homogeneous,
        SolveMode::Semilinear => Mode::Semilinear,
    };
    let h = solve(&data, &SolveConfig::new(grid, mode).with_stride(cfg.stride))?;
    h.save(&out.path("history"))?;
    out.register("history");
    let last = h.diagnostics.last().copied().ok_or_else(|| Error::Parameter("empty solve".into()))?;
    out.jsonl(
        "solve.jsonl",
        &[SolveSummary {
            epsilon: cfg.eps[0],
            dr: cfg.ladder[0],
            t_max: cfg.t_max,
            mode: cfg.mode,
            data_hash: data.hash(),
            support_leak: h.support_leak(),
            final_max_u: last.max_u,
            final_max_v: last.max_v,
            final_energy_u: last.energy_u,
            final_energy_v: last.energy_v,
        }],
    )?;
    let rows = h.diagnostics.iter().map(|d| vec![d.t, d.energy_u, d.energy_v, d.max_u, d.max_v]).collect::<Vec<_>>();
    out.csv("diagnostics.csv", &["t", "energy_u", "energy_v", "max_u", "max_v"], &rows)?;
    Ok(Verdict::Pass)
}

fn families(cfg: &ExperimentConfig) -> Result<Vec<Family>> {
    cfg.families.iter().map(|f| f.parse()).collect()
}

/// Observed order between two reports at steps `coarse_dr > fine_dr`.
fn order_between(coarse: f64, fine: f64, coarse_dr: f64, fine_dr: f64) -> Option<f64> {
    (coarse > 0.0 && fine > 0.0).then(|| (coarse / fine).ln() / (coarse_dr / fine_dr).ln())
}

/// The ladder, with `dr/2` appended when only one step is given.
fn pairs(ladder: &[f64]) -> Vec<(f64, f64)> {
    if ladder.len() == 1 {
        vec![(ladder[0], ladder[0] / 2.0)]
    } else {
        ladder.windows(2).map(|w| (w[0], w[1])).collect()
    }
}

pub const IDENTITY_ORDER: f64 = 1.8;
pub const DRIFT_TOL: f64 = 0.05;

fn run_identities(cfg: &ExperimentConfig, out: &mut Output) -> Result<Verdict> {
    let fams = families(cfg)?;
    let mut tasks = Vec::new();
    for &f in &fams {
        for c in &cfg.checks {
            tasks.push((f, c.clone()));
        }
    }
    let one = |fam: Family, check: &str, dr: f64| -> Result<IdentityReport> {
        let w = fam.field(&family_grid(dr, cfg.t_max)?)?;
        let id = fam.to_string();
        match check {
            "plus" => check_identity_plus_named(&w, cfg.p, 2, cfg.t_max, &id),
            "minus" => check_identity_minus_named(&w, cfg.delta, cfg.t_max, &id),
            "box_a" => check_box_a(&w, 1.0, &id),
            other => Err(Error::Config(format!("unknown identity check {other:?}"))),
        }
    };
    let steps = pairs(&cfg.ladder);
    let results = par_map(cfg.jobs, &tasks, |(fam, check)| -> Result<Vec<IdentityReport>> {
        let mut reps = Vec::new();
        let mut coarse = one(*fam, check, steps[0].0)?;
        for &(a, b) in &steps {
            let mut fine = one(*fam, check, b)?;
            fine.observed_order = order_between(coarse.residual, fine.residual, a, b);
            reps.push(fine.clone());
            coarse = fine;
        }
        Ok(reps)
    });
    let reports: Vec<IdentityReport> = results.into_iter().collect::<Result<Vec<_>>>()?.into_iter().flatten().collect();
    out.jsonl("identities.jsonl", &reports)?;
    let ok = reports.iter().all(|r| r.signs_ok && r.observed_order.is_some_and(|o| o >= IDENTITY_ORDER));
    Ok(Verdict::from(ok))
}

/// One estimate job: a check on one input at one resolution.
#[derive(Clone, Debug)]
enum EstimateJob {
    Energy(EnergyCheck, Family),
    Sobolev(FrameFamily, u64),
    Ks { second: bool, tau: u64, kind: KsRegion },
}

impl EstimateJob {
    fn at(&self, dr: f64, t_max: f64) -> Result<EstimateReport> {
        match self {
            EstimateJob::Energy(c, fam) => c.run(&Subject::family(*fam, &family_grid(dr, t_max)?)?),
            EstimateJob::Sobolev(f, r) => weighted_sobolev_at(*f, *r, dr),
            EstimateJob::Ks { second, tau, kind } => ks_traveling(*tau, *kind, *second, dr),
        }
    }
}

fn estimate_jobs(cfg: &ExperimentConfig) -> Result<Vec<EstimateJob>> {
    let fams = families(cfg)?;
    let mut jobs = Vec::new();
    for c in &cfg.checks {
        let energy = match c.as_str() {
            "hardy" => Some(EnergyCheck::Hardy { p: cfg.p }),
            "le" => Some(EnergyCheck::Le),
            "mr" => Some(EnergyCheck::Mr { p: cfg.p }),
            "newle" => Some(EnergyCheck::Newle { p: cfg.p, delta: cfg.delta }),
            _ => None,
        };
        if let Some(e) = energy {
            jobs.extend(fams.iter().map(|&f| EstimateJob::Energy(e, f)));
            continue;
        }
        match c.as_str() {
            "sobolev" => {
                for f in [FrameFamily::Translate, FrameFamily::Dilate] {
                    jobs.extend(FRAME_SCALES.iter().map(|&r| EstimateJob::Sobolev(f, r)));
                }
            }
            "mtt_r" | "mtt_u" | "crt" => {
                let second = c == "crt";
                for &(tau, s) in &KS_CASES {
                    let kind = if c == "mtt_u" { KsRegion::U(s) } else { KsRegion::R(s) };
                    jobs.push(EstimateJob::Ks { second, tau, kind });
                }
            }
            "cut" => jobs.extend(CUT_CASES.iter().map(|&(tau, s)| EstimateJob::Ks { second: true, tau, kind: KsRegion::U(s) })),
            other => return Err(Error::Config(format!("unknown estimate check {other:?}"))),
        }
    }
    Ok(jobs)
}

fn run_estimates(cfg: &ExperimentConfig, out: &mut Output) -> Result<Verdict> {
    let jobs = estimate_jobs(cfg)?;
    let steps = pairs(&cfg.ladder);
    let results = par_map(cfg.jobs, &jobs, |job| -> Result<Vec<EstimateReport>> {
        let mut reps = Vec::new();
        let mut coarse = job.at(steps[0].0, cfg.t_max)?;
        for &(_, b) in &steps {
            let fine = job.at(b, cfg.t_max)?.with_coarse(&coarse);
            reps.push(fine.clone());
            coarse = fine;
        }
        Ok(reps)
    });
    let reports: Vec<EstimateReport> = results.into_iter().collect::<Result<Vec<_>>>()?.into_iter().flatten().collect();
    out.jsonl("estimates.jsonl", &reports)?;
    let ok = reports
        .iter()
        .all(|r| r.ratio.is_finite() && r.refinement_drift.is_none_or(|d| d <= DRIFT_TOL));
    Ok(Verdict::from(ok))
}

fn picard_config(cfg: &ExperimentConfig, eps: f64) -> Result<PicardConfig> {
    let grid = GridSpec::for_horizon(cfg.ladder[0], DEFAULT_CFL, cfg.t_max, RADIAL_PAD)?;
    Ok(PicardConfig {
        p: cfg.p,
        delta: cfg.delta,
        n: cfg.n,
        k_max: cfg.k_max,
        stop_tol: cfg.stop_tol,
        record_stride: cfg.stride,
        ..PicardConfig::new(data_for(eps, cfg.n)?, grid)
    })
}

/// Rows `(ε, k, M_k, A_k, ratio)`; the ratio column is NaN where undefined.
fn summary_rows(runs: &[Vec<IterationRecord>]) -> Vec<Vec<f64>> {
    runs.iter()
        .flatten()
        .map(|r| vec![r.epsilon, r.k as f64, r.m.total, r.a.total, r.contraction_ratio.unwrap_or(f64::NAN)])
        .collect()
}

const SUMMARY_HEADER: [&str; 5] = ["eps", "k", "M_k", "A_k", "ratio"];

/// No ratio from `k ≥ 3` exceeds the contraction bound.
pub fn contracts(records: &[IterationRecord]) -> bool {
    records
        .iter()
        .filter(|r| r.k >= CONTRACTION_FROM)
        .all(|r| r.contraction_ratio.is_none_or(|x| x <= CONTRACTION_BOUND))
}

fn run_picard(cfg: &ExperimentConfig, out: &mut Output) -> Result<Verdict> {
    let pc = picard_config(cfg, cfg.eps[0])?;
    let records = run_iteration_in(&pc, &out.path("iterates"))?;
    out.register("iterates");
    out.jsonl("records.jsonl", &records)?;
    out.csv("summary.csv", &SUMMARY_HEADER, &summary_rows(std::slice::from_ref(&records)))?;
    Ok(Verdict::from(contracts(&records)))
}

pub const DECAY_TOL: f64 = 0.15;
pub const DECAY_VARIATION: f64 = 2.0;
pub const DECAY_V_SLACK: f64 = 0.05;

fn run_decay(cfg: &ExperimentConfig, out: &mut Output) -> Result<Verdict> {
    let data = data_for(cfg.eps[0], cfg.n)?;
    let grid = GridSpec::for_horizon(cfg.ladder[0], DEFAULT_CFL, cfg.t_max, RADIAL_PAD)?;
    // only the per-step diagnostics are needed; keep a single frame
    let window = RecordWindow { t_min: cfg.t_max, r_min: 0.0, r_max: cfg.ladder[0] };
    let h = solve(&data, &SolveConfig::new(grid, Mode::Semilinear).with_stride(cfg.stride).with_window(window))?;
    let fit = fit_decay(&h, cfg.delta)?;
    out.jsonl("decay.jsonl", std::slice::from_ref(&fit))?;
    let rows = h.diagnostics.iter().map(|d| vec![d.t, d.max_u, d.max_v, d.t * d.max_u]).collect::<Vec<_>>();
    out.csv("decay.csv", &["t", "sup_u", "sup_v", "t_sup_u"], &rows)?;
    Ok(Verdict::from(decay_ok(&fit)))
}

pub fn decay_ok(fit: &crate::picard::DecayFit) -> bool {
    (fit.exponent_u + 1.0).abs() <= DECAY_TOL
        && fit.t_sup_u_variation <= DECAY_VARIATION
        && fit.exponent_v >= fit.exponent_u - DECAY_V_SLACK
}

fn run_sweep(cfg: &ExperimentConfig, out: &mut Output) -> Result<Verdict> {
    let configs = cfg.eps.iter().map(|&e| picard_config(cfg, e)).collect::<Result<Vec<_>>>()?;
    let runs = par_map(cfg.jobs, &configs, run_iteration).into_iter().collect::<Result<Vec<_>>>()?;
    let report = check_boundedness(&runs)?;
    out.jsonl("records.jsonl", &runs.iter().flatten().cloned().collect::<Vec<_>>())?;
    out.jsonl("boundedness.jsonl", std::slice::from_ref(&report))?;
    out.csv("summary.csv", &SUMMARY_HEADER, &summary_rows(&runs))?;
    Ok(Verdict::from(report.pass && report.linear_ok && report.quadratic_ok))
}
