//! The iteration
//!
//! ```text
//! □u_k = ∂t u_{k−1} ∂t v_{k−1} − ∂r u_{k−1} ∂r v_{k−1},   □v_k = ∂t u_{k−1} ∂t v_{k−1}
//! ```
//!
//! from `u₀ = v₀ = 0` with the data fixed, tracked through `M_k` and
//! `A_k`; plus the boundedness check over an ε sweep and the decay fit.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::fieldgrid::{box_radial, divide_by_r, GridSpec, Jet, Parity, SpaceTimeField};
use crate::norms::{
    aggregate, assemble, m_functional, mixed_norm_until, FunctionalKind, FunctionalParams, MixedNormSpec, NormBreakdown,
    WeightSpec,
};
use crate::wavesolver::{
    nonlinearity, solve_linear_forced, Equation, Forcing, InitialData, Mode, NullFormPath, SolutionHistory,
    SolveConfig, BLOWUP_LEVEL, DEFAULT_CFL,
};
use crate::{Error, Result};

pub const DEFAULT_P: f64 = 0.9;
pub const DEFAULT_DELTA: f64 = 0.05;
pub const DEFAULT_N: usize = 2;
pub const DEFAULT_K_MAX: usize = 6;
/// Radial room beyond `T` on iteration grids; the data sit in `r ≤ 2`.
pub const RADIAL_PAD: f64 = 4.0;
/// Contraction verdicts use `k ≥ 3`: `k = 2` still mixes the data transient.
pub const CONTRACTION_FROM: usize = 3;
pub const CONTRACTION_BOUND: f64 = 0.5;
/// Non-decreasing `A_k` this many times in a row means the scheme diverges.
pub const NON_CONTRACTION_RUN: usize = 3;
/// Smallest `max ε / min ε` accepted by the boundedness check.
pub const MIN_SWEEP_SPAN: f64 = 8.0;
pub const BOUND_SLACK: f64 = 0.05;
pub const LINEAR_TOL: f64 = 0.05;
pub const QUADRATIC_TOL: f64 = 0.2;
/// Largest tolerated `|raw − null form| / sup|raw|` for the u-forcing.
pub const NULL_FORM_TOL: f64 = 1e-10;
pub const C0_NOTE: &str = "empirical stand-in: M_1/epsilon of the run";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PicardConfig {
    pub data: InitialData,
    pub grid: GridSpec,
    pub p: f64,
    pub delta: f64,
    pub n: usize,
    pub k_max: usize,
    /// Stop once `A_k` falls below this (0: run to `k_max`).
    pub stop_tol: f64,
    pub record_stride: usize,
}

impl PicardConfig {
    pub fn new(data: InitialData, grid: GridSpec) -> Self {
        Self { data, grid, p: DEFAULT_P, delta: DEFAULT_DELTA, n: DEFAULT_N, k_max: DEFAULT_K_MAX, stop_tol: 0.0, record_stride: 2 }
    }

    /// Calibrated data of size `epsilon` (zero data for `epsilon = 0`) on
    /// `r ≤ t_max + RADIAL_PAD`.
    pub fn calibrated(epsilon: f64, dr: f64, t_max: f64) -> Result<Self> {
        let data = if epsilon == 0.0 { InitialData::zero() } else { InitialData::calibrated(epsilon, DEFAULT_N)? };
        Ok(Self::new(data, GridSpec::for_horizon(dr, DEFAULT_CFL, t_max, RADIAL_PAD)?))
    }

    pub fn with_k_max(self, k_max: usize) -> Self {
        Self { k_max, ..self }
    }

    pub fn params(&self) -> Result<FunctionalParams> {
        Ok(FunctionalParams::new(self.p, self.delta, self.n)?.until(self.grid.t_max))
    }

    pub fn solve_config(&self) -> SolveConfig {
        SolveConfig::new(self.grid, Mode::LinearForced).with_stride(self.record_stride)
    }

    pub fn validate(&self) -> Result<()> {
        self.params()?;
        if self.k_max < 2 {
            return Err(Error::Parameter(format!("need k_max >= 2, got {}", self.k_max)));
        }
        if !(self.stop_tol >= 0.0) {
            return Err(Error::Parameter(format!("stop_tol must be nonnegative, got {}", self.stop_tol)));
        }
        self.solve_config().validate()
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("plain data serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    pub epsilon: f64,
    pub m: NormBreakdown,
    pub a: NormBreakdown,
    /// `A_k / A_{k−1}`, for `k ≥ 2` with `A_{k−1} > 0`.
    pub contraction_ratio: Option<f64>,
    /// See [`C0_NOTE`]; absent for `ε = 0`.
    pub fitted_c0: Option<f64>,
    pub c0_note: String,
    /// `sup|raw − null form| / sup|raw|` of the u-forcing built from
    /// iterate `k − 1`.
    pub null_form_gap: f64,
    pub config_hash: String,
}

/// `(F_u, F_v)` from one iterate, on the same stencils as the norms, and the
/// relative gap between the raw and null-form groupings of `F_u`.
pub fn assemble_forcing(u: &Jet, v: &Jet) -> Result<(Forcing, f64)> {
    let fu = nonlinearity(u, v, Equation::U, NullFormPath::GoodDerivative)?;
    let raw = nonlinearity(u, v, Equation::U, NullFormPath::Raw)?;
    let fv = nonlinearity(u, v, Equation::V, NullFormPath::GoodDerivative)?;
    let gap = null_form_gap(&fu, &raw)?;
    Ok((Forcing { u: fu, v: fv }, gap))
}

fn null_form_gap(null: &SpaceTimeField, raw: &SpaceTimeField) -> Result<f64> {
    let scale = raw.max_abs();
    let gap = if scale > 0.0 { null.sub(raw)?.max_abs() / scale } else { 0.0 };
    if gap > NULL_FORM_TOL {
        return Err(Error::Parameter(format!("raw and null-form u-forcing disagree: relative gap {gap:e}")));
    }
    Ok(gap)
}

/// `Q(u, v) − Q(u − d, v − e)` written as `Q(d, v) + Q(u, e) − Q(d, e)`, so
/// the change in forcing keeps the relative accuracy of the step `(d, e)`
/// instead of inheriting the roundoff of `(u, v)`.
pub fn forcing_step(u: &Jet, v: &Jet, d: &Jet, e: &Jet) -> Result<(Forcing, f64)> {
    let q = |which, path| -> Result<SpaceTimeField> {
        let mut f = nonlinearity(d, v, which, path)?;
        f.add_scaled_assign(1.0, &nonlinearity(u, e, which, path)?)?;
        f.add_scaled_assign(-1.0, &nonlinearity(d, e, which, path)?)?;
        Ok(f)
    };
    let fu = q(Equation::U, NullFormPath::GoodDerivative)?;
    let gap = null_form_gap(&fu, &q(Equation::U, NullFormPath::Raw)?)?;
    Ok((Forcing { u: fu, v: q(Equation::V, NullFormPath::GoodDerivative)? }, gap))
}

/// The step `(u_k − u_{k−1}, v_k − v_{k−1})`: for `k = 1` the free solve
/// from the data, afterwards a zero-data solve forced by the change in the
/// nonlinearity. Solving for the step directly lets `A_k` fall far below
/// the roundoff level of the iterates themselves.
fn solve_step(config: &PicardConfig, k: usize, last: Option<(&SolutionHistory, &SolutionHistory)>) -> Result<(SolutionHistory, f64)> {
    let sc = config.solve_config();
    let (data, forcing, gap) = match last {
        Some((cur, step)) => {
            let (f, gap) = forcing_step(&cur.u_jet(3)?, &cur.v_jet(3)?, &step.u_jet(3)?, &step.v_jet(3)?)?;
            (InitialData::zero(), f, gap)
        }
        None => {
            let z = SpaceTimeField::zeros(sc.frame_grid()?, Parity::Even);
            (config.data, Forcing { u: z.clone(), v: z }, 0.0)
        }
    };
    let mut h = solve_linear_forced(&data, &forcing, &sc).map_err(|e| match e {
        Error::BlowUpSuspected { t } => Error::IterateBlowUp { k, t },
        e => e,
    })?;
    h.data_hash = Some(config.data.hash());
    Ok((h, gap))
}

/// `base + step`, field by field. Per-step diagnostics do not add, so the
/// sum carries none.
fn accumulate(mut base: SolutionHistory, step: &SolutionHistory) -> Result<SolutionHistory> {
    for (a, b) in [(&mut base.w_u, &step.w_u), (&mut base.p_u, &step.p_u), (&mut base.w_v, &step.w_v), (&mut base.p_v, &step.p_v)] {
        a.add_scaled_assign(1.0, b)?;
    }
    match (&mut base.q, &step.q) {
        (Some(a), Some(b)) => {
            a.0.add_scaled_assign(1.0, &b.0)?;
            a.1.add_scaled_assign(1.0, &b.1)?;
        }
        (None, None) => {}
        _ => return Err(Error::GridMismatch),
    }
    let (a, b) = (&mut base.final_state, &step.final_state);
    a.w_u += &b.w_u;
    a.p_u += &b.p_u;
    a.w_v += &b.w_v;
    a.p_v += &b.p_v;
    base.diagnostics.clear();
    Ok(base)
}

/// The record for iterate `k`: `M_k` from the iterate, `A_k` from the step.
pub fn record_for(
    config: &PicardConfig,
    k: usize,
    iterate: &SolutionHistory,
    step: &SolutionHistory,
    prev_a: Option<f64>,
    first_m: Option<f64>,
    null_form_gap: f64,
) -> Result<IterationRecord> {
    let params = config.params()?;
    let m = m_functional(&iterate.u_jet(3)?, &iterate.v_jet(3)?, &params)?;
    let a = assemble(FunctionalKind::A, &aggregate(&step.u_jet(3)?, params.n)?, &aggregate(&step.v_jet(3)?, params.n)?, &params)?;
    let eps = config.data.epsilon;
    let m1 = first_m.unwrap_or(m.total);
    Ok(IterationRecord {
        k,
        epsilon: eps,
        contraction_ratio: prev_a.filter(|&x| x > 0.0).map(|x| a.total / x),
        fitted_c0: (eps > 0.0).then(|| m1 / eps),
        c0_note: C0_NOTE.into(),
        null_form_gap,
        config_hash: config.hash(),
        m,
        a,
    })
}

/// Number of trailing non-decreasing steps in `A_k`.
fn non_decreasing_run(records: &[IterationRecord]) -> usize {
    records
        .windows(2)
        .rev()
        .take_while(|w| w[0].a.total > 0.0 && w[1].a.total >= w[0].a.total)
        .count()
}

fn done(config: &PicardConfig, records: &[IterationRecord]) -> bool {
    records.len() >= config.k_max || records.last().is_some_and(|r| r.a.total < config.stop_tol)
}

const CONFIG_FILE: &str = "config.json";
const RECORDS_FILE: &str = "records.jsonl";

fn iterate_dir(dir: &Path, k: usize) -> PathBuf {
    dir.join(format!("iterate_{k}"))
}

fn step_dir(dir: &Path, k: usize) -> PathBuf {
    dir.join(format!("step_{k}"))
}

fn stored(dir: &Path, k: usize) -> bool {
    iterate_dir(dir, k).join("manifest.json").exists() && step_dir(dir, k).join("manifest.json").exists()
}

#[derive(Serialize, Deserialize)]
struct StoredConfig {
    hash: String,
    config: PicardConfig,
}

/// Records already in `dir` for this config (empty for a fresh directory).
fn open_store(config: &PicardConfig, dir: &Path) -> Result<Vec<IterationRecord>> {
    fs::create_dir_all(dir)?;
    let cfg_path = dir.join(CONFIG_FILE);
    let hash = config.hash();
    if cfg_path.exists() {
        let stored: StoredConfig = serde_json::from_slice(&fs::read(&cfg_path)?)?;
        if stored.hash != hash {
            return Err(Error::Config(format!("{} holds a run with a different config", dir.display())));
        }
    } else {
        fs::write(&cfg_path, serde_json::to_vec_pretty(&StoredConfig { hash, config: *config })?)?;
    }
    let path = dir.join(RECORDS_FILE);
    let text = if path.exists() { fs::read_to_string(&path)? } else { String::new() };
    // a torn last line from an interrupted run is dropped
    let mut records: Vec<IterationRecord> = Vec::new();
    for line in text.lines() {
        match serde_json::from_str::<IterationRecord>(line) {
            Ok(r) if r.k == records.len() + 1 => records.push(r),
            _ => break,
        }
    }
    if records.last().is_some_and(|r| !stored(dir, r.k)) {
        records.clear();
    }
    rewrite_records(dir, &records)?;
    Ok(records)
}

fn rewrite_records(dir: &Path, records: &[IterationRecord]) -> Result<()> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.push(b'\n');
    }
    fs::write(dir.join(RECORDS_FILE), out)?;
    Ok(())
}

fn append_record(dir: &Path, r: &IterationRecord) -> Result<()> {
    let mut f = fs::OpenOptions::new().append(true).create(true).open(dir.join(RECORDS_FILE))?;
    let mut line = serde_json::to_vec(r)?;
    line.push(b'\n');
    f.write_all(&line)?;
    Ok(())
}

/// Records for `k = 1..k_max`, or up to the first `A_k < stop_tol`.
pub fn run_iteration(config: &PicardConfig) -> Result<Vec<IterationRecord>> {
    drive(config, None)
}

/// [`run_iteration`] persisting each iterate, step and record under `dir`; a
/// rerun with the same config resumes after the last stored record. Only
/// the latest iterate and step stay on disk.
pub fn run_iteration_in(config: &PicardConfig, dir: &Path) -> Result<Vec<IterationRecord>> {
    drive(config, Some(dir))
}

fn drive(config: &PicardConfig, dir: Option<&Path>) -> Result<Vec<IterationRecord>> {
    config.validate()?;
    let mut records = match dir {
        Some(d) => open_store(config, d)?,
        None => Vec::new(),
    };
    let mut last: Option<(SolutionHistory, SolutionHistory)> = match (records.last(), dir) {
        (Some(r), Some(d)) => Some((SolutionHistory::load(&iterate_dir(d, r.k))?, SolutionHistory::load(&step_dir(d, r.k))?)),
        _ => None,
    };
    while !done(config, &records) {
        let k = records.len() + 1;
        let (step, gap) = solve_step(config, k, last.as_ref().map(|(a, b)| (a, b)))?;
        let iterate = match last.take() {
            Some((cur, _)) => accumulate(cur, &step)?,
            None => step.clone(),
        };
        let rec = record_for(
            config,
            k,
            &iterate,
            &step,
            records.last().map(|r| r.a.total),
            records.first().map(|r| r.m.total),
            gap,
        )?;
        if let Some(d) = dir {
            iterate.save(&iterate_dir(d, k))?;
            step.save(&step_dir(d, k))?;
            append_record(d, &rec)?;
            if k > 1 {
                for old in [iterate_dir(d, k - 1), step_dir(d, k - 1)] {
                    if old.exists() {
                        fs::remove_dir_all(old)?;
                    }
                }
            }
        }
        records.push(rec);
        last = Some((iterate, step));
        if non_decreasing_run(&records) >= NON_CONTRACTION_RUN {
            return Err(Error::NonContraction { k });
        }
    }
    Ok(records)
}

/// The latest record recomputed from the iterate and step stored in `dir`.
pub fn recompute_last(config: &PicardConfig, dir: &Path, records: &[IterationRecord]) -> Result<IterationRecord> {
    let r = records.last().ok_or_else(|| Error::Parameter("no records to recompute".into()))?;
    let k = r.k;
    let iterate = SolutionHistory::load(&iterate_dir(dir, k))?;
    let step = SolutionHistory::load(&step_dir(dir, k))?;
    let prev_a = (k > 1).then(|| records[k - 2].a.total);
    let first_m = (k > 1).then(|| records[0].m.total);
    record_for(config, k, &iterate, &step, prev_a, first_m, r.null_form_gap)
}

/// The latest iterate stored in `dir`.
pub fn load_iterate(dir: &Path, k: usize) -> Result<SolutionHistory> {
    SolutionHistory::load(&iterate_dir(dir, k))
}

/// Unweighted space-time `L²` norms of `□u − Q_u(∂u, ∂v)` and
/// `□v − Q_v(∂u, ∂v)` for one stored iterate, with `□` from the
/// second-order stencils on `W`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SemilinearResidual {
    pub u: f64,
    pub v: f64,
}

pub fn semilinear_residual(h: &SolutionHistory) -> Result<SemilinearResidual> {
    let (uj, vj) = (h.u_jet(3)?, h.v_jet(3)?);
    let spec = MixedNormSpec::l2l2(WeightSpec::default());
    let horizon = h.frame_grid.t_max;
    let one = |w: &SpaceTimeField, which| -> Result<f64> {
        let boxed = divide_by_r(&box_radial(w)?)?.with_parity(Parity::Even);
        let q = nonlinearity(&uj, &vj, which, NullFormPath::GoodDerivative)?;
        mixed_norm_until(&boxed.sub(&q)?, &spec, horizon)
    };
    Ok(SemilinearResidual { u: one(&h.w_u, Equation::U)?, v: one(&h.w_v, Equation::V)? })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundednessReport {
    pub epsilons: Vec<f64>,
    /// `max_ε M_1/ε`; see [`C0_NOTE`].
    pub fitted_c0: f64,
    pub c0_note: String,
    /// `max_{k, ε} M_k / (2 C₀ ε)`.
    pub max_normalized: f64,
    pub pass: bool,
    /// `(ε, M_1(ε)/M_1(ε/2))` for every halving pair in the sweep.
    pub linearity: Vec<(f64, f64)>,
    pub linear_ok: bool,
    /// `(ε, (M_2 − M_1)(ε)/ε²)`.
    pub quadratic: Vec<(f64, f64)>,
    pub quadratic_ok: bool,
    pub flags: Vec<String>,
}

/// `M_k ≤ 2C₀ε` over an ε sweep, one record list per ε.
pub fn check_boundedness(runs: &[Vec<IterationRecord>]) -> Result<BoundednessReport> {
    let mut runs: Vec<&Vec<IterationRecord>> = runs.iter().filter(|r| !r.is_empty()).collect();
    runs.sort_by(|a, b| b[0].epsilon.total_cmp(&a[0].epsilon));
    let eps: Vec<f64> = runs.iter().map(|r| r[0].epsilon).collect();
    let mut flags = Vec::new();
    if !eps.is_empty() && eps.iter().all(|&e| e == 0.0) {
        flags.push("C0 = 0: zero data".into());
        let all_zero = runs.iter().flat_map(|r| r.iter()).all(|r| r.m.total == 0.0);
        return Ok(BoundednessReport {
            epsilons: eps,
            fitted_c0: 0.0,
            c0_note: C0_NOTE.into(),
            max_normalized: 0.0,
            pass: all_zero,
            linearity: vec![],
            linear_ok: true,
            quadratic: vec![],
            quadratic_ok: true,
            flags,
        });
    }
    let positive: Vec<f64> = eps.iter().copied().filter(|&e| e > 0.0).collect();
    let distinct = positive.windows(2).filter(|w| w[0] != w[1]).count() + usize::from(!positive.is_empty());
    let span = positive.first().zip(positive.last()).map_or(0.0, |(hi, lo)| hi / lo);
    if distinct < 3 || span < MIN_SWEEP_SPAN * (1.0 - 1e-12) {
        return Err(Error::Parameter(format!(
            "boundedness needs at least 3 distinct positive epsilons spanning {MIN_SWEEP_SPAN}x, got {distinct} spanning {span}x"
        )));
    }
    let runs: Vec<&Vec<IterationRecord>> = runs.into_iter().filter(|r| r[0].epsilon > 0.0).collect();
    let c0 = runs.iter().map(|r| r[0].m.total / r[0].epsilon).fold(0.0, f64::max);
    let max_normalized = runs
        .iter()
        .flat_map(|r| r.iter().map(|x| x.m.total / (2.0 * c0 * x.epsilon)))
        .fold(0.0, f64::max);
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
    let mut linearity = Vec::new();
    for a in &runs {
        if let Some(b) = runs.iter().find(|b| close(b[0].epsilon, a[0].epsilon / 2.0)) {
            linearity.push((a[0].epsilon, a[0].m.total / b[0].m.total));
        }
    }
    if linearity.is_empty() {
        flags.push("no halving pair in the sweep: linearity not checked".into());
    }
    let quadratic: Vec<(f64, f64)> = runs
        .iter()
        .filter(|r| r.len() >= 2)
        .map(|r| (r[0].epsilon, (r[1].m.total - r[0].m.total) / (r[0].epsilon * r[0].epsilon)))
        .collect();
    let quadratic_ok = if quadratic.len() >= 2 {
        let mean = quadratic.iter().map(|q| q.1).sum::<f64>() / quadratic.len() as f64;
        mean != 0.0 && quadratic.iter().all(|q| (q.1 / mean - 1.0).abs() <= QUADRATIC_TOL)
    } else {
        flags.push("fewer than two runs reach k = 2: quadratic term not checked".into());
        false
    };
    Ok(BoundednessReport {
        epsilons: positive,
        fitted_c0: c0,
        c0_note: C0_NOTE.into(),
        max_normalized,
        pass: max_normalized <= 1.0 + BOUND_SLACK,
        linear_ok: !linearity.is_empty() && linearity.iter().all(|l| (l.1 / 2.0 - 1.0).abs() <= LINEAR_TOL),
        linearity,
        quadratic,
        quadratic_ok,
        flags,
    })
}

/// Smallest horizon the decay fit accepts.
pub const MIN_DECAY_HORIZON: f64 = 128.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub exponent_u: f64,
    pub exponent_v: f64,
    /// RMS of the log-log fit residuals.
    pub residual_u: f64,
    pub residual_v: f64,
    pub window: (f64, f64),
    /// `max/min` of `t·sup_r|u(t)|` over the window.
    pub t_sup_u_variation: f64,
    /// The rate `−1 + δ/2` the v-bound allows, for comparison.
    pub v_bound_exponent: f64,
    pub samples: usize,
}

/// `(slope, rms residual)` of the least-squares line through `(x, y)`.
fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
    (slope, (rss / n).sqrt())
}

/// Log-log slopes of `sup_r|u(t)|` and `sup_r|v(t)|` over `[T/8, T]`, from the
/// per-step diagnostics.
pub fn fit_decay(history: &SolutionHistory, delta: f64) -> Result<DecayFit> {
    let t_end = history.diagnostics.last().map_or(0.0, |d| d.t);
    if t_end < MIN_DECAY_HORIZON - 1e-9 {
        return Err(Error::Parameter(format!("decay fits need T >= {MIN_DECAY_HORIZON}, got {t_end}")));
    }
    let window = (t_end / 8.0, t_end);
    let picked: Vec<_> = history.diagnostics.iter().filter(|d| d.t >= window.0 - 1e-9).collect();
    for d in &picked {
        for x in [d.max_u, d.max_v] {
            if !x.is_finite() || x > BLOWUP_LEVEL {
                return Err(Error::Parameter(format!("blow-up in the fit window at t = {}", d.t)));
            }
            if x <= 0.0 {
                return Err(Error::Parameter(format!("solution vanishes in the fit window at t = {}", d.t)));
            }
        }
    }
    let lt: Vec<f64> = picked.iter().map(|d| d.t.ln()).collect();
    let (exponent_u, residual_u) = fit_line(&lt, &picked.iter().map(|d| d.max_u.ln()).collect::<Vec<_>>());
    let (exponent_v, residual_v) = fit_line(&lt, &picked.iter().map(|d| d.max_v.ln()).collect::<Vec<_>>());
    let tu: Vec<f64> = picked.iter().map(|d| d.t * d.max_u).collect();
    let (lo, hi) = tu.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    Ok(DecayFit {
        exponent_u,
        exponent_v,
        residual_u,
        residual_v,
        window,
        t_sup_u_variation: hi / lo,
        v_bound_exponent: -1.0 + delta / 2.0,
        samples: picked.len(),
    })
}
