//! Method-of-lines RK4 for the first-order system `∂t W = Π`,
//! `∂t Π = ∂r²W + r·F` on `r ≥ 0`, one pair per unknown.
//!
//! Space is fourth-order centered; the origin is handled by odd reflection of
//! `W` (so `W(t, 0) = 0`), and `u = W/r` uses the even reflection of `u`.
//! Only cells up to the numerical cone `(t + ρ)/dr + MARGIN` are updated,
//! with `ρ` the initial support radius.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::data::InitialData;
use super::history::{SolutionHistory, StepDiagnostics};
use super::nonlinearity::{source, Equation, NullFormPath};
use crate::fieldgrid::{GridSpec, Parity, SpaceTimeField};
use crate::{Error, Result};

pub const MAX_CFL: f64 = 0.9;
pub const DEFAULT_CFL: f64 = 0.5;
/// Values beyond this are treated as blow-up.
pub const BLOWUP_LEVEL: f64 = 1e8;
const MARGIN: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Homogeneous,
    Semilinear,
    LinearForced,
}

/// Part of the frame lattice to keep: `t ≥ t_min`, `r_min ≤ r ≤ r_max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordWindow {
    pub t_min: f64,
    pub r_min: f64,
    pub r_max: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub grid: GridSpec,
    pub mode: Mode,
    /// Steps between recorded frames.
    pub record_stride: usize,
    pub window: Option<RecordWindow>,
    pub null_form: NullFormPath,
}

impl SolveConfig {
    pub fn new(grid: GridSpec, mode: Mode) -> Self {
        Self { grid, mode, record_stride: 2, window: None, null_form: NullFormPath::GoodDerivative }
    }

    pub fn with_stride(self, record_stride: usize) -> Self {
        Self { record_stride, ..self }
    }

    pub fn with_window(self, window: RecordWindow) -> Self {
        Self { window: Some(window), ..self }
    }

    pub fn frame_grid(&self) -> Result<GridSpec> {
        self.grid.with_time_stride(self.record_stride)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.cfl > MAX_CFL + 1e-12 {
            return Err(Error::CflViolation(self.grid.cfl));
        }
        self.frame_grid()?;
        Ok(())
    }
}

/// Sources `F_u`, `F_v` (`□u = F_u`, `□v = F_v`) sampled on the frame grid.
#[derive(Clone, Debug)]
pub struct Forcing {
    pub u: SpaceTimeField,
    pub v: SpaceTimeField,
}

/// One time level of the evolved variables.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub w_u: Array1<f64>,
    pub p_u: Array1<f64>,
    pub w_v: Array1<f64>,
    pub p_v: Array1<f64>,
}

impl State {
    pub fn zeros(nr: usize) -> Self {
        let z = Array1::zeros(nr);
        Self { w_u: z.clone(), p_u: z.clone(), w_v: z.clone(), p_v: z }
    }

    /// `W = r·u₀`, `Π = r·u₁` on the grid's radii.
    pub fn from_data(data: &InitialData, grid: &GridSpec) -> Self {
        let s = |p: &super::data::Profile| Array1::from_shape_fn(grid.nr(), |j| grid.r(j) * p.value(grid.r(j)));
        Self { w_u: s(&data.u0), p_u: s(&data.u1), w_v: s(&data.v0), p_v: s(&data.v1) }
    }

    fn arrays(&self) -> [&Array1<f64>; 4] {
        [&self.w_u, &self.p_u, &self.w_v, &self.p_v]
    }

    fn arrays_mut(&mut self) -> [&mut Array1<f64>; 4] {
        [&mut self.w_u, &mut self.p_u, &mut self.w_v, &mut self.p_v]
    }

    /// `y ← a + c·k` on cells `0..=ja`.
    fn set_axpy(&mut self, a: &State, c: f64, k: &State, ja: usize) {
        for ((y, a), k) in self.arrays_mut().into_iter().zip(a.arrays()).zip(k.arrays()) {
            for j in 0..=ja {
                y[j] = a[j] + c * k[j];
            }
        }
    }

    fn add_scaled(&mut self, c: f64, k: &State, ja: usize) {
        for (y, k) in self.arrays_mut().into_iter().zip(k.arrays()) {
            for j in 0..=ja {
                y[j] += c * k[j];
            }
        }
    }
}

/// `u = W/r` on `0..=n`, fourth order at the origin.
fn quotient(w: &Array1<f64>, dr: f64, n: usize, out: &mut [f64]) {
    out[0] = if w.len() > 2 { (8.0 * w[1] - w[2]) / (6.0 * dr) } else { 0.0 };
    for j in 1..=n {
        out[j] = w[j] / (j as f64 * dr);
    }
}

/// Fourth-order `∂r` of an even function given on `0..=n`, zero beyond.
fn even_derivative(u: &[f64], dr: f64, n: usize, out: &mut [f64]) {
    let at = |i: isize| -> f64 {
        let k = i.unsigned_abs();
        if k <= n { u[k] } else { 0.0 }
    };
    for j in 0..=n {
        let i = j as isize;
        out[j] = (8.0 * (at(i + 1) - at(i - 1)) - (at(i + 2) - at(i - 2))) / (12.0 * dr);
    }
}

/// Fourth-order `∂r²` of an odd function given on `0..nr`, zero beyond.
fn odd_laplacian(w: &Array1<f64>, dr: f64, j: usize) -> f64 {
    let nr = w.len() as isize;
    let at = |i: isize| -> f64 {
        if i < 0 {
            -w[(-i) as usize]
        } else if i < nr {
            w[i as usize]
        } else {
            0.0
        }
    };
    let i = j as isize;
    (-at(i + 2) + 16.0 * at(i + 1) - 30.0 * at(i) + 16.0 * at(i - 1) - at(i - 2)) / (12.0 * dr * dr)
}

#[derive(Default)]
struct Scratch {
    u: Vec<f64>,
    ut: Vec<f64>,
    v: Vec<f64>,
    vt: Vec<f64>,
    ur: Vec<f64>,
    vr: Vec<f64>,
    fu: Vec<f64>,
    fv: Vec<f64>,
}

struct Rhs<'a> {
    grid: GridSpec,
    mode: Mode,
    path: NullFormPath,
    forcing: Option<&'a Forcing>,
    frame_dt: f64,
    s: Scratch,
}

impl<'a> Rhs<'a> {
    fn new(config: &SolveConfig, forcing: Option<&'a Forcing>) -> Result<Self> {
        let nr = config.grid.nr();
        let z = || vec![0.0; nr];
        Ok(Self {
            grid: config.grid,
            mode: config.mode,
            path: config.null_form,
            forcing,
            frame_dt: config.frame_grid()?.dt,
            s: Scratch { u: z(), ut: z(), v: z(), vt: z(), ur: z(), vr: z(), fu: z(), fv: z() },
        })
    }

    /// Sources `F_u`, `F_v` on cells `0..=n` at time `t`, into `fu`, `fv`.
    fn sources(&mut self, t: f64, y: &State, n: usize) {
        let dr = self.grid.dr;
        let s = &mut self.s;
        match self.mode {
            Mode::Homogeneous => {
                s.fu[..=n].fill(0.0);
                s.fv[..=n].fill(0.0);
            }
            Mode::LinearForced => {
                let f = self.forcing.expect("validated");
                let x = (t / self.frame_dt).max(0.0);
                let k = (x.floor() as usize).min(f.u.nt() - 2);
                let th = x - k as f64;
                let (fu, fv) = (f.u.values(), f.v.values());
                for j in 0..=n {
                    s.fu[j] = (1.0 - th) * fu[(k, j)] + th * fu[(k + 1, j)];
                    s.fv[j] = (1.0 - th) * fv[(k, j)] + th * fv[(k + 1, j)];
                }
            }
            Mode::Semilinear => {
                let m = (n + 2).min(y.w_u.len() - 1);
                quotient(&y.w_u, dr, m, &mut s.u);
                quotient(&y.p_u, dr, m, &mut s.ut);
                quotient(&y.w_v, dr, m, &mut s.v);
                quotient(&y.p_v, dr, m, &mut s.vt);
                even_derivative(&s.u, dr, m, &mut s.ur);
                even_derivative(&s.v, dr, m, &mut s.vr);
                for j in 0..=n {
                    let (ut, ur, vt, vr) = (s.ut[j], s.ur[j], s.vt[j], s.vr[j]);
                    s.fu[j] = source(Equation::U, self.path, ut, ur, vt, vr);
                    s.fv[j] = source(Equation::V, self.path, ut, ur, vt, vr);
                }
            }
        }
    }

    /// `k = (Π, ∂r²W + r·F)` on cells `0..=n`.
    fn eval(&mut self, t: f64, y: &State, n: usize, k: &mut State) {
        self.sources(t, y, n);
        let dr = self.grid.dr;
        k.w_u[0] = 0.0;
        k.w_v[0] = 0.0;
        k.p_u[0] = 0.0;
        k.p_v[0] = 0.0;
        for j in 1..=n {
            let r = j as f64 * dr;
            k.w_u[j] = y.p_u[j];
            k.w_v[j] = y.p_v[j];
            k.p_u[j] = odd_laplacian(&y.w_u, dr, j) + r * self.s.fu[j];
            k.p_v[j] = odd_laplacian(&y.w_v, dr, j) + r * self.s.fv[j];
        }
    }
}

/// Last updated cell at time `t` for data supported in `r ≤ reach`.
fn active_limit(grid: &GridSpec, reach: f64, t: f64) -> usize {
    (((t + reach) / grid.dr).ceil() as usize + MARGIN).min(grid.nr() - 1)
}

/// Radius of the last nonzero sample (at least 2, the data radius).
fn initial_reach(y: &State, dr: f64) -> f64 {
    let last = y.arrays().iter().filter_map(|a| a.iter().rposition(|&v| v != 0.0)).max().unwrap_or(0);
    (last as f64 * dr).max(2.0)
}

/// `∫ (Π² + (∂r W)²) dr` by the trapezoid rule on cells `0..=n`, with the
/// same fourth-order differences as the evolution.
fn energy(w: &Array1<f64>, p: &Array1<f64>, dr: f64, n: usize) -> f64 {
    let nr = w.len() as isize;
    let at = |i: isize| -> f64 {
        if i < 0 {
            -w[(-i) as usize]
        } else if i < nr {
            w[i as usize]
        } else {
            0.0
        }
    };
    let e = |j: usize| {
        let i = j as isize;
        let wr = (8.0 * (at(i + 1) - at(i - 1)) - (at(i + 2) - at(i - 2))) / (12.0 * dr);
        p[j] * p[j] + wr * wr
    };
    let mut sum = 0.5 * (e(0) + e(n));
    for j in 1..n {
        sum += e(j);
    }
    sum * dr
}

fn max_quotient(w: &Array1<f64>, dr: f64, n: usize) -> f64 {
    let mut m = if w.len() > 2 { ((8.0 * w[1] - w[2]) / (6.0 * dr)).abs() } else { 0.0 };
    for j in 1..=n {
        m = m.max((w[j] / (j as f64 * dr)).abs());
    }
    m
}

/// Frames being kept, with their placement in the frame lattice.
struct Recorder {
    n0: usize,
    j0: usize,
    j1: usize,
    w_u: Array2<f64>,
    p_u: Array2<f64>,
    w_v: Array2<f64>,
    p_v: Array2<f64>,
    q: Option<(Array2<f64>, Array2<f64>)>,
}

impl Recorder {
    fn new(config: &SolveConfig, frames: &GridSpec) -> Result<Self> {
        let (n0, j0, j1) = match config.window {
            None => (0, 0, frames.nr() - 1),
            Some(w) => {
                let n0 = frames.n_at_or_above(w.t_min);
                let j0 = frames.j_at_or_above(w.r_min);
                let j1 = frames.j_at_or_below(w.r_max).unwrap_or(0);
                if n0 >= frames.nt() || j1 < j0 {
                    return Err(Error::InvalidGrid(format!("record window {w:?} holds no frame points")));
                }
                (n0, j0, j1)
            }
        };
        let shape = (frames.nt() - n0, j1 - j0 + 1);
        let z = || Array2::zeros(shape);
        let q = (config.mode != Mode::Homogeneous).then(|| (z(), z()));
        Ok(Self { n0, j0, j1, w_u: z(), p_u: z(), w_v: z(), p_v: z(), q })
    }

    fn record(&mut self, frame: usize, y: &State, fu: &[f64], fv: &[f64], n_active: usize) {
        if frame < self.n0 {
            return;
        }
        let row = frame - self.n0;
        let span = self.j0..=self.j1;
        for (dst, src) in [&mut self.w_u, &mut self.p_u, &mut self.w_v, &mut self.p_v].into_iter().zip(y.arrays()) {
            dst.row_mut(row).assign(&src.slice(ndarray::s![span.clone()]));
        }
        if let Some((qu, qv)) = &mut self.q {
            for (i, j) in span.enumerate() {
                let inside = j <= n_active;
                qu[(row, i)] = if inside { fu[j] } else { 0.0 };
                qv[(row, i)] = if inside { fv[j] } else { 0.0 };
            }
        }
    }
}

fn check_forcing(config: &SolveConfig, forcing: Option<&Forcing>) -> Result<()> {
    match (config.mode, forcing) {
        (Mode::LinearForced, Some(f)) => {
            let frames = config.frame_grid()?;
            for g in [&f.u, &f.v] {
                if !g.is_full() || *g.grid() != frames {
                    return Err(Error::GridMismatch);
                }
            }
            Ok(())
        }
        (Mode::LinearForced, None) => Err(Error::Parameter("linear_forced mode needs a forcing".into())),
        (_, Some(_)) => Err(Error::Parameter("a forcing is only accepted in linear_forced mode".into())),
        (_, None) => Ok(()),
    }
}

/// Evolve from `initial` (sampled at t = 0 on `config.grid`).
pub fn solve_from(initial: State, config: &SolveConfig, forcing: Option<&Forcing>) -> Result<SolutionHistory> {
    config.validate()?;
    check_forcing(config, forcing)?;
    let grid = config.grid;
    let nr = grid.nr();
    for a in initial.arrays() {
        if a.len() != nr {
            return Err(Error::GridMismatch);
        }
    }
    if initial.w_u[0] != 0.0 || initial.w_v[0] != 0.0 {
        return Err(Error::ExpectedOddParity);
    }
    let frames = config.frame_grid()?;
    let mut rec = Recorder::new(config, &frames)?;
    let mut rhs = Rhs::new(config, forcing)?;
    let (dt, dr) = (grid.dt, grid.dr);
    let mut y = initial;
    let mut tmp = State::zeros(nr);
    let mut ks: [State; 4] = std::array::from_fn(|_| State::zeros(nr));
    let mut diagnostics = Vec::with_capacity(grid.nt());

    let diag = |t: f64, y: &State, n: usize, out: &mut Vec<StepDiagnostics>| {
        out.push(StepDiagnostics {
            t,
            energy_u: energy(&y.w_u, &y.p_u, dr, n),
            energy_v: energy(&y.w_v, &y.p_v, dr, n),
            max_u: max_quotient(&y.w_u, dr, n),
            max_v: max_quotient(&y.w_v, dr, n),
        });
    };

    let reach = initial_reach(&y, dr);
    let n_steps = grid.n_max();
    for step in 0..=n_steps {
        let t = grid.t(step);
        let n = active_limit(&grid, reach, t + dt);
        if step % config.record_stride == 0 {
            rhs.sources(t, &y, n);
            rec.record(step / config.record_stride, &y, &rhs.s.fu, &rhs.s.fv, n);
        }
        diag(t, &y, n, &mut diagnostics);
        if step == n_steps {
            break;
        }
        let [k1, k2, k3, k4] = &mut ks;
        rhs.eval(t, &y, n, k1);
        tmp.set_axpy(&y, 0.5 * dt, k1, n);
        rhs.eval(t + 0.5 * dt, &tmp, n, k2);
        tmp.set_axpy(&y, 0.5 * dt, k2, n);
        rhs.eval(t + 0.5 * dt, &tmp, n, k3);
        tmp.set_axpy(&y, dt, k3, n);
        rhs.eval(t + dt, &tmp, n, k4);
        y.add_scaled(dt / 6.0, k1, n);
        y.add_scaled(dt / 3.0, k2, n);
        y.add_scaled(dt / 3.0, k3, n);
        y.add_scaled(dt / 6.0, k4, n);
        let worst = y.arrays().iter().flat_map(|a| a.iter().take(n + 1)).fold(0.0_f64, |m, v| {
            if v.is_finite() { m.max(v.abs()) } else { f64::INFINITY }
        });
        if worst > BLOWUP_LEVEL {
            return Err(Error::BlowUpSuspected { t: t + dt });
        }
    }

    let field = |a: Array2<f64>, parity: Parity| SpaceTimeField::window_from_values(frames, rec.n0, rec.j0, a, parity);
    let q = match rec.q {
        Some((qu, qv)) => Some((field(qu, Parity::Even)?, field(qv, Parity::Even)?)),
        None => None,
    };
    Ok(SolutionHistory {
        config: *config,
        frame_grid: frames,
        w_u: field(rec.w_u, Parity::Odd)?,
        p_u: field(rec.p_u, Parity::Odd)?,
        w_v: field(rec.w_v, Parity::Odd)?,
        p_v: field(rec.p_v, Parity::Odd)?,
        q,
        diagnostics,
        final_state: y,
        data_hash: None,
    })
}

/// Evolve initial data in homogeneous or semilinear mode.
pub fn solve(data: &InitialData, config: &SolveConfig) -> Result<SolutionHistory> {
    check_support(data)?;
    let mut h = solve_from(State::from_data(data, &config.grid), config, None)?;
    h.data_hash = Some(data.hash());
    Ok(h)
}

/// Evolve with the given sources held fixed (`□u = F_u`, `□v = F_v`).
pub fn solve_linear_forced(data: &InitialData, forcing: &Forcing, config: &SolveConfig) -> Result<SolutionHistory> {
    check_support(data)?;
    let mut h = solve_from(State::from_data(data, &config.grid), config, Some(forcing))?;
    h.data_hash = Some(data.hash());
    Ok(h)
}

fn check_support(data: &InitialData) -> Result<()> {
    if data.support_radius() > 2.0 {
        return Err(Error::Parameter(format!("data must be supported in r <= 2, got {}", data.support_radius())));
    }
    Ok(())
}
