//! Recorded solver output and its persistence.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::solver::{SolveConfig, State};
use crate::fieldgrid::io::{load_field, save_field};
use crate::fieldgrid::{divide_by_r, second_derivative_r, GridSpec, Jet, Parity, SpaceTimeField};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub t: f64,
    /// `∫ (∂t W_u)² + (∂r W_u)² dr`
    pub energy_u: f64,
    pub energy_v: f64,
    pub max_u: f64,
    pub max_v: f64,
}

/// Frames of `W`, `∂t W` for both unknowns (odd in r), the sources acting at
/// each frame (absent for free waves), and per-step diagnostics.
#[derive(Clone, Debug)]
pub struct SolutionHistory {
    pub config: SolveConfig,
    pub frame_grid: GridSpec,
    pub w_u: SpaceTimeField,
    pub p_u: SpaceTimeField,
    pub w_v: SpaceTimeField,
    pub p_v: SpaceTimeField,
    /// `(F_u, F_v)` with `□u = F_u`, `□v = F_v` at each frame.
    pub q: Option<(SpaceTimeField, SpaceTimeField)>,
    pub diagnostics: Vec<StepDiagnostics>,
    pub final_state: State,
    pub data_hash: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    config: SolveConfig,
    frame_grid: GridSpec,
    data_hash: Option<String>,
    has_sources: bool,
    diagnostics: Vec<StepDiagnostics>,
}

const FIELDS: [&str; 4] = ["w_u", "p_u", "w_v", "p_v"];

impl SolutionHistory {
    pub fn u(&self) -> Result<SpaceTimeField> {
        divide_by_r(&self.w_u)
    }

    pub fn v(&self) -> Result<SpaceTimeField> {
        divide_by_r(&self.w_v)
    }

    fn jet(&self, w: &SpaceTimeField, p: &SpaceTimeField, q: Option<&SpaceTimeField>, depth: usize) -> Result<Jet> {
        let mut levels = vec![divide_by_r(w)?];
        if depth > 1 {
            levels.push(divide_by_r(p)?);
        }
        if depth > 2 {
            // u_tt = Δu + F = (∂r² W)/r + F
            let mut tt = divide_by_r(&second_derivative_r(w)?)?.with_parity(Parity::Even);
            if let Some(q) = q {
                tt.add_scaled_assign(1.0, q)?;
            }
            levels.push(tt.with_parity(Parity::Even));
        }
        Jet::new(levels)
    }

    /// `(u, ∂t u, ∂t² u)` truncated to `depth` levels (1..=3); the time
    /// derivatives come from the evolved `∂t W` and from the equation.
    pub fn u_jet(&self, depth: usize) -> Result<Jet> {
        self.jet(&self.w_u, &self.p_u, self.q.as_ref().map(|q| &q.0), depth)
    }

    pub fn v_jet(&self, depth: usize) -> Result<Jet> {
        self.jet(&self.w_v, &self.p_v, self.q.as_ref().map(|q| &q.1), depth)
    }

    /// Largest `|W|` (both unknowns) at points with `r > t + 2 + 2dr`,
    /// relative to the largest `|W|` overall.
    pub fn support_leak(&self) -> f64 {
        let mut outside: f64 = 0.0;
        let mut all: f64 = 0.0;
        let dr = self.frame_grid.dr;
        for w in [&self.w_u, &self.w_v] {
            for n in 0..w.nt() {
                let edge = w.t(n) + 2.0 + 2.0 * dr;
                for j in 0..w.nr() {
                    let a = w.get(n, j).abs();
                    all = all.max(a);
                    if w.r(j) > edge + 1e-12 {
                        outside = outside.max(a);
                    }
                }
            }
        }
        if all == 0.0 { 0.0 } else { outside / all }
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        if !self.w_u.is_full() {
            return Err(Error::Format("only full-grid histories can be saved".into()));
        }
        fs::create_dir_all(dir)?;
        for (name, f) in FIELDS.iter().zip([&self.w_u, &self.p_u, &self.w_v, &self.p_v]) {
            save_field(f, &dir.join(format!("{name}.bin")))?;
        }
        if let Some((qu, qv)) = &self.q {
            save_field(qu, &dir.join("q_u.bin"))?;
            save_field(qv, &dir.join("q_v.bin"))?;
        }
        let state = &self.final_state;
        let mut bytes = Vec::new();
        for a in [&state.w_u, &state.p_u, &state.w_v, &state.p_v] {
            for v in a {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        fs::write(dir.join("final_state.bin"), bytes)?;
        let manifest = Manifest {
            config: self.config,
            frame_grid: self.frame_grid,
            data_hash: self.data_hash.clone(),
            has_sources: self.q.is_some(),
            diagnostics: self.diagnostics.clone(),
        };
        fs::write(dir.join("manifest.json"), serde_json::to_vec_pretty(&manifest)?)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let manifest: Manifest = serde_json::from_slice(&fs::read(dir.join("manifest.json"))?)?;
        let load = |name: &str, parity| -> Result<SpaceTimeField> {
            let f = load_field(&dir.join(format!("{name}.bin")), parity)?;
            if *f.grid() != manifest.frame_grid {
                return Err(Error::Format(format!("{name}.bin does not match the manifest grid")));
            }
            Ok(f)
        };
        let q = if manifest.has_sources {
            Some((load("q_u", Parity::Even)?, load("q_v", Parity::Even)?))
        } else {
            None
        };
        let nr = manifest.config.grid.nr();
        let raw = fs::read(dir.join("final_state.bin"))?;
        if raw.len() != 4 * nr * 8 {
            return Err(Error::Format("final_state.bin has the wrong length".into()));
        }
        let vals: Vec<f64> = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        let part = |k: usize| ndarray::Array1::from(vals[k * nr..(k + 1) * nr].to_vec());
        Ok(Self {
            config: manifest.config,
            frame_grid: manifest.frame_grid,
            w_u: load("w_u", Parity::Odd)?,
            p_u: load("p_u", Parity::Odd)?,
            w_v: load("w_v", Parity::Odd)?,
            p_v: load("p_v", Parity::Odd)?,
            q,
            diagnostics: manifest.diagnostics,
            final_state: State { w_u: part(0), p_u: part(1), w_v: part(2), p_v: part(3) },
            data_hash: manifest.data_hash,
        })
    }
}
