//! `key = value` experiment configuration, merged from defaults, a file and
//! flags.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use clap::ValueEnum;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::Flags;
use crate::picard::{DEFAULT_DELTA, DEFAULT_K_MAX, DEFAULT_N, DEFAULT_P};
use crate::{Error, Result};

/// Default output directory when `--out` is not given.
pub const OUT_ENV: &str = "WEAKNULL_OUT";
const DEFAULT_OUT: &str = "weaknull-out";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Solve,
    Identities,
    Estimates,
    Picard,
    Decay,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Identities => "identities",
            Command::Estimates => "estimates",
            Command::Picard => "picard",
            Command::Decay => "decay",
            Command::Sweep => "sweep",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        [Command::Solve, Command::Identities, Command::Estimates, Command::Picard, Command::Decay, Command::Sweep]
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown command {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SolveMode {
    Homogeneous,
    Semilinear,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    /// Radial steps, strictly decreasing.
    pub ladder: Vec<f64>,
    pub eps: Vec<f64>,
    pub t_max: f64,
    pub k_max: usize,
    pub p: f64,
    pub delta: f64,
    pub n: usize,
    pub stop_tol: f64,
    pub mode: SolveMode,
    pub stride: usize,
    pub families: Vec<String>,
    pub checks: Vec<String>,
    pub out: PathBuf,
    pub jobs: usize,
}

/// A real number or a fraction `a/b`.
pub fn parse_real(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let (a, b) = (a.trim().parse::<f64>(), b.trim().parse::<f64>());
            match (a, b) {
                (Ok(a), Ok(b)) if b != 0.0 => a / b,
                _ => return Err(format!("not a number or fraction: {s:?}")),
            }
        }
        None => s.parse::<f64>().map_err(|_| format!("not a number: {s:?}"))?,
    };
    if v.is_finite() { Ok(v) } else { Err(format!("not finite: {s:?}")) }
}

fn list<T>(s: &str, item: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty()).map(item).collect()
}

fn real(s: &str) -> Result<f64> {
    parse_real(s).map_err(Error::Config)
}

fn count(s: &str) -> Result<usize> {
    s.trim().parse().map_err(|_| Error::Config(format!("not a count: {s:?}")))
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(", ")
}

impl ExperimentConfig {
    pub fn defaults(command: Command) -> Self {
        let (ladder, eps, t_max) = match command {
            Command::Solve => (vec![1.0 / 32.0], vec![0.01], 16.0),
            Command::Identities | Command::Estimates => (vec![1.0 / 32.0], vec![0.01], 8.0),
            Command::Picard => (vec![1.0 / 32.0], vec![0.01], 64.0),
            Command::Decay => (vec![1.0 / 16.0], vec![0.01], 256.0),
            Command::Sweep => (vec![1.0 / 32.0], vec![0.02, 0.01, 0.005, 0.0025], 64.0),
        };
        let families = match command {
            Command::Identities => vec!["localized", "pulse", "standing", "reflecting"],
            _ => vec!["outgoing", "standing", "reflecting", "pulse", "localized", "solver"],
        };
        let checks = match command {
            Command::Identities => vec!["plus", "minus"],
            _ => vec!["hardy", "le", "mr", "newle", "sobolev", "mtt_r", "mtt_u", "crt", "cut"],
        };
        Self {
            command,
            ladder,
            eps,
            t_max,
            k_max: DEFAULT_K_MAX,
            p: DEFAULT_P,
            delta: DEFAULT_DELTA,
            n: DEFAULT_N,
            stop_tol: 0.0,
            mode: SolveMode::Homogeneous,
            stride: 2,
            families: families.into_iter().map(String::from).collect(),
            checks: checks.into_iter().map(String::from).collect(),
            out: std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
            jobs: 1,
        }
    }

    /// Defaults, then `flags.config`, then the flags themselves.
    pub fn resolve(command: Command, flags: &Flags) -> Result<Self> {
        let mut c = Self::defaults(command);
        if let Some(path) = &flags.config {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            c.apply_text(&text)?;
        }
        if !flags.dr.is_empty() {
            c.ladder = flags.dr.clone();
        }
        if !flags.eps.is_empty() {
            c.eps = flags.eps.clone();
        }
        if !flags.family.is_empty() {
            c.families = flags.family.clone();
        }
        if !flags.check.is_empty() {
            c.checks = flags.check.clone();
        }
        c.t_max = flags.t_max.unwrap_or(c.t_max);
        c.k_max = flags.kmax.unwrap_or(c.k_max);
        c.p = flags.p.unwrap_or(c.p);
        c.delta = flags.delta.unwrap_or(c.delta);
        c.n = flags.n.unwrap_or(c.n);
        c.stop_tol = flags.stop_tol.unwrap_or(c.stop_tol);
        c.mode = flags.mode.unwrap_or(c.mode);
        c.stride = flags.stride.unwrap_or(c.stride);
        c.jobs = flags.jobs.unwrap_or(c.jobs);
        if let Some(o) = &flags.out {
            c.out = o.clone();
        }
        c.validate()?;
        Ok(c)
    }

    /// Apply `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut seen = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            let key = k.trim().replace('-', "_");
            if seen.insert(key.clone(), ()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key {key}", i + 1)));
            }
            self.set(&key, v.trim())?;
        }
        Ok(())
    }

    fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "command" => {
                if Command::parse(v)? != self.command {
                    return Err(Error::Config(format!("config file is for {v:?}, not {:?}", self.command.name())));
                }
            }
            "dr" => self.ladder = list(v, real)?,
            "eps" => self.eps = list(v, real)?,
            "t_max" => self.t_max = real(v)?,
            "kmax" | "k_max" => self.k_max = count(v)?,
            "p" => self.p = real(v)?,
            "delta" => self.delta = real(v)?,
            "n" => self.n = count(v)?,
            "stop_tol" => self.stop_tol = real(v)?,
            "mode" => self.mode = SolveMode::from_str(v, true).map_err(Error::Config)?,
            "stride" => self.stride = count(v)?,
            "family" => self.families = list(v, |x| Ok(x.to_string()))?,
            "check" => self.checks = list(v, |x| Ok(x.to_string()))?,
            "out" => self.out = PathBuf::from(v),
            "jobs" => self.jobs = count(v)?,
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.ladder.is_empty() || self.ladder.iter().any(|&d| !(d > 0.0)) {
            return Err(Error::Config("dr values must be positive".into()));
        }
        if self.ladder.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("the dr ladder must be strictly decreasing".into()));
        }
        if self.eps.is_empty() || self.eps.iter().any(|&e| !(e >= 0.0)) {
            return Err(Error::Config("eps values must be nonnegative".into()));
        }
        if !(self.t_max > 0.0) {
            return Err(Error::Config("t_max must be positive".into()));
        }
        if self.stride == 0 || self.jobs == 0 {
            return Err(Error::Config("stride and jobs must be at least 1".into()));
        }
        if self.families.is_empty() || self.checks.is_empty() {
            return Err(Error::Config("family and check lists must be nonempty".into()));
        }
        Ok(())
    }

    /// The settings that determine results (everything but `out` and
    /// `jobs`), in file form.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "command = {}", self.command.name());
        let _ = writeln!(s, "dr = {}", join(&self.ladder));
        let _ = writeln!(s, "eps = {}", join(&self.eps));
        let _ = writeln!(s, "t_max = {}", self.t_max);
        let _ = writeln!(s, "kmax = {}", self.k_max);
        let _ = writeln!(s, "p = {}", self.p);
        let _ = writeln!(s, "delta = {}", self.delta);
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "stop_tol = {}", self.stop_tol);
        let _ = writeln!(s, "mode = {}", match self.mode {
            SolveMode::Homogeneous => "homogeneous",
            SolveMode::Semilinear => "semilinear",
        });
        let _ = writeln!(s, "stride = {}", self.stride);
        let _ = writeln!(s, "family = {}", self.families.join(", "));
        let _ = writeln!(s, "check = {}", self.checks.join(", "));
        s
    }

    /// Full file form; reading it back gives the same config.
    pub fn to_file_string(&self) -> String {
        format!("{}out = {}\njobs = {}\n", self.canonical(), self.out.display(), self.jobs)
    }

    pub fn from_file_str(command: Command, text: &str) -> Result<Self> {
        let mut c = Self::defaults(command);
        c.apply_text(text)?;
        c.validate()?;
        Ok(c)
    }

    /// Hex SHA-256 of [`canonical`](Self::canonical).
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fractions_and_reals() {
        assert_eq!(parse_real("1/32"), Ok(0.03125));
        assert_eq!(parse_real(" 0.5 "), Ok(0.5));
        assert!(parse_real("1/0").is_err());
        assert!(parse_real("x").is_err());
        assert!(parse_real("inf").is_err());
    }

    #[test]
    fn file_values_then_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(&path, "# comment\ncommand = picard\ndr = 1/16\nkmax = 4\neps = 0.02, 0.01\n").unwrap();
        let flags = Flags { config: Some(path.clone()), kmax: Some(5), ..Flags::default() };
        let c = ExperimentConfig::resolve(Command::Picard, &flags).unwrap();
        assert_eq!((c.ladder.clone(), c.k_max, c.eps.clone()), (vec![0.0625], 5, vec![0.02, 0.01]));
        assert!(ExperimentConfig::resolve(Command::Sweep, &flags).is_err(), "wrong command");
        fs::write(&path, "dr = 1/16\nwhat = 3\n").unwrap();
        assert!(ExperimentConfig::resolve(Command::Picard, &flags).is_err());
        fs::write(&path, "dr = 1/64, 1/32\n").unwrap();
        assert!(ExperimentConfig::resolve(Command::Picard, &flags).is_err(), "ladder must decrease");
        let missing = Flags { config: Some(dir.path().join("nope")), ..Flags::default() };
        assert!(ExperimentConfig::resolve(Command::Picard, &missing).is_err());
    }

    #[test]
    fn hash_ignores_out_and_jobs() {
        let a = ExperimentConfig::defaults(Command::Sweep);
        let b = ExperimentConfig { out: "elsewhere".into(), jobs: 4, ..a.clone() };
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), ExperimentConfig { k_max: 3, ..a }.hash());
    }

    proptest! {
        #[test]
        fn file_form_round_trips(
            dr in prop::collection::vec(1e-4f64..1.0, 1..4),
            eps in prop::collection::vec(0.0f64..1.0, 1..5),
            t_max in 1.0f64..500.0,
            k_max in 2usize..10,
            p in 0.01f64..0.99,
            stride in 1usize..8,
            jobs in 1usize..8,
        ) {
            let mut ladder = dr;
            ladder.sort_by(|a, b| b.total_cmp(a));
            ladder.dedup();
            let c = ExperimentConfig { ladder, eps, t_max, k_max, p, stride, jobs, out: "some/dir".into(), ..ExperimentConfig::defaults(Command::Picard) };
            let back = ExperimentConfig::from_file_str(Command::Picard, &c.to_file_string()).unwrap();
            prop_assert_eq!(back, c);
        }
    }
}
