use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const INDEX_TOL: f64 = 1e-9;

/// Uniform (t, r) lattice: `t_n = n·dt`, `r_j = j·dr`, `dt = cfl·dr`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dr: f64,
    pub dt: f64,
    pub r_max: f64,
    pub t_max: f64,
    pub cfl: f64,
}

fn whole(x: f64, what: &str) -> Result<usize> {
    let k = x.round();
    if !(k >= 0.0) || (x - k).abs() > INDEX_TOL * k.max(1.0) {
        return Err(Error::InvalidGrid(format!("{what} = {x} is not a whole number of cells")));
    }
    Ok(k as usize)
}

impl GridSpec {
    pub fn new(dr: f64, cfl: f64, r_max: f64, t_max: f64) -> Result<Self> {
        if !(dr > 0.0 && dr.is_finite()) {
            return Err(Error::InvalidGrid(format!("dr must be positive, got {dr}")));
        }
        if !(cfl > 0.0 && cfl <= 1.0) {
            return Err(Error::InvalidGrid(format!("cfl must lie in (0, 1], got {cfl}")));
        }
        if !(t_max >= 0.0) || !(r_max >= t_max + 4.0) {
            return Err(Error::InvalidGrid(format!(
                "need r_max >= t_max + 4 so the data never reach the outer boundary (r_max = {r_max}, t_max = {t_max})"
            )));
        }
        let dt = cfl * dr;
        whole(r_max / dr, "r_max/dr")?;
        whole(t_max / dt, "t_max/dt")?;
        Ok(Self { dr, dt, r_max, t_max, cfl })
    }

    /// Grid with `r_max = t_max + pad`.
    pub fn for_horizon(dr: f64, cfl: f64, t_max: f64, pad: f64) -> Result<Self> {
        Self::new(dr, cfl, t_max + pad, t_max)
    }

    /// Index of the last radial sample.
    pub fn j_max(&self) -> usize {
        (self.r_max / self.dr).round() as usize
    }

    /// Index of the last time level.
    pub fn n_max(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }

    pub fn nr(&self) -> usize {
        self.j_max() + 1
    }

    pub fn nt(&self) -> usize {
        self.n_max() + 1
    }

    #[inline]
    pub fn r(&self, j: usize) -> f64 {
        j as f64 * self.dr
    }

    #[inline]
    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    /// Every `stride`-th time level; used for recorded solver frames.
    pub fn with_time_stride(&self, stride: usize) -> Result<Self> {
        if stride == 0 || self.n_max() % stride != 0 {
            return Err(Error::InvalidGrid(format!(
                "time stride {stride} does not divide {} steps",
                self.n_max()
            )));
        }
        Self::new(self.dr, self.cfl * stride as f64, self.r_max, self.t_max)
    }

    /// Same extents with both spacings halved.
    pub fn refined(&self) -> Result<Self> {
        Self::new(self.dr / 2.0, self.cfl, self.r_max, self.t_max)
    }

    /// Smallest j with `r_j >= r - tol`.
    pub fn j_at_or_above(&self, r: f64) -> usize {
        let x = r / self.dr - INDEX_TOL;
        if x <= 0.0 { 0 } else { x.ceil() as usize }
    }

    /// Largest j with `r_j <= r + tol`, or `None` when r < 0.
    pub fn j_at_or_below(&self, r: f64) -> Option<usize> {
        let x = r / self.dr + INDEX_TOL;
        if x < 0.0 { None } else { Some((x.floor() as usize).min(self.j_max())) }
    }

    pub fn n_at_or_above(&self, t: f64) -> usize {
        let x = t / self.dt - INDEX_TOL;
        if x <= 0.0 { 0 } else { x.ceil() as usize }
    }

    pub fn n_at_or_below(&self, t: f64) -> Option<usize> {
        let x = t / self.dt + INDEX_TOL;
        if x < 0.0 { None } else { Some((x.floor() as usize).min(self.n_max())) }
    }

    /// Index of a sample time that must lie on the lattice.
    pub fn n_exact(&self, t: f64) -> Result<usize> {
        whole(t / self.dt, "t/dt")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_samples() {
        let g = GridSpec::new(1.0 / 16.0, 0.5, 20.0, 16.0).unwrap();
        assert_eq!(g.nr(), 321);
        assert_eq!(g.nt(), 513);
        assert_eq!(g.dt, 1.0 / 32.0);
        assert_eq!(g.r(16), 1.0);
        assert_eq!(g.t(32), 1.0);
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(matches!(GridSpec::new(0.1, 1.5, 20.0, 10.0), Err(Error::InvalidGrid(_))));
        assert!(matches!(GridSpec::new(0.1, 0.5, 12.0, 10.0), Err(Error::InvalidGrid(_))));
        assert!(matches!(GridSpec::new(0.3, 0.5, 20.05, 10.0), Err(Error::InvalidGrid(_))));
        assert!(GridSpec::new(-0.1, 0.5, 20.0, 10.0).is_err());
    }

    #[test]
    fn stride_and_refinement() {
        let g = GridSpec::for_horizon(1.0 / 32.0, 0.5, 8.0, 4.0).unwrap();
        let s = g.with_time_stride(2).unwrap();
        assert_eq!(s.dt, g.dr);
        assert_eq!(s.nt(), (g.nt() - 1) / 2 + 1);
        assert!(g.with_time_stride(3).is_err());
        assert!(g.with_time_stride(4).is_err(), "cfl 2 is not a grid");
        let f = g.refined().unwrap();
        assert_eq!(f.nr(), 2 * g.nr() - 1);
    }

    #[test]
    fn index_lookups_are_inclusive() {
        let g = GridSpec::new(0.25, 0.5, 8.0, 4.0).unwrap();
        assert_eq!(g.j_at_or_above(1.0), 4);
        assert_eq!(g.j_at_or_above(1.1), 5);
        assert_eq!(g.j_at_or_below(1.0), Some(4));
        assert_eq!(g.j_at_or_below(0.9), Some(3));
        assert_eq!(g.j_at_or_below(-0.1), None);
        assert_eq!(g.j_at_or_below(100.0), Some(g.j_max()));
        assert_eq!(g.n_exact(1.0).unwrap(), 8);
        assert!(g.n_exact(1.01).is_err());
    }
}
