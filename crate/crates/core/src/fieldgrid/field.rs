use std::ops::Range;

use ndarray::{s, Array2, ArrayView1, ArrayView2, Zip};
use serde::{Deserialize, Serialize};

use super::grid::GridSpec;
use crate::{Error, Result};

/// Behavior of the sampled quantity under `r -> -r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Odd,
    Even,
    Unset,
}

impl Parity {
    pub fn flip(self) -> Self {
        match self {
            Parity::Odd => Parity::Even,
            Parity::Even => Parity::Odd,
            Parity::Unset => Parity::Unset,
        }
    }

    pub fn product(self, other: Self) -> Self {
        match (self, other) {
            (Parity::Unset, _) | (_, Parity::Unset) => Parity::Unset,
            (a, b) if a == b => Parity::Even,
            _ => Parity::Odd,
        }
    }

    /// Parity of `a·f + b·g`.
    pub fn sum(self, other: Self) -> Self {
        if self == other { self } else { Parity::Unset }
    }
}

/// Samples on a rectangular window of a [`GridSpec`]: row `n` is time level
/// `n0 + n`, column `j` is radius index `j0 + j`. Full-grid fields have
/// `n0 = j0 = 0` and the grid's full shape.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeField {
    grid: GridSpec,
    n0: usize,
    j0: usize,
    values: Array2<f64>,
    parity: Parity,
}

impl SpaceTimeField {
    pub fn zeros(grid: GridSpec, parity: Parity) -> Self {
        Self { grid, n0: 0, j0: 0, values: Array2::zeros((grid.nt(), grid.nr())), parity }
    }

    pub fn from_values(grid: GridSpec, values: Array2<f64>, parity: Parity) -> Result<Self> {
        Self::window_from_values(grid, 0, 0, values, parity)
    }

    pub fn window_from_values(
        grid: GridSpec,
        n0: usize,
        j0: usize,
        values: Array2<f64>,
        parity: Parity,
    ) -> Result<Self> {
        let (nt, nr) = values.dim();
        if n0 + nt > grid.nt() || j0 + nr > grid.nr() || nt == 0 || nr == 0 {
            return Err(Error::InvalidGrid(format!(
                "window {nt}x{nr} at ({n0}, {j0}) does not fit a {}x{} grid",
                grid.nt(),
                grid.nr()
            )));
        }
        if parity == Parity::Odd && j0 == 0 && values.column(0).iter().any(|&v| v != 0.0) {
            return Err(Error::ExpectedOddParity);
        }
        Ok(Self { grid, n0, j0, values, parity })
    }

    /// Samples `f(t, r)` on the full grid. Odd fields get an exact zero at r = 0.
    pub fn from_fn(grid: GridSpec, parity: Parity, f: impl Fn(f64, f64) -> f64) -> Self {
        Self::window_from_fn(grid, 0..grid.nt(), 0..grid.nr(), parity, f)
    }

    pub fn window_from_fn(
        grid: GridSpec,
        n_range: Range<usize>,
        j_range: Range<usize>,
        parity: Parity,
        f: impl Fn(f64, f64) -> f64,
    ) -> Self {
        assert!(n_range.end <= grid.nt() && j_range.end <= grid.nr());
        let (n0, j0) = (n_range.start, j_range.start);
        let values = Array2::from_shape_fn((n_range.len(), j_range.len()), |(n, j)| {
            if parity == Parity::Odd && j0 + j == 0 {
                0.0
            } else {
                f(grid.t(n0 + n), grid.r(j0 + j))
            }
        });
        Self { grid, n0, j0, values, parity }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn with_parity(mut self, parity: Parity) -> Self {
        self.parity = parity;
        self
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn values_mut(&mut self) -> &mut Array2<f64> {
        &mut self.values
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    pub fn origin(&self) -> (usize, usize) {
        (self.n0, self.j0)
    }

    pub fn nt(&self) -> usize {
        self.values.nrows()
    }

    pub fn nr(&self) -> usize {
        self.values.ncols()
    }

    /// True when the window starts at r = 0, so parity governs the stencil there.
    pub fn touches_origin(&self) -> bool {
        self.j0 == 0
    }

    pub fn is_full(&self) -> bool {
        self.n0 == 0 && self.j0 == 0 && self.nt() == self.grid.nt() && self.nr() == self.grid.nr()
    }

    /// Time of local row `n`.
    #[inline]
    pub fn t(&self, n: usize) -> f64 {
        self.grid.t(self.n0 + n)
    }

    /// Radius of local column `j`.
    #[inline]
    pub fn r(&self, j: usize) -> f64 {
        self.grid.r(self.j0 + j)
    }

    #[inline]
    pub fn get(&self, n: usize, j: usize) -> f64 {
        self.values[[n, j]]
    }

    pub fn row(&self, n: usize) -> ArrayView1<'_, f64> {
        self.values.row(n)
    }

    pub fn same_window(&self, other: &Self) -> bool {
        self.grid == other.grid
            && self.n0 == other.n0
            && self.j0 == other.j0
            && self.values.dim() == other.values.dim()
    }

    pub fn check_same_window(&self, other: &Self) -> Result<()> {
        if self.same_window(other) { Ok(()) } else { Err(Error::GridMismatch) }
    }

    /// Sub-window in global indices; must lie inside this field's window.
    pub fn window(&self, n_range: Range<usize>, j_range: Range<usize>) -> Result<Self> {
        if n_range.start < self.n0
            || j_range.start < self.j0
            || n_range.end > self.n0 + self.nt()
            || j_range.end > self.j0 + self.nr()
            || n_range.is_empty()
            || j_range.is_empty()
        {
            return Err(Error::GridMismatch);
        }
        let v = self
            .values
            .slice(s![n_range.start - self.n0..n_range.end - self.n0, j_range.start - self.j0..j_range.end - self.j0])
            .to_owned();
        Ok(Self { grid: self.grid, n0: n_range.start, j0: j_range.start, values: v, parity: self.parity })
    }

    /// Same window and grid with new values.
    pub fn like(&self, values: Array2<f64>, parity: Parity) -> Self {
        assert_eq!(values.dim(), self.values.dim());
        Self { grid: self.grid, n0: self.n0, j0: self.j0, values, parity }
    }

    pub fn map(&self, parity: Parity, f: impl Fn(f64) -> f64) -> Self {
        self.like(self.values.mapv(f), parity)
    }

    /// Pointwise `f(t, r, value)`.
    pub fn map_with_coords(&self, parity: Parity, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let mut out = self.values.clone();
        for (n, mut row) in out.rows_mut().into_iter().enumerate() {
            let t = self.t(n);
            for (j, v) in row.iter_mut().enumerate() {
                *v = f(t, self.r(j), *v);
            }
        }
        self.like(out, parity)
    }

    pub fn zip_with(&self, other: &Self, parity: Parity, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_window(other)?;
        let mut out = Array2::zeros(self.values.dim());
        Zip::from(&mut out).and(&self.values).and(&other.values).for_each(|o, &a, &b| *o = f(a, b));
        Ok(self.like(out, parity))
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(self.parity, |v| c * v)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, self.parity.sum(other.parity), |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, self.parity.sum(other.parity), |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, self.parity.product(other.parity), |a, b| a * b)
    }

    /// `self += c·other`, in place.
    pub fn add_scaled_assign(&mut self, c: f64, other: &Self) -> Result<()> {
        self.check_same_window(other)?;
        Zip::from(&mut self.values).and(&other.values).for_each(|a, &b| *a += c * b);
        self.parity = self.parity.sum(other.parity);
        Ok(())
    }

    pub fn abs(&self) -> Self {
        self.map(Parity::Unset, f64::abs)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}
