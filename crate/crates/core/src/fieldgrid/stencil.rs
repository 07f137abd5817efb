//! Second-order finite differences along either axis of a sample array
//! (rows = time levels, columns = radii).

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, ArrayViewMut1, Axis, Zip};

use super::field::Parity;
use crate::{Error, Result};

pub const MIN_POINTS: usize = 5;

/// Treatment of the first radial column.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LeftEdge {
    /// Column 0 is r = 0: reflect with the given parity.
    Origin(Parity),
    /// Column 0 is an interior radius cut by a window: one-sided.
    Cut,
}

pub fn check_size(nt: usize, nr: usize) -> Result<()> {
    if nt < MIN_POINTS || nr < MIN_POINTS {
        return Err(Error::GridTooSmall { min: MIN_POINTS, nt, nr });
    }
    Ok(())
}

fn origin_parity(edge: LeftEdge) -> Result<Option<Parity>> {
    match edge {
        LeftEdge::Origin(Parity::Unset) => Err(Error::ParityUnset),
        LeftEdge::Origin(p) => Ok(Some(p)),
        LeftEdge::Cut => Ok(None),
    }
}

/// First derivative of one sampled line.
pub fn d1_line(f: ArrayView1<f64>, h: f64, left: Option<Parity>, mut out: ArrayViewMut1<f64>) {
    let n = f.len();
    let c = 0.5 / h;
    for i in 1..n - 1 {
        out[i] = (f[i + 1] - f[i - 1]) * c;
    }
    out[0] = match left {
        // f(-h) = -f(h) and f(0) = 0
        Some(Parity::Odd) => f[1] / h,
        Some(_) => 0.0,
        None => (-3.0 * f[0] + 4.0 * f[1] - f[2]) * c,
    };
    out[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) * c;
}

/// Second derivative of one sampled line.
pub fn d2_line(f: ArrayView1<f64>, h: f64, left: Option<Parity>, mut out: ArrayViewMut1<f64>) {
    let n = f.len();
    let c = 1.0 / (h * h);
    for i in 1..n - 1 {
        out[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) * c;
    }
    out[0] = match left {
        Some(Parity::Odd) => 0.0,
        Some(_) => 2.0 * (f[1] - f[0]) * c,
        None => (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) * c,
    };
    out[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) * c;
}

pub fn d_dr(values: ArrayView2<f64>, dr: f64, edge: LeftEdge) -> Result<Array2<f64>> {
    let (nt, nr) = values.dim();
    check_size(nt, nr)?;
    let left = origin_parity(edge)?;
    let mut out = Array2::zeros((nt, nr));
    Zip::from(out.rows_mut()).and(values.rows()).for_each(|o, f| d1_line(f, dr, left, o));
    Ok(out)
}

pub fn d2_dr2(values: ArrayView2<f64>, dr: f64, edge: LeftEdge) -> Result<Array2<f64>> {
    let (nt, nr) = values.dim();
    check_size(nt, nr)?;
    let left = origin_parity(edge)?;
    let mut out = Array2::zeros((nt, nr));
    Zip::from(out.rows_mut()).and(values.rows()).for_each(|o, f| d2_line(f, dr, left, o));
    Ok(out)
}

/// Time derivative; combines whole rows so the inner loops stay contiguous.
pub fn d_dt(values: ArrayView2<f64>, dt: f64) -> Result<Array2<f64>> {
    let (nt, nr) = values.dim();
    check_size(nt, nr)?;
    let c = 0.5 / dt;
    let mut out = Array2::zeros((nt, nr));
    let row = |n: usize| values.index_axis(Axis(0), n);
    for n in 1..nt - 1 {
        Zip::from(out.row_mut(n)).and(row(n + 1)).and(row(n - 1)).for_each(|o, &a, &b| *o = (a - b) * c);
    }
    Zip::from(out.row_mut(0))
        .and(row(0))
        .and(row(1))
        .and(row(2))
        .for_each(|o, &a, &b, &d| *o = (-3.0 * a + 4.0 * b - d) * c);
    Zip::from(out.row_mut(nt - 1))
        .and(row(nt - 1))
        .and(row(nt - 2))
        .and(row(nt - 3))
        .for_each(|o, &a, &b, &d| *o = (3.0 * a - 4.0 * b + d) * c);
    Ok(out)
}

pub fn d2_dt2(values: ArrayView2<f64>, dt: f64) -> Result<Array2<f64>> {
    let (nt, nr) = values.dim();
    check_size(nt, nr)?;
    let c = 1.0 / (dt * dt);
    let mut out = Array2::zeros((nt, nr));
    let row = |n: usize| values.index_axis(Axis(0), n);
    for n in 1..nt - 1 {
        Zip::from(out.row_mut(n))
            .and(row(n + 1))
            .and(row(n))
            .and(row(n - 1))
            .for_each(|o, &a, &b, &d| *o = (a - 2.0 * b + d) * c);
    }
    for (n, s) in [(0usize, 1isize), (nt - 1, -1)] {
        let at = |k: isize| row((n as isize + s * k) as usize);
        let (f0, f1, f2, f3) = (at(0), at(1), at(2), at(3));
        let mut o = out.row_mut(n);
        for j in 0..nr {
            o[j] = (2.0 * f0[j] - 5.0 * f1[j] + 4.0 * f2[j] - f3[j]) * c;
        }
    }
    Ok(out)
}

/// Fourth-order first derivative of one line: centered in the interior,
/// one-sided five-point at the edges, parity ghosts at r = 0.
pub fn d1_line4(f: ArrayView1<f64>, h: f64, left: Option<Parity>, mut out: ArrayViewMut1<f64>) {
    let n = f.len();
    let c = 1.0 / (12.0 * h);
    let ghost = |k: usize| match left {
        Some(Parity::Odd) => -f[k],
        _ => f[k],
    };
    let at = |i: isize| if i >= 0 { f[i as usize] } else { ghost((-i) as usize) };
    let lo = if left.is_some() { 0 } else { 2 };
    for i in lo..n - 2 {
        let i = i as isize;
        out[i as usize] = (at(i - 2) - 8.0 * at(i - 1) + 8.0 * at(i + 1) - at(i + 2)) * c;
    }
    let one_sided = |g: &dyn Fn(usize) -> f64| {
        (
            (-25.0 * g(0) + 48.0 * g(1) - 36.0 * g(2) + 16.0 * g(3) - 3.0 * g(4)) * c,
            (-3.0 * g(0) - 10.0 * g(1) + 18.0 * g(2) - 6.0 * g(3) + g(4)) * c,
        )
    };
    if left.is_none() {
        let (a, b) = one_sided(&|k| f[k]);
        out[0] = a;
        out[1] = b;
    }
    let (a, b) = one_sided(&|k| f[n - 1 - k]);
    out[n - 1] = -a;
    out[n - 2] = -b;
}

/// Fourth-order second derivative of one line, edges as in [`d1_line4`].
pub fn d2_line4(f: ArrayView1<f64>, h: f64, left: Option<Parity>, mut out: ArrayViewMut1<f64>) {
    let n = f.len();
    let c = 1.0 / (12.0 * h * h);
    let ghost = |k: usize| match left {
        Some(Parity::Odd) => -f[k],
        _ => f[k],
    };
    let at = |i: isize| if i >= 0 { f[i as usize] } else { ghost((-i) as usize) };
    let lo = if left.is_some() { 0 } else { 2 };
    for i in lo..n - 2 {
        let i = i as isize;
        out[i as usize] =
            (-at(i - 2) + 16.0 * at(i - 1) - 30.0 * at(i) + 16.0 * at(i + 1) - at(i + 2)) * c;
    }
    let one_sided = |g: &dyn Fn(usize) -> f64| {
        (
            (45.0 * g(0) - 154.0 * g(1) + 214.0 * g(2) - 156.0 * g(3) + 61.0 * g(4) - 10.0 * g(5)) * c,
            (10.0 * g(0) - 15.0 * g(1) - 4.0 * g(2) + 14.0 * g(3) - 6.0 * g(4) + g(5)) * c,
        )
    };
    if left.is_none() {
        let (a, b) = one_sided(&|k| f[k]);
        out[0] = a;
        out[1] = b;
    }
    let (a, b) = one_sided(&|k| f[n - 1 - k]);
    out[n - 1] = a;
    out[n - 2] = b;
}

/// Fourth-order derivative of order `k ∈ {1, 2}` along `axis` (0 = t, 1 = r).
/// Only the r-axis has an origin edge.
pub fn d_axis4(values: ArrayView2<f64>, h: f64, axis: usize, k: usize, edge: LeftEdge) -> Result<Array2<f64>> {
    let (nt, nr) = values.dim();
    if nt < 6 || nr < 6 {
        return Err(Error::GridTooSmall { min: 6, nt, nr });
    }
    let left = if axis == 1 { origin_parity(edge)? } else { None };
    let mut out = Array2::zeros((nt, nr));
    let line = if k == 1 { d1_line4 } else { d2_line4 };
    Zip::from(out.lanes_mut(Axis(axis))).and(values.lanes(Axis(axis))).for_each(|o, f| line(f, h, left, o));
    Ok(out)
}

/// `q = f / r` on one line with r_j = (j0 + j)·dr. At r = 0 the quotient is
/// extrapolated quadratically from the next three samples.
pub fn divide_by_r_line(f: ArrayView1<f64>, j0: usize, dr: f64, mut out: ArrayViewMut1<f64>) {
    for j in 0..f.len() {
        let k = j0 + j;
        if k > 0 {
            out[j] = f[j] / (k as f64 * dr);
        }
    }
    if j0 == 0 {
        out[0] = 3.0 * out[1] - 3.0 * out[2] + out[3];
    }
}

pub fn divide_by_r(values: ArrayView2<f64>, j0: usize, dr: f64) -> Result<Array2<f64>> {
    let (nt, nr) = values.dim();
    if nr < 4 {
        return Err(Error::GridTooSmall { min: MIN_POINTS, nt, nr });
    }
    let mut out = Array2::zeros((nt, nr));
    Zip::from(out.rows_mut()).and(values.rows()).for_each(|o, f| divide_by_r_line(f, j0, dr, o));
    Ok(out)
}

/// Trapezoid weights for a uniformly sampled line.
pub fn trapezoid(f: &Array1<f64>, h: f64) -> f64 {
    let n = f.len();
    if n < 2 {
        return 0.0;
    }
    h * (f.sum() - 0.5 * (f[0] + f[n - 1]))
}
