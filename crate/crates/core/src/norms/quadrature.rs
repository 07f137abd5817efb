//! Exact integrals of piecewise-linear interpolants over arbitrary
//! sub-intervals, so that integrals over abutting intervals add up exactly
//! to the integral over their union.

use ndarray::ArrayView1;

/// Lattice coordinates within this many cells of a node snap to it.
const SNAP: f64 = 1e-9;

fn to_lattice(x: f64, x0: f64, h: f64, last: usize) -> f64 {
    let s = ((x - x0) / h).clamp(0.0, last as f64);
    let k = s.round();
    if (s - k).abs() < SNAP { k } else { s }
}

/// `∫_a^b` of the interpolant through `(x0 + i h, g[i])`, with `[a, b]`
/// clipped to the sample range.
pub fn pl_integral(g: ArrayView1<f64>, x0: f64, h: f64, a: f64, b: f64) -> f64 {
    let n = g.len();
    if n < 2 || b <= a {
        return 0.0;
    }
    let last = n - 1;
    let (sa, sb) = (to_lattice(a, x0, h, last), to_lattice(b, x0, h, last));
    if sb <= sa {
        return 0.0;
    }
    // ∫ over the part of cell k between local coordinates p and q in [0, 1]
    let piece = |k: usize, p: f64, q: f64| {
        let (l, r) = (g[k], g[k + 1]);
        let at = |s: f64| l * s + 0.5 * (r - l) * s * s;
        at(q) - at(p)
    };
    let ka = (sa.floor() as usize).min(last - 1);
    let kb = (sb.ceil() as usize).max(1) - 1;
    let mut sum = 0.0;
    for k in ka..=kb {
        let p = (sa - k as f64).max(0.0);
        let q = (sb - k as f64).min(1.0);
        if q > p {
            sum += piece(k, p, q);
        }
    }
    sum * h
}

/// Max of `g[i]` over nodes inside `[a, b]`; `None` if there are none.
pub fn node_max(g: ArrayView1<f64>, x0: f64, h: f64, a: f64, b: f64) -> Option<f64> {
    let n = g.len();
    if n == 0 || b < a {
        return None;
    }
    let lo = ((a - x0) / h - SNAP).ceil().max(0.0);
    let hi = ((b - x0) / h + SNAP).floor().min((n - 1) as f64);
    if hi < lo {
        return None;
    }
    Some((lo as usize..=hi as usize).map(|i| g[i]).fold(f64::NEG_INFINITY, f64::max))
}
