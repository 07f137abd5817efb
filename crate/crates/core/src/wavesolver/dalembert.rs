//! Closed-form free radial waves: with `φ` the odd extension of `r·u₀`,
//! `W(t, r) = (φ(r + t) + φ(r − t)) / 2` solves `W_tt = W_rr`, `W(t, 0) = 0`.

use ndarray::Array1;

use super::data::Profile;
use crate::fieldgrid::{GridSpec, Parity, SpaceTimeField};

/// `φ(s) = s·u₀(|s|)`.
pub fn phi(u0: &Profile, s: f64) -> f64 {
    s * u0.value(s.abs())
}

/// `φ'(s) = u₀(|s|) + |s| u₀'(|s|)`.
pub fn phi_prime(u0: &Profile, s: f64) -> f64 {
    let a = s.abs();
    u0.value(a) + a * u0.derivative(a)
}

pub fn exact_w(u0: &Profile, t: f64, r: f64) -> f64 {
    0.5 * (phi(u0, r + t) + phi(u0, r - t))
}

pub fn exact_w_t(u0: &Profile, t: f64, r: f64) -> f64 {
    0.5 * (phi_prime(u0, r + t) - phi_prime(u0, r - t))
}

pub fn exact_w_r(u0: &Profile, t: f64, r: f64) -> f64 {
    0.5 * (phi_prime(u0, r + t) + phi_prime(u0, r - t))
}

/// `W(t, r_j)` on the grid's radii, for data `(u₀, 0)`.
pub fn exact_dalembert(u0: &Profile, t: f64, grid: &GridSpec) -> Array1<f64> {
    Array1::from_shape_fn(grid.nr(), |j| exact_w(u0, t, grid.r(j)))
}

/// `W` on every time level of `grid`.
pub fn dalembert_field(u0: &Profile, grid: &GridSpec) -> SpaceTimeField {
    SpaceTimeField::from_fn(*grid, Parity::Odd, |t, r| exact_w(u0, t, r))
}

/// `∫₀^{r_max} (W_t² + W_r²) dr` of the closed form by composite Simpson with
/// `n` (even) intervals.
pub fn dalembert_energy(u0: &Profile, t: f64, r_max: f64, n: usize) -> f64 {
    let h = r_max / n as f64;
    let e = |r: f64| exact_w_t(u0, t, r).powi(2) + exact_w_r(u0, t, r).powi(2);
    let mut s = e(0.0) + e(r_max);
    for i in 1..n {
        s += e(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_frame_is_the_profile() {
        let b = Profile::bump(0.7);
        let g = GridSpec::new(1.0 / 32.0, 0.5, 20.0, 16.0).unwrap();
        let w = exact_dalembert(&b, 0.0, &g);
        for j in 0..g.nr() {
            assert_eq!(w[j], g.r(j) * b.value(g.r(j)));
        }
    }

    #[test]
    fn late_pulse_is_outgoing() {
        let b = Profile::bump(1.0);
        let g = GridSpec::new(1.0 / 32.0, 0.5, 20.0, 16.0).unwrap();
        let w = exact_dalembert(&b, 10.0, &g);
        let (jmax, wmax) = w.iter().enumerate().fold((0, 0.0), |m, (j, &v)| if v.abs() > m.1 { (j, v.abs()) } else { m });
        assert!((g.r(jmax) - 10.0).abs() <= 2.0);
        // W keeps the amplitude of half the initial r·u₀, so u decays like 1/r
        let w0 = (0..g.nr()).map(|j| phi(&b, g.r(j)).abs()).fold(0.0, f64::max);
        assert!((wmax / (0.5 * w0) - 1.0).abs() < 1e-2);
        for j in 0..g.nr() {
            if (g.r(j) - 10.0).abs() > 2.0 {
                assert_eq!(w[j], 0.0);
            }
        }
    }

    #[test]
    fn energy_is_constant() {
        let b = Profile::bump(1.0);
        let e0 = dalembert_energy(&b, 0.0, 24.0, 24 * 512);
        for t in [0.5, 1.0, 1.9, 3.0, 10.0] {
            let e = dalembert_energy(&b, t, 24.0, 24 * 512);
            assert!((e / e0 - 1.0).abs() < 1e-12, "t {t}: {e} vs {e0}");
        }
    }
}
