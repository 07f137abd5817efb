//! Radial initial data and its calibration against the data-size sum
//! `Σ_{|α|≤N+1} ‖∂^α u₀‖ + Σ_{|α|≤N+1} ‖∂^α v₀‖ + Σ_{|α|≤N} ‖∂^α u₁‖ + Σ_{|α|≤N} ‖∂^α v₁‖`.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

/// Default `c` in `exp(−c / (1 − (r/ρ)²))`.
pub const DEFAULT_SHARPNESS: f64 = 1.0;

/// Radial profile supported in `r ≤ radius`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Zero,
    /// `amplitude · exp(−sharpness / (1 − (r/radius)²))` for `r < radius`.
    Bump { amplitude: f64, radius: f64, sharpness: f64 },
}

impl Profile {
    pub fn bump(amplitude: f64) -> Self {
        Profile::Bump { amplitude, radius: 2.0, sharpness: DEFAULT_SHARPNESS }
    }

    pub fn scaled(self, c: f64) -> Self {
        match self {
            Profile::Zero => Profile::Zero,
            Profile::Bump { amplitude, radius, sharpness } => Profile::Bump { amplitude: c * amplitude, radius, sharpness },
        }
    }

    pub fn support_radius(&self) -> f64 {
        match *self {
            Profile::Zero => 0.0,
            Profile::Bump { radius, .. } => radius,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(*self, Profile::Zero) || matches!(*self, Profile::Bump { amplitude, .. } if amplitude == 0.0)
    }

    pub fn value(&self, r: f64) -> f64 {
        self.taylor::<2>(r).0[0]
    }

    pub fn derivative(&self, r: f64) -> f64 {
        self.taylor::<2>(r).0[1]
    }

    /// Taylor coefficients of the profile about `r` (as an even function of r).
    pub fn taylor<const K: usize>(&self, r: f64) -> Taylor<K> {
        match *self {
            Profile::Zero => Taylor::constant(0.0),
            Profile::Bump { amplitude, radius, sharpness } => {
                let s = Taylor::<K>::variable(r.abs()).scale(1.0 / radius);
                let gap = Taylor::constant(1.0).sub(&s.mul(&s));
                if gap.0[0] <= 0.0 {
                    return Taylor::constant(0.0);
                }
                let q = gap.recip().scale(-sharpness);
                if q.0[0] < -700.0 {
                    return Taylor::constant(0.0);
                }
                let mut t = q.exp().scale(amplitude);
                if r < 0.0 {
                    // even extension: f(−|r| + h) = f(|r| − h)
                    for (k, c) in t.0.iter_mut().enumerate() {
                        if k % 2 == 1 {
                            *c = -*c;
                        }
                    }
                }
                t
            }
        }
    }
}

/// Truncated Taylor series `Σ_{k≤K} c_k h^k` in the offset `h`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Taylor<const K: usize>(pub [f64; K]);

impl<const K: usize> Taylor<K> {
    pub fn constant(c: f64) -> Self {
        let mut a = [0.0; K];
        a[0] = c;
        Self(a)
    }

    pub fn variable(x: f64) -> Self {
        let mut a = [0.0; K];
        a[0] = x;
        if K > 1 {
            a[1] = 1.0;
        }
        Self(a)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self(self.0.map(|v| c * v))
    }

    pub fn add(&self, o: &Self) -> Self {
        Self(std::array::from_fn(|k| self.0[k] + o.0[k]))
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self(std::array::from_fn(|k| self.0[k] - o.0[k]))
    }

    pub fn mul(&self, o: &Self) -> Self {
        Self(std::array::from_fn(|k| (0..=k).map(|i| self.0[i] * o.0[k - i]).sum()))
    }

    pub fn recip(&self) -> Self {
        let mut out = [0.0; K];
        out[0] = 1.0 / self.0[0];
        for k in 1..K {
            out[k] = -(1..=k).map(|i| self.0[i] * out[k - i]).sum::<f64>() / self.0[0];
        }
        Self(out)
    }

    pub fn exp(&self) -> Self {
        // g = e^f ⇒ k g_k = Σ_{i=1..k} i f_i g_{k−i}
        let mut out = [0.0; K];
        out[0] = self.0[0].exp();
        for k in 1..K {
            out[k] = (1..=k).map(|i| i as f64 * self.0[i] * out[k - i]).sum::<f64>() / k as f64;
        }
        Self(out)
    }

    /// `d^k/dr^k` at the expansion point.
    pub fn derivative(&self, k: usize) -> f64 {
        self.0[k] * (1..=k).map(|i| i as f64).product::<f64>()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    pub u0: Profile,
    pub u1: Profile,
    pub v0: Profile,
    pub v1: Profile,
    /// Size the data was calibrated to (0 when uncalibrated).
    pub epsilon: f64,
}

impl InitialData {
    pub fn zero() -> Self {
        Self { u0: Profile::Zero, u1: Profile::Zero, v0: Profile::Zero, v1: Profile::Zero, epsilon: 0.0 }
    }

    /// `u₀ = v₀ = A·bump`, `u₁ = v₁ = 0`, with `A` chosen so the data-size
    /// sum at order `n` equals `epsilon`.
    pub fn calibrated(epsilon: f64, n: usize) -> Result<Self> {
        Self::calibrated_with(epsilon, n, DEFAULT_SHARPNESS)
    }

    pub fn calibrated_with(epsilon: f64, n: usize, sharpness: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Parameter(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(sharpness > 0.0) {
            return Err(Error::Parameter(format!("sharpness must be positive, got {sharpness}")));
        }
        let unit = Profile::Bump { amplitude: 1.0, radius: 2.0, sharpness };
        let base = Self { u0: unit, u1: Profile::Zero, v0: unit, v1: Profile::Zero, epsilon: 0.0 };
        let a = epsilon / base.smallness(n);
        Ok(Self { u0: unit.scaled(a), v0: unit.scaled(a), epsilon, ..base })
    }

    /// Only `u₀` nonzero.
    pub fn u_only(u0: Profile) -> Self {
        Self { u0, ..Self::zero() }
    }

    pub fn support_radius(&self) -> f64 {
        [self.u0, self.u1, self.v0, self.v1].iter().map(Profile::support_radius).fold(0.0, f64::max)
    }

    /// The data-size sum at order `n`.
    pub fn smallness(&self, n: usize) -> f64 {
        derivative_sum(&self.u0, n + 1) + derivative_sum(&self.v0, n + 1) + derivative_sum(&self.u1, n)
            + derivative_sum(&self.v1, n)
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("plain data serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// `Γ(m + ½)`.
fn gamma_half(m: usize) -> f64 {
    (1..=m).fold(std::f64::consts::PI.sqrt(), |g, i| g * (i as f64 - 0.5))
}

/// `Σ_{|α|=k} (∫_{S²} ω^{2α} dω / 4π)^{1/2}`, the factor relating
/// `Σ_{|α|=k} ‖∂^α f‖` to `‖|∇|^k f‖` for radial `f`.
pub fn multi_index_factor(k: usize) -> f64 {
    let mut sum = 0.0;
    for a in 0..=k {
        for b in 0..=k - a {
            let c = k - a - b;
            let sphere = 2.0 * gamma_half(a) * gamma_half(b) * gamma_half(c) / gamma_half(k + 1);
            sum += (sphere / (4.0 * std::f64::consts::PI)).sqrt();
        }
    }
    sum
}

/// `‖|∇|^k f‖_{L²(ℝ³)}` for a radial profile: with `h = (r f)^{(2m)}`,
/// `‖Δ^m f‖² = 4π∫h²` and `‖∂_r Δ^m f‖² = 4π∫(h' − h/r)²`.
pub fn homogeneous_norm(f: &Profile, k: usize) -> f64 {
    let rho = f.support_radius();
    if f.is_zero() || rho == 0.0 {
        return 0.0;
    }
    let m = k / 2;
    let integrand = |r: f64| {
        // r·f has the Taylor series (r + h)·f(r + h)
        let t = Taylor::<8>::variable(r).mul(&f.taylor::<8>(r));
        let h = t.derivative(2 * m);
        if k % 2 == 0 {
            h * h
        } else if r == 0.0 {
            0.0
        } else {
            let d = t.derivative(2 * m + 1) - h / r;
            d * d
        }
    };
    (4.0 * std::f64::consts::PI * simpson(integrand, 0.0, rho, 8192)).sqrt()
}

/// `Σ_{|α|≤order} ‖∂^α f‖_{L²(ℝ³)}`.
pub fn derivative_sum(f: &Profile, order: usize) -> f64 {
    if f.is_zero() {
        return 0.0;
    }
    (0..=order).map(|k| homogeneous_norm(f, k) * multi_index_factor(k)).sum()
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}
