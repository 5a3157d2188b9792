use crate::error::{Error, Result};

use super::field::PeriodicField;

/// Order `k` of the `H^k` metric. Supported orders are `0..=3`; the
/// multiplier grows like `ξ^{2k}` and conditioning degrades past that.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MetricOrder(usize);

impl MetricOrder {
    pub const MAX: usize = 3;

    pub fn new(k: usize) -> Result<Self> {
        if k > Self::MAX {
            return Err(Error::UnsupportedOrder(k));
        }
        Ok(Self(k))
    }

    pub fn k(self) -> usize {
        self.0
    }

    /// `Σ_{i=0..k} ξ^{2i}`.
    pub fn multiplier(self, xi: f64) -> f64 {
        let x2 = xi * xi;
        (0..self.0).fold(1.0, |acc, _| 1.0 + x2 * acc)
    }
}

/// Fourier coefficients below this fraction of the largest one are treated
/// as round-off and dropped before multiplying by `A_k`.
pub const ROUNDOFF_FILTER: f64 = 1e-14;

/// `A_k = 1 - ∂² + ... + (-1)^k ∂^{2k}`.
pub fn apply_ak(u: &PeriodicField, k: usize) -> Result<PeriodicField> {
    let order = MetricOrder::new(k)?;
    if k == 0 {
        return Ok(u.clone());
    }
    let floor = ROUNDOFF_FILTER * u.spectrum().iter().fold(0.0f64, |a, c| a.max(c.norm()));
    Ok(u.map_spectrum(|xi, c| {
        if c.norm() < floor {
            c * 0.0
        } else {
            c * order.multiplier(xi as f64)
        }
    }))
}

pub fn invert_ak(m: &PeriodicField, k: usize) -> Result<PeriodicField> {
    let order = MetricOrder::new(k)?;
    if k == 0 {
        return Ok(m.clone());
    }
    Ok(m.map_spectrum(|xi, c| c / order.multiplier(xi as f64)))
}

/// `⟨u, v⟩_k = ∫ Σ_{i≤k} ∂^i u ∂^i v dx = ∫ A_k(u) v dx`.
pub fn hk_inner(u: &PeriodicField, v: &PeriodicField, k: usize) -> Result<f64> {
    u.same_grid(v)?;
    apply_ak(u, k)?.l2_inner(v)
}

/// `½ ⟨u, u⟩_k`.
pub fn hk_energy(u: &PeriodicField, k: usize) -> Result<f64> {
    Ok(0.5 * hk_inner(u, u, k)?)
}

/// Bracket of right-invariant fields, `[v, w] = -(v_x w - v w_x)`.
pub fn lie_bracket(v: &PeriodicField, w: &PeriodicField) -> Result<PeriodicField> {
    v.same_grid(w)?;
    Ok(&(v * &w.dx()) - &(&v.dx() * w))
}

/// `B_k(u, v) = -A_k⁻¹(2 v_x A_k(u) + v A_k(u_x))`.
pub fn b_k(u: &PeriodicField, v: &PeriodicField, k: usize) -> Result<PeriodicField> {
    u.same_grid(v)?;
    let au = apply_ak(u, k)?;
    let aux = au.dx();
    let inner = &(&v.dx() * &au).scale(2.0) + &(v * &aux);
    Ok(-&invert_ak(&inner, k)?)
}

/// Right-hand side of `u_t = B_k(u, u)`, optionally with 2/3-rule dealiasing.
pub fn euler_hk_rhs(u: &PeriodicField, k: usize, dealias: bool) -> Result<PeriodicField> {
    if dealias {
        Ok(b_k(&u.dealias(), &u.dealias(), k)?.dealias())
    } else {
        b_k(u, u, k)
    }
}

/// `-u u_x - ∂_x (1 - ∂²)⁻¹ (u² + ½ u_x²)`.
pub fn ch_rhs(u: &PeriodicField) -> Result<PeriodicField> {
    let ux = u.dx();
    let source = &(u * u) + &(&ux * &ux).scale(0.5);
    let nonlocal = invert_ak(&source, 1)?.dx();
    Ok(&(-&(u * &ux)) - &nonlocal)
}

/// `Q_k(w) = B_k(w, w) + w w_x`.
pub fn q_k(w: &PeriodicField, k: usize) -> Result<PeriodicField> {
    Ok(&b_k(w, w, k)? + &(w * &w.dx()))
}
