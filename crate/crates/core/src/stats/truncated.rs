//! Sampling the standard normal restricted to an upper half-line, and the
//! standard multivariate normal restricted to a half-space.

use rand::Rng;
use rand_distr::StandardNormal;

use super::special::{log_normal_cdf, normal_cdf, normal_quantile_from_log};
use crate::error::{AloeError, Result};

/// Draws `y ~ N(0,1) | y >= tau` by inversion through the lower tail:
/// `y = -Φ⁻¹(u·Φ(-tau))`.
///
/// The product `u·Φ(-tau)` is formed in log space, so `tau` up to the point
/// where Φ(-tau) itself underflows produces finite draws for any `u` in (0,1).
pub fn sample_upper_truncated_normal(tau: f64, u: f64) -> Result<f64> {
    if !tau.is_finite() {
        return Err(AloeError::Domain(format!(
            "threshold must be finite, got {tau}"
        )));
    }
    if !(u > 0.0 && u < 1.0) {
        return Err(AloeError::Domain(format!(
            "uniform variate must lie in (0,1), got {u}"
        )));
    }
    if normal_cdf(-tau) == 0.0 {
        return Err(AloeError::Unsampleable { tau });
    }
    Ok(upper_truncated_from_log_tail(tau, log_normal_cdf(-tau), u))
}

/// Same as [`sample_upper_truncated_normal`] with `log Φ(-tau)` precomputed.
#[inline]
pub(crate) fn upper_truncated_from_log_tail(tau: f64, log_tail: f64, u: f64) -> f64 {
    let log_p = u.ln() + log_tail;
    match normal_quantile_from_log(log_p) {
        Ok(y) => (-y).max(tau),
        Err(_) => tau,
    }
}

/// Draws `x ~ N(0, I_d)` conditioned on `omegaᵀx >= tau`.
///
/// `omega` must have unit length. The orthogonal part is the rank-one update
/// `z - omega(omegaᵀz)`; the projection matrix is never formed.
pub fn sample_halfspace_conditional<R: Rng + ?Sized>(
    omega: &[f64],
    tau: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let norm = dot(omega, omega).sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(AloeError::Domain(format!(
            "normal must be a unit vector, |omega| = {norm}"
        )));
    }
    if !tau.is_finite() {
        return Err(AloeError::Domain(format!(
            "threshold must be finite, got {tau}"
        )));
    }
    if normal_cdf(-tau) == 0.0 {
        return Err(AloeError::Unsampleable { tau });
    }
    let mut x = vec![0.0; omega.len()];
    halfspace_conditional_into(omega, tau, log_normal_cdf(-tau), rng, &mut x);
    Ok(x)
}

/// Core of the conditional draw, writing into `x`. Consumes `d` normals and
/// then one uniform from `rng`.
pub(crate) fn halfspace_conditional_into<R: Rng + ?Sized>(
    omega: &[f64],
    tau: f64,
    log_tail: f64,
    rng: &mut R,
    x: &mut [f64],
) {
    debug_assert_eq!(omega.len(), x.len());
    for xi in x.iter_mut() {
        *xi = rng.sample(StandardNormal);
    }
    let u = open_uniform(rng);
    // Lower-tail draw y <= -tau, placed along omega, then reflected.
    let y = -upper_truncated_from_log_tail(tau, log_tail, u);
    let proj = dot(omega, x);
    for (xi, &w) in x.iter_mut().zip(omega) {
        *xi = -(w * y + *xi - w * proj);
    }
    enforce_membership(omega, tau, x);
}

/// Uniform on the open interval (0,1): midpoints of the 2^53 grid.
#[inline]
pub(crate) fn open_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    ((rng.random::<u64>() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Nudges `x` along `omega` until `dot(omega, x) >= tau` holds in floating
/// point. Rounding in the reflection can leave the point a few ulps outside.
pub(crate) fn enforce_membership(omega: &[f64], tau: f64, x: &mut [f64]) {
    let mut step: f64 = 0.0;
    for _ in 0..64 {
        let gap = tau - dot(omega, x);
        if gap <= 0.0 {
            return;
        }
        step = (gap + step.max(f64::EPSILON * tau.abs().max(1.0))) * 2.0;
        for (xi, &w) in x.iter_mut().zip(omega) {
            *xi += w * step;
        }
    }
}

/// Left-to-right dot product. Event counting and membership checks share this
/// so that a point constructed on a boundary is classified identically.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}
