//! Smooth logical operators.
//!
//! The reasoning disjunction is an anchored log-sum-exp,
//! `γ·ln(1 + Σᵢ (exp(xᵢ/γ) − 1))`. It keeps the smooth-maximum bounds
//! `max(x) ≤ softor(x) ≤ max(x) + γ·ln n` and the exact values of the plain
//! `γ·ln Σᵢ exp(xᵢ/γ)` whenever one input dominates, but maps an all-zero
//! input to exactly zero, so padding and false atoms never leak mass into
//! conclusions. Action aggregation uses the plain form.

use crate::error::{Error, Result};

const OVERFLOW_GUARD: f64 = 30.0;

/// Unclamped anchored soft disjunction. `xs` must be non-empty.
pub(crate) fn anchored_raw(xs: &[f64], gamma: f64) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max) / gamma;
    if m <= OVERFLOW_GUARD {
        let s: f64 = xs.iter().map(|x| (x / gamma).exp_m1()).sum();
        gamma * s.ln_1p()
    } else {
        let n = xs.len() as f64;
        let s: f64 = xs.iter().map(|x| (x / gamma - m).exp()).sum::<f64>() - (n - 1.0) * (-m).exp();
        gamma * (m + s.ln())
    }
}

/// Partial derivatives of [`anchored_raw`] with respect to each input.
pub(crate) fn anchored_weights(xs: &[f64], gamma: f64, out: &mut [f64]) {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max) / gamma;
    if m <= OVERFLOW_GUARD {
        let denom = 1.0 + xs.iter().map(|x| (x / gamma).exp_m1()).sum::<f64>();
        for (o, x) in out.iter_mut().zip(xs) {
            *o = (x / gamma).exp() / denom;
        }
    } else {
        let n = xs.len() as f64;
        let denom =
            xs.iter().map(|x| (x / gamma - m).exp()).sum::<f64>() - (n - 1.0) * (-m).exp();
        for (o, x) in out.iter_mut().zip(xs) {
            *o = (x / gamma - m).exp() / denom;
        }
    }
}

/// Plain smooth maximum `γ·ln Σᵢ exp(xᵢ/γ)`, evaluated stably.
pub(crate) fn smooth_max_raw(xs: &[f64], gamma: f64) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = xs.iter().map(|x| ((x - m) / gamma).exp()).sum();
    m + gamma * s.ln()
}

pub(crate) fn smooth_max_weights(xs: &[f64], gamma: f64, out: &mut [f64]) {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = xs.iter().map(|x| ((x - m) / gamma).exp()).sum();
    for (o, x) in out.iter_mut().zip(xs) {
        *o = ((x - m) / gamma).exp() / s;
    }
}

fn check(xs: &[f64], gamma: f64) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::Invalid("soft disjunction of an empty input".into()));
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::Invalid(format!("smoothing parameter must be positive, got {gamma}")));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("soft disjunction input".into()));
    }
    Ok(())
}

/// Soft disjunction clamped to `[0, 1]`.
pub fn softor(xs: &[f64], gamma: f64) -> Result<f64> {
    check(xs, gamma)?;
    Ok(anchored_raw(xs, gamma).clamp(0.0, 1.0))
}

/// Soft disjunction before clamping.
pub fn softor_unclamped(xs: &[f64], gamma: f64) -> Result<f64> {
    check(xs, gamma)?;
    Ok(anchored_raw(xs, gamma))
}

/// Plain log-sum-exp smooth maximum, used to aggregate action atoms.
pub fn smooth_max(xs: &[f64], gamma: f64) -> Result<f64> {
    check(xs, gamma)?;
    Ok(smooth_max_raw(xs, gamma))
}

/// Product t-norm.
pub fn softand(xs: &[f64]) -> f64 {
    xs.iter().product()
}
