//! Smooth monotone transition used by the frequency bands and the blow-up
//! cutoffs.
//!
//! `step(s)` equals 1 for `s <= 0`, 0 for `s >= 1`, and on `(0, 1)` is the
//! C^∞ ratio `ψ(1-s) / (ψ(1-s) + ψ(s))` with `ψ(x) = exp(-1/x)`. The
//! logarithmic derivatives are available in closed form so that ratios such
//! as `step'^2 / step` can be evaluated right up to the support edge without
//! underflowing into `0/0`.

/// Value of the decreasing smooth step.
pub fn step(s: f64) -> f64 {
    if s <= 0.0 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        // a / (a + b) = 1 / (1 + b/a), b/a = exp(1/(1-s) - 1/s)
        1.0 / (1.0 + (1.0 / (1.0 - s) - 1.0 / s).exp())
    }
}

/// `1 - step(s)` without cancellation.
pub fn step_complement(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        1.0 / (1.0 + (1.0 / s - 1.0 / (1.0 - s)).exp())
    }
}

/// `(step'/step, step''/step)` on the open transition interval, zero on the
/// plateaus. Undefined (returns NaN) nowhere: at the support edge the ratios
/// grow polynomially while `step` decays exponentially.
pub fn log_derivatives(s: f64) -> (f64, f64) {
    if s <= 0.0 || s >= 1.0 {
        return (0.0, 0.0);
    }
    let b = step(s);
    let one_minus_b = step_complement(s);
    let q = 1.0 / ((1.0 - s) * (1.0 - s)) + 1.0 / (s * s);
    let dq = 2.0 / (1.0 - s).powi(3) - 2.0 / s.powi(3);
    let d1 = -one_minus_b * q;
    let d2 = one_minus_b * (1.0 - 2.0 * b) * q * q - one_minus_b * dq;
    (d1, d2)
}

/// First and second derivatives of `step`.
pub fn derivatives(s: f64) -> (f64, f64) {
    let b = step(s);
    let (d1, d2) = log_derivatives(s);
    (b * d1, b * d2)
}
