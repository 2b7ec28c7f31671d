//! Principal branch of the Lambert W function.
//!
//! `W₀(z)` is the solution `w ≥ −1` of `w·eʷ = z` for `z ≥ −1/e`. Halley's
//! method is started from a branch-point series near `−1/e`, from `z/(1+z)` on
//! `[0, e]` and from the asymptotic `ln z − ln ln z` expansion beyond.

use std::f64::consts::E;

use crate::error::{Error, Result};

/// `1/e` split into a leading double and its rounding remainder, so that
/// `z + 1/e` keeps full precision next to the branch point.
const INV_E_HI: f64 = 0.367_879_441_171_442_33;
const INV_E_LO: f64 = -1.242_875_367_278_836_3e-17;

/// Arguments this far below `−1/e` are still mapped to `W = −1`.
pub const BRANCH_SLACK: f64 = 1e-15;

/// Iteration cap for the Halley loop.
pub const MAX_ITERATIONS: u32 = 50;

/// `−1/e`, the lower end of the domain.
pub const BRANCH_POINT: f64 = -INV_E_HI;

/// `W₀(z)`.
pub fn lambert_w0(z: f64) -> Result<f64> {
    lambert_w0_with_iterations(z).map(|(w, _)| w)
}

/// `W₀(z)` together with the number of Halley steps taken.
pub fn lambert_w0_with_iterations(z: f64) -> Result<(f64, u32)> {
    if !z.is_finite() {
        return Err(Error::Domain(format!(
            "Lambert W argument must be finite, got {z}"
        )));
    }
    // distance from the branch point
    let offset = (z + INV_E_HI) + INV_E_LO;
    if offset < -BRANCH_SLACK {
        return Err(Error::Domain(format!(
            "Lambert W0 is undefined below -1/e, got {z}"
        )));
    }
    if offset <= 0.0 {
        return Ok((-1.0, 0));
    }
    if z == 0.0 {
        return Ok((0.0, 0));
    }

    let mut w = initial_guess(z, offset);
    if z > E {
        return halley_log_form(z, w);
    }
    for iteration in 1..=MAX_ITERATIONS {
        let ew = w.exp();
        let f = w * ew - z;
        if f.abs() <= 2.0 * f64::EPSILON * z.abs() {
            return Ok((w, iteration - 1));
        }
        let wp1 = w + 1.0;
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        let next = w - step;
        // stay on the principal branch
        w = if next <= -1.0 { 0.5 * (w - 1.0) } else { next };
        if step.abs() <= 4.0 * f64::EPSILON * w.abs() {
            return Ok((w, iteration));
        }
    }
    Err(not_converged(z))
}

/// Halley on `w + ln w − ln z = 0`, which cannot overflow for large `z`.
fn halley_log_form(z: f64, mut w: f64) -> Result<(f64, u32)> {
    let log_z = z.ln();
    for iteration in 1..=MAX_ITERATIONS {
        let g = w + w.ln() - log_z;
        if g.abs() <= f64::EPSILON * log_z {
            return Ok((w, iteration - 1));
        }
        let dg = 1.0 + 1.0 / w;
        let ddg = -1.0 / (w * w);
        let step = 2.0 * g * dg / (2.0 * dg * dg - g * ddg);
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * w {
            return Ok((w, iteration));
        }
    }
    Err(not_converged(z))
}

fn not_converged(z: f64) -> Error {
    Error::Numeric(format!(
        "Lambert W0 did not converge for z = {z} within {MAX_ITERATIONS} iterations"
    ))
}

fn initial_guess(z: f64, offset: f64) -> f64 {
    if z < 0.0 {
        let p = (2.0 * E * offset).sqrt();
        -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * 11.0 / 72.0))
    } else if z <= E {
        z / (1.0 + z)
    } else {
        let l1 = z.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    }
}
