//! Dormand–Prince 5(4) integrator with error-controlled step size, for scalar
//! autonomous or non-autonomous equations `y' = f(t, y)`.

use crate::error::{Error, Result};

// Butcher tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the 5th and embedded 4th order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { rel: 1e-8, abs: 1e-300 }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Integrates `y' = f(t, y)` from `times[0]` with `y(times[0]) = y0` and
/// returns `y` at every entry of the ascending `times`.
pub fn solve<F>(mut f: F, y0: f64, times: &[f64], tol: Tolerance) -> Result<(Vec<f64>, Stats)>
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    if times.is_empty() {
        return Ok((Vec::new(), Stats::default()));
    }
    if times.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::InvalidParam("output times must be ascending".into()));
    }
    let mut stats = Stats::default();
    let mut out = Vec::with_capacity(times.len());
    let mut t = times[0];
    let mut y = y0;
    out.push(y);
    let mut k1 = f(t, y)?;
    stats.evaluations += 1;
    let span = times[times.len() - 1] - t;
    let mut h = initial_step(y, k1, span, tol);

    for &target in &times[1..] {
        while t < target {
            let last = h >= target - t;
            let step = if last { target - t } else { h };
            if step <= 1e-14 * t.abs().max(1.0) && !last {
                return Err(Error::StepUnderflow { t });
            }
            let k2 = f(t + C2 * step, y + step * A21 * k1)?;
            let k3 = f(t + C3 * step, y + step * (A31 * k1 + A32 * k2))?;
            let k4 = f(t + C4 * step, y + step * (A41 * k1 + A42 * k2 + A43 * k3))?;
            let k5 = f(t + C5 * step, y + step * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))?;
            let k6 = f(t + step, y + step * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))?;
            let y_new = y + step * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
            let k7 = f(t + step, y_new)?;
            stats.evaluations += 6;
            let err_abs = step * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
            let sc = tol.abs + tol.rel * y.abs().max(y_new.abs());
            let err = (err_abs / sc).abs();
            if err <= 1.0 && y_new.is_finite() {
                stats.accepted += 1;
                t = if last { target } else { t + step };
                y = y_new;
                k1 = k7;
                let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                // keep the natural step if we only shortened it to land on `target`
                h = if last { h.max(step * grow) } else { step * grow };
            } else {
                stats.rejected += 1;
                let shrink = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
                h = step * shrink;
                if h <= 1e-14 * t.abs().max(1.0) {
                    return Err(Error::StepUnderflow { t });
                }
            }
        }
        out.push(y);
    }
    Ok((out, stats))
}

fn initial_step(y: f64, dy: f64, span: f64, tol: Tolerance) -> f64 {
    let sc = tol.abs + tol.rel * y.abs();
    let d0 = y.abs() / sc;
    let d1 = dy.abs() / sc;
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(span.max(f64::MIN_POSITIVE))
}
