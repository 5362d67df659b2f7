//! Gauss–Legendre quadrature with adaptive panel splitting.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    #[inline]
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn rule(n: usize) -> &'static GaussLegendre {
    static G15: OnceLock<GaussLegendre> = OnceLock::new();
    static G20: OnceLock<GaussLegendre> = OnceLock::new();
    match n {
        15 => G15.get_or_init(|| GaussLegendre::new(15)),
        20 => G20.get_or_init(|| GaussLegendre::new(20)),
        _ => panic!("no cached rule for n = {n}"),
    }
}

/// Fixed-order rule; `n` must be 15 or 20.
pub fn gauss_legendre<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    rule(n).integrate(f, a, b)
}

#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

const MAX_PANELS: usize = 20_000;

/// Adaptive integral of `f` over `[a, b]` to relative accuracy `rel_tol`.
///
/// Each panel is integrated with a 15-point rule and compared with the sum
/// over its two halves; panels whose discrepancy exceeds their share of the
/// error budget are split. `abs_tol` is a floor for integrals close to zero.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    let g = rule(15);
    let width = b - a;
    let coarse = g.integrate(&mut f, a, b);
    let mut stack = vec![(a, b, coarse)];
    let mut value = 0.0;
    let mut error = 0.0;
    let mut panels = 0usize;
    // Rough scale of the integral, refreshed as panels are resolved.
    let mut scale = coarse.abs();
    while let Some((lo, hi, whole)) = stack.pop() {
        panels += 1;
        let mid = 0.5 * (lo + hi);
        let left = g.integrate(&mut f, lo, mid);
        let right = g.integrate(&mut f, mid, hi);
        let halves = left + right;
        let diff = (halves - whole).abs();
        let share = (hi - lo) / width;
        // never ask a panel for more than its own rounding noise
        let budget = ((rel_tol * scale).max(abs_tol) * share).max(20.0 * f64::EPSILON * halves.abs());
        if diff <= budget || (hi - lo) <= 1e-14 * width.abs().max(1e-300) || panels > MAX_PANELS {
            value += halves;
            error += diff;
            scale = scale.max(value.abs());
            if panels > MAX_PANELS {
                // drain the remainder so the achieved error is reported
                while let Some((l, h, w)) = stack.pop() {
                    let m = 0.5 * (l + h);
                    let s = g.integrate(&mut f, l, m) + g.integrate(&mut f, m, h);
                    value += s;
                    error += (s - w).abs();
                }
                return Err(Error::Quadrature { achieved: error / value.abs().max(1e-300), requested: rel_tol });
            }
        } else {
            stack.push((mid, hi, right));
            stack.push((lo, mid, left));
        }
    }
    Ok(Estimate { value, error })
}
