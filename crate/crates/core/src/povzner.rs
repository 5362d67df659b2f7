//! Povzner-type moment inequalities.
//!
//! For `p >= 1` and any admissible restitution law,
//! `int Q(f, f) |v|^(2p) <= -(1 - kappa_p) m_(p+1/2) + kappa_p S_p`, where the
//! constant `kappa_p` depends only on the angular kernel.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::kernel::AngularKernel;
use crate::quadrature;

const ORDER_TOL: f64 = 1e-12;

/// Moments `m_p = int f |v|^(2p)` keyed by order `p`, with `m_0 = 1`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MomentVector {
    entries: Vec<(f64, f64)>,
    /// Log-linear interpolation in `p` between stored orders.
    pub interpolate: bool,
}

impl MomentVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (f64, f64)>>(pairs: I) -> Self {
        let mut mv = Self::new();
        for (p, m) in pairs {
            mv.insert(p, m);
        }
        mv
    }

    pub fn insert(&mut self, p: f64, m: f64) {
        match self.entries.iter_mut().find(|(q, _)| (q - p).abs() < ORDER_TOL) {
            Some(slot) => slot.1 = m,
            None => {
                self.entries.push((p, m));
                self.entries.sort_by(|a, b| a.0.total_cmp(&b.0));
            }
        }
    }

    pub fn get(&self, p: f64) -> Option<f64> {
        if let Some(&(_, m)) = self.entries.iter().find(|(q, _)| (q - p).abs() < ORDER_TOL) {
            return Some(m);
        }
        if p.abs() < ORDER_TOL {
            return Some(1.0);
        }
        if !self.interpolate {
            return None;
        }
        let hi = self.entries.iter().position(|(q, _)| *q > p)?;
        let (p1, m1) = self.entries[hi];
        let (p0, m0) = if hi == 0 { (0.0, 1.0) } else { self.entries[hi - 1] };
        if m0 <= 0.0 || m1 <= 0.0 {
            return None;
        }
        let t = (p - p0) / (p1 - p0);
        Some((m0.ln() * (1.0 - t) + m1.ln() * t).exp())
    }

    fn require(&self, p: f64) -> Result<f64> {
        self.get(p).ok_or(Error::MissingMoment(p))
    }

    pub fn orders(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|e| e.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.entries.iter().copied()
    }

    /// Checks `m_(p+1/2) >= m_p^(1 + 1/(2p))` for every stored pair with `p >= 1`.
    pub fn jensen_chain_holds(&self, rel_tol: f64) -> bool {
        self.entries.iter().filter(|(p, _)| *p >= 1.0).all(|&(p, m)| match self.get(p + 0.5) {
            Some(next) => next >= m.powf(1.0 + 0.5 / p) * (1.0 - rel_tol),
            None => true,
        })
    }

    /// Checks log-convexity of `p -> m_p` on consecutive stored orders.
    pub fn log_convex(&self, rel_tol: f64) -> bool {
        let mut pts: Vec<(f64, f64)> = vec![(0.0, 1.0)];
        pts.extend(self.entries.iter().filter(|(p, _)| *p > ORDER_TOL).copied());
        pts.windows(3).all(|w| {
            let (p0, m0) = w[0];
            let (p1, m1) = w[1];
            let (p2, m2) = w[2];
            if m0 <= 0.0 || m1 <= 0.0 || m2 <= 0.0 {
                return true;
            }
            let t = (p1 - p0) / (p2 - p0);
            m1.ln() <= (1.0 - t) * m0.ln() + t * m2.ln() + rel_tol
        })
    }
}

/// Generalized binomial coefficient `p (p - 1) ... (p - k + 1) / k!`.
pub fn binom(p: f64, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (p - j as f64) / (j as f64 + 1.0))
}

fn check_order(p: f64) -> Result<()> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::InvalidParam(format!("Povzner order must be >= 1, got {p}")));
    }
    Ok(())
}

fn povzner_weight(p: f64, s: f64) -> f64 {
    (0.25 * (3.0 + s)).powf(p) + (0.25 * (1.0 - s)).powf(p)
}

/// `kappa_p`: closed form for the isotropic kernel, quadrature otherwise.
pub fn kappa_p(p: f64, kernel: &AngularKernel) -> Result<f64> {
    check_order(p)?;
    match kernel {
        AngularKernel::Isotropic => Ok(kappa_p_isotropic(p)),
        _ => kappa_p_quadrature(p, kernel),
    }
}

/// `(4 / (p + 1)) (1 - (3/4)^(p+1) + (1/4)^(p+1))`.
pub fn kappa_p_isotropic(p: f64) -> f64 {
    4.0 / (p + 1.0) * (1.0 - 0.75f64.powf(p + 1.0) + 0.25f64.powf(p + 1.0))
}

/// Number of coarse angles scanned before golden-section refinement.
const SCAN_POINTS: usize = 64;

/// `kappa_p` as the supremum over the angle `theta` between `U_hat` and
/// `u_hat` of the half-sphere integral
/// `int_{U_hat . sigma >= 0} w_p(U_hat . sigma) (b(u_hat . sigma) + b(-u_hat . sigma)) d sigma`.
/// Works for any kernel, including the isotropic one.
pub fn kappa_p_quadrature(p: f64, kernel: &AngularKernel) -> Result<f64> {
    check_order(p)?;
    let f = |theta: f64| half_sphere_integral(p, kernel, theta);
    let values = crate::par::map_indexed(crate::par::Execution::default(), SCAN_POINTS + 1, |i| {
        f(PI * i as f64 / SCAN_POINTS as f64)
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let (best, &best_val) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty scan");
    let step = PI / SCAN_POINTS as f64;
    let mut lo = (best as f64 - 1.0).max(0.0) * step;
    let mut hi = (best as f64 + 1.0).min(SCAN_POINTS as f64) * step;
    // golden-section maximization on the bracketing cell pair
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    for _ in 0..60 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1)?;
        }
        // the maximum is flat: an angle error of 1e-7 costs ~1e-14 in value
        if hi - lo < 1e-7 {
            break;
        }
    }
    Ok(best_val.max(f1).max(f2))
}

fn half_sphere_integral(p: f64, kernel: &AngularKernel, theta: f64) -> Result<f64> {
    let (st, ct) = theta.sin_cos();
    // c = u_hat . sigma; the ring at fixed c is cut where U_hat . sigma = 0
    let ring = |c: f64| {
        let rho = (1.0 - c * c).max(0.0).sqrt();
        let (axial, radial) = (ct * c, st * rho);
        let cut = if radial <= axial.abs() {
            if axial >= 0.0 { PI } else { 0.0 }
        } else {
            (-axial / radial).clamp(-1.0, 1.0).acos()
        };
        if cut == 0.0 {
            return 0.0;
        }
        let rule = |a: f64, b: f64| quadrature::gauss_legendre(|phi| povzner_weight(p, axial + radial * phi.cos()), a, b, 20);
        2.0 * (rule(0.0, 0.5 * cut) + rule(0.5 * cut, cut))
    };
    let mut knots: Vec<f64> = kernel.breakpoints().iter().flat_map(|&s| [s, -s]).collect();
    // the cut switches between empty, partial and full rings at c = +-sin(theta)
    knots.extend([-1.0, 1.0, st, -st]);
    knots.sort_by(f64::total_cmp);
    knots.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let mut total = 0.0;
    for w in knots.windows(2) {
        let (a, h) = (w[0], w[1] - w[0]);
        // smoothstep substitution absorbs the square-root onset of the ring at the ends
        let integrand = |t: f64| {
            let c = a + h * t * t * (3.0 - 2.0 * t);
            (kernel.value(c) + kernel.value(-c)) * ring(c) * 6.0 * h * t * (1.0 - t)
        };
        let est = quadrature::integrate(integrand, 0.0, 1.0, 1e-11, 1e-15)?;
        total += est.value;
    }
    Ok(total)
}

/// Hölder upper bound `16 pi ||b||_q / (q' p + 1)^(1/q')`, `1/q + 1/q' = 1`.
pub fn kappa_bound(p: f64, q: f64, b_norm: f64) -> Result<f64> {
    check_order(p)?;
    if !(q >= 1.0) {
        return Err(Error::InvalidParam(format!("q must be >= 1, got {q}")));
    }
    if q == 1.0 {
        // q' -> infinity
        return Ok(16.0 * PI * b_norm);
    }
    let q_conj = if q.is_infinite() { 1.0 } else { q / (q - 1.0) };
    Ok(16.0 * PI * b_norm / (q_conj * p + 1.0).powf(1.0 / q_conj))
}

/// `S_p = sum_{k=1}^{[(p+1)/2]} binom(p, k) (m_(k+1/2) m_(p-k) + m_k m_(p-k+1/2))`.
pub fn s_p(moments: &MomentVector, p: f64) -> Result<f64> {
    check_order(p)?;
    let k_max = ((p + 1.0) / 2.0).floor() as u32;
    let mut total = 0.0;
    for k in 1..=k_max {
        let kf = k as f64;
        let term = moments.require(kf + 0.5)? * moments.require(p - kf)?
            + moments.require(kf)? * moments.require(p - kf + 0.5)?;
        total += binom(p, k) * term;
    }
    Ok(total)
}

/// Upper bound `-(1 - kappa_p) m_(p+1/2) + kappa_p S_p` on the production of `m_p`.
pub fn moment_rhs(moments: &MomentVector, p: f64, kernel: &AngularKernel) -> Result<f64> {
    let kappa = kappa_p(p, kernel)?;
    Ok(-(1.0 - kappa) * moments.require(p + 0.5)? + kappa * s_p(moments, p)?)
}
