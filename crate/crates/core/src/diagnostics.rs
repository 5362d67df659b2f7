//! Post-processing of moment series: decay exponents, moment ratios and
//! renormalized moments.

use statrs::function::gamma::gamma;

use crate::dsmc::MomentSeries;
use crate::error::{Error, Result};
use crate::povzner::MomentVector;

/// Minimum number of records inside a fit window.
pub const MIN_FIT_POINTS: usize = 8;

/// Relative growth of a running maximum still counted as stabilized.
pub const STABILIZATION_TOL: f64 = 0.05;

/// Least-squares power law `y ~ (1 + t)^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HaffFit {
    pub exponent: f64,
    /// Intercept of the line in `(log(1+t), log y)`.
    pub intercept: f64,
    pub window: (f64, f64),
    pub stderr: f64,
    pub n_points: usize,
}

/// Fits `log y = intercept + exponent log(1 + t)` over `window` (inclusive).
pub fn fit_power_law(t: &[f64], y: &[f64], window: (f64, f64)) -> Result<HaffFit> {
    if t.len() != y.len() {
        return Err(Error::InvalidParam(format!("{} times but {} values", t.len(), y.len())));
    }
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(Error::InvalidParam(format!("empty fit window [{lo}, {hi}]")));
    }
    // a relative slack keeps records that land on the window edges
    let inside = |x: f64| x >= lo * (1.0 - 1e-12) && x <= hi * (1.0 + 1e-12);
    let pts: Vec<(f64, f64)> = t.iter().zip(y).filter(|(ti, _)| inside(**ti)).map(|(&ti, &yi)| (ti, yi)).collect();
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::TooFewPoints { got: pts.len(), need: MIN_FIT_POINTS });
    }
    if let Some((ti, yi)) = pts.iter().find(|(_, yi)| !(*yi > 0.0 && yi.is_finite())) {
        return Err(Error::InvalidParam(format!("non-positive value {yi} at t = {ti}")));
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0.ln_1p()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParam("fit window contains a single time".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let ssr: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let stderr = (ssr / (n - 2.0) / sxx).sqrt();
    Ok(HaffFit { exponent: slope, intercept, window, stderr, n_points: pts.len() })
}

/// The last two decades `[t_max / 100, t_max]` of a record schedule.
pub fn default_window(t: &[f64]) -> Result<(f64, f64)> {
    let t_max = t.iter().copied().fold(f64::NAN, f64::max);
    if !(t_max > 0.0) {
        return Err(Error::InvalidParam("series has no positive time".into()));
    }
    Ok((t_max / 100.0, t_max))
}

/// Target exponent `-2 / (1 + gamma)` of the generalized Haff law.
pub fn haff_exponent(gamma: f64) -> f64 {
    -2.0 / (1.0 + gamma)
}

/// Whether a sequence has stopped growing: its maximum exceeds the maximum of
/// the first three quarters by at most `tol` (relative). Requires at least
/// four finite values.
pub fn running_max_stabilized(values: &[f64], tol: f64) -> bool {
    if values.len() < 4 || values.iter().any(|v| !v.is_finite()) {
        return false;
    }
    let cut = values.len() - values.len() / 4;
    let early = values[..cut].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let all = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    all <= early + tol * early.abs()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentRatio {
    pub p: f64,
    /// `m_p / E^p` per record.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub stabilized: bool,
    /// `m_p >= E^p` on every record up to three standard errors.
    pub jensen_holds: bool,
    /// Largest shortfall `(E^p - m_p) / stderr` over the records (negative
    /// when the bound holds with room to spare).
    pub worst_jensen_z: f64,
}

/// `max_t m_p / E^p` and the Jensen lower bound `m_p >= E^p` for each order.
pub fn moment_ratio_report(series: &MomentSeries, p_list: &[f64]) -> Result<Vec<MomentRatio>> {
    if let Some(r) = series.records.iter().find(|r| !(r.energy > 0.0)) {
        return Err(Error::InvalidParam(format!("energy must be > 0, got {} at t = {}", r.energy, r.t)));
    }
    p_list
        .iter()
        .map(|&p| {
            let k = series.order_index(p).ok_or(Error::MissingMoment(p))?;
            let mut ratios = Vec::with_capacity(series.records.len());
            let mut worst = f64::NEG_INFINITY;
            for r in &series.records {
                let ep = r.energy.powf(p);
                ratios.push(r.moments[k] / ep);
                // delta method for the error of m_p - E^p
                let se = (r.err.moments[k].powi(2) + (p * ep / r.energy * r.err.energy).powi(2)).sqrt();
                let gap = ep - r.moments[k];
                let z = if se > 0.0 {
                    gap / se
                } else if gap > 1e-12 * ep {
                    f64::INFINITY
                } else {
                    f64::NEG_INFINITY
                };
                worst = worst.max(z);
            }
            let max_ratio = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Ok(MomentRatio {
                p,
                stabilized: running_max_stabilized(&ratios, STABILIZATION_TOL),
                max_ratio,
                ratios,
                jensen_holds: worst <= 3.0,
                worst_jensen_z: worst,
            })
        })
        .collect()
}

/// `z_p(tau) = m_p(tau) / Gamma(a p + b)` per record, for the orders kept.
#[derive(Debug, Clone, PartialEq)]
pub struct ZTable {
    pub orders: Vec<f64>,
    pub taus: Vec<f64>,
    /// `z[k][j]` is order `orders[k]` at `taus[j]`.
    pub z: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailReport {
    pub a: f64,
    pub b_offset: f64,
    /// Smallest `Q >= 1` with `z_p <= Q^p` for every observed `p` and `tau`.
    pub q_certificate: f64,
    /// The per-record certificate stopped growing.
    pub bounded: bool,
}

/// Largest argument for which `Gamma` is finite in double precision.
const GAMMA_ARG_MAX: f64 = 170.0;

/// Renormalized moments `z_p = m_p / Gamma(a p + b)` from a table of
/// `(tau, moments)`. Orders up to 4 must be present in steps of 1/2.
pub fn renormalized_moments(table: &[(f64, MomentVector)], a: f64, b: f64) -> Result<(ZTable, TailReport)> {
    if !(a >= 1.0 && a.is_finite()) {
        return Err(Error::InvalidParam(format!("a must be >= 1, got {a}")));
    }
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::InvalidParam(format!("b must be > 0, got {b}")));
    }
    let first = &table.first().ok_or_else(|| Error::InvalidParam("empty moment table".into()))?.1;
    for k in 1..=8 {
        let p = 0.5 * k as f64;
        if first.get(p).is_none() {
            return Err(Error::MissingMoment(p));
        }
    }
    let mut orders: Vec<f64> = first.orders().filter(|&p| p > 0.0).collect();
    let before = orders.len();
    orders.retain(|&p| a * p + b <= GAMMA_ARG_MAX);
    if orders.len() < before {
        log::warn!("dropped {} orders with a p + b > {GAMMA_ARG_MAX}", before - orders.len());
    }
    let norms: Vec<f64> = orders.iter().map(|&p| gamma(a * p + b)).collect();
    let mut z = vec![Vec::with_capacity(table.len()); orders.len()];
    let mut per_record = Vec::with_capacity(table.len());
    for (tau, mv) in table {
        let mut q = 1.0f64;
        for (k, (&p, &g)) in orders.iter().zip(&norms).enumerate() {
            let m = mv.get(p).ok_or(Error::MissingMoment(p))?;
            let zp = m / g;
            z[k].push(zp);
            q = q.max(zp.powf(1.0 / p));
        }
        if !q.is_finite() {
            log::warn!("renormalized moment not finite at tau = {tau}");
        }
        per_record.push(q);
    }
    let q_certificate = per_record.iter().copied().fold(1.0, f64::max);
    let report = TailReport { a, b_offset: b, q_certificate, bounded: running_max_stabilized(&per_record, STABILIZATION_TOL) };
    Ok((ZTable { orders, taus: table.iter().map(|(t, _)| *t).collect(), z }, report))
}
