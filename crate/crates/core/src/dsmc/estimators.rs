use rand::Rng;

use crate::cooling::PsiProfile;
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::povzner::MomentVector;
use crate::vec3::Vec3;

/// Sample mean of `f` and its standard error `sd / sqrt(n)`.
pub(crate) fn mean_and_stderr<T, F>(exec: Execution, items: &[T], f: F) -> (f64, f64)
where
    T: Sync,
    F: Fn(&T) -> f64 + Sync + Send,
{
    let n = items.len() as f64;
    let mean = par::sum_by(exec, items, &f) / n;
    if items.len() < 2 {
        return (mean, 0.0);
    }
    let var = par::sum_by(exec, items, |x| (f(x) - mean).powi(2)) / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[inline]
pub(crate) fn speed_power(v: &Vec3, p: f64) -> f64 {
    let s = v.norm_sq();
    if p == 1.0 {
        s
    } else if p == 2.0 {
        s * s
    } else {
        s.powf(p)
    }
}

fn check_orders(orders: &[f64]) -> Result<()> {
    if orders.is_empty() {
        return Err(Error::InvalidParam("no moment orders requested".into()));
    }
    if let Some(p) = orders.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
        return Err(Error::InvalidParam(format!("moment order must be >= 0, got {p}")));
    }
    Ok(())
}

/// Empirical moments `m_p = (1/N) sum |v_i|^(2p)`, with `m_0 = 1` exactly.
pub fn moments(velocities: &[Vec3], orders: &[f64], exec: Execution) -> Result<MomentVector> {
    check_orders(orders)?;
    let n = velocities.len() as f64;
    let mut mv = MomentVector::new();
    for &p in orders {
        let m = if p == 0.0 { 1.0 } else { par::sum_by(exec, velocities, |v| speed_power(v, p)) / n };
        mv.insert(p, m);
    }
    Ok(mv)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    pub rate: f64,
    pub stderr: f64,
}

/// Monte Carlo estimate of `int int f f Psi_e(|v - vbar|^2)`, the energy
/// dissipation rate, from `n_pairs` uniformly drawn pairs `i != j`.
pub fn dissipation_rate_estimate<R: Rng + ?Sized>(
    velocities: &[Vec3],
    profile: &PsiProfile,
    n_pairs: usize,
    rng: &mut R,
    exec: Execution,
) -> Result<RateEstimate> {
    if n_pairs < 1000 {
        return Err(Error::InvalidParam(format!("need at least 1000 pairs, got {n_pairs}")));
    }
    let n = velocities.len();
    if n < 2 {
        return Err(Error::InvalidParam("need at least 2 particles".into()));
    }
    if profile.model.is_elastic() {
        return Ok(RateEstimate { rate: 0.0, stderr: 0.0 });
    }
    let pairs: Vec<(usize, usize)> = (0..n_pairs)
        .map(|_| {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n - 1);
            (i, if j >= i { j + 1 } else { j })
        })
        .collect();
    let values = par::map_slice(exec, &pairs, |&(i, j)| profile.psi((velocities[i] - velocities[j]).norm_sq()));
    let values = values.into_iter().collect::<Result<Vec<f64>>>()?;
    let (rate, stderr) = mean_and_stderr(exec, &values, |x| *x);
    Ok(RateEstimate { rate, stderr })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailValue {
    pub value: f64,
    /// Set when the sum overflowed; `value` is then `+inf`.
    pub overflow: bool,
}

/// `(1/N) sum exp(r |v_i|^s)`.
pub fn tail_functional(velocities: &[Vec3], r: f64, s: f64, exec: Execution) -> Result<TailValue> {
    if !(r.is_finite() && r >= 0.0 && s.is_finite() && s > 0.0) {
        return Err(Error::InvalidParam(format!("tail functional needs r >= 0 and s > 0, got r = {r}, s = {s}")));
    }
    if velocities.is_empty() {
        return Err(Error::InvalidParam("empty ensemble".into()));
    }
    if r == 0.0 {
        return Ok(TailValue { value: 1.0, overflow: false });
    }
    let value = par::sum_by(exec, velocities, |v| (r * v.norm_sq().powf(0.5 * s)).exp()) / velocities.len() as f64;
    Ok(TailValue { value: if value.is_finite() { value } else { f64::INFINITY }, overflow: !value.is_finite() })
}
