//! The dissipation functional `Psi_e` and the temperature upper-bound ODE.
//!
//! For the hard-sphere rate, the temperature `E(t) = int f |v|^2` obeys
//! `dE/dt = -iint f f Psi_e(|u|^2)`, and by Jensen's inequality
//! `dE/dt <= -Psi_e(E)`. The solution of `E' = -Psi_e(E)` is therefore an
//! upper envelope of the true cooling curve.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::kernel::AngularKernel;
use crate::ode::{self, Tolerance};
use crate::quadrature;
use crate::restitution::RestitutionModel;

/// Default relative accuracy of `Psi_e` evaluations.
pub const PSI_REL_TOL: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq)]
pub struct PsiProfile {
    pub model: RestitutionModel,
    pub kernel: AngularKernel,
    pub rel_tol: f64,
}

impl PsiProfile {
    pub fn new(model: RestitutionModel, kernel: AngularKernel) -> Self {
        Self { model, kernel, rel_tol: PSI_REL_TOL }
    }

    pub fn isotropic(model: RestitutionModel) -> Self {
        Self::new(model, AngularKernel::Isotropic)
    }

    /// `Psi_e(x)` for `x >= 0`.
    ///
    /// Isotropic kernel: `(1 / (2 sqrt x)) int_0^sqrt(x) (1 - e(y)^2) y^3 dy`.
    /// Tabulated kernel: `2 pi x^(3/2) int_0^1 (1 - e(sqrt(x) z)^2) b(1 - 2 z^2) z^3 dz`.
    pub fn psi(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::NonFinite("psi argument"));
        }
        if x < 0.0 {
            return Err(Error::InvalidParam(format!("psi argument must be >= 0, got {x}")));
        }
        if x == 0.0 || self.model.is_elastic() {
            return Ok(0.0);
        }
        let m = &self.model;
        let root = x.sqrt();
        match &self.kernel {
            AngularKernel::Isotropic => {
                let est = quadrature::integrate(
                    |y| {
                        let e = m.value(y);
                        (1.0 - e * e) * y * y * y
                    },
                    0.0,
                    root,
                    self.rel_tol,
                    0.0,
                )?;
                Ok(est.value / (2.0 * root))
            }
            kernel => {
                // split at the images z = sqrt((1 - s)/2) of the table breakpoints
                let mut cuts: Vec<f64> = kernel
                    .breakpoints()
                    .iter()
                    .map(|s| (0.5 * (1.0 - s)).max(0.0).sqrt())
                    .filter(|z| *z > 0.0 && *z < 1.0)
                    .collect();
                cuts.push(0.0);
                cuts.push(1.0);
                cuts.sort_by(f64::total_cmp);
                cuts.dedup();
                let mut total = 0.0;
                for w in cuts.windows(2) {
                    let est = quadrature::integrate(
                        |z| {
                            let e = m.value(root * z);
                            (1.0 - e * e) * kernel.value(1.0 - 2.0 * z * z) * z * z * z
                        },
                        w[0],
                        w[1],
                        self.rel_tol,
                        0.0,
                    )?;
                    total += est.value;
                }
                Ok(2.0 * PI * x * root * total)
            }
        }
    }
}

/// `2 pi alpha int_0^1 y^(3 + gamma) b(1 - 2 y^2) dy`.
pub fn c_gamma(alpha: f64, gamma: f64, kernel: &AngularKernel) -> Result<f64> {
    Ok(2.0 * PI * alpha * kernel_moment(kernel, 3.0 + gamma)?)
}

/// `int_0^1 y^k b(1 - 2 y^2) dy`.
fn kernel_moment(kernel: &AngularKernel, k: f64) -> Result<f64> {
    match kernel {
        AngularKernel::Isotropic => Ok(1.0 / (4.0 * PI * (k + 1.0))),
        _ => Ok(quadrature::integrate(|y| y.powf(k) * kernel.value(1.0 - 2.0 * y * y), 0.0, 1.0, 1e-12, 0.0)?.value),
    }
}

/// Asymptotic constants of `Psi_e`: `Psi_e(x) ~ c_gamma x^((3 + gamma)/2)` as
/// `x -> 0` and `Psi_e(x) ~ c_b x^(3/2)` as `x -> infinity`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HaffConstants {
    pub gamma: f64,
    /// Small-speed coefficient of `1 - e(r)^2 ~ alpha2 r^gamma`.
    pub quadratic_deficit: f64,
    pub c_gamma: f64,
    pub c_b: f64,
}

/// Computes the small- and large-argument constants of `Psi_e`.
///
/// `c_gamma` is evaluated with the coefficient of `1 - e^2`, which is
/// `1 - e0^2` for the constant law and `2 alpha` when `1 - e ~ alpha r^gamma`
/// with `gamma > 0`. `c_b` uses `e0 = liminf e(r)`, i.e. zero for the
/// monotone and viscoelastic laws.
pub fn haff_constants(profile: &PsiProfile) -> Result<HaffConstants> {
    let m = &profile.model;
    if m.is_elastic() {
        return Err(Error::Undefined("Haff constants are undefined for elastic collisions".into()));
    }
    let gamma = m.gamma();
    let quadratic_deficit = match (m.e0(), m.alpha()) {
        (Some(e0), _) => 1.0 - e0 * e0,
        (None, Some(alpha)) => 2.0 * alpha,
        (None, None) => unreachable!("non-constant laws carry alpha"),
    };
    let e_inf = m.large_speed_limit();
    Ok(HaffConstants {
        gamma,
        quadratic_deficit,
        c_gamma: c_gamma(quadratic_deficit, gamma, &profile.kernel)?,
        c_b: 2.0 * PI * (1.0 - e_inf * e_inf) * kernel_moment(&profile.kernel, 3.0)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShapeReport {
    pub increasing: bool,
    pub convex: bool,
}

/// Grid-wise check that `Psi_e` is strictly increasing and convex on
/// `[0, x_max]` (uniform grid of `n_grid` intervals).
pub fn certify_shape(profile: &PsiProfile, x_max: f64, n_grid: usize) -> Result<ShapeReport> {
    if !(x_max.is_finite() && x_max > 0.0) {
        return Err(Error::InvalidParam(format!("x_max must be > 0, got {x_max}")));
    }
    if n_grid < 64 {
        return Err(Error::InvalidParam(format!("n_grid must be >= 64, got {n_grid}")));
    }
    let values = crate::par::map_indexed(crate::par::Execution::default(), n_grid + 1, |i| {
        profile.psi(x_max * i as f64 / n_grid as f64)
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    // quadrature noise allowance on second differences
    let tol = 10.0 * profile.rel_tol * scale;
    let increasing = values.windows(2).all(|w| w[1] > w[0]);
    let convex = values.windows(3).all(|w| w[2] - 2.0 * w[1] + w[0] >= -tol);
    Ok(ShapeReport { increasing, convex })
}

/// Solves `E' = -Psi_e(E)`, `E(0) = e_init`, and returns `E` on `t_grid`.
pub fn integrate_upper_bound(profile: &PsiProfile, e_init: f64, t_grid: &[f64]) -> Result<Vec<f64>> {
    if !(e_init.is_finite() && e_init > 0.0) {
        return Err(Error::InvalidParam(format!("initial energy must be > 0, got {e_init}")));
    }
    if t_grid.first() != Some(&0.0) {
        return Err(Error::InvalidParam("time grid must start at t = 0".into()));
    }
    if profile.model.is_elastic() {
        return Ok(vec![e_init; t_grid.len()]);
    }
    let tol = Tolerance { rel: 1e-8, abs: 1e-300 };
    let (values, _) = ode::solve(|_, e| profile.psi(e.max(0.0)).map(|p| -p), e_init, t_grid, tol)?;
    Ok(values)
}

/// Closed-form solution of the upper-bound ODE for a constant coefficient
/// and the isotropic kernel: `E0 (1 + (1 - e0^2) sqrt(E0) t / 16)^(-2)`.
pub fn constant_upper_bound(e0: f64, e_init: f64, t: f64) -> f64 {
    e_init * (1.0 + (1.0 - e0 * e0) * e_init.sqrt() * t / 16.0).powi(-2)
}
