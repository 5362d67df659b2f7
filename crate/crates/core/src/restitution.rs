//! Restitution laws `e(r)` of the impact speed `r`.
//!
//! Three laws are provided: a constant coefficient, the monotone law
//! `e(r) = 1 / (1 + a r^eta)`, and the viscoelastic law defined implicitly by
//! `e + a r^(1/5) e^(3/5) = 1`. Every model can additionally carry a speed
//! scale `s`, in which case it evaluates `e(s r)`; this is how the rescaled
//! coefficient of the self-similar frame is represented.

use crate::error::{Error, Result};

/// Bracket width at which the viscoelastic bisection stops.
const BISECTION_WIDTH: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RestitutionKind {
    Constant,
    MonotoneDecreasing,
    Viscoelastic,
}

impl RestitutionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RestitutionKind::Constant => "constant",
            RestitutionKind::MonotoneDecreasing => "monotone",
            RestitutionKind::Viscoelastic => "viscoelastic",
        }
    }
}

impl std::str::FromStr for RestitutionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(RestitutionKind::Constant),
            "monotone" | "monotone-decreasing" => Ok(RestitutionKind::MonotoneDecreasing),
            "viscoelastic" => Ok(RestitutionKind::Viscoelastic),
            other => Err(Error::InvalidParam(format!("unknown restitution kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Law {
    Constant { e0: f64 },
    Monotone { a: f64, eta: f64 },
    Viscoelastic { a: f64 },
}

/// An immutable restitution model. Cheap to copy and safe to share.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestitutionModel {
    law: Law,
    speed_scale: f64,
}

fn positive(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(Error::InvalidParam(format!("{name} must be finite and > 0, got {x}")))
    }
}

impl RestitutionModel {
    /// `e(r) = e0` with `e0` in `(0, 1]`.
    pub fn constant(e0: f64) -> Result<Self> {
        if !(e0.is_finite() && e0 > 0.0 && e0 <= 1.0) {
            return Err(Error::InvalidParam(format!("e0 must lie in (0, 1], got {e0}")));
        }
        Ok(Self::from_law(Law::Constant { e0 }))
    }

    /// Elastic collisions, `e = 1`.
    pub fn elastic() -> Self {
        Self::from_law(Law::Constant { e0: 1.0 })
    }

    /// The sticky limit `e = 0`. It lies outside the admissible class
    /// (`e > 0` is required for an invertible collision map) and is provided
    /// only as a limiting case for checks.
    pub fn perfectly_inelastic() -> Self {
        Self::from_law(Law::Constant { e0: 0.0 })
    }

    /// `e(r) = 1 / (1 + a r^eta)`.
    pub fn monotone(a: f64, eta: f64) -> Result<Self> {
        Ok(Self::from_law(Law::Monotone {
            a: positive("a", a)?,
            eta: positive("eta", eta)?,
        }))
    }

    /// Root of `e + a r^(1/5) e^(3/5) = 1`.
    pub fn viscoelastic(a: f64) -> Result<Self> {
        Ok(Self::from_law(Law::Viscoelastic { a: positive("a", a)? }))
    }

    fn from_law(law: Law) -> Self {
        Self { law, speed_scale: 1.0 }
    }

    /// Model evaluating `e(factor * r)`.
    pub fn with_speed_scale(&self, factor: f64) -> Result<Self> {
        let factor = positive("speed scale", factor)?;
        Ok(Self {
            law: self.law,
            speed_scale: self.speed_scale * factor,
        })
    }

    pub fn speed_scale(&self) -> f64 {
        self.speed_scale
    }

    pub fn kind(&self) -> RestitutionKind {
        match self.law {
            Law::Constant { .. } => RestitutionKind::Constant,
            Law::Monotone { .. } => RestitutionKind::MonotoneDecreasing,
            Law::Viscoelastic { .. } => RestitutionKind::Viscoelastic,
        }
    }

    pub fn e0(&self) -> Option<f64> {
        match self.law {
            Law::Constant { e0 } => Some(e0),
            _ => None,
        }
    }

    pub fn a(&self) -> Option<f64> {
        match self.law {
            Law::Monotone { a, .. } | Law::Viscoelastic { a } => Some(a),
            Law::Constant { .. } => None,
        }
    }

    pub fn eta(&self) -> Option<f64> {
        match self.law {
            Law::Monotone { eta, .. } => Some(eta),
            _ => None,
        }
    }

    /// Small-impact exponent: `1 - e(r) ~ alpha r^gamma` as `r -> 0`.
    pub fn gamma(&self) -> f64 {
        match self.law {
            Law::Constant { .. } => 0.0,
            Law::Monotone { eta, .. } => eta,
            Law::Viscoelastic { .. } => 0.2,
        }
    }

    /// Small-impact coefficient `alpha`, including the speed scale.
    /// `None` for the constant kind.
    pub fn alpha(&self) -> Option<f64> {
        match self.law {
            Law::Constant { .. } => None,
            Law::Monotone { a, .. } | Law::Viscoelastic { a } => {
                Some(a * self.speed_scale.powf(self.gamma()))
            }
        }
    }

    /// `liminf e(r)` as `r -> infinity`.
    pub fn large_speed_limit(&self) -> f64 {
        match self.law {
            Law::Constant { e0 } => e0,
            Law::Monotone { .. } | Law::Viscoelastic { .. } => 0.0,
        }
    }

    /// True if `e == 1` identically.
    pub fn is_elastic(&self) -> bool {
        matches!(self.law, Law::Constant { e0 } if e0 == 1.0)
    }

    /// Checked evaluation of `e(r)`.
    pub fn eval(&self, r: f64) -> Result<f64> {
        if !r.is_finite() {
            return Err(Error::NonFinite("impact speed"));
        }
        if r < 0.0 {
            return Err(Error::InvalidParam(format!("impact speed must be >= 0, got {r}")));
        }
        Ok(self.value(r))
    }

    /// Unchecked evaluation for the collision loop; `r` must be finite and
    /// nonnegative.
    #[inline]
    pub fn value(&self, r: f64) -> f64 {
        debug_assert!(r.is_finite() && r >= 0.0);
        let r = r * self.speed_scale;
        match self.law {
            Law::Constant { e0 } => e0,
            Law::Monotone { a, eta } => 1.0 / (1.0 + a * r.powf(eta)),
            Law::Viscoelastic { a } => viscoelastic_root(a * r.powf(0.2)),
        }
    }

    /// `beta = (1 + e) / 2`.
    pub fn beta(&self, r: f64) -> Result<f64> {
        Ok(0.5 * (1.0 + self.eval(r)?))
    }

    /// `vartheta(r) = r e(r)`.
    pub fn vartheta(&self, r: f64) -> Result<f64> {
        Ok(r * self.eval(r)?)
    }

    /// Residual of the implicit viscoelastic equation at `r`, or `None` for
    /// the explicit laws.
    pub fn viscoelastic_residual(&self, r: f64) -> Option<f64> {
        match self.law {
            Law::Viscoelastic { a } => {
                let e = self.value(r);
                Some(e + a * (r * self.speed_scale).powf(0.2) * e.powf(0.6) - 1.0)
            }
            _ => None,
        }
    }
}

/// Solves `y^5 + s y^3 = 1` on `[0, 1]` and returns `e = y^5`.
///
/// The left side is strictly increasing in `y`, so `[0, 1]` always brackets
/// the root. Bisection runs to a bracket of `1e-14` and a single Newton step
/// polishes the result.
#[inline]
pub fn viscoelastic_root(s: f64) -> f64 {
    if s <= 0.0 {
        return 1.0;
    }
    let f = |y: f64| {
        let y2 = y * y;
        y2 * y * (y2 + s) - 1.0
    };
    // y^3 (y^2 + s) = 1 gives y <= s^(-1/3) and y >= (1 + s)^(-1/3).
    let mut lo = (1.0 + s).powf(-1.0 / 3.0);
    let mut hi = s.powf(-1.0 / 3.0).min(1.0);
    while hi - lo > BISECTION_WIDTH {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut y = 0.5 * (lo + hi);
    let y2 = y * y;
    let d = 5.0 * y2 * y2 + 3.0 * s * y2;
    if d > 0.0 {
        let polished = y - f(y) / d;
        if polished >= lo && polished <= hi {
            y = polished;
        }
    }
    let y2 = y * y;
    y2 * y2 * y
}

/// Result of [`check_assumptions`].
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    /// `r e(r)` strictly increasing on the grid.
    pub monotone_vartheta: bool,
    /// `0 < e <= 1` on the grid.
    pub e_in_range: bool,
    /// `e` nonincreasing on the grid.
    pub e_nonincreasing: bool,
    /// Fitted small-impact exponent; `None` if `1 - e` vanishes on the fit window.
    pub fitted_gamma: Option<f64>,
    /// Fitted small-impact coefficient.
    pub fitted_alpha: Option<f64>,
    pub e_at_rmax: f64,
}

/// Number of decades spanned by the assumption-check grid.
pub const CHECK_DECADES: f64 = 8.0;

/// Grid-wise check of the structural assumptions on a restitution model.
///
/// The grid is log-spaced over `[r_max 10^-8, r_max]`. `(alpha, gamma)` are
/// fitted by least squares of `log(1 - e)` against `log r` on the smallest
/// decade of the grid.
pub fn check_assumptions(model: &RestitutionModel, r_max: f64, n_grid: usize) -> Result<AssumptionReport> {
    positive("r_max", r_max)?;
    if n_grid < 16 {
        return Err(Error::InvalidParam(format!("n_grid must be >= 16, got {n_grid}")));
    }
    let log_lo = r_max.log10() - CHECK_DECADES;
    let grid: Vec<f64> = (0..n_grid)
        .map(|i| 10f64.powf(log_lo + CHECK_DECADES * i as f64 / (n_grid - 1) as f64))
        .collect();
    let es: Vec<f64> = grid.iter().map(|&r| model.value(r)).collect();
    let thetas: Vec<f64> = grid.iter().zip(&es).map(|(r, e)| r * e).collect();

    let scale = thetas.iter().fold(0.0_f64, |m, t| m.max(t.abs()));
    let tol = 1e-13 * scale;
    // Differences below `tol` are not resolvable and are not judged.
    let monotone_vartheta = thetas.windows(2).all(|w| w[1] - w[0] > 0.0 || (w[1] - w[0]).abs() <= tol);
    let e_in_range = es.iter().all(|&e| e > 0.0 && e <= 1.0);
    let e_nonincreasing = es.windows(2).all(|w| w[1] <= w[0]);

    let cutoff = grid[0] * 10.0 * (1.0 + 1e-12);
    let pts: Vec<(f64, f64)> = grid
        .iter()
        .zip(&es)
        .filter(|(r, e)| **r <= cutoff && 1.0 - **e > f64::MIN_POSITIVE)
        .map(|(r, e)| (r.ln(), (1.0 - e).ln()))
        .collect();
    let (fitted_alpha, fitted_gamma) = if pts.len() >= 2 {
        let (slope, intercept) = least_squares(&pts);
        (Some(intercept.exp()), Some(slope))
    } else {
        if let Some(e0) = model.e0() {
            if e0 == 1.0 {
                log::warn!("1 - e(r) vanishes on the fit window; small-impact fit skipped");
            }
        }
        (None, None)
    };

    Ok(AssumptionReport {
        monotone_vartheta,
        e_in_range,
        e_nonincreasing,
        fitted_gamma,
        fitted_alpha,
        e_at_rmax: model.value(r_max),
    })
}

fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}
