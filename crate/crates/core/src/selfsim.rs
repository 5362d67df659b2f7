//! Self-similar variables.
//!
//! With `V(t) = (1 + t)^(1/(1+gamma))` the rescaled velocity is `w = V v` and
//! the rescaled clock is `tau(t)`, chosen so that `tau' V = 1`. In these
//! variables the cooling gas keeps an order-one temperature
//! `Theta(tau) = V^2 E`, the drift coefficient is
//! `xi(tau) = 1 / (gamma tau + 1 + gamma)` and the collision law becomes the
//! time dependent `e_tau(r) = e(r / V(zeta(tau)))`.

use crate::dsmc::{Mode, VelocityEnsemble};
use crate::error::{Error, Result};
use crate::restitution::RestitutionModel;

/// Below this exponent the logarithmic (`gamma = 0`) branch is used.
pub const GAMMA_ZERO: f64 = 1e-8;

/// The normalization `lambda(tau)` of the rescaled collision operator. For
/// hard spheres the choice `tau' V = 1` makes it identically one.
pub const LAMBDA: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingParams {
    gamma: f64,
    base: RestitutionModel,
}

impl ScalingParams {
    /// Scaling built on the model's own small-impact exponent.
    pub fn new(base: RestitutionModel) -> Self {
        Self { gamma: base.gamma(), base }
    }

    /// Explicit exponent; must agree with the model's.
    pub fn with_gamma(base: RestitutionModel, gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::InvalidParam(format!("gamma must be >= 0, got {gamma}")));
        }
        if (gamma - base.gamma()).abs() > 1e-12 {
            return Err(Error::InvalidParam(format!(
                "gamma {gamma} does not match the {} model's exponent {}",
                base.kind().as_str(),
                base.gamma()
            )));
        }
        Ok(Self { gamma, base })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn base(&self) -> &RestitutionModel {
        &self.base
    }

    fn log_branch(&self) -> bool {
        self.gamma < GAMMA_ZERO
    }

    /// `V(t) = (1 + t)^(1/(1+gamma))`.
    pub fn v_scale(&self, t: f64) -> f64 {
        (1.0 + t).powf(1.0 / (1.0 + self.gamma))
    }

    /// `tau(t) = ((1+gamma)/gamma) ((1+t)^(gamma/(1+gamma)) - 1)`, or `ln(1+t)`.
    pub fn tau_of_t(&self, t: f64) -> f64 {
        let g = self.gamma;
        if self.log_branch() {
            t.ln_1p()
        } else {
            (1.0 + g) / g * (g / (1.0 + g) * t.ln_1p()).exp_m1()
        }
    }

    /// Inverse of [`tau_of_t`](Self::tau_of_t).
    pub fn zeta(&self, tau: f64) -> f64 {
        let g = self.gamma;
        if self.log_branch() {
            tau.exp_m1()
        } else {
            ((1.0 + g) / g * (g * tau / (1.0 + g)).ln_1p()).exp_m1()
        }
    }

    /// `xi(tau) = 1 / (gamma tau + 1 + gamma)`.
    pub fn xi(&self, tau: f64) -> f64 {
        1.0 / (self.gamma * tau + 1.0 + self.gamma)
    }

    /// `exp(int_tau^(tau + dtau) xi)`, the factor by which the drift stretches
    /// rescaled velocities over one step.
    pub fn drift_factor(&self, tau: f64, dtau: f64) -> f64 {
        let g = self.gamma;
        if self.log_branch() {
            dtau.exp()
        } else {
            ((g * dtau / (g * tau + 1.0 + g)).ln_1p() / g).exp()
        }
    }

    /// The rescaled law `e_tau(r) = e(r / V(zeta(tau)))`.
    pub fn rescaled_restitution(&self, tau: f64) -> Result<RestitutionModel> {
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(Error::InvalidParam(format!("tau must be >= 0, got {tau}")));
        }
        self.base.with_speed_scale(1.0 / self.v_scale(self.zeta(tau)))
    }
}

/// Switches an ensemble between physical and self-similar variables.
///
/// Physical to self-similar maps `w = V(t) v` and sets `tau = tau(t)`; the
/// reverse divides by `V(zeta(tau))`.
pub fn rescale_ensemble(mut ensemble: VelocityEnsemble, params: &ScalingParams) -> VelocityEnsemble {
    match ensemble.mode {
        Mode::Physical => {
            let v = params.v_scale(ensemble.t);
            for w in &mut ensemble.velocities {
                *w = *w * v;
            }
            ensemble.tau = params.tau_of_t(ensemble.t);
            ensemble.mode = Mode::SelfSimilar;
        }
        Mode::SelfSimilar => {
            ensemble.t = params.zeta(ensemble.tau);
            let v = params.v_scale(ensemble.t);
            for w in &mut ensemble.velocities {
                *w = *w / v;
            }
            ensemble.mode = Mode::Physical;
        }
    }
    ensemble
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature;

    fn visco() -> ScalingParams {
        ScalingParams::new(RestitutionModel::viscoelastic(0.12).unwrap())
    }

    fn constant() -> ScalingParams {
        ScalingParams::new(RestitutionModel::constant(0.5).unwrap())
    }

    #[test]
    fn scale_examples() {
        for p in [visco(), constant()] {
            assert_eq!(p.v_scale(0.0), 1.0);
            assert_eq!(p.tau_of_t(0.0), 0.0);
            assert_eq!(p.zeta(0.0), 0.0);
        }
        assert_eq!(constant().v_scale(3.0), 4.0);
        assert!((visco().v_scale(63.0) - 32.0).abs() < 1e-13);
        assert!((constant().tau_of_t(std::f64::consts::E - 1.0) - 1.0).abs() < 1e-15);
        assert_eq!(constant().xi(17.0), 1.0);
        assert!((visco().xi(0.0) - 1.0 / 1.2).abs() < 1e-15);
    }

    #[test]
    fn closed_form_inverse() {
        // tau = 6 ((1+t)^(1/6) - 1) for gamma = 1/5, so 1 + t = (1 + tau/6)^6
        let p = visco();
        for t in [0.1, 1.0, 10.0, 1e3] {
            let tau = p.tau_of_t(t);
            let direct = 6.0 * ((1.0 + t).powf(1.0 / 6.0) - 1.0);
            assert!((tau - direct).abs() < 1e-12 * direct.max(1.0));
            assert!(((1.0 + tau / 6.0).powi(6) - 1.0 - t).abs() < 1e-10 * t);
            assert!((p.zeta(tau) - t).abs() < 1e-10 * t);
        }
    }

    #[test]
    fn inverse_pair_on_wide_range() {
        for p in [visco(), constant(), ScalingParams::new(RestitutionModel::monotone(1.0, 1.0).unwrap())] {
            for k in 0..=120 {
                let t = 10f64.powf(-6.0 + 0.1 * k as f64);
                assert!((p.zeta(p.tau_of_t(t)) / t - 1.0).abs() < 1e-10, "t = {t}");
            }
        }
    }

    #[test]
    fn tiny_gamma_joins_log_branch() {
        let base = RestitutionModel::monotone(1.0, 1e-7).unwrap();
        let p = ScalingParams::new(base);
        assert!((p.tau_of_t(10.0) - 11f64.ln()).abs() < 1e-5);
        let q = ScalingParams::new(RestitutionModel::monotone(1.0, 1e-9).unwrap());
        assert_eq!(q.tau_of_t(10.0), 11f64.ln());
    }

    #[test]
    fn xi_is_dv_dt() {
        let p = visco();
        for tau in [0.0, 0.5, 3.0, 20.0] {
            let t = p.zeta(tau);
            let h = 1e-5 * (1.0 + t);
            // V extends smoothly to t > -1, so the central difference is fine at t = 0
            let fd = (p.v_scale(t + h) - p.v_scale(t - h)) / (2.0 * h);
            assert!((fd / p.xi(tau) - 1.0).abs() < 1e-6, "tau = {tau}");
        }
    }

    #[test]
    fn xi_decreases_to_zero() {
        let p = visco();
        let xs: Vec<f64> = (0..50).map(|k| p.xi(2f64.powi(k))).collect();
        assert!(xs.windows(2).all(|w| w[1] < w[0]));
        assert!(xs[49] < 1e-12);
    }

    #[test]
    fn drift_factor_is_exponential_of_xi_integral() {
        for p in [visco(), constant()] {
            for (tau, dtau) in [(0.0, 0.01), (2.0, 0.3), (15.0, 4.0)] {
                let integral = quadrature::integrate(|s| p.xi(s), tau, tau + dtau, 1e-14, 0.0).unwrap().value;
                assert!((p.drift_factor(tau, dtau) / integral.exp() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rescaled_law_forms_agree() {
        let p = visco();
        let g = p.gamma();
        for tau in [0.0, 0.7, 5.0, 21.85] {
            let m = p.rescaled_restitution(tau).unwrap();
            let shrink = (1.0 + g * tau / (g + 1.0)).powf(-1.0 / g);
            for r in [1e-3, 0.1, 1.0, 30.0] {
                let direct = p.base().eval(r * shrink).unwrap();
                assert!((m.eval(r).unwrap() - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rescaled_law_limits() {
        let p = visco();
        assert_eq!(p.rescaled_restitution(0.0).unwrap(), *p.base());
        let c = constant();
        assert_eq!(c.rescaled_restitution(9.0).unwrap().eval(2.0).unwrap(), 0.5);
        let es: Vec<f64> = [0.0, 1.0, 5.0, 20.0, 100.0].iter().map(|&t| p.rescaled_restitution(t).unwrap().eval(1.0).unwrap()).collect();
        assert!(es.windows(2).all(|w| w[1] > w[0]));
        assert!(1.0 - es[4] < 0.05);
    }
}
