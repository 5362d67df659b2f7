//! Binary inelastic collision maps.
//!
//! Two equivalent parametrizations are provided: by the impact direction `n`
//! and by the post-collisional direction `sigma = u_hat - 2 (u_hat . n) n`.
//! The restitution coefficient is evaluated at the impact speed `|u . n|`.

use crate::error::{Error, Result};
use crate::restitution::RestitutionModel;
use crate::vec3::Vec3;

const UNIT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionOutcome {
    pub v_prime: Vec3,
    pub vbar_prime: Vec3,
    pub impact_speed: f64,
    pub e_used: f64,
    /// Drop of `|v|^2 + |vbar|^2`; never negative.
    pub energy_loss: f64,
}

fn check_inputs(v: Vec3, vbar: Vec3, dir: Vec3) -> Result<()> {
    if !v.is_finite() || !vbar.is_finite() || !dir.is_finite() {
        return Err(Error::NonFinite("collision input"));
    }
    let norm = dir.norm();
    if (norm - 1.0).abs() > UNIT_TOL {
        return Err(Error::NotUnit { norm });
    }
    Ok(())
}

/// Post-collisional velocities in the `sigma` parametrization:
/// `v' = v - beta (u - |u| sigma) / 2`, `vbar' = vbar + beta (u - |u| sigma) / 2`.
pub fn post_collision_sigma(v: Vec3, vbar: Vec3, sigma: Vec3, model: &RestitutionModel) -> Result<CollisionOutcome> {
    check_inputs(v, vbar, sigma)?;
    Ok(collide_sigma(v, vbar, sigma, model))
}

/// Unchecked form of [`post_collision_sigma`] used by the particle solver.
#[inline]
pub fn collide_sigma(v: Vec3, vbar: Vec3, sigma: Vec3, model: &RestitutionModel) -> CollisionOutcome {
    let u = v - vbar;
    let u_norm = u.norm();
    if u_norm == 0.0 {
        return CollisionOutcome {
            v_prime: v,
            vbar_prime: vbar,
            impact_speed: 0.0,
            e_used: model.value(0.0),
            energy_loss: 0.0,
        };
    }
    let cos = (u.dot(sigma) / u_norm).clamp(-1.0, 1.0);
    let one_minus_cos = 1.0 - cos;
    let impact_speed = u_norm * (0.5 * one_minus_cos).sqrt();
    let e = model.value(impact_speed);
    let beta = 0.5 * (1.0 + e);
    let w = (u - sigma * u_norm) * (0.5 * beta);
    CollisionOutcome {
        v_prime: v - w,
        vbar_prime: vbar + w,
        impact_speed,
        e_used: e,
        energy_loss: 0.25 * u_norm * u_norm * one_minus_cos * (1.0 - e * e),
    }
}

/// Post-collisional velocities in the impact-direction parametrization:
/// `v' = v - (1 + e)/2 (u . n) n`, `vbar' = vbar + (1 + e)/2 (u . n) n`.
pub fn post_collision_impact(v: Vec3, vbar: Vec3, n: Vec3, model: &RestitutionModel) -> Result<CollisionOutcome> {
    check_inputs(v, vbar, n)?;
    let u = v - vbar;
    let un = u.dot(n);
    let impact_speed = un.abs();
    let e = model.value(impact_speed);
    let w = n * (0.5 * (1.0 + e) * un);
    Ok(CollisionOutcome {
        v_prime: v - w,
        vbar_prime: vbar + w,
        impact_speed,
        e_used: e,
        energy_loss: 0.5 * un * un * (1.0 - e * e),
    })
}

/// Closed-form kinetic energy drop `|u|^2 (1 - u_hat . sigma) / 4 (1 - e^2)`.
pub fn energy_dissipation(v: Vec3, vbar: Vec3, sigma: Vec3, model: &RestitutionModel) -> Result<f64> {
    Ok(post_collision_sigma(v, vbar, sigma, model)?.energy_loss)
}

/// The direction `sigma` induced by the impact direction `n`.
pub fn sigma_from_impact(u: Vec3, n: Vec3) -> Vec3 {
    let u_hat = u / u.norm();
    u_hat - n * (2.0 * u_hat.dot(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: Vec3, b: Vec3, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn elastic_sigma_example() {
        let o = post_collision_sigma(
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(-1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            &RestitutionModel::elastic(),
        )
        .unwrap();
        assert!(close(o.v_prime, Vec3::new(0.0, 1.0, 0.0), 1e-15));
        assert!(close(o.vbar_prime, Vec3::new(0.0, -1.0, 0.0), 1e-15));
        assert_eq!(o.energy_loss, 0.0);
    }

    #[test]
    fn sticky_sigma_example() {
        let o = post_collision_sigma(
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(-1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            &RestitutionModel::perfectly_inelastic(),
        )
        .unwrap();
        assert!(close(o.v_prime, Vec3::new(0.5, 0.5, 0.0), 1e-15));
        assert!(close(o.vbar_prime, Vec3::new(-0.5, -0.5, 0.0), 1e-15));
        assert!((o.energy_loss - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sigma_along_u_is_identity() {
        let v = Vec3::new(0.3, -1.2, 2.0);
        let vbar = Vec3::new(-0.7, 0.4, 0.1);
        let u = v - vbar;
        let sigma = u / u.norm();
        for m in [RestitutionModel::viscoelastic(0.12).unwrap(), RestitutionModel::perfectly_inelastic()] {
            let o = post_collision_sigma(v, vbar, sigma, &m).unwrap();
            assert!(close(o.v_prime, v, 1e-15) && close(o.vbar_prime, vbar, 1e-15));
            assert_eq!(o.energy_loss, 0.0);
            assert_eq!(o.impact_speed, 0.0);
        }
    }

    #[test]
    fn equal_velocities_are_a_no_op() {
        let v = Vec3::new(1.0, 2.0, 3.0);
        let o = post_collision_sigma(v, v, Vec3::new(0.0, 0.0, 1.0), &RestitutionModel::constant(0.5).unwrap()).unwrap();
        assert_eq!(o.v_prime, v);
        assert_eq!(o.vbar_prime, v);
        assert_eq!(o.energy_loss, 0.0);
    }

    #[test]
    fn impact_examples() {
        let v = Vec3::new(1.0, 0.0, 0.0);
        let vbar = Vec3::new(-1.0, 0.0, 0.0);
        let n = Vec3::new(1.0, 0.0, 0.0);
        let o = post_collision_impact(v, vbar, n, &RestitutionModel::elastic()).unwrap();
        assert!(close(o.v_prime, vbar, 1e-15) && close(o.vbar_prime, v, 1e-15));

        let o = post_collision_impact(v, vbar, n, &RestitutionModel::constant(0.5).unwrap()).unwrap();
        assert!(close(o.v_prime, Vec3::new(-0.5, 0.0, 0.0), 1e-15));
        assert!(close(o.vbar_prime, Vec3::new(0.5, 0.0, 0.0), 1e-15));

        let o = post_collision_impact(v, vbar, Vec3::new(0.0, 0.0, 1.0), &RestitutionModel::viscoelastic(0.12).unwrap()).unwrap();
        assert_eq!(o.v_prime, v);
        assert_eq!(o.vbar_prime, vbar);
    }

    #[test]
    fn dissipation_examples() {
        let v = Vec3::new(1.0, 0.0, 0.0);
        let vbar = Vec3::new(-1.0, 0.0, 0.0);
        let sigma = Vec3::new(0.0, 1.0, 0.0);
        assert_eq!(energy_dissipation(v, vbar, sigma, &RestitutionModel::elastic()).unwrap(), 0.0);
        let d = energy_dissipation(v, vbar, sigma, &RestitutionModel::perfectly_inelastic()).unwrap();
        assert!((d - 1.0).abs() < 1e-15);
        let d = energy_dissipation(v, vbar, Vec3::new(1.0, 0.0, 0.0), &RestitutionModel::perfectly_inelastic()).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = RestitutionModel::elastic();
        let v = Vec3::new(1.0, 0.0, 0.0);
        assert!(matches!(
            post_collision_sigma(v, -v, Vec3::new(0.0, 2.0, 0.0), &m),
            Err(Error::NotUnit { .. })
        ));
        assert!(post_collision_impact(Vec3::new(f64::NAN, 0.0, 0.0), v, v, &m).is_err());
    }

    fn unit(theta: f64, phi: f64) -> Vec3 {
        Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos())
    }

    proptest! {
        #[test]
        fn relative_speed_contracts(
            v in prop::array::uniform3(-5.0f64..5.0),
            w in prop::array::uniform3(-5.0f64..5.0),
            th in 0.0f64..std::f64::consts::PI,
            ph in 0.0f64..std::f64::consts::TAU,
            a in 0.01f64..1.0,
        ) {
            let (v, w) = (Vec3(v), Vec3(w));
            let o = post_collision_sigma(v, w, unit(th, ph), &RestitutionModel::viscoelastic(a).unwrap()).unwrap();
            prop_assert!((o.v_prime - o.vbar_prime).norm() <= (v - w).norm() * (1.0 + 1e-14));
            prop_assert!(o.energy_loss >= 0.0);
        }
    }
}
