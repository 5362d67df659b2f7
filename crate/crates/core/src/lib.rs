//! Kinetic laboratory for spatially homogeneous granular gases.
//!
//! The crate contains a direct simulation Monte Carlo (DSMC) solver for the
//! inelastic Boltzmann equation with hard-sphere collision rate and
//! impact-velocity dependent restitution, together with the deterministic
//! numerics used to check it: the dissipation functional and its cooling
//! ODE, Povzner moment constants, self-similar rescaling, and power-law and
//! tail diagnostics.
//!
//! With the default `parallel` feature, independent replicas and large
//! per-particle reductions run on the rayon thread pool. Results are bitwise
//! identical with and without the feature.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cooling;
pub mod diagnostics;
pub mod dsmc;
pub mod error;
pub mod kernel;
pub mod kinematics;
pub mod ode;
pub mod par;
pub mod povzner;
pub mod quadrature;
pub mod restitution;
pub mod selfsim;
pub mod vec3;

pub use error::{Error, Result};
pub use kernel::AngularKernel;
pub use restitution::RestitutionModel;
pub use vec3::Vec3;
