//! Angular collision kernels `b(s)`, `s = u_hat . sigma`, normalized so that
//! `2 pi * int_{-1}^{1} b(s) ds = 1`.

use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::vec3::Vec3;

const NORM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Default)]
pub enum AngularKernel {
    /// `b = 1 / (4 pi)`, true hard spheres.
    #[default]
    Isotropic,
    /// Piecewise-linear `b` through `(s_i, b_i)` with `s_0 = -1`, `s_last = 1`.
    Tabulated { s: Vec<f64>, b: Vec<f64> },
}

impl AngularKernel {
    /// Builds a tabulated kernel, rescaling it to unit mass on the sphere if
    /// needed.
    pub fn tabulated(s: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if s.len() != b.len() || s.len() < 2 {
            return Err(Error::InvalidParam("kernel table needs at least two (s, b) rows".into()));
        }
        if s[0] != -1.0 || s[s.len() - 1] != 1.0 {
            return Err(Error::InvalidParam("kernel table must span s in [-1, 1]".into()));
        }
        if s.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParam("kernel abscissae must be strictly increasing".into()));
        }
        if b.iter().any(|&x| !x.is_finite() || x < 0.0) {
            return Err(Error::InvalidParam("kernel values must be finite and >= 0".into()));
        }
        let mut kernel = AngularKernel::Tabulated { s, b };
        let mass = kernel.sphere_mass();
        if !(mass > 0.0) {
            return Err(Error::InvalidParam("kernel has zero mass".into()));
        }
        if (mass - 1.0).abs() > NORM_TOL {
            log::warn!("angular kernel mass is {mass}; rescaling to 1");
            if let AngularKernel::Tabulated { b, .. } = &mut kernel {
                b.iter_mut().for_each(|x| *x /= mass);
            }
        }
        Ok(kernel)
    }

    /// Reads a two-column `s b(s)` text table; `#` starts a comment.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_table(&text)
    }

    pub fn parse_table(text: &str) -> Result<Self> {
        let mut s = Vec::new();
        let mut b = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()).collect();
            if cols.len() != 2 {
                return Err(Error::InvalidParam(format!("kernel table line {}: expected two columns", lineno + 1)));
            }
            let parse = |t: &str| {
                t.parse::<f64>()
                    .map_err(|_| Error::InvalidParam(format!("kernel table line {}: bad number `{t}`", lineno + 1)))
            };
            s.push(parse(cols[0])?);
            b.push(parse(cols[1])?);
        }
        Self::tabulated(s, b)
    }

    pub fn is_isotropic(&self) -> bool {
        matches!(self, AngularKernel::Isotropic)
    }

    #[inline]
    pub fn value(&self, s: f64) -> f64 {
        match self {
            AngularKernel::Isotropic => 1.0 / (4.0 * PI),
            AngularKernel::Tabulated { s: xs, b } => {
                let s = s.clamp(-1.0, 1.0);
                let k = xs.partition_point(|&x| x <= s).clamp(1, xs.len() - 1);
                let (x0, x1) = (xs[k - 1], xs[k]);
                let t = (s - x0) / (x1 - x0);
                b[k - 1] + t * (b[k] - b[k - 1])
            }
        }
    }

    pub fn max_value(&self) -> f64 {
        match self {
            AngularKernel::Isotropic => 1.0 / (4.0 * PI),
            AngularKernel::Tabulated { b, .. } => b.iter().copied().fold(0.0, f64::max),
        }
    }

    /// Breakpoints of the piecewise-linear table (empty for the isotropic kernel).
    pub fn breakpoints(&self) -> &[f64] {
        match self {
            AngularKernel::Isotropic => &[],
            AngularKernel::Tabulated { s, .. } => s,
        }
    }

    /// `2 pi * int_{-1}^{1} b(s) ds`, exact for the piecewise-linear table.
    pub fn sphere_mass(&self) -> f64 {
        match self {
            AngularKernel::Isotropic => 1.0,
            AngularKernel::Tabulated { s, b } => {
                let trap: f64 = s.windows(2).zip(b.windows(2)).map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1])).sum();
                2.0 * PI * trap
            }
        }
    }

    /// `||b||_{L^q(S^2)} = (2 pi int |b|^q ds)^(1/q)`; `q = inf` gives the sup norm.
    pub fn lq_norm(&self, q: f64) -> f64 {
        if q.is_infinite() {
            return self.max_value();
        }
        match self {
            AngularKernel::Isotropic => (4.0 * PI).powf(1.0 / q - 1.0),
            AngularKernel::Tabulated { s, .. } => {
                let mut acc = 0.0;
                for w in s.windows(2) {
                    acc += crate::quadrature::gauss_legendre(|x| self.value(x).powf(q), w[0], w[1], 20);
                }
                (2.0 * PI * acc).powf(1.0 / q)
            }
        }
    }

    /// Draws `sigma` on the unit sphere with density proportional to
    /// `b(u_hat . sigma)`. Anisotropic kernels use rejection against `max b`.
    pub fn sample_sigma<R: Rng + ?Sized>(&self, u_hat: Vec3, rng: &mut R) -> Vec3 {
        match self {
            AngularKernel::Isotropic => uniform_on_sphere(rng),
            AngularKernel::Tabulated { .. } => {
                let bmax = self.max_value();
                loop {
                    let sigma = uniform_on_sphere(rng);
                    if rng.random::<f64>() * bmax <= self.value(u_hat.dot(sigma)) {
                        return sigma;
                    }
                }
            }
        }
    }
}

/// Uniform direction on the unit sphere: `cos(theta)` uniform on `[-1, 1]`
/// and azimuth uniform on `[0, 2 pi)`.
#[inline]
pub fn uniform_on_sphere<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    let z: f64 = 2.0 * rng.random::<f64>() - 1.0;
    let phi: f64 = 2.0 * PI * rng.random::<f64>();
    let rho = (1.0 - z * z).max(0.0).sqrt();
    let (sin, cos) = phi.sin_cos();
    Vec3::new(rho * cos, rho * sin, z)
}
