//! Complex `M = ±Λ` orbitals and their reflection-symmetric real
//! combinations.

use super::{u_pow, v_pow};
use crate::basis::Parity;
use crate::bspline::SplineBasis;
use std::f64::consts::PI;

/// `ψ = s^Λ g(ξ, η) e^{iMφ}/√(2π)`, `|M| = Λ`, with `g` real. Because `g`
/// is real, reflection in a plane containing the axis (`φ → -φ`) is the
/// same as complex conjugation.
#[derive(Debug, Clone)]
pub struct ComplexOrbital {
    pub lambda: u32,
    pub m: i32,
    pub parity: Parity,
    pub energy: f64,
    /// `g` over kept ξ splines ⊗ all `η` splines, index `i_ξ · n_η + i_η`.
    pub coefficients: Vec<f64>,
    pub(crate) xi: SplineBasis,
    pub(crate) eta: SplineBasis,
    pub(crate) r: f64,
}

/// `φ = s^Λ g(ξ, η) cos(Λφ)/√π` for `Λ > 0`, `s^0 g/√(2π)` for `Λ = 0`.
#[derive(Debug, Clone)]
pub struct RealOrbital {
    pub lambda: u32,
    pub parity: Parity,
    pub energy: f64,
    pub coefficients: Vec<f64>,
    pub(crate) xi: SplineBasis,
    pub(crate) eta: SplineBasis,
    pub(crate) r: f64,
}

#[derive(Debug, Clone)]
pub struct SymmetrizedOrbital {
    pub orbital: RealOrbital,
    /// Set for `Λ = 0`, where the orbital is already real and is returned
    /// as is.
    pub unchanged: bool,
}

fn eval_g(xi: &SplineBasis, eta: &SplineBasis, c: &[f64], x: f64, y: f64) -> f64 {
    let n_eta = eta.len();
    let kept = xi.kept();
    let (Ok(bx), Ok(by)) = (xi.knots().eval(x), eta.knots().eval(y)) else {
        return 0.0;
    };
    let mut sum = 0.0;
    for sx in &bx {
        if !kept.contains(&sx.index) {
            continue;
        }
        let a = sx.index - kept.start;
        for sy in &by {
            sum += c[a * n_eta + sy.index] * sx.value * sy.value;
        }
    }
    sum
}

/// `∫∫ (R/2)³ (ξ² - η²) f² dξ dη` by tensor Gauss-Legendre quadrature.
fn spatial_norm(xi: &SplineBasis, eta: &SplineBasis, c: &[f64], lambda: u32, r: f64) -> f64 {
    let vol = (0.5 * r).powi(3);
    let qx = xi.quadrature();
    let qy = eta.quadrature();
    let mut total = 0.0;
    for (&x, &wx) in qx.points().iter().zip(qx.weights()) {
        for (&y, &wy) in qy.points().iter().zip(qy.weights()) {
            let g = eval_g(xi, eta, c, x, y);
            total += wx * wy * (x * x - y * y) * u_pow(x, lambda) * v_pow(y, lambda) * g * g;
        }
    }
    vol * total
}

fn s_pow(x: f64, y: f64, lambda: u32) -> f64 {
    ((x * x - 1.0) * (1.0 - y * y)).max(0.0).sqrt().powi(lambda as i32)
}

impl ComplexOrbital {
    /// `s^Λ g(ξ, η)`.
    pub fn radial(&self, xi: f64, eta: f64) -> f64 {
        s_pow(xi, eta, self.lambda) * eval_g(&self.xi, &self.eta, &self.coefficients, xi, eta)
    }

    /// `(Re ψ, Im ψ)` at `(ξ, η, φ)`.
    pub fn value(&self, xi: f64, eta: f64, phi: f64) -> (f64, f64) {
        let f = self.radial(xi, eta) / (2.0 * PI).sqrt();
        let a = f64::from(self.m) * phi;
        (f * a.cos(), f * a.sin())
    }

    pub fn conj(&self) -> Self {
        Self {
            m: -self.m,
            ..self.clone()
        }
    }

    /// Reflection `φ → -φ`.
    pub fn reflect(&self) -> Self {
        Self {
            m: -self.m,
            ..self.clone()
        }
    }

    /// Norm of the `(ξ, η)` part; the azimuthal factor has unit norm.
    pub fn spatial_norm(&self) -> f64 {
        spatial_norm(&self.xi, &self.eta, &self.coefficients, self.lambda, self.r)
    }
}

impl RealOrbital {
    pub fn radial(&self, xi: f64, eta: f64) -> f64 {
        s_pow(xi, eta, self.lambda) * eval_g(&self.xi, &self.eta, &self.coefficients, xi, eta)
    }

    pub fn value(&self, xi: f64, eta: f64, phi: f64) -> f64 {
        let f = self.radial(xi, eta);
        if self.lambda == 0 {
            f / (2.0 * PI).sqrt()
        } else {
            f * (f64::from(self.lambda) * phi).cos() / PI.sqrt()
        }
    }

    pub fn spatial_norm(&self) -> f64 {
        spatial_norm(&self.xi, &self.eta, &self.coefficients, self.lambda, self.r)
    }
}

/// `(ψ + ψ*)/√2`; a `Λ = 0` orbital is returned unchanged and flagged.
pub fn symmetrize_degenerate(psi: &ComplexOrbital) -> SymmetrizedOrbital {
    SymmetrizedOrbital {
        orbital: RealOrbital {
            lambda: psi.lambda,
            parity: psi.parity,
            energy: psi.energy,
            coefficients: psi.coefficients.clone(),
            xi: psi.xi.clone(),
            eta: psi.eta.clone(),
            r: psi.r,
        },
        unchanged: psi.lambda == 0,
    }
}
