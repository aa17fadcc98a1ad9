//! B-spline basis construction, evaluation and Galerkin matrix assembly.
//!
//! Every eigenproblem in the crate is discretized on splines built here. The
//! knot sequence is clamped (full multiplicity `k` at both ends), which makes
//! the first and last spline the only ones nonzero at the domain edges; the
//! callers drop them to impose regularity or the box boundary condition.

mod band;
mod knots;
mod quadrature;

pub use band::{BandMatrix, BandSymmetry};
pub use knots::{KnotVector, SplineValue, MAX_ORDER};
pub use quadrature::{gauss_legendre, QuadratureRule};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BasisError {
    #[error("spline order {0} is not supported (need 2 <= k <= {MAX_ORDER})")]
    InvalidOrder(usize),
    #[error("{n_splines} splines of order {order} is underdetermined (need n >= k)")]
    Underdetermined { n_splines: usize, order: usize },
    #[error("empty domain [{0}, {1}]")]
    EmptyDomain(f64, f64),
    #[error("breakpoints must be strictly increasing")]
    NonMonotoneBreakpoints,
    #[error("x = {x} outside spline domain [{a}, {b}]")]
    OutsideDomain { x: f64, a: f64, b: f64 },
    #[error("integrand not finite at quadrature node x = {x}")]
    NonFiniteIntegrand { x: f64 },
}

/// Which bilinear form to assemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    /// `∫ w B_i B_j`
    Overlap,
    /// `½ ∫ w B_i' B_j'`
    Kinetic,
    /// `∫ V B_i B_j`, the weight being the potential itself
    Potential,
    /// `∫ w B_i B_j'`
    FirstDerivative,
}

/// Assemble the banded Galerkin matrix of `kind` over all splines of `kv`.
pub fn assemble_band(
    kv: &KnotVector,
    quad: &QuadratureRule,
    weight: impl Fn(f64) -> f64,
    kind: OperatorKind,
) -> Result<BandMatrix, BasisError> {
    let k = kv.order();
    let n = kv.n_splines();
    let symmetry = match kind {
        OperatorKind::FirstDerivative => BandSymmetry::General,
        _ => BandSymmetry::Symmetric,
    };
    let mut m = BandMatrix::zeros(n, k - 1, symmetry);
    let mut v = [0.0; MAX_ORDER];
    let mut d = [0.0; MAX_ORDER];
    for interval in 0..kv.n_intervals() {
        for (x, qw) in quad.interval(interval) {
            let w = weight(x);
            if !w.is_finite() {
                return Err(BasisError::NonFiniteIntegrand { x });
            }
            let w = w * qw;
            kv.eval_interval(interval, x, &mut v, &mut d);
            for a in 0..k {
                let i = interval + a;
                match kind {
                    OperatorKind::Overlap | OperatorKind::Potential => {
                        for b in 0..=a {
                            m.add(i, interval + b, w * v[a] * v[b]);
                        }
                    }
                    OperatorKind::Kinetic => {
                        for b in 0..=a {
                            m.add(i, interval + b, 0.5 * w * d[a] * d[b]);
                        }
                    }
                    OperatorKind::FirstDerivative => {
                        for b in 0..k {
                            m.add(i, interval + b, w * v[a] * d[b]);
                        }
                    }
                }
            }
        }
    }
    Ok(m)
}

/// A knot vector, its quadrature rule and the range of splines kept after
/// dropping edge splines.
#[derive(Debug, Clone)]
pub struct SplineBasis {
    knots: KnotVector,
    quad: QuadratureRule,
    keep: std::ops::Range<usize>,
}

impl SplineBasis {
    pub fn new(knots: KnotVector, quad_points: usize, drop_first: bool, drop_last: bool) -> Self {
        let quad = QuadratureRule::new(&knots, quad_points.max(knots.order() + 1));
        let n = knots.n_splines();
        let keep = usize::from(drop_first)..n - usize::from(drop_last);
        Self { knots, quad, keep }
    }

    pub fn knots(&self) -> &KnotVector {
        &self.knots
    }

    pub fn quadrature(&self) -> &QuadratureRule {
        &self.quad
    }

    /// Indices (into the full spline set) of the kept splines.
    pub fn kept(&self) -> std::ops::Range<usize> {
        self.keep.clone()
    }

    pub fn len(&self) -> usize {
        self.keep.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keep.is_empty()
    }

    /// Assemble `kind` with weight `w` and restrict to the kept splines.
    pub fn assemble(&self, weight: impl Fn(f64) -> f64, kind: OperatorKind) -> Result<BandMatrix, BasisError> {
        Ok(assemble_band(&self.knots, &self.quad, weight, kind)?.sub(self.keep.clone()))
    }

    /// Evaluate `sum_i c_i B_i(x)` with `c` indexed over kept splines.
    pub fn eval_expansion(&self, coeffs: &[f64], x: f64) -> Result<f64, BasisError> {
        self.knots.eval_expansion(coeffs, self.keep.start, x)
    }
}
