//! One-parameter screened-Coulomb model atom.
//!
//! The potential interpolates between hydrogen (`α = 0`) and a more (`α > 0`)
//! or less (`α < 0`) tightly bound one-electron atom while keeping the
//! `-1/r` tail, so the ionisation potential can be matched to a molecule.

use crate::basis::{EigenBasis, EigenBlock, SymmetryBlock};
use crate::bspline::{BasisError, KnotVector, OperatorKind, SplineBasis};
use crate::coupling::{CouplingBlock, DipoleCouplingSet, Orientation};
use crate::linalg::{fix_signs, generalized_eigh, sandwich, LinalgError};
use faer::Mat;
use rayon::prelude::*;
use thiserror::Error;

/// Hydrogen ionisation potential in hartree.
pub const IP_HYDROGEN: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AtomError {
    #[error("invalid model-atom spec: {0}")]
    InvalidSpec(String),
    #[error("potential evaluated at r = {0} (need r > 0)")]
    NonPositiveRadius(f64),
    #[error("basis: {0}")]
    Basis(#[from] BasisError),
    #[error("eigenproblem for l = {l} failed: {source}")]
    Eigen { l: u32, source: LinalgError },
    #[error("target Ip {0} outside [0.05, 5] hartree")]
    TargetOutOfRange(f64),
    #[error("could not bracket alpha for target Ip {target} (searched up to |alpha| = {limit})")]
    Bracketing { target: f64, limit: f64 },
}

/// Screening parameter, box and radial basis for the model atom.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelAtomSpec {
    pub alpha: f64,
    pub r_max: f64,
    pub n_splines: usize,
    pub order: usize,
    pub l_max: u32,
    /// Gauss points per knot interval.
    pub quad_points: usize,
}

impl ModelAtomSpec {
    /// Box of 350 bohr, 350 splines of order 15.
    pub fn default_preset(alpha: f64) -> Self {
        Self {
            alpha,
            r_max: 350.0,
            n_splines: 350,
            order: 15,
            l_max: 6,
            quad_points: 24,
        }
    }

    /// Box of 120 bohr, 140 splines of order 8.
    pub fn fast_preset(alpha: f64) -> Self {
        Self {
            alpha,
            r_max: 120.0,
            n_splines: 140,
            order: 8,
            l_max: 4,
            quad_points: 20,
        }
    }

    pub fn with_l_max(mut self, l_max: u32) -> Self {
        self.l_max = l_max;
        self
    }

    pub fn validate(&self) -> Result<(), AtomError> {
        if !(self.r_max > 0.0 && self.r_max.is_finite()) {
            return Err(AtomError::InvalidSpec(format!("r_max = {} must be positive", self.r_max)));
        }
        if !self.alpha.is_finite() {
            return Err(AtomError::InvalidSpec("alpha must be finite".into()));
        }
        if self.n_splines < self.order + 2 {
            return Err(AtomError::InvalidSpec(format!(
                "{} splines of order {} leave no interior functions",
                self.n_splines, self.order
            )));
        }
        Ok(())
    }

    /// Radial spline basis with the `r = 0` and `r = r_max` splines removed.
    pub fn radial_basis(&self) -> Result<SplineBasis, AtomError> {
        self.validate()?;
        let kv = KnotVector::linear(self.n_splines, self.order, 0.0, self.r_max)?;
        Ok(SplineBasis::new(kv, self.quad_points, true, true))
    }
}

/// `V(r) = -(1/r) {1 + sign(α) exp(-2r/√|α|)}`; the exponential is absent
/// for `α = 0`.
pub fn potential(r: f64, alpha: f64) -> Result<f64, AtomError> {
    if !(r > 0.0) {
        return Err(AtomError::NonPositiveRadius(r));
    }
    Ok(potential_unchecked(r, alpha))
}

fn potential_unchecked(r: f64, alpha: f64) -> f64 {
    if alpha == 0.0 {
        return -1.0 / r;
    }
    let screen = alpha.signum() * (-2.0 * r / alpha.abs().sqrt()).exp();
    -(1.0 + screen) / r
}

/// Closed-form estimate `Ip(H) + α / (1 + √|α|)^s`, `s = 1` for `α > 0` and
/// `s = 11/4` for `α < 0`.
pub fn ip_approx(alpha: f64) -> f64 {
    let s = if alpha > 0.0 { 1.0 } else { 2.75 };
    IP_HYDROGEN + alpha / (1.0 + alpha.abs().sqrt()).powf(s)
}

/// Radial eigenstates `u_{nl}(r) = r R_{nl}(r)` for every `l <= l_max`.
#[derive(Debug, Clone)]
pub struct AtomicEigenBasis {
    pub spec: ModelAtomSpec,
    pub radial: SplineBasis,
    pub basis: EigenBasis,
}

impl AtomicEigenBasis {
    pub fn block(&self, l: u32) -> &EigenBlock {
        &self.basis.blocks[l as usize]
    }

    pub fn ground_energy(&self) -> f64 {
        self.basis.ground_energy()
    }

    /// `u(r)` of state `n` (0-based) in block `l`.
    pub fn radial_function(&self, l: u32, n: usize, r: f64) -> Result<f64, AtomError> {
        let c = self.block(l).coefficients.col(n);
        let coeffs: Vec<f64> = (0..c.nrows()).map(|i| c[i]).collect();
        Ok(self.radial.eval_expansion(&coeffs, r)?)
    }
}

struct RadialMatrices {
    overlap: Mat<f64>,
    field_free: Mat<f64>,
    centrifugal: Mat<f64>,
}

fn radial_matrices(spec: &ModelAtomSpec, radial: &SplineBasis) -> Result<RadialMatrices, AtomError> {
    let alpha = spec.alpha;
    let s = radial.assemble(|_| 1.0, OperatorKind::Overlap)?.to_dense();
    let t = radial.assemble(|_| 1.0, OperatorKind::Kinetic)?.to_dense();
    let v = radial.assemble(|r| potential_unchecked(r, alpha), OperatorKind::Potential)?.to_dense();
    let c = radial.assemble(|r| 0.5 / (r * r), OperatorKind::Overlap)?.to_dense();
    Ok(RadialMatrices {
        overlap: s,
        field_free: t + v,
        centrifugal: c,
    })
}

fn solve_l(m: &RadialMatrices, l: u32) -> Result<EigenBlock, AtomError> {
    let ll = f64::from(l * (l + 1));
    let h = &m.field_free + &m.centrifugal * faer::Scale(ll);
    let mut ep = generalized_eigh(h.as_ref(), m.overlap.as_ref()).map_err(|source| AtomError::Eigen { l, source })?;
    fix_signs(&mut ep.vectors);
    Ok(EigenBlock {
        label: SymmetryBlock::Atomic { l },
        energies: ep.values,
        coefficients: ep.vectors,
    })
}

/// Solve the radial generalized eigenproblem for `l = 0..=l_max`.
pub fn solve_atom(spec: &ModelAtomSpec) -> Result<AtomicEigenBasis, AtomError> {
    let radial = spec.radial_basis()?;
    let mats = radial_matrices(spec, &radial)?;
    let blocks = (0..=spec.l_max)
        .into_par_iter()
        .map(|l| solve_l(&mats, l))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(AtomicEigenBasis {
        spec: spec.clone(),
        radial,
        basis: EigenBasis { blocks, threshold: 0.0 },
    })
}

/// Numerically computed ionisation potential `-E_1s` for `spec`.
pub fn ionisation_potential(spec: &ModelAtomSpec) -> Result<f64, AtomError> {
    let radial = spec.radial_basis()?;
    let mats = radial_matrices(spec, &radial)?;
    let h = &mats.field_free;
    let ep = generalized_eigh(h.as_ref(), mats.overlap.as_ref()).map_err(|source| AtomError::Eigen { l: 0, source })?;
    Ok(-ep.values[0])
}

/// Find `α` such that the computed ground-state binding energy equals
/// `target_ip` (to 1e-7 hartree), starting from the closed-form estimate.
pub fn calibrate_alpha(target_ip: f64, spec: &ModelAtomSpec) -> Result<f64, AtomError> {
    if !(0.05..=5.0).contains(&target_ip) {
        return Err(AtomError::TargetOutOfRange(target_ip));
    }
    let ip_at = |alpha: f64| -> Result<f64, AtomError> {
        let s = ModelAtomSpec { alpha, ..spec.clone() };
        Ok(ionisation_potential(&s)? - target_ip)
    };
    const LIMIT: f64 = 1.0e4;

    // invert the closed-form estimate (monotone in α) for a starting point
    let (mut lo, mut hi) = (-LIMIT, LIMIT);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ip_approx(mid) < target_ip {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let guess = 0.5 * (lo + hi);

    // expand a bracket around the guess
    let mut step = 0.01_f64.max(0.05 * guess.abs());
    let f0 = ip_at(guess)?;
    if f0 == 0.0 {
        return Ok(guess);
    }
    let (mut a, mut fa, mut b, mut fb);
    let dir = if f0 < 0.0 { 1.0 } else { -1.0 };
    a = guess;
    fa = f0;
    loop {
        b = a + dir * step;
        if b.abs() > LIMIT {
            return Err(AtomError::Bracketing { target: target_ip, limit: LIMIT });
        }
        fb = ip_at(b)?;
        if fa.signum() != fb.signum() {
            break;
        }
        a = b;
        fa = fb;
        step *= 2.0;
    }
    if a > b {
        std::mem::swap(&mut a, &mut b);
        std::mem::swap(&mut fa, &mut fb);
    }
    // bisection: Ip(α) is monotone increasing
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        let fm = ip_at(mid)?;
        if fm.abs() <= 1e-8 || (b - a) < 1e-13 {
            return Ok(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Angular factor `<l+1, 0| cos θ |l, 0>`.
fn angular_up(l: u32) -> f64 {
    let l = f64::from(l);
    (l + 1.0) / ((2.0 * l + 1.0) * (2.0 * l + 3.0)).sqrt()
}

/// Velocity-gauge couplings `<n' l+1| ∂/∂z |n l>` between adjacent `l`
/// blocks, `m = 0` throughout (polarisation along the quantization axis).
pub fn atomic_dipole_set(atom: &AtomicEigenBasis) -> Result<DipoleCouplingSet, AtomError> {
    let radial = &atom.radial;
    let d = radial.assemble(|_| 1.0, OperatorKind::FirstDerivative)?.to_dense();
    let w = radial.assemble(|r| 1.0 / r, OperatorKind::Overlap)?.to_dense();
    let l_max = atom.basis.blocks.len() as u32 - 1;
    let blocks = (0..l_max)
        .into_par_iter()
        .map(|l| {
            // <u'| d/dr - (l+1)/r |u>
            let op = &d - &w * faer::Scale(f64::from(l + 1));
            let m = sandwich(
                atom.block(l + 1).coefficients.as_ref(),
                op.as_ref(),
                atom.block(l).coefficients.as_ref(),
            ) * faer::Scale(angular_up(l));
            CouplingBlock {
                row: (l + 1) as usize,
                col: l as usize,
                matrix: m,
            }
        })
        .collect();
    Ok(DipoleCouplingSet {
        orientation: Orientation::Atom,
        blocks,
    })
}

/// Length-gauge `<n' l+1| z |n l>`, for gauge cross-checks only. The
/// mirrored blocks are `+transpose` (z is symmetric); they are returned
/// as (row, col) pairs with `row = l + 1`.
pub fn atomic_length_blocks(atom: &AtomicEigenBasis) -> Result<Vec<CouplingBlock>, AtomError> {
    let r = atom.radial.assemble(|r| r, OperatorKind::Overlap)?.to_dense();
    let l_max = atom.basis.blocks.len() as u32 - 1;
    Ok((0..l_max)
        .map(|l| CouplingBlock {
            row: (l + 1) as usize,
            col: l as usize,
            matrix: sandwich(
                atom.block(l + 1).coefficients.as_ref(),
                r.as_ref(),
                atom.block(l).coefficients.as_ref(),
            ) * faer::Scale(angular_up(l)),
        })
        .collect())
}
