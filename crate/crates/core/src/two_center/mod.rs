//! One-electron homonuclear diatomic (H₂⁺-like) in prolate spheroidal
//! coordinates `ξ = (r₁ + r₂)/R`, `η = (r₁ - r₂)/R`, `φ`.
//!
//! Orbitals are `ψ = s^Λ g(ξ, η) e^{iMφ}/√(2π)` with
//! `s = √((ξ²-1)(1-η²))` and `g` expanded in a tensor product of
//! B-splines. Factoring out `s^Λ` makes every matrix element a sum of
//! separable integrals with polynomial weights, so Gauss-Legendre
//! quadrature is exact and the Coulomb singularities disappear.

mod dipole;
mod orbital;

pub use dipole::{explicit_m_system, molecular_dipole_set, molecular_length_blocks};
pub use orbital::{symmetrize_degenerate, ComplexOrbital, RealOrbital, SymmetrizedOrbital};

use crate::basis::{Component, EigenBasis, EigenBlock, Parity, SymmetryBlock};
use crate::bspline::{BasisError, KnotVector, OperatorKind, SplineBasis};
use crate::linalg::{fix_signs, generalized_eigh, kron, LinalgError};
use faer::{Mat, MatRef, Scale};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TwoCenterError {
    #[error("invalid two-center spec: {0}")]
    InvalidSpec(String),
    #[error("basis: {0}")]
    Basis(#[from] BasisError),
    #[error("eigenproblem for block {block} failed: {source}")]
    Eigen { block: SymmetryBlock, source: LinalgError },
    #[error("block {0} is not part of this basis")]
    UnknownBlock(SymmetryBlock),
    #[error("ground energy changed by {delta:e} between basis refinements (tolerance {tol:e})")]
    NotConverged { delta: f64, tol: f64 },
}

/// Geometry, box and basis sizes for the two-center problem. Both nuclei
/// carry unit charge.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoCenterSpec {
    /// Internuclear distance in bohr.
    pub r: f64,
    pub xi_max: f64,
    pub xi_splines: usize,
    pub xi_order: usize,
    pub eta_splines: usize,
    pub eta_order: usize,
    pub lambda_max: u32,
    /// Add the nuclear repulsion `1/R` to reported energies.
    pub include_repulsion: bool,
    /// Gauss points per knot interval.
    pub quad_points: usize,
    /// Drop states whose `η` part has more sign changes than this.
    pub eta_node_limit: Option<usize>,
}

impl TwoCenterSpec {
    /// Box with major semi-axis `box_radius`.
    pub fn with_box(r: f64, box_radius: f64) -> Self {
        Self {
            r,
            xi_max: 2.0 * box_radius / r,
            xi_splines: 120,
            xi_order: 10,
            eta_splines: 24,
            eta_order: 8,
            lambda_max: 3,
            include_repulsion: true,
            quad_points: 20,
            eta_node_limit: None,
        }
    }

    /// 120 bohr box, ξ: 120 splines of order 10, η: 24 of order 8, `Λ <= 3`.
    pub fn default_preset(r: f64) -> Self {
        Self::with_box(r, 120.0)
    }

    /// Default preset with `Λ <= 5`, to check convergence in `Λ_max`.
    pub fn convergence_preset(r: f64) -> Self {
        Self {
            lambda_max: 5,
            ..Self::default_preset(r)
        }
    }

    /// 25 bohr box with a coarse basis; 114 states per block.
    pub fn small_preset(r: f64) -> Self {
        Self {
            xi_splines: 20,
            xi_order: 6,
            eta_splines: 12,
            eta_order: 6,
            lambda_max: 2,
            quad_points: 12,
            ..Self::with_box(r, 25.0)
        }
    }

    pub fn with_lambda_max(mut self, lambda_max: u32) -> Self {
        self.lambda_max = lambda_max;
        self
    }

    pub fn validate(&self) -> Result<(), TwoCenterError> {
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(TwoCenterError::InvalidSpec(format!("R = {} must be positive", self.r)));
        }
        if !(self.xi_max > 1.0 && self.xi_max.is_finite()) {
            return Err(TwoCenterError::InvalidSpec(format!("xi_max = {} must exceed 1", self.xi_max)));
        }
        if self.xi_splines < self.xi_order + 1 {
            return Err(TwoCenterError::InvalidSpec(format!(
                "{} xi splines of order {} leave no interior functions",
                self.xi_splines, self.xi_order
            )));
        }
        if self.eta_splines < self.eta_order || self.eta_splines < 2 {
            return Err(TwoCenterError::InvalidSpec(format!(
                "{} eta splines of order {} are too few",
                self.eta_splines, self.eta_order
            )));
        }
        Ok(())
    }

    /// Energy offset added to electronic energies.
    pub fn energy_shift(&self) -> f64 {
        if self.include_repulsion {
            1.0 / self.r
        } else {
            0.0
        }
    }

    /// Onset of the electronic continuum in the reported energy convention.
    pub fn threshold(&self) -> f64 {
        self.energy_shift()
    }

    /// `(R/2)³`, the constant part of the volume element.
    fn volume(&self) -> f64 {
        (0.5 * self.r).powi(3)
    }

    /// Every `(Λ, parity)` label up to `Λ_max`, σg first.
    pub fn blocks(&self) -> Vec<SymmetryBlock> {
        (0..=self.lambda_max)
            .flat_map(|l| [Parity::Gerade, Parity::Ungerade].map(|p| SymmetryBlock::diatomic(l, p)))
            .collect()
    }
}

/// Symmetry of `g` under `η → -η`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EtaParity {
    Even,
    Odd,
}

/// Inversion maps `(ξ, η, φ) → (ξ, -η, φ + π)`, so the inversion parity is
/// the `η` parity of `g` times `(-1)^Λ`.
pub fn eta_parity(lambda: u32, parity: Parity) -> EtaParity {
    let even = (lambda % 2 == 0) == (parity == Parity::Gerade);
    if even {
        EtaParity::Even
    } else {
        EtaParity::Odd
    }
}

fn block_quantum_numbers(block: SymmetryBlock) -> Result<(u32, Parity), TwoCenterError> {
    match block {
        SymmetryBlock::Diatomic { lambda, parity, .. } => Ok((lambda, parity)),
        other => Err(TwoCenterError::UnknownBlock(other)),
    }
}

/// Dense one-dimensional operator matrices on one coordinate.
pub(crate) struct Axis {
    pub basis: SplineBasis,
    /// Columns span the subspace used for the eigenproblem.
    pub proj_even: Mat<f64>,
    pub proj_odd: Mat<f64>,
}

impl Axis {
    /// `∫ w B_i B_j`
    pub fn a(&self, w: impl Fn(f64) -> f64) -> Result<Mat<f64>, BasisError> {
        Ok(self.basis.assemble(w, OperatorKind::Overlap)?.to_dense())
    }

    /// `∫ w B_i' B_j'`
    pub fn k(&self, w: impl Fn(f64) -> f64) -> Result<Mat<f64>, BasisError> {
        Ok(self.basis.assemble(w, OperatorKind::Kinetic)?.to_dense() * Scale(2.0))
    }

    /// `∫ w B_i B_j'`
    pub fn d(&self, w: impl Fn(f64) -> f64) -> Result<Mat<f64>, BasisError> {
        Ok(self.basis.assemble(w, OperatorKind::FirstDerivative)?.to_dense())
    }

    pub fn proj(&self, p: EtaParity) -> MatRef<'_, f64> {
        match p {
            EtaParity::Even => self.proj_even.as_ref(),
            EtaParity::Odd => self.proj_odd.as_ref(),
        }
    }

    /// `Pᵀ_row M P_col`
    pub fn project(&self, m: Mat<f64>, row: EtaParity, col: EtaParity) -> Mat<f64> {
        self.proj(row).transpose() * m * self.proj(col)
    }
}

/// Even and odd combinations `B_i ± B_{n-1-i}` of a basis whose knots are
/// symmetric about zero, normalized to unit coefficient norm.
fn parity_projections(n: usize) -> (Mat<f64>, Mat<f64>) {
    let half = n / 2;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let n_even = n - half;
    let mut even = Mat::zeros(n, n_even);
    let mut odd = Mat::zeros(n, half);
    for i in 0..half {
        even[(i, i)] = h;
        even[(n - 1 - i, i)] = h;
        odd[(i, i)] = h;
        odd[(n - 1 - i, i)] = -h;
    }
    if n % 2 == 1 {
        even[(half, half)] = 1.0;
    }
    (even, odd)
}

fn xi_axis(spec: &TwoCenterSpec) -> Result<Axis, TwoCenterError> {
    let kv = KnotVector::linear(spec.xi_splines, spec.xi_order, 1.0, spec.xi_max)?;
    // g may be nonzero on the axis between the nuclei (ξ = 1); the last
    // spline is dropped for the box boundary condition
    let basis = SplineBasis::new(kv, spec.quad_points, false, true);
    let id = Mat::identity(basis.len(), basis.len());
    Ok(Axis {
        basis,
        proj_even: id.clone(),
        proj_odd: id,
    })
}

fn eta_axis(spec: &TwoCenterSpec) -> Result<Axis, TwoCenterError> {
    let kv = KnotVector::linear(spec.eta_splines, spec.eta_order, -1.0, 1.0)?;
    let basis = SplineBasis::new(kv, spec.quad_points, false, false);
    let (proj_even, proj_odd) = parity_projections(basis.len());
    Ok(Axis {
        basis,
        proj_even,
        proj_odd,
    })
}

/// Field-free eigenstates of every `(Λ, parity)` block up to `Λ_max`.
/// Coefficients of a block are indexed `i_ξ · n_η + i_η` over the kept
/// ξ splines and the `η` splines of the block's `η` parity.
#[derive(Debug, Clone)]
pub struct MolecularEigenBasis {
    pub spec: TwoCenterSpec,
    pub basis: EigenBasis,
    pub(crate) xi: SplineBasis,
    pub(crate) eta: SplineBasis,
}

impl MolecularEigenBasis {
    pub(crate) fn axes(&self) -> (Axis, Axis) {
        let id = Mat::identity(self.xi.len(), self.xi.len());
        let (proj_even, proj_odd) = parity_projections(self.eta.len());
        (
            Axis {
                basis: self.xi.clone(),
                proj_even: id.clone(),
                proj_odd: id,
            },
            Axis {
                basis: self.eta.clone(),
                proj_even,
                proj_odd,
            },
        )
    }

    pub fn block(&self, label: SymmetryBlock) -> Option<&EigenBlock> {
        self.basis.blocks.iter().find(|b| b.label == label)
    }

    pub fn ground_energy(&self) -> f64 {
        self.basis.ground_energy()
    }

    /// Orbital `n` of block `label` as the complex `M = +Λ` function.
    pub fn orbital(&self, label: SymmetryBlock, n: usize) -> Result<ComplexOrbital, TwoCenterError> {
        let (lambda, parity) = block_quantum_numbers(label)?;
        let block = self.block(label).ok_or(TwoCenterError::UnknownBlock(label))?;
        let (_, eta) = self.axes();
        let p = eta.proj(eta_parity(lambda, parity));
        let n_xi = self.xi.len();
        let n_eta = self.eta.len();
        let np = p.ncols();
        let c = block.coefficients.col(n);
        let mut full = vec![0.0; n_xi * n_eta];
        for a in 0..n_xi {
            for j in 0..n_eta {
                full[a * n_eta + j] = (0..np).map(|b| p[(j, b)] * c[a * np + b]).sum();
            }
        }
        Ok(ComplexOrbital {
            lambda,
            m: lambda as i32,
            parity,
            energy: block.energies[n],
            coefficients: full,
            xi: self.xi.clone(),
            eta: self.eta.clone(),
            r: self.spec.r,
        })
    }
}

pub(crate) fn u_pow(x: f64, m: u32) -> f64 {
    (x * x - 1.0).powi(m as i32)
}

pub(crate) fn v_pow(x: f64, m: u32) -> f64 {
    (1.0 - x * x).powi(m as i32)
}

struct BlockMatrices {
    s: Mat<f64>,
    h: Mat<f64>,
}

/// Overlap and electronic Hamiltonian of one `Λ` in the product basis.
/// The `η` weights are evaluated at `sign · η`, and every `η` matrix is
/// passed through `eta_side` (parity projection or reordering).
fn block_matrices(
    spec: &TwoCenterSpec,
    xi: &Axis,
    eta: &SplineBasis,
    sign: f64,
    eta_side: impl Fn(Mat<f64>) -> Mat<f64>,
    lambda: u32,
) -> Result<BlockMatrices, TwoCenterError> {
    let m = lambda;
    let mm = f64::from(m * (m + 1));
    let c = spec.volume();
    let r = spec.r;
    let ea = |w: &dyn Fn(f64) -> f64| -> Result<Mat<f64>, BasisError> {
        Ok(eta_side(eta.assemble(|y| w(sign * y), OperatorKind::Overlap)?.to_dense()))
    };

    let ax_w = xi.a(|x| u_pow(x, m))?;
    let ax_x2w = xi.a(|x| x * x * u_pow(x, m))?;
    let ax_xw = xi.a(|x| x * u_pow(x, m))?;
    let kx = xi.k(|x| u_pow(x, m + 1))?;
    let ae_w = ea(&|y| v_pow(y, m))?;
    let ae_y2w = ea(&|y| y * y * v_pow(y, m))?;
    let ke = eta_side(eta.assemble(|y| v_pow(sign * y, m + 1), OperatorKind::Kinetic)?.to_dense() * Scale(2.0));

    let s = (kron(ax_x2w.as_ref(), ae_w.as_ref()) - kron(ax_w.as_ref(), ae_y2w.as_ref())) * Scale(c);
    let t_xi = kx - &ax_w * Scale(mm);
    let t_eta = ke + &ae_w * Scale(mm);
    let t = (kron(t_xi.as_ref(), ae_w.as_ref()) + kron(ax_w.as_ref(), t_eta.as_ref())) * Scale(2.0 * c / (r * r));
    let v = kron(ax_xw.as_ref(), ae_w.as_ref()) * Scale(-4.0 * c / r);
    Ok(BlockMatrices { s, h: t + v })
}

/// Number of sign changes in the `η` spline coefficients of the dominant ξ
/// row; by variation diminishing this bounds the nodes of `g` along `η`.
fn eta_sign_changes(coeffs: &[f64], n_xi: usize, proj: MatRef<'_, f64>) -> usize {
    let np = proj.ncols();
    let n_eta = proj.nrows();
    let row_norm = |a: usize| (0..np).map(|b| coeffs[a * np + b].powi(2)).sum::<f64>();
    let best = (0..n_xi).max_by(|&a, &b| row_norm(a).total_cmp(&row_norm(b))).unwrap_or(0);
    let full: Vec<f64> = (0..n_eta)
        .map(|j| (0..np).map(|b| proj[(j, b)] * coeffs[best * np + b]).sum())
        .collect();
    let max = full.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let signs: Vec<bool> = full.iter().filter(|v| v.abs() > 1e-8 * max).map(|v| *v > 0.0).collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

/// Solve one `(Λ, parity)` block.
pub fn solve_two_center(spec: &TwoCenterSpec, block: SymmetryBlock) -> Result<EigenBlock, TwoCenterError> {
    spec.validate()?;
    let (lambda, parity) = block_quantum_numbers(block)?;
    let xi = xi_axis(spec)?;
    let eta = eta_axis(spec)?;
    let ep = eta_parity(lambda, parity);
    let mats = block_matrices(spec, &xi, &eta.basis, 1.0, |m| eta.project(m, ep, ep), lambda)?;
    let mut pairs = generalized_eigh(mats.h.as_ref(), mats.s.as_ref()).map_err(|source| TwoCenterError::Eigen { block, source })?;
    fix_signs(&mut pairs.vectors);
    let shift = spec.energy_shift();
    let label = SymmetryBlock::Diatomic {
        lambda,
        parity,
        component: Component::Symmetric,
    };
    let mut energies: Vec<f64> = pairs.values.iter().map(|e| e + shift).collect();
    let mut coefficients = pairs.vectors;
    if let Some(limit) = spec.eta_node_limit {
        let proj = eta.proj(ep);
        let keep: Vec<usize> = (0..energies.len())
            .filter(|&j| {
                let c: Vec<f64> = (0..coefficients.nrows()).map(|i| coefficients[(i, j)]).collect();
                eta_sign_changes(&c, xi.basis.len(), proj) <= limit
            })
            .collect();
        energies = keep.iter().map(|&j| energies[j]).collect();
        coefficients = Mat::from_fn(coefficients.nrows(), keep.len(), |i, j| coefficients[(i, keep[j])]);
    }
    Ok(EigenBlock {
        label,
        energies,
        coefficients,
    })
}

/// Solve every block up to `Λ_max` in parallel; σg is block 0.
pub fn solve_molecule(spec: &TwoCenterSpec) -> Result<MolecularEigenBasis, TwoCenterError> {
    spec.validate()?;
    let blocks = spec
        .blocks()
        .into_par_iter()
        .map(|b| solve_two_center(spec, b))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MolecularEigenBasis {
        spec: spec.clone(),
        basis: EigenBasis {
            blocks,
            threshold: spec.threshold(),
        },
        xi: xi_axis(spec)?.basis,
        eta: eta_axis(spec)?.basis,
    })
}

/// Energies of all states with a given `Λ`, both parities together, from
/// the full `η` basis without symmetry reduction. With `exchanged` the
/// `η` operators are assembled after relabeling the nuclei (`η → -η`).
pub fn solve_unreduced(spec: &TwoCenterSpec, lambda: u32, exchanged: bool) -> Result<Vec<f64>, TwoCenterError> {
    spec.validate()?;
    let xi = xi_axis(spec)?;
    let block = SymmetryBlock::diatomic(lambda, Parity::Gerade);
    let mats = if exchanged {
        // operators in η' = -η; the reflected basis is ordered back to front
        let kv = KnotVector::linear(spec.eta_splines, spec.eta_order, -1.0, 1.0)?.reflected();
        let eta = SplineBasis::new(kv, spec.quad_points, false, false);
        let n = eta.len();
        let rev = Mat::from_fn(n, n, |i, j| if i + j == n - 1 { 1.0 } else { 0.0 });
        block_matrices(spec, &xi, &eta, -1.0, |m| &rev * m * &rev, lambda)?
    } else {
        block_matrices(spec, &xi, &eta_axis(spec)?.basis, 1.0, |m| m, lambda)?
    };
    let pairs = generalized_eigh(mats.h.as_ref(), mats.s.as_ref()).map_err(|source| TwoCenterError::Eigen { block, source })?;
    let shift = spec.energy_shift();
    Ok(pairs.values.iter().map(|e| e + shift).collect())
}

/// σg ground energy of `spec`, checked against a refined basis
/// (20% more ξ splines, four more η splines).
pub fn converged_ground_energy(spec: &TwoCenterSpec, tol: f64) -> Result<f64, TwoCenterError> {
    let coarse = solve_two_center(spec, SymmetryBlock::sigma_g())?.energies[0];
    let refined_spec = TwoCenterSpec {
        xi_splines: spec.xi_splines + spec.xi_splines.div_ceil(5),
        eta_splines: spec.eta_splines + 4,
        ..spec.clone()
    };
    let fine = solve_two_center(&refined_spec, SymmetryBlock::sigma_g())?.energies[0];
    let delta = (fine - coarse).abs();
    if delta > tol {
        return Err(TwoCenterError::NotConverged { delta, tol });
    }
    Ok(fine)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eta_parity_follows_homonuclear_rule() {
        assert_eq!(eta_parity(0, Parity::Gerade), EtaParity::Even);
        assert_eq!(eta_parity(0, Parity::Ungerade), EtaParity::Odd);
        assert_eq!(eta_parity(1, Parity::Ungerade), EtaParity::Even);
        assert_eq!(eta_parity(1, Parity::Gerade), EtaParity::Odd);
        assert_eq!(eta_parity(2, Parity::Gerade), EtaParity::Even);
        assert_eq!(eta_parity(3, Parity::Ungerade), EtaParity::Even);
    }

    #[test]
    fn projections_are_orthonormal_and_complementary() {
        for n in [6, 7] {
            let (e, o) = parity_projections(n);
            assert_eq!(e.ncols() + o.ncols(), n);
            let ee = e.transpose() * &e;
            let oo = o.transpose() * &o;
            let eo = e.transpose() * &o;
            assert!((ee - Mat::<f64>::identity(e.ncols(), e.ncols())).norm_max() < 1e-15);
            assert!((oo - Mat::<f64>::identity(o.ncols(), o.ncols())).norm_max() < 1e-15);
            assert!(eo.norm_max() < 1e-15);
        }
    }

    #[test]
    fn spec_validation() {
        assert!(TwoCenterSpec::default_preset(-1.0).validate().is_err());
        let mut s = TwoCenterSpec::small_preset(2.0);
        s.xi_max = 0.5;
        assert!(s.validate().is_err());
        assert!(TwoCenterSpec::small_preset(2.0).validate().is_ok());
        let atomic = SymmetryBlock::Atomic { l: 0 };
        assert!(matches!(
            solve_two_center(&TwoCenterSpec::small_preset(2.0), atomic),
            Err(TwoCenterError::UnknownBlock(_))
        ));
    }

    #[test]
    fn block_list_starts_with_sigma_g() {
        let b = TwoCenterSpec::small_preset(2.0).blocks();
        assert_eq!(b.len(), 6);
        assert_eq!(b[0], SymmetryBlock::sigma_g());
        assert_eq!(b[3], SymmetryBlock::diatomic(1, Parity::Ungerade));
    }
}
