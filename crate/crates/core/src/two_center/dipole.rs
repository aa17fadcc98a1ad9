//! Velocity-gauge couplings between two-center blocks.
//!
//! Parallel polarisation conserves `M` and flips parity. Perpendicular
//! polarisation changes `M` by one; between complex orbitals the raw
//! element is `D̄ = <M+1| ∂/∂x |M> = ½ <M+1| (∂_ρ - M/ρ) |M>`, and between
//! reflection-symmetric combinations it becomes `√2 D̄` for `Λ + Λ' = 1`
//! and `D̄` otherwise, because `<ψ'| ∂/∂x |ψ*>` vanishes unless
//! `Λ' = 0, Λ = 1`.

use super::{eta_parity, u_pow, v_pow, Axis, MolecularEigenBasis, TwoCenterError};
use crate::basis::{Component, EigenBasis, EigenBlock, Parity, SymmetryBlock};
use crate::coupling::{CouplingBlock, DipoleCouplingSet, Orientation};
use crate::linalg::{kron, sandwich};
use faer::{Mat, Scale};
use rayon::prelude::*;

/// Which operator to sandwich.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Gauge {
    Velocity,
    Length,
}

/// One coupled pair `row ← col` with the quantum numbers of the `col` side.
#[derive(Clone, Copy)]
struct Pair {
    lambda: u32,
    parity: Parity,
    row: SymmetryBlock,
    col: SymmetryBlock,
}

fn pairs(mol: &MolecularEigenBasis, orientation: Orientation) -> Result<Vec<Pair>, TwoCenterError> {
    let lmax = mol.spec.lambda_max;
    let mut out = Vec::new();
    for lambda in 0..=lmax {
        for parity in [Parity::Gerade, Parity::Ungerade] {
            let col = SymmetryBlock::diatomic(lambda, parity);
            let row = match orientation {
                Orientation::Parallel if parity == Parity::Gerade => SymmetryBlock::diatomic(lambda, Parity::Ungerade),
                Orientation::Perpendicular if lambda < lmax => SymmetryBlock::diatomic(lambda + 1, parity.flip()),
                Orientation::Atom => {
                    return Err(TwoCenterError::InvalidSpec("atomic orientation on a diatomic basis".into()))
                }
                _ => continue,
            };
            out.push(Pair { lambda, parity, row, col });
        }
    }
    Ok(out)
}

/// Primitive-basis operator matrix for `pair` (bra = row block functions).
fn primitive(mol: &MolecularEigenBasis, xi: &Axis, eta: &Axis, orientation: Orientation, gauge: Gauge, pair: Pair) -> Result<Mat<f64>, TwoCenterError> {
    let (row_lambda, row_parity) = match pair.row {
        SymmetryBlock::Diatomic { lambda, parity, .. } => (lambda, parity),
        other => return Err(TwoCenterError::UnknownBlock(other)),
    };
    let pr = eta_parity(row_lambda, row_parity);
    let pc = eta_parity(pair.lambda, pair.parity);
    let ea = |w: &dyn Fn(f64) -> f64| -> Result<Mat<f64>, TwoCenterError> { Ok(eta.project(eta.a(w)?, pr, pc)) };
    let ed = |w: &dyn Fn(f64) -> f64| -> Result<Mat<f64>, TwoCenterError> { Ok(eta.project(eta.d(w)?, pr, pc)) };
    let r = mol.spec.r;
    let c = (0.5 * r).powi(3);
    let m = pair.lambda;
    let k = |a: Mat<f64>, b: Mat<f64>| kron(a.as_ref(), b.as_ref());
    let out = match (orientation, gauge) {
        (Orientation::Parallel, Gauge::Velocity) => {
            // ∂/∂z = (2/R)(ξ²-η²)⁻¹ [η(ξ²-1)∂_ξ + ξ(1-η²)∂_η]; the s^M
            // derivative terms cancel between the two pieces
            (k(xi.d(|x| u_pow(x, m + 1))?, ea(&|y| y * v_pow(y, m))?)
                + k(xi.a(|x| x * u_pow(x, m))?, ed(&|y| v_pow(y, m + 1))?))
                * Scale(c * 2.0 / r)
        }
        (Orientation::Parallel, Gauge::Length) => {
            // z = (R/2) ξ η
            (k(xi.a(|x| x.powi(3) * u_pow(x, m))?, ea(&|y| y * v_pow(y, m))?)
                - k(xi.a(|x| x * u_pow(x, m))?, ea(&|y| y.powi(3) * v_pow(y, m))?))
                * Scale(c * 0.5 * r)
        }
        (Orientation::Perpendicular, Gauge::Velocity) => {
            // (∂_ρ - M/ρ) s^M g = s^M ∂_ρ g,
            // ∂_ρ = (2/R) s (ξ²-η²)⁻¹ [ξ ∂_ξ - η ∂_η]
            (k(xi.d(|x| x * u_pow(x, m + 1))?, ea(&|y| v_pow(y, m + 1))?)
                - k(xi.a(|x| u_pow(x, m + 1))?, ed(&|y| y * v_pow(y, m + 1))?))
                * Scale(0.5 * c * 2.0 / r)
        }
        (Orientation::Perpendicular, Gauge::Length) => {
            // x → ρ/2 between M and M+1, ρ = (R/2) s
            (k(xi.a(|x| x * x * u_pow(x, m + 1))?, ea(&|y| v_pow(y, m + 1))?)
                - k(xi.a(|x| u_pow(x, m + 1))?, ea(&|y| y * y * v_pow(y, m + 1))?))
                * Scale(0.5 * c * 0.5 * r)
        }
        (Orientation::Atom, _) => unreachable!("rejected in pairs()"),
    };
    Ok(out)
}

fn block_of<'a>(basis: &'a EigenBasis, label: SymmetryBlock) -> Result<(usize, &'a EigenBlock), TwoCenterError> {
    let i = basis.block_index(label).ok_or(TwoCenterError::UnknownBlock(label))?;
    Ok((i, &basis.blocks[i]))
}

/// `(pair, raw eigenbasis block)` for every coupled pair, without the
/// `√2` factor.
fn raw_blocks(mol: &MolecularEigenBasis, orientation: Orientation, gauge: Gauge) -> Result<Vec<(Pair, Mat<f64>)>, TwoCenterError> {
    let (xi, eta) = mol.axes();
    pairs(mol, orientation)?
        .into_par_iter()
        .map(|pair| {
            let op = primitive(mol, &xi, &eta, orientation, gauge, pair)?;
            let (_, row) = block_of(&mol.basis, pair.row)?;
            let (_, col) = block_of(&mol.basis, pair.col)?;
            Ok((pair, sandwich(row.coefficients.as_ref(), op.as_ref(), col.coefficients.as_ref())))
        })
        .collect()
}

fn sqrt2_factor(orientation: Orientation, pair: Pair) -> f64 {
    if orientation == Orientation::Perpendicular && pair.lambda == 0 {
        std::f64::consts::SQRT_2
    } else {
        1.0
    }
}

/// `<φ'| ε·∇ |φ>` between reflection-symmetric states for the given
/// polarisation; the mirrored blocks follow from antisymmetry.
pub fn molecular_dipole_set(mol: &MolecularEigenBasis, orientation: Orientation) -> Result<DipoleCouplingSet, TwoCenterError> {
    let blocks = raw_blocks(mol, orientation, Gauge::Velocity)?
        .into_iter()
        .map(|(pair, m)| {
            Ok(CouplingBlock {
                row: block_of(&mol.basis, pair.row)?.0,
                col: block_of(&mol.basis, pair.col)?.0,
                matrix: m * Scale(sqrt2_factor(orientation, pair)),
            })
        })
        .collect::<Result<Vec<_>, TwoCenterError>>()?;
    Ok(DipoleCouplingSet { orientation, blocks })
}

/// Length-gauge `<φ'| ε·r |φ>` in the same layout as
/// [`molecular_dipole_set`], for gauge cross-checks. The mirrored blocks
/// are `+transpose`.
pub fn molecular_length_blocks(mol: &MolecularEigenBasis, orientation: Orientation) -> Result<Vec<CouplingBlock>, TwoCenterError> {
    raw_blocks(mol, orientation, Gauge::Length)?
        .into_iter()
        .map(|(pair, m)| {
            Ok(CouplingBlock {
                row: block_of(&mol.basis, pair.row)?.0,
                col: block_of(&mol.basis, pair.col)?.0,
                matrix: m * Scale(sqrt2_factor(orientation, pair)),
            })
        })
        .collect()
}

fn with_component(label: SymmetryBlock, component: Component) -> SymmetryBlock {
    match label {
        SymmetryBlock::Diatomic { lambda, parity, .. } => SymmetryBlock::Diatomic {
            lambda,
            parity,
            component,
        },
        other => other,
    }
}

/// Reference system for perpendicular polarisation that keeps both
/// `M = ±Λ` partners of every `Λ > 0` level as separate blocks, coupled by
/// the raw complex-orbital elements `<±(Λ+1)| ∂/∂x |±Λ> = D̄`.
pub fn explicit_m_system(mol: &MolecularEigenBasis) -> Result<(EigenBasis, DipoleCouplingSet), TwoCenterError> {
    let mut blocks = Vec::new();
    for b in &mol.basis.blocks {
        if b.label.angular() == 0 {
            blocks.push(b.clone());
        } else {
            for comp in [Component::PlusM, Component::MinusM] {
                blocks.push(EigenBlock {
                    label: with_component(b.label, comp),
                    ..b.clone()
                });
            }
        }
    }
    let basis = EigenBasis {
        blocks,
        threshold: mol.basis.threshold,
    };
    let mut couplings = DipoleCouplingSet::new(Orientation::Perpendicular);
    for (pair, m) in raw_blocks(mol, Orientation::Perpendicular, Gauge::Velocity)? {
        for comp in [Component::PlusM, Component::MinusM] {
            let col = if pair.lambda == 0 {
                pair.col
            } else {
                with_component(pair.col, comp)
            };
            couplings.blocks.push(CouplingBlock {
                row: block_of(&basis, with_component(pair.row, comp))?.0,
                col: block_of(&basis, col)?.0,
                matrix: m.clone(),
            });
        }
    }
    Ok((basis, couplings))
}
