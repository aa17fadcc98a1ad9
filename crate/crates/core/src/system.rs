//! Named systems and the eigenbasis-plus-couplings bundle they build to.

use crate::atom::{atomic_dipole_set, calibrate_alpha, solve_atom, ModelAtomSpec};
use crate::basis::EigenBasis;
use crate::coupling::{DipoleCouplingSet, Orientation};
use crate::two_center::{molecular_dipole_set, solve_molecule, TwoCenterSpec};
use crate::Error;

/// Model-atom screening parameters fitted to the vertical Ip of H₂⁺ at
/// R = 1.4 and R = 2.0.
pub const ALPHA_R14: f64 = 0.12194;
pub const ALPHA_R20: f64 = 0.03126;

#[derive(Debug, Clone, PartialEq)]
pub enum SystemSpec {
    Atom(ModelAtomSpec),
    TwoCenter(TwoCenterSpec),
}

impl SystemSpec {
    /// Orientations the system can be driven in.
    pub fn orientations(&self) -> &'static [Orientation] {
        match self {
            SystemSpec::Atom(_) => &[Orientation::Atom],
            SystemSpec::TwoCenter(_) => &[Orientation::Parallel, Orientation::Perpendicular],
        }
    }
}

/// Eigenbasis, one coupling set per orientation and the ionisation
/// potential of the lowest state.
#[derive(Debug, Clone)]
pub struct BuiltSystem {
    pub basis: EigenBasis,
    pub couplings: Vec<DipoleCouplingSet>,
    pub ip: f64,
}

impl BuiltSystem {
    pub fn couplings_for(&self, orientation: Orientation) -> Option<&DipoleCouplingSet> {
        self.couplings.iter().find(|c| c.orientation == orientation)
    }
}

pub fn build_system(spec: &SystemSpec, orientations: &[Orientation]) -> Result<BuiltSystem, Error> {
    for o in orientations {
        if !spec.orientations().contains(o) {
            return Err(Error::Config(format!("orientation '{o}' does not apply to this system")));
        }
    }
    match spec {
        SystemSpec::Atom(s) => {
            let atom = solve_atom(s)?;
            let d = atomic_dipole_set(&atom)?;
            let ip = -atom.ground_energy();
            let couplings = if orientations.is_empty() { vec![] } else { vec![d] };
            Ok(BuiltSystem {
                basis: atom.basis,
                couplings,
                ip,
            })
        }
        SystemSpec::TwoCenter(s) => {
            let mol = solve_molecule(s)?;
            let couplings = orientations
                .iter()
                .map(|&o| molecular_dipole_set(&mol, o))
                .collect::<Result<Vec<_>, _>>()?;
            let ip = mol.basis.threshold - mol.ground_energy();
            Ok(BuiltSystem {
                basis: mol.basis,
                couplings,
                ip,
            })
        }
    }
}

/// Model atom whose Ip matches `target`.
pub fn calibrated_atom(target_ip: f64, base: &ModelAtomSpec) -> Result<ModelAtomSpec, Error> {
    let alpha = calibrate_alpha(target_ip, base)?;
    Ok(ModelAtomSpec { alpha, ..base.clone() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub id: &'static str,
    pub description: &'static str,
    pub system: SystemSpec,
    /// Double the reported yields.
    pub factor_two: bool,
}

pub fn presets() -> Vec<Preset> {
    let atom = |id, description, spec| Preset {
        id,
        description,
        system: SystemSpec::Atom(spec),
        factor_two: true,
    };
    let molecule = |id, description, spec| Preset {
        id,
        description,
        system: SystemSpec::TwoCenter(spec),
        factor_two: false,
    };
    vec![
        atom("atom-r14-fast", "model atom fitted to R = 1.4, 120 bohr box", ModelAtomSpec::fast_preset(ALPHA_R14)),
        atom("atom-r14", "model atom fitted to R = 1.4, 350 bohr box", ModelAtomSpec::default_preset(ALPHA_R14)),
        atom("atom-r20-fast", "model atom fitted to R = 2.0, 120 bohr box", ModelAtomSpec::fast_preset(ALPHA_R20)),
        atom("atom-r20", "model atom fitted to R = 2.0, 350 bohr box", ModelAtomSpec::default_preset(ALPHA_R20)),
        molecule("h2plus-r14", "H2+ at R = 1.4, 120 bohr box", TwoCenterSpec::default_preset(1.4)),
        molecule("h2plus-r20", "H2+ at R = 2.0, 120 bohr box", TwoCenterSpec::default_preset(2.0)),
        molecule("h2plus-small", "H2+ at R = 2.0, 25 bohr box, coarse", TwoCenterSpec::small_preset(2.0)),
    ]
}

pub fn preset(id: &str) -> Option<Preset> {
    presets().into_iter().find(|p| p.id == id)
}
