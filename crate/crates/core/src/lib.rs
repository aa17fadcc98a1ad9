//! Discretized field-free eigenbases, velocity-gauge dipole couplings and
//! time-dependent propagation for one-electron atoms and homonuclear
//! diatomics confined in a box.

pub mod atom;
pub mod basis;
pub mod bspline;
pub mod coupling;
pub mod linalg;
pub mod observables;
pub mod propagator;
pub mod pulse;
pub mod system;
pub mod two_center;

pub use basis::{Component, EigenBasis, EigenBlock, Parity, SymmetryBlock};
pub use coupling::{CouplingBlock, DipoleCouplingSet, Orientation};

/// Any failure of the library, grouped by origin.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Atom(#[from] atom::AtomError),
    #[error(transparent)]
    TwoCenter(#[from] two_center::TwoCenterError),
    #[error(transparent)]
    Pulse(#[from] pulse::PulseError),
    #[error(transparent)]
    Propagation(#[from] propagator::PropagationError),
    #[error(transparent)]
    Observables(#[from] observables::ObservablesError),
}
