//! System-independent representation of a discretized field-free spectrum.

use faer::Mat;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Parity {
    Gerade,
    Ungerade,
}

impl Parity {
    pub fn flip(self) -> Self {
        match self {
            Parity::Gerade => Parity::Ungerade,
            Parity::Ungerade => Parity::Gerade,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Parity::Gerade => 'g',
            Parity::Ungerade => 'u',
        }
    }
}

/// How the two degenerate `M = ±Λ` partners of a `Λ > 0` level are
/// represented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Component {
    /// Reflection-symmetric real combination (also used for `Λ = 0`).
    Symmetric,
    /// Complex orbital with `M = +Λ`.
    PlusM,
    /// Complex orbital with `M = -Λ`.
    MinusM,
}

/// Label of a sector that the field-free Hamiltonian does not mix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SymmetryBlock {
    Atomic { l: u32 },
    Diatomic { lambda: u32, parity: Parity, component: Component },
}

impl SymmetryBlock {
    pub fn sigma_g() -> Self {
        Self::diatomic(0, Parity::Gerade)
    }

    pub fn diatomic(lambda: u32, parity: Parity) -> Self {
        SymmetryBlock::Diatomic {
            lambda,
            parity,
            component: Component::Symmetric,
        }
    }

    /// `Λ` for diatomic blocks, `ℓ` for atomic ones.
    pub fn angular(&self) -> u32 {
        match *self {
            SymmetryBlock::Atomic { l } => l,
            SymmetryBlock::Diatomic { lambda, .. } => lambda,
        }
    }

    /// Signed projection `M` of a diatomic block.
    pub fn signed_m(&self) -> Option<i32> {
        match *self {
            SymmetryBlock::Diatomic { lambda, component, .. } => Some(match component {
                Component::MinusM => -(lambda as i32),
                _ => lambda as i32,
            }),
            SymmetryBlock::Atomic { .. } => None,
        }
    }
}

impl fmt::Display for SymmetryBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const GREEK: [&str; 6] = ["sigma", "pi", "delta", "phi", "gamma", "eta"];
        match *self {
            SymmetryBlock::Atomic { l } => write!(f, "l={l}"),
            SymmetryBlock::Diatomic { lambda, parity, component } => {
                match GREEK.get(lambda as usize) {
                    Some(name) => write!(f, "{name}{}", parity.symbol())?,
                    None => write!(f, "L{lambda}{}", parity.symbol())?,
                }
                match component {
                    Component::Symmetric => Ok(()),
                    Component::PlusM => write!(f, "(+M)"),
                    Component::MinusM => write!(f, "(-M)"),
                }
            }
        }
    }
}

/// Eigenpairs of one symmetry block. `coefficients` has one column per
/// state, expressed in the block's primitive spline basis.
#[derive(Debug, Clone)]
pub struct EigenBlock {
    pub label: SymmetryBlock,
    pub energies: Vec<f64>,
    pub coefficients: Mat<f64>,
}

impl EigenBlock {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }
}

/// Field-free spectrum used for propagation. Block 0 holds the initial
/// state; energies within a block ascend.
#[derive(Debug, Clone)]
pub struct EigenBasis {
    pub blocks: Vec<EigenBlock>,
    /// Energies above this are continuum states.
    pub threshold: f64,
}

impl EigenBasis {
    pub fn n_states(&self) -> usize {
        self.blocks.iter().map(EigenBlock::len).sum()
    }

    pub fn block_index(&self, label: SymmetryBlock) -> Option<usize> {
        self.blocks.iter().position(|b| b.label == label)
    }

    /// Start offset of every block in the concatenated state vector.
    pub fn offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        self.blocks
            .iter()
            .map(|b| {
                let o = acc;
                acc += b.len();
                o
            })
            .collect()
    }

    pub fn ground_energy(&self) -> f64 {
        self.blocks[0].energies[0]
    }
}
