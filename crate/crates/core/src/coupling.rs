//! Block-sparse velocity-gauge dipole matrices `D = <φ'| ε·∇ |φ>`.

use crate::basis::EigenBasis;
use faer::Mat;
use std::fmt;
use std::str::FromStr;

/// Polarisation relative to the internuclear axis; `Atom` for the
/// spherically symmetric model atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    Parallel,
    Perpendicular,
    Atom,
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Orientation::Parallel => "parallel",
            Orientation::Perpendicular => "perpendicular",
            Orientation::Atom => "atom",
        })
    }
}

impl FromStr for Orientation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "parallel" => Ok(Orientation::Parallel),
            "perpendicular" => Ok(Orientation::Perpendicular),
            "atom" => Ok(Orientation::Atom),
            other => Err(format!("unknown orientation '{other}'")),
        }
    }
}

/// `D[row block, col block]`; the mirrored block is `-matrixᵀ`.
#[derive(Debug, Clone)]
pub struct CouplingBlock {
    pub row: usize,
    pub col: usize,
    pub matrix: Mat<f64>,
}

/// Antisymmetric real coupling matrix stored as one dense block per
/// coupled pair of symmetry blocks.
#[derive(Debug, Clone)]
pub struct DipoleCouplingSet {
    pub orientation: Orientation,
    pub blocks: Vec<CouplingBlock>,
}

impl DipoleCouplingSet {
    pub fn new(orientation: Orientation) -> Self {
        Self {
            orientation,
            blocks: Vec::new(),
        }
    }

    /// `D[row, col]` as a dense matrix, if the pair is coupled.
    pub fn block(&self, row: usize, col: usize) -> Option<Mat<f64>> {
        self.blocks.iter().find_map(|b| {
            if b.row == row && b.col == col {
                Some(b.matrix.clone())
            } else if b.row == col && b.col == row {
                Some(-b.matrix.transpose().to_owned())
            } else {
                None
            }
        })
    }

    pub fn is_coupled(&self, a: usize, b: usize) -> bool {
        self.blocks.iter().any(|c| (c.row == a && c.col == b) || (c.row == b && c.col == a))
    }

    /// Check that every block's shape fits `basis`.
    pub fn consistent_with(&self, basis: &EigenBasis) -> bool {
        self.blocks.iter().all(|c| {
            c.row != c.col
                && c.row < basis.blocks.len()
                && c.col < basis.blocks.len()
                && c.matrix.nrows() == basis.blocks[c.row].len()
                && c.matrix.ncols() == basis.blocks[c.col].len()
        })
    }

    /// Full coupling matrix over all states of `basis`.
    pub fn to_dense(&self, basis: &EigenBasis) -> Mat<f64> {
        let n = basis.n_states();
        let off = basis.offsets();
        let mut d = Mat::zeros(n, n);
        for c in &self.blocks {
            for i in 0..c.matrix.nrows() {
                for j in 0..c.matrix.ncols() {
                    let v = c.matrix[(i, j)];
                    d[(off[c.row] + i, off[c.col] + j)] = v;
                    d[(off[c.col] + j, off[c.row] + i)] = -v;
                }
            }
        }
        d
    }
}
