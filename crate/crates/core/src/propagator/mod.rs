//! Time propagation of expansion coefficients in a field-free eigenbasis,
//! `dC/dt = -i E C + A(t) D C`, with `D` the real antisymmetric
//! velocity-gauge coupling.

pub mod adams;

use crate::basis::{EigenBasis, SymmetryBlock};
use crate::coupling::DipoleCouplingSet;
use crate::observables::HARTREE_EV;
use crate::pulse::Drive;
use adams::{Adams, AdamsError, AdamsOptions, AdamsStats, OdeSystem};
use faer::{c64, Accum, Mat, MatMut, MatRef, Par};
use std::time::{Duration, Instant};
use thiserror::Error;

/// Default energy cutoff: 300 eV.
pub const DEFAULT_E_CUT: f64 = 300.0 / HARTREE_EV;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PropagationError {
    #[error("invalid propagation options: {0}")]
    InvalidOptions(String),
    #[error("couplings do not match the basis: {0}")]
    Inconsistent(String),
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("norm drift {drift:e} at t = {t} exceeds 100x the relative tolerance")]
    NormDrift { t: f64, drift: f64 },
    #[error("integrator: {0}")]
    Solver(AdamsError),
}

impl From<AdamsError> for PropagationError {
    fn from(e: AdamsError) -> Self {
        match e {
            AdamsError::StepUnderflow { t, h } => PropagationError::StepUnderflow { t, h },
            other => PropagationError::Solver(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialState {
    /// Lowest state of block 0.
    Ground,
    State { block: usize, index: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationOptions {
    pub rtol: f64,
    pub atol: f64,
    /// States above this energy (hartree) are dropped; `None` keeps all.
    pub e_cut: Option<f64>,
    /// Blocks with `Λ` (or `ℓ`) above this are dropped.
    pub lambda_max: Option<u32>,
    pub initial: InitialState,
    /// Integrate `C̃ = e^{iEt} C` instead of `C`.
    pub interaction_picture: bool,
    /// Record `(t, P_gs, norm)` every this many accepted steps.
    pub checkpoint_stride: Option<usize>,
    /// Give up after this many integrator steps.
    pub max_steps: usize,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            e_cut: Some(DEFAULT_E_CUT),
            lambda_max: None,
            initial: InitialState::Ground,
            interaction_picture: true,
            checkpoint_stride: None,
            max_steps: 50_000_000,
        }
    }
}

impl PropagationOptions {
    pub fn validate(&self) -> Result<(), PropagationError> {
        let tol_ok = |x: f64| x > 0.0 && x <= 1e-2;
        if !tol_ok(self.rtol) || !tol_ok(self.atol) {
            return Err(PropagationError::InvalidOptions(format!(
                "tolerances must lie in (0, 1e-2] (rtol = {:e}, atol = {:e})",
                self.rtol, self.atol
            )));
        }
        if self.checkpoint_stride == Some(0) {
            return Err(PropagationError::InvalidOptions("checkpoint stride must be positive".into()));
        }
        Ok(())
    }
}

/// Switch between the Schrödinger and interaction pictures.
pub fn interaction_picture_toggle(opts: PropagationOptions) -> PropagationOptions {
    PropagationOptions {
        interaction_picture: !opts.interaction_picture,
        ..opts
    }
}

/// Block of the truncated state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StateBlock {
    pub label: SymmetryBlock,
    /// Index of the block in the source basis.
    pub source: usize,
    pub offset: usize,
    pub energies: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Checkpoint {
    pub t: f64,
    pub p_gs: f64,
    pub norm: f64,
}

#[derive(Debug, Clone)]
pub struct PropagationResult {
    pub blocks: Vec<StateBlock>,
    /// Final Schrödinger-picture amplitudes over the truncated states.
    pub coefficients: Vec<c64>,
    /// Index of the initial state in `coefficients`.
    pub initial_index: usize,
    pub threshold: f64,
    /// `|1 - Σ|C|²|` at the end.
    pub norm_drift: f64,
    pub stats: AdamsStats,
    pub wall_time: Duration,
    pub t_final: f64,
    pub checkpoints: Vec<Checkpoint>,
}

impl PropagationResult {
    pub fn norm(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `|C|²` of every state.
    pub fn populations(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn energies(&self) -> impl Iterator<Item = f64> + '_ {
        self.blocks.iter().flat_map(|b| b.energies.iter().copied())
    }

    /// Total population of the block with `label`, zero if truncated away.
    pub fn block_population(&self, label: SymmetryBlock) -> f64 {
        self.blocks
            .iter()
            .find(|b| b.label == label)
            .map_or(0.0, |b| self.coefficients[b.offset..b.offset + b.energies.len()].iter().map(|c| c.norm_sqr()).sum())
    }
}

struct TruncatedCoupling {
    row_offset: usize,
    col_offset: usize,
    matrix: Mat<f64>,
}

/// The truncated coupled system: the blocks reachable from the initial
/// block, each cut at the energy cutoff. Immutable, so one instance can
/// drive several propagations concurrently.
pub struct CoupledSystem {
    blocks: Vec<StateBlock>,
    energies: Vec<f64>,
    couplings: Vec<TruncatedCoupling>,
    initial_index: usize,
    threshold: f64,
}

impl CoupledSystem {
    pub fn new(basis: &EigenBasis, couplings: &DipoleCouplingSet, opts: &PropagationOptions) -> Result<Self, PropagationError> {
        opts.validate()?;
        if !couplings.consistent_with(basis) {
            return Err(PropagationError::Inconsistent("block dimensions or indices differ".into()));
        }
        let (init_block, init_index) = match opts.initial {
            InitialState::Ground => (0, 0),
            InitialState::State { block, index } => (block, index),
        };
        let init_energy = basis
            .blocks
            .get(init_block)
            .and_then(|b| b.energies.get(init_index))
            .copied()
            .ok_or_else(|| PropagationError::InvalidOptions(format!("initial state ({init_block}, {init_index}) does not exist")))?;
        if let Some(cut) = opts.e_cut {
            if !(cut > init_energy) {
                return Err(PropagationError::InvalidOptions(format!(
                    "energy cutoff {cut} is not above the initial energy {init_energy}"
                )));
            }
        }
        if let Some(lmax) = opts.lambda_max {
            if basis.blocks[init_block].label.angular() > lmax {
                return Err(PropagationError::InvalidOptions("initial block removed by the angular cutoff".into()));
            }
        }

        // blocks never reached from the initial one keep zero amplitude
        let allowed = |i: usize| !opts.lambda_max.is_some_and(|l| basis.blocks[i].label.angular() > l);
        let mut reachable = vec![false; basis.blocks.len()];
        reachable[init_block] = true;
        let mut stack = vec![init_block];
        while let Some(b) = stack.pop() {
            for c in &couplings.blocks {
                for (from, to) in [(c.row, c.col), (c.col, c.row)] {
                    if from == b && !reachable[to] && allowed(to) {
                        reachable[to] = true;
                        stack.push(to);
                    }
                }
            }
        }

        let mut blocks = Vec::new();
        let mut kept_len = vec![0usize; basis.blocks.len()];
        let mut offsets = vec![usize::MAX; basis.blocks.len()];
        let mut offset = 0;
        for (i, b) in basis.blocks.iter().enumerate() {
            if !reachable[i] {
                continue;
            }
            let n = match opts.e_cut {
                Some(cut) => b.energies.iter().take_while(|&&e| e <= cut).count(),
                None => b.energies.len(),
            };
            if n == 0 {
                continue;
            }
            kept_len[i] = n;
            offsets[i] = offset;
            blocks.push(StateBlock {
                label: b.label,
                source: i,
                offset,
                energies: b.energies[..n].to_vec(),
            });
            offset += n;
        }
        let energies: Vec<f64> = blocks.iter().flat_map(|b| b.energies.iter().copied()).collect();
        let truncated = couplings
            .blocks
            .iter()
            .filter(|c| kept_len[c.row] > 0 && kept_len[c.col] > 0)
            .map(|c| TruncatedCoupling {
                row_offset: offsets[c.row],
                col_offset: offsets[c.col],
                matrix: c.matrix.as_ref().submatrix(0, 0, kept_len[c.row], kept_len[c.col]).to_owned(),
            })
            .collect();
        Ok(Self {
            blocks,
            energies,
            couplings: truncated,
            initial_index: offsets[init_block] + init_index,
            threshold: basis.threshold,
        })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn blocks(&self) -> &[StateBlock] {
        &self.blocks
    }

    pub fn initial_index(&self) -> usize {
        self.initial_index
    }

    /// Unit amplitude on the initial state.
    pub fn initial_state(&self) -> Vec<c64> {
        let mut c = vec![c64::new(0.0, 0.0); self.dim()];
        c[self.initial_index] = c64::new(1.0, 0.0);
        c
    }

    /// `out += a D x` for the two real columns of `x` (real and imaginary
    /// parts, column-major `n × 2`).
    fn apply_coupling(&self, a: f64, x: &[f64], out: &mut [f64]) {
        let n = self.dim();
        let x = MatRef::from_column_major_slice(x, n, 2);
        let mut out = MatMut::from_column_major_slice_mut(out, n, 2);
        for c in &self.couplings {
            let (nr, nc) = (c.matrix.nrows(), c.matrix.ncols());
            faer::linalg::matmul::matmul(
                out.as_mut().subrows_mut(c.row_offset, nr),
                Accum::Add,
                c.matrix.as_ref(),
                x.subrows(c.col_offset, nc),
                a,
                Par::Seq,
            );
            faer::linalg::matmul::matmul(
                out.as_mut().subrows_mut(c.col_offset, nc),
                Accum::Add,
                c.matrix.as_ref().transpose(),
                x.subrows(c.row_offset, nr),
                -a,
                Par::Seq,
            );
        }
    }

    /// Propagate `psi` (Schrödinger picture) from `t0` to `t1` under
    /// `drive`. `on_step(t, psi_schrodinger)` sees every accepted step.
    pub fn evolve<D: Drive + ?Sized>(
        &self,
        drive: &D,
        psi: &mut [c64],
        t0: f64,
        t1: f64,
        opts: &PropagationOptions,
        mut on_step: impl FnMut(f64, &[c64]),
    ) -> Result<(AdamsStats, f64), PropagationError> {
        opts.validate()?;
        let n = self.dim();
        if psi.len() != n {
            return Err(PropagationError::Inconsistent(format!("state has {} entries, system {}", psi.len(), n)));
        }
        let norm0: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
        let mut y = vec![0.0; 2 * n];
        let to_real = |psi: &[c64], t: f64, y: &mut [f64]| {
            for (i, c) in psi.iter().enumerate() {
                let c = if opts.interaction_picture { *c * phase(self.energies[i] * t) } else { *c };
                y[i] = c.re;
                y[n + i] = c.im;
            }
        };
        let to_complex = |y: &[f64], t: f64, psi: &mut [c64]| {
            for (i, c) in psi.iter_mut().enumerate() {
                let v = c64::new(y[i], y[n + i]);
                *c = if opts.interaction_picture { v * phase(-self.energies[i] * t) } else { v };
            }
        };
        to_real(psi, t0, &mut y);

        let mut rhs = Rhs {
            sys: self,
            drive,
            interaction: opts.interaction_picture,
            rotated: vec![0.0; 2 * n],
            coupled: vec![0.0; 2 * n],
            trig: vec![(0.0, 0.0); n],
        };
        let adams = Adams::new(AdamsOptions {
            rtol: opts.rtol,
            atol: opts.atol,
            max_steps: opts.max_steps,
            ..AdamsOptions::default()
        })?;
        let limit = 100.0 * opts.rtol;
        let mut scratch = vec![c64::new(0.0, 0.0); n];
        let stats = adams.integrate(&mut rhs, t0, t1, &mut y, |t, y| {
            let norm: f64 = y.iter().map(|v| v * v).sum();
            let drift = (norm - norm0).abs();
            if drift > limit || !norm.is_finite() {
                return Err(PropagationError::NormDrift { t, drift });
            }
            to_complex(y, t, &mut scratch);
            on_step(t, &scratch);
            Ok(())
        })?;
        to_complex(&y, t1, psi);
        let norm: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
        Ok((stats, (norm - norm0).abs()))
    }
}

fn phase(x: f64) -> c64 {
    let (s, c) = x.sin_cos();
    c64::new(c, s)
}

struct Rhs<'a, D: ?Sized> {
    sys: &'a CoupledSystem,
    drive: &'a D,
    interaction: bool,
    rotated: Vec<f64>,
    coupled: Vec<f64>,
    trig: Vec<(f64, f64)>,
}

impl<D: Drive + ?Sized> OdeSystem for Rhs<'_, D> {
    fn dim(&self) -> usize {
        2 * self.sys.dim()
    }

    fn rhs(&mut self, t: f64, y: &[f64], dy: &mut [f64]) {
        let n = self.sys.dim();
        let a = self.drive.vector_potential(t);
        let e = &self.sys.energies;
        if self.interaction {
            dy.fill(0.0);
            if a == 0.0 {
                return;
            }
            // C = e^{-iEt} C̃, then dC̃ = A e^{iEt} D C
            for i in 0..n {
                let (s, c) = (e[i] * t).sin_cos();
                self.trig[i] = (s, c);
                self.rotated[i] = c * y[i] + s * y[n + i];
                self.rotated[n + i] = c * y[n + i] - s * y[i];
            }
            self.coupled.fill(0.0);
            self.sys.apply_coupling(a, &self.rotated, &mut self.coupled);
            for i in 0..n {
                let (s, c) = self.trig[i];
                let (re, im) = (self.coupled[i], self.coupled[n + i]);
                dy[i] = c * re - s * im;
                dy[n + i] = c * im + s * re;
            }
        } else {
            // -iE(x + iy) = E y - i E x
            for i in 0..n {
                dy[i] = e[i] * y[n + i];
                dy[n + i] = -e[i] * y[i];
            }
            if a != 0.0 {
                self.sys.apply_coupling(a, y, dy);
            }
        }
    }
}

/// Propagate the initial state of `opts` through the full window of
/// `drive`.
pub fn propagate<D: Drive + ?Sized>(
    basis: &EigenBasis,
    couplings: &DipoleCouplingSet,
    drive: &D,
    opts: &PropagationOptions,
) -> Result<PropagationResult, PropagationError> {
    let sys = CoupledSystem::new(basis, couplings, opts)?;
    propagate_system(&sys, drive, opts)
}

/// As [`propagate`] with a prebuilt system.
pub fn propagate_system<D: Drive + ?Sized>(
    sys: &CoupledSystem,
    drive: &D,
    opts: &PropagationOptions,
) -> Result<PropagationResult, PropagationError> {
    let start = Instant::now();
    let (t0, t1) = drive.window();
    let mut psi = sys.initial_state();
    let init = sys.initial_index;
    let mut checkpoints = Vec::new();
    let stride = opts.checkpoint_stride;
    if stride.is_some() {
        checkpoints.push(Checkpoint { t: t0, p_gs: 1.0, norm: 1.0 });
    }
    let mut count = 0usize;
    let (stats, drift) = sys.evolve(drive, &mut psi, t0, t1, opts, |t, c| {
        count += 1;
        if let Some(s) = stride {
            if count % s == 0 || t == t1 {
                checkpoints.push(Checkpoint {
                    t,
                    p_gs: c[init].norm_sqr(),
                    norm: c.iter().map(|v| v.norm_sqr()).sum(),
                });
            }
        }
    })?;
    Ok(PropagationResult {
        blocks: sys.blocks.clone(),
        coefficients: psi,
        initial_index: init,
        threshold: sys.threshold,
        norm_drift: drift,
        stats,
        wall_time: start.elapsed(),
        t_final: t1,
        checkpoints,
    })
}
