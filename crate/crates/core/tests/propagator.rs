use boxtdse::atom::{atomic_dipole_set, solve_atom, AtomicEigenBasis, ModelAtomSpec};
use boxtdse::coupling::{CouplingBlock, DipoleCouplingSet, Orientation};
use boxtdse::observables::yields;
use boxtdse::propagator::{
    interaction_picture_toggle, propagate, propagate_system, CoupledSystem, PropagationError, PropagationOptions,
};
use boxtdse::pulse::{Drive, Pulse, PulseSpec};
use boxtdse::two_center::{explicit_m_system, molecular_dipole_set, solve_molecule, TwoCenterSpec};
use boxtdse::{EigenBasis, EigenBlock, Parity, SymmetryBlock};
use faer::{c64, Mat};
use std::sync::OnceLock;
use std::time::Instant;

fn fast_atom() -> &'static (AtomicEigenBasis, DipoleCouplingSet) {
    static ATOM: OnceLock<(AtomicEigenBasis, DipoleCouplingSet)> = OnceLock::new();
    ATOM.get_or_init(|| {
        let atom = solve_atom(&ModelAtomSpec::fast_preset(0.12194)).unwrap();
        let d = atomic_dipole_set(&atom).unwrap();
        (atom, d)
    })
}

struct Flat {
    end: f64,
    a0: f64,
}

impl Drive for Flat {
    fn window(&self) -> (f64, f64) {
        (0.0, self.end)
    }
    fn vector_potential(&self, _t: f64) -> f64 {
        self.a0
    }
}

struct Carrier {
    end: f64,
    a0: f64,
    omega: f64,
}

impl Drive for Carrier {
    fn window(&self) -> (f64, f64) {
        (0.0, self.end)
    }
    fn vector_potential(&self, t: f64) -> f64 {
        self.a0 * (self.omega * t).cos()
    }
}

fn two_level(e1: f64, e2: f64, d: f64) -> (EigenBasis, DipoleCouplingSet) {
    let block = |label, e: f64| EigenBlock {
        label,
        energies: vec![e],
        coefficients: Mat::identity(1, 1),
    };
    let basis = EigenBasis {
        blocks: vec![
            block(SymmetryBlock::sigma_g(), e1),
            block(SymmetryBlock::diatomic(0, Parity::Ungerade), e2),
        ],
        threshold: 10.0,
    };
    let mut set = DipoleCouplingSet::new(Orientation::Parallel);
    set.blocks.push(CouplingBlock {
        row: 1,
        col: 0,
        matrix: Mat::from_fn(1, 1, |_, _| d),
    });
    (basis, set)
}

/// Fixed-step RK4 on the complex two-level system.
fn rk4_two_level(e: [f64; 2], d: f64, drive: &impl Drive, steps: usize) -> [c64; 2] {
    let (t0, t1) = drive.window();
    let h = (t1 - t0) / steps as f64;
    let f = |t: f64, c: [c64; 2]| -> [c64; 2] {
        let a = drive.vector_potential(t);
        let i = c64::new(0.0, 1.0);
        [-i * e[0] * c[0] - a * d * c[1], -i * e[1] * c[1] + a * d * c[0]]
    };
    let mut c = [c64::new(1.0, 0.0), c64::new(0.0, 0.0)];
    for s in 0..steps {
        let t = t0 + s as f64 * h;
        let add = |x: [c64; 2], k: [c64; 2], w: f64| [x[0] + k[0] * w, x[1] + k[1] * w];
        let k1 = f(t, c);
        let k2 = f(t + 0.5 * h, add(c, k1, 0.5 * h));
        let k3 = f(t + 0.5 * h, add(c, k2, 0.5 * h));
        let k4 = f(t + h, add(c, k3, h));
        for j in 0..2 {
            c[j] += (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) * (h / 6.0);
        }
    }
    c
}

#[test]
fn zero_field_only_rotates_phases() {
    let (atom, d) = fast_atom();
    let pulse = Pulse::new(PulseSpec::new(0.3, 4, 0.0)).unwrap();
    for opts in [PropagationOptions::default(), interaction_picture_toggle(PropagationOptions::default())] {
        let sys = CoupledSystem::new(&atom.basis, d, &opts).unwrap();
        let n = sys.dim();
        let start: Vec<c64> = (0..n).map(|i| c64::new(1.0 / (1.0 + i as f64), 0.3 / (2.0 + i as f64))).collect();
        let norm = start.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let start: Vec<c64> = start.iter().map(|c| c / norm).collect();
        let mut psi = start.clone();
        let (t0, t1) = pulse.window();
        sys.evolve(&pulse, &mut psi, t0, t1, &opts, |_, _| ()).unwrap();
        let tol = if opts.interaction_picture { 1e-12 } else { 1e-7 };
        let worst = (0..n)
            .map(|i| {
                let (s, c) = (-sys.energies()[i] * (t1 - t0)).sin_cos();
                (psi[i] - start[i] * c64::new(c, s)).norm()
            })
            .fold(0.0, f64::max);
        assert!(worst < tol, "interaction picture {}: {worst:e}", opts.interaction_picture);
    }
    let r = propagate(&atom.basis, d, &pulse, &PropagationOptions::default()).unwrap();
    let y = yields(&r);
    assert_eq!((y.p_gs, y.y_exc, y.y_ion), (1.0, 0.0, 0.0));
}

#[test]
fn constant_coupling_follows_generalised_rabi_formula() {
    let (e1, e2, d) = (-0.5, -0.1, 0.8);
    let (basis, set) = two_level(e1, e2, d);
    for (a0, end) in [(0.05, 150.0), (0.01, 400.0), (0.0, 10.0)] {
        let drive = Flat { end, a0 };
        let r = propagate(&basis, &set, &drive, &PropagationOptions::default()).unwrap();
        let v = a0 * d;
        let delta = e2 - e1;
        let omega = (4.0 * v * v + delta * delta).sqrt();
        let oracle = 4.0 * v * v / (omega * omega) * (0.5 * omega * end).sin().powi(2);
        let p2 = r.coefficients[1].norm_sqr();
        assert!((p2 - oracle).abs() < 1e-6, "A0 = {a0}: {p2} vs {oracle}");
    }
}

#[test]
fn resonant_two_level_matches_rk4_and_rabi_pattern() {
    let (e1, e2, d) = (-0.5, -0.1, 0.5);
    let (basis, set) = two_level(e1, e2, d);
    let omega = e2 - e1;
    let a0 = 4e-3;
    // one full Rabi period of the rotating-wave solution
    let end = 2.0 * std::f64::consts::PI / (d * a0);
    let drive = Carrier { end, a0, omega };
    let r = propagate(&basis, &set, &drive, &PropagationOptions::default()).unwrap();
    let c = rk4_two_level([e1, e2], d, &drive, 400_000);
    for i in 0..2 {
        assert!((r.coefficients[i] - c[i]).norm() < 1e-6, "{i}: {:?} vs {:?}", r.coefficients[i], c[i]);
    }
    // at half the period the rotating-wave population transfer is complete
    let half = Carrier { end: 0.5 * end, ..drive };
    let r = propagate(&basis, &set, &half, &PropagationOptions::default()).unwrap();
    let p2 = r.coefficients[1].norm_sqr();
    assert!((p2 - (0.5 * d * a0 * half.end).sin().powi(2)).abs() < 1e-2, "{p2}");
}

#[test]
fn default_model_atom_run_conserves_norm() {
    let atom = solve_atom(&ModelAtomSpec::default_preset(0.12194)).unwrap();
    let d = atomic_dipole_set(&atom).unwrap();
    let pulse = Pulse::new(PulseSpec::new(0.3, 10, 1e13)).unwrap();
    let r = propagate(&atom.basis, &d, &pulse, &PropagationOptions::default()).unwrap();
    assert!(r.norm_drift <= 1e-8, "{:e}", r.norm_drift);
    assert!((r.norm() - 1.0).abs() <= 10.0 * 1e-9);
    eprintln!("default preset: {} steps, {} rejected, {:?}", r.stats.accepted, r.stats.rejected, r.wall_time);
}

#[test]
fn pictures_agree_on_final_moduli() {
    let (atom, d) = fast_atom();
    let pulse = Pulse::new(PulseSpec::new(0.3, 4, 5e13)).unwrap();
    let tight = PropagationOptions {
        rtol: 1e-12,
        atol: 1e-15,
        ..Default::default()
    };
    let a = propagate(&atom.basis, d, &pulse, &tight).unwrap();
    let b = propagate(&atom.basis, d, &pulse, &interaction_picture_toggle(tight.clone())).unwrap();
    let worst = a
        .coefficients
        .iter()
        .zip(&b.coefficients)
        .map(|(x, y)| (x.norm() - y.norm()).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-10, "{worst:e}");
    let yield_ion = yields(&a).y_ion;
    assert!(yield_ion > 1e-6, "{yield_ion}");
}

#[test]
fn default_tolerance_runs_are_deterministic() {
    let (atom, d) = fast_atom();
    let pulse = Pulse::new(PulseSpec::new(0.25, 6, 1e13)).unwrap();
    let opts = PropagationOptions::default();
    let sys = CoupledSystem::new(&atom.basis, d, &opts).unwrap();
    let a = propagate_system(&sys, &pulse, &opts).unwrap();
    let b = propagate_system(&sys, &pulse, &opts).unwrap();
    assert_eq!(a.coefficients, b.coefficients);
    assert_eq!(a.stats, b.stats);
}

#[test]
fn forward_then_backward_recovers_initial_state() {
    let (atom, d) = fast_atom();
    let pulse = Pulse::new(PulseSpec::new(0.3, 10, 1e13)).unwrap();
    let opts = PropagationOptions::default();
    let sys = CoupledSystem::new(&atom.basis, d, &opts).unwrap();
    let (t0, t1) = pulse.window();
    let start = sys.initial_state();
    let mut psi = start.clone();
    sys.evolve(&pulse, &mut psi, t0, t1, &opts, |_, _| ()).unwrap();
    let moved = 1.0 - psi[0].norm_sqr();
    sys.evolve(&pulse, &mut psi, t1, t0, &opts, |_, _| ()).unwrap();
    let overlap: c64 = start.iter().zip(&psi).map(|(a, b)| a.conj() * b).sum();
    let err = 1.0 - overlap.norm_sqr();
    assert!(moved > 1e-5, "pulse left the ground state untouched");
    assert!(err.abs() <= 1e-6, "{err:e}");
}

#[test]
fn energy_cut_convergence() {
    let (atom, d) = fast_atom();
    let pulse = Pulse::new(PulseSpec::new(0.35, 10, 1e13)).unwrap();
    let run = |ev: f64| {
        let opts = PropagationOptions {
            e_cut: Some(ev / boxtdse::observables::HARTREE_EV),
            ..Default::default()
        };
        yields(&propagate(&atom.basis, d, &pulse, &opts).unwrap())
    };
    let low = run(200.0);
    let high = run(300.0);
    assert!((low.y_ion / high.y_ion - 1.0).abs() < 0.01, "{} vs {}", low.y_ion, high.y_ion);
    assert!((low.y_exc / high.y_exc - 1.0).abs() < 0.01, "{} vs {}", low.y_exc, high.y_exc);
}

#[test]
fn halving_tolerance_converges_monotonically() {
    let (atom, d) = fast_atom();
    let molecule = solve_molecule(&TwoCenterSpec::small_preset(2.0)).unwrap();
    let par = molecular_dipole_set(&molecule, Orientation::Parallel).unwrap();
    let perp = molecular_dipole_set(&molecule, Orientation::Perpendicular).unwrap();
    let cases: [(&EigenBasis, &DipoleCouplingSet, f64); 3] = [
        (&atom.basis, d, 0.35),
        (&molecule.basis, &par, 0.4),
        (&molecule.basis, &perp, 0.4),
    ];
    for (basis, set, omega) in cases {
        let pulse = Pulse::new(PulseSpec::new(omega, 6, 1e14)).unwrap();
        let y: Vec<f64> = [1e-4, 5e-5, 2.5e-5, 1.25e-5]
            .iter()
            .map(|&rtol| {
                let opts = PropagationOptions {
                    rtol,
                    atol: rtol * 1e-3,
                    ..Default::default()
                };
                yields(&propagate(basis, set, &pulse, &opts).unwrap()).y_ion
            })
            .collect();
        let changes: Vec<f64> = y.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        assert!(changes.windows(2).all(|c| c[1] < c[0]), "{:?}: {changes:?}", set.orientation);
    }
}

#[test]
fn reflection_symmetrised_propagation_matches_explicit_m_reference() {
    let t = Instant::now();
    let molecule = solve_molecule(&TwoCenterSpec::small_preset(2.0)).unwrap();
    let reduced = molecular_dipole_set(&molecule, Orientation::Perpendicular).unwrap();
    let (explicit_basis, explicit) = explicit_m_system(&molecule).unwrap();
    let opts_default = PropagationOptions::default();
    let reduced_dim = CoupledSystem::new(&molecule.basis, &reduced, &opts_default).unwrap().dim();
    let explicit_dim = CoupledSystem::new(&explicit_basis, &explicit, &opts_default).unwrap().dim();
    assert!(reduced_dim <= 500 && explicit_dim < 2 * reduced_dim, "{reduced_dim} {explicit_dim}");
    let pulse = Pulse::new(PulseSpec::new(0.45, 10, 1e14)).unwrap();
    let opts = PropagationOptions {
        rtol: 1e-12,
        atol: 1e-15,
        ..Default::default()
    };
    let a = yields(&propagate(&molecule.basis, &reduced, &pulse, &opts).unwrap());
    let b = yields(&propagate(&explicit_basis, &explicit, &pulse, &opts).unwrap());
    eprintln!("reduced {a:?}\nexplicit {b:?}\n{:?}", t.elapsed());
    assert!(a.y_ion > 1e-6 && a.y_exc > 1e-6);
    assert!((a.p_gs - b.p_gs).abs() < 1e-10);
    assert!((a.y_exc - b.y_exc).abs() < 1e-10);
    assert!((a.y_ion - b.y_ion).abs() < 1e-10);
}

#[test]
fn norm_drift_beyond_limit_aborts() {
    // strong resonant rotation integrated with a loose tolerance
    let (basis, set) = two_level(0.0, 0.0, 1.0);
    let opts = PropagationOptions {
        rtol: 1e-3,
        atol: 1e-3,
        e_cut: None,
        ..Default::default()
    };
    match propagate(&basis, &set, &Flat { end: 100.0, a0: 1.0 }, &opts) {
        Err(PropagationError::NormDrift { t, drift }) => {
            assert!(drift > 100.0 * opts.rtol);
            assert!(t > 0.0 && t < 100.0);
        }
        other => panic!("expected a norm drift abort, got {:?}", other.map(|r| r.norm_drift)),
    }
}

#[test]
fn unreachable_blocks_are_pruned() {
    let molecule = solve_molecule(&TwoCenterSpec::small_preset(2.0)).unwrap();
    let opts = PropagationOptions {
        e_cut: None,
        ..Default::default()
    };
    let par = molecular_dipole_set(&molecule, Orientation::Parallel).unwrap();
    let sys = CoupledSystem::new(&molecule.basis, &par, &opts).unwrap();
    let labels: Vec<String> = sys.blocks().iter().map(|b| b.label.to_string()).collect();
    assert_eq!(labels, ["sigmag", "sigmau"]);
    let perp = molecular_dipole_set(&molecule, Orientation::Perpendicular).unwrap();
    let sys = CoupledSystem::new(&molecule.basis, &perp, &opts).unwrap();
    let labels: Vec<String> = sys.blocks().iter().map(|b| b.label.to_string()).collect();
    assert_eq!(labels, ["sigmag", "piu", "deltag"]);
}

#[test]
fn step_limit_is_reported() {
    let (atom, d) = fast_atom();
    let pulse = Pulse::new(PulseSpec::new(0.3, 4, 1e13)).unwrap();
    let opts = PropagationOptions {
        max_steps: 10,
        ..Default::default()
    };
    assert!(matches!(propagate(&atom.basis, d, &pulse, &opts), Err(PropagationError::Solver(_))));
}
