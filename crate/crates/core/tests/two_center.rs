use boxtdse::two_center::{
    converged_ground_energy, eta_parity, explicit_m_system, molecular_dipole_set, molecular_length_blocks, solve_molecule,
    solve_two_center, solve_unreduced, symmetrize_degenerate, EtaParity, TwoCenterSpec,
};
use boxtdse::{Component, Orientation, Parity, SymmetryBlock};
use std::f64::consts::PI;
use std::time::Instant;

/// Exact clamped-nuclei H₂⁺ 1σg total energies.
const SIGMA_G: [(f64, f64); 2] = [(1.4, -0.569_984), (2.0, -0.602_634)];

#[test]
fn sigma_g_ground_energies_default_preset() {
    for (r, reference) in SIGMA_G {
        let t = Instant::now();
        let block = solve_two_center(&TwoCenterSpec::default_preset(r), SymmetryBlock::sigma_g()).unwrap();
        let e = block.energies[0];
        eprintln!("R = {r}: E = {e:.9} ({:.2?})", t.elapsed());
        assert!((e - reference).abs() < 1e-5, "R = {r}: {e}");
        assert!(t.elapsed().as_secs() < 120);
    }
}

#[test]
fn separated_atom_limit() {
    // at large R the total energy approaches the hydrogen ground state;
    // the residual is the -9/(4R⁴) polarisation attraction
    let spec = TwoCenterSpec {
        eta_splines: 40,
        eta_order: 10,
        xi_splines: 60,
        ..TwoCenterSpec::with_box(100.0, 130.0)
    };
    let e = solve_two_center(&spec, SymmetryBlock::sigma_g()).unwrap().energies[0];
    eprintln!("R = 100: E = {e:.9}");
    assert!((e + 0.5).abs() < 1e-4, "{e}");
    let electronic = e - 1.0 / 100.0;
    assert!((electronic + 0.51).abs() < 1e-4);
}

#[test]
fn electronic_only_convention_shifts_by_one_over_r() {
    let spec = TwoCenterSpec::small_preset(2.0);
    let bare = TwoCenterSpec {
        include_repulsion: false,
        ..spec.clone()
    };
    let a = solve_two_center(&spec, SymmetryBlock::sigma_g()).unwrap();
    let b = solve_two_center(&bare, SymmetryBlock::sigma_g()).unwrap();
    for (x, y) in a.energies.iter().zip(&b.energies) {
        assert!((x - y - 0.5).abs() < 1e-12);
    }
    assert_eq!(spec.threshold(), 0.5);
    assert_eq!(bare.threshold(), 0.0);
}

#[test]
fn symmetry_ordering_of_low_states() {
    // 1σg < 1σu < 1πu < 2σg at R = 2
    let mol = solve_molecule(&TwoCenterSpec::small_preset(2.0).with_lambda_max(1)).unwrap();
    let e = |l, p| mol.block(SymmetryBlock::diatomic(l, p)).unwrap().energies.clone();
    let sg = e(0, Parity::Gerade);
    let su = e(0, Parity::Ungerade);
    let pu = e(1, Parity::Ungerade);
    eprintln!("1sg {} 2sg {} 1su {} 1pu {}", sg[0], sg[1], su[0], pu[0]);
    assert!(sg[0] < su[0] && su[0] < pu[0]);
    assert!(pu[0] < sg[1]);
    // exact electronic 1σu, 1πu and 2σg at R = 2
    assert!((su[0] - 0.5 + 0.667_534).abs() < 1e-3);
    assert!((pu[0] - 0.5 + 0.428_772).abs() < 1e-3);
    assert!((sg[1] - 0.5 + 0.360_865).abs() < 1e-3);
}

#[test]
fn reduced_blocks_union_equals_unreduced_spectrum() {
    let spec = TwoCenterSpec::small_preset(1.4);
    for lambda in 0..=2 {
        let mut reduced: Vec<f64> = [Parity::Gerade, Parity::Ungerade]
            .iter()
            .flat_map(|&p| solve_two_center(&spec, SymmetryBlock::diatomic(lambda, p)).unwrap().energies)
            .collect();
        reduced.sort_by(f64::total_cmp);
        let full = solve_unreduced(&spec, lambda, false).unwrap();
        assert_eq!(reduced.len(), full.len());
        for (a, b) in reduced.iter().zip(&full).take(40) {
            assert!((a - b).abs() < 1e-10 * b.abs().max(1.0), "Λ = {lambda}: {a} vs {b}");
        }
    }
}

#[test]
fn nuclear_exchange_leaves_energies_unchanged() {
    let spec = TwoCenterSpec::small_preset(2.0);
    for lambda in 0..=2 {
        let a = solve_unreduced(&spec, lambda, false).unwrap();
        let b = solve_unreduced(&spec, lambda, true).unwrap();
        let worst = a.iter().zip(&b).take(60).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-12, "Λ = {lambda}: {worst:e}");
    }
}

#[test]
fn converged_ground_energy_checks_refinement() {
    let spec = TwoCenterSpec::small_preset(2.0);
    assert!(converged_ground_energy(&spec, 1e-2).is_ok());
    let coarse = TwoCenterSpec {
        xi_splines: 8,
        xi_order: 4,
        eta_splines: 4,
        eta_order: 3,
        ..spec
    };
    assert!(converged_ground_energy(&coarse, 1e-7).is_err());
}

#[test]
fn eta_node_filter_removes_states() {
    let spec = TwoCenterSpec::small_preset(2.0);
    let all = solve_two_center(&spec, SymmetryBlock::sigma_g()).unwrap();
    let filtered = solve_two_center(
        &TwoCenterSpec {
            eta_node_limit: Some(2),
            ..spec
        },
        SymmetryBlock::sigma_g(),
    )
    .unwrap();
    assert!(filtered.len() < all.len());
    // the nodeless ground state survives
    assert_eq!(filtered.energies[0], all.energies[0]);
}

#[test]
fn parity_selection_rules() {
    let mol = solve_molecule(&TwoCenterSpec::small_preset(2.0)).unwrap();
    let b = &mol.basis;
    let idx = |l, p| b.block_index(SymmetryBlock::diatomic(l, p)).unwrap();
    let par = molecular_dipole_set(&mol, Orientation::Parallel).unwrap();
    let per = molecular_dipole_set(&mol, Orientation::Perpendicular).unwrap();
    assert!(par.consistent_with(b) && per.consistent_with(b));
    assert!(par.is_coupled(idx(0, Parity::Gerade), idx(0, Parity::Ungerade)));
    assert!(!par.is_coupled(idx(0, Parity::Gerade), idx(1, Parity::Ungerade)));
    assert!(per.is_coupled(idx(0, Parity::Gerade), idx(1, Parity::Ungerade)));
    assert!(per.is_coupled(idx(1, Parity::Ungerade), idx(2, Parity::Gerade)));
    assert!(!per.is_coupled(idx(0, Parity::Gerade), idx(0, Parity::Ungerade)));
    assert!(!per.is_coupled(idx(0, Parity::Gerade), idx(1, Parity::Gerade)));
    for c in par.blocks.iter().chain(&per.blocks) {
        let (r, k) = (b.blocks[c.row].label, b.blocks[c.col].label);
        if let (SymmetryBlock::Diatomic { parity: p1, .. }, SymmetryBlock::Diatomic { parity: p2, .. }) = (r, k) {
            assert_ne!(p1, p2);
        }
    }
}

#[test]
fn sqrt2_appears_exactly_for_sigma_pi_pairs() {
    let mol = solve_molecule(&TwoCenterSpec::small_preset(2.0)).unwrap();
    let per = molecular_dipole_set(&mol, Orientation::Perpendicular).unwrap();
    let (ref_basis, ref_set) = explicit_m_system(&mol).unwrap();
    let pick = |l, p, c| {
        ref_basis
            .block_index(SymmetryBlock::Diatomic {
                lambda: l,
                parity: p,
                component: c,
            })
            .unwrap()
    };
    let sym = |l, p| mol.basis.block_index(SymmetryBlock::diatomic(l, p)).unwrap();
    let sg = sym(0, Parity::Gerade);
    let pu = sym(1, Parity::Ungerade);
    let dg = sym(2, Parity::Gerade);
    let raw_sp = ref_set.block(pick(1, Parity::Ungerade, Component::PlusM), 0).unwrap();
    let raw_pd = ref_set
        .block(
            pick(2, Parity::Gerade, Component::PlusM),
            pick(1, Parity::Ungerade, Component::PlusM),
        )
        .unwrap();
    let s_sp = per.block(pu, sg).unwrap();
    let s_pd = per.block(dg, pu).unwrap();
    let d1 = (&s_sp - &raw_sp * faer::Scale(2f64.sqrt())).norm_max();
    let d2 = (&s_pd - &raw_pd).norm_max();
    assert!(d1 < 1e-14 * s_sp.norm_max().max(1.0));
    assert!(d2 < 1e-14 * s_pd.norm_max().max(1.0));
    assert!(raw_sp.norm_max() > 1e-3 && raw_pd.norm_max() > 1e-3);
    // the -M chain carries the same elements
    let raw_minus = ref_set.block(pick(1, Parity::Ungerade, Component::MinusM), 0).unwrap();
    assert_eq!((&raw_minus - &raw_sp).norm_max(), 0.0);
}

#[test]
fn velocity_and_length_gauges_agree() {
    let spec = TwoCenterSpec {
        lambda_max: 2,
        ..TwoCenterSpec::with_box(2.0, 60.0)
    };
    let mol = solve_molecule(&spec).unwrap();
    let threshold = mol.basis.threshold;
    for orientation in [Orientation::Parallel, Orientation::Perpendicular] {
        let vel = molecular_dipole_set(&mol, orientation).unwrap();
        let len = molecular_length_blocks(&mol, orientation).unwrap();
        let mut checked = 0;
        for (v, l) in vel.blocks.iter().zip(&len) {
            assert_eq!((v.row, v.col), (l.row, l.col));
            let er = &mol.basis.blocks[v.row].energies;
            let ec = &mol.basis.blocks[v.col].energies;
            for i in 0..4 {
                for j in 0..4 {
                    if er[i] > threshold - 0.05 || ec[j] > threshold - 0.05 {
                        continue;
                    }
                    let expect = (ec[j] - er[i]) * l.matrix[(i, j)];
                    let got = v.matrix[(i, j)];
                    assert!(
                        (got - expect).abs() <= 1e-5 * expect.abs().max(1e-2),
                        "{orientation} {}<-{} ({i},{j}): {got} vs {expect}",
                        v.row,
                        v.col
                    );
                    checked += 1;
                }
            }
        }
        assert!(checked > 10, "{orientation}: {checked}");
    }
}

#[test]
fn couplings_are_antisymmetric_in_primitive_form() {
    // <φ'|∂|φ> = -<φ|∂|φ'> between eigenstates of a block pair implies the
    // assembled matrix is exactly antisymmetric
    let mol = solve_molecule(&TwoCenterSpec::small_preset(2.0)).unwrap();
    for o in [Orientation::Parallel, Orientation::Perpendicular] {
        let d = molecular_dipole_set(&mol, o).unwrap().to_dense(&mol.basis);
        assert_eq!((&d + d.transpose()).norm_max(), 0.0);
    }
}

#[test]
fn symmetrized_orbitals() {
    let mol = solve_molecule(&TwoCenterSpec::small_preset(2.0).with_lambda_max(1)).unwrap();
    let sigma = mol.orbital(SymmetryBlock::sigma_g(), 0).unwrap();
    let s0 = symmetrize_degenerate(&sigma);
    assert!(s0.unchanged);
    assert_eq!(s0.orbital.coefficients, sigma.coefficients);
    let (re, im) = sigma.value(1.3, 0.2, 0.7);
    assert!((s0.orbital.value(1.3, 0.2, 0.7) - re).abs() < 1e-15 && im == 0.0);

    let pi = mol.orbital(SymmetryBlock::diatomic(1, Parity::Ungerade), 0).unwrap();
    let sym = symmetrize_degenerate(&pi);
    assert!(!sym.unchanged);
    // (ψ + ψ*)/√2 pointwise
    let conj = pi.conj();
    for &(x, y, p) in &[(1.2, 0.3, 0.4), (2.5, -0.6, 2.0), (4.0, 0.9, -1.1)] {
        let a = pi.value(x, y, p);
        let b = conj.value(x, y, p);
        let expect = (a.0 + b.0) / 2f64.sqrt();
        assert!((a.1 + b.1).abs() < 1e-15);
        assert!((sym.orbital.value(x, y, p) - expect).abs() < 1e-14);
        // reflection is conjugation, and the combination is a fixed point
        let refl = pi.reflect().value(x, y, p);
        assert_eq!(refl, b);
        assert!((sym.orbital.value(x, y, -p) - sym.orbital.value(x, y, p)).abs() < 1e-15);
    }
    // unit norm: (ξ, η) part times ∫ cos²(φ)/π dφ
    let n = 2000;
    let ang: f64 = (0..n)
        .map(|i| {
            let p = 2.0 * PI * i as f64 / n as f64;
            (p.cos().powi(2) / PI) * 2.0 * PI / n as f64
        })
        .sum();
    assert!((ang - 1.0).abs() < 1e-12);
    assert!((sym.orbital.spatial_norm() - 1.0).abs() < 1e-10);
    assert!((pi.spatial_norm() - 1.0).abs() < 1e-10);
}

#[test]
fn eta_parity_of_computed_orbitals() {
    let mol = solve_molecule(&TwoCenterSpec::small_preset(2.0)).unwrap();
    for b in &mol.basis.blocks {
        let SymmetryBlock::Diatomic { lambda, parity, .. } = b.label else { unreachable!() };
        let orb = mol.orbital(b.label, 0).unwrap();
        let sign = if eta_parity(lambda, parity) == EtaParity::Even { 1.0 } else { -1.0 };
        for &(x, y) in &[(1.5, 0.3), (2.2, 0.71), (3.0, 0.05)] {
            let a = orb.radial(x, y);
            let c = orb.radial(x, -y);
            assert!((a - sign * c).abs() < 1e-12 * a.abs().max(1e-6), "{}: {a} {c}", b.label);
        }
    }
}
