use super::*;
use crate::blume_capel::BlumeCapelParams;
use crate::ed;
use crate::rsos::{build_hamiltonian_sparse, RsosBc};

fn cfg(chi: usize) -> DmrgConfig {
    DmrgConfig {
        chi_max: chi,
        energy_tol: 1e-12,
        lanczos_tol: 1e-11,
        ..DmrgConfig::default()
    }
}

#[test]
fn zigzag_initial_paths() {
    let r2 = RsosBc::fixed_r1(2);
    assert_eq!(zigzag_path(4, 7, &r2, &r2).unwrap(), vec![2, 3, 2, 3, 2, 3, 2]);
    let one = RsosBc::fixed_1s(1);
    assert_eq!(zigzag_path(3, 5, &one, &one).unwrap(), vec![1, 2, 1, 2, 1]);
    let two = RsosBc::fixed_1s(2);
    assert_eq!(zigzag_path(4, 6, &one, &two).unwrap(), vec![1, 2, 1, 2, 1, 2]);
    assert_eq!(zigzag_path(4, 6, &one, &RsosBc::fixed_1s(4)).unwrap(), vec![1, 2, 1, 2, 3, 4]);
    assert!(zigzag_path(4, 5, &one, &two).is_err());
}

#[test]
fn initial_states_are_normalized_products() {
    let two = RsosBc::fixed_1s(2);
    let spec = SpinChainSpec::rsos(4, 5, two, two);
    let mut psi = initial_state(&spec, InitialProtocol::Uniform).unwrap();
    assert!((psi.norm() - 1.0).abs() < 1e-14);
    let occ = psi.occupation_profile().unwrap();
    assert!(occ.iter().all(|row| row[1] == 1.0));
    assert!(initial_state(&SpinChainSpec::rsos(4, 6, two, two), InitialProtocol::Path).is_err());

    let bc = SpinChainSpec::blume_capel(BlumeCapelParams::tricritical(0.0), 6);
    let mut cat = initial_state(&bc, InitialProtocol::Path).unwrap();
    assert_eq!(cat.max_bond_dim(), 2);
    assert!((cat.schmidt_at(3, false).unwrap().entropy - 2f64.ln()).abs() < 1e-12);
    let parity = cat.expectation_product(&parity_operators(&bc)).unwrap();
    assert!((parity - 1.0).abs() < 1e-12);
}

fn rsos_check(p: u32, l: usize, left: RsosBc, right: RsosBc) {
    let spec = SpinChainSpec::rsos(p, l, left, right);
    let (basis, h) = build_hamiltonian_sparse(p, l, &left, &right).unwrap();
    let (e_ed, v) = ed::ground_state(&h, 1, 1e-12).unwrap();
    let out = ground_state(&spec, &cfg(64)).unwrap();
    assert!(out.converged, "{:?}", out.sweeps);
    assert!((out.energy - e_ed).abs() < 1e-9, "DMRG {} vs ED {e_ed}", out.energy);
    let mut mps = out.mps;
    for cut in 1..l {
        let a = mps.schmidt_at(cut, true).unwrap();
        let b = ed::schmidt_constrained(&basis, &v, cut).unwrap();
        for (x, y) in a.weights.iter().zip(&b.weights).take(20) {
            assert!((x - y).abs() < 1e-8, "cut {cut}: {x} vs {y}");
        }
    }
}

#[test]
fn matches_ed_for_fixed_ends() {
    rsos_check(3, 9, RsosBc::fixed_1s(1), RsosBc::fixed_1s(1));
    rsos_check(4, 10, RsosBc::fixed_1s(1), RsosBc::fixed_1s(2));
}

#[test]
fn matches_ed_for_pinned_pairs() {
    rsos_check(4, 11, RsosBc::fixed_r1(2), RsosBc::fixed_r1(2));
}

#[test]
fn sweeps_are_variational() {
    let one = RsosBc::fixed_1s(1);
    let spec = SpinChainSpec::rsos(4, 13, one, one);
    let out = ground_state(
        &spec,
        &DmrgConfig {
            chi_schedule: vec![2, 4, 8, 16, 32],
            chi_max: 32,
            ..cfg(32)
        },
    )
    .unwrap();
    for w in out.sweeps.windows(2) {
        let scale = w[0].energy.abs();
        assert!(w[1].energy <= w[0].energy + scale * (1e-12 + w[1].max_truncation), "{:?}", out.sweeps);
    }
    let (_, h) = build_hamiltonian_sparse(4, 13, &one, &one).unwrap();
    let (e_ed, _) = ed::ground_state(&h, 0, 1e-12).unwrap();
    assert!(out.energy >= e_ed - 1e-10);
}

#[test]
fn parity_and_occupations_after_convergence() {
    let one = RsosBc::fixed_1s(1);
    let spec = SpinChainSpec::rsos(4, 11, one, one);
    let psi0 = initial_state(&spec, InitialProtocol::Path).unwrap();
    let ops = parity_operators(&spec);
    let before = psi0.expectation_product(&ops).unwrap();
    let mut out = ground_state(&spec, &cfg(32)).unwrap();
    let after = out.mps.expectation_product(&ops).unwrap();
    assert!((before - after).abs() < 1e-8);
    let occ = out.mps.occupation_profile().unwrap();
    assert!(occ[0][0] > 0.99 && occ[10][0] > 0.99);
    for (j, row) in occ.iter().enumerate() {
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        for (a, b) in row.iter().zip(&occ[10 - j]) {
            assert!((a - b).abs() < 1e-8);
        }
    }
}

#[test]
fn center_spectrum_independent_of_sweep_direction() {
    let one = RsosBc::fixed_1s(1);
    let spec = SpinChainSpec::rsos(3, 11, one, one);
    let mut out = ground_state(&spec, &cfg(32)).unwrap();
    let mut moved = out.mps.clone();
    moved.move_center(10).unwrap();
    let a = out.mps.schmidt_at(5, false).unwrap();
    let b = moved.schmidt_at(5, false).unwrap();
    for (x, y) in a.weights.iter().zip(&b.weights) {
        assert!((x - y).abs() < 1e-10);
    }
}

#[test]
fn blume_capel_matches_sparse_diagonalization() {
    for h_b in [0.0, 1.0] {
        let params = BlumeCapelParams::tricritical(h_b);
        let spec = SpinChainSpec::blume_capel(params, 8);
        let h = spec.build_mpo().unwrap().to_sparse().unwrap();
        let (e_ed, _) = ed::ground_state(&h, 3, 1e-12).unwrap();
        let out = ground_state(&spec, &cfg(81)).unwrap();
        assert!((out.energy - e_ed).abs() < 1e-9, "h_b = {h_b}: {} vs {e_ed}", out.energy);
    }
}

#[test]
fn uniform_start_with_noise_reaches_the_constrained_ground_state() {
    // L = 9 is 1 mod 4, so |2…2⟩ has the parity of the constrained sector
    let two = RsosBc::fixed_1s(2);
    let spec = SpinChainSpec::rsos(4, 9, two, two);
    let (_, h) = build_hamiltonian_sparse(4, 9, &two, &two).unwrap();
    let (e_ed, _) = ed::ground_state(&h, 0, 1e-12).unwrap();
    let full = spec.build_mpo().unwrap().to_sparse().unwrap();
    let (e_full, _) = ed::ground_state(&full, 0, 1e-12).unwrap();
    assert!((e_full - spec.energy_offset() - e_ed).abs() < 1e-9, "full-space minimum is constrained");
    let out = ground_state(
        &spec,
        &DmrgConfig {
            initial: InitialProtocol::Uniform,
            noise: 1e-3,
            noise_sweeps: 3,
            ..cfg(64)
        },
    )
    .unwrap();
    assert!((out.energy - e_ed).abs() < 1e-9, "{} vs {e_ed}", out.energy);
}

#[test]
fn uniform_start_without_noise_stays_put() {
    let two = RsosBc::fixed_1s(2);
    let spec = SpinChainSpec::rsos(4, 9, two, two);
    let out = ground_state(
        &spec,
        &DmrgConfig {
            initial: InitialProtocol::Uniform,
            ..cfg(16)
        },
    )
    .unwrap();
    assert!(out.energy.abs() < 1e-12);
}

#[test]
fn checkpoint_round_trip_after_run() {
    let one = RsosBc::fixed_1s(1);
    let spec = SpinChainSpec::rsos(3, 9, one, one);
    let c = cfg(16);
    let out = ground_state(&spec, &c).unwrap();
    let mut buf = Vec::new();
    write_checkpoint(&mut buf, &out.mps, &c, &out.sweeps).unwrap();
    let back = read_checkpoint(&buf).unwrap();
    assert_eq!(back.mps, out.mps);
    assert_eq!(back.sweeps, out.sweeps);
}

#[test]
fn runs_are_deterministic() {
    let r = RsosBc::fixed_r1(2);
    let spec = SpinChainSpec::rsos(4, 11, r, r);
    let a = ground_state(&spec, &cfg(32)).unwrap();
    let b = ground_state(&spec, &cfg(32)).unwrap();
    assert_eq!(a.energy.to_bits(), b.energy.to_bits());
    assert_eq!(a.mps, b.mps);
}
