mod common;

use common::{hermite_function_direct, jacobi_eigenvalues, rotate_to_sigma_x, sigma_z_hamiltonian, to_rows};
use rabi_lab::eigen::{eig_sym_dense, eig_sym_tridiag, residual_report};
use rabi_lab::model::{build_hamiltonian, build_parity, sector_hamiltonian, Parity};
use rabi_lab::parity::{fock_populations, pair_report, parity_expectation};
use rabi_lab::position::{
    default_grid, hermite_basis, position_wavefunction, symmetry_defect, PositionGrid,
};
use rabi_lab::solve::{solve, Method};
use rabi_lab::sweep::convergence_sentinel;
use rabi_lab::{critical_coupling, ModelParams, Truncation};

fn trunc(n: usize) -> Truncation {
    Truncation::new(n).unwrap()
}

#[test]
fn sigma_z_assembly_rotated_matches() {
    for &(delta, g, n) in &[(1.0, 0.3, 8), (0.5, 0.7, 12), (7.0, 2.5, 10)] {
        let h = build_hamiltonian(&ModelParams::new(delta, g).unwrap(), &trunc(n)).unwrap();
        let oracle = rotate_to_sigma_x(&sigma_z_hamiltonian(delta, g, n));
        let rows = to_rows(&h);
        for i in 0..2 * n {
            for j in 0..2 * n {
                assert!((rows[i][j] - oracle[i][j]).abs() < 1e-14, "({i},{j}) at Δ={delta}, g={g}");
            }
        }
    }
}

#[test]
fn spectrum_matches_jacobi_on_sigma_z_matrix() {
    let (delta, g, n) = (1.0, 0.3, 8);
    let oracle = jacobi_eigenvalues(&sigma_z_hamiltonian(delta, g, n));
    let h = build_hamiltonian(&ModelParams::new(delta, g).unwrap(), &trunc(n)).unwrap();
    let spec = eig_sym_dense(&h, 2 * n).unwrap();
    for (a, b) in spec.eigenvalues.iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}

#[test]
fn sector_blocks_match_full_matrix_blocks() {
    let params = ModelParams::new(3.0, 1.1).unwrap();
    let t = trunc(10);
    let h = to_rows(&build_hamiltonian(&params, &t).unwrap());
    for (parity, p) in [(Parity::Even, 1.0), (Parity::Odd, -1.0)] {
        let idx: Vec<usize> = (0..20)
            .filter(|&i| {
                let (n, s) = (i / 2, if i % 2 == 0 { 1.0 } else { -1.0 });
                s * if n % 2 == 0 { 1.0 } else { -1.0 } == p
            })
            .collect();
        let block: Vec<Vec<f64>> = idx.iter().map(|&i| idx.iter().map(|&j| h[i][j]).collect()).collect();
        let tri = sector_hamiltonian(&params, &t, parity).unwrap();
        let spec = eig_sym_tridiag(&tri.diag, &tri.offdiag, 10).unwrap();
        for (a, b) in spec.eigenvalues.iter().zip(jacobi_eigenvalues(&block)) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn sector_union_matches_full_spectrum() {
    let params = ModelParams::new(1.0, 0.5).unwrap();
    let t = trunc(200);
    let full = solve(&params, &t, 40, Method::Full).unwrap();
    let sect = solve(&params, &t, 40, Method::Sectors).unwrap();
    for (a, b) in full.eigenvalues.iter().zip(&sect.eigenvalues) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn dense_and_tridiagonal_paths_agree() {
    let params = ModelParams::from_ratio(5.0, 2.0).unwrap();
    let t = trunc(300);
    let full = eig_sym_dense(&build_hamiltonian(&params, &t).unwrap(), 12).unwrap();
    let sect = solve(&params, &t, 12, Method::Sectors).unwrap();
    for (a, b) in full.eigenvalues.iter().zip(&sect.eigenvalues) {
        assert!((a - b).abs() < 1e-11);
    }
}

#[test]
fn decoupled_spectrum_is_exact() {
    let delta = 0.8;
    let t = trunc(30);
    let spec = solve(&ModelParams::new(delta, 0.0).unwrap(), &t, 60, Method::Full).unwrap();
    let mut oracle: Vec<f64> = (0..30)
        .flat_map(|n| [n as f64 - delta / 2.0, n as f64 + delta / 2.0])
        .collect();
    oracle.sort_by(f64::total_cmp);
    assert_eq!(spec.eigenvalues, oracle);
}

#[test]
fn displaced_oscillator_limit() {
    let g = 2.0;
    let t = trunc(250);
    let spec = solve(&ModelParams::new(0.0, g).unwrap(), &t, 10, Method::Sectors).unwrap();
    for (i, e) in spec.eigenvalues.iter().enumerate() {
        let exact = (i / 2) as f64 - g * g;
        assert!((e - exact).abs() < 1e-8, "level {i}: {e}");
    }
}

#[test]
fn parity_commutes_in_sigma_z_oracle_too() {
    let n = 12;
    let h = rotate_to_sigma_x(&sigma_z_hamiltonian(2.0, 1.3, n));
    let p = to_rows(&build_parity(&trunc(n)));
    for i in 0..2 * n {
        for j in 0..2 * n {
            assert!((h[i][j] * p[j][j] - p[i][i] * h[i][j]).abs() < 1e-13);
        }
    }
}

#[test]
fn parity_from_independent_sum() {
    let params = ModelParams::from_ratio(50.0, 1.47).unwrap();
    let t = trunc(400);
    let spec = solve(&params, &t, 4, Method::Full).unwrap();
    for v in &spec.eigenvectors {
        let direct: f64 = (0..400)
            .map(|n| {
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                sign * (v[2 * n].powi(2) - v[2 * n + 1].powi(2))
            })
            .sum();
        assert!((parity_expectation(v, &t).unwrap() - direct).abs() < 1e-12);
        let pops = fock_populations(v, &t).unwrap();
        assert!((pops.p_even + pops.p_odd - 1.0).abs() < 1e-12);
    }
}

#[test]
fn hermite_functions_match_closed_form() {
    let grid = PositionGrid::new(6.0, 0.25).unwrap();
    let basis = hermite_basis(&grid, 12).unwrap();
    for n in 0..=12 {
        for (i, x) in grid.points().into_iter().enumerate() {
            assert!((basis.row(n)[i] - hermite_function_direct(n, x)).abs() < 1e-12, "φ_{n}({x})");
        }
    }
    assert!((basis.row(0)[grid.center()] - 0.751_125_544_464_942_5).abs() < 1e-15);
}

#[test]
fn hermite_gram_is_identity() {
    let grid = PositionGrid::new(14.0, 0.02).unwrap();
    let basis = hermite_basis(&grid, 50).unwrap();
    let h = grid.step();
    for m in 0..=50 {
        for n in 0..=m {
            let (a, b) = (basis.row(m), basis.row(n));
            let last = a.len() - 1;
            let mut s: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            s -= 0.5 * (a[0] * b[0] + a[last] * b[last]);
            let expected = if m == n { 1.0 } else { 0.0 };
            assert!((s * h - expected).abs() < 1e-8, "<φ_{m}|φ_{n}> = {}", s * h);
        }
    }
}

#[test]
fn symmetry_defect_tracks_parity() {
    let t = trunc(300);
    for ratio in [0.5, 1.2, 1.5, 2.0] {
        let params = ModelParams::from_ratio(50.0, ratio).unwrap();
        let spec = solve(&params, &t, 4, Method::Full).unwrap();
        let grid = default_grid(&params).unwrap();
        for v in &spec.eigenvectors {
            let wf = position_wavefunction(v, &grid, &t).unwrap();
            let defect = symmetry_defect(&wf).unwrap();
            let p = parity_expectation(v, &t).unwrap();
            assert!((defect - (1.0 - p.abs())).abs() < 1e-4, "g/g_c={ratio}: {defect} vs {p}");
            assert!((wf.norm_sq() - 1.0).abs() < 1e-6);
        }
    }
}

#[test]
fn even_odd_mixture_has_unit_defect() {
    let t = trunc(4);
    let mut v = vec![0.0; 8];
    v[0] = std::f64::consts::FRAC_1_SQRT_2;
    v[1] = std::f64::consts::FRAC_1_SQRT_2;
    let wf = position_wavefunction(&v, &PositionGrid::new(10.0, 0.02).unwrap(), &t).unwrap();
    assert!((symmetry_defect(&wf).unwrap() - 1.0).abs() < 1e-8);
    assert_eq!(parity_expectation(&v, &t).unwrap(), 0.0);
}

#[test]
fn strong_coupling_pair_sums_and_residuals() {
    let params = ModelParams::from_ratio(1.0, 6.0).unwrap();
    let t = trunc(600);
    let spec = solve(&params, &t, 8, Method::Full).unwrap();
    let h = build_hamiltonian(&params, &t).unwrap();
    assert!(residual_report(&h, &spec).unwrap().passed());
    for r in pair_report(&spec, &params, &t, 0.1).unwrap() {
        assert!(r.subspace_trace.abs() < 1e-8);
        assert!(r.gap_shifted.abs() < 1e-10);
    }
}

#[test]
fn sentinel_passes_at_default_truncation() {
    let gc = critical_coupling(1.0).unwrap();
    let params = ModelParams::new(1.0, 6.0 * gc).unwrap();
    assert!(convergence_sentinel(&params, &trunc(1000), 8).unwrap().passed);
}

#[test]
fn irregular_ground_state_is_not_reflection_symmetric() {
    let gc = critical_coupling(50.0).unwrap();
    let t = trunc(1000);
    let grid: Vec<f64> = (0..=40).map(|i| (1.4 + 0.005 * i as f64) * gc).collect();
    let onset = rabi_lab::parity::onset_coupling(50.0, 0, &grid, 0.1, &t).unwrap().unwrap();
    assert!(onset.g_over_gc > 1.4);
    let params = ModelParams::new(50.0, onset.g).unwrap();
    let spec = solve(&params, &t, 2, Method::Full).unwrap();
    let wf = position_wavefunction(&spec.eigenvectors[0], &default_grid(&params).unwrap(), &t).unwrap();
    assert!(symmetry_defect(&wf).unwrap() > 0.1);
}

#[test]
fn strong_coupling_levels_gather_in_pairs() {
    let t = trunc(400);
    let mut previous = f64::INFINITY;
    for ratio in [1.0, 2.0, 3.0, 4.0] {
        let params = ModelParams::from_ratio(1.0, ratio).unwrap();
        let spec = solve(&params, &t, 8, Method::Sectors).unwrap();
        let reports = pair_report(&spec, &params, &t, 0.1).unwrap();
        let widest = reports.iter().map(|r| r.gap_shifted).fold(0.0, f64::max);
        assert!(widest < previous, "g/g_c={ratio}: {widest}");
        previous = widest;
        if ratio >= 3.0 {
            for w in spec.eigenvalues.chunks(2).collect::<Vec<_>>().windows(2) {
                assert!(w[1][0] - w[0][1] > 10.0 * (w[0][1] - w[0][0]), "g/g_c={ratio}: {w:?}");
            }
        }
    }
}

#[test]
fn shifted_ground_level_stays_bounded() {
    let t = trunc(400);
    for i in 0..=30 {
        let params = ModelParams::from_ratio(1.0, 0.2 * i as f64).unwrap();
        let e = solve(&params, &t, 1, Method::Sectors).unwrap().eigenvalues[0];
        let shifted = rabi_lab::model::shifted_energy(e, &params);
        assert!((-1.0..=0.0).contains(&shifted), "g/g_c={}: {shifted}", 0.2 * i as f64);
    }
}
