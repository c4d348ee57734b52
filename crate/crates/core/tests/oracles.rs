//! Independent oracles for the numerical kernels and the augmentation
//! statistics.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use proptest::prelude::*;

use csimeta::augment::{augment_dataset, estimate_stats, AugmentConfig, Augmenter};
use csimeta::channel::{channel_to_csi, simulate_ue, Cluster, SimScenario};
use csimeta::metaenv::{build_bases, MetaEnvConfig};
use csimeta::model::sgcs;
use csimeta::numerics::{complex_gaussian, hermitian_eig, Purpose};
use csimeta::{ComplexMatrix, RngStream, SystemConfig};

/// Eigenvalues of the real symmetric embedding `[[Re, -Im], [Im, Re]]`, which
/// lists every eigenvalue of the Hermitian input twice.
fn embedded_eigenvalues(a: &ComplexMatrix) -> Vec<f64> {
    let n = a.rows();
    let m = DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = a.as_slice()[(i % n) * n + j % n];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let mut values: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    values.sort_by(|x, y| y.total_cmp(x));
    values.into_iter().step_by(2).collect()
}

fn random_psd(seed: u64, n: usize) -> ComplexMatrix {
    let x = complex_gaussian(&mut RngStream::new(seed, 0), n, n);
    x.matmul(&x.adjoint())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn eigenvalues_match_real_embedding(seed in any::<u64>(), n in 2usize..=16) {
        let a = random_psd(seed, n);
        let eig = hermitian_eig(&a).unwrap();
        let oracle = embedded_eigenvalues(&a);
        let scale = oracle[0].abs().max(1.0);
        for (x, y) in eig.values.iter().zip(&oracle) {
            prop_assert!((x - y).abs() < 1e-9 * scale, "{x} vs {y}");
        }
        let err = eig.reconstruct().sub(&a).frobenius_norm() / a.frobenius_norm();
        prop_assert!(err < 1e-8);
    }
}

#[test]
fn sixteen_by_sixteen_matches_oracle_closely() {
    let a = random_psd(16, 16);
    let eig = hermitian_eig(&a).unwrap();
    let worst = eig
        .values
        .iter()
        .zip(embedded_eigenvalues(&a))
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-9, "max |dl| = {worst}");
}

/// Van Loan rearrangement: `A ⊗ B` maps to the rank-1 matrix `vec(A) vec(B)ᵀ`.
fn rearrange(s: &ComplexMatrix, n_h: usize, n_v: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(n_h * n_h, n_v * n_v, |r, c| {
        let (i, j) = (r / n_h, r % n_h);
        let (k, l) = (c / n_v, c % n_v);
        s.as_slice()[(i * n_v + k) * s.cols() + j * n_v + l]
    })
}

#[test]
fn spatial_bases_have_kronecker_rank_one() {
    let sys = SystemConfig::desk();
    let cfg = MetaEnvConfig {
        groups: 4,
        ..MetaEnvConfig::desk(&sys)
    };
    let bases = build_bases(&sys, &cfg, &mut RngStream::keyed(7, Purpose::Bases, &[])).unwrap();
    assert_eq!(bases.spatial_groups.len(), 4);
    for g in &bases.spatial_groups {
        let sv = rearrange(&g.basis, sys.n_h, sys.n_v).singular_values();
        let mut sv: Vec<f64> = sv.iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        assert!(sv[1] / sv[0] < 1e-10, "singular values {sv:?}");
    }
}

#[test]
fn estimated_stats_recover_known_covariance() {
    let sys = SystemConfig::desk();
    let scen = SimScenario::desk(&sys);
    let seeds = simulate_ue(
        &sys,
        &scen,
        &mut RngStream::keyed(21, Purpose::UeGeometry, &[0]),
        5,
        0,
    );
    let truth = estimate_stats(&sys, &seeds).unwrap();
    let aug = Augmenter::new(&sys, &truth).unwrap();
    let mut rng = RngStream::new(21, 1);
    let draws: Vec<_> = (0..10_000).map(|k| aug.draw(&mut rng, k)).collect();
    let est = estimate_stats(&sys, &draws).unwrap();
    for d in 0..sys.n_d {
        if truth.p_hat[d] == 0.0 {
            assert_eq!(est.p_hat[d], 0.0);
            continue;
        }
        let target = truth.r[d].scale_real(truth.p_hat[d]);
        let got = est.r[d].scale_real(est.p_hat[d]);
        let err = got.sub(&target).frobenius_norm() / target.frobenius_norm();
        assert!(err < 0.03, "delay {d}: relative error {err}");
    }
}

fn single_path_scenario() -> SimScenario {
    SimScenario {
        clusters: vec![Cluster {
            tap: 0,
            power: 1.0,
            aod_deg: 25.0,
            zod_deg: 95.0,
            aoa_deg: -40.0,
        }],
        rays_per_cluster: 1,
        aod_spread_deg: 0.0,
        zod_spread_deg: 0.0,
        aoa_spread_deg: 0.0,
        ue_azimuth_jitter_deg: 0.0,
        max_doppler_hz: 0.0,
        slot_spacing_s: 5e-4,
    }
}

#[test]
fn rank_one_seed_augments_along_its_steering_vector() {
    let sys = SystemConfig::desk();
    let seeds = simulate_ue(
        &sys,
        &single_path_scenario(),
        &mut RngStream::new(3, 0),
        3,
        0,
    );
    let seed_csi = channel_to_csi(&sys, &seeds[0]).unwrap();
    let cfg = AugmentConfig {
        n_aug: 1,
        ..AugmentConfig::default()
    };
    let aug = augment_dataset(&sys, &cfg, &[seeds], 3).unwrap();
    assert_eq!(aug.len(), 1);
    let rho = sgcs(&seed_csi.w, &aug[0].w).unwrap();
    assert!(rho > 0.99, "SGCS {rho}");
}
