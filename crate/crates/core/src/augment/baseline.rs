use std::f64::consts::PI;

use num_complex::Complex64;

use super::Scheme;
use crate::channel::{normalize_columns, CsiEigen, Origin};
use crate::error::{Error, Result};
use crate::numerics::{ComplexMatrix, RngStream};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineParams {
    /// Number of new samples requested. Flipping is capped at one per source.
    pub count: usize,
    /// Noise-injection SNR per column, dB.
    pub noise_snr_db: f64,
}

/// Generates new samples from `samples` with one of the baseline transforms.
///
/// Sources are visited round-robin. Every output is renormalised per column
/// and tagged [`Origin::BaselineAugmented`].
pub fn augment_baseline(
    scheme: Scheme,
    samples: &[CsiEigen],
    rng: &mut RngStream,
    params: &BaselineParams,
) -> Result<Vec<CsiEigen>> {
    if samples.is_empty() {
        return Err(Error::Shape(
            "baseline augmentation needs source samples".into(),
        ));
    }
    let count = match scheme {
        Scheme::Flipping => params.count.min(samples.len()),
        Scheme::None | Scheme::Proposed => return Err(Error::UnknownScheme(scheme.name().into())),
        _ => params.count,
    };
    (0..count)
        .map(|k| {
            let src = &samples[k % samples.len()];
            let mut w = transform(scheme, &src.w, rng, params.noise_snr_db);
            normalize_columns(&mut w)?;
            Ok(CsiEigen {
                w,
                eigvals: src.eigvals.clone(),
                ue_id: src.ue_id,
                slot: src.slot,
                task_id: src.task_id,
                origin: Origin::BaselineAugmented,
            })
        })
        .collect()
}

fn transform(scheme: Scheme, w: &ComplexMatrix, rng: &mut RngStream, snr_db: f64) -> ComplexMatrix {
    let (n_t, n_sb) = (w.rows(), w.cols());
    match scheme {
        Scheme::NoiseInjection => {
            // Unit-norm columns carry 1/n_t power per entry.
            let sigma = (1.0 / n_t as f64 / 10f64.powf(snr_db / 10.0)).sqrt();
            ComplexMatrix::from_fn(n_t, n_sb, |i, l| w[(i, l)] + rng.complex_normal() * sigma)
        }
        Scheme::Flipping => ComplexMatrix::from_fn(n_t, n_sb, |i, l| w[(i, n_sb - 1 - l)]),
        Scheme::CyclicShift => {
            let k = if n_t > 1 {
                rng.uniform_int(1, n_t - 1)
            } else {
                0
            };
            ComplexMatrix::from_fn(n_t, n_sb, |i, l| w[((i + k) % n_t, l)])
        }
        Scheme::RandomShift => {
            let k = if n_sb > 1 {
                rng.uniform_int(1, n_sb - 1)
            } else {
                0
            };
            ComplexMatrix::from_fn(n_t, n_sb, |i, l| w[(i, (l + k) % n_sb)])
        }
        Scheme::Rotation => {
            let theta = rng.uniform_range(0.0, 2.0 * PI);
            w.scale(Complex64::from_polar(1.0, theta))
        }
        Scheme::None | Scheme::Proposed => unreachable!("filtered by caller"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::SystemConfig;
    use crate::metaenv::{build_meta_env, MetaEnvConfig};
    use crate::model::sgcs;

    fn sources(n: usize) -> Vec<CsiEigen> {
        let sys = SystemConfig::desk();
        let cfg = MetaEnvConfig {
            tasks: 50,
            seed: 3,
            ..MetaEnvConfig::desk(&sys)
        };
        build_meta_env(&sys, &cfg)
            .unwrap()
            .tasks
            .into_iter()
            .flat_map(|t| t.samples)
            .take(n)
            .collect()
    }

    fn params(count: usize) -> BaselineParams {
        BaselineParams {
            count,
            noise_snr_db: 10.0,
        }
    }

    #[test]
    fn rotation_preserves_sgcs() {
        let src = sources(20);
        let out = augment_baseline(
            Scheme::Rotation,
            &src,
            &mut RngStream::new(1, 0),
            &params(20),
        )
        .unwrap();
        for (a, b) in src.iter().zip(&out) {
            assert!((sgcs(&a.w, &b.w).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn flipping_is_an_involution_and_capped() {
        let src = sources(10);
        let mut rng = RngStream::new(2, 0);
        let once = augment_baseline(Scheme::Flipping, &src, &mut rng, &params(100)).unwrap();
        assert_eq!(once.len(), src.len());
        let twice = augment_baseline(Scheme::Flipping, &once, &mut rng, &params(100)).unwrap();
        for (a, b) in src.iter().zip(&twice) {
            assert!(a.w.sub(&b.w).frobenius_norm() < 1e-14);
        }
    }

    #[test]
    fn shifts_permute_entries() {
        let src = sources(5);
        let mut rng = RngStream::new(3, 0);
        for scheme in [Scheme::CyclicShift, Scheme::RandomShift] {
            let out = augment_baseline(scheme, &src, &mut rng, &params(5)).unwrap();
            for (a, b) in src.iter().zip(&out) {
                let mut x: Vec<f64> = a.w.as_slice().iter().map(|z| z.norm()).collect();
                let mut y: Vec<f64> = b.w.as_slice().iter().map(|z| z.norm()).collect();
                x.sort_by(f64::total_cmp);
                y.sort_by(f64::total_cmp);
                assert!(x.iter().zip(&y).all(|(p, q)| (p - q).abs() < 1e-12));
                assert!(b.max_norm_error() < 1e-12);
                assert_ne!(a.w, b.w);
            }
        }
    }

    #[test]
    fn noise_injection_sgcs_band() {
        let src = sources(1000);
        let out = augment_baseline(
            Scheme::NoiseInjection,
            &src,
            &mut RngStream::new(4, 0),
            &params(1000),
        )
        .unwrap();
        let mean: f64 = src
            .iter()
            .zip(&out)
            .map(|(a, b)| sgcs(&a.w, &b.w).unwrap())
            .sum::<f64>()
            / out.len() as f64;
        assert!(mean > 0.7 && mean < 1.0, "mean sgcs {mean}");
    }

    #[test]
    fn rejects_empty_and_non_baseline() {
        let mut rng = RngStream::new(5, 0);
        assert!(augment_baseline(Scheme::Rotation, &[], &mut rng, &params(1)).is_err());
        let src = sources(1);
        assert!(matches!(
            augment_baseline(Scheme::Proposed, &src, &mut rng, &params(1)),
            Err(Error::UnknownScheme(_))
        ));
    }
}
