//! Statistics-matched augmentation of a small seeded target dataset, plus the
//! baseline augmenters it is compared against.
//!
//! For each UE the power-delay spectrum `p̂_d` and the joint spatial
//! correlation `R_d = R^rx_d ⊗ R^tx_d` are estimated from its seed slots. New
//! channels are drawn as `ĥ_d = √p̂_d · U_d D_d^{1/2} n` with `R_d = U_d D_d U_dᴴ`
//! and reshaped rx-major into `n_r × n_t` taps, so that `E[ĥ_d ĥ_dᴴ] = p̂_d R_d`.

mod baseline;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{channel_to_csi, CsiEigen, Origin, SystemConfig, TimeChannel};
use crate::error::{Error, Result};
use crate::numerics::{hermitian_eig, kron, ComplexMatrix, Purpose, RngStream};

pub use baseline::{augment_baseline, BaselineParams};

/// Augmentation scheme selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    None,
    NoiseInjection,
    Flipping,
    CyclicShift,
    RandomShift,
    Rotation,
    Proposed,
}

impl Scheme {
    pub const BASELINES: [Scheme; 5] = [
        Scheme::NoiseInjection,
        Scheme::Flipping,
        Scheme::CyclicShift,
        Scheme::RandomShift,
        Scheme::Rotation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::None => "none",
            Scheme::NoiseInjection => "noise-injection",
            Scheme::Flipping => "flipping",
            Scheme::CyclicShift => "cyclic-shift",
            Scheme::RandomShift => "random-shift",
            Scheme::Rotation => "rotation",
            Scheme::Proposed => "proposed",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Scheme::None,
            Scheme::NoiseInjection,
            Scheme::Flipping,
            Scheme::CyclicShift,
            Scheme::RandomShift,
            Scheme::Rotation,
            Scheme::Proposed,
        ]
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| Error::UnknownScheme(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    /// Augmented samples per UE.
    pub n_aug: usize,
    pub scheme: Scheme,
    /// SNR of the noise-injection baseline, dB.
    pub noise_snr_db: f64,
    /// Keep the seed samples in the augmented dataset.
    #[serde(default = "default_include_seeds")]
    pub include_seeds: bool,
}

fn default_include_seeds() -> bool {
    true
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            n_aug: 50,
            scheme: Scheme::Proposed,
            noise_snr_db: 10.0,
            include_seeds: true,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_aug == 0 {
            return Err(Error::config("augment.n_aug", "must be at least 1"));
        }
        if !self.noise_snr_db.is_finite() {
            return Err(Error::config("augment.noise_snr_db", "must be finite"));
        }
        Ok(())
    }
}

/// Second-order channel statistics of one UE.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelStats {
    /// Per-delay power, normalised per antenna pair and slot.
    pub p_hat: Vec<f64>,
    /// Transmit correlation per delay, trace `n_t`, in row-covariance form
    /// `n_t Σ Hᵀ H̄ / Tr` so that `R = R^rx ⊗ R^tx` is the covariance of the
    /// rx-major vectorisation. Its transpose is the usual `n_t Σ Hᴴ H / Tr`.
    pub r_tx: Vec<ComplexMatrix>,
    /// Receive correlation per delay, trace `n_r`.
    pub r_rx: Vec<ComplexMatrix>,
    /// Joint correlation `R^rx ⊗ R^tx` per delay.
    pub r: Vec<ComplexMatrix>,
    pub n_slots: usize,
    pub ue_id: u32,
}

impl ChannelStats {
    pub fn n_delays(&self) -> usize {
        self.p_hat.len()
    }

    /// Target covariance `p̂_d R_d` of the vectorised tap `d`.
    pub fn target_covariance(&self, d: usize) -> ComplexMatrix {
        self.r[d].scale_real(self.p_hat[d])
    }
}

/// Estimates `p̂_d`, `R^tx_d`, `R^rx_d` and `R_d` from one UE's seed slots.
///
/// Delays that carry no power get zero correlation matrices and `p̂_d = 0`,
/// which makes the augmenter emit zero taps there.
pub fn estimate_stats(sys: &SystemConfig, seeds: &[TimeChannel]) -> Result<ChannelStats> {
    let first = seeds
        .first()
        .ok_or_else(|| Error::Shape("no seed slots for statistics".into()))?;
    for s in seeds {
        s.check_shape(sys)?;
        if s.ue_id != first.ue_id {
            return Err(Error::Shape(format!(
                "seed slots mix ue {} and ue {}",
                first.ue_id, s.ue_id
            )));
        }
    }
    let n_slots = seeds.len();
    let (n_t, n_r) = (sys.n_t, sys.n_r);
    let mut p_hat = Vec::with_capacity(sys.n_d);
    let mut r_tx = Vec::with_capacity(sys.n_d);
    let mut r_rx = Vec::with_capacity(sys.n_d);
    let mut r = Vec::with_capacity(sys.n_d);
    for d in 0..sys.n_d {
        let mut tx = ComplexMatrix::zeros(n_t, n_t);
        let mut rx = ComplexMatrix::zeros(n_r, n_r);
        for s in seeds {
            let h = &s.taps[d];
            // Hᵀ H̄ = conj(Hᴴ H).
            let gram = h.adjoint_matmul(h);
            for (acc, g) in tx.as_mut_slice().iter_mut().zip(gram.as_slice()) {
                *acc += g.conj();
            }
            rx.add_assign(&h.matmul(&h.adjoint()));
        }
        let power = tx.trace().re;
        p_hat.push(power / (n_t * n_r * n_slots) as f64);
        if power > 0.0 {
            let tx = tx.scale_real(n_t as f64 / power);
            let rx = rx.scale_real(n_r as f64 / rx.trace().re);
            r.push(kron(&rx, &tx));
            r_tx.push(tx);
            r_rx.push(rx);
        } else {
            r_tx.push(ComplexMatrix::zeros(n_t, n_t));
            r_rx.push(ComplexMatrix::zeros(n_r, n_r));
            r.push(ComplexMatrix::zeros(n_t * n_r, n_t * n_r));
        }
    }
    Ok(ChannelStats {
        p_hat,
        r_tx,
        r_rx,
        r,
        n_slots,
        ue_id: first.ue_id,
    })
}

/// Colouring matrices `√p̂_d · U_d D_d^{1/2}` precomputed for repeated draws.
#[derive(Debug, Clone)]
pub struct Augmenter {
    sys: SystemConfig,
    ue_id: u32,
    colour: Vec<Option<ComplexMatrix>>,
}

impl Augmenter {
    pub fn new(sys: &SystemConfig, stats: &ChannelStats) -> Result<Self> {
        if stats.n_delays() != sys.n_d {
            return Err(Error::Shape(format!(
                "stats cover {} delays, expected {}",
                stats.n_delays(),
                sys.n_d
            )));
        }
        let colour = (0..sys.n_d)
            .map(|d| {
                if stats.p_hat[d] <= 0.0 {
                    return Ok(None);
                }
                let eig = hermitian_eig(&stats.r[d])?;
                let amp = stats.p_hat[d].sqrt();
                let scales: Vec<f64> = eig
                    .values
                    .iter()
                    .map(|&l| amp * l.max(0.0).sqrt())
                    .collect();
                Ok(Some(ComplexMatrix::from_fn(
                    eig.vectors.rows(),
                    eig.vectors.cols(),
                    |i, j| eig.vectors[(i, j)] * scales[j],
                )))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            sys: *sys,
            ue_id: stats.ue_id,
            colour,
        })
    }

    /// Draws the vectorised tap `d` (rx-major, length `n_r n_t`).
    pub fn draw_tap_vector(&self, d: usize, rng: &mut RngStream) -> Vec<Complex64> {
        let len = self.sys.n_r * self.sys.n_t;
        let noise: Vec<Complex64> = (0..len).map(|_| rng.complex_normal()).collect();
        match &self.colour[d] {
            Some(c) => c.mul_vec(&noise),
            None => vec![Complex64::new(0.0, 0.0); len],
        }
    }

    /// Draws one augmented channel.
    pub fn draw(&self, rng: &mut RngStream, slot: u32) -> TimeChannel {
        let taps = (0..self.sys.n_d)
            .map(|d| unvectorize(&self.draw_tap_vector(d, rng), self.sys.n_r, self.sys.n_t))
            .collect();
        TimeChannel {
            taps,
            ue_id: self.ue_id,
            slot,
            origin: Origin::Augmented,
        }
    }
}

/// Rx-major vectorisation: entry `(r, t)` goes to index `r·n_t + t`.
pub fn vectorize(h: &ComplexMatrix) -> Vec<Complex64> {
    h.as_slice().to_vec()
}

/// Inverse of [`vectorize`].
pub fn unvectorize(v: &[Complex64], n_r: usize, n_t: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n_r, n_t, |r, t| v[r * n_t + t])
}

/// One augmented channel from `stats`.
pub fn augment_channel(
    sys: &SystemConfig,
    stats: &ChannelStats,
    rng: &mut RngStream,
) -> Result<TimeChannel> {
    Ok(Augmenter::new(sys, stats)?.draw(rng, 0))
}

/// Expands every UE's seeds into `n_aug` augmented CSI samples.
///
/// Output is grouped by UE in input order; draw `k` of UE `u` uses the
/// stream keyed by `(seed, u, k)`.
pub fn augment_dataset(
    sys: &SystemConfig,
    cfg: &AugmentConfig,
    per_ue_seeds: &[Vec<TimeChannel>],
    seed: u64,
) -> Result<Vec<CsiEigen>> {
    cfg.validate()?;
    let per_ue: Vec<Vec<CsiEigen>> = per_ue_seeds
        .par_iter()
        .map(|seeds| {
            let ue = seeds.first().map_or(u32::MAX, |s| s.ue_id);
            augment_ue(sys, cfg, seeds, seed).map_err(|e| Error::Ue {
                ue,
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    Ok(per_ue.into_iter().flatten().collect())
}

fn augment_ue(
    sys: &SystemConfig,
    cfg: &AugmentConfig,
    seeds: &[TimeChannel],
    seed: u64,
) -> Result<Vec<CsiEigen>> {
    let stats = estimate_stats(sys, seeds)?;
    let aug = Augmenter::new(sys, &stats)?;
    (0..cfg.n_aug)
        .map(|k| {
            let mut rng = RngStream::keyed(seed, Purpose::Augment, &[stats.ue_id as u64, k as u64]);
            let ch = aug.draw(&mut rng, k as u32);
            let mut csi = channel_to_csi(sys, &ch)?;
            csi.origin = Origin::Augmented;
            Ok(csi)
        })
        .collect()
}

/// Sample covariance `(1/N) Σ x xᴴ` of equal-length vectors.
pub fn sample_covariance(draws: &[Vec<Complex64>]) -> ComplexMatrix {
    let n = draws.first().map_or(0, |d| d.len());
    let mut acc = ComplexMatrix::zeros(n, n);
    for x in draws {
        for i in 0..n {
            let xi = x[i];
            for j in 0..n {
                acc[(i, j)] += xi * x[j].conj();
            }
        }
    }
    acc.scale_real(1.0 / draws.len().max(1) as f64)
}

/// Per-delay covariance and power mismatch of `n_draws` augmented taps.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceReport {
    /// `‖Ĉ_d − p̂_d R_d‖_F / ‖p̂_d R_d‖_F`, `None` for zero-power delays.
    pub covariance_error: Vec<Option<f64>>,
    /// `|P̂_d − p̂_d| / p̂_d` of the empirical per-entry power.
    pub power_error: Vec<Option<f64>>,
}

impl CovarianceReport {
    pub fn worst_covariance(&self) -> f64 {
        self.covariance_error
            .iter()
            .flatten()
            .fold(0.0, |a, &b| a.max(b))
    }

    pub fn worst_power(&self) -> f64 {
        self.power_error
            .iter()
            .flatten()
            .fold(0.0, |a, &b| a.max(b))
    }
}

/// Monte-Carlo check that augmented draws reproduce `p̂_d R_d`.
pub fn covariance_diagnostic(
    sys: &SystemConfig,
    stats: &ChannelStats,
    n_draws: usize,
    rng: &mut RngStream,
) -> Result<CovarianceReport> {
    let aug = Augmenter::new(sys, stats)?;
    let len = (sys.n_r * sys.n_t) as f64;
    let mut covariance_error = Vec::with_capacity(sys.n_d);
    let mut power_error = Vec::with_capacity(sys.n_d);
    for d in 0..sys.n_d {
        if stats.p_hat[d] <= 0.0 {
            covariance_error.push(None);
            power_error.push(None);
            continue;
        }
        let draws: Vec<_> = (0..n_draws).map(|_| aug.draw_tap_vector(d, rng)).collect();
        let emp = sample_covariance(&draws);
        let target = stats.target_covariance(d);
        covariance_error.push(Some(
            emp.sub(&target).frobenius_norm() / target.frobenius_norm(),
        ));
        let power = emp.trace().re / len;
        power_error.push(Some((power - stats.p_hat[d]).abs() / stats.p_hat[d]));
    }
    Ok(CovarianceReport {
        covariance_error,
        power_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{simulate_ue, SimScenario};
    use crate::numerics::complex_gaussian;

    fn identity_channel(sys: &SystemConfig) -> TimeChannel {
        let mut ch = TimeChannel::zeros(sys, 0, 0, Origin::Simulated);
        ch.taps[0] = ComplexMatrix::identity(sys.n_r);
        ch
    }

    #[test]
    fn identity_channel_stats() {
        let sys = SystemConfig::new(2, 1, 2, 2, 2, 1);
        let stats = estimate_stats(&sys, &[identity_channel(&sys)]).unwrap();
        assert!((stats.p_hat[0] - 1.0 / sys.n_r as f64).abs() < 1e-15);
        assert_eq!(stats.p_hat[1], 0.0);
        assert_eq!(stats.r_tx[0], ComplexMatrix::identity(2));
        assert_eq!(stats.r_rx[0], ComplexMatrix::identity(2));
        assert_eq!(stats.r[0], ComplexMatrix::identity(4));
        assert_eq!(stats.r[1], ComplexMatrix::zeros(4, 4));
    }

    #[test]
    fn scaling_seeds_scales_power_only() {
        let sys = SystemConfig::desk();
        let scen = SimScenario::desk(&sys);
        let seeds = simulate_ue(&sys, &scen, &mut RngStream::new(1, 0), 4, 0);
        let base = estimate_stats(&sys, &seeds).unwrap();
        let scaled: Vec<_> = seeds.iter().map(|s| s.scale(3.0)).collect();
        let st = estimate_stats(&sys, &scaled).unwrap();
        for d in 0..sys.n_d {
            assert!((st.p_hat[d] - 9.0 * base.p_hat[d]).abs() <= 1e-12 * st.p_hat[d].max(1e-300));
            assert!(st.r[d].sub(&base.r[d]).frobenius_norm() < 1e-9);
        }
    }

    #[test]
    fn traces_and_hermitian_structure() {
        let sys = SystemConfig::desk();
        let scen = SimScenario::desk(&sys);
        let seeds = simulate_ue(&sys, &scen, &mut RngStream::new(2, 0), 5, 0);
        let st = estimate_stats(&sys, &seeds).unwrap();
        for d in 0..sys.n_d {
            if st.p_hat[d] == 0.0 {
                continue;
            }
            assert!((st.r_tx[d].trace().re - sys.n_t as f64).abs() < 1e-9);
            assert!((st.r_rx[d].trace().re - sys.n_r as f64).abs() < 1e-9);
            assert!(st.r[d].hermitian_defect() < 1e-9);
            assert_eq!(st.r[d], kron(&st.r_rx[d], &st.r_tx[d]));
            // Transpose of the textbook transmit correlation.
            let mut textbook = ComplexMatrix::zeros(sys.n_t, sys.n_t);
            for s in &seeds {
                textbook.add_assign(&s.taps[d].adjoint_matmul(&s.taps[d]));
            }
            let textbook = textbook.scale_real(sys.n_t as f64 / textbook.trace().re);
            assert!(textbook.transpose().sub(&st.r_tx[d]).frobenius_norm() < 1e-12);
        }
    }

    #[test]
    fn zero_power_gives_zero_channel() {
        let sys = SystemConfig::desk();
        let seed = TimeChannel::zeros(&sys, 3, 0, Origin::Simulated);
        let st = estimate_stats(&sys, &[seed]).unwrap();
        assert!(st.p_hat.iter().all(|&p| p == 0.0));
        let ch = augment_channel(&sys, &st, &mut RngStream::new(0, 0)).unwrap();
        assert!(ch.taps.iter().all(|t| t.frobenius_norm() == 0.0));
        assert_eq!(ch.ue_id, 3);
    }

    #[test]
    fn white_stats_give_unit_power_entries() {
        let sys = SystemConfig::new(2, 2, 2, 1, 1, 1);
        let n = sys.n_r * sys.n_t;
        let stats = ChannelStats {
            p_hat: vec![1.0],
            r_tx: vec![ComplexMatrix::identity(sys.n_t)],
            r_rx: vec![ComplexMatrix::identity(sys.n_r)],
            r: vec![ComplexMatrix::identity(n)],
            n_slots: 1,
            ue_id: 0,
        };
        let aug = Augmenter::new(&sys, &stats).unwrap();
        let mut rng = RngStream::new(4, 0);
        let draws = 100_000 / n;
        let mut power = vec![0.0; n];
        for _ in 0..draws {
            for (p, x) in power.iter_mut().zip(aug.draw_tap_vector(0, &mut rng)) {
                *p += x.norm_sqr();
            }
        }
        let mean: f64 = power.iter().sum::<f64>() / (draws * n) as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean power {mean}");
    }

    #[test]
    #[allow(clippy::identity_op)] // row * n_t + col, spelled out
    fn vectorize_round_trip_is_exact() {
        let mut rng = RngStream::new(5, 0);
        let h = complex_gaussian(&mut rng, 3, 5);
        assert_eq!(unvectorize(&vectorize(&h), 3, 5), h);
        assert_eq!(vectorize(&h)[1 * 5 + 2], h[(1, 2)]);
    }

    #[test]
    fn dataset_counts_and_normalisation() {
        let sys = SystemConfig::desk();
        let scen = SimScenario::desk(&sys);
        let seeds: Vec<_> = (0..2u32)
            .map(|u| simulate_ue(&sys, &scen, &mut RngStream::new(6, u as u64), 2, u))
            .collect();
        let cfg = AugmentConfig {
            n_aug: 3,
            ..Default::default()
        };
        let out = augment_dataset(&sys, &cfg, &seeds, 11).unwrap();
        assert_eq!(out.len(), 6);
        assert!(out
            .iter()
            .all(|c| c.max_norm_error() < 1e-12 && c.origin == Origin::Augmented));
        assert_eq!(out, augment_dataset(&sys, &cfg, &seeds, 11).unwrap());
    }

    #[test]
    fn empty_seed_list_is_attributed_to_ue() {
        let sys = SystemConfig::desk();
        let cfg = AugmentConfig::default();
        let err = augment_dataset(&sys, &cfg, &[vec![]], 0).unwrap_err();
        assert!(matches!(err, Error::Ue { .. }));
    }

    #[test]
    fn scheme_names_parse() {
        for s in Scheme::BASELINES
            .iter()
            .chain(&[Scheme::None, Scheme::Proposed])
        {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), *s);
        }
        assert!(matches!(
            "mixup".parse::<Scheme>(),
            Err(Error::UnknownScheme(_))
        ));
    }
}
