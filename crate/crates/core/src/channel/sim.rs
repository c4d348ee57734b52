use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Origin, SystemConfig, TimeChannel};
use crate::error::{Error, Result};
use crate::numerics::{kron_vec, RngStream};

/// One scattering cluster of the tapped-delay-line model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    /// Zero-based delay tap, `< n_d`.
    pub tap: usize,
    /// Fraction of total power; cluster powers sum to one.
    pub power: f64,
    /// Mean azimuth of departure, degrees.
    pub aod_deg: f64,
    /// Mean zenith of departure, degrees.
    pub zod_deg: f64,
    /// Mean azimuth of arrival, degrees.
    pub aoa_deg: f64,
}

/// Simplified clustered channel scenario.
///
/// Each UE draws its ray angles and phases once; slots of that UE differ
/// only by per-ray Doppler rotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimScenario {
    pub clusters: Vec<Cluster>,
    pub rays_per_cluster: usize,
    /// Per-ray standard deviation around the cluster mean angles, degrees.
    pub aod_spread_deg: f64,
    pub zod_spread_deg: f64,
    pub aoa_spread_deg: f64,
    /// Per-UE uniform azimuth offset applied to every cluster, ± degrees.
    pub ue_azimuth_jitter_deg: f64,
    /// Maximum Doppler shift in Hz.
    pub max_doppler_hz: f64,
    /// Time between consecutive slots in seconds.
    pub slot_spacing_s: f64,
}

impl SimScenario {
    /// Clusters on evenly spread taps with an exponential power-delay profile
    /// `p ∝ exp(-tap / delay_spread_taps)` and angles fanned over a 120° sector.
    pub fn exponential(cfg: &SystemConfig, n_clusters: usize, delay_spread_taps: f64) -> Self {
        let n_clusters = n_clusters.max(1);
        let taps: Vec<usize> = (0..n_clusters)
            .map(|i| {
                if n_clusters == 1 {
                    0
                } else {
                    (i * (cfg.n_d - 1) + (n_clusters - 1) / 2) / (n_clusters - 1)
                }
            })
            .collect();
        let raw: Vec<f64> = taps
            .iter()
            .map(|&t| (-(t as f64) / delay_spread_taps).exp())
            .collect();
        let total: f64 = raw.iter().sum();
        // Golden-ratio fan keeps cluster directions well separated.
        let golden = 0.618_033_988_749_895;
        let clusters = taps
            .iter()
            .zip(&raw)
            .enumerate()
            .map(|(i, (&tap, &p))| {
                let u = (i as f64 * golden).fract();
                Cluster {
                    tap,
                    power: p / total,
                    aod_deg: -60.0 + 120.0 * u,
                    zod_deg: 90.0 + 20.0 * (u - 0.5),
                    aoa_deg: 180.0 * (((i as f64 + 0.5) * golden).fract() - 0.5),
                }
            })
            .collect();
        Self {
            clusters,
            rays_per_cluster: 10,
            aod_spread_deg: 3.0,
            zod_spread_deg: 3.0,
            aoa_spread_deg: 10.0,
            ue_azimuth_jitter_deg: 60.0,
            max_doppler_hz: 970.0,
            slot_spacing_s: 5e-4,
        }
    }

    /// Default target scenario for the desk configuration.
    pub fn desk(cfg: &SystemConfig) -> Self {
        Self::exponential(cfg, 4, 2.0)
    }

    pub fn validate(&self, cfg: &SystemConfig) -> Result<()> {
        if self.clusters.is_empty() {
            return Err(Error::config(
                "scenario.clusters",
                "need at least one cluster",
            ));
        }
        if self.rays_per_cluster == 0 {
            return Err(Error::config(
                "scenario.rays_per_cluster",
                "must be at least 1",
            ));
        }
        for (i, c) in self.clusters.iter().enumerate() {
            if c.tap >= cfg.n_d {
                return Err(Error::config(
                    format!("scenario.clusters[{i}].tap"),
                    format!("must be below n_d = {}", cfg.n_d),
                ));
            }
            if !(c.power >= 0.0) {
                return Err(Error::config(
                    format!("scenario.clusters[{i}].power"),
                    "must be non-negative",
                ));
            }
        }
        let total: f64 = self.clusters.iter().map(|c| c.power).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::config(
                "scenario.clusters",
                format!("cluster powers sum to {total}, expected 1"),
            ));
        }
        Ok(())
    }

    /// Expected per-tap power, normalised per antenna pair.
    pub fn tap_power_profile(&self, cfg: &SystemConfig) -> Vec<f64> {
        let mut p = vec![0.0; cfg.n_d];
        for c in &self.clusters {
            p[c.tap] += c.power;
        }
        p
    }
}

struct Ray {
    tap: usize,
    amplitude: f64,
    rx: Vec<Complex64>,
    tx_conj: Vec<Complex64>,
    phase: f64,
    doppler_hz: f64,
}

fn ula(n: usize, sin_angle: f64) -> Vec<Complex64> {
    (0..n)
        .map(|k| Complex64::from_polar(1.0, PI * k as f64 * sin_angle))
        .collect()
}

/// Simulates `n_slots` consecutive slots of one UE.
///
/// Tap `d` of slot `t` is `Σ_rays √(p/R)·a_rx·a_txᴴ·e^{jψ}·e^{j2πν t Δt}` with
/// `a_tx = a_h ⊗ a_v` on half-wavelength arrays.
pub fn simulate_ue(
    cfg: &SystemConfig,
    scen: &SimScenario,
    rng: &mut RngStream,
    n_slots: usize,
    ue_id: u32,
) -> Vec<TimeChannel> {
    assert!(n_slots >= 1, "simulate_ue needs at least one slot");
    let deg = PI / 180.0;
    let jitter = rng.uniform_range(-scen.ue_azimuth_jitter_deg, scen.ue_azimuth_jitter_deg);
    let rays_per = scen.rays_per_cluster;

    let mut rays = Vec::with_capacity(scen.clusters.len() * rays_per);
    for cluster in &scen.clusters {
        for _ in 0..rays_per {
            let aod =
                (cluster.aod_deg + jitter + scen.aod_spread_deg * rng.standard_normal()) * deg;
            let zod = (cluster.zod_deg + scen.zod_spread_deg * rng.standard_normal()) * deg;
            let aoa = (cluster.aoa_deg + scen.aoa_spread_deg * rng.standard_normal()) * deg;
            let phase = rng.uniform_range(0.0, 2.0 * PI);
            let doppler_hz = scen.max_doppler_hz * rng.uniform_range(0.0, 2.0 * PI).cos();
            let a_h = ula(cfg.n_h, zod.sin() * aod.sin());
            let a_v = ula(cfg.n_v, zod.cos());
            let tx_conj = kron_vec(&a_h, &a_v).into_iter().map(|z| z.conj()).collect();
            rays.push(Ray {
                tap: cluster.tap,
                amplitude: (cluster.power / rays_per as f64).sqrt(),
                rx: ula(cfg.n_r, aoa.sin()),
                tx_conj,
                phase,
                doppler_hz,
            });
        }
    }

    (0..n_slots)
        .map(|t| {
            let mut ch = TimeChannel::zeros(cfg, ue_id, t as u32, Origin::Simulated);
            let time = t as f64 * scen.slot_spacing_s;
            for ray in &rays {
                let coeff = Complex64::from_polar(
                    ray.amplitude,
                    ray.phase + 2.0 * PI * ray.doppler_hz * time,
                );
                let tap = &mut ch.taps[ray.tap];
                for (r, a_r) in ray.rx.iter().enumerate() {
                    let s = coeff * a_r;
                    for (c, a_t) in ray.tx_conj.iter().enumerate() {
                        tap[(r, c)] += s * a_t;
                    }
                }
            }
            ch
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_path() -> (SystemConfig, SimScenario) {
        let cfg = SystemConfig::desk();
        let mut scen = SimScenario::exponential(&cfg, 1, 2.0);
        scen.rays_per_cluster = 1;
        scen.max_doppler_hz = 0.0;
        (cfg, scen)
    }

    #[test]
    fn default_scenario_is_valid() {
        let cfg = SystemConfig::desk();
        let scen = SimScenario::desk(&cfg);
        scen.validate(&cfg).unwrap();
        let taps: Vec<_> = scen.clusters.iter().map(|c| c.tap).collect();
        assert!(taps.iter().all(|&t| t < cfg.n_d));
    }

    #[test]
    fn static_single_path_slots_identical() {
        let (cfg, scen) = single_path();
        let mut rng = RngStream::new(1, 0);
        let slots = simulate_ue(&cfg, &scen, &mut rng, 3, 0);
        assert_eq!(slots.len(), 3);
        assert_eq!(slots[0].taps, slots[1].taps);
        assert_eq!(slots[1].taps, slots[2].taps);
    }

    #[test]
    fn single_ray_tap_is_rank_one() {
        let (cfg, scen) = single_path();
        let mut rng = RngStream::new(2, 0);
        let tap = &simulate_ue(&cfg, &scen, &mut rng, 1, 0)[0].taps[0];
        for i in 0..tap.rows() {
            for k in (i + 1)..tap.rows() {
                for j in 0..tap.cols() {
                    for l in (j + 1)..tap.cols() {
                        let minor = tap[(i, j)] * tap[(k, l)] - tap[(i, l)] * tap[(k, j)];
                        assert!(minor.norm() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn same_stream_is_bit_identical() {
        let cfg = SystemConfig::desk();
        let scen = SimScenario::desk(&cfg);
        let a = simulate_ue(&cfg, &scen, &mut RngStream::new(9, 4), 3, 4);
        let b = simulate_ue(&cfg, &scen, &mut RngStream::new(9, 4), 3, 4);
        assert_eq!(a, b);
    }

    #[test]
    fn average_tap_power_matches_profile() {
        let cfg = SystemConfig::desk();
        let scen = SimScenario::desk(&cfg);
        let expected = scen.tap_power_profile(&cfg);
        let n_ue = 10_000;
        let mut acc = vec![0.0; cfg.n_d];
        for ue in 0..n_ue {
            let mut rng = RngStream::new(77, ue);
            let ch = &simulate_ue(&cfg, &scen, &mut rng, 1, ue as u32)[0];
            for (d, tap) in ch.taps.iter().enumerate() {
                acc[d] += tap.frobenius_norm_sqr() / (cfg.n_t * cfg.n_r) as f64;
            }
        }
        for d in 0..cfg.n_d {
            let got = acc[d] / n_ue as f64;
            if expected[d] == 0.0 {
                assert_eq!(got, 0.0);
            } else {
                let rel = (got - expected[d]).abs() / expected[d];
                assert!(rel < 0.03, "tap {d}: {got} vs {}", expected[d]);
            }
        }
    }
}
