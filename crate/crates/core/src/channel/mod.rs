//! Target-scenario channel simulator and the channel → CSI eigenvector pipeline.

mod csi;
mod sim;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::ComplexMatrix;

pub use csi::{channel_to_csi, subband_gram};
pub use sim::{simulate_ue, Cluster, SimScenario};

/// Antenna, delay and frequency dimensions of the system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Horizontal transmit ports.
    pub n_h: usize,
    /// Vertical transmit ports.
    pub n_v: usize,
    /// Transmit ports, `n_h * n_v`.
    pub n_t: usize,
    /// Receive antennas.
    pub n_r: usize,
    /// Delay taps.
    pub n_d: usize,
    /// Subcarriers, `n_gran * n_sb`.
    pub n_sc: usize,
    /// Subcarriers per subband.
    pub n_gran: usize,
    /// Subbands.
    pub n_sb: usize,
}

impl SystemConfig {
    pub fn new(n_h: usize, n_v: usize, n_r: usize, n_d: usize, n_sb: usize, n_gran: usize) -> Self {
        Self {
            n_h,
            n_v,
            n_t: n_h * n_v,
            n_r,
            n_d,
            n_sc: n_sb * n_gran,
            n_gran,
            n_sb,
        }
    }

    /// 8 ports (4×2), 2 receive antennas, 4 subbands of 4 subcarriers, 8 taps.
    pub fn desk() -> Self {
        Self::new(4, 2, 2, 8, 4, 4)
    }

    /// Full-size layout: 32 ports, 4 receive antennas, 13 subbands over 624 subcarriers.
    pub fn full_scale() -> Self {
        Self::new(16, 2, 4, 32, 13, 48)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("system.n_h", self.n_h),
            ("system.n_v", self.n_v),
            ("system.n_t", self.n_t),
            ("system.n_r", self.n_r),
            ("system.n_d", self.n_d),
            ("system.n_sc", self.n_sc),
            ("system.n_gran", self.n_gran),
            ("system.n_sb", self.n_sb),
        ] {
            if v == 0 {
                return Err(Error::config(name, "must be at least 1"));
            }
        }
        if self.n_t != self.n_h * self.n_v {
            return Err(Error::config(
                "system.n_t",
                format!("must equal n_h * n_v = {}", self.n_h * self.n_v),
            ));
        }
        if self.n_sc != self.n_gran * self.n_sb {
            return Err(Error::config(
                "system.n_sc",
                format!("must equal n_gran * n_sb = {}", self.n_gran * self.n_sb),
            ));
        }
        if self.n_d > self.n_sc {
            return Err(Error::config(
                "system.n_d",
                format!("must not exceed n_sc = {}", self.n_sc),
            ));
        }
        Ok(())
    }
}

/// Where a CSI sample came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    Simulated,
    MetaSynth,
    Augmented,
    BaselineAugmented,
}

impl Origin {
    pub fn tag(self) -> u8 {
        match self {
            Origin::Simulated => 0,
            Origin::MetaSynth => 1,
            Origin::Augmented => 2,
            Origin::BaselineAugmented => 3,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Some(match tag {
            0 => Origin::Simulated,
            1 => Origin::MetaSynth,
            2 => Origin::Augmented,
            3 => Origin::BaselineAugmented,
            _ => return None,
        })
    }
}

/// One slot of time-domain channel: `n_d` taps of `n_r × n_t` matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeChannel {
    pub taps: Vec<ComplexMatrix>,
    pub ue_id: u32,
    pub slot: u32,
    pub origin: Origin,
}

impl TimeChannel {
    pub fn zeros(cfg: &SystemConfig, ue_id: u32, slot: u32, origin: Origin) -> Self {
        Self {
            taps: vec![ComplexMatrix::zeros(cfg.n_r, cfg.n_t); cfg.n_d],
            ue_id,
            slot,
            origin,
        }
    }

    pub fn check_shape(&self, cfg: &SystemConfig) -> Result<()> {
        if self.taps.len() != cfg.n_d {
            return Err(Error::Shape(format!(
                "channel has {} taps, expected {}",
                self.taps.len(),
                cfg.n_d
            )));
        }
        for tap in &self.taps {
            if tap.rows() != cfg.n_r || tap.cols() != cfg.n_t {
                return Err(Error::Shape(format!(
                    "tap is {}x{}, expected {}x{}",
                    tap.rows(),
                    tap.cols(),
                    cfg.n_r,
                    cfg.n_t
                )));
            }
        }
        Ok(())
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            taps: self.taps.iter().map(|t| t.scale_real(c)).collect(),
            ..self.clone()
        }
    }
}

/// Per-subband dominant eigenvectors `W` (`n_t × n_sb`) with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiEigen {
    pub w: ComplexMatrix,
    /// Dominant eigenvalue per subband; all zero for synthesised samples.
    pub eigvals: Vec<f64>,
    pub ue_id: u32,
    pub slot: u32,
    pub task_id: Option<u32>,
    pub origin: Origin,
}

impl CsiEigen {
    pub fn n_t(&self) -> usize {
        self.w.rows()
    }

    pub fn n_sb(&self) -> usize {
        self.w.cols()
    }

    /// Largest deviation of a column norm from one.
    pub fn max_norm_error(&self) -> f64 {
        (0..self.w.cols())
            .map(|l| (crate::numerics::vec_norm(&self.w.column(l)) - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Scales every column of `w` to unit ℓ2 norm. Fails on an all-zero column.
pub fn normalize_columns(w: &mut ComplexMatrix) -> Result<()> {
    for l in 0..w.cols() {
        let col = w.column(l);
        let norm = crate::numerics::vec_norm(&col);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroColumn { column: l });
        }
        let scaled: Vec<_> = col.iter().map(|z| z / norm).collect();
        w.set_column(l, &scaled);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_and_full_configs_validate() {
        SystemConfig::desk().validate().unwrap();
        let full = SystemConfig::full_scale();
        full.validate().unwrap();
        assert_eq!((full.n_t, full.n_r, full.n_sb, full.n_sc), (32, 4, 13, 624));
    }

    #[test]
    fn validation_names_the_field() {
        let mut cfg = SystemConfig::desk();
        cfg.n_t = 7;
        match cfg.validate() {
            Err(Error::Config { field, .. }) => assert_eq!(field, "system.n_t"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn origin_tags_round_trip() {
        for o in [
            Origin::Simulated,
            Origin::MetaSynth,
            Origin::Augmented,
            Origin::BaselineAugmented,
        ] {
            assert_eq!(Origin::from_tag(o.tag()), Some(o));
        }
        assert_eq!(Origin::from_tag(9), None);
    }
}
