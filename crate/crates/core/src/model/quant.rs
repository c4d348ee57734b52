//! Uniform midrise scalar quantiser over `[-1, 1]`.

use crate::error::{Error, Result};

/// Feedback bitstream of length `B`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bitstream {
    pub bits: Vec<bool>,
}

impl Bitstream {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// Level index `⌊(x+1)/2 · 2^b⌋` clamped to `[0, 2^b − 1]`.
pub fn quantize(x: f64, bits: u32) -> u32 {
    let levels = 1u32 << bits;
    let idx = ((x + 1.0) * 0.5 * levels as f64).floor();
    if idx.is_nan() || idx < 0.0 {
        0
    } else if idx >= levels as f64 {
        levels - 1
    } else {
        idx as u32
    }
}

/// Midpoint of cell `level`.
pub fn dequantize(level: u32, bits: u32) -> f64 {
    let levels = (1u32 << bits) as f64;
    -1.0 + (level as f64 + 0.5) * 2.0 / levels
}

/// Concatenates big-endian `bits`-wide level indices.
pub fn pack(levels: &[u32], bits: u32) -> Bitstream {
    let mut out = Vec::with_capacity(levels.len() * bits as usize);
    for &level in levels {
        for b in (0..bits).rev() {
            out.push((level >> b) & 1 == 1);
        }
    }
    Bitstream { bits: out }
}

pub fn unpack(stream: &Bitstream, bits: u32, count: usize) -> Result<Vec<u32>> {
    let expected = bits as usize * count;
    if stream.len() != expected {
        return Err(Error::BadBitstreamLength {
            expected,
            got: stream.len(),
        });
    }
    Ok(stream
        .bits
        .chunks(bits as usize)
        .map(|chunk| chunk.iter().fold(0u32, |acc, &b| (acc << 1) | b as u32))
        .collect())
}
