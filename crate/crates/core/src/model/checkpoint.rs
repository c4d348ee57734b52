//! Binary checkpoint: `CSICK`, version, model config, then every parameter as
//! little-endian f64 in [`ModelParams::slices`] order.

use std::io::{Read, Write};

use super::{ModelConfig, ModelParams};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 5] = b"CSICK";
pub const CHECKPOINT_VERSION: u32 = 1;

fn put_u32(w: &mut impl Write, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Format(format!("{v} does not fit in u32")))?;
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn get_u32(r: &mut impl Read) -> Result<usize> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b) as usize)
}

fn get_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn write_checkpoint(mut w: impl Write, cfg: &ModelConfig, params: &ModelParams) -> Result<()> {
    params.check_shape(cfg)?;
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    for v in [cfg.n_t, cfg.n_sb, cfg.bits, cfg.latent] {
        put_u32(&mut w, v)?;
    }
    for widths in [&cfg.encoder_hidden, &cfg.decoder_hidden] {
        put_u32(&mut w, widths.len())?;
        for &v in widths.iter() {
            put_u32(&mut w, v)?;
        }
    }
    w.write_all(&cfg.init_scale.to_le_bytes())?;
    w.write_all(&(params.len() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(params.len() * 8);
    for s in params.slices() {
        for v in s {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint(mut r: impl Read) -> Result<(ModelConfig, ModelParams)> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Format("not a checkpoint (bad magic)".into()));
    }
    let version = get_u32(&mut r)? as u32;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Format(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let (n_t, n_sb, bits, latent) = (
        get_u32(&mut r)?,
        get_u32(&mut r)?,
        get_u32(&mut r)?,
        get_u32(&mut r)?,
    );
    let mut widths = || -> Result<Vec<usize>> {
        let n = get_u32(&mut r)?;
        if n > 64 {
            return Err(Error::Format(format!("{n} hidden layers")));
        }
        (0..n).map(|_| get_u32(&mut r)).collect()
    };
    let encoder_hidden = widths()?;
    let decoder_hidden = widths()?;
    let cfg = ModelConfig {
        n_t,
        n_sb,
        bits,
        latent,
        encoder_hidden,
        decoder_hidden,
        init_scale: get_f64(&mut r)?,
    };
    cfg.validate()
        .map_err(|e| Error::Format(format!("checkpoint header: {e}")))?;
    let mut count = [0u8; 8];
    r.read_exact(&mut count)?;
    let count = u64::from_le_bytes(count) as usize;
    let mut params = ModelParams::zeros(&cfg);
    if count != params.len() {
        return Err(Error::Format(format!(
            "checkpoint declares {count} parameters, config implies {}",
            params.len()
        )));
    }
    let mut bytes = vec![0u8; count * 8];
    r.read_exact(&mut bytes)?;
    let flat: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    params.set_flat(&flat)?;
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after parameters".into()));
    }
    Ok((cfg, params))
}
