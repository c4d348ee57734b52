//! Quantised CSI autoencoder `W' = f_d(Q(f_e(W)))` trained on −SGCS.
//!
//! `W` is flattened to `[Re(w_1) … Re(w_Nsb), Im(w_1) … Im(w_Nsb)]`, encoded by a
//! tanh MLP into `D_lat` values in `(-1, 1)`, quantised to `b_q` bits each,
//! decoded by a second MLP and normalised per subband. Training uses a
//! straight-through estimator for the quantiser.

mod checkpoint;
mod mlp;
mod quant;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{CsiEigen, Origin};
use crate::error::{Error, Result};
use crate::numerics::{ComplexMatrix, Purpose, RngStream};

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use mlp::{Layer, Mlp};
pub use quant::{dequantize, pack, quantize, unpack, Bitstream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n_t: usize,
    pub n_sb: usize,
    /// Feedback bits `B`.
    pub bits: usize,
    /// Latent dimension; `bits / latent` bits per latent value.
    pub latent: usize,
    pub encoder_hidden: Vec<usize>,
    pub decoder_hidden: Vec<usize>,
    /// Weight init half-width multiplier on `1/√fan_in`.
    pub init_scale: f64,
}

impl ModelConfig {
    /// 16 bits as 8 latents × 2 bits, 256/128 encoder and 128/256 decoder.
    pub fn desk(n_t: usize, n_sb: usize) -> Self {
        Self {
            n_t,
            n_sb,
            bits: 16,
            latent: 8,
            encoder_hidden: vec![256, 128],
            decoder_hidden: vec![128, 256],
            init_scale: 1.0,
        }
    }

    pub fn input_dim(&self) -> usize {
        2 * self.n_t * self.n_sb
    }

    pub fn bits_per_latent(&self) -> u32 {
        (self.bits / self.latent.max(1)) as u32
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_t == 0 || self.n_sb == 0 {
            return Err(Error::config(
                "model.n_t",
                "input dimensions must be at least 1",
            ));
        }
        if self.latent == 0 {
            return Err(Error::config("model.latent", "must be at least 1"));
        }
        if !self.bits.is_multiple_of(self.latent) {
            return Err(Error::config(
                "model.bits",
                format!("must be a multiple of latent = {}", self.latent),
            ));
        }
        let bq = self.bits / self.latent;
        if !(1..=8).contains(&bq) {
            return Err(Error::config(
                "model.bits",
                format!("bits per latent must be in 1..=8, got {bq}"),
            ));
        }
        if self
            .encoder_hidden
            .iter()
            .chain(&self.decoder_hidden)
            .any(|&w| w == 0)
        {
            return Err(Error::config(
                "model.encoder_hidden",
                "layer widths must be at least 1",
            ));
        }
        if !(self.init_scale.is_finite() && self.init_scale >= 0.0) {
            return Err(Error::config(
                "model.init_scale",
                "must be finite and non-negative",
            ));
        }
        Ok(())
    }

    fn encoder_dims(&self) -> Vec<usize> {
        let mut d = vec![self.input_dim()];
        d.extend(&self.encoder_hidden);
        d.push(self.latent);
        d
    }

    fn decoder_dims(&self) -> Vec<usize> {
        let mut d = vec![self.latent];
        d.extend(&self.decoder_hidden);
        d.push(self.input_dim());
        d
    }
}

/// Encoder and decoder parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub encoder: Mlp,
    pub decoder: Mlp,
}

impl ModelParams {
    pub fn init(cfg: &ModelConfig, seed: u64) -> Self {
        let mut rng = RngStream::keyed(seed, Purpose::ModelInit, &[]);
        Self {
            encoder: Mlp::new(&cfg.encoder_dims(), true, cfg.init_scale, &mut rng),
            decoder: Mlp::new(&cfg.decoder_dims(), false, cfg.init_scale, &mut rng),
        }
    }

    pub fn zeros(cfg: &ModelConfig) -> Self {
        let mut p = Self::init(cfg, 0);
        p.for_each_mut(|x| *x = 0.0);
        p
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            encoder: self.encoder.zeros_like(),
            decoder: self.decoder.zeros_like(),
        }
    }

    fn layers(&self) -> impl Iterator<Item = &Layer> {
        self.encoder.layers.iter().chain(&self.decoder.layers)
    }

    fn layers_mut(&mut self) -> impl Iterator<Item = &mut Layer> {
        self.encoder
            .layers
            .iter_mut()
            .chain(self.decoder.layers.iter_mut())
    }

    /// Parameter arrays in a fixed order: per layer, weight then bias.
    pub fn slices(&self) -> Vec<&[f64]> {
        self.layers()
            .flat_map(|l| {
                [
                    l.weight.as_slice().expect("standard layout"),
                    l.bias.as_slice().expect("standard layout"),
                ]
            })
            .collect()
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers_mut()
            .flat_map(|l| {
                [
                    l.weight.as_slice_mut().expect("standard layout"),
                    l.bias.as_slice_mut().expect("standard layout"),
                ]
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.slices().concat()
    }

    /// Overwrites every parameter from `flat`, in [`slices`](Self::slices) order.
    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.len() {
            return Err(Error::Shape(format!(
                "{} values for {} parameters",
                flat.len(),
                self.len()
            )));
        }
        let mut off = 0;
        for s in self.slices_mut() {
            s.copy_from_slice(&flat[off..off + s.len()]);
            off += s.len();
        }
        Ok(())
    }

    pub fn for_each_mut(&mut self, mut f: impl FnMut(&mut f64)) {
        for s in self.slices_mut() {
            s.iter_mut().for_each(&mut f);
        }
    }

    /// `self ← self + ε (target − self)`, evaluated from the nearer endpoint so
    /// that ε = 0 and ε = 1 reproduce `self` and `target` exactly.
    pub fn interpolate_towards(&mut self, target: &Self, eps: f64) {
        let targets = target.slices();
        for (dst, src) in self.slices_mut().into_iter().zip(targets) {
            for (a, &b) in dst.iter_mut().zip(src) {
                let diff = b - *a;
                *a = if eps < 0.5 {
                    *a + eps * diff
                } else {
                    b - (1.0 - eps) * diff
                };
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.slices()
            .iter()
            .all(|s| s.iter().all(|x| x.is_finite()))
    }

    /// Checks that layer shapes match `cfg`.
    pub fn check_shape(&self, cfg: &ModelConfig) -> Result<()> {
        let want = |dims: &[usize], mlp: &Mlp| {
            mlp.layers.len() == dims.len() - 1
                && mlp
                    .layers
                    .iter()
                    .zip(dims.windows(2))
                    .all(|(l, w)| l.fan_in() == w[0] && l.fan_out() == w[1])
        };
        if want(&cfg.encoder_dims(), &self.encoder) && want(&cfg.decoder_dims(), &self.decoder) {
            Ok(())
        } else {
            Err(Error::Shape("parameters do not match model config".into()))
        }
    }
}

/// Flattens `w` to `[Re column-major, Im column-major]`.
pub fn flatten_csi(w: &ComplexMatrix, out: &mut [f64]) {
    let (n_t, n_sb) = (w.rows(), w.cols());
    let half = n_t * n_sb;
    for l in 0..n_sb {
        for i in 0..n_t {
            let z = w[(i, l)];
            out[l * n_t + i] = z.re;
            out[half + l * n_t + i] = z.im;
        }
    }
}

/// Inverse of [`flatten_csi`] without normalisation.
pub fn unflatten_csi(flat: &[f64], n_t: usize, n_sb: usize) -> ComplexMatrix {
    let half = n_t * n_sb;
    ComplexMatrix::from_fn(n_t, n_sb, |i, l| {
        Complex64::new(flat[l * n_t + i], flat[half + l * n_t + i])
    })
}

/// Normalises every subband of a decoder output. A zero column becomes the
/// uniform vector `1/√n_t`.
pub fn normalize_output(flat: &[f64], n_t: usize, n_sb: usize) -> ComplexMatrix {
    let mut w = unflatten_csi(flat, n_t, n_sb);
    let uniform = Complex64::new(1.0 / (n_t as f64).sqrt(), 0.0);
    for l in 0..n_sb {
        let col = w.column(l);
        let norm = crate::numerics::vec_norm(&col);
        let col: Vec<_> = if norm > 0.0 {
            col.iter().map(|z| z / norm).collect()
        } else {
            vec![uniform; n_t]
        };
        w.set_column(l, &col);
    }
    w
}

fn batch_matrix(cfg: &ModelConfig, batch: &[&CsiEigen]) -> Result<Array2<f64>> {
    let dim = cfg.input_dim();
    let mut x = Array2::zeros((batch.len(), dim));
    for (row, s) in x.outer_iter_mut().zip(batch) {
        if s.w.rows() != cfg.n_t || s.w.cols() != cfg.n_sb {
            return Err(Error::Shape(format!(
                "sample is {}x{}, model expects {}x{}",
                s.w.rows(),
                s.w.cols(),
                cfg.n_t,
                cfg.n_sb
            )));
        }
        let mut row = row;
        flatten_csi(&s.w, row.as_slice_mut().expect("contiguous row"));
    }
    Ok(x)
}

fn quantize_latent(z: &Array2<f64>, bq: u32) -> (Array2<f64>, Vec<Vec<u32>>) {
    let levels: Vec<Vec<u32>> = z
        .outer_iter()
        .map(|row| row.iter().map(|&v| quantize(v, bq)).collect())
        .collect();
    let deq = Array2::from_shape_fn(z.raw_dim(), |(b, k)| dequantize(levels[b][k], bq));
    (deq, levels)
}

/// Encodes one sample into its latent vector and feedback bits.
pub fn encode(
    params: &ModelParams,
    cfg: &ModelConfig,
    w: &CsiEigen,
) -> Result<(Vec<f64>, Bitstream)> {
    let x = batch_matrix(cfg, &[w])?;
    let acts = params.encoder.forward(x);
    let latent: Vec<f64> = acts.last().expect("output").row(0).to_vec();
    let bq = cfg.bits_per_latent();
    let levels: Vec<u32> = latent.iter().map(|&v| quantize(v, bq)).collect();
    Ok((latent, pack(&levels, bq)))
}

/// Reconstructs `W'` from feedback bits.
pub fn decode(params: &ModelParams, cfg: &ModelConfig, bits: &Bitstream) -> Result<CsiEigen> {
    let bq = cfg.bits_per_latent();
    let levels = unpack(bits, bq, cfg.latent)?;
    let z = Array2::from_shape_fn((1, cfg.latent), |(_, k)| dequantize(levels[k], bq));
    let acts = params.decoder.forward(z);
    let out = acts.last().expect("output");
    let w = normalize_output(
        out.row(0).as_slice().expect("contiguous"),
        cfg.n_t,
        cfg.n_sb,
    );
    Ok(CsiEigen {
        w,
        eigvals: vec![0.0; cfg.n_sb],
        ue_id: 0,
        slot: 0,
        task_id: None,
        origin: Origin::Simulated,
    })
}

/// Full forward pass on a batch; returns normalised reconstructions.
pub fn reconstruct(
    params: &ModelParams,
    cfg: &ModelConfig,
    batch: &[&CsiEigen],
) -> Result<Vec<ComplexMatrix>> {
    let x = batch_matrix(cfg, batch)?;
    let enc = params.encoder.forward(x);
    let (deq, _) = quantize_latent(enc.last().expect("latent"), cfg.bits_per_latent());
    let dec = params.decoder.forward(deq);
    Ok(dec
        .last()
        .expect("output")
        .outer_iter()
        .map(|row| normalize_output(row.as_slice().expect("contiguous"), cfg.n_t, cfg.n_sb))
        .collect())
}

/// Squared generalised cosine similarity, averaged over subbands.
pub fn sgcs(w: &ComplexMatrix, w_hat: &ComplexMatrix) -> Result<f64> {
    if w.rows() != w_hat.rows() || w.cols() != w_hat.cols() {
        return Err(Error::Shape("sgcs arguments differ in shape".into()));
    }
    let n_sb = w.cols();
    let mut acc = 0.0;
    for l in 0..n_sb {
        let (mut dot, mut na, mut nb) = (Complex64::new(0.0, 0.0), 0.0, 0.0);
        for i in 0..w.rows() {
            let (a, b) = (w[(i, l)], w_hat[(i, l)]);
            dot += a.conj() * b;
            na += a.norm_sqr();
            nb += b.norm_sqr();
        }
        if na == 0.0 || nb == 0.0 {
            return Err(Error::ZeroColumn { column: l });
        }
        acc += (dot.norm_sqr() / (na * nb)).min(1.0);
    }
    Ok(acc / n_sb as f64)
}

/// Per-sample SGCS of an unnormalised flat output `y` against target `x`
/// (both flat layout) and, optionally, `∂ρ/∂y` scaled by `scale`.
fn sgcs_flat(
    x: &[f64],
    y: &[f64],
    n_t: usize,
    n_sb: usize,
    grad: Option<(&mut [f64], f64)>,
) -> f64 {
    let half = n_t * n_sb;
    let mut total = 0.0;
    let mut grad = grad.map(|(g, scale)| (g, scale / n_sb as f64));
    for l in 0..n_sb {
        let idx = |i: usize| (l * n_t + i, half + l * n_t + i);
        let (mut a, mut nu2, mut nw2) = (Complex64::new(0.0, 0.0), 0.0, 0.0);
        for i in 0..n_t {
            let (re, im) = idx(i);
            let w = Complex64::new(x[re], x[im]);
            let u = Complex64::new(y[re], y[im]);
            a += w.conj() * u;
            nu2 += u.norm_sqr();
            nw2 += w.norm_sqr();
        }
        if nu2 <= 1e-300 || nw2 <= 1e-300 {
            continue;
        }
        let a2 = a.norm_sqr();
        total += a2 / (nw2 * nu2);
        if let Some((g, scale)) = grad.as_mut() {
            // ∂ρ/∂ū = (a w ‖u‖² − |a|² u) / (‖w‖² ‖u‖⁴); real gradient is twice it.
            let denom = nw2 * nu2 * nu2;
            for i in 0..n_t {
                let (re, im) = idx(i);
                let w = Complex64::new(x[re], x[im]);
                let u = Complex64::new(y[re], y[im]);
                let d = (a * w * nu2 - u * a2) / denom;
                g[re] += *scale * 2.0 * d.re;
                g[im] += *scale * 2.0 * d.im;
            }
        }
    }
    total / n_sb as f64
}

/// Whether the quantiser is applied during the forward pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuantMode {
    /// Quantise forward, straight-through backward.
    Active,
    /// Skip quantisation entirely (gradient checks).
    Bypass,
}

/// Loss `−mean SGCS` over `batch` and its exact gradient.
pub fn loss_and_grad(
    params: &ModelParams,
    cfg: &ModelConfig,
    batch: &[&CsiEigen],
    mode: QuantMode,
) -> Result<(f64, ModelParams)> {
    if batch.is_empty() {
        return Err(Error::Shape("empty batch".into()));
    }
    let x = batch_matrix(cfg, batch)?;
    let enc = params.encoder.forward(x.clone());
    let latent = enc.last().expect("latent");
    let dec_in = match mode {
        QuantMode::Active => quantize_latent(latent, cfg.bits_per_latent()).0,
        QuantMode::Bypass => latent.clone(),
    };
    let dec = params.decoder.forward(dec_in);
    let out = dec.last().expect("output");

    let n = batch.len();
    let scale = -1.0 / n as f64;
    let mut d_out = Array2::zeros(out.raw_dim());
    let mut total = 0.0;
    for ((xr, yr), mut gr) in x
        .outer_iter()
        .zip(out.outer_iter())
        .zip(d_out.outer_iter_mut())
    {
        total += sgcs_flat(
            xr.as_slice().expect("contiguous"),
            yr.as_slice().expect("contiguous"),
            cfg.n_t,
            cfg.n_sb,
            Some((gr.as_slice_mut().expect("contiguous"), scale)),
        );
    }

    let mut grads = params.zeros_like();
    // Straight-through: the latent gradient passes the quantiser unchanged.
    let d_latent = params.decoder.backward(&dec, d_out, &mut grads.decoder);
    params.encoder.backward(&enc, d_latent, &mut grads.encoder);
    Ok((-total / n as f64, grads))
}

/// Mean SGCS of full quantised forward passes, summed in sample order.
pub fn mean_sgcs(params: &ModelParams, cfg: &ModelConfig, samples: &[CsiEigen]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Shape("empty evaluation set".into()));
    }
    let mut total = 0.0;
    for chunk in samples.chunks(256) {
        let refs: Vec<&CsiEigen> = chunk.iter().collect();
        let recon = reconstruct(params, cfg, &refs)?;
        for (s, r) in chunk.iter().zip(&recon) {
            total += sgcs(&s.w, r)?;
        }
    }
    Ok(total / samples.len() as f64)
}
