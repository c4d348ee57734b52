use super::{CsiEigen, SystemConfig, TimeChannel};
use crate::error::Result;
use crate::numerics::{dft_delay_to_freq, top_eigvec, ComplexMatrix};

/// Subband-averaged Gram matrices `(1/N_gran) Σ_k H̃_kᴴ H̃_k`, one per subband.
pub fn subband_gram(cfg: &SystemConfig, h: &TimeChannel) -> Result<Vec<ComplexMatrix>> {
    h.check_shape(cfg)?;
    let freq = dft_delay_to_freq(&h.taps, cfg.n_sc)?;
    let inv = 1.0 / cfg.n_gran as f64;
    Ok(freq
        .chunks(cfg.n_gran)
        .map(|band| {
            let mut acc = ComplexMatrix::zeros(cfg.n_t, cfg.n_t);
            for hk in band {
                acc.add_assign(&hk.adjoint_matmul(hk));
            }
            acc.scale_real(inv)
        })
        .collect())
}

/// Dominant eigenvector of every subband's Gram matrix, stacked as columns.
pub fn channel_to_csi(cfg: &SystemConfig, h: &TimeChannel) -> Result<CsiEigen> {
    let grams = subband_gram(cfg, h)?;
    let mut w = ComplexMatrix::zeros(cfg.n_t, cfg.n_sb);
    let mut eigvals = Vec::with_capacity(cfg.n_sb);
    for (l, g) in grams.iter().enumerate() {
        let (lambda, v) = top_eigvec(g)?;
        w.set_column(l, &v);
        eigvals.push(lambda);
    }
    Ok(CsiEigen {
        w,
        eigvals,
        ue_id: h.ue_id,
        slot: h.slot,
        task_id: None,
        origin: h.origin,
    })
}
