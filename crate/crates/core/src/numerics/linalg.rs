use std::f64::consts::PI;

use num_complex::Complex64;

use super::matrix::{inner, vec_norm, ComplexMatrix};
use super::rng::RngStream;
use crate::error::{Error, Result};

/// Pivot norms at or below this are treated as rank loss.
pub const RANK_TOLERANCE: f64 = 1e-8;

/// Modified Gram–Schmidt with one re-orthogonalisation pass.
///
/// Column `k` of the output spans the same flag as columns `0..=k` of `x`.
pub fn gram_schmidt(x: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !x.is_square() {
        return Err(Error::Shape(format!(
            "gram_schmidt needs a square matrix, got {}x{}",
            x.rows(),
            x.cols()
        )));
    }
    let n = x.rows();
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    for k in 0..n {
        let mut v = x.column(k);
        let mut pivot = 0.0;
        for pass in 0..2 {
            for u in &basis {
                let proj = inner(u, &v);
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= proj * ui;
                }
            }
            let norm = vec_norm(&v);
            if pass == 0 {
                pivot = norm;
                if pivot <= RANK_TOLERANCE {
                    return Err(Error::RankDeficient { column: k, pivot });
                }
            }
            for vi in v.iter_mut() {
                *vi /= norm;
            }
        }
        debug_assert!(pivot > RANK_TOLERANCE);
        basis.push(v);
    }
    let mut out = ComplexMatrix::zeros(n, n);
    for (k, u) in basis.iter().enumerate() {
        out.set_column(k, u);
    }
    Ok(out)
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    /// Eigenvalues, descending.
    pub values: Vec<f64>,
    /// Unitary matrix whose columns are the matching eigenvectors.
    pub vectors: ComplexMatrix,
}

impl HermitianEig {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let scaled = ComplexMatrix::from_fn(self.vectors.rows(), self.vectors.cols(), |i, j| {
            self.vectors[(i, j)] * self.values[j]
        });
        scaled.matmul(&self.vectors.adjoint())
    }
}

const HERMITIAN_TOLERANCE: f64 = 1e-8;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Full eigen-decomposition by cyclic complex Jacobi rotations.
///
/// The input is symmetrised as `(A + A^H)/2` first. Eigenvalues come back in
/// descending order and every eigenvector has its first entry of magnitude
/// above 1e-12 rotated to the positive real axis.
pub fn hermitian_eig(a: &ComplexMatrix) -> Result<HermitianEig> {
    let asymmetry = a.hermitian_defect();
    if !(asymmetry < HERMITIAN_TOLERANCE) {
        return Err(Error::NotHermitian { asymmetry });
    }
    let n = a.rows();
    let mut m = a.add(&a.adjoint()).scale_real(0.5);
    let mut v = ComplexMatrix::identity(n);
    let scale = m.frobenius_norm();

    if scale > 0.0 {
        for _ in 0..JACOBI_MAX_SWEEPS {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| m[(i, j)].norm_sqr())
                .sum::<f64>()
                .sqrt();
            if off <= 1e-15 * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    jacobi_rotate(&mut m, &mut v, p, q, scale);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]).then(i.cmp(&j)));

    let mut vectors = ComplexMatrix::zeros(n, n);
    for (k, &src) in order.iter().enumerate() {
        let mut col = v.column(src);
        fix_phase(&mut col);
        vectors.set_column(k, &col);
    }
    Ok(HermitianEig {
        values: order.iter().map(|&i| diag[i]).collect(),
        vectors,
    })
}

fn jacobi_rotate(m: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize, scale: f64) {
    let n = m.rows();
    let b = m[(p, q)];
    let r = b.norm();
    if r <= 1e-300 || r < 1e-18 * scale {
        return;
    }
    // Phase e^{-iφ} on column q makes the 2x2 block real symmetric.
    let phase = (b / r).conj();
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    let theta = (aqq - app) / (2.0 * r);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // G = [[c, s], [-s·phase, c·phase]]; A <- G^H A G, V <- V G.
    let g_qp = -phase * s;
    let g_qq = phase * c;
    for k in 0..n {
        let akp = m[(k, p)];
        let akq = m[(k, q)];
        m[(k, p)] = akp * c + akq * g_qp;
        m[(k, q)] = akp * s + akq * g_qq;
    }
    for k in 0..n {
        let apk = m[(p, k)];
        let aqk = m[(q, k)];
        m[(p, k)] = apk * c + aqk * g_qp.conj();
        m[(q, k)] = apk * s + aqk * g_qq.conj();
    }
    m[(p, q)] = Complex64::new(0.0, 0.0);
    m[(q, p)] = Complex64::new(0.0, 0.0);
    m[(p, p)] = Complex64::new(m[(p, p)].re, 0.0);
    m[(q, q)] = Complex64::new(m[(q, q)].re, 0.0);
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c + vkq * g_qp;
        v[(k, q)] = vkp * s + vkq * g_qq;
    }
}

/// Rotates `v` so that its first entry with magnitude above 1e-12 is real positive.
pub fn fix_phase(v: &mut [Complex64]) {
    if let Some(k) = v.iter().position(|z| z.norm() > 1e-12) {
        let mag = v[k].norm();
        let rot = v[k].conj() / mag;
        for z in v.iter_mut() {
            *z *= rot;
        }
        // Pin the reference entry exactly on the positive real axis.
        v[k] = Complex64::new(mag, 0.0);
    }
}

const POWER_MAX_ITERS: usize = 1000;
const POWER_EIG_TOLERANCE: f64 = 1e-12;
const POWER_RESIDUAL_TOLERANCE: f64 = 1e-11;

/// Dominant eigenpair of a Hermitian PSD matrix.
///
/// Power iteration from a fixed pseudo-random start; falls back to
/// [`hermitian_eig`] if it has not converged after 1000 iterations.
pub fn top_eigvec(a: &ComplexMatrix) -> Result<(f64, Vec<Complex64>)> {
    if !a.is_square() {
        return Err(Error::Shape("top_eigvec needs a square matrix".into()));
    }
    let n = a.rows();
    if n == 0 {
        return Err(Error::Shape("top_eigvec on an empty matrix".into()));
    }
    if a.frobenius_norm() == 0.0 {
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        e[0] = Complex64::new(1.0, 0.0);
        return Ok((0.0, e));
    }

    let mut start_rng = RngStream::new(0x005e_ed0f_90e1, n as u64);
    let probe: Vec<Complex64> = (0..n).map(|_| start_rng.complex_normal()).collect();
    let mut x = a.mul_vec(&probe);
    let mut norm = vec_norm(&x);

    if norm > 0.0 {
        x.iter_mut().for_each(|z| *z /= norm);
        let mut prev = f64::NAN;
        for _ in 0..POWER_MAX_ITERS {
            let y = a.mul_vec(&x);
            let lambda = inner(&x, &y).re;
            let residual = y
                .iter()
                .zip(&x)
                .map(|(yi, xi)| (yi - xi * lambda).norm_sqr())
                .sum::<f64>()
                .sqrt();
            if lambda > 0.0
                && (lambda - prev).abs() <= POWER_EIG_TOLERANCE * lambda
                && residual <= POWER_RESIDUAL_TOLERANCE * lambda
            {
                fix_phase(&mut x);
                return Ok((lambda, x));
            }
            prev = lambda;
            norm = vec_norm(&y);
            if norm == 0.0 {
                break;
            }
            x = y.into_iter().map(|z| z / norm).collect();
        }
    }

    let eig = hermitian_eig(a)?;
    Ok((eig.values[0], eig.vectors.column(0)))
}

/// Unnormalised forward DFT over the delay axis with zero padding:
/// `H̃_k = Σ_d Ĥ_d · exp(−j2π k d / n_sc)` for `k = 0..n_sc`.
pub fn dft_delay_to_freq(taps: &[ComplexMatrix], n_sc: usize) -> Result<Vec<ComplexMatrix>> {
    if taps.len() > n_sc {
        return Err(Error::DelayOverflow {
            taps: taps.len(),
            subcarriers: n_sc,
        });
    }
    let Some(first) = taps.first() else {
        return Err(Error::Shape("channel with no delay taps".into()));
    };
    let (rows, cols) = (first.rows(), first.cols());
    let twiddle: Vec<Complex64> = (0..n_sc)
        .map(|m| Complex64::from_polar(1.0, -2.0 * PI * m as f64 / n_sc as f64))
        .collect();
    let mut out = Vec::with_capacity(n_sc);
    for k in 0..n_sc {
        let mut acc = ComplexMatrix::zeros(rows, cols);
        for (d, tap) in taps.iter().enumerate() {
            let w = twiddle[(k * d) % n_sc];
            for (o, h) in acc.as_mut_slice().iter_mut().zip(tap.as_slice()) {
                *o += h * w;
            }
        }
        out.push(acc);
    }
    Ok(out)
}
