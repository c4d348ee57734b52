//! Complex linear-algebra kernels and seeded random streams.

mod linalg;
mod matrix;
mod rng;

pub use linalg::{
    dft_delay_to_freq, fix_phase, gram_schmidt, hermitian_eig, top_eigvec, HermitianEig,
    RANK_TOLERANCE,
};
pub use matrix::{inner, kron, kron_vec, vec_norm, ComplexMatrix};
pub use rng::{complex_gaussian, stream_key, Purpose, RngStream};
