//! Shared input builders for the benchmark suite.

use wdfs_core::algebra::{hermitianize, GeneratorSet};
use wdfs_core::channels::collective_noise;

/// Hermitian generators of the collective-noise algebra on `n_q` qubits.
pub fn collective_generators(n_q: usize) -> GeneratorSet {
    let ch = collective_noise(n_q).expect("within qubit cap");
    hermitianize(ch.kraus(), format!("collective-{n_q}")).expect("valid Kraus set")
}
