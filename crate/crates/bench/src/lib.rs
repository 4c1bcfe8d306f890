//! Criterion benchmarks for the tensor-network constructions live in
//! `benches/`. Run them with `cargo bench -p loctens-bench`.

use loctens::ChainHamiltonian;

/// The critical transverse-field Ising chain used by every benchmark.
pub fn critical_tfim(n: usize) -> ChainHamiltonian {
    ChainHamiltonian::tfim(n, 1.0, 1.0).expect("valid couplings")
}
