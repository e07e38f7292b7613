//! Shared inputs for the pipeline benchmarks.

use unelisa::gibbs::{sample, GibbsConfig};
use unelisa::harness::{generate_graph, Snr};
use unelisa::{IsingModelSpec, LabelMatrix};

/// A high-SNR graph with `p` classifiers and `d0` experts, fixed seed.
pub fn graph(p: usize, d0: usize) -> IsingModelSpec {
    generate_graph(p, d0, Snr::High, 42).expect("benchmark graph is feasible")
}

/// `n` Gibbs samples from `spec` with a short burn-in.
pub fn labels(spec: &IsingModelSpec, n: usize) -> LabelMatrix {
    let mut cfg = GibbsConfig::new(n, 7);
    cfg.burn_in_sweeps = 100;
    sample(spec, &cfg).expect("sampling a valid graph")
}
