//! Shared inputs for the benchmarks.

use kmerco::synth::{simulate_reads, SyntheticSpec};

/// Reads of length 100 from a 100 kb genome, about `windows` k-mers in total.
pub fn reads_with_windows(windows: usize, k: usize, seed: u64) -> Vec<Vec<u8>> {
    let read_len = 100;
    simulate_reads(&SyntheticSpec {
        genome_len: 100_000,
        read_count: windows.div_ceil(read_len - k + 1),
        read_len,
        error_rate: 0.001,
        seed,
        ..SyntheticSpec::default()
    })
}

/// Every k-mer of every read, concatenated as fixed-width records.
pub fn kmers_of(reads: &[Vec<u8>], k: usize) -> Vec<u8> {
    reads
        .iter()
        .flat_map(|r| r.windows(k))
        .flatten()
        .copied()
        .collect()
}
