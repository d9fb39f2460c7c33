//! Synthetic sequencing data: reads sampled from a random genome with
//! substitution errors, drawn from either strand.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::kmer::complement;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub genome_len: usize,
    pub read_count: usize,
    pub read_len: usize,
    /// Per-base substitution probability.
    pub error_rate: f64,
    /// Per-base probability of an `N` call.
    pub n_rate: f64,
    /// Probability that a read is taken from the reverse strand.
    pub reverse_fraction: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            genome_len: 2_000,
            read_count: 1_000,
            read_len: 100,
            error_rate: 0.001,
            n_rate: 0.0,
            reverse_fraction: 0.5,
            seed: 1,
        }
    }
}

const BASES: &[u8; 4] = b"ACGT";

pub fn random_genome(rng: &mut impl Rng, len: usize) -> Vec<u8> {
    (0..len).map(|_| BASES[rng.random_range(0..4)]).collect()
}

/// Reads drawn uniformly from the genome. Deterministic for a given spec.
pub fn simulate_reads(spec: &SyntheticSpec) -> Vec<Vec<u8>> {
    assert!(spec.read_len >= 1 && spec.read_len <= spec.genome_len);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let genome = random_genome(&mut rng, spec.genome_len);
    (0..spec.read_count)
        .map(|_| {
            let start = rng.random_range(0..=spec.genome_len - spec.read_len);
            let mut read = genome[start..start + spec.read_len].to_vec();
            if rng.random_bool(spec.reverse_fraction) {
                read.reverse();
                read.iter_mut().for_each(|b| *b = complement(*b));
            }
            for b in read.iter_mut() {
                if spec.n_rate > 0.0 && rng.random_bool(spec.n_rate) {
                    *b = b'N';
                } else if spec.error_rate > 0.0 && rng.random_bool(spec.error_rate) {
                    let shift = rng.random_range(1..4);
                    let idx = BASES.iter().position(|x| x == b).unwrap();
                    *b = BASES[(idx + shift) % 4];
                }
            }
            read
        })
        .collect()
}

/// FASTA text with one record per read.
pub fn to_fasta(reads: &[Vec<u8>]) -> String {
    let mut out = String::with_capacity(reads.iter().map(|r| r.len() + 12).sum());
    for (i, r) in reads.iter().enumerate() {
        out.push_str(&format!(">read{}\n", i + 1));
        out.push_str(std::str::from_utf8(r).expect("ASCII bases"));
        out.push('\n');
    }
    out
}

/// Reverse complement of every read, order preserved.
pub fn reverse_complement_reads(reads: &[Vec<u8>]) -> Vec<Vec<u8>> {
    reads
        .iter()
        .map(|r| r.iter().rev().map(|&b| complement(b)).collect())
        .collect()
}
