//! Exact k-mer counting, the ground truth the filter is measured against.

use std::collections::HashMap;
use std::io::{self, Write};

use crate::hash::HashFamily;
use crate::io::ParseError;
use crate::kmer::{Canonicalizer, Kmer, KmerError, KmerWindows};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExactCounts {
    pub counts: HashMap<Kmer, u64>,
    /// Sum of all frequencies, i.e. accepted windows.
    pub total: u64,
    pub rejected_windows: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error(transparent)]
    Kmer(#[from] KmerError),
    #[error(transparent)]
    Input(#[from] ParseError),
}

/// Counts canonical k-mers exactly. Canonical forms are chosen with the same
/// hash a filter seeded with `seed` would use.
pub fn exact_count<I, S>(reads: I, k: usize, seed: u64) -> Result<ExactCounts, OracleError>
where
    I: IntoIterator<Item = Result<S, ParseError>>,
    S: AsRef<[u8]>,
{
    if k == 0 {
        return Err(KmerError::ZeroLength.into());
    }
    let family = HashFamily::new(seed, 1);
    let mut canon = Canonicalizer::new();
    let mut out = ExactCounts::default();
    for read in reads {
        let read = read?;
        let mut windows = KmerWindows::new(read.as_ref(), k)?;
        for w in windows.by_ref() {
            let c = canon.load(&family, w);
            // Avoid allocating a key for k-mers already present.
            match out.counts.get_mut(c.bytes) {
                Some(n) => *n += 1,
                None => {
                    out.counts.insert(Kmer::from_normalized(c.bytes), 1);
                }
            }
            out.total += 1;
        }
        out.rejected_windows += windows.rejected();
    }
    Ok(out)
}

impl ExactCounts {
    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn get(&self, kmer: &[u8]) -> u64 {
        self.counts.get(kmer).copied().unwrap_or(0)
    }

    /// Entries sorted lexicographically by k-mer.
    pub fn sorted(&self) -> Vec<(&Kmer, u64)> {
        let mut v: Vec<_> = self.counts.iter().map(|(k, &n)| (k, n)).collect();
        v.sort_unstable_by(|a, b| a.0.cmp(b.0));
        v
    }

    /// `KMER<TAB>FREQUENCY` lines in lexicographic order.
    pub fn dump<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (k, n) in self.sorted() {
            w.write_all(k.as_bytes())?;
            writeln!(w, "\t{n}")?;
        }
        w.flush()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExactClassification {
    /// All keys, sorted.
    pub distinct: Vec<Kmer>,
    pub trustworthy: Vec<Kmer>,
    pub erroneous: Vec<Kmer>,
}

/// Partitions keys on `frequency > tau`.
pub fn exact_classify(counts: &ExactCounts, tau: u64) -> ExactClassification {
    let mut out = ExactClassification::default();
    for (k, n) in counts.sorted() {
        out.distinct.push(k.clone());
        if n > tau {
            out.trustworthy.push(k.clone());
        } else {
            out.erroneous.push(k.clone());
        }
    }
    out
}

/// Number of trustworthy keys without materializing the lists.
pub fn trustworthy_count(counts: &ExactCounts, tau: u64) -> u64 {
    counts.counts.values().filter(|&&n| n > tau).count() as u64
}
