//! K-mer extraction, reverse complement and canonical selection.
//!
//! Bases are kept one byte each (`A`, `C`, `G`, `T`, `N`) rather than 2-bit
//! packed, since `N` is a legal symbol.

use std::fmt;

use thiserror::Error;

use crate::hash::HashFamily;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum KmerError {
    #[error("k-mer length must be at least 1")]
    ZeroLength,
    #[error("invalid base {byte:#04x} at offset {offset}")]
    InvalidBase { byte: u8, offset: usize },
}

/// True for `ACGTN` in either case.
#[inline(always)]
pub fn is_valid_base(b: u8) -> bool {
    matches!(b, b'A' | b'C' | b'G' | b'T' | b'N' | b'a' | b'c' | b'g' | b't' | b'n')
}

#[inline(always)]
pub fn complement(b: u8) -> u8 {
    match b {
        b'A' | b'a' => b'T',
        b'C' | b'c' => b'G',
        b'G' | b'g' => b'C',
        b'T' | b't' => b'A',
        _ => b'N',
    }
}

/// Writes the reverse complement of `src` into `dst` (which is cleared first).
/// Output is uppercase.
#[inline]
pub fn reverse_complement_into(src: &[u8], dst: &mut Vec<u8>) {
    dst.clear();
    dst.extend(src.iter().rev().map(|&b| complement(b)));
}

/// An owned, validated, uppercase k-mer.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Kmer(Box<[u8]>);

impl Kmer {
    /// Validates and uppercases `bases`.
    pub fn new(bases: &[u8]) -> Result<Self, KmerError> {
        if bases.is_empty() {
            return Err(KmerError::ZeroLength);
        }
        if let Some(offset) = bases.iter().position(|&b| !is_valid_base(b)) {
            return Err(KmerError::InvalidBase {
                byte: bases[offset],
                offset,
            });
        }
        Ok(Self(bases.to_ascii_uppercase().into_boxed_slice()))
    }

    /// Caller guarantees `bases` is non-empty uppercase `ACGTN`.
    pub(crate) fn from_normalized(bases: &[u8]) -> Self {
        debug_assert!(bases.iter().all(|b| b"ACGTN".contains(b)));
        Self(bases.into())
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn reverse_complement(&self) -> Kmer {
        Kmer(self.0.iter().rev().map(|&b| complement(b)).collect())
    }

    pub fn as_str(&self) -> &str {
        // Only ASCII bases are ever stored.
        std::str::from_utf8(&self.0).unwrap()
    }
}

impl AsRef<[u8]> for Kmer {
    fn as_ref(&self) -> &[u8] {
        &self.0
    }
}

// Lets maps keyed by `Kmer` be probed with a borrowed slice.
impl std::borrow::Borrow<[u8]> for Kmer {
    fn borrow(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Display for Kmer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Debug for Kmer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Kmer({})", self.as_str())
    }
}

impl std::str::FromStr for Kmer {
    type Err = KmerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Kmer::new(s.as_bytes())
    }
}

/// Lazy left-to-right iterator over the length-`k` windows of a sequence.
///
/// Windows containing a byte outside `ACGTNacgtn` are skipped and tallied in
/// [`KmerWindows::rejected`]. Yielded slices borrow the input unchanged, so
/// they may still contain lowercase bases.
#[derive(Debug, Clone)]
pub struct KmerWindows<'a> {
    seq: &'a [u8],
    k: usize,
    start: usize,
    // One past the index of the last invalid byte seen, or 0.
    clean_from: usize,
    rejected: u64,
}

impl<'a> KmerWindows<'a> {
    pub fn new(seq: &'a [u8], k: usize) -> Result<Self, KmerError> {
        if k == 0 {
            return Err(KmerError::ZeroLength);
        }
        let mut clean_from = 0;
        for (i, &b) in seq.iter().take(k.saturating_sub(1)).enumerate() {
            if !is_valid_base(b) {
                clean_from = i + 1;
            }
        }
        Ok(Self {
            seq,
            k,
            start: 0,
            clean_from,
            rejected: 0,
        })
    }

    /// Windows skipped so far because they held an invalid byte.
    pub fn rejected(&self) -> u64 {
        self.rejected
    }
}

impl<'a> Iterator for KmerWindows<'a> {
    type Item = &'a [u8];

    #[inline]
    fn next(&mut self) -> Option<&'a [u8]> {
        loop {
            let end = self.start + self.k;
            if end > self.seq.len() {
                return None;
            }
            if !is_valid_base(self.seq[end - 1]) {
                self.clean_from = end;
            }
            let start = self.start;
            self.start += 1;
            if self.clean_from <= start {
                return Some(&self.seq[start..end]);
            }
            self.rejected += 1;
        }
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.seq.len() + 1).saturating_sub(self.start + self.k);
        (0, Some(left))
    }
}

/// Iterator over the windows of `seq`; see [`KmerWindows`].
pub fn windows(seq: &[u8], k: usize) -> Result<KmerWindows<'_>, KmerError> {
    KmerWindows::new(seq, k)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Extracted {
    pub kmers: Vec<Kmer>,
    pub rejected_windows: u64,
}

/// Collects every valid window of `seq` as an uppercase [`Kmer`].
pub fn extract_kmers(seq: &[u8], k: usize) -> Result<Extracted, KmerError> {
    let mut it = KmerWindows::new(seq, k)?;
    let kmers = it
        .by_ref()
        .map(|w| Kmer::from_normalized(&w.to_ascii_uppercase()))
        .collect();
    Ok(Extracted {
        kmers,
        rejected_windows: it.rejected(),
    })
}

/// Number of windows a sequence of length `len` yields, ignoring rejections.
pub fn window_count(len: usize, k: usize) -> u64 {
    (len + 1).saturating_sub(k) as u64
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanonicalChoice {
    pub kmer: Kmer,
    /// `false` when the forward form was kept, `true` for the reverse complement.
    pub picked_rc: bool,
}

/// Picks the forward k-mer when `fwd_hash < rc_hash`, else its reverse
/// complement. Ties keep the forward form when it is a palindrome; a tie
/// between distinct strands falls back to the lexicographically smaller one.
pub fn canonical(kmer: &Kmer, fwd_hash: u64, rc_hash: u64) -> CanonicalChoice {
    let rc = kmer.reverse_complement();
    if picks_forward(fwd_hash, rc_hash, kmer.as_bytes(), rc.as_bytes()) {
        CanonicalChoice {
            kmer: kmer.clone(),
            picked_rc: false,
        }
    } else {
        CanonicalChoice {
            kmer: rc,
            picked_rc: true,
        }
    }
}

#[inline(always)]
fn picks_forward(fwd_hash: u64, rc_hash: u64, fwd: &[u8], rc: &[u8]) -> bool {
    match fwd_hash.cmp(&rc_hash) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => fwd <= rc,
    }
}

/// [`canonical`] with both hashes taken from `family`'s canonical hash.
pub fn canonical_with(family: &HashFamily, kmer: &Kmer) -> CanonicalChoice {
    let rc = kmer.reverse_complement();
    let fh = family.canonical_hash(kmer.as_bytes());
    let rh = family.canonical_hash(rc.as_bytes());
    if picks_forward(fh, rh, kmer.as_bytes(), rc.as_bytes()) {
        CanonicalChoice {
            kmer: kmer.clone(),
            picked_rc: false,
        }
    } else {
        CanonicalChoice {
            kmer: rc,
            picked_rc: true,
        }
    }
}

/// Reusable buffers for canonicalizing raw windows without allocation.
#[derive(Debug, Default, Clone)]
pub struct Canonicalizer {
    fwd: Vec<u8>,
    rc: Vec<u8>,
}

/// Result of [`Canonicalizer::load`]: the canonical bytes plus the hash of
/// those bytes under the canonical hash (reusable as hash function 0).
#[derive(Debug, Clone, Copy)]
pub struct Canonical<'a> {
    pub bytes: &'a [u8],
    pub picked_rc: bool,
    pub hash0: u64,
}

impl Canonicalizer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Uppercases `window`, builds its reverse complement and selects the
    /// canonical form under `family`.
    #[inline]
    pub fn load(&mut self, family: &HashFamily, window: &[u8]) -> Canonical<'_> {
        self.fwd.clear();
        self.fwd.extend(window.iter().map(u8::to_ascii_uppercase));
        reverse_complement_into(window, &mut self.rc);
        let fh = family.canonical_hash(&self.fwd);
        let rh = family.canonical_hash(&self.rc);
        if picks_forward(fh, rh, &self.fwd, &self.rc) {
            Canonical {
                bytes: &self.fwd,
                picked_rc: false,
                hash0: fh,
            }
        } else {
            Canonical {
                bytes: &self.rc,
                picked_rc: true,
                hash0: rh,
            }
        }
    }

    pub fn forward(&self) -> &[u8] {
        &self.fwd
    }

    pub fn reverse(&self) -> &[u8] {
        &self.rc
    }
}
