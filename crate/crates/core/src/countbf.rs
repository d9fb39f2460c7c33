//! The two-dimensional counting Bloom filter.
//!
//! `X * Y` cells of 64 bits, each split into `eta` counters of `alpha` bits.
//! A single 64-bit hash `h` addresses one counter: row `h % X`, column
//! `h % Y`, counter `h % eta`. Counters are read and written through
//! per-counter extract and reset masks and saturate at `2^alpha - 1`.

use std::io::{self, Read, Write};

use thiserror::Error;

use crate::hash::{murmur3_64, HashFamily};
use crate::kmer::reverse_complement_into;
use crate::plan::{FilterPlan, PlanError, PlanInvariantError, MAX_ALPHA, MIN_ALPHA};

/// Address of one counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Slot {
    pub cell: usize,
    pub counter: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertOutcome {
    Applied,
    /// At least one addressed counter was already at its maximum and was
    /// left unchanged.
    Saturated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FillStats {
    pub cells: u64,
    pub occupied_cells: u64,
    pub counters: u64,
    pub nonzero_counters: u64,
    pub saturated_counters: u64,
    pub max_counter: u64,
    pub counter_sum: u64,
}

impl FillStats {
    pub fn load_factor(&self) -> f64 {
        if self.counters == 0 {
            0.0
        } else {
            self.nonzero_counters as f64 / self.counters as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct CountBf {
    plan: FilterPlan,
    family: HashFamily,
    cells: Vec<u64>,
    extract_masks: Vec<u64>,
    reset_masks: Vec<u64>,
    shift_step: u32,
    max_count: u64,
    total_increments: u64,
    overflow_events: u64,
}

impl PartialEq for CountBf {
    /// Plan and cells; the running tallies are not part of identity.
    fn eq(&self, other: &Self) -> bool {
        self.plan == other.plan && self.cells == other.cells
    }
}

/// Extract mask for counter `l`: `alpha` ones starting at bit `alpha * l`.
pub fn extract_mask(alpha: u8, l: u8) -> u64 {
    ((1u64 << alpha) - 1) << (alpha as u32 * l as u32)
}

pub fn reset_mask(alpha: u8, l: u8) -> u64 {
    !extract_mask(alpha, l)
}

impl CountBf {
    /// An empty filter. Panics if the plan is larger than addressable memory;
    /// plans from [`crate::plan_dimensions`] never are.
    pub fn new(plan: FilterPlan) -> Self {
        let cells = plan.cell_count().expect("plan too large");
        let extract_masks: Vec<u64> = (0..plan.eta).map(|l| extract_mask(plan.alpha, l)).collect();
        let reset_masks = extract_masks.iter().map(|m| !m).collect();
        Self {
            family: HashFamily::new(plan.seed, plan.hashes),
            cells: vec![0; cells],
            extract_masks,
            reset_masks,
            shift_step: plan.alpha as u32,
            max_count: plan.max_count(),
            total_increments: 0,
            overflow_events: 0,
            plan,
        }
    }

    pub fn plan(&self) -> &FilterPlan {
        &self.plan
    }

    pub fn family(&self) -> &HashFamily {
        &self.family
    }

    pub fn cells(&self) -> &[u64] {
        &self.cells
    }

    pub fn extract_masks(&self) -> &[u64] {
        &self.extract_masks
    }

    pub fn reset_masks(&self) -> &[u64] {
        &self.reset_masks
    }

    /// Insert calls whose every counter was incremented.
    pub fn total_increments(&self) -> u64 {
        self.total_increments
    }

    /// Individual counter increments dropped because of saturation.
    pub fn overflow_events(&self) -> u64 {
        self.overflow_events
    }

    #[inline(always)]
    pub fn slot(&self, h: u64) -> Slot {
        let i = h % self.plan.rows;
        let j = h % self.plan.cols;
        let l = h % self.plan.eta as u64;
        Slot {
            cell: (i * self.plan.cols + j) as usize,
            counter: l as u8,
        }
    }

    #[inline(always)]
    pub fn counter(&self, slot: Slot) -> u64 {
        let l = slot.counter as usize;
        (self.cells[slot.cell] & self.extract_masks[l]) >> (self.shift_step * l as u32)
    }

    /// Increments one counter; false (and no write) when it is saturated.
    #[inline(always)]
    fn bump(&mut self, slot: Slot) -> bool {
        let l = slot.counter as usize;
        let shift = self.shift_step * l as u32;
        let cell = self.cells[slot.cell];
        let value = ((cell & self.extract_masks[l]) >> shift) + 1;
        if value > self.max_count {
            self.overflow_events += 1;
            return false;
        }
        self.cells[slot.cell] = (cell & self.reset_masks[l]) | (value << shift);
        true
    }

    #[inline(always)]
    fn hash_at(&self, index: usize, kmer: &[u8], hash0: Option<u64>) -> u64 {
        match (index, hash0) {
            (0, Some(h)) => h,
            _ => self.family.hash(index, kmer),
        }
    }

    /// Increments the `k_h` counters addressed by `kmer`. Saturated counters
    /// are skipped independently of the others.
    pub fn insert(&mut self, kmer: &[u8]) -> InsertOutcome {
        self.insert_hashed(kmer, None)
    }

    /// [`CountBf::insert`] reusing an already computed first hash.
    pub fn insert_hashed(&mut self, kmer: &[u8], hash0: Option<u64>) -> InsertOutcome {
        let mut applied = true;
        for a in 0..self.family.len() {
            let slot = self.slot(self.hash_at(a, kmer, hash0));
            applied &= self.bump(slot);
        }
        self.finish_insert(applied)
    }

    fn finish_insert(&mut self, applied: bool) -> InsertOutcome {
        if applied {
            self.total_increments += 1;
            InsertOutcome::Applied
        } else {
            InsertOutcome::Saturated
        }
    }

    /// Minimum over the addressed counters; 0 as soon as one of them is 0.
    pub fn query_min(&self, kmer: &[u8]) -> u64 {
        self.query_min_hashed(kmer, None)
    }

    pub fn query_min_hashed(&self, kmer: &[u8], hash0: Option<u64>) -> u64 {
        let mut min = u64::MAX;
        for a in 0..self.family.len() {
            let value = self.counter(self.slot(self.hash_at(a, kmer, hash0)));
            if value == 0 {
                return 0;
            }
            min = min.min(value);
        }
        min
    }

    /// Picks the canonical form of `fwd`/`rc` with the first hash function,
    /// then queries it. Returns the frequency and whether `rc` was picked.
    /// Both arguments must be uppercase.
    pub fn query_canonical(&self, fwd: &[u8], rc: &[u8]) -> (u64, bool) {
        let fh = self.family.canonical_hash(fwd);
        let rh = self.family.canonical_hash(rc);
        let use_fwd = fh < rh || (fh == rh && fwd <= rc);
        if use_fwd {
            (self.query_min_hashed(fwd, Some(fh)), false)
        } else {
            (self.query_min_hashed(rc, Some(rh)), true)
        }
    }

    /// Convenience form of [`CountBf::query_canonical`] deriving `rc` itself.
    pub fn query_either_strand(&self, kmer: &[u8]) -> u64 {
        let fwd = kmer.to_ascii_uppercase();
        let mut rc = Vec::with_capacity(fwd.len());
        reverse_complement_into(&fwd, &mut rc);
        self.query_canonical(&fwd, &rc).0
    }

    /// Writes the `k_h` slots of `kmer` into `out`.
    pub fn slots_into(&self, kmer: &[u8], hash0: Option<u64>, out: &mut Vec<Slot>) {
        out.clear();
        out.extend((0..self.family.len()).map(|a| self.slot(self.hash_at(a, kmer, hash0))));
    }

    pub fn min_at(&self, slots: &[Slot]) -> u64 {
        let mut min = u64::MAX;
        for &s in slots {
            let value = self.counter(s);
            if value == 0 {
                return 0;
            }
            min = min.min(value);
        }
        if slots.is_empty() {
            0
        } else {
            min
        }
    }

    pub fn increment_at(&mut self, slots: &[Slot]) -> InsertOutcome {
        let mut applied = true;
        for &s in slots {
            applied &= self.bump(s);
        }
        self.finish_insert(applied)
    }

    /// Every counter value in storage order (cell-major, counter-minor).
    pub fn counters(&self) -> impl Iterator<Item = u64> + '_ {
        let eta = self.plan.eta;
        self.cells.iter().flat_map(move |&c| {
            (0..eta).map(move |l| (c & self.extract_masks[l as usize]) >> (self.shift_step * l as u32))
        })
    }

    pub fn fill_stats(&self) -> FillStats {
        let mut s = FillStats {
            cells: self.cells.len() as u64,
            counters: self.cells.len() as u64 * self.plan.eta as u64,
            ..FillStats::default()
        };
        s.occupied_cells = self.cells.iter().filter(|&&c| c != 0).count() as u64;
        for v in self.counters() {
            if v != 0 {
                s.nonzero_counters += 1;
                s.counter_sum += v;
                s.max_counter = s.max_counter.max(v);
                if v == self.max_count {
                    s.saturated_counters += 1;
                }
            }
        }
        s
    }
}

pub const MAGIC: &[u8; 4] = b"KMCO";
pub const FORMAT_VERSION: u8 = 1;
/// Bytes before the cell payload.
pub const HEADER_LEN: usize = 4 + 1 + 1 + 1 + 8 * 6;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("not a filter file (bad magic)")]
    BadMagic,
    #[error("unsupported filter format version {0}")]
    UnsupportedVersion(u8),
    #[error("filter stream is truncated")]
    Truncated,
    #[error("invalid filter header: {0}")]
    Plan(#[from] PlanError),
    #[error("inconsistent filter header: {0}")]
    Dimensions(#[from] PlanInvariantError),
    #[error("payload length {found} does not match {expected} bytes implied by the header")]
    PayloadLength { expected: u64, found: u64 },
    #[error("payload checksum mismatch (stored {stored:#018x}, computed {computed:#018x})")]
    Checksum { stored: u64, computed: u64 },
    #[error("{0} unexpected bytes after the filter")]
    TrailingBytes(usize),
    #[error(transparent)]
    Io(io::Error),
}

impl From<io::Error> for FormatError {
    fn from(e: io::Error) -> Self {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            FormatError::Truncated
        } else {
            FormatError::Io(e)
        }
    }
}

fn payload_checksum(bytes: &[u8]) -> u64 {
    murmur3_64(bytes, 0)
}

fn read_u64(r: &mut impl Read) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_u8(r: &mut impl Read) -> io::Result<u8> {
    let mut b = [0u8; 1];
    r.read_exact(&mut b)?;
    Ok(b[0])
}

/// Binary format, version 1. All integers little-endian.
///
/// ```text
/// "KMCO"            4 bytes
/// version           u8  (1)
/// k_h               u8
/// alpha             u8
/// seed              u64
/// n                 u64
/// fpp               f64 (IEEE-754 bits)
/// X                 u64
/// Y                 u64
/// payload length    u64 (= X * Y * 8)
/// cells             X * Y u64, row-major
/// checksum          u64
/// ```
///
/// The checksum is the first 64-bit word of MurmurHash3_x64_128 with seed 0
/// over the payload bytes exactly as stored.
impl CountBf {
    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        let p = &self.plan;
        let mut header = Vec::with_capacity(HEADER_LEN);
        header.extend_from_slice(MAGIC);
        header.push(FORMAT_VERSION);
        header.push(p.hashes);
        header.push(p.alpha);
        header.extend_from_slice(&p.seed.to_le_bytes());
        header.extend_from_slice(&p.n.to_le_bytes());
        header.extend_from_slice(&p.fpp.to_bits().to_le_bytes());
        header.extend_from_slice(&p.rows.to_le_bytes());
        header.extend_from_slice(&p.cols.to_le_bytes());
        header.extend_from_slice(&(self.cells.len() as u64 * 8).to_le_bytes());
        w.write_all(&header)?;

        let payload = self.payload_bytes();
        w.write_all(&payload)?;
        w.write_all(&payload_checksum(&payload).to_le_bytes())?;
        w.flush()
    }

    fn payload_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.cells.len() * 8);
        for c in &self.cells {
            out.extend_from_slice(&c.to_le_bytes());
        }
        out
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.cells.len() * 8 + 8);
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    /// Reads one filter from `r`, leaving any following bytes unread.
    pub fn read_from<R: Read>(mut r: R) -> Result<Self, FormatError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(FormatError::BadMagic);
        }
        let version = read_u8(&mut r)?;
        if version != FORMAT_VERSION {
            return Err(FormatError::UnsupportedVersion(version));
        }
        let hashes = read_u8(&mut r)?;
        let alpha = read_u8(&mut r)?;
        let seed = read_u64(&mut r)?;
        let n = read_u64(&mut r)?;
        let fpp = f64::from_bits(read_u64(&mut r)?);
        let rows = read_u64(&mut r)?;
        let cols = read_u64(&mut r)?;
        let payload_len = read_u64(&mut r)?;

        if !(MIN_ALPHA..=MAX_ALPHA).contains(&alpha) {
            return Err(PlanError::BadAlpha(alpha).into());
        }
        let plan = crate::plan::plan_dimensions(n, fpp, alpha, hashes, seed)?;
        let stored = FilterPlan { rows, cols, ..plan };
        stored.validate()?;
        let expected = plan.size_bytes();
        if payload_len != expected {
            return Err(FormatError::PayloadLength {
                expected,
                found: payload_len,
            });
        }

        let mut payload = Vec::with_capacity(expected.min(1 << 24) as usize);
        r.by_ref().take(expected).read_to_end(&mut payload)?;
        if payload.len() as u64 != expected {
            return Err(FormatError::Truncated);
        }
        let stored_sum = read_u64(&mut r)?;
        let computed = payload_checksum(&payload);
        if stored_sum != computed {
            return Err(FormatError::Checksum {
                stored: stored_sum,
                computed,
            });
        }

        let mut filter = CountBf::new(plan);
        for (cell, chunk) in filter.cells.iter_mut().zip(payload.chunks_exact(8)) {
            *cell = u64::from_le_bytes(chunk.try_into().unwrap());
        }
        Ok(filter)
    }

    /// Parses a complete filter image; trailing bytes are an error.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, FormatError> {
        let mut cursor = bytes;
        let filter = Self::read_from(&mut cursor)?;
        if !cursor.is_empty() {
            return Err(FormatError::TrailingBytes(cursor.len()));
        }
        Ok(filter)
    }
}
