//! Filter sizing.
//!
//! A standard Bloom filter for `n` items at false-positive rate `fpp` needs
//! `m = ceil(-n ln(fpp) / ln(2)^2)` bits. The 2D filter shrinks that to a grid
//! of `X * Y` 64-bit cells where `v = sqrt(m / 128)`, `X` is the smallest
//! prime above `v`, and `Y` is the third prime above `X`.

use std::fmt;

use thiserror::Error;

use crate::primes::{next_prime_after, nth_prime_after};

/// Width of one cell in bits.
pub const CELL_BITS: u32 = 64;
pub const MIN_ALPHA: u8 = 5;
pub const MAX_ALPHA: u8 = 16;

pub const DEFAULT_ALPHA: u8 = 8;
pub const DEFAULT_FPP: f64 = 0.001;
pub const DEFAULT_HASHES: u8 = 2;
pub const DEFAULT_SEED: u64 = 0x4b4d_4552_434f_0001;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("expected item count must be positive")]
    ZeroItems,
    #[error("false-positive probability {0} is outside (0, 1)")]
    BadFpp(f64),
    #[error("counter width {0} is outside [{MIN_ALPHA}, {MAX_ALPHA}]")]
    BadAlpha(u8),
    #[error("at least one hash function is required")]
    ZeroHashes,
    #[error("filter of {0} x {1} cells does not fit in memory")]
    TooLarge(u64, u64),
}

/// Derived sizing parameters of a filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterPlan {
    pub n: u64,
    pub fpp: f64,
    /// Bit count of the equivalent standard Bloom filter.
    pub m_bits: u64,
    pub v: f64,
    /// Row count `X` (prime).
    pub rows: u64,
    /// Column count `Y` (prime).
    pub cols: u64,
    /// Counter width in bits.
    pub alpha: u8,
    /// Counters per cell.
    pub eta: u8,
    pub hashes: u8,
    pub seed: u64,
}

pub fn standard_bloom_bits(n: u64, fpp: f64) -> u64 {
    let ln2 = std::f64::consts::LN_2;
    (-(n as f64) * fpp.ln() / (ln2 * ln2)).ceil() as u64
}

pub fn counters_per_cell(alpha: u8) -> u8 {
    (CELL_BITS / alpha as u32) as u8
}

pub fn wasted_bits(alpha: u8) -> u8 {
    (CELL_BITS - counters_per_cell(alpha) as u32 * alpha as u32) as u8
}

fn isqrt(x: u64) -> u64 {
    let mut r = (x as f64).sqrt() as u64;
    while r.saturating_mul(r) > x {
        r -= 1;
    }
    while (r + 1).saturating_mul(r + 1) <= x {
        r += 1;
    }
    r
}

/// Sizes a filter for `n` items.
pub fn plan_dimensions(
    n: u64,
    fpp: f64,
    alpha: u8,
    hashes: u8,
    seed: u64,
) -> Result<FilterPlan, PlanError> {
    if n == 0 {
        return Err(PlanError::ZeroItems);
    }
    if !(fpp > 0.0 && fpp < 1.0) {
        return Err(PlanError::BadFpp(fpp));
    }
    if !(MIN_ALPHA..=MAX_ALPHA).contains(&alpha) {
        return Err(PlanError::BadAlpha(alpha));
    }
    if hashes == 0 {
        return Err(PlanError::ZeroHashes);
    }
    let m_bits = standard_bloom_bits(n, fpp);
    let v = (m_bits as f64 / 128.0).sqrt();
    // floor(sqrt(m / 128)) == isqrt(floor(m / 128)); the smallest prime
    // above v is the smallest prime above its floor.
    let rows = next_prime_after(isqrt(m_bits / 128));
    let cols = nth_prime_after(rows, 3);
    let plan = FilterPlan {
        n,
        fpp,
        m_bits,
        v,
        rows,
        cols,
        alpha,
        eta: counters_per_cell(alpha),
        hashes,
        seed,
    };
    plan.cell_count()?;
    Ok(plan)
}

impl FilterPlan {
    pub fn wasted_bits(&self) -> u8 {
        wasted_bits(self.alpha)
    }

    /// Largest value a counter can hold, `2^alpha - 1`.
    pub fn max_count(&self) -> u64 {
        (1u64 << self.alpha) - 1
    }

    pub fn cell_count(&self) -> Result<usize, PlanError> {
        self.rows
            .checked_mul(self.cols)
            .and_then(|c| usize::try_from(c).ok())
            .filter(|&c| c.checked_mul(8).is_some())
            .ok_or(PlanError::TooLarge(self.rows, self.cols))
    }

    pub fn counter_count(&self) -> u64 {
        self.rows * self.cols * self.eta as u64
    }

    /// `X * Y * 64`.
    pub fn size_bits(&self) -> u64 {
        self.rows * self.cols * CELL_BITS as u64
    }

    /// Cell storage only, `X * Y * 8`.
    pub fn size_bytes(&self) -> u64 {
        self.rows * self.cols * 8
    }

    pub fn size_mib(&self) -> f64 {
        self.size_bytes() as f64 / (1024.0 * 1024.0)
    }

    /// Re-derives the plan from its inputs and checks that every stored
    /// dimension agrees.
    pub fn validate(&self) -> Result<(), PlanInvariantError> {
        let fresh = plan_dimensions(self.n, self.fpp, self.alpha, self.hashes, self.seed)
            .map_err(PlanInvariantError::Inputs)?;
        let same = fresh.m_bits == self.m_bits
            && fresh.rows == self.rows
            && fresh.cols == self.cols
            && fresh.eta == self.eta
            && fresh.v.to_bits() == self.v.to_bits();
        if same {
            Ok(())
        } else {
            Err(PlanInvariantError::Dimensions {
                expected: (fresh.rows, fresh.cols),
                found: (self.rows, self.cols),
            })
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanInvariantError {
    #[error(transparent)]
    Inputs(PlanError),
    #[error("dimensions {found:?} do not match the {expected:?} derived from the plan inputs")]
    Dimensions {
        expected: (u64, u64),
        found: (u64, u64),
    },
}

impl fmt::Display for FilterPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n = {}", self.n)?;
        writeln!(f, "fpp = {}", self.fpp)?;
        writeln!(f, "m_bits = {}", self.m_bits)?;
        writeln!(f, "v = {:.6}", self.v)?;
        writeln!(f, "rows = {}", self.rows)?;
        writeln!(f, "cols = {}", self.cols)?;
        writeln!(f, "alpha = {}", self.alpha)?;
        writeln!(f, "eta = {}", self.eta)?;
        writeln!(f, "wasted_bits_per_cell = {}", self.wasted_bits())?;
        writeln!(f, "max_count = {}", self.max_count())?;
        writeln!(f, "hashes = {}", self.hashes)?;
        writeln!(f, "seed = {}", self.seed)?;
        writeln!(f, "size_bits = {}", self.size_bits())?;
        writeln!(f, "size_bytes = {}", self.size_bytes())?;
        write!(f, "size_mib = {:.4}", self.size_mib())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::primes::is_prime;
    use proptest::prelude::*;

    #[test]
    fn counter_layout_table() {
        let table = [
            (5, 12, 4),
            (6, 10, 4),
            (7, 9, 1),
            (8, 8, 0),
            (9, 7, 1),
            (10, 6, 4),
            (12, 5, 4),
            (14, 4, 8),
            (16, 4, 0),
        ];
        for (alpha, eta, waste) in table {
            assert_eq!((counters_per_cell(alpha), wasted_bits(alpha)), (eta, waste), "alpha {alpha}");
        }
    }

    #[test]
    fn single_item_plan() {
        let p = plan_dimensions(1, 0.5, 8, 2, 0).unwrap();
        assert_eq!(p.m_bits, 2);
        assert!((p.v - 0.125).abs() < 1e-12);
        assert_eq!(p.rows, 2);
        assert_eq!(p.cols, 7);
    }

    // Frozen from an independent Python trial-division script.
    #[test]
    fn reference_dataset_plan() {
        let p = plan_dimensions(163_872_472, 0.001, 8, 2, 0).unwrap();
        assert_eq!(p.m_bits, 2_356_090_816);
        assert!((p.v - 4290.333262113795).abs() < 1e-9);
        assert_eq!((p.rows, p.cols), (4297, 4339));
        assert_eq!(p.size_bytes(), 149_157_464);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(plan_dimensions(0, 0.01, 8, 2, 0), Err(PlanError::ZeroItems));
        assert!(matches!(plan_dimensions(10, 0.0, 8, 2, 0), Err(PlanError::BadFpp(_))));
        assert!(matches!(plan_dimensions(10, 1.0, 8, 2, 0), Err(PlanError::BadFpp(_))));
        assert!(matches!(plan_dimensions(10, f64::NAN, 8, 2, 0), Err(PlanError::BadFpp(_))));
        assert_eq!(plan_dimensions(10, 0.01, 4, 2, 0), Err(PlanError::BadAlpha(4)));
        assert_eq!(plan_dimensions(10, 0.01, 17, 2, 0), Err(PlanError::BadAlpha(17)));
        assert_eq!(plan_dimensions(10, 0.01, 8, 0, 0), Err(PlanError::ZeroHashes));
    }

    #[test]
    fn validate_catches_tampering() {
        let mut p = plan_dimensions(1000, 0.01, 8, 2, 0).unwrap();
        assert!(p.validate().is_ok());
        p.cols += 2;
        assert!(matches!(p.validate(), Err(PlanInvariantError::Dimensions { .. })));
    }

    proptest! {
        #[test]
        fn isqrt_is_exact(x in any::<u64>()) {
            let r = isqrt(x) as u128;
            prop_assert!(r * r <= x as u128 && (r + 1) * (r + 1) > x as u128);
        }

        #[test]
        fn plan_invariants(n in 1u64..1_000_000_000, fpp in 1e-6f64..0.99, alpha in 5u8..=16) {
            let p = plan_dimensions(n, fpp, alpha, 2, 1).unwrap();
            prop_assert!(is_prime(p.rows) && is_prime(p.cols));
            prop_assert!((p.rows as f64) > p.v);
            prop_assert!(p.cols > p.rows);
            prop_assert_eq!(p.eta as u32 * alpha as u32 + p.wasted_bits() as u32, 64);
        }
    }
}
