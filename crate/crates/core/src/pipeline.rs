//! Insertion and classification phases.
//!
//! Insertion walks every window of every read, picks its canonical form,
//! queries the filter and increments it. A window whose canonical form
//! queries to zero is a first occurrence and is appended to the distinct
//! list. Classification then queries each distinct k-mer and splits the
//! list on `frequency > tau`.

use std::io::{self, BufRead, Cursor, Write};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::countbf::CountBf;
use crate::io::{KmerListError, KmerReader, KmerWriter, ParseError, SequenceRecord};
use crate::kmer::{Canonicalizer, Kmer, KmerError, KmerWindows};
use crate::plan::FilterPlan;

pub const DEFAULT_TAU: u64 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InsertionStats {
    pub records: u64,
    /// Windows processed (rejected windows excluded).
    pub total_kmers: u64,
    pub inserted: u64,
    pub first_occurrences: u64,
    pub rejected_windows: u64,
    pub overflow_events: u64,
    /// Insert loop wall-clock time minus time spent writing the distinct list.
    pub elapsed_seconds: f64,
}

impl InsertionStats {
    /// Windows that were seen but not inserted; always zero here.
    pub fn ignored(&self) -> u64 {
        self.total_kmers - self.inserted
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClassificationStats {
    pub distinct: u64,
    pub trustworthy: u64,
    pub erroneous: u64,
    pub tau: u64,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Kmer(#[from] KmerError),
    #[error("tau must be at least 1")]
    ZeroTau,
    #[error("reading sequences failed after {} k-mers: {source}", .stats.total_kmers)]
    Input {
        source: ParseError,
        stats: InsertionStats,
    },
    #[error("writing the distinct list failed after {} k-mers: {source}", .stats.total_kmers)]
    DistinctSink {
        source: io::Error,
        stats: InsertionStats,
    },
    #[error("reading the distinct list failed after {} k-mers: {source}", .stats.distinct)]
    DistinctSource {
        source: KmerListError,
        stats: ClassificationStats,
    },
    #[error("writing classification output failed after {} k-mers: {source}", .stats.distinct)]
    ClassifySink {
        source: io::Error,
        stats: ClassificationStats,
    },
    #[error(
        "distinct k-mer {kmer} (line {line}) is absent from the filter; \
         the filter was not built from this distinct list"
    )]
    Integrity { kmer: String, line: u64 },
}

impl AsRef<[u8]> for SequenceRecord {
    fn as_ref(&self) -> &[u8] {
        &self.sequence
    }
}

/// Adapts in-memory sequences to the reader item type.
pub fn in_memory<S: AsRef<[u8]>>(
    reads: &[S],
) -> impl Iterator<Item = Result<&[u8], ParseError>> + '_ {
    reads.iter().map(|r| Ok(r.as_ref()))
}

/// Builds the filter and the distinct list from `reads`.
///
/// Every window is inserted, so `inserted == total_kmers` on success. On an
/// input or sink failure the error carries the statistics gathered so far.
pub fn insertion_phase<I, S, W>(
    reads: I,
    k: usize,
    filter: &mut CountBf,
    distinct: &mut KmerWriter<W>,
) -> Result<InsertionStats, PipelineError>
where
    I: IntoIterator<Item = Result<S, ParseError>>,
    S: AsRef<[u8]>,
    W: Write,
{
    if k == 0 {
        return Err(KmerError::ZeroLength.into());
    }
    let family = *filter.family();
    let overflow_before = filter.overflow_events();
    let mut stats = InsertionStats::default();
    let mut canon = Canonicalizer::new();
    let mut slots = Vec::with_capacity(family.len());
    let mut writing = Duration::ZERO;
    let started = Instant::now();

    let finish = |stats: &mut InsertionStats, filter: &CountBf, writing: Duration| {
        stats.overflow_events = filter.overflow_events() - overflow_before;
        stats.elapsed_seconds = started.elapsed().saturating_sub(writing).as_secs_f64();
    };

    for read in reads {
        let read = match read {
            Ok(r) => r,
            Err(source) => {
                finish(&mut stats, filter, writing);
                return Err(PipelineError::Input { source, stats });
            }
        };
        stats.records += 1;
        let mut windows = KmerWindows::new(read.as_ref(), k)?;
        for window in windows.by_ref() {
            let c = canon.load(&family, window);
            filter.slots_into(c.bytes, Some(c.hash0), &mut slots);
            if filter.min_at(&slots) == 0 {
                let t = Instant::now();
                let res = distinct.write_kmer(c.bytes);
                writing += t.elapsed();
                if let Err(source) = res {
                    finish(&mut stats, filter, writing);
                    return Err(PipelineError::DistinctSink { source, stats });
                }
                stats.first_occurrences += 1;
            }
            filter.increment_at(&slots);
            stats.inserted += 1;
            stats.total_kmers += 1;
        }
        stats.rejected_windows += windows.rejected();
    }
    finish(&mut stats, filter, writing);
    Ok(stats)
}

/// Splits the distinct list into trustworthy (`frequency > tau`) and
/// erroneous k-mers.
pub fn classification_phase<R, W1, W2>(
    filter: &CountBf,
    distinct: &mut KmerReader<R>,
    tau: u64,
    trustworthy: &mut KmerWriter<W1>,
    erroneous: &mut KmerWriter<W2>,
) -> Result<ClassificationStats, PipelineError>
where
    R: BufRead,
    W1: Write,
    W2: Write,
{
    if tau == 0 {
        return Err(PipelineError::ZeroTau);
    }
    let mut stats = ClassificationStats {
        tau,
        ..Default::default()
    };
    loop {
        let kmer = match distinct.next_bytes() {
            None => break,
            Some(Ok(k)) => k,
            Some(Err(source)) => return Err(PipelineError::DistinctSource { source, stats }),
        };
        let freq = filter.query_min(kmer);
        if freq == 0 {
            return Err(PipelineError::Integrity {
                kmer: String::from_utf8_lossy(kmer).into_owned(),
                line: distinct.line_number(),
            });
        }
        let res = if freq > tau {
            stats.trustworthy += 1;
            trustworthy.write_kmer(kmer)
        } else {
            stats.erroneous += 1;
            erroneous.write_kmer(kmer)
        };
        stats.distinct += 1;
        if let Err(source) = res {
            return Err(PipelineError::ClassifySink { source, stats });
        }
    }
    Ok(stats)
}

/// Both phases run against in-memory buffers.
#[derive(Debug, Clone)]
pub struct InMemoryRun {
    pub filter: CountBf,
    pub insertion: InsertionStats,
    pub classification: ClassificationStats,
    pub distinct: Vec<Kmer>,
    pub trustworthy: Vec<Kmer>,
    pub erroneous: Vec<Kmer>,
}

fn parse_list(bytes: Vec<u8>) -> Vec<Kmer> {
    KmerReader::new(Cursor::new(bytes))
        .map(|k| k.expect("pipeline wrote an invalid k-mer"))
        .collect()
}

pub fn run_in_memory<I, S>(
    reads: I,
    k: usize,
    tau: u64,
    plan: FilterPlan,
) -> Result<InMemoryRun, PipelineError>
where
    I: IntoIterator<Item = Result<S, ParseError>>,
    S: AsRef<[u8]>,
{
    let mut filter = CountBf::new(plan);
    let mut distinct = KmerWriter::new(Vec::new());
    let insertion = insertion_phase(reads, k, &mut filter, &mut distinct)?;
    let distinct_bytes = distinct.finish().expect("Vec sink");

    let mut trust = KmerWriter::new(Vec::new());
    let mut err = KmerWriter::new(Vec::new());
    let classification = classification_phase(
        &filter,
        &mut KmerReader::new(Cursor::new(&distinct_bytes)),
        tau,
        &mut trust,
        &mut err,
    )?;
    Ok(InMemoryRun {
        filter,
        insertion,
        classification,
        distinct: parse_list(distinct_bytes),
        trustworthy: parse_list(trust.finish().expect("Vec sink")),
        erroneous: parse_list(err.finish().expect("Vec sink")),
    })
}
