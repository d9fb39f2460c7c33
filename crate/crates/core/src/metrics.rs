//! Evaluation metrics and the run report.
//!
//! Dataset rates are normalized by the total k-mer count. Because the
//! erroneous share is usually quoted against the distinct count instead,
//! the report carries both normalizations under separate keys.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::io::{self, Write};

use thiserror::Error;

use crate::oracle::{trustworthy_count, ExactCounts};
use crate::pipeline::{ClassificationStats, InsertionStats};
use crate::plan::FilterPlan;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("total k-mer count is zero")]
    ZeroTotal,
    #[error("elapsed time must be positive, got {0}")]
    NonPositiveElapsed(f64),
}

/// `(technique - oracle) / total`. Positive when erroneous k-mers were
/// promoted, negative when trustworthy k-mers were lost.
pub fn trustworthy_rate(technique: u64, oracle: u64, total: u64) -> Result<f64, MetricsError> {
    if total == 0 {
        return Err(MetricsError::ZeroTotal);
    }
    Ok((technique as f64 - oracle as f64) / total as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IgnoreRatio {
    /// Nothing was ignored; reported as 0.
    NoneIgnored,
    Ratio(f64),
}

impl IgnoreRatio {
    pub fn value(self) -> f64 {
        match self {
            IgnoreRatio::NoneIgnored => 0.0,
            IgnoreRatio::Ratio(r) => r,
        }
    }
}

/// `inserted / ignored`, or [`IgnoreRatio::NoneIgnored`] when every k-mer
/// was inserted.
pub fn inserted_to_ignored(inserted: u64, ignored: u64) -> IgnoreRatio {
    if ignored == 0 {
        IgnoreRatio::NoneIgnored
    } else {
        IgnoreRatio::Ratio(inserted as f64 / ignored as f64)
    }
}

/// `ignored / inserted`, the orientation commonly plotted when comparing
/// counters. Zero when nothing was ignored.
pub fn ignored_to_inserted(inserted: u64, ignored: u64) -> f64 {
    if ignored == 0 || inserted == 0 {
        0.0
    } else {
        ignored as f64 / inserted as f64
    }
}

pub fn throughput(inserted: u64, elapsed_seconds: f64) -> Result<f64, MetricsError> {
    if elapsed_seconds.is_nan() || elapsed_seconds <= 0.0 {
        return Err(MetricsError::NonPositiveElapsed(elapsed_seconds));
    }
    Ok(inserted as f64 / elapsed_seconds)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetRates {
    pub distinct_rate: f64,
    pub trustworthy_rate_of_dataset: f64,
    pub erroneous_rate_of_dataset: f64,
    pub trustworthy_rate_of_distinct: f64,
    pub erroneous_rate_of_distinct: f64,
}

pub fn dataset_rates(
    total: u64,
    distinct: u64,
    trustworthy: u64,
    erroneous: u64,
) -> Result<DatasetRates, MetricsError> {
    if total == 0 {
        return Err(MetricsError::ZeroTotal);
    }
    let t = total as f64;
    let d = distinct.max(1) as f64;
    Ok(DatasetRates {
        distinct_rate: distinct as f64 / t,
        trustworthy_rate_of_dataset: trustworthy as f64 / t,
        erroneous_rate_of_dataset: erroneous as f64 / t,
        trustworthy_rate_of_distinct: trustworthy as f64 / d,
        erroneous_rate_of_distinct: erroneous as f64 / d,
    })
}

/// One comparison run of the filter pipeline against the exact counts.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub dataset: String,
    pub k: u64,
    pub tau: u64,
    pub rows: u64,
    pub cols: u64,
    pub alpha: u64,
    pub hashes: u64,
    pub size_bytes: u64,
    pub total_kmers: u64,
    pub oracle_distinct: u64,
    pub oracle_trustworthy: u64,
    pub oracle_erroneous: u64,
    pub kmerco_distinct: u64,
    pub kmerco_trustworthy: u64,
    pub kmerco_erroneous: u64,
    pub inserted: u64,
    pub ignored: u64,
    pub overflow_events: u64,
    pub distinct_rate: f64,
    pub trustworthy_rate_of_dataset: f64,
    pub erroneous_rate_of_dataset: f64,
    pub erroneous_rate_of_distinct: f64,
    pub trustworthy_rate: f64,
    pub inserted_to_ignored: f64,
    pub ignored_to_inserted: f64,
    pub insertions_per_second: f64,
    pub elapsed_seconds: f64,
}

impl RunReport {
    pub fn build(
        dataset: &str,
        k: usize,
        plan: &FilterPlan,
        insertion: &InsertionStats,
        classification: &ClassificationStats,
        oracle: &ExactCounts,
    ) -> Result<Self, MetricsError> {
        let tau = classification.tau;
        let oracle_trust = trustworthy_count(oracle, tau);
        let oracle_distinct = oracle.distinct() as u64;
        let oracle_err = oracle_distinct - oracle_trust;
        let total = insertion.total_kmers;
        let rates = dataset_rates(total, oracle_distinct, oracle_trust, oracle_err)?;
        let ignored = insertion.ignored();
        let ips = if insertion.inserted == 0 {
            0.0
        } else {
            throughput(insertion.inserted, insertion.elapsed_seconds)?
        };
        Ok(Self {
            dataset: dataset.replace(['\n', '\r'], " "),
            k: k as u64,
            tau,
            rows: plan.rows,
            cols: plan.cols,
            alpha: plan.alpha as u64,
            hashes: plan.hashes as u64,
            size_bytes: plan.size_bytes(),
            total_kmers: total,
            oracle_distinct,
            oracle_trustworthy: oracle_trust,
            oracle_erroneous: oracle_err,
            kmerco_distinct: classification.distinct,
            kmerco_trustworthy: classification.trustworthy,
            kmerco_erroneous: classification.erroneous,
            inserted: insertion.inserted,
            ignored,
            overflow_events: insertion.overflow_events,
            distinct_rate: rates.distinct_rate,
            trustworthy_rate_of_dataset: rates.trustworthy_rate_of_dataset,
            erroneous_rate_of_dataset: rates.erroneous_rate_of_dataset,
            erroneous_rate_of_distinct: rates.erroneous_rate_of_distinct,
            trustworthy_rate: trustworthy_rate(classification.trustworthy, oracle_trust, total)?,
            inserted_to_ignored: inserted_to_ignored(insertion.inserted, ignored).value(),
            ignored_to_inserted: ignored_to_inserted(insertion.inserted, ignored),
            insertions_per_second: ips,
            elapsed_seconds: insertion.elapsed_seconds,
        })
    }

    fn fields(&self) -> Vec<(&'static str, String)> {
        vec![
            ("dataset", self.dataset.clone()),
            ("k", self.k.to_string()),
            ("tau", self.tau.to_string()),
            ("rows", self.rows.to_string()),
            ("cols", self.cols.to_string()),
            ("alpha", self.alpha.to_string()),
            ("hashes", self.hashes.to_string()),
            ("size_bytes", self.size_bytes.to_string()),
            ("total_kmers", self.total_kmers.to_string()),
            ("oracle_distinct", self.oracle_distinct.to_string()),
            ("oracle_trustworthy", self.oracle_trustworthy.to_string()),
            ("oracle_erroneous", self.oracle_erroneous.to_string()),
            ("kmerco_distinct", self.kmerco_distinct.to_string()),
            ("kmerco_trustworthy", self.kmerco_trustworthy.to_string()),
            ("kmerco_erroneous", self.kmerco_erroneous.to_string()),
            ("inserted", self.inserted.to_string()),
            ("ignored", self.ignored.to_string()),
            ("overflow_events", self.overflow_events.to_string()),
            ("distinct_rate", self.distinct_rate.to_string()),
            ("trustworthy_rate_of_dataset", self.trustworthy_rate_of_dataset.to_string()),
            ("erroneous_rate_of_dataset", self.erroneous_rate_of_dataset.to_string()),
            ("erroneous_rate_of_distinct", self.erroneous_rate_of_distinct.to_string()),
            ("trustworthy_rate", self.trustworthy_rate.to_string()),
            ("inserted_to_ignored", self.inserted_to_ignored.to_string()),
            ("ignored_to_inserted", self.ignored_to_inserted.to_string()),
            ("insertions_per_second", self.insertions_per_second.to_string()),
            ("elapsed_seconds", self.elapsed_seconds.to_string()),
        ]
    }

    /// `key = value` lines. Floats use the shortest exact representation,
    /// so [`RunReport::from_kv`] restores the report exactly.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.fields() {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn from_kv(text: &str) -> Result<Self, ReportParseError> {
        let mut map = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once(" = ")
                .ok_or(ReportParseError::Syntax(i + 1))?;
            map.insert(k.trim().to_string(), v.to_string());
        }
        let text = |key: &'static str| map.get(key).cloned().ok_or(ReportParseError::Missing(key));
        let int = |key: &'static str| -> Result<u64, ReportParseError> {
            text(key)?.trim().parse().map_err(|_| ReportParseError::Value(key))
        };
        let real = |key: &'static str| -> Result<f64, ReportParseError> {
            text(key)?.trim().parse().map_err(|_| ReportParseError::Value(key))
        };
        Ok(Self {
            dataset: text("dataset")?,
            k: int("k")?,
            tau: int("tau")?,
            rows: int("rows")?,
            cols: int("cols")?,
            alpha: int("alpha")?,
            hashes: int("hashes")?,
            size_bytes: int("size_bytes")?,
            total_kmers: int("total_kmers")?,
            oracle_distinct: int("oracle_distinct")?,
            oracle_trustworthy: int("oracle_trustworthy")?,
            oracle_erroneous: int("oracle_erroneous")?,
            kmerco_distinct: int("kmerco_distinct")?,
            kmerco_trustworthy: int("kmerco_trustworthy")?,
            kmerco_erroneous: int("kmerco_erroneous")?,
            inserted: int("inserted")?,
            ignored: int("ignored")?,
            overflow_events: int("overflow_events")?,
            distinct_rate: real("distinct_rate")?,
            trustworthy_rate_of_dataset: real("trustworthy_rate_of_dataset")?,
            erroneous_rate_of_dataset: real("erroneous_rate_of_dataset")?,
            erroneous_rate_of_distinct: real("erroneous_rate_of_distinct")?,
            trustworthy_rate: real("trustworthy_rate")?,
            inserted_to_ignored: real("inserted_to_ignored")?,
            ignored_to_inserted: real("ignored_to_inserted")?,
            insertions_per_second: real("insertions_per_second")?,
            elapsed_seconds: real("elapsed_seconds")?,
        })
    }

    pub const CSV_HEADER: &'static str = "dataset,K,tau,alpha,k_h,size_bytes,total,distinct,trustworthy,erroneous,trustworthy_rate,insert_per_sec,elapsed_s";

    /// CSV row matching [`RunReport::CSV_HEADER`]; counts are the filter's.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            csv_field(&self.dataset),
            self.k,
            self.tau,
            self.alpha,
            self.hashes,
            self.size_bytes,
            self.total_kmers,
            self.kmerco_distinct,
            self.kmerco_trustworthy,
            self.kmerco_erroneous,
            self.trustworthy_rate,
            self.insertions_per_second,
            self.elapsed_seconds
        )
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl fmt::Display for RunReport {
    /// Aligned two-column table.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fields = self.fields();
        let width = fields.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (k, v) in fields {
            writeln!(f, "{k:<width$}  {v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReportParseError {
    #[error("line {0}: expected 'key = value'")]
    Syntax(usize),
    #[error("missing key '{0}'")]
    Missing(&'static str),
    #[error("bad value for '{0}'")]
    Value(&'static str),
}

/// Report file: the key-value block of each run, separated by blank lines,
/// then one CSV block covering all runs.
pub fn write_report<W: Write>(mut w: W, reports: &[RunReport]) -> io::Result<()> {
    for r in reports {
        w.write_all(r.to_kv().as_bytes())?;
        writeln!(w)?;
    }
    writeln!(w, "{}", RunReport::CSV_HEADER)?;
    for r in reports {
        writeln!(w, "{}", r.csv_row())?;
    }
    w.flush()
}

/// Parses the key-value blocks of a file written by [`write_report`].
pub fn read_report(text: &str) -> Result<Vec<RunReport>, ReportParseError> {
    let kv_part = match text.find(RunReport::CSV_HEADER) {
        Some(i) => &text[..i],
        None => text,
    };
    kv_part
        .split("\n\n")
        .filter(|b| !b.trim().is_empty())
        .map(RunReport::from_kv)
        .collect()
}
