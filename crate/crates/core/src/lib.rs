//! K-mer counting and classification on a two-dimensional counting Bloom
//! filter whose cells pack several small counters into one 64-bit word.
//!
//! The pipeline has two phases. [`insertion_phase`] streams reads, inserts
//! every canonical k-mer into a [`CountBf`] and records first occurrences
//! in a distinct list. [`classification_phase`] splits the distinct list
//! into trustworthy (`frequency > tau`) and erroneous k-mers. The
//! [`oracle`] module counts exactly and [`metrics`] compares the two.

pub mod countbf;
pub mod hash;
pub mod io;
pub mod kmer;
pub mod metrics;
pub mod oracle;
pub mod pipeline;
pub mod plan;
pub mod primes;
pub mod synth;

pub use countbf::{CountBf, FillStats, FormatError, InsertOutcome, Slot};
pub use hash::HashFamily;
pub use io::{
    read_kmer_list, read_sequences_from_path, write_kmer_list, KmerReader, KmerWriter, ParseError,
    SequenceFormat, SequenceReader, SequenceRecord,
};
pub use kmer::{canonical, extract_kmers, CanonicalChoice, Kmer, KmerError};
pub use metrics::{RunReport, IgnoreRatio};
pub use oracle::{exact_classify, exact_count, ExactClassification, ExactCounts};
pub use pipeline::{
    classification_phase, insertion_phase, ClassificationStats, InsertionStats, PipelineError,
    DEFAULT_TAU,
};
pub use plan::{plan_dimensions, FilterPlan, PlanError};
