use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use kmerco::kmer::KmerWindows;
use kmerco::metrics::{self, RunReport};
use kmerco::synth::{simulate_reads, to_fasta, SyntheticSpec};
use kmerco::{
    classification_phase, exact_classify, exact_count, insertion_phase, plan_dimensions,
    read_sequences_from_path, write_kmer_list, ClassificationStats, CountBf, FilterPlan,
    InsertionStats, KmerReader, KmerWriter, ParseError, SequenceFormat, SequenceReader,
    SequenceRecord,
};

use crate::error::CliError;
use crate::{Command, FilterArgs, InputArgs};

pub const FILTER_FILE: &str = "filter.kmco";
pub const DISTINCT_FILE: &str = "distinct.txt";
pub const COUNT_STATS_FILE: &str = "count.stats";
pub const TRUSTWORTHY_FILE: &str = "trustworthy.txt";
pub const ERRONEOUS_FILE: &str = "erroneous.txt";
pub const CLASSIFY_STATS_FILE: &str = "classify.stats";
pub const EXACT_COUNTS_FILE: &str = "exact_counts.tsv";
pub const EXACT_TRUSTWORTHY_FILE: &str = "exact_trustworthy.txt";
pub const EXACT_ERRONEOUS_FILE: &str = "exact_erroneous.txt";
pub const ORACLE_STATS_FILE: &str = "oracle.stats";
pub const REPORT_FILE: &str = "report.txt";

pub fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Plan { n, filter } => {
            println!("{}", make_plan(n, filter)?);
            Ok(())
        }
        Command::Count {
            input,
            filter,
            expected_n,
            out_dir,
        } => {
            let (plan, stats, _) = count(&input, filter, expected_n, &out_dir)?;
            print_kv(&insertion_summary(&plan, &stats));
            eprintln!(
                "inserted {} k-mers in {:.3}s",
                stats.inserted, stats.elapsed_seconds
            );
            Ok(())
        }
        Command::Classify {
            filter,
            distinct,
            tau,
            out_dir,
        } => {
            let filter = load_filter(&filter)?;
            let stats = classify(&filter, &distinct, tau, &out_dir)?;
            print_kv(&classification_summary(&stats));
            Ok(())
        }
        Command::Oracle {
            input,
            tau,
            seed,
            out_dir,
        } => {
            let lines = oracle(&input, tau, seed, &out_dir)?.1;
            print_kv(&lines);
            Ok(())
        }
        Command::Compare {
            input,
            filter,
            tau,
            expected_n,
            name,
            out_dir,
        } => {
            let (plan, insertion, built) = count(&input, filter, expected_n, &out_dir)?;
            let classification = classify(&built, &out_dir.join(DISTINCT_FILE), tau, &out_dir)?;
            let (exact, _) = oracle(&input, tau, plan.seed, &out_dir)?;
            let name = name.unwrap_or_else(|| dataset_name(&input.inputs[0]));
            let report = RunReport::build(&name, input.k as usize, &plan, &insertion, &classification, &exact)?;
            let path = out_dir.join(REPORT_FILE);
            let file = File::create(&path).map_err(CliError::io(&path))?;
            metrics::write_report(BufWriter::new(file), std::slice::from_ref(&report))
                .map_err(CliError::io(&path))?;
            println!("{report}");
            Ok(())
        }
        Command::Info { filter } => {
            let f = load_filter(&filter)?;
            println!("{}", f.plan());
            let fill = f.fill_stats();
            print_kv(&[
                ("occupied_cells", fill.occupied_cells.to_string()),
                ("nonzero_counters", fill.nonzero_counters.to_string()),
                ("saturated_counters", fill.saturated_counters.to_string()),
                ("max_counter", fill.max_counter.to_string()),
                ("counter_sum", fill.counter_sum.to_string()),
                ("load_factor", format!("{:.6}", fill.load_factor())),
            ]);
            Ok(())
        }
        Command::Simulate {
            genome_len,
            reads,
            read_len,
            error_rate,
            n_rate,
            seed,
            out,
        } => {
            if read_len == 0 || read_len > genome_len {
                return Err(CliError::Config(format!(
                    "read length {read_len} must be between 1 and the genome length {genome_len}"
                )));
            }
            for (name, p) in [("error rate", error_rate), ("N rate", n_rate)] {
                if !(0.0..=1.0).contains(&p) {
                    return Err(CliError::Config(format!("{name} {p} is not a probability")));
                }
            }
            let spec = SyntheticSpec {
                genome_len,
                read_count: reads,
                read_len,
                error_rate,
                n_rate,
                seed,
                ..SyntheticSpec::default()
            };
            let text = to_fasta(&simulate_reads(&spec));
            if out.as_os_str() == "-" {
                io::stdout().write_all(text.as_bytes()).map_err(CliError::io("<stdout>"))
            } else {
                fs::write(&out, text).map_err(CliError::io(&out))
            }
        }
    }
}

fn make_plan(n: u64, f: FilterArgs) -> Result<FilterPlan, CliError> {
    Ok(plan_dimensions(n, f.fpp, f.alpha, f.hashes, f.seed)?)
}

/// Runs the insertion phase into `out_dir`. Returns the plan, the phase
/// statistics and the in-memory filter.
fn count(
    input: &InputArgs,
    filter_args: FilterArgs,
    expected_n: Option<u64>,
    out_dir: &Path,
) -> Result<(FilterPlan, InsertionStats, CountBf), CliError> {
    let k = input.k as usize;
    let n = match expected_n {
        Some(n) => n,
        None => prescan_windows(input)?.max(1),
    };
    let plan = make_plan(n, filter_args)?;
    fs::create_dir_all(out_dir).map_err(CliError::io(out_dir))?;

    let mut filter = CountBf::new(plan);
    let distinct_path = out_dir.join(DISTINCT_FILE);
    let file = File::create(&distinct_path).map_err(CliError::io(&distinct_path))?;
    let mut distinct = KmerWriter::new(BufWriter::new(file));
    let mut reads = Inputs::open(input)?;
    let stats = insertion_phase(&mut reads, k, &mut filter, &mut distinct)?;
    distinct.finish().map_err(CliError::io(&distinct_path))?;
    if reads.skipped > 0 {
        eprintln!("skipped {} malformed records", reads.skipped);
    }

    let filter_path = out_dir.join(FILTER_FILE);
    let file = File::create(&filter_path).map_err(CliError::io(&filter_path))?;
    let mut w = BufWriter::new(file);
    filter
        .write_to(&mut w)
        .and_then(|_| w.flush())
        .map_err(CliError::io(&filter_path))?;

    let mut summary = insertion_summary(&plan, &stats);
    summary.push(("skipped_records", reads.skipped.to_string()));
    write_kv(&out_dir.join(COUNT_STATS_FILE), &summary)?;
    Ok((plan, stats, filter))
}

/// Accepted windows over all inputs; the count the filter is sized for.
fn prescan_windows(input: &InputArgs) -> Result<u64, CliError> {
    let mut total = 0;
    for record in Inputs::open(input)? {
        total += KmerWindows::new(&record?.sequence, input.k as usize)?.count() as u64;
    }
    Ok(total)
}

fn classify(
    filter: &CountBf,
    distinct_path: &Path,
    tau: u64,
    out_dir: &Path,
) -> Result<ClassificationStats, CliError> {
    fs::create_dir_all(out_dir).map_err(CliError::io(out_dir))?;
    let file = File::open(distinct_path).map_err(CliError::io(distinct_path))?;
    let mut distinct = KmerReader::new(BufReader::new(file));
    let trust_path = out_dir.join(TRUSTWORTHY_FILE);
    let err_path = out_dir.join(ERRONEOUS_FILE);
    let mut trust = KmerWriter::new(BufWriter::new(
        File::create(&trust_path).map_err(CliError::io(&trust_path))?,
    ));
    let mut err = KmerWriter::new(BufWriter::new(
        File::create(&err_path).map_err(CliError::io(&err_path))?,
    ));
    let stats = classification_phase(filter, &mut distinct, tau, &mut trust, &mut err)?;
    trust.finish().map_err(CliError::io(&trust_path))?;
    err.finish().map_err(CliError::io(&err_path))?;
    write_kv(&out_dir.join(CLASSIFY_STATS_FILE), &classification_summary(&stats))?;
    Ok(stats)
}

type Summary = Vec<(&'static str, String)>;

fn oracle(
    input: &InputArgs,
    tau: u64,
    seed: u64,
    out_dir: &Path,
) -> Result<(kmerco::ExactCounts, Summary), CliError> {
    let exact = exact_count(Inputs::open(input)?, input.k as usize, seed)?;
    fs::create_dir_all(out_dir).map_err(CliError::io(out_dir))?;

    let path = out_dir.join(EXACT_COUNTS_FILE);
    let file = File::create(&path).map_err(CliError::io(&path))?;
    exact.dump(BufWriter::new(file)).map_err(CliError::io(&path))?;

    let cls = exact_classify(&exact, tau);
    for (name, list) in [
        (EXACT_TRUSTWORTHY_FILE, &cls.trustworthy),
        (EXACT_ERRONEOUS_FILE, &cls.erroneous),
    ] {
        let path = out_dir.join(name);
        let file = File::create(&path).map_err(CliError::io(&path))?;
        write_kmer_list(BufWriter::new(file), list.iter()).map_err(CliError::io(&path))?;
    }
    let summary = vec![
        ("total_kmers", exact.total.to_string()),
        ("rejected_windows", exact.rejected_windows.to_string()),
        ("distinct", exact.distinct().to_string()),
        ("trustworthy", cls.trustworthy.len().to_string()),
        ("erroneous", cls.erroneous.len().to_string()),
        ("tau", tau.to_string()),
    ];
    write_kv(&out_dir.join(ORACLE_STATS_FILE), &summary)?;
    Ok((exact, summary))
}

fn load_filter(path: &Path) -> Result<CountBf, CliError> {
    let file = File::open(path).map_err(CliError::io(path))?;
    CountBf::read_from(BufReader::new(file)).map_err(|source| CliError::Filter {
        path: path.to_path_buf(),
        source,
    })
}

/// Deterministic fields only, so the stats file is reproducible.
fn insertion_summary(plan: &FilterPlan, s: &InsertionStats) -> Summary {
    vec![
        ("n", plan.n.to_string()),
        ("rows", plan.rows.to_string()),
        ("cols", plan.cols.to_string()),
        ("alpha", plan.alpha.to_string()),
        ("hashes", plan.hashes.to_string()),
        ("seed", plan.seed.to_string()),
        ("size_bytes", plan.size_bytes().to_string()),
        ("records", s.records.to_string()),
        ("total_kmers", s.total_kmers.to_string()),
        ("inserted", s.inserted.to_string()),
        ("ignored", s.ignored().to_string()),
        ("first_occurrences", s.first_occurrences.to_string()),
        ("rejected_windows", s.rejected_windows.to_string()),
        ("overflow_events", s.overflow_events.to_string()),
    ]
}

fn classification_summary(s: &ClassificationStats) -> Summary {
    vec![
        ("tau", s.tau.to_string()),
        ("distinct", s.distinct.to_string()),
        ("trustworthy", s.trustworthy.to_string()),
        ("erroneous", s.erroneous.to_string()),
    ]
}

fn format_kv(lines: &[(&str, String)]) -> String {
    lines.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}

fn print_kv(lines: &[(&str, String)]) {
    print!("{}", format_kv(lines));
}

fn write_kv(path: &Path, lines: &[(&str, String)]) -> Result<(), CliError> {
    fs::write(path, format_kv(lines)).map_err(CliError::io(path))
}

fn dataset_name(path: &Path) -> String {
    let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    for ext in [".gz", ".fastq", ".fq", ".fasta", ".fa", ".fna", ".txt"] {
        if let Some(stripped) = name.strip_suffix(ext) {
            return dataset_name(Path::new(stripped));
        }
    }
    name
}

type Reader = SequenceReader<Box<dyn BufRead + Send>>;

/// All input files read back to back.
struct Inputs {
    pending: std::vec::IntoIter<Reader>,
    current: Option<Reader>,
    skipped: u64,
}

impl Inputs {
    fn open(args: &InputArgs) -> Result<Self, CliError> {
        let format = SequenceFormat::from(args.format);
        let readers = args
            .inputs
            .iter()
            .map(|p: &PathBuf| {
                read_sequences_from_path(p, format)
                    .map(|r| r.skip_bad_records(args.skip_bad_records))
                    .map_err(CliError::io(p))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            pending: readers.into_iter(),
            current: None,
            skipped: 0,
        })
    }
}

impl Iterator for Inputs {
    type Item = Result<SequenceRecord, ParseError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if let Some(r) = &mut self.current {
                if let Some(item) = r.next() {
                    return Some(item);
                }
                self.skipped += r.skipped_records();
                self.current = None;
            }
            self.current = Some(self.pending.next()?);
        }
    }
}
