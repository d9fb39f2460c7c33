//! Acceptance criteria. Runs as a plain binary (no libtest harness) so that
//! every criterion prints one PASS/FAIL line under `cargo test`.

use std::collections::{BTreeSet, HashMap};
use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use kmerco::hash::murmur3_64;
use kmerco::pipeline::{in_memory, run_in_memory, InMemoryRun};
use kmerco::plan::{counters_per_cell, wasted_bits};
use kmerco::synth::{reverse_complement_reads, simulate_reads, SyntheticSpec};
use kmerco::{
    exact_count, insertion_phase, metrics, plan_dimensions, CountBf, ExactCounts, FilterPlan,
    KmerWriter,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = kmerco::plan::DEFAULT_SEED;
const CORPUS_SIZE: usize = 100;
const MAX_WINDOWS: u64 = 100_000;
const TAU: u64 = 5;
const FPP: f64 = 0.001;

// ---------------------------------------------------------------- oracles

fn naive_is_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

fn naive_primes_in(lo_exclusive: u64, hi_inclusive: u64) -> usize {
    (lo_exclusive + 1..=hi_inclusive).filter(|&p| naive_is_prime(p)).count()
}

// ---------------------------------------------------------------- corpus

struct Dataset {
    label: String,
    k: usize,
    reads: Vec<Vec<u8>>,
}

fn windows_of(reads: &[Vec<u8>], k: usize) -> u64 {
    reads.iter().map(|r| (r.len() + 1).saturating_sub(k) as u64).sum()
}

/// High-coverage resequencing-style datasets of at most 10^5 windows.
fn corpus() -> Vec<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x00AC_CE97);
    (0..CORPUS_SIZE)
        .map(|i| {
            let k = rng.random_range(15..=31usize);
            let read_len = rng.random_range(60..=150usize);
            let per_read = (read_len - k + 1) as u64;
            let max_reads = (MAX_WINDOWS / per_read) as usize;
            let read_count = rng.random_range(max_reads * 4 / 5..=max_reads);
            let spec = SyntheticSpec {
                genome_len: rng.random_range(1000..=1600),
                read_count,
                read_len,
                error_rate: rng.random_range(0.0004..0.001),
                n_rate: if i % 4 == 0 { 0.0002 } else { 0.0 },
                reverse_fraction: 0.5,
                seed: rng.random(),
            };
            let reads = simulate_reads(&spec);
            Dataset {
                label: format!("syn{i:03}-k{k}-g{}", spec.genome_len),
                k,
                reads,
            }
        })
        .collect()
}

fn plan_for(windows: u64, alpha: u8) -> FilterPlan {
    plan_dimensions(windows.max(1), FPP, alpha, kmerco::plan::DEFAULT_HASHES, SEED).unwrap()
}

struct CorpusRun {
    dataset: Dataset,
    run: InMemoryRun,
    oracle: ExactCounts,
}

fn run_corpus() -> Vec<CorpusRun> {
    corpus()
        .into_iter()
        .map(|dataset| {
            let n = windows_of(&dataset.reads, dataset.k);
            let run = run_in_memory(in_memory(&dataset.reads), dataset.k, TAU, plan_for(n, 8)).unwrap();
            let oracle = exact_count(in_memory(&dataset.reads), dataset.k, SEED).unwrap();
            CorpusRun { dataset, run, oracle }
        })
        .collect()
}

// ---------------------------------------------------------------- criteria

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ac1_wasted_bits() -> Outcome {
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
        let got = (counters_per_cell(alpha), wasted_bits(alpha));
        ensure(got == (eta, waste), || format!("alpha {alpha}: got {got:?}, want ({eta}, {waste})"))?;
        let plan = plan_dimensions(1000, FPP, alpha, 2, 0).unwrap();
        ensure(plan.eta == eta && plan.wasted_bits() == waste, || format!("plan for alpha {alpha}"))?;
    }
    Ok("9 counter widths match exactly".into())
}

fn ac2_sizing() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let ln2 = std::f64::consts::LN_2;
    for _ in 0..1000 {
        let n = 10f64.powf(rng.random_range(0.0..9.0)) as u64;
        let n = n.max(1);
        let fpp = 10f64.powf(rng.random_range(-6.0..-0.05));
        let alpha = rng.random_range(5..=16u8);
        let p = plan_dimensions(n, fpp, alpha, 2, 0).map_err(|e| e.to_string())?;
        let m = (-(n as f64) * fpp.ln() / (ln2 * ln2)).ceil() as u64;
        let v = (m as f64 / 128.0).sqrt();
        let ctx = || format!("n={n} fpp={fpp} alpha={alpha} -> {p:?}");
        ensure(p.m_bits == m, ctx)?;
        ensure((p.v - v).abs() <= 1e-9 * v.max(1.0), ctx)?;
        ensure(naive_is_prime(p.rows) && naive_is_prime(p.cols), ctx)?;
        ensure((p.rows as f64) > v && naive_primes_in(v.floor() as u64, p.rows - 1) == 0, ctx)?;
        ensure(naive_primes_in(p.rows, p.cols) == 3, ctx)?;
        ensure(p.eta as u32 == 64 / alpha as u32, ctx)?;
        ensure(p.wasted_bits() as u32 == 64 - p.eta as u32 * alpha as u32, ctx)?;
        ensure(p.size_bits() == p.rows * p.cols * 64, ctx)?;
    }
    Ok("1000 random plans satisfy every invariant; dimensions prime by trial division".into())
}

fn ac3_size_scaling() -> Outcome {
    // Reference sizes (MB) along a doubling progression of n.
    let reference: [f64; 5] = [9.1, 18.0, 36.19, 70.92, 142.2];
    let base = 20_484_059u64;
    let sizes: Vec<u64> = (0..6)
        .map(|i| plan_dimensions(base << i, FPP, 8, 2, 0).unwrap().size_bytes())
        .collect();
    let mut worst = 0.0f64;
    for w in sizes.windows(2) {
        let ratio = w[1] as f64 / w[0] as f64;
        worst = worst.max((ratio - 2.0).abs() / 2.0);
    }
    for w in reference.windows(2) {
        let ratio = w[1] / w[0];
        ensure((ratio - 2.0).abs() / 2.0 <= 0.15, || format!("reference ratio {ratio}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..500 {
        let n = 10f64.powf(rng.random_range(6.0..9.0)) as u64;
        let fpp = 10f64.powf(rng.random_range(-5.0..-1.0));
        let a = plan_dimensions(n, fpp, 8, 2, 0).unwrap().size_bytes() as f64;
        let b = plan_dimensions(2 * n, fpp, 8, 2, 0).unwrap().size_bytes() as f64;
        let dev = (b / a - 2.0).abs() / 2.0;
        ensure(dev <= 0.15, || format!("n={n} fpp={fpp}: ratio {}", b / a))?;
        worst = worst.max(dev);
    }
    // Informational: the reference column lines up with this formula at n/2.
    let mib = |n: u64| plan_dimensions(n, FPP, 8, 2, 0).unwrap().size_mib();
    Ok(format!(
        "worst deviation from 2x = {:.2}%; sizes for n/16..n/2 = {:.2}, {:.2}, {:.2}, {:.2} MiB (reference 9.1, 18, 36.19, 70.92)",
        worst * 100.0,
        mib(base / 2),
        mib(base),
        mib(base * 2),
        mib(base * 4)
    ))
}

fn ac4_no_undercount(runs: &[CorpusRun]) -> Outcome {
    let mut min_equal = 1.0f64;
    let mut total_keys = 0u64;
    let mut total_equal = 0u64;
    let mut max_distinct_rate = 0.0f64;
    for r in runs {
        let f = &r.run.filter;
        let mut equal = 0u64;
        for (kmer, &freq) in &r.oracle.counts {
            let est = f.query_min(kmer.as_bytes());
            ensure(est >= freq, || {
                format!("{}: {kmer} estimated {est} < true {freq}", r.dataset.label)
            })?;
            if est == freq {
                equal += 1;
            }
        }
        let keys = r.oracle.distinct() as u64;
        let share = equal as f64 / keys as f64;
        ensure(share >= 0.99, || {
            format!("{}: only {:.3}% of k-mers exact", r.dataset.label, share * 100.0)
        })?;
        min_equal = min_equal.min(share);
        total_keys += keys;
        total_equal += equal;
        max_distinct_rate = max_distinct_rate.max(keys as f64 / r.oracle.total as f64);
    }
    Ok(format!(
        "{} datasets, {} k-mers, {:.3}% exact overall, worst dataset {:.3}%, max distinct rate {:.4}",
        runs.len(),
        total_keys,
        100.0 * total_equal as f64 / total_keys as f64,
        100.0 * min_equal,
        max_distinct_rate
    ))
}

fn ac5_trustworthy_sign(runs: &[CorpusRun]) -> Outcome {
    let mut checked = 0;
    let mut positive = 0;
    let mut negative = Vec::new();
    let mut skipped = 0;
    let mut min_rate = f64::INFINITY;
    let mut max_rate = f64::NEG_INFINITY;
    for r in runs {
        if r.run.insertion.overflow_events != 0 {
            skipped += 1;
            continue;
        }
        let report = metrics::RunReport::build(
            &r.dataset.label,
            r.dataset.k,
            r.run.filter.plan(),
            &r.run.insertion,
            &r.run.classification,
            &r.oracle,
        )
        .map_err(|e| e.to_string())?;
        checked += 1;
        let rate = report.trustworthy_rate;
        min_rate = min_rate.min(rate);
        max_rate = max_rate.max(rate);
        if rate > 0.0 {
            positive += 1;
        } else if rate < 0.0 {
            negative.push(format!(
                "{} ({:+}/{})",
                r.dataset.label,
                report.kmerco_trustworthy as i64 - report.oracle_trustworthy as i64,
                report.oracle_trustworthy
            ));
        }
    }
    ensure(checked > 0, || format!("all {skipped} runs overflowed"))?;
    let summary = format!(
        "{checked} runs at tau={TAU} ({skipped} skipped for overflow): {positive} positive, {} negative, range [{min_rate:.2e}, {max_rate:.2e}]",
        negative.len()
    );
    ensure(negative.is_empty(), || format!("{summary}; negative: {}", negative.join(", ")))?;
    Ok(summary)
}

fn ac6_zero_ignore(runs: &[CorpusRun]) -> Outcome {
    let edge: Vec<Vec<Vec<u8>>> = vec![
        vec![],
        vec![b"A".to_vec()],
        vec![b"ACGTNNNNACGT".to_vec(), b"acgtacgtac".to_vec()],
        vec![b"ACGT-ACGTACGT*ACG".to_vec()],
    ];
    for reads in &edge {
        let n = windows_of(reads, 3);
        let run = run_in_memory(in_memory(reads), 3, TAU, plan_for(n, 8)).map_err(|e| e.to_string())?;
        ensure(run.insertion.inserted == run.insertion.total_kmers, || format!("{reads:?}"))?;
        ensure(metrics::inserted_to_ignored(run.insertion.inserted, run.insertion.ignored()).value() == 0.0, || "ratio".into())?;
    }
    for r in runs {
        let s = &r.run.insertion;
        ensure(s.inserted == s.total_kmers && s.total_kmers == r.oracle.total, || {
            format!("{}: inserted {} of {} (oracle {})", r.dataset.label, s.inserted, s.total_kmers, r.oracle.total)
        })?;
        ensure(s.first_occurrences as usize <= r.oracle.distinct(), || r.dataset.label.clone())?;
    }
    Ok(format!("{} inputs, inserted == total_kmers on all", runs.len() + edge.len()))
}

fn ac7_strand_invariance() -> Outcome {
    let mut checked_kmers = 0usize;
    let mut set_mismatch = Vec::new();
    let datasets = corpus();
    let total = datasets.len();
    for ds in datasets {
        let twin = reverse_complement_reads(&ds.reads);
        let n = windows_of(&ds.reads, ds.k);
        let a = run_in_memory(in_memory(&ds.reads), ds.k, TAU, plan_for(n, 8)).map_err(|e| e.to_string())?;
        let b = run_in_memory(in_memory(&twin), ds.k, TAU, plan_for(n, 8)).map_err(|e| e.to_string())?;
        ensure(a.filter.cells() == b.filter.cells(), || format!("{}: cells differ", ds.label))?;
        let oa = exact_count(in_memory(&ds.reads), ds.k, SEED).unwrap();
        let ob = exact_count(in_memory(&twin), ds.k, SEED).unwrap();
        ensure(oa.counts == ob.counts, || format!("{}: exact counts differ", ds.label))?;
        for k in oa.counts.keys() {
            ensure(a.filter.query_min(k.as_bytes()) == b.filter.query_min(k.as_bytes()), || k.to_string())?;
        }
        let sa: BTreeSet<_> = a.distinct.iter().collect();
        let sb: BTreeSet<_> = b.distinct.iter().collect();
        if sa != sb {
            set_mismatch.push(format!("{} ({} k-mers in one file only)", ds.label, sa.symmetric_difference(&sb).count()));
        }
        checked_kmers += oa.distinct();
    }
    ensure(set_mismatch.is_empty(), || {
        format!("frequencies and cells identical on all {total}, but distinct files differ on {}: {}", set_mismatch.len(), set_mismatch.join(", "))
    })?;
    Ok(format!("{total} datasets, {checked_kmers} distinct k-mers: identical distinct sets, cells and frequencies"))
}

fn ac8_saturation() -> Outcome {
    let plan = plan_dimensions(64, FPP, 5, 3, 77).unwrap();
    let mut filter = CountBf::new(plan);
    let (rows, cols, eta) = (plan.rows, plan.cols, plan.eta as u64);
    // Mask-model oracle: (cell, counter) -> value, addressed independently.
    let mut model: HashMap<(u64, u64), u64> = HashMap::new();
    let mut model_insert = |key: &[u8]| {
        for a in 1..=plan.hashes as u64 {
            let h = murmur3_64(key, plan.seed.wrapping_add(a));
            let cell = (h % rows) * cols + h % cols;
            let v = model.entry((cell, h % eta)).or_default();
            *v = (*v + 1).min(31);
        }
    };
    let hot = b"TTAGGGTTAGGGTTAGGGTTAGGGTTAGGGT";
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut saturated_seen = false;
    for i in 0..45 {
        let out = filter.insert(hot);
        model_insert(hot);
        if i >= 31 {
            saturated_seen |= out == kmerco::InsertOutcome::Saturated;
            ensure(out == kmerco::InsertOutcome::Saturated, || format!("insert {} not saturated", i + 1))?;
        }
        // neighbours sharing cells with the hot k-mer
        for _ in 0..3 {
            let key: [u8; 8] = rng.random();
            filter.insert(&key);
            model_insert(&key);
        }
    }
    ensure(filter.query_min(hot) == 31, || format!("query_min {}", filter.query_min(hot)))?;
    for (idx, &cell) in filter.cells().iter().enumerate() {
        for l in 0..eta {
            let got = (cell >> (5 * l)) & 0x1f;
            let want = model.get(&(idx as u64, l)).copied().unwrap_or(0);
            ensure(got == want, || format!("cell {idx} counter {l}: {got} != model {want}"))?;
        }
        ensure(cell >> (5 * eta) == 0, || format!("cell {idx}: wasted bits disturbed"))?;
    }
    ensure(saturated_seen, || "never saturated".into())?;
    Ok(format!(
        "query_min capped at 31; {} cells match the mask model; {} dropped increments",
        filter.cells().len(),
        filter.overflow_events()
    ))
}

fn ac9_serialization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut filter = CountBf::new(plan_dimensions(10_000, FPP, 8, 2, 5).unwrap());
    let empty = CountBf::new(*filter.plan());
    let empty_back = CountBf::from_bytes(&empty.to_bytes()).map_err(|e| e.to_string())?;
    ensure(empty_back == empty, || "empty roundtrip".into())?;
    let keys: Vec<[u8; 12]> = (0..10_000).map(|_| rng.random()).collect();
    for k in &keys {
        filter.insert(k);
    }
    let bytes = filter.to_bytes();
    let back = CountBf::from_bytes(&bytes).map_err(|e| e.to_string())?;
    ensure(back.to_bytes() == bytes, || "re-serialized bytes differ".into())?;
    ensure(back.cells() == filter.cells() && back.plan() == filter.plan(), || "cells differ".into())?;
    for k in keys.iter().take(100) {
        ensure(back.query_min(k) == filter.query_min(k), || "probe differs".into())?;
    }
    let small = CountBf::new(plan_dimensions(3, 0.1, 8, 2, 1).unwrap()).to_bytes();
    for cut in 0..small.len() {
        ensure(CountBf::from_bytes(&small[..cut]).is_err(), || format!("prefix of {cut} bytes accepted"))?;
    }
    for cut in [bytes.len() - 1, bytes.len() - 8, bytes.len() / 2, 54] {
        ensure(
            matches!(CountBf::from_bytes(&bytes[..cut]), Err(kmerco::FormatError::Truncated)),
            || format!("cut at {cut}"),
        )?;
    }
    Ok(format!("{} byte image roundtrips bit-identically; every truncation rejected", bytes.len()))
}

fn ac10_throughput() -> Outcome {
    let spec = SyntheticSpec {
        genome_len: 200_000,
        read_count: 30_000,
        read_len: 100,
        error_rate: 0.001,
        seed: 10,
        ..SyntheticSpec::default()
    };
    let reads = simulate_reads(&spec);
    let k = 28;
    let n = windows_of(&reads, k);
    let mut filter = CountBf::new(plan_for(n, 8));
    let mut sink = KmerWriter::new(std::io::sink());
    let t = Instant::now();
    let stats = insertion_phase(in_memory(&reads), k, &mut filter, &mut sink).map_err(|e| e.to_string())?;
    let wall = t.elapsed().as_secs_f64();
    let rate = metrics::throughput(stats.inserted, stats.elapsed_seconds).map_err(|e| e.to_string())?;
    let note = if rate >= 1e6 { "meets" } else { "below" };
    Ok(format!(
        "informational: {:.3e} insertions/s over {} 28-mers ({note} 1e6/s; wall {wall:.2}s)",
        rate, stats.inserted
    ))
}

fn main() {
    // `cargo test -- --list` and filters are not meaningful here.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    panic::set_hook(Box::new(|_| {}));
    let mut failures = 0;
    let mut report = |id: &str, name: &str, f: &dyn Fn() -> Outcome| {
        let start = Instant::now();
        let res = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match res {
            Ok(detail) => println!("PASS {id} {name} [{secs:.2}s]: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL {id} {name} [{secs:.2}s]: {detail}");
            }
        }
    };

    report("AC1", "wasted-bits table", &ac1_wasted_bits);
    report("AC2", "sizing self-consistency", &ac2_sizing);
    report("AC3", "size scaling shape", &ac3_size_scaling);

    let t = Instant::now();
    let runs = run_corpus();
    println!("     corpus: {} datasets built and counted in {:.2}s", runs.len(), t.elapsed().as_secs_f64());
    report("AC4", "no under-count vs exact oracle", &|| ac4_no_undercount(&runs));
    report("AC5", "trustworthy-rate sign", &|| ac5_trustworthy_sign(&runs));
    report("AC6", "zero ignored k-mers", &|| ac6_zero_ignore(&runs));
    report("AC7", "reverse-complement twin invariance", &ac7_strand_invariance);
    report("AC8", "alpha=5 saturation", &ac8_saturation);
    report("AC9", "serialization", &ac9_serialization);
    report("AC10", "throughput smoke", &ac10_throughput);

    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
