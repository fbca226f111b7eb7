//! Command-line surface: exact computation with cross-checks, benchmark
//! grids, and long-horizon random-walk runs, all emitting CSV or plain text.
//!
//! Exit codes: 0 success, 2 parse or validation error, 3 resource guard,
//! 4 numerical validation failure.

mod spec;

use clap::{Args, Parser, Subcommand};
use jocdf::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spec::{LoadedProblem, ProblemSpec};
use std::io::Write as _;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "jocdf", about = "Joint order-statistic probabilities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one problem specification file.
    Compute(ComputeArgs),
    /// Run a benchmark grid and write per-repetition timings as CSV.
    Bench(BenchArgs),
    /// Exact vs Monte Carlo tail probabilities of an integer random walk.
    Randomwalk(RandomwalkArgs),
}

#[derive(Args)]
struct ComputeArgs {
    /// Problem specification (JSON).
    spec: PathBuf,
    /// Overrides the algorithm named in the spec file.
    #[arg(long)]
    algorithm: Option<String>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, overrides_with = "no_prune")]
    prune: bool,
    #[arg(long, overrides_with = "prune")]
    no_prune: bool,
    #[arg(long)]
    precompute_sums: bool,
    /// Also run an independent oracle and compare.
    #[arg(long)]
    cross_check: bool,
    /// Write the result line to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated list of n values.
    #[arg(long, value_delimiter = ',', default_value = "6,12,18,24,30")]
    n_list: Vec<usize>,
    /// Comma-separated list of d values; each cell uses C = (1, ..., d).
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6")]
    d_list: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "spill,boncelet")]
    algorithms: Vec<String>,
    #[arg(long, default_value_t = 3)]
    reps: usize,
    #[arg(long, default_value_t = 17)]
    seed: u64,
    /// Run grid cells on worker threads (timed regions stay serial inside).
    #[arg(long)]
    parallel_cells: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RandomwalkArgs {
    #[arg(long, default_value_t = 0.3)]
    q_dn: f64,
    #[arg(long, default_value_t = 0.4)]
    q_0: f64,
    #[arg(long, default_value_t = 0.3)]
    q_up: f64,
    #[arg(long, default_value_t = 0)]
    initial: i64,
    /// Comma-separated horizons; default steps by 30 up to 360.
    #[arg(long, value_delimiter = ',')]
    horizons: Option<Vec<usize>>,
    /// Order-statistic positions as fractions of the horizon.
    #[arg(long, value_delimiter = ',', default_value = "0.9,0.95,0.99")]
    percentiles: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "3,5,10")]
    thresholds: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = 53)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Compute(args) => cmd_compute(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Randomwalk(args) => cmd_randomwalk(args),
    };
    std::process::exit(code);
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Validation(_) | Error::Range(_) | Error::Input(_) => 2,
        Error::Resource(_) => 3,
        Error::InvalidDistribution(_) | Error::InvalidConditional(_) => 4,
    }
}

fn fail(e: &Error) -> i32 {
    eprintln!("error: {e}");
    exit_code(e)
}

/// 17 significant digits for probabilities in [0, 1]; round-trips losslessly.
fn fmt_probability(v: f64) -> String {
    format!("{v:.17}")
}

fn cmd_compute(args: ComputeArgs) -> i32 {
    let raw = match std::fs::read_to_string(&args.spec) {
        Ok(raw) => raw,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.spec.display());
            return 2;
        }
    };
    let spec: ProblemSpec = match serde_json::from_str(&raw) {
        Ok(spec) => spec,
        Err(e) => {
            eprintln!("error: cannot parse {}: {e}", args.spec.display());
            return 2;
        }
    };
    let mut problem = match spec.load() {
        Ok(p) => p,
        Err(e) => return fail(&e),
    };
    if let Some(a) = &args.algorithm {
        problem.algorithm = a.clone();
    }
    if let Some(t) = args.trials {
        problem.trials = t;
    }
    if let Some(s) = args.seed {
        problem.seed = s;
    }
    if args.prune {
        problem.options.prune = true;
    }
    if args.no_prune {
        problem.options.prune = false;
    }
    if args.precompute_sums {
        problem.options.precompute_sums = true;
    }

    let value = match evaluate(&problem) {
        Ok(v) => v,
        Err(e) => return fail(&e),
    };
    let mut lines = vec![format!("probability={}", fmt_probability(value))];

    if args.cross_check {
        match cross_check(&problem, value) {
            Ok(line) => lines.push(line),
            Err(e) => return fail(&e),
        }
    }

    let text = lines.join("\n") + "\n";
    match &args.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return 3;
            }
        }
        None => print!("{text}"),
    }
    0
}

fn evaluate(p: &LoadedProblem) -> Result<f64> {
    match (&p.chain, p.algorithm.as_str()) {
        (None, "spill") => {
            let m = p.matrix()?;
            solve_independent(&p.query, &m, &p.options)
        }
        (None, "boncelet") => {
            let m = p.matrix()?;
            solve_boncelet(&p.query, &m)
        }
        (None, "brute") => {
            let m = p.matrix()?;
            brute_force(&p.query, &m)
        }
        (None, "mc") => {
            let sampler = IndependentSampler::new(p.distributions.clone());
            Ok(monte_carlo(&p.query, &sampler, p.trials, p.seed)?.estimate)
        }
        (Some(chain), "spill") => solve_chain(chain, &p.query),
        (Some(chain), "brute") => enumerate_paths_oracle(chain, &p.query),
        (Some(chain), "mc") => {
            let sampler = ChainSampler::new(chain.clone(), p.query.n());
            Ok(monte_carlo(&p.query, &sampler, p.trials, p.seed)?.estimate)
        }
        (Some(_), other) => Err(Error::Validation(format!(
            "algorithm {other:?} does not apply to chain problems"
        ))),
        (None, other) => Err(Error::Validation(format!("unknown algorithm {other:?}"))),
    }
}

/// Compares against an exhaustive oracle when feasible, else Monte Carlo.
fn cross_check(p: &LoadedProblem, value: f64) -> Result<String> {
    let exact = match &p.chain {
        None => p.matrix().and_then(|m| brute_force(&p.query, &m)),
        Some(chain) => enumerate_paths_oracle(chain, &p.query),
    };
    match exact {
        Ok(oracle) => {
            let diff = (value - oracle).abs();
            if diff > 1e-10 {
                return Err(Error::InvalidDistribution(format!(
                    "cross-check failed: result {value} vs oracle {oracle}"
                )));
            }
            Ok(format!(
                "cross_check=brute oracle={} abs_diff={diff:e}",
                fmt_probability(oracle)
            ))
        }
        Err(Error::Resource(_)) => {
            let mc = match &p.chain {
                None => {
                    let sampler = IndependentSampler::new(p.distributions.clone());
                    monte_carlo(&p.query, &sampler, p.trials.max(10_000), p.seed)?
                }
                Some(chain) => {
                    let sampler = ChainSampler::new(chain.clone(), p.query.n());
                    monte_carlo(&p.query, &sampler, p.trials.max(10_000), p.seed)?
                }
            };
            let diff = (value - mc.estimate).abs();
            if diff > 4.0 * mc.stderr + 1e-10 {
                return Err(Error::InvalidDistribution(format!(
                    "cross-check failed: result {value} vs MC {} (stderr {})",
                    mc.estimate, mc.stderr
                )));
            }
            Ok(format!(
                "cross_check=mc estimate={} stderr={} abs_diff={diff:e}",
                fmt_probability(mc.estimate),
                fmt_probability(mc.stderr)
            ))
        }
        Err(e) => Err(e),
    }
}

struct BenchCell {
    algorithm: String,
    n: usize,
    d: usize,
}

struct CellOutcome {
    rows: Vec<String>,
    summary: String,
    /// Median result for cross-algorithm agreement, None when skipped.
    result: Option<f64>,
}

/// Seeded per-cell matrix so reruns are byte-stable.
fn bench_matrix(seed: u64, n: usize, d: usize) -> BinProbabilityMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((n as u64) << 20) ^ (d as u64));
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let raw: Vec<f64> = (0..d + 1).map(|_| rng.gen_range(0.01..1.0)).collect();
            let sum: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / sum).collect()
        })
        .collect();
    BinProbabilityMatrix::from_rows(rows).expect("rows normalized")
}

fn run_cell(cell: &BenchCell, reps: usize, seed: u64) -> Result<CellOutcome> {
    let q = OrderQuery::new(
        (1..=cell.d).collect(),
        (1..=cell.d).map(|j| j as f64).collect(),
        cell.n,
    )?;
    let m = bench_matrix(seed, cell.n, cell.d);
    let c_label = q
        .indices()
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(" ");

    let mut rows = Vec::with_capacity(reps);
    let mut times = Vec::with_capacity(reps);
    let mut result = 0.0;
    for rep in 1..=reps {
        let outcome = {
            let t = Instant::now();
            let r = match cell.algorithm.as_str() {
                "spill" => solve_independent(&q, &m, &SolveOptions::default()),
                "boncelet" => solve_boncelet(&q, &m),
                "brute" => brute_force(&q, &m),
                other => Err(Error::Validation(format!("unknown algorithm {other:?}"))),
            };
            (r, t.elapsed().as_secs_f64())
        };
        match outcome {
            (Ok(r), wall) => {
                result = r;
                times.push(wall);
                rows.push(format!(
                    "{},{},{},{},{},{:.9},{}",
                    cell.algorithm,
                    cell.n,
                    cell.d,
                    c_label,
                    rep,
                    wall,
                    fmt_probability(r)
                ));
            }
            (Err(Error::Resource(reason)), _) => {
                eprintln!(
                    "skipping {} n={} d={}: {reason}",
                    cell.algorithm, cell.n, cell.d
                );
                rows.push(format!(
                    "{},{},{},{},{},,skipped",
                    cell.algorithm, cell.n, cell.d, c_label, rep
                ));
                return Ok(CellOutcome {
                    rows,
                    summary: format!(
                        "{},{},{},{},,skipped",
                        cell.algorithm, cell.n, cell.d, c_label
                    ),
                    result: None,
                });
            }
            (Err(e), _) => return Err(e),
        }
    }
    times.sort_by(f64::total_cmp);
    let median = times[times.len() / 2];
    Ok(CellOutcome {
        rows,
        summary: format!(
            "{},{},{},{},{:.9},{}",
            cell.algorithm,
            cell.n,
            cell.d,
            c_label,
            median,
            fmt_probability(result)
        ),
        result: Some(result),
    })
}

fn cmd_bench(args: BenchArgs) -> i32 {
    let mut cells = Vec::new();
    for alg in &args.algorithms {
        for &n in &args.n_list {
            for &d in &args.d_list {
                if d <= n {
                    cells.push(BenchCell { algorithm: alg.clone(), n, d });
                }
            }
        }
    }

    let outcomes: Vec<Result<CellOutcome>> = if args.parallel_cells {
        std::thread::scope(|scope| {
            let handles: Vec<_> = cells
                .iter()
                .map(|cell| scope.spawn(|| run_cell(cell, args.reps, args.seed)))
                .collect();
            handles.into_iter().map(|h| h.join().expect("no panic")).collect()
        })
    } else {
        cells.iter().map(|cell| run_cell(cell, args.reps, args.seed)).collect()
    };

    let mut records = Vec::with_capacity(cells.len());
    for outcome in outcomes {
        match outcome {
            Ok(o) => records.push(o),
            Err(e) => return fail(&e),
        }
    }

    // Every cell computed by several algorithms must agree.
    for (i, (cell, rec)) in cells.iter().zip(&records).enumerate() {
        for (other, orec) in cells.iter().zip(&records).skip(i + 1) {
            if cell.n == other.n && cell.d == other.d {
                if let (Some(a), Some(b)) = (rec.result, orec.result) {
                    if (a - b).abs() > 1e-10 {
                        eprintln!(
                            "error: {} and {} disagree at n={} d={}: {a} vs {b}",
                            cell.algorithm, other.algorithm, cell.n, cell.d
                        );
                        return 4;
                    }
                }
            }
        }
    }

    let mut csv = String::from("algorithm,n,d,c,rep,wall_time_seconds,result\n");
    for rec in &records {
        for row in &rec.rows {
            csv.push_str(row);
            csv.push('\n');
        }
    }
    if let Err(e) = std::fs::write(&args.out, &csv) {
        eprintln!("error: cannot write {}: {e}", args.out.display());
        return 3;
    }

    let mut summary = String::from("algorithm,n,d,c,median_wall_time_seconds,result\n");
    for rec in &records {
        summary.push_str(&rec.summary);
        summary.push('\n');
    }
    let summary_path = args.out.with_extension("summary.csv");
    if let Err(e) = std::fs::write(&summary_path, &summary) {
        eprintln!("error: cannot write {}: {e}", summary_path.display());
        return 3;
    }
    println!(
        "wrote {} rows to {} (summary: {})",
        records.iter().map(|r| r.rows.len()).sum::<usize>(),
        args.out.display(),
        summary_path.display()
    );
    0
}

fn cmd_randomwalk(args: RandomwalkArgs) -> i32 {
    let chain = match MarkovChainSpec::random_walk(args.initial, args.q_dn, args.q_0, args.q_up) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    if args.percentiles.iter().any(|&p| !(0.0 < p && p <= 1.0)) {
        eprintln!("error: percentiles must lie in (0, 1]");
        return 2;
    }
    if args.thresholds.len() != args.percentiles.len() {
        eprintln!("error: thresholds and percentiles must have equal length");
        return 2;
    }
    let horizons = args
        .horizons
        .unwrap_or_else(|| (1..=12).map(|k| 30 * k).collect());

    let mut out = match std::fs::File::create(&args.out) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: cannot write {}: {e}", args.out.display());
            return 3;
        }
    };
    let mut write_line = |line: &str| writeln!(out, "{line}").is_ok();
    if !write_line("horizon,exact_probability,mc_estimate,mc_stderr") {
        return 3;
    }
    for n in horizons {
        // Percentile positions can collide at short horizons; keep the
        // tightest threshold per position, which preserves the event.
        let mut pairs: Vec<(usize, f64)> = args
            .percentiles
            .iter()
            .zip(&args.thresholds)
            .map(|(&p, &x)| (((p * n as f64).floor() as usize).clamp(1, n), x))
            .collect();
        pairs.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        pairs.dedup_by(|next, kept| next.0 == kept.0);
        let (c, x): (Vec<usize>, Vec<f64>) = pairs.into_iter().unzip();
        let q = match OrderQuery::new(c, x, n) {
            Ok(q) => q,
            Err(e) => return fail(&e),
        };
        let exact = match solve_chain(&chain, &q) {
            Ok(v) => v,
            Err(e) => return fail(&e),
        };
        let sampler = ChainSampler::new(chain.clone(), n);
        let mc = match monte_carlo(&q, &sampler, args.trials, args.seed.wrapping_add(n as u64)) {
            Ok(v) => v,
            Err(e) => return fail(&e),
        };
        if !write_line(&format!(
            "{n},{},{},{}",
            fmt_probability(exact),
            fmt_probability(mc.estimate),
            fmt_probability(mc.stderr)
        )) {
            return 3;
        }
    }
    println!("wrote {}", args.out.display());
    0
}
