//! Acceptance suite: one test per release criterion, each printing a
//! pass/fail line. Timing-sensitive criteria share a lock so they never run
//! concurrently with each other.

use jocdf::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Mutex;
use std::time::Instant;

static HEAVY: Mutex<()> = Mutex::new(());

fn report(id: &str, name: &str, ok: bool) {
    println!("criterion {id} ({name}): {}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {id} ({name}) failed");
}

fn random_query(rng: &mut ChaCha8Rng, n: usize, d: usize) -> OrderQuery {
    let mut pool: Vec<usize> = (1..=n).collect();
    pool.shuffle(rng);
    let mut c: Vec<usize> = pool[..d].to_vec();
    c.sort_unstable();
    let x: Vec<f64> = (1..=d).map(|j| j as f64).collect();
    OrderQuery::new(c, x, n).unwrap()
}

fn random_matrix(rng: &mut ChaCha8Rng, n: usize, width: usize) -> BinProbabilityMatrix {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let raw: Vec<f64> = (0..width).map(|_| rng.gen_range(0.01..1.0)).collect();
            let sum: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / sum).collect()
        })
        .collect();
    BinProbabilityMatrix::from_rows(rows).unwrap()
}

#[test]
fn criterion_1_oracle_equivalence_small() {
    let mut worst = 0.0f64;
    for n in 1..=6usize {
        for d in 1..=n.min(3) {
            let mut rng = ChaCha8Rng::seed_from_u64(100 * n as u64 + d as u64);
            for _ in 0..20 {
                let q = random_query(&mut rng, n, d);
                let p = random_matrix(&mut rng, n, d + 1);
                let exact = brute_force(&q, &p).unwrap();
                let spill = solve_independent(&q, &p, &SolveOptions::default()).unwrap();
                let bonc = solve_boncelet(&q, &p).unwrap();
                worst = worst.max((spill - exact).abs()).max((bonc - exact).abs());
            }
        }
    }
    report("1", "oracle equivalence n<=6", worst <= 1e-12);
}

#[test]
fn criterion_2_spill_boncelet_agreement() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(1..=20);
        let d = rng.gen_range(1..=n.min(4));
        let q = random_query(&mut rng, n, d);
        let p = random_matrix(&mut rng, n, d + 1);
        let spill = solve_independent(&q, &p, &SolveOptions::default()).unwrap();
        let bonc = solve_boncelet(&q, &p).unwrap();
        worst = worst.max((spill - bonc).abs());
    }
    report("2", "spill vs occupancy DP n<=20", worst <= 1e-12);
}

#[test]
fn criterion_3_binomial_tail_closed_form() {
    let mut worst = 0.0f64;
    for &n in &[5usize, 20, 50] {
        // Pascal's triangle; all entries up to n=50 are exact in f64.
        let mut choose = vec![vec![0.0f64; n + 1]; n + 1];
        for i in 0..=n {
            choose[i][0] = 1.0;
            for j in 1..=i {
                choose[i][j] = choose[i - 1][j - 1] + if j <= i - 1 { choose[i - 1][j] } else { 0.0 };
            }
        }
        for &q in &[0.1f64, 0.5, 0.9] {
            for c in 1..=n {
                let tail: f64 = (c..=n)
                    .map(|k| choose[n][k] * q.powi(k as i32) * (1.0 - q).powi((n - k) as i32))
                    .sum();
                let query = OrderQuery::new(vec![c], vec![0.0], n).unwrap();
                let rows = vec![vec![q, 1.0 - q]; n];
                let p = BinProbabilityMatrix::from_rows(rows).unwrap();
                let spill = solve_independent(&query, &p, &SolveOptions::default()).unwrap();
                worst = worst.max((spill - tail).abs());
            }
        }
    }
    report("3", "single-statistic binomial tail", worst <= 1e-10);
}

#[test]
fn criterion_4_transform_characterizes_acceptance() {
    // Every gap vector with d <= 3 and total <= 6 against every raw count
    // vector with total <= 8: the prefix conditions hold exactly when the
    // transform lands on the gap vector itself.
    fn gap_vectors(d: usize, budget: usize) -> Vec<Vec<usize>> {
        if d == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for first in 1..=budget.saturating_sub(d - 1) {
            for rest in gap_vectors(d - 1, budget - first) {
                let mut v = vec![first];
                v.extend(rest);
                out.push(v);
            }
        }
        out
    }
    fn count_vectors(d: usize, budget: usize) -> Vec<Vec<usize>> {
        if d == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for first in 0..=budget {
            for rest in count_vectors(d - 1, budget - first) {
                let mut v = vec![first];
                v.extend(rest);
                out.push(v);
            }
        }
        out
    }
    let mut counterexamples = 0usize;
    let mut checked = 0usize;
    for d in 1..=3usize {
        for delta in gap_vectors(d, 6) {
            let deltas = Deltas::from_gaps(delta.clone()).unwrap();
            for k in count_vectors(d, 8) {
                let transformed = spill_transform(&k, &deltas).unwrap();
                let mut holds = true;
                let mut kc = 0usize;
                let mut cc = 0usize;
                for j in 0..d {
                    kc += k[j];
                    cc += delta[j];
                    if kc < cc {
                        holds = false;
                        break;
                    }
                }
                if holds != (transformed == delta) {
                    counterexamples += 1;
                }
                checked += 1;
            }
        }
    }
    println!("  checked {checked} (gap, count) pairs");
    report("4", "transform iff characterization", counterexamples == 0);
}

#[test]
fn criterion_5_scaling_shape() {
    let _guard = HEAVY.lock().unwrap();

    // (a) wall-time ratio at the hardest published grid cell.
    let n = 30;
    let q = OrderQuery::new(
        (1..=6).collect(),
        (1..=6).map(|j| j as f64).collect(),
        n,
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p = random_matrix(&mut rng, n, 7);

    let mut bonc_times = Vec::new();
    let mut bonc_result = 0.0;
    for _ in 0..3 {
        let t = Instant::now();
        bonc_result = solve_boncelet(&q, &p).unwrap();
        bonc_times.push(t.elapsed().as_secs_f64());
    }
    let mut spill_times = Vec::new();
    let mut spill_result = 0.0;
    for _ in 0..31 {
        let t = Instant::now();
        spill_result = solve_independent(&q, &p, &SolveOptions::default()).unwrap();
        spill_times.push(t.elapsed().as_secs_f64());
    }
    bonc_times.sort_by(f64::total_cmp);
    spill_times.sort_by(f64::total_cmp);
    let ratio = bonc_times[bonc_times.len() / 2] / spill_times[spill_times.len() / 2];
    println!("  wall-time ratio at (n=30, d=6): {ratio:.0}");
    let agree = (bonc_result - spill_result).abs() <= 1e-10;

    // (b) log-log slope for a single first order statistic.
    let mut points = Vec::new();
    for &n in &[250usize, 500, 1000] {
        let q = OrderQuery::new(vec![1], vec![0.0], n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        let p = random_matrix(&mut rng, n, 2);
        let mut samples = Vec::new();
        for _ in 0..9 {
            let t = Instant::now();
            for _ in 0..200 {
                std::hint::black_box(
                    solve_independent(&q, &p, &SolveOptions::default()).unwrap(),
                );
            }
            samples.push(t.elapsed().as_secs_f64());
        }
        samples.sort_by(f64::total_cmp);
        points.push(((n as f64).ln(), samples[samples.len() / 2].ln()));
    }
    let m = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    println!("  log-log slope over n in {{250, 500, 1000}}: {slope:.3}");

    report(
        "5",
        "scaling shape",
        agree && ratio >= 100.0 && (0.7..=1.3).contains(&slope),
    );
}

struct MatrixConditional {
    p: BinProbabilityMatrix,
}

impl ConditionalProvider for MatrixConditional {
    fn micro_bin_count(&self) -> usize {
        self.p.width()
    }
    fn micro_probs(&self, i: usize, neighbor_locations: &[usize]) -> Result<Vec<f64>> {
        assert!(neighbor_locations.is_empty());
        Ok(self.p.row(i - 1).to_vec())
    }
}

#[test]
fn criterion_6_edge_free_reduction() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = rng.gen_range(1..=12);
        let d = rng.gen_range(1..=n.min(3));
        let q = random_query(&mut rng, n, d);
        let p = random_matrix(&mut rng, n, d + 1);
        let independent = solve_independent(&q, &p, &SolveOptions::default()).unwrap();

        let micro = MicroBinSpec::from_thresholds(q.thresholds(), 1).unwrap();
        let schedule = boundary_sets(&Graph::edge_free(n)).unwrap();
        let cond = MatrixConditional { p: p.clone() };
        let dependent =
            solve_dependent(&q, &micro, &schedule, &cond, &DependentOptions::default()).unwrap();
        worst = worst.max((dependent - independent).abs());
    }
    report("6", "edge-free dependent reduction", worst <= 1e-12);
}

#[test]
fn criterion_7_chain_exactness_vs_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let raw: Vec<f64> = (0..3).map(|_| rng.gen_range(0.05..1.0)).collect();
        let sum: f64 = raw.iter().sum();
        let chain =
            MarkovChainSpec::random_walk(0, raw[0] / sum, raw[1] / sum, raw[2] / sum).unwrap();
        let n = rng.gen_range(2..=10);
        let d = rng.gen_range(1..=n.min(3));
        let mut pool: Vec<usize> = (1..=n).collect();
        pool.shuffle(&mut rng);
        let mut c: Vec<usize> = pool[..d].to_vec();
        c.sort_unstable();
        let mut x: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
        x.sort_by(f64::total_cmp);
        let q = OrderQuery::new(c, x, n).unwrap();

        let oracle = enumerate_paths_oracle(&chain, &q).unwrap();
        let (schedule, micro, cond) = markov_chain_adapter(&chain, &q).unwrap();
        let generic =
            solve_dependent(&q, &micro, &schedule, &cond, &DependentOptions::default()).unwrap();
        let fast = solve_chain(&chain, &q).unwrap();
        worst = worst.max((generic - oracle).abs()).max((fast - oracle).abs());
    }
    report("7", "chain DP vs path enumeration", worst <= 1e-12);
}

#[test]
fn criterion_8_long_horizon_vs_monte_carlo() {
    let _guard = HEAVY.lock().unwrap();
    let kernels = [
        (0.30, 0.40, 0.30),
        (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0),
        (0.25, 0.50, 0.25),
        (0.40, 0.20, 0.40),
    ];
    let mut total = 0usize;
    let mut hits = 0usize;
    for (ki, &(qd, qz, qu)) in kernels.iter().enumerate() {
        let chain = MarkovChainSpec::random_walk(0, qd, qz, qu).unwrap();
        for step in 1..=12usize {
            let n = 30 * step;
            let c = vec![(90 * n) / 100, (95 * n) / 100, (99 * n) / 100];
            let q = OrderQuery::new(c, vec![3.0, 5.0, 10.0], n).unwrap();
            let exact = solve_chain(&chain, &q).unwrap();
            let sampler = ChainSampler::new(chain.clone(), n);
            let seed = 8000 + 100 * ki as u64 + step as u64;
            let mc = monte_carlo(&q, &sampler, 10_000, seed).unwrap();
            total += 1;
            if (exact - mc.estimate).abs() <= 3.0 * mc.stderr {
                hits += 1;
            } else {
                println!(
                    "  deviation at kernel {ki}, n={n}: exact={exact:.5} mc={:.5} stderr={:.5}",
                    mc.estimate, mc.stderr
                );
            }
        }
    }
    println!("  {hits}/{total} grid points within 3 standard errors");
    report("8", "long-horizon MC agreement", hits as f64 / total as f64 >= 0.99);
}

#[test]
fn criterion_9_determinism() {
    let mut ok = true;

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let q = random_query(&mut rng, 15, 4);
    let p = random_matrix(&mut rng, 15, 5);
    for opts in [
        SolveOptions { prune: true, precompute_sums: false },
        SolveOptions { prune: false, precompute_sums: false },
        SolveOptions { prune: true, precompute_sums: true },
    ] {
        let a = solve_independent(&q, &p, &opts).unwrap();
        let b = solve_independent(&q, &p, &opts).unwrap();
        ok &= a.to_bits() == b.to_bits();
    }

    let dists: Vec<CdfProvider> = (0..15).map(|_| CdfProvider::uniform(0.0, 5.0).unwrap()).collect();
    let sampler = IndependentSampler::new(dists);
    let a = monte_carlo(&q, &sampler, 5000, 42).unwrap();
    let b = monte_carlo(&q, &sampler, 5000, 42).unwrap();
    ok &= a.estimate.to_bits() == b.estimate.to_bits();
    ok &= a.stderr.to_bits() == b.stderr.to_bits();

    let chain = MarkovChainSpec::random_walk(0, 0.3, 0.4, 0.3).unwrap();
    let cq = OrderQuery::new(vec![27, 29], vec![2.0, 5.0], 30).unwrap();
    ok &= solve_chain(&chain, &cq).unwrap().to_bits()
        == solve_chain(&chain, &cq).unwrap().to_bits();
    let (schedule, micro, cond) = markov_chain_adapter(&chain, &cq).unwrap();
    let opts = DependentOptions::default();
    ok &= solve_dependent(&cq, &micro, &schedule, &cond, &opts).unwrap().to_bits()
        == solve_dependent(&cq, &micro, &schedule, &cond, &opts).unwrap().to_bits();

    report("9", "bitwise determinism", ok);
}
