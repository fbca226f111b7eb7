//! Reference solvers used as correctness oracles and benchmark comparators:
//! the full-configuration dynamic program of Boncelet Jr., exhaustive
//! enumeration over bin assignments, and seeded Monte Carlo estimation.

use crate::dist::CdfProvider;
use crate::error::{Error, Result};
use crate::query::{BinProbabilityMatrix, OrderQuery};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Default cap on allocated configuration-table entries.
pub const DEFAULT_TABLE_CAP: usize = 100_000_000;

/// Default cap on brute-force bin assignments.
pub const DEFAULT_BRUTE_CAP: usize = 10_000_000;

/// Indexer for raw configurations `k` with `sum(k) <= n`, stored densely in
/// lexicographic order (`k_1` most significant). Keeping only the simplex
/// cuts memory by the simplex ratio without changing the `O(n^d)` bound.
struct SimplexIndexer {
    d: usize,
    n: usize,
    /// prefix[j][rem][v] = number of suffixes strictly below value `v` at
    /// position `j` given remaining budget `rem`.
    prefix: Vec<Vec<Vec<u64>>>,
    len: usize,
}

impl SimplexIndexer {
    fn new(d: usize, n: usize, cap: usize) -> Result<Self> {
        // count(m, t) = C(t + m, m): vectors of length m with sum <= t.
        let count = |m: usize, t: usize| -> u128 {
            let mut num: u128 = 1;
            for i in 1..=m {
                num = num * (t + i) as u128 / i as u128;
            }
            num
        };
        let total = count(d, n);
        if total > cap as u128 {
            return Err(Error::Resource(format!(
                "configuration table needs {total} entries, cap is {cap}"
            )));
        }
        let mut prefix = Vec::with_capacity(d);
        for j in 0..d {
            let m = d - 1 - j;
            let mut by_rem = Vec::with_capacity(n + 1);
            for rem in 0..=n {
                let mut acc = 0u64;
                let mut row = Vec::with_capacity(rem + 2);
                row.push(0);
                for v in 0..=rem {
                    acc += count(m, rem - v) as u64;
                    row.push(acc);
                }
                by_rem.push(row);
            }
            prefix.push(by_rem);
        }
        Ok(Self { d, n, prefix, len: total as usize })
    }

    fn len(&self) -> usize {
        self.len
    }

    fn rank(&self, k: &[u16]) -> usize {
        let mut r = 0u64;
        let mut rem = self.n;
        for j in 0..self.d {
            let v = k[j] as usize;
            r += self.prefix[j][rem][v];
            rem -= v;
        }
        r as usize
    }

    /// All states in lexicographic order, flattened row-major.
    fn states(&self) -> Vec<u16> {
        let mut out = Vec::with_capacity(self.len * self.d);
        let mut k = vec![0u16; self.d];
        let mut sum = 0usize;
        loop {
            out.extend_from_slice(&k);
            // lex successor within the simplex
            let mut j = self.d;
            loop {
                if j == 0 {
                    return out;
                }
                j -= 1;
                sum -= k[j] as usize;
                if sum + (k[j] as usize) + 1 <= self.n {
                    k[j] += 1;
                    sum += k[j] as usize;
                    for e in k[j + 1..].iter_mut() {
                        *e = 0;
                    }
                    break;
                }
                k[j] = 0;
            }
        }
    }
}

/// Boncelet Jr.'s full-configuration DP with the default table cap.
pub fn solve_boncelet(query: &OrderQuery, p: &BinProbabilityMatrix) -> Result<f64> {
    solve_boncelet_with_cap(query, p, DEFAULT_TABLE_CAP)
}

/// Boncelet Jr.'s DP: maintains `P(C_i = k)` over raw configurations and
/// finally sums the acceptance set `{k : sum_{i<=j} k_i >= c_j for all j}`.
pub fn solve_boncelet_with_cap(
    query: &OrderQuery,
    p: &BinProbabilityMatrix,
    cap: usize,
) -> Result<f64> {
    if p.n() != query.n() || p.width() != query.d() + 1 {
        return Err(Error::Input("query/matrix shape mismatch".into()));
    }
    let (n, d) = (query.n(), query.d());
    let indexer = SimplexIndexer::new(d, n, cap)?;
    let states = indexer.states();
    let len = indexer.len();

    let mut prev = vec![0.0f64; len];
    prev[0] = 1.0;
    let mut next = vec![0.0f64; len];
    let mut neighbor = vec![0u16; d];
    for i in 1..=n {
        let row = p.row(i - 1);
        for idx in 0..len {
            let k = &states[idx * d..(idx + 1) * d];
            let mut acc = row[d] * prev[idx];
            for j in 0..d {
                if k[j] == 0 {
                    continue;
                }
                neighbor.copy_from_slice(k);
                neighbor[j] -= 1;
                acc += row[j] * prev[indexer.rank(&neighbor)];
            }
            next[idx] = acc;
        }
        std::mem::swap(&mut prev, &mut next);
    }

    let c = query.indices();
    let mut total = 0.0;
    for idx in 0..len {
        let k = &states[idx * d..(idx + 1) * d];
        let mut cum = 0usize;
        let mut ok = true;
        for j in 0..d {
            cum += k[j] as usize;
            if cum < c[j] {
                ok = false;
                break;
            }
        }
        if ok {
            total += prev[idx];
        }
    }
    Ok(total)
}

/// Exhaustive enumeration over all `(d + 1)^n` bin assignments.
pub fn brute_force(query: &OrderQuery, p: &BinProbabilityMatrix) -> Result<f64> {
    brute_force_with_cap(query, p, DEFAULT_BRUTE_CAP)
}

pub fn brute_force_with_cap(
    query: &OrderQuery,
    p: &BinProbabilityMatrix,
    cap: usize,
) -> Result<f64> {
    if p.n() != query.n() || p.width() != query.d() + 1 {
        return Err(Error::Input("query/matrix shape mismatch".into()));
    }
    let (n, d) = (query.n(), query.d());
    let mut assignments = 1u128;
    for _ in 0..n {
        assignments = assignments.saturating_mul((d + 1) as u128);
        if assignments > cap as u128 {
            return Err(Error::Resource(format!(
                "brute force needs more than {cap} assignments"
            )));
        }
    }

    let c = query.indices();
    let mut counts = vec![0usize; d + 1];
    let mut total = 0.0;
    enumerate(query, p, 0, 1.0, &mut counts, c, &mut total);
    return Ok(total);

    fn enumerate(
        query: &OrderQuery,
        p: &BinProbabilityMatrix,
        ball: usize,
        weight: f64,
        counts: &mut Vec<usize>,
        c: &[usize],
        total: &mut f64,
    ) {
        if ball == query.n() {
            let mut cum = 0;
            for (j, &cj) in c.iter().enumerate() {
                cum += counts[j];
                if cum < cj {
                    return;
                }
            }
            *total += weight;
            return;
        }
        let row = p.row(ball);
        for j in 0..row.len() {
            counts[j] += 1;
            enumerate(query, p, ball + 1, weight * row[j], counts, c, total);
            counts[j] -= 1;
        }
    }
}

/// Draws one joint sample of all `n` variables.
///
/// Trials use a counter-based scheme: trial `t` runs on an independent
/// stream of the seeded generator, so estimates are reproducible and
/// parallelizable deterministically.
pub trait JointSampler {
    fn dimension(&self) -> usize;
    fn sample_into(&self, rng: &mut ChaCha8Rng, out: &mut Vec<f64>);
}

/// Sampler for independent variables backed by per-variable CDF providers.
pub struct IndependentSampler {
    dists: Vec<CdfProvider>,
}

impl IndependentSampler {
    pub fn new(dists: Vec<CdfProvider>) -> Self {
        Self { dists }
    }
}

impl JointSampler for IndependentSampler {
    fn dimension(&self) -> usize {
        self.dists.len()
    }

    fn sample_into(&self, rng: &mut ChaCha8Rng, out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.dists.iter().map(|d| d.sample(rng)));
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloResult {
    pub estimate: f64,
    pub stderr: f64,
}

/// Monte Carlo estimate of the joint order-statistic CDF.
pub fn monte_carlo<S: JointSampler + ?Sized>(
    query: &OrderQuery,
    sampler: &S,
    trials: u64,
    seed: u64,
) -> Result<MonteCarloResult> {
    if trials == 0 {
        return Err(Error::Input("at least one trial is required".into()));
    }
    if sampler.dimension() != query.n() {
        return Err(Error::Input("sampler dimension does not match query".into()));
    }
    let c = query.indices();
    let x = query.thresholds();
    let mut sample = Vec::with_capacity(query.n());
    let mut hits = 0u64;
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(t + 1);
        sampler.sample_into(&mut rng, &mut sample);
        sample.sort_by(f64::total_cmp);
        if c.iter().zip(x).all(|(&cj, &xj)| sample[cj - 1] <= xj) {
            hits += 1;
        }
    }
    let estimate = hits as f64 / trials as f64;
    let stderr = (estimate * (1.0 - estimate) / trials as f64).sqrt();
    Ok(MonteCarloResult { estimate, stderr })
}
