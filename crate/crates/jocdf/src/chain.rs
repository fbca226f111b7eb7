//! Markov-chain specialization: integer-valued walks with a step kernel,
//! processed as a path graph with boundary size one.
//!
//! The adapter places one micro-bound at every reachable support point, so
//! the dependent DP is exact without tuning the granularity. A dedicated
//! solver exploits the chain structure (the only tracked variable is the
//! predecessor) to handle long horizons; it computes the same recurrence as
//! the generic dependent solver.

use crate::baselines::JointSampler;
use crate::dependent::{boundary_sets, DependencySchedule, Graph, MicroBinSpec};
use crate::dist::ConditionalProvider;
use crate::error::{Error, Result};
use crate::query::OrderQuery;
use crate::spill::sigma;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

/// Default cap on enumerated trajectories in the path oracle.
pub const DEFAULT_PATH_CAP: usize = 10_000_000;

/// One step of the transition kernel: `X_{i+1} = X_i + offset` with the
/// given probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelStep {
    pub offset: i64,
    pub prob: f64,
}

/// An integer-valued Markov chain `X_1, ..., X_n` started from `X_0 =
/// initial`, with an optional clamp range: steps that would leave
/// `[lo, hi]` stop at the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChainSpec {
    initial: i64,
    steps: Vec<KernelStep>,
    bounds: Option<(i64, i64)>,
}

impl MarkovChainSpec {
    pub fn new(initial: i64, steps: Vec<KernelStep>, bounds: Option<(i64, i64)>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::Input("kernel needs at least one step".into()));
        }
        let mut sum = 0.0;
        for s in &steps {
            if !(s.prob >= 0.0 && s.prob <= 1.0) {
                return Err(Error::Input(format!("step probability {} invalid", s.prob)));
            }
            sum += s.prob;
        }
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Input(format!("kernel probabilities sum to {sum}")));
        }
        let mut steps = steps;
        steps.sort_by_key(|s| s.offset);
        if steps.windows(2).any(|w| w[0].offset == w[1].offset) {
            return Err(Error::Input("duplicate kernel offsets".into()));
        }
        if let Some((lo, hi)) = bounds {
            if lo > hi || initial < lo || initial > hi {
                return Err(Error::Input(format!(
                    "initial {initial} outside clamp range [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { initial, steps, bounds })
    }

    /// Symmetric-support random walk kernel over offsets `{-1, 0, +1}`.
    pub fn random_walk(initial: i64, q_down: f64, q_zero: f64, q_up: f64) -> Result<Self> {
        Self::new(
            initial,
            vec![
                KernelStep { offset: -1, prob: q_down },
                KernelStep { offset: 0, prob: q_zero },
                KernelStep { offset: 1, prob: q_up },
            ],
            None,
        )
    }

    pub fn initial(&self) -> i64 {
        self.initial
    }

    pub fn steps(&self) -> &[KernelStep] {
        &self.steps
    }

    /// Reachable value range after up to `n` steps (respecting the clamp).
    pub fn support(&self, n: usize) -> (i64, i64) {
        let min_off = self.steps.iter().map(|s| s.offset).min().unwrap().min(0);
        let max_off = self.steps.iter().map(|s| s.offset).max().unwrap().max(0);
        let mut lo = self.initial + min_off * n as i64;
        let mut hi = self.initial + max_off * n as i64;
        if let Some((blo, bhi)) = self.bounds {
            lo = lo.max(blo);
            hi = hi.min(bhi);
        }
        (lo, hi)
    }

    /// Outgoing transitions from value `v`, clamped and mass-merged, sorted
    /// by target value.
    pub fn transition(&self, v: i64) -> Vec<(i64, f64)> {
        let mut out: Vec<(i64, f64)> = Vec::with_capacity(self.steps.len());
        for s in &self.steps {
            let mut target = v + s.offset;
            if let Some((lo, hi)) = self.bounds {
                target = target.clamp(lo, hi);
            }
            match out.iter_mut().find(|(t, _)| *t == target) {
                Some((_, p)) => *p += s.prob,
                None => out.push((target, s.prob)),
            }
        }
        out.sort_by_key(|&(t, _)| t);
        out
    }
}

/// Conditional provider for a chain: the distribution of ball `i` depends
/// only on the predecessor's micro-bin.
pub struct ChainConditional {
    micro: MicroBinSpec,
    micro_of_value: HashMap<i64, usize>,
    value_of_micro: Vec<Option<i64>>,
    /// Value range covered by the micro-bins.
    support: (i64, i64),
    /// Unconditional row for the first variable.
    initial_row: Vec<f64>,
    chain: MarkovChainSpec,
}

impl ChainConditional {
    fn row_from(&self, v: i64) -> Vec<f64> {
        let (lo, hi) = self.support;
        let mut row = vec![0.0; self.micro.micro_bin_count()];
        for (target, p) in self.chain.transition(v) {
            // Targets can leave the n-step support only from placements that
            // carry zero mass; clamping keeps the row a valid distribution.
            row[self.micro_of_value[&target.clamp(lo, hi)]] += p;
        }
        row
    }
}

impl ConditionalProvider for ChainConditional {
    fn micro_bin_count(&self) -> usize {
        self.micro.micro_bin_count()
    }

    fn micro_probs(&self, i: usize, neighbor_locations: &[usize]) -> Result<Vec<f64>> {
        if i == 1 {
            if !neighbor_locations.is_empty() {
                return Err(Error::Input("first variable has no neighbors".into()));
            }
            return Ok(self.initial_row.clone());
        }
        let &[m] = neighbor_locations else {
            return Err(Error::Input(format!(
                "chain variable {i} expects exactly one neighbor location"
            )));
        };
        match self.value_of_micro.get(m).copied().flatten() {
            Some(v) => Ok(self.row_from(v)),
            // The neighbor micro-bin holds no support point; it carries zero
            // mass, so any valid distribution works here.
            None => Ok(self.initial_row.clone()),
        }
    }
}

/// Builds the schedule, micro-bin spec, and conditional provider for a chain.
///
/// Micro-bounds are placed so every reachable support point occupies its own
/// micro-bin, which makes the dependent DP exact.
pub fn markov_chain_adapter(
    chain: &MarkovChainSpec,
    query: &OrderQuery,
) -> Result<(DependencySchedule, MicroBinSpec, ChainConditional)> {
    let n = query.n();
    let d = query.d();
    let (lo, hi) = chain.support(n);
    let support_size = (hi - lo + 1) as usize;

    let x = query.thresholds();
    // Partition support points into the d + 1 macro bins (x is non-decreasing
    // after canonicalization; bin j is (x_{j-1}, x_j]).
    let bin_of = |v: i64| -> usize {
        let vf = v as f64;
        x.iter().position(|&t| vf <= t).map_or(d + 1, |j| j + 1)
    };
    let mut per_bin: Vec<Vec<i64>> = vec![Vec::new(); d + 2];
    for v in lo..=hi {
        per_bin[bin_of(v)].push(v);
    }
    let h = per_bin.iter().map(Vec::len).max().unwrap().max(1);

    let mut bounds = Vec::with_capacity((d + 1) * h + 1);
    bounds.push(f64::NEG_INFINITY);
    for j in 1..=d + 1 {
        let right = if j <= d { x[j - 1] } else { f64::INFINITY };
        let pts = &per_bin[j];
        for k in 1..=h {
            if k < pts.len() {
                bounds.push(pts[k - 1] as f64);
            } else {
                bounds.push(right);
            }
        }
    }
    let micro = MicroBinSpec::new(d, h, bounds)?;

    let mut micro_of_value = HashMap::with_capacity(support_size);
    let mut value_of_micro = vec![None; micro.micro_bin_count()];
    for v in lo..=hi {
        let m = micro.locate(v as f64)?;
        if value_of_micro[m].is_some() {
            return Err(Error::Input(format!(
                "support points {v} and {} share a micro-bin",
                value_of_micro[m].unwrap()
            )));
        }
        micro_of_value.insert(v, m);
        value_of_micro[m] = Some(v);
    }

    let schedule = boundary_sets(&Graph::path(n))?;
    let mut cond = ChainConditional {
        micro: micro.clone(),
        micro_of_value,
        value_of_micro,
        support: (lo, hi),
        initial_row: Vec::new(),
        chain: chain.clone(),
    };
    cond.initial_row = cond.row_from(chain.initial());
    Ok((schedule, micro, cond))
}

/// Exact chain solver specialized to the path graph.
///
/// Tracks `(spill state, current value)` with the value stored directly
/// instead of a boundary vector. Spill states that cannot reach the
/// accepting state (or cannot yet hold their ball count) are skipped; those
/// entries are exactly zero, so the result matches the generic solver.
pub fn solve_chain(chain: &MarkovChainSpec, query: &OrderQuery) -> Result<f64> {
    let n = query.n();
    let d = query.d();
    let deltas = query.deltas();
    let delta = deltas.as_slice();
    let total_delta = deltas.sum();
    let ksize: usize = delta.iter().map(|&dj| dj + 1).product();
    let mut kstrides = Vec::with_capacity(d);
    {
        let mut s = 1;
        for &dj in delta {
            kstrides.push(s);
            s *= dj + 1;
        }
    }

    let (lo, hi) = chain.support(n);
    let width = (hi - lo + 1) as usize;
    let pos = |v: i64| -> usize { (v - lo) as usize };

    let x = query.thresholds();
    let bin_of_pos: Vec<usize> = (lo..=hi)
        .map(|v| {
            let vf = v as f64;
            x.iter().position(|&t| vf <= t).map_or(d + 1, |j| j + 1)
        })
        .collect();

    // Incoming transitions per target position.
    let mut incoming: Vec<Vec<(usize, f64)>> = vec![Vec::new(); width];
    for v in lo..=hi {
        for (target, p) in chain.transition(v) {
            // Sources whose step exits the n-step support never hold mass
            // while steps remain, so the dropped edges are unreachable.
            if (lo..=hi).contains(&target) {
                incoming[pos(target)].push((pos(v), p));
            }
        }
    }

    // Reachable position range after i steps.
    let min_off = chain.steps().iter().map(|s| s.offset).min().unwrap().min(0);
    let max_off = chain.steps().iter().map(|s| s.offset).max().unwrap().max(0);
    let range_at = |i: usize| -> (usize, usize) {
        let lo_i = (chain.initial() + min_off * i as i64).max(lo);
        let hi_i = (chain.initial() + max_off * i as i64).min(hi);
        (pos(lo_i), pos(hi_i))
    };

    // Active spill states at step i: enough balls thrown, enough remaining.
    let active_states = |i: usize| -> Vec<usize> {
        let mut list = Vec::new();
        let mut kappa = vec![0usize; d];
        for k_idx in 0..ksize {
            let sum: usize = kappa.iter().sum();
            let deficit = total_delta - sum;
            if sum <= i && deficit <= n - i {
                list.push(k_idx);
            }
            for j in 0..d {
                kappa[j] += 1;
                if kappa[j] <= delta[j] {
                    break;
                }
                kappa[j] = 0;
            }
        }
        list
    };

    // T_0: zero spill state, walk at the initial value.
    let mut prev_rows: HashMap<usize, usize> = HashMap::new();
    prev_rows.insert(0, 0);
    let mut prev = vec![0.0f64; width];
    prev[pos(chain.initial())] = 1.0;

    let mut kappa = vec![0usize; d];
    for i in 1..=n {
        let active = active_states(i);
        let rows: HashMap<usize, usize> =
            active.iter().enumerate().map(|(row, &k)| (k, row)).collect();
        let mut next = vec![0.0f64; active.len() * width];
        let (v_lo, v_hi) = range_at(i);

        for (row, &k_idx) in active.iter().enumerate() {
            // decode kappa
            {
                let mut rem = k_idx;
                for j in 0..d {
                    kappa[j] = rem % (delta[j] + 1);
                    rem /= delta[j] + 1;
                }
            }
            // Branches: previous-table row and the sigma range of macro bins
            // whose balls end up producing this transition.
            let mut branches: Vec<(usize, usize, usize)> = Vec::new(); // (prev_row, run_lo, run_hi)
            if let Some(&pr) = prev_rows.get(&k_idx) {
                let run = sigma(d + 1, &kappa, &deltas);
                branches.push((pr, *run.start(), d + 1));
            }
            for j in 1..=d {
                if kappa[j - 1] == 0 {
                    continue;
                }
                if let Some(&pr) = prev_rows.get(&(k_idx - kstrides[j - 1])) {
                    let run = sigma(j, &kappa, &deltas);
                    branches.push((pr, *run.start(), j));
                }
            }
            if branches.is_empty() {
                continue;
            }
            let out = &mut next[row * width..(row + 1) * width];
            for v in v_lo..=v_hi {
                let j_hat = bin_of_pos[v];
                let mut acc = 0.0;
                for &(pr, run_lo, run_hi) in &branches {
                    if j_hat < run_lo || j_hat > run_hi {
                        continue;
                    }
                    let src = &prev[pr * width..(pr + 1) * width];
                    for &(u, p) in &incoming[v] {
                        acc += src[u] * p;
                    }
                }
                out[v] = acc;
            }
        }
        prev = next;
        prev_rows = rows;
    }

    let Some(&accept_row) = prev_rows.get(&(ksize - 1)) else {
        return Ok(0.0);
    };
    Ok(prev[accept_row * width..(accept_row + 1) * width].iter().sum())
}

/// Exhaustive trajectory enumeration; the dependent-case verification oracle.
pub fn enumerate_paths_oracle(chain: &MarkovChainSpec, query: &OrderQuery) -> Result<f64> {
    enumerate_paths_oracle_with_cap(chain, query, DEFAULT_PATH_CAP)
}

pub fn enumerate_paths_oracle_with_cap(
    chain: &MarkovChainSpec,
    query: &OrderQuery,
    cap: usize,
) -> Result<f64> {
    let n = query.n();
    let mut paths = 1u128;
    for _ in 0..n {
        paths = paths.saturating_mul(chain.steps().len() as u128);
        if paths > cap as u128 {
            return Err(Error::Resource(format!(
                "path enumeration needs more than {cap} trajectories"
            )));
        }
    }
    let c = query.indices();
    let x = query.thresholds();
    let mut values = Vec::with_capacity(n);
    let mut total = 0.0;
    walk(chain, query, chain.initial(), 1.0, &mut values, c, x, &mut total);
    return Ok(total);

    #[allow(clippy::too_many_arguments)]
    fn walk(
        chain: &MarkovChainSpec,
        query: &OrderQuery,
        value: i64,
        weight: f64,
        values: &mut Vec<i64>,
        c: &[usize],
        x: &[f64],
        total: &mut f64,
    ) {
        if values.len() == query.n() {
            let mut sorted = values.clone();
            sorted.sort_unstable();
            if c.iter().zip(x).all(|(&cj, &xj)| (sorted[cj - 1] as f64) <= xj) {
                *total += weight;
            }
            return;
        }
        for (target, p) in chain.transition(value) {
            values.push(target);
            walk(chain, query, target, weight * p, values, c, x, total);
            values.pop();
        }
    }
}

/// Joint sampler that simulates the chain; used by the Monte Carlo oracle.
pub struct ChainSampler {
    chain: MarkovChainSpec,
    n: usize,
}

impl ChainSampler {
    pub fn new(chain: MarkovChainSpec, n: usize) -> Self {
        Self { chain, n }
    }
}

impl JointSampler for ChainSampler {
    fn dimension(&self) -> usize {
        self.n
    }

    fn sample_into(&self, rng: &mut ChaCha8Rng, out: &mut Vec<f64>) {
        out.clear();
        let mut v = self.chain.initial();
        for _ in 0..self.n {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut stepped = v;
            for (target, p) in self.chain.transition(v) {
                acc += p;
                stepped = target;
                if u <= acc {
                    break;
                }
            }
            v = stepped;
            out.push(v as f64);
        }
    }
}
