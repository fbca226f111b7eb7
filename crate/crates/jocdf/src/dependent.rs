//! Exact joint order-statistic CDF for dependent variables over a Markov
//! random field.
//!
//! Each bin is split into `H` micro-bins so the locations of tracked
//! variables can be recorded precisely enough to evaluate conditional
//! distributions. The DP state augments the compressed spill state with the
//! micro-bin placements of the current boundary set: the lower-indexed
//! variables still adjacent to any future variable.

use crate::dist::{conditional_micro_probs, ConditionalProvider, MicroBin};
use crate::error::{Error, Result};
use crate::query::{Deltas, OrderQuery};
use crate::spill::sigma;
use std::collections::HashMap;

/// Micro-bin partition: each of the `d + 1` bins splits into `H` micro-bins
/// `I_{j,h} = (x_{j,h-1}, x_{j,h}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MicroBinSpec {
    d: usize,
    h: usize,
    /// Flat bound array of length `(d + 1) * H + 1`, from -inf to +inf, with
    /// the macro thresholds at multiples of `H`.
    bounds: Vec<f64>,
}

impl MicroBinSpec {
    pub fn new(d: usize, h: usize, bounds: Vec<f64>) -> Result<Self> {
        if h == 0 {
            return Err(Error::Input("granularity H must be >= 1".into()));
        }
        if bounds.len() != (d + 1) * h + 1 {
            return Err(Error::Input(format!(
                "expected {} micro-bounds, got {}",
                (d + 1) * h + 1,
                bounds.len()
            )));
        }
        if bounds[0] != f64::NEG_INFINITY || *bounds.last().unwrap() != f64::INFINITY {
            return Err(Error::Input("micro-bounds must span the real line".into()));
        }
        if bounds.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::Input("micro-bounds must be non-decreasing".into()));
        }
        Ok(Self { d, h, bounds })
    }

    /// Uniform split of each interior bin; the two infinite tail bins get
    /// degenerate splits (a single non-empty micro-bin each).
    pub fn from_thresholds(x: &[f64], h: usize) -> Result<Self> {
        let d = x.len();
        if d == 0 {
            return Err(Error::Input("at least one threshold is required".into()));
        }
        let mut bounds = Vec::with_capacity((d + 1) * h + 1);
        bounds.push(f64::NEG_INFINITY);
        // bin 1: (-inf, x_1]; only the last micro-bin is non-empty.
        for _ in 1..h {
            bounds.push(f64::NEG_INFINITY);
        }
        bounds.push(x[0]);
        for j in 2..=d {
            let (lo, hi) = (x[j - 2], x[j - 1]);
            for k in 1..h {
                bounds.push(lo + (hi - lo) * k as f64 / h as f64);
            }
            bounds.push(hi);
        }
        // tail bin: (x_d, +inf); only the first micro-bin is non-empty.
        for _ in 1..h {
            bounds.push(f64::INFINITY);
        }
        bounds.push(f64::INFINITY);
        Self::new(d, h, bounds)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn granularity(&self) -> usize {
        self.h
    }

    /// Total number of micro-bins, `(d + 1) * H`.
    pub fn micro_bin_count(&self) -> usize {
        (self.d + 1) * self.h
    }

    /// Flat index of a 1-based `(bin, micro)` pair.
    pub fn flat(&self, bin: usize, micro: usize) -> usize {
        debug_assert!(bin >= 1 && bin <= self.d + 1 && micro >= 1 && micro <= self.h);
        (bin - 1) * self.h + (micro - 1)
    }

    pub fn split(&self, flat: usize) -> MicroBin {
        MicroBin { bin: flat / self.h + 1, micro: flat % self.h + 1 }
    }

    /// 1-based macro bin of a flat micro index.
    pub fn macro_bin(&self, flat: usize) -> usize {
        flat / self.h + 1
    }

    /// Flat index of the micro-bin containing `t` (right-closed convention).
    pub fn locate(&self, t: f64) -> Result<usize> {
        if t.is_nan() {
            return Err(Error::Input("cannot locate NaN".into()));
        }
        let i = self.bounds.partition_point(|&b| b < t);
        Ok(i.saturating_sub(1).min(self.micro_bin_count() - 1))
    }

    pub fn bounds(&self) -> &[f64] {
        &self.bounds
    }
}

/// Undirected dependency graph over variables `1..=n`.
#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    adj: Vec<Vec<usize>>,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Self { n, adj: vec![Vec::new(); n + 1] }
    }

    pub fn edge_free(n: usize) -> Self {
        Self::new(n)
    }

    pub fn path(n: usize) -> Self {
        let mut g = Self::new(n);
        for i in 2..=n {
            g.add_edge(i - 1, i).expect("path edges are valid");
        }
        g
    }

    pub fn add_edge(&mut self, a: usize, b: usize) -> Result<()> {
        if a == b {
            return Err(Error::Input(format!("self-loop at vertex {a}")));
        }
        if a < 1 || b < 1 || a > self.n || b > self.n {
            return Err(Error::Input(format!("edge ({a}, {b}) outside 1..={}", self.n)));
        }
        if !self.adj[a].contains(&b) {
            self.adj[a].push(b);
            self.adj[b].push(a);
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }
}

/// Processing order (fixed to `1..n`) with per-step neighbor and boundary
/// index sets.
///
/// `Nbr(i)` is the set of lower-indexed graph neighbors of `i`; `Bnd(i)` is
/// the set of variables `j < i` still adjacent to some `k >= i`. The DP at
/// step `i` remembers exactly the micro-bin placements of `Bnd(i)`.
#[derive(Debug, Clone)]
pub struct DependencySchedule {
    n: usize,
    nbr: Vec<Vec<usize>>,
    bnd: Vec<Vec<usize>>,
}

impl DependencySchedule {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Lower-indexed neighbors of `i`, ascending. Valid for `i` in `1..=n`.
    pub fn nbr(&self, i: usize) -> &[usize] {
        &self.nbr[i]
    }

    /// Boundary set before step `i`, ascending. Valid for `i` in `1..=n + 1`.
    pub fn bnd(&self, i: usize) -> &[usize] {
        &self.bnd[i]
    }

    pub fn b_star(&self) -> usize {
        self.bnd.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// Derives neighbor and boundary sets from the dependency graph under the
/// identity visitation order.
pub fn boundary_sets(graph: &Graph) -> Result<DependencySchedule> {
    let n = graph.n();
    let mut nbr = vec![Vec::new(); n + 1];
    for i in 1..=n {
        let mut lower: Vec<usize> = graph.neighbors(i).iter().copied().filter(|&j| j < i).collect();
        lower.sort_unstable();
        nbr[i] = lower;
    }
    // j belongs to Bnd(i) exactly when j < i <= max neighbor of j.
    let mut last_nbr = vec![0usize; n + 1];
    for j in 1..=n {
        last_nbr[j] = graph.neighbors(j).iter().copied().max().unwrap_or(0);
    }
    let mut bnd = vec![Vec::new(); n + 2];
    for i in 1..=n + 1 {
        bnd[i] = (1..i.min(n + 1)).filter(|&j| j < i && i <= last_nbr[j]).collect();
    }
    Ok(DependencySchedule { n, nbr, bnd })
}

/// A boundary state: one flat micro-bin index per boundary-set member, in
/// increasing variable-index order.
pub type BoundaryState = Vec<usize>;

/// Enumerates the step-`i` boundary states consistent with a step-`i + 1`
/// target state: shared variables keep the target's coordinates, retired
/// variables range over every micro-bin. Returned in lexicographic order.
///
/// No spill-state consistency filtering is applied: placements incompatible
/// with the spill state carry zero mass in the previous table, so including
/// them only costs time.
pub fn psi(
    schedule: &DependencySchedule,
    micro: &MicroBinSpec,
    i: usize,
    target_boundary: &[usize],
) -> Result<Vec<BoundaryState>> {
    let b_cur = schedule.bnd(i);
    let b_next = schedule.bnd(i + 1);
    if target_boundary.len() != b_next.len() {
        return Err(Error::Input(format!(
            "target boundary has {} entries, Bnd({}) has {}",
            target_boundary.len(),
            i + 1,
            b_next.len()
        )));
    }
    let m = micro.micro_bin_count();
    // Per-position template: Some(coord) for shared variables, None for
    // retired ones.
    let template: Vec<Option<usize>> = b_cur
        .iter()
        .map(|v| b_next.iter().position(|w| w == v).map(|pos| target_boundary[pos]))
        .collect();
    let free: Vec<usize> = template
        .iter()
        .enumerate()
        .filter_map(|(idx, t)| t.is_none().then_some(idx))
        .collect();

    let mut count = 1usize;
    for _ in &free {
        count = count.saturating_mul(m);
    }
    let mut out = Vec::with_capacity(count);
    let mut state: Vec<usize> = template.iter().map(|t| t.unwrap_or(0)).collect();
    loop {
        out.push(state.clone());
        // advance the retired coordinates, last free position fastest, so the
        // overall sequence is lexicographic in the full vector.
        let mut pos = free.len();
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            let idx = free[pos];
            state[idx] += 1;
            if state[idx] < m {
                break;
            }
            state[idx] = 0;
        }
    }
}

fn neighbor_coords(
    schedule: &DependencySchedule,
    i: usize,
    prior_boundary: &[usize],
) -> Result<Vec<usize>> {
    let b_cur = schedule.bnd(i);
    schedule
        .nbr(i)
        .iter()
        .map(|v| {
            b_cur
                .iter()
                .position(|w| w == v)
                .map(|pos| prior_boundary[pos])
                .ok_or_else(|| {
                    Error::Input(format!("neighbor {v} of {i} missing from Bnd({i})"))
                })
        })
        .collect()
}

/// Transition weight for one branch of the dependent recurrence, given the
/// conditional row of ball `i` (already conditioned on the prior boundary's
/// neighbor placements).
///
/// Tracked case (`i` in `Bnd(i + 1)`): the ball's recorded micro-bin must
/// have a macro bin inside `sigma(target_bin, kappa)`; otherwise the weight
/// is zero.
fn gamma_from_row(
    micro: &MicroBinSpec,
    deltas: &Deltas,
    row: &[f64],
    tracked_micro: Option<usize>,
    kappa: &[usize],
    target_bin: usize,
) -> f64 {
    let run = sigma(target_bin, kappa, deltas);
    match tracked_micro {
        Some(m_hat) => {
            let j_hat = micro.macro_bin(m_hat);
            if run.contains(&j_hat) {
                row[m_hat]
            } else {
                0.0
            }
        }
        None => {
            let mut s = 0.0;
            for j in run {
                for h in 1..=micro.granularity() {
                    s += row[micro.flat(j, h)];
                }
            }
            s
        }
    }
}

/// Piece-wise transition weight of the dependent recurrence.
///
/// `target_bin` is `d + 1` for the branch that leaves the spill state
/// unchanged, or the incremented bin `j` otherwise.
pub fn gamma<P: ConditionalProvider + ?Sized>(
    schedule: &DependencySchedule,
    micro: &MicroBinSpec,
    deltas: &Deltas,
    cond: &P,
    i: usize,
    target_boundary: &[usize],
    prior_boundary: &[usize],
    kappa: &[usize],
    target_bin: usize,
) -> Result<f64> {
    let nbrs = neighbor_coords(schedule, i, prior_boundary)?;
    let row = conditional_micro_probs(cond, i, &nbrs)?;
    let tracked = schedule.bnd(i + 1).contains(&i);
    let tracked_micro = tracked.then(|| *target_boundary.last().expect("tracked boundary"));
    Ok(gamma_from_row(micro, deltas, &row, tracked_micro, kappa, target_bin))
}

/// Options for the dependent solver.
#[derive(Debug, Clone, Copy)]
pub struct DependentOptions {
    pub prune: bool,
    /// Cap on per-step table entries (spill states times boundary states).
    pub table_cap: usize,
}

impl Default for DependentOptions {
    fn default() -> Self {
        Self { prune: true, table_cap: 100_000_000 }
    }
}

/// Exact `P(E_{n,1:d})` for dependent variables via the boundary-tracking
/// spilling DP.
pub fn solve_dependent<P: ConditionalProvider + ?Sized>(
    query: &OrderQuery,
    micro: &MicroBinSpec,
    schedule: &DependencySchedule,
    cond: &P,
    options: &DependentOptions,
) -> Result<f64> {
    let (n, d) = (query.n(), query.d());
    if schedule.n() != n {
        return Err(Error::Input("schedule does not match query size".into()));
    }
    if micro.d() != d {
        return Err(Error::Input("micro-bin spec does not match query".into()));
    }
    let m = micro.micro_bin_count();
    if cond.micro_bin_count() != m {
        return Err(Error::Input("conditional provider micro-bin count mismatch".into()));
    }
    for (j, &xj) in query.thresholds().iter().enumerate() {
        let b = micro.bounds()[(j + 1) * micro.granularity()];
        if b != xj {
            return Err(Error::Input(format!(
                "micro-bound at threshold {} is {b}, expected {xj}",
                j + 1
            )));
        }
    }

    let deltas = query.deltas();
    let delta = deltas.as_slice();
    let total_delta = deltas.sum();
    let ksize: usize = delta.iter().map(|&dj| dj + 1).collect::<Vec<_>>().iter().product();
    let mut kstrides = Vec::with_capacity(d);
    {
        let mut s = 1;
        for &dj in delta {
            kstrides.push(s);
            s *= dj + 1;
        }
    }
    for i in 1..=n + 1 {
        let b = schedule.bnd(i).len();
        let mut size = ksize as u128;
        for _ in 0..b {
            size = size.saturating_mul(m as u128);
        }
        if size > options.table_cap as u128 {
            return Err(Error::Resource(format!(
                "step {i} table needs {size} entries, cap is {}",
                options.table_cap
            )));
        }
    }

    let boundary_space = |b: usize| -> usize { m.pow(b as u32) };
    let boundary_index = |state: &[usize]| -> usize {
        state.iter().fold(0, |acc, &coord| acc * m + coord)
    };

    // T_0: unit mass at the zero spill state, empty boundary.
    let mut prev = vec![0.0f64; ksize];
    prev[0] = 1.0;

    let mut kappa = vec![0usize; d];
    for i in 1..=n {
        let b_next = schedule.bnd(i + 1);
        let tracked = b_next.contains(&i);
        let next_size = ksize * boundary_space(b_next.len());
        let mut next = vec![0.0f64; next_size];
        // Conditional rows keyed by the neighbor placements they condition on.
        let mut rows: HashMap<Vec<usize>, Vec<f64>> = HashMap::new();

        let mut target = vec![0usize; b_next.len()];
        for b_idx in 0..boundary_space(b_next.len()) {
            let priors = psi(schedule, micro, i, &target)?;
            let tracked_micro = tracked.then(|| *target.last().expect("tracked boundary"));
            // Resolve conditional rows for every prior once per target.
            let mut prior_keys: Vec<(usize, Vec<usize>)> = Vec::with_capacity(priors.len());
            for prior in &priors {
                let nbrs = neighbor_coords(schedule, i, prior)?;
                if !rows.contains_key(&nbrs) {
                    let row = conditional_micro_probs(cond, i, &nbrs)?;
                    rows.insert(nbrs.clone(), row);
                }
                prior_keys.push((boundary_index(prior), nbrs));
            }
            let prior_rows: Vec<(usize, &Vec<f64>)> = prior_keys
                .iter()
                .map(|(idx, nbrs)| (*idx, rows.get(nbrs).expect("cached")))
                .collect();

            kappa.iter_mut().for_each(|k| *k = 0);
            for k_idx in 0..ksize {
                let skip = options.prune && {
                    let deficit = total_delta - kappa.iter().sum::<usize>();
                    deficit > n - i
                };
                if !skip {
                    let mut acc = 0.0;
                    // alpha branch: spill state unchanged.
                    for &(p_idx, row) in &prior_rows {
                        let t = prev[p_idx * ksize + k_idx];
                        if t != 0.0 {
                            acc += t
                                * gamma_from_row(micro, &deltas, row, tracked_micro, &kappa, d + 1);
                        }
                    }
                    // beta branches, incremented bin ascending.
                    for j in 1..=d {
                        if kappa[j - 1] == 0 {
                            continue;
                        }
                        let src = k_idx - kstrides[j - 1];
                        for &(p_idx, row) in &prior_rows {
                            let t = prev[p_idx * ksize + src];
                            if t != 0.0 {
                                acc += t
                                    * gamma_from_row(micro, &deltas, row, tracked_micro, &kappa, j);
                            }
                        }
                    }
                    next[b_idx * ksize + k_idx] = acc;
                }
                for j in 0..d {
                    kappa[j] += 1;
                    if kappa[j] <= delta[j] {
                        break;
                    }
                    kappa[j] = 0;
                }
            }
            // advance the target boundary odometer, last coordinate fastest.
            let mut pos = target.len();
            loop {
                if pos == 0 {
                    break;
                }
                pos -= 1;
                target[pos] += 1;
                if target[pos] < m {
                    break;
                }
                target[pos] = 0;
            }
        }
        prev = next;
    }
    Ok(prev[ksize - 1])
}
