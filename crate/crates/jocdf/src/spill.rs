//! The spilling dynamic program for independent variables.
//!
//! Raw bin-count vectors are compressed by the spilling transform `S`, which
//! caps bin `j` at `delta_j = c_j - c_{j-1}` balls and cascades overflow to
//! the right. The joint CDF is the probability that the compressed state
//! reaches the all-full state `delta` after all `n` balls are thrown, which a
//! small table recurrence computes in `O(d^2 n prod(1 + delta_j))` time.

use crate::error::{Error, Result};
use crate::query::{BinProbabilityMatrix, Deltas, OrderQuery};

/// The spilling transform `S`: compresses a raw count vector into the state
/// space `{0..delta_1} x ... x {0..delta_d}`.
///
/// `S_j(k) = min(delta_j, max(0, max_{j' <= j} (sum_{i=j'..j} k_i -
/// sum_{i=j'..j-1} delta_i)))`. The inner max is floored at zero so empty
/// early bins cannot drive a component negative.
pub fn spill_transform(k: &[usize], deltas: &Deltas) -> Result<Vec<usize>> {
    let d = deltas.len();
    if k.len() != d {
        return Err(Error::Input(format!(
            "count vector has length {}, expected {d}",
            k.len()
        )));
    }
    let delta = deltas.as_slice();
    let mut out = Vec::with_capacity(d);
    for j in 0..d {
        // best over j' = j, j-1, ..., 0 of sum(k[j'..=j]) - sum(delta[j'..j])
        let mut balls: i64 = 0;
        let mut demand: i64 = 0;
        let mut best: i64 = 0;
        for jp in (0..=j).rev() {
            balls += k[jp] as i64;
            if jp < j {
                demand += delta[jp] as i64;
            }
            let candidate = balls - demand;
            if candidate > best {
                best = candidate;
            }
        }
        out.push((best.max(0) as usize).min(delta[j]));
    }
    Ok(out)
}

/// Source-bin set `sigma(j, kappa)`: the contiguous range of bins from which
/// a thrown ball lands in or cascades into bin `j`.
///
/// Returns the inclusive 1-based range `start..=j`, where `start` is found by
/// walking left from `j` across full bins (`kappa_i = delta_i`).
pub fn sigma(j: usize, kappa: &[usize], deltas: &Deltas) -> std::ops::RangeInclusive<usize> {
    debug_assert!(j >= 1 && j <= deltas.len() + 1);
    let delta = deltas.as_slice();
    let mut start = j;
    while start > 1 && kappa[start - 2] == delta[start - 2] {
        start -= 1;
    }
    start..=j
}

/// Dense probability table over compressed spill states.
///
/// Addressed by a mixed-radix index with `kappa_1` as the fastest-varying
/// digit; logical size `prod_j (1 + delta_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpillTable {
    dims: Vec<usize>,
    values: Vec<f64>,
}

impl SpillTable {
    /// Unit mass at the all-zero state.
    pub fn initial(deltas: &Deltas) -> Self {
        let dims: Vec<usize> = deltas.as_slice().iter().map(|&d| d + 1).collect();
        let size = dims.iter().product();
        let mut values = vec![0.0; size];
        values[0] = 1.0;
        Self { dims, values }
    }

    fn zeroed_like(other: &Self) -> Self {
        Self { dims: other.dims.clone(), values: vec![0.0; other.values.len()] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mixed-radix index of a state vector.
    pub fn index_of(&self, kappa: &[usize]) -> usize {
        let mut idx = 0;
        let mut stride = 1;
        for (j, &k) in kappa.iter().enumerate() {
            idx += k * stride;
            stride *= self.dims[j];
        }
        idx
    }

    pub fn get(&self, kappa: &[usize]) -> f64 {
        self.values[self.index_of(kappa)]
    }

    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Solver switches; pruning is on by default and the sigma-sum precompute is
/// opt-in (it trades a factor-`d` of memory for a factor-`d` of time).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveOptions {
    pub prune: bool,
    pub precompute_sums: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { prune: true, precompute_sums: false }
    }
}

/// Canonical sigma-sum: `sum_{j' in start..=end.min(d)} p_row[j' - 1]`,
/// accumulated in ascending `j'` so both step variants are bitwise identical.
#[inline]
fn sigma_sum(p_row: &[f64], start: usize, end: usize) -> f64 {
    let mut s = 0.0;
    for jp in start..=end {
        s += p_row[jp - 1];
    }
    s
}

/// One application of the table recurrence: throws ball `i` with bin
/// probabilities `p_row` into the distribution held by `prev`.
///
/// With `prune_bound = Some(r)`, entries whose remaining deficit
/// `sum_j (delta_j - kappa_j)` exceeds the remaining ball count `r` are
/// skipped and left at zero.
pub fn spill_step(
    prev: &SpillTable,
    p_row: &[f64],
    deltas: &Deltas,
    prune_bound: Option<usize>,
    precompute_sums: bool,
) -> Result<SpillTable> {
    let d = deltas.len();
    if prev.dims.len() != d {
        return Err(Error::Input("table dimension does not match deltas".into()));
    }
    if p_row.len() != d + 1 {
        return Err(Error::Input(format!(
            "probability row has length {}, expected {}",
            p_row.len(),
            d + 1
        )));
    }
    let delta = deltas.as_slice();
    let total_delta: usize = deltas.sum();

    // Strides for kappa - e_j lookups; kappa_1 fastest.
    let mut strides = Vec::with_capacity(d);
    let mut s = 1;
    for &dim in &prev.dims {
        strides.push(s);
        s *= dim;
    }

    // Optional cache of sigma sums keyed by (end bin, run start).
    let sums: Option<Vec<Vec<f64>>> = if precompute_sums {
        Some(
            (0..=d + 1)
                .map(|end| {
                    (0..=end)
                        .map(|start| {
                            if start == 0 || end == 0 {
                                0.0
                            } else {
                                sigma_sum(p_row, start, end)
                            }
                        })
                        .collect()
                })
                .collect(),
        )
    } else {
        None
    };

    let coeff = |start: usize, end: usize| -> f64 {
        match &sums {
            Some(table) => table[end][start],
            None => sigma_sum(p_row, start, end),
        }
    };

    let mut next = SpillTable::zeroed_like(prev);
    let mut kappa = vec![0usize; d];
    for idx in 0..prev.values.len() {
        let skip = match prune_bound {
            Some(remaining) => {
                let deficit: usize = total_delta - kappa.iter().sum::<usize>();
                deficit > remaining
            }
            None => false,
        };
        if !skip {
            // alpha term: ball lands in or spills past bin d + 1.
            let run = sigma(d + 1, &kappa, deltas);
            let mut acc = coeff(*run.start(), d + 1) * prev.values[idx];
            // beta terms, j ascending.
            for j in 1..=d {
                if kappa[j - 1] == 0 {
                    continue;
                }
                let run = sigma(j, &kappa, deltas);
                acc += prev.values[idx - strides[j - 1]] * coeff(*run.start(), j);
            }
            next.values[idx] = acc;
        }
        // advance mixed-radix odometer
        for j in 0..d {
            kappa[j] += 1;
            if kappa[j] <= delta[j] {
                break;
            }
            kappa[j] = 0;
        }
    }
    Ok(next)
}

/// Runs the full spilling DP and returns `P(E_{n,1:d})`, the probability that
/// all bin conditions hold.
pub fn solve_independent(
    query: &OrderQuery,
    p: &BinProbabilityMatrix,
    options: &SolveOptions,
) -> Result<f64> {
    if p.n() != query.n() {
        return Err(Error::Input(format!(
            "matrix has {} rows for n = {}",
            p.n(),
            query.n()
        )));
    }
    if p.width() != query.d() + 1 {
        return Err(Error::Input(format!(
            "matrix has {} bins for d = {}",
            p.width(),
            query.d()
        )));
    }
    let deltas = query.deltas();
    let n = query.n();
    let mut table = SpillTable::initial(&deltas);
    for i in 1..=n {
        let prune_bound = options.prune.then_some(n - i);
        table = spill_step(&table, p.row(i - 1), &deltas, prune_bound, options.precompute_sums)?;
    }
    Ok(table.values[table.values.len() - 1])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn deltas(v: &[usize]) -> Deltas {
        Deltas::from_gaps(v.to_vec()).unwrap()
    }

    #[test]
    fn transform_examples() {
        let d = deltas(&[2, 1]);
        assert_eq!(spill_transform(&[0, 0], &d).unwrap(), vec![0, 0]);
        assert_eq!(spill_transform(&[3, 0], &d).unwrap(), vec![2, 1]);
        assert_eq!(spill_transform(&[0, 3], &d).unwrap(), vec![0, 1]);
        let d = deltas(&[1, 1]);
        assert_eq!(spill_transform(&[1, 1], &d).unwrap(), vec![1, 1]);
    }

    #[test]
    fn transform_rejects_dimension_mismatch() {
        let d = deltas(&[1, 1]);
        assert!(spill_transform(&[1], &d).is_err());
    }

    #[test]
    fn sigma_examples() {
        let d = deltas(&[2, 1]);
        assert_eq!(sigma(1, &[0, 0], &d), 1..=1);
        assert_eq!(sigma(2, &[2, 0], &d), 1..=2);
        assert_eq!(sigma(3, &[2, 1], &d), 1..=3);
        assert_eq!(sigma(3, &[1, 1], &d), 2..=3);
        assert_eq!(sigma(2, &[1, 0], &d), 2..=2);
    }

    #[test]
    fn single_ball_step() {
        let d = deltas(&[1]);
        let t0 = SpillTable::initial(&d);
        let t1 = spill_step(&t0, &[0.4, 0.6], &d, None, false).unwrap();
        assert_eq!(t1.get(&[0]), 0.6);
        assert_eq!(t1.get(&[1]), 0.4);
    }

    #[test]
    fn two_bin_single_step() {
        let d = deltas(&[1, 1]);
        let t0 = SpillTable::initial(&d);
        let (a, b, c) = (0.2, 0.3, 0.5);
        let t1 = spill_step(&t0, &[a, b, c], &d, None, false).unwrap();
        assert_eq!(t1.get(&[0, 0]), c);
        assert_eq!(t1.get(&[1, 0]), a);
        assert_eq!(t1.get(&[0, 1]), b);
        assert_eq!(t1.get(&[1, 1]), 0.0);
    }

    #[test]
    fn accepting_state_is_absorbing() {
        let d = deltas(&[1, 2]);
        let mut t = SpillTable::initial(&d);
        let rows = [[0.5, 0.2, 0.3], [0.1, 0.6, 0.3], [0.3, 0.3, 0.4], [0.2, 0.5, 0.3]];
        let mut prev_mass = 0.0;
        for row in rows {
            t = spill_step(&t, &row, &d, None, false).unwrap();
            let full = t.get(&[1, 2]);
            assert!(full >= prev_mass - 1e-15);
            prev_mass = full;
        }
    }

    #[test]
    fn step_preserves_mass() {
        let d = deltas(&[2, 1, 3]);
        let mut t = SpillTable::initial(&d);
        for i in 0..8 {
            let a = 0.1 + 0.05 * (i as f64);
            let b = 0.3 - 0.02 * (i as f64);
            let c = 0.25;
            let rest = 1.0 - a - b - c;
            t = spill_step(&t, &[a, b, c, rest], &d, None, false).unwrap();
            assert!((t.total_mass() - 1.0).abs() < 1e-12 * 8.0);
        }
    }

    #[test]
    fn solve_single_variable() {
        let q = OrderQuery::new(vec![1], vec![0.0], 1).unwrap();
        let p = BinProbabilityMatrix::from_rows(vec![vec![0.4, 0.6]]).unwrap();
        let r = solve_independent(&q, &p, &SolveOptions::default()).unwrap();
        assert_eq!(r, 0.4);
    }

    #[test]
    fn solve_median_of_symmetric_bins() {
        let q = OrderQuery::new(vec![3], vec![0.0], 5).unwrap();
        let p = BinProbabilityMatrix::from_rows(vec![vec![0.5, 0.5]; 5]).unwrap();
        let r = solve_independent(&q, &p, &SolveOptions::default()).unwrap();
        assert!((r - 0.5).abs() < 1e-15);
    }

    #[test]
    fn solve_all_mass_in_first_bin() {
        let q = OrderQuery::new(vec![4], vec![0.0], 4).unwrap();
        let p = BinProbabilityMatrix::from_rows(vec![vec![1.0, 0.0]; 4]).unwrap();
        let r = solve_independent(&q, &p, &SolveOptions::default()).unwrap();
        assert_eq!(r, 1.0);
    }

    #[test]
    fn iid_uniform_three_balls() {
        // P(X_(1) <= 1/3, X_(2) <= 2/3) over three uniform variables; the
        // 16/27 reference comes from the brute-force oracle.
        let q = OrderQuery::new(vec![1, 2], vec![1.0 / 3.0, 2.0 / 3.0], 3).unwrap();
        let p = BinProbabilityMatrix::from_rows(vec![vec![1.0 / 3.0; 3]; 3]).unwrap();
        let r = solve_independent(&q, &p, &SolveOptions::default()).unwrap();
        assert!((r - 16.0 / 27.0).abs() < 1e-12);
    }

    #[test]
    fn precompute_variant_is_bitwise_identical() {
        let q = OrderQuery::new(vec![2, 5, 6], vec![0.2, 0.5, 0.8], 9).unwrap();
        let rows: Vec<Vec<f64>> = (0..9)
            .map(|i| {
                let a = 0.1 + 0.02 * i as f64;
                let b = 0.3 - 0.01 * i as f64;
                let c = 0.2;
                vec![a, b, c, 1.0 - a - b - c]
            })
            .collect();
        let p = BinProbabilityMatrix::from_rows(rows).unwrap();
        for prune in [false, true] {
            let base = solve_independent(
                &q,
                &p,
                &SolveOptions { prune, precompute_sums: false },
            )
            .unwrap();
            let fast = solve_independent(
                &q,
                &p,
                &SolveOptions { prune, precompute_sums: true },
            )
            .unwrap();
            assert_eq!(base.to_bits(), fast.to_bits());
        }
    }
}
