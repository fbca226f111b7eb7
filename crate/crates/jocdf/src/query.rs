//! Problem statement: order-statistic indices, thresholds, and the
//! bin-probability matrix consumed by every solver.
//!
//! A query asks for `P(X_(c_1) <= x_1, ..., X_(c_d) <= x_d)` over `n`
//! variables. The thresholds partition the real line into `d + 1` bins
//! `I_j = (x_{j-1}, x_j]` (with the open right tail as bin `d + 1`), and the
//! matrix entry `p[i][j] = F_i(x_j) - F_i(x_{j-1})` is the probability that
//! variable `i` lands in bin `j`.

use crate::dist::Cdf;
use crate::error::{Error, Result};

/// Tolerance for bin-probability row sums.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// A validated, canonicalized joint order-statistic CDF query.
///
/// Invariants held after construction:
/// - `1 <= d <= n`,
/// - `c` strictly increasing with entries in `[1, n]`,
/// - `x` non-decreasing (rewritten via the suffix-min envelope, which leaves
///   the queried probability unchanged because `X_(c_j) <= X_(c_k)` for
///   `j < k`).
#[derive(Debug, Clone, PartialEq)]
pub struct OrderQuery {
    n: usize,
    c: Vec<usize>,
    x: Vec<f64>,
}

impl OrderQuery {
    /// Validates the raw inputs and canonicalizes the thresholds.
    ///
    /// Duplicate or non-increasing indices are rejected rather than merged;
    /// callers wanting a merge take the min threshold themselves. Thresholds
    /// need not arrive sorted: they are replaced by the suffix-min envelope
    /// `x'_j = min(x_j, x'_{j+1})`.
    pub fn new(c: Vec<usize>, x: Vec<f64>, n: usize) -> Result<Self> {
        if c.is_empty() {
            return Err(Error::Validation("at least one order statistic is required".into()));
        }
        if c.len() != x.len() {
            return Err(Error::Validation(format!(
                "index and threshold vectors differ in length ({} vs {})",
                c.len(),
                x.len()
            )));
        }
        if c.len() > n {
            return Err(Error::Range(format!("d = {} exceeds n = {}", c.len(), n)));
        }
        for (j, &cj) in c.iter().enumerate() {
            if cj < 1 || cj > n {
                return Err(Error::Range(format!("c[{j}] = {cj} outside [1, {n}]")));
            }
            if j > 0 && cj <= c[j - 1] {
                return Err(Error::Validation(format!(
                    "order-statistic indices must be strictly increasing (c[{}] = {} after {})",
                    j,
                    cj,
                    c[j - 1]
                )));
            }
        }
        if x.iter().any(|v| v.is_nan()) {
            return Err(Error::Validation("thresholds must not be NaN".into()));
        }
        let mut x = x;
        // Suffix-min envelope: x'_d = x_d, x'_j = min(x_j, x'_{j+1}).
        for j in (0..x.len().saturating_sub(1)).rev() {
            if x[j] > x[j + 1] {
                x[j] = x[j + 1];
            }
        }
        Ok(Self { n, c, x })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of selected order statistics.
    pub fn d(&self) -> usize {
        self.c.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.c
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.x
    }

    /// Gap vector `delta_j = c_j - c_{j-1}` with `c_0 = 0`.
    pub fn deltas(&self) -> Deltas {
        let mut prev = 0;
        let delta = self
            .c
            .iter()
            .map(|&cj| {
                let d = cj - prev;
                prev = cj;
                d
            })
            .collect();
        Deltas { delta }
    }

    /// Bin bounds including the infinite sentinels: `-inf, x_1, ..., x_d, +inf`.
    pub fn bin_bounds(&self) -> Vec<f64> {
        let mut b = Vec::with_capacity(self.d() + 2);
        b.push(f64::NEG_INFINITY);
        b.extend_from_slice(&self.x);
        b.push(f64::INFINITY);
        b
    }
}

/// Gaps between consecutive order-statistic indices.
///
/// Each `delta_j >= 1` and their sum is `c_d <= n`; `delta_j` is the number
/// of balls bin `j` must hold in the compressed spill state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Deltas {
    delta: Vec<usize>,
}

impl Deltas {
    /// Builds a delta vector directly; intended for tests and low-level use.
    pub fn from_gaps(delta: Vec<usize>) -> Result<Self> {
        if delta.is_empty() || delta.iter().any(|&d| d == 0) {
            return Err(Error::Validation("every delta must be >= 1".into()));
        }
        Ok(Self { delta })
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.delta
    }

    pub fn len(&self) -> usize {
        self.delta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta.is_empty()
    }

    pub fn sum(&self) -> usize {
        self.delta.iter().sum()
    }
}

/// Per-variable bin occupancy probabilities: `n` rows of `d + 1` entries.
#[derive(Debug, Clone, PartialEq)]
pub struct BinProbabilityMatrix {
    rows: usize,
    width: usize,
    p: Vec<f64>,
}

impl BinProbabilityMatrix {
    /// Wraps a raw row-major matrix, clamping tiny negative entries and
    /// renormalizing rows that deviate from 1 by at most [`ROW_SUM_TOL`].
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Input("matrix must have at least one row".into()));
        }
        let width = rows[0].len();
        if width < 2 {
            return Err(Error::Input("matrix rows need at least two bins".into()));
        }
        let mut p = Vec::with_capacity(rows.len() * width);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::Input(format!("row {i} has ragged width")));
            }
            p.extend(normalize_row(row, i)?);
        }
        Ok(Self { rows: rows.len(), width, p })
    }

    pub fn n(&self) -> usize {
        self.rows
    }

    /// Number of bins (`d + 1`).
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.p[i * self.width..(i + 1) * self.width]
    }

    /// Returns a copy with rows permuted; used by order-invariance checks.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.rows {
            return Err(Error::Input("permutation length mismatch".into()));
        }
        let mut p = Vec::with_capacity(self.p.len());
        for &i in perm {
            p.extend_from_slice(self.row(i));
        }
        Ok(Self { rows: self.rows, width: self.width, p })
    }
}

fn normalize_row(row: &[f64], i: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(row.len());
    for (j, &v) in row.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::InvalidDistribution(format!(
                "p[{i}][{j}] = {v} is not finite"
            )));
        }
        if v < -ROW_SUM_TOL {
            return Err(Error::InvalidDistribution(format!(
                "p[{i}][{j}] = {v} is negative"
            )));
        }
        out.push(v.max(0.0));
    }
    let sum: f64 = out.iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOL {
        return Err(Error::InvalidDistribution(format!(
            "row {i} sums to {sum}, not 1"
        )));
    }
    if sum != 1.0 {
        for v in &mut out {
            *v /= sum;
        }
    }
    Ok(out)
}

/// Evaluates the bin-probability matrix `p[i][j] = F_i(x_j) - F_i(x_{j-1})`
/// for one CDF provider per variable.
pub fn bin_probabilities<C: Cdf>(query: &OrderQuery, dists: &[C]) -> Result<BinProbabilityMatrix> {
    if dists.len() != query.n() {
        return Err(Error::Input(format!(
            "expected {} distributions, got {}",
            query.n(),
            dists.len()
        )));
    }
    let x = query.thresholds();
    let mut rows = Vec::with_capacity(query.n());
    for (i, dist) in dists.iter().enumerate() {
        let mut row = Vec::with_capacity(query.d() + 1);
        let mut prev = 0.0;
        for &t in x {
            let f = dist.cdf(t);
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::InvalidDistribution(format!(
                    "F_{i}({t}) = {f} outside [0, 1]"
                )));
            }
            if f < prev - ROW_SUM_TOL {
                return Err(Error::InvalidDistribution(format!(
                    "F_{i} decreases across thresholds ({prev} -> {f})"
                )));
            }
            row.push((f - prev).max(0.0));
            prev = prev.max(f);
        }
        row.push((1.0 - prev).max(0.0));
        rows.push(row);
    }
    BinProbabilityMatrix::from_rows(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::CdfProvider;

    #[test]
    fn suffix_min_envelope_rewrites_thresholds() {
        let q = OrderQuery::new(vec![2, 3], vec![0.9, 0.5], 5).unwrap();
        assert_eq!(q.thresholds(), &[0.5, 0.5]);
    }

    #[test]
    fn monotone_thresholds_unchanged() {
        let q = OrderQuery::new(vec![1, 2], vec![1.0 / 3.0, 2.0 / 3.0], 3).unwrap();
        assert_eq!(q.thresholds(), &[1.0 / 3.0, 2.0 / 3.0]);
    }

    #[test]
    fn duplicate_index_rejected() {
        let err = OrderQuery::new(vec![2, 2], vec![0.1, 0.2], 4).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn out_of_range_index_rejected() {
        assert!(matches!(
            OrderQuery::new(vec![0], vec![0.0], 3),
            Err(Error::Range(_))
        ));
        assert!(matches!(
            OrderQuery::new(vec![4], vec![0.0], 3),
            Err(Error::Range(_))
        ));
        assert!(matches!(
            OrderQuery::new(vec![1, 2, 3], vec![0.0, 0.1, 0.2], 2),
            Err(Error::Range(_))
        ));
    }

    #[test]
    fn canonicalization_is_idempotent() {
        let q = OrderQuery::new(vec![1, 3, 4], vec![2.0, 0.5, 1.5], 6).unwrap();
        let q2 = OrderQuery::new(q.indices().to_vec(), q.thresholds().to_vec(), q.n()).unwrap();
        assert_eq!(q, q2);
    }

    #[test]
    fn deltas_from_indices() {
        let q = OrderQuery::new(vec![1, 2, 3], vec![0.0, 0.1, 0.2], 5).unwrap();
        assert_eq!(q.deltas().as_slice(), &[1, 1, 1]);
        let q = OrderQuery::new(vec![2, 3], vec![0.0, 0.1], 5).unwrap();
        assert_eq!(q.deltas().as_slice(), &[2, 1]);
        let q = OrderQuery::new(vec![5], vec![0.0], 5).unwrap();
        assert_eq!(q.deltas().as_slice(), &[5]);
    }

    #[test]
    fn uniform_bin_probabilities() {
        let q = OrderQuery::new(vec![1, 2], vec![1.0 / 3.0, 2.0 / 3.0], 3).unwrap();
        let dists = vec![CdfProvider::uniform(0.0, 1.0).unwrap(); 3];
        let p = bin_probabilities(&q, &dists).unwrap();
        for i in 0..3 {
            for &v in p.row(i) {
                assert!((v - 1.0 / 3.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn duplicate_thresholds_give_empty_bin() {
        let q = OrderQuery::new(vec![1, 2], vec![0.5, 0.5], 2).unwrap();
        let dists = vec![CdfProvider::uniform(0.0, 1.0).unwrap(); 2];
        let p = bin_probabilities(&q, &dists).unwrap();
        assert_eq!(p.row(0)[1], 0.0);
    }

    #[test]
    fn point_mass_left_of_threshold() {
        let q = OrderQuery::new(vec![1], vec![0.5], 1).unwrap();
        let dists = vec![CdfProvider::discrete_atoms(vec![0.4], vec![1.0]).unwrap()];
        let p = bin_probabilities(&q, &dists).unwrap();
        assert_eq!(p.row(0), &[1.0, 0.0]);
    }
}
