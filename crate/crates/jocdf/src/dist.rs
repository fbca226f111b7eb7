//! Univariate CDF providers for the independent case and the conditional
//! micro-bin interface used by the dependent solver.

use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::Distribution;
use statrs::distribution::ContinuousCDF;

/// Anything that can evaluate a cumulative distribution function.
pub trait Cdf {
    fn cdf(&self, t: f64) -> f64;
}

impl<T: Cdf + ?Sized> Cdf for &T {
    fn cdf(&self, t: f64) -> f64 {
        (*self).cdf(t)
    }
}

/// Closed-form or tabulated univariate distributions.
#[derive(Debug, Clone, PartialEq)]
pub enum CdfProvider {
    Uniform { a: f64, b: f64 },
    Gaussian { mu: f64, sigma: f64 },
    Exponential { rate: f64 },
    /// Finite support with point masses; atoms are kept sorted.
    DiscreteAtoms { points: Vec<f64>, masses: Vec<f64> },
    /// Empirical CDF with the right-closed convention `F(t) = #{s <= t} / N`,
    /// matching the bin convention `I_j = (x_{j-1}, x_j]`.
    Empirical { samples: Vec<f64> },
}

impl CdfProvider {
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidDistribution(format!("uniform bounds ({a}, {b})")));
        }
        Ok(Self::Uniform { a, b })
    }

    pub fn gaussian(mu: f64, sigma: f64) -> Result<Self> {
        if !(mu.is_finite() && sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidDistribution(format!("gaussian params ({mu}, {sigma})")));
        }
        Ok(Self::Gaussian { mu, sigma })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::InvalidDistribution(format!("exponential rate {rate}")));
        }
        Ok(Self::Exponential { rate })
    }

    pub fn discrete_atoms(points: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != masses.len() {
            return Err(Error::InvalidDistribution("atoms/masses length mismatch".into()));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidDistribution("atom positions must be finite".into()));
        }
        if masses.iter().any(|&m| !(0.0..=1.0).contains(&m)) {
            return Err(Error::InvalidDistribution("atom masses must lie in [0, 1]".into()));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution(format!("atom masses sum to {total}")));
        }
        let mut pairs: Vec<(f64, f64)> = points.into_iter().zip(masses).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (points, masses) = pairs.into_iter().unzip();
        Ok(Self::DiscreteAtoms { points, masses })
    }

    pub fn empirical(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() || samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidDistribution("empirical samples must be finite and non-empty".into()));
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self::Empirical { samples })
    }

    /// Evaluates `F(t)`. The infinities are accepted as bin sentinels; any
    /// other non-finite input is an error.
    pub fn cdf_eval(&self, t: f64) -> Result<f64> {
        if t.is_nan() {
            return Err(Error::Input("CDF argument is NaN".into()));
        }
        if t == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        if t == f64::INFINITY {
            return Ok(1.0);
        }
        Ok(match self {
            Self::Uniform { a, b } => ((t - a) / (b - a)).clamp(0.0, 1.0),
            Self::Gaussian { mu, sigma } => {
                statrs::distribution::Normal::new(*mu, *sigma)
                    .expect("validated at construction")
                    .cdf(t)
            }
            Self::Exponential { rate } => {
                if t <= 0.0 {
                    0.0
                } else {
                    1.0 - (-rate * t).exp()
                }
            }
            Self::DiscreteAtoms { points, masses } => points
                .iter()
                .zip(masses)
                .take_while(|(p, _)| **p <= t)
                .map(|(_, m)| m)
                .sum(),
            Self::Empirical { samples } => {
                let count = samples.partition_point(|&s| s <= t);
                count as f64 / samples.len() as f64
            }
        })
    }

    /// Draws one sample; used by the Monte Carlo oracle.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Uniform { a, b } => rng.gen_range(*a..*b),
            Self::Gaussian { mu, sigma } => {
                rand_distr::Normal::new(*mu, *sigma).expect("validated").sample(rng)
            }
            Self::Exponential { rate } => {
                rand_distr::Exp::new(*rate).expect("validated").sample(rng)
            }
            Self::DiscreteAtoms { points, masses } => {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (p, m) in points.iter().zip(masses) {
                    acc += m;
                    if u <= acc {
                        return *p;
                    }
                }
                *points.last().expect("non-empty")
            }
            Self::Empirical { samples } => {
                let idx = rng.gen_range(0..samples.len());
                samples[idx]
            }
        }
    }
}

impl Cdf for CdfProvider {
    fn cdf(&self, t: f64) -> f64 {
        // Sentinels and finite arguments are infallible; NaN is the only
        // error path and is screened by query validation.
        self.cdf_eval(t).unwrap_or(f64::NAN)
    }
}

/// Micro-bin location as a `(bin, micro)` pair, both 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MicroBin {
    pub bin: usize,
    pub micro: usize,
}

/// Conditional distribution of a variable over micro-bins given the
/// micro-bin locations of its lower-indexed graph neighbors.
pub trait ConditionalProvider {
    /// Total number of micro-bins, `(d + 1) * H`.
    fn micro_bin_count(&self) -> usize;

    /// Probability vector of length `micro_bin_count()` for variable `i`
    /// (1-based), flat-indexed with bin-major order:
    /// `flat = (bin - 1) * H + (micro - 1)`.
    fn micro_probs(&self, i: usize, neighbor_locations: &[usize]) -> Result<Vec<f64>>;
}

/// Fetches and validates a conditional row: non-negative entries summing to 1
/// within 1e-12.
pub fn conditional_micro_probs<P: ConditionalProvider + ?Sized>(
    provider: &P,
    i: usize,
    neighbor_locations: &[usize],
) -> Result<Vec<f64>> {
    let row = provider.micro_probs(i, neighbor_locations)?;
    if row.len() != provider.micro_bin_count() {
        return Err(Error::InvalidConditional(format!(
            "row for variable {i} has length {}, expected {}",
            row.len(),
            provider.micro_bin_count()
        )));
    }
    let mut sum = 0.0;
    for &v in &row {
        if !(v >= 0.0) {
            return Err(Error::InvalidConditional(format!(
                "negative or NaN mass {v} for variable {i}"
            )));
        }
        sum += v;
    }
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidConditional(format!(
            "row for variable {i} sums to {sum}"
        )));
    }
    Ok(row)
}
