//! Problem specification file format (JSON). Unknown keys are hard errors
//! so a typo never silently changes the problem being solved.

use jocdf::*;
use serde::Deserialize;

#[derive(Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Independent,
    Chain,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistSpec {
    name: String,
    a: Option<f64>,
    b: Option<f64>,
    mu: Option<f64>,
    sigma: Option<f64>,
    rate: Option<f64>,
    points: Option<Vec<f64>>,
    masses: Option<Vec<f64>>,
    samples: Option<Vec<f64>>,
}

impl DistSpec {
    fn build(&self) -> Result<CdfProvider> {
        let need = |v: Option<f64>, key: &str| {
            v.ok_or_else(|| Error::Input(format!("distribution {:?} needs {key}", self.name)))
        };
        match self.name.as_str() {
            "uniform" => CdfProvider::uniform(need(self.a, "a")?, need(self.b, "b")?),
            "gaussian" => CdfProvider::gaussian(need(self.mu, "mu")?, need(self.sigma, "sigma")?),
            "exponential" => CdfProvider::exponential(need(self.rate, "rate")?),
            "atoms" => {
                let points = self.points.clone().ok_or_else(|| {
                    Error::Input("distribution \"atoms\" needs points".into())
                })?;
                let masses = self.masses.clone().ok_or_else(|| {
                    Error::Input("distribution \"atoms\" needs masses".into())
                })?;
                CdfProvider::discrete_atoms(points, masses)
            }
            "empirical" => {
                let samples = self.samples.clone().ok_or_else(|| {
                    Error::Input("distribution \"empirical\" needs samples".into())
                })?;
                CdfProvider::empirical(samples)
            }
            other => Err(Error::Input(format!("unknown distribution {other:?}"))),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
pub enum DistributionsField {
    Shared(DistSpec),
    PerVariable(Vec<DistSpec>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    q_dn: Option<f64>,
    q_0: Option<f64>,
    q_up: Option<f64>,
    steps: Option<Vec<StepSpec>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSpec {
    offset: i64,
    prob: f64,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OptionsSpec {
    prune: Option<bool>,
    precompute_sums: Option<bool>,
    h: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    kind: Kind,
    n: usize,
    c: Vec<usize>,
    x: Vec<f64>,
    distributions: Option<DistributionsField>,
    kernel: Option<KernelSpec>,
    initial: Option<i64>,
    bounds: Option<(i64, i64)>,
    algorithm: Option<String>,
    trials: Option<u64>,
    seed: Option<u64>,
    options: Option<OptionsSpec>,
}

pub struct LoadedProblem {
    pub query: OrderQuery,
    pub distributions: Vec<CdfProvider>,
    pub chain: Option<MarkovChainSpec>,
    pub algorithm: String,
    pub trials: u64,
    pub seed: u64,
    pub options: SolveOptions,
}

impl LoadedProblem {
    pub fn matrix(&self) -> Result<BinProbabilityMatrix> {
        bin_probabilities(&self.query, &self.distributions)
    }
}

impl ProblemSpec {
    pub fn load(&self) -> Result<LoadedProblem> {
        let query = OrderQuery::new(self.c.clone(), self.x.clone(), self.n)?;
        let opts = self.options.as_ref();
        if let Some(h) = opts.and_then(|o| o.h) {
            if h == 0 {
                return Err(Error::Input("options.h must be at least 1".into()));
            }
        }
        let options = SolveOptions {
            prune: opts.and_then(|o| o.prune).unwrap_or(true),
            precompute_sums: opts.and_then(|o| o.precompute_sums).unwrap_or(false),
        };
        let (distributions, chain) = match self.kind {
            Kind::Independent => {
                if self.kernel.is_some() || self.initial.is_some() || self.bounds.is_some() {
                    return Err(Error::Input(
                        "kernel, initial, and bounds apply only to chain problems".into(),
                    ));
                }
                let field = self.distributions.as_ref().ok_or_else(|| {
                    Error::Input("independent problems need distributions".into())
                })?;
                let dists = match field {
                    DistributionsField::Shared(spec) => {
                        let d = spec.build()?;
                        vec![d; self.n]
                    }
                    DistributionsField::PerVariable(specs) => {
                        if specs.len() != self.n {
                            return Err(Error::Input(format!(
                                "got {} distributions for n = {}",
                                specs.len(),
                                self.n
                            )));
                        }
                        specs.iter().map(DistSpec::build).collect::<Result<_>>()?
                    }
                };
                (dists, None)
            }
            Kind::Chain => {
                if self.distributions.is_some() {
                    return Err(Error::Input(
                        "distributions apply only to independent problems".into(),
                    ));
                }
                let kernel = self
                    .kernel
                    .as_ref()
                    .ok_or_else(|| Error::Input("chain problems need a kernel".into()))?;
                let steps = match (&kernel.steps, kernel.q_dn, kernel.q_0, kernel.q_up) {
                    (Some(steps), None, None, None) => steps
                        .iter()
                        .map(|s| KernelStep { offset: s.offset, prob: s.prob })
                        .collect(),
                    (None, Some(qd), Some(q0), Some(qu)) => vec![
                        KernelStep { offset: -1, prob: qd },
                        KernelStep { offset: 0, prob: q0 },
                        KernelStep { offset: 1, prob: qu },
                    ],
                    _ => {
                        return Err(Error::Input(
                            "kernel needs either steps or all of q_dn, q_0, q_up".into(),
                        ))
                    }
                };
                let chain =
                    MarkovChainSpec::new(self.initial.unwrap_or(0), steps, self.bounds)?;
                (Vec::new(), Some(chain))
            }
        };
        Ok(LoadedProblem {
            query,
            distributions,
            chain,
            algorithm: self.algorithm.clone().unwrap_or_else(|| "spill".into()),
            trials: self.trials.unwrap_or(10_000),
            seed: self.seed.unwrap_or(0),
            options,
        })
    }
}
