//! Problem families: losses, samplers, population losses, and constant presets.
//!
//! Regularity presets follow each family's stated orders with unit constants.

mod models;

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use models::{
    check_loss, check_loss_minimizer_1d, GaussianMeanLoss, HingeLoss, LinearOptLoss, LinearRegressionLoss,
    LogisticLoss, NewsvendorLoss, QuantileLoss,
};

use crate::domain::{
    dist2, FeasibleSet, LossModel, MonteCarloSpec, PopulationLoss, Regularity, RegularityConstants, SampleBatch,
};
use crate::error::{Result, SawsError};
use crate::rng::{Purpose, SeedTree, StreamRng};
use crate::solvers::{minimize_iterative, SolverBudget, StepRule};

fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn yes() -> bool {
    true
}

/// One of the seven families, with its family-specific parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProblemFamily {
    /// `z ~ N(theta*, sigma0^2 I)`, square loss.
    GaussianMean {
        #[serde(default = "one")]
        sigma0: f64,
    },
    /// `x ~ N(0, diag(cov_diag))`, `y = x.theta* + noise * N(0, 1)`.
    LinearRegression {
        #[serde(default = "one")]
        noise: f64,
        #[serde(default)]
        cov_diag: Option<Vec<f64>>,
    },
    /// `x ~ sigma0 N(0, I)`, `P(y = 1 | x) = 1 / (1 + exp(-x.theta*))`.
    LogisticRegression {
        #[serde(default = "one")]
        sigma0: f64,
        #[serde(default = "half")]
        gamma: f64,
    },
    /// `z = sqrt(d) x o y` with `P(x_j = 1) = 1/2 + mu_j`, `y` a uniform basis vector.
    LinearOpt,
    /// `y = x.theta* + Laplace(0, 1)`, with `x_1 = 1` when `intercept`.
    QuantileRegression {
        #[serde(default = "half")]
        nu: f64,
        #[serde(default = "one")]
        sigma0: f64,
        #[serde(default = "yes")]
        intercept: bool,
    },
    /// Demand `z ~ N(mu_n, sigma0^2)`.
    Newsvendor {
        #[serde(default = "one")]
        c1: f64,
        #[serde(default = "one")]
        c2: f64,
        #[serde(default = "one")]
        sigma0: f64,
    },
    /// `x ~ sigma0 N(0, I)`, labels in `{-1, 1}` from a logistic teacher.
    Svm {
        #[serde(default = "one")]
        sigma0: f64,
    },
}

impl ProblemFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemFamily::GaussianMean { .. } => "gaussian-mean",
            ProblemFamily::LinearRegression { .. } => "linear-regression",
            ProblemFamily::LogisticRegression { .. } => "logistic-regression",
            ProblemFamily::LinearOpt => "linear-opt",
            ProblemFamily::QuantileRegression { .. } => "quantile-regression",
            ProblemFamily::Newsvendor { .. } => "newsvendor",
            ProblemFamily::Svm { .. } => "svm",
        }
    }

    pub fn regularity(&self) -> Regularity {
        match self {
            ProblemFamily::GaussianMean { .. }
            | ProblemFamily::LinearRegression { .. }
            | ProblemFamily::LogisticRegression { .. } => Regularity::StronglyConvex,
            _ => Regularity::Lipschitz,
        }
    }

    /// Feasible set used when the configuration gives none.
    pub fn default_set(&self, d: usize) -> Result<FeasibleSet> {
        match self {
            ProblemFamily::LinearOpt => FeasibleSet::cube(d, 1.0 / (d as f64).sqrt()),
            ProblemFamily::Newsvendor { .. } => FeasibleSet::interval(-10.0, 10.0),
            _ => FeasibleSet::centered_ball(d, 1.0),
        }
    }

    /// Parameter errors, one message per violated condition.
    fn check_parameters(&self, d: usize) -> Vec<String> {
        let mut errs = Vec::new();
        let mut nonneg = |what: &str, v: f64| {
            if !(v.is_finite() && v >= 0.0) {
                errs.push(format!("{}: {what} must be finite and >= 0 (got {v})", self.name()));
            }
        };
        match self {
            ProblemFamily::GaussianMean { sigma0 } | ProblemFamily::Svm { sigma0 } => nonneg("sigma0", *sigma0),
            ProblemFamily::LinearRegression { noise, cov_diag } => {
                nonneg("noise", *noise);
                if let Some(c) = cov_diag {
                    if c.len() != d {
                        errs.push(format!("linear-regression: cov_diag has length {} but d = {d}", c.len()));
                    }
                    if c.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                        errs.push("linear-regression: cov_diag entries must be > 0".into());
                    }
                }
            }
            ProblemFamily::LogisticRegression { sigma0, gamma } => {
                nonneg("sigma0", *sigma0);
                if !(*gamma > 0.0 && *gamma < 1.0) {
                    errs.push(format!("logistic-regression: gamma must lie in (0, 1) (got {gamma})"));
                }
            }
            ProblemFamily::LinearOpt => {}
            ProblemFamily::QuantileRegression { nu, sigma0, .. } => {
                nonneg("sigma0", *sigma0);
                if !(0.0..=1.0).contains(nu) {
                    errs.push(format!("quantile-regression: nu must lie in [0, 1] (got {nu})"));
                }
            }
            ProblemFamily::Newsvendor { c1, c2, sigma0 } => {
                nonneg("c1", *c1);
                nonneg("c2", *c2);
                nonneg("sigma0", *sigma0);
                if c1 + c2 <= 0.0 {
                    errs.push("newsvendor: c1 + c2 must be > 0".into());
                }
                if d != 1 {
                    errs.push(format!("newsvendor: d must be 1 (got {d})"));
                }
            }
        }
        errs
    }
}

/// A family bound to a dimension and a feasible set.
#[derive(Clone)]
pub struct Problem {
    family: ProblemFamily,
    d: usize,
    set: FeasibleSet,
    model: Arc<dyn LossModel>,
}

impl std::fmt::Debug for Problem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("family", &self.family)
            .field("d", &self.d)
            .field("set", &self.set)
            .finish()
    }
}

impl Problem {
    pub fn new(family: ProblemFamily, d: usize, set: Option<FeasibleSet>) -> Result<Self> {
        if d == 0 {
            return Err(SawsError::config("d must be >= 1"));
        }
        let mut errs = family.check_parameters(d);
        if !errs.is_empty() {
            return Err(SawsError::ConfigInvalid(std::mem::take(&mut errs)));
        }
        let set = match set {
            Some(s) => s,
            None => family.default_set(d)?,
        };
        set.validate()?;
        if set.dim() != d {
            return Err(SawsError::config(format!(
                "feasible set has dimension {} but d = {d}",
                set.dim()
            )));
        }
        let constants = presets(&family, d, &set);
        let model: Arc<dyn LossModel> = match &family {
            ProblemFamily::GaussianMean { .. } => Arc::new(GaussianMeanLoss { d, constants }),
            ProblemFamily::LinearRegression { .. } => Arc::new(LinearRegressionLoss { d, constants }),
            ProblemFamily::LogisticRegression { .. } => Arc::new(LogisticLoss { d, constants }),
            ProblemFamily::LinearOpt => Arc::new(LinearOptLoss { d, constants }),
            ProblemFamily::QuantileRegression { nu, .. } => Arc::new(QuantileLoss { d, nu: *nu, constants }),
            ProblemFamily::Newsvendor { c1, c2, .. } => Arc::new(NewsvendorLoss {
                c1: *c1,
                c2: *c2,
                constants,
            }),
            ProblemFamily::Svm { .. } => Arc::new(HingeLoss { d, constants }),
        };
        Ok(Self { family, d, set, model })
    }

    pub fn family(&self) -> &ProblemFamily {
        &self.family
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn set(&self) -> &FeasibleSet {
        &self.set
    }

    pub fn model(&self) -> &Arc<dyn LossModel> {
        &self.model
    }

    pub fn regularity(&self) -> Regularity {
        self.family.regularity()
    }

    pub fn constants(&self) -> RegularityConstants {
        self.model.constants()
    }

    /// Region that `check_parameter` accepts, for families where it is a set.
    pub fn admissible_region(&self) -> Option<FeasibleSet> {
        match &self.family {
            ProblemFamily::GaussianMean { .. }
            | ProblemFamily::LinearRegression { .. }
            | ProblemFamily::LogisticRegression { .. } => match &self.set {
                FeasibleSet::Ball { center, radius } => FeasibleSet::ball(center.clone(), 0.5 * radius).ok(),
                s => Some(s.clone()),
            },
            ProblemFamily::LinearOpt => FeasibleSet::cube(self.d, 0.5).ok(),
            _ => None,
        }
    }

    /// Admissibility of one per-period parameter (`theta*_n` or `mu*_n`).
    pub fn check_parameter(&self, n: usize, p: &[f64]) -> Result<()> {
        if p.len() != self.d {
            return Err(SawsError::config(format!(
                "period {n}: parameter has length {} but d = {}",
                p.len(),
                self.d
            )));
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(SawsError::config(format!("period {n}: parameter is not finite")));
        }
        match &self.family {
            ProblemFamily::GaussianMean { .. }
            | ProblemFamily::LinearRegression { .. }
            | ProblemFamily::LogisticRegression { .. } => match &self.set {
                FeasibleSet::Ball { center, radius } => {
                    if dist2(p, center) > 0.5 * radius + 1e-12 {
                        return Err(SawsError::config(format!(
                            "period {n}: {} needs theta* within M/4 = {} of the ball centre",
                            self.family.name(),
                            0.5 * radius
                        )));
                    }
                }
                s => {
                    if !s.contains(p, 1e-12) {
                        return Err(SawsError::config(format!(
                            "period {n}: {} needs theta* inside the feasible set",
                            self.family.name()
                        )));
                    }
                }
            },
            ProblemFamily::LinearOpt
                if p.iter().any(|m| m.abs() > 0.5) => {
                    return Err(SawsError::config(format!(
                        "period {n}: linear-opt needs |mu|_inf <= 1/2"
                    )));
                }
            _ => {}
        }
        Ok(())
    }

    /// Appends one data point drawn at parameter `p`.
    ///
    /// The number of draws taken from `rng` never depends on `p`, so streams
    /// seeded alike give common base draws across parameters.
    pub fn sample_point(&self, p: &[f64], rng: &mut StreamRng, out: &mut Vec<f64>) {
        let d = self.d;
        let normal = |rng: &mut StreamRng| -> f64 { StandardNormal.sample(rng) };
        match &self.family {
            ProblemFamily::GaussianMean { sigma0 } => {
                out.extend(p.iter().map(|m| m + sigma0 * normal(rng)));
            }
            ProblemFamily::LinearRegression { noise, cov_diag } => {
                let start = out.len();
                for j in 0..d {
                    let sd = cov_diag.as_ref().map_or(1.0, |c| c[j].sqrt());
                    out.push(sd * normal(rng));
                }
                let mean: f64 = out[start..].iter().zip(p).map(|(x, t)| x * t).sum();
                out.push(mean + noise * normal(rng));
            }
            ProblemFamily::LogisticRegression { sigma0, .. } | ProblemFamily::Svm { sigma0 } => {
                let start = out.len();
                for _ in 0..d {
                    out.push(sigma0 * normal(rng));
                }
                let t: f64 = out[start..].iter().zip(p).map(|(x, t)| x * t).sum();
                let u: f64 = rng.gen();
                let positive = u < models::sigmoid(t);
                let label = match (&self.family, positive) {
                    (ProblemFamily::Svm { .. }, true) => 1.0,
                    (ProblemFamily::Svm { .. }, false) => -1.0,
                    (_, true) => 1.0,
                    (_, false) => 0.0,
                };
                out.push(label);
            }
            ProblemFamily::LinearOpt => out.extend(draw_linear_opt(p, rng)),
            ProblemFamily::QuantileRegression { sigma0, intercept, .. } => {
                let start = out.len();
                for j in 0..d {
                    let x = if *intercept && j == 0 { 1.0 } else { sigma0 * normal(rng) };
                    out.push(x);
                }
                let mean: f64 = out[start..].iter().zip(p).map(|(x, t)| x * t).sum();
                out.push(mean + laplace(rng));
            }
            ProblemFamily::Newsvendor { sigma0, .. } => out.push(p[0] + sigma0 * normal(rng)),
        }
    }

    pub fn sample_batch(
        &self,
        p: &[f64],
        b: usize,
        period: usize,
        replication: usize,
        rng: &mut StreamRng,
    ) -> Result<SampleBatch> {
        let mut data = Vec::with_capacity(b * self.model.point_len());
        for _ in 0..b {
            self.sample_point(p, rng, &mut data);
        }
        SampleBatch::new(period, replication, self.model.point_len(), data)
    }

    fn exact_population(&self, p: &[f64]) -> Option<Result<PopulationLoss>> {
        let d = self.d;
        let set = self.set.clone();
        match &self.family {
            ProblemFamily::GaussianMean { sigma0 } => Some(PopulationLoss::quadratic(
                p.to_vec(),
                vec![1.0; d],
                sigma0 * sigma0 * d as f64 / 2.0,
                set,
            )),
            ProblemFamily::LinearRegression { noise, cov_diag } => Some(PopulationLoss::quadratic(
                p.to_vec(),
                cov_diag.clone().unwrap_or_else(|| vec![1.0; d]),
                noise * noise / 2.0,
                set,
            )),
            ProblemFamily::LinearOpt => {
                let scale = 1.0 / (d as f64).sqrt();
                Some(PopulationLoss::linear(p.iter().map(|m| m * scale).collect(), 0.0, set))
            }
            _ => None,
        }
    }

    /// Starting point for minimizing a Monte-Carlo population loss.
    fn population_hint(&self, p: &[f64]) -> Vec<f64> {
        let mut x = p.to_vec();
        if let ProblemFamily::QuantileRegression { nu, intercept: true, .. } = &self.family {
            x[0] += laplace_quantile(*nu);
        }
        self.set.project_in_place(&mut x);
        x
    }

    /// `F_n` at parameter `p`. Monte-Carlo families draw their evaluation sample
    /// from the stream `(Evaluation, replication, 0)` of the Monte-Carlo seed.
    pub fn population(&self, p: &[f64], mc: &MonteCarloSpec, replication: usize) -> Result<PopulationLoss> {
        if let Some(exact) = self.exact_population(p) {
            return exact;
        }
        let seed = mc.require_seed()?;
        let mut rng = SeedTree::new(seed).stream(Purpose::Evaluation, replication as u64, 0);
        let sample = self.sample_batch(p, mc.samples, 0, replication, &mut rng)?;
        let batches = std::slice::from_ref(&sample);
        let minimizer = match self.model.window_minimizer(batches, &self.set) {
            Some(x) => x,
            None => {
                let loss = crate::domain::EmpiricalLoss::new(self.model.as_ref(), batches)?;
                let budget = SolverBudget {
                    regime: self.regularity(),
                    target_gap: 0.0,
                    max_iters: 2000,
                    step: StepRule::Auto,
                };
                let hint = self.population_hint(p);
                minimize_iterative(&loss, &self.set, &budget, Some(&hint), false)?
                    .theta
                    .into_vec()
            }
        };
        PopulationLoss::monte_carlo(self.model.clone(), sample, minimizer, self.set.clone())
    }
}

fn presets(family: &ProblemFamily, d: usize, set: &FeasibleSet) -> RegularityConstants {
    let m = set.diameter();
    let mut c = RegularityConstants {
        m: Some(m),
        ..Default::default()
    };
    match family {
        ProblemFamily::GaussianMean { sigma0 } => {
            c.rho = Some(1.0);
            c.l = Some(1.0);
            c.lambda = Some(1.0);
            c.sigma = Some(*sigma0);
            c.r = Some(m);
        }
        ProblemFamily::LinearRegression { noise, cov_diag } => {
            let diag = cov_diag.clone().unwrap_or_else(|| vec![1.0; d]);
            let s0 = noise.max(diag.iter().cloned().fold(0.0, f64::max).sqrt());
            c.rho = Some(diag.iter().cloned().fold(f64::INFINITY, f64::min));
            c.l = Some(diag.iter().cloned().fold(0.0, f64::max));
            c.sigma = Some((m + 1.0) * s0 * s0);
            c.lambda = Some(s0);
            c.r = Some(m);
        }
        ProblemFamily::LogisticRegression { sigma0, gamma } => {
            c.rho = Some(0.25 * gamma * sigma0 * sigma0);
            c.l = Some(0.25 * sigma0 * sigma0);
            c.sigma = Some(*sigma0);
            c.lambda = Some(*sigma0);
            c.r = Some(m);
        }
        ProblemFamily::LinearOpt => {
            c.sigma = Some(4.0);
            c.lambda = Some(1.0);
        }
        ProblemFamily::QuantileRegression { sigma0, .. } | ProblemFamily::Svm { sigma0 } => {
            c.sigma = Some(m * sigma0);
            c.lambda = Some(*sigma0);
        }
        ProblemFamily::Newsvendor { c1, c2, sigma0 } => {
            c.sigma = Some((c1 + c2) * m * sigma0);
            c.lambda = Some((c1 + c2) * sigma0);
        }
    }
    c
}

fn laplace(rng: &mut StreamRng) -> f64 {
    let u: f64 = rng.gen::<f64>() - 0.5;
    -u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// `nu`-quantile of Laplace(0, 1).
pub fn laplace_quantile(nu: f64) -> f64 {
    if nu <= 0.5 {
        (2.0 * nu).ln()
    } else {
        -(2.0 * (1.0 - nu)).ln()
    }
}

fn draw_linear_opt(mu: &[f64], rng: &mut StreamRng) -> Vec<f64> {
    let d = mu.len();
    let j = rng.gen_range(0..d);
    let u: f64 = rng.gen();
    let x = if u < 0.5 + mu[j] { 1.0 } else { -1.0 };
    let mut z = vec![0.0; d];
    z[j] = (d as f64).sqrt() * x;
    z
}

/// One draw of `z = sqrt(d) x o y` for the linear-optimization distribution.
pub fn sample_linear_opt(mu: &[f64], d: usize, rng: &mut StreamRng) -> Result<Vec<f64>> {
    if mu.len() != d {
        return Err(SawsError::DimensionMismatch {
            expected: d,
            got: mu.len(),
        });
    }
    if mu.iter().any(|m| !(m.abs() <= 0.5)) {
        return Err(SawsError::config("linear-opt needs |mu|_inf <= 1/2"));
    }
    Ok(draw_linear_opt(mu, rng))
}

/// Per-period batches and population losses for one replication.
#[derive(Debug, Clone)]
pub struct Environment {
    pub batches: Vec<SampleBatch>,
    pub populations: Vec<Arc<PopulationLoss>>,
}

/// Batches for periods `1..=N` and the matching population losses.
///
/// Batch `n` is drawn from the stream keyed `(Batch, replication, n)`; runs of
/// equal consecutive parameters share one population loss.
pub fn make_environment(
    problem: &Problem,
    path: &[Vec<f64>],
    b: usize,
    seeds: &SeedTree,
    replication: usize,
    mc: &MonteCarloSpec,
) -> Result<Environment> {
    if b == 0 {
        return Err(SawsError::config("batch size B must be >= 1"));
    }
    let errs: Vec<String> = path
        .iter()
        .enumerate()
        .filter_map(|(i, p)| problem.check_parameter(i + 1, p).err().map(|e| e.to_string()))
        .collect();
    if !errs.is_empty() {
        return Err(SawsError::ConfigInvalid(errs));
    }
    let batches = path
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let period = i + 1;
            let mut rng = seeds.stream(Purpose::Batch, replication as u64, period as u64);
            problem.sample_batch(p, b, period, replication, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut populations: Vec<Arc<PopulationLoss>> = Vec::with_capacity(path.len());
    for (i, p) in path.iter().enumerate() {
        if i > 0 && path[i - 1] == *p {
            let prev = populations[i - 1].clone();
            populations.push(prev);
        } else {
            populations.push(Arc::new(problem.population(p, mc, replication)?));
        }
    }
    Ok(Environment { batches, populations })
}

#[cfg(test)]
mod tests;
