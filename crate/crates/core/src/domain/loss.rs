use serde::{Deserialize, Serialize};

use super::batch::SampleBatch;
use super::set::FeasibleSet;
use crate::error::{Result, SawsError};

/// Which family of threshold schedules and solver applies to a loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regularity {
    StronglyConvex,
    Lipschitz,
}

/// Regularity constants of a loss family; unset entries do not apply to its regime.
///
/// `rho`: strong convexity, `l`: smoothness, `r`: radius of the region where both
/// hold, `sigma`/`lambda`: noise scales, `m`: diameter of the domain.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RegularityConstants {
    pub rho: Option<f64>,
    pub l: Option<f64>,
    pub r: Option<f64>,
    pub sigma: Option<f64>,
    pub lambda: Option<f64>,
    pub m: Option<f64>,
}

impl RegularityConstants {
    /// Condition number `L / rho`.
    pub fn kappa(&self) -> Option<f64> {
        Some(self.l? / self.rho?)
    }
}

/// A convex pointwise loss `l(theta, z)` and its subgradient.
pub trait LossModel: Send + Sync {
    fn dim(&self) -> usize;

    /// Number of reals per data point.
    fn point_len(&self) -> usize;

    fn loss(&self, theta: &[f64], z: &[f64]) -> f64;

    /// Adds a subgradient of `l(., z)` at `theta` into `acc`.
    fn accumulate_subgradient(&self, theta: &[f64], z: &[f64], acc: &mut [f64]);

    fn regularity(&self) -> Regularity;

    fn constants(&self) -> RegularityConstants;

    /// Exact minimizer of the window average over `set`, when one is available in closed form.
    fn window_minimizer(&self, _batches: &[SampleBatch], _set: &FeasibleSet) -> Option<Vec<f64>> {
        None
    }

    /// Upper bound on the gradient Lipschitz constant of the window average.
    fn smoothness(&self, _batches: &[SampleBatch]) -> Option<f64> {
        None
    }

    /// Lower bound on the strong convexity of the window average; must be > 0 when returned.
    fn strong_convexity(&self, _batches: &[SampleBatch]) -> Option<f64> {
        None
    }

    /// Bound on `|g|` over all subgradients of `l(., z)` on the domain.
    fn point_lipschitz(&self, _z: &[f64]) -> Option<f64> {
        None
    }

    fn subgradient(&self, theta: &[f64], z: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        self.accumulate_subgradient(theta, z, &mut g);
        g
    }
}

/// Anything that can be evaluated at a point.
pub trait Objective {
    fn value(&self, theta: &[f64]) -> f64;
}

impl<F: Fn(&[f64]) -> f64> Objective for F {
    fn value(&self, theta: &[f64]) -> f64 {
        self(theta)
    }
}

/// The pre-average `f_{n,k}`: the mean loss over every point in a window of batches.
#[derive(Clone, Copy)]
pub struct EmpiricalLoss<'a> {
    model: &'a dyn LossModel,
    batches: &'a [SampleBatch],
}

impl<'a> EmpiricalLoss<'a> {
    pub fn new(model: &'a dyn LossModel, batches: &'a [SampleBatch]) -> Result<Self> {
        if batches.is_empty() {
            return Err(SawsError::contract("empirical loss over an empty window"));
        }
        for b in batches {
            if b.point_len() != model.point_len() {
                return Err(SawsError::DimensionMismatch {
                    expected: model.point_len(),
                    got: b.point_len(),
                });
            }
        }
        Ok(Self { model, batches })
    }

    pub fn model(&self) -> &'a dyn LossModel {
        self.model
    }

    pub fn batches(&self) -> &'a [SampleBatch] {
        self.batches
    }

    pub fn window(&self) -> usize {
        self.batches.len()
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn num_points(&self) -> usize {
        self.batches.iter().map(SampleBatch::size).sum()
    }

    /// The `j` most recent batches of this window.
    pub fn suffix(&self, j: usize) -> Result<EmpiricalLoss<'a>> {
        if j == 0 || j > self.batches.len() {
            return Err(SawsError::contract(format!(
                "sub-window {j} of a window of {}",
                self.batches.len()
            )));
        }
        Ok(EmpiricalLoss {
            model: self.model,
            batches: &self.batches[self.batches.len() - j..],
        })
    }

    pub fn evaluate(&self, theta: &[f64]) -> f64 {
        let mut total = 0.0;
        for b in self.batches {
            for z in b.points() {
                total += self.model.loss(theta, z);
            }
        }
        total / self.num_points() as f64
    }

    /// Average subgradient, written into `out`.
    pub fn gradient_into(&self, theta: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for b in self.batches {
            for z in b.points() {
                self.model.accumulate_subgradient(theta, z, out);
            }
        }
        let scale = 1.0 / self.num_points() as f64;
        out.iter_mut().for_each(|g| *g *= scale);
    }

    pub fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        self.gradient_into(theta, &mut g);
        g
    }
}

impl Objective for EmpiricalLoss<'_> {
    fn value(&self, theta: &[f64]) -> f64 {
        self.evaluate(theta)
    }
}

/// `f_{n,k}` built from the batches of periods `n-k .. n-1` found in `history`.
pub fn pre_average<'a>(
    model: &'a dyn LossModel,
    history: &'a [SampleBatch],
    n: usize,
    k: usize,
) -> Result<EmpiricalLoss<'a>> {
    if k == 0 || k >= n {
        return Err(SawsError::WindowOutOfRange { k, n });
    }
    let first = history
        .first()
        .ok_or_else(|| SawsError::contract("empty history"))?
        .period();
    let lo = n - k;
    if lo < first || n - 1 > first + history.len() - 1 {
        return Err(SawsError::contract(format!(
            "periods {lo}..{} not retained (history covers {first}..{})",
            n - 1,
            first + history.len() - 1
        )));
    }
    let window = &history[lo - first..n - first];
    super::batch::check_stream(window)?;
    EmpiricalLoss::new(model, window)
}
