use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::batch::SampleBatch;
use super::loss::LossModel;
use super::set::FeasibleSet;
use crate::error::{Result, SawsError};

/// A value with its Monte-Carlo standard error (0 for exact values).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, se: 0.0 }
    }
}

/// Sample count and seed for Monte-Carlo population losses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MonteCarloSpec {
    pub samples: usize,
    pub seed: Option<u64>,
}

impl Default for MonteCarloSpec {
    fn default() -> Self {
        Self {
            samples: 100_000,
            seed: None,
        }
    }
}

impl MonteCarloSpec {
    pub fn seeded(samples: usize, seed: u64) -> Self {
        Self {
            samples,
            seed: Some(seed),
        }
    }

    pub fn require_seed(&self) -> Result<u64> {
        if self.samples == 0 {
            return Err(SawsError::config("monte-carlo population loss needs samples >= 1"));
        }
        self.seed
            .ok_or_else(|| SawsError::config("monte-carlo population loss requires a seed"))
    }
}

#[derive(Clone)]
enum Form {
    /// `0.5 * sum_i w_i (theta_i - c_i)^2 + offset`
    Quadratic {
        center: Vec<f64>,
        weights: Vec<f64>,
        offset: f64,
    },
    /// `coef . theta + offset`
    Linear { coef: Vec<f64>, offset: f64 },
    /// Average loss over a fixed evaluation sample.
    MonteCarlo {
        model: Arc<dyn LossModel>,
        sample: SampleBatch,
    },
}

/// The population loss `F_n` of one period, restricted to a feasible set.
#[derive(Clone)]
pub struct PopulationLoss {
    form: Form,
    set: FeasibleSet,
    minimizer: Vec<f64>,
    infimum: f64,
}

impl std::fmt::Debug for PopulationLoss {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mode = match self.form {
            Form::Quadratic { .. } => "quadratic",
            Form::Linear { .. } => "linear",
            Form::MonteCarlo { .. } => "monte-carlo",
        };
        f.debug_struct("PopulationLoss")
            .field("mode", &mode)
            .field("minimizer", &self.minimizer)
            .field("infimum", &self.infimum)
            .finish()
    }
}

impl PopulationLoss {
    /// `0.5 * sum_i w_i (theta_i - c_i)^2 + offset` with `w_i >= 0`.
    pub fn quadratic(center: Vec<f64>, weights: Vec<f64>, offset: f64, set: FeasibleSet) -> Result<Self> {
        check_len(center.len(), set.dim())?;
        check_len(weights.len(), set.dim())?;
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(SawsError::contract("quadratic weights must be finite and >= 0"));
        }
        let minimizer = weighted_projection(&center, &weights, &set);
        let form = Form::Quadratic {
            center,
            weights,
            offset,
        };
        Ok(Self::finish(form, set, minimizer))
    }

    pub fn linear(coef: Vec<f64>, offset: f64, set: FeasibleSet) -> Result<Self> {
        check_len(coef.len(), set.dim())?;
        let minimizer = set.linear_minimizer(&coef);
        Ok(Self::finish(Form::Linear { coef, offset }, set, minimizer))
    }

    /// Monte-Carlo loss over `sample`; `minimizer` must minimize the sample average over `set`.
    pub fn monte_carlo(
        model: Arc<dyn LossModel>,
        sample: SampleBatch,
        minimizer: Vec<f64>,
        set: FeasibleSet,
    ) -> Result<Self> {
        check_len(model.dim(), set.dim())?;
        check_len(minimizer.len(), set.dim())?;
        if sample.point_len() != model.point_len() {
            return Err(SawsError::DimensionMismatch {
                expected: model.point_len(),
                got: sample.point_len(),
            });
        }
        Ok(Self::finish(Form::MonteCarlo { model, sample }, set, minimizer))
    }

    fn finish(form: Form, set: FeasibleSet, minimizer: Vec<f64>) -> Self {
        let mut out = Self {
            form,
            set,
            minimizer,
            infimum: 0.0,
        };
        out.infimum = out.raw_value(&out.minimizer.clone());
        out
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self.form, Form::MonteCarlo { .. })
    }

    pub fn set(&self) -> &FeasibleSet {
        &self.set
    }

    pub fn minimizer(&self) -> &[f64] {
        &self.minimizer
    }

    pub fn infimum(&self) -> f64 {
        self.infimum
    }

    fn raw_value(&self, theta: &[f64]) -> f64 {
        match &self.form {
            Form::Quadratic {
                center,
                weights,
                offset,
            } => {
                0.5 * theta
                    .iter()
                    .zip(center)
                    .zip(weights)
                    .map(|((t, c), w)| w * (t - c) * (t - c))
                    .sum::<f64>()
                    + offset
            }
            Form::Linear { coef, offset } => super::param::dot(coef, theta) + offset,
            Form::MonteCarlo { model, sample } => {
                sample.points().map(|z| model.loss(theta, z)).sum::<f64>() / sample.size() as f64
            }
        }
    }

    pub fn value(&self, theta: &[f64]) -> Result<Estimate> {
        check_len(theta.len(), self.set.dim())?;
        match &self.form {
            Form::MonteCarlo { model, sample } => {
                let (mean, se) = mean_se(sample.points().map(|z| model.loss(theta, z)));
                Ok(Estimate { value: mean, se })
            }
            _ => Ok(Estimate::exact(self.raw_value(theta))),
        }
    }

    /// `F_n(theta) - inf F_n`, clamped at 0; the Monte-Carlo estimate is a paired mean difference.
    pub fn population_excess(&self, theta: &[f64]) -> Result<Estimate> {
        check_len(theta.len(), self.set.dim())?;
        if !self.set.contains(theta, 1e-9) {
            return Err(SawsError::contract("excess risk requested outside the feasible set"));
        }
        match &self.form {
            Form::MonteCarlo { model, sample } => {
                let (mean, se) = mean_se(
                    sample
                        .points()
                        .map(|z| model.loss(theta, z) - model.loss(&self.minimizer, z)),
                );
                Ok(Estimate {
                    value: mean.max(0.0),
                    se,
                })
            }
            _ => Ok(Estimate::exact((self.raw_value(theta) - self.infimum).max(0.0))),
        }
    }
}

fn check_len(got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(SawsError::DimensionMismatch { expected, got });
    }
    Ok(())
}

fn mean_se(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut n, mut mean, mut m2) = (0usize, 0.0, 0.0);
    for v in values {
        n += 1;
        let delta = v - mean;
        mean += delta / n as f64;
        m2 += delta * (v - mean);
    }
    if n < 2 {
        return (mean, 0.0);
    }
    (mean, (m2 / (n - 1) as f64 / n as f64).sqrt())
}

/// Minimizer of `0.5 * sum_i w_i (x_i - c_i)^2` over `set`.
fn weighted_projection(c: &[f64], w: &[f64], set: &FeasibleSet) -> Vec<f64> {
    match set {
        FeasibleSet::Box { .. } | FeasibleSet::Interval { .. } => {
            let mut x = c.to_vec();
            set.project_in_place(&mut x);
            x
        }
        FeasibleSet::Ball { center, radius } => {
            let gap: Vec<f64> = c.iter().zip(center).map(|(ci, ai)| ci - ai).collect();
            if super::param::norm2(&gap) <= *radius {
                return c.to_vec();
            }
            // x(lam) = a + w (c - a) / (w + lam); |x(lam) - a| decreases in lam
            let at = |lam: f64| -> Vec<f64> {
                center
                    .iter()
                    .zip(&gap)
                    .zip(w)
                    .map(|((a, g), wi)| if wi + lam > 0.0 { a + wi * g / (wi + lam) } else { *a })
                    .collect()
            };
            let wmax = w.iter().cloned().fold(0.0, f64::max);
            if wmax == 0.0 {
                return center.clone();
            }
            let (mut lo, mut hi) = (0.0, wmax * super::param::norm2(&gap) / radius.max(f64::MIN_POSITIVE));
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if super::param::dist2(&at(mid), center) > *radius {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let mut x = at(hi);
            set.project_in_place(&mut x);
            x
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn gaussian_mean_excess() {
        let set = FeasibleSet::centered_ball(2, 10.0).unwrap();
        let f = PopulationLoss::quadratic(vec![0.0, 0.0], vec![1.0, 1.0], 1.0, set).unwrap();
        assert_eq!(f.population_excess(&[1.0, 0.0]).unwrap().value, 0.5);
        assert_eq!(f.population_excess(&[0.0, 0.0]).unwrap().value, 0.0);
    }

    #[test]
    fn linear_excess_on_interval() {
        // F(theta) = 0.5 theta on [-1, 1]
        let set = FeasibleSet::interval(-1.0, 1.0).unwrap();
        let f = PopulationLoss::linear(vec![0.5], 0.0, set).unwrap();
        assert_eq!(f.minimizer(), &[-1.0]);
        assert_eq!(f.population_excess(&[0.0]).unwrap().value, 0.5);
    }

    #[test]
    fn monte_carlo_needs_seed() {
        assert!(MonteCarloSpec::default().require_seed().unwrap_err().is_config());
        assert_eq!(MonteCarloSpec::seeded(10, 7).require_seed().unwrap(), 7);
    }

    #[test]
    fn outside_set_rejected() {
        let set = FeasibleSet::interval(0.0, 1.0).unwrap();
        let f = PopulationLoss::linear(vec![1.0], 0.0, set).unwrap();
        assert!(f.population_excess(&[2.0]).is_err());
        assert!(f.population_excess(&[0.5, 0.5]).is_err());
    }

    proptest! {
        #[test]
        fn closed_form_minimum_is_not_beaten(
            c in prop::collection::vec(-6.0..6.0f64, 2),
            w in prop::collection::vec(0.0..4.0f64, 2),
            coef in prop::collection::vec(-2.0..2.0f64, 2),
            probes in prop::collection::vec(prop::collection::vec(-3.0..3.0f64, 2), 64),
            use_ball in any::<bool>(),
        ) {
            let set = if use_ball {
                FeasibleSet::ball(vec![0.5, -0.5], 2.0).unwrap()
            } else {
                FeasibleSet::boxed(vec![-1.0, -2.0], vec![2.0, 1.0]).unwrap()
            };
            let q = PopulationLoss::quadratic(c, w, 0.3, set.clone()).unwrap();
            let l = PopulationLoss::linear(coef, -1.0, set.clone()).unwrap();
            prop_assert!(set.contains(q.minimizer(), 1e-12));
            for p in probes {
                let mut x = p.clone();
                set.project_in_place(&mut x);
                prop_assert!(q.value(&x).unwrap().value >= q.infimum() - 1e-9);
                prop_assert!(l.value(&x).unwrap().value >= l.infimum() - 1e-9);
            }
        }
    }
}
