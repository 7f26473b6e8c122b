use std::sync::Arc;

use rayon::prelude::*;

use super::online::{run_online, Decision};
use super::threshold::{ThresholdRule, ThresholdSchedule};
use crate::domain::{EmpiricalLoss, FeasibleSet, LossModel, ParamVector, SampleBatch};
use crate::error::{Result, SawsError};
use crate::solvers::Solver;

/// Rolling cross-validation outcome.
#[derive(Debug, Clone)]
pub struct CvOutcome {
    /// 0-based index of the chosen schedule.
    pub chosen: usize,
    /// `sum_{n <= N0} f_n(theta_n)` per schedule.
    pub scores: Vec<f64>,
    pub runs: Vec<Vec<Decision>>,
}

/// `sum_n f_n(theta_n)`: each decision scored on the batch observed right after it.
pub fn rolling_score(model: &dyn LossModel, prefix: &[SampleBatch], decisions: &[Decision]) -> Result<f64> {
    let mut total = 0.0;
    for (batch, d) in prefix.iter().zip(decisions) {
        total += EmpiricalLoss::new(model, std::slice::from_ref(batch))?.evaluate(&d.theta);
    }
    Ok(total)
}

/// Picks the schedule whose online run has the smallest rolling score on
/// `prefix`; ties go to the smallest `C_tau`, then to the earliest entry.
pub fn select_hyperparameter_cv(
    model: Arc<dyn LossModel>,
    set: &FeasibleSet,
    schedules: &[ThresholdSchedule],
    prefix: &[SampleBatch],
    solver: &Solver,
    theta1: Option<ParamVector>,
) -> Result<CvOutcome> {
    if schedules.is_empty() {
        return Err(SawsError::contract("no candidate schedules"));
    }
    if prefix.len() < 2 {
        return Err(SawsError::contract("cross-validation prefix needs N0 >= 2"));
    }
    let runs = schedules
        .par_iter()
        .map(|s| {
            let rule: Arc<dyn ThresholdRule> = Arc::new(*s);
            run_online(model.clone(), set, prefix, rule, solver, theta1.clone())
        })
        .collect::<Result<Vec<_>>>()?;
    let scores = runs
        .iter()
        .map(|r| rolling_score(model.as_ref(), prefix, r))
        .collect::<Result<Vec<_>>>()?;
    let mut chosen = 0;
    for h in 1..schedules.len() {
        let better = scores[h] < scores[chosen]
            || (scores[h] == scores[chosen] && schedules[h].c_tau < schedules[chosen].c_tau);
        if better {
            chosen = h;
        }
    }
    Ok(CvOutcome { chosen, scores, runs })
}
