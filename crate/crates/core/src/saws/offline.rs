use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::threshold::ThresholdRule;
use crate::domain::{EmpiricalLoss, FeasibleSet, LossModel, Objective, ParamVector, SampleBatch};
use crate::error::{Result, SawsError};
use crate::solvers::{SolveResult, Solver};

/// How candidate windows are solved within one period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMode {
    /// Smallest to largest window, each warm-started from the previous solution.
    #[default]
    WarmSequential,
    /// Every window from the default start, one after another.
    ColdSequential,
    /// Every window from the default start, concurrently; output equals `ColdSequential`.
    ColdParallel,
}

/// `true` (pass) iff `f_i(theta_k) - f_i(theta_i) <= tau_i`.
pub fn pairwise_test<O: Objective + ?Sized>(f_i: &O, theta_i: &[f64], theta_k: &[f64], tau_i: f64) -> bool {
    f_i.value(theta_k) - f_i.value(theta_i) <= tau_i
}

/// Dyadic windows `1, 2, 4, ..` below `k_prev + 1`, ending with `k_prev + 1`.
pub fn candidate_windows(k_prev: usize) -> Vec<usize> {
    let top = k_prev + 1;
    let mut out = Vec::new();
    let mut k = 1usize;
    while k < top {
        out.push(k);
        k *= 2;
    }
    out.push(top);
    out
}

/// Outcome of one offline selection.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSelection {
    /// 1-based index into the candidate list.
    pub s_hat: usize,
    pub window: usize,
    pub theta: ParamVector,
    pub candidates: Vec<usize>,
    /// `tests[s][i]` is the pass flag of candidate `s` against `i <= s` (0-based).
    pub tests: Vec<Vec<bool>>,
    pub solves: Vec<SolveResult>,
}

/// Solves every candidate window and returns the largest one passing all its
/// pairwise tests against smaller candidates.
///
/// `batches` must end with period `n - 1` and hold at least the largest candidate.
#[allow(clippy::too_many_arguments)]
pub fn select_window_offline(
    model: &dyn LossModel,
    set: &FeasibleSet,
    batches: &[SampleBatch],
    n: usize,
    candidates: &[usize],
    rule: &dyn ThresholdRule,
    solver: &Solver,
    mode: SolveMode,
) -> Result<WindowSelection> {
    let Some(&largest) = candidates.last() else {
        return Err(SawsError::contract("empty candidate list"));
    };
    if candidates[0] == 0 || candidates.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SawsError::contract("candidate windows must be positive and strictly increasing"));
    }
    if largest >= n {
        return Err(SawsError::WindowOutOfRange { k: largest, n });
    }
    match batches.last() {
        Some(b) if b.period() == n - 1 && batches.len() >= largest => {}
        _ => {
            return Err(SawsError::contract(format!(
                "retained batches must end at period {} and cover window {largest}",
                n - 1
            )))
        }
    }
    let window = |k: usize| EmpiricalLoss::new(model, &batches[batches.len() - k..]);
    let losses = candidates.iter().map(|&k| window(k)).collect::<Result<Vec<_>>>()?;

    let solves: Vec<SolveResult> = match mode {
        SolveMode::WarmSequential => {
            let mut out: Vec<SolveResult> = Vec::with_capacity(losses.len());
            for f in &losses {
                let warm = out.last().map(|r| r.theta.as_slice());
                out.push(solver.solve(f, set, n, warm)?);
            }
            out
        }
        SolveMode::ColdSequential => losses
            .iter()
            .map(|f| solver.solve(f, set, n, None))
            .collect::<Result<_>>()?,
        SolveMode::ColdParallel => losses
            .par_iter()
            .map(|f| solver.solve(f, set, n, None))
            .collect::<Result<_>>()?,
    };

    let taus: Vec<f64> = candidates.iter().map(|&k| rule.tau(n, k)).collect();
    let row = |s: usize| -> Vec<bool> {
        (0..=s)
            .map(|i| {
                if i == s {
                    return true;
                }
                // f_i(theta_i) is the solver's reported objective
                losses[i].evaluate(&solves[s].theta) - solves[i].objective <= taus[i]
            })
            .collect()
    };
    let tests: Vec<Vec<bool>> = match mode {
        SolveMode::ColdParallel => (0..candidates.len()).into_par_iter().map(row).collect(),
        _ => (0..candidates.len()).map(row).collect(),
    };
    let s_hat = tests
        .iter()
        .rposition(|r| r.iter().all(|&p| p))
        .expect("the smallest candidate always passes")
        + 1;
    Ok(WindowSelection {
        s_hat,
        window: candidates[s_hat - 1],
        theta: solves[s_hat - 1].theta.clone(),
        candidates: candidates.to_vec(),
        tests,
        solves,
    })
}
