use std::sync::Arc;

use crate::domain::{EmpiricalLoss, FeasibleSet, LossModel, ParamVector, SampleBatch};
use crate::error::{Result, SawsError};
use crate::saws::{Decision, Learner};
use crate::solvers::Solver;

/// Which window a baseline pools at period `n`.
#[derive(Debug, Clone, PartialEq)]
pub enum WindowPolicy {
    /// `min(k, n - 1)`
    Fixed(usize),
    /// All past periods.
    All,
    /// Periods since the last boundary `N_j < n`; at a segment start the
    /// restarted learner has no data and plays its first decision.
    Restart(Vec<usize>),
}

impl WindowPolicy {
    pub fn window(&self, n: usize) -> usize {
        let past = n - 1;
        match self {
            WindowPolicy::Fixed(k) => (*k).min(past),
            WindowPolicy::All => past,
            WindowPolicy::Restart(b) => {
                let start = b.iter().copied().filter(|x| *x < n).max().unwrap_or(0);
                past - start
            }
        }
    }
}

/// Baseline learner: minimizes the pre-average over the policy's window.
pub struct WindowLearner {
    label: String,
    model: Arc<dyn LossModel>,
    set: FeasibleSet,
    solver: Solver,
    policy: WindowPolicy,
    theta1: ParamVector,
    history: Vec<SampleBatch>,
    last: Option<ParamVector>,
    decided: bool,
}

impl WindowLearner {
    pub fn new(
        label: impl Into<String>,
        model: Arc<dyn LossModel>,
        set: FeasibleSet,
        solver: Solver,
        policy: WindowPolicy,
        theta1: ParamVector,
    ) -> Self {
        Self {
            label: label.into(),
            model,
            set,
            solver,
            policy,
            theta1,
            history: Vec::new(),
            last: None,
            decided: false,
        }
    }
}

impl Learner for WindowLearner {
    fn label(&self) -> String {
        self.label.clone()
    }

    fn decide(&mut self) -> Result<Decision> {
        if self.decided {
            return Err(SawsError::contract("decide called twice without observe"));
        }
        let n = self.history.len() + 1;
        let window = self.policy.window(n);
        let theta = if window == 0 {
            self.theta1.clone()
        } else {
            let loss = EmpiricalLoss::new(self.model.as_ref(), &self.history[n - 1 - window..])?;
            self.solver.solve(&loss, &self.set, n, self.last.as_deref())?.theta
        };
        self.last = Some(theta.clone());
        self.decided = true;
        Ok(Decision { theta, window })
    }

    fn observe(&mut self, batch: &SampleBatch) -> Result<()> {
        if !self.decided {
            return Err(SawsError::contract("observe called before decide"));
        }
        if batch.period() != self.history.len() + 1 {
            return Err(SawsError::contract("batches must arrive in period order"));
        }
        self.history.push(batch.clone());
        self.decided = false;
        Ok(())
    }
}
