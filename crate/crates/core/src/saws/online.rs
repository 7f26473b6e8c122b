use std::collections::VecDeque;
use std::sync::Arc;

use super::offline::{candidate_windows, select_window_offline, SolveMode};
use super::threshold::ThresholdRule;
use crate::domain::{FeasibleSet, LossModel, ParamVector, SampleBatch};
use crate::error::{Result, SawsError};
use crate::solvers::Solver;

/// A decision `theta_n` with the look-back window `K_n` behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub theta: ParamVector,
    pub window: usize,
}

/// Online learner: decide for the next period, then observe its batch.
pub trait Learner: Send {
    fn label(&self) -> String;

    fn decide(&mut self) -> Result<Decision>;

    fn observe(&mut self, batch: &SampleBatch) -> Result<()>;
}

/// Default first decision: the projection of the origin.
pub fn default_theta1(set: &FeasibleSet) -> ParamVector {
    let mut x = vec![0.0; set.dim()];
    set.project_in_place(&mut x);
    ParamVector::new(x).expect("projection of the origin is finite")
}

/// Online window selection state: only the last `K_{n-1} + 1` batches are kept.
pub struct OnlineState {
    model: Arc<dyn LossModel>,
    set: FeasibleSet,
    rule: Arc<dyn ThresholdRule>,
    solver: Solver,
    mode: SolveMode,
    theta1: ParamVector,
    /// Next period to decide.
    period: usize,
    /// `K_{n-1}`
    k_prev: usize,
    retained: VecDeque<SampleBatch>,
    decisions: Vec<Decision>,
    label: String,
}

impl OnlineState {
    pub fn new(
        model: Arc<dyn LossModel>,
        set: FeasibleSet,
        rule: Arc<dyn ThresholdRule>,
        solver: Solver,
        theta1: Option<ParamVector>,
    ) -> Result<Self> {
        if model.dim() != set.dim() {
            return Err(SawsError::DimensionMismatch {
                expected: set.dim(),
                got: model.dim(),
            });
        }
        let theta1 = match theta1 {
            Some(t) => {
                t.check_dim(set.dim())?;
                if !set.contains(&t, 1e-12) {
                    return Err(SawsError::config("theta1 must lie in the feasible set"));
                }
                t
            }
            None => default_theta1(&set),
        };
        Ok(Self {
            model,
            set,
            rule,
            solver,
            mode: SolveMode::default(),
            theta1,
            period: 1,
            k_prev: 0,
            retained: VecDeque::new(),
            decisions: Vec::new(),
            label: "saws".into(),
        })
    }

    pub fn with_mode(mut self, mode: SolveMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn period(&self) -> usize {
        self.period
    }

    /// `K_{n-1}` for the next period `n`.
    pub fn memory_window(&self) -> usize {
        self.k_prev
    }

    pub fn retained(&self) -> usize {
        self.retained.len()
    }

    pub fn decisions(&self) -> &[Decision] {
        &self.decisions
    }
}

impl Learner for OnlineState {
    fn label(&self) -> String {
        self.label.clone()
    }

    fn decide(&mut self) -> Result<Decision> {
        if self.decisions.len() >= self.period {
            return Err(SawsError::contract("decide called twice without observe"));
        }
        let n = self.period;
        let decision = if n == 1 {
            Decision {
                theta: self.theta1.clone(),
                window: 0,
            }
        } else {
            let candidates = candidate_windows(self.k_prev);
            let batches = self.retained.make_contiguous();
            let sel = select_window_offline(
                self.model.as_ref(),
                &self.set,
                batches,
                n,
                &candidates,
                self.rule.as_ref(),
                &self.solver,
                self.mode,
            )?;
            Decision {
                theta: sel.theta,
                window: sel.window,
            }
        };
        // periods before n - K_n are never used again
        while self.retained.len() > decision.window {
            self.retained.pop_front();
        }
        self.k_prev = decision.window;
        self.decisions.push(decision.clone());
        Ok(decision)
    }

    fn observe(&mut self, batch: &SampleBatch) -> Result<()> {
        if self.decisions.len() != self.period {
            return Err(SawsError::contract("observe called before decide"));
        }
        if batch.period() != self.period {
            return Err(SawsError::contract(format!(
                "expected the batch of period {}, got {}",
                self.period,
                batch.period()
            )));
        }
        if let Some(first) = self.retained.front() {
            if first.size() != batch.size() {
                return Err(SawsError::contract("batch size must be constant across the stream"));
            }
        }
        self.retained.push_back(batch.clone());
        self.period += 1;
        Ok(())
    }
}

/// Runs `learner` over `stream`, which must start at period 1; returns one decision per period.
pub fn drive(learner: &mut dyn Learner, stream: &[SampleBatch]) -> Result<Vec<Decision>> {
    let mut out = Vec::with_capacity(stream.len());
    for batch in stream {
        out.push(learner.decide()?);
        learner.observe(batch)?;
    }
    Ok(out)
}

/// Online selection over a whole stream: `(theta_n, K_n)` for `n = 1..=N`.
pub fn run_online(
    model: Arc<dyn LossModel>,
    set: &FeasibleSet,
    stream: &[SampleBatch],
    rule: Arc<dyn ThresholdRule>,
    solver: &Solver,
    theta1: Option<ParamVector>,
) -> Result<Vec<Decision>> {
    let mut state = OnlineState::new(model, set.clone(), rule, *solver, theta1)?;
    drive(&mut state, stream)
}
