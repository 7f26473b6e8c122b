//! Approximate minimization of window losses over the feasible set.

use serde::{Deserialize, Serialize};

use crate::domain::{norm2, EmpiricalLoss, FeasibleSet, ParamVector, Regularity};
use crate::error::{Result, SawsError};

/// Step-size rule for the iterative path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepRule {
    /// `1/L` for strongly convex losses, `M/(G sqrt(t))` for Lipschitz losses.
    Auto,
    Fixed(f64),
    /// `eta0 / sqrt(t)`
    Decaying(f64),
}

/// Sub-optimality target and iteration cap for one solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverBudget {
    pub regime: Regularity,
    pub target_gap: f64,
    pub max_iters: usize,
    pub step: StepRule,
}

impl SolverBudget {
    /// `A M sigma d ln(d + B n) / (B k)` or `A sigma sqrt(d ln(1 + B n) / (B k))`.
    #[allow(clippy::too_many_arguments)]
    pub fn for_window(
        regime: Regularity,
        a: f64,
        m: f64,
        sigma: f64,
        d: usize,
        b: usize,
        n: usize,
        k: usize,
        max_iters: usize,
        step: StepRule,
    ) -> Self {
        let (d, b, n, k) = (d as f64, b as f64, n as f64, k as f64);
        let target_gap = match regime {
            Regularity::StronglyConvex => a * m * sigma * d * (d + b * n).ln() / (b * k),
            Regularity::Lipschitz => a * sigma * (d * (1.0 + b * n).ln() / (b * k)).sqrt(),
        };
        Self {
            regime,
            target_gap,
            max_iters,
            step,
        }
    }
}

/// Upper bound on `f(theta) - inf f`, when one could be computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GapCertificate {
    Certified(f64),
    Uncertified,
}

impl GapCertificate {
    pub fn bound(&self) -> Option<f64> {
        match self {
            GapCertificate::Certified(g) => Some(*g),
            GapCertificate::Uncertified => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub theta: ParamVector,
    pub objective: f64,
    pub gap: GapCertificate,
    pub iterations: usize,
    /// Objective after each iteration; filled only when requested.
    pub trace: Option<Vec<f64>>,
}

/// Solver settings shared by every window solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Solver {
    /// Constant `A` of the gap budget.
    pub a: f64,
    pub max_iters: usize,
    pub step: StepRule,
    pub use_closed_form: bool,
    pub record_trace: bool,
}

impl Default for Solver {
    fn default() -> Self {
        Self {
            a: 1.0,
            max_iters: 1000,
            step: StepRule::Auto,
            use_closed_form: true,
            record_trace: false,
        }
    }
}

impl Solver {
    /// Budget for the window `k` at period `n`.
    pub fn budget(&self, loss: &EmpiricalLoss<'_>, set: &FeasibleSet, n: usize) -> SolverBudget {
        let model = loss.model();
        let consts = model.constants();
        let b = loss.batches()[0].size();
        SolverBudget::for_window(
            model.regularity(),
            self.a,
            consts.m.unwrap_or_else(|| set.diameter()),
            consts.sigma.unwrap_or(1.0),
            model.dim(),
            b,
            n,
            loss.window(),
            self.max_iters,
            self.step,
        )
    }

    pub fn solve(
        &self,
        loss: &EmpiricalLoss<'_>,
        set: &FeasibleSet,
        n: usize,
        warm: Option<&[f64]>,
    ) -> Result<SolveResult> {
        let budget = self.budget(loss, set, n);
        if self.use_closed_form {
            if let Some(r) = closed_form(loss, set)? {
                return Ok(r);
            }
        }
        iterate(loss, set, &budget, warm, self.record_trace)
    }
}

/// Closed-form minimizer when the model has one, else projected (sub)gradient descent.
pub fn minimize_empirical(
    loss: &EmpiricalLoss<'_>,
    set: &FeasibleSet,
    budget: &SolverBudget,
    warm: Option<&[f64]>,
) -> Result<SolveResult> {
    if let Some(r) = closed_form(loss, set)? {
        return Ok(r);
    }
    iterate(loss, set, budget, warm, false)
}

/// Iterative path only.
pub fn minimize_iterative(
    loss: &EmpiricalLoss<'_>,
    set: &FeasibleSet,
    budget: &SolverBudget,
    warm: Option<&[f64]>,
    record_trace: bool,
) -> Result<SolveResult> {
    iterate(loss, set, budget, warm, record_trace)
}

fn closed_form(loss: &EmpiricalLoss<'_>, set: &FeasibleSet) -> Result<Option<SolveResult>> {
    check_dims(loss, set)?;
    let Some(x) = loss.model().window_minimizer(loss.batches(), set) else {
        return Ok(None);
    };
    let theta = ParamVector::new(x)?;
    Ok(Some(SolveResult {
        objective: loss.evaluate(&theta),
        theta,
        gap: GapCertificate::Certified(0.0),
        iterations: 0,
        trace: None,
    }))
}

fn check_dims(loss: &EmpiricalLoss<'_>, set: &FeasibleSet) -> Result<()> {
    if loss.dim() != set.dim() {
        return Err(SawsError::DimensionMismatch {
            expected: set.dim(),
            got: loss.dim(),
        });
    }
    Ok(())
}

fn start_point(set: &FeasibleSet, warm: Option<&[f64]>) -> Result<Vec<f64>> {
    let mut x = match warm {
        Some(w) => {
            ParamVector::new(w.to_vec())?.check_dim(set.dim())?;
            w.to_vec()
        }
        None => vec![0.0; set.dim()],
    };
    set.project_in_place(&mut x);
    Ok(x)
}

fn iterate(
    loss: &EmpiricalLoss<'_>,
    set: &FeasibleSet,
    budget: &SolverBudget,
    warm: Option<&[f64]>,
    record_trace: bool,
) -> Result<SolveResult> {
    check_dims(loss, set)?;
    let x0 = start_point(set, warm)?;
    let smooth = loss.model().smoothness(loss.batches());
    match (budget.regime, smooth) {
        (Regularity::StronglyConvex, Some(l_hat)) if l_hat > 0.0 => {
            gradient_descent(loss, set, budget, x0, l_hat, record_trace)
        }
        _ => subgradient_descent(loss, set, budget, x0, record_trace),
    }
}

fn gradient_descent(
    loss: &EmpiricalLoss<'_>,
    set: &FeasibleSet,
    budget: &SolverBudget,
    mut x: Vec<f64>,
    l_hat: f64,
    record_trace: bool,
) -> Result<SolveResult> {
    let rho_hat = loss.model().strong_convexity(loss.batches()).filter(|r| *r > 0.0);
    let step = match budget.step {
        StepRule::Fixed(eta) => eta,
        _ => 1.0 / l_hat,
    };
    let d = x.len();
    let mut g = vec![0.0; d];
    let mut next = vec![0.0; d];
    let mut trace = record_trace.then(Vec::new);
    let mut gap = GapCertificate::Uncertified;
    let mut iterations = 0;
    while iterations < budget.max_iters {
        loss.gradient_into(&x, &mut g);
        for i in 0..d {
            next[i] = x[i] - step * g[i];
        }
        set.project_in_place(&mut next);
        iterations += 1;
        // gradient mapping (x - x+) / step
        let mapping: f64 = x
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
            / step;
        std::mem::swap(&mut x, &mut next);
        if let Some(t) = trace.as_mut() {
            t.push(loss.evaluate(&x));
        }
        // f(x+) - inf f <= |G|^2 / (2 rho) when step = 1/L with L above the true smoothness
        let cert = rho_hat
            .filter(|_| matches!(budget.step, StepRule::Auto))
            .map(|rho| mapping * mapping / (2.0 * rho));
        if let Some(c) = cert {
            gap = GapCertificate::Certified(c);
            if c <= budget.target_gap {
                break;
            }
        }
        if mapping <= 1e-12 * (1.0 + norm2(&x)) {
            break;
        }
    }
    if matches!(gap, GapCertificate::Certified(c) if c > budget.target_gap) {
        gap = GapCertificate::Uncertified;
    }
    let theta = ParamVector::new(x)?;
    Ok(SolveResult {
        objective: loss.evaluate(&theta),
        theta,
        gap,
        iterations,
        trace,
    })
}

fn subgradient_descent(
    loss: &EmpiricalLoss<'_>,
    set: &FeasibleSet,
    budget: &SolverBudget,
    mut x: Vec<f64>,
    record_trace: bool,
) -> Result<SolveResult> {
    let model = loss.model();
    let m = set.diameter();
    let d = x.len();
    let mut g = vec![0.0; d];
    loss.gradient_into(&x, &mut g);
    // a-priori bound on subgradient norms, when the model provides one
    let model_bound = loss
        .batches()
        .iter()
        .flat_map(|b| b.points())
        .map(|z| model.point_lipschitz(z))
        .try_fold(0.0f64, |acc, v| v.map(|v| acc.max(v)));
    let g_bound = model_bound.unwrap_or_else(|| norm2(&g));
    let mut best = x.clone();
    let mut best_val = loss.evaluate(&x);
    let mut trace = record_trace.then(Vec::new);
    if norm2(&g) == 0.0 || g_bound == 0.0 || m == 0.0 {
        // zero subgradient: x minimizes the convex objective
        let theta = ParamVector::new(best)?;
        return Ok(SolveResult {
            theta,
            objective: best_val,
            gap: GapCertificate::Certified(0.0),
            iterations: 0,
            trace,
        });
    }
    let eta0 = match budget.step {
        StepRule::Auto => m / g_bound,
        StepRule::Fixed(eta) | StepRule::Decaying(eta) => eta,
    };
    let mut harmonic = 0.0;
    let mut iterations = 0;
    let mut bound = f64::INFINITY;
    while iterations < budget.max_iters {
        iterations += 1;
        let t = iterations as f64;
        let eta = match budget.step {
            StepRule::Fixed(eta) => eta,
            _ => eta0 / t.sqrt(),
        };
        if iterations > 1 {
            loss.gradient_into(&x, &mut g);
        }
        for i in 0..d {
            x[i] -= eta * g[i];
        }
        set.project_in_place(&mut x);
        let v = loss.evaluate(&x);
        if v < best_val {
            best_val = v;
            best.copy_from_slice(&x);
        }
        if let Some(tr) = trace.as_mut() {
            tr.push(best_val);
        }
        harmonic += 1.0 / t;
        // f_best - inf f <= M G (1 + H_T) / (4 (sqrt(T + 1) - 1)) for eta_t = M / (G sqrt t)
        if model_bound.is_some() && matches!(budget.step, StepRule::Auto) {
            bound = m * g_bound * (1.0 + harmonic) / (4.0 * ((t + 1.0).sqrt() - 1.0));
            if bound <= budget.target_gap {
                break;
            }
        }
    }
    let gap = if bound <= budget.target_gap {
        GapCertificate::Certified(bound)
    } else {
        GapCertificate::Uncertified
    };
    let theta = ParamVector::new(best)?;
    Ok(SolveResult {
        theta,
        objective: best_val,
        gap,
        iterations,
        trace,
    })
}
