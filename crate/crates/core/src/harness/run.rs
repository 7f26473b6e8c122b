use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::baselines::{WindowLearner, WindowPolicy};
use super::config::{BaselineSpec, ExperimentConfig};
use crate::domain::{MonteCarloSpec, ParamVector};
use crate::error::{Result, SawsError};
use crate::envgen::ParameterPath;
use crate::problems::{make_environment, Environment, Problem};
use crate::rng::{Purpose, SeedTree};
use crate::saws::{default_theta1, select_hyperparameter_cv, Learner, OnlineState, ThresholdRule};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub n: usize,
    pub window: usize,
    pub theta: Vec<f64>,
    pub excess: f64,
    pub excess_se: f64,
    pub cum_regret: f64,
}

/// One learner's run over one replication.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretTrace {
    pub learner: String,
    pub replication: usize,
    pub rows: Vec<TraceRow>,
    /// `C_tau` used by SAWS.
    pub c_tau: Option<f64>,
    pub wall_time_secs: f64,
    pub config_hash: String,
}

impl RegretTrace {
    pub fn final_regret(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.cum_regret)
    }

    pub fn regret_at(&self, n: usize) -> f64 {
        self.rows[n - 1].cum_regret
    }
}

#[derive(Debug, Clone)]
pub struct ReplicationInfo {
    pub replication: usize,
    pub path: ParameterPath,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config_hash: String,
    pub labels: Vec<String>,
    /// Sorted by replication, then learner order.
    pub traces: Vec<RegretTrace>,
    pub replications: Vec<ReplicationInfo>,
}

impl ExperimentResult {
    pub fn traces_of<'a>(&'a self, learner: &'a str) -> impl Iterator<Item = &'a RegretTrace> + 'a {
        self.traces.iter().filter(move |t| t.learner == learner)
    }
}

/// Runs SAWS and every baseline on common sample streams, one environment per
/// replication. Output is identical whether or not `config.parallel` is set.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let problem = config.build_problem()?;
    let hash = config.hash();
    let run = || -> Result<Vec<(Vec<RegretTrace>, ReplicationInfo)>> {
        let reps: Vec<usize> = (0..config.replications).collect();
        reps.par_iter().map(|&r| run_replication(config, &problem, r, &hash)).collect()
    };
    let per_rep = if config.parallel {
        run()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .map_err(|e| SawsError::contract(format!("cannot build thread pool: {e}")))?
            .install(run)?
    };
    let mut traces = Vec::new();
    let mut replications = Vec::new();
    for (t, info) in per_rep {
        traces.extend(t);
        replications.push(info);
    }
    Ok(ExperimentResult { config_hash: hash, labels: config.labels(), traces, replications })
}

fn run_replication(
    config: &ExperimentConfig,
    problem: &Problem,
    replication: usize,
    hash: &str,
) -> Result<(Vec<RegretTrace>, ReplicationInfo)> {
    let seeds = SeedTree::new(config.seed);
    let mut path_rng = seeds.stream(Purpose::Path, replication as u64, 0);
    let path = config.generate_path(problem, &mut path_rng)?;
    let mc = MonteCarloSpec { seed: Some(config.monte_carlo.seed.unwrap_or(config.seed)), ..config.monte_carlo };
    let env = make_environment(problem, path.values(), config.batch_size, &seeds, replication, &mc)?;
    let theta1 = match &config.theta1 {
        Some(t) => ParamVector::new(t.clone())?,
        None => default_theta1(problem.set()),
    };
    let mut traces = Vec::with_capacity(1 + config.baselines.len());

    let start = Instant::now();
    let schedules = config.schedules()?;
    let chosen = if schedules.len() == 1 {
        schedules[0]
    } else {
        let prefix = &env.batches[..config.schedule.cv_prefix.min(env.batches.len())];
        let cv = select_hyperparameter_cv(
            problem.model().clone(),
            problem.set(),
            &schedules,
            prefix,
            &config.solver,
            Some(theta1.clone()),
        )?;
        schedules[cv.chosen]
    };
    let rule: Arc<dyn ThresholdRule> = Arc::new(chosen);
    let mut saws = OnlineState::new(problem.model().clone(), problem.set().clone(), rule, config.solver, Some(theta1.clone()))?;
    let mut trace = evaluate(&mut saws, &env, replication, hash)?;
    trace.c_tau = Some(chosen.c_tau);
    trace.wall_time_secs = start.elapsed().as_secs_f64();
    traces.push(trace);

    for spec in &config.baselines {
        let start = Instant::now();
        let policy = match spec {
            BaselineSpec::FixedWindow { k } => WindowPolicy::Fixed(*k),
            BaselineSpec::ErmAll => WindowPolicy::All,
            BaselineSpec::RestartOracle { boundaries } => {
                WindowPolicy::Restart(boundaries.clone().unwrap_or_else(|| oracle_boundaries(&path)))
            }
        };
        let mut learner = WindowLearner::new(
            spec.label(),
            problem.model().clone(),
            problem.set().clone(),
            config.solver,
            policy,
            theta1.clone(),
        );
        let mut trace = evaluate(&mut learner, &env, replication, hash)?;
        trace.wall_time_secs = start.elapsed().as_secs_f64();
        traces.push(trace);
    }
    Ok((traces, ReplicationInfo { replication, path }))
}

/// The path's known boundaries, or else every change point.
pub fn oracle_boundaries(path: &ParameterPath) -> Vec<usize> {
    if let Some(b) = path.boundaries() {
        return b.to_vec();
    }
    let v = path.values();
    let last = v.len().saturating_sub(1);
    let mut b: Vec<usize> = std::iter::once(0)
        .chain((1..v.len()).filter(|&i| v[i] != v[i - 1]))
        .filter(|x| *x < last)
        .collect();
    b.dedup();
    b.push(last);
    b
}

/// Drives `learner` over the environment and records per-period excess risk.
pub fn evaluate(learner: &mut dyn Learner, env: &Environment, replication: usize, hash: &str) -> Result<RegretTrace> {
    let mut rows = Vec::with_capacity(env.batches.len());
    let mut cum = 0.0;
    for (i, (batch, pop)) in env.batches.iter().zip(&env.populations).enumerate() {
        let d = learner.decide()?;
        let e = pop.population_excess(&d.theta)?;
        cum += e.value;
        rows.push(TraceRow {
            n: i + 1,
            window: d.window,
            theta: d.theta.into_vec(),
            excess: e.value,
            excess_se: e.se,
            cum_regret: cum,
        });
        learner.observe(batch)?;
    }
    Ok(RegretTrace {
        learner: learner.label(),
        replication,
        rows,
        c_tau: None,
        wall_time_secs: 0.0,
        config_hash: hash.to_string(),
    })
}
