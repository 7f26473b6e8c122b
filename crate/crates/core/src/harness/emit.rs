use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::run::{ExperimentResult, RegretTrace};
use crate::error::{Result, SawsError};

pub const TRACE_HEADER: [&str; 5] = ["n", "K_n", "excess", "excess_se", "cum_regret"];

fn fmt(x: f64) -> String {
    format!("{x:?}")
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| SawsError::io(dir, e))?;
    }
    Ok(())
}

/// One trace as `n,K_n,excess,excess_se,cum_regret`.
pub fn write_trace_csv(trace: &RegretTrace, path: &Path) -> Result<()> {
    create_parent(path)?;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(TRACE_HEADER)?;
    for r in &trace.rows {
        w.write_record([r.n.to_string(), r.window.to_string(), fmt(r.excess), fmt(r.excess_se), fmt(r.cum_regret)])?;
    }
    w.flush().map_err(|e| SawsError::io(path, e))
}

/// Long format keyed by `(learner, n)`, one row per learner, replication and period.
pub fn write_plot_data(traces: &[RegretTrace], path: &Path) -> Result<()> {
    create_parent(path)?;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["learner", "replication", "n", "K_n", "excess", "excess_se", "cum_regret"])?;
    for t in traces {
        for r in &t.rows {
            w.write_record([
                t.learner.clone(),
                t.replication.to_string(),
                r.n.to_string(),
                r.window.to_string(),
                fmt(r.excess),
                fmt(r.excess_se),
                fmt(r.cum_regret),
            ])?;
        }
    }
    w.flush().map_err(|e| SawsError::io(path, e))
}

/// Linear-interpolation quantile of sorted data (`h = (n - 1) p`).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile(&v, 0.5)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Quantiles {
    pub mean: f64,
    pub q10: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub q90: f64,
}

impl Quantiles {
    pub fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Self {
            mean: v.iter().sum::<f64>() / v.len() as f64,
            q10: quantile(&v, 0.1),
            q25: quantile(&v, 0.25),
            median: quantile(&v, 0.5),
            q75: quantile(&v, 0.75),
            q90: quantile(&v, 0.9),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LearnerSummary {
    pub final_regret: Quantiles,
    /// Final cumulative regret per replication.
    pub per_replication: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_tau: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub note: &'static str,
    pub config_hash: String,
    pub horizon: usize,
    pub replications: usize,
    pub path_tv: Vec<f64>,
    pub learners: BTreeMap<String, LearnerSummary>,
}

pub fn summarize(result: &ExperimentResult) -> Result<Summary> {
    if result.traces.is_empty() {
        return Err(SawsError::contract("no traces to summarize"));
    }
    let mut learners = BTreeMap::new();
    for label in &result.labels {
        let ts: Vec<&RegretTrace> = result.traces_of(label).collect();
        let finals: Vec<f64> = ts.iter().map(|t| t.final_regret()).collect();
        let c_tau: Vec<f64> = ts.iter().filter_map(|t| t.c_tau).collect();
        learners.insert(
            label.clone(),
            LearnerSummary {
                final_regret: Quantiles::of(&finals),
                per_replication: finals,
                c_tau: (!c_tau.is_empty()).then_some(c_tau),
            },
        );
    }
    Ok(Summary {
        note: "artifact-generated simulation summary",
        config_hash: result.config_hash.clone(),
        horizon: result.traces[0].rows.len(),
        replications: result.replications.len(),
        path_tv: result.replications.iter().map(|r| r.path.realized_tv()).collect(),
        learners,
    })
}

#[derive(Debug, Serialize)]
struct Meta<'a> {
    config_hash: &'a str,
    wall_time_secs: BTreeMap<String, Vec<f64>>,
}

/// Files written by `emit_all`.
#[derive(Debug, Clone)]
pub struct Emitted {
    pub traces: Vec<PathBuf>,
    pub plot_data: PathBuf,
    pub summary: PathBuf,
    pub meta: PathBuf,
}

/// Writes `traces/<learner>/rep_<r>.csv`, `plot_data.csv` and `summary.json`,
/// which depend only on config and seed, plus timing in `meta.json`.
pub fn emit_all(result: &ExperimentResult, dir: &Path) -> Result<Emitted> {
    std::fs::create_dir_all(dir).map_err(|e| SawsError::io(dir, e))?;
    let mut traces = Vec::new();
    for t in &result.traces {
        let p = dir.join("traces").join(&t.learner).join(format!("rep_{:04}.csv", t.replication));
        write_trace_csv(t, &p)?;
        traces.push(p);
    }
    let plot_data = dir.join("plot_data.csv");
    write_plot_data(&result.traces, &plot_data)?;
    let summary = dir.join("summary.json");
    write_json(&summarize(result)?, &summary)?;
    let mut wall = BTreeMap::new();
    for t in &result.traces {
        wall.entry(t.learner.clone()).or_insert_with(Vec::new).push(t.wall_time_secs);
    }
    let meta = dir.join("meta.json");
    write_json(&Meta { config_hash: &result.config_hash, wall_time_secs: wall }, &meta)?;
    Ok(Emitted { traces, plot_data, summary, meta })
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    create_parent(path)?;
    let mut text = serde_json::to_string_pretty(value).map_err(|e| SawsError::Parse(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| SawsError::io(path, e))
}
