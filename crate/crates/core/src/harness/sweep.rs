use std::path::Path;

use serde::Serialize;

use super::config::{ExperimentConfig, PathSpec};
use super::emit::{emit_all, summarize};
use super::run::run_experiment;
use crate::envgen::Zigzag;
use crate::error::{Result, SawsError};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub point: usize,
    pub v: Option<f64>,
    pub u: Option<f64>,
    pub c_tau: Option<f64>,
    pub learner: String,
    pub median_regret: f64,
    pub q25: f64,
    pub q75: f64,
}

/// Point index, its `(v, u, c_tau)` values and the concrete experiment.
pub type SweepPoint = (usize, [Option<f64>; 3], ExperimentConfig);

/// Concrete experiments for every grid point, in row-major order over `(v, u, c_tau)`.
pub fn sweep_points(config: &ExperimentConfig) -> Result<Vec<SweepPoint>> {
    let spec = config.sweep.clone().ok_or_else(|| SawsError::config("config has no [sweep] table"))?;
    let axis = |xs: &[f64]| -> Vec<Option<f64>> {
        if xs.is_empty() {
            vec![None]
        } else {
            xs.iter().copied().map(Some).collect()
        }
    };
    let mut out = Vec::new();
    for v in axis(&spec.v) {
        for u in axis(&spec.u) {
            for c in axis(&spec.c_tau) {
                let mut cfg = config.clone();
                cfg.sweep = None;
                if let (Some(x), PathSpec::TvBudget { v, .. }) = (v, &mut cfg.path) {
                    *v = x;
                }
                if let (Some(x), PathSpec::Zigzag { pattern: Zigzag::Alternating { u }, .. }) = (u, &mut cfg.path) {
                    *u = x;
                }
                if let Some(x) = c {
                    cfg.schedule.c_tau = Some(x);
                    cfg.schedule.cv_grid = None;
                }
                out.push((out.len(), [v, u, c], cfg));
            }
        }
    }
    Ok(out)
}

/// Runs every grid point, writing each into `dir/point_<i>/` and the grid summary
/// into `dir/sweep.csv`.
pub fn run_sweep(config: &ExperimentConfig, dir: &Path) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let mut rows = Vec::new();
    for (i, [v, u, c], cfg) in sweep_points(config)? {
        let result = run_experiment(&cfg)?;
        emit_all(&result, &dir.join(format!("point_{i:03}")))?;
        for (learner, s) in summarize(&result)?.learners {
            rows.push(SweepRow {
                point: i,
                v,
                u,
                c_tau: c,
                learner,
                median_regret: s.final_regret.median,
                q25: s.final_regret.q25,
                q75: s.final_regret.q75,
            });
        }
    }
    let path = dir.join("sweep.csv");
    std::fs::create_dir_all(dir).map_err(|e| SawsError::io(dir, e))?;
    let mut w = csv::Writer::from_path(&path)?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| SawsError::io(&path, e))?;
    Ok(rows)
}
