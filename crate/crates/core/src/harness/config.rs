use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::domain::{FeasibleSet, MonteCarloSpec, ParamVector, Regularity};
use crate::envgen::{
    gen_hard_instance, gen_tv_budget, gen_zigzag, HardInstanceSpec, HardRegime, ParameterPath, PathMetric,
    StepLaw, Zigzag,
};
use crate::error::{Result, SawsError};
use crate::problems::{Problem, ProblemFamily};
use crate::rng::StreamRng;
use crate::saws::ThresholdSchedule;
use crate::solvers::Solver;

/// Default rolling cross-validation grid for `C_tau`.
pub const DEFAULT_CV_GRID: [f64; 4] = [0.01, 0.1, 1.0, 10.0];

fn one() -> usize {
    1
}
fn yes() -> bool {
    true
}
fn unit() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn alpha_default() -> f64 {
    0.05
}
fn prefix_default() -> usize {
    256
}

const MAX_PERIOD_ERRORS: usize = 3;

/// One experiment: an environment, SAWS and its baselines, and replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemFamily,
    pub dim: usize,
    /// Feasible set; the family default when absent.
    #[serde(default)]
    pub set: Option<FeasibleSet>,
    pub path: PathSpec,
    pub horizon: usize,
    pub batch_size: usize,
    #[serde(default)]
    pub schedule: ScheduleSpec,
    #[serde(default)]
    pub solver: Solver,
    #[serde(default)]
    pub baselines: Vec<BaselineSpec>,
    #[serde(default = "one")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub monte_carlo: MonteCarloSpec,
    /// First decision; the projection of the origin when absent.
    #[serde(default)]
    pub theta1: Option<Vec<f64>>,
    #[serde(default = "yes")]
    pub parallel: bool,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

/// How `θ*_1..θ*_N` (or `μ*_n`) are produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PathSpec {
    Constant {
        value: Vec<f64>,
    },
    /// `levels[i]` holds from period `starts[i]` until the next start.
    Piecewise {
        levels: Vec<Vec<f64>>,
        starts: Vec<usize>,
    },
    /// Scalar zigzag on `[0, 1]`, mapped through `offset + scale·θ`.
    Zigzag {
        pattern: Zigzag,
        #[serde(default = "unit")]
        scale: f64,
        #[serde(default)]
        offset: f64,
    },
    /// Random path with variation `v` inside the admissible region.
    TvBudget {
        v: f64,
        #[serde(default)]
        law: StepLaw,
    },
    HardInstance {
        boundaries: Vec<usize>,
        r: Vec<f64>,
        #[serde(default = "unit")]
        gamma: f64,
        #[serde(default = "half")]
        c: f64,
    },
    Csv {
        file: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    /// Must match the family's regime when given.
    #[serde(default)]
    pub regime: Option<Regularity>,
    /// Fixed `C_tau`; rolling cross-validation over `cv_grid` when absent.
    #[serde(default)]
    pub c_tau: Option<f64>,
    #[serde(default)]
    pub cv_grid: Option<Vec<f64>>,
    #[serde(default = "prefix_default")]
    pub cv_prefix: usize,
    #[serde(default = "alpha_default")]
    pub alpha: f64,
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        Self {
            regime: None,
            c_tau: None,
            cv_grid: None,
            cv_prefix: prefix_default(),
            alpha: alpha_default(),
        }
    }
}

impl ScheduleSpec {
    pub fn grid(&self) -> Vec<f64> {
        match (self.c_tau, &self.cv_grid) {
            (Some(c), _) => vec![c],
            (None, Some(g)) => g.clone(),
            (None, None) => DEFAULT_CV_GRID.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BaselineSpec {
    FixedWindow {
        k: usize,
    },
    /// Restarts at each boundary; uses the path's known boundaries when absent.
    RestartOracle {
        #[serde(default)]
        boundaries: Option<Vec<usize>>,
    },
    ErmAll,
}

impl BaselineSpec {
    pub fn label(&self) -> String {
        match self {
            BaselineSpec::FixedWindow { k } => format!("fixed-window-{k}"),
            BaselineSpec::RestartOracle { .. } => "restart-oracle".into(),
            BaselineSpec::ErmAll => "erm-all".into(),
        }
    }
}

/// Grid axes for `sweep`; each axis replaces one field of the base experiment.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Variation budgets (tv-budget paths).
    #[serde(default)]
    pub v: Vec<f64>,
    /// Step sizes (alternating zigzags).
    #[serde(default)]
    pub u: Vec<f64>,
    /// Fixed `C_tau` values.
    #[serde(default)]
    pub c_tau: Vec<f64>,
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| SawsError::config(format!("invalid config: {e}")))
    }

    /// Reads a TOML config; relative CSV paths resolve against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| SawsError::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let PathSpec::Csv { file } = &mut cfg.path {
            if file.is_relative() {
                if let Some(dir) = path.parent() {
                    *file = dir.join(&*file);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| SawsError::config(format!("cannot serialize config: {e}")))
    }

    /// SHA-256 of the canonical JSON form, excluding output location and execution mode.
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        canon.output = OutputSpec::default();
        canon.parallel = true;
        let bytes = serde_json::to_vec(&canon).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn build_problem(&self) -> Result<Problem> {
        Problem::new(self.problem.clone(), self.dim, self.set.clone())
    }

    pub fn regime(&self) -> Regularity {
        self.problem.regularity()
    }

    pub fn schedules(&self) -> Result<Vec<ThresholdSchedule>> {
        self.schedule
            .grid()
            .into_iter()
            .map(|c| ThresholdSchedule::new(self.regime(), c, self.schedule.alpha, self.dim, self.batch_size))
            .collect()
    }

    pub fn labels(&self) -> Vec<String> {
        std::iter::once("saws".to_string()).chain(self.baselines.iter().map(BaselineSpec::label)).collect()
    }

    pub fn path_metric(&self) -> PathMetric {
        match self.problem {
            ProblemFamily::LinearOpt => PathMetric::MeanAbs,
            _ => PathMetric::Euclidean,
        }
    }

    /// Every validation failure, not just the first.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let problem = match self.build_problem() {
            Ok(p) => Some(p),
            Err(SawsError::ConfigInvalid(e)) => {
                errs.extend(e);
                None
            }
            Err(e) => {
                errs.push(e.to_string());
                None
            }
        };
        if self.horizon == 0 {
            errs.push("horizon must be >= 1".into());
        }
        if self.batch_size == 0 {
            errs.push("batch_size must be >= 1".into());
        }
        if self.replications == 0 {
            errs.push("replications must be >= 1".into());
        }
        if let Some(r) = self.schedule.regime {
            if r != self.regime() {
                errs.push(format!("schedule regime {r:?} does not match family {}", self.problem.name()));
            }
        }
        let s = &self.schedule;
        if s.c_tau.is_some() && s.cv_grid.is_some() {
            errs.push("schedule: give c_tau or cv_grid, not both".into());
        }
        if s.grid().is_empty() {
            errs.push("schedule: cv_grid is empty".into());
        }
        if s.grid().iter().any(|c| !(*c > 0.0) || !c.is_finite()) {
            errs.push("schedule: C_tau values must be finite and > 0".into());
        }
        if !(s.alpha > 0.0 && s.alpha < 1.0) {
            errs.push(format!("schedule: alpha must lie in (0, 1) (got {})", s.alpha));
        }
        if s.c_tau.is_none() && (s.cv_prefix < 2 || self.horizon < 2) {
            errs.push("schedule: cross-validation needs cv_prefix >= 2 and horizon >= 2".into());
        }
        if !(self.solver.a > 0.0) || self.solver.max_iters == 0 {
            errs.push("solver: a must be > 0 and max_iters >= 1".into());
        }
        let mut labels = self.labels();
        labels.sort();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            errs.push("baselines: duplicate entries".into());
        }
        for b in &self.baselines {
            match b {
                BaselineSpec::FixedWindow { k: 0 } => errs.push("fixed-window: k must be >= 1".into()),
                BaselineSpec::RestartOracle { boundaries: Some(bs) } => {
                    if let Err(e) = check_boundaries(bs, self.horizon) {
                        errs.push(format!("restart-oracle: {e}"));
                    }
                }
                _ => {}
            }
        }
        if let (Some(t), Some(p)) = (&self.theta1, &problem) {
            match ParamVector::new(t.clone()) {
                Ok(t) if t.dim() == self.dim && p.set().contains(&t, 1e-12) => {}
                _ => errs.push("theta1 must be a finite point of the feasible set".into()),
            }
        }
        errs.extend(self.path_errors());
        if let Some(sw) = &self.sweep {
            if !sw.v.is_empty() && !matches!(self.path, PathSpec::TvBudget { .. }) {
                errs.push("sweep: v needs a tv-budget path".into());
            }
            if !sw.u.is_empty() && !matches!(self.path, PathSpec::Zigzag { pattern: Zigzag::Alternating { .. }, .. }) {
                errs.push("sweep: u needs an alternating zigzag path".into());
            }
            if sw.v.is_empty() && sw.u.is_empty() && sw.c_tau.is_empty() {
                errs.push("sweep: no axis given".into());
            }
        }
        // A deterministic path is generated once here so parameter errors surface early.
        if errs.is_empty() && self.path_is_deterministic() {
            let mut rng = crate::rng::SeedTree::new(self.seed).stream(crate::rng::Purpose::Path, 0, 0);
            match self.generate_path(problem.as_ref().expect("valid problem"), &mut rng) {
                Ok(path) => {
                    let p = problem.as_ref().expect("valid problem");
                    let bad: Vec<String> = path
                        .values()
                        .iter()
                        .enumerate()
                        .filter_map(|(i, v)| p.check_parameter(i + 1, v).err().map(|e| e.to_string()))
                        .collect();
                    let shown = bad.len().min(MAX_PERIOD_ERRORS);
                    errs.extend(bad[..shown].iter().cloned());
                    if bad.len() > shown {
                        errs.push(format!("... and {} more periods", bad.len() - shown));
                    }
                }
                Err(SawsError::ConfigInvalid(e)) => errs.extend(e),
                Err(e) => errs.push(e.to_string()),
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(SawsError::ConfigInvalid(errs))
        }
    }

    fn path_is_deterministic(&self) -> bool {
        !matches!(self.path, PathSpec::TvBudget { .. } | PathSpec::HardInstance { .. })
    }

    fn path_errors(&self) -> Vec<String> {
        let mut errs = Vec::new();
        match &self.path {
            PathSpec::Constant { value } => {
                if value.len() != self.dim {
                    errs.push(format!("path: constant value has length {} but dim = {}", value.len(), self.dim));
                }
            }
            PathSpec::Piecewise { levels, starts } => {
                if levels.len() != starts.len() || levels.is_empty() {
                    errs.push("path: piecewise needs one start per level".into());
                }
                if starts.first() != Some(&1) || starts.windows(2).any(|w| w[0] >= w[1]) {
                    errs.push("path: piecewise starts must be 1 < s_2 < ...".into());
                }
                if starts.last().is_some_and(|s| *s > self.horizon) {
                    errs.push("path: piecewise start beyond the horizon".into());
                }
                if levels.iter().any(|l| l.len() != self.dim) {
                    errs.push(format!("path: piecewise levels must have length dim = {}", self.dim));
                }
            }
            PathSpec::Zigzag { scale, offset, .. } => {
                if self.dim != 1 {
                    errs.push("path: zigzags need dim = 1".into());
                }
                if !scale.is_finite() || !offset.is_finite() {
                    errs.push("path: zigzag scale and offset must be finite".into());
                }
            }
            PathSpec::TvBudget { v, .. } => {
                if !(*v >= 0.0) || !v.is_finite() {
                    errs.push("path: v must be finite and >= 0".into());
                }
                if self.path_region().is_none() {
                    errs.push(format!("path: tv-budget has no admissible region for {}", self.problem.name()));
                }
            }
            PathSpec::HardInstance { boundaries, .. } => {
                if !matches!(self.problem, ProblemFamily::GaussianMean { .. } | ProblemFamily::LinearOpt) {
                    errs.push("path: hard instances need gaussian-mean or linear-opt".into());
                }
                if boundaries.last().map(|l| l + 1) != Some(self.horizon) {
                    errs.push("path: hard-instance boundaries must end at horizon - 1".into());
                }
                if let Err(SawsError::ConfigInvalid(e)) = self.hard_spec().map(|s| s.validate()).and_then(|r| r) {
                    errs.extend(e);
                }
            }
            PathSpec::Csv { file } => {
                if !file.exists() {
                    errs.push(format!("path: {} does not exist", file.display()));
                }
            }
        }
        errs
    }

    fn path_region(&self) -> Option<FeasibleSet> {
        let p = self.build_problem().ok()?;
        p.admissible_region().or_else(|| Some(p.set().clone()))
    }

    fn hard_spec(&self) -> Result<HardInstanceSpec> {
        match &self.path {
            PathSpec::HardInstance { boundaries, r, gamma, c } => Ok(HardInstanceSpec {
                regime: match self.problem {
                    ProblemFamily::LinearOpt => HardRegime::Lipschitz,
                    _ => HardRegime::StronglyConvex,
                },
                boundaries: boundaries.clone(),
                r: r.clone(),
                gamma: *gamma,
                c: *c,
                d: self.dim,
                b: self.batch_size,
            }),
            _ => Err(SawsError::contract("not a hard-instance path")),
        }
    }

    /// The path of one replication; `rng` is only drawn from by random generators.
    pub fn generate_path(&self, problem: &Problem, rng: &mut StreamRng) -> Result<ParameterPath> {
        let n = self.horizon;
        let metric = self.path_metric();
        let path = match &self.path {
            PathSpec::Constant { value } => {
                hinted(ParameterPath::from_values(vec![value.clone(); n], metric)?, vec![0, n.saturating_sub(1)])?
            }
            PathSpec::Piecewise { levels, starts } => {
                let mut values = Vec::with_capacity(n);
                for (i, level) in levels.iter().enumerate() {
                    let end = starts.get(i + 1).map_or(n, |s| s - 1);
                    values.extend(std::iter::repeat_n(level.clone(), end + 1 - starts[i]));
                }
                let mut b: Vec<usize> = std::iter::once(0)
                    .chain(starts.iter().skip(1).map(|s| s - 1))
                    .filter(|x| *x < n - 1)
                    .collect();
                b.push(n.saturating_sub(1));
                b.dedup();
                hinted(ParameterPath::from_values(values, metric)?, b)?
            }
            PathSpec::Zigzag { pattern, scale, offset } => {
                let base = gen_zigzag(*pattern, n)?;
                let hint = zigzag_boundaries(*pattern, n);
                let p = base.affine(*scale, &[*offset])?;
                match hint {
                    Some(h) => p.with_boundaries(h)?,
                    None => p,
                }
            }
            PathSpec::TvBudget { v, law } => {
                let region = self
                    .path_region()
                    .ok_or_else(|| SawsError::config("tv-budget path has no admissible region"))?;
                gen_tv_budget(n, *v, *law, &region, rng)?
            }
            PathSpec::HardInstance { .. } => gen_hard_instance(&self.hard_spec()?, rng)?,
            PathSpec::Csv { file } => ParameterPath::read_csv(file, metric)?,
        };
        if path.len() != n {
            return Err(SawsError::config(format!("path has {} periods but horizon = {n}", path.len())));
        }
        if path.dim() != problem.dim() {
            return Err(SawsError::config(format!("path has dimension {} but dim = {}", path.dim(), problem.dim())));
        }
        Ok(path)
    }
}

fn hinted(path: ParameterPath, boundaries: Vec<usize>) -> Result<ParameterPath> {
    if path.len() < 2 {
        return Ok(path);
    }
    path.with_boundaries(boundaries)
}

/// Segment ends the zigzag patterns are built around, where the pattern fixes them.
fn zigzag_boundaries(pattern: Zigzag, n: usize) -> Option<Vec<usize>> {
    let nf = n as f64;
    let mut b: Vec<usize> = match pattern {
        Zigzag::Small => vec![0],
        Zigzag::Large => {
            let block = (nf.cbrt() + 1e-9).floor().max(1.0) as usize;
            (0..n - 1).step_by(block).collect()
        }
        Zigzag::Uneven => {
            let head = ((nf.sqrt() + 1e-9).floor() as usize).min(n - 1);
            (0..=head).filter(|x| *x < n - 1).collect()
        }
        Zigzag::Alternating { .. } => return None,
    };
    b.push(n - 1);
    Some(b)
}

pub(crate) fn check_boundaries(b: &[usize], horizon: usize) -> std::result::Result<(), String> {
    let ok = b.len() >= 2
        && b[0] == 0
        && b.windows(2).all(|w| w[0] < w[1])
        && *b.last().unwrap() == horizon.saturating_sub(1);
    if ok {
        Ok(())
    } else {
        Err(format!("boundaries must run 0 < ... < {}", horizon.saturating_sub(1)))
    }
}
