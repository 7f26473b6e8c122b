use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{uniform_in_ball, ParameterPath, PathMetric};
use crate::error::{Result, SawsError};
use crate::rng::StreamRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HardRegime {
    /// Gaussian-mean minimizers `θ*_n ∈ B(0, 1/2)`.
    StronglyConvex,
    /// Linear-optimization means `μ*_n ∈ B_∞(0, 1/2)`.
    Lipschitz,
}

/// Near-constant pieces ending at `boundaries` (`N_1 < … < N_J = N - 1`) with
/// jump sizes `r`. `gamma` scales the within-piece budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardInstanceSpec {
    pub regime: HardRegime,
    pub boundaries: Vec<usize>,
    pub r: Vec<f64>,
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default = "half")]
    pub c: f64,
    pub d: usize,
    pub b: usize,
}

fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}

impl HardInstanceSpec {
    pub fn horizon(&self) -> usize {
        self.boundaries.last().map_or(0, |l| l + 1)
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.boundaries.is_empty() || self.boundaries[0] == 0 || self.boundaries.windows(2).any(|w| w[0] >= w[1]) {
            errs.push("hard instance: boundaries must satisfy 0 < N_1 < ... < N_J".to_string());
        }
        if self.r.len() != self.boundaries.len() {
            errs.push(format!("hard instance: {} jumps for {} boundaries", self.r.len(), self.boundaries.len()));
        }
        if self.r.iter().any(|r| !(0.0..=1.0).contains(r)) {
            errs.push("hard instance: jumps r_j must lie in [0, 1]".to_string());
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            errs.push("hard instance: gamma must be finite and >= 0".to_string());
        }
        if !(self.c > 0.0) || !self.c.is_finite() {
            errs.push("hard instance: c must be finite and > 0".to_string());
        }
        if self.d == 0 || self.b == 0 {
            errs.push("hard instance: d and B must be >= 1".to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(SawsError::ConfigInvalid(errs))
        }
    }

    /// Budget of segment `j` (1-based) of `len` periods.
    fn budget(&self, len: usize) -> f64 {
        let ratio = self.d as f64 / (self.b as f64 * len as f64);
        match self.regime {
            HardRegime::StronglyConvex => (8.0 * self.gamma * self.c * self.c * ratio).sqrt(),
            HardRegime::Lipschitz => self.gamma * ratio.sqrt(),
        }
    }

    fn full_boundaries(&self) -> Vec<usize> {
        std::iter::once(0).chain(self.boundaries.iter().copied()).collect()
    }
}

/// Samples one instance of the class.
pub fn gen_hard_instance(spec: &HardInstanceSpec, rng: &mut StreamRng) -> Result<ParameterPath> {
    spec.validate()?;
    let values = match spec.regime {
        HardRegime::StronglyConvex => markov_ball_path(spec, rng),
        HardRegime::Lipschitz => cube_walk_path(spec, rng),
    };
    let metric = match spec.regime {
        HardRegime::StronglyConvex => PathMetric::Euclidean,
        HardRegime::Lipschitz => PathMetric::MeanAbs,
    };
    ParameterPath::from_values(values, metric)?.with_boundaries(spec.full_boundaries())
}

/// Centre of the ball `B(x - s·x/(4‖x‖), s/4)`, with `0/0 = 0`.
fn pulled_centre(x: &[f64], s: f64) -> Vec<f64> {
    let norm = x.iter().map(|t| t * t).sum::<f64>().sqrt();
    if norm == 0.0 {
        return x.to_vec();
    }
    x.iter().map(|t| t - s * t / (4.0 * norm)).collect()
}

fn markov_ball_path(spec: &HardInstanceSpec, rng: &mut StreamRng) -> Vec<Vec<f64>> {
    let n = spec.horizon();
    let mut ends = spec.full_boundaries();
    ends.push(n);
    let jumps: Vec<f64> = std::iter::once(1.0).chain(spec.r.iter().copied()).collect();
    let mut values: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut prev = vec![0.0; spec.d];
    for j in 0..ends.len() - 1 {
        let first = uniform_in_ball(&pulled_centre(&prev, jumps[j]), jumps[j] / 4.0, rng);
        values.push(first.clone());
        let len = ends[j + 1] - ends[j];
        if len >= 2 {
            let inner = spec.budget(len).min(1.0);
            let centre = pulled_centre(&first, inner);
            for _ in 2..=len {
                values.push(uniform_in_ball(&centre, inner / 4.0, rng));
            }
        }
        prev = values.last().unwrap().clone();
    }
    values
}

fn cube_walk_path(spec: &HardInstanceSpec, rng: &mut StreamRng) -> Vec<Vec<f64>> {
    let n = spec.horizon();
    let mut ends = spec.full_boundaries();
    ends.push(n);
    let clip = |v: f64| v.clamp(-0.5, 0.5);
    let mut x: Vec<f64> = (0..spec.d).map(|_| rng.gen_range(-0.5..=0.5)).collect();
    let mut values = Vec::with_capacity(n);
    for j in 0..ends.len() - 1 {
        if j > 0 {
            let r = spec.r[j - 1];
            for t in x.iter_mut() {
                *t = clip(*t + if rng.gen::<bool>() { r } else { -r });
            }
        }
        values.push(x.clone());
        let len = ends[j + 1] - ends[j];
        if len >= 2 {
            let s = spec.budget(len) / (len - 1) as f64;
            for _ in 2..=len {
                for t in x.iter_mut() {
                    *t = clip(*t + if rng.gen::<bool>() { s } else { -s });
                }
                values.push(x.clone());
            }
        }
    }
    values
}

/// Recomputes the class constraints from raw values; returns every violation.
pub fn check_hard_instance(path: &ParameterPath, spec: &HardInstanceSpec) -> std::result::Result<(), Vec<String>> {
    let mut errs = Vec::new();
    let v = path.values();
    if v.len() != spec.horizon() {
        return Err(vec![format!("path has {} periods, class needs {}", v.len(), spec.horizon())]);
    }
    let slack = 1e-12;
    let eu = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let l1 = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64;
    for (i, x) in v.iter().enumerate() {
        let inside = match spec.regime {
            HardRegime::StronglyConvex => x.iter().map(|t| t * t).sum::<f64>().sqrt() <= 0.5 + slack,
            HardRegime::Lipschitz => x.iter().all(|t| t.abs() <= 0.5 + slack),
        };
        if !inside {
            errs.push(format!("period {} lies outside the parameter region", i + 1));
        }
    }
    let ends = spec.full_boundaries();
    for j in 1..ends.len() {
        let (lo, hi) = (ends[j - 1] + 1, ends[j]);
        let seg = &v[lo - 1..hi];
        let used = match spec.regime {
            HardRegime::StronglyConvex => {
                let mut m = 0.0_f64;
                for a in seg {
                    for b in seg {
                        m = m.max(eu(a, b));
                    }
                }
                m
            }
            HardRegime::Lipschitz => seg.windows(2).map(|w| l1(&w[0], &w[1])).sum(),
        };
        let budget = spec.budget(hi - lo + 1);
        if used > budget + slack {
            errs.push(format!("segment {j} (periods {lo}..{hi}) varies {used} > budget {budget}"));
        }
        let jump = match spec.regime {
            HardRegime::StronglyConvex => eu(&v[hi], &v[hi - 1]),
            HardRegime::Lipschitz => l1(&v[hi], &v[hi - 1]),
        };
        if jump > spec.r[j - 1] + slack {
            errs.push(format!("jump after period {hi} is {jump} > r_{j} = {}", spec.r[j - 1]));
        }
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(errs)
    }
}
