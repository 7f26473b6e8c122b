use serde::{Deserialize, Serialize};

use super::param::{dist2, ParamVector};
use crate::error::{Result, SawsError};

/// Convex feasible region with a closed-form Euclidean projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FeasibleSet {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Interval { lo: f64, hi: f64 },
}

impl FeasibleSet {
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        let s = FeasibleSet::Ball { center, radius };
        s.validate()?;
        Ok(s)
    }

    pub fn centered_ball(d: usize, radius: f64) -> Result<Self> {
        Self::ball(vec![0.0; d], radius)
    }

    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let s = FeasibleSet::Box { lower, upper };
        s.validate()?;
        Ok(s)
    }

    /// `B_inf(0, r)` in dimension `d`.
    pub fn cube(d: usize, half_width: f64) -> Result<Self> {
        Self::boxed(vec![-half_width; d], vec![half_width; d])
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        let s = FeasibleSet::Interval { lo, hi };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            FeasibleSet::Ball { center, radius } => {
                if center.is_empty() || !finite(center) || !radius.is_finite() || *radius < 0.0 {
                    return Err(SawsError::config("ball needs a finite centre and radius >= 0"));
                }
            }
            FeasibleSet::Box { lower, upper } => {
                if lower.is_empty() || lower.len() != upper.len() {
                    return Err(SawsError::config("box bounds must be non-empty and of equal length"));
                }
                if !finite(lower) || !finite(upper) || lower.iter().zip(upper).any(|(l, u)| l > u) {
                    return Err(SawsError::config("box needs finite bounds with lower <= upper"));
                }
            }
            FeasibleSet::Interval { lo, hi } => {
                if !lo.is_finite() || !hi.is_finite() || lo > hi {
                    return Err(SawsError::config("interval needs finite lo <= hi"));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            FeasibleSet::Ball { center, .. } => center.len(),
            FeasibleSet::Box { lower, .. } => lower.len(),
            FeasibleSet::Interval { .. } => 1,
        }
    }

    /// `sup_{x,y in set} |x - y|`, the constant `M`.
    pub fn diameter(&self) -> f64 {
        match self {
            FeasibleSet::Ball { radius, .. } => 2.0 * radius,
            FeasibleSet::Box { lower, upper } => dist2(lower, upper),
            FeasibleSet::Interval { lo, hi } => hi - lo,
        }
    }

    /// Radius of the largest ball centred at [`Self::center`] inside the set.
    pub fn inradius(&self) -> f64 {
        match self {
            FeasibleSet::Ball { radius, .. } => *radius,
            FeasibleSet::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| 0.5 * (u - l))
                .fold(f64::INFINITY, f64::min),
            FeasibleSet::Interval { lo, hi } => 0.5 * (hi - lo),
        }
    }

    pub fn center(&self) -> Vec<f64> {
        match self {
            FeasibleSet::Ball { center, .. } => center.clone(),
            FeasibleSet::Box { lower, upper } => {
                lower.iter().zip(upper).map(|(l, u)| 0.5 * (l + u)).collect()
            }
            FeasibleSet::Interval { lo, hi } => vec![0.5 * (lo + hi)],
        }
    }

    /// Per-coordinate bounding box `(lower, upper)`.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            FeasibleSet::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
            FeasibleSet::Box { lower, upper } => (lower.clone(), upper.clone()),
            FeasibleSet::Interval { lo, hi } => (vec![*lo], vec![*hi]),
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match self {
            FeasibleSet::Ball { center, radius } => dist2(x, center) <= radius + tol,
            FeasibleSet::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol),
            FeasibleSet::Interval { lo, hi } => x[0] >= lo - tol && x[0] <= hi + tol,
        }
    }

    /// Euclidean projection.
    pub fn project(&self, x: &ParamVector) -> Result<ParamVector> {
        x.check_dim(self.dim())?;
        let mut out = x.as_slice().to_vec();
        self.project_in_place(&mut out);
        Ok(ParamVector::from_finite(out))
    }

    /// Projection on a raw slice; the caller guarantees the dimension.
    pub fn project_in_place(&self, x: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim());
        match self {
            FeasibleSet::Ball { center, radius } => {
                let dist = dist2(x, center);
                if dist > *radius {
                    let scale = radius / dist;
                    for (v, c) in x.iter_mut().zip(center) {
                        *v = c + (*v - c) * scale;
                    }
                }
            }
            FeasibleSet::Box { lower, upper } => {
                for (v, (l, u)) in x.iter_mut().zip(lower.iter().zip(upper)) {
                    *v = v.clamp(*l, *u);
                }
            }
            FeasibleSet::Interval { lo, hi } => x[0] = x[0].clamp(*lo, *hi),
        }
    }

    /// Minimum of the linear function `coef . theta` over the set, with a minimizer.
    /// Zero coefficients on a box pick the coordinate midpoint.
    pub fn linear_minimizer(&self, coef: &[f64]) -> Vec<f64> {
        match self {
            FeasibleSet::Ball { center, radius } => {
                let norm = super::param::norm2(coef);
                if norm == 0.0 {
                    center.clone()
                } else {
                    center
                        .iter()
                        .zip(coef)
                        .map(|(c, g)| c - radius * g / norm)
                        .collect()
                }
            }
            FeasibleSet::Box { lower, upper } => coef
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(g, (l, u))| {
                    if *g > 0.0 {
                        *l
                    } else if *g < 0.0 {
                        *u
                    } else {
                        0.5 * (l + u)
                    }
                })
                .collect(),
            FeasibleSet::Interval { lo, hi } => {
                let g = coef[0];
                vec![if g > 0.0 {
                    *lo
                } else if g < 0.0 {
                    *hi
                } else {
                    0.5 * (lo + hi)
                }]
            }
        }
    }
}
