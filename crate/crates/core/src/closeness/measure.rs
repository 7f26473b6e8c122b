use serde::{Deserialize, Serialize};

use super::grid::GridFunction;
use crate::error::{Result, SawsError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosenessParams {
    pub eps: f64,
    pub delta: f64,
}

impl ClosenessParams {
    pub fn new(eps: f64, delta: f64) -> Result<Self> {
        if !(eps >= 0.0 && delta >= 0.0) || !eps.is_finite() || !delta.is_finite() {
            return Err(SawsError::contract("closeness parameters must be finite and >= 0"));
        }
        Ok(Self { eps, delta })
    }
}

/// Smallest `δ ≥ 0` making `f` and `g` `(ε, δ)`-close at every grid point.
pub fn min_delta(f: &GridFunction, g: &GridFunction, eps: f64) -> Result<f64> {
    f.check_same_grid(g)?;
    if !(eps >= 0.0) {
        return Err(SawsError::contract("eps must be >= 0"));
    }
    let shrink = (-eps).exp();
    let (fm, gm) = (f.min(), g.min());
    let mut delta = 0.0_f64;
    for (fv, gv) in f.values().iter().zip(g.values()) {
        let (ft, gt) = (fv - fm, gv - gm);
        delta = delta.max(shrink * gt - ft).max(shrink * ft - gt);
    }
    Ok(delta)
}

pub fn is_close(f: &GridFunction, g: &GridFunction, eps: f64, delta: f64) -> Result<bool> {
    Ok(min_delta(f, g, eps)? <= delta)
}

/// Levels at which the sub-level sandwich can switch: every realized gap of
/// `f` and every inflated gap `e^ε(g̃ + δ)`.
pub fn exhaustive_t_grid(f: &GridFunction, g: &GridFunction, eps: f64, delta: f64) -> Vec<f64> {
    let grow = eps.exp();
    let mut ts: Vec<f64> = f.gaps();
    ts.extend(g.gaps().into_iter().map(|x| grow * (x + delta)));
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts
}

/// Checks `S(g, e^{-ε}t - δ) ⊆ S(f, t) ⊆ S(g, e^ε(t + δ))` at every level in
/// `ts`, with `S(h, t) = {θ : h(θ) - min h ≤ t}` over the grid.
pub fn sublevel_inclusion_holds(
    f: &GridFunction,
    g: &GridFunction,
    eps: f64,
    delta: f64,
    ts: &[f64],
) -> Result<bool> {
    f.check_same_grid(g)?;
    let (fg, gg) = (f.gaps(), g.gaps());
    let grow = eps.exp();
    for &t in ts {
        let outer = grow * (t + delta);
        for (ft, gt) in fg.iter().zip(&gg) {
            // g̃ ≤ e^{-ε}t - δ, written as on the t-grid so switch levels compare exactly
            if grow * (*gt + delta) <= t && *ft > t {
                return Ok(false);
            }
            if *ft <= t && *gt > outer {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `max_{i,j} min_delta(g_i, g_j, ε)`.
pub fn quasi_stationarity_delta(seq: &[GridFunction], eps: f64) -> Result<f64> {
    let mut worst = 0.0_f64;
    for (i, a) in seq.iter().enumerate() {
        for b in &seq[i + 1..] {
            worst = worst.max(min_delta(a, b, eps)?);
        }
    }
    Ok(worst)
}

/// Hypotheses under which two functions are provably close.
#[derive(Debug, Clone, PartialEq)]
pub enum SufficientCondition {
    /// `sup |f - g| ≤ d0`.
    SupNorm { d0: f64 },
    /// `sup ‖∇f - ∇g‖ ≤ d1` on a domain of diameter `m`.
    GradientSup { m: f64, d1: f64 },
    /// Gradient bound `d1` for `ρ`-strongly convex, `L`-smooth functions on a
    /// domain of diameter `m` whose minimizer of `g` sits `r` inside the boundary.
    StronglyConvexGradient { rho: f64, l: f64, r: f64, m: f64, d1: f64 },
    /// `f` is `ρ`-strongly convex, `L`-smooth and `g` is a shift of `f` with
    /// the stated minimizers.
    Minimizers { rho: f64, l: f64, theta_f: Vec<f64>, theta_g: Vec<f64> },
}

pub fn closeness_from_sufficient(cond: &SufficientCondition) -> Result<ClosenessParams> {
    let nonneg = |name: &str, v: f64| {
        if v >= 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(SawsError::contract(format!("{name} must be finite and >= 0")))
        }
    };
    let curvature = |rho: f64, l: f64| {
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(SawsError::contract("rho must be > 0"));
        }
        if !(l >= rho) || !l.is_finite() {
            return Err(SawsError::contract("L must be finite and >= rho"));
        }
        Ok(())
    };
    match cond {
        SufficientCondition::SupNorm { d0 } => {
            nonneg("D0", *d0)?;
            ClosenessParams::new(0.0, 2.0 * d0)
        }
        SufficientCondition::GradientSup { m, d1 } => {
            nonneg("M", *m)?;
            nonneg("D1", *d1)?;
            ClosenessParams::new(0.0, 2.0 * m * d1)
        }
        SufficientCondition::StronglyConvexGradient { rho, l, r, m, d1 } => {
            curvature(*rho, *l)?;
            nonneg("r", *r)?;
            nonneg("M", *m)?;
            nonneg("D1", *d1)?;
            if *d1 <= rho * r {
                return ClosenessParams::new(std::f64::consts::LN_2, 3.0 * l * d1 * d1 / (rho * rho));
            }
            let ratio = d1 / (rho * r);
            ClosenessParams::new(std::f64::consts::LN_2, 3.0 * l * m * r * (ratio * ratio).min(ratio))
        }
        SufficientCondition::Minimizers { rho, l, theta_f, theta_g } => {
            curvature(*rho, *l)?;
            if theta_f.len() != theta_g.len() {
                return Err(SawsError::DimensionMismatch {
                    expected: theta_f.len(),
                    got: theta_g.len(),
                });
            }
            let dist2: f64 = theta_f.iter().zip(theta_g).map(|(a, b)| (a - b) * (a - b)).sum();
            ClosenessParams::new((2.0 * l / rho).ln(), 0.5 * rho * dist2)
        }
    }
}
