use std::sync::Arc;

use serde::Serialize;

use super::grid::GridFunction;
use super::measure::min_delta;
use super::segment::Segmentation;
use crate::domain::Regularity;
use crate::error::{Result, SawsError};

/// Leeway `ε` and tolerance schedule `ψ(n, k)`, non-increasing in `k`.
#[derive(Clone)]
pub struct ErrorProfile {
    pub eps: f64,
    psi: Arc<dyn Fn(usize, usize) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for ErrorProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ErrorProfile").field("eps", &self.eps).finish_non_exhaustive()
    }
}

impl ErrorProfile {
    pub fn new(eps: f64, psi: impl Fn(usize, usize) -> f64 + Send + Sync + 'static) -> Result<Self> {
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(SawsError::contract("eps must be finite and >= 0"));
        }
        Ok(Self { eps, psi: Arc::new(psi) })
    }

    pub fn zero() -> Self {
        Self { eps: 0.0, psi: Arc::new(|_, _| 0.0) }
    }

    pub fn psi(&self, n: usize, k: usize) -> f64 {
        (self.psi)(n, k)
    }

    /// Checks `ψ(n,1) ≥ … ≥ ψ(n,n-1) ≥ 0`.
    pub fn validate(&self, n: usize) -> Result<()> {
        let mut prev = f64::INFINITY;
        for k in 1..n {
            let v = self.psi(n, k);
            if !(v >= 0.0) || v > prev {
                return Err(SawsError::contract(format!("psi({n}, .) not non-increasing and >= 0 at k = {k}")));
            }
            prev = v;
        }
        Ok(())
    }
}

/// Largest `k ≤ n - 1` such that each of `F_{n-k}..F_{n-1}` is
/// `(ε, ψ(n,k))`-close to `F_{n-1}`. `history` holds `F_1..F_{n-1}`.
pub fn compute_kbar(history: &[GridFunction], profile: &ErrorProfile) -> Result<usize> {
    let last = history
        .last()
        .ok_or_else(|| SawsError::contract("k-bar needs at least one past period"))?;
    let n = history.len() + 1;
    let mut worst = 0.0_f64;
    let mut kbar = 0;
    for k in 1..n {
        worst = worst.max(min_delta(&history[n - 1 - k], last, profile.eps)?);
        if worst <= profile.psi(n, k) {
            kbar = k;
        }
    }
    Ok(kbar)
}

/// Grid estimate of `U = max_n (sup F_n - inf F_n)`.
pub fn range_bound(populations: &[GridFunction]) -> f64 {
    populations.iter().map(GridFunction::range).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCertificate {
    pub u: f64,
    /// `T(1..=max segment length)`.
    pub t_values: Vec<f64>,
    pub initial_excess: f64,
    pub total: f64,
}

/// `T(n) = Σ_{i ≤ n} min{τ(i), U}` for `n = 1..=len`.
pub fn cumulative_capped(tau: &dyn Fn(usize) -> f64, u: f64, len: usize) -> Vec<f64> {
    let mut acc = 0.0;
    (1..=len)
        .map(|i| {
            acc += tau(i).min(u);
            acc
        })
        .collect()
}

/// `[F_1(θ_1) - inf F_1] + 3e^{3ε}C²·Σ_j T(N_j - N_{j-1}) + e^ε·Σ_j δ_j`, with
/// `tau(i) = τ(N, i)`.
pub fn regret_bound_certificate(
    seg: &Segmentation,
    deltas: &[f64],
    tau: &dyn Fn(usize) -> f64,
    u: f64,
    eps: f64,
    c: f64,
    initial_excess: f64,
) -> Result<BoundCertificate> {
    let inputs = [u, eps, c, initial_excess];
    if inputs.iter().chain(deltas).any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(SawsError::contract("certificate inputs must be finite and >= 0"));
    }
    let lengths = seg.lengths();
    let t_values = cumulative_capped(tau, u, lengths.iter().copied().max().unwrap_or(0));
    let t_sum: f64 = lengths.iter().map(|l| t_values[l - 1]).sum();
    let delta_sum: f64 = deltas.iter().sum();
    let total = initial_excess + 3.0 * (3.0 * eps).exp() * c * c * t_sum + eps.exp() * delta_sum;
    Ok(BoundCertificate { u, t_values, initial_excess, total })
}

/// Order-of-magnitude regret curve for variation budget `v`, constants set to 1.
pub fn tv_regret_reference(regime: Regularity, v: f64, n: usize, d: usize, b: usize) -> f64 {
    let (n, ratio) = (n as f64, d as f64 / b as f64);
    match regime {
        Regularity::StronglyConvex => 1.0 + ratio.min(n) + n.cbrt() * (v * ratio).powf(2.0 / 3.0) + v,
        Regularity::Lipschitz => 1.0 + (n * ratio).sqrt() + n.powf(2.0 / 3.0) * (v * ratio).cbrt() + v,
    }
}
