use serde::{Deserialize, Serialize};

use crate::domain::Regularity;
use crate::error::{Result, SawsError};

/// Test levels `tau(n, k)` used by the pairwise stability tests.
pub trait ThresholdRule: Send + Sync {
    fn tau(&self, n: usize, k: usize) -> f64;
}

impl<F: Fn(usize, usize) -> f64 + Send + Sync> ThresholdRule for F {
    fn tau(&self, n: usize, k: usize) -> f64 {
        self(n, k)
    }
}

/// `C d/(Bk) ln(1/alpha + d + B + n)` (strongly convex) or
/// `C sqrt(d/(Bk) ln(1/alpha + B + n))` (Lipschitz), natural log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSchedule {
    pub regime: Regularity,
    pub c_tau: f64,
    pub alpha: f64,
    pub d: usize,
    pub b: usize,
}

impl ThresholdSchedule {
    pub fn new(regime: Regularity, c_tau: f64, alpha: f64, d: usize, b: usize) -> Result<Self> {
        if !(c_tau.is_finite() && c_tau > 0.0) {
            return Err(SawsError::config(format!("C_tau must be > 0 (got {c_tau})")));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(SawsError::config(format!("alpha must lie in (0, 1] (got {alpha})")));
        }
        if d == 0 || b == 0 {
            return Err(SawsError::config("threshold needs d >= 1 and B >= 1"));
        }
        Ok(Self {
            regime,
            c_tau,
            alpha,
            d,
            b,
        })
    }

    pub fn with_c_tau(&self, c_tau: f64) -> Self {
        Self { c_tau, ..*self }
    }

    /// The formula at any `n >= 1`, `k >= 1`.
    pub fn value(&self, n: usize, k: usize) -> f64 {
        let (d, b) = (self.d as f64, self.b as f64);
        let ratio = d / (b * k as f64);
        match self.regime {
            Regularity::StronglyConvex => {
                self.c_tau * ratio * (1.0 / self.alpha + d + b + n as f64).ln()
            }
            Regularity::Lipschitz => self.c_tau * (ratio * (1.0 / self.alpha + b + n as f64).ln()).sqrt(),
        }
    }

    /// `tau(n, k)` for a valid window `1 <= k <= n - 1`.
    pub fn threshold(&self, n: usize, k: usize) -> Result<f64> {
        if k == 0 || k >= n {
            return Err(SawsError::WindowOutOfRange { k, n });
        }
        Ok(self.value(n, k))
    }

    /// Bound on `tau(n, k) / tau(n, 2k)`.
    pub fn regularity_constant(&self) -> f64 {
        match self.regime {
            Regularity::StronglyConvex => 2.0,
            Regularity::Lipschitz => std::f64::consts::SQRT_2,
        }
    }
}

impl ThresholdRule for ThresholdSchedule {
    fn tau(&self, n: usize, k: usize) -> f64 {
        self.value(n, k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn formula_examples() {
        let s = ThresholdSchedule::new(Regularity::StronglyConvex, 1.0, 1.0, 2, 1).unwrap();
        assert!((s.threshold(10, 4).unwrap() - 0.5 * 14f64.ln()).abs() < 1e-15);
        assert!((s.threshold(10, 4).unwrap() - 1.31949).abs() < 1e-4);
        let l = ThresholdSchedule::new(Regularity::Lipschitz, 1.0, 1.0, 1, 1).unwrap();
        assert!((l.threshold(10, 4).unwrap() - (0.25 * 12f64.ln()).sqrt()).abs() < 1e-15);
        assert!((l.threshold(10, 4).unwrap() - 0.78821).abs() < 1e-4);
        assert!(s.threshold(10, 8).unwrap() < s.threshold(10, 4).unwrap());
        assert!(l.threshold(10, 8).unwrap() < l.threshold(10, 4).unwrap());
    }

    #[test]
    fn range_and_config_errors() {
        let s = ThresholdSchedule::new(Regularity::Lipschitz, 1.0, 0.05, 1, 1).unwrap();
        assert!(matches!(s.threshold(5, 5), Err(SawsError::WindowOutOfRange { k: 5, n: 5 })));
        assert!(matches!(s.threshold(5, 0), Err(SawsError::WindowOutOfRange { .. })));
        assert!(ThresholdSchedule::new(Regularity::Lipschitz, 0.0, 0.05, 1, 1).is_err());
        assert!(ThresholdSchedule::new(Regularity::Lipschitz, 1.0, 0.0, 1, 1).is_err());
        assert!(ThresholdSchedule::new(Regularity::Lipschitz, 1.0, 1.5, 1, 1).is_err());
    }

    fn regime() -> impl Strategy<Value = Regularity> {
        prop_oneof![Just(Regularity::StronglyConvex), Just(Regularity::Lipschitz)]
    }

    proptest! {
        #[test]
        fn positive_monotone_and_regular(
            regime in regime(),
            c in 1e-3..1e3f64,
            alpha in 1e-3..1.0f64,
            d in 1usize..50,
            b in 1usize..50,
            n in 2usize..1_000_000,
            log_k in 0u32..=20,
        ) {
            let s = ThresholdSchedule::new(regime, c, alpha, d, b).unwrap();
            let k = 1usize << log_k;
            let t = s.value(n, k);
            prop_assert!(t > 0.0);
            prop_assert!(s.value(n, k + 1) <= t);
            prop_assert!(s.value(n + 1, k) >= t);
            prop_assert!(t / s.value(n, 2 * k) <= s.regularity_constant() + 1e-12);
        }
    }
}
