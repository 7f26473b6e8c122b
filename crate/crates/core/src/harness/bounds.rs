use serde::{Deserialize, Serialize};

use crate::closeness::tv_regret_reference;
use crate::domain::Regularity;
use crate::envgen::ParameterPath;

/// Problem class whose minimax lower bound is wanted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "kebab-case")]
pub enum LowerBoundClass {
    /// Near-constant pieces ending at `N_1 < … < N_J = N - 1` with jumps `r`.
    Segmented { boundaries: Vec<usize>, r: Vec<f64>, d: usize, b: usize },
    /// Variation budget `v` over `n` periods.
    TotalVariation { n: usize, v: f64, d: usize, b: usize },
}

/// Lower-bound expression with its universal constant set to 1.
pub fn lower_bound_reference(regime: Regularity, class: &LowerBoundClass) -> f64 {
    match class {
        LowerBoundClass::Segmented { boundaries, r, d, b } => {
            let ratio = *d as f64 / *b as f64;
            let mut prev = 0;
            let mut total = 1.0;
            for (end, rj) in boundaries.iter().zip(r) {
                let len = (end - prev) as f64;
                prev = *end;
                total += match regime {
                    Regularity::StronglyConvex => ratio.min(len - 1.0) + rj * rj,
                    Regularity::Lipschitz => (ratio * len).sqrt().min((len - 2.0).max(0.0)) + rj,
                };
            }
            total
        }
        LowerBoundClass::TotalVariation { n, v, d, b } => {
            let (n, ratio) = (*n as f64, *d as f64 / *b as f64);
            match regime {
                Regularity::StronglyConvex => 1.0 + ratio + n.cbrt() * (v * ratio).powf(2.0 / 3.0),
                Regularity::Lipschitz => 1.0 + (n * ratio).sqrt() + n.powf(2.0 / 3.0) * (v * ratio).cbrt(),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsRow {
    pub n: usize,
    pub variation: f64,
    pub upper_reference: f64,
    pub lower_reference: f64,
}

/// Upper and lower reference curves along a path, using its variation up to each `n`.
pub fn reference_curves(regime: Regularity, path: &ParameterPath, d: usize, b: usize) -> Vec<BoundsRow> {
    let v = path.values();
    let mut tv = 0.0;
    (1..=v.len())
        .map(|n| {
            if n >= 2 {
                tv += path.metric().distance(&v[n - 1], &v[n - 2]);
            }
            BoundsRow {
                n,
                variation: tv,
                upper_reference: tv_regret_reference(regime, tv, n, d, b),
                lower_reference: lower_bound_reference(regime, &LowerBoundClass::TotalVariation { n, v: tv, d, b }),
            }
        })
        .collect()
}
