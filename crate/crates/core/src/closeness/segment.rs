use serde::{Deserialize, Serialize};

use super::grid::GridFunction;
use crate::domain::Regularity;
use crate::error::{Result, SawsError};

/// Constants entering the segmentation thresholds. The Lipschitz regime only
/// reads `sigma`, `d` and `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentConstants {
    pub rho: f64,
    pub sigma: f64,
    pub m: f64,
    pub r: f64,
    pub d: usize,
    pub b: usize,
}

impl SegmentConstants {
    pub fn lipschitz(sigma: f64, d: usize, b: usize) -> Self {
        Self { rho: 1.0, sigma, m: 1.0, r: 1.0, d, b }
    }

    fn check(&self, strongly_convex: bool) -> Result<()> {
        if self.d == 0 || self.b == 0 {
            return Err(SawsError::contract("d and B must be >= 1"));
        }
        let mut all = vec![self.sigma];
        if strongly_convex {
            all.extend([self.rho, self.m, self.r]);
        }
        if all.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(SawsError::contract("segmentation constants must be finite and > 0"));
        }
        Ok(())
    }

    /// Allowed minimizer spread for a strongly convex segment of `len` periods.
    pub fn strongly_convex_threshold(&self, len: usize) -> f64 {
        let kappa = (self.sigma / (self.rho * self.r)).max(1.0);
        (2.0 * self.m * self.sigma / self.rho * kappa * self.d as f64
            / (self.b as f64 * len as f64))
            .sqrt()
    }

    /// Allowed sup-norm spread for a Lipschitz segment of `len` periods.
    pub fn lipschitz_threshold(&self, len: usize) -> f64 {
        0.5 * self.sigma * (self.d as f64 / (self.b as f64 * len as f64)).sqrt()
    }
}

/// Boundaries `0 = N_0 < … < N_J = N - 1` over periods `1..=N-1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segmentation {
    pub boundaries: Vec<usize>,
    /// Realized max pairwise spread of each segment.
    pub certificates: Vec<f64>,
    /// Threshold each certificate was held to.
    pub thresholds: Vec<f64>,
}

impl Segmentation {
    pub fn num_segments(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.boundaries.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// 1-based inclusive period range of segment `j` (0-based).
    pub fn segment(&self, j: usize) -> std::ops::RangeInclusive<usize> {
        self.boundaries[j] + 1..=self.boundaries[j + 1]
    }

    /// Index of the segment containing 1-based period `n`, if any.
    pub fn segment_of(&self, n: usize) -> Option<usize> {
        if n == 0 || n > *self.boundaries.last()? {
            return None;
        }
        Some(self.boundaries.partition_point(|&b| b < n) - 1)
    }

    pub fn sum_sqrt_lengths(&self) -> f64 {
        self.lengths().iter().map(|l| (*l as f64).sqrt()).sum()
    }
}

/// Greedy over periods `1..=last`: each segment grows while the max pairwise
/// distance among its periods stays within `threshold(len)`. `dist(i, j)` takes
/// 1-based periods.
fn greedy(last: usize, dist: impl Fn(usize, usize) -> f64, threshold: impl Fn(usize) -> f64) -> Segmentation {
    let mut boundaries = vec![0];
    let mut certificates = Vec::new();
    let mut thresholds = Vec::new();
    let mut start = 0;
    while start < last {
        let mut end = start + 1;
        let mut spread = 0.0_f64;
        while end < last {
            let cand = end + 1;
            let grown = (start + 1..cand).map(|i| dist(i, cand)).fold(spread, f64::max);
            if grown > threshold(cand - start) {
                break;
            }
            spread = grown;
            end = cand;
        }
        boundaries.push(end);
        certificates.push(spread);
        thresholds.push(threshold(end - start));
        start = end;
    }
    Segmentation { boundaries, certificates, thresholds }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Greedy segmentation of a minimizer path `θ*_1..θ*_N` (strongly convex regime).
pub fn segment_greedy_strongly_convex(path: &[Vec<f64>], c: &SegmentConstants) -> Result<Segmentation> {
    c.check(true)?;
    check_path(path)?;
    Ok(greedy(path.len() - 1, |i, j| euclid(&path[i - 1], &path[j - 1]), |len| {
        c.strongly_convex_threshold(len)
    }))
}

/// Greedy segmentation from the matrix `dist[i][j] = ‖F_{i+1} - F_{j+1}‖_∞`
/// over `N` periods (Lipschitz regime).
pub fn segment_greedy_lipschitz(dist: &[Vec<f64>], c: &SegmentConstants) -> Result<Segmentation> {
    c.check(false)?;
    let n = dist.len();
    if n < 2 {
        return Err(SawsError::contract("segmentation needs N >= 2 periods"));
    }
    if dist.iter().any(|row| row.len() != n) {
        return Err(SawsError::contract("distance matrix must be square"));
    }
    Ok(greedy(n - 1, |i, j| dist[i - 1][j - 1], |len| c.lipschitz_threshold(len)))
}

/// `‖F_i - F_j‖_∞` on the shared grid for every pair.
pub fn sup_norm_matrix(fs: &[GridFunction]) -> Result<Vec<Vec<f64>>> {
    let n = fs.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = fs[i].sup_distance(&fs[j])?;
            out[i][j] = d;
            out[j][i] = d;
        }
    }
    Ok(out)
}

fn check_path(path: &[Vec<f64>]) -> Result<()> {
    if path.len() < 2 {
        return Err(SawsError::contract("segmentation needs N >= 2 periods"));
    }
    let d = path[0].len();
    if let Some(bad) = path.iter().find(|p| p.len() != d) {
        return Err(SawsError::DimensionMismatch { expected: d, got: bad.len() });
    }
    Ok(())
}

/// Total variation `Σ_{n=1}^{N-2} ‖θ*_{n+1} - θ*_n‖` over the segmented range.
pub fn path_variation(path: &[Vec<f64>]) -> f64 {
    let last = path.len().saturating_sub(1);
    path[..last].windows(2).map(|w| euclid(&w[0], &w[1])).sum()
}

/// Upper bound on the number of segments implied by variation budget `v`.
pub fn tv_to_j_bound(regime: Regularity, v: f64, n: usize, c: &SegmentConstants) -> f64 {
    let scale = (c.b as f64 * n as f64 / c.d as f64).cbrt() * v.powf(2.0 / 3.0);
    match regime {
        Regularity::StronglyConvex => {
            let kappa = (c.sigma / (c.rho * c.r)).max(1.0);
            1.0 + (c.rho / (c.m * c.sigma * kappa)).cbrt() * scale
        }
        Regularity::Lipschitz => 1.0 + 2.0 / c.sigma.powf(2.0 / 3.0) * scale,
    }
}

/// Lipschitz-regime bound on `Σ_j √(N_j - N_{j-1})`.
pub fn tv_to_sqrt_len_bound(v: f64, n: usize, c: &SegmentConstants) -> f64 {
    let n = n as f64;
    n.sqrt()
        + std::f64::consts::SQRT_2 / c.sigma.cbrt()
            * (c.b as f64 / c.d as f64).powf(1.0 / 6.0)
            * n.powf(2.0 / 3.0)
            * v.cbrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closeness::grid::Grid;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn ones() -> SegmentConstants {
        SegmentConstants { rho: 1.0, sigma: 1.0, m: 1.0, r: 1.0, d: 1, b: 1 }
    }

    fn scalar_path(v: &[f64]) -> Vec<Vec<f64>> {
        v.iter().map(|x| vec![*x]).collect()
    }

    /// Independent re-check of the Assumption inequality and greedy maximality.
    fn recheck(seg: &Segmentation, dist: &dyn Fn(usize, usize) -> f64, thr: &dyn Fn(usize) -> f64, last: usize) {
        assert_eq!(seg.boundaries[0], 0);
        assert_eq!(*seg.boundaries.last().unwrap(), last);
        assert!(seg.boundaries.windows(2).all(|w| w[0] < w[1]));
        let spread = |lo: usize, hi: usize| {
            let mut s = 0.0_f64;
            for i in lo..=hi {
                for j in lo..=hi {
                    s = s.max(dist(i, j));
                }
            }
            s
        };
        for j in 0..seg.num_segments() {
            let (lo, hi) = (seg.boundaries[j] + 1, seg.boundaries[j + 1]);
            assert!(spread(lo, hi) <= thr(hi - lo + 1));
            assert_eq!(spread(lo, hi), seg.certificates[j]);
            if hi < last {
                assert!(spread(lo, hi + 1) > thr(hi - lo + 2));
            }
        }
    }

    #[test]
    fn strongly_convex_examples() {
        let seg = segment_greedy_strongly_convex(&scalar_path(&[2.0; 7]), &ones()).unwrap();
        assert_eq!(seg.num_segments(), 1);
        let seg =
            segment_greedy_strongly_convex(&scalar_path(&[0.0, 0.0, 0.0, 5.0, 5.0, 5.0]), &ones()).unwrap();
        assert_eq!(seg.boundaries, vec![0, 3, 5]);
        assert_eq!(seg.segment_of(3), Some(0));
        assert_eq!(seg.segment_of(4), Some(1));
        assert_eq!(seg.segment_of(6), None);
        assert!(segment_greedy_strongly_convex(&scalar_path(&[0.0]), &ones()).is_err());
    }

    #[test]
    fn lipschitz_examples() {
        let g = Grid::line(-1.0, 1.0, 21).unwrap();
        let sigma = 1.0;
        let c = SegmentConstants::lipschitz(sigma, 1, 1);
        let base = GridFunction::from_fn(&g, |t| t[0].abs()).unwrap();
        let same = vec![base.clone(); 10];
        let seg = segment_greedy_lipschitz(&sup_norm_matrix(&same).unwrap(), &c).unwrap();
        assert_eq!(seg.num_segments(), 1);
        let jumped = base.shifted(10.0 * sigma).unwrap();
        let mut fs = vec![base.clone(); 5];
        fs.extend(vec![jumped; 5]);
        let m = sup_norm_matrix(&fs).unwrap();
        let seg = segment_greedy_lipschitz(&m, &c).unwrap();
        assert_eq!(seg.boundaries, vec![0, 5, 9]);
        recheck(&seg, &|i, j| m[i - 1][j - 1], &|l| c.lipschitz_threshold(l), 9);
    }

    #[test]
    fn bound_examples() {
        let b = tv_to_j_bound(Regularity::StronglyConvex, 10.0, 1000, &ones());
        assert!((b - (1.0 + 1000f64.cbrt() * 10f64.powf(2.0 / 3.0))).abs() < 1e-12);
        assert!((b - 47.416).abs() < 1e-3);
        assert_eq!(tv_to_j_bound(Regularity::StronglyConvex, 0.0, 1000, &ones()), 1.0);
        assert_eq!(tv_to_j_bound(Regularity::Lipschitz, 0.0, 1000, &ones()), 1.0);
        assert!((tv_to_sqrt_len_bound(0.0, 100, &ones()) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn greedy_respects_tv_bounds_on_random_paths() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(11);
        for _ in 0..500 {
            let n = rng.gen_range(2..300);
            let c = SegmentConstants {
                rho: rng.gen_range(0.2..2.0),
                sigma: rng.gen_range(0.2..2.0),
                m: rng.gen_range(0.5..3.0),
                r: rng.gen_range(0.2..1.5),
                d: rng.gen_range(1..4),
                b: rng.gen_range(1..8),
            };
            let scale = rng.gen_range(0.0..0.5);
            let mut x = 0.0;
            let path: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    x += rng.gen_range(-scale..=scale);
                    vec![x]
                })
                .collect();
            let v = path_variation(&path);
            let seg = segment_greedy_strongly_convex(&path, &c).unwrap();
            assert!(seg.num_segments() as f64 <= tv_to_j_bound(Regularity::StronglyConvex, v, n, &c) + 1e-9);
            // Scalar paths double as Lipschitz instances: ‖F_i - F_j‖_∞ = |θ_i - θ_j|.
            let m: Vec<Vec<f64>> =
                path.iter().map(|a| path.iter().map(|b| (a[0] - b[0]).abs()).collect()).collect();
            let seg = segment_greedy_lipschitz(&m, &c).unwrap();
            assert!(seg.num_segments() as f64 <= tv_to_j_bound(Regularity::Lipschitz, v, n, &c) + 1e-9);
            assert!(seg.sum_sqrt_lengths() <= tv_to_sqrt_len_bound(v, n, &c) + 1e-9);
        }
    }

    proptest! {
        #[test]
        fn greedy_is_valid_and_maximal(steps in prop::collection::vec(-1.0..1.0f64, 1..60),
                                       d in 1usize..3, b in 1usize..5) {
            let mut x = 0.0;
            let path: Vec<Vec<f64>> = std::iter::once(vec![0.0])
                .chain(steps.iter().map(|s| { x += s; vec![x] }))
                .collect();
            let c = SegmentConstants { d, b, ..ones() };
            let seg = segment_greedy_strongly_convex(&path, &c).unwrap();
            let last = path.len() - 1;
            recheck(&seg, &|i, j| (path[i - 1][0] - path[j - 1][0]).abs(),
                    &|l| c.strongly_convex_threshold(l), last);
        }
    }
}
