//! Pointwise losses of the seven problem families.

use crate::domain::{dot, norm2, FeasibleSet, LossModel, Regularity, RegularityConstants, SampleBatch};

fn mean_point(batches: &[SampleBatch], len: usize) -> Vec<f64> {
    let mut acc = vec![0.0; len];
    let mut count = 0usize;
    for b in batches {
        for z in b.points() {
            for (a, v) in acc.iter_mut().zip(z) {
                *a += v;
            }
            count += 1;
        }
    }
    acc.iter_mut().for_each(|a| *a /= count as f64);
    acc
}

/// Empirical second moment of the leading `d` coordinates of every point.
fn second_moment(batches: &[SampleBatch], d: usize) -> Vec<f64> {
    let mut s = vec![0.0; d * d];
    let mut count = 0usize;
    for b in batches {
        for z in b.points() {
            for i in 0..d {
                for j in 0..d {
                    s[i * d + j] += z[i] * z[j];
                }
            }
            count += 1;
        }
    }
    s.iter_mut().for_each(|v| *v /= count as f64);
    s
}

/// Gershgorin interval `[lo, hi]` containing every eigenvalue of the symmetric `s`.
fn gershgorin(s: &[f64], d: usize) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..d {
        let off: f64 = (0..d).filter(|&j| j != i).map(|j| s[i * d + j].abs()).sum();
        lo = lo.min(s[i * d + i] - off);
        hi = hi.max(s[i * d + i] + off);
    }
    (lo, hi)
}

/// Solves `a x = b` for symmetric positive definite `a` by Cholesky; `None` if not PD.
fn cholesky_solve(a: &[f64], b: &[f64], d: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let mut sum = a[i * d + j];
            for k in 0..j {
                sum -= l[i * d + k] * l[j * d + k];
            }
            if i == j {
                if sum <= 1e-12 * (1.0 + a[i * d + i].abs()) {
                    return None;
                }
                l[i * d + i] = sum.sqrt();
            } else {
                l[i * d + j] = sum / l[j * d + j];
            }
        }
    }
    let mut y = vec![0.0; d];
    for i in 0..d {
        let s: f64 = (0..i).map(|k| l[i * d + k] * y[k]).sum();
        y[i] = (b[i] - s) / l[i * d + i];
    }
    let mut x = vec![0.0; d];
    for i in (0..d).rev() {
        let s: f64 = (i + 1..d).map(|k| l[k * d + i] * x[k]).sum();
        x[i] = (y[i] - s) / l[i * d + i];
    }
    Some(x)
}

/// `rho_nu(r) = nu r_+ + (1 - nu) (-r)_+`
pub fn check_loss(nu: f64, r: f64) -> f64 {
    if r > 0.0 {
        nu * r
    } else {
        (nu - 1.0) * r
    }
}

/// Leftmost minimizer over `[lo, hi]` of `sum_i w_i rho_nu(y_i - x_i theta)` in one dimension.
///
/// Walks the sorted breakpoints `y_i / x_i` accumulating the right derivative.
pub fn check_loss_minimizer_1d(terms: impl Iterator<Item = (f64, f64)>, nu: f64, lo: f64, hi: f64) -> f64 {
    // (breakpoint, slope increase across it)
    let mut kinks: Vec<(f64, f64)> = Vec::new();
    let mut slope = 0.0;
    let mut scale = 0.0;
    for (x, y) in terms {
        if x == 0.0 {
            continue;
        }
        let (left, right) = if x > 0.0 {
            (-nu * x, (1.0 - nu) * x)
        } else {
            ((1.0 - nu) * x, -nu * x)
        };
        slope += left;
        scale += x.abs();
        kinks.push((y / x, right - left));
    }
    let tol = 1e-12 * scale.max(1.0);
    if slope >= -tol {
        return lo;
    }
    kinks.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut i = 0;
    let mut argmin = hi;
    while i < kinks.len() {
        let at = kinks[i].0;
        while i < kinks.len() && kinks[i].0 == at {
            slope += kinks[i].1;
            i += 1;
        }
        if slope >= -tol {
            argmin = at;
            break;
        }
    }
    argmin.clamp(lo, hi)
}

fn interval_bounds(set: &FeasibleSet) -> (f64, f64) {
    let (l, u) = set.bounding_box();
    (l[0], u[0])
}

/// `0.5 |theta - z|^2`
#[derive(Debug, Clone)]
pub struct GaussianMeanLoss {
    pub d: usize,
    pub constants: RegularityConstants,
}

impl LossModel for GaussianMeanLoss {
    fn dim(&self) -> usize {
        self.d
    }
    fn point_len(&self) -> usize {
        self.d
    }
    fn loss(&self, theta: &[f64], z: &[f64]) -> f64 {
        0.5 * theta.iter().zip(z).map(|(t, v)| (t - v) * (t - v)).sum::<f64>()
    }
    fn accumulate_subgradient(&self, theta: &[f64], z: &[f64], acc: &mut [f64]) {
        for ((a, t), v) in acc.iter_mut().zip(theta).zip(z) {
            *a += t - v;
        }
    }
    fn regularity(&self) -> Regularity {
        Regularity::StronglyConvex
    }
    fn constants(&self) -> RegularityConstants {
        self.constants
    }
    fn window_minimizer(&self, batches: &[SampleBatch], set: &FeasibleSet) -> Option<Vec<f64>> {
        let mut m = mean_point(batches, self.d);
        set.project_in_place(&mut m);
        Some(m)
    }
    fn smoothness(&self, _: &[SampleBatch]) -> Option<f64> {
        Some(1.0)
    }
    fn strong_convexity(&self, _: &[SampleBatch]) -> Option<f64> {
        Some(1.0)
    }
}

/// `0.5 (y - x.theta)^2` with points laid out as `(x_1..x_d, y)`.
#[derive(Debug, Clone)]
pub struct LinearRegressionLoss {
    pub d: usize,
    pub constants: RegularityConstants,
}

impl LossModel for LinearRegressionLoss {
    fn dim(&self) -> usize {
        self.d
    }
    fn point_len(&self) -> usize {
        self.d + 1
    }
    fn loss(&self, theta: &[f64], z: &[f64]) -> f64 {
        let r = z[self.d] - dot(&z[..self.d], theta);
        0.5 * r * r
    }
    fn accumulate_subgradient(&self, theta: &[f64], z: &[f64], acc: &mut [f64]) {
        let r = z[self.d] - dot(&z[..self.d], theta);
        for (a, x) in acc.iter_mut().zip(&z[..self.d]) {
            *a -= r * x;
        }
    }
    fn regularity(&self) -> Regularity {
        Regularity::StronglyConvex
    }
    fn constants(&self) -> RegularityConstants {
        self.constants
    }
    /// The least-squares solution, when it is unique and feasible.
    fn window_minimizer(&self, batches: &[SampleBatch], set: &FeasibleSet) -> Option<Vec<f64>> {
        let d = self.d;
        let s = second_moment(batches, d);
        let mut xy = vec![0.0; d];
        let mut count = 0usize;
        for b in batches {
            for z in b.points() {
                for (a, x) in xy.iter_mut().zip(&z[..d]) {
                    *a += x * z[d];
                }
                count += 1;
            }
        }
        xy.iter_mut().for_each(|a| *a /= count as f64);
        let x = cholesky_solve(&s, &xy, d)?;
        set.contains(&x, 0.0).then_some(x)
    }
    fn smoothness(&self, batches: &[SampleBatch]) -> Option<f64> {
        let (_, hi) = gershgorin(&second_moment(batches, self.d), self.d);
        Some(hi.max(f64::MIN_POSITIVE))
    }
    fn strong_convexity(&self, batches: &[SampleBatch]) -> Option<f64> {
        let (lo, _) = gershgorin(&second_moment(batches, self.d), self.d);
        (lo > 0.0).then_some(lo)
    }
}

/// `log(1 + exp(x.theta)) - y x.theta` with `y` in `{0, 1}`.
#[derive(Debug, Clone)]
pub struct LogisticLoss {
    pub d: usize,
    pub constants: RegularityConstants,
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl LossModel for LogisticLoss {
    fn dim(&self) -> usize {
        self.d
    }
    fn point_len(&self) -> usize {
        self.d + 1
    }
    fn loss(&self, theta: &[f64], z: &[f64]) -> f64 {
        let t = dot(&z[..self.d], theta);
        softplus(t) - z[self.d] * t
    }
    fn accumulate_subgradient(&self, theta: &[f64], z: &[f64], acc: &mut [f64]) {
        let t = dot(&z[..self.d], theta);
        let w = sigmoid(t) - z[self.d];
        for (a, x) in acc.iter_mut().zip(&z[..self.d]) {
            *a += w * x;
        }
    }
    fn regularity(&self) -> Regularity {
        Regularity::StronglyConvex
    }
    fn constants(&self) -> RegularityConstants {
        self.constants
    }
    fn smoothness(&self, batches: &[SampleBatch]) -> Option<f64> {
        let (_, hi) = gershgorin(&second_moment(batches, self.d), self.d);
        Some((0.25 * hi).max(f64::MIN_POSITIVE))
    }
}

/// `z.theta`
#[derive(Debug, Clone)]
pub struct LinearOptLoss {
    pub d: usize,
    pub constants: RegularityConstants,
}

impl LossModel for LinearOptLoss {
    fn dim(&self) -> usize {
        self.d
    }
    fn point_len(&self) -> usize {
        self.d
    }
    fn loss(&self, theta: &[f64], z: &[f64]) -> f64 {
        dot(theta, z)
    }
    fn accumulate_subgradient(&self, _theta: &[f64], z: &[f64], acc: &mut [f64]) {
        for (a, v) in acc.iter_mut().zip(z) {
            *a += v;
        }
    }
    fn regularity(&self) -> Regularity {
        Regularity::Lipschitz
    }
    fn constants(&self) -> RegularityConstants {
        self.constants
    }
    fn window_minimizer(&self, batches: &[SampleBatch], set: &FeasibleSet) -> Option<Vec<f64>> {
        Some(set.linear_minimizer(&mean_point(batches, self.d)))
    }
    fn point_lipschitz(&self, z: &[f64]) -> Option<f64> {
        Some(norm2(z))
    }
}

/// `rho_nu(y - x.theta)` with points laid out as `(x_1..x_d, y)`.
#[derive(Debug, Clone)]
pub struct QuantileLoss {
    pub d: usize,
    pub nu: f64,
    pub constants: RegularityConstants,
}

impl LossModel for QuantileLoss {
    fn dim(&self) -> usize {
        self.d
    }
    fn point_len(&self) -> usize {
        self.d + 1
    }
    fn loss(&self, theta: &[f64], z: &[f64]) -> f64 {
        check_loss(self.nu, z[self.d] - dot(&z[..self.d], theta))
    }
    fn accumulate_subgradient(&self, theta: &[f64], z: &[f64], acc: &mut [f64]) {
        let r = z[self.d] - dot(&z[..self.d], theta);
        let w = if r > 0.0 {
            -self.nu
        } else if r < 0.0 {
            1.0 - self.nu
        } else {
            0.0
        };
        for (a, x) in acc.iter_mut().zip(&z[..self.d]) {
            *a += w * x;
        }
    }
    fn regularity(&self) -> Regularity {
        Regularity::Lipschitz
    }
    fn constants(&self) -> RegularityConstants {
        self.constants
    }
    fn window_minimizer(&self, batches: &[SampleBatch], set: &FeasibleSet) -> Option<Vec<f64>> {
        if self.d != 1 {
            return None;
        }
        let (lo, hi) = interval_bounds(set);
        let terms = batches.iter().flat_map(|b| b.points()).map(|z| (z[0], z[1]));
        Some(vec![check_loss_minimizer_1d(terms, self.nu, lo, hi)])
    }
    fn point_lipschitz(&self, z: &[f64]) -> Option<f64> {
        Some(self.nu.max(1.0 - self.nu) * norm2(&z[..self.d]))
    }
}

/// `c1 (theta - z)_+ + c2 (z - theta)_+`
#[derive(Debug, Clone)]
pub struct NewsvendorLoss {
    pub c1: f64,
    pub c2: f64,
    pub constants: RegularityConstants,
}

impl NewsvendorLoss {
    /// Quantile level `c2 / (c1 + c2)` of the optimal order.
    pub fn nu(&self) -> f64 {
        self.c2 / (self.c1 + self.c2)
    }
}

impl LossModel for NewsvendorLoss {
    fn dim(&self) -> usize {
        1
    }
    fn point_len(&self) -> usize {
        1
    }
    fn loss(&self, theta: &[f64], z: &[f64]) -> f64 {
        let diff = theta[0] - z[0];
        if diff > 0.0 {
            self.c1 * diff
        } else {
            -self.c2 * diff
        }
    }
    fn accumulate_subgradient(&self, theta: &[f64], z: &[f64], acc: &mut [f64]) {
        let diff = theta[0] - z[0];
        if diff > 0.0 {
            acc[0] += self.c1;
        } else if diff < 0.0 {
            acc[0] -= self.c2;
        }
    }
    fn regularity(&self) -> Regularity {
        Regularity::Lipschitz
    }
    fn constants(&self) -> RegularityConstants {
        self.constants
    }
    fn window_minimizer(&self, batches: &[SampleBatch], set: &FeasibleSet) -> Option<Vec<f64>> {
        let (lo, hi) = interval_bounds(set);
        let terms = batches.iter().flat_map(|b| b.points()).map(|z| (1.0, z[0]));
        Some(vec![check_loss_minimizer_1d(terms, self.nu(), lo, hi)])
    }
    fn point_lipschitz(&self, _z: &[f64]) -> Option<f64> {
        Some(self.c1.max(self.c2))
    }
}

/// `(1 - y x.theta)_+` with `y` in `{-1, 1}`.
#[derive(Debug, Clone)]
pub struct HingeLoss {
    pub d: usize,
    pub constants: RegularityConstants,
}

impl LossModel for HingeLoss {
    fn dim(&self) -> usize {
        self.d
    }
    fn point_len(&self) -> usize {
        self.d + 1
    }
    fn loss(&self, theta: &[f64], z: &[f64]) -> f64 {
        (1.0 - z[self.d] * dot(&z[..self.d], theta)).max(0.0)
    }
    fn accumulate_subgradient(&self, theta: &[f64], z: &[f64], acc: &mut [f64]) {
        let y = z[self.d];
        if 1.0 - y * dot(&z[..self.d], theta) > 0.0 {
            for (a, x) in acc.iter_mut().zip(&z[..self.d]) {
                *a -= y * x;
            }
        }
    }
    fn regularity(&self) -> Regularity {
        Regularity::Lipschitz
    }
    fn constants(&self) -> RegularityConstants {
        self.constants
    }
    fn point_lipschitz(&self, z: &[f64]) -> Option<f64> {
        Some(norm2(&z[..self.d]))
    }
}
