//! Parameter-path generators: zigzag patterns, variation-budgeted random
//! paths and hard-instance constructions, with independent class checkers.

mod classes;

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

pub use classes::{check_hard_instance, gen_hard_instance, HardInstanceSpec, HardRegime};

use crate::domain::FeasibleSet;
use crate::error::{Result, SawsError};
use crate::rng::StreamRng;

/// Distance used for the path's variation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathMetric {
    #[default]
    Euclidean,
    /// `‖·‖₁ / d`, the sup-norm distance between linear-optimization losses.
    MeanAbs,
}

impl PathMetric {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            PathMetric::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
            PathMetric::MeanAbs => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64,
        }
    }
}

/// Per-period parameters `θ*_1..θ*_N` with the variation the generator intended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterPath {
    values: Vec<Vec<f64>>,
    declared_tv: f64,
    metric: PathMetric,
    boundaries: Option<Vec<usize>>,
}

impl ParameterPath {
    pub fn new(values: Vec<Vec<f64>>, declared_tv: f64, metric: PathMetric, boundaries: Option<Vec<usize>>) -> Result<Self> {
        let d = values.first().map(Vec::len).ok_or_else(|| SawsError::config("path needs N >= 1 periods"))?;
        if d == 0 {
            return Err(SawsError::config("path values need d >= 1"));
        }
        if let Some(bad) = values.iter().find(|v| v.len() != d) {
            return Err(SawsError::DimensionMismatch { expected: d, got: bad.len() });
        }
        if let Some(index) = values.iter().flatten().position(|v| !v.is_finite()) {
            return Err(SawsError::NonFinite { index });
        }
        if let Some(b) = &boundaries {
            let ok = b.first() == Some(&0)
                && b.windows(2).all(|w| w[0] < w[1])
                && *b.last().unwrap() == values.len().saturating_sub(1)
                && b.len() >= 2;
            if !ok {
                return Err(SawsError::config("boundary hint must run 0 < ... < N-1"));
            }
        }
        Ok(Self { values, declared_tv, metric, boundaries })
    }

    /// Path whose declared variation is its realized variation.
    pub fn from_values(values: Vec<Vec<f64>>, metric: PathMetric) -> Result<Self> {
        let mut p = Self::new(values, 0.0, metric, None)?;
        p.declared_tv = p.realized_tv();
        Ok(p)
    }

    pub fn scalars(values: &[f64]) -> Result<Self> {
        Self::from_values(values.iter().map(|v| vec![*v]).collect(), PathMetric::Euclidean)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn metric(&self) -> PathMetric {
        self.metric
    }

    pub fn declared_tv(&self) -> f64 {
        self.declared_tv
    }

    /// Segment boundaries `0 = N_0 < … < N_J = N - 1`, when the generator knows them.
    pub fn boundaries(&self) -> Option<&[usize]> {
        self.boundaries.as_deref()
    }

    pub fn with_boundaries(mut self, boundaries: Vec<usize>) -> Result<Self> {
        let values = std::mem::take(&mut self.values);
        Self::new(values, self.declared_tv, self.metric, Some(boundaries))
    }

    /// `Σ_{n=1}^{N-1} dist(θ*_{n+1}, θ*_n)`.
    pub fn realized_tv(&self) -> f64 {
        self.values.windows(2).map(|w| self.metric.distance(&w[0], &w[1])).sum()
    }

    pub fn check_region(&self, region: &FeasibleSet, tol: f64) -> Result<()> {
        for (i, v) in self.values.iter().enumerate() {
            if !region.contains(v, tol) {
                return Err(SawsError::config(format!("path leaves the admissible region at period {}", i + 1)));
            }
        }
        Ok(())
    }

    /// Affine image `offset + scale·θ` of every value.
    pub fn affine(&self, scale: f64, offset: &[f64]) -> Result<Self> {
        if offset.len() != self.dim() {
            return Err(SawsError::DimensionMismatch { expected: self.dim(), got: offset.len() });
        }
        let values = self
            .values
            .iter()
            .map(|v| v.iter().zip(offset).map(|(x, o)| o + scale * x).collect())
            .collect();
        Self::new(values, scale.abs() * self.declared_tv, self.metric, self.boundaries.clone())
    }

    /// Writes `n,theta_1,..,theta_d` rows.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["n".to_string()];
        header.extend((1..=self.dim()).map(|i| format!("theta_{i}")));
        w.write_record(&header)?;
        for (i, v) in self.values.iter().enumerate() {
            let mut row = vec![(i + 1).to_string()];
            row.extend(v.iter().map(|x| format!("{x:?}")));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| SawsError::io(path, e))
    }

    /// Reads `n,theta_1,..` rows; `n` must run 1..N in order.
    pub fn read_csv(path: impl AsRef<Path>, metric: PathMetric) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| SawsError::io(path, e))?;
        let mut reader = csv::Reader::from_reader(file);
        let mut values = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| SawsError::Parse(format!("{}: row {}: {e}", path.display(), i + 2)))
            };
            let mut fields = record.iter();
            let n = parse(fields.next().unwrap_or(""))?;
            if n != (i + 1) as f64 {
                return Err(SawsError::Parse(format!("{}: row {} has n = {n}, expected {}", path.display(), i + 2, i + 1)));
            }
            values.push(fields.map(parse).collect::<Result<Vec<f64>>>()?);
        }
        Self::from_values(values, metric)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Zigzag {
    Large,
    Small,
    Uneven,
    Alternating { u: f64 },
}

/// The four zigzag patterns on `Ω = [0, 1]`, `d = 1`. Block lengths are floored.
pub fn gen_zigzag(kind: Zigzag, n: usize) -> Result<ParameterPath> {
    if n < 4 {
        return Err(SawsError::config("zigzags need N >= 4"));
    }
    let nf = n as f64;
    let step = nf.powf(-0.5);
    let mut steps = vec![0.0; n - 1];
    match kind {
        Zigzag::Small => {
            for (i, s) in steps.iter_mut().enumerate() {
                // θ_{n+1} = θ_n - (-1)^n c with n = i + 1.
                *s = if i % 2 == 0 { step } else { -step };
            }
        }
        Zigzag::Large => {
            let block = (nf.cbrt() + 1e-9).floor().max(1.0) as usize;
            for (i, s) in steps.iter_mut().enumerate() {
                *s = if (i / block).is_multiple_of(2) { step } else { -step };
            }
        }
        Zigzag::Uneven => {
            let head = ((nf.sqrt() + 1e-9).floor() as usize).min(n - 1);
            for (i, s) in steps.iter_mut().take(head).enumerate() {
                *s = if i % 2 == 0 { 1.0 } else { -1.0 };
            }
        }
        Zigzag::Alternating { u } => {
            let (lo, hi) = (nf.powf(-0.5), nf.powf(-1.0 / 6.0));
            if !(u >= lo * (1.0 - 1e-12) && u <= hi * (1.0 + 1e-12)) {
                return Err(SawsError::config(format!("alternating steps need u in [{lo}, {hi}] (got {u})")));
            }
            let block = ((nf.sqrt() * u + 1e-9).floor() as usize).max(1);
            let mut k = 1;
            while k * block < n {
                // θ_{kL+1} = θ_{kL} - (-1)^k u, i.e. step index kL - 1.
                steps[k * block - 1] = if k % 2 == 1 { u } else { -u };
                k += 1;
            }
        }
    }
    let mut values = Vec::with_capacity(n);
    let mut x = 0.0_f64;
    values.push(vec![x]);
    let mut declared = 0.0;
    for s in steps {
        let next = (x + s).clamp(0.0, 1.0);
        declared += s.abs();
        x = next;
        values.push(vec![x]);
    }
    ParameterPath::new(values, declared, PathMetric::Euclidean, None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepLaw {
    #[default]
    Equal,
    Uniform,
    Exponential,
}

/// Random path of `n` periods starting at the region's centre whose Euclidean
/// variation is exactly `v`. Step lengths are capped at the region's inradius
/// so each move can stay inside it.
pub fn gen_tv_budget(n: usize, v: f64, law: StepLaw, region: &FeasibleSet, rng: &mut StreamRng) -> Result<ParameterPath> {
    if n == 0 {
        return Err(SawsError::config("path needs N >= 1"));
    }
    if !(v >= 0.0) || !v.is_finite() {
        return Err(SawsError::config(format!("variation budget must be finite and >= 0 (got {v})")));
    }
    let cap = region.inradius();
    let slots = n - 1;
    if v > slots as f64 * cap * (1.0 + 1e-12) {
        return Err(SawsError::config(format!(
            "variation budget {v} exceeds (N-1) x inradius = {}",
            slots as f64 * cap
        )));
    }
    let weights: Vec<f64> = (0..slots)
        .map(|_| match law {
            StepLaw::Equal => 1.0,
            StepLaw::Uniform => 1.0 - rng.gen::<f64>(),
            StepLaw::Exponential => Exp1.sample(rng),
        })
        .collect();
    let lengths = capped_split(v, &weights, cap);
    let d = region.dim();
    let centre = region.center();
    let mut x = centre.clone();
    let mut values = vec![x.clone()];
    for s in &lengths {
        let u = unit_vector(d, rng);
        let fwd: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a + s * b).collect();
        let next = if region.contains(&fwd, 0.0) {
            fwd
        } else {
            let back: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a - s * b).collect();
            if region.contains(&back, 0.0) {
                back
            } else {
                let to_c: Vec<f64> = centre.iter().zip(&x).map(|(c, a)| c - a).collect();
                let norm = to_c.iter().map(|t| t * t).sum::<f64>().sqrt();
                let dir: Vec<f64> = if norm > 0.0 { to_c.iter().map(|t| t / norm).collect() } else { u };
                x.iter().zip(&dir).map(|(a, b)| a + s * b).collect()
            }
        };
        x = next;
        values.push(x.clone());
    }
    ParameterPath::new(values, lengths.iter().sum(), PathMetric::Euclidean, None)
}

/// Splits `total` proportionally to `weights` with each share at most `cap`.
fn capped_split(total: f64, weights: &[f64], cap: f64) -> Vec<f64> {
    let mut out = vec![0.0; weights.len()];
    if total == 0.0 || weights.is_empty() {
        return out;
    }
    let mut free: Vec<usize> = (0..weights.len()).collect();
    let mut remaining = total;
    loop {
        let wsum: f64 = free.iter().map(|&i| weights[i]).sum();
        let (over, under): (Vec<usize>, Vec<usize>) =
            free.iter().partition(|&&i| remaining * weights[i] / wsum > cap);
        if over.is_empty() || under.is_empty() {
            for &i in &free {
                out[i] = (remaining * weights[i] / wsum).min(cap);
            }
            return out;
        }
        for &i in &over {
            out[i] = cap;
            remaining -= cap;
        }
        free = under;
    }
}

fn unit_vector(d: usize, rng: &mut StreamRng) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let norm = g.iter().map(|t| t * t).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return g.into_iter().map(|t| t / norm).collect();
        }
    }
}

/// Uniform draw from the Euclidean ball `B(center, radius)`; rejection from the
/// bounding cube for `d ≤ 3`.
pub fn uniform_in_ball(center: &[f64], radius: f64, rng: &mut StreamRng) -> Vec<f64> {
    let d = center.len();
    if radius == 0.0 {
        return center.to_vec();
    }
    if d <= 3 {
        loop {
            let u: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            if u.iter().map(|t| t * t).sum::<f64>() <= 1.0 {
                return center.iter().zip(&u).map(|(c, t)| c + radius * t).collect();
            }
        }
    }
    let dir = unit_vector(d, rng);
    let r = radius * rng.gen::<f64>().powf(1.0 / d as f64);
    center.iter().zip(&dir).map(|(c, t)| c + r * t).collect()
}
