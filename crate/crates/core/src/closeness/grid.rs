use std::path::Path;
use std::sync::Arc;

use crate::error::{Result, SawsError};

/// Finite set of points standing in for the domain; at most two axes.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    coords: Vec<f64>,
}

impl Grid {
    pub fn from_points(dim: usize, coords: Vec<f64>) -> Result<Arc<Self>> {
        if dim == 0 || dim > 2 {
            return Err(SawsError::contract("grids support one or two axes"));
        }
        if coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(SawsError::contract("grid needs at least one whole point"));
        }
        if let Some(index) = coords.iter().position(|c| !c.is_finite()) {
            return Err(SawsError::NonFinite { index });
        }
        Ok(Arc::new(Self { dim, coords }))
    }

    /// `points` evenly spaced points on `[lo, hi]`, endpoints included.
    pub fn line(lo: f64, hi: f64, points: usize) -> Result<Arc<Self>> {
        Self::from_points(1, axis(lo, hi, points)?)
    }

    /// Product grid with `per_axis` points on each axis of the box `[lo, hi]`.
    pub fn rect(lo: [f64; 2], hi: [f64; 2], per_axis: usize) -> Result<Arc<Self>> {
        let xs = axis(lo[0], hi[0], per_axis)?;
        let ys = axis(lo[1], hi[1], per_axis)?;
        let mut coords = Vec::with_capacity(2 * xs.len() * ys.len());
        for x in &xs {
            for y in &ys {
                coords.push(*x);
                coords.push(*y);
            }
        }
        Self::from_points(2, coords)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }
}

fn axis(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if points == 0 || !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(SawsError::contract("grid axis needs finite lo <= hi and >= 1 point"));
    }
    if points == 1 {
        return Ok(vec![lo]);
    }
    let step = (hi - lo) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| if i == points - 1 { hi } else { lo + step * i as f64 })
        .collect())
}

/// Values of a function on a shared grid, with the grid minimum cached.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
    min: f64,
}

impl GridFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(SawsError::DimensionMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(SawsError::NonFinite { index });
        }
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        Ok(Self { grid, values, min })
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = grid.points().map(f).collect();
        Self::new(grid.clone(), values)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `sup - inf` over the grid.
    pub fn range(&self) -> f64 {
        self.max() - self.min
    }

    /// Sub-optimality gaps `f - min f`.
    pub fn gaps(&self) -> Vec<f64> {
        self.values.iter().map(|v| v - self.min).collect()
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || self.grid == other.grid
    }

    pub fn check_same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(SawsError::contract("grid functions live on different grids"))
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|v| f(*v)).collect())
    }

    pub fn shifted(&self, a: f64) -> Result<Self> {
        self.map(|v| v + a)
    }

    /// `sum_j w_j f_j` over functions sharing one grid.
    pub fn combination(terms: &[(f64, &GridFunction)]) -> Result<Self> {
        let (_, first) = terms
            .first()
            .ok_or_else(|| SawsError::contract("empty combination"))?;
        let mut values = vec![0.0; first.values.len()];
        for (w, f) in terms {
            first.check_same_grid(f)?;
            for (acc, v) in values.iter_mut().zip(&f.values) {
                *acc += w * v;
            }
        }
        Self::new(first.grid.clone(), values)
    }

    /// `sup |f - g|` over the grid.
    pub fn sup_distance(&self, other: &GridFunction) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Reads `coord[,coord],value` rows (one header row) into a grid function.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| SawsError::io(path, e))?;
        let mut reader = csv::Reader::from_reader(file);
        let mut coords = Vec::new();
        let mut values = Vec::new();
        let mut width = None;
        for (line, record) in reader.records().enumerate() {
            let record = record?;
            let w = *width.get_or_insert(record.len());
            if !(2..=3).contains(&w) || record.len() != w {
                return Err(SawsError::Parse(format!(
                    "{}: row {} must have 2 or 3 columns consistently",
                    path.display(),
                    line + 2
                )));
            }
            let mut nums = Vec::with_capacity(w);
            for field in record.iter() {
                nums.push(field.trim().parse::<f64>().map_err(|e| {
                    SawsError::Parse(format!("{}: row {}: {e}", path.display(), line + 2))
                })?);
            }
            values.push(nums.pop().expect("width >= 2"));
            coords.extend(nums);
        }
        let dim = width.ok_or_else(|| SawsError::Parse(format!("{}: no rows", path.display())))? - 1;
        let grid = Grid::from_points(dim, coords)?;
        Self::new(grid, values)
    }
}
