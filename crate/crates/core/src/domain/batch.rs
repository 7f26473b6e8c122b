use std::sync::Arc;

use crate::error::{Result, SawsError};

/// The `B` data points observed in one period, stored as a flat row-major buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    period: usize,
    replication: usize,
    point_len: usize,
    data: Arc<[f64]>,
}

impl SampleBatch {
    pub fn new(period: usize, replication: usize, point_len: usize, data: Vec<f64>) -> Result<Self> {
        if point_len == 0 || data.is_empty() || !data.len().is_multiple_of(point_len) {
            return Err(SawsError::contract(format!(
                "batch buffer of length {} is not a non-empty multiple of point length {point_len}",
                data.len()
            )));
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(SawsError::NonFinite { index });
        }
        Ok(Self {
            period,
            replication,
            point_len,
            data: data.into(),
        })
    }

    /// Batch of scalar observations.
    pub fn scalars(period: usize, values: Vec<f64>) -> Result<Self> {
        Self::new(period, 0, 1, values)
    }

    pub fn period(&self) -> usize {
        self.period
    }

    pub fn replication(&self) -> usize {
        self.replication
    }

    pub fn point_len(&self) -> usize {
        self.point_len
    }

    /// Number of points `B`.
    pub fn size(&self) -> usize {
        self.data.len() / self.point_len
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.point_len..(i + 1) * self.point_len]
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.point_len)
    }

    pub fn raw(&self) -> &[f64] {
        &self.data
    }
}

/// Checks that `batches` hold consecutive periods with one batch size.
pub fn check_stream(batches: &[SampleBatch]) -> Result<()> {
    let Some(first) = batches.first() else {
        return Ok(());
    };
    for pair in batches.windows(2) {
        if pair[1].period != pair[0].period + 1 {
            return Err(SawsError::contract(format!(
                "periods not consecutive: {} followed by {}",
                pair[0].period, pair[1].period
            )));
        }
        if pair[1].size() != first.size() || pair[1].point_len != first.point_len {
            return Err(SawsError::contract("batch size must be constant across the stream"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout() {
        let b = SampleBatch::new(3, 0, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(b.size(), 3);
        assert_eq!(b.point(1), &[3.0, 4.0]);
        assert_eq!(b.points().count(), 3);
        assert!(SampleBatch::new(1, 0, 2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(SampleBatch::new(1, 0, 1, vec![]).is_err());
    }

    #[test]
    fn stream_checks() {
        let a = SampleBatch::scalars(1, vec![0.0]).unwrap();
        let b = SampleBatch::scalars(2, vec![0.0]).unwrap();
        let c = SampleBatch::scalars(4, vec![0.0]).unwrap();
        let wide = SampleBatch::scalars(3, vec![0.0, 1.0]).unwrap();
        assert!(check_stream(&[a.clone(), b.clone()]).is_ok());
        assert!(check_stream(&[a.clone(), c]).is_err());
        assert!(check_stream(&[a, b, wide]).is_err());
    }
}
