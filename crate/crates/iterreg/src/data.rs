//! Flat point storage and labeled samples shared by every module.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DataError {
    #[error("point set is empty")]
    Empty,
    #[error("coordinate buffer of length {len} is not a multiple of dim {dim}")]
    RaggedBuffer { len: usize, dim: usize },
    #[error("dimension must be at least 1")]
    ZeroDim,
    #[error("expected {expected} labels, got {got}")]
    LabelCount { expected: usize, got: usize },
}

/// Points stored row-major in one flat buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    coords: Vec<f64>,
    dim: usize,
}

impl PointSet {
    pub fn new(coords: Vec<f64>, dim: usize) -> Result<Self, DataError> {
        if dim == 0 {
            return Err(DataError::ZeroDim);
        }
        if coords.is_empty() {
            return Err(DataError::Empty);
        }
        if coords.len() % dim != 0 {
            return Err(DataError::RaggedBuffer { len: coords.len(), dim });
        }
        Ok(Self { coords, dim })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, DataError> {
        let dim = rows.first().map(|r| r.len()).unwrap_or(0);
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            if row.len() != dim {
                return Err(DataError::RaggedBuffer { len: row.len(), dim });
            }
            coords.extend_from_slice(row);
        }
        Self::new(coords, dim)
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i).to_vec()).collect()
    }

    /// New set containing the listed points, in order.
    pub fn select(&self, indices: &[usize]) -> Result<Self, DataError> {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            coords.extend_from_slice(self.point(i));
        }
        Self::new(coords, self.dim)
    }
}

/// Input points with one real label per point.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub points: PointSet,
    pub labels: Vec<f64>,
}

impl LabeledSample {
    pub fn new(points: PointSet, labels: Vec<f64>) -> Result<Self, DataError> {
        if labels.len() != points.len() {
            return Err(DataError::LabelCount { expected: points.len(), got: labels.len() });
        }
        Ok(Self { points, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn select(&self, indices: &[usize]) -> Result<Self, DataError> {
        let points = self.points.select(indices)?;
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Self::new(points, labels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_access_is_row_major() {
        let ps = PointSet::new(vec![1.0, 2.0, 3.0, 4.0], 2).unwrap();
        assert_eq!(ps.len(), 2);
        assert_eq!(ps.point(0), &[1.0, 2.0]);
        assert_eq!(ps.point(1), &[3.0, 4.0]);
    }

    #[test]
    fn ragged_buffer_rejected() {
        assert_eq!(
            PointSet::new(vec![1.0, 2.0, 3.0], 2).unwrap_err(),
            DataError::RaggedBuffer { len: 3, dim: 2 }
        );
    }

    #[test]
    fn label_count_must_match() {
        let ps = PointSet::new(vec![0.0, 1.0], 1).unwrap();
        assert!(LabeledSample::new(ps, vec![1.0]).is_err());
    }

    #[test]
    fn select_keeps_order() {
        let ps = PointSet::new(vec![0.0, 1.0, 2.0, 3.0], 1).unwrap();
        let sample = LabeledSample::new(ps, vec![10.0, 11.0, 12.0, 13.0]).unwrap();
        let sub = sample.select(&[2, 0]).unwrap();
        assert_eq!(sub.points.point(0), &[2.0]);
        assert_eq!(sub.labels, vec![12.0, 10.0]);
    }
}
