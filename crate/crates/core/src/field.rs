use std::sync::Arc;

use crate::error::{Error, Result};

/// Grid values together with the quadrature weights that define the
/// discrete L² inner product `<u, v> = sum_i w_i u_i v_i`.
///
/// Weights are shared (`Arc`) between every vector living on the same grid.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldVector {
    values: Vec<f64>,
    weights: Arc<[f64]>,
}

impl FieldVector {
    pub fn new(values: Vec<f64>, weights: Arc<[f64]>) -> Result<Self> {
        if values.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: weights.len(),
                got: values.len(),
            });
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::param(
                "weights",
                format!("weight {w} is not positive"),
            ));
        }
        Ok(FieldVector { values, weights })
    }

    pub fn zeros(weights: Arc<[f64]>) -> Self {
        FieldVector {
            values: vec![0.0; weights.len()],
            weights,
        }
    }

    /// Same grid, new values. Lengths must agree.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: values.len(),
            });
        }
        Ok(FieldVector {
            values,
            weights: Arc::clone(&self.weights),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn weights(&self) -> &Arc<[f64]> {
        &self.weights
    }

    pub fn dot(&self, other: &FieldVector) -> Result<f64> {
        self.check_same_len(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .zip(self.weights.iter())
            .map(|((a, b), w)| w * a * b)
            .sum())
    }

    /// Weighted discrete L² norm.
    pub fn norm(&self) -> f64 {
        self.values
            .iter()
            .zip(self.weights.iter())
            .map(|(v, w)| w * v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn sub(&self, other: &FieldVector) -> Result<FieldVector> {
        self.check_same_len(other)?;
        self.with_values(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    pub fn scaled(&self, factor: f64) -> FieldVector {
        FieldVector {
            values: self.values.iter().map(|v| v * factor).collect(),
            weights: Arc::clone(&self.weights),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub(crate) fn check_same_len(&self, other: &FieldVector) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(())
    }
}
