//! Per-column z-scoring with statistics frozen from a training matrix.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Columns whose standard deviation falls below this map to zero.
pub const DEGENERATE_STD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    mean: Array1<f64>,
    /// Population standard deviation; zero marks a degenerate column.
    std: Array1<f64>,
}

impl Standardizer {
    /// Fits column means and population standard deviations. Needs two rows.
    pub fn fit(train: ArrayView2<'_, f64>) -> Result<Self> {
        if train.nrows() < 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: train.nrows() });
        }
        let mean = train.mean_axis(Axis(0)).expect("non-empty");
        let std = train.std_axis(Axis(0), 0.0).mapv(|s| if s < DEGENERATE_STD { 0.0 } else { s });
        Ok(Self { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, features: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if features.ncols() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: features.ncols() });
        }
        let mut out = features.to_owned();
        for (mut col, (&mu, &sd)) in out.axis_iter_mut(Axis(1)).zip(self.mean.iter().zip(self.std.iter())) {
            if sd == 0.0 {
                col.fill(0.0);
            } else {
                col.mapv_inplace(|v| (v - mu) / sd);
            }
        }
        Ok(out)
    }
}

pub fn standardize_fit(train: ArrayView2<'_, f64>) -> Result<Standardizer> {
    Standardizer::fit(train)
}

pub fn standardize_apply(s: &Standardizer, features: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    s.apply(features)
}
