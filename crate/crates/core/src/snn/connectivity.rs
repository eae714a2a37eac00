use serde::{Deserialize, Serialize};

use super::{LayerKind, LayerSpec, WeightMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Structure {
    Dense,
    Sparse,
}

/// Input × output synapse matrix of one layer, stored by column.
///
/// Every stored entry is a structural synapse even when its weight is zero; a dense
/// layer stores all `n_in` rows in every column.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectivityMatrix {
    n_in: usize,
    n_out: usize,
    structure: Structure,
    /// `columns[j]` = `(input, weight)` sorted by input.
    columns: Vec<Vec<(usize, f64)>>,
}

impl ConnectivityMatrix {
    pub fn from_columns(
        n_in: usize,
        structure: Structure,
        columns: Vec<Vec<(usize, f64)>>,
    ) -> Result<Self> {
        for (j, col) in columns.iter().enumerate() {
            if col.windows(2).any(|p| p[0].0 >= p[1].0) {
                return Err(Error::shape(format!("column {j} rows not strictly ascending")));
            }
            if col.last().is_some_and(|&(i, _)| i >= n_in) {
                return Err(Error::shape(format!("column {j} references input beyond {n_in}")));
            }
        }
        Ok(ConnectivityMatrix { n_in, n_out: columns.len(), structure, columns })
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn structure(&self) -> Structure {
        self.structure
    }

    pub fn columns(&self) -> &[Vec<(usize, f64)>] {
        &self.columns
    }

    pub fn column(&self, j: usize) -> &[(usize, f64)] {
        &self.columns[j]
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    /// Weight at `(row, col)`; `None` when no synapse exists there.
    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        let c = &self.columns[col];
        c.binary_search_by_key(&row, |&(i, _)| i).ok().map(|k| c[k].1)
    }
}

pub fn build_connectivity(layer: &LayerSpec, weights: &WeightMatrix) -> Result<ConnectivityMatrix> {
    layer.validate()?;
    let (r, c) = layer.weight_shape();
    if (weights.rows(), weights.cols()) != (r, c) {
        return Err(Error::shape(format!(
            "weights are {}x{}, {:?} layer expects {r}x{c}",
            weights.rows(),
            weights.cols(),
            layer.kind
        )));
    }
    let n_in = layer.n_inputs();
    let (ow, oh) = layer.out_dims();
    match layer.kind {
        LayerKind::Dense { n_in, n_out } => {
            let columns = (0..n_out)
                .map(|j| (0..n_in).map(|i| (i, weights.get(i, j))).collect())
                .collect();
            ConnectivityMatrix::from_columns(n_in, Structure::Dense, columns)
        }
        LayerKind::Conv { in_width, in_channels, kernel_size: k, out_channels, stride, .. } => {
            let mut columns = Vec::with_capacity(ow * oh * out_channels);
            for oy in 0..oh {
                for ox in 0..ow {
                    for co in 0..out_channels {
                        let mut col = Vec::with_capacity(k * k * in_channels);
                        for ky in 0..k {
                            for kx in 0..k {
                                let base = ((oy * stride + ky) * in_width + ox * stride + kx) * in_channels;
                                for ci in 0..in_channels {
                                    col.push((base + ci, weights.get((ky * k + kx) * in_channels + ci, co)));
                                }
                            }
                        }
                        columns.push(col);
                    }
                }
            }
            ConnectivityMatrix::from_columns(n_in, Structure::Sparse, columns)
        }
        LayerKind::Subsample { in_width, channels, window, stride, .. } => {
            let w = 1.0 / (window * window) as f64;
            let mut columns = Vec::with_capacity(ow * oh * channels);
            for oy in 0..oh {
                for ox in 0..ow {
                    for ch in 0..channels {
                        let mut col = Vec::with_capacity(window * window);
                        for ky in 0..window {
                            for kx in 0..window {
                                col.push((((oy * stride + ky) * in_width + ox * stride + kx) * channels + ch, w));
                            }
                        }
                        columns.push(col);
                    }
                }
            }
            ConnectivityMatrix::from_columns(n_in, Structure::Sparse, columns)
        }
    }
}
