//! Principal component analysis by eigendecomposition of the sample covariance.
//!
//! Feature dimension is at most 50, so the dense `d x d` covariance is
//! decomposed directly (the "full" solver). Each component is sign-fixed so
//! that its entry of largest magnitude is positive.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub n_components: usize,
    /// Row `k` is the `k`-th principal direction (unit length).
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
    pub mean: Vec<f64>,
}

pub fn fit_pca(x: ArrayView2<'_, f64>, n_components: usize) -> Result<PcaModel> {
    let (n, d) = x.dim();
    if n < 2 {
        return Err(Error::invalid("pca input", "at least 2 samples are required"));
    }
    if n_components == 0 || n_components > n.min(d) {
        return Err(Error::invalid(
            "n_components",
            format!("must be in 1..={}, got {n_components}", n.min(d)),
        ));
    }
    let mean = x.mean_axis(Axis(0)).expect("n >= 2");
    let centered = &x - &mean;
    let cov = centered.t().dot(&centered) / (n as f64 - 1.0);
    let total_variance: f64 = cov.diag().sum();

    let eig = SymmetricEigen::new(DMatrix::from_fn(d, d, |i, j| cov[[i, j]]));
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let mut components = Vec::with_capacity(n_components);
    let mut explained_variance = Vec::with_capacity(n_components);
    for &k in order.iter().take(n_components) {
        let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        let pivot = v
            .iter()
            .enumerate()
            .fold(0, |best, (i, x)| if x.abs() > v[best].abs() { i } else { best });
        if v[pivot] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(v);
        explained_variance.push(eig.eigenvalues[k].max(0.0));
    }
    let explained_variance_ratio = explained_variance
        .iter()
        .map(|ev| if total_variance > 0.0 { ev / total_variance } else { 0.0 })
        .collect();
    Ok(PcaModel {
        n_components,
        components,
        explained_variance,
        explained_variance_ratio,
        mean: mean.to_vec(),
    })
}

impl PcaModel {
    fn component_matrix(&self) -> Array2<f64> {
        let d = self.mean.len();
        Array2::from_shape_fn((self.n_components, d), |(k, j)| self.components[k][j])
    }

    pub fn transform(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.mean.len() {
            return Err(Error::DimensionMismatch { expected: self.mean.len(), got: x.ncols() });
        }
        let centered = &x - &Array1::from(self.mean.clone());
        Ok(centered.dot(&self.component_matrix().t()))
    }

    pub fn inverse_transform(&self, z: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if z.ncols() != self.n_components {
            return Err(Error::DimensionMismatch { expected: self.n_components, got: z.ncols() });
        }
        Ok(z.dot(&self.component_matrix()) + &Array1::from(self.mean.clone()))
    }
}
