//! Thin SVD of small dense matrices, singular values descending.
//!
//! Backed by faer: nalgebra's bidiagonal SVD returns factors that do not
//! reproduce some exactly rank-deficient measurement matrices.

use faer::Mat;
use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct ThinSvd {
    /// m x k left singular vectors, k = min(m, n).
    pub u: DMatrix<f64>,
    pub singular_values: Vec<f64>,
    /// n x k right singular vectors.
    pub v: DMatrix<f64>,
}

pub fn thin_svd(m: &DMatrix<f64>) -> Result<ThinSvd> {
    let a = Mat::from_fn(m.nrows(), m.ncols(), |r, c| m[(r, c)]);
    let svd = a.thin_svd().map_err(|_| Error::NoConvergence)?;
    let (u, s, v) = (svd.U(), svd.S().column_vector(), svd.V());
    let k = s.nrows();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    Ok(ThinSvd {
        u: DMatrix::from_fn(m.nrows(), k, |r, c| u[(r, order[c])]),
        singular_values: order.iter().map(|&i| s[i]).collect(),
        v: DMatrix::from_fn(m.ncols(), k, |r, c| v[(r, order[c])]),
    })
}
