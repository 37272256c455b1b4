//! Orthographic structure from motion by rank-3 factorization.
//!
//! The registered (per-row centered) 2F x 8 measurement matrix of a rigid
//! object under scaled orthography has rank 3. Its truncated SVD gives motion
//! and shape up to an invertible 3x3 matrix `A`; `Q = A A^T` is fixed (up to
//! scale) by requiring each frame's two camera rows to be orthogonal with equal
//! norms. The recovered shape is metric up to rotation, reflection and scale.

use nalgebra::{DMatrix, Matrix3, RowVector3, SymmetricEigen};

use crate::clipgen::{Vec3, NUM_VERTICES};
use crate::error::{Error, Result};
use crate::scene::View2;

use super::svd::thin_svd;

/// Minimum sigma3 / sigma1 for the measurement matrix to count as rank 3.
pub const RANK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Shape3D {
    /// Centroid-free reconstructed points.
    pub points: [Vec3; NUM_VERTICES],
    /// Singular values of the registered measurement matrix, descending.
    pub singular_values: Vec<f64>,
    /// sigma3 / sigma4; large for exact rank-3 data.
    pub rank_gap: f64,
}

pub fn sfm_reconstruct(views: &[View2]) -> Result<Shape3D> {
    let frames = views.len();
    if frames < 3 {
        return Err(Error::InsufficientViews {
            needed: 3,
            got: frames,
        });
    }
    let mut w = DMatrix::zeros(2 * frames, NUM_VERTICES);
    for (f, v) in views.iter().enumerate() {
        let mean = v.iter().sum::<crate::scene::Vec2>() / NUM_VERTICES as f64;
        for (i, p) in v.iter().enumerate() {
            w[(2 * f, i)] = p.x - mean.x;
            w[(2 * f + 1, i)] = p.y - mean.y;
        }
    }
    let svd = thin_svd(&w)?;
    let sv = svd.singular_values;
    let ratio = if sv[0] > 0.0 { sv[2] / sv[0] } else { 0.0 };
    if !(ratio >= RANK_TOL) {
        return Err(Error::RankDeficient { ratio });
    }
    let rank_gap = sv[2] / sv.get(3).copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);

    // affine motion (2F x 3) and shape (3 x 8), splitting sigma evenly
    let mut motion = DMatrix::zeros(2 * frames, 3);
    let mut shape = DMatrix::zeros(3, NUM_VERTICES);
    for (k, sigma) in sv.iter().take(3).enumerate() {
        let s = sigma.sqrt();
        motion.set_column(k, &(svd.u.column(k) * s));
        shape.set_row(k, &(svd.v.column(k).transpose() * s));
    }

    let q = metric_gram(&motion)?;
    let eig = SymmetricEigen::new(q);
    let lmax = eig.eigenvalues.max();
    let lmin = eig.eigenvalues.min();
    if !(lmin > 1e-12 * lmax) {
        return Err(Error::RankDeficient { ratio: lmin / lmax });
    }
    // A = V sqrt(D), shape' = A^-1 shape = D^-1/2 V^T shape
    let inv_sqrt = Matrix3::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    let a_inv = inv_sqrt * eig.eigenvectors.transpose();
    let a_inv = DMatrix::from_column_slice(3, 3, a_inv.as_slice());
    let metric = a_inv * shape;
    let points = std::array::from_fn(|i| Vec3::new(metric[(0, i)], metric[(1, i)], metric[(2, i)]));
    Ok(Shape3D {
        points,
        singular_values: sv,
        rank_gap,
    })
}

/// Coefficients of `a^T Q b` in the 6 unique entries of a symmetric Q.
fn gram_row(a: RowVector3<f64>, b: RowVector3<f64>) -> [f64; 6] {
    [
        a[0] * b[0],
        a[0] * b[1] + a[1] * b[0],
        a[0] * b[2] + a[2] * b[0],
        a[1] * b[1],
        a[1] * b[2] + a[2] * b[1],
        a[2] * b[2],
    ]
}

/// Least-squares Q with `i Q i = j Q j` and `i Q j = 0` per frame, normalized
/// so the mean row norm is one.
fn metric_gram(motion: &DMatrix<f64>) -> Result<Matrix3<f64>> {
    let frames = motion.nrows() / 2;
    let mut sys = DMatrix::zeros(2 * frames, 6);
    for f in 0..frames {
        let i = motion.fixed_view::<1, 3>(2 * f, 0).into_owned();
        let j = motion.fixed_view::<1, 3>(2 * f + 1, 0).into_owned();
        let ii = gram_row(i, i);
        let jj = gram_row(j, j);
        let ij = gram_row(i, j);
        for c in 0..6 {
            sys[(2 * f, c)] = ii[c] - jj[c];
            sys[(2 * f + 1, c)] = ij[c];
        }
    }
    // frames >= 3, so sys has at least 6 rows and all 6 right vectors
    let svd = thin_svd(&sys)?;
    let smax = svd.singular_values[0];
    // a second (near) null direction means the upgrade is ambiguous
    let second = svd.singular_values[4];
    if !(second > 1e-9 * smax) {
        return Err(Error::RankDeficient {
            ratio: second / smax,
        });
    }
    let q = svd.v.column(5);
    let mut m = Matrix3::new(q[0], q[1], q[2], q[1], q[3], q[4], q[2], q[4], q[5]);
    let mut norm = 0.0;
    for r in 0..2 * frames {
        let row = motion.fixed_view::<1, 3>(r, 0).into_owned();
        norm += (row * m * row.transpose())[0];
    }
    norm /= (2 * frames) as f64;
    if norm == 0.0 {
        return Err(Error::RankDeficient { ratio: 0.0 });
    }
    m /= norm;
    Ok(m)
}
