//! Recognition by alignment of a reconstructed 3D shape to a 2D view.

use nalgebra::{Matrix2, Matrix2x3, Matrix3, SMatrix};

use crate::clipgen::{Vec3, NUM_VERTICES};
use crate::error::{Error, Result};
use crate::scene::{Vec2, View2};

use super::{argmin_class, Shape3D};

type Mat3x8 = SMatrix<f64, 3, NUM_VERTICES>;
type Mat2x8 = SMatrix<f64, 2, NUM_VERTICES>;
type Mat8x3 = SMatrix<f64, NUM_VERTICES, 3>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignScore {
    /// Residual of the unconstrained affine fit.
    pub affine: f64,
    /// Residual after snapping the pose to a scaled row-orthonormal matrix,
    /// minimum over the two reflection hypotheses.
    pub constrained: f64,
}

/// A reconstructed shape prepared for repeated least-squares pose fits.
#[derive(Debug, Clone)]
pub struct AlignModel {
    pub class_id: u64,
    /// The shape and its mirror image (z negated).
    shapes: [Mat3x8; 2],
    pinv: [Mat8x3; 2],
}

impl AlignModel {
    pub fn new(class_id: u64, shape: &Shape3D) -> Result<Self> {
        let s = Mat3x8::from_fn(|r, c| shape.points[c][r]);
        let mirror = Matrix3::from_diagonal(&Vec3::new(1.0, 1.0, -1.0)) * s;
        let pinv = |m: &Mat3x8| -> Result<Mat8x3> {
            let g = m * m.transpose();
            let inv = g.try_inverse().ok_or(Error::RankDeficient { ratio: 0.0 })?;
            Ok(m.transpose() * inv)
        };
        Ok(AlignModel {
            class_id,
            pinv: [pinv(&s)?, pinv(&mirror)?],
            shapes: [s, mirror],
        })
    }

    /// Fits `test ~ M S + t` and returns residuals normalized by the squared
    /// norm of the centered test view.
    pub fn score(&self, test: &View2) -> AlignScore {
        let mean = test.iter().sum::<Vec2>() / NUM_VERTICES as f64;
        let t = Mat2x8::from_fn(|r, c| test[c][r] - mean[r]);
        let scale = t.norm_squared().max(f64::MIN_POSITIVE);
        let mut affine = f64::INFINITY;
        let mut constrained = f64::INFINITY;
        for (s, p) in self.shapes.iter().zip(&self.pinv) {
            let m: Matrix2x3<f64> = t * p;
            affine = affine.min((t - m * s).norm_squared());
            let snapped = nearest_scaled_orthonormal(&m);
            constrained = constrained.min((t - snapped * s).norm_squared());
        }
        AlignScore {
            affine: affine / scale,
            constrained: constrained / scale,
        }
    }
}

/// Closest matrix of the form `s R` (rows of R orthonormal) in Frobenius norm:
/// `R = U V^T` and `s` the mean singular value.
pub fn nearest_scaled_orthonormal(m: &Matrix2x3<f64>) -> Matrix2x3<f64> {
    let g: Matrix2<f64> = m * m.transpose();
    let det = g.determinant();
    let tr = g.trace();
    if det > 1e-12 * tr * tr {
        // closed form for the 2x2 SPD square root
        let sd = det.sqrt();
        let root = (g + Matrix2::identity() * sd) / (tr + 2.0 * sd).sqrt();
        let s = root.trace() / 2.0;
        if let Some(inv) = root.try_inverse() {
            return (inv * m) * s;
        }
    }
    let svd = m.svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let s = svd.singular_values.sum() / 2.0;
    let r = u * vt;
    r * s
}

/// Classifies by the smallest constrained residual.
pub fn align_classify(test: &View2, models: &[AlignModel]) -> Option<(u64, f64)> {
    argmin_class(
        models
            .iter()
            .map(|m| (m.class_id, m.score(test).constrained)),
    )
}

/// Builds the alignment model set from per-class shapes.
pub fn models_from_shapes(shapes: &[(u64, Shape3D)]) -> Result<Vec<AlignModel>> {
    shapes.iter().map(|(k, s)| AlignModel::new(*k, s)).collect()
}
