//! Linear combination of views.
//!
//! Under orthographic projection every view of a rigid 8-point object has x and
//! y coordinate vectors inside span{X, Y, Z, 1} of the object's 3D coordinates.
//! Two generic training views already span that space, so the residual of a
//! test view against the span of all training coordinate vectors is zero for
//! the right object and generically positive for any other.

use nalgebra::{DMatrix, DVector};

use crate::clipgen::NUM_VERTICES;
use crate::error::{Error, Result};
use crate::scene::View2;

use super::svd::thin_svd;
use super::{argmin_class, LibraryView, ViewLibrary};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LcConfig {
    /// Include a constant column (absorbs image translation).
    pub constant: bool,
    /// Singular values below `rank_tol * sigma_max` are treated as zero.
    pub rank_tol: f64,
}

impl Default for LcConfig {
    fn default() -> Self {
        LcConfig {
            constant: true,
            rank_tol: 1e-8,
        }
    }
}

/// Orthonormal basis of the span of one class's training views.
#[derive(Debug, Clone)]
pub struct LcModel {
    pub class_id: u64,
    basis: DMatrix<f64>,
    pub singular_values: Vec<f64>,
}

impl LcModel {
    pub fn new(class_id: u64, views: &[LibraryView], config: LcConfig) -> Result<Self> {
        if views.len() < 2 {
            return Err(Error::InsufficientViews {
                needed: 2,
                got: views.len(),
            });
        }
        let ncols = 2 * views.len() + usize::from(config.constant);
        let mut b = DMatrix::zeros(NUM_VERTICES, ncols);
        for (j, v) in views.iter().enumerate() {
            for (i, p) in v.points.iter().enumerate() {
                b[(i, 2 * j)] = p.x;
                b[(i, 2 * j + 1)] = p.y;
            }
        }
        if config.constant {
            b.column_mut(ncols - 1).fill(1.0);
        }
        let svd = thin_svd(&b)?;
        let sv = svd.singular_values;
        let rank = sv.iter().filter(|&&s| s > config.rank_tol * sv[0]).count();
        if rank < 3 {
            return Err(Error::DegenerateSpan { class_id, rank });
        }
        Ok(LcModel {
            class_id,
            basis: svd.u.columns(0, rank).into_owned(),
            singular_values: sv,
        })
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    /// Squared distance of the test's x and y vectors to the span, divided by
    /// the squared norm of the centered test view.
    pub fn residual(&self, test: &View2) -> f64 {
        let x = DVector::from_iterator(NUM_VERTICES, test.iter().map(|p| p.x));
        let y = DVector::from_iterator(NUM_VERTICES, test.iter().map(|p| p.y));
        let r = |v: &DVector<f64>| {
            let proj = &self.basis * (self.basis.transpose() * v);
            (v - proj).norm_squared()
        };
        let scale = centered_norm2(&x) + centered_norm2(&y);
        (r(&x) + r(&y)) / scale.max(f64::MIN_POSITIVE)
    }
}

fn centered_norm2(v: &DVector<f64>) -> f64 {
    let m = v.mean();
    v.iter().map(|a| (a - m) * (a - m)).sum()
}

pub fn lc_residual(test: &View2, class_views: &[LibraryView], config: LcConfig) -> Result<f64> {
    Ok(LcModel::new(0, class_views, config)?.residual(test))
}

/// Per-class models; degenerate classes are kept as `None` and never win.
#[derive(Debug, Clone)]
pub struct LcClassifier {
    models: Vec<(u64, Option<LcModel>)>,
}

impl LcClassifier {
    pub fn new(lib: &ViewLibrary, config: LcConfig) -> Result<Self> {
        if lib.is_empty() {
            return Err(Error::EmptyLibrary);
        }
        let mut models = Vec::with_capacity(lib.len());
        for (k, views) in lib.iter() {
            match LcModel::new(k, views, config) {
                Ok(m) => models.push((k, Some(m))),
                Err(Error::DegenerateSpan { .. }) => models.push((k, None)),
                Err(e) => return Err(e),
            }
        }
        Ok(LcClassifier { models })
    }

    pub fn residuals(&self, test: &View2) -> Vec<(u64, f64)> {
        self.models
            .iter()
            .map(|(k, m)| (*k, m.as_ref().map_or(f64::INFINITY, |m| m.residual(test))))
            .collect()
    }

    pub fn classify(&self, test: &View2) -> u64 {
        argmin_class(self.residuals(test).into_iter())
            .expect("at least one class")
            .0
    }

    pub fn model(&self, class_id: u64) -> Option<&LcModel> {
        self.models
            .iter()
            .find(|(k, _)| *k == class_id)
            .and_then(|(_, m)| m.as_ref())
    }
}

/// Class with the smallest residual; ties go to the lowest class id.
pub fn lc_classify(test: &View2, lib: &ViewLibrary, config: LcConfig) -> Result<u64> {
    Ok(LcClassifier::new(lib, config)?.classify(test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clipgen::{generate_paperclip, GenConfig, Paperclip};
    use crate::scene::{view_of, Axis, Camera, PoseSpec, Vec2};

    fn views(clip: &Paperclip, angles: &[f64], cam: &Camera) -> Vec<LibraryView> {
        angles
            .iter()
            .map(|&a| {
                let pose = PoseSpec::single(Axis::Y, a);
                LibraryView {
                    points: view_of(clip, &pose, cam).unwrap(),
                    pose,
                }
            })
            .collect()
    }

    /// Smallest residual over every invertible 4-column subset of the basis
    /// columns, each solved through its normal equations.
    fn brute_residual(test: &View2, lib_views: &[LibraryView]) -> f64 {
        let mut cols: Vec<DVector<f64>> = Vec::new();
        for v in lib_views {
            cols.push(DVector::from_iterator(8, v.points.iter().map(|p| p.x)));
            cols.push(DVector::from_iterator(8, v.points.iter().map(|p| p.y)));
        }
        cols.push(DVector::from_element(8, 1.0));
        let x = DVector::from_iterator(8, test.iter().map(|p| p.x));
        let y = DVector::from_iterator(8, test.iter().map(|p| p.y));
        let n = cols.len();
        let mut best = f64::INFINITY;
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    for d in c + 1..n {
                        let m = DMatrix::from_columns(&[
                            cols[a].clone(),
                            cols[b].clone(),
                            cols[c].clone(),
                            cols[d].clone(),
                        ]);
                        let g = m.transpose() * &m;
                        let Some(ch) = g.clone().cholesky() else {
                            continue;
                        };
                        let diag: f64 = g.diagonal().iter().product();
                        if g.determinant().abs() < 1e-10 * diag {
                            continue;
                        }
                        let rx = &x - &m * ch.solve(&(m.transpose() * &x));
                        let ry = &y - &m * ch.solve(&(m.transpose() * &y));
                        best = best.min(rx.norm_squared() + ry.norm_squared());
                    }
                }
            }
        }
        best / (centered_norm2(&x) + centered_norm2(&y))
    }

    #[test]
    fn orthographic_rotation_in_span() {
        let cam = Camera::orthographic(224);
        let clip = generate_paperclip(&GenConfig::with_seed(2), 0).unwrap();
        let lib = views(&clip, &[0.0, 75.0], &cam);
        let model = LcModel::new(0, &lib, LcConfig::default()).unwrap();
        assert_eq!(model.rank(), 4);
        for (axis, a) in [(Axis::Y, 200.0), (Axis::X, 33.0), (Axis::Z, 91.0)] {
            let t = view_of(&clip, &PoseSpec::single(axis, a), &cam).unwrap();
            let r = model.residual(&t);
            assert!(r <= 1e-9, "{axis:?} {r}");
            assert!(brute_residual(&t, &lib) <= 1e-9);
        }
        let other = generate_paperclip(&GenConfig::with_seed(2), 1).unwrap();
        let t = view_of(&other, &PoseSpec::single(Axis::Y, 40.0), &cam).unwrap();
        let r = model.residual(&t);
        let brute = brute_residual(&t, &lib);
        assert!((r - brute).abs() < 1e-9 * brute.max(1.0), "{r} vs {brute}");
        assert!(r > 1e-3);
    }

    #[test]
    fn training_view_residual_zero() {
        let cam = Camera::perspective(224);
        let clip = generate_paperclip(&GenConfig::with_seed(4), 3).unwrap();
        let lib = views(&clip, &[0.0, 40.0], &cam);
        assert!(lc_residual(&lib[1].points, &lib, LcConfig::default()).unwrap() < 1e-20);
    }

    #[test]
    fn coincident_views_are_degenerate() {
        let pts: View2 = std::array::from_fn(|i| Vec2::new(i as f64, 0.0));
        let v = LibraryView {
            pose: PoseSpec::single(Axis::Y, 0.0),
            points: pts,
        };
        let lib = vec![v.clone(), v];
        assert!(matches!(
            LcModel::new(0, &lib, LcConfig::default()),
            Err(Error::DegenerateSpan { rank: 2, .. })
        ));
    }

    #[test]
    fn single_view_class_rejected() {
        let cam = Camera::orthographic(224);
        let clip = generate_paperclip(&GenConfig::with_seed(4), 3).unwrap();
        let mut lib = ViewLibrary::new();
        let pose = PoseSpec::single(Axis::Y, 0.0);
        lib.insert(3, pose.clone(), view_of(&clip, &pose, &cam).unwrap());
        let t = lib.views(3)[0].points;
        assert!(matches!(
            lc_classify(&t, &lib, LcConfig::default()),
            Err(Error::InsufficientViews { .. })
        ));
    }

    #[test]
    fn ties_go_to_lowest_class() {
        let cam = Camera::orthographic(224);
        let clip = generate_paperclip(&GenConfig::with_seed(4), 3).unwrap();
        let mut lib = ViewLibrary::new();
        for k in [7, 2, 5] {
            for v in views(&clip, &[0.0, 75.0], &cam) {
                lib.insert(k, v.pose, v.points);
            }
        }
        let t = view_of(&clip, &PoseSpec::single(Axis::Y, 10.0), &cam).unwrap();
        let c = LcClassifier::new(&lib, LcConfig::default()).unwrap();
        let r = c.residuals(&t);
        assert_eq!(r[0].1, r[1].1);
        assert_eq!(c.classify(&t), 2);
    }
}
