//! C interface to viewlab.
//!
//! Objects cross the boundary as opaque handles created by `*_new` / `*_load`
//! functions and released by the matching `*_free`. Every fallible call
//! returns a [`VlStatus`]; on failure the message is available from
//! [`vl_last_error`] on the same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use viewlab::clipgen::{generate_paperclip, GenConfig, Paperclip, NUM_VERTICES};
use viewlab::harness::{AlignClassifier, Classifier};
use viewlab::mlp::{load_model, MlpModel};
use viewlab::oracles::{LcClassifier, LcConfig, Match2dConfig, Matcher, ViewLibrary};
use viewlab::render::coord_array;
use viewlab::scene::{view_of, Axis, Camera, PoseSpec, Projection, Vec2, View2, ViewSelection};
use viewlab::Error;

/// Number of doubles in a flattened view (x, y per vertex).
pub const VL_VIEW_LEN: usize = 16;
/// Number of doubles in a flattened paperclip (x, y, z per vertex).
pub const VL_CLIP_LEN: usize = 24;

const _: () = assert!(VL_VIEW_LEN == 2 * NUM_VERTICES && VL_CLIP_LEN == 3 * NUM_VERTICES);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Geometry = 5,
    Numeric = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VlAxis {
    X = 0,
    Y = 1,
    Z = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VlOracleKind {
    Match2d = 0,
    Lc = 1,
    Align3d = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VlCamera {
    /// 0 orthographic, 1 perspective.
    pub perspective: i32,
    pub distance: f64,
    pub scale: f64,
    pub image_size: u32,
}

/// A generated paperclip.
pub struct VlClip(Paperclip);

/// A classical recognizer built from training views.
pub struct VlOracle(Box<dyn Classifier + Send>);

/// A trained coordinate-array network.
pub struct VlModel(MlpModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> VlStatus {
    match e {
        Error::Io { .. } => VlStatus::Io,
        Error::Parse(_) | Error::Json { .. } | Error::Csv { .. } | Error::Image { .. } => {
            VlStatus::Parse
        }
        Error::BehindCamera { .. }
        | Error::DegenerateObject
        | Error::DegenerateSpan { .. }
        | Error::RankDeficient { .. }
        | Error::GenerationExhausted { .. }
        | Error::EmptyMesh => VlStatus::Geometry,
        Error::DivergedLoss { .. } | Error::NoConvergence => VlStatus::Numeric,
        _ => VlStatus::InvalidArgument,
    }
}

/// Runs `f`, turning errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (VlStatus, String)>) -> VlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => VlStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            VlStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (VlStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (VlStatus, String) {
    (VlStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> (VlStatus, String) {
    (VlStatus::InvalidArgument, msg.into())
}

fn camera_of(c: &VlCamera) -> Result<Camera, (VlStatus, String)> {
    let cam = Camera {
        mode: if c.perspective != 0 {
            Projection::Perspective
        } else {
            Projection::Orthographic
        },
        distance: c.distance,
        scale: c.scale,
        image_size: c.image_size,
    };
    cam.check().map_err(lib_err)?;
    Ok(cam)
}

fn axis_of(a: VlAxis) -> Axis {
    match a {
        VlAxis::X => Axis::X,
        VlAxis::Y => Axis::Y,
        VlAxis::Z => Axis::Z,
    }
}

unsafe fn read_view(points: *const f64) -> Result<View2, (VlStatus, String)> {
    if points.is_null() {
        return Err(null("points"));
    }
    let s = std::slice::from_raw_parts(points, VL_VIEW_LEN);
    if s.iter().any(|v| !v.is_finite()) {
        return Err(invalid("points must be finite"));
    }
    let mut v = [Vec2::zeros(); NUM_VERTICES];
    for (i, p) in v.iter_mut().enumerate() {
        *p = Vec2::new(s[2 * i], s[2 * i + 1]);
    }
    Ok(v)
}

unsafe fn write_view(view: &View2, out: *mut f64) {
    let o = std::slice::from_raw_parts_mut(out, VL_VIEW_LEN);
    for (i, p) in view.iter().enumerate() {
        o[2 * i] = p.x;
        o[2 * i + 1] = p.y;
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn vl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread, or NULL. Owned by the library.
#[no_mangle]
pub extern "C" fn vl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Default camera of either kind.
#[no_mangle]
pub extern "C" fn vl_camera_default(perspective: i32, image_size: u32) -> VlCamera {
    let c = if perspective != 0 {
        Camera::perspective(image_size)
    } else {
        Camera::orthographic(image_size)
    };
    VlCamera {
        perspective,
        distance: c.distance,
        scale: c.scale,
        image_size,
    }
}

/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn vl_clip_new(seed: u64, class_id: u64, out: *mut *mut VlClip) -> VlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let clip = generate_paperclip(&GenConfig::with_seed(seed), class_id).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(VlClip(clip)));
        Ok(())
    })
}

/// Copies the vertices as `VL_CLIP_LEN` doubles (x, y, z per vertex).
///
/// # Safety
/// `clip` must come from [`vl_clip_new`]; `out` must hold `VL_CLIP_LEN` doubles.
#[no_mangle]
pub unsafe extern "C" fn vl_clip_vertices(clip: *const VlClip, out: *mut f64) -> VlStatus {
    guard(|| {
        let clip = clip.as_ref().ok_or_else(|| null("clip"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let o = std::slice::from_raw_parts_mut(out, VL_CLIP_LEN);
        for (i, v) in clip.0.vertices.iter().enumerate() {
            o[3 * i..3 * i + 3].copy_from_slice(&[v.x, v.y, v.z]);
        }
        Ok(())
    })
}

/// Projects the clip rotated by `deg` about `axis`; writes `VL_VIEW_LEN` doubles.
///
/// # Safety
/// `clip` must come from [`vl_clip_new`]; `out` must hold `VL_VIEW_LEN` doubles.
#[no_mangle]
pub unsafe extern "C" fn vl_clip_view(
    clip: *const VlClip,
    axis: VlAxis,
    deg: f64,
    camera: VlCamera,
    out: *mut f64,
) -> VlStatus {
    guard(|| {
        let clip = clip.as_ref().ok_or_else(|| null("clip"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        if !deg.is_finite() {
            return Err(invalid("angle must be finite"));
        }
        let cam = camera_of(&camera)?;
        let view =
            view_of(&clip.0, &PoseSpec::single(axis_of(axis), deg), &cam).map_err(lib_err)?;
        write_view(&view, out);
        Ok(())
    })
}

/// # Safety
/// `clip` must come from [`vl_clip_new`] or be NULL; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn vl_clip_free(clip: *mut VlClip) {
    if !clip.is_null() {
        drop(Box::from_raw(clip));
    }
}

/// Bins a view into a coordinate array of `2 * bins` doubles (x half, then y half).
///
/// # Safety
/// `points` must hold `VL_VIEW_LEN` doubles and `out` `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn vl_coord_array(
    points: *const f64,
    camera: VlCamera,
    bins: usize,
    out: *mut f64,
    out_len: usize,
) -> VlStatus {
    guard(|| {
        let view = read_view(points)?;
        if out.is_null() {
            return Err(null("out"));
        }
        if bins == 0 || out_len != 2 * bins {
            return Err(invalid(format!(
                "out_len must be 2 * bins (bins {bins}, out_len {out_len})"
            )));
        }
        let cam = camera_of(&camera)?;
        let arr = coord_array(&view, &cam, bins);
        std::slice::from_raw_parts_mut(out, out_len).copy_from_slice(&arr.values);
        Ok(())
    })
}

/// Builds an oracle over classes `0..classes` of the seeded clip set, trained
/// on the given angles about `axis`.
///
/// # Safety
/// `angles` must hold `n_angles` doubles; `out` must be a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn vl_oracle_new(
    kind: VlOracleKind,
    seed: u64,
    classes: u64,
    axis: VlAxis,
    angles: *const f64,
    n_angles: usize,
    camera: VlCamera,
    out: *mut *mut VlOracle,
) -> VlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if angles.is_null() || n_angles == 0 {
            return Err(invalid("at least one training angle is required"));
        }
        if classes == 0 {
            return Err(invalid("classes must be positive"));
        }
        let cam = camera_of(&camera)?;
        let angles = std::slice::from_raw_parts(angles, n_angles);
        let cfg = GenConfig::with_seed(seed);
        let clips = (0..classes)
            .map(|k| generate_paperclip(&cfg, k))
            .collect::<viewlab::Result<Vec<_>>>()
            .map_err(lib_err)?;
        let sel = ViewSelection::new(axis_of(axis), angles.iter().copied());
        let lib = ViewLibrary::from_clips(&clips, &sel, &cam).map_err(lib_err)?;
        let c: Box<dyn Classifier + Send> = match kind {
            VlOracleKind::Match2d => {
                Box::new(Matcher::new(&lib, Match2dConfig::default()).map_err(lib_err)?)
            }
            VlOracleKind::Lc => {
                Box::new(LcClassifier::new(&lib, LcConfig::default()).map_err(lib_err)?)
            }
            VlOracleKind::Align3d => {
                Box::new(AlignClassifier::from_library(&lib).map_err(lib_err)?)
            }
        };
        *out = Box::into_raw(Box::new(VlOracle(c)));
        Ok(())
    })
}

/// # Safety
/// `oracle` must come from [`vl_oracle_new`]; `points` must hold `VL_VIEW_LEN` doubles.
#[no_mangle]
pub unsafe extern "C" fn vl_oracle_classify(
    oracle: *const VlOracle,
    points: *const f64,
    out_class: *mut u64,
) -> VlStatus {
    guard(|| {
        let oracle = oracle.as_ref().ok_or_else(|| null("oracle"))?;
        let view = read_view(points)?;
        if out_class.is_null() {
            return Err(null("out_class"));
        }
        *out_class = oracle.0.classify(&view);
        Ok(())
    })
}

/// # Safety
/// `oracle` must come from [`vl_oracle_new`] or be NULL; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn vl_oracle_free(oracle: *mut VlOracle) {
    if !oracle.is_null() {
        drop(Box::from_raw(oracle));
    }
}

/// Loads a model file written by `train-mlp`.
///
/// # Safety
/// `path` must be a NUL-terminated UTF-8 string; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn vl_model_load(path: *const c_char, out: *mut *mut VlModel) -> VlStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| invalid("path is not UTF-8"))?;
        let model = load_model(Path::new(path)).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(VlModel(model)));
        Ok(())
    })
}

/// Number of classes the model distinguishes, or 0 for NULL.
///
/// # Safety
/// `model` must come from [`vl_model_load`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn vl_model_classes(model: *const VlModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.class_ids.len())
}

/// # Safety
/// `model` must come from [`vl_model_load`]; `points` must hold `VL_VIEW_LEN` doubles.
#[no_mangle]
pub unsafe extern "C" fn vl_model_classify(
    model: *const VlModel,
    points: *const f64,
    camera: VlCamera,
    out_class: *mut u64,
) -> VlStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        let view = read_view(points)?;
        if out_class.is_null() {
            return Err(null("out_class"));
        }
        let cam = camera_of(&camera)?;
        *out_class = model.0.classify(&view, &cam);
        Ok(())
    })
}

/// # Safety
/// `model` must come from [`vl_model_load`] or be NULL; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn vl_model_free(model: *mut VlModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
