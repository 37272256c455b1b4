//! Dataset emission: one record per (class, pose), manifest written last.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clipgen::{ClipFile, Paperclip, Vec3};
use crate::error::{Error, Result};
use crate::rng;
use crate::scene::{
    apply_pose_with, pose_grid, project, Axes, Camera, Composition, PoseSpec, ViewSelection,
};

use super::{
    composite_background, coord_array, ingest_mesh, render_coord_image, render_mesh_flat,
    render_wireframe, Mesh, RasterImage, DEFAULT_LIGHT,
};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;
const COORDS_FILE: &str = "coords.f64";
const COORDS_INDEX_FILE: &str = "coords.index.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    /// Projected vertices only.
    Points,
    Wireframe,
    CoordImage,
    CoordArray,
    /// Flat-shaded mesh render.
    Shaded,
}

impl std::str::FromStr for Representation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "points" => Representation::Points,
            "wireframe" => Representation::Wireframe,
            "coordimage" => Representation::CoordImage,
            "coordarray" => Representation::CoordArray,
            "shaded" => Representation::Shaded,
            _ => return Err(Error::Parse(format!("unknown representation {s:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrayStorage {
    /// Coordinate arrays as JSON numbers in the manifest.
    #[default]
    Inline,
    /// Flat little-endian f64 records in `coords.f64`, indexed by record offset.
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Eval,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDesc {
    pub axes: Vec<Axes>,
    pub single_stride: f64,
    pub dual_stride: f64,
    pub composition: Composition,
}

impl GridDesc {
    pub fn full() -> Self {
        GridDesc {
            axes: Axes::ALL.to_vec(),
            single_stride: 1.0,
            dual_stride: 10.0,
            composition: Composition::Extrinsic,
        }
    }

    pub fn single(axes: &[Axes], stride: f64) -> Self {
        GridDesc {
            axes: axes.to_vec(),
            single_stride: stride,
            ..Self::full()
        }
    }

    pub fn poses(&self) -> Result<Vec<PoseSpec>> {
        pose_grid(&self.axes, self.single_stride, self.dual_stride)
    }
}

#[derive(Debug, Clone)]
pub struct DatasetSpec {
    pub seed: u64,
    pub representation: Representation,
    pub camera: Camera,
    pub grid: GridDesc,
    pub bins: usize,
    pub storage: ArrayStorage,
    /// Records whose pose is in this selection are tagged `train`, others `eval`.
    pub train_views: Option<ViewSelection>,
    pub backgrounds: Vec<RasterImage>,
}

impl DatasetSpec {
    pub fn new(seed: u64, representation: Representation, camera: Camera, grid: GridDesc) -> Self {
        DatasetSpec {
            seed,
            representation,
            camera,
            grid,
            bins: super::DEFAULT_BINS,
            storage: ArrayStorage::Inline,
            train_views: None,
            backgrounds: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub enum SceneObject {
    Clip(Paperclip),
    Mesh { class_id: u64, mesh: Mesh },
}

impl SceneObject {
    pub fn class_id(&self) -> u64 {
        match self {
            SceneObject::Clip(c) => c.class_id,
            SceneObject::Mesh { class_id, .. } => *class_id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub class_id: u64,
    pub pose: PoseSpec,
    pub split: Split,
    /// Projected vertices in pixels (paperclips only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<f64>>,
    /// Record index into `coords.f64` for binary storage.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    pub seed: u64,
    pub classes: usize,
    pub representation: Representation,
    pub camera: Camera,
    pub grid: GridDesc,
    pub bins: usize,
    pub storage: ArrayStorage,
    pub records: Vec<ManifestRecord>,
}

impl DatasetManifest {
    /// Loads the coordinate array of a record, whichever storage it uses.
    pub fn coords(&self, root: &Path, record: &ManifestRecord) -> Result<Option<Vec<f64>>> {
        if let Some(c) = &record.coords {
            return Ok(Some(c.clone()));
        }
        let Some(off) = record.offset else {
            return Ok(None);
        };
        let path = root.join(COORDS_FILE);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let len = 2 * self.bins;
        let start = off as usize * len * 8;
        let chunk = bytes.get(start..start + len * 8).ok_or_else(|| {
            Error::Parse(format!("{}: offset {off} out of range", path.display()))
        })?;
        Ok(Some(
            chunk
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                .collect(),
        ))
    }
}

fn file_key(pose: &PoseSpec) -> String {
    pose.key().replace(':', "_")
}

/// Renders every (class, pose) record and writes the manifest last, so a
/// directory with a manifest is always complete. Any stale manifest is
/// removed before rendering starts.
pub fn emit_dataset(
    objects: &[SceneObject],
    spec: &DatasetSpec,
    out_dir: &Path,
) -> Result<DatasetManifest> {
    spec.camera.check()?;
    let poses = spec.grid.poses()?;
    let mut objects: Vec<&SceneObject> = objects.iter().collect();
    objects.sort_by_key(|o| o.class_id());

    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let manifest_path = out_dir.join(MANIFEST_FILE);
    if manifest_path.exists() {
        fs::remove_file(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    }

    let size = spec.camera.image_size;
    let backgrounds: Vec<RasterImage> = spec
        .backgrounds
        .iter()
        .map(|b| b.resized(size, size))
        .collect();

    let needs_images = matches!(
        spec.representation,
        Representation::Wireframe | Representation::CoordImage | Representation::Shaded
    );
    if needs_images {
        for obj in &objects {
            let dir = out_dir
                .join("images")
                .join(format!("c{:06}", obj.class_id()));
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
    }

    let jobs: Vec<(usize, usize)> = (0..objects.len())
        .flat_map(|o| (0..poses.len()).map(move |p| (o, p)))
        .collect();
    let rendered: Vec<(ManifestRecord, Option<Vec<f64>>)> = jobs
        .par_iter()
        .enumerate()
        .map(|(index, &(o, p))| {
            render_record(
                objects[o],
                &poses[p],
                index as u64,
                spec,
                &backgrounds,
                out_dir,
            )
        })
        .collect::<Result<_>>()?;

    let mut records = Vec::with_capacity(rendered.len());
    if spec.storage == ArrayStorage::Binary && spec.representation == Representation::CoordArray {
        let path = out_dir.join(COORDS_FILE);
        let f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(f);
        for (i, (mut rec, arr)) in rendered.into_iter().enumerate() {
            for v in arr.unwrap_or_default() {
                w.write_all(&v.to_le_bytes())
                    .map_err(|e| Error::io(&path, e))?;
            }
            rec.offset = Some(i as u64);
            records.push(rec);
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        let index = serde_json::json!({
            "file": COORDS_FILE,
            "dtype": "f64le",
            "record_len": 2 * spec.bins,
            "count": records.len(),
        });
        let ipath = out_dir.join(COORDS_INDEX_FILE);
        fs::write(&ipath, index.to_string()).map_err(|e| Error::io(&ipath, e))?;
    } else {
        records.extend(rendered.into_iter().map(|(mut rec, arr)| {
            rec.coords = arr;
            rec
        }));
    }

    let manifest = DatasetManifest {
        version: MANIFEST_VERSION,
        seed: spec.seed,
        classes: objects.len(),
        representation: spec.representation,
        camera: spec.camera,
        grid: spec.grid.clone(),
        bins: spec.bins,
        storage: spec.storage,
        records,
    };
    write_json_atomic(&manifest_path, &manifest)?;
    Ok(manifest)
}

fn render_record(
    obj: &SceneObject,
    pose: &PoseSpec,
    index: u64,
    spec: &DatasetSpec,
    backgrounds: &[RasterImage],
    out_dir: &Path,
) -> Result<(ManifestRecord, Option<Vec<f64>>)> {
    let cam = &spec.camera;
    let class_id = obj.class_id();
    let split = match &spec.train_views {
        None => Split::All,
        Some(sel) if sel.contains(pose) => Split::Train,
        Some(_) => Split::Eval,
    };
    let mut record = ManifestRecord {
        class_id,
        pose: pose.clone(),
        split,
        points: None,
        file: None,
        coords: None,
        offset: None,
    };
    let mut array = None;
    let image = match (obj, spec.representation) {
        (SceneObject::Clip(clip), repr) if repr != Representation::Shaded => {
            let view = project(&apply_pose_with(clip, pose, spec.grid.composition), cam)?;
            record.points = Some(view.iter().map(|p| [p.x, p.y]).collect());
            match repr {
                Representation::Wireframe => Some(render_wireframe(&view, cam)),
                Representation::CoordImage => Some(render_coord_image(&view, cam)),
                Representation::CoordArray => {
                    array = Some(coord_array(&view, cam, spec.bins).values);
                    None
                }
                _ => None,
            }
        }
        (SceneObject::Mesh { mesh, .. }, Representation::Shaded) => Some(render_mesh_flat(
            mesh,
            pose,
            cam,
            Vec3::from(DEFAULT_LIGHT),
        )?),
        (_, repr) => {
            return Err(Error::InvalidConfig(format!(
                "class {class_id}: representation {repr:?} does not apply to this object kind"
            )))
        }
    };
    if let Some(mut img) = image {
        if !backgrounds.is_empty() {
            let pick = rng::split(rng::split(spec.seed, rng::tag::BACKGROUND), index)
                % backgrounds.len() as u64;
            img = composite_background(&img, &backgrounds[pick as usize])?;
        }
        let rel = format!("images/c{class_id:06}/{}.png", file_key(pose));
        img.save_png(&out_dir.join(&rel))?;
        record.file = Some(rel);
    }
    Ok((record, array))
}

fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let tmp = path.with_extension("json.partial");
    {
        let f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        let mut w = BufWriter::new(f);
        serde_json::to_writer(&mut w, value).map_err(|source| Error::Json {
            path: tmp.clone(),
            source,
        })?;
        w.write_all(b"\n").map_err(|e| Error::io(&tmp, e))?;
        w.flush().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<DatasetManifest> {
    let path = if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_path_buf()
    };
    let f = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_reader(std::io::BufReader::new(f))
        .map_err(|source| Error::Json { path, source })
}

/// Reads `class_*.json` paperclips and `*.obj` meshes from a directory.
/// Meshes are numbered after the clips in file-name order.
pub fn load_geometry(dir: &Path, seed: u64) -> Result<Vec<SceneObject>> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    let mut out = Vec::new();
    let mut meshes = Vec::new();
    for path in entries {
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if name.starts_with("class_") && name.ends_with(".json") {
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let file: ClipFile = serde_json::from_str(&text).map_err(|source| Error::Json {
                path: path.clone(),
                source,
            })?;
            out.push(SceneObject::Clip(Paperclip::try_from(file)?));
        } else if name.ends_with(".obj") {
            meshes.push(path);
        }
    }
    let first = out.iter().map(|o| o.class_id() + 1).max().unwrap_or(0);
    for (next, path) in (first..).zip(meshes) {
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let mesh = ingest_mesh(&text, seed, next)?;
        out.push(SceneObject::Mesh {
            class_id: next,
            mesh,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clipgen::{generate_paperclip, GenConfig};
    use crate::scene::Axis;

    fn clips(n: u64) -> Vec<SceneObject> {
        let cfg = GenConfig::with_seed(5);
        (0..n)
            .map(|k| SceneObject::Clip(generate_paperclip(&cfg, k).unwrap()))
            .collect()
    }

    #[test]
    fn counts_for_y_only() {
        let dir = tempfile::tempdir().unwrap();
        let spec = DatasetSpec::new(
            5,
            Representation::Points,
            Camera::orthographic(224),
            GridDesc::single(&[Axes::Y], 1.0),
        );
        let m = emit_dataset(&clips(100), &spec, dir.path()).unwrap();
        assert_eq!(m.records.len(), 36_000);
        assert!(dir.path().join(MANIFEST_FILE).exists());
    }

    #[test]
    fn wireframe_with_background_and_splits() {
        let dir = tempfile::tempdir().unwrap();
        let mut bg = RasterImage::black(10, 10, 3);
        bg.pixels.fill(90);
        let mut spec = DatasetSpec::new(
            1,
            Representation::Wireframe,
            Camera::perspective(48),
            GridDesc::single(&[Axes::Z], 90.0),
        );
        spec.backgrounds = vec![bg];
        spec.train_views = Some(ViewSelection::new(Axis::Z, [0.0, 180.0]));
        let m = emit_dataset(&clips(2), &spec, dir.path()).unwrap();
        assert_eq!(m.records.len(), 8);
        let train = m.records.iter().filter(|r| r.split == Split::Train).count();
        assert_eq!(train, 4);
        let img = RasterImage::load(&dir.path().join(m.records[0].file.as_ref().unwrap())).unwrap();
        assert_eq!(img.channels, 3);
        assert!(img.pixels.contains(&90));
        let reread = read_manifest(dir.path()).unwrap();
        assert_eq!(reread, m);
    }

    #[test]
    fn binary_coords_match_inline() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let mut spec = DatasetSpec::new(
            2,
            Representation::CoordArray,
            Camera::perspective(224),
            GridDesc::single(&[Axes::X], 30.0),
        );
        let inline = emit_dataset(&clips(3), &spec, a.path()).unwrap();
        spec.storage = ArrayStorage::Binary;
        let bin = emit_dataset(&clips(3), &spec, b.path()).unwrap();
        for (ri, rb) in inline.records.iter().zip(&bin.records) {
            assert!(rb.coords.is_none());
            assert_eq!(
                inline.coords(a.path(), ri).unwrap(),
                bin.coords(b.path(), rb).unwrap()
            );
        }
    }

    #[test]
    fn failed_run_leaves_no_manifest_and_rerun_completes() {
        let dir = tempfile::tempdir().unwrap();
        let spec = DatasetSpec::new(
            3,
            Representation::CoordImage,
            Camera::orthographic(32),
            GridDesc::single(&[Axes::Y], 60.0),
        );
        let objs = clips(2);
        emit_dataset(&objs, &spec, dir.path()).unwrap();
        // block one output file with a directory: the run fails midway
        let blocker = dir.path().join("images/c000001/y_120.png");
        fs::remove_file(&blocker).unwrap();
        fs::create_dir(&blocker).unwrap();
        assert!(matches!(
            emit_dataset(&objs, &spec, dir.path()),
            Err(Error::Image { .. })
        ));
        assert!(!dir.path().join(MANIFEST_FILE).exists());
        fs::remove_dir(&blocker).unwrap();
        let m = emit_dataset(&objs, &spec, dir.path()).unwrap();
        assert_eq!(m.records.len(), 12);
        assert!(dir.path().join(MANIFEST_FILE).exists());
    }

    #[test]
    fn geometry_dir_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        for obj in clips(3) {
            let SceneObject::Clip(c) = obj else {
                unreachable!()
            };
            let path = dir.path().join(format!("class_{:06}.json", c.class_id));
            fs::write(path, serde_json::to_string(&ClipFile::from(&c)).unwrap()).unwrap();
        }
        fs::write(
            dir.path().join("tri.obj"),
            "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n",
        )
        .unwrap();
        let objs = load_geometry(dir.path(), 0).unwrap();
        assert_eq!(objs.len(), 4);
        assert_eq!(objs[3].class_id(), 3);
        assert!(matches!(objs[3], SceneObject::Mesh { .. }));
        let original = clips(3);
        match (&objs[1], &original[1]) {
            (SceneObject::Clip(a), SceneObject::Clip(b)) => assert_eq!(a, b),
            _ => unreachable!(),
        }
    }
}
