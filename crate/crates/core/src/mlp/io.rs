//! Binary model file: magic, version, layer shapes, class ids, then every
//! weight matrix (row-major, `fan_in x fan_out`) followed by its bias, all
//! little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

use super::{Layer, MlpModel, MlpParams};

pub const MODEL_MAGIC: &[u8; 6] = b"VLMLP\0";
pub const MODEL_VERSION: u16 = 1;

pub fn write_model<W: Write>(out: &mut W, model: &MlpModel) -> std::io::Result<()> {
    out.write_all(MODEL_MAGIC)?;
    out.write_all(&MODEL_VERSION.to_le_bytes())?;
    let layers = &model.params.layers;
    out.write_all(&(layers.len() as u32).to_le_bytes())?;
    for l in layers {
        out.write_all(&(l.w.nrows() as u32).to_le_bytes())?;
        out.write_all(&(l.w.ncols() as u32).to_le_bytes())?;
    }
    out.write_all(&(model.class_ids.len() as u32).to_le_bytes())?;
    for k in &model.class_ids {
        out.write_all(&k.to_le_bytes())?;
    }
    for l in layers {
        for v in l.w.iter().chain(l.b.iter()) {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn take<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Parse(format!("truncated model file: {e}")))?;
    Ok(buf)
}

fn take_u32<R: Read>(r: &mut R) -> Result<usize> {
    Ok(u32::from_le_bytes(take(r)?) as usize)
}

pub fn read_model<R: Read>(r: &mut R) -> Result<MlpModel> {
    if &take::<6, _>(r)? != MODEL_MAGIC {
        return Err(Error::Parse("not a model file (bad magic)".into()));
    }
    let version = u16::from_le_bytes(take(r)?);
    if version != MODEL_VERSION {
        return Err(Error::Parse(format!("unsupported model version {version}")));
    }
    let n = take_u32(r)?;
    if n == 0 || n > 64 {
        return Err(Error::Parse(format!("implausible layer count {n}")));
    }
    let mut shapes = Vec::with_capacity(n);
    for _ in 0..n {
        shapes.push((take_u32(r)?, take_u32(r)?));
    }
    if shapes.windows(2).any(|w| w[0].1 != w[1].0) || shapes.iter().any(|&(a, b)| a == 0 || b == 0)
    {
        return Err(Error::Parse("inconsistent layer shapes".into()));
    }
    let classes = take_u32(r)?;
    if classes != shapes[n - 1].1 {
        return Err(Error::Parse(format!(
            "class table has {classes} ids but the output layer has {}",
            shapes[n - 1].1
        )));
    }
    let class_ids = (0..classes)
        .map(|_| take::<8, _>(r).map(u64::from_le_bytes))
        .collect::<Result<Vec<_>>>()?;
    let mut layers = Vec::with_capacity(n);
    for (fan_in, fan_out) in shapes {
        let mut read_f64s = |count: usize| -> Result<Vec<f64>> {
            (0..count)
                .map(|_| take::<8, _>(r).map(f64::from_le_bytes))
                .collect()
        };
        let w = Array2::from_shape_vec((fan_in, fan_out), read_f64s(fan_in * fan_out)?)
            .expect("shape matches count");
        let b = Array1::from(read_f64s(fan_out)?);
        layers.push(Layer { w, b });
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest).map_err(|e| Error::Parse(e.to_string()))? != 0 {
        return Err(Error::Parse("trailing bytes after model".into()));
    }
    let params = MlpParams { layers };
    if !params.is_finite() {
        return Err(Error::Parse("model contains non-finite values".into()));
    }
    Ok(MlpModel { params, class_ids })
}

pub fn save_model(path: &Path, model: &MlpModel) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_model(&mut out, model).map_err(|e| Error::io(path, e))?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<MlpModel> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_model(&mut BufReader::new(file))
}
