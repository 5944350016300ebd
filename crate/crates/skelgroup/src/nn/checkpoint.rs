//! Binary model checkpoints.
//!
//! Layout: an 8-byte magic (`SKGCKPT1`), a little-endian `u32` tensor
//! count, then per tensor: `u32` name length, UTF-8 name, `u32` rank,
//! `u32` dimensions, and the row-major values as little-endian `f32`.
//! Tensors appear in the fixed order of [`ModelParams::named`].

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::model::{ModelConfig, ModelParams};
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"SKGCKPT1";

/// Writes all named parameter tensors to `path`.
pub fn save_checkpoint(path: impl AsRef<Path>, params: &ModelParams) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);
    w.write_all(MAGIC).map_err(io_err)?;
    let named = params.named();
    w.write_all(&(named.len() as u32).to_le_bytes()).map_err(io_err)?;
    for (name, tensor) in named {
        w.write_all(&(name.len() as u32).to_le_bytes()).map_err(io_err)?;
        w.write_all(name.as_bytes()).map_err(io_err)?;
        w.write_all(&(tensor.shape().len() as u32).to_le_bytes())
            .map_err(io_err)?;
        for &dim in tensor.shape() {
            w.write_all(&(dim as u32).to_le_bytes()).map_err(io_err)?;
        }
        for &v in tensor.data() {
            w.write_all(&(v as f32).to_le_bytes()).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

/// Reads a checkpoint and checks it against the geometry implied by `cfg`:
/// same tensor names, same order, same shapes.
pub fn load_checkpoint(path: impl AsRef<Path>, cfg: &ModelConfig) -> Result<ModelParams> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let bad = |m: String| Error::format(path, m);

    let mut magic = [0u8; 8];
    read_exact(&mut r, &mut magic, path)?;
    if &magic != MAGIC {
        return Err(bad("not a checkpoint file (bad magic)".into()));
    }
    let count = read_u32(&mut r, path)? as usize;

    let mut params = ModelParams::zeros(cfg);
    let mut expected = params.named_mut();
    if count != expected.len() {
        return Err(bad(format!(
            "checkpoint has {count} tensors, model needs {}",
            expected.len()
        )));
    }
    for (want_name, tensor) in expected.iter_mut() {
        let name_len = read_u32(&mut r, path)? as usize;
        let mut name_buf = vec![0u8; name_len];
        read_exact(&mut r, &mut name_buf, path)?;
        let name = String::from_utf8(name_buf)
            .map_err(|_| bad("tensor name is not UTF-8".into()))?;
        if &name != want_name {
            return Err(bad(format!("expected tensor {want_name}, found {name}")));
        }
        let rank = read_u32(&mut r, path)? as usize;
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            dims.push(read_u32(&mut r, path)? as usize);
        }
        if dims != tensor.shape() {
            return Err(bad(format!(
                "tensor {name} has shape {dims:?}, model needs {:?}",
                tensor.shape()
            )));
        }
        for v in tensor.data_mut() {
            let mut buf = [0u8; 4];
            read_exact(&mut r, &mut buf, path)?;
            *v = f32::from_le_bytes(buf) as f64;
        }
    }
    let mut trailing = [0u8; 1];
    if r.read_exact(&mut trailing).is_ok() {
        return Err(bad("trailing bytes after final tensor".into()));
    }
    Ok(params)
}

fn read_exact(r: &mut impl Read, buf: &mut [u8], path: &Path) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::format(path, "truncated checkpoint")
        } else {
            Error::io(path, e)
        }
    })
}

fn read_u32(r: &mut impl Read, path: &Path) -> Result<u32> {
    let mut buf = [0u8; 4];
    read_exact(r, &mut buf, path)?;
    Ok(u32::from_le_bytes(buf))
}
