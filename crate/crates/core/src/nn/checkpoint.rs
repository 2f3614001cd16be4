//! Versioned binary checkpoint container.
//!
//! Layout (little endian):
//!
//! ```text
//! magic    b"MACACKPT"
//! version  u32
//! meta_len u32, meta JSON (UTF-8)
//! count    u32
//! count x { name_len u32, name, ndim u32, dims u64 x ndim, values f32 x prod(dims) }
//! ```

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::net::{Architecture, RecurrentNet};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"MACACKPT";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetEntry {
    pub name: String,
    pub arch: Architecture,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub config_hash: String,
    pub nets: Vec<NetEntry>,
    /// Free-form run information (algorithm, episode index, ...).
    #[serde(default)]
    pub extra: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamedArray {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub meta: CheckpointMeta,
    pub arrays: Vec<NamedArray>,
}

impl Checkpoint {
    pub fn new(config_hash: impl Into<String>) -> Self {
        Checkpoint {
            meta: CheckpointMeta {
                config_hash: config_hash.into(),
                nets: Vec::new(),
                extra: serde_json::Value::Null,
            },
            arrays: Vec::new(),
        }
    }

    /// Stores every parameter array of `net` as `"{name}/{param}"`.
    pub fn push_net(&mut self, name: &str, net: &RecurrentNet<f32>) {
        self.meta.nets.push(NetEntry {
            name: name.to_string(),
            arch: net.architecture().clone(),
        });
        for e in &net.layout().entries {
            self.arrays.push(NamedArray {
                name: format!("{name}/{}", e.name),
                shape: e.shape.clone(),
                values: net.params()[e.offset..e.offset + e.len].to_vec(),
            });
        }
    }

    pub fn net(&self, name: &str) -> Result<RecurrentNet<f32>> {
        let entry = self
            .meta
            .nets
            .iter()
            .find(|n| n.name == name)
            .ok_or_else(|| Error::Checkpoint(format!("no network named `{name}`")))?;
        let layout = entry.arch.layout();
        let mut params = Vec::with_capacity(layout.total());
        for e in &layout.entries {
            let key = format!("{name}/{}", e.name);
            let arr = self
                .arrays
                .iter()
                .find(|a| a.name == key)
                .ok_or_else(|| Error::Checkpoint(format!("missing array `{key}`")))?;
            if arr.shape != e.shape {
                return Err(Error::Checkpoint(format!(
                    "array `{key}` has shape {:?}, architecture expects {:?}",
                    arr.shape, e.shape
                )));
            }
            params.extend_from_slice(&arr.values);
        }
        RecurrentNet::from_params(entry.arch.clone(), params)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        let meta = serde_json::to_vec(&self.meta)?;
        out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
        out.extend_from_slice(&meta);
        out.extend_from_slice(&(self.arrays.len() as u32).to_le_bytes());
        for a in &self.arrays {
            let expected: usize = a.shape.iter().product();
            if expected != a.values.len() {
                return Err(Error::Checkpoint(format!(
                    "array `{}` shape {:?} does not match {} values",
                    a.name,
                    a.shape,
                    a.values.len()
                )));
            }
            out.extend_from_slice(&(a.name.len() as u32).to_le_bytes());
            out.extend_from_slice(a.name.as_bytes());
            out.extend_from_slice(&(a.shape.len() as u32).to_le_bytes());
            for &d in &a.shape {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            for v in &a.values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = bytes;
        let mut magic = [0u8; 8];
        read_exact(&mut r, &mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let version = read_u32(&mut r)?;
        if version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let meta_len = read_u32(&mut r)? as usize;
        let mut meta = vec![0u8; meta_len];
        read_exact(&mut r, &mut meta)?;
        let meta: CheckpointMeta = serde_json::from_slice(&meta)?;
        let count = read_u32(&mut r)? as usize;
        let mut arrays = Vec::with_capacity(count);
        for _ in 0..count {
            let name_len = read_u32(&mut r)? as usize;
            let mut name = vec![0u8; name_len];
            read_exact(&mut r, &mut name)?;
            let name = String::from_utf8(name).map_err(|e| Error::Checkpoint(e.to_string()))?;
            let ndim = read_u32(&mut r)? as usize;
            let mut shape = Vec::with_capacity(ndim);
            for _ in 0..ndim {
                let mut b = [0u8; 8];
                read_exact(&mut r, &mut b)?;
                shape.push(u64::from_le_bytes(b) as usize);
            }
            let n: usize = shape.iter().product();
            let mut values = Vec::with_capacity(n);
            for _ in 0..n {
                let mut b = [0u8; 4];
                read_exact(&mut r, &mut b)?;
                values.push(f32::from_le_bytes(b));
            }
            arrays.push(NamedArray {
                name,
                shape,
                values,
            });
        }
        if !r.is_empty() {
            return Err(Error::Checkpoint(format!("{} trailing bytes", r.len())));
        }
        Ok(Checkpoint { meta, arrays })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&bytes).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

fn read_exact(r: &mut &[u8], buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf)
        .map_err(|_| Error::Checkpoint("unexpected end of data".into()))
}

fn read_u32(r: &mut &[u8]) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}
