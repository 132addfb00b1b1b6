//! Binary MPS checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! | bytes | content |
//! |---|---|
//! | 8 | magic `ENTCUTMP` |
//! | 4 | format version (`u32`) |
//! | 8 | header length `n` (`u64`) |
//! | n | UTF-8 JSON header: `{"shape": MpsShape, "config": DmrgConfig, "sweeps": [SweepRecord]}` |
//! | rest | site tensors in order, each `d·χl·χr` `f64` values in storage order (row `s·χl + a`, column `b`) |

use std::io::Write;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::mps::{Mps, MpsShape, MpsSite};
use super::{DmrgConfig, SweepRecord};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"ENTCUTMP";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub mps: Mps,
    pub config: DmrgConfig,
    pub sweeps: Vec<SweepRecord>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    shape: MpsShape,
    config: DmrgConfig,
    sweeps: Vec<SweepRecord>,
}

pub fn write_checkpoint<W: Write>(mut w: W, mps: &Mps, config: &DmrgConfig, sweeps: &[SweepRecord]) -> Result<()> {
    let header = Header {
        shape: mps.shape(),
        config: config.clone(),
        sweeps: sweeps.to_vec(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| Error::Format(e.to_string()))?;
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    for site in &mps.sites {
        for x in site.data.iter() {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn take<'a>(bytes: &mut &'a [u8], n: usize) -> Result<&'a [u8]> {
    if bytes.len() < n {
        return Err(Error::Format("checkpoint truncated".into()));
    }
    let (head, tail) = bytes.split_at(n);
    *bytes = tail;
    Ok(head)
}

pub fn read_checkpoint(mut bytes: &[u8]) -> Result<Checkpoint> {
    if take(&mut bytes, 8)? != CHECKPOINT_MAGIC {
        return Err(Error::Format("not an MPS checkpoint".into()));
    }
    let version = u32::from_le_bytes(take(&mut bytes, 4)?.try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let len = u64::from_le_bytes(take(&mut bytes, 8)?.try_into().unwrap());
    let len = usize::try_from(len).map_err(|_| Error::Format("header length overflows".into()))?;
    let header: Header = serde_json::from_slice(take(&mut bytes, len)?).map_err(|e| Error::Format(e.to_string()))?;
    let shape = &header.shape;
    if shape.d == 0 || shape.bonds.is_empty() {
        return Err(Error::Format("empty MPS shape".into()));
    }
    let mut total = 0usize;
    for &(l, r) in &shape.bonds {
        let n = shape
            .d
            .checked_mul(l)
            .and_then(|x| x.checked_mul(r))
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Format("bad bond dimensions".into()))?;
        total = total.checked_add(n).ok_or_else(|| Error::Format("bad bond dimensions".into()))?;
    }
    if total.checked_mul(8) != Some(bytes.len()) {
        return Err(Error::Format(format!("expected {total} tensor entries, found {} bytes", bytes.len())));
    }
    let mut sites = Vec::with_capacity(shape.bonds.len());
    for &(l, r) in &shape.bonds {
        let raw = take(&mut bytes, shape.d * l * r * 8)?;
        let values: Vec<f64> = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::Format("non-finite tensor entry".into()));
        }
        let data = Array2::from_shape_vec((shape.d * l, r), values).map_err(|e| Error::Format(e.to_string()))?;
        sites.push(MpsSite::new(data, l)?);
    }
    let mps = Mps::from_sites(sites, shape.center)?;
    Ok(Checkpoint {
        mps,
        config: header.config,
        sweeps: header.sweeps,
    })
}
