//! Flat binary and CSV serialization of grid fields.
//!
//! Binary layout, little endian: magic `SLGF`, `u32` format version, `u32` n,
//! `f64` R, `f64` h, n × `f64` center, `u64` interior count, `u64` boundary
//! count, then one `f64` per node in node order (interior first).

use std::io::{Read, Write};
use std::sync::Arc;

use super::domain::{build_ball_domain, BallDomain};
use super::field::GridField;
use crate::error::{LabError, Result};

const MAGIC: &[u8; 4] = b"SLGF";
const VERSION: u32 = 1;

pub fn write_binary<W: Write>(field: &GridField, mut w: W) -> Result<()> {
    let d = field.domain();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(d.dim() as u32).to_le_bytes())?;
    w.write_all(&d.radius().to_le_bytes())?;
    w.write_all(&d.spacing().to_le_bytes())?;
    for c in d.center() {
        w.write_all(&c.to_le_bytes())?;
    }
    w.write_all(&(d.interior_count() as u64).to_le_bytes())?;
    w.write_all(&(d.boundary_count() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(field.values().len() * 8);
    for v in field.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Reads a field, rebuilding its domain from the header.
pub fn read_binary<R: Read>(r: R) -> Result<GridField> {
    read_binary_with(r, None)
}

/// Reads a field whose header must describe `domain`; the domain is reused.
pub fn read_binary_on<R: Read>(r: R, domain: &Arc<BallDomain>) -> Result<GridField> {
    read_binary_with(r, Some(domain))
}

fn read_binary_with<R: Read>(mut r: R, known: Option<&Arc<BallDomain>>) -> Result<GridField> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(LabError::Parse("not a grid field file".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(LabError::Parse(format!("unsupported field format version {version}")));
    }
    let n = read_u32(&mut r)? as usize;
    if !(2..=5).contains(&n) {
        return Err(LabError::DimensionOutOfRange(n));
    }
    let radius = read_f64(&mut r)?;
    let spacing = read_f64(&mut r)?;
    let center = (0..n).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?;
    let ni = read_u64(&mut r)? as usize;
    let nb = read_u64(&mut r)? as usize;
    let domain = match known {
        Some(d) => {
            if d.dim() != n || d.radius() != radius || d.spacing() != spacing || d.center() != center {
                return Err(LabError::DomainMismatch);
            }
            d.clone()
        }
        None => build_ball_domain(n, &center, radius, spacing)?,
    };
    if domain.interior_count() != ni || domain.boundary_count() != nb {
        return Err(LabError::Parse("node counts do not match the rebuilt domain".into()));
    }
    let mut bytes = vec![0u8; (ni + nb) * 8];
    r.read_exact(&mut bytes)?;
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    GridField::from_values(&domain, values)
}

/// CSV with columns `x1..xn, value, kind`.
pub fn write_csv<W: Write>(field: &GridField, w: W) -> Result<()> {
    let d = field.domain();
    let mut w = std::io::BufWriter::new(w);
    let header: Vec<String> = (1..=d.dim()).map(|k| format!("x{k}")).collect();
    writeln!(w, "{},value,kind", header.join(","))?;
    let mut x = vec![0.0; d.dim()];
    for (i, v) in field.values().iter().enumerate() {
        d.coord_into(i, &mut x);
        let coords: Vec<String> = x.iter().map(|c| format!("{c}")).collect();
        let kind = if d.is_interior(i) { "interior" } else { "boundary" };
        writeln!(w, "{},{v},{kind}", coords.join(","))?;
    }
    w.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}
