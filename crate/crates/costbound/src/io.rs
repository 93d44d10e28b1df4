//! Binary dump of solved fields for caching and external inspection.
//!
//! Layout: magic `DOBF`, format version, spec hash, a length-prefixed
//! JSON encoding of the spec, grid sizes, then the node grid, the time
//! grid, row-major values and contact flags. Everything little-endian.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::problem::ProblemSpec;
use crate::solver::{Contact, SolutionField};

const MAGIC: &[u8; 4] = b"DOBF";
const VERSION: u32 = 1;

pub fn write_field<W: Write>(field: &SolutionField, mut w: W) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&field.spec.hash().to_le_bytes())?;
    let spec_json = serde_json::to_vec(&field.spec)?;
    w.write_all(&(spec_json.len() as u64).to_le_bytes())?;
    w.write_all(&spec_json)?;
    w.write_all(&(field.n_space() as u64).to_le_bytes())?;
    w.write_all(&(field.n_slices() as u64).to_le_bytes())?;
    for &x in &field.xs {
        w.write_all(&x.to_le_bytes())?;
    }
    for &t in &field.times {
        w.write_all(&t.to_le_bytes())?;
    }
    for &v in field.raw_values() {
        w.write_all(&v.to_le_bytes())?;
    }
    for &c in field.raw_contact() {
        let byte = match c {
            Contact::Lower => 0u8,
            Contact::Interior => 1,
            Contact::Upper => 2,
        };
        w.write_all(&[byte])?;
    }
    Ok(())
}

fn read_exact<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    Ok(u64::from_le_bytes(read_exact::<R, 8>(r)?))
}

fn read_f64_vec<R: Read>(r: &mut R, len: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push(f64::from_le_bytes(read_exact::<R, 8>(r)?));
    }
    Ok(out)
}

pub fn read_field<R: Read>(mut r: R) -> Result<SolutionField> {
    let magic = read_exact::<R, 4>(&mut r)?;
    if &magic != MAGIC {
        return Err(Error::MalformedDump("bad magic".into()));
    }
    let version = u32::from_le_bytes(read_exact::<R, 4>(&mut r)?);
    if version != VERSION {
        return Err(Error::MalformedDump(format!("unsupported version {version}")));
    }
    let stored_hash = read_u64(&mut r)?;
    let spec_len = read_u64(&mut r)? as usize;
    if spec_len > 1 << 20 {
        return Err(Error::MalformedDump("spec header too large".into()));
    }
    let mut spec_json = vec![0u8; spec_len];
    r.read_exact(&mut spec_json)?;
    let spec: ProblemSpec = serde_json::from_slice(&spec_json)?;
    if spec.hash() != stored_hash {
        return Err(Error::MalformedDump("spec hash mismatch".into()));
    }
    let n_space = read_u64(&mut r)? as usize;
    let n_slices = read_u64(&mut r)? as usize;
    if n_space == 0 || n_slices == 0 || n_space.saturating_mul(n_slices) > 1 << 32 {
        return Err(Error::MalformedDump("implausible grid sizes".into()));
    }
    let xs = read_f64_vec(&mut r, n_space)?;
    let times = read_f64_vec(&mut r, n_slices)?;
    let v = read_f64_vec(&mut r, n_space * n_slices)?;
    let mut contact = Vec::with_capacity(n_space * n_slices);
    for _ in 0..n_space * n_slices {
        let byte = read_exact::<R, 1>(&mut r)?[0];
        contact.push(match byte {
            0 => Contact::Lower,
            1 => Contact::Interior,
            2 => Contact::Upper,
            other => return Err(Error::MalformedDump(format!("bad contact byte {other}"))),
        });
    }
    Ok(SolutionField::from_parts(spec, xs, times, v, contact))
}
