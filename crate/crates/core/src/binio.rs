//! Little-endian framing helpers for the checkpoint and replay snapshot
//! formats.

use std::io::{Read, Write};

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};

pub(crate) fn write_header(w: &mut impl Write, magic: &[u8; 8], version: u32) -> Result<()> {
    w.write_all(magic)?;
    w.write_u32::<LE>(version)?;
    Ok(())
}

pub(crate) fn read_header(r: &mut impl Read, magic: &[u8; 8], version: u32) -> Result<()> {
    let mut found = [0u8; 8];
    r.read_exact(&mut found)?;
    if &found != magic {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&found),
            String::from_utf8_lossy(magic)
        )));
    }
    let v = r.read_u32::<LE>()?;
    if v != version {
        return Err(Error::Format(format!(
            "unsupported format version {v}, expected {version}"
        )));
    }
    Ok(())
}

pub(crate) fn write_f64s(w: &mut impl Write, xs: &[f64]) -> Result<()> {
    w.write_u64::<LE>(xs.len() as u64)?;
    for &x in xs {
        w.write_f64::<LE>(x)?;
    }
    Ok(())
}

pub(crate) fn read_f64s(r: &mut impl Read) -> Result<Vec<f64>> {
    let n = r.read_u64::<LE>()? as usize;
    if n > 1 << 32 {
        return Err(Error::Format(format!("implausible array length {n}")));
    }
    let mut out = vec![0.0; n];
    r.read_f64_into::<LE>(&mut out)?;
    Ok(out)
}

pub(crate) fn write_usizes(w: &mut impl Write, xs: &[usize]) -> Result<()> {
    w.write_u64::<LE>(xs.len() as u64)?;
    for &x in xs {
        w.write_u64::<LE>(x as u64)?;
    }
    Ok(())
}

pub(crate) fn read_usizes(r: &mut impl Read) -> Result<Vec<usize>> {
    let n = r.read_u64::<LE>()? as usize;
    if n > 1 << 16 {
        return Err(Error::Format(format!("implausible array length {n}")));
    }
    (0..n).map(|_| Ok(r.read_u64::<LE>()? as usize)).collect()
}
