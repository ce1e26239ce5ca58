//! Binary snapshot format.
//!
//! One ASCII header line
//! `CURLHEAT1 nx ny nz ncomp x0 x1 y0 y1 z0 z1\n`
//! followed by `ncomp * nx * ny * nz` little-endian `f64` values, component
//! major, then `z`, `y`, `x` fastest (the in-memory node order).

use std::io::{BufRead, BufReader, Read, Write};

use super::GridSpec;
use crate::error::{Error, Result};

const MAGIC: &str = "CURLHEAT1";

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub grid: GridSpec,
    pub components: Vec<Vec<f64>>,
}

pub fn write_snapshot(mut w: impl Write, grid: &GridSpec, components: &[&[f64]]) -> Result<()> {
    let [nx, ny, nz] = grid.counts();
    let e = grid.extents();
    writeln!(
        w,
        "{MAGIC} {nx} {ny} {nz} {} {} {} {} {} {} {}",
        components.len(),
        e[0][0],
        e[0][1],
        e[1][0],
        e[1][1],
        e[2][0],
        e[2][1]
    )?;
    let mut buf = Vec::with_capacity(grid.len() * 8);
    for comp in components {
        if comp.len() != grid.len() {
            return Err(Error::GridMismatch(format!("component of length {} for {} nodes", comp.len(), grid.len())));
        }
        buf.clear();
        for v in comp.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot(r: impl Read) -> Result<Snapshot> {
    let mut r = BufReader::new(r);
    let mut header = String::new();
    r.read_line(&mut header)?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 11 || fields[0] != MAGIC {
        return Err(Error::Snapshot(format!("bad header {:?}", header.trim_end())));
    }
    let int = |s: &str| s.parse::<usize>().map_err(|e| Error::Snapshot(format!("{s:?}: {e}")));
    let flt = |s: &str| s.parse::<f64>().map_err(|e| Error::Snapshot(format!("{s:?}: {e}")));
    let counts = [int(fields[1])?, int(fields[2])?, int(fields[3])?];
    let ncomp = int(fields[4])?;
    let extents = [
        [flt(fields[5])?, flt(fields[6])?],
        [flt(fields[7])?, flt(fields[8])?],
        [flt(fields[9])?, flt(fields[10])?],
    ];
    let grid = GridSpec::new(extents, counts)?;
    let mut bytes = vec![0u8; grid.len() * 8];
    let mut components = Vec::with_capacity(ncomp);
    for c in 0..ncomp {
        r.read_exact(&mut bytes).map_err(|e| Error::Snapshot(format!("component {c}: {e}")))?;
        components.push(bytes.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect());
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Snapshot("trailing bytes after last component".into()));
    }
    Ok(Snapshot { grid, components })
}
