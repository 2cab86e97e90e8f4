//! The `GSQ1` binary array format and a JSON export for small arrays.
//!
//! Layout, all little-endian:
//!
//! ```text
//! bytes 0..8   magic "GSQARR01"
//! u32          d (number of axes)
//! u32 * d      points per axis
//! f64 * d      half-width per axis
//! (f64, f64)*  interleaved (re, im) values, row-major, prod(n) of them
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde_json::json;

use crate::error::{Error, Result};
use crate::grid::{Axis, Grid, SampledFunction};

pub const MAGIC: &[u8; 8] = b"GSQARR01";

/// Cap on axis count so a corrupt header cannot drive allocations.
const MAX_AXES: u32 = 8;

pub fn write_to(w: &mut impl Write, f: &SampledFunction) -> Result<()> {
    w.write_all(MAGIC)?;
    let d = f.grid().dims() as u32;
    w.write_all(&d.to_le_bytes())?;
    for ax in f.grid().axes() {
        w.write_all(&(ax.n as u32).to_le_bytes())?;
    }
    for ax in f.grid().axes() {
        w.write_all(&ax.half_width.to_le_bytes())?;
    }
    for v in f.values() {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_from(r: &mut impl Read) -> Result<SampledFunction> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic, not a GSQ1 file".into()));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let d = u32::from_le_bytes(b4);
    if d == 0 || d > MAX_AXES {
        return Err(Error::Format(format!("unreasonable axis count {d}")));
    }
    let mut ns = Vec::with_capacity(d as usize);
    for _ in 0..d {
        r.read_exact(&mut b4)?;
        ns.push(u32::from_le_bytes(b4) as usize);
    }
    let mut b8 = [0u8; 8];
    let mut axes = Vec::with_capacity(d as usize);
    for i in 0..d as usize {
        r.read_exact(&mut b8)?;
        let half_width = f64::from_le_bytes(b8);
        axes.push(Axis::new(ns[i], half_width).map_err(|e| Error::Format(e.to_string()))?);
    }
    let grid = Grid::from_axes(axes)?;
    let count = grid.len();
    if count > (1usize << 31) {
        return Err(Error::Format(format!("array of {count} values is too large")));
    }
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        r.read_exact(&mut b8)?;
        let re = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let im = f64::from_le_bytes(b8);
        values.push(Complex64::new(re, im));
    }
    SampledFunction::new(grid, values, "")
}

pub fn write_file(path: impl AsRef<Path>, f: &SampledFunction) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_to(&mut w, f)?;
    w.flush()?;
    Ok(())
}

pub fn read_file(path: impl AsRef<Path>) -> Result<SampledFunction> {
    let mut r = BufReader::new(File::open(path)?);
    read_from(&mut r)
}

/// JSON export for small arrays (values as `[re, im]` pairs).
pub fn to_json(f: &SampledFunction) -> Result<serde_json::Value> {
    const JSON_CAP: usize = 1 << 16;
    if f.grid().len() > JSON_CAP {
        return Err(Error::Format(format!(
            "array of {} values exceeds JSON export cap {JSON_CAP}",
            f.grid().len()
        )));
    }
    Ok(json!({
        "format": "GSQ1-json",
        "d": f.grid().dims(),
        "n": f.grid().shape(),
        "half_width": f.grid().axes().iter().map(|a| a.half_width).collect::<Vec<_>>(),
        "label": f.label(),
        "values": f.values().iter().map(|v| vec![v.re, v.im]).collect::<Vec<_>>(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    #[test]
    fn round_trip_preserves_bits() {
        let grid = Grid::from_axes(vec![
            Axis::new(8, 3.0).unwrap(),
            Axis::new(4, 7.5).unwrap(),
        ])
        .unwrap();
        let f = SampledFunction::from_fn(grid, "t", |x| {
            Complex64::new(x[0] * 0.25 + 1.0, -x[1] * 0.5)
        })
        .unwrap();
        let mut buf = Vec::new();
        write_to(&mut buf, &f).unwrap();
        let g = read_from(&mut Cursor::new(&buf)).unwrap();
        assert!(g.grid().approx_eq(f.grid()));
        assert_eq!(g.values(), f.values());
        // header size: 8 magic + 4 d + 2*4 n + 2*8 L, then 16 per value
        assert_eq!(buf.len(), 8 + 4 + 8 + 16 + 16 * 32);
    }

    #[test]
    fn rejects_garbage() {
        let mut buf = b"NOTGSQ00rest".to_vec();
        buf.resize(64, 0);
        assert!(matches!(
            read_from(&mut Cursor::new(&buf)),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn json_export_shape() {
        let grid = Grid::new_uniform(1, 4, 1.0).unwrap();
        let f = SampledFunction::zeros(grid, "z");
        let v = to_json(&f).unwrap();
        assert_eq!(v["d"], 1);
        assert_eq!(v["values"].as_array().unwrap().len(), 4);
    }
}
