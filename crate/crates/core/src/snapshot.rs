//! Binary field snapshot format.
//!
//! Layout (little endian):
//!
//! ```text
//! offset  0  magic   b"DRC2"
//! offset  4  version u32
//! offset  8  n       u32
//! offset 12  reserved u32 (zero)
//! offset 16  L       f64
//! offset 24  t       f64
//! offset 32  n*n*2 complex f64, row major, component fastest:
//!            cell (i,j) -> comp0.re, comp0.im, comp1.re, comp1.im
//! ```
//!
//! Round trips are bit exact.

use crate::error::{Error, Result};
use crate::field::SpinorField;
use crate::grid::Grid2D;
use std::io::{Read, Write};
use std::path::Path;

pub const MAGIC: &[u8; 4] = b"DRC2";
pub const VERSION: u32 = 1;

pub fn write_snapshot<W: Write>(mut w: W, field: &SpinorField<f64>) -> Result<()> {
    let n = field.grid.n();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(n as u32).to_le_bytes())?;
    w.write_all(&0u32.to_le_bytes())?;
    w.write_all(&field.grid.length().to_le_bytes())?;
    w.write_all(&field.time.to_le_bytes())?;
    let mut buf = Vec::with_capacity(n * 32);
    for i in 0..n {
        buf.clear();
        for j in 0..n {
            for k in 0..2 {
                let v = field.comps[k][[i, j]];
                buf.extend_from_slice(&v.re.to_le_bytes());
                buf.extend_from_slice(&v.im.to_le_bytes());
            }
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<SpinorField<f64>> {
    let mut header = [0u8; 32];
    r.read_exact(&mut header)?;
    if &header[0..4] != MAGIC {
        return Err(Error::SnapshotFormat("bad magic".into()));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::SnapshotFormat(format!(
            "unsupported version {version}"
        )));
    }
    let n = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let length = f64::from_le_bytes(header[16..24].try_into().unwrap());
    let time = f64::from_le_bytes(header[24..32].try_into().unwrap());
    let grid = Grid2D::new(n, length)
        .map_err(|e| Error::SnapshotFormat(format!("invalid grid in header: {e}")))?;
    let mut field = SpinorField::zeros(&grid, time);
    let mut buf = vec![0u8; n * 32];
    for i in 0..n {
        r.read_exact(&mut buf)?;
        for j in 0..n {
            let base = j * 32;
            for k in 0..2 {
                let off = base + k * 16;
                let re = f64::from_le_bytes(buf[off..off + 8].try_into().unwrap());
                let im = f64::from_le_bytes(buf[off + 8..off + 16].try_into().unwrap());
                field.comps[k][[i, j]] = num_complex::Complex64::new(re, im);
            }
        }
    }
    Ok(field)
}

pub fn save_snapshot(path: &Path, field: &SpinorField<f64>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_snapshot(&mut w, field)?;
    w.flush()?;
    Ok(())
}

pub fn load_snapshot(path: &Path) -> Result<SpinorField<f64>> {
    let file = std::fs::File::open(path)?;
    read_snapshot(std::io::BufReader::new(file))
}
