//! Binary container and CSV export for [`MatrixField`].
//!
//! Binary layout (all little endian):
//!
//! | bytes | content                                                  |
//! |-------|----------------------------------------------------------|
//! | 4     | magic `LRMF`                                             |
//! | 4     | format version (u32, currently 1)                        |
//! | 4     | rank r (u32)                                             |
//! | 8     | grid spacing h (f64)                                     |
//! | 8     | grid half width S (f64)                                  |
//! | 16    | window i0, j0, nx, ny (u32 each)                         |
//! | 4     | support flag (u32, 0 or 1)                               |
//! | 16    | support i0, j0, nx, ny (u32 each, zero when absent)      |
//! | ...   | payload: nodes row by row (j outer, i inner), each node a |
//! |       | row-major r×r block of interleaved re/im f64             |

use std::io::{Read, Write};

use num_complex::Complex64;

use super::field::MatrixField;
use crate::error::{Error, Result};
use crate::grid::{ComplexGrid, IndexBox};

const MAGIC: &[u8; 4] = b"LRMF";
const VERSION: u32 = 1;

pub fn write_binary<W: Write>(field: &MatrixField, mut w: W) -> Result<()> {
    let g = field.grid();
    let win = field.window();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(field.rank() as u32).to_le_bytes())?;
    w.write_all(&g.h().to_le_bytes())?;
    w.write_all(&g.half_width().to_le_bytes())?;
    for v in [win.i0, win.j0, win.nx, win.ny] {
        w.write_all(&(v as u32).to_le_bytes())?;
    }
    let sup = field.support();
    w.write_all(&(sup.is_some() as u32).to_le_bytes())?;
    let s = sup.unwrap_or(IndexBox { i0: 0, j0: 0, nx: 0, ny: 0 });
    for v in [s.i0, s.j0, s.nx, s.ny] {
        w.write_all(&(v as u32).to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(field.data().len() * 16);
    for z in field.data() {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<MatrixField> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Io("not a field container (bad magic)".into()));
    }
    let mut u = || -> Result<u32> {
        let mut b = [0u8; 4];
        r.read_exact(&mut b)?;
        Ok(u32::from_le_bytes(b))
    };
    let version = u()?;
    if version != VERSION {
        return Err(Error::Io(format!("unsupported container version {version}")));
    }
    let rank = u()? as usize;
    let mut f = [0u8; 8];
    r.read_exact(&mut f)?;
    let h = f64::from_le_bytes(f);
    r.read_exact(&mut f)?;
    let half = f64::from_le_bytes(f);
    let mut q = [0usize; 4];
    for v in q.iter_mut() {
        let mut b = [0u8; 4];
        r.read_exact(&mut b)?;
        *v = u32::from_le_bytes(b) as usize;
    }
    let window = IndexBox { i0: q[0], j0: q[1], nx: q[2], ny: q[3] };
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    let has_support = u32::from_le_bytes(b) == 1;
    for v in q.iter_mut() {
        r.read_exact(&mut b)?;
        *v = u32::from_le_bytes(b) as usize;
    }
    let support = IndexBox { i0: q[0], j0: q[1], nx: q[2], ny: q[3] };
    let grid = ComplexGrid::new(half, h)?;
    let n = window.len() * rank * rank;
    let mut raw = vec![0u8; n * 16];
    r.read_exact(&mut raw)?;
    let data = raw
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    let field = MatrixField::from_raw(grid, window, rank, data)?;
    Ok(if has_support { field.with_support(support) } else { field })
}

/// One CSV row per node: `x,y,re00,im00,re01,im01,...`.
pub fn write_csv<W: Write>(field: &MatrixField, mut w: W) -> Result<()> {
    let r = field.rank();
    let mut header = String::from("x,y");
    for a in 0..r {
        for b in 0..r {
            header.push_str(&format!(",re{a}{b},im{a}{b}"));
        }
    }
    writeln!(w, "{header}")?;
    let g = field.grid();
    for (i, j) in field.window().nodes() {
        let mut line = format!("{},{}", g.x(i), g.x(j));
        for z in field.block(i, j) {
            line.push_str(&format!(",{:e},{:e}", z.re, z.im));
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn binary_round_trip(seed in 0u64..1000, rank in 1usize..3) {
            let g = ComplexGrid::new(1.0, 0.25).unwrap();
            let w = g.window(-0.5, 0.75, -1.0, 0.25).unwrap();
            let s = seed as f64;
            let f = MatrixField::from_fn(g, w, rank, |z| {
                nalgebra::DMatrix::from_fn(rank, rank, |a, b| c((z.re * s).sin() + a as f64, z.im * b as f64 - s))
            }).with_support(w);
            let mut buf = Vec::new();
            write_binary(&f, &mut buf).unwrap();
            let back = read_binary(buf.as_slice()).unwrap();
            prop_assert_eq!(back, f);
        }
    }

    #[test]
    fn csv_has_one_row_per_node() {
        let g = ComplexGrid::new(1.0, 0.5).unwrap();
        let f = MatrixField::identity(g, g.full(), 2);
        let mut buf = Vec::new();
        write_csv(&f, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 25);
        assert!(text.starts_with("x,y,re00,im00,re01"));
    }

    #[test]
    fn rejects_bad_magic() {
        assert!(read_binary(&b"NOPE...."[..]).is_err());
    }
}
