//! Plain-text and binary serialization of [`GridFunction2D`].
//!
//! CSV layout (one record per line):
//!
//! ```text
//! # vparab grid function v1
//! nx,ny,extent_x,extent_y,tag
//! <nx>,<ny>,<X>,<Y>,<spatial|y-spectral>
//! re,im
//! <re>,<im>          (nx*ny lines, row-major: x index outer, y index inner)
//! ```
//!
//! Floats are written with 17 significant digits, which round-trips `f64`
//! exactly.
//!
//! Binary layout, all little-endian: the 8-byte magic `VPGF0001`, `nx` and
//! `ny` as `u64`, `X` and `Y` as `f64`, one tag byte (0 spatial, 1
//! y-spectral), then `nx*ny` pairs of `f64` in the same order as the CSV.

use std::io::{BufRead, BufWriter, Read, Write};

use ndarray::Array2;
use num_complex::Complex64;

use super::{AxisTag, Grid2D, GridFunction2D};
use crate::error::{Error, Result};

const CSV_MAGIC: &str = "# vparab grid function v1";
const BIN_MAGIC: &[u8; 8] = b"VPGF0001";

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn tag_from_name(s: &str) -> Result<AxisTag> {
    match s {
        "spatial" => Ok(AxisTag::Spatial),
        "y-spectral" => Ok(AxisTag::YSpectral),
        other => Err(Error::Format(format!("unknown tag `{other}`"))),
    }
}

pub fn write_csv<W: Write>(f: &GridFunction2D, out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    let g = f.grid();
    writeln!(w, "{CSV_MAGIC}")?;
    writeln!(w, "nx,ny,extent_x,extent_y,tag")?;
    writeln!(
        w,
        "{},{},{},{},{}",
        g.nx(),
        g.ny(),
        fmt_f64(g.extent_x()),
        fmt_f64(g.extent_y()),
        f.tag().name()
    )?;
    writeln!(w, "re,im")?;
    for z in f.values().iter() {
        writeln!(w, "{},{}", fmt_f64(z.re), fmt_f64(z.im))?;
    }
    w.flush()?;
    Ok(())
}

fn parse<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Format(format!("cannot parse {what} from `{s}`")))
}

pub fn read_csv<R: BufRead>(input: R) -> Result<GridFunction2D> {
    let mut lines = input.lines();
    let mut next = |what: &str| -> Result<String> {
        lines
            .next()
            .ok_or_else(|| Error::Format(format!("unexpected end of input, expected {what}")))?
            .map_err(Error::from)
    };
    if next("magic")?.trim() != CSV_MAGIC {
        return Err(Error::Format("missing grid function header".into()));
    }
    if next("header")?.trim() != "nx,ny,extent_x,extent_y,tag" {
        return Err(Error::Format("malformed descriptor header".into()));
    }
    let desc = next("descriptor")?;
    let fields: Vec<&str> = desc.split(',').collect();
    if fields.len() != 5 {
        return Err(Error::Format(format!("descriptor has {} fields", fields.len())));
    }
    let grid = Grid2D::new(
        parse(fields[2], "extent_x")?,
        parse(fields[3], "extent_y")?,
        parse(fields[0], "nx")?,
        parse(fields[1], "ny")?,
    )?;
    let tag = tag_from_name(fields[4].trim())?;
    if next("value header")?.trim() != "re,im" {
        return Err(Error::Format("malformed value header".into()));
    }
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        let line = next("value")?;
        let (re, im) = line
            .split_once(',')
            .ok_or_else(|| Error::Format(format!("malformed value `{line}`")))?;
        values.push(Complex64::new(parse(re, "re")?, parse(im, "im")?));
    }
    let values = Array2::from_shape_vec((grid.nx(), grid.ny()), values)
        .map_err(|e| Error::Format(e.to_string()))?;
    GridFunction2D::new(grid, values, tag)
}

pub fn write_binary<W: Write>(f: &GridFunction2D, out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    let g = f.grid();
    w.write_all(BIN_MAGIC)?;
    w.write_all(&(g.nx() as u64).to_le_bytes())?;
    w.write_all(&(g.ny() as u64).to_le_bytes())?;
    w.write_all(&g.extent_x().to_le_bytes())?;
    w.write_all(&g.extent_y().to_le_bytes())?;
    w.write_all(&[match f.tag() {
        AxisTag::Spatial => 0u8,
        AxisTag::YSpectral => 1u8,
    }])?;
    for z in f.values().iter() {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_binary<R: Read>(mut input: R) -> Result<GridFunction2D> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != BIN_MAGIC {
        return Err(Error::Format("bad binary magic".into()));
    }
    let mut b8 = [0u8; 8];
    let mut read_u64 = |input: &mut R| -> Result<u64> {
        input.read_exact(&mut b8)?;
        Ok(u64::from_le_bytes(b8))
    };
    let nx = read_u64(&mut input)? as usize;
    let ny = read_u64(&mut input)? as usize;
    let ex = f64::from_bits(read_u64(&mut input)?);
    let ey = f64::from_bits(read_u64(&mut input)?);
    let grid = Grid2D::new(ex, ey, nx, ny)?;
    let mut tag = [0u8; 1];
    input.read_exact(&mut tag)?;
    let tag = match tag[0] {
        0 => AxisTag::Spatial,
        1 => AxisTag::YSpectral,
        t => return Err(Error::Format(format!("bad tag byte {t}"))),
    };
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        let re = f64::from_bits(read_u64(&mut input)?);
        let im = f64::from_bits(read_u64(&mut input)?);
        values.push(Complex64::new(re, im));
    }
    let values = Array2::from_shape_vec((nx, ny), values).map_err(|e| Error::Format(e.to_string()))?;
    GridFunction2D::new(grid, values, tag)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_rejects_truncated_input() {
        let text = format!("{CSV_MAGIC}\nnx,ny,extent_x,extent_y,tag\n8,8,1,1,spatial\nre,im\n0,0\n");
        assert!(read_csv(text.as_bytes()).is_err());
    }

    #[test]
    fn csv_rejects_odd_grid() {
        let text = format!("{CSV_MAGIC}\nnx,ny,extent_x,extent_y,tag\n7,8,1,1,spatial\nre,im\n");
        assert!(matches!(read_csv(text.as_bytes()), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn binary_rejects_bad_magic() {
        assert!(read_binary(&b"NOTAGRID........"[..]).is_err());
    }
}
