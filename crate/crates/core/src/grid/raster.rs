//! Raster dump format: one ASCII header line followed by one byte (0/1) per cell.
//!
//! ```text
//! LDLAB1 n=3 shape=64,64,64 h=0.015625 origin=-0.5,-0.5,-0.5\n
//! <shape product bytes, axis 0 fastest>
//! ```

use std::io::{BufRead, Write};

use super::GridSet;
use crate::error::{Error, Result};

pub const RASTER_MAGIC: &str = "LDLAB1";

pub fn write_raster<W: Write>(s: &GridSet, mut w: W) -> Result<()> {
    let n = s.dim();
    let join = |v: &[String]| v.join(",");
    let shape: Vec<String> = s.shape()[..n].iter().map(|v| v.to_string()).collect();
    let origin: Vec<String> = s.origin()[..n].iter().map(|v| format!("{v:?}")).collect();
    writeln!(
        w,
        "{RASTER_MAGIC} n={n} shape={} h={:?} origin={}",
        join(&shape),
        s.h(),
        join(&origin)
    )?;
    w.write_all(s.cells())?;
    Ok(())
}

fn field<'a>(tok: Option<&'a str>, key: &str) -> Result<&'a str> {
    tok.and_then(|t| t.strip_prefix(key))
        .and_then(|t| t.strip_prefix('='))
        .ok_or_else(|| Error::Format(format!("missing `{key}=`")))
}

fn parse_list<T: std::str::FromStr>(s: &str, key: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|v| v.parse::<T>().map_err(|_| Error::Format(format!("bad value `{v}` for {key}"))))
        .collect()
}

pub fn read_raster<R: BufRead>(mut r: R) -> Result<GridSet> {
    let mut header = String::new();
    r.read_line(&mut header)?;
    let line = header
        .strip_suffix('\n')
        .ok_or_else(|| Error::Format("header line not terminated".into()))?;
    let mut toks = line.split(' ');
    if toks.next() != Some(RASTER_MAGIC) {
        return Err(Error::Format("bad magic".into()));
    }
    let n: usize = field(toks.next(), "n")?
        .parse()
        .map_err(|_| Error::Format("bad n".into()))?;
    let shape: Vec<usize> = parse_list(field(toks.next(), "shape")?, "shape")?;
    let h: f64 = field(toks.next(), "h")?
        .parse()
        .map_err(|_| Error::Format("bad h".into()))?;
    let origin: Vec<f64> = parse_list(field(toks.next(), "origin")?, "origin")?;
    if toks.next().is_some() {
        return Err(Error::Format("trailing header fields".into()));
    }
    if !(n == 2 || n == 3) || shape.len() != n || origin.len() != n {
        return Err(Error::Format("dimension and list lengths disagree".into()));
    }
    let mut sh = [1usize; 3];
    let mut org = [0.0; 3];
    sh[..n].copy_from_slice(&shape);
    org[..n].copy_from_slice(&origin);
    let len: usize = sh.iter().product();
    let mut cells = Vec::with_capacity(len);
    r.read_to_end(&mut cells)?;
    if cells.len() != len {
        return Err(Error::Format(format!(
            "expected {len} cell bytes, found {}",
            cells.len()
        )));
    }
    GridSet::from_cells(n, sh, h, org, cells)
}
