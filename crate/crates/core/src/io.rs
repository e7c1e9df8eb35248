//! Snapshot, series and heat-map files.
//!
//! Snapshot layout: one ASCII header line `WPFP1 M N a b c d t\n`, then `M·N`
//! little-endian `f64` values, x-major (row `m` holds every ξ node at `x_m`).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Result, WpfpError};
use crate::grid::{build_grid, WignerField};
use crate::observables::ObservableSeries;

const MAGIC: &str = "WPFP1";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> WpfpError + '_ {
    move |source| WpfpError::Io { path: path.to_path_buf(), source }
}

fn format_err<T>(path: &Path, detail: impl Into<String>) -> Result<T> {
    Err(WpfpError::Format { path: path.to_path_buf(), detail: detail.into() })
}

/// Serializes a snapshot into any writer.
pub fn encode_snapshot(w: &WignerField, out: &mut impl Write) -> std::io::Result<()> {
    let g = &w.grid;
    writeln!(out, "{MAGIC} {} {} {} {} {} {} {}", g.nx, g.nxi, g.a, g.b, g.c, g.d, w.time)?;
    let mut bytes = Vec::with_capacity(8 * g.nx * g.nxi);
    for v in w.values.iter() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&bytes)
}

pub fn write_snapshot(path: &Path, w: &WignerField) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    encode_snapshot(w, &mut out).and_then(|_| out.flush()).map_err(io_err(path))
}

pub fn read_snapshot(path: &Path) -> Result<WignerField> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut input = BufReader::new(file);
    let mut header = String::new();
    input.read_line(&mut header).map_err(io_err(path))?;
    let fields: Vec<&str> = header.trim_end_matches('\n').split(' ').collect();
    if fields.len() != 8 || fields[0] != MAGIC {
        return format_err(path, format!("bad snapshot header '{}'", header.trim_end()));
    }
    let int = |s: &str| {
        s.parse::<usize>().map_err(|e| WpfpError::Format { path: path.to_path_buf(), detail: format!("'{s}': {e}") })
    };
    let real = |s: &str| {
        s.parse::<f64>().map_err(|e| WpfpError::Format { path: path.to_path_buf(), detail: format!("'{s}': {e}") })
    };
    let (nx, nxi) = (int(fields[1])?, int(fields[2])?);
    let grid = build_grid(real(fields[3])?, real(fields[4])?, real(fields[5])?, real(fields[6])?, nx, nxi)?;
    let time = real(fields[7])?;
    let mut payload = Vec::new();
    input.read_to_end(&mut payload).map_err(io_err(path))?;
    if payload.len() != 8 * nx * nxi {
        return format_err(path, format!("expected {} payload bytes, found {}", 8 * nx * nxi, payload.len()));
    }
    let values: Vec<f64> =
        payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
    let values = ndarray::Array2::from_shape_vec((nx, nxi), values).expect("length checked");
    WignerField::from_values(grid, values, time)
}

/// `t,N,J,E` rows at 17 significant digits.
pub fn encode_series(series: &ObservableSeries, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "t,N,J,E")?;
    for r in series.records() {
        let m = r.moments;
        writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e}", r.t, m.n, m.j, m.e)?;
    }
    Ok(())
}

pub fn write_series(path: &Path, series: &ObservableSeries) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    encode_series(series, &mut out).and_then(|_| out.flush()).map_err(io_err(path))
}

/// `(x, ξ, W)` triples, one per line, for external plotting.
pub fn write_heatmap_csv(path: &Path, w: &WignerField) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    let g = &w.grid;
    let mut body = || -> std::io::Result<()> {
        writeln!(out, "x,xi,W")?;
        for ((m, l), v) in w.values.indexed_iter() {
            writeln!(out, "{:.16e},{:.16e},{:.16e}", g.x[m], g.xi[l], v)?;
        }
        out.flush()
    };
    body().map_err(io_err(path))
}

/// Writes a text file with path context on failure.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(io_err(path))
}

/// Creates a directory (and parents) with path context on failure.
pub fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(io_err(path))
}
