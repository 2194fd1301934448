use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use num_complex::Complex64;

use super::GridFunction;
use crate::aniso::GridSpec;
use crate::error::{Error, Result};
use crate::rbound::BanachSpaceSpec;

fn io_err(e: std::io::Error) -> Error {
    Error::Io(e.to_string())
}

/// Little-endian layout: `u64 d, u64 M, f64 B, u64 m`, then `(re, im)` pairs node-major.
pub fn write_binary_to<W: Write>(u: &GridFunction, w: &mut W) -> Result<()> {
    w.write_u64::<LittleEndian>(u.grid.dim as u64)
        .map_err(io_err)?;
    w.write_u64::<LittleEndian>(u.grid.points as u64)
        .map_err(io_err)?;
    w.write_f64::<LittleEndian>(u.grid.half_width)
        .map_err(io_err)?;
    w.write_u64::<LittleEndian>(u.m() as u64).map_err(io_err)?;
    for z in u.values() {
        w.write_f64::<LittleEndian>(z.re).map_err(io_err)?;
        w.write_f64::<LittleEndian>(z.im).map_err(io_err)?;
    }
    Ok(())
}

pub fn read_binary_from<R: Read>(r: &mut R, fiber: BanachSpaceSpec) -> Result<GridFunction> {
    let d = r.read_u64::<LittleEndian>().map_err(io_err)? as usize;
    let pts = r.read_u64::<LittleEndian>().map_err(io_err)? as usize;
    let b = r.read_f64::<LittleEndian>().map_err(io_err)?;
    let m = r.read_u64::<LittleEndian>().map_err(io_err)? as usize;
    if m != fiber.dim {
        return Err(Error::Format(format!(
            "file has fiber dimension {m}, expected {}",
            fiber.dim
        )));
    }
    let grid = GridSpec::new(d, b, pts)?;
    let n = grid
        .node_count()
        .checked_mul(m)
        .ok_or_else(|| Error::Format("header sizes overflow".into()))?;
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        let re = r.read_f64::<LittleEndian>().map_err(io_err)?;
        let im = r.read_f64::<LittleEndian>().map_err(io_err)?;
        values.push(Complex64::new(re, im));
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest).map_err(io_err)? != 0 {
        return Err(Error::Format("trailing bytes after grid values".into()));
    }
    GridFunction::new(grid, fiber, values)
}

pub fn write_binary(u: &GridFunction, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    write_binary_to(u, &mut w)?;
    w.flush().map_err(io_err)
}

pub fn read_binary(path: &Path, fiber: BanachSpaceSpec) -> Result<GridFunction> {
    read_binary_from(
        &mut BufReader::new(File::open(path).map_err(io_err)?),
        fiber,
    )
}

/// One row per node and component: `node, x_0..x_{d-1}, component, re, im`.
pub fn write_csv_to<W: Write>(u: &GridFunction, w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(w);
    let d = u.grid.dim;
    let mut header: Vec<String> = vec!["node".into()];
    header.extend((0..d).map(|i| format!("x_{i}")));
    header.extend(["component".into(), "re".into(), "im".into()]);
    out.write_record(&header)
        .map_err(|e| Error::Io(e.to_string()))?;
    for j in 0..u.grid.node_count() {
        let x = u.grid.node(j);
        for (c, z) in u.node_value(j).iter().enumerate() {
            let mut row: Vec<String> = vec![j.to_string()];
            row.extend(x.iter().map(|v| format!("{v:e}")));
            row.extend([c.to_string(), format!("{:e}", z.re), format!("{:e}", z.im)]);
            out.write_record(&row)
                .map_err(|e| Error::Io(e.to_string()))?;
        }
    }
    out.flush().map_err(io_err)
}

/// Inverse of [`write_csv_to`]; the grid is recovered from the node coordinates.
pub fn read_csv_from<R: Read>(r: R, fiber: BanachSpaceSpec) -> Result<GridFunction> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr
        .headers()
        .map_err(|e| Error::Format(e.to_string()))?
        .clone();
    if header.len() < 5 || &header[0] != "node" {
        return Err(Error::Format("unexpected CSV header".into()));
    }
    let d = header.len() - 4;
    let m = fiber.dim;
    let mut rows: Vec<(usize, Vec<f64>, usize, Complex64)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Format(e.to_string()))?;
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Format(format!("field {i}: {e}")))
        };
        let node = rec[0]
            .parse::<usize>()
            .map_err(|e| Error::Format(e.to_string()))?;
        let x = (1..=d).map(num).collect::<Result<Vec<f64>>>()?;
        let comp = rec[d + 1]
            .parse::<usize>()
            .map_err(|e| Error::Format(e.to_string()))?;
        rows.push((node, x, comp, Complex64::new(num(d + 2)?, num(d + 3)?)));
    }
    if rows.is_empty() || !rows.len().is_multiple_of(m) {
        return Err(Error::Format(format!(
            "{} rows do not fill a grid with fiber {m}",
            rows.len()
        )));
    }
    let nodes = rows.len() / m;
    let pts = (nodes as f64).powf(1.0 / d as f64).round() as usize;
    if pts.pow(d as u32) != nodes {
        return Err(Error::Format(format!(
            "{nodes} nodes are not a {d}-dimensional grid"
        )));
    }
    let b = -rows
        .iter()
        .find(|r| r.0 == 0)
        .ok_or_else(|| Error::Format("node 0 missing".into()))?
        .1[0];
    let grid = GridSpec::new(d, b, pts)?;
    let mut values = vec![Complex64::new(f64::NAN, 0.0); rows.len()];
    for (node, _, comp, z) in rows {
        if node >= nodes || comp >= m {
            return Err(Error::Format(format!(
                "row for node {node} component {comp} out of range"
            )));
        }
        values[node * m + comp] = z;
    }
    if values.iter().any(|z| z.re.is_nan()) {
        return Err(Error::Format("missing grid values".into()));
    }
    GridFunction::new(grid, fiber, values)
}

pub fn write_csv(u: &GridFunction, path: &Path) -> Result<()> {
    write_csv_to(u, BufWriter::new(File::create(path).map_err(io_err)?))
}

pub fn read_csv(path: &Path, fiber: BanachSpaceSpec) -> Result<GridFunction> {
    read_csv_from(BufReader::new(File::open(path).map_err(io_err)?), fiber)
}
