//! CSV formats for tomograms, phase-space fields, wave functions and
//! density matrices.
//!
//! Floats are written with 17 significant digits in scientific notation so
//! that identical inputs give byte-identical files.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grids::{Grid1D, Grid2D};
use crate::states::{DensityMatrix, PhaseSpaceField, WaveFunction};
use crate::tomography::{DeltaSlice, Ray, TomogramField, TomogramSlice};

/// Fixed-width float formatting used by every writer.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io.to_string()),
        other => Error::Parse(format!("{other:?}")),
    }
}

fn writer<W: Write>(out: W, header: &[&str]) -> Result<csv::Writer<W>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    Ok(w)
}

fn row<W: Write>(w: &mut csv::Writer<W>, values: &[f64]) -> Result<()> {
    w.write_record(values.iter().map(|&v| fmt_f64(v))).map_err(csv_err)
}

fn finish<W: Write>(w: csv::Writer<W>) -> Result<()> {
    w.into_inner().map_err(|e| Error::Io(e.error().to_string()))?.flush().map_err(|e| Error::Io(e.to_string()))
}

/// Reads a numeric CSV, checking the header against `expected`.
fn read_table<R: Read>(input: R, expected: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Parse(format!("expected columns {:?}, found {:?}", expected, header)));
    }
    r.records()
        .map(|rec| {
            let rec = rec.map_err(csv_err)?;
            rec.iter()
                .map(|f| f.parse::<f64>().map_err(|_| Error::Parse(format!("not a number: {f:?}"))))
                .collect()
        })
        .collect()
}

fn header_of<R: Read>(input: &mut std::io::BufReader<R>) -> Result<String> {
    use std::io::BufRead;
    let buf = input.fill_buf().map_err(|e| Error::Io(e.to_string()))?;
    let line = buf.split(|&b| b == b'\n').next().unwrap_or_default();
    Ok(String::from_utf8_lossy(line).trim().to_string())
}

/// Rebuilds a uniform grid from its sample points.
fn grid_from_points(points: &[f64]) -> Result<Grid1D> {
    let (first, last) = match points {
        [a, .., b] => (*a, *b),
        _ => return Err(Error::InvalidCount(points.len())),
    };
    let grid = Grid1D::new(first, last, points.len())?;
    let h = grid.step();
    for (i, &x) in points.iter().enumerate() {
        if (x - grid.point(i)).abs() > 1e-9 * h.max(x.abs()) {
            return Err(Error::Parse(format!("grid is not uniform at index {i}")));
        }
    }
    Ok(grid)
}

/// Writes `mu,nu,x,w`, or `t,mu,nu,x,w` when `timed`.
pub fn write_tomograms<W: Write>(fields: &[TomogramField], timed: bool, out: W) -> Result<()> {
    let header: &[&str] = if timed { &["t", "mu", "nu", "x", "w"] } else { &["mu", "nu", "x", "w"] };
    let mut w = writer(out, header)?;
    for field in fields {
        for s in field.slices() {
            for (x, &v) in s.xgrid().points().zip(s.values()) {
                if timed {
                    row(&mut w, &[field.time(), s.ray.mu, s.ray.nu, x, v])?;
                } else {
                    row(&mut w, &[s.ray.mu, s.ray.nu, x, v])?;
                }
            }
        }
    }
    finish(w)
}

pub fn write_tomogram<W: Write>(field: &TomogramField, out: W) -> Result<()> {
    write_tomograms(std::slice::from_ref(field), false, out)
}

/// Reads `mu,nu,x,w` or `t,mu,nu,x,w`; rows of one slice must be contiguous.
pub fn read_tomograms<R: Read>(input: R) -> Result<Vec<TomogramField>> {
    let mut input = std::io::BufReader::new(input);
    let timed = header_of(&mut input)?.starts_with("t,");
    let rows = if timed {
        read_table(input, &["t", "mu", "nu", "x", "w"])?
    } else {
        read_table(input, &["mu", "nu", "x", "w"])?.into_iter().map(|r| [vec![0.0], r].concat()).collect()
    };
    let mut fields: Vec<(f64, Vec<TomogramSlice>)> = Vec::new();
    let mut i = 0;
    while i < rows.len() {
        let (t, mu, nu) = (rows[i][0], rows[i][1], rows[i][2]);
        let mut j = i;
        while j < rows.len() && rows[j][0] == t && rows[j][1] == mu && rows[j][2] == nu {
            j += 1;
        }
        let xs: Vec<f64> = rows[i..j].iter().map(|r| r[3]).collect();
        let ws: Vec<f64> = rows[i..j].iter().map(|r| r[4]).collect();
        let slice = TomogramSlice::new(Ray::new(mu, nu)?, grid_from_points(&xs)?, ws)?;
        match fields.last_mut() {
            Some((ft, slices)) if *ft == t => slices.push(slice),
            _ => fields.push((t, vec![slice])),
        }
        i = j;
    }
    if fields.is_empty() {
        return Err(Error::Parse("empty tomogram file".into()));
    }
    fields.into_iter().map(|(t, slices)| TomogramField::new(slices, t)).collect()
}

/// Writes `mu,nu,location` for point-state delta slices.
pub fn write_delta_slices<W: Write>(slices: &[DeltaSlice], out: W) -> Result<()> {
    let mut w = writer(out, &["mu", "nu", "location"])?;
    for s in slices {
        row(&mut w, &[s.ray.mu, s.ray.nu, s.location])?;
    }
    finish(w)
}

/// Writes `q,p,f` (or `t,q,p,f` when `timed`) with `q` varying slowest.
pub fn write_phase_fields<W: Write>(fields: &[(f64, &PhaseSpaceField)], timed: bool, out: W) -> Result<()> {
    let header: &[&str] = if timed { &["t", "q", "p", "f"] } else { &["q", "p", "f"] };
    let mut w = writer(out, header)?;
    for &(t, f) in fields {
        let g = f.grid();
        for (i, q) in g.q.points().enumerate() {
            for (j, p) in g.p.points().enumerate() {
                if timed {
                    row(&mut w, &[t, q, p, f.get(i, j)])?;
                } else {
                    row(&mut w, &[q, p, f.get(i, j)])?;
                }
            }
        }
    }
    finish(w)
}

pub fn read_phase_field<R: Read>(input: R) -> Result<PhaseSpaceField> {
    let rows = read_table(input, &["q", "p", "f"])?;
    let np = rows.iter().take_while(|r| r[0] == rows[0][0]).count();
    if np < 2 || rows.len() % np != 0 {
        return Err(Error::Parse("phase field rows do not form a q × p grid".into()));
    }
    let nq = rows.len() / np;
    let qs: Vec<f64> = (0..nq).map(|i| rows[i * np][0]).collect();
    let ps: Vec<f64> = rows[..np].iter().map(|r| r[1]).collect();
    let grid = Grid2D::new(grid_from_points(&qs)?, grid_from_points(&ps)?);
    PhaseSpaceField::new(grid, DMatrix::from_fn(nq, np, |i, j| rows[i * np + j][2]))
}

/// Writes `q,re,im` (or `t,q,re,im` when `timed`).
pub fn write_wavefunctions<W: Write>(states: &[(f64, &WaveFunction)], timed: bool, out: W) -> Result<()> {
    let header: &[&str] = if timed { &["t", "q", "re", "im"] } else { &["q", "re", "im"] };
    let mut w = writer(out, header)?;
    for &(t, psi) in states {
        for (q, a) in psi.grid().points().zip(psi.amplitudes()) {
            if timed {
                row(&mut w, &[t, q, a.re, a.im])?;
            } else {
                row(&mut w, &[q, a.re, a.im])?;
            }
        }
    }
    finish(w)
}

pub fn read_wavefunction<R: Read>(input: R) -> Result<WaveFunction> {
    let rows = read_table(input, &["q", "re", "im"])?;
    let qs: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    WaveFunction::new(grid_from_points(&qs)?, rows.iter().map(|r| C64::new(r[1], r[2])).collect())
}

/// Writes `q,qp,re,im` (or `t,q,qp,re,im` when `timed`) for `ρ(q, q')`.
pub fn write_densities<W: Write>(states: &[(f64, &DensityMatrix)], timed: bool, out: W) -> Result<()> {
    let header: &[&str] = if timed { &["t", "q", "qp", "re", "im"] } else { &["q", "qp", "re", "im"] };
    let mut w = writer(out, header)?;
    for &(t, rho) in states {
        let g = rho.grid();
        for (i, q) in g.points().enumerate() {
            for (j, qp) in g.points().enumerate() {
                let z = rho.entries()[(i, j)];
                if timed {
                    row(&mut w, &[t, q, qp, z.re, z.im])?;
                } else {
                    row(&mut w, &[q, qp, z.re, z.im])?;
                }
            }
        }
    }
    finish(w)
}

pub fn read_density<R: Read>(input: R) -> Result<DensityMatrix> {
    let rows = read_table(input, &["q", "qp", "re", "im"])?;
    let n = (rows.len() as f64).sqrt().round() as usize;
    if n < 2 || n * n != rows.len() {
        return Err(Error::Parse("density rows do not form a square grid".into()));
    }
    let qs: Vec<f64> = (0..n).map(|i| rows[i * n][0]).collect();
    DensityMatrix::new(grid_from_points(&qs)?, DMatrix::from_fn(n, n, |i, j| C64::new(rows[i * n + j][2], rows[i * n + j][3])))
}

/// Writes a plain `x,value` table.
pub fn write_series<W: Write>(xs: &[f64], values: &[f64], out: W) -> Result<()> {
    let mut w = writer(out, &["x", "value"])?;
    for (&x, &v) in xs.iter().zip(values) {
        row(&mut w, &[x, v])?;
    }
    finish(w)
}
