//! File formats: Matrix Market text (coordinate and array), the raw binary
//! matrix format, per-line vector text, sketch text, and flat key=value
//! manifests.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::dense::{CMatrix, CVector};
use crate::error::{Error, Result};
use crate::sketch::{RowSketch, SketchRow};

const BINARY_MAGIC: &[u8; 4] = b"SQLA";
const BINARY_VERSION: u32 = 1;

fn parse_err(context: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        context: context.into(),
        message: message.into(),
    }
}

// ---------------------------------------------------------------------------
// Matrix Market

/// Read a Matrix Market file (coordinate or array; real, integer, or complex;
/// general or symmetric/hermitian).
pub fn read_matrix_market(path: &Path) -> Result<CMatrix> {
    let file = File::open(path)?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| parse_err("matrix market", "empty file"))??;
    let header_lc = header.to_lowercase();
    if !header_lc.starts_with("%%matrixmarket matrix") {
        return Err(parse_err("matrix market", format!("bad header: {header}")));
    }
    let coordinate = header_lc.contains("coordinate");
    let complex = header_lc.contains("complex");
    let symmetric = header_lc.contains("symmetric");
    let hermitian = header_lc.contains("hermitian");

    let mut data_lines = lines
        .filter_map(|l| l.ok())
        .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('%'));
    let size_line = data_lines
        .next()
        .ok_or_else(|| parse_err("matrix market", "missing size line"))?;
    let dims: Vec<usize> = size_line
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| parse_err("matrix market", format!("size line: {e}")))?;

    if coordinate {
        if dims.len() != 3 {
            return Err(parse_err("matrix market", "coordinate size line needs 3 fields"));
        }
        let (m, n, nnz) = (dims[0], dims[1], dims[2]);
        let mut out = CMatrix::zeros(m, n);
        let mut seen = 0usize;
        for line in data_lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            let want = if complex { 4 } else { 3 };
            if toks.len() != want {
                return Err(parse_err("matrix market", format!("entry line: {line}")));
            }
            let i: usize = toks[0]
                .parse()
                .map_err(|e| parse_err("matrix market", format!("{e}")))?;
            let j: usize = toks[1]
                .parse()
                .map_err(|e| parse_err("matrix market", format!("{e}")))?;
            let re: f64 = toks[2]
                .parse()
                .map_err(|e| parse_err("matrix market", format!("{e}")))?;
            let im: f64 = if complex {
                toks[3]
                    .parse()
                    .map_err(|e| parse_err("matrix market", format!("{e}")))?
            } else {
                0.0
            };
            let z = Complex64::new(re, im);
            out[(i - 1, j - 1)] = z;
            if (symmetric || hermitian) && i != j {
                out[(j - 1, i - 1)] = if hermitian { z.conj() } else { z };
            }
            seen += 1;
        }
        if seen != nnz {
            return Err(parse_err(
                "matrix market",
                format!("expected {nnz} entries, found {seen}"),
            ));
        }
        Ok(out)
    } else {
        if dims.len() != 2 {
            return Err(parse_err("matrix market", "array size line needs 2 fields"));
        }
        let (m, n) = (dims[0], dims[1]);
        let mut values = Vec::with_capacity(m * n);
        for line in data_lines {
            for chunk in parse_value_line(&line, complex, "matrix market")? {
                values.push(chunk);
            }
        }
        if values.len() != m * n {
            return Err(parse_err(
                "matrix market",
                format!("expected {} values, found {}", m * n, values.len()),
            ));
        }
        // Array format is column-major.
        Ok(CMatrix::from_fn(m, n, |i, j| values[j * m + i]))
    }
}

fn parse_value_line(line: &str, complex: bool, context: &str) -> Result<Vec<Complex64>> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    let mut out = Vec::new();
    if complex {
        if toks.len() % 2 != 0 {
            return Err(parse_err(context, format!("odd token count: {line}")));
        }
        for pair in toks.chunks(2) {
            let re: f64 = pair[0]
                .parse()
                .map_err(|e| parse_err(context, format!("{e}")))?;
            let im: f64 = pair[1]
                .parse()
                .map_err(|e| parse_err(context, format!("{e}")))?;
            out.push(Complex64::new(re, im));
        }
    } else {
        for t in toks {
            let re: f64 = t.parse().map_err(|e| parse_err(context, format!("{e}")))?;
            out.push(Complex64::new(re, 0.0));
        }
    }
    Ok(out)
}

/// Write a Matrix Market file in array format (column-major).
pub fn write_matrix_market(path: &Path, a: &CMatrix) -> Result<()> {
    let complex = a.iter().any(|z| z.im != 0.0);
    let mut w = BufWriter::new(File::create(path)?);
    let field = if complex { "complex" } else { "real" };
    writeln!(w, "%%MatrixMarket matrix array {field} general")?;
    writeln!(w, "{} {}", a.nrows(), a.ncols())?;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let z = a[(i, j)];
            if complex {
                writeln!(w, "{:.17e} {:.17e}", z.re, z.im)?;
            } else {
                writeln!(w, "{:.17e}", z.re)?;
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Binary format

/// Write the raw binary matrix format: magic "SQLA", u32 version, u64 rows,
/// u64 cols, u8 complex flag, then row-major little-endian f64 values
/// (re [, im]).
pub fn write_binary_matrix(path: &Path, a: &CMatrix) -> Result<()> {
    let complex = a.iter().any(|z| z.im != 0.0);
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(BINARY_MAGIC)?;
    w.write_all(&BINARY_VERSION.to_le_bytes())?;
    w.write_all(&(a.nrows() as u64).to_le_bytes())?;
    w.write_all(&(a.ncols() as u64).to_le_bytes())?;
    w.write_all(&[u8::from(complex)])?;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let z = a[(i, j)];
            w.write_all(&z.re.to_le_bytes())?;
            if complex {
                w.write_all(&z.im.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

pub fn read_binary_matrix(path: &Path) -> Result<CMatrix> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != BINARY_MAGIC {
        return Err(parse_err("binary matrix", "bad magic"));
    }
    let mut buf4 = [0u8; 4];
    r.read_exact(&mut buf4)?;
    let version = u32::from_le_bytes(buf4);
    if version != BINARY_VERSION {
        return Err(parse_err("binary matrix", format!("unknown version {version}")));
    }
    let mut buf8 = [0u8; 8];
    r.read_exact(&mut buf8)?;
    let rows = u64::from_le_bytes(buf8) as usize;
    r.read_exact(&mut buf8)?;
    let cols = u64::from_le_bytes(buf8) as usize;
    let mut flag = [0u8; 1];
    r.read_exact(&mut flag)?;
    let complex = flag[0] != 0;
    let mut values = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        r.read_exact(&mut buf8)?;
        let re = f64::from_le_bytes(buf8);
        let im = if complex {
            r.read_exact(&mut buf8)?;
            f64::from_le_bytes(buf8)
        } else {
            0.0
        };
        values.push(Complex64::new(re, im));
    }
    Ok(CMatrix::from_fn(rows, cols, |i, j| values[i * cols + j]))
}

pub fn write_binary_vector(path: &Path, v: &CVector) -> Result<()> {
    let as_matrix = CMatrix::from_fn(v.len(), 1, |i, _| v[i]);
    write_binary_matrix(path, &as_matrix)
}

pub fn read_binary_vector(path: &Path) -> Result<CVector> {
    let m = read_binary_matrix(path)?;
    if m.ncols() != 1 {
        return Err(parse_err("binary vector", format!("{} columns", m.ncols())));
    }
    Ok(CVector::from_fn(m.nrows(), |i, _| m[(i, 0)]))
}

// ---------------------------------------------------------------------------
// Vector text: one value per line ("re" or "re im")

pub fn read_vector_text(path: &Path) -> Result<CVector> {
    let file = File::open(path)?;
    let mut values = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = t.split_whitespace().collect();
        let re: f64 = toks[0]
            .parse()
            .map_err(|e| parse_err("vector text", format!("{e}")))?;
        let im: f64 = if toks.len() > 1 {
            toks[1]
                .parse()
                .map_err(|e| parse_err("vector text", format!("{e}")))?
        } else {
            0.0
        };
        values.push(Complex64::new(re, im));
    }
    if values.is_empty() {
        return Err(parse_err("vector text", "no values"));
    }
    Ok(CVector::from_vec(values))
}

pub fn write_vector_text(path: &Path, v: &CVector) -> Result<()> {
    let complex = v.iter().any(|z| z.im != 0.0);
    let mut w = BufWriter::new(File::create(path)?);
    for z in v.iter() {
        if complex {
            writeln!(w, "{:.17e} {:.17e}", z.re, z.im)?;
        } else {
            writeln!(w, "{:.17e}", z.re)?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Sketch text: one "index weight" pair per line

pub fn write_sketch_text(path: &Path, sketch: &RowSketch) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# source_len {}", sketch.source_len())?;
    for r in sketch.rows() {
        writeln!(w, "{} {:.17e}", r.index, r.weight)?;
    }
    Ok(())
}

pub fn read_sketch_text(path: &Path) -> Result<RowSketch> {
    let file = File::open(path)?;
    let mut source_len = 0usize;
    let mut rows = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(rest) = t.strip_prefix("# source_len") {
            source_len = rest
                .trim()
                .parse()
                .map_err(|e| parse_err("sketch text", format!("{e}")))?;
            continue;
        }
        let toks: Vec<&str> = t.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(parse_err("sketch text", format!("bad line: {t}")));
        }
        let index: usize = toks[0]
            .parse()
            .map_err(|e| parse_err("sketch text", format!("{e}")))?;
        let weight: f64 = toks[1]
            .parse()
            .map_err(|e| parse_err("sketch text", format!("{e}")))?;
        let s_total = 0; // filled below once all rows are known
        let _ = s_total;
        rows.push((index, weight));
    }
    let s = rows.len().max(1);
    let sketch_rows: Vec<SketchRow> = rows
        .into_iter()
        .map(|(index, weight)| SketchRow {
            index,
            // p is recoverable from the weight: w = 1/sqrt(s p).
            prob: 1.0 / (weight * weight * s as f64),
            weight,
        })
        .collect();
    RowSketch::from_rows(source_len, sketch_rows)
}

// ---------------------------------------------------------------------------
// Manifests: flat "key=value" lines, sorted by key

pub type Manifest = BTreeMap<String, String>;

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for (k, v) in manifest {
        writeln!(w, "{k}={v}")?;
    }
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let file = File::open(path)?;
    let mut out = Manifest::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        match t.split_once('=') {
            Some((k, v)) => {
                out.insert(k.trim().to_string(), v.trim().to_string());
            }
            None => return Err(parse_err("manifest", format!("bad line: {t}"))),
        }
    }
    Ok(out)
}
