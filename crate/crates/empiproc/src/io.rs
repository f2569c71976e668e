//! Artifact files: paths, fields, Gamma matrices, JSON reports and their sidecars.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use empiproc_core::foundation::EvaluationGrid;
use empiproc_core::generators::SamplePath;
use empiproc_core::limit::LimitModel;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{AppError, AppResult};
use crate::number::{g17, parse_real, to_json};

pub const BINARY_MAGIC: &[u8; 4] = b"EPRC";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Binary,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Binary => "bin",
        }
    }
}

/// Hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn ensure_dir(dir: &Path) -> AppResult<()> {
    fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))
}

fn create(path: &Path) -> AppResult<BufWriter<fs::File>> {
    if let Some(parent) = path.parent() {
        ensure_dir(parent)?;
    }
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| AppError::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> AppError {
    AppError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Provenance record stored next to every artifact as `<file>.meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub artifact: String,
    pub kind: String,
    pub config_hash: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub details: serde_json::Value,
}

pub fn sidecar_path(artifact: &Path) -> PathBuf {
    let mut name = artifact
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(".meta.json");
    artifact.with_file_name(name)
}

pub fn write_sidecar(artifact: &Path, sidecar: &Sidecar) -> AppResult<()> {
    write_json_plain(&sidecar_path(artifact), sidecar)
}

fn write_json_plain<T: Serialize + ?Sized>(path: &Path, value: &T) -> AppResult<()> {
    let text = to_json(value).map_err(|e| AppError::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut w = create(path)?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| AppError::io(path, e))
}

/// JSON with 17-digit reals.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> AppResult<()> {
    write_json_plain(path, value)
}

pub fn read_to_string(path: &Path) -> AppResult<String> {
    if !path.exists() {
        return Err(AppError::MissingInput(path.to_path_buf()));
    }
    fs::read_to_string(path).map_err(|e| AppError::io(path, e))
}

/// CSV with header `k,x1..xd`.
pub fn write_path_csv(path: &Path, p: &SamplePath) -> AppResult<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let mut header = vec!["k".to_string()];
    header.extend((1..=p.dim()).map(|i| format!("x{i}")));
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for (k, row) in p.rows().enumerate() {
        let mut rec = vec![k.to_string()];
        rec.extend(row.iter().map(|v| g17(*v)));
        w.write_record(&rec).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| AppError::io(path, e))
}

pub fn read_path_csv(path: &Path) -> AppResult<(usize, Vec<f64>)> {
    if !path.exists() {
        return Err(AppError::MissingInput(path.to_path_buf()));
    }
    let bad = |m: String| AppError::Format {
        path: path.to_path_buf(),
        message: m,
    };
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let header = r.headers().map_err(|e| csv_error(path, e))?.clone();
    let d = header
        .len()
        .checked_sub(1)
        .filter(|d| *d > 0)
        .ok_or_else(|| bad("header needs k and coordinates".into()))?;
    if &header[0] != "k" || (1..=d).any(|i| header[i] != format!("x{i}")) {
        return Err(bad("header must be k,x1..xd".into()));
    }
    let mut values = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        if rec.len() != d + 1 {
            return Err(bad(format!("row {line} has {} fields", rec.len())));
        }
        for f in rec.iter().skip(1) {
            values.push(parse_real(f).ok_or_else(|| bad(format!("row {line}: bad number {f:?}")))?);
        }
    }
    Ok((d, values))
}

/// `EPRC`, `u32 n`, `u32 d`, then `n * d` little-endian `f64` row-major.
pub fn write_path_binary(path: &Path, p: &SamplePath) -> AppResult<()> {
    let bad = |m: &str| AppError::Format {
        path: path.to_path_buf(),
        message: m.into(),
    };
    let n = u32::try_from(p.len()).map_err(|_| bad("path too long for the binary format"))?;
    let d = u32::try_from(p.dim()).map_err(|_| bad("dimension too large for the binary format"))?;
    let mut w = create(path)?;
    let mut bytes = Vec::with_capacity(12 + 8 * p.values().len());
    bytes.extend_from_slice(BINARY_MAGIC);
    bytes.extend_from_slice(&n.to_le_bytes());
    bytes.extend_from_slice(&d.to_le_bytes());
    for v in p.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&bytes)
        .and_then(|_| w.flush())
        .map_err(|e| AppError::io(path, e))
}

pub fn read_path_binary(path: &Path) -> AppResult<(usize, Vec<f64>)> {
    if !path.exists() {
        return Err(AppError::MissingInput(path.to_path_buf()));
    }
    let bad = |m: &str| AppError::Format {
        path: path.to_path_buf(),
        message: m.into(),
    };
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| AppError::io(path, e))?;
    if bytes.len() < 12 || &bytes[..4] != BINARY_MAGIC {
        return Err(bad("missing EPRC header"));
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
    let d = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    if bytes.len() != 12 + 8 * n * d {
        return Err(bad("length does not match the header"));
    }
    let values = bytes[12..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok((d, values))
}

pub fn write_path(path: &Path, p: &SamplePath, format: Format) -> AppResult<()> {
    match format {
        Format::Csv => write_path_csv(path, p),
        Format::Binary => write_path_binary(path, p),
    }
}

/// Reads a path in either format, chosen by the file extension.
pub fn read_path(
    path: &Path,
    generator_id: &str,
    seed: u64,
    replicate: u64,
) -> AppResult<SamplePath> {
    let (d, values) = match path.extension().and_then(|e| e.to_str()) {
        Some("bin") => read_path_binary(path)?,
        _ => read_path_csv(path)?,
    };
    Ok(SamplePath::new(values, d, generator_id, seed, replicate)?)
}

/// Path files `path_*.csv` / `path_*.bin` in a directory, sorted by name.
pub fn list_paths(dir: &Path) -> AppResult<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(AppError::MissingInput(dir.to_path_buf()));
    }
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| AppError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
            name.starts_with("path_") && (name.ends_with(".csv") || name.ends_with(".bin"))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(AppError::MissingInput(dir.join("path_*")));
    }
    Ok(files)
}

/// Field CSV: vertex coordinates `x1..xd`, then one column per named value.
pub fn write_grid_csv(
    path: &Path,
    grid: &EvaluationGrid,
    columns: &[(&str, &[f64])],
) -> AppResult<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let d = grid.dimension();
    let mut header: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    header.extend(columns.iter().map(|(n, _)| n.to_string()));
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for v in 0..grid.vertex_count() {
        let mut rec: Vec<String> = grid.vertex_coords(v).iter().map(|x| g17(*x)).collect();
        rec.extend(columns.iter().map(|(_, vals)| g17(vals[v])));
        w.write_record(&rec).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| AppError::io(path, e))
}

/// Gamma as `row,col,value` triples.
pub fn write_gamma_csv(path: &Path, model: &LimitModel) -> AppResult<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["row", "col", "value"])
        .map_err(|e| csv_error(path, e))?;
    let v = model.vertices();
    for a in 0..v {
        for b in 0..v {
            w.write_record([a.to_string(), b.to_string(), g17(model.gamma[a * v + b])])
                .map_err(|e| csv_error(path, e))?;
        }
    }
    w.flush().map_err(|e| AppError::io(path, e))
}

/// Reads a `row,col,value` file into a dense row-major matrix.
pub fn read_gamma_csv(path: &Path) -> AppResult<(usize, Vec<f64>)> {
    if !path.exists() {
        return Err(AppError::MissingInput(path.to_path_buf()));
    }
    let bad = |m: String| AppError::Format {
        path: path.to_path_buf(),
        message: m,
    };
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut triples = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        if rec.len() != 3 {
            return Err(bad("expected row,col,value".into()));
        }
        let a: usize = rec[0]
            .parse()
            .map_err(|_| bad(format!("bad row {:?}", &rec[0])))?;
        let b: usize = rec[1]
            .parse()
            .map_err(|_| bad(format!("bad col {:?}", &rec[1])))?;
        let x = parse_real(&rec[2]).ok_or_else(|| bad(format!("bad value {:?}", &rec[2])))?;
        triples.push((a, b, x));
    }
    let v = triples.iter().map(|t| t.0.max(t.1) + 1).max().unwrap_or(0);
    let mut out = vec![0.0; v * v];
    for (a, b, x) in triples {
        out[a * v + b] = x;
    }
    Ok((v, out))
}

/// Long-format table with a header row.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> AppResult<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| AppError::io(path, e))
}
