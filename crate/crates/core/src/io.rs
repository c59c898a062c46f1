//! Field and spectrum dumps.
//!
//! Binary layout, all little-endian: an 8-byte magic, `b: u32`, `depth: u32`,
//! `seed: u64`, `base_tag: u32`, then for spectra `kmax: u64`, then the
//! payload as `f64` (masses, or interleaved real and imaginary parts).
//! CSV dumps start with one `#` metadata line; floats are written in the
//! shortest form that reads back to the same value.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cascade::CascadeField;
use crate::spectrum::Spectrum;

pub const FIELD_MAGIC: &[u8; 8] = b"MCCMFLD1";
pub const SPECTRUM_MAGIC: &[u8; 8] = b"MCCMSPC1";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}: not a {1} dump")]
    BadMagic(String, &'static str),
    #[error("{0}: truncated dump")]
    Truncated(String),
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Leaf masses read back from a field dump.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDump {
    pub b: u32,
    pub depth: u32,
    pub seed: u64,
    pub base_tag: u32,
    pub masses: Vec<f64>,
}

impl From<&CascadeField> for FieldDump {
    fn from(f: &CascadeField) -> Self {
        FieldDump {
            b: f.b(),
            depth: f.depth,
            seed: f.seed(),
            base_tag: f.base.tag(),
            masses: f.masses.clone(),
        }
    }
}

fn header(magic: &[u8; 8], b: u32, depth: u32, seed: u64, base_tag: u32) -> Vec<u8> {
    let mut h = magic.to_vec();
    h.extend_from_slice(&b.to_le_bytes());
    h.extend_from_slice(&depth.to_le_bytes());
    h.extend_from_slice(&seed.to_le_bytes());
    h.extend_from_slice(&base_tag.to_le_bytes());
    h
}

pub fn write_field_bin(path: &Path, f: &FieldDump) -> Result<(), IoError> {
    let mut w = BufWriter::new(fs::File::create(path).map_err(io_err(path))?);
    let mut buf = header(FIELD_MAGIC, f.b, f.depth, f.seed, f.base_tag);
    for m in &f.masses {
        buf.extend_from_slice(&m.to_le_bytes());
    }
    w.write_all(&buf).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
    path: String,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], IoError> {
        if self.pos + n > self.data.len() {
            return Err(IoError::Truncated(self.path.clone()));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32, IoError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, IoError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64, IoError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

fn read_all(path: &Path) -> Result<Vec<u8>, IoError> {
    let mut data = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut data))
        .map_err(io_err(path))?;
    Ok(data)
}

pub fn read_field_bin(path: &Path) -> Result<FieldDump, IoError> {
    let data = read_all(path)?;
    let mut c = Cursor {
        data: &data,
        pos: 0,
        path: path.display().to_string(),
    };
    if c.take(8)? != FIELD_MAGIC {
        return Err(IoError::BadMagic(c.path, "field"));
    }
    let (b, depth, seed, base_tag) = (c.u32()?, c.u32()?, c.u64()?, c.u32()?);
    let n = (b as u64)
        .checked_pow(depth)
        .ok_or_else(|| IoError::Truncated(c.path.clone()))? as usize;
    let masses = (0..n).map(|_| c.f64()).collect::<Result<_, _>>()?;
    Ok(FieldDump {
        b,
        depth,
        seed,
        base_tag,
        masses,
    })
}

pub fn write_spectrum_bin(path: &Path, s: &Spectrum) -> Result<(), IoError> {
    let mut w = BufWriter::new(fs::File::create(path).map_err(io_err(path))?);
    let mut buf = header(SPECTRUM_MAGIC, s.b, s.depth, s.seed, s.base_tag);
    buf.extend_from_slice(&s.kmax.to_le_bytes());
    for c in &s.coeffs {
        buf.extend_from_slice(&c.re.to_le_bytes());
        buf.extend_from_slice(&c.im.to_le_bytes());
    }
    w.write_all(&buf).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

pub fn read_spectrum_bin(path: &Path) -> Result<Spectrum, IoError> {
    let data = read_all(path)?;
    let mut c = Cursor {
        data: &data,
        pos: 0,
        path: path.display().to_string(),
    };
    if c.take(8)? != SPECTRUM_MAGIC {
        return Err(IoError::BadMagic(c.path, "spectrum"));
    }
    let (b, depth, seed, base_tag, kmax) = (c.u32()?, c.u32()?, c.u64()?, c.u32()?, c.u64()?);
    let coeffs = (0..=kmax)
        .map(|_| Ok(Complex64::new(c.f64()?, c.f64()?)))
        .collect::<Result<_, IoError>>()?;
    Ok(Spectrum {
        b,
        depth,
        seed,
        base_tag,
        kmax,
        coeffs,
    })
}

fn meta_line(b: u32, depth: u32, seed: u64, base_tag: u32) -> String {
    format!("# b={b} depth={depth} seed={seed} base_tag={base_tag}")
}

pub fn write_field_csv(path: &Path, f: &FieldDump) -> Result<(), IoError> {
    let mut w = BufWriter::new(fs::File::create(path).map_err(io_err(path))?);
    let mut out = String::with_capacity(24 * f.masses.len() + 64);
    out.push_str(&meta_line(f.b, f.depth, f.seed, f.base_tag));
    out.push_str("\nindex,mass\n");
    for (k, m) in f.masses.iter().enumerate() {
        out.push_str(&format!("{k},{m:e}\n"));
    }
    w.write_all(out.as_bytes()).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

pub fn write_spectrum_csv(path: &Path, s: &Spectrum) -> Result<(), IoError> {
    let mut w = BufWriter::new(fs::File::create(path).map_err(io_err(path))?);
    let mut out = String::with_capacity(64 * s.coeffs.len() + 64);
    out.push_str(&meta_line(s.b, s.depth, s.seed, s.base_tag));
    out.push_str(&format!(" kmax={}\ns,re,im,abs2\n", s.kmax));
    for (k, c) in s.coeffs.iter().enumerate() {
        out.push_str(&format!("{k},{:e},{:e},{:e}\n", c.re, c.im, c.norm_sqr()));
    }
    w.write_all(out.as_bytes()).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

struct Meta {
    b: u32,
    depth: u32,
    seed: u64,
    base_tag: u32,
    kmax: Option<u64>,
}

fn parse_meta(line: &str, path: &str) -> Result<Meta, IoError> {
    let bad = |msg: String| IoError::Parse {
        path: path.to_string(),
        line: 1,
        msg,
    };
    let body = line.strip_prefix('#').ok_or_else(|| bad("missing metadata line".into()))?;
    let mut meta = Meta {
        b: 0,
        depth: 0,
        seed: 0,
        base_tag: 0,
        kmax: None,
    };
    for tok in body.split_whitespace() {
        let (k, v) = tok.split_once('=').ok_or_else(|| bad(format!("bad token {tok:?}")))?;
        let num = |v: &str| v.parse::<u64>().map_err(|e| bad(format!("{k}: {e}")));
        match k {
            "b" => meta.b = num(v)? as u32,
            "depth" => meta.depth = num(v)? as u32,
            "seed" => meta.seed = num(v)?,
            "base_tag" => meta.base_tag = num(v)? as u32,
            "kmax" => meta.kmax = Some(num(v)?),
            _ => return Err(bad(format!("unknown key {k:?}"))),
        }
    }
    if meta.b < 2 {
        return Err(bad("missing b".into()));
    }
    Ok(meta)
}

fn csv_rows(path: &Path) -> Result<(Meta, Vec<(usize, Vec<f64>)>), IoError> {
    let name = path.display().to_string();
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let first = match lines.next() {
        Some((_, l)) => l.map_err(io_err(path))?,
        None => return Err(IoError::Truncated(name)),
    };
    let meta = parse_meta(&first, &name)?;
    lines.next();
    let mut rows = Vec::new();
    for (i, line) in lines {
        let line = line.map_err(io_err(path))?;
        if line.is_empty() {
            continue;
        }
        let vals = line
            .split(',')
            .skip(1)
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| IoError::Parse {
                path: name.clone(),
                line: i + 1,
                msg: e.to_string(),
            })?;
        rows.push((i + 1, vals));
    }
    Ok((meta, rows))
}

pub fn read_field_csv(path: &Path) -> Result<FieldDump, IoError> {
    let (meta, rows) = csv_rows(path)?;
    let masses = rows.into_iter().map(|(_, v)| v[0]).collect::<Vec<_>>();
    Ok(FieldDump {
        b: meta.b,
        depth: meta.depth,
        seed: meta.seed,
        base_tag: meta.base_tag,
        masses,
    })
}

pub fn read_spectrum_csv(path: &Path) -> Result<Spectrum, IoError> {
    let (meta, rows) = csv_rows(path)?;
    let name = path.display().to_string();
    let coeffs = rows
        .into_iter()
        .map(|(line, v)| {
            if v.len() < 2 {
                Err(IoError::Parse {
                    path: name.clone(),
                    line,
                    msg: "expected s,re,im,abs2".into(),
                })
            } else {
                Ok(Complex64::new(v[0], v[1]))
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let kmax = meta.kmax.unwrap_or(coeffs.len().saturating_sub(1) as u64);
    if coeffs.len() as u64 != kmax + 1 {
        return Err(IoError::Truncated(name));
    }
    Ok(Spectrum {
        b: meta.b,
        depth: meta.depth,
        seed: meta.seed,
        base_tag: meta.base_tag,
        kmax,
        coeffs,
    })
}

/// Reads a spectrum dump, choosing the format by extension.
pub fn read_spectrum(path: &Path) -> Result<Spectrum, IoError> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => read_spectrum_csv(path),
        _ => read_spectrum_bin(path),
    }
}

pub fn read_field(path: &Path) -> Result<FieldDump, IoError> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => read_field_csv(path),
        _ => read_field_bin(path),
    }
}

/// Hex SHA-256 of a file's contents.
pub fn file_digest(path: &Path) -> Result<String, IoError> {
    Ok(hex::encode(Sha256::digest(read_all(path)?)))
}
