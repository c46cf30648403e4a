//! The `fvecs` / `bvecs` / `ivecs` family of formats.
//!
//! Every record is a little-endian `i32` dimension followed by that many
//! little-endian elements (`f32`, `u8` or `i32`). All records of a file share
//! the dimension.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementKind {
    Float32,
    Uint8,
    Int32,
}

impl ElementKind {
    pub fn size(self) -> usize {
        match self {
            ElementKind::Uint8 => 1,
            ElementKind::Float32 | ElementKind::Int32 => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ElementKind::Float32 => "float32",
            ElementKind::Uint8 => "uint8",
            ElementKind::Int32 => "int32",
        }
    }

    /// Guesses the kind from a `.fvecs`, `.bvecs` or `.ivecs` extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "fvecs" => Some(ElementKind::Float32),
            "bvecs" => Some(ElementKind::Uint8),
            "ivecs" => Some(ElementKind::Int32),
            _ => None,
        }
    }

    fn decode(self, bytes: &[u8]) -> f64 {
        match self {
            ElementKind::Float32 => f32::from_le_bytes(bytes.try_into().unwrap()) as f64,
            ElementKind::Uint8 => bytes[0] as f64,
            ElementKind::Int32 => i32::from_le_bytes(bytes.try_into().unwrap()) as f64,
        }
    }

    fn encode(self, x: f64, out: &mut Vec<u8>) -> Result<()> {
        let range = || Error::Range { value: x, kind: self.name() };
        match self {
            ElementKind::Float32 => {
                if !x.is_finite() || x.abs() > f32::MAX as f64 {
                    return Err(range());
                }
                out.extend_from_slice(&(x as f32).to_le_bytes());
            }
            ElementKind::Uint8 => {
                if x.fract() != 0.0 || !(0.0..=255.0).contains(&x) {
                    return Err(range());
                }
                out.push(x as u8);
            }
            ElementKind::Int32 => {
                if x.fract() != 0.0 || !(i32::MIN as f64..=i32::MAX as f64).contains(&x) {
                    return Err(range());
                }
                out.extend_from_slice(&(x as i32).to_le_bytes());
            }
        }
        Ok(())
    }
}

pub fn read_vecs(path: impl AsRef<Path>, kind: ElementKind) -> Result<Dataset> {
    let file = File::open(path)?;
    read_vecs_from(BufReader::new(file), kind)
}

pub fn read_vecs_from<R: Read>(mut reader: R, kind: ElementKind) -> Result<Dataset> {
    let mut offset = 0u64;
    let mut dim: Option<usize> = None;
    let mut points = Vec::new();
    let mut header = [0u8; 4];
    let mut record = Vec::new();
    loop {
        let got = read_full(&mut reader, &mut header)?;
        if got == 0 {
            break;
        }
        if got < header.len() {
            return Err(format_error(offset, "truncated record header"));
        }
        let d = i32::from_le_bytes(header);
        if d <= 0 {
            return Err(format_error(offset, format!("non-positive dimension {d}")));
        }
        let d = d as usize;
        match dim {
            None => dim = Some(d),
            Some(expected) if expected != d => {
                return Err(format_error(
                    offset,
                    format!("dimension {d} differs from the file's dimension {expected}"),
                ));
            }
            Some(_) => {}
        }
        record.resize(d * kind.size(), 0);
        let got = read_full(&mut reader, &mut record)?;
        if got < record.len() {
            return Err(format_error(
                offset,
                format!("truncated record: expected {} payload bytes, found {got}", record.len()),
            ));
        }
        points.extend(record.chunks_exact(kind.size()).map(|b| kind.decode(b)));
        offset += (header.len() + record.len()) as u64;
    }
    let dim = dim.ok_or_else(|| format_error(0, "file contains no records"))?;
    Dataset::new(dim, points).map_err(|e| format_error(0, e.to_string()))
}

pub fn write_vecs(dataset: &Dataset, path: impl AsRef<Path>, kind: ElementKind) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_vecs_to(dataset, &mut out, kind)?;
    out.flush()?;
    Ok(())
}

pub fn write_vecs_to<W: Write>(dataset: &Dataset, mut writer: W, kind: ElementKind) -> Result<()> {
    let dim = i32::try_from(dataset.dim())
        .map_err(|_| Error::Range { value: dataset.dim() as f64, kind: "int32 dimension" })?;
    let mut buf = Vec::with_capacity(4 + dataset.dim() * kind.size());
    for row in dataset.iter() {
        buf.clear();
        buf.extend_from_slice(&dim.to_le_bytes());
        for &x in row {
            kind.encode(x, &mut buf)?;
        }
        writer.write_all(&buf)?;
    }
    Ok(())
}

fn format_error(offset: u64, message: impl Into<String>) -> Error {
    Error::Format { offset, message: message.into() }
}

// Reads until `buf` is full or the stream ends; returns the bytes read.
fn read_full<R: Read>(reader: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match reader.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(k) => filled += k,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}
