// SPDX-License-Identifier: MIT OR Apache-2.0

//! MVLS: a minimal little-endian container for one dense 2-D matrix.
//!
//! ```text
//! offset  size  field
//!      0     4  magic "MVLS"
//!      4     4  version (u32) = 1
//!      8     1  dtype (u8): 0 = f32, 1 = f64
//!      9     8  n_rows (u64)
//!     17     8  n_cols (u64)
//!     25     -  row-major payload
//! ```

use std::fs;
use std::path::Path;

use logicspace_core::Matrix;

use crate::error::{IoError, Result};

pub const MAGIC: [u8; 4] = *b"MVLS";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Dtype {
    F32,
    #[default]
    F64,
}

impl Dtype {
    pub fn code(self) -> u8 {
        match self {
            Dtype::F32 => 0,
            Dtype::F64 => 1,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(Dtype::F32),
            1 => Ok(Dtype::F64),
            other => Err(IoError::Format(format!("unknown dtype code {other}"))),
        }
    }

    pub fn size(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }
}

impl std::str::FromStr for Dtype {
    type Err = IoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f32" | "float32" | "0" => Ok(Dtype::F32),
            "f64" | "float64" | "1" => Ok(Dtype::F64),
            other => Err(IoError::Usage(format!(
                "unknown dtype {other:?}, expected f32 or f64"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatrixHeader {
    pub version: u32,
    pub dtype: Dtype,
    pub n_rows: u64,
    pub n_cols: u64,
}

impl MatrixHeader {
    pub fn to_bytes(&self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[0..4].copy_from_slice(&MAGIC);
        out[4..8].copy_from_slice(&self.version.to_le_bytes());
        out[8] = self.dtype.code();
        out[9..17].copy_from_slice(&self.n_rows.to_le_bytes());
        out[17..25].copy_from_slice(&self.n_cols.to_le_bytes());
        out
    }

    pub fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(IoError::Format(format!(
                "truncated header: expected {HEADER_LEN} bytes, got {}",
                bytes.len()
            )));
        }
        if bytes[0..4] != MAGIC {
            return Err(IoError::Format(format!("bad magic {:?}", &bytes[0..4])));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(IoError::Format(format!("unsupported version {version}")));
        }
        Ok(Self {
            version,
            dtype: Dtype::from_code(bytes[8])?,
            n_rows: u64::from_le_bytes(bytes[9..17].try_into().unwrap()),
            n_cols: u64::from_le_bytes(bytes[17..25].try_into().unwrap()),
        })
    }

    /// Payload length implied by the header, if it fits in `usize`.
    pub fn payload_len(&self) -> Option<usize> {
        let rows = usize::try_from(self.n_rows).ok()?;
        let cols = usize::try_from(self.n_cols).ok()?;
        rows.checked_mul(cols)?.checked_mul(self.dtype.size())
    }
}

/// Serialises `m` to MVLS bytes.
pub fn encode(m: &Matrix, dtype: Dtype) -> Result<Vec<u8>> {
    let header = MatrixHeader {
        version: VERSION,
        dtype,
        n_rows: m.rows() as u64,
        n_cols: m.cols() as u64,
    };
    let mut out = Vec::with_capacity(HEADER_LEN + m.as_slice().len() * dtype.size());
    out.extend_from_slice(&header.to_bytes());
    for (i, &v) in m.as_slice().iter().enumerate() {
        match dtype {
            Dtype::F64 => {
                if !v.is_finite() {
                    return Err(non_finite(i, m.cols()));
                }
                out.extend_from_slice(&v.to_le_bytes());
            }
            Dtype::F32 => {
                let narrow = v as f32;
                if !narrow.is_finite() {
                    return Err(IoError::Validation(format!(
                        "entry {} ({v:e}) overflows float32",
                        position(i, m.cols())
                    )));
                }
                out.extend_from_slice(&narrow.to_le_bytes());
            }
        }
    }
    Ok(out)
}

/// Parses MVLS bytes. `f32` payloads are widened to `f64`.
pub fn decode(bytes: &[u8]) -> Result<Matrix> {
    let header = MatrixHeader::parse(bytes)?;
    let expected = header.payload_len().ok_or_else(|| {
        IoError::Format(format!(
            "{}x{} matrix does not fit in memory",
            header.n_rows, header.n_cols
        ))
    })?;
    let actual = bytes.len() - HEADER_LEN;
    if actual < expected {
        return Err(IoError::Format(format!(
            "truncated payload: expected {expected} bytes, got {actual}"
        )));
    }
    if actual > expected {
        return Err(IoError::Format(format!(
            "trailing data: expected {expected} payload bytes, got {actual}"
        )));
    }
    let payload = &bytes[HEADER_LEN..];
    let cols = header.n_cols as usize;
    let data: Vec<f64> = match header.dtype {
        Dtype::F64 => payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
        Dtype::F32 => payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect(),
    };
    if let Some(i) = data.iter().position(|v| !v.is_finite()) {
        return Err(non_finite(i, cols));
    }
    Ok(Matrix::new(header.n_rows as usize, cols, data)?)
}

pub fn write_matrix(path: impl AsRef<Path>, m: &Matrix, dtype: Dtype) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode(m, dtype)?;
    fs::write(path, bytes).map_err(|e| IoError::storage(path, e))
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| IoError::storage(path, e))?;
    decode(&bytes).map_err(|e| match e {
        IoError::Format(msg) => IoError::Format(format!("{}: {msg}", path.display())),
        IoError::Validation(msg) => IoError::Validation(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Writes a single vector as a `1 × n` matrix.
pub fn write_vector(path: impl AsRef<Path>, v: &[f64]) -> Result<()> {
    write_matrix(path, &Matrix::new(1, v.len(), v.to_vec())?, Dtype::F64)
}

/// Reads a `1 × n` matrix back into a vector.
pub fn read_vector(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let m = read_matrix(path)?;
    if m.rows() != 1 {
        return Err(IoError::Validation(format!(
            "{}: expected a 1 x n vector, found {} x {}",
            path.display(),
            m.rows(),
            m.cols()
        )));
    }
    Ok(m.into_vec())
}

fn position(i: usize, cols: usize) -> String {
    let cols = cols.max(1);
    format!("({}, {})", i / cols, i % cols)
}

fn non_finite(i: usize, cols: usize) -> IoError {
    IoError::Validation(format!("non-finite entry at {}", position(i, cols)))
}
