//! The `FVCM` model container.
//!
//! Layout: magic `b"FVCM"`, one format-version byte (currently 1), one type
//! tag byte, then a type-specific payload of little-endian `u32` dimensions
//! and `f64` values. The payload of each model type is documented on its
//! [`ModelFile`] impl and in `docs/formats.md`.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"FVCM";
pub const FORMAT_VERSION: u8 = 1;

pub mod tag {
    pub const DICTIONARY: u8 = 1;
    pub const HYBRID_DICTIONARY: u8 = 2;
    pub const GMM: u8 = 3;
    pub const PCA: u8 = 4;
    pub const SUPERVISED_ENCODER: u8 = 5;
    pub const LINEAR_MODEL: u8 = 6;
}

/// A model that can be stored in an `FVCM` container.
pub trait ModelFile: Sized {
    const TAG: u8;
    fn write_payload(&self, w: &mut PayloadWriter);
    fn read_payload(r: &mut PayloadReader<'_>) -> Result<Self>;
}

#[derive(Default)]
pub struct PayloadWriter {
    buf: Vec<u8>,
}

impl PayloadWriter {
    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u32(&mut self, v: usize) {
        let v = u32::try_from(v).expect("dimension exceeds u32");
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64s<'a>(&mut self, values: impl IntoIterator<Item = &'a f64>) {
        for &v in values {
            self.f64(v);
        }
    }

    /// Row-major dump of a matrix.
    pub fn matrix(&mut self, m: &Array2<f64>) {
        self.f64s(m.iter());
    }
}

pub struct PayloadReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> PayloadReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::format_at_byte(self.pos as u64, "unexpected end of model file"));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    pub fn f64(&mut self) -> Result<f64> {
        let offset = self.pos;
        let v = f64::from_le_bytes(self.take(8)?.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::format_at_byte(offset as u64, format!("non-finite value {v}")));
        }
        Ok(v)
    }

    pub fn vector(&mut self, n: usize) -> Result<Array1<f64>> {
        (0..n).map(|_| self.f64()).collect::<Result<Vec<_>>>().map(Array1::from)
    }

    /// Reads a row-major matrix.
    pub fn matrix(&mut self, rows: usize, cols: usize) -> Result<Array2<f64>> {
        let n = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::format_at_byte(self.pos as u64, "matrix size overflow"))?;
        if n.saturating_mul(8) > self.bytes.len() - self.pos {
            return Err(Error::format_at_byte(self.pos as u64, "unexpected end of model file"));
        }
        let values = self.vector(n)?;
        Ok(values.into_shape_with_order((rows, cols)).expect("sized above"))
    }

    pub fn offset(&self) -> u64 {
        self.pos as u64
    }
}

/// Serializes a model into its full container bytes.
pub fn model_bytes<M: ModelFile>(model: &M) -> Vec<u8> {
    let mut w = PayloadWriter::default();
    w.buf.extend_from_slice(MAGIC);
    w.u8(FORMAT_VERSION);
    w.u8(M::TAG);
    model.write_payload(&mut w);
    w.buf
}

pub fn parse_model<M: ModelFile>(bytes: &[u8]) -> Result<M> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::format_at_byte(0, "missing FVCM magic"));
    }
    let mut r = PayloadReader { bytes, pos: 4 };
    let version = r.u8()?;
    if version != FORMAT_VERSION {
        return Err(Error::format_at_byte(4, format!("unsupported format version {version}")));
    }
    let found = r.u8()?;
    if found != M::TAG {
        return Err(Error::format_at_byte(
            5,
            format!("expected model type tag {}, found {found}", M::TAG),
        ));
    }
    let model = M::read_payload(&mut r)?;
    if r.pos != bytes.len() {
        return Err(Error::format_at_byte(r.pos as u64, "trailing bytes after model payload"));
    }
    Ok(model)
}

pub fn save_model<M: ModelFile>(model: &M, path: &Path) -> Result<()> {
    fs::write(path, model_bytes(model))?;
    Ok(())
}

pub fn load_model<M: ModelFile>(path: &Path) -> Result<M> {
    parse_model(&fs::read(path)?)
}
