use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};

pub(crate) const FEATURE_MAGIC: &[u8; 4] = b"FVC1";
const HEADER_LEN: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureFormat {
    Binary,
    Csv,
}

impl FeatureFormat {
    /// `.csv` files are CSV, everything else is binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => FeatureFormat::Csv,
            _ => FeatureFormat::Binary,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            FeatureFormat::Binary => "fvc",
            FeatureFormat::Csv => "csv",
        }
    }
}

/// The local features of one image: a `T x D` matrix, one feature per row.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    features: Array2<f64>,
    pub image_id: String,
    pub label: Option<u32>,
}

impl FeatureSet {
    pub fn new(features: Array2<f64>, image_id: impl Into<String>, label: Option<u32>) -> Result<Self> {
        let (t, d) = features.dim();
        if t == 0 || d == 0 {
            return Err(Error::arg(format!("feature set must be non-empty, got {t}x{d}")));
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::arg(format!(
                "non-finite value at row {}, column {}",
                pos / d,
                pos % d
            )));
        }
        Ok(Self {
            features,
            image_id: image_id.into(),
            label,
        })
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn into_features(self) -> Array2<f64> {
        self.features
    }

    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn rows(&self) -> impl Iterator<Item = ArrayView1<'_, f64>> {
        self.features.rows().into_iter()
    }
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Reads a feature file. The image id is the file stem; no label is attached.
pub fn read_feature_set(path: &Path, format: FeatureFormat) -> Result<FeatureSet> {
    let features = match format {
        FeatureFormat::Binary => read_features_binary(&fs::read(path)?)?,
        FeatureFormat::Csv => read_features_csv(&fs::read(path)?)?,
    };
    FeatureSet::new(features, stem(path), None)
}

/// Parses an `FVC1` buffer.
pub fn read_features_binary(bytes: &[u8]) -> Result<Array2<f64>> {
    if bytes.len() < 4 || &bytes[..4] != FEATURE_MAGIC {
        return Err(Error::format_at_byte(0, "missing FVC1 magic"));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::format_at_byte(bytes.len() as u64, "truncated header"));
    }
    let t = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let d = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    if t == 0 {
        return Err(Error::format_at_byte(4, "row count T must be at least 1"));
    }
    if d == 0 {
        return Err(Error::format_at_byte(8, "dimension D must be at least 1"));
    }
    let expected = t
        .checked_mul(d)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::format_at_byte(4, "header dimensions overflow"))?;
    if bytes.len() != expected {
        return Err(Error::format_at_byte(
            bytes.len().min(expected) as u64,
            format!("expected {expected} bytes for {t}x{d} values, found {}", bytes.len()),
        ));
    }
    let mut values = Vec::with_capacity(t * d);
    for (i, chunk) in bytes[HEADER_LEN..].chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::format_at_byte(
                (HEADER_LEN + 4 * i) as u64,
                format!("non-finite value {v}"),
            ));
        }
        values.push(v as f64);
    }
    Ok(Array2::from_shape_vec((t, d), values).expect("length checked above"))
}

/// Parses CSV features: one row per line, every line the same width.
pub fn read_features_csv(bytes: &[u8]) -> Result<Array2<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut values = Vec::new();
    let mut width = None;
    let mut rows = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            Error::format_at_line(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(rows as u64 + 1);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(Error::format_at_line(
                    line,
                    format!("expected {w} fields, found {}", record.len()),
                ))
            }
            _ => {}
        }
        for field in record.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::format_at_line(line, format!("not a number: {field:?}")))?;
            if !v.is_finite() {
                return Err(Error::format_at_line(line, format!("non-finite value {field}")));
            }
            values.push(v);
        }
        rows += 1;
    }
    let d = width.ok_or_else(|| Error::format_at_line(1, "no features in file"))?;
    Ok(Array2::from_shape_vec((rows, d), values).expect("widths checked above"))
}

/// Writes a feature set. Binary output stores `f32`, so values round to
/// single precision; CSV keeps the shortest round-trip `f64` text.
pub fn write_feature_set(path: &Path, fs_: &FeatureSet, format: FeatureFormat) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    let (t, d) = fs_.features.dim();
    match format {
        FeatureFormat::Binary => {
            out.write_all(FEATURE_MAGIC)?;
            out.write_all(&(t as u32).to_le_bytes())?;
            out.write_all(&(d as u32).to_le_bytes())?;
            for &v in fs_.features.iter() {
                let single = v as f32;
                if !single.is_finite() {
                    return Err(Error::arg(format!("value {v} does not fit in f32")));
                }
                out.write_all(&single.to_le_bytes())?;
            }
        }
        FeatureFormat::Csv => {
            for row in fs_.features.rows() {
                let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
                writeln!(out, "{}", line.join(","))?;
            }
        }
    }
    out.flush()?;
    Ok(())
}
