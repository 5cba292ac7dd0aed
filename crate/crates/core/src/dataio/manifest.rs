use std::fs;
use std::path::{Path, PathBuf};

use ndarray::{concatenate, Array2, ArrayView2, Axis};

use super::features::{read_feature_set, write_feature_set, FeatureFormat, FeatureSet};
use crate::error::{Error, Result};

/// One row of `manifest.csv`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub image_id: String,
    pub label: Option<u32>,
    pub path: PathBuf,
}

const HEADER: [&str; 3] = ["image_id", "label", "path"];

fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::format_at_line(0, e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::format_at_line(1, e.to_string()))?;
    if headers.iter().collect::<Vec<_>>() != HEADER {
        return Err(Error::format_at_line(1, "manifest header must be image_id,label,path"));
    }
    let mut entries = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            Error::format_at_line(e.position().map(|p| p.line()).unwrap_or(0), e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let label = match &record[1] {
            "" => None,
            s => Some(
                s.parse()
                    .map_err(|_| Error::format_at_line(line, format!("bad label {s:?}")))?,
            ),
        };
        entries.push(ManifestEntry {
            image_id: record[0].to_string(),
            label,
            path: PathBuf::from(&record[2]),
        });
    }
    Ok(entries)
}

/// Loads every image listed in a manifest, in manifest order.
pub fn read_dataset(manifest: &Path) -> Result<Vec<FeatureSet>> {
    let base = manifest.parent().unwrap_or(Path::new("."));
    let entries = read_manifest(manifest)?;
    if entries.is_empty() {
        return Err(Error::format_at_line(2, "manifest lists no images"));
    }
    entries
        .into_iter()
        .map(|e| {
            let path = base.join(&e.path);
            let fs_ = read_feature_set(&path, FeatureFormat::from_path(&path))?;
            FeatureSet::new(fs_.into_features(), e.image_id, e.label)
        })
        .collect()
}

/// Writes one feature file per image plus `manifest.csv` into `dir`.
/// Returns the manifest path.
pub fn write_dataset(dir: &Path, images: &[FeatureSet], format: FeatureFormat) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let manifest = dir.join("manifest.csv");
    let mut writer = csv::Writer::from_path(&manifest).map_err(|e| Error::Io(e.into()))?;
    let csv_err = |e: csv::Error| Error::Io(e.into());
    writer.write_record(HEADER).map_err(csv_err)?;
    for image in images {
        let file = format!("{}.{}", image.image_id, format.extension());
        write_feature_set(&dir.join(&file), image, format)?;
        let label = image.label.map(|l| l.to_string()).unwrap_or_default();
        writer
            .write_record([image.image_id.as_str(), label.as_str(), file.as_str()])
            .map_err(csv_err)?;
    }
    writer.flush()?;
    Ok(manifest)
}

/// Concatenates the features of several images into one `N x D` matrix.
pub fn stack_features(images: &[FeatureSet]) -> Result<Array2<f64>> {
    let first = images
        .first()
        .ok_or_else(|| Error::arg("no images to stack"))?;
    let d = first.dim();
    for image in images {
        crate::error::check_dim(d, image.dim())?;
    }
    let views: Vec<ArrayView2<f64>> = images.iter().map(|i| i.features().view()).collect();
    Ok(concatenate(Axis(0), &views).expect("dimensions checked"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn dataset_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let images = vec![
            FeatureSet::new(array![[1.0, 2.0], [0.5, -1.0]], "img0", Some(0)).unwrap(),
            FeatureSet::new(array![[3.0, 4.0]], "img1", None).unwrap(),
        ];
        for format in [FeatureFormat::Binary, FeatureFormat::Csv] {
            let manifest = write_dataset(&dir.path().join(format.extension()), &images, format).unwrap();
            let back = read_dataset(&manifest).unwrap();
            assert_eq!(back, images);
        }
        let stacked = stack_features(&images).unwrap();
        assert_eq!(stacked.nrows(), 3);
    }

    #[test]
    fn bad_manifest_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.csv");
        fs::write(&path, "id,path\na,b\n").unwrap();
        assert!(matches!(read_dataset(&path), Err(Error::Format { .. })));
    }
}
