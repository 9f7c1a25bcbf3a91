//! Corpus manifest ingestion and image decoding.
//!
//! A manifest is a CSV document with a `path,label,group` header, one record
//! per image. Paths are resolved relative to the manifest file itself.

use std::path::{Path, PathBuf};

use crate::detector::Label;
use crate::error::{Error, Result};
use crate::imaging::Screenshot;

/// One manifest record: where the image lives, its ground-truth label, and a
/// free-form group tag (attack name or benign category).
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub image_path: PathBuf,
    pub label: Label,
    pub group: String,
}

/// Parse and validate a manifest. All problems are collected and reported
/// together with their line numbers rather than failing on the first one.
pub fn load_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Ingestion {
            problems: vec![format!("{}: {e}", path.display())],
        })?;

    let mut entries = Vec::new();
    let mut problems = Vec::new();
    for record in reader.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                problems.push(format!("line {}: {e}", e.position().map_or(0, |p| p.line())));
                continue;
            }
        };
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 3 {
            problems.push(format!("line {line}: expected 3 fields, got {}", record.len()));
            continue;
        }
        let label = match record[1].parse::<Label>() {
            Ok(label) => label,
            Err(e) => {
                problems.push(format!("line {line}: {e}"));
                continue;
            }
        };
        let image_path = base.join(&record[0]);
        if !image_path.is_file() {
            problems.push(format!(
                "line {line}: image not found: {}",
                image_path.display()
            ));
            continue;
        }
        entries.push(ManifestEntry {
            image_path,
            label,
            group: record[2].to_string(),
        });
    }

    if !problems.is_empty() {
        return Err(Error::Ingestion { problems });
    }
    Ok(entries)
}

/// Write a manifest next to a corpus; `records` carry paths relative to the
/// manifest location.
pub fn save_manifest(path: &Path, records: &[(String, Label, String)]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| Error::Serialization(format!("cannot write manifest: {e}")))?;
    writer
        .write_record(["path", "label", "group"])
        .map_err(|e| Error::Serialization(e.to_string()))?;
    for (rel_path, label, group) in records {
        writer
            .write_record([rel_path.as_str(), &label.to_string(), group.as_str()])
            .map_err(|e| Error::Serialization(e.to_string()))?;
    }
    writer
        .flush()
        .map_err(|e| Error::Serialization(e.to_string()))?;
    Ok(())
}

/// Decode a PNG or JPEG file into an owned raster.
pub fn decode_image(path: &Path) -> Result<Screenshot> {
    let decoded = image::open(path).map_err(|e| Error::ImageDecode {
        path: path.display().to_string(),
        source: e,
    })?;
    let rgb = decoded.to_rgb8();
    let (w, h) = rgb.dimensions();
    Screenshot::new(w as usize, h as usize, rgb.into_raw())
}

/// Encode a raster as PNG.
pub fn encode_png(img: &Screenshot, path: &Path) -> Result<()> {
    let buffer = image::RgbImage::from_raw(
        img.width() as u32,
        img.height() as u32,
        img.pixels().to_vec(),
    )
    .expect("screenshot buffer length is validated at construction");
    buffer
        .save(path)
        .map_err(|e| Error::Serialization(format!("failed to encode {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_png(dir: &Path, name: &str) -> String {
        let img = Screenshot::filled(4, 4, [9, 9, 9]).unwrap();
        encode_png(&img, &dir.join(name)).unwrap();
        name.to_string()
    }

    #[test]
    fn well_formed_manifest_loads() {
        let dir = tempfile::tempdir().unwrap();
        let names: Vec<String> = (0..4).map(|i| write_png(dir.path(), &format!("img{i}.png"))).collect();
        let manifest = dir.path().join("manifest.csv");
        save_manifest(
            &manifest,
            &[
                (names[0].clone(), Label::Benign, "embed".into()),
                (names[1].clone(), Label::Benign, "screenshot".into()),
                (names[2].clone(), Label::Malicious, "overlay".into()),
                (names[3].clone(), Label::Malicious, "popup".into()),
            ],
        )
        .unwrap();
        let entries = load_manifest(&manifest).unwrap();
        assert_eq!(entries.len(), 4);
        assert_eq!(entries[2].label, Label::Malicious);
        assert!(entries[0].image_path.ends_with("img0.png"));
    }

    #[test]
    fn bad_label_reports_its_line() {
        let dir = tempfile::tempdir().unwrap();
        let name = write_png(dir.path(), "ok.png");
        let manifest = dir.path().join("manifest.csv");
        std::fs::write(
            &manifest,
            format!("path,label,group\n{name},bengin,embed\n"),
        )
        .unwrap();
        match load_manifest(&manifest) {
            Err(Error::Ingestion { problems }) => {
                assert_eq!(problems.len(), 1);
                assert!(problems[0].contains("line 2"), "{problems:?}");
                assert!(problems[0].contains("bengin"), "{problems:?}");
            }
            other => panic!("expected ingestion error, got {other:?}"),
        }
    }

    #[test]
    fn missing_image_and_bad_label_both_reported() {
        let dir = tempfile::tempdir().unwrap();
        let name = write_png(dir.path(), "ok.png");
        let manifest = dir.path().join("manifest.csv");
        std::fs::write(
            &manifest,
            format!("path,label,group\nmissing.png,benign,embed\n{name},wrong,x\n"),
        )
        .unwrap();
        match load_manifest(&manifest) {
            Err(Error::Ingestion { problems }) => assert_eq!(problems.len(), 2, "{problems:?}"),
            other => panic!("expected ingestion error, got {other:?}"),
        }
    }

    #[test]
    fn png_roundtrip_preserves_pixels() {
        let dir = tempfile::tempdir().unwrap();
        let mut img = Screenshot::filled(5, 3, [1, 2, 3]).unwrap();
        img.set_rgb(2, 4, [250, 128, 0]);
        let path = dir.path().join("x.png");
        encode_png(&img, &path).unwrap();
        assert_eq!(decode_image(&path).unwrap(), img);
    }
}
