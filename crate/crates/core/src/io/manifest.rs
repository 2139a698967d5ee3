use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use super::annotation::{load_annotation, load_rgb, AnnotationKind};
use super::features::load_features;
use super::{read_file, write_file};
use crate::error::{Error, Result};
use crate::training::Sample;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRecord {
    pub image: PathBuf,
    pub annotation: Option<PathBuf>,
    pub weak: Option<PathBuf>,
    pub features: Option<PathBuf>,
}

impl ManifestRecord {
    /// Image file stem, used to name outputs.
    pub fn stem(&self) -> String {
        self.image
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub records: Vec<ManifestRecord>,
    pub classes: usize,
    pub ignore_index: u8,
}

fn field_err(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Manifest {
        field: field.into(),
        message: message.into(),
    }
}

fn resolve(root: &Path, field: String, raw: &str) -> Result<PathBuf> {
    let p = root.join(raw);
    if !p.exists() {
        return Err(field_err(field, format!("{} does not exist", p.display())));
    }
    Ok(p)
}

fn path_list(obj: &serde_json::Map<String, Value>, key: &str, n: usize, root: &Path) -> Result<Vec<Option<PathBuf>>> {
    let Some(v) = obj.get(key).filter(|v| !v.is_null()) else {
        return Ok(vec![None; n]);
    };
    let arr = v.as_array().ok_or_else(|| field_err(key, "expected an array"))?;
    if arr.len() != n {
        return Err(field_err(key, format!("has {} entries, images has {n}", arr.len())));
    }
    arr.iter()
        .enumerate()
        .map(|(i, e)| match e {
            Value::Null => Ok(None),
            Value::String(s) => resolve(root, format!("{key}[{i}]"), s).map(Some),
            _ => Err(field_err(format!("{key}[{i}]"), "expected a path string or null")),
        })
        .collect()
}

/// Parses a manifest. Relative paths resolve against `root`; unknown
/// fields are ignored.
pub fn parse_manifest(text: &str, root: &Path) -> Result<DatasetManifest> {
    let v: Value = serde_json::from_str(text).map_err(|e| field_err("<root>", e.to_string()))?;
    let obj = v.as_object().ok_or_else(|| field_err("<root>", "expected a JSON object"))?;
    let images = obj
        .get("images")
        .ok_or_else(|| field_err("images", "missing"))?
        .as_array()
        .ok_or_else(|| field_err("images", "expected an array"))?;
    if images.is_empty() {
        return Err(field_err("images", "must list at least one image"));
    }
    let image_paths = images
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let s = e.as_str().ok_or_else(|| field_err(format!("images[{i}]"), "expected a path string"))?;
            resolve(root, format!("images[{i}]"), s)
        })
        .collect::<Result<Vec<_>>>()?;
    let n = image_paths.len();
    let annotations = path_list(obj, "annotations", n, root)?;
    let weak = path_list(obj, "weak", n, root)?;
    let features = path_list(obj, "features", n, root)?;
    let classes = match obj.get("classes") {
        None | Some(Value::Null) => 21,
        Some(v) => match v.as_u64() {
            Some(c) if (2..=255).contains(&c) => c as usize,
            _ => return Err(field_err("classes", "expected an integer in 2..=255")),
        },
    };
    let ignore_index = match obj.get("ignore_index") {
        None | Some(Value::Null) => 255,
        Some(v) => match v.as_u64() {
            Some(c) if c <= 255 && c as usize >= classes => c as u8,
            _ => return Err(field_err("ignore_index", "expected an integer in classes..=255")),
        },
    };
    let records = image_paths
        .into_iter()
        .zip(annotations)
        .zip(weak)
        .zip(features)
        .map(|(((image, annotation), weak), features)| ManifestRecord {
            image,
            annotation,
            weak,
            features,
        })
        .collect();
    Ok(DatasetManifest {
        records,
        classes,
        ignore_index,
    })
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = String::from_utf8(read_file(path)?).map_err(|_| field_err("<root>", "not UTF-8"))?;
    let root = path.parent().unwrap_or(Path::new("."));
    parse_manifest(&text, root)
}

#[derive(Serialize)]
struct RawManifest<'a> {
    images: Vec<&'a str>,
    annotations: Vec<Option<&'a str>>,
    weak: Vec<Option<&'a str>>,
    features: Vec<Option<&'a str>>,
    classes: usize,
    ignore_index: u8,
}

/// Writes a manifest whose entries are paths relative to its directory.
pub fn write_manifest(
    path: impl AsRef<Path>,
    images: &[String],
    annotations: &[Option<String>],
    weak: &[Option<String>],
    classes: usize,
) -> Result<()> {
    let raw = RawManifest {
        images: images.iter().map(String::as_str).collect(),
        annotations: annotations.iter().map(Option::as_deref).collect(),
        weak: weak.iter().map(Option::as_deref).collect(),
        features: vec![None; images.len()],
        classes,
        ignore_index: 255,
    };
    let mut text = serde_json::to_string_pretty(&raw).expect("manifest serializes");
    text.push('\n');
    write_file(path.as_ref(), text.as_bytes())
}

/// Decodes every record of a manifest into memory.
pub fn load_samples(m: &DatasetManifest) -> Result<Vec<Sample>> {
    m.records
        .iter()
        .map(|r| {
            let image = load_rgb(&r.image)?;
            let load = |p: &Option<PathBuf>, kind| {
                p.as_ref()
                    .map(|p| {
                        let a = load_annotation(p, kind, m.classes, m.ignore_index)?;
                        if a.dims() != image.dimensions() {
                            return Err(Error::Image {
                                path: p.clone(),
                                message: "annotation size differs from image".into(),
                            });
                        }
                        Ok(a)
                    })
                    .transpose()
            };
            Ok(Sample {
                name: r.stem(),
                ground_truth: load(&r.annotation, AnnotationKind::Dense)?,
                weak: load(&r.weak, AnnotationKind::Scribble)?,
                features: r.features.as_ref().map(load_features).transpose()?,
                image,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> tempfile::TempDir {
        let d = tempfile::tempdir().unwrap();
        std::fs::write(d.path().join("a.png"), b"x").unwrap();
        d
    }

    #[test]
    fn minimal_gets_defaults() {
        let d = setup();
        let m = parse_manifest(r#"{"images": ["a.png"]}"#, d.path()).unwrap();
        assert_eq!(m.records.len(), 1);
        assert_eq!((m.classes, m.ignore_index), (21, 255));
        assert_eq!(m.records[0].image, d.path().join("a.png"));
        assert_eq!(m.records[0].annotation, None);
    }

    #[test]
    fn extras_ignored() {
        let d = setup();
        let m = parse_manifest(r#"{"images": ["a.png"], "future": {"x": 1}, "classes": 4}"#, d.path()).unwrap();
        assert_eq!(m.classes, 4);
    }

    #[test]
    fn errors_name_the_field() {
        let d = setup();
        let err = |t: &str| parse_manifest(t, d.path()).unwrap_err().to_string();
        assert!(err(r#"{"images": []}"#).contains("`images`"));
        assert!(err(r#"{"images": ["b.png"]}"#).contains("`images[0]`"));
        assert!(err(r#"{"images": ["a.png"], "weak": []}"#).contains("`weak`"));
        assert!(err(r#"{"images": ["a.png"], "annotations": [3]}"#).contains("`annotations[0]`"));
        assert!(err(r#"{"images": ["a.png"], "classes": 1}"#).contains("`classes`"));
        assert!(err(r#"[1]"#).contains("<root>"));
    }

    #[test]
    fn missing_file_names_path() {
        let e = load_manifest("/nonexistent/m.json").unwrap_err();
        assert!(e.to_string().contains("/nonexistent/m.json"));
    }
}
