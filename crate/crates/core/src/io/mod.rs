//! On-disk formats, dataset manifests, synthetic data, and evaluation.

mod annotation;
mod binary;
mod bundle;
mod checkpoint;
mod export;
mod features;
mod manifest;
mod metrics;
mod synthetic;

use std::path::Path;

use crate::error::{Error, Result};

pub use annotation::{load_annotation, load_rgb, save_label_png, save_rgb, AnnotationKind};
pub use bundle::{decode_bundle, encode_bundle, load_bundle, save_bundle, BundlePartition, GraphBundle};
pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint};
pub use export::{export_pseudo_labels, voc_palette, PALETTE_FILE};
pub use features::{decode_features, encode_features, load_features, save_features};
pub use manifest::{load_manifest, load_samples, parse_manifest, write_manifest, DatasetManifest, ManifestRecord};
pub use metrics::{evaluate_miou, ConfusionMatrix, MiouReport};
pub use synthetic::{gen_synthetic_dataset, synthesize, SyntheticImage, SyntheticSpec};

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
