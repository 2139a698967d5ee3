use std::path::Path;

use image::{GrayImage, ImageFormat, RgbImage};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{LabelMap, UNLABELED};

/// What an annotation raster holds. The encoding is the same for all
/// kinds: class indices, with the ignore value marking pixels that carry
/// no label (ignored ground truth, or no weak signal).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnnotationKind {
    Dense,
    Scribble,
    Click,
}

fn image_error(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn open(path: &Path) -> Result<image::DynamicImage> {
    if !path.exists() {
        return Err(Error::io(path, std::io::Error::from(std::io::ErrorKind::NotFound)));
    }
    image::open(path).map_err(|e| image_error(path, e))
}

pub fn load_rgb(path: impl AsRef<Path>) -> Result<RgbImage> {
    Ok(open(path.as_ref())?.to_rgb8())
}

pub fn save_rgb(img: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    img.save_with_format(path, ImageFormat::Png).map_err(|e| image_error(path, e))
}

/// Loads an 8-bit single-channel annotation. `ignore` becomes the
/// in-memory unlabeled value 255; every other value must be below
/// `classes`.
pub fn load_annotation(path: impl AsRef<Path>, kind: AnnotationKind, classes: usize, ignore: u8) -> Result<LabelMap> {
    let path = path.as_ref();
    let img = match open(path)? {
        image::DynamicImage::ImageLuma8(g) => g,
        other => {
            return Err(image_error(
                path,
                format!("{kind:?} annotation must be 8-bit grayscale, found {:?}", other.color()),
            ))
        }
    };
    let (w, h) = img.dimensions();
    let mut data = img.into_raw();
    for (i, v) in data.iter_mut().enumerate() {
        if *v == ignore {
            *v = UNLABELED;
        } else if *v as usize >= classes || *v == UNLABELED {
            return Err(Error::AnnotationRange {
                path: path.to_path_buf(),
                value: *v,
                x: i as u32 % w,
                y: i as u32 / w,
            });
        }
    }
    LabelMap::new(w, h, data)
}

/// Writes a label map as an 8-bit grayscale PNG, values unchanged.
pub fn save_label_png(map: &LabelMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let img = GrayImage::from_raw(map.width(), map.height(), map.as_slice().to_vec())
        .expect("label map length matches dimensions");
    img.save_with_format(path, ImageFormat::Png).map_err(|e| image_error(path, e))
}
