use std::path::Path;

use super::binary::{ByteReader, ByteWriter};
use super::{read_file, write_file};
use crate::error::{Error, Result};
use crate::raster::FeatureMap;

pub const FEATURE_MAGIC: &[u8; 4] = b"HGFT";
pub const FEATURE_VERSION: u16 = 1;

/// Encodes a feature map as HGFT: magic, version `u16`, then `C`, `Hf`,
/// `Wf` as `u32`, then `C·Hf·Wf` little-endian `f32` values, channel-major
/// then row-major. Values are narrowed to 32 bits.
pub fn encode_features(map: &FeatureMap) -> Result<Vec<u8>> {
    let mut w = ByteWriter::with_header(FEATURE_MAGIC, FEATURE_VERSION);
    for d in [map.channels(), map.height(), map.width()] {
        w.u32(u32::try_from(d).map_err(|_| Error::InvalidArgument(format!("dimension {d} exceeds u32")))?);
    }
    for &v in map.as_slice() {
        let n = v as f32;
        if !n.is_finite() {
            return Err(Error::InvalidArgument(format!("feature value {v} not representable as f32")));
        }
        w.f32(n);
    }
    Ok(w.into_inner())
}

/// Decodes HGFT bytes, widening values to `f64`.
pub fn decode_features(bytes: &[u8]) -> Result<FeatureMap> {
    let mut r = ByteReader::with_header(bytes, FEATURE_MAGIC, FEATURE_VERSION)?;
    let c = r.u32()? as usize;
    let h = r.u32()? as usize;
    let w = r.u32()? as usize;
    let n = c
        .checked_mul(h)
        .and_then(|v| v.checked_mul(w))
        .ok_or_else(|| Error::Malformed("feature dimensions overflow".into()))?;
    let payload = r.take(n.checked_mul(4).ok_or_else(|| Error::Malformed("feature dimensions overflow".into()))?)?;
    r.finish()?;
    let data: Vec<f64> = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")) as f64)
        .collect();
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Malformed("non-finite feature value".into()));
    }
    FeatureMap::new(c, h, w, data)
}

pub fn save_features(map: &FeatureMap, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &encode_features(map)?)
}

pub fn load_features(path: impl AsRef<Path>) -> Result<FeatureMap> {
    decode_features(&read_file(path.as_ref())?)
}
