use std::collections::HashSet;
use std::path::{Path, PathBuf};

use super::annotation::save_label_png;
use super::write_file;
use crate::error::{Error, Result};
use crate::raster::LabelMap;

pub const PALETTE_FILE: &str = "palette.json";

/// The 21-entry VOC color map: class `i` gets its bits spread over the
/// high bits of the three channels.
pub fn voc_palette() -> [[u8; 3]; 21] {
    let mut out = [[0u8; 3]; 21];
    for (i, c) in out.iter_mut().enumerate() {
        let mut id = i;
        for j in 0..8 {
            for (ch, v) in c.iter_mut().enumerate() {
                *v |= (((id >> ch) & 1) as u8) << (7 - j);
            }
            id >>= 3;
        }
    }
    out
}

/// Writes `<stem>.png` per map (pixel value = class) and the palette
/// sidecar. Returns the written paths, palette last.
pub fn export_pseudo_labels(maps: &[LabelMap], stems: &[String], out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = out_dir.as_ref();
    if maps.len() != stems.len() {
        return Err(Error::InvalidArgument(format!("{} maps for {} names", maps.len(), stems.len())));
    }
    let mut seen = HashSet::new();
    if let Some(s) = stems.iter().find(|s| !seen.insert(s.as_str())) {
        return Err(Error::InvalidArgument(format!("duplicate output name {s}")));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::with_capacity(maps.len() + 1);
    for (m, s) in maps.iter().zip(stems) {
        if let Some(&v) = m.as_slice().iter().find(|&&v| v >= 21) {
            return Err(Error::InvalidArgument(format!("{s}: class {v} outside the 21-class palette")));
        }
        let p = dir.join(format!("{s}.png"));
        save_label_png(m, &p)?;
        written.push(p);
    }
    let palette: Vec<_> = voc_palette()
        .iter()
        .enumerate()
        .map(|(i, c)| serde_json::json!({"index": i, "rgb": c}))
        .collect();
    let mut text = serde_json::to_string_pretty(&serde_json::json!({ "palette": palette })).expect("json");
    text.push('\n');
    let p = dir.join(PALETTE_FILE);
    write_file(&p, text.as_bytes())?;
    written.push(p);
    Ok(written)
}
