use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::imaging::{read_ppm, resize_bilinear, write_ppm, LandmarkDocument};

use super::dataset::{LabeledSample, View};
use super::synthetic::SyntheticSample;

pub const MANIFEST_FILE: &str = "manifest.csv";
const MANIFEST_HEADER: &str = "path,view,class";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestRecord {
    /// Image path relative to the dataset root.
    pub path: PathBuf,
    pub view: View,
    pub class_index: usize,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes `root/{view}/{class}/{id}.ppm`, the sibling landmark JSON and the manifest.
pub fn write_dataset(root: &Path, samples: &[SyntheticSample]) -> Result<Vec<ManifestRecord>> {
    let mut records = Vec::with_capacity(samples.len());
    let mut manifest = String::from(MANIFEST_HEADER);
    manifest.push('\n');
    for (i, s) in samples.iter().enumerate() {
        let dir = PathBuf::from(s.sample.view.as_str()).join(s.sample.class_index.to_string());
        let id = format!("{i:06}");
        let rel = dir.join(format!("{id}.ppm"));
        let img = &s.sample.image;
        write_file(&root.join(&rel), &write_ppm(img))?;
        let doc = LandmarkDocument::new(img.width() as u32, img.height() as u32, &s.landmarks);
        write_file(&root.join(dir.join(format!("{id}.landmarks.json"))), doc.to_json().as_bytes())?;
        let rel_str = rel.to_string_lossy().replace('\\', "/");
        manifest.push_str(&format!("{rel_str},{},{}\n", s.sample.view, s.sample.class_index));
        records.push(ManifestRecord {
            path: rel,
            view: s.sample.view,
            class_index: s.sample.class_index,
        });
    }
    write_file(&root.join(MANIFEST_FILE), manifest.as_bytes())?;
    Ok(records)
}

/// Parses `root/manifest.csv`. The header line is optional; blank lines are skipped.
pub fn read_manifest(root: &Path) -> Result<Vec<ManifestRecord>> {
    let path = root.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line == MANIFEST_HEADER) {
            continue;
        }
        let bad = |why: &str| Error::Config(format!("{}:{}: {why}", path.display(), lineno + 1));
        let mut fields = line.rsplitn(3, ',');
        let (Some(class), Some(view), Some(rel)) = (fields.next(), fields.next(), fields.next()) else {
            return Err(bad("expected path,view,class"));
        };
        let class_index = class.trim().parse().map_err(|_| bad("class is not a nonnegative integer"))?;
        let view = view.trim().parse().map_err(|_| bad("unknown view"))?;
        out.push(ManifestRecord {
            path: PathBuf::from(rel.trim()),
            view,
            class_index,
        });
    }
    Ok(out)
}

/// Loads every manifest record of `view` (all views when `None`), resizing to `image_size` when needed.
pub fn load_view_samples(root: &Path, view: Option<View>, image_size: usize) -> Result<Vec<LabeledSample>> {
    read_manifest(root)?
        .into_iter()
        .filter(|r| view.is_none_or(|v| v == r.view))
        .map(|r| {
            let path = root.join(&r.path);
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            let mut image = read_ppm(&bytes)?;
            if image.height() != image_size || image.width() != image_size {
                image = resize_bilinear(&image, image_size, image_size)?;
            }
            Ok(LabeledSample {
                image,
                class_index: r.class_index,
                view: r.view,
            })
        })
        .collect()
}
