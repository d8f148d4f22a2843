use std::path::{Path, PathBuf};

use log::warn;

use crate::error::{Error, Result};

/// Where images and masks live inside each per-image folder, as glob
/// patterns relative to that folder, e.g. `human_seg/*.png`.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetLayout {
    pub image_pattern: String,
    pub gt_pattern: String,
    pub max_gts: usize,
}

impl Default for DatasetLayout {
    fn default() -> Self {
        Self {
            image_pattern: "src_color/*.png".into(),
            gt_pattern: "human_seg/*.png".into(),
            max_gts: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetEntry {
    pub id: String,
    pub image: PathBuf,
    pub gts: Vec<PathBuf>,
}

#[derive(Clone, Debug, Default)]
pub struct DatasetIndex {
    /// Sorted by id.
    pub entries: Vec<DatasetEntry>,
    pub warnings: Vec<String>,
}

fn matching_files(dir: &Path, pattern: &str) -> Vec<PathBuf> {
    let full = format!("{}/{pattern}", glob::Pattern::escape(&dir.to_string_lossy()));
    let Ok(paths) = glob::glob(&full) else {
        return Vec::new();
    };
    let mut out: Vec<PathBuf> = paths.filter_map(|p| p.ok()).filter(|p| p.is_file()).collect();
    out.sort();
    out
}

/// Indexes `root/<id>/...`. Unreadable or mis-sized masks are dropped with a
/// warning; entries left without masks are skipped.
pub fn load_dataset(root: &Path, layout: &DatasetLayout) -> Result<DatasetIndex> {
    let read = std::fs::read_dir(root).map_err(|e| Error::io(root, e))?;
    let mut dirs: Vec<PathBuf> = read
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();

    let mut index = DatasetIndex::default();
    let mut warn_with = |msg: String| {
        warn!("{msg}");
        index.warnings.push(msg);
    };
    let mut entries = Vec::new();
    for dir in dirs {
        let id = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let images = matching_files(&dir, &layout.image_pattern);
        let Some(image) = images.first().cloned() else {
            warn_with(format!("{id}: no image matching {}", layout.image_pattern));
            continue;
        };
        if images.len() > 1 {
            warn_with(format!("{id}: {} images match, using {}", images.len(), image.display()));
        }
        let dims = match image::image_dimensions(&image) {
            Ok(d) => d,
            Err(e) => {
                warn_with(format!("{id}: unreadable image {}: {e}", image.display()));
                continue;
            }
        };
        let mut gts = Vec::new();
        for gt in matching_files(&dir, &layout.gt_pattern) {
            match image::image_dimensions(&gt) {
                Ok(d) if d == dims => gts.push(gt),
                Ok(d) => warn_with(format!(
                    "{id}: mask {} is {}x{}, image is {}x{}; dropped",
                    gt.display(),
                    d.0,
                    d.1,
                    dims.0,
                    dims.1
                )),
                Err(e) => warn_with(format!("{id}: unreadable mask {}: {e}", gt.display())),
            }
        }
        if gts.len() > layout.max_gts {
            warn_with(format!(
                "{id}: {} masks found, keeping the first {}",
                gts.len(),
                layout.max_gts
            ));
            gts.truncate(layout.max_gts);
        }
        if gts.is_empty() {
            warn_with(format!("{id}: no usable ground truth; skipped"));
            continue;
        }
        entries.push(DatasetEntry { id, image, gts });
    }
    if entries.is_empty() {
        return Err(Error::EmptyDataset(root.to_path_buf()));
    }
    index.entries = entries;
    Ok(index)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_png(path: &Path, w: u32, h: u32) {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        image::RgbImage::new(w, h).save(path).unwrap();
    }

    #[test]
    fn indexes_sorted_entries_and_drops_bad_masks() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path();
        write_png(&root.join("b_img/src_color/b.png"), 4, 3);
        write_png(&root.join("b_img/human_seg/b_1.png"), 4, 3);
        write_png(&root.join("a_img/src_color/a.png"), 4, 3);
        write_png(&root.join("a_img/human_seg/a_1.png"), 4, 3);
        write_png(&root.join("a_img/human_seg/a_2.png"), 5, 3);
        write_png(&root.join("a_img/human_seg/a_3.png"), 4, 3);
        write_png(&root.join("c_img/src_color/c.png"), 4, 3);

        let index = load_dataset(root, &DatasetLayout::default()).unwrap();
        let ids: Vec<&str> = index.entries.iter().map(|e| e.id.as_str()).collect();
        assert_eq!(ids, vec!["a_img", "b_img"]);
        assert_eq!(index.entries[0].gts.len(), 2);
        assert!(index.entries[0].gts[1].ends_with("a_3.png"));
        assert_eq!(index.warnings.len(), 2);
        assert!(index.warnings.iter().any(|w| w.starts_with("c_img")));
    }

    #[test]
    fn empty_dataset_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        write_png(&dir.path().join("x/src_color/x.png"), 2, 2);
        assert!(matches!(
            load_dataset(dir.path(), &DatasetLayout::default()),
            Err(Error::EmptyDataset(_))
        ));
    }
}
