use std::path::Path;

use anyhow::{bail, Context, Result};
use image::{ImageBuffer, Luma, Rgb};

/// Largest label a 16-bit label image can hold, plus one.
pub const MAX_PNG_LABELS: usize = 1 << 16;

pub fn write_label_png(path: &Path, width: usize, height: usize, labels: &[usize]) -> Result<()> {
    if let Some(&max) = labels.iter().max() {
        if max >= MAX_PNG_LABELS {
            bail!("{} labels do not fit a 16-bit image", max + 1);
        }
    }
    let buf: Vec<u16> = labels.iter().map(|&l| l as u16).collect();
    ImageBuffer::<Luma<u16>, _>::from_raw(width as u32, height as u32, buf)
        .context("label buffer does not match the image size")?
        .save_with_format(path, image::ImageFormat::Png)
        .with_context(|| format!("writing {}", path.display()))
}

/// Reads a label image; 8-bit images are read as-is, not rescaled.
pub fn read_label_png(path: &Path) -> Result<(usize, usize, Vec<usize>)> {
    let img = image::open(path).with_context(|| format!("reading {}", path.display()))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let labels = match img {
        image::DynamicImage::ImageLuma8(g) => g.into_raw().into_iter().map(usize::from).collect(),
        image::DynamicImage::ImageLuma16(g) => g.into_raw().into_iter().map(usize::from).collect(),
        other => bail!(
            "{}: label images must be single-channel, got {:?}",
            path.display(),
            other.color()
        ),
    };
    Ok((w, h, labels))
}

/// Fixed color per label id, spread around the hue circle.
pub fn palette(label: usize) -> [u8; 3] {
    let hue = (label as f64 * 0.618_033_988_749_895).fract() * 6.0;
    let sat = if label.is_multiple_of(2) { 0.75 } else { 0.55 };
    let val = 0.95 - 0.2 * ((label / 2) % 3) as f64;
    let c = val * sat;
    let x = c * (1.0 - (hue % 2.0 - 1.0).abs());
    let (r, g, b) = match hue as usize {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = val - c;
    [r, g, b].map(|v| ((v + m) * 255.0).round() as u8)
}

pub fn write_preview_png(path: &Path, width: usize, height: usize, labels: &[usize]) -> Result<()> {
    let buf: Vec<u8> = labels.iter().flat_map(|&l| palette(l)).collect();
    ImageBuffer::<Rgb<u8>, _>::from_raw(width as u32, height as u32, buf)
        .context("label buffer does not match the image size")?
        .save_with_format(path, image::ImageFormat::Png)
        .with_context(|| format!("writing {}", path.display()))
}
