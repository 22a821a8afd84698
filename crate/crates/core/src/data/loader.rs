use std::fs;
use std::path::{Path, PathBuf};

use image::imageops::FilterType;
use image::{ImageBuffer, Rgb, RgbImage};

use crate::data::{parse_timestamp, LabeledSample, RoadCondition};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Result of walking a class-per-directory image tree.
#[derive(Debug)]
pub struct LoadReport {
    pub samples: Vec<LabeledSample>,
    pub paths: Vec<PathBuf>,
    /// Files that could not be decoded, with the decoder's message.
    pub skipped: Vec<(PathBuf, String)>,
}

/// Decodes one image to an `size`×`size`×3 tensor in [0, 1], resampling with
/// a triangle (bilinear) filter when the stored size differs.
pub fn read_image(path: &Path, size: usize) -> Result<Tensor<f32>> {
    let img = image::open(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let mut rgb = img.to_rgb8();
    if rgb.width() as usize != size || rgb.height() as usize != size {
        rgb = image::imageops::resize(&rgb, size as u32, size as u32, FilterType::Triangle);
    }
    let data = rgb.into_raw().into_iter().map(|v| v as f32 / 255.0).collect();
    Tensor::new(vec![size, size, 3], data)
}

pub fn write_image(path: &Path, image: &Tensor<f32>) -> Result<()> {
    let s = image.shape();
    if s.len() != 3 || s[2] != 3 {
        return Err(Error::shape(format!("expected H×W×3 image, got {s:?}")));
    }
    let bytes: Vec<u8> = image
        .data()
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    let buf: RgbImage = ImageBuffer::<Rgb<u8>, _>::from_raw(s[1] as u32, s[0] as u32, bytes)
        .ok_or_else(|| Error::shape("image buffer size mismatch"))?;
    buf.save(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

/// `<station>_<timestamp>.<ext>` → station and timestamp, when the stem has that form.
fn parse_file_stem(path: &Path) -> (String, Option<chrono::DateTime<chrono::Utc>>) {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
    match stem.rsplit_once('_') {
        Some((station, ts)) => match parse_timestamp(ts) {
            Some(t) => (station.to_string(), Some(t)),
            None => (String::new(), None),
        },
        None => (String::new(), None),
    }
}

/// Loads `root/{bare,partial,full}/*` in lexicographic file order within each
/// class. Undecodable files are skipped and reported; a class with no usable
/// image is an error.
pub fn load_image_dataset(root: &Path, size: usize) -> Result<LoadReport> {
    if size == 0 {
        return Err(Error::config("input size must be positive"));
    }
    let mut report = LoadReport {
        samples: Vec::new(),
        paths: Vec::new(),
        skipped: Vec::new(),
    };
    let mut empty = Vec::new();
    for class in RoadCondition::ALL {
        let dir = root.join(class.name());
        let mut files: Vec<PathBuf> = fs::read_dir(&dir)
            .map_err(|e| Error::io(&dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        files.sort();
        let before = report.samples.len();
        for path in files {
            match read_image(&path, size) {
                Ok(image) => {
                    let (station_id, timestamp) = parse_file_stem(&path);
                    report.samples.push(LabeledSample {
                        image,
                        label: class.index(),
                        station_id,
                        timestamp,
                        weather: None,
                    });
                    report.paths.push(path);
                }
                Err(e) => {
                    log::warn!("skipping {}: {e}", path.display());
                    report.skipped.push((path, e.to_string()));
                }
            }
        }
        if report.samples.len() == before {
            empty.push(class.name());
        }
    }
    if !empty.is_empty() {
        return Err(Error::input(format!(
            "no readable images for class(es): {}",
            empty.join(", ")
        )));
    }
    Ok(report)
}
