//! Hot-pixel detection against band background noise and the cross-band
//! coincidence filter.

use std::collections::BTreeSet;

use crate::{BandImage, Error};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Background {
    /// Plain mean and standard deviation over all pixels.
    MeanSd,
    /// Median and scaled median absolute deviation; robust to bright tails.
    MedianMad,
}

const DEFAULT_THRESHOLD_SD: f64 = 4.0;
// Consistency factor making MAD estimate the Gaussian sd.
const MAD_TO_SD: f64 = 1.4826;

fn background_moments(data: &[f64], background: Background) -> (f64, f64) {
    match background {
        Background::MeanSd => {
            let n = data.len() as f64;
            let mean = data.iter().sum::<f64>() / n;
            let var = data.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            (mean, var.sqrt())
        }
        Background::MedianMad => {
            let mut sorted = data.to_vec();
            sorted.sort_by(f64::total_cmp);
            let med = sorted[sorted.len() / 2];
            let mut devs: Vec<f64> = data.iter().map(|v| (v - med).abs()).collect();
            devs.sort_by(f64::total_cmp);
            (med, MAD_TO_SD * devs[devs.len() / 2])
        }
    }
}

/// Pixels strictly above background + 4 sd.
pub fn detect_hot_pixels(img: &BandImage) -> BTreeSet<(usize, usize)> {
    detect_hot_pixels_with(img, DEFAULT_THRESHOLD_SD, Background::MeanSd)
}

/// Pixels strictly above background + `threshold_sd` spreads. A
/// zero-variance image has no detections by construction.
pub fn detect_hot_pixels_with(
    img: &BandImage,
    threshold_sd: f64,
    background: Background,
) -> BTreeSet<(usize, usize)> {
    let (center, spread) = background_moments(&img.data, background);
    if spread == 0.0 {
        return BTreeSet::new();
    }
    let cut = center + threshold_sd * spread;
    let mut out = BTreeSet::new();
    for row in 0..img.height {
        for col in 0..img.width {
            if img.get(row, col) > cut {
                out.insert((row, col));
            }
        }
    }
    out
}

/// Keep pixels detected in at least two bands; a single band carries no
/// coincidence information and is rejected.
pub fn coincidence_filter(
    per_band: &[BTreeSet<(usize, usize)>],
) -> Result<BTreeSet<(usize, usize)>, Error> {
    if per_band.len() < 2 {
        return Err(Error::TooFewBands(per_band.len()));
    }
    let mut out = BTreeSet::new();
    for set in per_band {
        for &px in set {
            if out.contains(&px) {
                continue;
            }
            let hits = per_band.iter().filter(|s| s.contains(&px)).count();
            if hits >= 2 {
                out.insert(px);
            }
        }
    }
    Ok(out)
}
