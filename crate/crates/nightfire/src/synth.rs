//! Synthetic multi-band scene generator so the whole pipeline is testable
//! without satellite imagery.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::graybody::planck_radiance;
use crate::BandImage;

#[derive(Debug, Clone)]
pub struct Emitter {
    pub row: usize,
    pub col: usize,
    pub temperature_k: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone)]
pub struct SyntheticScene {
    pub width: usize,
    pub height: usize,
    /// Mean background radiance common to all bands.
    pub background: f64,
    /// Gaussian instrument-noise standard deviation.
    pub noise_sd: f64,
    pub emitters: Vec<Emitter>,
}

/// 375 m nominal pixel footprint.
pub const DEFAULT_PIXEL_AREA_M2: f64 = 375.0 * 375.0;

/// One image per wavelength: Gaussian background noise plus the graybody
/// signal epsilon * B(lambda, T) at each emitter pixel. Deterministic for a
/// given seed; each band uses an independent noise stream.
pub fn synthetic_bands(scene: &SyntheticScene, wavelengths: &[f64], seed: u64) -> Vec<BandImage> {
    // Pixel grid anchored in the Bakken with ~375 m spacing.
    let geotransform = [-103.5, 0.005, 0.0, 48.5, 0.0, -0.005];
    wavelengths
        .iter()
        .enumerate()
        .map(|(b, &wl)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64 + 1);
            let noise = Normal::new(scene.background, scene.noise_sd).unwrap();
            let mut data: Vec<f64> = (0..scene.width * scene.height)
                .map(|_| noise.sample(&mut rng))
                .collect();
            for e in &scene.emitters {
                data[e.row * scene.width + e.col] +=
                    e.epsilon * planck_radiance(wl, e.temperature_k);
            }
            BandImage::new(
                format!("band-{b}"),
                wl,
                DEFAULT_PIXEL_AREA_M2,
                geotransform,
                scene.width,
                scene.height,
                data,
            )
            .expect("valid synthetic image")
        })
        .collect()
}
