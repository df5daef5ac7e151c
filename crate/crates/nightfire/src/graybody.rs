//! Planck radiance, graybody temperature/emission fitting, and the
//! Stefan-Boltzmann radiant-heat law.

use flaretk_geo::GeoPoint;

use crate::Error;

// SI constants.
const PLANCK_H: f64 = 6.626_070_15e-34;
const LIGHT_C: f64 = 2.997_924_58e8;
const BOLTZMANN_K: f64 = 1.380_649e-23;
/// Stefan-Boltzmann constant, W m^-2 K^-4.
pub const SIGMA_SB: f64 = 5.670_374_419e-8;

const T_GRID_LO: f64 = 600.0;
const T_GRID_HI: f64 = 3000.0;
const T_GRID_STEP: f64 = 10.0;
const T_REFINE_TOL: f64 = 0.1;

/// Spectral radiance B(lambda, T) in W m^-2 sr^-1 m^-1.
pub fn planck_radiance(wavelength_m: f64, temperature_k: f64) -> f64 {
    assert!(wavelength_m > 0.0 && temperature_k > 0.0);
    let l5 = wavelength_m.powi(5);
    let x = PLANCK_H * LIGHT_C / (wavelength_m * BOLTZMANN_K * temperature_k);
    2.0 * PLANCK_H * LIGHT_C * LIGHT_C / (l5 * x.exp_m1())
}

/// Least-squares emission scale at fixed T, and the resulting residual.
fn eps_and_sse(radiances: &[f64], wavelengths: &[f64], t: f64) -> (f64, f64) {
    let b: Vec<f64> = wavelengths.iter().map(|&l| planck_radiance(l, t)).collect();
    let num: f64 = radiances.iter().zip(&b).map(|(r, bb)| r * bb).sum();
    let den: f64 = b.iter().map(|bb| bb * bb).sum();
    let eps = num / den;
    let sse = radiances
        .iter()
        .zip(&b)
        .map(|(r, bb)| (r - eps * bb).powi(2))
        .sum();
    (eps, sse)
}

/// Fit (T, epsilon) minimizing the squared radiance residual: coarse grid
/// 600-3000 K in 10 K steps with the closed-form epsilon at each T, then
/// golden-section refinement to below 0.1 K. Epsilon is clamped into (0, 1].
pub fn fit_graybody(radiances: &[f64], wavelengths: &[f64]) -> Result<(f64, f64), Error> {
    if radiances.len() < 2 || radiances.len() != wavelengths.len() {
        return Err(Error::Fit(format!(
            "need matching radiances and wavelengths for at least 2 bands, got {} and {}",
            radiances.len(),
            wavelengths.len()
        )));
    }
    if radiances.iter().all(|&r| r <= 0.0) {
        return Err(Error::Fit("all radiances are zero: no emitter".into()));
    }
    let mut best = (f64::INFINITY, T_GRID_LO);
    let mut t = T_GRID_LO;
    while t <= T_GRID_HI {
        let (_, sse) = eps_and_sse(radiances, wavelengths, t);
        if sse < best.0 {
            best = (sse, t);
        }
        t += T_GRID_STEP;
    }
    let (mut lo, mut hi) = (
        (best.1 - T_GRID_STEP).max(T_GRID_LO),
        (best.1 + T_GRID_STEP).min(T_GRID_HI),
    );
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = eps_and_sse(radiances, wavelengths, x1).1;
    let mut f2 = eps_and_sse(radiances, wavelengths, x2).1;
    while hi - lo > T_REFINE_TOL {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = eps_and_sse(radiances, wavelengths, x1).1;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = eps_and_sse(radiances, wavelengths, x2).1;
        }
    }
    let t_hat = 0.5 * (lo + hi);
    let (eps, _) = eps_and_sse(radiances, wavelengths, t_hat);
    if eps <= 0.0 {
        return Err(Error::Fit("fitted emission scale is non-positive".into()));
    }
    Ok((t_hat, eps.min(1.0)))
}

/// Effective emitting area S = epsilon * A.
pub fn source_area(epsilon: f64, pixel_area_m2: f64) -> f64 {
    epsilon * pixel_area_m2
}

/// Stefan-Boltzmann radiant heat in megawatts.
pub fn radiant_heat(temperature_k: f64, area_m2: f64) -> f64 {
    SIGMA_SB * temperature_k.powi(4) * area_m2 / 1e6
}

#[derive(Debug, Clone)]
pub struct HotSource {
    pub location: GeoPoint,
    pub temperature_k: f64,
    pub epsilon: f64,
    pub area_m2: f64,
    pub radiant_heat_mw: f64,
}

impl HotSource {
    pub fn new(location: GeoPoint, temperature_k: f64, epsilon: f64, pixel_area_m2: f64) -> Self {
        let area_m2 = source_area(epsilon, pixel_area_m2);
        HotSource {
            location,
            temperature_k,
            epsilon,
            area_m2,
            radiant_heat_mw: radiant_heat(temperature_k, area_m2),
        }
    }
}
