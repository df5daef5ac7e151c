//! Single-band radiance grids with an affine pixel-to-coordinate transform,
//! loadable from a CSV grid plus a JSON sidecar.

use std::path::Path;

use serde::Deserialize;

use crate::Error;
use flaretk_geo::GeoPoint;

/// Row-major radiance grid, W m^-2 sr^-1 m^-1 per pixel. The geotransform
/// is GDAL-style: lon = a + b*col + c*row, lat = d + e*col + f*row,
/// evaluated at pixel centers.
#[derive(Debug, Clone)]
pub struct BandImage {
    pub band: String,
    pub wavelength_m: f64,
    pub pixel_area_m2: f64,
    pub geotransform: [f64; 6],
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

#[derive(Deserialize)]
struct Sidecar {
    band: String,
    wavelength_m: f64,
    pixel_area_m2: f64,
    geotransform: [f64; 6],
}

impl BandImage {
    pub fn new(
        band: impl Into<String>,
        wavelength_m: f64,
        pixel_area_m2: f64,
        geotransform: [f64; 6],
        width: usize,
        height: usize,
        data: Vec<f64>,
    ) -> Result<Self, Error> {
        let band = band.into();
        let fail = |msg: &str| Error::InvalidImage {
            band: band.clone(),
            msg: msg.into(),
        };
        if wavelength_m <= 0.0 {
            return Err(fail("wavelength must be positive"));
        }
        if pixel_area_m2 <= 0.0 {
            return Err(fail("pixel area must be positive"));
        }
        if width == 0 || height == 0 || data.len() != width * height {
            return Err(fail(&format!(
                "grid shape {width}x{height} does not match {} values",
                data.len()
            )));
        }
        Ok(BandImage {
            band,
            wavelength_m,
            pixel_area_m2,
            geotransform,
            width,
            height,
            data,
        })
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    /// Geographic location of a pixel center, WGS84.
    pub fn pixel_center(&self, row: usize, col: usize) -> Result<GeoPoint, Error> {
        let [a, b, c, d, e, f] = self.geotransform;
        let (x, y) = (col as f64 + 0.5, row as f64 + 0.5);
        Ok(GeoPoint::wgs84(d + e * x + f * y, a + b * x + c * y)?)
    }

    /// Load a headerless CSV grid with its JSON sidecar
    /// `{band, wavelength_m, pixel_area_m2, geotransform: [a,b,c,d,e,f]}`.
    pub fn from_csv(grid_path: &Path, sidecar_path: &Path) -> Result<Self, Error> {
        let meta: Sidecar = serde_json::from_str(&std::fs::read_to_string(sidecar_path)?)
            .map_err(|e| Error::Parse(format!("{}: {e}", sidecar_path.display())))?;
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_path(grid_path)
            .map_err(|e| Error::Parse(format!("{}: {e}", grid_path.display())))?;
        let mut data = Vec::new();
        let mut width = 0usize;
        let mut height = 0usize;
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse(format!("row {}: {e}", i + 1)))?;
            if i == 0 {
                width = rec.len();
            } else if rec.len() != width {
                return Err(Error::Parse(format!(
                    "row {} has {} columns, expected {width}",
                    i + 1,
                    rec.len()
                )));
            }
            for (j, field) in rec.iter().enumerate() {
                data.push(field.trim().parse::<f64>().map_err(|e| {
                    Error::Parse(format!("row {} col {}: {e}", i + 1, j + 1))
                })?);
            }
            height = i + 1;
        }
        BandImage::new(
            meta.band,
            meta.wavelength_m,
            meta.pixel_area_m2,
            meta.geotransform,
            width,
            height,
            data,
        )
    }
}
