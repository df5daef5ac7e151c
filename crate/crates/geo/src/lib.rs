//! Geographic primitives for flare attribution: datum-aware points and
//! polygons, great-circle distance, NAD27 to WGS84 conversion, inclusive
//! point-in-polygon tests, polygon reverse geocoding, an exact 1-NN spatial
//! index, and the distance-gated flare-owner assignment rule.

pub mod assign;
pub mod geojson;
pub mod index;
pub mod polygon;

use serde::{Deserialize, Serialize};

/// Mean-Earth radius in meters used for all great-circle arithmetic.
pub const R_EARTH_M: f64 = 6_371_000.0;

/// CONUS-standard 3-parameter datum shift from NAD27 to WGS84, meters.
pub const NAD27_SHIFT_M: [f64; 3] = [-8.0, 160.0, 176.0];

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("coordinate out of range: lat {lat}, lon {lon}")]
    InvalidCoordinate { lat: f64, lon: f64 },
    #[error("datum mismatch: {0:?} vs {1:?}")]
    DatumMismatch(Datum, Datum),
    #[error("invalid polygon {id}: {msg}")]
    InvalidPolygon { id: String, msg: String },
    #[error("spatial index requires a non-empty point set")]
    EmptyIndex,
    #[error("geojson: {0}")]
    Parse(String),
    #[error("{0}")]
    Validation(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Datum {
    Wgs84,
    Nad27,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
    pub datum: Datum,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64, datum: Datum) -> Result<Self, Error> {
        if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
            return Err(Error::InvalidCoordinate { lat, lon });
        }
        Ok(GeoPoint { lat, lon, datum })
    }

    pub fn wgs84(lat: f64, lon: f64) -> Result<Self, Error> {
        GeoPoint::new(lat, lon, Datum::Wgs84)
    }

    /// Unit-sphere embedding; chord length is monotone in arc length, so
    /// nearest-neighbor order is preserved exactly.
    pub fn unit_vec(&self) -> [f64; 3] {
        let (lat, lon) = (self.lat.to_radians(), self.lon.to_radians());
        [lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin()]
    }
}

/// Great-circle distance in meters. Both points must share a datum.
pub fn haversine(a: &GeoPoint, b: &GeoPoint, r_e: f64) -> Result<f64, Error> {
    if a.datum != b.datum {
        return Err(Error::DatumMismatch(a.datum, b.datum));
    }
    let (la, lb) = (a.lat.to_radians(), b.lat.to_radians());
    let dlat = lb - la;
    let dlon = (b.lon - a.lon).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + la.cos() * lb.cos() * (dlon / 2.0).sin().powi(2);
    Ok(2.0 * r_e * h.sqrt().min(1.0).asin())
}

// Ellipsoid constants: Clarke 1866 (NAD27 source) and WGS84.
const CLARKE_A: f64 = 6_378_206.4;
const CLARKE_F: f64 = 1.0 / 294.978_698_2;

/// Abridged Molodensky 3-parameter shift: translation terms only, evaluated
/// on the source ellipsoid's curvature radii.
pub fn datum_shift(p: &GeoPoint, shifts: [f64; 3], target: Datum) -> GeoPoint {
    let (lat, lon) = (p.lat.to_radians(), p.lon.to_radians());
    let (sin_lat, cos_lat) = lat.sin_cos();
    let (sin_lon, cos_lon) = lon.sin_cos();
    let e2 = CLARKE_F * (2.0 - CLARKE_F);
    let w = (1.0 - e2 * sin_lat * sin_lat).sqrt();
    let rho = CLARKE_A * (1.0 - e2) / (w * w * w);
    let nu = CLARKE_A / w;
    let [dx, dy, dz] = shifts;
    let dlat = (-dx * sin_lat * cos_lon - dy * sin_lat * sin_lon + dz * cos_lat) / rho;
    let dlon = (-dx * sin_lon + dy * cos_lon) / (nu * cos_lat.max(1e-12));
    GeoPoint {
        lat: (lat + dlat).to_degrees(),
        lon: (lon + dlon).to_degrees(),
        datum: target,
    }
}

/// NAD27 to WGS84 with the default CONUS shift; identity on WGS84 input.
pub fn nad27_to_wgs84(p: &GeoPoint) -> GeoPoint {
    nad27_to_wgs84_with(p, NAD27_SHIFT_M)
}

pub fn nad27_to_wgs84_with(p: &GeoPoint, shifts: [f64; 3]) -> GeoPoint {
    match p.datum {
        Datum::Wgs84 => *p,
        Datum::Nad27 => datum_shift(p, shifts, Datum::Wgs84),
    }
}

pub use assign::{assign_flare_owners, Decision, Detection, OwnerAssignment, Well};
pub use geojson::parse_layers;
pub use index::SpatialIndex;
pub use polygon::{point_in_polygon, reverse_geocode, GeoPolygon, PointLabels, PolygonKind};
