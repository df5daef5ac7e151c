//! Datum-tagged polygons, inclusive point-in-polygon, and reverse geocoding.

use serde::{Deserialize, Serialize};

use crate::{nad27_to_wgs84, Datum, Error, GeoPoint};

/// Perpendicular on-edge tolerance in degrees.
pub const EDGE_TOL_DEG: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PolygonKind {
    County,
    Oilfield,
    TrsSection,
}

impl PolygonKind {
    pub fn parse(s: &str) -> Option<PolygonKind> {
        match s {
            "county" => Some(PolygonKind::County),
            "oilfield" => Some(PolygonKind::Oilfield),
            "trs-section" => Some(PolygonKind::TrsSection),
            _ => None,
        }
    }
}

/// Rings are (lon, lat) sequences, closed (first vertex repeated last).
#[derive(Debug, Clone, PartialEq)]
pub struct GeoPolygon {
    pub id: String,
    pub kind: PolygonKind,
    pub outer: Vec<(f64, f64)>,
    pub holes: Vec<Vec<(f64, f64)>>,
    pub datum: Datum,
    bbox: (f64, f64, f64, f64),
}

impl GeoPolygon {
    pub fn new(
        id: impl Into<String>,
        kind: PolygonKind,
        outer: Vec<(f64, f64)>,
        holes: Vec<Vec<(f64, f64)>>,
        datum: Datum,
    ) -> Result<Self, Error> {
        let id = id.into();
        for ring in std::iter::once(&outer).chain(&holes) {
            if ring.len() < 4 {
                return Err(Error::InvalidPolygon {
                    id,
                    msg: format!("ring has {} vertices, need at least 4", ring.len()),
                });
            }
            if ring.first() != ring.last() {
                return Err(Error::InvalidPolygon {
                    id,
                    msg: "ring is not closed (first vertex != last)".into(),
                });
            }
        }
        let bbox = bbox_of(&outer);
        Ok(GeoPolygon {
            id,
            kind,
            outer,
            holes,
            datum,
            bbox,
        })
    }

    /// Normalize vertex coordinates to WGS84; identity if already there.
    pub fn to_wgs84(&self) -> GeoPolygon {
        if self.datum == Datum::Wgs84 {
            return self.clone();
        }
        let conv = |ring: &Vec<(f64, f64)>| {
            ring.iter()
                .map(|&(lon, lat)| {
                    let p = GeoPoint {
                        lat,
                        lon,
                        datum: Datum::Nad27,
                    };
                    let q = nad27_to_wgs84(&p);
                    (q.lon, q.lat)
                })
                .collect()
        };
        let outer: Vec<(f64, f64)> = conv(&self.outer);
        let bbox = bbox_of(&outer);
        GeoPolygon {
            id: self.id.clone(),
            kind: self.kind,
            outer,
            holes: self.holes.iter().map(conv).collect(),
            datum: Datum::Wgs84,
            bbox,
        }
    }

    fn bbox_contains(&self, lon: f64, lat: f64) -> bool {
        let (lo_x, lo_y, hi_x, hi_y) = self.bbox;
        lon >= lo_x - EDGE_TOL_DEG
            && lon <= hi_x + EDGE_TOL_DEG
            && lat >= lo_y - EDGE_TOL_DEG
            && lat <= hi_y + EDGE_TOL_DEG
    }
}

fn bbox_of(ring: &[(f64, f64)]) -> (f64, f64, f64, f64) {
    let mut b = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &(x, y) in ring {
        b.0 = b.0.min(x);
        b.1 = b.1.min(y);
        b.2 = b.2.max(x);
        b.3 = b.3.max(y);
    }
    b
}

fn on_segment(px: f64, py: f64, a: (f64, f64), b: (f64, f64)) -> bool {
    let (abx, aby) = (b.0 - a.0, b.1 - a.1);
    let (apx, apy) = (px - a.0, py - a.1);
    let len = (abx * abx + aby * aby).sqrt();
    if len == 0.0 {
        return apx.abs() <= EDGE_TOL_DEG && apy.abs() <= EDGE_TOL_DEG;
    }
    let cross = abx * apy - aby * apx;
    if cross.abs() > EDGE_TOL_DEG * len {
        return false;
    }
    let dot = apx * abx + apy * aby;
    dot >= -EDGE_TOL_DEG * len && dot <= len * len + EDGE_TOL_DEG * len
}

/// Even-odd ray crossing; boundary handled separately by the caller.
fn ring_interior(ring: &[(f64, f64)], px: f64, py: f64) -> bool {
    let mut inside = false;
    for w in ring.windows(2) {
        let (a, b) = (w[0], w[1]);
        if (a.1 > py) != (b.1 > py) {
            let x_int = a.0 + (py - a.1) / (b.1 - a.1) * (b.0 - a.0);
            if px < x_int {
                inside = !inside;
            }
        }
    }
    inside
}

fn ring_boundary(ring: &[(f64, f64)], px: f64, py: f64) -> bool {
    ring.windows(2).any(|w| on_segment(px, py, w[0], w[1]))
}

/// Inclusive containment: interior and boundary points both count, points
/// strictly inside a hole do not. The caller is responsible for datum
/// normalization (reverse_geocode does it for you).
pub fn point_in_polygon(p: &GeoPoint, poly: &GeoPolygon) -> bool {
    let (px, py) = (p.lon, p.lat);
    if !poly.bbox_contains(px, py) {
        return false;
    }
    if ring_boundary(&poly.outer, px, py)
        || poly.holes.iter().any(|h| ring_boundary(h, px, py))
    {
        return true;
    }
    ring_interior(&poly.outer, px, py) && !poly.holes.iter().any(|h| ring_interior(h, px, py))
}

/// All containing polygons per point, grouped by layer kind and sorted by
/// polygon id so the labeling is independent of input order. `county()` and
/// `oilfield()` take the first id as the canonical single label.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PointLabels {
    pub counties: Vec<String>,
    pub oilfields: Vec<String>,
    pub sections: Vec<String>,
}

impl PointLabels {
    pub fn county(&self) -> Option<&str> {
        self.counties.first().map(String::as_str)
    }
    pub fn oilfield(&self) -> Option<&str> {
        self.oilfields.first().map(String::as_str)
    }
    pub fn section(&self) -> Option<&str> {
        self.sections.first().map(String::as_str)
    }
}

/// Label every point with every containing layer polygon. Points and layers
/// are normalized to WGS84 internally; a point in no polygon gets empty
/// labels, which is an expected outcome rather than an error.
pub fn reverse_geocode(points: &[GeoPoint], layers: &[GeoPolygon]) -> Vec<PointLabels> {
    let layers: Vec<GeoPolygon> = layers.iter().map(GeoPolygon::to_wgs84).collect();
    points
        .iter()
        .map(|p| {
            let p = nad27_to_wgs84(p);
            let mut labels = PointLabels::default();
            for poly in &layers {
                if point_in_polygon(&p, poly) {
                    let bucket = match poly.kind {
                        PolygonKind::County => &mut labels.counties,
                        PolygonKind::Oilfield => &mut labels.oilfields,
                        PolygonKind::TrsSection => &mut labels.sections,
                    };
                    bucket.push(poly.id.clone());
                }
            }
            labels.counties.sort();
            labels.oilfields.sort();
            labels.sections.sort();
            labels
        })
        .collect()
}
