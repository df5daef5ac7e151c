//! Distance-gated flare-owner assignment: each detection takes the nearest
//! well's operator when close enough, with a mid-range land-survey section
//! agreement test between the secure and cutoff radii.

use serde::Serialize;

use crate::index::SpatialIndex;
use crate::polygon::{point_in_polygon, GeoPolygon, PolygonKind};
use crate::{nad27_to_wgs84, Error, GeoPoint};

#[derive(Debug, Clone)]
pub struct Detection {
    pub id: String,
    pub point: GeoPoint,
}

#[derive(Debug, Clone)]
pub struct Well {
    pub operator: String,
    pub point: GeoPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Decision {
    KeptSecure,
    KeptSectionMatch,
    DroppedFar,
    DroppedSectionMismatch,
}

impl Decision {
    pub fn as_str(&self) -> &'static str {
        match self {
            Decision::KeptSecure => "kept_secure",
            Decision::KeptSectionMatch => "kept_section_match",
            Decision::DroppedFar => "dropped_far",
            Decision::DroppedSectionMismatch => "dropped_section_mismatch",
        }
    }

    pub fn kept(&self) -> bool {
        matches!(self, Decision::KeptSecure | Decision::KeptSectionMatch)
    }
}

#[derive(Debug, Clone)]
pub struct OwnerAssignment {
    pub detection_id: String,
    pub operator: Option<String>,
    pub distance_m: f64,
    pub decision: Decision,
}

/// First containing section polygon by id order, or none.
fn section_of<'a>(p: &GeoPoint, sections: &'a [GeoPolygon]) -> Option<&'a str> {
    sections
        .iter()
        .filter(|s| s.kind == PolygonKind::TrsSection && point_in_polygon(p, s))
        .map(|s| s.id.as_str())
        .min()
}

/// Assign each detection the operator of its nearest well for one month of
/// data. Distance below `d_secure` keeps unconditionally; above `d_cutoff`
/// drops; in between the detection and well must share a land-survey section
/// polygon. With no wells every detection drops with an infinite distance.
pub fn assign_flare_owners(
    detections: &[Detection],
    wells: &[Well],
    sections: &[GeoPolygon],
    d_secure: f64,
    d_cutoff: f64,
    r_e: f64,
) -> Result<Vec<OwnerAssignment>, Error> {
    if d_secure >= d_cutoff {
        return Err(Error::Validation(format!(
            "d_secure {d_secure} must be below d_cutoff {d_cutoff}"
        )));
    }
    if wells.is_empty() {
        return Ok(detections
            .iter()
            .map(|d| OwnerAssignment {
                detection_id: d.id.clone(),
                operator: None,
                distance_m: f64::INFINITY,
                decision: Decision::DroppedFar,
            })
            .collect());
    }
    let sections: Vec<GeoPolygon> = sections.iter().map(GeoPolygon::to_wgs84).collect();
    let well_pts: Vec<GeoPoint> = wells.iter().map(|w| nad27_to_wgs84(&w.point)).collect();
    let index = SpatialIndex::build(&well_pts)?;
    Ok(detections
        .iter()
        .map(|det| {
            let p = nad27_to_wgs84(&det.point);
            let (well_id, d) = index.nearest(&p, r_e);
            let well = &wells[well_id];
            let decision = if d < d_secure {
                Decision::KeptSecure
            } else if d > d_cutoff {
                Decision::DroppedFar
            } else {
                match (section_of(&p, &sections), section_of(&well_pts[well_id], &sections)) {
                    (Some(a), Some(b)) if a == b => Decision::KeptSectionMatch,
                    _ => Decision::DroppedSectionMismatch,
                }
            };
            OwnerAssignment {
                detection_id: det.id.clone(),
                operator: decision.kept().then(|| well.operator.clone()),
                distance_m: d,
                decision,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{Datum, R_EARTH_M};

    fn pt(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint::wgs84(lat, lon).unwrap()
    }

    /// Point `d_m` meters north of `base`; pure latitude offsets make the
    /// great-circle distance exact.
    fn north_of(base: &GeoPoint, d_m: f64) -> GeoPoint {
        pt(base.lat + (d_m / R_EARTH_M).to_degrees(), base.lon)
    }

    fn section(id: &str, lon0: f64, lat0: f64, dlon: f64, dlat: f64) -> GeoPolygon {
        GeoPolygon::new(
            id,
            PolygonKind::TrsSection,
            vec![
                (lon0, lat0),
                (lon0 + dlon, lat0),
                (lon0 + dlon, lat0 + dlat),
                (lon0, lat0 + dlat),
                (lon0, lat0),
            ],
            vec![],
            Datum::Wgs84,
        )
        .unwrap()
    }

    fn run_case(d_m: f64, same_section: bool) -> OwnerAssignment {
        let well = Well {
            operator: "op-a".into(),
            point: pt(48.0, -103.0),
        };
        let det = Detection {
            id: "det-0".into(),
            point: north_of(&well.point, d_m),
        };
        // A tall section holds both points; splitting at the well's latitude
        // plus 1 m separates them.
        let sections = if same_section {
            vec![section("s1", -103.5, 47.9, 1.0, 0.2)]
        } else {
            let cut = 48.0 + (1.0 / R_EARTH_M).to_degrees();
            vec![
                section("s1", -103.5, 47.9, 1.0, cut - 47.9),
                section("s2", -103.5, cut, 1.0, 0.2),
            ]
        };
        let out =
            assign_flare_owners(&[det], &[well], &sections, 300.0, 800.0, R_EARTH_M).unwrap();
        out.into_iter().next().unwrap()
    }

    #[test]
    fn decision_table_matches_thresholds() {
        // Strict inequalities at both thresholds: 300 and 800 take the
        // section branch.
        let cases = [
            (100.0, true, Decision::KeptSecure),
            (100.0, false, Decision::KeptSecure),
            (299.0, false, Decision::KeptSecure),
            (300.0, true, Decision::KeptSectionMatch),
            (300.0, false, Decision::DroppedSectionMismatch),
            (500.0, true, Decision::KeptSectionMatch),
            (500.0, false, Decision::DroppedSectionMismatch),
            (800.0, true, Decision::KeptSectionMatch),
            (800.0, false, Decision::DroppedSectionMismatch),
            (801.0, true, Decision::DroppedFar),
            (1000.0, true, Decision::DroppedFar),
            (1000.0, false, Decision::DroppedFar),
        ];
        for (d, same, expect) in cases {
            let a = run_case(d, same);
            assert_eq!(a.decision, expect, "d={d} same_section={same}");
            assert!((a.distance_m - d).abs() < 0.01, "d={d} got {}", a.distance_m);
            assert_eq!(a.operator.is_some(), expect.kept());
            if a.decision.kept() {
                assert!(a.distance_m <= 800.0);
            }
        }
    }

    #[test]
    fn no_wells_drops_everything_with_infinite_distance() {
        let det = Detection {
            id: "d".into(),
            point: pt(48.0, -103.0),
        };
        let out = assign_flare_owners(&[det], &[], &[], 300.0, 800.0, R_EARTH_M).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].decision, Decision::DroppedFar);
        assert!(out[0].distance_m.is_infinite());
        assert!(out[0].operator.is_none());
    }

    #[test]
    fn invalid_thresholds_rejected() {
        assert!(assign_flare_owners(&[], &[], &[], 800.0, 300.0, R_EARTH_M).is_err());
    }

    #[test]
    fn output_cardinality_matches_detections() {
        let wells: Vec<Well> = (0..5)
            .map(|i| Well {
                operator: format!("op-{i}"),
                point: pt(47.0 + 0.1 * i as f64, -103.0),
            })
            .collect();
        let dets: Vec<Detection> = (0..7)
            .map(|i| Detection {
                id: format!("det-{i}"),
                point: pt(47.0 + 0.07 * i as f64, -103.001),
            })
            .collect();
        let out = assign_flare_owners(&dets, &wells, &[], 300.0, 800.0, R_EARTH_M).unwrap();
        assert_eq!(out.len(), dets.len());
    }

    #[test]
    fn point_outside_all_sections_is_a_mismatch() {
        let a = run_case(500.0, true);
        assert_eq!(a.decision, Decision::KeptSectionMatch);
        let well = Well {
            operator: "op-a".into(),
            point: pt(48.0, -103.0),
        };
        let det = Detection {
            id: "det-0".into(),
            point: north_of(&well.point, 500.0),
        };
        let out = assign_flare_owners(&[det], &[well], &[], 300.0, 800.0, R_EARTH_M).unwrap();
        assert_eq!(out[0].decision, Decision::DroppedSectionMismatch);
    }
}
