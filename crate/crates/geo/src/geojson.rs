//! Minimal GeoJSON FeatureCollection reader for polygon layers.
//!
//! Supported subset: FeatureCollection of Polygon / MultiPolygon features,
//! an optional top-level `datum` foreign member ("WGS84" default, "NAD27"),
//! feature ids from `feature.id` or `properties.id`, and layer kind from
//! `properties.kind` or a caller default.

use serde_json::Value;

use crate::polygon::{GeoPolygon, PolygonKind};
use crate::{Datum, Error};

fn ring_coords(v: &Value, id: &str) -> Result<Vec<(f64, f64)>, Error> {
    v.as_array()
        .ok_or_else(|| Error::Parse(format!("feature {id}: ring is not an array")))?
        .iter()
        .map(|pos| {
            let c = pos
                .as_array()
                .filter(|c| c.len() >= 2)
                .ok_or_else(|| Error::Parse(format!("feature {id}: bad position")))?;
            Ok((
                c[0].as_f64()
                    .ok_or_else(|| Error::Parse(format!("feature {id}: non-numeric lon")))?,
                c[1].as_f64()
                    .ok_or_else(|| Error::Parse(format!("feature {id}: non-numeric lat")))?,
            ))
        })
        .collect()
}

fn polygon_from_rings(
    rings: &Value,
    id: &str,
    kind: PolygonKind,
    datum: Datum,
) -> Result<GeoPolygon, Error> {
    let rings = rings
        .as_array()
        .ok_or_else(|| Error::Parse(format!("feature {id}: coordinates not an array")))?;
    if rings.is_empty() {
        return Err(Error::Parse(format!("feature {id}: no rings")));
    }
    let outer = ring_coords(&rings[0], id)?;
    let holes = rings[1..]
        .iter()
        .map(|r| ring_coords(r, id))
        .collect::<Result<Vec<_>, _>>()?;
    GeoPolygon::new(id, kind, outer, holes, datum)
}

/// Parse every polygon in a FeatureCollection. MultiPolygon features expand
/// to one polygon per part with `#part` suffixed ids.
pub fn parse_layers(text: &str, default_kind: PolygonKind) -> Result<Vec<GeoPolygon>, Error> {
    let root: Value =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("invalid json: {e}")))?;
    if root["type"].as_str() != Some("FeatureCollection") {
        return Err(Error::Parse("expected a FeatureCollection".into()));
    }
    let datum = match root.get("datum").and_then(Value::as_str) {
        None | Some("WGS84") => Datum::Wgs84,
        Some("NAD27") => Datum::Nad27,
        Some(other) => return Err(Error::Parse(format!("unknown datum {other}"))),
    };
    let features = root["features"]
        .as_array()
        .ok_or_else(|| Error::Parse("missing features array".into()))?;
    let mut out = Vec::new();
    for (i, feat) in features.iter().enumerate() {
        let props = &feat["properties"];
        let id = feat["id"]
            .as_str()
            .or_else(|| props["id"].as_str())
            .map(String::from)
            .unwrap_or_else(|| format!("feature-{i}"));
        let kind = props["kind"]
            .as_str()
            .and_then(PolygonKind::parse)
            .unwrap_or(default_kind);
        let geom = &feat["geometry"];
        match geom["type"].as_str() {
            Some("Polygon") => {
                out.push(polygon_from_rings(&geom["coordinates"], &id, kind, datum)?)
            }
            Some("MultiPolygon") => {
                let parts = geom["coordinates"]
                    .as_array()
                    .ok_or_else(|| Error::Parse(format!("feature {id}: bad MultiPolygon")))?;
                for (j, part) in parts.iter().enumerate() {
                    out.push(polygon_from_rings(part, &format!("{id}#{j}"), kind, datum)?);
                }
            }
            other => {
                return Err(Error::Parse(format!(
                    "feature {id}: unsupported geometry {other:?}"
                )))
            }
        }
    }
    Ok(out)
}
