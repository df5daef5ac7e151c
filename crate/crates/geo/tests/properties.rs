//! Randomized properties: index exactness against linear scan, metric
//! behavior of the great-circle distance, and reverse-geocode invariance
//! under input permutation.

use flaretk_geo::index::nearest_brute_force;
use flaretk_geo::{
    haversine, reverse_geocode, Datum, GeoPoint, GeoPolygon, PolygonKind, SpatialIndex, R_EARTH_M,
};
use proptest::prelude::*;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn pt(lat: f64, lon: f64) -> GeoPoint {
    GeoPoint::wgs84(lat, lon).unwrap()
}

#[test]
fn knn_matches_brute_force_over_200_random_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..200 {
        let n = rng.random_range(1..120);
        let wells: Vec<GeoPoint> = (0..n)
            .map(|_| {
                pt(
                    rng.random_range(45.0..49.5),
                    rng.random_range(-105.0..-96.5),
                )
            })
            .collect();
        let index = SpatialIndex::build(&wells).unwrap();
        for _ in 0..20 {
            let q = pt(
                rng.random_range(45.0..49.5),
                rng.random_range(-105.0..-96.5),
            );
            let (id_a, d_a) = index.nearest(&q, R_EARTH_M);
            let (id_b, d_b) = nearest_brute_force(&wells, &q, R_EARTH_M);
            assert_eq!(id_a, id_b, "trial {trial}");
            assert!((d_a - d_b).abs() < 1e-6, "trial {trial}: {d_a} vs {d_b}");
        }
    }
}

#[test]
fn knn_exact_on_duplicated_points() {
    // Heavy duplication forces distance ties; the id tie-break must agree.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let base: Vec<GeoPoint> = (0..10)
        .map(|_| pt(rng.random_range(46.0..49.0), rng.random_range(-104.0..-100.0)))
        .collect();
    let wells: Vec<GeoPoint> = (0..80).map(|i| base[i % base.len()]).collect();
    let index = SpatialIndex::build(&wells).unwrap();
    for b in &base {
        let (id_a, _) = index.nearest(b, R_EARTH_M);
        let (id_b, _) = nearest_brute_force(&wells, b, R_EARTH_M);
        assert_eq!(id_a, id_b);
    }
}

proptest! {
    #[test]
    fn haversine_triangle_inequality(
        a in (-89.0..89.0f64, -179.0..179.0f64),
        b in (-89.0..89.0f64, -179.0..179.0f64),
        c in (-89.0..89.0f64, -179.0..179.0f64),
    ) {
        let (pa, pb, pc) = (pt(a.0, a.1), pt(b.0, b.1), pt(c.0, c.1));
        let ab = haversine(&pa, &pb, R_EARTH_M).unwrap();
        let bc = haversine(&pb, &pc, R_EARTH_M).unwrap();
        let ac = haversine(&pa, &pc, R_EARTH_M).unwrap();
        prop_assert!(ac <= ab + bc + 1e-6 * ac.max(1.0));
    }

    #[test]
    fn haversine_nonnegative_and_symmetric(
        a in (-90.0..90.0f64, -180.0..180.0f64),
        b in (-90.0..90.0f64, -180.0..180.0f64),
    ) {
        let (pa, pb) = (pt(a.0, a.1), pt(b.0, b.1));
        let ab = haversine(&pa, &pb, R_EARTH_M).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - haversine(&pb, &pa, R_EARTH_M).unwrap()).abs() < 1e-9);
    }
}

fn grid_layers() -> Vec<GeoPolygon> {
    let mut layers = Vec::new();
    for i in 0..4 {
        for j in 0..4 {
            let (x0, y0) = (-104.0 + i as f64, 46.0 + j as f64);
            layers.push(
                GeoPolygon::new(
                    format!("county-{i}-{j}"),
                    PolygonKind::County,
                    vec![
                        (x0, y0),
                        (x0 + 1.0, y0),
                        (x0 + 1.0, y0 + 1.0),
                        (x0, y0 + 1.0),
                        (x0, y0),
                    ],
                    vec![],
                    Datum::Wgs84,
                )
                .unwrap(),
            );
        }
    }
    layers
}

#[test]
fn reverse_geocode_permutation_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let layers = grid_layers();
    let points: Vec<GeoPoint> = (0..300)
        .map(|_| pt(rng.random_range(45.5..50.5), rng.random_range(-104.5..-99.5)))
        .collect();
    let baseline = reverse_geocode(&points, &layers);

    let mut shuffled_layers = layers.clone();
    shuffled_layers.shuffle(&mut rng);
    assert_eq!(reverse_geocode(&points, &shuffled_layers), baseline);

    let mut order: Vec<usize> = (0..points.len()).collect();
    order.shuffle(&mut rng);
    let shuffled_points: Vec<GeoPoint> = order.iter().map(|&i| points[i]).collect();
    let labels = reverse_geocode(&shuffled_points, &layers);
    for (k, &i) in order.iter().enumerate() {
        assert_eq!(labels[k], baseline[i]);
    }
}

#[test]
fn reverse_geocode_matches_per_polygon_scan() {
    // Oracle: test each point against every polygon independently.
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let layers = grid_layers();
    let points: Vec<GeoPoint> = (0..10_000)
        .map(|_| pt(rng.random_range(45.0..51.0), rng.random_range(-105.0..-99.0)))
        .collect();
    let labels = reverse_geocode(&points, &layers);
    for (p, got) in points.iter().zip(&labels) {
        let mut expect: Vec<String> = layers
            .iter()
            .filter(|poly| flaretk_geo::point_in_polygon(p, poly))
            .map(|poly| poly.id.clone())
            .collect();
        expect.sort();
        assert_eq!(got.counties, expect, "at ({}, {})", p.lat, p.lon);
    }
}
