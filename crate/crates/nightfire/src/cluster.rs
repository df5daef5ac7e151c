//! Density-based clustering of detections under great-circle distance, with
//! a cluster-size histogram.

use std::collections::BTreeMap;

use flaretk_geo::{GeoPoint, R_EARTH_M};

/// Labels parallel to the input points: NOISE or a cluster id from 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterResult {
    pub labels: Vec<i32>,
    /// cluster size -> number of clusters of that size.
    pub size_histogram: BTreeMap<usize, usize>,
}

pub const NOISE: i32 = -1;
const UNVISITED: i32 = -2;

/// DBSCAN under the haversine metric. Points within `eps_m` of a core point
/// (one with at least `min_pts` neighbors, itself included) join its
/// cluster; everything else is noise.
pub fn cluster_detections(points: &[GeoPoint], eps_m: f64, min_pts: usize) -> ClusterResult {
    assert!(eps_m > 0.0 && min_pts >= 1);
    let n = points.len();
    // Pairwise neighborhoods: desk-scale inputs, quadratic scan is fine.
    let vecs: Vec<[f64; 3]> = points.iter().map(GeoPoint::unit_vec).collect();
    let chord = 2.0 * (eps_m / (2.0 * R_EARTH_M)).sin();
    let eps2 = chord * chord;
    let neighbors = |i: usize| -> Vec<usize> {
        (0..n)
            .filter(|&j| {
                let d2 = (vecs[i][0] - vecs[j][0]).powi(2)
                    + (vecs[i][1] - vecs[j][1]).powi(2)
                    + (vecs[i][2] - vecs[j][2]).powi(2);
                d2 <= eps2
            })
            .collect()
    };
    let mut labels = vec![UNVISITED; n];
    let mut next = 0i32;
    for i in 0..n {
        if labels[i] != UNVISITED {
            continue;
        }
        let nbrs = neighbors(i);
        if nbrs.len() < min_pts {
            labels[i] = NOISE;
            continue;
        }
        let cluster = next;
        next += 1;
        labels[i] = cluster;
        let mut queue = nbrs;
        let mut k = 0;
        while k < queue.len() {
            let j = queue[k];
            k += 1;
            if labels[j] == NOISE {
                labels[j] = cluster;
            }
            if labels[j] != UNVISITED {
                continue;
            }
            labels[j] = cluster;
            let jn = neighbors(j);
            if jn.len() >= min_pts {
                queue.extend(jn);
            }
        }
    }
    let mut sizes: BTreeMap<i32, usize> = BTreeMap::new();
    for &l in &labels {
        if l >= 0 {
            *sizes.entry(l).or_default() += 1;
        }
    }
    let mut size_histogram: BTreeMap<usize, usize> = BTreeMap::new();
    for (_, s) in sizes {
        *size_histogram.entry(s).or_default() += 1;
    }
    ClusterResult {
        labels,
        size_histogram,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn blob(rng: &mut ChaCha8Rng, lat: f64, lon: f64, spread_m: f64, n: usize) -> Vec<GeoPoint> {
        (0..n)
            .map(|_| {
                let dlat = (rng.random::<f64>() - 0.5) * 2.0 * spread_m / R_EARTH_M;
                let dlon = (rng.random::<f64>() - 0.5) * 2.0 * spread_m / R_EARTH_M;
                GeoPoint::wgs84(lat + dlat.to_degrees(), lon + dlon.to_degrees()).unwrap()
            })
            .collect()
    }

    #[test]
    fn two_tight_blobs_form_two_clusters() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut pts = blob(&mut rng, 48.0, -103.0, 50.0, 30);
        pts.extend(blob(&mut rng, 48.09, -103.0, 50.0, 25));
        let res = cluster_detections(&pts, 200.0, 3);
        let mut ids: Vec<i32> = res.labels.iter().copied().filter(|&l| l >= 0).collect();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), 2);
        assert!(res.labels.iter().all(|&l| l >= 0), "no noise expected");
        assert_eq!(res.size_histogram, BTreeMap::from([(30, 1), (25, 1)]));
    }

    #[test]
    fn isolated_points_are_noise() {
        let pts: Vec<GeoPoint> = (0..10)
            .map(|i| GeoPoint::wgs84(40.0 + i as f64, -100.0).unwrap())
            .collect();
        let res = cluster_detections(&pts, 200.0, 2);
        assert!(res.labels.iter().all(|&l| l == NOISE));
        assert!(res.size_histogram.is_empty());
    }

    #[test]
    fn single_large_blob_is_one_cluster_of_120() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pts = blob(&mut rng, 47.5, -102.5, 60.0, 120);
        let res = cluster_detections(&pts, 250.0, 4);
        assert_eq!(res.size_histogram, BTreeMap::from([(120, 1)]));
    }

    #[test]
    fn labels_invariant_under_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut pts = blob(&mut rng, 48.0, -103.0, 40.0, 20);
        pts.extend(blob(&mut rng, 47.0, -101.0, 40.0, 15));
        pts.push(GeoPoint::wgs84(44.0, -99.0).unwrap());
        let base = cluster_detections(&pts, 200.0, 3);

        let mut order: Vec<usize> = (0..pts.len()).collect();
        order.shuffle(&mut rng);
        let shuffled: Vec<GeoPoint> = order.iter().map(|&i| pts[i]).collect();
        let perm = cluster_detections(&shuffled, 200.0, 3);

        // Same partition up to label renaming.
        for a in 0..pts.len() {
            for b in 0..pts.len() {
                let together = base.labels[a] >= 0 && base.labels[a] == base.labels[b];
                let pa = order.iter().position(|&i| i == a).unwrap();
                let pb = order.iter().position(|&i| i == b).unwrap();
                let together_p = perm.labels[pa] >= 0 && perm.labels[pa] == perm.labels[pb];
                assert_eq!(together, together_p);
            }
        }
        assert_eq!(base.size_histogram, perm.size_histogram);
    }
}
