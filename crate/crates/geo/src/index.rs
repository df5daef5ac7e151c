//! Exact 1-nearest-neighbor index over the unit-sphere 3-D embedding.
//!
//! Chord distance is monotone in great-circle arc, so a kd-tree over the
//! embedded points returns the exact great-circle nearest neighbor. Ties on
//! distance break toward the smallest point id; the brute-force fallback
//! uses the same comparison so both always agree.

use crate::{Error, GeoPoint};

pub struct SpatialIndex {
    // Points permuted into kd-tree order; internal nodes split their slice
    // at the median on the axis of largest spread.
    pts: Vec<[f64; 3]>,
    ids: Vec<usize>,
    nodes: Vec<Node>,
    root: usize,
}

#[derive(Clone, Copy)]
struct Node {
    axis: usize,
    split: f64,
    // Leaf when left == usize::MAX; then [lo, hi) indexes pts directly.
    left: usize,
    right: usize,
    lo: usize,
    hi: usize,
}

const LEAF_SIZE: usize = 16;

impl SpatialIndex {
    pub fn build(points: &[GeoPoint]) -> Result<SpatialIndex, Error> {
        if points.is_empty() {
            return Err(Error::EmptyIndex);
        }
        let mut pts: Vec<[f64; 3]> = points.iter().map(GeoPoint::unit_vec).collect();
        let mut ids: Vec<usize> = (0..points.len()).collect();
        let mut nodes = Vec::new();
        let n = pts.len();
        let root = build_node(&mut pts, &mut ids, 0, n, &mut nodes);
        Ok(SpatialIndex {
            pts,
            ids,
            nodes,
            root,
        })
    }

    /// Exact nearest neighbor: (point id, great-circle distance in meters).
    pub fn nearest(&self, q: &GeoPoint, r_e: f64) -> (usize, f64) {
        let qv = q.unit_vec();
        let mut best = (f64::INFINITY, usize::MAX);
        self.search(self.root, &qv, &mut best);
        (best.1, chord2_to_arc(best.0, r_e))
    }

    fn search(&self, node: usize, q: &[f64; 3], best: &mut (f64, usize)) {
        let nd = self.nodes[node];
        if nd.left == usize::MAX {
            for i in nd.lo..nd.hi {
                let d2 = dist2(&self.pts[i], q);
                let id = self.ids[i];
                if d2 < best.0 || (d2 == best.0 && id < best.1) {
                    *best = (d2, id);
                }
            }
            return;
        }
        let delta = q[nd.axis] - nd.split;
        let (near, far) = if delta <= 0.0 {
            (nd.left, nd.right)
        } else {
            (nd.right, nd.left)
        };
        self.search(near, q, best);
        // Visit the far side on exact plane ties too, so id tie-breaks stay
        // exact.
        if delta * delta <= best.0 {
            self.search(far, q, best);
        }
    }
}

fn build_node(
    pts: &mut [[f64; 3]],
    ids: &mut [usize],
    base: usize,
    len: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    if len <= LEAF_SIZE {
        nodes.push(Node {
            axis: 0,
            split: 0.0,
            left: usize::MAX,
            right: usize::MAX,
            lo: base,
            hi: base + len,
        });
        return nodes.len() - 1;
    }
    let slice = &pts[base..base + len];
    let mut axis = 0;
    let mut best_spread = -1.0;
    for a in 0..3 {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in slice {
            lo = lo.min(p[a]);
            hi = hi.max(p[a]);
        }
        if hi - lo > best_spread {
            best_spread = hi - lo;
            axis = a;
        }
    }
    let mid = len / 2;
    // Co-sort coordinates and ids by the chosen axis around the median.
    let mut order: Vec<usize> = (0..len).collect();
    order.sort_unstable_by(|&i, &j| {
        pts[base + i][axis]
            .total_cmp(&pts[base + j][axis])
            .then(ids[base + i].cmp(&ids[base + j]))
    });
    let new_pts: Vec<[f64; 3]> = order.iter().map(|&i| pts[base + i]).collect();
    let new_ids: Vec<usize> = order.iter().map(|&i| ids[base + i]).collect();
    pts[base..base + len].copy_from_slice(&new_pts);
    ids[base..base + len].copy_from_slice(&new_ids);
    let split = pts[base + mid][axis];
    let left = build_node(pts, ids, base, mid, nodes);
    let right = build_node(pts, ids, base + mid, len - mid, nodes);
    nodes.push(Node {
        axis,
        split,
        left,
        right,
        lo: base,
        hi: base + len,
    });
    nodes.len() - 1
}

fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

fn chord2_to_arc(d2: f64, r_e: f64) -> f64 {
    let half = (d2.sqrt() / 2.0).min(1.0);
    2.0 * r_e * half.asin()
}

/// Linear-scan oracle with the identical comparison rule.
pub fn nearest_brute_force(points: &[GeoPoint], q: &GeoPoint, r_e: f64) -> (usize, f64) {
    let qv = q.unit_vec();
    let mut best = (f64::INFINITY, usize::MAX);
    for (id, p) in points.iter().enumerate() {
        let d2 = dist2(&p.unit_vec(), &qv);
        if d2 < best.0 || (d2 == best.0 && id < best.1) {
            best = (d2, id);
        }
    }
    (best.1, chord2_to_arc(best.0, r_e))
}
