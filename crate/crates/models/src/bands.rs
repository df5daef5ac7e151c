//! Nested percentile bands over per-grid-point posterior samples, and their
//! CSV rendering.

use flaretk_inference::diagnostics::quantile_sorted;
use flaretk_inference::Error;

/// One band at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct BandRow {
    pub grid: f64,
    pub percentile_lo: f64,
    pub percentile_hi: f64,
    pub value_lo: f64,
    pub value_hi: f64,
}

/// Symmetric nested edges (1,99), (5,95), ..., (49,51).
pub fn default_band_edges() -> Vec<(f64, f64)> {
    let mut edges = vec![(1.0, 99.0)];
    let mut lo = 5.0;
    while lo <= 49.0 {
        edges.push((lo, 100.0 - lo));
        lo += 4.0;
    }
    edges
}

/// Percentile bands for each grid point. `samples[g]` are the posterior
/// samples at grid value `grid[g]`; each band's bounds come from the same
/// interpolated quantile function, so bands are nested by construction.
pub fn percentile_bands(
    grid: &[f64],
    samples: &[Vec<f64>],
    edges: &[(f64, f64)],
) -> Result<Vec<BandRow>, Error> {
    if grid.len() != samples.len() {
        return Err(Error::Validation(
            "grid and sample table lengths differ".into(),
        ));
    }
    for (lo, hi) in edges {
        if !(0.0..=100.0).contains(lo) || !(0.0..=100.0).contains(hi) || lo > hi {
            return Err(Error::Validation(format!(
                "invalid percentile edge ({lo}, {hi})"
            )));
        }
    }
    let mut rows = Vec::with_capacity(grid.len() * edges.len());
    for (g, draws) in grid.iter().zip(samples) {
        if draws.is_empty() {
            return Err(Error::Validation(format!(
                "no samples at grid point {g}"
            )));
        }
        let mut sorted = draws.clone();
        sorted.sort_by(f64::total_cmp);
        for &(lo, hi) in edges {
            rows.push(BandRow {
                grid: *g,
                percentile_lo: lo,
                percentile_hi: hi,
                value_lo: quantile_sorted(&sorted, lo / 100.0),
                value_hi: quantile_sorted(&sorted, hi / 100.0),
            });
        }
    }
    Ok(rows)
}

/// CSV with header `grid,percentile_lo,percentile_hi,value_lo,value_hi`.
pub fn band_csv(rows: &[BandRow]) -> String {
    let mut out = String::from("grid,percentile_lo,percentile_hi,value_lo,value_hi\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.grid, r.percentile_lo, r.percentile_hi, r.value_lo, r.value_hi
        ));
    }
    out
}
