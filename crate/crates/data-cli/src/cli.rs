//! Argument parsing and subcommand dispatch for the `flaretk` binary.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use flaretk_geo::assign::{assign_flare_owners, Detection, Well};
use flaretk_geo::geojson::parse_layers;
use flaretk_geo::polygon::PolygonKind;
use flaretk_geo::{reverse_geocode, GeoPoint, R_EARTH_M};
use flaretk_inference::diagnostics::{summarize, summary_csv};
use flaretk_inference::nuts::SamplerConfig;
use flaretk_inference::trace::Trace;
use flaretk_models::{
    band_csv, count_histogram_csv, default_band_edges, fit_county_hierarchical,
    fit_gmm, fit_gp_series, fit_negbin_counts, fit_state_linear, forecast_latent,
    latent_link_samples, percentile_bands, posterior_predictive, CountyMonthly,
    CountyRegistry, EntitySeries, GpKind, Parameterization, PredictiveKind, StateMonthly,
};
use flaretk_nightfire::{detection_csv, extract_hot_sources, Background, BandImage};

use crate::config::parse_config;
use crate::ingest::{
    grouped_rollup, parse_ndic_csv, parse_viirs_csv, state_rollup, viirs_monthly_bcm,
    FlareDetection, WellRecord,
};
use crate::month::{check_contiguous, MonthStamp};
use crate::stats::{correlation_matrix, exclude_zeros, log_magnitude, CorrMode};
use crate::trace_io::trace_from_json;
use crate::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "flaretk",
    about = "Batch analytics for monthly gas-flaring report and detection data",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
    /// Seed for every random quantity in the run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    chains: Option<usize>,
    #[arg(long, global = true)]
    warmup: Option<usize>,
    #[arg(long, global = true)]
    draws: Option<usize>,
    /// Output directory for all artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// key=value run configuration; flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse source CSVs and write derived monthly series and rollups.
    Ingest {
        #[arg(long)]
        viirs: Option<PathBuf>,
        #[arg(long)]
        ndic: Option<PathBuf>,
    },
    /// Label points with the polygon layers that contain them.
    Geocode {
        #[arg(long)]
        viirs: Option<PathBuf>,
        #[arg(long)]
        ndic: Option<PathBuf>,
        #[arg(long, required = true)]
        layers: Vec<PathBuf>,
    },
    /// Pairwise rank correlations of aligned monthly series.
    Correlate {
        /// Wide CSV: first column month, one series per remaining column.
        #[arg(long)]
        series: PathBuf,
        #[arg(long, default_value = "levels")]
        mode: String,
    },
    /// Sample a model posterior; writes trace JSON and a summary CSV.
    Fit {
        /// state | county | gp:<kind> | negbin | gmm
        model: String,
        #[arg(long)]
        data: PathBuf,
        /// Mixture component count (gmm only).
        #[arg(long)]
        k: Option<usize>,
        /// Centered hierarchy parameterization (county only).
        #[arg(long)]
        centered: bool,
    },
    /// Fit a time-series model and extrapolate the latent forward.
    Predict {
        /// gp:<kind>
        model: String,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 6)]
        horizon: usize,
    },
    /// Posterior predictive replication of the observed data.
    Ppc {
        /// state | negbin
        model: String,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 20)]
        datasets: usize,
    },
    /// Assign detections to well operators by distance gating.
    Attribute {
        #[arg(long)]
        detections: PathBuf,
        #[arg(long)]
        wells: PathBuf,
        /// Land-survey section polygons for the mid-range agreement test.
        #[arg(long)]
        sections: Option<PathBuf>,
        #[arg(long, default_value_t = 300.0)]
        d_secure: f64,
        #[arg(long, default_value_t = 800.0)]
        d_cutoff: f64,
    },
    /// Multi-band hot-source extraction from gridded radiance CSVs.
    Nightfire {
        /// GRID_CSV,SIDECAR_JSON; repeat for each band (at least two).
        #[arg(long = "band", required = true)]
        bands: Vec<String>,
        #[arg(long, default_value_t = 4.0)]
        threshold_sd: f64,
        /// Median/MAD background instead of mean/sd.
        #[arg(long)]
        robust: bool,
    },
    /// Recompute the summary CSV from a stored trace JSON.
    Summarize {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, default_value_t = 0.9)]
        prob: f64,
    },
}

/// Resolved run options plus the output directory.
struct Ctx {
    seed: u64,
    chains: usize,
    warmup: usize,
    draws: usize,
    out: PathBuf,
}

impl Ctx {
    fn resolve(cli: &Cli) -> Result<Ctx, CliError> {
        let file = match &cli.config {
            Some(p) => parse_config(&read(p)?)?,
            None => Default::default(),
        };
        let ctx = Ctx {
            seed: cli.seed.or(file.seed).unwrap_or(0),
            chains: cli.chains.or(file.chains).unwrap_or(4),
            warmup: cli.warmup.or(file.warmup).unwrap_or(1000),
            draws: cli.draws.or(file.draws).unwrap_or(1000),
            out: cli
                .out
                .clone()
                .or(file.out.map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("out")),
        };
        if ctx.chains < 2 {
            return Err(CliError::validation("need at least 2 chains"));
        }
        if ctx.draws == 0 {
            return Err(CliError::validation("need at least 1 draw per chain"));
        }
        std::fs::create_dir_all(&ctx.out)?;
        Ok(ctx)
    }

    fn sampler(&self) -> SamplerConfig {
        SamplerConfig {
            chains: self.chains,
            warmup_iters: self.warmup,
            draw_iters: self.draws,
            seed: self.seed,
            ..Default::default()
        }
    }

    fn write(&self, name: &str, contents: &str) -> Result<(), CliError> {
        std::fs::write(self.out.join(name), contents)?;
        Ok(())
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))
}

/// Entry point; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            eprint!("{e}");
            return 1;
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let ctx = Ctx::resolve(cli)?;
    match &cli.cmd {
        Command::Ingest { viirs, ndic } => ingest(&ctx, viirs.as_deref(), ndic.as_deref()),
        Command::Geocode { viirs, ndic, layers } => {
            geocode(&ctx, viirs.as_deref(), ndic.as_deref(), layers)
        }
        Command::Correlate { series, mode } => correlate(&ctx, series, mode),
        Command::Fit { model, data, k, centered } => {
            fit(&ctx, model, data, *k, *centered).map(|_| ())
        }
        Command::Predict { model, data, horizon } => predict(&ctx, model, data, *horizon),
        Command::Ppc { model, data, datasets } => ppc(&ctx, model, data, *datasets),
        Command::Attribute { detections, wells, sections, d_secure, d_cutoff } => {
            attribute(&ctx, detections, wells, sections.as_deref(), *d_secure, *d_cutoff)
        }
        Command::Nightfire { bands, threshold_sd, robust } => {
            nightfire(&ctx, bands, *threshold_sd, *robust)
        }
        Command::Summarize { trace, prob } => summarize_cmd(&ctx, trace, *prob),
    }
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

// ---------------------------------------------------------------- ingest

fn ingest(ctx: &Ctx, viirs: Option<&Path>, ndic: Option<&Path>) -> Result<(), CliError> {
    if viirs.is_none() && ndic.is_none() {
        return Err(CliError::validation("ingest needs --viirs and/or --ndic"));
    }
    let mut report = vec!["ingest report".to_string()];

    let dets: Option<Vec<FlareDetection>> = match viirs {
        Some(p) => Some(parse_viirs_csv(&read(p)?)?),
        None => None,
    };
    let wells: Option<Vec<WellRecord>> = match ndic {
        Some(p) => Some(parse_ndic_csv(&read(p)?)?),
        None => None,
    };

    let viirs_bcm = dets.as_ref().map(|d| viirs_monthly_bcm(d));
    let det_counts: Option<BTreeMap<MonthStamp, u64>> = dets.as_ref().map(|d| {
        let mut out = BTreeMap::new();
        for det in d {
            *out.entry(det.month).or_insert(0) += 1;
        }
        out
    });

    if let (Some(d), Some(vb), Some(dc)) = (&dets, &viirs_bcm, &det_counts) {
        report.push(format!("detection rows: {}", d.len()));
        let mut out = String::from("month,volume_bcm,detections\n");
        for (m, v) in vb {
            out.push_str(&format!("{m},{},{}\n", fmt(*v), dc[m]));
        }
        ctx.write("viirs_monthly.csv", &out)?;

        // Magnitudes of individual nonzero detected volumes.
        let vols: Vec<f64> = d.iter().map(|x| x.volume_bcm).collect();
        let (kept, excluded) = exclude_zeros(&vols);
        report.push(format!("zero-volume detections excluded from magnitudes: {excluded}"));
        let mags = log_magnitude(&kept)?;
        let mut out = String::from("magnitude\n");
        for m in &mags {
            out.push_str(&format!("{}\n", fmt(*m)));
        }
        ctx.write("magnitudes.csv", &out)?;
    }

    let roll = wells.as_ref().map(|w| state_rollup(w));
    if let (Some(w), Some(roll)) = (&wells, &roll) {
        report.push(format!("well rows: {}", w.len()));
        let mut out =
            String::from("month,oil_bbl,gas_mcf,flared_mcf,active_wells,flaring_wells,gor\n");
        for (m, r) in roll {
            out.push_str(&format!(
                "{m},{},{},{},{},{},{}\n",
                fmt(r.oil_bbl),
                fmt(r.gas_mcf),
                fmt(r.flared_mcf),
                r.active_wells,
                r.flaring_wells,
                r.gor().map(fmt).unwrap_or_default()
            ));
        }
        ctx.write("ndic_monthly.csv", &out)?;

        for (file, group) in [("county_rollup.csv", 0usize), ("oilfield_rollup.csv", 1)] {
            let grouped = grouped_rollup(w, |r| if group == 0 { &r.county } else { &r.oilfield });
            // A group flares nothing across every month: drop it before the
            // magnitude analyses downstream.
            let mut totals: BTreeMap<&str, f64> = BTreeMap::new();
            for ((g, _), r) in &grouped {
                *totals.entry(g).or_insert(0.0) += r.flared_mcf;
            }
            let zero: Vec<&str> =
                totals.iter().filter(|(_, &v)| v == 0.0).map(|(&g, _)| g).collect();
            if group == 1 {
                report.push(format!("zero-flaring oilfields excluded: {}", zero.len()));
            }
            let label = if group == 0 { "county" } else { "oilfield" };
            let mut out = format!(
                "{label},month,oil_bbl,gas_mcf,flared_mcf,active_wells,flaring_wells\n"
            );
            for ((g, m), r) in &grouped {
                if zero.contains(&g.as_str()) {
                    continue;
                }
                out.push_str(&format!(
                    "{g},{m},{},{},{},{},{}\n",
                    fmt(r.oil_bbl),
                    fmt(r.gas_mcf),
                    fmt(r.flared_mcf),
                    r.active_wells,
                    r.flaring_wells
                ));
            }
            ctx.write(file, &out)?;
        }
    }

    if let (Some(vb), Some(dc), Some(roll)) = (&viirs_bcm, &det_counts, &roll) {
        // Joined state series over months present in both streams.
        let months: Vec<MonthStamp> =
            vb.keys().filter(|m| roll.contains_key(m)).copied().collect();
        let dropped = vb.len() + roll.len() - 2 * months.len();
        report.push(format!("months joined: {}, dropped from join: {dropped}", months.len()));

        let mut out = String::from("month,viirs_bcm,ndic_bcm\n");
        for m in &months {
            out.push_str(&format!("{m},{},{}\n", fmt(vb[m]), fmt(roll[m].flared_bcm())));
        }
        ctx.write("state_series.csv", &out)?;

        let mut out = String::from(
            "month,flared_mcf,gas_mcf,oil_bbl,active_wells,flaring_wells,detections,viirs_bcm,ndic_bcm\n",
        );
        for m in &months {
            let r = &roll[m];
            out.push_str(&format!(
                "{m},{},{},{},{},{},{},{},{}\n",
                fmt(r.flared_mcf),
                fmt(r.gas_mcf),
                fmt(r.oil_bbl),
                r.active_wells,
                r.flaring_wells,
                dc[m],
                fmt(vb[m]),
                fmt(r.flared_bcm())
            ));
        }
        ctx.write("series.csv", &out)?;

        let mut out = String::from("month,viirs_bcm,ndic_bcm,oil_bbl,gas_mcf,gor\n");
        for m in &months {
            let r = &roll[m];
            out.push_str(&format!(
                "{m},{},{},{},{},{}\n",
                fmt(vb[m]),
                fmt(r.flared_bcm()),
                fmt(r.oil_bbl),
                fmt(r.gas_mcf),
                r.gor().map(fmt).unwrap_or_default()
            ));
        }
        ctx.write("monthly_series.csv", &out)?;
    }

    report.push("ok".to_string());
    ctx.write("run_report.txt", &(report.join("\n") + "\n"))
}

// --------------------------------------------------------------- geocode

fn load_layers(paths: &[PathBuf]) -> Result<Vec<flaretk_geo::polygon::GeoPolygon>, CliError> {
    let mut layers = Vec::new();
    for p in paths {
        layers.extend(parse_layers(&read(p)?, PolygonKind::County)?);
    }
    Ok(layers)
}

fn geocode(
    ctx: &Ctx,
    viirs: Option<&Path>,
    ndic: Option<&Path>,
    layer_paths: &[PathBuf],
) -> Result<(), CliError> {
    if viirs.is_none() && ndic.is_none() {
        return Err(CliError::validation("geocode needs --viirs and/or --ndic"));
    }
    let layers = load_layers(layer_paths)?;

    if let Some(p) = viirs {
        let dets = parse_viirs_csv(&read(p)?)?;
        let pts: Result<Vec<GeoPoint>, _> =
            dets.iter().map(|d| GeoPoint::wgs84(d.lat, d.lon)).collect();
        let labels = reverse_geocode(&pts?, &layers);
        let mut out = String::from("month,lat,lon,county,oilfield,section\n");
        for (d, l) in dets.iter().zip(&labels) {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                d.month,
                fmt(d.lat),
                fmt(d.lon),
                l.county().unwrap_or(""),
                l.oilfield().unwrap_or(""),
                l.section().unwrap_or("")
            ));
        }
        ctx.write("geocoded_detections.csv", &out)?;
    }

    if let Some(p) = ndic {
        let wells = parse_ndic_csv(&read(p)?)?;
        let pts: Result<Vec<GeoPoint>, _> =
            wells.iter().map(|w| GeoPoint::wgs84(w.lat, w.lon)).collect();
        let labels = reverse_geocode(&pts?, &layers);
        let mut out = String::from("month,well_id,county,oilfield,section\n");
        for (w, l) in wells.iter().zip(&labels) {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                w.month,
                w.well_id,
                l.county().unwrap_or(""),
                l.oilfield().unwrap_or(""),
                l.section().unwrap_or("")
            ));
        }
        ctx.write("geocoded_wells.csv", &out)?;
    }
    Ok(())
}

// ------------------------------------------------------------- correlate

/// Wide CSV (month, name...) into named month-indexed series.
fn load_wide_series(
    path: &Path,
) -> Result<Vec<(String, BTreeMap<MonthStamp, f64>)>, CliError> {
    let text = read(path)?;
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| CliError::validation(format!("row 1: {e}")))?
        .clone();
    if headers.get(0).map(str::trim) != Some("month") {
        return Err(CliError::validation("first column must be month"));
    }
    let names: Vec<String> = headers.iter().skip(1).map(|h| h.trim().to_string()).collect();
    let mut series: Vec<(String, BTreeMap<MonthStamp, f64>)> =
        names.iter().map(|n| (n.clone(), BTreeMap::new())).collect();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| CliError::validation(format!("row {row}: {e}")))?;
        let m = MonthStamp::parse(rec.get(0).unwrap_or("").trim())
            .map_err(|e| CliError::validation(format!("row {row}, column month: {e}")))?;
        for (c, (name, map)) in series.iter_mut().enumerate() {
            let raw = rec.get(c + 1).unwrap_or("").trim();
            if raw.is_empty() {
                continue;
            }
            let v: f64 = raw.parse().map_err(|_| {
                CliError::validation(format!("row {row}, column {name}: not a number: {raw:?}"))
            })?;
            map.insert(m, v);
        }
    }
    Ok(series)
}

fn correlate(ctx: &Ctx, series_path: &Path, mode: &str) -> Result<(), CliError> {
    let mode = CorrMode::parse(mode)?;
    let series = load_wide_series(series_path)?;
    let rows = correlation_matrix(&series, mode)?;
    let mut out = String::from("series_a,series_b,rho\n");
    for (a, b, rho) in &rows {
        out.push_str(&format!("{a},{b},{}\n", fmt(*rho)));
    }
    ctx.write("correlations.csv", &out)
}

// ------------------------------------------------------------------ fit

/// Month-indexed numeric columns with the stamps, sorted and deduplicated.
struct ColumnFile {
    months: Vec<MonthStamp>,
    /// column name -> values aligned with months; absent if not in header.
    cols: BTreeMap<String, Vec<f64>>,
}

fn load_columns(path: &Path, month_col: &str) -> Result<ColumnFile, CliError> {
    let text = read(path)?;
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| CliError::validation(format!("row 1: {e}")))?
        .clone();
    let names: Vec<String> = headers.iter().map(|h| h.trim().to_string()).collect();
    if names.first().map(String::as_str) != Some(month_col) {
        return Err(CliError::validation(format!("first column must be {month_col}")));
    }
    let mut rows: Vec<(MonthStamp, Vec<f64>)> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| CliError::validation(format!("row {row}: {e}")))?;
        let m = MonthStamp::parse(rec.get(0).unwrap_or("").trim())
            .map_err(|e| CliError::validation(format!("row {row}, column {month_col}: {e}")))?;
        let vals: Result<Vec<f64>, CliError> = (1..names.len())
            .map(|c| {
                let raw = rec.get(c).unwrap_or("").trim();
                raw.parse().map_err(|_| {
                    CliError::validation(format!(
                        "row {row}, column {}: not a number: {raw:?}",
                        names[c]
                    ))
                })
            })
            .collect();
        rows.push((m, vals?));
    }
    rows.sort_by_key(|r| r.0);
    for w in rows.windows(2) {
        if w[0].0 == w[1].0 {
            return Err(CliError::validation(format!("duplicate month {}", w[0].0)));
        }
    }
    let months: Vec<MonthStamp> = rows.iter().map(|r| r.0).collect();
    let cols = names[1..]
        .iter()
        .enumerate()
        .map(|(c, n)| (n.clone(), rows.iter().map(|r| r.1[c]).collect()))
        .collect();
    Ok(ColumnFile { months, cols })
}

impl ColumnFile {
    fn col(&self, name: &str) -> Result<&Vec<f64>, CliError> {
        self.cols
            .get(name)
            .ok_or_else(|| CliError::validation(format!("missing column {name}")))
    }
}

fn load_state_data(path: &Path) -> Result<Vec<StateMonthly>, CliError> {
    let f = load_columns(path, "month")?;
    let viirs = f.col("viirs_bcm")?;
    let ndic = f.col("ndic_bcm")?;
    f.months
        .iter()
        .enumerate()
        .map(|(i, _)| StateMonthly::new(i, viirs[i], ndic[i]).map_err(CliError::from))
        .collect()
}

fn load_county_data(path: &Path) -> Result<Vec<CountyMonthly>, CliError> {
    let text = read(path)?;
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| CliError::validation(format!("row 1: {e}")))?
        .clone();
    let idx = |name: &str| -> Result<usize, CliError> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| CliError::validation(format!("header is missing column {name}")))
    };
    let (ci, mi, vi, ni) = (idx("county")?, idx("month")?, idx("viirs_bcm")?, idx("ndic_bcm")?);
    let registry = CountyRegistry::default();
    let mut rows: Vec<(usize, MonthStamp, f64, f64)> = Vec::new();
    let mut start: Option<MonthStamp> = None;
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| CliError::validation(format!("row {row}: {e}")))?;
        let get = |c: usize| rec.get(c).unwrap_or("").trim();
        let county = registry
            .index(get(ci))
            .map_err(|e| CliError::validation(format!("row {row}, column county: {e}")))?;
        let m = MonthStamp::parse(get(mi))
            .map_err(|e| CliError::validation(format!("row {row}, column month: {e}")))?;
        let num = |c: usize, name: &str| -> Result<f64, CliError> {
            get(c).parse().map_err(|_| {
                CliError::validation(format!("row {row}, column {name}: not a number"))
            })
        };
        start = Some(start.map_or(m, |s| s.min(m)));
        rows.push((county, m, num(vi, "viirs_bcm")?, num(ni, "ndic_bcm")?));
    }
    let start = start.ok_or_else(|| CliError::validation("no data rows"))?;
    Ok(rows
        .into_iter()
        .map(|(county, m, viirs_bcm, ndic_bcm)| CountyMonthly {
            county,
            month: m.index_from(&start) as usize,
            viirs_bcm,
            ndic_bcm,
        })
        .collect())
}

/// Series file for the latent time-series models; a regular month grid is
/// required. Optional columns map onto the optional series fields.
fn load_entity_series(path: &Path) -> Result<EntitySeries, CliError> {
    let f = load_columns(path, "month")?;
    check_contiguous(&f.months)?;
    let n = f.months.len();
    let opt = |name: &str| f.cols.get(name).cloned();
    let opt_u64 = |name: &str| -> Result<Option<Vec<u64>>, CliError> {
        match f.cols.get(name) {
            None => Ok(None),
            Some(v) => v
                .iter()
                .map(|&x| {
                    if x >= 0.0 && x.fract() == 0.0 {
                        Ok(x as u64)
                    } else {
                        Err(CliError::validation(format!(
                            "column {name}: counts must be nonnegative integers, got {x}"
                        )))
                    }
                })
                .collect::<Result<Vec<u64>, CliError>>()
                .map(Some),
        }
    };
    Ok(EntitySeries {
        months: (0..n).map(|i| i as f64).collect(),
        flared: opt("flared_mcf"),
        gas_prod: opt("gas_mcf"),
        oil_prod: opt("oil_bbl"),
        active_wells: opt_u64("active_wells")?,
        flaring_wells: opt_u64("flaring_wells")?,
        detection_count: opt_u64("detections")?,
        viirs: opt("viirs_bcm"),
        ndic: opt("ndic_bcm"),
    })
}

fn load_counts(path: &Path) -> Result<Vec<u64>, CliError> {
    let text = read(path)?;
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let ok = rdr
        .headers()
        .map_err(|e| CliError::validation(format!("row 1: {e}")))?
        .get(0)
        .map(str::trim)
        == Some("count");
    if !ok {
        return Err(CliError::validation("expected a single `count` column"));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| CliError::validation(format!("row {row}: {e}")))?;
        let raw = rec.get(0).unwrap_or("").trim();
        out.push(raw.parse().map_err(|_| {
            CliError::validation(format!("row {row}, column count: not a count: {raw:?}"))
        })?);
    }
    Ok(out)
}

/// Magnitude sample for the mixture model: `magnitude` used as-is, or
/// `volume_bcm` logged after excluding zeros.
fn load_magnitudes(path: &Path) -> Result<(Vec<f64>, usize), CliError> {
    let text = read(path)?;
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr
        .headers()
        .map_err(|e| CliError::validation(format!("row 1: {e}")))?
        .get(0)
        .map(str::trim)
        .unwrap_or("")
        .to_string();
    let mut vals = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| CliError::validation(format!("row {row}: {e}")))?;
        let raw = rec.get(0).unwrap_or("").trim();
        let v: f64 = raw.parse().map_err(|_| {
            CliError::validation(format!("row {row}, column {header}: not a number: {raw:?}"))
        })?;
        vals.push(v);
    }
    match header.as_str() {
        "magnitude" => Ok((vals, 0)),
        "volume_bcm" => {
            let (kept, excluded) = exclude_zeros(&vals);
            Ok((log_magnitude(&kept)?, excluded))
        }
        other => Err(CliError::validation(format!(
            "expected a `magnitude` or `volume_bcm` column, got {other:?}"
        ))),
    }
}

fn file_tag(model: &str) -> String {
    model.replace(':', "_")
}

/// Fail with exit code 2 when any parameter has not converged.
fn check_convergence(trace: &Trace) -> Result<(), CliError> {
    let bad: Vec<String> = summarize(trace, 0.9)
        .into_iter()
        // NaN arises only for exactly constant chains (deterministic
        // quantities); infinity means disjoint chains and is a failure.
        .filter(|r| r.rhat >= 1.05 || r.rhat.is_infinite())
        .map(|r| format!("{} (R-hat {:.3})", r.param, r.rhat))
        .collect();
    if bad.is_empty() {
        Ok(())
    } else {
        Err(CliError::numerical(format!(
            "convergence failure, R-hat >= 1.05 for: {}",
            bad.join(", ")
        )))
    }
}

fn write_fit_outputs(ctx: &Ctx, tag: &str, trace: &Trace, extra: &[String]) -> Result<(), CliError> {
    let json = serde_json::to_string(&trace.to_json())
        .map_err(|e| CliError::numerical(format!("trace serialization: {e}")))?;
    ctx.write(&format!("trace_{tag}.json"), &(json + "\n"))?;
    ctx.write(
        &format!("summary_{tag}.csv"),
        &summary_csv(&summarize(trace, 0.9)),
    )?;
    let mut report = vec![
        format!("model: {tag}"),
        format!(
            "seed: {}, chains: {}, warmup: {}, draws: {}",
            ctx.seed, ctx.chains, ctx.warmup, ctx.draws
        ),
        format!("divergences: {}", trace.total_divergences()),
    ];
    report.extend(extra.iter().cloned());
    ctx.write(&format!("report_{tag}.txt"), &(report.join("\n") + "\n"))?;
    check_convergence(trace)
}

fn fit(
    ctx: &Ctx,
    model: &str,
    data: &Path,
    k: Option<usize>,
    centered: bool,
) -> Result<Trace, CliError> {
    let cfg = ctx.sampler();
    let tag = file_tag(model);
    let (trace, extra) = match model {
        "state" => {
            let rows = load_state_data(data)?;
            let fit = fit_state_linear(&rows, &cfg)?;
            let mut extra = vec![format!("months: {}", rows.len())];
            if fit.slope_unidentified {
                extra.push("warning: satellite volumes are constant; slope rests on the prior"
                    .to_string());
            }
            (fit.trace, extra)
        }
        "county" => {
            let rows = load_county_data(data)?;
            let par = if centered {
                Parameterization::Centered
            } else {
                Parameterization::Noncentered
            };
            let trace = fit_county_hierarchical(&rows, &par, &cfg)?;
            (trace, vec![format!("rows: {}", rows.len())])
        }
        "negbin" => {
            let counts = load_counts(data)?;
            let trace = fit_negbin_counts(&counts, &cfg)?;
            (trace, vec![format!("counts: {}", counts.len())])
        }
        "gmm" => {
            let k = k.ok_or_else(|| CliError::validation("gmm requires --k"))?;
            let (mags, excluded) = load_magnitudes(data)?;
            let fit = fit_gmm(&mags, k, &cfg)?;
            let extra = vec![
                format!("magnitudes: {}, zero volumes excluded: {excluded}", mags.len()),
                format!("component means: {:?}", fit.means),
                format!("component weights: {:?}", fit.weights),
            ];
            (fit.trace, extra)
        }
        gp if gp.starts_with("gp:") => {
            let kind = GpKind::parse(&gp[3..])?;
            let series = load_entity_series(data)?;
            let trace = fit_gp_series(&series, kind, &cfg)?;
            (trace, vec![format!("months: {}", series.months.len())])
        }
        other => {
            return Err(CliError::validation(format!(
                "unknown model {other:?}; expected state, county, gp:<kind>, negbin, or gmm"
            )))
        }
    };
    write_fit_outputs(ctx, &tag, &trace, &extra)?;
    Ok(trace)
}

// -------------------------------------------------------------- predict

/// Per-month percentile bands of sample rows ([row][month]).
fn bands_over_months(
    samples: &[Vec<f64>],
    grid_start: usize,
) -> Result<String, CliError> {
    let n = samples.first().map_or(0, Vec::len);
    let grid: Vec<f64> = (0..n).map(|i| (grid_start + i) as f64).collect();
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|m| samples.iter().map(|row| row[m]).collect())
        .collect();
    let rows = percentile_bands(&grid, &cols, &default_band_edges())?;
    Ok(band_csv(&rows))
}

fn predict(ctx: &Ctx, model: &str, data: &Path, horizon: usize) -> Result<(), CliError> {
    let kind = match model.strip_prefix("gp:") {
        Some(k) => GpKind::parse(k)?,
        None => {
            return Err(CliError::validation(
                "predict requires a time-series model: gp:<kind>",
            ))
        }
    };
    let series = load_entity_series(data)?;
    let cfg = ctx.sampler();
    let trace = fit_gp_series(&series, kind, &cfg)?;
    let tag = file_tag(model);

    let latent = latent_link_samples(&trace, &series, kind)?;
    ctx.write("latent_bands.csv", &bands_over_months(&latent, 0)?)?;
    let fc = forecast_latent(&trace, &series, kind, horizon, ctx.seed)?;
    ctx.write("forecast_bands.csv", &bands_over_months(&fc, series.months.len())?)?;

    let extra = vec![format!("months: {}, horizon: {horizon}", series.months.len())];
    write_fit_outputs(ctx, &tag, &trace, &extra)
}

// ------------------------------------------------------------------ ppc

fn ppc(ctx: &Ctx, model: &str, data: &Path, datasets: usize) -> Result<(), CliError> {
    let cfg = ctx.sampler();
    match model {
        "state" => {
            let rows = load_state_data(data)?;
            let fit = fit_state_linear(&rows, &cfg)?;
            let viirs: Vec<f64> = rows.iter().map(|r| r.viirs_bcm).collect();
            let sims = posterior_predictive(
                &fit.trace,
                &PredictiveKind::State { viirs },
                datasets,
                ctx.seed,
            )?;
            let mut out = String::from("dataset,month,value\n");
            for (d, sim) in sims.iter().enumerate() {
                for (m, v) in sim.iter().enumerate() {
                    out.push_str(&format!("{d},{m},{}\n", fmt(*v)));
                }
            }
            ctx.write("ppc_datasets.csv", &out)?;
            write_fit_outputs(ctx, "state", &fit.trace, &[])
        }
        "negbin" => {
            let counts = load_counts(data)?;
            let trace = fit_negbin_counts(&counts, &cfg)?;
            let sims = posterior_predictive(
                &trace,
                &PredictiveKind::NegBin { n_obs: counts.len() },
                datasets,
                ctx.seed,
            )?;
            ctx.write("ppc_counts.csv", &count_histogram_csv(&counts, &sims))?;
            write_fit_outputs(ctx, "negbin", &trace, &[])
        }
        other => Err(CliError::validation(format!(
            "ppc supports state or negbin, got {other:?}"
        ))),
    }
}

// ------------------------------------------------------------ attribute

fn attribute(
    ctx: &Ctx,
    detections: &Path,
    wells: &Path,
    sections: Option<&Path>,
    d_secure: f64,
    d_cutoff: f64,
) -> Result<(), CliError> {
    let dets = parse_viirs_csv(&read(detections)?)?;
    let well_rows = parse_ndic_csv(&read(wells)?)?;
    let section_polys = match sections {
        Some(p) => parse_layers(&read(p)?, PolygonKind::TrsSection)?,
        None => Vec::new(),
    };

    // Month-by-month assignment: a detection can only match wells reported
    // in its own month.
    let mut by_month: BTreeMap<MonthStamp, (Vec<Detection>, Vec<Well>)> = BTreeMap::new();
    for (i, d) in dets.iter().enumerate() {
        by_month.entry(d.month).or_default().0.push(Detection {
            id: format!("d{}", i + 1),
            point: GeoPoint::wgs84(d.lat, d.lon)?,
        });
    }
    for w in &well_rows {
        if let Some(entry) = by_month.get_mut(&w.month) {
            entry.1.push(Well {
                operator: w.operator.clone(),
                point: GeoPoint::wgs84(w.lat, w.lon)?,
            });
        }
    }

    let mut out = String::from("detection_id,operator,distance_m,decision\n");
    for (dets, wells) in by_month.values() {
        for a in assign_flare_owners(dets, wells, &section_polys, d_secure, d_cutoff, R_EARTH_M)? {
            out.push_str(&format!(
                "{},{},{},{}\n",
                a.detection_id,
                a.operator.as_deref().unwrap_or(""),
                fmt(a.distance_m),
                a.decision.as_str()
            ));
        }
    }
    ctx.write("attribution.csv", &out)
}

// ------------------------------------------------------------ nightfire

fn nightfire(
    ctx: &Ctx,
    bands: &[String],
    threshold_sd: f64,
    robust: bool,
) -> Result<(), CliError> {
    let mut images = Vec::new();
    for spec in bands {
        let (grid, sidecar) = spec.split_once(',').ok_or_else(|| {
            CliError::validation(format!("--band expects GRID_CSV,SIDECAR_JSON, got {spec:?}"))
        })?;
        images.push(BandImage::from_csv(Path::new(grid), Path::new(sidecar))?);
    }
    let background = if robust { Background::MedianMad } else { Background::MeanSd };
    let sources = extract_hot_sources(&images, threshold_sd, background)?;
    ctx.write("nightfire_detections.csv", &detection_csv(&sources))
}

// ------------------------------------------------------------ summarize

fn summarize_cmd(ctx: &Ctx, trace_path: &Path, prob: f64) -> Result<(), CliError> {
    if !(0.0 < prob && prob < 1.0) {
        return Err(CliError::validation(format!(
            "--prob must be inside (0, 1), got {prob}"
        )));
    }
    let trace = trace_from_json(&read(trace_path)?)?;
    ctx.write("summary.csv", &summary_csv(&summarize(&trace, prob)))
}
