//! CSV ingestion for the two source streams, lossless serialization, and
//! the derived monthly rollups the models consume.

use std::collections::BTreeMap;

use flaretk_models::CountyRegistry;

use crate::month::MonthStamp;
use crate::CliError;

/// Cubic meters in one thousand cubic feet; converts reported mcf volumes
/// onto the satellite bcm scale (1 bcm = 1e9 m3).
pub const M3_PER_MCF: f64 = 28.316_846_592;
pub const BCM_PER_MCF: f64 = M3_PER_MCF * 1e-9;

/// One satellite flare detection for one month.
#[derive(Debug, Clone, PartialEq)]
pub struct FlareDetection {
    pub month: MonthStamp,
    pub lat: f64,
    pub lon: f64,
    pub volume_bcm: f64,
}

/// One company-reported well-month row.
#[derive(Debug, Clone, PartialEq)]
pub struct WellRecord {
    pub month: MonthStamp,
    pub well_id: String,
    pub operator: String,
    pub oilfield: String,
    pub county: String,
    pub lat: f64,
    pub lon: f64,
    pub oil_bbl: f64,
    pub gas_mcf: f64,
    pub flared_mcf: f64,
}

pub const VIIRS_HEADER: [&str; 4] = ["month", "lat", "lon", "volume_bcm"];
pub const NDIC_HEADER: [&str; 10] = [
    "month", "well_id", "operator", "oilfield", "county", "lat", "lon", "oil_bbl", "gas_mcf",
    "flared_mcf",
];

struct RowCtx {
    row: usize,
}

impl RowCtx {
    fn err(&self, column: &str, msg: impl std::fmt::Display) -> CliError {
        CliError::validation(format!("row {}, column {column}: {msg}", self.row))
    }

    fn f64(&self, s: &str, column: &str) -> Result<f64, CliError> {
        let v: f64 = s
            .trim()
            .parse()
            .map_err(|_| self.err(column, format!("not a number: {s:?}")))?;
        if !v.is_finite() {
            return Err(self.err(column, "non-finite value"));
        }
        Ok(v)
    }

    fn month(&self, s: &str) -> Result<MonthStamp, CliError> {
        MonthStamp::parse(s.trim()).map_err(|e| self.err("month", e))
    }

    fn latlon(&self, lat: f64, lon: f64) -> Result<(), CliError> {
        if !(-90.0..=90.0).contains(&lat) {
            return Err(self.err("lat", format!("latitude {lat} outside [-90, 90]")));
        }
        if !(-180.0..=180.0).contains(&lon) {
            return Err(self.err("lon", format!("longitude {lon} outside [-180, 180]")));
        }
        Ok(())
    }

    fn nonneg(&self, v: f64, column: &str) -> Result<f64, CliError> {
        if v < 0.0 {
            return Err(self.err(column, format!("negative volume {v}")));
        }
        Ok(v)
    }
}

/// Column positions for the required names; extra columns are ignored.
fn header_index(header: &csv::StringRecord, required: &[&str]) -> Result<Vec<usize>, CliError> {
    required
        .iter()
        .map(|name| {
            header
                .iter()
                .position(|h| h.trim() == *name)
                .ok_or_else(|| CliError::validation(format!("header is missing column {name}")))
        })
        .collect()
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(text.as_bytes())
}

/// Parse satellite detections from `month,lat,lon,volume_bcm` CSV text.
pub fn parse_viirs_csv(text: &str) -> Result<Vec<FlareDetection>, CliError> {
    let mut rdr = reader(text);
    let cols = header_index(
        rdr.headers()
            .map_err(|e| CliError::validation(format!("row 1: {e}")))?,
        &VIIRS_HEADER,
    )?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let ctx = RowCtx { row: i + 2 };
        let rec = rec.map_err(|e| ctx.err("-", e))?;
        let field = |c: usize, name: &str| -> Result<&str, CliError> {
            rec.get(cols[c]).ok_or_else(|| ctx.err(name, "missing field"))
        };
        let lat = ctx.f64(field(1, "lat")?, "lat")?;
        let lon = ctx.f64(field(2, "lon")?, "lon")?;
        ctx.latlon(lat, lon)?;
        out.push(FlareDetection {
            month: ctx.month(field(0, "month")?)?,
            lat,
            lon,
            volume_bcm: ctx.nonneg(ctx.f64(field(3, "volume_bcm")?, "volume_bcm")?, "volume_bcm")?,
        });
    }
    Ok(out)
}

/// Parse well-month report rows, validating county labels against the
/// registry.
pub fn parse_ndic_csv_with(
    text: &str,
    registry: &CountyRegistry,
) -> Result<Vec<WellRecord>, CliError> {
    let mut rdr = reader(text);
    let cols = header_index(
        rdr.headers()
            .map_err(|e| CliError::validation(format!("row 1: {e}")))?,
        &NDIC_HEADER,
    )?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let ctx = RowCtx { row: i + 2 };
        let rec = rec.map_err(|e| ctx.err("-", e))?;
        let field = |c: usize, name: &str| -> Result<&str, CliError> {
            rec.get(cols[c]).ok_or_else(|| ctx.err(name, "missing field"))
        };
        let county = field(4, "county")?.trim().to_string();
        registry
            .index(&county)
            .map_err(|e| ctx.err("county", e))?;
        let lat = ctx.f64(field(5, "lat")?, "lat")?;
        let lon = ctx.f64(field(6, "lon")?, "lon")?;
        ctx.latlon(lat, lon)?;
        out.push(WellRecord {
            month: ctx.month(field(0, "month")?)?,
            well_id: field(1, "well_id")?.trim().to_string(),
            operator: field(2, "operator")?.trim().to_string(),
            oilfield: field(3, "oilfield")?.trim().to_string(),
            county,
            lat,
            lon,
            oil_bbl: ctx.nonneg(ctx.f64(field(7, "oil_bbl")?, "oil_bbl")?, "oil_bbl")?,
            gas_mcf: ctx.nonneg(ctx.f64(field(8, "gas_mcf")?, "gas_mcf")?, "gas_mcf")?,
            flared_mcf: ctx
                .nonneg(ctx.f64(field(9, "flared_mcf")?, "flared_mcf")?, "flared_mcf")?,
        });
    }
    Ok(out)
}

pub fn parse_ndic_csv(text: &str) -> Result<Vec<WellRecord>, CliError> {
    parse_ndic_csv_with(text, &CountyRegistry::default())
}

/// Shortest lossless float text: round-trips through f64 parse.
fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn csv_string(rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(&row).expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("csv flush")).expect("csv is utf8")
}

pub fn viirs_csv(dets: &[FlareDetection]) -> String {
    let mut rows = vec![VIIRS_HEADER.iter().map(|s| s.to_string()).collect()];
    for d in dets {
        rows.push(vec![
            d.month.to_string(),
            fmt_f64(d.lat),
            fmt_f64(d.lon),
            fmt_f64(d.volume_bcm),
        ]);
    }
    csv_string(rows)
}

pub fn ndic_csv(wells: &[WellRecord]) -> String {
    let mut rows = vec![NDIC_HEADER.iter().map(|s| s.to_string()).collect()];
    for w in wells {
        rows.push(vec![
            w.month.to_string(),
            w.well_id.clone(),
            w.operator.clone(),
            w.oilfield.clone(),
            w.county.clone(),
            fmt_f64(w.lat),
            fmt_f64(w.lon),
            fmt_f64(w.oil_bbl),
            fmt_f64(w.gas_mcf),
            fmt_f64(w.flared_mcf),
        ]);
    }
    csv_string(rows)
}

/// Per-month totals of one numeric field.
fn monthly_sum<T>(rows: &[T], month: impl Fn(&T) -> MonthStamp, val: impl Fn(&T) -> f64)
    -> BTreeMap<MonthStamp, f64>
{
    let mut out = BTreeMap::new();
    for r in rows {
        *out.entry(month(r)).or_insert(0.0) += val(r);
    }
    out
}

pub fn viirs_monthly_bcm(dets: &[FlareDetection]) -> BTreeMap<MonthStamp, f64> {
    monthly_sum(dets, |d| d.month, |d| d.volume_bcm)
}

/// Per-month state rollup of the reported stream.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MonthlyRollup {
    pub oil_bbl: f64,
    pub gas_mcf: f64,
    pub flared_mcf: f64,
    pub active_wells: u64,
    pub flaring_wells: u64,
}

impl MonthlyRollup {
    pub fn flared_bcm(&self) -> f64 {
        self.flared_mcf * BCM_PER_MCF
    }

    /// Gas-oil ratio, mcf of gas per barrel of oil.
    pub fn gor(&self) -> Option<f64> {
        (self.oil_bbl > 0.0).then(|| self.gas_mcf / self.oil_bbl)
    }
}

fn add_record(roll: &mut MonthlyRollup, w: &WellRecord) {
    roll.oil_bbl += w.oil_bbl;
    roll.gas_mcf += w.gas_mcf;
    roll.flared_mcf += w.flared_mcf;
    roll.active_wells += 1;
    if w.flared_mcf > 0.0 {
        roll.flaring_wells += 1;
    }
}

pub fn state_rollup(wells: &[WellRecord]) -> BTreeMap<MonthStamp, MonthlyRollup> {
    let mut out: BTreeMap<MonthStamp, MonthlyRollup> = BTreeMap::new();
    for w in wells {
        add_record(out.entry(w.month).or_default(), w);
    }
    out
}

/// Rollup keyed by (group, month); `group` selects county or oilfield.
pub fn grouped_rollup(
    wells: &[WellRecord],
    group: impl Fn(&WellRecord) -> &str,
) -> BTreeMap<(String, MonthStamp), MonthlyRollup> {
    let mut out: BTreeMap<(String, MonthStamp), MonthlyRollup> = BTreeMap::new();
    for w in wells {
        add_record(out.entry((group(w).to_string(), w.month)).or_default(), w);
    }
    out
}
