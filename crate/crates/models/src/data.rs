//! Observation containers shared by the model suite.

use flaretk_inference::Error;

/// One month of state-level reporting, volumes in bcm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateMonthly {
    pub month: usize,
    pub viirs_bcm: f64,
    pub ndic_bcm: f64,
}

impl StateMonthly {
    pub fn new(month: usize, viirs_bcm: f64, ndic_bcm: f64) -> Result<Self, Error> {
        if viirs_bcm < 0.0 || ndic_bcm < 0.0 {
            return Err(Error::Validation(format!(
                "month {month}: volumes must be nonnegative"
            )));
        }
        Ok(StateMonthly {
            month,
            viirs_bcm,
            ndic_bcm,
        })
    }
}

/// One month of county-level reporting; the county index must come from a
/// [`CountyRegistry`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountyMonthly {
    pub county: usize,
    pub month: usize,
    pub viirs_bcm: f64,
    pub ndic_bcm: f64,
}

/// Registered county labels; index order is stable and extensible.
#[derive(Debug, Clone)]
pub struct CountyRegistry {
    names: Vec<String>,
}

/// The twelve flaring counties tracked by default.
pub const DEFAULT_COUNTIES: [&str; 12] = [
    "MCK", "DUN", "WIL", "MTL", "BOW", "DIV", "BRK", "MCL", "BIL", "STK", "SLP", "GV",
];

impl Default for CountyRegistry {
    fn default() -> Self {
        CountyRegistry {
            names: DEFAULT_COUNTIES.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl CountyRegistry {
    pub fn new(names: Vec<String>) -> Self {
        CountyRegistry { names }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, idx: usize) -> Option<&str> {
        self.names.get(idx).map(String::as_str)
    }

    pub fn index(&self, name: &str) -> Result<usize, Error> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Validation(format!("unknown county label {name}")))
    }

    /// Register a new county, returning its index; existing labels keep
    /// their indices.
    pub fn register(&mut self, name: &str) -> usize {
        if let Ok(i) = self.index(name) {
            return i;
        }
        self.names.push(name.to_string());
        self.names.len() - 1
    }
}

/// Monthly series for one entity (state, county, oilfield, or operator).
/// Only the fields a given model needs have to be present.
#[derive(Debug, Clone, Default)]
pub struct EntitySeries {
    /// Month indices, 0-based from series start.
    pub months: Vec<f64>,
    /// Flared volume F_i (mcf).
    pub flared: Option<Vec<f64>>,
    /// Gas production G_i (mcf).
    pub gas_prod: Option<Vec<f64>>,
    /// Oil production O_i (bbl).
    pub oil_prod: Option<Vec<f64>>,
    /// Active well count N_i.
    pub active_wells: Option<Vec<u64>>,
    /// Flaring well count W_i.
    pub flaring_wells: Option<Vec<u64>>,
    /// Satellite detection count C_i.
    pub detection_count: Option<Vec<u64>>,
    /// Satellite estimated volume (bcm).
    pub viirs: Option<Vec<f64>>,
    /// State-reported volume (bcm).
    pub ndic: Option<Vec<f64>>,
}

impl EntitySeries {
    pub fn len(&self) -> usize {
        self.months.len()
    }

    pub fn is_empty(&self) -> bool {
        self.months.is_empty()
    }

    pub fn validate(&self) -> Result<(), Error> {
        let n = self.months.len();
        let lens = [
            self.flared.as_ref().map(Vec::len),
            self.gas_prod.as_ref().map(Vec::len),
            self.oil_prod.as_ref().map(Vec::len),
            self.active_wells.as_ref().map(Vec::len),
            self.flaring_wells.as_ref().map(Vec::len),
            self.detection_count.as_ref().map(Vec::len),
            self.viirs.as_ref().map(Vec::len),
            self.ndic.as_ref().map(Vec::len),
        ];
        if lens.iter().flatten().any(|&l| l != n) {
            return Err(Error::Validation(
                "series fields must all have the same length as the month grid".into(),
            ));
        }
        for field in [&self.flared, &self.gas_prod, &self.oil_prod, &self.viirs, &self.ndic] {
            if let Some(v) = field {
                if v.iter().any(|&x| x < 0.0 || !x.is_finite()) {
                    return Err(Error::Validation("volumes must be finite and nonnegative".into()));
                }
            }
        }
        if let (Some(w), Some(nw)) = (&self.flaring_wells, &self.active_wells) {
            if w.iter().zip(nw).any(|(&wi, &ni)| wi > ni) {
                return Err(Error::Validation(
                    "flaring well count exceeds active well count".into(),
                ));
            }
        }
        Ok(())
    }
}
