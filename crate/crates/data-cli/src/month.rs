//! Calendar month stamps with total ordering and grid indexing.

use std::fmt;

use crate::CliError;

/// A calendar month. Ordering is chronological; `index_from` turns stamps
/// into zero-based positions on a regular monthly grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MonthStamp {
    pub year: i32,
    pub month: u8,
}

impl MonthStamp {
    pub fn new(year: i32, month: u8) -> Result<Self, CliError> {
        if !(1..=12).contains(&month) {
            return Err(CliError::validation(format!(
                "month {month} out of range 1..=12"
            )));
        }
        Ok(MonthStamp { year, month })
    }

    /// Parse `YYYY-MM`.
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::validation(format!("bad month stamp {s:?}, expected YYYY-MM"));
        let (y, m) = s.split_once('-').ok_or_else(bad)?;
        if m.len() != 2 {
            return Err(bad());
        }
        let year: i32 = y.parse().map_err(|_| bad())?;
        let month: u8 = m.parse().map_err(|_| bad())?;
        MonthStamp::new(year, month)
    }

    fn linear(&self) -> i64 {
        self.year as i64 * 12 + (self.month as i64 - 1)
    }

    /// Months elapsed since `start`; negative when self precedes start.
    pub fn index_from(&self, start: &MonthStamp) -> i64 {
        self.linear() - start.linear()
    }

    pub fn next(&self) -> MonthStamp {
        if self.month == 12 {
            MonthStamp { year: self.year + 1, month: 1 }
        } else {
            MonthStamp { year: self.year, month: self.month + 1 }
        }
    }
}

impl fmt::Display for MonthStamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

/// Check that sorted distinct stamps form a gap-free monthly grid, as the
/// time-series models require. Returns the missing stamps otherwise.
pub fn check_contiguous(stamps: &[MonthStamp]) -> Result<(), CliError> {
    let mut missing = Vec::new();
    for w in stamps.windows(2) {
        let mut cur = w[0].next();
        while cur < w[1] {
            missing.push(cur.to_string());
            cur = cur.next();
        }
    }
    if missing.is_empty() {
        Ok(())
    } else {
        Err(CliError::validation(format!(
            "month grid has gaps; missing: {}",
            missing.join(", ")
        )))
    }
}
