use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::TransplantRecord;

/// Graft-failure classification horizon (GF12, GF24, GF36).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum Horizon {
    Months12,
    Months24,
    Months36,
}

impl Horizon {
    pub const ALL: [Horizon; 3] = [Horizon::Months12, Horizon::Months24, Horizon::Months36];

    pub fn months(self) -> u32 {
        match self {
            Horizon::Months12 => 12,
            Horizon::Months24 => 24,
            Horizon::Months36 => 36,
        }
    }

    pub fn from_months(m: u32) -> Option<Horizon> {
        match m {
            12 => Some(Horizon::Months12),
            24 => Some(Horizon::Months24),
            36 => Some(Horizon::Months36),
            _ => None,
        }
    }
}

impl TryFrom<u32> for Horizon {
    type Error = String;
    fn try_from(m: u32) -> Result<Self, Self::Error> {
        Horizon::from_months(m).ok_or_else(|| format!("horizon must be 12, 24 or 36 (got {m})"))
    }
}

impl From<Horizon> for u32 {
    fn from(h: Horizon) -> u32 {
        h.months()
    }
}

impl FromStr for Horizon {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let m: u32 = s
            .trim()
            .trim_start_matches("GF")
            .trim_start_matches("gf")
            .parse()
            .map_err(|_| format!("bad horizon {s:?}"))?;
        Horizon::try_from(m)
    }
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF{}", self.months())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HorizonLabel {
    /// Graft failed within the horizon.
    Positive,
    /// Graft functioning at the horizon (including later failures).
    Negative,
    /// Follow-up ended before the horizon without a failure.
    Censored,
}

pub fn derive_label(record: &TransplantRecord, horizon: Horizon) -> HorizonLabel {
    let h = horizon.months() as f64;
    let t = record.graft_survival_months;
    if record.graft_failed && t <= h {
        HorizonLabel::Positive
    } else if t >= h {
        HorizonLabel::Negative
    } else {
        HorizonLabel::Censored
    }
}
