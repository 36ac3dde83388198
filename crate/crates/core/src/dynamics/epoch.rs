use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Sub};

use serde::{Deserialize, Serialize};

pub const HOUR: f64 = 3600.0;
pub const DAY: f64 = 86_400.0;

/// Seconds past the scenario reference epoch on a uniform time scale.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Epoch(f64);

impl Epoch {
    pub const ZERO: Epoch = Epoch(0.0);

    pub fn from_seconds(seconds: f64) -> Self {
        debug_assert!(seconds.is_finite(), "epoch must be finite");
        Epoch(seconds)
    }

    pub fn from_days(days: f64) -> Self {
        Self::from_seconds(days * DAY)
    }

    pub fn from_hours(hours: f64) -> Self {
        Self::from_seconds(hours * HOUR)
    }

    pub fn seconds(self) -> f64 {
        self.0
    }

    pub fn days(self) -> f64 {
        self.0 / DAY
    }

    pub fn hours(self) -> f64 {
        self.0 / HOUR
    }
}

impl PartialEq for Epoch {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Epoch {}

impl PartialOrd for Epoch {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Epoch {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl Add<f64> for Epoch {
    type Output = Epoch;
    fn add(self, seconds: f64) -> Epoch {
        Epoch(self.0 + seconds)
    }
}

impl AddAssign<f64> for Epoch {
    fn add_assign(&mut self, seconds: f64) {
        self.0 += seconds;
    }
}

impl Sub<f64> for Epoch {
    type Output = Epoch;
    fn sub(self, seconds: f64) -> Epoch {
        Epoch(self.0 - seconds)
    }
}

impl Sub for Epoch {
    type Output = f64;
    fn sub(self, other: Epoch) -> f64 {
        self.0 - other.0
    }
}

impl fmt::Display for Epoch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3} s", self.0)
    }
}
