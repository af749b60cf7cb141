use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A non-degenerate closed interval `[lo, hi]` on which targets are defined
/// and risks are integrated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "(f64, f64)", into = "(f64, f64)")]
pub struct Domain {
    lo: f64,
    hi: f64,
}

impl Domain {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::NonFinite("domain endpoint"));
        }
        if lo >= hi {
            return Err(Error::DegenerateDomain { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    /// The unit interval `[0, 1]`.
    pub fn unit() -> Self {
        Self { lo: 0.0, hi: 1.0 }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Affine map sending `[0, 1]` onto this interval.
    pub fn from_unit(&self, y: f64) -> f64 {
        self.lo + y * self.length()
    }

    /// Affine map sending this interval onto `[0, 1]`.
    pub fn to_unit(&self, x: f64) -> f64 {
        (x - self.lo) / self.length()
    }
}

impl TryFrom<(f64, f64)> for Domain {
    type Error = Error;

    fn try_from(val: (f64, f64)) -> Result<Self> {
        Domain::new(val.0, val.1)
    }
}

impl From<Domain> for (f64, f64) {
    fn from(d: Domain) -> Self {
        (d.lo, d.hi)
    }
}
