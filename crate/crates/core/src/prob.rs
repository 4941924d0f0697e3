//! Probabilities carried as base-2 logarithms.
//!
//! Failure probabilities here routinely sit far below `f64::MIN_POSITIVE`,
//! so every bound is produced, combined and stored as `log2(p)` and only
//! turned back into a linear value for reporting.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Log2Prob(f64);

impl Log2Prob {
    pub const ONE: Log2Prob = Log2Prob(0.0);
    pub const ZERO: Log2Prob = Log2Prob(f64::NEG_INFINITY);

    pub fn from_log2(log2: f64) -> Self {
        debug_assert!(!log2.is_nan(), "NaN probability");
        Log2Prob(log2)
    }

    pub fn from_linear(p: f64) -> Self {
        debug_assert!(p >= 0.0, "negative probability {p}");
        Log2Prob(p.log2())
    }

    pub fn log2(self) -> f64 {
        self.0
    }

    pub fn linear(self) -> f64 {
        self.0.exp2()
    }

    /// `min(p, 1)`.
    pub fn clamp_to_one(self) -> Self {
        Log2Prob(self.0.min(0.0))
    }

    /// `p * factor` for a positive factor.
    pub fn scale(self, factor: f64) -> Self {
        Log2Prob(self.0 + factor.log2())
    }

    /// Sum of probabilities, evaluated in the log domain in the given order.
    pub fn sum<I: IntoIterator<Item = Log2Prob>>(terms: I) -> Self {
        let terms: Vec<f64> = terms.into_iter().map(|t| t.0).collect();
        let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Log2Prob::ZERO;
        }
        if max == f64::INFINITY {
            return Log2Prob(f64::INFINITY);
        }
        let acc: f64 = terms.iter().map(|t| (t - max).exp2()).sum();
        Log2Prob(max + acc.log2())
    }
}

impl fmt::Debug for Log2Prob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "2^{:.4} (~{:.4e})", self.0, self.linear())
    }
}

impl fmt::Display for Log2Prob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.4e}", self.linear())
    }
}

#[derive(Serialize, Deserialize)]
struct Repr {
    /// `null` encodes probability zero.
    log2: Option<f64>,
    #[serde(default)]
    linear: Option<f64>,
}

impl Serialize for Log2Prob {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        Repr {
            log2: (self.0 > f64::NEG_INFINITY).then_some(self.0),
            linear: Some(self.linear()),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Log2Prob {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = Repr::deserialize(deserializer)?;
        Ok(Log2Prob(repr.log2.unwrap_or(f64::NEG_INFINITY)))
    }
}
