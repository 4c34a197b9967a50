//! Regard scores returned by an external classifier.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use super::TextError;

/// Tolerance on the sum of the four category scores.
pub const REGARD_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegardScores {
    pub positive: f64,
    pub negative: f64,
    pub neutral: f64,
    pub other: f64,
}

impl RegardScores {
    /// Accepts scores in `[0, 1]` summing to 1 within [`REGARD_SUM_TOLERANCE`].
    pub fn validated(self) -> Result<Self, TextError> {
        let all = [self.positive, self.negative, self.neutral, self.other];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0 + REGARD_SUM_TOLERANCE) {
            return Err(TextError::RegardOutOfRange);
        }
        let sum: f64 = all.iter().sum();
        if (sum - 1.0).abs() > REGARD_SUM_TOLERANCE {
            return Err(TextError::RegardNotNormalized(sum));
        }
        Ok(self)
    }

    pub fn get(&self, category: RegardCategory) -> f64 {
        match category {
            RegardCategory::Positive => self.positive,
            RegardCategory::Negative => self.negative,
            RegardCategory::Neutral => self.neutral,
            RegardCategory::Other => self.other,
        }
    }
}

/// Which category score enters the paired t-tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegardCategory {
    #[default]
    Positive,
    Negative,
    Neutral,
    Other,
}

impl fmt::Display for RegardCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Positive => "positive",
            Self::Negative => "negative",
            Self::Neutral => "neutral",
            Self::Other => "other",
        })
    }
}

impl FromStr for RegardCategory {
    type Err = TextError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "positive" => Ok(Self::Positive),
            "negative" => Ok(Self::Negative),
            "neutral" => Ok(Self::Neutral),
            "other" => Ok(Self::Other),
            _ => Err(TextError::UnknownLevel(s.to_string())),
        }
    }
}
