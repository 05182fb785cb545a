//! Three-set trapezoidal membership functions and winner-take-all
//! fuzzification for the three rule inputs.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::FexaiError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FuzzyFeature {
    MDRate,
    FltSegments,
    MDirection,
}

impl FuzzyFeature {
    pub const ALL: [FuzzyFeature; 3] = [
        FuzzyFeature::MDRate,
        FuzzyFeature::FltSegments,
        FuzzyFeature::MDirection,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FuzzyFeature::MDRate => "MDRate",
            FuzzyFeature::FltSegments => "FltSegments",
            FuzzyFeature::MDirection => "MDirection",
        }
    }

    /// Set labels from the lowest to the highest value range.
    pub fn set_labels(self) -> [&'static str; 3] {
        match self {
            FuzzyFeature::MDRate => ["Low", "Medium", "High"],
            FuzzyFeature::FltSegments => ["Few", "Moderate", "Many"],
            FuzzyFeature::MDirection => ["Straight", "Moderate", "Complex"],
        }
    }

    pub fn set_index(self, label: &str) -> Option<usize> {
        self.set_labels().iter().position(|l| *l == label)
    }
}

impl fmt::Display for FuzzyFeature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FuzzyFeature {
    type Err = FexaiError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FuzzyFeature::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| FexaiError::UnknownFeature(s.to_string()))
    }
}

fn clamp01(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

/// Lower, middle and upper sets. Adjacent sets cross at degree 0.5 at
/// `lower` and `upper`; each crossing is a linear ramp of half-width
/// `shoulder * (upper - lower)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MembershipFunction {
    pub feature: FuzzyFeature,
    pub lower: f64,
    pub upper: f64,
    pub shoulder: f64,
}

pub const DEFAULT_SHOULDER: f64 = 0.25;

impl MembershipFunction {
    pub fn new(feature: FuzzyFeature, lower: f64, upper: f64, shoulder: f64) -> Result<Self, FexaiError> {
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(FexaiError::InvalidThresholds(format!("{feature}: {lower} / {upper}")));
        }
        if !(shoulder > 0.0 && shoulder <= 0.5) {
            return Err(FexaiError::InvalidThresholds(format!("{feature}: shoulder {shoulder}")));
        }
        Ok(MembershipFunction {
            feature,
            lower,
            upper,
            shoulder,
        })
    }

    pub fn default_for(feature: FuzzyFeature) -> Self {
        let (lower, upper) = match feature {
            FuzzyFeature::MDRate => (0.026, 0.044),
            FuzzyFeature::FltSegments => (238.0, 767.0),
            FuzzyFeature::MDirection => (1.375, 2.125),
        };
        MembershipFunction {
            feature,
            lower,
            upper,
            shoulder: DEFAULT_SHOULDER,
        }
    }

    fn half_width(&self) -> f64 {
        self.shoulder * (self.upper - self.lower)
    }

    pub fn degrees(&self, x: f64) -> Result<[f64; 3], FexaiError> {
        if !x.is_finite() {
            return Err(FexaiError::NonFiniteValue(self.feature.name()));
        }
        let w = 2.0 * self.half_width();
        let rise_lo = clamp01(0.5 + (x - self.lower) / w);
        let rise_hi = clamp01(0.5 + (x - self.upper) / w);
        let fall_lo = clamp01(0.5 - (x - self.lower) / w);
        let fall_hi = clamp01(0.5 - (x - self.upper) / w);
        Ok([fall_lo, rise_lo.min(fall_hi), rise_hi])
    }

    /// Index of the maximal-degree set. On an exact crossing both sets
    /// have degree 0.5 and the upper one is chosen.
    pub fn winner(&self, x: f64) -> Result<usize, FexaiError> {
        if !x.is_finite() {
            return Err(FexaiError::NonFiniteValue(self.feature.name()));
        }
        Ok(if x < self.lower {
            0
        } else if x < self.upper {
            1
        } else {
            2
        })
    }

    pub fn winner_label(&self, x: f64) -> Result<&'static str, FexaiError> {
        Ok(self.feature.set_labels()[self.winner(x)?])
    }
}

/// Membership functions for MDRate, FltSegments and MDirection, in that
/// order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuzzySystem {
    pub functions: [MembershipFunction; 3],
}

impl Default for FuzzySystem {
    fn default() -> Self {
        FuzzySystem {
            functions: FuzzyFeature::ALL.map(MembershipFunction::default_for),
        }
    }
}

impl FuzzySystem {
    pub fn with_thresholds(thresholds: [(f64, f64); 3], shoulder: f64) -> Result<Self, FexaiError> {
        let mut functions = FuzzySystem::default().functions;
        for (i, (lo, hi)) in thresholds.into_iter().enumerate() {
            functions[i] = MembershipFunction::new(FuzzyFeature::ALL[i], lo, hi, shoulder)?;
        }
        Ok(FuzzySystem { functions })
    }

    pub fn antecedent(&self, values: &[f64; 3]) -> Result<super::Antecedent, FexaiError> {
        let mut sets = [0u8; 3];
        for i in 0..3 {
            sets[i] = self.functions[i].winner(values[i])? as u8;
        }
        Ok(super::Antecedent(sets))
    }

    pub fn degrees(&self, values: &[f64; 3]) -> Result<[[f64; 3]; 3], FexaiError> {
        Ok([
            self.functions[0].degrees(values[0])?,
            self.functions[1].degrees(values[1])?,
            self.functions[2].degrees(values[2])?,
        ])
    }
}

pub fn membership_degrees(feature: FuzzyFeature, value: f64) -> Result<[f64; 3], FexaiError> {
    MembershipFunction::default_for(feature).degrees(value)
}

pub fn winner_take_all(feature: FuzzyFeature, value: f64) -> Result<&'static str, FexaiError> {
    MembershipFunction::default_for(feature).winner_label(value)
}
