//! Vulnerability factor: the weighted share of risk conditions a profile meets.

use serde::{Deserialize, Serialize};

use crate::corpus::{BullyingHistory, Ethnicity, Gender, InternetUse, Race, UserProfile};
use crate::{Error, Result};

/// One weight per risk factor. A factor contributes its full weight when its
/// condition holds; recency tiers of past bullying all share one weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VulnerabilityWeights {
    pub age: f64,
    pub gender: f64,
    pub race_ethnicity: f64,
    pub past_bullying: f64,
    pub internet_use: f64,
    pub internal_issues: f64,
    pub external_issues: f64,
}

impl Default for VulnerabilityWeights {
    fn default() -> Self {
        VulnerabilityWeights {
            age: 0.04,
            gender: 0.12,
            race_ethnicity: 0.02,
            past_bullying: 0.42,
            internet_use: 0.17,
            internal_issues: 0.28,
            external_issues: 0.21,
        }
    }
}

impl VulnerabilityWeights {
    pub fn as_array(&self) -> [f64; 7] {
        [
            self.age,
            self.gender,
            self.race_ethnicity,
            self.past_bullying,
            self.internet_use,
            self.internal_issues,
            self.external_issues,
        ]
    }

    pub fn total(&self) -> f64 {
        self.as_array().iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(w) = self.as_array().iter().find(|w| !(0.0..=1.0).contains(*w)) {
            return Err(Error::Config(format!("vulnerability weight {w} outside [0, 1]")));
        }
        if self.total() <= 0.0 {
            return Err(Error::Config("vulnerability weights sum to zero".into()));
        }
        Ok(())
    }
}

/// The seven risk conditions, in weight-table order.
pub fn conditions(p: &UserProfile) -> [bool; 7] {
    [
        (11..=16).contains(&p.age),
        p.gender == Gender::Female,
        p.race == Race::Nonwhite || p.ethnicity == Ethnicity::HispanicLatino,
        p.bullying_history != BullyingHistory::None,
        matches!(p.internet_use, InternetUse::FourToSixHDaily | InternetUse::Gt6hDaily),
        p.depression || p.anxiety || p.self_esteem_issues,
        p.disciplinary_issues || p.substance_abuse,
    ]
}

/// Sum of the weights whose condition holds, divided by the sum of all weights.
pub fn vf(profile: &UserProfile, w: &VulnerabilityWeights) -> Result<f64> {
    w.validate()?;
    let met: f64 = conditions(profile)
        .iter()
        .zip(w.as_array())
        .filter(|(hit, _)| **hit)
        .fold(0.0, |acc, (_, weight)| acc + weight);
    Ok(met / w.total())
}
