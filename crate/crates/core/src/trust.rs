//! Edge-server trust ledger: per-camera scores in [0, 1] updated as an
//! exponential moving average of fusion agreement.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::{CameraId, Error, Real, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustLedger<T> {
    scores: BTreeMap<CameraId, T>,
    learning_rate: T,
    initial_score: T,
}

impl<T: Real> Default for TrustLedger<T> {
    fn default() -> Self {
        TrustLedger::new(T::lit(0.1), T::lit(0.5)).expect("default ledger parameters are valid")
    }
}

impl<T: Real> TrustLedger<T> {
    pub fn new(learning_rate: T, initial_score: T) -> Result<Self> {
        if !(learning_rate > T::zero() && learning_rate <= T::one()) {
            return Err(Error::OutOfRange(learning_rate.to_f64().unwrap_or(f64::NAN)));
        }
        check_unit(initial_score)?;
        Ok(TrustLedger {
            scores: BTreeMap::new(),
            learning_rate,
            initial_score,
        })
    }

    /// Current score; unseen cameras report the initial score.
    pub fn score(&self, camera: &CameraId) -> T {
        self.scores.get(camera).copied().unwrap_or(self.initial_score)
    }

    pub fn scores(&self) -> &BTreeMap<CameraId, T> {
        &self.scores
    }

    /// `score <- (1 - lr) * score + lr * agreement`.
    pub fn update(&mut self, camera: &CameraId, agreement: T) -> Result<T> {
        if !(agreement >= T::zero() && agreement <= T::one()) {
            return Err(Error::InvalidAgreement(agreement.to_f64().unwrap_or(f64::NAN)));
        }
        let lr = self.learning_rate;
        let entry = self.scores.entry(camera.clone()).or_insert(self.initial_score);
        *entry = ((T::one() - lr) * *entry + lr * agreement).min(T::one()).max(T::zero());
        Ok(*entry)
    }

    /// Whether the camera's shares may enter fusion.
    pub fn allows(&self, camera: &CameraId, min_trust: T) -> bool {
        self.score(camera) >= min_trust
    }
}

pub fn update_trust<T: Real>(mut ledger: TrustLedger<T>, camera: &CameraId, agreement: T) -> Result<TrustLedger<T>> {
    ledger.update(camera, agreement)?;
    Ok(ledger)
}

pub fn gate_by_trust<T: Real>(ledger: &TrustLedger<T>, camera: &CameraId, min_trust: T) -> bool {
    ledger.allows(camera, min_trust)
}

/// The five trust bands, anchored at 0, 0.3, 0.5, 0.7 and 1.0 with
/// boundaries at the midpoints between anchors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TrustLevel {
    ExtremelyHarmful,
    Risky,
    SemiSafe,
    Safe,
    CompletelySafe,
}

impl TrustLevel {
    pub fn description(self) -> &'static str {
        match self {
            TrustLevel::ExtremelyHarmful => "Completely untrustworthy",
            TrustLevel::Risky => "Risk trust",
            TrustLevel::SemiSafe => "Semi-trust",
            TrustLevel::Safe => "Trustworthy",
            TrustLevel::CompletelySafe => "Completely Trustworthy",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            TrustLevel::ExtremelyHarmful => "Extremely harmful",
            TrustLevel::Risky => "Risky",
            TrustLevel::SemiSafe => "Semi-Safe",
            TrustLevel::Safe => "Safe",
            TrustLevel::CompletelySafe => "Completely Safe",
        }
    }

    pub fn from_score<T: Real>(score: T) -> Result<Self> {
        check_unit(score)?;
        let level = if score < T::lit(0.15) {
            TrustLevel::ExtremelyHarmful
        } else if score < T::lit(0.40) {
            TrustLevel::Risky
        } else if score < T::lit(0.60) {
            TrustLevel::SemiSafe
        } else if score < T::lit(0.85) {
            TrustLevel::Safe
        } else {
            TrustLevel::CompletelySafe
        };
        Ok(level)
    }
}

/// `(description, label)` for a score.
pub fn trust_label<T: Real>(score: T) -> Result<(&'static str, &'static str)> {
    let level = TrustLevel::from_score(score)?;
    Ok((level.description(), level.label()))
}

fn check_unit<T: Real>(v: T) -> Result<()> {
    if v >= T::zero() && v <= T::one() {
        Ok(())
    } else {
        Err(Error::OutOfRange(v.to_f64().unwrap_or(f64::NAN)))
    }
}
