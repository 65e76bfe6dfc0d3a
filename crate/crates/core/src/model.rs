//! Antipodal-Gaussian observation model.
//!
//! Under `H0` an observation is `−m + v`, under `H1` it is `+m + v`, with
//! `v` standard normal. SNR is `E = m²`, quoted in dB on `E`, so
//! `m = 10^(dB / 20)`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::numerics::{interval_prob, phi};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Hypothesis {
    H0,
    H1,
}

/// A binary observation model seen through its two conditional cdfs.
pub trait ConditionalModel {
    fn cdf(&self, hypothesis: Hypothesis, x: f64) -> f64;

    /// `Pr(lo ≤ X < hi | hypothesis)`.
    fn interval_prob(&self, hypothesis: Hypothesis, lo: f64, hi: f64) -> f64 {
        (self.cdf(hypothesis, hi) - self.cdf(hypothesis, lo)).max(0.0)
    }
}

/// Signal-to-noise ratio in decibels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Snr {
    pub db: f64,
}

impl Snr {
    pub fn amplitude(self) -> f64 {
        10f64.powf(self.db / 20.0)
    }

    pub fn energy(self) -> f64 {
        10f64.powf(self.db / 10.0)
    }
}

/// `±m` in unit-variance Gaussian noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservationModel {
    m: f64,
}

impl ObservationModel {
    pub fn new(m: f64) -> Result<Self> {
        if !(m > 0.0) || !m.is_finite() {
            return domain(format!(
                "signal amplitude must be positive and finite, got {m}"
            ));
        }
        Ok(Self { m })
    }

    pub fn from_snr(snr: Snr) -> Result<Self> {
        if !snr.db.is_finite() {
            return domain(format!("SNR must be finite, got {} dB", snr.db));
        }
        Self::new(snr.amplitude())
    }

    pub fn amplitude(&self) -> f64 {
        self.m
    }

    pub fn mean(&self, hypothesis: Hypothesis) -> f64 {
        match hypothesis {
            Hypothesis::H0 => -self.m,
            Hypothesis::H1 => self.m,
        }
    }
}

/// Build the model for an SNR given in dB.
pub fn model_from_snr_db(db: f64) -> Result<ObservationModel> {
    ObservationModel::from_snr(Snr { db })
}

impl ConditionalModel for ObservationModel {
    fn cdf(&self, hypothesis: Hypothesis, x: f64) -> f64 {
        phi(x - self.mean(hypothesis))
    }

    fn interval_prob(&self, hypothesis: Hypothesis, lo: f64, hi: f64) -> f64 {
        let mu = self.mean(hypothesis);
        interval_prob(lo - mu, hi - mu)
    }
}

/// `Pr(X ≤ x | hypothesis)`; `±∞` map to `1`/`0`.
pub fn conditional_cdf(model: &ObservationModel, hypothesis: Hypothesis, x: f64) -> f64 {
    model.cdf(hypothesis, x)
}
