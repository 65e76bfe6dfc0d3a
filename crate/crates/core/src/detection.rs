//! Fusion-center error probabilities.
//!
//! The fusion center applies the MAP rule to the product of the sensors'
//! message pmfs. [`exact_map_error`] enumerates the whole message space;
//! [`monte_carlo_error`] simulates observations, quantizes them and runs the
//! likelihood-ratio test, which also covers `T > 1` snapshots.

use std::io::Write;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::{Hypothesis, ObservationModel};
use crate::quantizer::{conditional_pmf, Quantizer, SensorPmfPair};
use crate::rng::{mix64, stream, unit_f64};

/// Largest message space [`exact_map_error`] will enumerate.
pub const MAX_EXACT_MESSAGES: u128 = 1 << 24;

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    quantizers: Vec<Quantizer>,
    pmfs: Vec<SensorPmfPair>,
    model: ObservationModel,
    priors: (f64, f64),
}

impl NetworkConfig {
    /// Network with equal priors.
    pub fn new(quantizers: Vec<Quantizer>, model: ObservationModel) -> Result<Self> {
        Self::with_priors(quantizers, model, (0.5, 0.5))
    }

    pub fn with_priors(
        quantizers: Vec<Quantizer>,
        model: ObservationModel,
        priors: (f64, f64),
    ) -> Result<Self> {
        if quantizers.is_empty() {
            return domain("a network needs at least one sensor");
        }
        let (p0, p1) = priors;
        if !(p0 >= 0.0 && p1 >= 0.0) || (p0 + p1 - 1.0).abs() > 1e-12 {
            return domain(format!(
                "priors ({p0}, {p1}) must be nonnegative and sum to 1"
            ));
        }
        let pmfs = quantizers
            .iter()
            .map(|q| conditional_pmf(q, &model))
            .collect();
        Ok(Self {
            quantizers,
            pmfs,
            model,
            priors,
        })
    }

    pub fn quantizers(&self) -> &[Quantizer] {
        &self.quantizers
    }

    pub fn pmfs(&self) -> &[SensorPmfPair] {
        &self.pmfs
    }

    pub fn model(&self) -> &ObservationModel {
        &self.model
    }

    pub fn priors(&self) -> (f64, f64) {
        self.priors
    }

    /// Size of the joint message space, `Π K_n`.
    pub fn message_space(&self) -> u128 {
        self.pmfs
            .iter()
            .fold(1u128, |acc, p| acc.saturating_mul(p.cells() as u128))
    }

    /// The network seen over `t` snapshots: every sensor repeated `t` times.
    /// Its single-shot error equals the original network's `T = t` error.
    pub fn replicated(&self, t: usize) -> Self {
        let quantizers: Vec<Quantizer> = (0..t)
            .flat_map(|_| self.quantizers.iter().cloned())
            .collect();
        let pmfs = (0..t).flat_map(|_| self.pmfs.iter().cloned()).collect();
        Self {
            quantizers,
            pmfs,
            model: self.model,
            priors: self.priors,
        }
    }
}

/// Bayes error of the MAP fusion rule for one snapshot.
///
/// Computes `Σ_u min_j π_j P(u|H_j)` over the product message space, which
/// equals `1 − Σ_u max_j π_j P(u|H_j)` but keeps full relative precision
/// when the error is small. Joint pmfs are accumulated in the log domain.
/// The first sensor's messages split the work into blocks that are summed
/// in block order.
pub fn exact_map_error(config: &NetworkConfig) -> Result<f64> {
    let size = config.message_space();
    if size > MAX_EXACT_MESSAGES {
        return Err(Error::Capacity(format!(
            "message space of {size} vectors exceeds the exact-enumeration limit of {MAX_EXACT_MESSAGES}"
        )));
    }
    let logs: Vec<(Vec<f64>, Vec<f64>)> = config
        .pmfs
        .iter()
        .map(|p| {
            (
                p.p0().iter().map(|x| x.ln()).collect(),
                p.p1().iter().map(|x| x.ln()).collect(),
            )
        })
        .collect();
    let (pi0, pi1) = config.priors;
    let (lp0, lp1) = (pi0.ln(), pi1.ln());

    fn walk(logs: &[(Vec<f64>, Vec<f64>)], l0: f64, l1: f64) -> f64 {
        if l0 == f64::NEG_INFINITY && l1 == f64::NEG_INFINITY {
            return 0.0;
        }
        match logs.split_first() {
            None => l0.min(l1).exp(),
            Some(((a, b), rest)) => a
                .iter()
                .zip(b)
                .map(|(x, y)| walk(rest, l0 + x, l1 + y))
                .sum(),
        }
    }

    let ((first0, first1), rest) = logs.split_first().expect("nonempty network");
    let blocks: Vec<f64> = first0
        .par_iter()
        .zip(first1.par_iter())
        .map(|(x, y)| walk(rest, lp0 + x, lp1 + y))
        .collect();
    Ok(blocks.iter().sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    /// Snapshots `T` per trial.
    pub snapshots: usize,
    pub trials: u64,
    pub seed: u64,
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.snapshots == 0 {
            return domain("snapshots must be at least 1");
        }
        if self.trials == 0 {
            return domain("trials must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub estimate: f64,
    /// Binomial standard error `√(p̂(1 − p̂)/trials)`.
    pub std_err: f64,
    pub errors: u64,
    pub trials: u64,
}

/// Monte-Carlo error rate of the MAP fusion rule over `T` snapshots.
///
/// Trial `i` draws from its own stream `(seed, i)`: first `H` (H1 when a
/// uniform draw is below `π1`), then `T × N` observations in snapshot-major
/// order. The rule decides H1 iff the summed log-likelihood ratio exceeds
/// `log(π0/π1)`, so ties go to H0.
pub fn monte_carlo_error(config: &NetworkConfig, mc: &McConfig) -> Result<McEstimate> {
    mc.validate()?;
    let llr: Vec<Vec<f64>> = config
        .pmfs
        .iter()
        .map(|p| {
            p.p0()
                .iter()
                .zip(p.p1())
                .map(|(&a, &b)| {
                    if a == 0.0 && b == 0.0 {
                        f64::NAN
                    } else {
                        b.ln() - a.ln()
                    }
                })
                .collect()
        })
        .collect();
    let (pi0, pi1) = config.priors;
    let threshold = pi0.ln() - pi1.ln();
    let model = config.model;

    let run = |trial: u64| -> Result<bool> {
        let mut rng = stream(mc.seed, trial);
        let h = if unit_f64(&mut rng) < pi1 {
            Hypothesis::H1
        } else {
            Hypothesis::H0
        };
        let mean = model.mean(h);
        let mut sum = 0.0;
        for _ in 0..mc.snapshots {
            for (q, table) in config.quantizers.iter().zip(&llr) {
                let noise: f64 = StandardNormal.sample(&mut rng);
                let l = table[q.quantize(mean + noise)];
                if l.is_nan() {
                    return Err(Error::Invariant(
                        "message fell in a cell with zero probability under both hypotheses".into(),
                    ));
                }
                sum += l;
            }
        }
        let decide_h1 = sum > threshold;
        Ok(decide_h1 != (h == Hypothesis::H1))
    };

    let errors = (0..mc.trials)
        .into_par_iter()
        .map(|t| run(t).map(u64::from))
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    let n = mc.trials as f64;
    let p = errors as f64 / n;
    Ok(McEstimate {
        estimate: p,
        std_err: (p * (1.0 - p) / n).sqrt(),
        errors,
        trials: mc.trials,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentPoint {
    pub snapshots: usize,
    /// `−(1/T) log P̂_E`.
    pub exponent: f64,
    pub estimate: McEstimate,
    /// No errors were observed; `exponent` uses `P̂_E = 1/trials` and is
    /// only a lower bound.
    pub lower_bound: bool,
}

/// Empirical error exponents for each `T` in `t_values`. Each `T` uses its
/// own stream seed derived from `(seed, T)`.
pub fn exponent_estimate(
    config: &NetworkConfig,
    t_values: &[usize],
    trials_per_t: u64,
    seed: u64,
) -> Result<Vec<ExponentPoint>> {
    t_values
        .iter()
        .map(|&t| {
            let mc = McConfig {
                snapshots: t,
                trials: trials_per_t,
                seed: mix64(seed ^ (t as u64).wrapping_mul(0xD1B5_4A32_D192_ED03)),
            };
            let estimate = monte_carlo_error(config, &mc)?;
            let lower_bound = estimate.errors == 0;
            let p = if lower_bound {
                1.0 / trials_per_t as f64
            } else {
                estimate.estimate
            };
            Ok(ExponentPoint {
                snapshots: t,
                exponent: -p.ln() / t as f64,
                estimate,
                lower_bound,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactRow {
    pub snr_db: f64,
    pub allocation: String,
    pub pe: f64,
    pub log10_pe: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McRow {
    pub snr_db: f64,
    pub allocation: String,
    #[serde(rename = "T")]
    pub snapshots: usize,
    pub estimate: f64,
    pub std_err: f64,
}

/// Write serializable rows as LF-terminated CSV with a header.
pub fn write_rows<W: Write, S: Serialize>(rows: &[S], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
