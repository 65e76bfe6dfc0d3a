//! Monotone scalar quantizers and the message pmfs they induce.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::model::{ConditionalModel, Hypothesis};

/// Largest supported sensor rate in bits (65536 cells).
pub const MAX_RATE: u32 = 16;

pub(crate) fn check_rate(rate: u32) -> Result<()> {
    if rate > MAX_RATE {
        return Err(Error::Capacity(format!(
            "rate {rate} exceeds the supported maximum of {MAX_RATE} bits"
        )));
    }
    Ok(())
}

/// A rate-`r` monotone quantizer: `2^r − 1` sorted thresholds splitting the
/// real line into `2^r` half-open cells `[b_{u−1}, b_u)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawQuantizer")]
pub struct Quantizer {
    rate: u32,
    boundaries: Vec<f64>,
}

#[derive(Deserialize)]
struct RawQuantizer {
    rate: u32,
    boundaries: Vec<f64>,
}

impl TryFrom<RawQuantizer> for Quantizer {
    type Error = Error;

    fn try_from(raw: RawQuantizer) -> Result<Self> {
        Quantizer::new(raw.rate, raw.boundaries)
    }
}

impl Quantizer {
    pub fn new(rate: u32, boundaries: Vec<f64>) -> Result<Self> {
        check_rate(rate)?;
        let expected = (1usize << rate) - 1;
        if boundaries.len() != expected {
            return domain(format!(
                "rate-{rate} quantizer needs {expected} boundaries, got {}",
                boundaries.len()
            ));
        }
        if let Some(b) = boundaries.iter().find(|b| !b.is_finite()) {
            return domain(format!("non-finite quantizer boundary {b}"));
        }
        if boundaries.windows(2).any(|w| w[1] < w[0]) {
            return domain("quantizer boundaries must be sorted nondecreasing");
        }
        Ok(Self { rate, boundaries })
    }

    /// The single-cell, uninformative quantizer.
    pub fn constant() -> Self {
        Self {
            rate: 0,
            boundaries: Vec::new(),
        }
    }

    pub fn rate(&self) -> u32 {
        self.rate
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn cells(&self) -> usize {
        self.boundaries.len() + 1
    }

    /// Zero-based message index of `x`.
    pub fn quantize(&self, x: f64) -> usize {
        self.boundaries.partition_point(|&b| b <= x)
    }

    /// `[lo, hi)` of cell `u` (zero-based).
    pub fn cell_edges(&self, u: usize) -> (f64, f64) {
        let lo = if u == 0 {
            f64::NEG_INFINITY
        } else {
            self.boundaries[u - 1]
        };
        let hi = self.boundaries.get(u).copied().unwrap_or(f64::INFINITY);
        (lo, hi)
    }

    /// True when no two thresholds coincide.
    pub fn is_strictly_increasing(&self) -> bool {
        self.boundaries.windows(2).all(|w| w[0] < w[1])
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Conditional pmfs `P(u | H0)` and `P(u | H1)` of one sensor's message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorPmfPair {
    p0: Vec<f64>,
    p1: Vec<f64>,
}

const PMF_SUM_TOL: f64 = 1e-12;

impl SensorPmfPair {
    pub fn new(p0: Vec<f64>, p1: Vec<f64>) -> Result<Self> {
        if p0.is_empty() || p0.len() != p1.len() {
            return domain(format!(
                "pmf pair needs two nonempty vectors of equal length ({} vs {})",
                p0.len(),
                p1.len()
            ));
        }
        for (name, p) in [("p0", &p0), ("p1", &p1)] {
            if p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
                return domain(format!("{name} has a negative or non-finite entry"));
            }
            let s: f64 = p.iter().sum();
            if (s - 1.0).abs() > PMF_SUM_TOL {
                return domain(format!("{name} sums to {s}, not 1"));
            }
        }
        Ok(Self { p0, p1 })
    }

    pub fn p0(&self) -> &[f64] {
        &self.p0
    }

    pub fn p1(&self) -> &[f64] {
        &self.p1
    }

    pub fn get(&self, hypothesis: Hypothesis) -> &[f64] {
        match hypothesis {
            Hypothesis::H0 => &self.p0,
            Hypothesis::H1 => &self.p1,
        }
    }

    pub fn cells(&self) -> usize {
        self.p0.len()
    }

    /// Relabel messages: cell `u` of the result is cell `order[u]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.cells()];
        if order.len() != self.cells() {
            return domain("permutation length does not match cell count");
        }
        for &u in order {
            if u >= seen.len() || std::mem::replace(&mut seen[u], true) {
                return domain("not a permutation of the cell indices");
            }
        }
        Ok(Self {
            p0: order.iter().map(|&u| self.p0[u]).collect(),
            p1: order.iter().map(|&u| self.p1[u]).collect(),
        })
    }
}

/// Message pmfs of `q` under both hypotheses of `model`.
pub fn conditional_pmf<M: ConditionalModel>(q: &Quantizer, model: &M) -> SensorPmfPair {
    let cell_probs = |h| -> Vec<f64> {
        (0..q.cells())
            .map(|u| {
                let (lo, hi) = q.cell_edges(u);
                model.interval_prob(h, lo, hi)
            })
            .collect()
    };
    SensorPmfPair {
        p0: cell_probs(Hypothesis::H0),
        p1: cell_probs(Hypothesis::H1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ObservationModel;

    const G1: f64 = 0.841_344_746_068_542_9;

    #[test]
    fn validation() {
        assert!(Quantizer::new(1, vec![]).is_err());
        assert!(Quantizer::new(2, vec![0.0, -1.0, 1.0]).is_err());
        assert!(Quantizer::new(1, vec![f64::NAN]).is_err());
        assert!(matches!(
            Quantizer::new(17, vec![]),
            Err(Error::Capacity(_))
        ));
        let q = Quantizer::new(2, vec![-1.0, 0.0, 0.0]).unwrap();
        assert!(!q.is_strictly_increasing());
        assert_eq!(Quantizer::constant().cells(), 1);
    }

    #[test]
    fn quantize_uses_half_open_cells() {
        let q = Quantizer::new(2, vec![-1.0, 0.0, 1.0]).unwrap();
        assert_eq!(q.quantize(-5.0), 0);
        assert_eq!(q.quantize(-1.0), 1);
        assert_eq!(q.quantize(-0.5), 1);
        assert_eq!(q.quantize(0.0), 2);
        assert_eq!(q.quantize(1.0), 3);
        assert_eq!(q.quantize(f64::INFINITY), 3);
        assert_eq!(q.cell_edges(0), (f64::NEG_INFINITY, -1.0));
        assert_eq!(q.cell_edges(3), (1.0, f64::INFINITY));
    }

    #[test]
    fn json_round_trip_and_schema() {
        let q = Quantizer::new(2, vec![-1.168_250_516_524_053_7, 0.0, 0.1 + 0.2]).unwrap();
        let s = q.to_json().unwrap();
        assert!(s.starts_with(r#"{"rate":2,"boundaries":["#));
        assert_eq!(Quantizer::from_json(&s).unwrap(), q);
        assert!(Quantizer::from_json(r#"{"rate":1,"boundaries":[]}"#).is_err());
    }

    #[test]
    fn rate_one_pmf() {
        let model = ObservationModel::new(1.0).unwrap();
        let q = Quantizer::new(1, vec![0.0]).unwrap();
        let pmf = conditional_pmf(&q, &model);
        assert!((pmf.p0()[0] - G1).abs() < 1e-15);
        assert!((pmf.p0()[1] - (1.0 - G1)).abs() < 1e-15);
        assert!((pmf.p1()[0] - (1.0 - G1)).abs() < 1e-15);
        assert!((pmf.p1()[1] - G1).abs() < 1e-15);
    }

    #[test]
    fn rate_zero_pmf() {
        let model = ObservationModel::new(2.5).unwrap();
        let pmf = conditional_pmf(&Quantizer::constant(), &model);
        assert_eq!(pmf.p0(), &[1.0]);
        assert_eq!(pmf.p1(), &[1.0]);
    }

    #[test]
    fn symmetric_quantizer_gives_reversed_pmfs() {
        let model = ObservationModel::new(1.0).unwrap();
        let q = Quantizer::new(2, vec![-1.2, 0.0, 1.2]).unwrap();
        let pmf = conditional_pmf(&q, &model);
        let rev: Vec<f64> = pmf.p0().iter().rev().copied().collect();
        for (a, b) in rev.iter().zip(pmf.p1()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn pair_validation_and_permutation() {
        assert!(SensorPmfPair::new(vec![0.5, 0.5], vec![1.0]).is_err());
        assert!(SensorPmfPair::new(vec![0.5, 0.6], vec![0.5, 0.5]).is_err());
        assert!(SensorPmfPair::new(vec![-0.1, 1.1], vec![0.5, 0.5]).is_err());
        let p = SensorPmfPair::new(vec![0.2, 0.3, 0.5], vec![0.6, 0.3, 0.1]).unwrap();
        let r = p.permuted(&[2, 0, 1]).unwrap();
        assert_eq!(r.p0(), &[0.5, 0.2, 0.3]);
        assert_eq!(r.p1(), &[0.1, 0.6, 0.3]);
        assert!(p.permuted(&[0, 0, 1]).is_err());
    }
}
