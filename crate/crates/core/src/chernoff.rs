//! Chernoff-information functionals for quantized sensors and networks.
//!
//! Everything is in nats. For a pmf pair and `α ∈ [0, 1]`
//!
//! ```text
//! C(α) = −log Σ_u P(u|H0)^α · P(u|H1)^(1−α)
//! ```
//!
//! which is concave in `α`; the Chernoff information is its maximum. Cells
//! where either probability is zero contribute nothing (the limit of the
//! summand from the open interval).

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::model::ObservationModel;
use crate::numerics::maximize_concave_1d;
use crate::quantizer::SensorPmfPair;

/// Golden-section tolerance on `α`.
pub const ALPHA_TOL: f64 = 1e-10;

/// Maxima below this are treated as flat zero and reported at `α = 0.5`.
const FLAT_ZERO: f64 = 1e-15;

/// Default slack for the discrete-concavity test.
pub const CONCAVITY_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChernoffResult {
    pub value: f64,
    pub alpha_star: f64,
}

/// Log-domain view of a pmf pair restricted to cells with positive mass
/// under both hypotheses.
#[derive(Debug, Clone)]
pub(crate) struct LogPmfs {
    ln_p0: Vec<f64>,
    ln_p1: Vec<f64>,
}

impl LogPmfs {
    pub(crate) fn new(p0: &[f64], p1: &[f64]) -> Self {
        let (ln_p0, ln_p1) = p0
            .iter()
            .zip(p1)
            .filter(|(&a, &b)| a > 0.0 && b > 0.0)
            .map(|(a, b)| (a.ln(), b.ln()))
            .unzip();
        Self { ln_p0, ln_p1 }
    }

    /// `Σ_u p0^α p1^(1−α)`.
    pub(crate) fn affinity(&self, alpha: f64) -> f64 {
        self.ln_p0
            .iter()
            .zip(&self.ln_p1)
            .map(|(a, b)| (alpha * a + (1.0 - alpha) * b).exp())
            .sum()
    }

    pub(crate) fn at_alpha(&self, alpha: f64) -> f64 {
        (-self.affinity(alpha).ln()).max(0.0)
    }
}

/// One summand of the affinity, with the zero-cell convention applied.
#[inline]
pub(crate) fn affinity_term(p0: f64, p1: f64, alpha: f64) -> f64 {
    if p0 > 0.0 && p1 > 0.0 {
        p1 * (alpha * (p0 / p1).ln()).exp()
    } else {
        0.0
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return domain(format!("alpha={alpha} outside [0, 1]"));
    }
    Ok(())
}

/// `C(α)` for one sensor. Rounding below zero is clamped to zero.
pub fn chernoff_at_alpha(pmfs: &SensorPmfPair, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(LogPmfs::new(pmfs.p0(), pmfs.p1()).at_alpha(alpha))
}

fn maximize_over_alpha<F: Fn(f64) -> f64>(f: F) -> ChernoffResult {
    let (alpha, value) =
        maximize_concave_1d(&f, 0.0, 1.0, ALPHA_TOL).expect("unit interval is valid");
    if value < FLAT_ZERO {
        return ChernoffResult {
            value: f(0.5).max(0.0),
            alpha_star: 0.5,
        };
    }
    ChernoffResult {
        value,
        alpha_star: alpha,
    }
}

/// Chernoff information of one sensor: `max_α C(α)`.
pub fn chernoff_information(pmfs: &SensorPmfPair) -> ChernoffResult {
    let logs = LogPmfs::new(pmfs.p0(), pmfs.p1());
    maximize_over_alpha(|a| logs.at_alpha(a))
}

/// Chernoff information of a set of independent sensors sharing one `α`.
pub fn network_chernoff(sensors: &[SensorPmfPair]) -> Result<ChernoffResult> {
    if sensors.is_empty() {
        return domain("network_chernoff needs at least one sensor");
    }
    let logs: Vec<LogPmfs> = sensors
        .iter()
        .map(|s| LogPmfs::new(s.p0(), s.p1()))
        .collect();
    Ok(maximize_over_alpha(|a| {
        logs.iter().map(|l| l.at_alpha(a)).sum()
    }))
}

/// Chernoff information of one unquantized observation, `m² / 2`.
pub fn chernoff_raw(model: &ObservationModel) -> f64 {
    let m = model.amplitude();
    0.5 * m * m
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConcavityReport {
    pub concave: bool,
    /// Interior indices `k` where `g(k−1) + g(k+1) > 2 g(k) + slack`.
    pub violations: Vec<usize>,
}

/// Check `g(k−1) + g(k+1) ≤ 2 g(k) + slack` at every interior index.
pub fn is_discrete_concave(values: &[f64], slack: f64) -> Result<ConcavityReport> {
    if values.len() < 3 {
        return domain(format!(
            "concavity needs at least 3 values, got {}",
            values.len()
        ));
    }
    if !(slack >= 0.0) {
        return domain(format!("slack={slack} must be nonnegative"));
    }
    let violations: Vec<usize> = values
        .windows(3)
        .enumerate()
        .filter(|(_, w)| w[0] + w[2] > 2.0 * w[1] + slack)
        .map(|(i, _)| i + 1)
        .collect();
    Ok(ConcavityReport {
        concave: violations.is_empty(),
        violations,
    })
}

/// Chernoff information as a function of rate for one design method.
#[derive(Debug, Clone, PartialEq)]
pub struct ChernoffCurve {
    rates: Vec<u32>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CurveRow {
    rate: u32,
    chernoff: f64,
}

impl ChernoffCurve {
    pub fn new(rates: Vec<u32>, values: Vec<f64>) -> Result<Self> {
        if rates.len() != values.len() {
            return domain("curve rates and values differ in length");
        }
        if rates.windows(2).any(|w| w[1] <= w[0]) {
            return domain("curve rates must be strictly increasing");
        }
        if values.iter().any(|&v| !(v >= 0.0)) {
            return domain("curve values must be nonnegative");
        }
        Ok(Self { rates, values })
    }

    pub fn rates(&self) -> &[u32] {
        &self.rates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at `rate`, if present.
    pub fn at(&self, rate: u32) -> Option<f64> {
        self.rates.binary_search(&rate).ok().map(|i| self.values[i])
    }

    /// Indices where the curve decreases. A sane design method has none,
    /// but this is only ever reported, not enforced.
    pub fn monotonicity_violations(&self) -> Vec<usize> {
        self.values
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[1] < w[0])
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// Concavity over consecutive rates. Fails if rates have gaps.
    pub fn concavity(&self, slack: f64) -> Result<ConcavityReport> {
        if self.rates.windows(2).any(|w| w[1] != w[0] + 1) {
            return domain("concavity needs consecutive rates");
        }
        is_discrete_concave(&self.values, slack)
    }

    /// CSV with header `rate,chernoff`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        for (&rate, &chernoff) in self.rates.iter().zip(&self.values) {
            w.serialize(CurveRow { rate, chernoff })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rates = Vec::new();
        let mut values = Vec::new();
        for row in csv::Reader::from_reader(input).deserialize() {
            let row: CurveRow = row?;
            rates.push(row.rate);
            values.push(row.chernoff);
        }
        Self::new(rates, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ObservationModel;
    use crate::quantizer::{conditional_pmf, Quantizer};

    fn rate_one_pmfs() -> SensorPmfPair {
        let model = ObservationModel::new(1.0).unwrap();
        conditional_pmf(&Quantizer::new(1, vec![0.0]).unwrap(), &model)
    }

    #[test]
    fn identical_pmfs_have_zero_chernoff() {
        let p = SensorPmfPair::new(vec![0.1, 0.2, 0.7], vec![0.1, 0.2, 0.7]).unwrap();
        for a in [0.0, 0.3, 0.5, 1.0] {
            assert!(chernoff_at_alpha(&p, a).unwrap() < 1e-15);
        }
        let r = chernoff_information(&p);
        assert!(r.value < 1e-15);
        assert_eq!(r.alpha_star, 0.5);
    }

    #[test]
    fn endpoints_vanish_with_full_support() {
        let p = SensorPmfPair::new(vec![0.1, 0.9], vec![0.6, 0.4]).unwrap();
        assert!(chernoff_at_alpha(&p, 0.0).unwrap() < 1e-15);
        assert!(chernoff_at_alpha(&p, 1.0).unwrap() < 1e-15);
    }

    #[test]
    fn alpha_out_of_range() {
        let p = rate_one_pmfs();
        assert!(chernoff_at_alpha(&p, -0.01).is_err());
        assert!(chernoff_at_alpha(&p, 1.01).is_err());
        assert!(chernoff_at_alpha(&p, f64::NAN).is_err());
    }

    #[test]
    fn rate_one_sensor() {
        let p = rate_one_pmfs();
        let c = chernoff_at_alpha(&p, 0.5).unwrap();
        assert!((c - 0.313_740_531_5).abs() < 1e-9, "{c}");
        let r = chernoff_information(&p);
        assert!((r.alpha_star - 0.5).abs() < 1e-7, "{}", r.alpha_star);
        assert!((r.value - c).abs() < 1e-15);
    }

    #[test]
    fn zero_cells_are_skipped() {
        let p = SensorPmfPair::new(vec![0.0, 0.5, 0.5], vec![0.5, 0.5, 0.0]).unwrap();
        // Only the middle cell counts: −log(0.5).
        let c = chernoff_at_alpha(&p, 0.3).unwrap();
        assert!((c - std::f64::consts::LN_2).abs() < 1e-15);
        let r = chernoff_information(&p);
        assert!((r.value - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn asymmetric_pair_has_off_center_alpha() {
        let p = SensorPmfPair::new(vec![0.9, 0.1], vec![0.4, 0.6]).unwrap();
        let r = chernoff_information(&p);
        assert!(r.alpha_star > 0.0 && r.alpha_star < 1.0);
        assert!((r.alpha_star - 0.5).abs() > 1e-3);
        for a in [0.1, 0.3, 0.5, 0.7, 0.9] {
            assert!(chernoff_at_alpha(&p, a).unwrap() <= r.value + 1e-14);
        }
    }

    #[test]
    fn network_examples() {
        assert!(network_chernoff(&[]).is_err());
        let p = rate_one_pmfs();
        let single = chernoff_information(&p);
        let one = network_chernoff(std::slice::from_ref(&p)).unwrap();
        assert!((one.value - single.value).abs() < 1e-15);
        let five = network_chernoff(&vec![p; 5]).unwrap();
        assert!((five.value - 5.0 * single.value).abs() < 1e-10);
        assert!((five.alpha_star - single.alpha_star).abs() < 1e-6);
    }

    #[test]
    fn network_bounded_by_sum_of_individual_maxima() {
        let a = SensorPmfPair::new(vec![0.9, 0.1], vec![0.4, 0.6]).unwrap();
        let b = SensorPmfPair::new(vec![0.3, 0.7], vec![0.95, 0.05]).unwrap();
        let net = network_chernoff(&[a.clone(), b.clone()]).unwrap();
        let sum = chernoff_information(&a).value + chernoff_information(&b).value;
        assert!(net.value < sum - 1e-6);
    }

    #[test]
    fn raw_chernoff() {
        assert_eq!(chernoff_raw(&ObservationModel::new(1.0).unwrap()), 0.5);
        let m = ObservationModel::new(10f64.powf(0.1)).unwrap();
        assert!((chernoff_raw(&m) - 0.792_446_596_230_557).abs() < 1e-12);
        assert!(chernoff_raw(&ObservationModel::new(1e-9).unwrap()) < 1e-17);
    }

    #[test]
    fn concavity_examples() {
        let fig = [
            0.0, 0.313741, 0.437325, 0.481768, 0.495084, 0.498723, 0.499675, 0.499918,
        ];
        assert!(is_discrete_concave(&fig, CONCAVITY_SLACK).unwrap().concave);
        let r = is_discrete_concave(&[0.0, 1.0, 3.0], CONCAVITY_SLACK).unwrap();
        assert!(!r.concave);
        assert_eq!(r.violations, vec![1]);
        let affine: Vec<f64> = (0..10).map(|k| 0.25 * k as f64 - 1.0).collect();
        assert!(is_discrete_concave(&affine, 0.0).unwrap().concave);
        assert!(is_discrete_concave(&[1.0, 2.0], 0.0).is_err());
        assert!(is_discrete_concave(&[1.0, 2.0, 3.0], -1.0).is_err());
    }

    #[test]
    fn curve_csv_round_trip() {
        let curve = ChernoffCurve::new(vec![0, 1, 2], vec![0.0, 0.1 + 0.2, 1.0 / 3.0]).unwrap();
        let mut buf = Vec::new();
        curve.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("rate,chernoff\n0,0.0\n"));
        assert_eq!(ChernoffCurve::read_csv(&buf[..]).unwrap(), curve);
        assert_eq!(curve.at(2), Some(1.0 / 3.0));
        assert_eq!(curve.at(5), None);
    }

    #[test]
    fn curve_validation() {
        assert!(ChernoffCurve::new(vec![0, 0], vec![0.0, 0.0]).is_err());
        assert!(ChernoffCurve::new(vec![0], vec![-1.0]).is_err());
        let c = ChernoffCurve::new(vec![0, 1, 2], vec![0.0, 0.5, 0.4]).unwrap();
        assert_eq!(c.monotonicity_violations(), vec![2]);
        let gappy = ChernoffCurve::new(vec![0, 2, 3], vec![0.0, 0.5, 0.6]).unwrap();
        assert!(gappy.concavity(0.0).is_err());
    }
}
