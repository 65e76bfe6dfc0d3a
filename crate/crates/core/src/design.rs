//! Sensor design methods.
//!
//! * [`design_bb`]: the asymptotically optimal compander for the
//!   antipodal-Gaussian model, `q(x) = Φ(x / √3)`, whose uniform
//!   quantization gives thresholds `b_i = √3 Φ⁻¹(i / 2^r)` for every SNR.
//! * [`design_numerical`]: coordinate ascent on `C(γ, α)` from random
//!   thresholds, one threshold at a time followed by `α`, with restarts.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chernoff::{affinity_term, chernoff_information, LogPmfs, ALPHA_TOL};
use crate::error::{domain, Error, Result};
use crate::model::{ConditionalModel, Hypothesis, ObservationModel};
use crate::numerics::{maximize_concave_1d, phi, q_tail, std_normal_inv_cdf};
use crate::quantizer::{check_rate, conditional_pmf, Quantizer};
use crate::rng::{stream, unit_f64};

/// Random initial thresholds are drawn from `[−m − 5, m + 5]`.
pub const INIT_HALF_WIDTH: f64 = 5.0;

/// The outermost thresholds are searched within `[−m − 8, m + 8]`; beyond
/// that both tails carry less than `Φ(−8) ≈ 6e-16` of mass.
pub const SEARCH_HALF_WIDTH: f64 = 8.0;

/// Golden-section tolerance when refining a threshold.
const BOUNDARY_TOL: f64 = 1e-10;

/// Allowed rounding drop of the objective between full iterations.
const MONOTONE_SLACK: f64 = 1e-12;

/// Thresholds of the compander design for `rate` bits.
pub fn design_bb(rate: u32) -> Result<Quantizer> {
    check_rate(rate)?;
    let cells = 1usize << rate;
    let sqrt3 = 3f64.sqrt();
    let boundaries = (1..cells)
        .map(|i| std_normal_inv_cdf(i as f64 / cells as f64).map(|z| sqrt3 * z))
        .collect::<Result<Vec<_>>>()?;
    let q = Quantizer::new(rate, boundaries)?;
    debug_assert!(q.is_strictly_increasing());
    Ok(q)
}

/// High-rate approximation of the compander's Chernoff information,
/// `m²/2 − log(1 + (π√3 m² / 4) · 2^(−2r))`.
///
/// Only meaningful for large `rate`; it goes negative at `rate = 0`.
pub fn bb_asymptotic_chernoff(rate: u32, m: f64) -> Result<f64> {
    if !(m > 0.0) || !m.is_finite() {
        return domain(format!("signal amplitude must be positive, got {m}"));
    }
    let m2 = m * m;
    let gap = std::f64::consts::PI * 3f64.sqrt() * m2 / 4.0 * (-2.0 * rate as f64).exp2();
    Ok(0.5 * m2 - gap.ln_1p())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignerConfig {
    /// Stop once a full iteration improves the objective by less than this.
    pub eta: f64,
    pub restarts: usize,
    pub seed: u64,
    /// Coarse samples per threshold before golden-section refinement.
    pub grid_points: usize,
    pub max_iters: usize,
}

impl Default for DesignerConfig {
    fn default() -> Self {
        Self {
            eta: 1e-4,
            restarts: 16,
            seed: 0,
            grid_points: 64,
            max_iters: 10_000,
        }
    }
}

impl DesignerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return domain(format!("eta={} must be positive", self.eta));
        }
        if self.restarts == 0 {
            return domain("restarts must be at least 1");
        }
        if self.grid_points < 3 {
            return domain("grid_points must be at least 3");
        }
        if self.max_iters == 0 {
            return domain("max_iters must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NumericalDesign {
    pub quantizer: Quantizer,
    pub chernoff: f64,
    pub alpha_star: f64,
    /// Index of the winning restart.
    pub restart: usize,
    /// Full iterations run by the winning restart.
    pub iterations: usize,
    /// Objective `C(γ, α)` of the winning restart: the initial value, then
    /// one entry per full iteration.
    pub history: Vec<f64>,
}

/// Best of `cfg.restarts` coordinate-ascent runs. Restarts run in parallel;
/// the highest Chernoff value wins and ties go to the lowest restart index.
pub fn design_numerical(
    rate: u32,
    model: &ObservationModel,
    cfg: &DesignerConfig,
) -> Result<NumericalDesign> {
    check_rate(rate)?;
    cfg.validate()?;
    if rate == 0 {
        return Ok(NumericalDesign {
            quantizer: Quantizer::constant(),
            chernoff: 0.0,
            alpha_star: 0.5,
            restart: 0,
            iterations: 0,
            history: vec![0.0],
        });
    }

    let runs: Vec<Result<NumericalDesign>> = (0..cfg.restarts)
        .into_par_iter()
        .map(|restart| single_start(rate, model, cfg, restart))
        .collect();

    let mut best: Option<NumericalDesign> = None;
    for run in runs {
        let run = run?;
        if best.as_ref().is_none_or(|b| run.chernoff > b.chernoff) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn single_start(
    rate: u32,
    model: &ObservationModel,
    cfg: &DesignerConfig,
    restart: usize,
) -> Result<NumericalDesign> {
    let m = model.amplitude();
    let mut rng = stream(cfg.seed, restart as u64);
    let (lo, hi) = (-m - INIT_HALF_WIDTH, m + INIT_HALF_WIDTH);
    let mut boundaries: Vec<f64> = (0..(1usize << rate) - 1)
        .map(|_| lo + (hi - lo) * unit_f64(&mut rng))
        .collect();
    boundaries.sort_by(f64::total_cmp);

    let mut ascent = Ascent::new(model, boundaries, 0.5, cfg.grid_points);
    let mut prev = ascent.objective();
    let mut history = vec![prev];
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        iterations += 1;
        ascent.sweep_boundaries();
        ascent.update_alpha();
        let obj = ascent.objective();
        if obj < prev - MONOTONE_SLACK {
            return Err(Error::Invariant(format!(
                "coordinate ascent decreased the objective from {prev} to {obj} \
                 (rate {rate}, restart {restart}, iteration {iterations})"
            )));
        }
        history.push(obj);
        let improvement = obj - prev;
        prev = obj;
        if improvement < cfg.eta {
            break;
        }
    }

    let quantizer = Quantizer::new(rate, ascent.boundaries)?;
    let result = chernoff_information(&conditional_pmf(&quantizer, model));
    Ok(NumericalDesign {
        quantizer,
        chernoff: result.value,
        alpha_star: result.alpha_star,
        restart,
        iterations,
        history,
    })
}

/// Coordinate-ascent state: thresholds, cached cell probabilities and `α`.
struct Ascent<'a> {
    model: &'a ObservationModel,
    boundaries: Vec<f64>,
    p0: Vec<f64>,
    p1: Vec<f64>,
    alpha: f64,
    grid_points: usize,
    window: f64,
}

impl<'a> Ascent<'a> {
    fn new(
        model: &'a ObservationModel,
        boundaries: Vec<f64>,
        alpha: f64,
        grid_points: usize,
    ) -> Self {
        let mut s = Self {
            model,
            boundaries,
            p0: Vec::new(),
            p1: Vec::new(),
            alpha,
            grid_points,
            window: model.amplitude() + SEARCH_HALF_WIDTH,
        };
        let cells = s.boundaries.len() + 1;
        for u in 0..cells {
            let (lo, hi) = s.edges(u);
            s.p0.push(model.interval_prob(Hypothesis::H0, lo, hi));
            s.p1.push(model.interval_prob(Hypothesis::H1, lo, hi));
        }
        s
    }

    fn edges(&self, u: usize) -> (f64, f64) {
        let lo = if u == 0 {
            f64::NEG_INFINITY
        } else {
            self.boundaries[u - 1]
        };
        let hi = self.boundaries.get(u).copied().unwrap_or(f64::INFINITY);
        (lo, hi)
    }

    fn objective(&self) -> f64 {
        let s: f64 = self
            .p0
            .iter()
            .zip(&self.p1)
            .map(|(&a, &b)| affinity_term(a, b, self.alpha))
            .sum();
        -s.ln()
    }

    fn tails(&self, x: f64) -> [Tails; 2] {
        [
            Tails::at(x - self.model.mean(Hypothesis::H0)),
            Tails::at(x - self.model.mean(Hypothesis::H1)),
        ]
    }

    /// Affinity contribution of the two cells on either side of a threshold
    /// at `x`, given the tails at the neighbouring thresholds. Lower is better.
    fn local(&self, left: &[Tails; 2], right: &[Tails; 2], x: f64) -> (f64, [f64; 4]) {
        let mid = self.tails(x);
        let a0 = Tails::between(&left[0], &mid[0]);
        let a1 = Tails::between(&left[1], &mid[1]);
        let b0 = Tails::between(&mid[0], &right[0]);
        let b1 = Tails::between(&mid[1], &right[1]);
        let v = affinity_term(a0, a1, self.alpha) + affinity_term(b0, b1, self.alpha);
        (v, [a0, a1, b0, b1])
    }

    fn sweep_boundaries(&mut self) {
        for i in 0..self.boundaries.len() {
            self.update_boundary(i);
        }
    }

    fn update_boundary(&mut self, i: usize) {
        let left = if i == 0 {
            f64::NEG_INFINITY
        } else {
            self.boundaries[i - 1]
        };
        let right = self.boundaries.get(i + 1).copied().unwrap_or(f64::INFINITY);
        let lo = left.max(-self.window);
        let hi = right.min(self.window);
        if !(hi > lo) {
            return;
        }

        let lt = self.tails(left);
        let rt = self.tails(right);
        let eval = |x: f64| self.local(&lt, &rt, x).0;

        let current = eval(self.boundaries[i]);
        let n = self.grid_points;
        let step = (hi - lo) / (n - 1) as f64;
        let grid = |j: usize| if j + 1 == n { hi } else { lo + step * j as f64 };
        let (mut best_j, mut best_val) = (0, f64::INFINITY);
        for j in 0..n {
            let v = eval(grid(j));
            if v < best_val {
                best_j = j;
                best_val = v;
            }
        }
        let mut best_x = grid(best_j);

        let a = grid(best_j.saturating_sub(1));
        let b = grid((best_j + 1).min(n - 1));
        if b > a {
            if let Ok((x, neg)) = maximize_concave_1d(|x| -eval(x), a, b, BOUNDARY_TOL) {
                if -neg < best_val {
                    best_x = x;
                    best_val = -neg;
                }
            }
        }

        if best_val < current {
            let (_, [a0, a1, b0, b1]) = self.local(&lt, &rt, best_x);
            self.boundaries[i] = best_x;
            self.p0[i] = a0;
            self.p1[i] = a1;
            self.p0[i + 1] = b0;
            self.p1[i + 1] = b1;
        }
    }

    fn update_alpha(&mut self) {
        let logs = LogPmfs::new(&self.p0, &self.p1);
        let current = logs.at_alpha(self.alpha);
        if let Ok((alpha, value)) = maximize_concave_1d(|a| logs.at_alpha(a), 0.0, 1.0, ALPHA_TOL) {
            if value > current {
                self.alpha = alpha;
            }
        }
    }
}

/// `Φ(z)` and `Q(z)` at one point, each accurate where it is the small one.
#[derive(Debug, Clone, Copy)]
struct Tails {
    z: f64,
    lower: f64,
    upper: f64,
}

impl Tails {
    fn at(z: f64) -> Self {
        if z < 0.0 {
            let lower = phi(z);
            Self {
                z,
                lower,
                upper: 1.0 - lower,
            }
        } else {
            let upper = q_tail(z);
            Self {
                z,
                lower: 1.0 - upper,
                upper,
            }
        }
    }

    /// Mass of `[lo, hi)`; same branch choice as `numerics::interval_prob`.
    fn between(lo: &Tails, hi: &Tails) -> f64 {
        if hi.z <= lo.z {
            return 0.0;
        }
        let p = if lo.z >= 0.0 {
            lo.upper - hi.upper
        } else if hi.z <= 0.0 {
            hi.lower - lo.lower
        } else {
            1.0 - lo.lower - hi.upper
        };
        p.max(0.0)
    }
}

/// A sensor design method: maps a rate to a decision function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Designer {
    Bb,
    Numerical(DesignerConfig),
}

impl Designer {
    pub fn design(&self, rate: u32, model: &ObservationModel) -> Result<Quantizer> {
        match self {
            Designer::Bb => design_bb(rate),
            Designer::Numerical(cfg) => Ok(design_numerical(rate, model, cfg)?.quantizer),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Designer::Bb => "bb",
            Designer::Numerical(_) => "numerical",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tight() -> DesignerConfig {
        DesignerConfig {
            eta: 1e-8,
            ..DesignerConfig::default()
        }
    }

    #[test]
    fn bb_examples() {
        assert_eq!(design_bb(0).unwrap().boundaries(), &[] as &[f64]);
        assert_eq!(design_bb(1).unwrap().boundaries(), &[0.0]);
        let b = design_bb(2).unwrap();
        // √3 · Φ⁻¹(1/4), mpmath reference.
        let want = -1.168_250_516_524_053_7;
        assert!((b.boundaries()[0] - want).abs() < 1e-14);
        assert_eq!(b.boundaries()[1], 0.0);
        assert_eq!(b.boundaries()[2], -b.boundaries()[0]);
        assert!(matches!(design_bb(17), Err(Error::Capacity(_))));
    }

    #[test]
    fn bb_is_strictly_increasing_and_symmetric() {
        for rate in 1..=10 {
            let q = design_bb(rate).unwrap();
            assert!(q.is_strictly_increasing());
            let b = q.boundaries();
            for i in 0..b.len() {
                assert!((b[i] + b[b.len() - 1 - i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn asymptotic_formula() {
        assert!((bb_asymptotic_chernoff(7, 1.0).unwrap() - 0.499_916_974_301_027).abs() < 1e-12);
        assert!((bb_asymptotic_chernoff(0, 1.0).unwrap() + 0.358_809_711_111_881_5).abs() < 1e-12);
        assert!((bb_asymptotic_chernoff(60, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(bb_asymptotic_chernoff(3, 0.0).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(DesignerConfig::default().validate().is_ok());
        for bad in [
            DesignerConfig {
                eta: 0.0,
                ..Default::default()
            },
            DesignerConfig {
                restarts: 0,
                ..Default::default()
            },
            DesignerConfig {
                grid_points: 2,
                ..Default::default()
            },
            DesignerConfig {
                max_iters: 0,
                ..Default::default()
            },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn numerical_rate_zero() {
        let model = ObservationModel::new(1.3).unwrap();
        let d = design_numerical(0, &model, &tight()).unwrap();
        assert_eq!(d.chernoff, 0.0);
        assert_eq!(d.quantizer, Quantizer::constant());
        assert!(matches!(
            design_numerical(17, &model, &tight()),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn numerical_rate_one_matches_threshold_at_zero() {
        let model = ObservationModel::new(1.0).unwrap();
        let d = design_numerical(1, &model, &tight()).unwrap();
        assert!(
            d.quantizer.boundaries()[0].abs() < 1e-6,
            "{:?}",
            d.quantizer
        );
        assert!((d.chernoff - 0.313_740_531_5).abs() < 1e-6);
        assert!((d.alpha_star - 0.5).abs() < 1e-6);
    }

    #[test]
    fn numerical_history_is_monotone() {
        let model = ObservationModel::new(1.0).unwrap();
        let cfg = DesignerConfig {
            restarts: 3,
            seed: 11,
            ..tight()
        };
        let d = design_numerical(3, &model, &cfg).unwrap();
        assert!(d.history.windows(2).all(|w| w[1] >= w[0] - MONOTONE_SLACK));
        assert!(d.chernoff >= 0.481_768 - 5e-3, "{}", d.chernoff);
        assert!(d.chernoff <= 0.5);
    }

    #[test]
    fn numerical_is_deterministic() {
        let model = ObservationModel::new(0.9).unwrap();
        let cfg = DesignerConfig {
            restarts: 4,
            seed: 5,
            ..tight()
        };
        let a = design_numerical(2, &model, &cfg).unwrap();
        let b = design_numerical(2, &model, &cfg).unwrap();
        let bits = |q: &Quantizer| {
            q.boundaries()
                .iter()
                .map(|x| x.to_bits())
                .collect::<Vec<_>>()
        };
        assert_eq!(bits(&a.quantizer), bits(&b.quantizer));
        assert_eq!(a.chernoff.to_bits(), b.chernoff.to_bits());
    }
}
