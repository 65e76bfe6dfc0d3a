//! Rate allocation across sensors under a sum-rate budget.
//!
//! If the per-sensor Chernoff information is discrete concave in rate,
//! repeatedly replacing the lowest- and highest-rate sensors by two sensors
//! at the floor and ceiling of their mean never lowers the summed Chernoff
//! information, and ends at the uniform allocation. This module provides
//! that rebalancing step, the full rebalancing walk, and an exhaustive search
//! over every allocation that spends the whole budget, to check the claim.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::RwLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chernoff::{chernoff_information, network_chernoff};
use crate::design::Designer;
use crate::error::{domain, Error, Result};
use crate::model::ObservationModel;
use crate::quantizer::{conditional_pmf, Quantizer, SensorPmfPair};

/// Enumeration refuses to produce more allocations than this.
pub const MAX_ALLOCATIONS: u128 = 1_000_000;

/// Network Chernoff values closer than this are treated as tied.
const TIE_TOL: f64 = 1e-12;

/// Per-sensor rates, kept sorted nonincreasing, with the budget they must fit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RateAllocation {
    rates: Vec<u32>,
    sum_rate_cap: u32,
}

impl RateAllocation {
    pub fn new(mut rates: Vec<u32>, sum_rate_cap: u32) -> Result<Self> {
        if rates.is_empty() {
            return domain("an allocation needs at least one sensor");
        }
        let total: u64 = rates.iter().map(|&r| r as u64).sum();
        if total > sum_rate_cap as u64 {
            return domain(format!(
                "allocation uses {total} bits, more than the cap of {sum_rate_cap}"
            ));
        }
        rates.sort_unstable_by(|a, b| b.cmp(a));
        Ok(Self {
            rates,
            sum_rate_cap,
        })
    }

    /// An allocation whose cap is exactly its total.
    pub fn full(rates: Vec<u32>) -> Result<Self> {
        let total = rates.iter().map(|&r| r as u64).sum::<u64>();
        let cap = u32::try_from(total).map_err(|_| Error::Capacity("sum rate overflows".into()))?;
        Self::new(rates, cap)
    }

    pub fn rates(&self) -> &[u32] {
        &self.rates
    }

    pub fn sum_rate_cap(&self) -> u32 {
        self.sum_rate_cap
    }

    pub fn sensors(&self) -> usize {
        self.rates.len()
    }

    pub fn total(&self) -> u32 {
        self.rates.iter().sum()
    }

    pub fn max_rate(&self) -> u32 {
        self.rates[0]
    }

    pub fn min_rate(&self) -> u32 {
        *self.rates.last().expect("nonempty")
    }

    pub fn spread(&self) -> u32 {
        self.max_rate() - self.min_rate()
    }

    pub fn sum_of_squares(&self) -> u64 {
        self.rates.iter().map(|&r| (r as u64) * (r as u64)).sum()
    }

    pub fn is_uniform(&self) -> bool {
        self.spread() == 0
    }
}

/// Hyphen-joined rates, e.g. `2-2-2-2-2-2`.
impl fmt::Display for RateAllocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.rates.iter().enumerate() {
            if i > 0 {
                f.write_str("-")?;
            }
            write!(f, "{r}")?;
        }
        Ok(())
    }
}

/// Parses the hyphen-joined form; the cap is set to the total.
impl FromStr for RateAllocation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let rates = s
            .split('-')
            .map(|t| {
                t.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::Domain(format!("bad rate {t:?} in allocation {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::full(rates)
    }
}

/// Number of nonincreasing length-`parts` vectors of naturals summing to
/// `total`, i.e. partitions of `total` into at most `parts` parts.
pub fn count_allocations(parts: usize, total: u32) -> u128 {
    let total = total as usize;
    // ways[n] over parts of size ≤ k, for k = 1..=parts (conjugate view:
    // at most `parts` parts ⇔ largest part ≤ `parts`).
    let mut ways = vec![0u128; total + 1];
    ways[0] = 1;
    for k in 1..=parts.min(total.max(1)) {
        for n in k..=total {
            ways[n] = ways[n].saturating_add(ways[n - k]);
        }
    }
    ways[total]
}

/// All full-budget allocations of `total_rate` bits to `n_sensors` sensors,
/// sorted nonincreasing within each vector and in descending lexicographic
/// order overall.
pub fn enumerate_allocations(n_sensors: usize, total_rate: u32) -> Result<Vec<RateAllocation>> {
    if n_sensors == 0 {
        return domain("need at least one sensor");
    }
    let count = count_allocations(n_sensors, total_rate);
    if count > MAX_ALLOCATIONS {
        return Err(Error::Capacity(format!(
            "{count} allocations of {total_rate} bits over {n_sensors} sensors exceeds {MAX_ALLOCATIONS}"
        )));
    }

    fn fill(
        prefix: &mut Vec<u32>,
        slots: usize,
        remaining: u32,
        cap: u32,
        out: &mut Vec<Vec<u32>>,
    ) {
        if slots == 0 {
            if remaining == 0 {
                out.push(prefix.clone());
            }
            return;
        }
        // The remaining slots can hold at most `slots * first` bits.
        let lo = remaining.div_ceil(slots as u32);
        let hi = remaining.min(cap);
        for first in (lo..=hi).rev() {
            prefix.push(first);
            fill(prefix, slots - 1, remaining - first, first, out);
            prefix.pop();
        }
    }

    let mut raw = Vec::with_capacity(count as usize);
    fill(
        &mut Vec::with_capacity(n_sensors),
        n_sensors,
        total_rate,
        total_rate,
        &mut raw,
    );
    debug_assert_eq!(raw.len() as u128, count);
    Ok(raw
        .into_iter()
        .map(|rates| RateAllocation {
            rates,
            sum_rate_cap: total_rate,
        })
        .collect())
}

/// Replace the lowest and highest rates by the floor and ceiling of their
/// mean. A fixed point exactly when the spread is at most one.
pub fn rebalance_step(alloc: &RateAllocation) -> RateAllocation {
    let lo = alloc.min_rate();
    let hi = alloc.max_rate();
    let sum = lo + hi;
    let mut rates = alloc.rates.clone();
    let last = rates.len() - 1;
    rates[0] = sum.div_ceil(2);
    rates[last] = sum / 2;
    rates.sort_unstable_by(|a, b| b.cmp(a));
    RateAllocation {
        rates,
        sum_rate_cap: alloc.sum_rate_cap,
    }
}

/// Apply [`rebalance_step`] until the spread is at most one. The trace holds
/// every allocation produced along the way, ending with the final one; it is
/// empty when the input is already balanced.
pub fn rebalance_to_uniform(alloc: &RateAllocation) -> (RateAllocation, Vec<RateAllocation>) {
    let mut current = alloc.clone();
    let mut trace = Vec::new();
    while current.spread() > 1 {
        let next = rebalance_step(&current);
        debug_assert!(next.sum_of_squares() < current.sum_of_squares());
        trace.push(next.clone());
        current = next;
    }
    (current, trace)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationScore {
    pub allocation: RateAllocation,
    pub network_chernoff: f64,
    /// Individually maximized Chernoff information of each sensor.
    pub per_sensor: Vec<f64>,
}

impl AllocationScore {
    pub fn per_sensor_sum(&self) -> f64 {
        self.per_sensor.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct DesignKey {
    rate: u32,
    m_bits: u64,
    designer: DesignerKey,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum DesignerKey {
    Bb,
    Numerical {
        seed: u64,
        eta_bits: u64,
        restarts: usize,
        grid_points: usize,
        max_iters: usize,
    },
}

impl DesignerKey {
    fn of(designer: &Designer) -> Self {
        match designer {
            Designer::Bb => DesignerKey::Bb,
            Designer::Numerical(cfg) => DesignerKey::Numerical {
                seed: cfg.seed,
                eta_bits: cfg.eta.to_bits(),
                restarts: cfg.restarts,
                grid_points: cfg.grid_points,
                max_iters: cfg.max_iters,
            },
        }
    }
}

/// A designed sensor: its quantizer, pmfs, and Chernoff information.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignedSensor {
    pub quantizer: Quantizer,
    pub pmfs: SensorPmfPair,
    pub chernoff: f64,
}

/// Memoized per-rate designs, keyed by rate, model and designer settings.
#[derive(Debug, Default)]
pub struct DesignCache {
    entries: RwLock<HashMap<DesignKey, DesignedSensor>>,
}

impl DesignCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(
        &self,
        rate: u32,
        model: &ObservationModel,
        designer: &Designer,
    ) -> Result<DesignedSensor> {
        let key = DesignKey {
            rate,
            m_bits: model.amplitude().to_bits(),
            designer: DesignerKey::of(designer),
        };
        if let Some(hit) = self.entries.read().expect("cache lock").get(&key) {
            return Ok(hit.clone());
        }
        let quantizer = designer.design(rate, model)?;
        let pmfs = conditional_pmf(&quantizer, model);
        let chernoff = chernoff_information(&pmfs).value;
        let sensor = DesignedSensor {
            quantizer,
            pmfs,
            chernoff,
        };
        self.entries
            .write()
            .expect("cache lock")
            .entry(key)
            .or_insert(sensor.clone());
        Ok(sensor)
    }

    /// Design every distinct rate of `rates` (in parallel) so later lookups hit.
    pub fn warm(&self, rates: &[u32], model: &ObservationModel, designer: &Designer) -> Result<()> {
        let mut distinct: Vec<u32> = rates.to_vec();
        distinct.sort_unstable();
        distinct.dedup();
        distinct
            .par_iter()
            .map(|&r| self.get(r, model, designer).map(|_| ()))
            .collect()
    }
}

/// Chernoff information of the network given by `alloc`.
pub fn score_allocation(
    alloc: &RateAllocation,
    model: &ObservationModel,
    designer: &Designer,
    cache: &DesignCache,
) -> Result<AllocationScore> {
    let sensors = alloc
        .rates()
        .iter()
        .map(|&r| cache.get(r, model, designer))
        .collect::<Result<Vec<_>>>()?;
    let pmfs: Vec<SensorPmfPair> = sensors.iter().map(|s| s.pmfs.clone()).collect();
    let network = network_chernoff(&pmfs)?;
    Ok(AllocationScore {
        allocation: alloc.clone(),
        network_chernoff: network.value,
        per_sensor: sensors.iter().map(|s| s.chernoff).collect(),
    })
}

/// Ordering used for ranking: higher network Chernoff first; within
/// [`TIE_TOL`], smaller spread first, then descending lexicographic rates.
fn rank_order(a: &AllocationScore, b: &AllocationScore) -> std::cmp::Ordering {
    if (a.network_chernoff - b.network_chernoff).abs() > TIE_TOL {
        return b.network_chernoff.total_cmp(&a.network_chernoff);
    }
    a.allocation
        .spread()
        .cmp(&b.allocation.spread())
        .then_with(|| b.allocation.rates.cmp(&a.allocation.rates))
}

/// Score every full-budget allocation and rank them best first.
pub fn best_allocation(
    n_sensors: usize,
    total_rate: u32,
    model: &ObservationModel,
    designer: &Designer,
    cache: &DesignCache,
) -> Result<(AllocationScore, Vec<AllocationScore>)> {
    let allocations = enumerate_allocations(n_sensors, total_rate)?;
    let all_rates: Vec<u32> = (0..=total_rate).collect();
    let used: Vec<u32> = all_rates
        .into_iter()
        .filter(|r| allocations.iter().any(|a| a.rates.contains(r)))
        .collect();
    cache.warm(&used, model, designer)?;

    let mut ranked = allocations
        .par_iter()
        .map(|a| score_allocation(a, model, designer, cache))
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(rank_order);
    Ok((ranked[0].clone(), ranked))
}

/// CSV with header `allocation,network_chernoff`.
pub fn write_ranked_csv<W: Write>(ranked: &[AllocationScore], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(["allocation", "network_chernoff"])?;
    for s in ranked {
        w.write_record([s.allocation.to_string(), s.network_chernoff.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
