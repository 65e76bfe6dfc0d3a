//! Data behind the figure commands: single-sensor Chernoff curves and
//! network error probabilities for fixed rate allocations.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::allocation::{DesignCache, RateAllocation};
use crate::chernoff::{chernoff_raw, network_chernoff, ChernoffCurve, ConcavityReport};
use crate::design::{Designer, DesignerConfig};
use crate::detection::{exact_map_error, NetworkConfig};
use crate::error::Result;
use crate::model::{model_from_snr_db, ObservationModel};

/// Seed used by the figure commands' numerical designer.
pub const FIGURE_SEED: u64 = 2015;

pub const FIG2_SNRS_DB: [f64; 5] = [-2.0, -1.0, 0.0, 1.0, 2.0];
pub const FIG_MAX_RATE: u32 = 7;
pub const FIG4_SNRS_DB: [f64; 11] = [-5.0, -4.0, -3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
pub const FIG4_ALLOCATIONS: [[u32; 6]; 5] = [
    [4, 4, 4, 0, 0, 0],
    [3, 3, 3, 3, 0, 0],
    [5, 3, 1, 1, 1, 1],
    [3, 3, 2, 2, 1, 1],
    [2, 2, 2, 2, 2, 2],
];

/// Numerical-designer settings used for the figures: 16 restarts, `η = 1e-8`.
pub fn figure_designer_config() -> DesignerConfig {
    DesignerConfig {
        eta: 1e-8,
        restarts: 16,
        seed: FIGURE_SEED,
        ..DesignerConfig::default()
    }
}

pub fn fig4_allocations() -> Vec<RateAllocation> {
    FIG4_ALLOCATIONS
        .iter()
        .map(|r| RateAllocation::full(r.to_vec()).expect("static allocation"))
        .collect()
}

/// Exact Chernoff information of `designer`'s quantizer at each rate.
pub fn chernoff_curve(
    model: &ObservationModel,
    designer: &Designer,
    rates: &[u32],
    cache: &DesignCache,
) -> Result<ChernoffCurve> {
    let values = rates
        .par_iter()
        .map(|&r| cache.get(r, model, designer).map(|s| s.chernoff))
        .collect::<Result<Vec<_>>>()?;
    ChernoffCurve::new(rates.to_vec(), values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig2Row {
    pub snr_db: f64,
    pub rate: u32,
    pub chernoff: f64,
}

/// Compander Chernoff information for every (SNR, rate), SNR-major.
pub fn fig2_rows(snrs_db: &[f64], rates: &[u32]) -> Result<Vec<Fig2Row>> {
    let cache = DesignCache::new();
    let mut rows = Vec::with_capacity(snrs_db.len() * rates.len());
    for &snr_db in snrs_db {
        let model = model_from_snr_db(snr_db)?;
        let curve = chernoff_curve(&model, &Designer::Bb, rates, &cache)?;
        rows.extend(
            rates
                .iter()
                .zip(curve.values())
                .map(|(&rate, &chernoff)| Fig2Row {
                    snr_db,
                    rate,
                    chernoff,
                }),
        );
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig3Row {
    pub rate: u32,
    pub c_bb: f64,
    pub c_numerical: f64,
    pub c_inf: f64,
}

/// Compander vs numerical design at one SNR, with the raw-observation bound.
pub fn fig3_rows(snr_db: f64, rates: &[u32], cfg: &DesignerConfig) -> Result<Vec<Fig3Row>> {
    let model = model_from_snr_db(snr_db)?;
    let cache = DesignCache::new();
    let bb = chernoff_curve(&model, &Designer::Bb, rates, &cache)?;
    let num = chernoff_curve(&model, &Designer::Numerical(*cfg), rates, &cache)?;
    let c_inf = chernoff_raw(&model);
    Ok(rates
        .iter()
        .enumerate()
        .map(|(i, &rate)| Fig3Row {
            rate,
            c_bb: bb.values()[i],
            c_numerical: num.values()[i],
            c_inf,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig4Row {
    pub snr_db: f64,
    pub allocation: String,
    pub log10_pe: f64,
}

/// Everything computed for one (SNR, allocation) network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkEvaluation {
    pub snr_db: f64,
    pub allocation: RateAllocation,
    pub pe: f64,
    pub network_chernoff: f64,
}

/// Design each distinct rate once per SNR, then compute the exact MAP error
/// of every allocation. Rows are SNR-major in input order.
pub fn evaluate_networks(
    snrs_db: &[f64],
    allocations: &[RateAllocation],
    designer: &Designer,
    cache: &DesignCache,
) -> Result<Vec<NetworkEvaluation>> {
    let rates: Vec<u32> = allocations
        .iter()
        .flat_map(|a| a.rates().iter().copied())
        .collect();
    let mut out = Vec::with_capacity(snrs_db.len() * allocations.len());
    for &snr_db in snrs_db {
        let model = model_from_snr_db(snr_db)?;
        cache.warm(&rates, &model, designer)?;
        for alloc in allocations {
            let sensors = alloc
                .rates()
                .iter()
                .map(|&r| cache.get(r, &model, designer))
                .collect::<Result<Vec<_>>>()?;
            let net =
                NetworkConfig::new(sensors.iter().map(|s| s.quantizer.clone()).collect(), model)?;
            out.push(NetworkEvaluation {
                snr_db,
                allocation: alloc.clone(),
                pe: exact_map_error(&net)?,
                network_chernoff: network_chernoff(net.pmfs())?.value,
            });
        }
    }
    Ok(out)
}

pub fn fig4_rows(evals: &[NetworkEvaluation]) -> Vec<Fig4Row> {
    evals
        .iter()
        .map(|e| Fig4Row {
            snr_db: e.snr_db,
            allocation: e.allocation.to_string(),
            log10_pe: e.pe.log10(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcavityCheck {
    pub snr_db: f64,
    pub curve: ChernoffCurve,
    pub report: ConcavityReport,
}

/// Concavity of the Chernoff curve over `rates` at each SNR.
pub fn concavity_checks(
    snrs_db: &[f64],
    rates: &[u32],
    designer: &Designer,
    slack: f64,
) -> Result<Vec<ConcavityCheck>> {
    let cache = DesignCache::new();
    snrs_db
        .iter()
        .map(|&snr_db| {
            let model = model_from_snr_db(snr_db)?;
            let curve = chernoff_curve(&model, designer, rates, &cache)?;
            let report = curve.concavity(slack)?;
            Ok(ConcavityCheck {
                snr_db,
                curve,
                report,
            })
        })
        .collect()
}

/// Gnuplot script plotting `data_file` as written by the `fig2` command.
pub fn fig2_gnuplot(data_file: &str, snrs_db: &[f64]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set xlabel 'rate r (bits)'\nset ylabel 'Chernoff information (nats)'\nset key bottom right");
    let plots: Vec<String> = snrs_db
        .iter()
        .map(|db| {
            format!("'{data_file}' using ($1=={db} ? $2 : 1/0):3 skip 1 with linespoints title 'E = {db} dB'")
        })
        .collect();
    let _ = writeln!(s, "plot {}", plots.join(", \\\n     "));
    s
}

/// Gnuplot script for the `fig3` data file.
pub fn fig3_gnuplot(data_file: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set xlabel 'rate r (bits)'\nset ylabel 'Chernoff information (nats)'\nset key bottom right\n\
         plot '{data_file}' using 1:2 skip 1 with linespoints title 'compander', \\\n     \
         '{data_file}' using 1:3 skip 1 with linespoints title 'numerical', \\\n     \
         '{data_file}' using 1:4 skip 1 with lines dashtype 2 title 'raw observation'\n"
    )
}

/// Gnuplot script for the `fig4` data file.
pub fn fig4_gnuplot(data_file: &str, allocations: &[RateAllocation]) -> String {
    let plots: Vec<String> = allocations
        .iter()
        .map(|a| {
            format!("'{data_file}' using 1:(stringcolumn(2) eq '{a}' ? $3 : 1/0) skip 1 with linespoints title '[{a}]'")
        })
        .collect();
    format!(
        "set datafile separator ','\nset xlabel 'E (dB)'\nset ylabel 'log10 P_E'\nset key bottom left\nplot {}\n",
        plots.join(", \\\n     ")
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fig2_shape_and_values() {
        let rates: Vec<u32> = (0..=FIG_MAX_RATE).collect();
        let rows = fig2_rows(&FIG2_SNRS_DB, &rates).unwrap();
        assert_eq!(rows.len(), 40);
        for r in rows.iter().filter(|r| r.rate == 0) {
            assert_eq!(r.chernoff, 0.0);
        }
        let at = |db: f64, rate: u32| {
            rows.iter()
                .find(|r| r.snr_db == db && r.rate == rate)
                .unwrap()
                .chernoff
        };
        assert!((at(0.0, 3) - 0.481768).abs() < 5e-7);
        assert!((at(2.0, 1) - 0.493321).abs() < 5e-7);
    }

    #[test]
    fn fig4_allocations_are_full_budget() {
        for a in fig4_allocations() {
            assert_eq!(a.total(), 12);
            assert_eq!(a.sensors(), 6);
        }
    }

    #[test]
    fn bb_networks_at_zero_db() {
        let cache = DesignCache::new();
        let evals = evaluate_networks(&[0.0], &fig4_allocations(), &Designer::Bb, &cache).unwrap();
        assert_eq!(evals.len(), 5);
        let uniform = evals.last().unwrap();
        assert!(evals.iter().all(|e| e.pe >= uniform.pe));
        for e in &evals {
            assert!(e.pe <= (-e.network_chernoff).exp());
        }
    }

    #[test]
    fn gnuplot_scripts_mention_inputs() {
        assert!(fig2_gnuplot("f.csv", &[0.0, 2.0]).contains("E = 2 dB"));
        assert!(fig3_gnuplot("g.csv").contains("'g.csv' using 1:4"));
        assert!(fig4_gnuplot("h.csv", &fig4_allocations()).contains("[2-2-2-2-2-2]"));
    }
}
