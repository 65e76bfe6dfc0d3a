use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use ddrate::allocation::{
    best_allocation, rebalance_to_uniform, write_ranked_csv, DesignCache, RateAllocation,
};
use ddrate::chernoff::{chernoff_information, CONCAVITY_SLACK};
use ddrate::design::{design_bb, design_numerical, Designer, DesignerConfig};
use ddrate::detection::{
    exact_map_error, exponent_estimate, monte_carlo_error, write_rows, ExactRow, McConfig, McRow,
    NetworkConfig,
};
use ddrate::experiments::{
    concavity_checks, evaluate_networks, fig2_gnuplot, fig2_rows, fig3_gnuplot, fig3_rows,
    fig4_allocations, fig4_gnuplot, fig4_rows, Fig2Row, FIG2_SNRS_DB, FIG4_SNRS_DB, FIGURE_SEED,
};
use ddrate::model::model_from_snr_db;
use ddrate::quantizer::conditional_pmf;
use ddrate::{Error, Result};

const SNR_HELP: &str =
    "SNR in dB on the signal energy E = m², so the signal amplitude is m = 10^(dB/20)";

#[derive(Parser)]
#[command(
    name = "ddrate",
    version,
    about = "Quantizer design and rate allocation for decentralized detection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Design one sensor quantizer and print it as JSON.
    Design {
        #[arg(long)]
        rate: u32,
        #[arg(long, allow_hyphen_values = true, help = SNR_HELP)]
        snr_db: f64,
        #[command(flatten)]
        designer: DesignerArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compander Chernoff information versus rate at several SNRs (CSV).
    Fig2 {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = FIG2_SNRS_DB, help = SNR_HELP)]
        snr_db: Vec<f64>,
        #[arg(long, value_parser = parse_rates, default_value = "0..7")]
        rates: RateList,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a gnuplot script for the data file.
        #[arg(long)]
        gnuplot: Option<PathBuf>,
    },
    /// Compander versus numerical design at one SNR, with the unquantized bound (CSV).
    Fig3 {
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0, help = SNR_HELP)]
        snr_db: f64,
        #[arg(long, value_parser = parse_rates, default_value = "0..7")]
        rates: RateList,
        #[command(flatten)]
        numerical: NumericalArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        gnuplot: Option<PathBuf>,
    },
    /// Exact fusion-center error of fixed allocations across SNRs (CSV).
    Fig4 {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = FIG4_SNRS_DB, help = SNR_HELP)]
        snr_db: Vec<f64>,
        /// Comma-separated hyphen-joined allocations; defaults to the five
        /// six-sensor, 12-bit allocations.
        #[arg(long, value_delimiter = ',', value_parser = parse_allocation)]
        allocations: Vec<RateAllocation>,
        #[command(flatten)]
        numerical: NumericalArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        gnuplot: Option<PathBuf>,
    },
    /// Rank every full-budget allocation of R bits over N sensors (CSV).
    Allocate {
        #[arg(short = 'n', long)]
        sensors: usize,
        #[arg(short = 'r', long)]
        total_rate: u32,
        #[arg(long, allow_hyphen_values = true, help = SNR_HELP)]
        snr_db: f64,
        #[command(flatten)]
        designer: DesignerArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check discrete concavity of Chernoff information in rate; exits 0 iff
    /// every curve passes.
    Concavity {
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = FIG2_SNRS_DB, help = SNR_HELP)]
        snr_db: Vec<f64>,
        #[arg(long, value_parser = parse_rates, default_value = "0..7")]
        rates: RateList,
        #[arg(long, default_value_t = CONCAVITY_SLACK)]
        slack: f64,
        #[command(flatten)]
        designer: DesignerArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact single-snapshot MAP error of an allocation (CSV).
    Pe {
        #[arg(long, value_parser = parse_allocation)]
        allocation: RateAllocation,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, help = SNR_HELP)]
        snr_db: Vec<f64>,
        #[command(flatten)]
        designer: DesignerArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo MAP error of an allocation over T snapshots (CSV).
    Mc {
        #[arg(long, value_parser = parse_allocation)]
        allocation: RateAllocation,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, help = SNR_HELP)]
        snr_db: Vec<f64>,
        #[arg(short = 't', long = "snapshots", default_value_t = 1)]
        snapshots: usize,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long = "mc-seed", default_value_t = 1)]
        mc_seed: u64,
        #[command(flatten)]
        designer: DesignerArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Empirical error exponents −(1/T) log P_E for several T (CSV).
    Exponent {
        #[arg(long, value_parser = parse_allocation)]
        allocation: RateAllocation,
        #[arg(long, allow_hyphen_values = true, help = SNR_HELP)]
        snr_db: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 4, 8])]
        t_values: Vec<usize>,
        #[arg(long, default_value_t = 200_000)]
        trials: u64,
        #[arg(long = "mc-seed", default_value_t = 1)]
        mc_seed: u64,
        #[command(flatten)]
        designer: DesignerArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the rebalancing walk from an allocation to the near-uniform one.
    Rebalance {
        #[arg(long, value_parser = parse_allocation)]
        allocation: RateAllocation,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Bb,
    Numerical,
}

#[derive(Args)]
struct NumericalArgs {
    /// Stop when a full iteration improves C(γ, α) by less than this.
    #[arg(long, default_value_t = 1e-8)]
    eta: f64,
    #[arg(long, default_value_t = 16)]
    restarts: usize,
    #[arg(long, default_value_t = FIGURE_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 64)]
    grid_points: usize,
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
}

impl NumericalArgs {
    fn config(&self) -> Result<DesignerConfig> {
        let cfg = DesignerConfig {
            eta: self.eta,
            restarts: self.restarts,
            seed: self.seed,
            grid_points: self.grid_points,
            max_iters: self.max_iters,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct DesignerArgs {
    #[arg(long, value_enum, default_value = "bb")]
    method: Method,
    #[command(flatten)]
    numerical: NumericalArgs,
}

impl DesignerArgs {
    fn designer(&self) -> Result<Designer> {
        let cfg = self.numerical.config()?;
        Ok(match self.method {
            Method::Bb => Designer::Bb,
            Method::Numerical => Designer::Numerical(cfg),
        })
    }
}

#[derive(Clone, Debug)]
struct RateList(Vec<u32>);

/// `a..b` (inclusive) or a comma-separated list.
fn parse_rates(s: &str) -> std::result::Result<RateList, String> {
    let rates: Vec<u32> = if let Some((a, b)) = s.split_once("..") {
        let a: u32 = a
            .trim()
            .parse()
            .map_err(|_| format!("bad range start in {s:?}"))?;
        let b: u32 = b
            .trim()
            .trim_start_matches('=')
            .parse()
            .map_err(|_| format!("bad range end in {s:?}"))?;
        RangeInclusive::new(a, b).collect()
    } else {
        s.split(',')
            .map(|t| t.trim().parse().map_err(|_| format!("bad rate {t:?}")))
            .collect::<std::result::Result<_, _>>()?
    };
    if rates.is_empty() {
        return Err(format!("empty rate list {s:?}"));
    }
    Ok(RateList(rates))
}

fn parse_allocation(s: &str) -> std::result::Result<RateAllocation, String> {
    s.parse::<RateAllocation>().map_err(|e| e.to_string())
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_script(
    path: Option<&Path>,
    script: impl FnOnce(&str) -> String,
    data: Option<&Path>,
) -> Result<()> {
    if let Some(p) = path {
        let data = data.map_or_else(|| "data.csv".to_string(), |d| d.display().to_string());
        std::fs::write(p, script(&data))?;
    }
    Ok(())
}

fn check_snrs(snrs: &[f64]) -> Result<()> {
    if snrs.is_empty() {
        return Err(Error::Domain("at least one SNR is required".into()));
    }
    for &db in snrs {
        model_from_snr_db(db)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct DesignOutput {
    rate: u32,
    boundaries: Vec<f64>,
    chernoff: f64,
    alpha_star: f64,
    method: &'static str,
    snr_db: f64,
}

#[derive(Serialize)]
struct ConcavityRow {
    snr_db: f64,
    rate: u32,
    chernoff: f64,
}

#[derive(Serialize)]
struct ExponentRow {
    snr_db: f64,
    allocation: String,
    #[serde(rename = "T")]
    snapshots: usize,
    exponent: f64,
    lower_bound: bool,
    network_chernoff: f64,
}

fn network_for(
    alloc: &RateAllocation,
    snr_db: f64,
    designer: &Designer,
    cache: &DesignCache,
) -> Result<NetworkConfig> {
    let model = model_from_snr_db(snr_db)?;
    cache.warm(alloc.rates(), &model, designer)?;
    let quantizers = alloc
        .rates()
        .iter()
        .map(|&r| cache.get(r, &model, designer).map(|s| s.quantizer))
        .collect::<Result<Vec<_>>>()?;
    NetworkConfig::new(quantizers, model)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Design {
            rate,
            snr_db,
            designer,
            out,
        } => {
            let model = model_from_snr_db(snr_db)?;
            let designer = designer.designer()?;
            let (quantizer, result) = match designer {
                Designer::Bb => {
                    let q = design_bb(rate)?;
                    let r = chernoff_information(&conditional_pmf(&q, &model));
                    (q, r)
                }
                Designer::Numerical(cfg) => {
                    let d = design_numerical(rate, &model, &cfg)?;
                    let r = chernoff_information(&conditional_pmf(&d.quantizer, &model));
                    (d.quantizer, r)
                }
            };
            let doc = DesignOutput {
                rate,
                boundaries: quantizer.boundaries().to_vec(),
                chernoff: result.value,
                alpha_star: result.alpha_star,
                method: designer.name(),
                snr_db,
            };
            let mut w = open_out(out.as_deref())?;
            serde_json::to_writer_pretty(&mut w, &doc)?;
            writeln!(w)?;
            w.flush()?;
        }
        Command::Fig2 {
            snr_db,
            rates,
            out,
            gnuplot,
        } => {
            check_snrs(&snr_db)?;
            let rows: Vec<Fig2Row> = fig2_rows(&snr_db, &rates.0)?;
            write_rows(&rows, open_out(out.as_deref())?)?;
            write_script(
                gnuplot.as_deref(),
                |d| fig2_gnuplot(d, &snr_db),
                out.as_deref(),
            )?;
        }
        Command::Fig3 {
            snr_db,
            rates,
            numerical,
            out,
            gnuplot,
        } => {
            check_snrs(&[snr_db])?;
            let cfg = numerical.config()?;
            let rows = fig3_rows(snr_db, &rates.0, &cfg)?;
            write_rows(&rows, open_out(out.as_deref())?)?;
            write_script(gnuplot.as_deref(), fig3_gnuplot, out.as_deref())?;
        }
        Command::Fig4 {
            snr_db,
            allocations,
            numerical,
            out,
            gnuplot,
        } => {
            check_snrs(&snr_db)?;
            let cfg = numerical.config()?;
            let allocations = if allocations.is_empty() {
                fig4_allocations()
            } else {
                allocations
            };
            let evals = evaluate_networks(
                &snr_db,
                &allocations,
                &Designer::Numerical(cfg),
                &DesignCache::new(),
            )?;
            write_rows(&fig4_rows(&evals), open_out(out.as_deref())?)?;
            write_script(
                gnuplot.as_deref(),
                |d| fig4_gnuplot(d, &allocations),
                out.as_deref(),
            )?;
        }
        Command::Allocate {
            sensors,
            total_rate,
            snr_db,
            designer,
            out,
        } => {
            let model = model_from_snr_db(snr_db)?;
            let designer = designer.designer()?;
            let (best, ranked) =
                best_allocation(sensors, total_rate, &model, &designer, &DesignCache::new())?;
            write_ranked_csv(&ranked, open_out(out.as_deref())?)?;
            eprintln!(
                "winner: {} (network Chernoff {})",
                best.allocation, best.network_chernoff
            );
            if sensors > 0 && !(total_rate as usize).is_multiple_of(sensors) {
                eprintln!("note: R = {total_rate} is not a multiple of N = {sensors}; uniform allocation is not available");
            }
        }
        Command::Concavity {
            snr_db,
            rates,
            slack,
            designer,
            out,
        } => {
            check_snrs(&snr_db)?;
            let designer = designer.designer()?;
            let checks = concavity_checks(&snr_db, &rates.0, &designer, slack)?;
            let rows: Vec<ConcavityRow> = checks
                .iter()
                .flat_map(|c| {
                    c.curve
                        .rates()
                        .iter()
                        .zip(c.curve.values())
                        .map(|(&rate, &chernoff)| ConcavityRow {
                            snr_db: c.snr_db,
                            rate,
                            chernoff,
                        })
                })
                .collect();
            write_rows(&rows, open_out(out.as_deref())?)?;
            let mut all = true;
            for c in &checks {
                let dips = c.curve.monotonicity_violations();
                if !dips.is_empty() {
                    eprintln!(
                        "warning: {} dB curve decreases at rate indices {dips:?}",
                        c.snr_db
                    );
                }
                if c.report.concave {
                    eprintln!("{} dB: concave", c.snr_db);
                } else {
                    all = false;
                    eprintln!(
                        "{} dB: NOT concave at rates {:?}",
                        c.snr_db,
                        c.report
                            .violations
                            .iter()
                            .map(|&i| c.curve.rates()[i])
                            .collect::<Vec<_>>()
                    );
                }
            }
            if !all {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Pe {
            allocation,
            snr_db,
            designer,
            out,
        } => {
            check_snrs(&snr_db)?;
            let designer = designer.designer()?;
            let cache = DesignCache::new();
            let rows = snr_db
                .iter()
                .map(|&db| {
                    let pe = exact_map_error(&network_for(&allocation, db, &designer, &cache)?)?;
                    Ok(ExactRow {
                        snr_db: db,
                        allocation: allocation.to_string(),
                        pe,
                        log10_pe: pe.log10(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            write_rows(&rows, open_out(out.as_deref())?)?;
        }
        Command::Mc {
            allocation,
            snr_db,
            snapshots,
            trials,
            mc_seed,
            designer,
            out,
        } => {
            check_snrs(&snr_db)?;
            let designer = designer.designer()?;
            let mc = McConfig {
                snapshots,
                trials,
                seed: mc_seed,
            };
            mc.validate()?;
            let cache = DesignCache::new();
            let rows = snr_db
                .iter()
                .map(|&db| {
                    let est =
                        monte_carlo_error(&network_for(&allocation, db, &designer, &cache)?, &mc)?;
                    Ok(McRow {
                        snr_db: db,
                        allocation: allocation.to_string(),
                        snapshots,
                        estimate: est.estimate,
                        std_err: est.std_err,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            write_rows(&rows, open_out(out.as_deref())?)?;
        }
        Command::Exponent {
            allocation,
            snr_db,
            t_values,
            trials,
            mc_seed,
            designer,
            out,
        } => {
            check_snrs(&[snr_db])?;
            if t_values.contains(&0) || trials == 0 {
                return Err(Error::Domain("T values and trials must be positive".into()));
            }
            let designer = designer.designer()?;
            let net = network_for(&allocation, snr_db, &designer, &DesignCache::new())?;
            let nc = ddrate::network_chernoff(net.pmfs())?.value;
            let rows: Vec<ExponentRow> = exponent_estimate(&net, &t_values, trials, mc_seed)?
                .into_iter()
                .map(|p| ExponentRow {
                    snr_db,
                    allocation: allocation.to_string(),
                    snapshots: p.snapshots,
                    exponent: p.exponent,
                    lower_bound: p.lower_bound,
                    network_chernoff: nc,
                })
                .collect();
            write_rows(&rows, open_out(out.as_deref())?)?;
        }
        Command::Rebalance { allocation } => {
            let (end, trace) = rebalance_to_uniform(&allocation);
            let mut w = open_out(None)?;
            writeln!(w, "{allocation}")?;
            for a in &trace {
                writeln!(w, "{a}")?;
            }
            w.flush()?;
            if end.sensors() > 0 && !(end.total() as usize).is_multiple_of(end.sensors()) {
                eprintln!(
                    "note: total rate is not a multiple of the sensor count; stopped at spread 1"
                );
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Domain(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
