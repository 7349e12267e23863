//! Command-line driver for the cell-free massive MIMO fronthaul
//! simulator: sweeps, outage CDFs, Monte-Carlo validation, power
//! optimization and the estimation-placement reports.
//!
//! Exit codes: 0 on success, 1 on validation failure (or any runtime
//! error), 2 on a bad configuration.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use cfmimo::allocation::{prop1_threshold, prop2_limits, Planner, ShareMode, Strategy};
use cfmimo::estimation::{apply_csi_quantization, cfe_stats};
use cfmimo::experiment::{
    run_cdf, run_sweep, run_validation, AllocMode, ExperimentSpec, SweepAxis,
};
use cfmimo::poweropt::{build_gp_cfe, build_gp_ecf, solve_gp, EcfBound};
use cfmimo::report;
use cfmimo::{Error, Scenario, SystemConfig};

#[derive(Parser)]
#[command(name = "cfmimo", version, about = "Cell-free massive MIMO uplink simulator with capacity-limited fronthaul")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario config file (key = value lines mirroring the SystemConfig
    /// fields); defaults apply for missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed for geometry, shadowing and all noise streams.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Fronthaul capacity per access point `[bits/s/Hz]`.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep an axis and tabulate per-user rates, SSE and EE.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Sweep axis: c | xi | xi-t | xi-r | m | k | rho.
        #[arg(long, default_value = "c")]
        axis: String,
        /// Comma-separated grid values.
        #[arg(long, default_value = "0.5,1,2,4")]
        grid: String,
        /// Comma-separated strategies: cfe, ecf-lb, ecf-ub, emcf.
        #[arg(long, default_value = "cfe,ecf-ub,emcf")]
        strategies: String,
        /// Geometry realizations per grid point.
        #[arg(long, default_value_t = 20)]
        realizations: usize,
        /// Allocation policy: equal | proposed.
        #[arg(long, default_value = "proposed")]
        alloc: String,
        /// Run geometric-programming power control (CFE/ECF).
        #[arg(long)]
        power_opt: bool,
        /// Rebuild the proposed allocation once at the optimized powers.
        #[arg(long)]
        reallocate: bool,
    },
    /// Empirical CDFs of SSE and per-user SE, optimized vs baseline.
    Cdf {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "cfe,ecf-ub,emcf")]
        strategies: String,
        #[arg(long, default_value_t = 200)]
        realizations: usize,
    },
    /// Monte-Carlo validation of every closed form (exit 1 on failure).
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100_000)]
        draws: usize,
    },
    /// Solve the sum-SE power allocation for one scenario.
    PowerOpt {
        #[command(flatten)]
        common: Common,
        /// Strategy: cfe | ecf-lb | ecf-ub.
        #[arg(long, default_value = "cfe")]
        strategy: String,
        /// CSI fraction of the fronthaul split (line search when omitted).
        #[arg(long)]
        split: Option<f64>,
    },
    /// High-SNR estimation-placement thresholds per (ap, ue) pair.
    Threshold {
        #[command(flatten)]
        common: Common,
    },
    /// Single-user high-SNR SINR limits of the two split strategies.
    Limits {
        #[command(flatten)]
        common: Common,
        /// CSI fraction of the per-link budget.
        #[arg(long, default_value_t = 0.5)]
        split: f64,
    },
    /// Export the generated geometry and large-scale map as CSV.
    Scenario {
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate one scenario and dump per-user SINR term breakdowns,
    /// the fronthaul plan and the estimation statistics.
    Breakdown {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "cfe,ecf-lb,ecf-ub,emcf")]
        strategies: String,
        /// Allocation policy: equal | proposed.
        #[arg(long, default_value = "proposed")]
        alloc: String,
    },
}

fn parse_strategies(s: &str) -> Result<Vec<Strategy>, Error> {
    s.split(',')
        .map(|tok| match tok.trim() {
            "cfe" => Ok(Strategy::Cfe),
            "ecf-lb" => Ok(Strategy::EcfLb),
            "ecf-ub" | "ecf" => Ok(Strategy::EcfUb),
            "emcf" => Ok(Strategy::Emcf),
            other => Err(Error::InvalidConfig(format!("unknown strategy '{other}'"))),
        })
        .collect()
}

fn parse_grid(s: &str) -> Result<Vec<f64>, Error> {
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidConfig(format!("bad grid value '{tok}': {e}")))
        })
        .collect()
}

fn load_config(common: &Common) -> Result<SystemConfig, Error> {
    match &common.config {
        Some(path) => SystemConfig::from_file(path),
        None => SystemConfig::default().validated(),
    }
}

fn emit(common: &Common, contents: &str) -> Result<(), Error> {
    match &common.out {
        Some(path) => report::write_text(path, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn run() -> Result<bool, Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::Sweep {
            common,
            axis,
            grid,
            strategies,
            realizations,
            alloc,
            power_opt,
            reallocate,
        } => {
            let spec = ExperimentSpec {
                config: load_config(&common)?,
                strategies: parse_strategies(&strategies)?,
                axis: SweepAxis::parse(&axis)?,
                grid: parse_grid(&grid)?,
                realizations,
                power_opt,
                reallocate,
                alloc: AllocMode::parse(&alloc)?,
                capacity: common.c,
                oracle_draws: 0,
                seed: common.seed,
            }
            .validated()?;
            let result = run_sweep(&spec)?;
            let path = common.out.clone().unwrap_or_else(|| PathBuf::from("sweep.csv"));
            report::write_sweep_csv(&path, &spec, &result)?;
            info!("wrote {}", path.display());
            Ok(true)
        }
        Command::Cdf { common, strategies, realizations } => {
            let spec = ExperimentSpec {
                config: load_config(&common)?,
                strategies: parse_strategies(&strategies)?,
                axis: SweepAxis::Capacity,
                grid: vec![common.c],
                realizations,
                power_opt: true,
                reallocate: false,
                alloc: AllocMode::Proposed,
                capacity: common.c,
                oracle_draws: 0,
                seed: common.seed,
            }
            .validated()?;
            let result = run_cdf(&spec)?;
            let path = common.out.clone().unwrap_or_else(|| PathBuf::from("cdf.csv"));
            report::write_cdf_csv(&path, &spec, &result)?;
            info!("wrote {}", path.display());
            Ok(true)
        }
        Command::Validate { common, draws } => {
            let config = load_config(&common)?;
            let spec = ExperimentSpec {
                strategies: vec![Strategy::Cfe, Strategy::EcfUb, Strategy::Emcf],
                axis: SweepAxis::Capacity,
                grid: vec![common.c],
                realizations: 1,
                power_opt: false,
                reallocate: false,
                alloc: AllocMode::Proposed,
                capacity: common.c,
                oracle_draws: draws,
                seed: common.seed,
                config: config.clone(),
            };
            let result = run_validation(&spec)?;
            let path = common.out.clone().unwrap_or_else(|| PathBuf::from("validation.csv"));
            report::write_validation_csv(&path, &config, &result)?;
            let failures = result.rows.iter().filter(|r| !r.pass).count();
            println!(
                "validation: {} pairings, {} failed ({} draws) -> {}",
                result.rows.len(),
                failures,
                result.draws,
                path.display()
            );
            Ok(result.passed)
        }
        Command::PowerOpt { common, strategy, split } => {
            let config = load_config(&common)?;
            let strategy = match strategy.as_str() {
                "cfe" => Strategy::Cfe,
                "ecf-lb" => Strategy::EcfLb,
                "ecf-ub" | "ecf" => Strategy::EcfUb,
                other => {
                    return Err(Error::InvalidConfig(format!(
                        "power optimization is defined for cfe/ecf-lb/ecf-ub, not '{other}'"
                    )))
                }
            };
            let scn = Scenario::generate(config, common.seed);
            let eta = vec![1.0; scn.config.k];
            let planner = Planner::new(&scn.beta, &scn.config);
            let c = vec![common.c; scn.config.m];
            let plan = match split {
                Some(frac) => {
                    if !(0.0..=1.0).contains(&frac) {
                        return Err(Error::InvalidConfig(format!(
                            "--split must lie in [0, 1], got {frac}"
                        )));
                    }
                    planner.split_plan(&c, strategy, frac, ShareMode::Proportional, &eta)
                }
                None => planner.proposed(&c, strategy, &eta).0,
            };
            let problem = match strategy {
                Strategy::Cfe => {
                    let stats = cfe_stats(&scn.beta, &plan.q_pilot_ap, &scn.config);
                    build_gp_cfe(&scn.beta, &stats, &plan, &scn.config)?
                }
                Strategy::EcfLb | Strategy::EcfUb => {
                    let stats = apply_csi_quantization(planner.ecf_stats(), &plan.q_csi)?;
                    let bound = if strategy == Strategy::EcfLb {
                        EcfBound::Lower
                    } else {
                        EcfBound::Upper
                    };
                    build_gp_ecf(&scn.beta, &stats, &plan, bound, &scn.config)?
                }
                Strategy::Emcf => unreachable!(),
            };
            let solution = solve_gp(&problem, 1e-8)?;
            let sinr = problem.sinr(&solution.eta);
            let mut text = report::plan_text(&plan);
            text.push('\n');
            text.push_str(&report::gp_text(&solution, &sinr));
            emit(&common, &text)?;
            Ok(true)
        }
        Command::Threshold { common } => {
            let config = load_config(&common)?;
            let scn = Scenario::generate(config.clone(), common.seed);
            let mut out = String::new();
            out.push_str("ap,ue,theta1,theta2,side_condition_margin,log_argument,c_threshold,crossover\n");
            for (m, row) in scn.beta.beta.iter().enumerate() {
                for ue in 0..config.k {
                    let r = prop1_threshold(row, ue, &config);
                    out.push_str(&format!(
                        "{},{},{},{},{},{},{},{}\n",
                        m,
                        ue,
                        r.theta1,
                        r.theta2,
                        r.side_condition_margin,
                        r.log_argument,
                        r.c_threshold.map(|v| v.to_string()).unwrap_or_default(),
                        r.crossover.map(|v| v.to_string()).unwrap_or_default(),
                    ));
                }
            }
            emit(&common, &out)?;
            Ok(true)
        }
        Command::Limits { common, split } => {
            let config = load_config(&common)?;
            if config.k != 1 {
                return Err(Error::NotSingleUser { k: config.k });
            }
            let scn = Scenario::generate(config.clone(), common.seed);
            let beta: Vec<f64> = scn.beta.beta.iter().map(|r| r[0]).collect();
            let cp = vec![common.c * split; config.m];
            let cd = vec![common.c * (1.0 - split); config.m];
            let r = prop2_limits(&beta, &cp, &cd, &config)?;
            let text = format!(
                "single-user high-SNR limits (C = {}, CSI fraction {})\n\
                 x0 = {:.6e}\nx1 = {:.6e}\nx2 = {:.6e}\nx3 = {:.6e}\n\
                 a_cfe = {:.6}  b_cfe = {:.6}\na_ecf = {:.6}  b_ecf = {:.6}\n\
                 sinr_cfe_inf = {:.6e}\nsinr_ecf_inf = {:.6e}\n\
                 ecf_over_cfe = {:.6}\n",
                common.c,
                split,
                r.x0,
                r.x1,
                r.x2,
                r.x3,
                r.a_cfe,
                r.b_cfe,
                r.a_ecf,
                r.b_ecf,
                r.sinr_cfe_inf,
                r.sinr_ecf_inf,
                r.sinr_ecf_inf / r.sinr_cfe_inf
            );
            emit(&common, &text)?;
            Ok(true)
        }
        Command::Scenario { common } => {
            let config = load_config(&common)?;
            let scn = Scenario::generate(config, common.seed);
            let path = common.out.clone().unwrap_or_else(|| PathBuf::from("scenario.csv"));
            report::write_scenario_csv(&path, &scn, common.seed)?;
            info!("wrote {}", path.display());
            Ok(true)
        }
        Command::Breakdown { common, strategies, alloc } => {
            use cfmimo::experiment::evaluate_strategy;
            let config = load_config(&common)?;
            let alloc = AllocMode::parse(&alloc)?;
            let scn = Scenario::generate(config.clone(), common.seed);
            let strategies = parse_strategies(&strategies)?;
            let mut outcomes = Vec::new();
            for &strategy in &strategies {
                outcomes.push(evaluate_strategy(&scn, strategy, alloc, false, common.c)?);
            }
            let entries: Vec<_> = outcomes
                .iter()
                .map(|o| (o.strategy, o.breakdowns.as_slice()))
                .collect();
            let path = common.out.clone().unwrap_or_else(|| PathBuf::from("breakdown.csv"));
            report::write_breakdown_csv(&path, &config, &entries, common.seed)?;
            // companion artifacts next to the table
            let stats_path = path.with_file_name("estimation.csv");
            let planner = Planner::new(&scn.beta, &scn.config);
            report::write_estimation_csv(&stats_path, &config, planner.ecf_stats(), common.seed)?;
            let mut plans = String::new();
            for o in &outcomes {
                plans.push_str(&report::plan_text(&o.plan));
                plans.push('\n');
            }
            report::write_text(&path.with_file_name("plans.txt"), &plans)?;
            info!("wrote {}", path.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ (Error::InvalidConfig(_) | Error::PilotLength { .. })) => {
            eprintln!("configuration error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
