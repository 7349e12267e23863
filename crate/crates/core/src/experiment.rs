//! Experiment driver: scenario sweeps, outage CDFs and validation runs.
//!
//! The evaluation pipeline for one scenario and strategy is fixed and
//! logged: estimation statistics -> fronthaul allocation -> optional
//! power optimization -> rate evaluation. Grid points and geometry
//! realizations run in parallel, but rows are gathered in (grid,
//! realization) order so output files never depend on scheduling.

use log::info;
use rayon::prelude::*;
use serde::Serialize;

use crate::allocation::{FronthaulPlan, Planner, Strategy};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::estimation::{apply_csi_quantization, cfe_stats};
use crate::netmodel::Scenario;
use crate::oracle::{self, McConfig, ValidationOptions, ValidationReport};
use crate::poweropt::{build_gp_cfe, build_gp_ecf, solve_gp, EcfBound, GpSolution};
use crate::rates::{self, SinrBreakdown};
use crate::rng::SeedSpace;

/// Which scalar the sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Fronthaul capacity per access point `[bits/s/Hz]`.
    Capacity,
    /// Both hardware qualities together.
    XiBoth,
    /// User-side hardware quality only.
    XiT,
    /// Access-point-side hardware quality only.
    XiR,
    /// Number of access points.
    ApCount,
    /// Number of users (pilots track it).
    UeCount,
    /// Uplink data power `[W]`.
    UplinkPower,
}

impl SweepAxis {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "c" | "capacity" => SweepAxis::Capacity,
            "xi" | "xi-both" => SweepAxis::XiBoth,
            "xi-t" => SweepAxis::XiT,
            "xi-r" => SweepAxis::XiR,
            "m" | "aps" => SweepAxis::ApCount,
            "k" | "ues" => SweepAxis::UeCount,
            "rho" | "rho-u" => SweepAxis::UplinkPower,
            other => {
                return Err(Error::InvalidConfig(format!("unknown sweep axis '{other}'")))
            }
        })
    }

    pub fn label(&self) -> &'static str {
        match self {
            SweepAxis::Capacity => "capacity",
            SweepAxis::XiBoth => "xi",
            SweepAxis::XiT => "xi_t",
            SweepAxis::XiR => "xi_r",
            SweepAxis::ApCount => "m",
            SweepAxis::UeCount => "k",
            SweepAxis::UplinkPower => "rho_u",
        }
    }
}

/// Allocation policy for the sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AllocMode {
    Equal,
    Proposed,
}

impl AllocMode {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "equal" => AllocMode::Equal,
            "proposed" => AllocMode::Proposed,
            other => {
                return Err(Error::InvalidConfig(format!("unknown allocation mode '{other}'")))
            }
        })
    }

    pub fn label(&self) -> &'static str {
        match self {
            AllocMode::Equal => "equal",
            AllocMode::Proposed => "proposed",
        }
    }
}

/// Everything a sweep/CDF/validation run needs.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub config: SystemConfig,
    pub strategies: Vec<Strategy>,
    pub axis: SweepAxis,
    pub grid: Vec<f64>,
    /// Geometry/shadowing realizations per grid point.
    pub realizations: usize,
    pub power_opt: bool,
    /// Rebuild the proposed allocation once at the optimized powers.
    pub reallocate: bool,
    pub alloc: AllocMode,
    /// Fronthaul capacity per access point when the axis is not capacity.
    pub capacity: f64,
    pub oracle_draws: usize,
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn desk_default(config: SystemConfig) -> Self {
        ExperimentSpec {
            config,
            strategies: vec![Strategy::Cfe, Strategy::EcfUb, Strategy::Emcf],
            axis: SweepAxis::Capacity,
            grid: vec![0.5, 1.0, 2.0, 4.0],
            realizations: 20,
            power_opt: false,
            reallocate: false,
            alloc: AllocMode::Proposed,
            capacity: 1.0,
            oracle_draws: 100_000,
            seed: 1,
        }
    }

    pub fn validated(self) -> Result<Self> {
        if self.grid.is_empty() {
            return Err(Error::InvalidConfig("sweep grid is empty".into()));
        }
        if self.realizations == 0 {
            return Err(Error::InvalidConfig("need at least one realization".into()));
        }
        if self.strategies.is_empty() {
            return Err(Error::InvalidConfig("no strategies selected".into()));
        }
        Ok(self)
    }
}

/// Apply one axis value to the base config.
pub fn apply_axis(base: &SystemConfig, axis: SweepAxis, value: f64) -> Result<SystemConfig> {
    let mut cfg = base.clone();
    match axis {
        SweepAxis::Capacity => {} // capacity is handled by the caller
        SweepAxis::XiBoth => {
            cfg.xi_t = value;
            cfg.xi_r = value;
        }
        SweepAxis::XiT => cfg.xi_t = value,
        SweepAxis::XiR => cfg.xi_r = value,
        SweepAxis::ApCount => cfg.m = value as usize,
        SweepAxis::UeCount => {
            cfg.k = value as usize;
            cfg.tau = cfg.k;
        }
        SweepAxis::UplinkPower => cfg.rho_u = value,
    }
    cfg.validated()
}

/// Outcome of evaluating one strategy on one scenario.
#[derive(Debug, Clone)]
pub struct StrategyOutcome {
    pub strategy: Strategy,
    pub plan: FronthaulPlan,
    pub eta: Vec<f64>,
    pub breakdowns: Vec<SinrBreakdown>,
    pub sse: f64,
    pub ee: f64,
    pub gp: Option<GpSolution>,
}

/// Run the fixed pipeline (stats -> allocation -> optional GP -> rates)
/// for one strategy.
pub fn evaluate_strategy(
    scn: &Scenario,
    strategy: Strategy,
    alloc: AllocMode,
    power_opt: bool,
    capacity: f64,
) -> Result<StrategyOutcome> {
    evaluate_strategy_opts(scn, strategy, alloc, power_opt, false, capacity)
}

/// [`evaluate_strategy`] with the optional single re-allocation at the
/// optimized powers (the coupling order is always allocate -> power ->
/// optionally re-allocate once -> rates).
pub fn evaluate_strategy_opts(
    scn: &Scenario,
    strategy: Strategy,
    alloc: AllocMode,
    power_opt: bool,
    reallocate: bool,
    capacity: f64,
) -> Result<StrategyOutcome> {
    let cfg = &scn.config;
    let eta_full = vec![1.0; cfg.k];
    let planner = Planner::new(&scn.beta, cfg);
    let c = vec![capacity; cfg.m];
    let plan = match alloc {
        AllocMode::Equal => planner.equal_split(&c, strategy, &eta_full),
        AllocMode::Proposed => planner.proposed(&c, strategy, &eta_full).0,
    };

    let mut eta = eta_full.clone();
    let mut gp = None;
    if power_opt && strategy != Strategy::Emcf {
        let problem = match strategy {
            Strategy::Cfe => {
                let stats = cfe_stats(&scn.beta, &plan.q_pilot_ap, cfg);
                build_gp_cfe(&scn.beta, &stats, &plan, cfg)
            }
            Strategy::EcfLb | Strategy::EcfUb => {
                let stats = apply_csi_quantization(planner.ecf_stats(), &plan.q_csi)?;
                let bound =
                    if strategy == Strategy::EcfLb { EcfBound::Lower } else { EcfBound::Upper };
                build_gp_ecf(&scn.beta, &stats, &plan, bound, cfg).or_else(|e| {
                    if strategy == Strategy::EcfLb {
                        // the lower bound stopped being a posynomial;
                        // optimize the upper bound instead
                        info!("LB power problem infeasible ({e}); using the UB problem");
                        build_gp_ecf(&scn.beta, &stats, &plan, EcfBound::Upper, cfg)
                    } else {
                        Err(e)
                    }
                })
            }
            Strategy::Emcf => unreachable!(),
        };
        match problem.and_then(|p| solve_gp(&p, 1e-8)) {
            Ok(solution) => {
                eta = solution.eta.clone();
                gp = Some(solution);
            }
            Err(Error::GpInfeasible(msg)) => {
                info!("power optimization skipped ({msg}); keeping full power");
            }
            Err(e) => return Err(e),
        }
    }

    let mut plan = plan;
    if reallocate && power_opt && strategy != Strategy::Emcf {
        // one re-allocation at the optimized powers; eta is kept
        plan = match alloc {
            AllocMode::Equal => planner.equal_split(&c, strategy, &eta),
            AllocMode::Proposed => planner.proposed(&c, strategy, &eta).0,
        };
    }
    // data quantization tracks the final power vector
    for m in 0..cfg.m {
        if plan.strategy != Strategy::Emcf {
            plan.q_data[m] =
                crate::allocation::data_quant_noise(&scn.beta.beta[m], &eta, plan.c_data[m], cfg);
        }
    }

    let breakdowns = match strategy {
        Strategy::Cfe => {
            let stats = cfe_stats(&scn.beta, &plan.q_pilot_ap, cfg);
            rates::sinr_cfe(&scn.beta, &stats, &plan, &eta, cfg)
        }
        Strategy::EcfLb => {
            let stats = apply_csi_quantization(planner.ecf_stats(), &plan.q_csi)?;
            rates::sinr_ecf_lb(&scn.beta, &stats, &plan, &eta, cfg)
        }
        Strategy::EcfUb => {
            let stats = apply_csi_quantization(planner.ecf_stats(), &plan.q_csi)?;
            rates::sinr_ecf_ub(&scn.beta, &stats, &plan, &eta, cfg)
        }
        Strategy::Emcf => rates::rate_emcf(&scn.beta, planner.ecf_stats(), &plan, &eta, cfg)?,
    };
    let sse = rates::sum_se(&breakdowns);
    let ee = rates::energy_efficiency(sse, &plan, &eta, cfg);
    Ok(StrategyOutcome { strategy, plan, eta, breakdowns, sse, ee, gp })
}

/// One output row of a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub realization: usize,
    pub strategy: &'static str,
    pub ue: usize,
    pub rate: f64,
    pub sse: f64,
    pub ee: f64,
    /// Populated instead of numbers when the grid point failed.
    pub error: Option<String>,
}

/// Full sweep result.
#[derive(Debug, Clone)]
pub struct RateReport {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
}

impl RateReport {
    /// Mean SSE across realizations at one grid point.
    pub fn mean_sse(&self, axis_value: f64, strategy: Strategy) -> f64 {
        let mut total = 0.0;
        let mut n = 0;
        for row in &self.rows {
            if row.strategy == strategy.label()
                && row.ue == 0
                && row.error.is_none()
                && (row.axis_value - axis_value).abs() < 1e-12
            {
                total += row.sse;
                n += 1;
            }
        }
        if n > 0 { total / n as f64 } else { f64::NAN }
    }
}

fn scenario_seed(master: u64, grid_index: usize, realization: usize) -> u64 {
    SeedSpace::new(master)
        .descend(grid_index as u64 + 1)
        .descend(realization as u64 + 1)
        .master()
}

/// Run the sweep: every grid point and geometry realization, all
/// requested strategies. A failing cell contributes a diagnostic row
/// rather than aborting the sweep.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<RateReport> {
    let spec = spec.clone().validated()?;
    info!("pipeline: stats -> allocation -> power opt ({}) -> rates", spec.power_opt);
    let cells: Vec<(usize, usize)> = (0..spec.grid.len())
        .flat_map(|g| (0..spec.realizations).map(move |r| (g, r)))
        .collect();
    let rows: Vec<Vec<SweepRow>> = cells
        .par_iter()
        .map(|&(gi, ri)| {
            let value = spec.grid[gi];
            let capacity =
                if spec.axis == SweepAxis::Capacity { value } else { spec.capacity };
            let cfg = match apply_axis(&spec.config, spec.axis, value) {
                Ok(c) => c,
                Err(e) => {
                    return spec
                        .strategies
                        .iter()
                        .map(|s| SweepRow {
                            axis_value: value,
                            realization: ri,
                            strategy: s.label(),
                            ue: 0,
                            rate: f64::NAN,
                            sse: f64::NAN,
                            ee: f64::NAN,
                            error: Some(e.to_string()),
                        })
                        .collect();
                }
            };
            let scn = Scenario::generate(cfg, scenario_seed(spec.seed, gi, ri));
            let mut out = Vec::new();
            for &strategy in &spec.strategies {
                match evaluate_strategy_opts(
                    &scn,
                    strategy,
                    spec.alloc,
                    spec.power_opt,
                    spec.reallocate,
                    capacity,
                ) {
                    Ok(outcome) => {
                        for b in &outcome.breakdowns {
                            out.push(SweepRow {
                                axis_value: value,
                                realization: ri,
                                strategy: strategy.label(),
                                ue: b.ue,
                                rate: b.rate,
                                sse: outcome.sse,
                                ee: outcome.ee,
                                error: None,
                            });
                        }
                    }
                    Err(e) => out.push(SweepRow {
                        axis_value: value,
                        realization: ri,
                        strategy: strategy.label(),
                        ue: 0,
                        rate: f64::NAN,
                        sse: f64::NAN,
                        ee: f64::NAN,
                        error: Some(e.to_string()),
                    }),
                }
            }
            out
        })
        .collect();
    Ok(RateReport { axis: spec.axis, rows: rows.into_iter().flatten().collect() })
}

/// One empirical distribution from the CDF run.
#[derive(Debug, Clone)]
pub struct CdfSeries {
    pub strategy: Strategy,
    /// True for the optimized pipeline (proposed allocation + power
    /// optimization), false for the equal-split full-power baseline.
    pub optimized: bool,
    /// Sorted sum-SE samples, one per realization.
    pub sse: Vec<f64>,
    /// Sorted pooled per-user SE samples (K per realization).
    pub per_ue: Vec<f64>,
}

impl CdfSeries {
    /// p-quantile of the SSE samples (0 < p < 1), by lower interpolation.
    pub fn sse_quantile(&self, p: f64) -> f64 {
        let idx = ((self.sse.len() as f64) * p).floor() as usize;
        self.sse[idx.min(self.sse.len() - 1)]
    }
}

/// CDF comparison report.
#[derive(Debug, Clone)]
pub struct CdfReport {
    pub series: Vec<CdfSeries>,
    pub realizations: usize,
}

/// Build optimized-vs-baseline CDFs of SSE and per-user SE.
pub fn run_cdf(spec: &ExperimentSpec) -> Result<CdfReport> {
    let spec = spec.clone().validated()?;
    if spec.realizations < 100 {
        return Err(Error::InvalidConfig(format!(
            "CDF output needs at least 100 realizations, got {}",
            spec.realizations
        )));
    }
    let outcomes: Vec<Result<Vec<(Strategy, bool, f64, Vec<f64>)>>> = (0..spec.realizations)
        .into_par_iter()
        .map(|ri| {
            let scn = Scenario::generate(spec.config.clone(), scenario_seed(spec.seed, 0, ri));
            let mut cell = Vec::new();
            for &strategy in &spec.strategies {
                let base =
                    evaluate_strategy(&scn, strategy, AllocMode::Equal, false, spec.capacity)?;
                cell.push((
                    strategy,
                    false,
                    base.sse,
                    base.breakdowns.iter().map(|b| b.rate).collect(),
                ));
                let optimized = evaluate_strategy(
                    &scn,
                    strategy,
                    AllocMode::Proposed,
                    strategy != Strategy::Emcf,
                    spec.capacity,
                )?;
                cell.push((
                    strategy,
                    true,
                    optimized.sse,
                    optimized.breakdowns.iter().map(|b| b.rate).collect(),
                ));
            }
            Ok(cell)
        })
        .collect();

    let mut series: Vec<CdfSeries> = Vec::new();
    for &strategy in &spec.strategies {
        for optimized in [false, true] {
            series.push(CdfSeries { strategy, optimized, sse: Vec::new(), per_ue: Vec::new() });
        }
    }
    for cell in outcomes {
        for (strategy, optimized, sse, rates) in cell? {
            let slot = series
                .iter_mut()
                .find(|s| s.strategy == strategy && s.optimized == optimized)
                .expect("series preallocated");
            slot.sse.push(sse);
            slot.per_ue.extend(rates);
        }
    }
    for s in series.iter_mut() {
        s.sse.sort_by(|a, b| a.partial_cmp(b).unwrap());
        s.per_ue.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }
    Ok(CdfReport { series, realizations: spec.realizations })
}

/// Run the oracle's full pairing suite on the experiment's scenario.
pub fn run_validation(spec: &ExperimentSpec) -> Result<ValidationReport> {
    let scn = Scenario::generate(spec.config.clone(), spec.seed);
    oracle::run_validation(
        &scn,
        &ValidationOptions {
            mc: McConfig::new(spec.oracle_draws, spec.seed),
            capacity: spec.capacity,
            perturb: None,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desk_spec(m: usize, k: usize) -> ExperimentSpec {
        let mut spec = ExperimentSpec::desk_default(SystemConfig::with_size(m, k));
        spec.realizations = 4;
        spec.grid = vec![0.5, 1.0, 2.0];
        spec
    }

    #[test]
    fn sweep_rows_are_deterministic_and_complete() {
        let spec = desk_spec(8, 3);
        let a = run_sweep(&spec).unwrap();
        let b = run_sweep(&spec).unwrap();
        assert_eq!(a.rows.len(), b.rows.len());
        assert_eq!(a.rows.len(), 3 * 4 * 3 * 3); // grid x realizations x strategies x ues
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert_eq!(x.sse.to_bits(), y.sse.to_bits());
            assert_eq!(x.rate.to_bits(), y.rate.to_bits());
        }
        assert!(a.rows.iter().all(|r| r.error.is_none()));

        // each cell's sse is exactly the sum of its per-user rates
        use std::collections::HashMap;
        let mut cells: HashMap<(u64, usize, &str), (f64, f64)> = HashMap::new();
        for r in &a.rows {
            let e = cells.entry((r.axis_value.to_bits(), r.realization, r.strategy)).or_insert((0.0, r.sse));
            e.0 += r.rate;
        }
        for ((_, _, strategy), (rate_sum, sse)) in cells {
            assert!(
                (rate_sum - sse).abs() <= 1e-12 * sse.max(1e-12),
                "{strategy}: rates sum {rate_sum} vs sse {sse}"
            );
        }
    }

    #[test]
    fn sse_is_nondecreasing_in_capacity() {
        let mut spec = desk_spec(12, 3);
        spec.grid = vec![0.5, 1.0, 2.0, 4.0];
        spec.realizations = 6;
        let report = run_sweep(&spec).unwrap();
        for &strategy in &spec.strategies {
            let mut last = 0.0;
            for &c in &spec.grid {
                let sse = report.mean_sse(c, strategy);
                assert!(
                    sse >= last - 1e-9,
                    "{} at C={c}: {sse} < {last}",
                    strategy.label()
                );
                last = sse;
            }
        }
    }

    #[test]
    fn ue_hardware_quality_hurts_more_than_ap_quality() {
        // xi_t = 0.8 must cost more SSE than xi_r = 0.8 at the same C
        let spec = desk_spec(12, 3);
        let base = SystemConfig::with_size(12, 3);
        let mut sse = [0.0; 2];
        for (i, axis) in [SweepAxis::XiT, SweepAxis::XiR].into_iter().enumerate() {
            let mut s = spec.clone();
            s.config = base.clone();
            s.axis = axis;
            s.grid = vec![0.8];
            s.realizations = 10;
            s.strategies = vec![Strategy::EcfUb];
            let report = run_sweep(&s).unwrap();
            sse[i] = report.mean_sse(0.8, Strategy::EcfUb);
        }
        assert!(sse[0] < sse[1], "xi_t=0.8 gave {} vs xi_r=0.8 {}", sse[0], sse[1]);
    }

    #[test]
    fn cdf_requires_enough_realizations_and_is_monotone() {
        let mut spec = desk_spec(8, 3);
        spec.realizations = 10;
        assert!(run_cdf(&spec).is_err());

        spec.realizations = 100;
        spec.strategies = vec![Strategy::EcfUb];
        let report = run_cdf(&spec).unwrap();
        assert_eq!(report.series.len(), 2);
        for s in &report.series {
            assert_eq!(s.sse.len(), 100);
            assert!(s.sse.windows(2).all(|w| w[0] <= w[1]));
            assert!(s.per_ue.windows(2).all(|w| w[0] <= w[1]));
        }
        // optimized 5%-outage SSE at least matches the baseline
        let base = report.series.iter().find(|s| !s.optimized).unwrap();
        let opt = report.series.iter().find(|s| s.optimized).unwrap();
        assert!(opt.sse_quantile(0.05) >= base.sse_quantile(0.05));
    }
}

#[cfg(test)]
mod edge_tests {
    use super::*;
    use crate::allocation::Strategy;

    #[test]
    fn all_pilot_coherence_interval_yields_zero_rates() {
        // tau == T leaves no data phase: every link is dark and every
        // rate is zero, but nothing panics
        let mut cfg = SystemConfig::with_size(4, 3);
        cfg.t = 3;
        cfg.tau = 3;
        let cfg = cfg.validated().unwrap();
        assert_eq!(cfg.data_fraction(), 0.0);
        let scn = Scenario::generate(cfg, 1);
        for strategy in [Strategy::Cfe, Strategy::EcfUb, Strategy::Emcf] {
            let out = evaluate_strategy(&scn, strategy, AllocMode::Equal, false, 1.0).unwrap();
            assert_eq!(out.sse, 0.0, "{}", strategy.label());
        }
    }
}
