//! File emission: CSV tables with a commented header block, plus a few
//! human-readable text reports.
//!
//! Every file starts with `#`-prefixed lines recording the tool version,
//! the master seed and the full scenario configuration, so any output is
//! re-plottable and reproducible from its own header.

use std::fmt::Write as _;
use std::path::Path;

use crate::allocation::{FronthaulPlan, Strategy};
use crate::config::SystemConfig;
use crate::error::Result;
use crate::estimation::EstimationStats;
use crate::experiment::{CdfReport, ExperimentSpec, RateReport};
use crate::netmodel::{path_loss_db, wrapped_distance, Scenario};
use crate::oracle::ValidationReport;
use crate::poweropt::GpSolution;
use crate::rates::SinrBreakdown;

fn header_block(title: &str, config: &SystemConfig, seed: u64) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {title}");
    let _ = writeln!(out, "# generator: cfmimo v{}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "# seed: {seed}");
    for line in config.to_kv_lines().lines() {
        let _ = writeln!(out, "# config: {line}");
    }
    out
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, contents)?;
    Ok(())
}

/// Sweep output: one row per (grid point, realization, strategy, user).
pub fn write_sweep_csv(path: &Path, spec: &ExperimentSpec, report: &RateReport) -> Result<()> {
    let mut out = header_block("sweep", &spec.config, spec.seed);
    let _ = writeln!(out, "# axis: {}", report.axis.label());
    let _ = writeln!(out, "# allocation: {}", spec.alloc.label());
    let _ = writeln!(out, "# power_opt: {}", spec.power_opt);
    let _ = writeln!(out, "axis_value,realization,strategy,ue,rate_bits,sse_bits,ee_bits_per_joule,error");
    for row in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            row.axis_value,
            row.realization,
            row.strategy,
            row.ue,
            row.rate,
            row.sse,
            row.ee,
            row.error.as_deref().unwrap_or("")
        );
    }
    write(path, &out)
}

/// CDF output: sorted samples with their empirical CDF levels.
pub fn write_cdf_csv(path: &Path, spec: &ExperimentSpec, report: &CdfReport) -> Result<()> {
    let mut out = header_block("cdf", &spec.config, spec.seed);
    let _ = writeln!(out, "# realizations: {}", report.realizations);
    let _ = writeln!(out, "strategy,pipeline,quantity,value,cdf");
    for series in &report.series {
        let pipeline = if series.optimized { "optimized" } else { "baseline" };
        for (name, samples) in [("sse", &series.sse), ("per_ue_se", &series.per_ue)] {
            let n = samples.len() as f64;
            for (i, v) in samples.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    series.strategy.label(),
                    pipeline,
                    name,
                    v,
                    (i + 1) as f64 / n
                );
            }
        }
    }
    write(path, &out)
}

/// Validation output: one row per closed-form/empirical pairing.
pub fn write_validation_csv(
    path: &Path,
    config: &SystemConfig,
    report: &ValidationReport,
) -> Result<()> {
    let mut out = header_block("validation", config, report.seed);
    let _ = writeln!(out, "# draws: {}", report.draws);
    let _ = writeln!(out, "# passed: {}", report.passed);
    let _ = writeln!(out, "quantity,ue,closed_form,empirical,std_error,rel_deviation,pass");
    for row in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            row.quantity,
            row.ue.map(|u| u.to_string()).unwrap_or_default(),
            row.closed_form,
            row.empirical,
            row.std_error,
            row.deviation.map(|d| d.to_string()).unwrap_or_default(),
            row.pass
        );
    }
    write(path, &out)
}

/// Scenario geometry and large-scale map, one row per (ap, ue) pair.
pub fn write_scenario_csv(path: &Path, scn: &Scenario, seed: u64) -> Result<()> {
    let mut out = header_block("scenario", &scn.config, seed);
    let _ = writeln!(out, "ap,ue,ap_x,ap_y,ue_x,ue_y,distance_m,path_loss_db,beta_linear");
    for (m, ap) in scn.layout.ap.iter().enumerate() {
        for (k, ue) in scn.layout.ue.iter().enumerate() {
            let d = wrapped_distance(*ap, *ue, scn.config.d);
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                m,
                k,
                ap[0],
                ap[1],
                ue[0],
                ue[1],
                d,
                path_loss_db(d, &scn.config),
                scn.beta.beta[m][k]
            );
        }
    }
    write(path, &out)
}

/// Estimation statistics, one row per (ap, ue) pair.
pub fn write_estimation_csv(
    path: &Path,
    config: &SystemConfig,
    stats: &EstimationStats,
    seed: u64,
) -> Result<()> {
    let mut out = header_block("estimation", config, seed);
    let _ = writeln!(out, "ap,ue,lambda,gamma,gamma_prime,q_csi");
    for m in 0..stats.m() {
        for k in 0..stats.k() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                m,
                k,
                stats.lambda[m][k],
                stats.gamma[m][k],
                stats.gamma_prime[m][k],
                stats.q_csi[m][k]
            );
        }
    }
    write(path, &out)
}

/// Per-user SINR breakdowns, the primary debugging artifact.
pub fn write_breakdown_csv(
    path: &Path,
    config: &SystemConfig,
    entries: &[(Strategy, &[SinrBreakdown])],
    seed: u64,
) -> Result<()> {
    let mut out = header_block("sinr-breakdown", config, seed);
    let _ = writeln!(
        out,
        "strategy,ue,ds,bu,iui_total,thi_total,rhi,rn,qn,denominator,sinr,rate_bits,lb_valid"
    );
    for (strategy, breakdowns) in entries {
        for b in *breakdowns {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                strategy.label(),
                b.ue,
                b.ds,
                b.bu,
                b.iui.iter().sum::<f64>(),
                b.thi.iter().sum::<f64>(),
                b.rhi,
                b.rn,
                b.qn,
                b.denominator,
                b.sinr,
                b.rate,
                b.lb_valid
            );
        }
    }
    write(path, &out)
}

/// Human-readable fronthaul plan: per-access-point split and noise table.
pub fn plan_text(plan: &FronthaulPlan) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "fronthaul plan ({})", plan.strategy.label());
    let _ = writeln!(out, "{:>4} {:>10} {:>10} {:>10} {:>12}", "ap", "C", "C_pilot", "C_data", "Q_data");
    for m in 0..plan.c_total.len() {
        let q_data = plan.q_data[m]
            .variance()
            .map(|v| format!("{v:.3e}"))
            .unwrap_or_else(|| "dark".into());
        let _ = writeln!(
            out,
            "{:>4} {:>10.4} {:>10.4} {:>10.4} {:>12}",
            m, plan.c_total[m], plan.c_pilot[m], plan.c_data[m], q_data
        );
        match plan.strategy {
            Strategy::EcfLb | Strategy::EcfUb => {
                for (k, (share, q)) in
                    plan.csi_shares[m].iter().zip(&plan.q_csi[m]).enumerate()
                {
                    let _ = writeln!(out, "       ue {k}: csi share {share:.5}  q_csi {q:.3e}");
                }
            }
            Strategy::Emcf => {
                for (k, (share, q)) in
                    plan.product_shares[m].iter().zip(&plan.q_product[m]).enumerate()
                {
                    let q = q
                        .variance()
                        .map(|v| format!("{v:.3e}"))
                        .unwrap_or_else(|| "dark".into());
                    let _ = writeln!(out, "       ue {k}: capacity {share:.5}  q {q}");
                }
            }
            Strategy::Cfe => {
                let q = plan.q_pilot_ap[m]
                    .variance()
                    .map(|v| format!("{v:.3e}"))
                    .unwrap_or_else(|| "dark".into());
                let _ = writeln!(out, "       pilot q per entry: {q}");
            }
        }
    }
    out
}

/// Human-readable power-optimization report.
pub fn gp_text(solution: &GpSolution, sinr: &[f64]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "power allocation (geometric program)");
    let _ = writeln!(out, "log objective (sum ln SINR): {:.6}", solution.log_objective);
    let _ = writeln!(out, "sum log2(1+SINR):            {:.6}", solution.sum_log2_rate);
    let _ = writeln!(out, "kkt residual:                {:.3e}", solution.kkt_residual);
    let _ = writeln!(out, "constraint violation:        {:.3e}", solution.constraint_violation);
    let _ = writeln!(out, "iterations:                  {}", solution.iterations);
    let _ = writeln!(out, "full-power fallback:         {}", solution.fallback_full_power);
    let _ = writeln!(out, "{:>4} {:>10} {:>14} {:>14}", "ue", "eta", "sinr", "certificate");
    for (k, &eta) in solution.eta.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:>4} {:>10.6} {:>14.6e} {:>14.3e}",
            k, eta, sinr[k], solution.certificate[k]
        );
    }
    out
}

/// Write any pre-rendered text report.
pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    write(path, contents)
}
