//! Sum-SE power allocation via geometric programming.
//!
//! For a frozen fronthaul plan the CFE SINR (and the ECF bounds) are
//! ratios `SINR_k(eta) = A_k eta_k / (sum_k' eta_k' B_kk' + L_k)`: the
//! data-quantization noise is itself affine in the user powers, so it
//! folds into the `B` matrix and the closed form is exact, not an
//! approximation. Maximizing `prod_k SINR_k` under `0 < eta_k <= 1` is a
//! geometric program; in log variables it becomes convex with
//! log-sum-exp constraints and is solved here by a self-contained barrier
//! method with Newton steps and backtracking line search.
//!
//! The product objective is the high-SNR surrogate of the true sum rate,
//! so the solver reports both: the log-objective it optimized and the
//! resulting `sum log2(1 + SINR)`. If the surrogate optimum ever loses to
//! full power on the true sum rate, full power is returned and flagged.

use nalgebra::{DMatrix, DVector};

use crate::allocation::{data_quant_noise, FronthaulPlan, Strategy};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::estimation::EstimationStats;
use crate::netmodel::LargeScaleMap;
use crate::rates;

/// Smallest admissible user power in the log-domain solver.
const ETA_FLOOR: f64 = 1e-8;
/// Powers below this round to zero in the post-pass.
const ETA_ROUND: f64 = 1e-6;

/// Rational SINR coefficients for one strategy and plan.
#[derive(Debug, Clone)]
pub struct GpProblem {
    /// Numerator coefficients `A_k > 0`.
    pub a: Vec<f64>,
    /// Interference matrix `B[k][k'] >= 0`.
    pub b: Vec<Vec<f64>>,
    /// Power-independent denominator terms `L_k > 0`.
    pub l: Vec<f64>,
}

impl GpProblem {
    pub fn k(&self) -> usize {
        self.a.len()
    }

    /// Exact SINR of every user at the given power vector.
    pub fn sinr(&self, eta: &[f64]) -> Vec<f64> {
        (0..self.k())
            .map(|k| {
                let den: f64 = self.b[k]
                    .iter()
                    .zip(eta)
                    .map(|(&b, &e)| b * e)
                    .sum::<f64>()
                    + self.l[k];
                self.a[k] * eta[k] / den
            })
            .collect()
    }

    /// Product-SINR objective in nats, `sum_k ln SINR_k`.
    pub fn log_objective(&self, eta: &[f64]) -> f64 {
        self.sinr(eta).iter().map(|s| s.ln()).sum()
    }

    /// True sum-rate surrogate `sum_k log2(1 + SINR_k)` (no prelog).
    pub fn sum_log2_rate(&self, eta: &[f64]) -> f64 {
        self.sinr(eta).iter().map(|s| (1.0 + s).log2()).sum()
    }
}

/// Evaluate the strategy's raw denominator (before any guard) for every
/// user, with the data quantization noise recomputed for this `eta`.
fn denominators_at(
    beta: &LargeScaleMap,
    stats: &EstimationStats,
    plan: &FronthaulPlan,
    strategy: Strategy,
    eta: &[f64],
    cfg: &SystemConfig,
) -> (Vec<f64>, Vec<f64>) {
    let mut plan = plan.clone();
    for m in 0..cfg.m {
        plan.q_data[m] = data_quant_noise(&beta.beta[m], eta, plan.c_data[m], cfg);
    }
    let breakdowns = match strategy {
        Strategy::Cfe => rates::sinr_cfe(beta, stats, &plan, eta, cfg),
        Strategy::EcfLb => rates::sinr_ecf_lb(beta, stats, &plan, eta, cfg),
        Strategy::EcfUb => rates::sinr_ecf_ub(beta, stats, &plan, eta, cfg),
        Strategy::Emcf => unreachable!("no GP is defined for EMCF"),
    };
    let raw = breakdowns
        .iter()
        .map(|b| b.bu + b.iui.iter().sum::<f64>() + b.thi.iter().sum::<f64>() + b.rhi + b.rn + b.qn)
        .collect();
    let ds = breakdowns.iter().map(|b| b.ds).collect();
    (raw, ds)
}

/// Extract the rational coefficients by probing the affine denominator at
/// the zero vector and at each unit power vector.
fn extract(
    beta: &LargeScaleMap,
    stats: &EstimationStats,
    plan: &FronthaulPlan,
    strategy: Strategy,
    cfg: &SystemConfig,
) -> Result<GpProblem> {
    let kk = cfg.k;
    let zeros = vec![0.0; kk];
    let (l, _) = denominators_at(beta, stats, plan, strategy, &zeros, cfg);
    let mut b = vec![vec![0.0; kk]; kk];
    let mut a = vec![0.0; kk];
    for kp in 0..kk {
        let mut unit = vec![0.0; kk];
        unit[kp] = 1.0;
        let (den, ds) = denominators_at(beta, stats, plan, strategy, &unit, cfg);
        for k in 0..kk {
            b[k][kp] = den[k] - l[k];
        }
        a[kp] = ds[kp];
    }

    for k in 0..kk {
        if !(a[k] > 0.0) {
            return Err(Error::GpInfeasible(format!(
                "user {k} has zero desired-signal power under this plan"
            )));
        }
        if !(l[k] > 0.0) {
            return Err(Error::GpInfeasible(format!(
                "constant denominator term for user {k} is {:.3e}",
                l[k]
            )));
        }
        for kp in 0..kk {
            // tiny negative extraction noise is rounded away; a genuinely
            // negative entry (lower bound with heavy CSI noise) is not a
            // posynomial and cannot enter the GP
            if b[k][kp] < 0.0 {
                if b[k][kp] > -1e-12 * l[k].max(a[k]) {
                    b[k][kp] = 0.0;
                } else {
                    return Err(Error::GpInfeasible(format!(
                        "interference coefficient B[{k}][{kp}] = {:.3e} is negative",
                        b[k][kp]
                    )));
                }
            }
        }
    }
    Ok(GpProblem { a, b, l })
}

/// GP coefficients for the CFE strategy.
pub fn build_gp_cfe(
    beta: &LargeScaleMap,
    stats: &EstimationStats,
    plan: &FronthaulPlan,
    cfg: &SystemConfig,
) -> Result<GpProblem> {
    extract(beta, stats, plan, Strategy::Cfe, cfg)
}

/// Which ECF bound the GP should maximize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EcfBound {
    Lower,
    Upper,
}

/// GP coefficients for the ECF strategy.
///
/// The upper bound is always a posynomial. The lower bound subtracts CSI
/// cross terms from the interference matrix; when that drives an entry
/// negative the problem stops being a GP and `GpInfeasible` is returned
/// so the caller can fall back to the upper bound.
pub fn build_gp_ecf(
    beta: &LargeScaleMap,
    stats: &EstimationStats,
    plan: &FronthaulPlan,
    bound: EcfBound,
    cfg: &SystemConfig,
) -> Result<GpProblem> {
    let strategy = match bound {
        EcfBound::Lower => Strategy::EcfLb,
        EcfBound::Upper => Strategy::EcfUb,
    };
    extract(beta, stats, plan, strategy, cfg)
}

/// Barrier-method solution of the power allocation GP.
#[derive(Debug, Clone)]
pub struct GpSolution {
    /// Recommended user powers in `[0, 1]` (the GP optimizer, or full
    /// power when that wins on the true sum rate).
    pub eta: Vec<f64>,
    /// The GP optimizer's own point, regardless of any fallback.
    pub gp_eta: Vec<f64>,
    /// Auxiliary SINR targets at the GP point.
    pub t: Vec<f64>,
    /// GP objective `sum_k ln SINR_k` at the GP point.
    pub log_objective: f64,
    /// `sum_k log2(1 + SINR_k(eta))` at the recommended powers.
    pub sum_log2_rate: f64,
    /// Duality-gap proxy at exit.
    pub kkt_residual: f64,
    /// Worst violation of the original constraints (negative = slack).
    pub constraint_violation: f64,
    /// Per-user relative gap between `t_k` and the achieved SINR.
    pub certificate: Vec<f64>,
    pub iterations: usize,
    /// Objective value after each barrier stage (nondecreasing).
    pub objective_path: Vec<f64>,
    /// True when full power beat the GP point on the true sum rate.
    pub fallback_full_power: bool,
}

struct Barrier {
    /// `ln(B[k][j] / A_k)` for finite entries, `None` for zero coefficients.
    log_b: Vec<Vec<Option<f64>>>,
    /// `ln(L_k / A_k)`.
    log_l: Vec<f64>,
    k: usize,
}

impl Barrier {
    fn new(problem: &GpProblem) -> Self {
        let k = problem.k();
        let log_b = (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| {
                        let b = problem.b[i][j];
                        if b > 0.0 { Some((b / problem.a[i]).ln()) } else { None }
                    })
                    .collect()
            })
            .collect();
        let log_l = (0..k).map(|i| (problem.l[i] / problem.a[i]).ln()).collect();
        Barrier { log_b, log_l, k }
    }

    /// Log-sum-exp value of SINR constraint `i` at `z = (x, y)`;
    /// feasibility means `f_i < 0`.
    fn constraint(&self, i: usize, z: &[f64]) -> f64 {
        let (x, y) = z.split_at(self.k);
        let mut exps = Vec::with_capacity(self.k + 1);
        for j in 0..self.k {
            if let Some(lb) = self.log_b[i][j] {
                exps.push(y[i] - x[i] + x[j] + lb);
            }
        }
        exps.push(y[i] - x[i] + self.log_l[i]);
        log_sum_exp(&exps)
    }

    /// All slacks (positive = strictly feasible): SINR constraints, then
    /// the upper and lower power bounds.
    fn slacks(&self, z: &[f64]) -> Vec<f64> {
        let mut s = Vec::with_capacity(3 * self.k);
        for i in 0..self.k {
            s.push(-self.constraint(i, z));
        }
        for j in 0..self.k {
            s.push(-z[j]); // x_j <= 0
        }
        let floor = ETA_FLOOR.ln();
        for j in 0..self.k {
            s.push(z[j] - floor); // x_j >= ln floor
        }
        s
    }

    /// Barrier objective `t * (-sum y) - sum ln(slacks)`.
    fn value(&self, t: f64, z: &[f64]) -> f64 {
        let y_sum: f64 = z[self.k..].iter().sum();
        let mut v = -t * y_sum;
        for s in self.slacks(z) {
            if s <= 0.0 {
                return f64::INFINITY;
            }
            v -= s.ln();
        }
        v
    }

    /// Gradient and Hessian of the barrier objective.
    fn derivatives(&self, t: f64, z: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let n = 2 * self.k;
        let mut grad = DVector::<f64>::zeros(n);
        let mut hess = DMatrix::<f64>::zeros(n, n);
        for yi in self.k..n {
            grad[yi] -= t;
        }

        let (x, y) = z.split_at(self.k);
        for i in 0..self.k {
            // softmax over the constraint's exponent terms
            let mut exps = Vec::with_capacity(self.k + 1);
            let mut vars: Vec<Vec<(usize, f64)>> = Vec::with_capacity(self.k + 1);
            for j in 0..self.k {
                if let Some(lb) = self.log_b[i][j] {
                    exps.push(y[i] - x[i] + x[j] + lb);
                    let mut a = vec![(self.k + i, 1.0)];
                    if j == i {
                        // the -x_i and +x_j cancel
                    } else {
                        a.push((i, -1.0));
                        a.push((j, 1.0));
                    }
                    vars.push(a);
                }
            }
            exps.push(y[i] - x[i] + self.log_l[i]);
            vars.push(vec![(self.k + i, 1.0), (i, -1.0)]);

            let f = log_sum_exp(&exps);
            let slack = -f;
            debug_assert!(slack > 0.0);
            let max = exps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let weights: Vec<f64> = exps.iter().map(|&e| (e - max).exp()).collect();
            let wsum: f64 = weights.iter().sum();

            let mut df = DVector::<f64>::zeros(n);
            let mut d2f = DMatrix::<f64>::zeros(n, n);
            for (w, a) in weights.iter().zip(&vars) {
                let p = w / wsum;
                for &(idx, c) in a {
                    df[idx] += p * c;
                }
                for &(i1, c1) in a {
                    for &(i2, c2) in a {
                        d2f[(i1, i2)] += p * c1 * c2;
                    }
                }
            }
            // LSE Hessian: E[aa^T] - E[a]E[a]^T
            for i1 in 0..n {
                for i2 in 0..n {
                    d2f[(i1, i2)] -= df[i1] * df[i2];
                }
            }
            // barrier of -ln(slack)
            for i1 in 0..n {
                grad[i1] += df[i1] / slack;
                for i2 in 0..n {
                    hess[(i1, i2)] += d2f[(i1, i2)] / slack + df[i1] * df[i2] / (slack * slack);
                }
            }
        }

        let floor = ETA_FLOOR.ln();
        for j in 0..self.k {
            let up = -x[j];
            grad[j] += 1.0 / up;
            hess[(j, j)] += 1.0 / (up * up);
            let low = x[j] - floor;
            grad[j] -= 1.0 / low;
            hess[(j, j)] += 1.0 / (low * low);
        }
        (grad, hess)
    }
}

fn log_sum_exp(exps: &[f64]) -> f64 {
    let max = exps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    max + exps.iter().map(|&e| (e - max).exp()).sum::<f64>().ln()
}

/// Solve the GP by a log-domain barrier method.
///
/// `tol` bounds both the final duality-gap proxy and the accepted
/// constraint violation (1e-8 is the intended setting).
pub fn solve_gp(problem: &GpProblem, tol: f64) -> Result<GpSolution> {
    let k = problem.k();
    let barrier = Barrier::new(problem);

    // strictly feasible start: almost full power, SINR targets at 90%
    let eta0 = vec![1.0 - 1e-6; k];
    let sinr0 = problem.sinr(&eta0);
    if sinr0.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::GpInfeasible("a user has zero SINR at full power".into()));
    }
    let mut z: Vec<f64> = eta0.iter().map(|&e| e.ln()).collect();
    z.extend(sinr0.iter().map(|&s| (0.9 * s).ln()));

    let m_constraints = (3 * k) as f64;
    let gap_target = (tol * 1e-2).min(1e-10);
    let mut t = 1.0;
    let mut total_iterations = 0;
    let mut objective_path = Vec::new();

    while m_constraints / t > gap_target {
        // Newton centering at this barrier weight
        for _ in 0..60 {
            total_iterations += 1;
            if total_iterations > 5000 {
                return Err(Error::GpNoConvergence {
                    iterations: total_iterations,
                    objective: problem.log_objective(&current_eta(&z, k)),
                });
            }
            let (grad, hess) = barrier.derivatives(t, &z);
            let mut damped = hess.clone();
            let step = loop {
                match damped.clone().cholesky() {
                    Some(ch) => break ch.solve(&(-&grad)),
                    None => {
                        for d in 0..2 * k {
                            damped[(d, d)] += 1e-9 * (1.0 + damped[(d, d)].abs());
                        }
                    }
                }
            };
            let decrement = -grad.dot(&step);
            if decrement * 0.5 < 1e-13 {
                break;
            }
            // backtracking: stay strictly feasible, then Armijo
            let base = barrier.value(t, &z);
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let trial: Vec<f64> =
                    z.iter().zip(step.iter()).map(|(&v, &d)| v + alpha * d).collect();
                let val = barrier.value(t, &trial);
                if val.is_finite() && val <= base - 0.25 * alpha * decrement {
                    z = trial;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        objective_path.push(z[k..].iter().sum());
        t *= 20.0;
    }

    let mut gp_eta = current_eta(&z, k);
    let t_vars: Vec<f64> = z[k..].iter().map(|&y| y.exp()).collect();

    // post-pass: snap near-zero powers to zero if the true rate allows it
    let base_rate = problem.sum_log2_rate(&gp_eta);
    let mut rounded = gp_eta.clone();
    let mut changed = false;
    for e in rounded.iter_mut() {
        if *e < ETA_ROUND {
            *e = 0.0;
            changed = true;
        }
    }
    if changed && problem.sum_log2_rate(&rounded) >= base_rate - 1e-12 {
        gp_eta = rounded;
    }

    // the GP point certifies the product objective; certificate and
    // constraint checks refer to it
    let gp_sinr = problem.sinr(&gp_eta);
    let log_objective = gp_sinr.iter().map(|&s| s.max(1e-300).ln()).sum();
    let certificate: Vec<f64> = gp_sinr
        .iter()
        .zip(&t_vars)
        .map(|(&s, &tv)| if s > 0.0 { (s - tv).abs() / s } else { 0.0 })
        .collect();
    let constraint_violation = (0..k)
        .map(|i| {
            let den: f64 = problem.b[i]
                .iter()
                .zip(&gp_eta)
                .map(|(&b, &e)| b * e)
                .sum::<f64>()
                + problem.l[i];
            t_vars[i] * den / (problem.a[i] * gp_eta[i].max(ETA_FLOOR)) - 1.0
        })
        .fold(f64::NEG_INFINITY, f64::max)
        .max(gp_eta.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - 1.0);

    // the product objective is a high-SNR surrogate; never recommend a
    // point that loses to plain full power on the true sum rate
    let ones = vec![1.0; k];
    let mut eta = gp_eta.clone();
    let mut fallback_full_power = false;
    if problem.sum_log2_rate(&ones) > problem.sum_log2_rate(&eta) + 1e-12 {
        eta = ones;
        fallback_full_power = true;
    }

    Ok(GpSolution {
        log_objective,
        sum_log2_rate: problem.sum_log2_rate(&eta),
        eta,
        gp_eta,
        t: t_vars,
        kkt_residual: m_constraints / t,
        constraint_violation,
        certificate,
        iterations: total_iterations,
        objective_path,
        fallback_full_power,
    })
}

fn current_eta(z: &[f64], k: usize) -> Vec<f64> {
    z[..k].iter().map(|&x| x.exp().min(1.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocation::{Planner, ShareMode};
    use crate::estimation::{apply_csi_quantization, cfe_stats};
    use crate::netmodel::Scenario;
    use crate::SystemConfig;

    fn scenario(seed: u64, m: usize, k: usize) -> Scenario {
        Scenario::generate(SystemConfig::with_size(m, k), seed)
    }

    fn cfe_setup(scn: &Scenario, c: f64, frac: f64) -> (GpProblem, crate::allocation::FronthaulPlan) {
        let planner = Planner::new(&scn.beta, &scn.config);
        let eta = vec![1.0; scn.config.k];
        let plan = planner.split_plan(
            &vec![c; scn.config.m],
            Strategy::Cfe,
            frac,
            ShareMode::Uniform,
            &eta,
        );
        let stats = cfe_stats(&scn.beta, &plan.q_pilot_ap, &scn.config);
        let problem = build_gp_cfe(&scn.beta, &stats, &plan, &scn.config).unwrap();
        (problem, plan)
    }

    #[test]
    fn rebuilt_sinr_matches_closed_form_evaluator() {
        let scn = scenario(2, 12, 4);
        let (problem, plan) = cfe_setup(&scn, 1.0, 0.4);
        let stats = cfe_stats(&scn.beta, &plan.q_pilot_ap, &scn.config);
        for trial in 0..5 {
            let eta: Vec<f64> =
                (0..4).map(|k| 0.15 + 0.8 * (((trial * 4 + k) % 7) as f64 / 6.0)).collect();
            let mut plan_eta = plan.clone();
            for m in 0..scn.config.m {
                plan_eta.q_data[m] =
                    data_quant_noise(&scn.beta.beta[m], &eta, plan.c_data[m], &scn.config);
            }
            let direct = rates::sinr_cfe(&scn.beta, &stats, &plan_eta, &eta, &scn.config);
            let rebuilt = problem.sinr(&eta);
            for k in 0..4 {
                let rel = (direct[k].sinr - rebuilt[k]).abs() / direct[k].sinr;
                assert!(rel < 1e-10, "trial {trial} ue {k}: {rel}");
            }
        }
    }

    #[test]
    fn ecf_coefficients_match_bound_evaluators() {
        let scn = scenario(6, 10, 3);
        let planner = Planner::new(&scn.beta, &scn.config);
        let eta1 = vec![1.0; 3];
        let plan = planner.split_plan(
            &vec![1.5; 10],
            Strategy::EcfUb,
            0.5,
            ShareMode::Proportional,
            &eta1,
        );
        let stats = apply_csi_quantization(planner.ecf_stats(), &plan.q_csi).unwrap();
        for bound in [EcfBound::Upper, EcfBound::Lower] {
            let problem = build_gp_ecf(&scn.beta, &stats, &plan, bound, &scn.config).unwrap();
            let eta = vec![0.3, 0.9, 0.55];
            let mut plan_eta = plan.clone();
            for m in 0..10 {
                plan_eta.q_data[m] =
                    data_quant_noise(&scn.beta.beta[m], &eta, plan.c_data[m], &scn.config);
            }
            let direct = match bound {
                EcfBound::Lower => rates::sinr_ecf_lb(&scn.beta, &stats, &plan_eta, &eta, &scn.config),
                EcfBound::Upper => rates::sinr_ecf_ub(&scn.beta, &stats, &plan_eta, &eta, &scn.config),
            };
            let rebuilt = problem.sinr(&eta);
            for k in 0..3 {
                let rel = (direct[k].sinr - rebuilt[k]).abs() / direct[k].sinr;
                assert!(rel < 1e-10, "{bound:?} ue {k}: {rel}");
            }
        }
    }

    #[test]
    fn quantization_coefficients_vanish_with_unlimited_data_capacity() {
        // xi = 1, huge C_d: L reduces to N * sum(gamma)
        let scn = scenario(5, 6, 2);
        let (problem, plan) = cfe_setup(&scn, 1e4, 0.5);
        let stats = cfe_stats(&scn.beta, &plan.q_pilot_ap, &scn.config);
        for k in 0..2 {
            let n_gamma: f64 =
                (0..6).map(|m| scn.config.n * stats.gamma[m][k]).sum();
            assert!((problem.l[k] - n_gamma).abs() < 1e-6 * n_gamma);
        }
    }

    #[test]
    fn single_user_prefers_full_power() {
        let scn = scenario(9, 8, 1);
        let (problem, _) = cfe_setup(&scn, 1.0, 0.5);
        let sol = solve_gp(&problem, 1e-8).unwrap();
        assert!(sol.eta[0] > 1.0 - 1e-6, "eta = {}", sol.eta[0]);
        assert!(sol.constraint_violation <= 1e-8);
    }

    #[test]
    fn two_user_solution_matches_grid_search() {
        for seed in [3u64, 14, 25] {
            let scn = scenario(seed, 10, 2);
            let (problem, _) = cfe_setup(&scn, 0.8, 0.5);
            let sol = solve_gp(&problem, 1e-8).unwrap();

            let mut grid_best = f64::NEG_INFINITY;
            for i in 1..=200 {
                for j in 1..=200 {
                    let eta = [i as f64 / 200.0, j as f64 / 200.0];
                    grid_best = grid_best.max(problem.log_objective(&eta));
                }
            }
            let diff = (sol.log_objective - grid_best).abs();
            assert!(
                sol.log_objective >= grid_best - 1e-2 && diff < 1e-2,
                "seed {seed}: solver {} vs grid {grid_best}",
                sol.log_objective
            );
        }
    }

    #[test]
    fn never_worse_than_full_power_and_certified() {
        for seed in 0..10 {
            let scn = scenario(seed, 12, 4);
            let (problem, _) = cfe_setup(&scn, 1.0, 0.5);
            let sol = solve_gp(&problem, 1e-8).unwrap();
            let full = problem.sum_log2_rate(&vec![1.0; 4]);
            assert!(sol.sum_log2_rate >= full - 1e-9, "seed {seed}");
            assert!(sol.constraint_violation <= 1e-8, "seed {seed}");
            assert!(sol.kkt_residual <= 1e-8, "seed {seed}");
            for (k, c) in sol.certificate.iter().enumerate() {
                assert!(*c < 1e-6, "seed {seed} ue {k}: certificate {c}");
            }
            for &e in &sol.eta {
                assert!((0.0..=1.0 + 1e-12).contains(&e));
            }
        }
    }

    #[test]
    fn lower_bound_gp_rejects_heavy_csi_noise() {
        // force enormous CSI quantization so the LB cross terms dominate
        let mut cfg = SystemConfig::with_size(6, 3);
        cfg.xi_t = 0.6;
        cfg.xi_r = 0.6;
        cfg.rho_p = 10.0;
        let scn = Scenario::generate(cfg, 1);
        let planner = Planner::new(&scn.beta, &scn.config);
        let eta = vec![1.0; 3];
        let plan = planner.split_plan(
            &vec![0.02; 6],
            Strategy::EcfLb,
            0.9,
            ShareMode::Uniform,
            &eta,
        );
        let stats = apply_csi_quantization(planner.ecf_stats(), &plan.q_csi).unwrap();
        match build_gp_ecf(&scn.beta, &stats, &plan, EcfBound::Lower, &scn.config) {
            Err(Error::GpInfeasible(_)) => {}
            Ok(problem) => {
                // if it stayed posynomial the solve must still succeed
                solve_gp(&problem, 1e-8).unwrap();
            }
            Err(e) => panic!("unexpected error {e}"),
        }
    }
}
