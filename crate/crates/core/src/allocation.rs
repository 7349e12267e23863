//! Fronthaul capacity allocation.
//!
//! Each access point owns `C_m` bits/s/Hz of fronthaul. CFE and ECF split
//! it into a CSI part `C_p,m` and a data part `C_d,m`; ECF further divides
//! the CSI part across users, EMCF divides the whole budget across the
//! per-user matched-filter products. Two allocation policies exist for
//! every strategy:
//!
//! * **equal**: half the budget per side, uniform per-user shares;
//! * **proposed**: per-user shares proportional to what each user's
//!   forwarded quantity is worth (estimate variance for ECF, product
//!   second moment for EMCF), plus a one-dimensional search over the
//!   common CSI/data fraction that maximizes sum spectral efficiency.
//!
//! The high-SNR estimation-placement threshold and the single-user limit
//! comparison live here too, since both are statements about how the
//! capacity split drives the estimate quality of the two placements.

use log::warn;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::estimation::{apply_csi_quantization, cfe_stats, ecf_stats, EstimationStats};
use crate::netmodel::LargeScaleMap;
use crate::quant::{
    distortion_additive, distortion_subtractive, QuantNoise, TestChannelSpec,
};
use crate::rates;

/// Forwarding strategy selector. The two ECF variants share a plan shape
/// and differ only in which bound evaluates it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Cfe,
    EcfLb,
    EcfUb,
    Emcf,
}

impl Strategy {
    pub fn label(&self) -> &'static str {
        match self {
            Strategy::Cfe => "cfe",
            Strategy::EcfLb => "ecf-lb",
            Strategy::EcfUb => "ecf-ub",
            Strategy::Emcf => "emcf",
        }
    }

    pub fn is_ecf(&self) -> bool {
        matches!(self, Strategy::EcfLb | Strategy::EcfUb)
    }
}

/// How a capacity budget is divided among users.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShareMode {
    Uniform,
    Proportional,
}

/// A complete capacity plan: the CSI/data split and every quantization
/// noise variance it implies.
#[derive(Debug, Clone)]
pub struct FronthaulPlan {
    pub strategy: Strategy,
    /// Per-access-point total capacity `C_m`.
    pub c_total: Vec<f64>,
    /// CSI part of the split (zero for EMCF).
    pub c_pilot: Vec<f64>,
    /// Data part of the split (the whole budget for EMCF).
    pub c_data: Vec<f64>,
    /// CFE: per-entry pilot quantization noise, one scalar per access point.
    pub q_pilot_ap: Vec<QuantNoise>,
    /// ECF: per-(ap, ue) CSI capacity shares, summing to `c_pilot[m]`.
    pub csi_shares: Vec<Vec<f64>>,
    /// ECF: per-(ap, ue) CSI quantization noise.
    pub q_csi: Vec<Vec<f64>>,
    /// EMCF: per-(ap, ue) product capacities, summing to `c_total[m]`.
    pub product_shares: Vec<Vec<f64>>,
    /// EMCF: per-(ap, ue) product quantization noise.
    pub q_product: Vec<Vec<QuantNoise>>,
    /// CFE/ECF: data quantization noise per access point.
    pub q_data: Vec<QuantNoise>,
}

impl FronthaulPlan {
    fn empty(strategy: Strategy, m: usize, k: usize) -> Self {
        FronthaulPlan {
            strategy,
            c_total: vec![0.0; m],
            c_pilot: vec![0.0; m],
            c_data: vec![0.0; m],
            q_pilot_ap: vec![QuantNoise::Variance(0.0); m],
            csi_shares: vec![vec![0.0; k]; m],
            q_csi: vec![vec![0.0; k]; m],
            product_shares: vec![vec![0.0; k]; m],
            q_product: vec![vec![QuantNoise::Variance(0.0); k]; m],
            q_data: vec![QuantNoise::Variance(0.0); m],
        }
    }

    /// Largest violation of the capacity-conservation identities:
    /// `C_p + C_d = C`, ECF shares summing to `C_p`, EMCF shares summing
    /// to `C`.
    pub fn max_conservation_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for m in 0..self.c_total.len() {
            let c = self.c_total[m];
            if c.is_finite() {
                worst = worst.max((self.c_pilot[m] + self.c_data[m] - c).abs());
            }
            match self.strategy {
                Strategy::EcfLb | Strategy::EcfUb => {
                    let s: f64 = self.csi_shares[m].iter().sum();
                    worst = worst.max((s - self.c_pilot[m]).abs());
                }
                Strategy::Emcf => {
                    let s: f64 = self.product_shares[m].iter().sum();
                    if c.is_finite() {
                        worst = worst.max((s - c).abs());
                    }
                }
                Strategy::Cfe => {}
            }
        }
        worst
    }
}

/// Data quantization noise of one access point under power vector `eta`:
/// the additive test channel applied to the received data power
/// `rho_u sum_k eta_k beta_mk + N`.
pub fn data_quant_noise(
    beta_row: &[f64],
    eta: &[f64],
    c_data: f64,
    cfg: &SystemConfig,
) -> QuantNoise {
    let power = cfg.rho_u
        * beta_row.iter().zip(eta).map(|(&b, &e)| e * b).sum::<f64>()
        + cfg.n;
    distortion_additive(TestChannelSpec {
        signal_power: power,
        capacity: c_data,
        samples_fraction: cfg.data_fraction(),
    })
}

/// Water-filling CSI shares for one access point: each user receives
/// capacity in proportion to its estimate variance, so
/// `log2(gamma/Q) = (gamma / sum gamma) * T * C_p` holds exactly.
pub fn ecf_waterfill(c_pilot: f64, gamma_row: &[f64], t: usize) -> (Vec<f64>, Vec<f64>) {
    let total: f64 = gamma_row.iter().sum();
    let shares: Vec<f64> = if total > 0.0 {
        gamma_row.iter().map(|&g| g / total * c_pilot).collect()
    } else {
        vec![0.0; gamma_row.len()]
    };
    let q = gamma_row
        .iter()
        .zip(&shares)
        .map(|(&g, &s)| distortion_subtractive(g, s, t))
        .collect();
    (shares, q)
}

/// EMCF product allocation for one access point: the per-user log budget
/// `log2(1 + Psi_k/Q_k)` is proportional to `Psi_k`, which makes the
/// per-user capacities sum to `C_m` by construction.
pub fn emcf_allocate(
    c_m: f64,
    psi_row: &[f64],
    cfg: &SystemConfig,
) -> (Vec<f64>, Vec<QuantNoise>) {
    let total: f64 = psi_row.iter().sum();
    let mut capacities = Vec::with_capacity(psi_row.len());
    let mut q = Vec::with_capacity(psi_row.len());
    for &psi in psi_row {
        if psi <= 0.0 || total <= 0.0 {
            capacities.push(0.0);
            q.push(QuantNoise::Variance(0.0));
            continue;
        }
        let cap = psi / total * c_m;
        capacities.push(cap);
        q.push(distortion_additive(TestChannelSpec {
            signal_power: psi,
            capacity: cap,
            samples_fraction: cfg.data_fraction(),
        }));
    }
    (capacities, q)
}

/// Trace of one CSI/data split search.
#[derive(Debug, Clone)]
pub struct SplitSearchLog {
    /// Winning `C_p/C` fraction, common across access points.
    pub best_fraction: f64,
    /// `(fraction, SSE)` pairs from the coarse grid.
    pub grid: Vec<(f64, f64)>,
    /// Whether the coarse grid looked unimodal around the maximum.
    pub unimodal: bool,
}

/// Plan builder for one scenario. ECF estimation statistics are computed
/// once and reused across every candidate split.
pub struct Planner<'a> {
    beta: &'a LargeScaleMap,
    cfg: &'a SystemConfig,
    ecf: EstimationStats,
}

const SPLIT_GRID_POINTS: usize = 41;
const SPLIT_TOLERANCE: f64 = 1e-4;

impl<'a> Planner<'a> {
    pub fn new(beta: &'a LargeScaleMap, cfg: &'a SystemConfig) -> Self {
        Planner { beta, cfg, ecf: ecf_stats(beta, cfg) }
    }

    pub fn ecf_stats(&self) -> &EstimationStats {
        &self.ecf
    }

    /// Baseline plan: half the budget per side, uniform per-user shares.
    pub fn equal_split(&self, c: &[f64], strategy: Strategy, eta: &[f64]) -> FronthaulPlan {
        match strategy {
            Strategy::Emcf => self.emcf_plan(c, ShareMode::Uniform, eta),
            _ => self.split_plan(c, strategy, 0.5, ShareMode::Uniform, eta),
        }
    }

    /// Proposed plan: proportional shares, and for the split strategies a
    /// line search over the common CSI fraction.
    pub fn proposed(
        &self,
        c: &[f64],
        strategy: Strategy,
        eta: &[f64],
    ) -> (FronthaulPlan, Option<SplitSearchLog>) {
        match strategy {
            Strategy::Emcf => (self.emcf_plan(c, ShareMode::Proportional, eta), None),
            _ => {
                let (plan, log) = self.split_search(c, strategy, eta);
                (plan, Some(log))
            }
        }
    }

    /// Build a CFE/ECF plan with CSI fraction `frac` of every budget.
    pub fn split_plan(
        &self,
        c: &[f64],
        strategy: Strategy,
        frac: f64,
        mode: ShareMode,
        eta: &[f64],
    ) -> FronthaulPlan {
        debug_assert!((0.0..=1.0).contains(&frac));
        let cfg = self.cfg;
        let k = cfg.k;
        let mut plan = FronthaulPlan::empty(strategy, c.len(), k);
        plan.c_total = c.to_vec();
        for (m, &c_m) in c.iter().enumerate() {
            let c_p = frac * c_m;
            let c_d = c_m - c_p;
            plan.c_pilot[m] = c_p;
            plan.c_data[m] = c_d;

            plan.q_data[m] = data_quant_noise(&self.beta.beta[m], eta, c_d, cfg);

            match strategy {
                Strategy::Cfe => {
                    let pilot_power = cfg.rho_p * self.beta.row_sum(m) + cfg.n;
                    plan.q_pilot_ap[m] = distortion_additive(TestChannelSpec {
                        signal_power: pilot_power,
                        capacity: c_p,
                        samples_fraction: cfg.pilot_fraction(),
                    });
                }
                Strategy::EcfLb | Strategy::EcfUb => {
                    let gamma_row = &self.ecf.gamma[m];
                    let (shares, q) = match mode {
                        ShareMode::Proportional => ecf_waterfill(c_p, gamma_row, cfg.t),
                        ShareMode::Uniform => {
                            let shares = vec![c_p / k as f64; k];
                            let q = gamma_row
                                .iter()
                                .zip(&shares)
                                .map(|(&g, &s)| distortion_subtractive(g, s, cfg.t))
                                .collect();
                            (shares, q)
                        }
                    };
                    plan.csi_shares[m] = shares;
                    plan.q_csi[m] = q;
                }
                Strategy::Emcf => unreachable!("EMCF has no CSI/data split"),
            }
        }
        plan
    }

    /// Build an EMCF plan (the whole budget goes to the products).
    pub fn emcf_plan(&self, c: &[f64], mode: ShareMode, eta: &[f64]) -> FronthaulPlan {
        let cfg = self.cfg;
        let psi = rates::emcf_psi_diag(self.beta, &self.ecf, eta, cfg);
        let mut plan = FronthaulPlan::empty(Strategy::Emcf, c.len(), cfg.k);
        plan.c_total = c.to_vec();
        plan.c_data = c.to_vec();
        for (m, &c_m) in c.iter().enumerate() {
            let (caps, q) = match mode {
                ShareMode::Proportional => emcf_allocate(c_m, &psi[m], cfg),
                ShareMode::Uniform => {
                    let cap = c_m / cfg.k as f64;
                    let q = psi[m]
                        .iter()
                        .map(|&p| {
                            if p <= 0.0 {
                                QuantNoise::Variance(0.0)
                            } else {
                                distortion_additive(TestChannelSpec {
                                    signal_power: p,
                                    capacity: cap,
                                    samples_fraction: cfg.data_fraction(),
                                })
                            }
                        })
                        .collect();
                    (vec![cap; cfg.k], q)
                }
            };
            plan.product_shares[m] = caps;
            plan.q_product[m] = q;
        }
        plan
    }

    /// Sum spectral efficiency of a plan under its own strategy.
    pub fn sse_of_plan(&self, plan: &FronthaulPlan, eta: &[f64]) -> f64 {
        let cfg = self.cfg;
        let breakdowns = match plan.strategy {
            Strategy::Cfe => {
                let stats = cfe_stats(self.beta, &plan.q_pilot_ap, cfg);
                rates::sinr_cfe(self.beta, &stats, plan, eta, cfg)
            }
            Strategy::EcfLb | Strategy::EcfUb => {
                let stats = match apply_csi_quantization(&self.ecf, &plan.q_csi) {
                    Ok(s) => s,
                    Err(_) => return 0.0,
                };
                if plan.strategy == Strategy::EcfLb {
                    rates::sinr_ecf_lb(self.beta, &stats, plan, eta, cfg)
                } else {
                    rates::sinr_ecf_ub(self.beta, &stats, plan, eta, cfg)
                }
            }
            Strategy::Emcf => match rates::rate_emcf(self.beta, &self.ecf, plan, eta, cfg) {
                Ok(b) => b,
                Err(_) => return 0.0,
            },
        };
        rates::sum_se(&breakdowns)
    }

    /// One-dimensional search over the common CSI fraction: a 41-point
    /// grid followed by golden-section refinement around the best point.
    /// Deterministic; ECF uses water-filled per-user shares.
    pub fn split_search(
        &self,
        c: &[f64],
        strategy: Strategy,
        eta: &[f64],
    ) -> (FronthaulPlan, SplitSearchLog) {
        assert!(strategy != Strategy::Emcf, "EMCF has no split to search");
        let eval = |frac: f64| {
            let plan = self.split_plan(c, strategy, frac, ShareMode::Proportional, eta);
            self.sse_of_plan(&plan, eta)
        };

        let mut grid = Vec::with_capacity(SPLIT_GRID_POINTS);
        let mut best = (0.0, f64::NEG_INFINITY);
        for i in 0..SPLIT_GRID_POINTS {
            let frac = i as f64 / (SPLIT_GRID_POINTS - 1) as f64;
            let sse = eval(frac);
            if sse > best.1 {
                best = (frac, sse);
            }
            grid.push((frac, sse));
        }

        let unimodal = is_unimodal(&grid);
        if !unimodal {
            warn!(
                "split search grid for {} is not unimodal; keeping the global grid maximum",
                strategy.label()
            );
        }

        let step = 1.0 / (SPLIT_GRID_POINTS - 1) as f64;
        let (mut lo, mut hi) = ((best.0 - step).max(0.0), (best.0 + step).min(1.0));
        // golden-section refinement
        let ratio = (5f64.sqrt() - 1.0) / 2.0;
        let mut x1 = hi - ratio * (hi - lo);
        let mut x2 = lo + ratio * (hi - lo);
        let mut f1 = eval(x1);
        let mut f2 = eval(x2);
        while hi - lo > SPLIT_TOLERANCE {
            if f1 < f2 {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + ratio * (hi - lo);
                f2 = eval(x2);
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - ratio * (hi - lo);
                f1 = eval(x1);
            }
        }
        let mut candidates = vec![(best.0, best.1), (x1, f1), (x2, f2)];
        candidates.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        let best_fraction = candidates[0].0;
        let plan = self.split_plan(c, strategy, best_fraction, ShareMode::Proportional, eta);
        (plan, SplitSearchLog { best_fraction, grid, unimodal })
    }
}

/// A grid is unimodal if it rises to its maximum and falls afterwards
/// (within a small tolerance relative to the peak).
fn is_unimodal(grid: &[(f64, f64)]) -> bool {
    let peak = grid.iter().map(|&(_, v)| v).fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-9 * peak.abs().max(1e-12);
    let argmax = grid
        .iter()
        .enumerate()
        .max_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(0);
    let rising = grid.windows(2).take(argmax).all(|w| w[1].1 >= w[0].1 - tol);
    let falling = grid.windows(2).skip(argmax).all(|w| w[1].1 <= w[0].1 + tol);
    rising && falling
}

// ---------------------------------------------------------------------------
// High-SNR estimation-placement analysis
// ---------------------------------------------------------------------------

/// High-SNR estimate variance at the central unit (CFE placement) as a
/// function of the CSI capacity `c_pilot`.
pub fn gamma_cfe_high_snr(beta_row: &[f64], ue: usize, c_pilot: f64, cfg: &SystemConfig) -> f64 {
    let xi = cfg.xi_product();
    let tau = cfg.tau as f64;
    let b = beta_row[ue];
    let sum: f64 = beta_row.iter().sum();
    let eps = 1.0 / ((cfg.t as f64 / cfg.k as f64 * c_pilot).exp2() - 1.0);
    xi * tau * b * b / (xi * tau * b + ((1.0 - xi) + eps) * sum)
}

/// High-SNR usable estimate variance at the access point (ECF placement)
/// after the subtractive CSI channel, as a function of `c_pilot`.
pub fn gamma_ecf_high_snr(beta_row: &[f64], ue: usize, c_pilot: f64, cfg: &SystemConfig) -> f64 {
    let inf = gamma_high_snr(beta_row, cfg);
    let total: f64 = inf.iter().sum();
    let theta2 = inf[ue] / total;
    inf[ue] * (1.0 - (-theta2 * cfg.t as f64 * c_pilot).exp2())
}

/// Saturated (infinite pilot power) estimate variances for one access point.
pub fn gamma_high_snr(beta_row: &[f64], cfg: &SystemConfig) -> Vec<f64> {
    let xi = cfg.xi_product();
    let tau = cfg.tau as f64;
    let sum: f64 = beta_row.iter().sum();
    beta_row
        .iter()
        .map(|&b| {
            let theta1 = xi * tau * b + (1.0 - xi) * sum;
            if theta1 > 0.0 { xi * tau * b * b / theta1 } else { 0.0 }
        })
        .collect()
}

/// Threshold analysis for where estimating at the central unit beats
/// estimating at the access point, for one (ap, ue) pair.
#[derive(Debug, Clone)]
pub struct Prop1Report {
    pub ue: usize,
    pub theta1: f64,
    pub theta2: f64,
    /// Saturated estimate variances for every user at this access point.
    pub gamma_inf: Vec<f64>,
    /// Closed-form capacity threshold; `None` when the approximation's
    /// side conditions fail.
    pub c_threshold: Option<f64>,
    /// Exact crossover of the two high-SNR estimate-variance curves.
    pub crossover: Option<f64>,
    /// `1/(K theta2)`; the side condition holds when this exceeds 1.
    pub side_condition_margin: f64,
    /// `theta1^{-1} sum(beta)`, the argument of the threshold's log.
    pub log_argument: f64,
}

/// Evaluate the closed-form threshold and bracket the exact crossover of
/// the two placements' high-SNR estimate variances by bisection.
pub fn prop1_threshold(beta_row: &[f64], ue: usize, cfg: &SystemConfig) -> Prop1Report {
    let xi = cfg.xi_product();
    let tau = cfg.tau as f64;
    let t = cfg.t as f64;
    let kk = cfg.k as f64;
    let sum: f64 = beta_row.iter().sum();
    let theta1 = xi * tau * beta_row[ue] + (1.0 - xi) * sum;
    let gamma_inf = gamma_high_snr(beta_row, cfg);
    let total: f64 = gamma_inf.iter().sum();
    let theta2 = if total > 0.0 { gamma_inf[ue] / total } else { 0.0 };
    let log_argument = if theta1 > 0.0 { sum / theta1 } else { f64::INFINITY };
    let side_condition_margin = if theta2 > 0.0 { 1.0 / (kk * theta2) } else { f64::INFINITY };

    let c_threshold = if side_condition_margin > 1.0 && log_argument > 1.0 {
        Some(log_argument.log2() / (t / kk - theta2 * t))
    } else {
        None
    };

    // Exact crossover of gamma_cfe_high_snr == gamma_ecf_high_snr. The
    // equality rearranges to (2^{aC} - 1) = logarg * (2^{bC} - 1) with
    // a = T/K and b = theta2 T, which is monotone in C for a > b and can
    // be bisected on a log scale without catastrophic cancellation (the
    // raw gamma curves agree to ~15 digits near saturation). At C -> 0
    // the ratio tends to margin, so a crossover exists exactly when
    // margin < logarg.
    let a = t / kk;
    let b = theta2 * t;
    // The gap function is monotone (rising for a > b, falling for a < b)
    // and starts at ln(margin/logarg), so a crossing exists exactly when
    // the start sign and the asymptotic sign differ.
    let rises = a > b;
    let exists = log_argument.is_finite()
        && log_argument > 0.0
        && ((rises && side_condition_margin < log_argument)
            || (!rises && side_condition_margin > log_argument));
    let crossover = if exists {
        // ln(2^{xC} - 1) evaluated stably
        let ln_exp2_m1 = |x: f64| x * std::f64::consts::LN_2 + (-(-x).exp2()).ln_1p();
        let gap = |c: f64| ln_exp2_m1(a * c) - ln_exp2_m1(b * c) - log_argument.ln();
        let crossed = |c: f64| if rises { gap(c) >= 0.0 } else { gap(c) <= 0.0 };
        let mut lo = 1e-9;
        let mut hi = 1e-6;
        while !crossed(hi) && hi < 1e9 {
            hi *= 2.0;
        }
        if !crossed(hi) {
            None
        } else {
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if crossed(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Some(0.5 * (lo + hi))
        }
    } else {
        None
    };

    Prop1Report {
        ue,
        theta1,
        theta2,
        gamma_inf,
        c_threshold,
        crossover,
        side_condition_margin,
        log_argument,
    }
}

// ---------------------------------------------------------------------------
// Single-user high-SNR limits
// ---------------------------------------------------------------------------

/// Single-user high-SNR SINR limits of the two split strategies.
#[derive(Debug, Clone)]
pub struct Prop2Report {
    /// Saturated usable estimate variance per access point (identical for
    /// the two placements when K = 1).
    pub upsilon: Vec<f64>,
    pub x0: f64,
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
    pub a_cfe: f64,
    pub b_cfe: f64,
    pub a_ecf: f64,
    pub b_ecf: f64,
    pub sinr_cfe_inf: f64,
    pub sinr_ecf_inf: f64,
}

/// Evaluate both high-SNR SINR limits for a single-user network with the
/// given per-access-point CSI and data capacities.
pub fn prop2_limits(
    beta_single: &[f64],
    c_pilot: &[f64],
    c_data: &[f64],
    cfg: &SystemConfig,
) -> Result<Prop2Report> {
    if cfg.k != 1 {
        return Err(Error::NotSingleUser { k: cfg.k });
    }
    let (xr, xt) = (cfg.xi_r, cfg.xi_t);
    if xr <= 0.0 || xt <= 0.0 {
        return Err(Error::InvalidConfig(
            "single-user limits require strictly positive hardware qualities".into(),
        ));
    }
    let xi = xr * xt;
    let t = cfg.t as f64;
    let upsilon: Vec<f64> = beta_single
        .iter()
        .zip(c_pilot)
        .map(|(&b, &cp)| xi * (1.0 - (-t * cp).exp2()) * b)
        .collect();

    let x0 = upsilon.iter().sum::<f64>().powi(2);
    let x1: f64 = upsilon.iter().zip(beta_single).map(|(&u, &b)| u * b).sum();
    let x2: f64 = upsilon.iter().map(|&u| u * u).sum();
    let x3: f64 = upsilon
        .iter()
        .zip(beta_single.iter().zip(c_data))
        .map(|(&u, (&b, &cd))| u * b / ((t / (t - 1.0) * cd).exp2() - 1.0))
        .sum();

    let a_cfe = xr * ((1.0 - xr) + (1.0 - xr) / xr);
    let b_cfe = (1.0 - xr) * (1.0 + 1.0 / xi + (1.0 - xr) / xt);
    let a_ecf = xr * (1.0 - xr);
    let b_ecf = 1.0 - xr;

    let sinr_cfe_inf = xi * x0 / (x1 + a_cfe * x0 + b_cfe * x2 + x3);
    let sinr_ecf_inf = xi * x0 / (x1 + a_ecf * x0 + b_ecf * x2 + x3);

    Ok(Prop2Report {
        upsilon,
        x0,
        x1,
        x2,
        x3,
        a_cfe,
        b_cfe,
        a_ecf,
        b_ecf,
        sinr_cfe_inf,
        sinr_ecf_inf,
    })
}
