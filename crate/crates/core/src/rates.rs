//! Closed-form per-user SINR and achievable rate for the three
//! forwarding strategies.
//!
//! All MRC-based expressions (CFE exact, ECF lower bound) come out of one
//! term-assembly layer: the effective received symbol splits into desired
//! signal (DS), beamforming uncertainty (BU), inter-user interference
//! (IUI), transmit- and receive-side hardware-impairment interference
//! (THI, RHI), receiver noise (RN) and fronthaul compression noise (QN).
//! These pieces are pairwise uncorrelated, so the worst-case-Gaussian
//! SINR is `|DS|^2` over the sum of the other variances, and the
//! achievable rate is `(T - tau)/T * log2(1 + SINR)`.
//!
//! The per-term variances are expressed through three scenario sums
//! (estimate-weighted interference `omega`, the coherent combining square
//! `g_sq` and the squared-coefficient sum `lam2`); with zero CSI
//! quantization the ECF lower-bound terms collapse symbol-for-symbol to
//! the CFE ones, which is what lets both strategies share the assembly.
//! The ECF upper bound drops cross-correlation terms instead and is kept
//! separate. EMCF works on a different decomposition entirely: the
//! quantized matched-filter products are combined by an MMSE weight
//! vector `u = K_z^{-1} b`, obtained from a positive-definite solve, and
//! its SINR is the quadratic form `b^T K_z^{-1} b`.

use nalgebra::{DMatrix, DVector};

use crate::allocation::FronthaulPlan;
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::estimation::EstimationStats;
use crate::netmodel::LargeScaleMap;

/// Denominator floor for the ECF lower bound; reaching it marks the
/// instance invalid rather than reporting a negative SINR.
const LB_DENOMINATOR_FLOOR: f64 = 1e-30;

/// Relative residual allowed on the EMCF combiner solve.
const SOLVE_TOLERANCE: f64 = 1e-10;

/// Per-user SINR with every variance term exposed.
///
/// For the MRC strategies the fields are the individual term variances;
/// for bound evaluators (ECF) some fields carry grouped bound terms, and
/// for EMCF only `ds`, `denominator`, `sinr` and `rate` are meaningful.
#[derive(Debug, Clone)]
pub struct SinrBreakdown {
    pub ue: usize,
    /// Desired-signal power `|DS|^2`.
    pub ds: f64,
    /// Beamforming-uncertainty variance (self terms for bounds).
    pub bu: f64,
    /// Inter-user interference, one entry per interfering user `k' != k`.
    pub iui: Vec<f64>,
    /// Transmit-hardware interference, one entry per user (including `k`).
    pub thi: Vec<f64>,
    /// Receive-hardware interference.
    pub rhi: f64,
    /// Receiver thermal noise.
    pub rn: f64,
    /// Fronthaul quantization noise.
    pub qn: f64,
    /// Assembled denominator after any guard.
    pub denominator: f64,
    pub sinr: f64,
    /// Achievable rate `[bits/s/Hz]`.
    pub rate: f64,
    /// False when the lower-bound denominator guard clamped.
    pub lb_valid: bool,
}

/// `(T - tau)/T * log2(1 + sinr)`.
pub fn rate_from_sinr(sinr: f64, config: &SystemConfig) -> f64 {
    config.data_fraction() * (1.0 + sinr).log2()
}

/// Sum spectral efficiency of a strategy outcome `[bits/s/Hz]`.
pub fn sum_se(breakdowns: &[SinrBreakdown]) -> f64 {
    breakdowns.iter().map(|b| b.rate).sum()
}

/// Energy efficiency `[bits/J]`: `B * SSE / P_total`, where the total power
/// is the users' transmit power, the fixed access-point draw, and a
/// fronthaul term linear in the carried capacity.
pub fn energy_efficiency(
    sse: f64,
    plan: &FronthaulPlan,
    eta: &[f64],
    config: &SystemConfig,
) -> f64 {
    let p_ue: f64 = eta.iter().map(|&e| e * config.rho_u).sum();
    let p_ap = config.m as f64 * config.p_ap_w;
    let c_sum: f64 = plan.c_total.iter().sum();
    let p_bh = config.bandwidth_hz * c_sum * config.p_bh_w_per_gbps / 1e9;
    let p_total = p_ue + p_ap + p_bh;
    config.bandwidth_hz * sse / p_total
}

// ---------------------------------------------------------------------------
// Shared MRC term assembly
// ---------------------------------------------------------------------------

struct TermCtx<'a> {
    cfg: &'a SystemConfig,
    eta: &'a [f64],
    beta: &'a [Vec<f64>],
    lambda: &'a [Vec<f64>],
    gamma: &'a [Vec<f64>],
    gamma_prime: &'a [Vec<f64>],
    q_csi: &'a [Vec<f64>],
    /// Data-link liveness per access point; a dark link removes the
    /// access point from every sum.
    active: Vec<bool>,
    /// Data quantization noise per access point (zero where inactive).
    q_data: Vec<f64>,
}

impl<'a> TermCtx<'a> {
    fn new(
        beta: &'a LargeScaleMap,
        stats: &'a EstimationStats,
        plan: &'a FronthaulPlan,
        eta: &'a [f64],
        cfg: &'a SystemConfig,
    ) -> Self {
        let active: Vec<bool> = plan.q_data.iter().map(|q| !q.is_dark()).collect();
        let q_data = plan
            .q_data
            .iter()
            .map(|q| q.variance().unwrap_or(0.0))
            .collect();
        TermCtx {
            cfg,
            eta,
            beta: &beta.beta,
            lambda: &stats.lambda,
            gamma: &stats.gamma,
            gamma_prime: &stats.gamma_prime,
            q_csi: &stats.q_csi,
            active,
            q_data,
        }
    }

    fn aps(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.beta.len()).filter(move |&m| self.active[m])
    }

    fn gamma_prime_sum(&self, k: usize) -> f64 {
        self.aps().map(|m| self.gamma_prime[m][k]).sum()
    }

    /// `sum_m slot[m][k] * beta[m][kp]` with the CSI slot chosen by `primed`.
    fn omega(&self, k: usize, kp: usize, primed: bool) -> f64 {
        let slot = if primed { self.gamma_prime } else { self.gamma };
        self.aps().map(|m| slot[m][k] * self.beta[m][kp]).sum()
    }

    /// `(sum_m lambda[m][k] beta[m][kp])^2` — the coherent square behind
    /// the scaled combining terms.
    fn g_sq(&self, k: usize, kp: usize) -> f64 {
        let s: f64 = self.aps().map(|m| self.lambda[m][k] * self.beta[m][kp]).sum();
        s * s
    }

    /// `sum_m lambda[m][k]^2 beta[m][kp]^2`.
    fn lam2(&self, k: usize, kp: usize) -> f64 {
        self.aps()
            .map(|m| {
                let v = self.lambda[m][k] * self.beta[m][kp];
                v * v
            })
            .sum()
    }

    /// `sum_m q_csi[m][k] q_csi[m][kp]`.
    fn qq(&self, k: usize, kp: usize) -> f64 {
        self.aps().map(|m| self.q_csi[m][k] * self.q_csi[m][kp]).sum()
    }

    fn q_csi_sum(&self, k: usize) -> f64 {
        self.aps().map(|m| self.q_csi[m][k]).sum()
    }

    /// `sum_m (N + Q_d,m) slot[m][k]`.
    fn noise_plus_quant(&self, k: usize, primed: bool) -> f64 {
        let slot = if primed { self.gamma_prime } else { self.gamma };
        self.aps()
            .map(|m| (self.cfg.n + self.q_data[m]) * slot[m][k])
            .sum()
    }

    /// MRC term variances for user `k`.
    ///
    /// With `q_csi == 0` (CFE, or ECF before CSI quantization) the
    /// primed and unprimed slots coincide and every correction vanishes,
    /// so this single routine is exact for CFE and is the lower-bound
    /// term set for ECF.
    fn mrc_terms(&self, k: usize) -> SinrBreakdown {
        let cfg = self.cfg;
        let (xr, xt) = (cfg.xi_r, cfg.xi_t);
        let xi = xr * xt;
        let (rho, rp) = (cfg.rho_u, cfg.rho_p);
        let tau = cfg.tau as f64;
        let kk = self.eta.len();

        let gamma_prime_sum = self.gamma_prime_sum(k);
        let q_sum = self.q_csi_sum(k);

        let ds = rho * self.eta[k] * xi * gamma_prime_sum * gamma_prime_sum;

        // beamforming uncertainty: self terms plus the CSI cross term
        let bu = rho
            * self.eta[k]
            * (xi * self.omega(k, k, true)
                + xr * xr * xt * (1.0 - xt) * rp * self.g_sq(k, k)
                + xi * rp * (1.0 - xr) * self.lam2(k, k)
                + 2.0 * xi * q_sum * gamma_prime_sum);

        // The CSI-noise corrections apply only to the served user's own
        // products: for an interferer k' != k the quantization noise of
        // user k's estimate is uncorrelated with g_mk' under the
        // Gaussian test channel, so no cross term exists to subtract
        // (subtracting one would push the bound above the true SINR).
        let mut iui = Vec::with_capacity(kk.saturating_sub(1));
        let mut thi = Vec::with_capacity(kk);
        for kp in 0..kk {
            let g_sq = self.g_sq(k, kp);
            let lam2 = self.lam2(k, kp);
            let same = kp == k;
            let qq = if same { self.qq(k, k) } else { 0.0 };
            if !same {
                iui.push(
                    rho * self.eta[kp]
                        * (xi * self.omega(k, kp, true)
                            + xr * xr * xt * (1.0 - xt) * rp * g_sq
                            + xi * rp * (1.0 - xr) * lam2),
                );
            }
            let coherent = if same { xi * tau * rp * self.g_sq(k, k) } else { 0.0 };
            thi.push(
                rho * self.eta[kp]
                    * xr
                    * (1.0 - xt)
                    * (self.omega(k, kp, true)
                        + coherent
                        + xr * (1.0 - xt) * rp * g_sq
                        + rp * (1.0 - xr) * lam2
                        - qq),
            );
        }

        let mut rhi = 0.0;
        for kp in 0..kk {
            let lam2 = self.lam2(k, kp);
            let delta = if kp == k { 1.0 } else { 0.0 };
            let qq = if kp == k { self.qq(k, k) } else { 0.0 };
            rhi += rho
                * self.eta[kp]
                * (1.0 - xr)
                * (self.omega(k, kp, true)
                    + rp * xr * (tau * xt * delta + 1.0 - xt) * lam2
                    + rp * (1.0 - xr) * lam2
                    - rp * (1.0 - xr) * qq);
        }

        let rn = cfg.n * gamma_prime_sum;
        let qn = self.noise_plus_quant(k, true) - rn;

        SinrBreakdown {
            ue: k,
            ds,
            bu,
            iui,
            thi,
            rhi,
            rn,
            qn,
            denominator: 0.0,
            sinr: 0.0,
            rate: 0.0,
            lb_valid: true,
        }
    }
}

fn assemble(mut terms: SinrBreakdown, guard_lb: bool, cfg: &SystemConfig) -> SinrBreakdown {
    let mut denominator = terms.bu
        + terms.iui.iter().sum::<f64>()
        + terms.thi.iter().sum::<f64>()
        + terms.rhi
        + terms.rn
        + terms.qn;
    if denominator <= 0.0 {
        denominator = LB_DENOMINATOR_FLOOR;
        if guard_lb {
            // the subtracted CSI cross terms overwhelmed the bound; the
            // instance carries no information, so report zero rather than
            // an exploded ds/epsilon ratio
            terms.lb_valid = false;
        }
    }
    terms.denominator = denominator;
    terms.sinr = if terms.ds > 0.0 && terms.lb_valid { terms.ds / denominator } else { 0.0 };
    terms.rate = rate_from_sinr(terms.sinr, cfg);
    terms
}

/// Exact CFE SINR, assembled from the individual term variances.
pub fn sinr_cfe(
    beta: &LargeScaleMap,
    stats: &EstimationStats,
    plan: &FronthaulPlan,
    eta: &[f64],
    cfg: &SystemConfig,
) -> Vec<SinrBreakdown> {
    let ctx = TermCtx::new(beta, stats, plan, eta, cfg);
    (0..cfg.k).map(|k| assemble(ctx.mrc_terms(k), false, cfg)).collect()
}

/// ECF SINR lower bound. Requires stats that went through
/// [`crate::estimation::apply_csi_quantization`]. Instances where the
/// bound degenerates (denominator forced non-positive by the subtracted
/// CSI cross terms) are flagged via `lb_valid = false`.
pub fn sinr_ecf_lb(
    beta: &LargeScaleMap,
    stats: &EstimationStats,
    plan: &FronthaulPlan,
    eta: &[f64],
    cfg: &SystemConfig,
) -> Vec<SinrBreakdown> {
    let ctx = TermCtx::new(beta, stats, plan, eta, cfg);
    (0..cfg.k).map(|k| assemble(ctx.mrc_terms(k), true, cfg)).collect()
}

/// ECF SINR upper bound: interference lower-bounded by dropping the
/// non-negative cross terms, so every denominator piece uses the usable
/// estimate variance `gamma'` alone.
pub fn sinr_ecf_ub(
    beta: &LargeScaleMap,
    stats: &EstimationStats,
    plan: &FronthaulPlan,
    eta: &[f64],
    cfg: &SystemConfig,
) -> Vec<SinrBreakdown> {
    let ctx = TermCtx::new(beta, stats, plan, eta, cfg);
    let (xr, xt) = (cfg.xi_r, cfg.xi_t);
    let xi = xr * xt;
    let rho = cfg.rho_u;
    (0..cfg.k)
        .map(|k| {
            let gp_sum = ctx.gamma_prime_sum(k);
            let gp_sq: f64 = ctx.aps().map(|m| {
                let g = ctx.gamma_prime[m][k];
                g * g
            }).sum();
            let ds = rho * eta[k] * xi * gp_sum * gp_sum;
            // grouped bound terms: self pieces land in `bu`, per-user
            // interference in `iui`/`thi[k]`
            let bu = rho * eta[k] * (xr * (1.0 - xt) * gp_sum * gp_sum + (1.0 - xr) * gp_sq);
            let mut iui = Vec::with_capacity(cfg.k - 1);
            let mut thi = vec![0.0; cfg.k];
            for kp in 0..cfg.k {
                let v = rho * eta[kp] * ctx.omega(k, kp, true);
                if kp == k {
                    thi[k] = v;
                } else {
                    iui.push(v);
                }
            }
            let rn = cfg.n * gp_sum;
            let qn = ctx.noise_plus_quant(k, true) - rn;
            let terms = SinrBreakdown {
                ue: k,
                ds,
                bu,
                iui,
                thi,
                rhi: 0.0,
                rn,
                qn,
                denominator: 0.0,
                sinr: 0.0,
                rate: 0.0,
                lb_valid: true,
            };
            assemble(terms, false, cfg)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// EMCF
// ---------------------------------------------------------------------------

/// Second-moment budget of each quantized matched-filter product,
/// `Psi_m[k,k]`, used by the EMCF capacity allocation.
///
/// Written with the LMMSE coefficients pulled out so the hardware-quality
/// prefactors are explicit (and safe at `xi -> 0`): the five summands are
/// the channel-weighted user powers, the coherent transmit-distortion
/// square, the per-user distortion sum, the self term and thermal noise.
pub fn emcf_psi_diag(
    beta: &LargeScaleMap,
    stats: &EstimationStats,
    eta: &[f64],
    cfg: &SystemConfig,
) -> Vec<Vec<f64>> {
    let (xr, xt) = (cfg.xi_r, cfg.xi_t);
    let xi = xr * xt;
    let (rho, rp) = (cfg.rho_u, cfg.rho_p);
    (0..cfg.m)
        .map(|m| {
            (0..cfg.k)
                .map(|k| {
                    let gamma = stats.gamma[m][k];
                    let lambda = stats.lambda[m][k];
                    let mut weighted = 0.0; // sum eta' beta' gamma
                    let mut coherent = 0.0; // sum sqrt(eta') lambda beta'
                    let mut squared = 0.0; // sum eta' lambda^2 beta'^2
                    for kp in 0..cfg.k {
                        let b = beta.beta[m][kp];
                        weighted += eta[kp] * b * gamma;
                        coherent += eta[kp].sqrt() * lambda * b;
                        squared += eta[kp] * lambda * lambda * b * b;
                    }
                    rho * (weighted
                        + xr * (1.0 - xt) * rp * coherent * coherent
                        + (1.0 + xr - 2.0 * xi) * rp * squared
                        + eta[k] * gamma * gamma)
                        + cfg.n * gamma
                })
                .collect()
        })
        .collect()
}

/// EMCF noise covariance entry `K_z[m][n]` for user `k` (analytic form).
pub fn emcf_kz_entry(
    m: usize,
    n: usize,
    k: usize,
    beta: &LargeScaleMap,
    stats: &EstimationStats,
    q_mk: f64,
    eta: &[f64],
    cfg: &SystemConfig,
) -> f64 {
    let (xr, xt) = (cfg.xi_r, cfg.xi_t);
    let xi = xr * xt;
    let (rho, rp) = (cfg.rho_u, cfg.rho_p);
    if m == n {
        let gamma = stats.gamma[m][k];
        let lambda = stats.lambda[m][k];
        let mut acc = 0.0;
        for kp in 0..cfg.k {
            let b = beta.beta[m][kp];
            let lb = lambda * b;
            acc += eta[kp] * (gamma * b + (1.0 - xi) * rp * lb * lb);
        }
        rho * (acc + eta[k] * (1.0 - xi) * gamma * gamma) + cfg.n * gamma + q_mk
    } else {
        let mut acc = 0.0;
        for kp in 0..cfg.k {
            acc += eta[kp]
                * (stats.lambda[m][k] * beta.beta[m][kp])
                * (stats.lambda[n][k] * beta.beta[n][kp]);
        }
        // two sources couple different access points: the users' pilot-phase
        // distortion inside both estimates, and the served user's data-phase
        // distortion, which multiplies the mean estimate product
        rho * xr * xr * (1.0 - xt) * rp * acc
            + rho * eta[k] * xr * (1.0 - xt) * stats.gamma[m][k] * stats.gamma[n][k]
    }
}

/// EMCF achievable rate with the MMSE combiner.
///
/// The SINR is `b^T K_z^{-1} b`, computed through a Cholesky solve whose
/// relative residual must stay below 1e-10; a covariance that fails to
/// factor indicates a formula or allocation bug and is a hard error.
/// Entries whose product link is dark are dropped from the combiner.
pub fn rate_emcf(
    beta: &LargeScaleMap,
    stats: &EstimationStats,
    plan: &FronthaulPlan,
    eta: &[f64],
    cfg: &SystemConfig,
) -> Result<Vec<SinrBreakdown>> {
    let xi = cfg.xi_product();
    let rho = cfg.rho_u;
    let mut out = Vec::with_capacity(cfg.k);
    for k in 0..cfg.k {
        let live: Vec<usize> = (0..cfg.m)
            .filter(|&m| !plan.q_product[m][k].is_dark())
            .collect();
        let b_vec: Vec<f64> = live
            .iter()
            .map(|&m| (rho * eta[k] * xi).sqrt() * stats.gamma[m][k])
            .collect();
        let signal: f64 = b_vec.iter().map(|v| v * v).sum();

        let sinr = if live.is_empty() || signal == 0.0 {
            0.0
        } else {
            let a = live.len();
            let mut kz = DMatrix::<f64>::zeros(a, a);
            for (i, &m) in live.iter().enumerate() {
                for (j, &n) in live.iter().enumerate() {
                    let q = if i == j {
                        plan.q_product[m][k].variance().unwrap_or(0.0)
                    } else {
                        0.0
                    };
                    kz[(i, j)] = emcf_kz_entry(m, n, k, beta, stats, q, eta, cfg);
                }
            }
            let b = DVector::from_vec(b_vec.clone());
            let chol = kz
                .clone()
                .cholesky()
                .ok_or(Error::NotPositiveDefinite { ue: k })?;
            let u = chol.solve(&b);
            let residual = (&kz * &u - &b).norm() / b.norm();
            if residual > SOLVE_TOLERANCE {
                return Err(Error::SolveResidual { ue: k, residual, tol: SOLVE_TOLERANCE });
            }
            b.dot(&u)
        };

        let denominator = if sinr > 0.0 { signal / sinr } else { LB_DENOMINATOR_FLOOR };
        out.push(SinrBreakdown {
            ue: k,
            ds: signal,
            bu: 0.0,
            iui: vec![0.0; cfg.k.saturating_sub(1)],
            thi: vec![0.0; cfg.k],
            rhi: 0.0,
            rn: 0.0,
            qn: 0.0,
            denominator,
            sinr,
            rate: rate_from_sinr(sinr, cfg),
            lb_valid: true,
        });
    }
    Ok(out)
}
