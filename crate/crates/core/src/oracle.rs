//! Monte-Carlo signal-level validator.
//!
//! Simulates pilot and data transmission end to end — channel draws,
//! hardware distortion, reception, fronthaul quantization, combining —
//! and estimates every variance term of the closed-form SINR
//! decompositions plus every covariance entry of the EMCF combiner. Each
//! closed-form quantity has exactly one empirical counterpart here; the
//! validation report enumerates the pairings and fails if any is missing
//! or out of tolerance.
//!
//! Draws run in fixed-size batches with per-batch random sub-streams and
//! are reduced in batch order, so results are identical for any thread
//! count. Standard errors of plain term variances use the usual sample
//! estimate; empirical SINRs (ratio statistics) take the larger of a
//! delta-method error from the per-draw denominator variance and the
//! spread of per-segment batch means.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::allocation::FronthaulPlan;
use crate::error::{Error, Result};
use crate::estimation::{lmmse_project, EstimationStats};
use crate::netmodel::Scenario;
use crate::quant::QuantNoise;
use crate::rates::{self, SinrBreakdown};
use crate::rng::{complex_normal, SeedSpace};
use crate::signal::{draw_channels, make_pilots, receive_data, receive_pilot, SignalRngs};

/// Number of draws per parallel batch. Fixed so that results do not
/// depend on how batches are scheduled.
const BATCH: usize = 2048;
/// Segments for batch-means standard errors of ratio statistics.
const SEGMENTS: usize = 16;

/// Monte-Carlo run parameters.
#[derive(Debug, Clone, Copy)]
pub struct McConfig {
    pub draws: usize,
    pub seed: u64,
}

impl McConfig {
    pub fn new(draws: usize, seed: u64) -> Self {
        McConfig { draws, seed }
    }
}

/// One validated quantity: a closed form and its empirical counterpart.
#[derive(Debug, Clone)]
pub struct McEstimate {
    /// Pairing label, e.g. `cfe/bu` or `emcf/kz-offdiag`.
    pub label: String,
    /// User index, when the quantity is per user.
    pub ue: Option<usize>,
    pub closed_form: f64,
    pub empirical: f64,
    pub std_error: f64,
    pub draws: usize,
    /// Relative deviation, when the closed form is nonzero.
    pub rel_deviation: Option<f64>,
    /// Relative tolerance actually applied (2% or 3 standard errors,
    /// whichever is larger, unless the row is a one-sided bound check).
    pub tolerance: f64,
    pub pass: bool,
}

fn two_sided_row(
    label: String,
    ue: Option<usize>,
    closed: f64,
    sum: f64,
    sum_sq: f64,
    n: usize,
) -> McEstimate {
    let mean = sum / n as f64;
    let var = (sum_sq / n as f64 - mean * mean).max(0.0);
    let se = (var / n as f64).sqrt();
    let rel = if closed != 0.0 { Some((mean - closed).abs() / closed.abs()) } else { None };
    // 2% relative or 3 standard errors, whichever is larger
    let tol_abs = (0.02 * closed.abs()).max(3.0 * se);
    let pass = (mean - closed).abs() <= tol_abs || closed == 0.0 && mean.abs() <= 3.0 * se;
    let tolerance = if closed != 0.0 { tol_abs / closed.abs() } else { f64::NAN };
    McEstimate {
        label,
        ue,
        closed_form: closed,
        empirical: mean,
        std_error: se,
        draws: n,
        rel_deviation: rel,
        tolerance,
        pass,
    }
}

fn batch_means(per_segment: &[f64]) -> (f64, f64) {
    let n = per_segment.len() as f64;
    let mean = per_segment.iter().sum::<f64>() / n;
    let var = per_segment.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Deterministic parallel map-reduce over draw batches: the batch index
/// seeds the sub-streams and the fold runs in index order.
fn run_batches<T, F>(mc: &McConfig, worker: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, usize) -> T + Sync,
{
    let batches: Vec<(u64, usize)> = (0..mc.draws.div_ceil(BATCH))
        .map(|b| (b as u64, BATCH.min(mc.draws - b * BATCH)))
        .collect();
    batches.into_par_iter().map(|(b, n)| worker(b, n)).collect()
}

// ---------------------------------------------------------------------------
// Term decomposition labels
// ---------------------------------------------------------------------------

/// The seven variance terms of the MRC decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermKind {
    Ds,
    Bu,
    Iui,
    Thi,
    Rhi,
    Rn,
    Qn,
}

pub const TERM_KINDS: [TermKind; 7] = [
    TermKind::Ds,
    TermKind::Bu,
    TermKind::Iui,
    TermKind::Thi,
    TermKind::Rhi,
    TermKind::Rn,
    TermKind::Qn,
];

impl TermKind {
    pub fn label(&self) -> &'static str {
        match self {
            TermKind::Ds => "ds",
            TermKind::Bu => "bu",
            TermKind::Iui => "iui",
            TermKind::Thi => "thi",
            TermKind::Rhi => "rhi",
            TermKind::Rn => "rn",
            TermKind::Qn => "qn",
        }
    }

    fn closed_form(&self, b: &SinrBreakdown) -> f64 {
        match self {
            TermKind::Ds => b.ds,
            TermKind::Bu => b.bu,
            TermKind::Iui => b.iui.iter().sum(),
            TermKind::Thi => b.thi.iter().sum(),
            TermKind::Rhi => b.rhi,
            TermKind::Rn => b.rn,
            TermKind::Qn => b.qn,
        }
    }
}

// ---------------------------------------------------------------------------
// Shared per-draw simulation state
// ---------------------------------------------------------------------------

struct DrawAccum {
    n: usize,
    /// per (ue, term): sum and sum of squares of |term|^2
    term_sum: Vec<f64>,
    term_sumsq: Vec<f64>,
    /// per ue: complex sum of the realized combining gain (DS pairing)
    gain_sum: Vec<Complex64>,
    /// per (m, k): sum |estimate|^2 and error-orthogonality cross moment
    est_pow: Vec<f64>,
    est_ortho: Vec<Complex64>,
    /// per (ue, pair): cross-moment sum and modulus-square sum of the
    /// pairwise term products
    pair_sum: Vec<Complex64>,
    pair_sumsq: Vec<f64>,
    /// worst relative reconstruction residual of the decomposition
    max_residual: f64,
    /// per ue: sum and sum of squares of the per-draw total
    /// interference-plus-noise power
    denom_sum: Vec<f64>,
    denom_sumsq: Vec<f64>,
}

const PAIRS: usize = 15; // unordered pairs of the six random terms

impl DrawAccum {
    fn new(m: usize, k: usize) -> Self {
        DrawAccum {
            n: 0,
            term_sum: vec![0.0; 7 * k],
            term_sumsq: vec![0.0; 7 * k],
            gain_sum: vec![Complex64::new(0.0, 0.0); k],
            est_pow: vec![0.0; m * k],
            est_ortho: vec![Complex64::new(0.0, 0.0); m * k],
            pair_sum: vec![Complex64::new(0.0, 0.0); PAIRS * k],
            pair_sumsq: vec![0.0; PAIRS * k],
            max_residual: 0.0,
            denom_sum: vec![0.0; k],
            denom_sumsq: vec![0.0; k],
        }
    }

    fn merge(mut self, other: DrawAccum) -> DrawAccum {
        self.n += other.n;
        for (a, b) in self.term_sum.iter_mut().zip(&other.term_sum) {
            *a += b;
        }
        for (a, b) in self.term_sumsq.iter_mut().zip(&other.term_sumsq) {
            *a += b;
        }
        for (a, b) in self.gain_sum.iter_mut().zip(&other.gain_sum) {
            *a += b;
        }
        for (a, b) in self.est_pow.iter_mut().zip(&other.est_pow) {
            *a += b;
        }
        for (a, b) in self.est_ortho.iter_mut().zip(&other.est_ortho) {
            *a += b;
        }
        for (a, b) in self.pair_sum.iter_mut().zip(&other.pair_sum) {
            *a += b;
        }
        for (a, b) in self.pair_sumsq.iter_mut().zip(&other.pair_sumsq) {
            *a += b;
        }
        for (a, b) in self.denom_sum.iter_mut().zip(&other.denom_sum) {
            *a += b;
        }
        for (a, b) in self.denom_sumsq.iter_mut().zip(&other.denom_sumsq) {
            *a += b;
        }
        self.max_residual = self.max_residual.max(other.max_residual);
        self
    }
}

/// Which CSI the combiner uses.
enum CsiPath<'a> {
    /// CFE: pilot vectors quantized per access point before estimation.
    QuantizedPilots(&'a [QuantNoise]),
    /// ECF: clean estimation at the access point, then a subtractive CSI
    /// test channel with the given per-(m, k) noise variances.
    QuantizedCsi(&'a [Vec<f64>]),
}

/// Simulate one batch of the MRC pipeline and accumulate every term.
#[allow(clippy::too_many_arguments)]
fn mrc_batch(
    scn: &Scenario,
    stats: &EstimationStats,
    plan: &FronthaulPlan,
    eta: &[f64],
    path: &CsiPath,
    batch: u64,
    count: usize,
    seed: u64,
) -> DrawAccum {
    let cfg = &scn.config;
    let (m, k) = (cfg.m, cfg.k);
    let pilots = make_pilots(cfg.tau, k).expect("validated config");
    let space = SeedSpace::new(seed);
    let mut rngs = SignalRngs::new(&space, batch);
    let mut acc = DrawAccum::new(m, k);
    let xi = cfg.xi_product();

    let active: Vec<bool> = plan.q_data.iter().map(|q| !q.is_dark()).collect();
    let q_data: Vec<f64> = plan.q_data.iter().map(|q| q.variance().unwrap_or(0.0)).collect();
    // effective combining weights: gamma for CFE, gamma' for ECF
    let weight_expect: Vec<f64> = (0..k)
        .map(|ue| {
            (0..m)
                .filter(|&i| active[i])
                .map(|i| stats.gamma_prime[i][ue])
                .sum()
        })
        .collect();

    for _ in 0..count {
        let g = draw_channels(&scn.beta, &mut rngs.channel);
        let mut rx = receive_pilot(&g, &pilots, cfg, &mut rngs);

        // CSI path: what the combiner actually gets to use
        let est: Vec<Vec<Complex64>> = match path {
            CsiPath::QuantizedPilots(q_pilot) => {
                for (row, q) in rx.y.iter_mut().zip(q_pilot.iter()) {
                    if let Some(v) = q.variance() {
                        if v > 0.0 {
                            for y in row.iter_mut() {
                                *y += complex_normal(&mut rngs.quant, v);
                            }
                        }
                    }
                    // dark pilot links have lambda == 0, nothing to add
                }
                lmmse_project(&rx, &pilots, stats)
            }
            CsiPath::QuantizedCsi(q_csi) => {
                let clean = lmmse_project(&rx, &pilots, stats);
                clean
                    .into_iter()
                    .enumerate()
                    .map(|(i, row)| {
                        row.into_iter()
                            .enumerate()
                            .map(|(ue, g_tilde)| {
                                let gamma = stats.gamma[i][ue];
                                let q = q_csi[i][ue];
                                if gamma <= 0.0 {
                                    return Complex64::new(0.0, 0.0);
                                }
                                // jointly Gaussian subtractive channel:
                                // g_hat = (gamma'/gamma) g_tilde + w keeps
                                // g_tilde = g_hat + q_p with independent parts
                                let gp = stats.gamma_prime[i][ue];
                                let shrink = gp / gamma;
                                g_tilde * shrink
                                    + complex_normal(&mut rngs.quant, gp * q / gamma)
                            })
                            .collect()
                    })
                    .collect()
            }
        };

        let rd = receive_data(&g, eta, cfg, &mut rngs);
        let q_draw: Vec<Complex64> = (0..m)
            .map(|i| {
                if active[i] && q_data[i] > 0.0 {
                    complex_normal(&mut rngs.quant, q_data[i])
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();

        for i in 0..m {
            for ue in 0..k {
                let e = est[i][ue];
                acc.est_pow[i * k + ue] += e.norm_sqr();
                acc.est_ortho[i * k + ue] += (g.g[i][ue] - e) * e.conj();
            }
        }

        for ue in 0..k {
            // inner sums over live access points
            let mut gain = vec![Complex64::new(0.0, 0.0); k]; // sum_m g_mk' est*_mk
            let mut rhi = Complex64::new(0.0, 0.0);
            let mut rn = Complex64::new(0.0, 0.0);
            let mut qn = Complex64::new(0.0, 0.0);
            let mut r_total = Complex64::new(0.0, 0.0);
            for i in 0..m {
                if !active[i] {
                    continue;
                }
                let w = est[i][ue].conj();
                for kp in 0..k {
                    gain[kp] += g.g[i][kp] * w;
                }
                rhi += rd.rx_distortion[i] * w;
                rn += rd.noise[i] * w;
                qn += q_draw[i] * w;
                r_total += (rd.y[i] + q_draw[i]) * w;
            }

            let amp_k = (cfg.rho_u * eta[ue] * xi).sqrt();
            let bu = amp_k * (gain[ue] - weight_expect[ue]);
            let mut iui_terms = Vec::with_capacity(k - 1);
            let mut thi_terms = Vec::with_capacity(k);
            let mut iui_pow = 0.0;
            let mut thi_pow = 0.0;
            for kp in 0..k {
                let t = cfg.xi_r.sqrt() * rd.tx_distortion[kp] * gain[kp];
                thi_pow += t.norm_sqr();
                thi_terms.push(t);
                if kp != ue {
                    let v = (cfg.rho_u * eta[kp] * xi).sqrt() * gain[kp];
                    iui_pow += v.norm_sqr();
                    iui_terms.push(v * rd.symbols[kp]);
                }
            }

            let idx = |t: usize| ue * 7 + t;
            let values = [
                0.0, // DS is paired through the mean gain below
                bu.norm_sqr(),
                iui_pow,
                thi_pow,
                rhi.norm_sqr(),
                rn.norm_sqr(),
                qn.norm_sqr(),
            ];
            for (t, &v) in values.iter().enumerate().skip(1) {
                acc.term_sum[idx(t)] += v;
                acc.term_sumsq[idx(t)] += v * v;
            }
            acc.gain_sum[ue] += gain[ue];
            let denom_draw =
                values[1] + values[2] + values[3] + values[4] + values[5] + values[6];
            acc.denom_sum[ue] += denom_draw;
            acc.denom_sumsq[ue] += denom_draw * denom_draw;

            // decomposition must reconstruct the received symbol exactly
            let ds_amp = amp_k * weight_expect[ue];
            let rebuilt = (ds_amp + bu) * rd.symbols[ue]
                + iui_terms.iter().sum::<Complex64>()
                + thi_terms.iter().sum::<Complex64>()
                + rhi
                + rn
                + qn;
            let scale = r_total.norm().max(1e-300);
            acc.max_residual = acc.max_residual.max((rebuilt - r_total).norm() / scale);

            // pairwise uncorrelatedness of the six random summands
            let summands = [
                bu * rd.symbols[ue],
                iui_terms.iter().sum::<Complex64>(),
                thi_terms.iter().sum::<Complex64>(),
                rhi,
                rn,
                qn,
            ];
            let mut pair = 0;
            for a in 0..6 {
                for b in (a + 1)..6 {
                    let prod = summands[a] * summands[b].conj();
                    acc.pair_sum[ue * PAIRS + pair] += prod;
                    acc.pair_sumsq[ue * PAIRS + pair] += prod.norm_sqr();
                    pair += 1;
                }
            }
        }
        acc.n += 1;
    }
    acc
}

/// Everything the MRC oracle measured for one strategy.
#[derive(Debug, Clone)]
pub struct MrcOracleReport {
    /// Per-term pairings (7 per user), in `TERM_KINDS` order.
    pub terms: Vec<McEstimate>,
    /// Estimate-variance pairings, one per (ap, ue).
    pub estimate_variance: Vec<McEstimate>,
    /// Worst estimation-error orthogonality cross moment, in standard errors.
    pub max_orthogonality_sigma: f64,
    /// Worst pairwise term correlation, in standard errors.
    pub max_pair_sigma: f64,
    /// Worst relative residual of the per-draw reconstruction identity.
    pub max_reconstruction_residual: f64,
    /// Empirical SINR per user with a batch-means standard error.
    pub empirical_sinr: Vec<(f64, f64)>,
    /// Closed-form breakdowns this run was paired against.
    pub closed: Vec<SinrBreakdown>,
    pub draws: usize,
}

fn mrc_oracle(
    scn: &Scenario,
    stats: &EstimationStats,
    plan: &FronthaulPlan,
    eta: &[f64],
    path: CsiPath<'_>,
    closed: Vec<SinrBreakdown>,
    prefix: &str,
    mc: &McConfig,
) -> MrcOracleReport {
    let cfg = &scn.config;
    let (m, k) = (cfg.m, cfg.k);
    let ds_closed: Vec<f64> = closed.iter().map(|b| b.ds).collect();
    let batches = run_batches(mc, |b, count| {
        mrc_batch(scn, stats, plan, eta, &path, b, count, mc.seed)
    });

    // segment-level SINR estimates from grouped batches
    let mut segment_sinr = vec![Vec::with_capacity(SEGMENTS); k];
    let per_segment = batches.len().div_ceil(SEGMENTS);
    for chunk in batches.chunks(per_segment.max(1)) {
        let mut n = 0usize;
        let mut denom = vec![0.0; k];
        for b in chunk {
            n += b.n;
            for ue in 0..k {
                denom[ue] += b.denom_sum[ue];
            }
        }
        for ue in 0..k {
            if denom[ue] > 0.0 {
                segment_sinr[ue].push(ds_closed[ue] / (denom[ue] / n as f64));
            }
        }
    }

    let acc = batches
        .into_iter()
        .reduce(DrawAccum::merge)
        .expect("at least one batch");
    let n = acc.n;
    let nf = n as f64;

    let mut terms = Vec::with_capacity(7 * k);
    for ue in 0..k {
        for (t, kind) in TERM_KINDS.iter().enumerate() {
            let closed_value = kind.closed_form(&closed[ue]);
            if *kind == TermKind::Ds {
                // DS is deterministic under the use-and-forget split, so
                // the pairing compares |DS|^2 rebuilt from the *mean*
                // realized combining gain against the closed form
                let amp = (cfg.rho_u * eta[ue] * cfg.xi_product()).sqrt();
                let emp_amp = amp * (acc.gain_sum[ue] / nf).re;
                let empirical = emp_amp * emp_amp;
                let closed_amp = closed_value.sqrt();
                let pass = if closed_amp > 0.0 {
                    (emp_amp - closed_amp).abs() <= 0.02 * closed_amp
                } else {
                    emp_amp.abs() < 1e-12
                };
                terms.push(McEstimate {
                    label: format!("{prefix}/ds"),
                    ue: Some(ue),
                    closed_form: closed_value,
                    empirical,
                    std_error: f64::NAN,
                    draws: n,
                    rel_deviation: if closed_amp > 0.0 {
                        Some((emp_amp - closed_amp).abs() / closed_amp)
                    } else {
                        None
                    },
                    tolerance: 0.02,
                    pass,
                });
                continue;
            }
            terms.push(two_sided_row(
                format!("{prefix}/{}", kind.label()),
                Some(ue),
                closed_value,
                acc.term_sum[ue * 7 + t],
                acc.term_sumsq[ue * 7 + t],
                n,
            ));
        }
    }

    let mut estimate_variance = Vec::with_capacity(m * k);
    for i in 0..m {
        for ue in 0..k {
            let expected = stats.gamma_prime[i][ue];
            let emp = acc.est_pow[i * k + ue] / nf;
            // |est|^2 of a complex Gaussian has std equal to its mean
            let se = emp / nf.sqrt();
            let pass = if expected > 0.0 {
                (emp - expected).abs() <= (0.02 * expected).max(3.0 * se)
            } else {
                emp <= 1e-30
            };
            estimate_variance.push(McEstimate {
                label: format!("{prefix}/estimate-variance"),
                ue: Some(ue),
                closed_form: expected,
                empirical: emp,
                std_error: se,
                draws: n,
                rel_deviation: if expected > 0.0 {
                    Some((emp - expected).abs() / expected)
                } else {
                    None
                },
                tolerance: 0.02,
                pass,
            });
        }
    }

    let mut max_orthogonality_sigma: f64 = 0.0;
    for i in 0..m {
        for ue in 0..k {
            let gp = stats.gamma_prime[i][ue];
            if gp <= 0.0 {
                continue;
            }
            let mean = acc.est_ortho[i * k + ue] / nf;
            // cross moment of two roughly independent complex Gaussians:
            // modulus scale beta * gamma per draw
            let scale = (scn.beta.beta[i][ue] * gp).sqrt() / nf.sqrt();
            max_orthogonality_sigma = max_orthogonality_sigma.max(mean.norm() / scale);
        }
    }

    let mut max_pair_sigma: f64 = 0.0;
    for ue in 0..k {
        for pair in 0..PAIRS {
            let sum = acc.pair_sum[ue * PAIRS + pair];
            let sumsq = acc.pair_sumsq[ue * PAIRS + pair];
            let mean = sum / nf;
            let var = (sumsq / nf - mean.norm_sqr()).max(1e-300);
            let se = (var / nf).sqrt();
            if se > 0.0 {
                max_pair_sigma = max_pair_sigma.max(mean.norm() / se);
            }
        }
    }

    // point estimate: the pooled ratio; uncertainty: a delta-method
    // standard error from the i.i.d. per-draw denominator variance, with
    // the batch-means spread as a conservative cross-check
    let empirical_sinr = (0..k)
        .map(|ue| {
            let mean_den = acc.denom_sum[ue] / nf;
            let var_den = (acc.denom_sumsq[ue] / nf - mean_den * mean_den).max(0.0);
            let se_den = (var_den / nf).sqrt();
            let point = ds_closed[ue] / mean_den;
            let se_delta = point * se_den / mean_den;
            let (_, se_batch) = batch_means(&segment_sinr[ue]);
            (point, se_delta.max(se_batch))
        })
        .collect();

    MrcOracleReport {
        terms,
        estimate_variance,
        max_orthogonality_sigma,
        max_pair_sigma,
        max_reconstruction_residual: acc.max_residual,
        empirical_sinr,
        closed,
        draws: n,
    }
}

/// CFE oracle: quantized pilots, central-unit estimation, MRC. The
/// closed-form counterpart of every term is exact (not a bound), so all
/// rows are two-sided.
pub fn mc_terms_cfe(
    scn: &Scenario,
    stats: &EstimationStats,
    plan: &FronthaulPlan,
    eta: &[f64],
    mc: &McConfig,
) -> MrcOracleReport {
    let closed = rates::sinr_cfe(&scn.beta, stats, plan, eta, &scn.config);
    mrc_oracle(
        scn,
        stats,
        plan,
        eta,
        CsiPath::QuantizedPilots(&plan.q_pilot_ap),
        closed,
        "cfe",
        mc,
    )
}

/// ECF oracle report: the MRC measurements plus the bound sandwich.
#[derive(Debug, Clone)]
pub struct EcfOracleReport {
    pub mrc: MrcOracleReport,
    pub lower: Vec<SinrBreakdown>,
    pub upper: Vec<SinrBreakdown>,
    /// Per-user sandwich check `LB <= empirical <= UB` within three
    /// standard errors (skipping invalid lower bounds). Three keeps the
    /// false-alarm rate negligible even where a bound is exact and the
    /// estimate fluctuates symmetrically around it.
    pub sandwich_pass: Vec<bool>,
}

/// ECF oracle: access-point estimation, subtractive CSI quantization,
/// MRC with the reconstructed estimates. Per-term rows are measured
/// against the lower-bound term set (they are bounds, not equalities);
/// the load-bearing check is the bound sandwich on the empirical SINR.
pub fn mc_terms_ecf(
    scn: &Scenario,
    stats: &EstimationStats,
    plan: &FronthaulPlan,
    eta: &[f64],
    mc: &McConfig,
) -> EcfOracleReport {
    let lower = rates::sinr_ecf_lb(&scn.beta, stats, plan, eta, &scn.config);
    let upper = rates::sinr_ecf_ub(&scn.beta, stats, plan, eta, &scn.config);
    let mrc = mrc_oracle(
        scn,
        stats,
        plan,
        eta,
        CsiPath::QuantizedCsi(&stats.q_csi),
        lower.clone(),
        "ecf",
        mc,
    );
    let sandwich_pass = (0..scn.config.k)
        .map(|ue| {
            let (emp, se) = mrc.empirical_sinr[ue];
            let lb_ok = !lower[ue].lb_valid || lower[ue].sinr <= emp + 3.0 * se;
            let ub_ok = upper[ue].sinr >= emp - 3.0 * se;
            lb_ok && ub_ok
        })
        .collect();
    EcfOracleReport { mrc, lower, upper, sandwich_pass }
}

// ---------------------------------------------------------------------------
// EMCF oracle
// ---------------------------------------------------------------------------

struct EmcfAccum {
    n: usize,
    /// per (ue, m, n): complex sum of z_m conj(z_n)
    cov_sum: Vec<Complex64>,
    /// per (ue, m, n): sum of |z_m conj(z_n)|^2 (for entry standard errors)
    cov_sumsq: Vec<f64>,
    /// per (ue, m): sum of y_hat conj(s) and sum of |y_hat conj(s)|^2
    b_sum: Vec<Complex64>,
    b_sumsq: Vec<f64>,
}

impl EmcfAccum {
    fn new(m: usize, k: usize) -> Self {
        EmcfAccum {
            n: 0,
            cov_sum: vec![Complex64::new(0.0, 0.0); k * m * m],
            cov_sumsq: vec![0.0; k * m * m],
            b_sum: vec![Complex64::new(0.0, 0.0); k * m],
            b_sumsq: vec![0.0; k * m],
        }
    }

    fn merge(mut self, o: EmcfAccum) -> EmcfAccum {
        self.n += o.n;
        for (a, b) in self.cov_sum.iter_mut().zip(&o.cov_sum) {
            *a += b;
        }
        for (a, b) in self.cov_sumsq.iter_mut().zip(&o.cov_sumsq) {
            *a += b;
        }
        for (a, b) in self.b_sum.iter_mut().zip(&o.b_sum) {
            *a += b;
        }
        for (a, b) in self.b_sumsq.iter_mut().zip(&o.b_sumsq) {
            *a += b;
        }
        self
    }
}

/// EMCF oracle report: covariance pairings and combiner SINRs.
#[derive(Debug, Clone)]
pub struct EmcfOracleReport {
    /// Off-diagonal covariance rows, worst entry per user.
    pub kz_offdiag: Vec<McEstimate>,
    /// Diagonal covariance rows, worst entry per user.
    pub kz_diag: Vec<McEstimate>,
    /// Combining-gain rows, worst entry per user.
    pub b_rows: Vec<McEstimate>,
    /// Empirical SINR with the analytic MMSE weights (mean, se).
    pub sinr_analytic: Vec<(f64, f64)>,
    /// Empirical SINR with sample-covariance MMSE weights (mean, se).
    pub sinr_sample: Vec<(f64, f64)>,
    /// Closed-form SINR per user.
    pub sinr_closed: Vec<f64>,
    /// Whether the analytic combiner stays within two standard errors of
    /// the sample-optimal combiner, per user.
    pub optimality_pass: Vec<bool>,
    pub draws: usize,
}

/// EMCF oracle: simulate the quantized matched-filter products, estimate
/// the noise covariance and combining gains, and compare the analytic
/// MMSE combiner against the sample-optimal one.
pub fn mc_emcf(
    scn: &Scenario,
    stats: &EstimationStats,
    plan: &FronthaulPlan,
    eta: &[f64],
    mc: &McConfig,
) -> Result<EmcfOracleReport> {
    let cfg = &scn.config;
    let (m, k) = (cfg.m, cfg.k);
    let xi = cfg.xi_product();
    let closed = rates::rate_emcf(&scn.beta, stats, plan, eta, cfg)?;

    let q_var: Vec<Vec<f64>> = plan
        .q_product
        .iter()
        .map(|row| row.iter().map(|q| q.variance().unwrap_or(0.0)).collect())
        .collect();
    let live: Vec<Vec<bool>> = plan
        .q_product
        .iter()
        .map(|row| row.iter().map(|q| !q.is_dark()).collect())
        .collect();

    let batches = run_batches(mc, |b, count| {
        let pilots = make_pilots(cfg.tau, k).expect("validated config");
        let space = SeedSpace::new(mc.seed);
        let mut rngs = SignalRngs::new(&space, b);
        let mut acc = EmcfAccum::new(m, k);
        for _ in 0..count {
            let g = draw_channels(&scn.beta, &mut rngs.channel);
            let rx = receive_pilot(&g, &pilots, cfg, &mut rngs);
            let est = lmmse_project(&rx, &pilots, stats);
            let rd = receive_data(&g, eta, cfg, &mut rngs);
            for ue in 0..k {
                let b_amp = (cfg.rho_u * eta[ue] * xi).sqrt();
                let mut z = vec![Complex64::new(0.0, 0.0); m];
                for i in 0..m {
                    if !live[i][ue] {
                        continue;
                    }
                    let q = if q_var[i][ue] > 0.0 {
                        complex_normal(&mut rngs.quant, q_var[i][ue])
                    } else {
                        Complex64::new(0.0, 0.0)
                    };
                    let y_hat = est[i][ue].conj() * rd.y[i] + q;
                    let b_draw = y_hat * rd.symbols[ue].conj();
                    acc.b_sum[ue * m + i] += b_draw;
                    acc.b_sumsq[ue * m + i] += b_draw.norm_sqr();
                    z[i] = y_hat - b_amp * stats.gamma[i][ue] * rd.symbols[ue];
                }
                for i in 0..m {
                    for j in 0..m {
                        let prod = z[i] * z[j].conj();
                        acc.cov_sum[(ue * m + i) * m + j] += prod;
                        acc.cov_sumsq[(ue * m + i) * m + j] += prod.norm_sqr();
                    }
                }
            }
            acc.n += 1;
        }
        acc
    });

    // segment SINRs for the two combiners
    let per_segment = batches.len().div_ceil(SEGMENTS);
    let mut seg_analytic = vec![Vec::new(); k];
    let mut seg_sample = vec![Vec::new(); k];
    for chunk in batches.chunks(per_segment.max(1)) {
        let seg = chunk.iter().fold(EmcfAccum::new(m, k), |a, b| {
            a.merge(EmcfAccum {
                n: b.n,
                cov_sum: b.cov_sum.clone(),
                cov_sumsq: b.cov_sumsq.clone(),
                b_sum: b.b_sum.clone(),
                b_sumsq: b.b_sumsq.clone(),
            })
        });
        for ue in 0..k {
            if let Some((sa, ss)) =
                combiner_sinrs(&seg, scn, stats, plan, eta, &q_var, &live, ue)
            {
                seg_analytic[ue].push(sa);
                seg_sample[ue].push(ss);
            }
        }
    }

    let acc = batches.into_iter().reduce(EmcfAccum::merge).expect("batches");
    let nf = acc.n as f64;

    // Each reported row keeps the statistically most strained entry of
    // its family, so the noise band must account for that selection: the
    // max of n independent zero-mean estimates sits near sqrt(2 ln n)
    // standard errors, and the pass threshold stays a little above it.
    fn family_sigma(n: usize) -> f64 {
        (2.0 * (n.max(1) as f64).ln()).sqrt().max(2.0) + 1.0
    }
    fn strain(row: &McEstimate, z: f64) -> f64 {
        let budget = (row.tolerance * row.closed_form.abs()).max(z * row.std_error);
        if budget > 0.0 {
            (row.empirical - row.closed_form).abs() / budget
        } else {
            0.0
        }
    }
    let mut kz_offdiag = Vec::with_capacity(k);
    let mut kz_diag = Vec::with_capacity(k);
    let mut b_rows = Vec::with_capacity(k);
    for ue in 0..k {
        let live_count = (0..m).filter(|&i| live[i][ue]).count();
        let z_b = family_sigma(live_count);
        let z_diag = z_b;
        let z_off = family_sigma(live_count * live_count.saturating_sub(1));
        let mut worst_off: Option<McEstimate> = None;
        let mut worst_diag: Option<McEstimate> = None;
        let mut worst_b: Option<McEstimate> = None;
        for i in 0..m {
            if !live[i][ue] {
                continue;
            }
            // combining gain b_k[m]
            let expected_b = (cfg.rho_u * eta[ue] * xi).sqrt() * stats.gamma[i][ue];
            let mean_b = acc.b_sum[ue * m + i] / nf;
            let emp_b = mean_b.re;
            let var_b = (acc.b_sumsq[ue * m + i] / nf - mean_b.norm_sqr()).max(0.0);
            let se_b = (var_b / nf).sqrt();
            let row = McEstimate {
                label: "emcf/b".into(),
                ue: Some(ue),
                closed_form: expected_b,
                empirical: emp_b,
                std_error: se_b,
                draws: acc.n,
                rel_deviation: Some((emp_b - expected_b).abs() / expected_b.max(1e-300)),
                tolerance: 0.02,
                pass: (emp_b - expected_b).abs() <= (0.02 * expected_b).max(z_b * se_b),
            };
            if worst_b.as_ref().map_or(true, |w| strain(&row, z_b) > strain(w, z_b)) {
                worst_b = Some(row);
            }
            for j in 0..m {
                if !live[j][ue] {
                    continue;
                }
                let analytic = rates::emcf_kz_entry(
                    i,
                    j,
                    ue,
                    &scn.beta,
                    stats,
                    q_var[i][ue],
                    eta,
                    cfg,
                );
                let mean = acc.cov_sum[(ue * m + i) * m + j] / nf;
                let var = (acc.cov_sumsq[(ue * m + i) * m + j] / nf - mean.norm_sqr()).max(0.0);
                let se = (var / nf).sqrt();
                let emp = mean.re;
                let dev = (emp - analytic).abs();
                let z = if i == j { z_diag } else { z_off };
                let row = McEstimate {
                    label: if i == j { "emcf/kz-diag".into() } else { "emcf/kz-offdiag".into() },
                    ue: Some(ue),
                    closed_form: analytic,
                    empirical: emp,
                    std_error: se,
                    draws: acc.n,
                    rel_deviation: if analytic != 0.0 { Some(dev / analytic.abs()) } else { None },
                    tolerance: 0.03,
                    pass: dev <= (0.03 * analytic.abs()).max(z * se),
                };
                let slot = if i == j { &mut worst_diag } else { &mut worst_off };
                let worse = match slot.as_ref() {
                    Some(w) => strain(&row, z) > strain(w, z),
                    None => true,
                };
                if worse {
                    *slot = Some(row);
                }
            }
        }
        if let Some(r) = worst_off {
            kz_offdiag.push(r);
        }
        if let Some(r) = worst_diag {
            kz_diag.push(r);
        }
        if let Some(r) = worst_b {
            b_rows.push(r);
        }
    }

    let sinr_analytic: Vec<(f64, f64)> =
        (0..k).map(|ue| batch_means(&seg_analytic[ue])).collect();
    let sinr_sample: Vec<(f64, f64)> = (0..k).map(|ue| batch_means(&seg_sample[ue])).collect();
    let optimality_pass = (0..k)
        .map(|ue| {
            let (sa, se_a) = sinr_analytic[ue];
            let (ss, se_s) = sinr_sample[ue];
            sa <= ss + 2.0 * (se_a * se_a + se_s * se_s).sqrt()
        })
        .collect();

    Ok(EmcfOracleReport {
        kz_offdiag,
        kz_diag,
        b_rows,
        sinr_analytic,
        sinr_sample,
        sinr_closed: closed.iter().map(|b| b.sinr).collect(),
        optimality_pass,
        draws: acc.n,
    })
}

/// Empirical SINRs of the analytic and the sample-covariance combiner
/// for one user, from one accumulator segment.
#[allow(clippy::too_many_arguments)]
fn combiner_sinrs(
    seg: &EmcfAccum,
    scn: &Scenario,
    stats: &EstimationStats,
    _plan: &FronthaulPlan,
    eta: &[f64],
    q_var: &[Vec<f64>],
    live: &[Vec<bool>],
    ue: usize,
) -> Option<(f64, f64)> {
    use nalgebra::{DMatrix, DVector};
    let cfg = &scn.config;
    let m = cfg.m;
    let idx: Vec<usize> = (0..m).filter(|&i| live[i][ue]).collect();
    if idx.is_empty() || seg.n == 0 {
        return None;
    }
    let nf = seg.n as f64;
    let a = idx.len();
    let k_hat = DMatrix::<Complex64>::from_fn(a, a, |r, c| {
        seg.cov_sum[(ue * m + idx[r]) * m + idx[c]] / nf
    });
    let b_hat = DVector::<Complex64>::from_fn(a, |r, _| seg.b_sum[ue * m + idx[r]] / nf);

    // analytic MMSE weights
    let kz = DMatrix::<f64>::from_fn(a, a, |r, c| {
        let q = if r == c { q_var[idx[r]][ue] } else { 0.0 };
        rates::emcf_kz_entry(idx[r], idx[c], ue, &scn.beta, stats, q, eta, cfg)
    });
    let b = DVector::<f64>::from_fn(a, |r, _| {
        (cfg.rho_u * eta[ue] * cfg.xi_product()).sqrt() * stats.gamma[idx[r]][ue]
    });
    let u = kz.clone().cholesky()?.solve(&b);
    let u_c = DVector::<Complex64>::from_fn(a, |r, _| Complex64::new(u[r], 0.0));

    let quad = |w: &DVector<Complex64>| -> f64 {
        let kw = &k_hat * w;
        w.dotc(&kw).re
    };
    let signal = |w: &DVector<Complex64>| -> f64 { w.dotc(&b_hat).norm_sqr() };

    let sinr_analytic = signal(&u_c) / quad(&u_c);

    // sample-optimal weights from the measured covariance
    let u_s = k_hat.clone().cholesky()?.solve(&b_hat);
    let sinr_sample = signal(&u_s) / quad(&u_s);
    Some((sinr_analytic, sinr_sample))
}

// ---------------------------------------------------------------------------
// Validation report
// ---------------------------------------------------------------------------

/// Fault-injection hook: scale one closed-form CFE term before pairing.
#[derive(Debug, Clone, Copy)]
pub struct Perturbation {
    pub term: TermKind,
    pub factor: f64,
}

/// Options for the full validation run.
#[derive(Debug, Clone)]
pub struct ValidationOptions {
    pub mc: McConfig,
    /// Fronthaul capacity per access point used for every strategy plan.
    pub capacity: f64,
    /// Optional closed-form perturbation; the report must then fail on
    /// exactly the perturbed pairing.
    pub perturb: Option<Perturbation>,
}

/// One row of the validation report.
#[derive(Debug, Clone)]
pub struct ValidationRow {
    pub quantity: String,
    pub ue: Option<usize>,
    pub closed_form: f64,
    pub empirical: f64,
    pub std_error: f64,
    pub deviation: Option<f64>,
    pub pass: bool,
}

/// The full pairing suite over all three strategies.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub rows: Vec<ValidationRow>,
    pub draws: usize,
    pub seed: u64,
    pub passed: bool,
}

/// Pairings that must appear in every validation report; missing any of
/// them is itself a failure.
pub const REQUIRED_PAIRINGS: [&str; 16] = [
    "cfe/ds",
    "cfe/bu",
    "cfe/iui",
    "cfe/thi",
    "cfe/rhi",
    "cfe/rn",
    "cfe/qn",
    "cfe/estimate-variance",
    "ecf/estimate-variance",
    "ecf/lb-sandwich",
    "ecf/ub-sandwich",
    "emcf/kz-diag",
    "emcf/kz-offdiag",
    "emcf/b",
    "emcf/psi",
    "emcf/mmse-optimality",
];

fn row_from(e: &McEstimate) -> ValidationRow {
    ValidationRow {
        quantity: e.label.clone(),
        ue: e.ue,
        closed_form: e.closed_form,
        empirical: e.empirical,
        std_error: e.std_error,
        deviation: e.rel_deviation,
        pass: e.pass,
    }
}

/// Run the complete oracle suite against one scenario: CFE per-term
/// equivalence, ECF bound sandwich, EMCF covariance and combiner checks,
/// and the estimation pairings for both placements.
pub fn run_validation(scn: &Scenario, opts: &ValidationOptions) -> Result<ValidationReport> {
    use crate::allocation::{Planner, ShareMode, Strategy};
    use crate::estimation::{apply_csi_quantization, cfe_stats};

    let cfg = &scn.config;
    let eta = vec![1.0; cfg.k];
    let planner = Planner::new(&scn.beta, cfg);
    let c = vec![opts.capacity; cfg.m];
    let mut rows = Vec::new();

    // --- CFE ---
    let plan = planner.split_plan(&c, Strategy::Cfe, 0.5, ShareMode::Uniform, &eta);
    let stats = cfe_stats(&scn.beta, &plan.q_pilot_ap, cfg);
    let mut cfe = mc_terms_cfe(scn, &stats, &plan, &eta, &opts.mc);
    if let Some(p) = opts.perturb {
        for row in cfe.terms.iter_mut() {
            if row.label == format!("cfe/{}", p.term.label()) {
                let perturbed = row.closed_form * p.factor;
                let tol = (0.02 * perturbed.abs()).max(3.0 * row.std_error);
                row.closed_form = perturbed;
                row.rel_deviation = Some((row.empirical - perturbed).abs() / perturbed.abs());
                row.pass = (row.empirical - perturbed).abs() <= tol;
            }
        }
    }
    rows.extend(cfe.terms.iter().map(row_from));
    rows.extend(cfe.estimate_variance.iter().map(row_from));
    rows.push(ValidationRow {
        quantity: "cfe/pairwise-uncorrelated".into(),
        ue: None,
        closed_form: 0.0,
        empirical: cfe.max_pair_sigma,
        std_error: 1.0,
        deviation: None,
        pass: cfe.max_pair_sigma <= 3.0,
    });
    rows.push(ValidationRow {
        quantity: "cfe/reconstruction".into(),
        ue: None,
        closed_form: 0.0,
        empirical: cfe.max_reconstruction_residual,
        std_error: 0.0,
        deviation: None,
        pass: cfe.max_reconstruction_residual <= 1e-9,
    });

    // --- ECF ---
    let (ecf_plan, _) = planner.proposed(&c, Strategy::EcfUb, &eta);
    let ecf_stats = apply_csi_quantization(planner.ecf_stats(), &ecf_plan.q_csi)?;
    let ecf = mc_terms_ecf(scn, &ecf_stats, &ecf_plan, &eta, &opts.mc);
    rows.extend(ecf.mrc.estimate_variance.iter().map(row_from));
    for ue in 0..cfg.k {
        let (emp, se) = ecf.mrc.empirical_sinr[ue];
        let lb = &ecf.lower[ue];
        rows.push(ValidationRow {
            quantity: "ecf/lb-sandwich".into(),
            ue: Some(ue),
            closed_form: lb.sinr,
            empirical: emp,
            std_error: se,
            deviation: None,
            pass: !lb.lb_valid || lb.sinr <= emp + 3.0 * se,
        });
        rows.push(ValidationRow {
            quantity: "ecf/ub-sandwich".into(),
            ue: Some(ue),
            closed_form: ecf.upper[ue].sinr,
            empirical: emp,
            std_error: se,
            deviation: None,
            pass: ecf.upper[ue].sinr >= emp - 3.0 * se,
        });
    }

    // --- EMCF ---
    // the quantized product moments are squared products of correlated
    // Gaussians with much heavier tails than the MRC terms, so their
    // estimators get a 4x draw budget for the same verdict reliability
    let emcf_mc = McConfig::new(opts.mc.draws * 4, opts.mc.seed);
    let (emcf_plan, _) = planner.proposed(&c, Strategy::Emcf, &eta);
    let emcf = mc_emcf(scn, planner.ecf_stats(), &emcf_plan, &eta, &emcf_mc)?;
    rows.extend(emcf.kz_diag.iter().map(row_from));
    rows.extend(emcf.kz_offdiag.iter().map(row_from));
    rows.extend(emcf.b_rows.iter().map(row_from));
    for ue in 0..cfg.k {
        rows.push(ValidationRow {
            quantity: "emcf/mmse-optimality".into(),
            ue: Some(ue),
            closed_form: emcf.sinr_sample[ue].0,
            empirical: emcf.sinr_analytic[ue].0,
            std_error: emcf.sinr_analytic[ue].1,
            deviation: None,
            pass: emcf.optimality_pass[ue],
        });
    }

    // Psi pairing: the product second moment is checked at xi_t = 1 where
    // the allocation form is the exact moment (see module notes in rates)
    let mut psi_cfg = cfg.clone();
    psi_cfg.xi_t = 1.0;
    let psi_scn = Scenario { config: psi_cfg.clone(), layout: scn.layout.clone(), beta: scn.beta.clone() };
    let psi_stats = crate::estimation::ecf_stats(&scn.beta, &psi_cfg);
    let psi = rates::emcf_psi_diag(&scn.beta, &psi_stats, &eta, &psi_cfg);
    let psi_mc = mc_psi_moment(&psi_scn, &psi_stats, &eta, &emcf_mc);
    let z_psi = (2.0 * (cfg.m as f64).ln()).sqrt().max(2.0) + 1.0;
    for ue in 0..cfg.k {
        // worst access point for this user, strain-ranked with a
        // selection-aware noise band
        let mut worst: Option<ValidationRow> = None;
        let mut worst_strain = -1.0;
        for i in 0..cfg.m {
            let (emp, se) = psi_mc[i][ue];
            let closed = psi[i][ue];
            let budget = (0.02 * closed).max(z_psi * se);
            let strain = (emp - closed).abs() / budget;
            if strain > worst_strain {
                worst_strain = strain;
                worst = Some(ValidationRow {
                    quantity: "emcf/psi".into(),
                    ue: Some(ue),
                    closed_form: closed,
                    empirical: emp,
                    std_error: se,
                    deviation: Some((emp - closed).abs() / closed),
                    pass: strain <= 1.0,
                });
            }
        }
        rows.push(worst.expect("at least one access point"));
    }

    for required in REQUIRED_PAIRINGS {
        if !rows.iter().any(|r| r.quantity == required) {
            return Err(Error::ValidationFailed { failures: rows.len(), total: rows.len() });
        }
    }

    let failures = rows.iter().filter(|r| !r.pass).count();
    let passed = failures == 0;
    Ok(ValidationReport { rows, draws: opts.mc.draws, seed: opts.mc.seed, passed })
}

/// Empirical second moment of the matched-filter products
/// `E|g_tilde* y|^2`, per (ap, ue), with batch-means standard errors.
pub fn mc_psi_moment(
    scn: &Scenario,
    stats: &EstimationStats,
    eta: &[f64],
    mc: &McConfig,
) -> Vec<Vec<(f64, f64)>> {
    let cfg = &scn.config;
    let (m, k) = (cfg.m, cfg.k);
    let batches = run_batches(mc, |b, count| {
        let pilots = make_pilots(cfg.tau, k).expect("validated config");
        let space = SeedSpace::new(mc.seed);
        let mut rngs = SignalRngs::new(&space, b);
        let mut sums = vec![0.0; m * k];
        for _ in 0..count {
            let g = draw_channels(&scn.beta, &mut rngs.channel);
            let rx = receive_pilot(&g, &pilots, cfg, &mut rngs);
            let est = lmmse_project(&rx, &pilots, stats);
            let rd = receive_data(&g, eta, cfg, &mut rngs);
            for i in 0..m {
                for ue in 0..k {
                    sums[i * k + ue] += (est[i][ue].conj() * rd.y[i]).norm_sqr();
                }
            }
        }
        (sums, count)
    });
    let per_segment = batches.len().div_ceil(SEGMENTS);
    let mut segs: Vec<Vec<f64>> = vec![Vec::new(); m * k];
    for chunk in batches.chunks(per_segment.max(1)) {
        let mut sum = vec![0.0; m * k];
        let mut n = 0usize;
        for (s, c) in chunk {
            for (a, b) in sum.iter_mut().zip(s) {
                *a += b;
            }
            n += c;
        }
        for (i, s) in sum.iter().enumerate() {
            segs[i].push(s / n as f64);
        }
    }
    (0..m)
        .map(|i| (0..k).map(|ue| batch_means(&segs[i * k + ue])).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocation::{Planner, ShareMode, Strategy};
    use crate::estimation::{apply_csi_quantization, cfe_stats};
    use crate::SystemConfig;

    fn scenario(seed: u64, m: usize, k: usize, xi_t: f64, xi_r: f64) -> Scenario {
        let mut cfg = SystemConfig::with_size(m, k);
        cfg.xi_t = xi_t;
        cfg.xi_r = xi_r;
        Scenario::generate(cfg, seed)
    }

    #[test]
    fn cfe_terms_match_closed_forms() {
        let scn = scenario(3, 5, 2, 0.85, 0.9);
        let eta = vec![1.0, 0.6];
        let planner = Planner::new(&scn.beta, &scn.config);
        let plan = planner.split_plan(&vec![1.0; 5], Strategy::Cfe, 0.5, ShareMode::Uniform, &eta);
        let stats = cfe_stats(&scn.beta, &plan.q_pilot_ap, &scn.config);
        let report = mc_terms_cfe(&scn, &stats, &plan, &eta, &McConfig::new(60_000, 7));
        for row in &report.terms {
            assert!(
                row.pass,
                "{} ue {:?}: closed {:.4e} empirical {:.4e} (se {:.2e})",
                row.label, row.ue, row.closed_form, row.empirical, row.std_error
            );
        }
        for row in &report.estimate_variance {
            assert!(row.pass, "{} {:?}", row.label, row.ue);
        }
        assert!(report.max_pair_sigma < 4.0, "pair sigma {}", report.max_pair_sigma);
        assert!(
            report.max_reconstruction_residual < 1e-9,
            "reconstruction {}",
            report.max_reconstruction_residual
        );
    }

    #[test]
    fn oracle_is_deterministic_across_thread_counts() {
        let scn = scenario(5, 4, 2, 0.9, 0.9);
        let eta = vec![1.0; 2];
        let planner = Planner::new(&scn.beta, &scn.config);
        let plan = planner.split_plan(&vec![1.0; 4], Strategy::Cfe, 0.5, ShareMode::Uniform, &eta);
        let stats = cfe_stats(&scn.beta, &plan.q_pilot_ap, &scn.config);
        let mc = McConfig::new(12_000, 11);
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| mc_terms_cfe(&scn, &stats, &plan, &eta, &mc))
        };
        let a = run(1);
        let b = run(4);
        for (ra, rb) in a.terms.iter().zip(&b.terms) {
            assert_eq!(ra.empirical.to_bits(), rb.empirical.to_bits(), "{}", ra.label);
        }
        for ((ea, _), (eb, _)) in a.empirical_sinr.iter().zip(&b.empirical_sinr) {
            assert_eq!(ea.to_bits(), eb.to_bits());
        }
    }

    #[test]
    fn standard_error_shrinks_like_sqrt_draws() {
        let scn = scenario(2, 3, 2, 0.9, 1.0);
        let eta = vec![1.0; 2];
        let planner = Planner::new(&scn.beta, &scn.config);
        let plan = planner.split_plan(&vec![1.0; 3], Strategy::Cfe, 0.5, ShareMode::Uniform, &eta);
        let stats = cfe_stats(&scn.beta, &plan.q_pilot_ap, &scn.config);
        let small = mc_terms_cfe(&scn, &stats, &plan, &eta, &McConfig::new(20_000, 3));
        let large = mc_terms_cfe(&scn, &stats, &plan, &eta, &McConfig::new(80_000, 3));
        // quadrupling the draws should halve the standard errors
        let mut checked = 0;
        for (s, l) in small.terms.iter().zip(&large.terms) {
            if s.std_error.is_finite() && s.std_error > 0.0 && l.std_error > 0.0 {
                let ratio = s.std_error / l.std_error;
                assert!((1.4..2.9).contains(&ratio), "{}: ratio {ratio}", s.label);
                checked += 1;
            }
        }
        assert!(checked >= 8);
    }

    #[test]
    fn ecf_bound_sandwich_and_gamma_prime() {
        for &(xi_t, xi_r) in &[(1.0, 1.0), (0.9, 0.9)] {
            let scn = scenario(8, 10, 3, xi_t, xi_r);
            let eta = vec![1.0; 3];
            let planner = Planner::new(&scn.beta, &scn.config);
            let (plan, _) = planner.proposed(&vec![1.0; 10], Strategy::EcfUb, &eta);
            let stats = apply_csi_quantization(planner.ecf_stats(), &plan.q_csi).unwrap();
            let report = mc_terms_ecf(&scn, &stats, &plan, &eta, &McConfig::new(60_000, 4));
            for (ue, ok) in report.sandwich_pass.iter().enumerate() {
                let (emp, se) = report.mrc.empirical_sinr[ue];
                assert!(
                    ok,
                    "xi=({xi_t},{xi_r}) ue {ue}: lb {:.4e} emp {:.4e}±{:.1e} ub {:.4e}",
                    report.lower[ue].sinr, emp, se, report.upper[ue].sinr
                );
            }
            for row in &report.mrc.estimate_variance {
                assert!(row.pass, "gamma' pairing {:?}", row.ue);
            }
        }
    }

    #[test]
    fn ecf_without_csi_noise_reproduces_cfe_path() {
        // with Q_p = 0 the subtractive CSI channel is the identity, so
        // the two oracle paths must coincide draw for draw
        let scn = scenario(6, 5, 2, 0.9, 0.85);
        let eta = vec![1.0, 0.5];
        let planner = Planner::new(&scn.beta, &scn.config);
        let mut plan = planner.split_plan(
            &vec![1.0; 5],
            Strategy::EcfUb,
            0.5,
            ShareMode::Uniform,
            &eta,
        );
        plan.q_csi = vec![vec![0.0; 2]; 5];
        let stats = apply_csi_quantization(planner.ecf_stats(), &plan.q_csi).unwrap();
        let ecf = mc_terms_ecf(&scn, &stats, &plan, &eta, &McConfig::new(8_000, 5));

        let mut cfe_plan = plan.clone();
        cfe_plan.strategy = Strategy::Cfe;
        cfe_plan.q_pilot_ap = vec![crate::quant::QuantNoise::Variance(0.0); 5];
        let cfe = mc_terms_cfe(&scn, &stats, &cfe_plan, &eta, &McConfig::new(8_000, 5));
        for (a, b) in ecf.mrc.terms.iter().zip(&cfe.terms) {
            assert_eq!(a.empirical.to_bits(), b.empirical.to_bits(), "{}", a.label);
        }
        for (a, b) in ecf.mrc.empirical_sinr.iter().zip(&cfe.empirical_sinr) {
            assert_eq!(a.0.to_bits(), b.0.to_bits());
        }
    }

    #[test]
    fn emcf_covariance_and_combiner() {
        let scn = scenario(12, 5, 3, 0.85, 0.9);
        let eta = vec![1.0; 3];
        let planner = Planner::new(&scn.beta, &scn.config);
        let (plan, _) = planner.proposed(&vec![1.0; 5], Strategy::Emcf, &eta);
        let report =
            mc_emcf(&scn, planner.ecf_stats(), &plan, &eta, &McConfig::new(80_000, 6)).unwrap();
        for row in report.kz_diag.iter().chain(&report.kz_offdiag).chain(&report.b_rows) {
            assert!(
                row.pass,
                "{} ue {:?}: closed {:.4e} emp {:.4e} se {:.1e}",
                row.label, row.ue, row.closed_form, row.empirical, row.std_error
            );
        }
        for (ue, ok) in report.optimality_pass.iter().enumerate() {
            assert!(ok, "analytic combiner beat the sample-optimal one at ue {ue}");
        }
        // closed-form SINR should sit near the analytic-combiner estimate
        for ue in 0..3 {
            let (emp, se) = report.sinr_analytic[ue];
            let closed = report.sinr_closed[ue];
            assert!(
                (emp - closed).abs() <= (0.03 * closed).max(4.0 * se),
                "ue {ue}: closed {closed:.4e} emp {emp:.4e} se {se:.1e}"
            );
        }
    }

    #[test]
    fn emcf_offdiagonals_vanish_with_perfect_tx_hardware() {
        let scn = scenario(13, 4, 2, 1.0, 0.85);
        let eta = vec![1.0; 2];
        let planner = Planner::new(&scn.beta, &scn.config);
        let (plan, _) = planner.proposed(&vec![1.0; 4], Strategy::Emcf, &eta);
        let report =
            mc_emcf(&scn, planner.ecf_stats(), &plan, &eta, &McConfig::new(40_000, 2)).unwrap();
        for row in &report.kz_offdiag {
            assert_eq!(row.closed_form, 0.0);
            assert!(
                row.pass,
                "offdiag {:.3e} vs se {:.3e}",
                row.empirical,
                row.std_error
            );
        }
    }

    #[test]
    fn psi_moment_matches_at_perfect_tx_hardware() {
        let scn = scenario(4, 5, 3, 1.0, 0.9);
        let eta = vec![1.0, 0.7, 0.4];
        let stats = crate::estimation::ecf_stats(&scn.beta, &scn.config);
        let psi = rates::emcf_psi_diag(&scn.beta, &stats, &eta, &scn.config);
        let emp = mc_psi_moment(&scn, &stats, &eta, &McConfig::new(60_000, 9));
        for m in 0..5 {
            for k in 0..3 {
                let (mean, se) = emp[m][k];
                let dev = (mean - psi[m][k]).abs();
                assert!(
                    dev <= (0.02 * psi[m][k]).max(3.0 * se),
                    "psi[{m}][{k}]: dev {dev:.3e} of {:.3e} (se {se:.2e})",
                    psi[m][k]
                );
            }
        }
    }

    #[test]
    fn validation_report_passes_and_detects_faults() {
        let scn = scenario(21, 6, 3, 0.9, 0.95);
        let opts = ValidationOptions {
            mc: McConfig::new(50_000, 17),
            capacity: 1.0,
            perturb: None,
        };
        let report = run_validation(&scn, &opts).unwrap();
        assert!(
            report.passed,
            "failed rows: {:?}",
            report
                .rows
                .iter()
                .filter(|r| !r.pass)
                .map(|r| (&r.quantity, r.ue, r.closed_form, r.empirical, r.std_error))
                .collect::<Vec<_>>()
        );
        // every required pairing is present
        for req in REQUIRED_PAIRINGS {
            assert!(report.rows.iter().any(|r| r.quantity == req), "missing {req}");
        }

        // a 5% fault on one closed-form term fails that term and only it
        let opts = ValidationOptions {
            mc: McConfig::new(80_000, 17),
            capacity: 1.0,
            perturb: Some(Perturbation { term: TermKind::Bu, factor: 1.05 }),
        };
        let faulty = run_validation(&scn, &opts).unwrap();
        assert!(!faulty.passed);
        let mut bu_failures = 0;
        for row in &faulty.rows {
            if row.quantity == "cfe/bu" {
                bu_failures += usize::from(!row.pass);
            } else {
                assert!(row.pass, "collateral failure on {}", row.quantity);
            }
        }
        assert!(bu_failures > 0, "perturbed term never failed");
    }
}
