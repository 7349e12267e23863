//! LMMSE channel estimation statistics for both estimator placements.
//!
//! The estimator is linear in the pilot projection and built from
//! large-scale statistics only: `g_tilde[m][k] = lambda[m][k] *
//! phi_k^H y_p_m`. Two placements differ only in what sits in the
//! projection's variance budget:
//!
//! * **CFE** — the central unit estimates from *quantized* pilots, so the
//!   per-access-point pilot quantization noise `Q_p,m` enters the LMMSE
//!   denominator;
//! * **ECF/EMCF** — the access point estimates from clean pilots
//!   (`Q_p = 0`); for ECF the estimates are then themselves quantized
//!   through a subtractive test channel, shrinking the usable estimate
//!   variance to `gamma' = gamma - Q_p,mk`.
//!
//! `gamma[m][k]` is the variance of the estimate and also its correlation
//! with the true channel, so it is the single number the rate expressions
//! consume.

use num_complex::Complex64;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::netmodel::LargeScaleMap;
use crate::quant::QuantNoise;
use crate::signal::{PilotBook, ReceivedPilot};

/// Per-(ap, ue) LMMSE coefficients and estimate variances.
#[derive(Debug, Clone)]
pub struct EstimationStats {
    /// LMMSE scale applied to the pilot projection.
    pub lambda: Vec<Vec<f64>>,
    /// Estimate variance `gamma = sqrt(xi_r xi_t tau rho_p) beta lambda`.
    pub gamma: Vec<Vec<f64>>,
    /// Post-CSI-quantization variance (equals `gamma` unless CSI is quantized).
    pub gamma_prime: Vec<Vec<f64>>,
    /// Pilot quantization noise per access point (CFE; zero otherwise).
    pub q_pilot_ap: Vec<QuantNoise>,
    /// CSI quantization noise per (ap, ue) (ECF; zero otherwise).
    pub q_csi: Vec<Vec<f64>>,
}

fn lmmse_row(
    beta_row: &[f64],
    q_pilot: f64,
    config: &SystemConfig,
) -> (Vec<f64>, Vec<f64>) {
    let tau_rho = config.tau as f64 * config.rho_p;
    let xi = config.xi_product();
    let amp = (xi * tau_rho).sqrt();
    let beta_sum: f64 = beta_row.iter().sum();
    let mut lambda = Vec::with_capacity(beta_row.len());
    let mut gamma = Vec::with_capacity(beta_row.len());
    for &b in beta_row {
        // all tau entries carry the same quantization noise, so the
        // (1/tau) sum over entries collapses to the scalar q_pilot
        let denom = xi * tau_rho * b + config.rho_p * (1.0 - xi) * beta_sum + config.n + q_pilot;
        let l = if denom > 0.0 { amp * b / denom } else { 0.0 };
        lambda.push(l);
        gamma.push(amp * b * l);
    }
    (lambda, gamma)
}

/// Estimation at the central unit from quantized pilots (CFE).
///
/// `q_pilot[m]` is the per-entry quantization noise of access point `m`'s
/// forwarded pilot vector; a dark link yields a zero estimate for that
/// access point rather than an error.
pub fn cfe_stats(
    beta: &LargeScaleMap,
    q_pilot: &[QuantNoise],
    config: &SystemConfig,
) -> EstimationStats {
    let k = beta.k();
    let mut lambda = Vec::with_capacity(beta.m());
    let mut gamma = Vec::with_capacity(beta.m());
    for (row, q) in beta.beta.iter().zip(q_pilot) {
        match q.variance() {
            Some(v) => {
                let (l, g) = lmmse_row(row, v, config);
                lambda.push(l);
                gamma.push(g);
            }
            None => {
                lambda.push(vec![0.0; k]);
                gamma.push(vec![0.0; k]);
            }
        }
    }
    EstimationStats {
        lambda,
        gamma: gamma.clone(),
        gamma_prime: gamma,
        q_pilot_ap: q_pilot.to_vec(),
        q_csi: vec![vec![0.0; k]; beta.m()],
    }
}

/// Estimation at the access point from clean pilots (ECF/EMCF); the
/// `q_pilot = 0` specialization of [`cfe_stats`].
pub fn ecf_stats(beta: &LargeScaleMap, config: &SystemConfig) -> EstimationStats {
    cfe_stats(beta, &vec![QuantNoise::Variance(0.0); beta.m()], config)
}

/// Shrink the estimates by the subtractive CSI test channel:
/// `gamma'[m][k] = gamma[m][k] - q_csi[m][k]`.
///
/// Noise exceeding the estimate variance would make the reconstruction
/// variance negative and is rejected; `gamma' == 0` (no CSI forwarded) is
/// legitimate and simply removes the access point's contribution.
pub fn apply_csi_quantization(
    stats: &EstimationStats,
    q_csi: &[Vec<f64>],
) -> Result<EstimationStats> {
    let mut out = stats.clone();
    for (m, row) in q_csi.iter().enumerate() {
        for (k, &q) in row.iter().enumerate() {
            let gamma = stats.gamma[m][k];
            if q > gamma * (1.0 + 1e-9) + 1e-300 {
                return Err(Error::CsiNoiseTooLarge { m, k, q, gamma });
            }
            out.gamma_prime[m][k] = (gamma - q).max(0.0);
        }
    }
    out.q_csi = q_csi.to_vec();
    Ok(out)
}

impl EstimationStats {
    pub fn m(&self) -> usize {
        self.gamma.len()
    }

    pub fn k(&self) -> usize {
        self.gamma.first().map_or(0, |r| r.len())
    }

    /// `sum_m gamma[m][k]` over a caller-supplied access-point mask.
    pub fn gamma_column_sum(&self, k: usize, active: &[bool]) -> f64 {
        self.gamma
            .iter()
            .zip(active)
            .filter(|(_, &a)| a)
            .map(|(row, _)| row[k])
            .sum()
    }
}

/// Apply the large-scale LMMSE coefficients to realized pilot receptions:
/// `g_tilde[m][k] = lambda[m][k] * phi_k^H y_m`.
pub fn lmmse_project(
    received: &ReceivedPilot,
    pilots: &PilotBook,
    stats: &EstimationStats,
) -> Vec<Vec<Complex64>> {
    received
        .y
        .iter()
        .zip(&stats.lambda)
        .map(|(y_m, lambda_row)| {
            lambda_row
                .iter()
                .enumerate()
                .map(|(k, &l)| l * pilots.project(k, y_m))
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quant::distortion_subtractive;
    use crate::rng::SeedSpace;
    use crate::signal::{draw_channels, make_pilots, receive_pilot, SignalRngs};

    fn cfg(m: usize, k: usize) -> SystemConfig {
        SystemConfig::with_size(m, k)
    }

    fn no_quant(m: usize) -> Vec<QuantNoise> {
        vec![QuantNoise::Variance(0.0); m]
    }

    #[test]
    fn ideal_hardware_reduces_to_classic_lmmse() {
        let mut c = cfg(2, 2);
        c.n = 0.5;
        c.rho_p = 2.0;
        let beta = LargeScaleMap { beta: vec![vec![1.0, 3.0], vec![0.2, 0.7]] };
        let stats = cfe_stats(&beta, &no_quant(2), &c);
        let tau_rho = c.tau as f64 * c.rho_p;
        for m in 0..2 {
            for k in 0..2 {
                let b = beta.beta[m][k];
                let expected = tau_rho * b * b / (tau_rho * b + c.n);
                assert!(
                    (stats.gamma[m][k] - expected).abs() < 1e-12,
                    "gamma[{m}][{k}]"
                );
            }
        }
    }

    #[test]
    fn hand_evaluated_single_pair() {
        // tau = 1, beta = 1, rho_p = 1, N = 1, q = 1 -> lambda = gamma = 1/3
        let mut c = cfg(1, 1);
        c.rho_p = 1.0;
        c.n = 1.0;
        let beta = LargeScaleMap { beta: vec![vec![1.0]] };
        let stats = cfe_stats(&beta, &[QuantNoise::Variance(1.0)], &c);
        assert!((stats.lambda[0][0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((stats.gamma[0][0] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn dark_pilot_link_zeroes_the_row() {
        let c = cfg(2, 3);
        let beta = LargeScaleMap { beta: vec![vec![1e-9; 3]; 2] };
        let stats = cfe_stats(&beta, &[QuantNoise::Dark, QuantNoise::Variance(0.0)], &c);
        assert!(stats.gamma[0].iter().all(|&g| g == 0.0));
        assert!(stats.gamma[1].iter().all(|&g| g > 0.0));
    }

    #[test]
    fn huge_pilot_noise_drives_gamma_to_zero() {
        let c = cfg(1, 1);
        let beta = LargeScaleMap { beta: vec![vec![1e-9]] };
        let stats = cfe_stats(&beta, &[QuantNoise::Variance(1e12)], &c);
        assert!(stats.gamma[0][0] < 1e-25);
    }

    fn sample_beta() -> LargeScaleMap {
        LargeScaleMap {
            beta: vec![vec![1e-8, 3e-9], vec![5e-9, 2e-8], vec![1e-9, 1e-9]],
        }
    }

    #[test]
    fn ecf_equals_cfe_without_quantization() {
        let c = cfg(3, 2);
        let beta = sample_beta();
        let a = ecf_stats(&beta, &c);
        let b = cfe_stats(&beta, &no_quant(3), &c);
        assert_eq!(a.lambda, b.lambda);
        assert_eq!(a.gamma, b.gamma);
    }

    #[test]
    fn useless_hardware_estimates_nothing() {
        let mut c = cfg(2, 2);
        c.xi_t = 0.0;
        let beta = LargeScaleMap { beta: vec![vec![1.0; 2]; 2] };
        let stats = ecf_stats(&beta, &c);
        assert!(stats.gamma.iter().flatten().all(|&g| g == 0.0));
    }

    #[test]
    fn high_snr_limit_matches_closed_form() {
        let mut c = cfg(1, 3);
        c.xi_t = 0.9;
        c.xi_r = 0.8;
        c.rho_p = 1e12;
        let row = vec![2e-9, 1e-9, 4e-9];
        let beta = LargeScaleMap { beta: vec![row.clone()] };
        let stats = ecf_stats(&beta, &c);
        let xi = c.xi_product();
        let tau = c.tau as f64;
        let sum: f64 = row.iter().sum();
        for (k, &b) in row.iter().enumerate() {
            let theta1 = xi * tau * b + (1.0 - xi) * sum;
            let limit = xi * tau * b * b / theta1;
            assert!(
                (stats.gamma[0][k] - limit).abs() / limit < 1e-6,
                "gamma[{k}] = {} vs limit {}",
                stats.gamma[0][k],
                limit
            );
        }
    }

    #[test]
    fn csi_quantization_edge_cases() {
        let c = cfg(1, 2);
        let beta = LargeScaleMap { beta: vec![vec![1e-8, 2e-8]] };
        let stats = ecf_stats(&beta, &c);
        let g = stats.gamma[0].clone();

        let zero = apply_csi_quantization(&stats, &[vec![0.0, 0.0]]).unwrap();
        assert_eq!(zero.gamma_prime, stats.gamma);

        let full = apply_csi_quantization(&stats, std::slice::from_ref(&g)).unwrap();
        assert!(full.gamma_prime[0].iter().all(|&gp| gp == 0.0));

        let too_big = apply_csi_quantization(&stats, &[vec![g[0] * 1.5, 0.0]]);
        assert!(too_big.is_err());
    }

    #[test]
    fn csi_quantization_composes_with_waterfilled_shares() {
        let c = cfg(1, 3);
        let beta = LargeScaleMap { beta: vec![vec![1e-8, 5e-9, 2e-9]] };
        let stats = ecf_stats(&beta, &c);
        let gamma = &stats.gamma[0];
        let total: f64 = gamma.iter().sum();
        let c_pilot = 0.05;
        let q: Vec<f64> = gamma
            .iter()
            .map(|&g| distortion_subtractive(g, g / total * c_pilot, c.t))
            .collect();
        let quantized = apply_csi_quantization(&stats, std::slice::from_ref(&q)).unwrap();
        for k in 0..3 {
            // round trip: the share implied by q matches what was allocated
            let share = crate::quant::subtractive_capacity(gamma[k], q[k], c.t);
            assert!((share - gamma[k] / total * c_pilot).abs() < 1e-12);
            assert!((quantized.gamma_prime[0][k] - (gamma[k] - q[k])).abs() < 1e-15);
        }
    }

    #[test]
    fn gamma_monotone_in_power_and_quality() {
        let beta = sample_beta();
        let base = cfg(3, 2);
        let g0 = ecf_stats(&beta, &base).gamma;

        let mut more_power = base.clone();
        more_power.rho_p *= 2.0;
        let g1 = ecf_stats(&beta, &more_power).gamma;

        let mut worse_hw = base.clone();
        worse_hw.xi_t = 0.6;
        let g2 = ecf_stats(&beta, &worse_hw).gamma;

        for m in 0..3 {
            for k in 0..2 {
                assert!(g1[m][k] >= g0[m][k]);
                assert!(g2[m][k] <= g0[m][k]);
            }
        }
    }

    #[test]
    fn estimate_variance_matches_simulation() {
        // empirical E|g_tilde|^2 vs gamma and orthogonality of the error,
        // for both placements and mixed hardware qualities
        for &(xi_t, xi_r) in &[(1.0, 1.0), (1.0, 0.7), (0.7, 1.0), (0.7, 0.7)] {
            let mut c = cfg(2, 2);
            c.xi_t = xi_t;
            c.xi_r = xi_r;
            c.rho_p = 1.0;
            c.n = 0.3;
            let beta = LargeScaleMap { beta: vec![vec![1.0, 0.5], vec![0.25, 2.0]] };
            let pilots = make_pilots(2, 2).unwrap();
            let q_p = 0.2;
            let stats = cfe_stats(&beta, &[QuantNoise::Variance(q_p); 2], &c);
            let space = SeedSpace::new(1234);

            let draws = 120_000;
            let mut pow = vec![vec![0.0; 2]; 2];
            let mut err_cross = vec![vec![Complex64::new(0.0, 0.0); 2]; 2];
            for i in 0..draws {
                let mut rngs = SignalRngs::new(&space, i as u64);
                let g = draw_channels(&beta, &mut rngs.channel);
                let mut rx = receive_pilot(&g, &pilots, &c, &mut rngs);
                for row in rx.y.iter_mut() {
                    for v in row.iter_mut() {
                        *v += crate::rng::complex_normal(&mut rngs.quant, q_p);
                    }
                }
                let est = lmmse_project(&rx, &pilots, &stats);
                for m in 0..2 {
                    for k in 0..2 {
                        pow[m][k] += est[m][k].norm_sqr();
                        err_cross[m][k] += (g.g[m][k] - est[m][k]) * est[m][k].conj();
                    }
                }
            }
            for m in 0..2 {
                for k in 0..2 {
                    let emp = pow[m][k] / draws as f64;
                    let rel = (emp - stats.gamma[m][k]).abs() / stats.gamma[m][k];
                    assert!(
                        rel < 0.02,
                        "xi=({xi_t},{xi_r}) gamma[{m}][{k}]: emp {emp} vs {}",
                        stats.gamma[m][k]
                    );
                    let ortho = (err_cross[m][k] / draws as f64).norm();
                    assert!(ortho < 0.02 * stats.gamma[m][k].max(1e-3), "ortho {ortho}");
                }
            }
        }
    }
}
