//! Signal-level generative model: channel draws, hardware-impairment
//! distortion, pilot and data reception.
//!
//! Everything here simulates one coherence interval at a time and is the
//! ground truth the Monte-Carlo oracle measures against the closed forms.
//! Hardware impairments follow the additive-Gaussian model: a transceiver
//! of quality `xi` turns `x` into `sqrt(xi) x + z` with
//! `z ~ CN(0, (1 - xi) E|x|^2)`, which preserves the signal's second
//! moment. On the receive side the conditioning power is the *conditional*
//! power given the channel draw.

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::netmodel::LargeScaleMap;
use crate::rng::{complex_normal, SeedSpace, StreamLabel};

/// Orthonormal pilot book; `phi[k]` is the tau-length pilot of user `k`.
///
/// Columns are unitary-DFT vectors, so every entry has squared magnitude
/// `1/tau`. That makes all entries of a received pilot vector share the
/// same variance, which is what lets one scalar quantizer per access
/// point cover the whole vector.
#[derive(Debug, Clone)]
pub struct PilotBook {
    pub phi: Vec<Vec<Complex64>>,
}

/// Build the pilot book. Orthogonal pilots require `tau == k`.
pub fn make_pilots(tau: usize, k: usize) -> Result<PilotBook> {
    if tau != k || tau == 0 {
        return Err(Error::PilotLength { tau, k });
    }
    let scale = 1.0 / (tau as f64).sqrt();
    let phi = (0..k)
        .map(|col| {
            (0..tau)
                .map(|row| {
                    let angle = -2.0 * std::f64::consts::PI * (row * col) as f64 / tau as f64;
                    Complex64::from_polar(scale, angle)
                })
                .collect()
        })
        .collect();
    Ok(PilotBook { phi })
}

impl PilotBook {
    pub fn tau(&self) -> usize {
        self.phi.first().map_or(0, |c| c.len())
    }

    /// `phi_k^H y` for a tau-length vector `y`.
    pub fn project(&self, k: usize, y: &[Complex64]) -> Complex64 {
        self.phi[k]
            .iter()
            .zip(y)
            .map(|(p, v)| p.conj() * v)
            .sum()
    }
}

/// One small-scale fading realization, `g[m][k] = sqrt(beta[m][k]) h[m][k]`.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub g: Vec<Vec<Complex64>>,
}

/// Draw i.i.d. CN(0, 1) small-scale fading over the large-scale map.
pub fn draw_channels(beta: &LargeScaleMap, rng: &mut ChaCha8Rng) -> ChannelRealization {
    let g = beta
        .beta
        .iter()
        .map(|row| row.iter().map(|&b| complex_normal(rng, b)).collect())
        .collect();
    ChannelRealization { g }
}

/// Distortion noise a hardware stage of quality `xi` adds to a signal of
/// power `input_power`: CN(0, (1 - xi) * input_power).
pub fn distortion_noise(xi: f64, input_power: f64, rng: &mut ChaCha8Rng) -> Complex64 {
    complex_normal(rng, (1.0 - xi) * input_power)
}

/// Pass one sample through a non-ideal hardware stage:
/// `sqrt(xi) x + CN(0, (1 - xi) * input_power)`. Output power equals
/// input power for any `xi` in `[0, 1]`.
pub fn distort(x: Complex64, xi: f64, input_power: f64, rng: &mut ChaCha8Rng) -> Complex64 {
    xi.sqrt() * x + distortion_noise(xi, input_power, rng)
}

/// Per-draw random streams, one per physical noise source, so ablating a
/// source never shifts the draws of the others.
pub struct SignalRngs {
    pub channel: ChaCha8Rng,
    pub tx: ChaCha8Rng,
    pub rx: ChaCha8Rng,
    pub noise: ChaCha8Rng,
    pub quant: ChaCha8Rng,
    pub symbols: ChaCha8Rng,
}

impl SignalRngs {
    pub fn new(space: &SeedSpace, index: u64) -> Self {
        SignalRngs {
            channel: space.stream(StreamLabel::Channel, index),
            tx: space.stream(StreamLabel::TxDistortion, index),
            rx: space.stream(StreamLabel::RxDistortion, index),
            noise: space.stream(StreamLabel::Noise, index),
            quant: space.stream(StreamLabel::Quantization, index),
            symbols: space.stream(StreamLabel::Symbols, index),
        }
    }
}

/// Received pilot vectors, `y[m]` of length tau.
#[derive(Debug, Clone)]
pub struct ReceivedPilot {
    pub y: Vec<Vec<Complex64>>,
}

/// Pilot-phase reception at every access point.
///
/// User `k` transmits `sqrt(tau rho_p) phi_k` through its non-ideal
/// hardware; access point `m` hears the superposition through its own
/// non-ideal hardware plus thermal noise. The receive-side distortion
/// variance is conditional on the channel draw.
pub fn receive_pilot(
    g: &ChannelRealization,
    pilots: &PilotBook,
    config: &SystemConfig,
    rngs: &mut SignalRngs,
) -> ReceivedPilot {
    let tau = pilots.tau();
    let amp = (config.tau as f64 * config.rho_p).sqrt();

    // what each user actually radiates: sqrt(xi_t) * pilot + tx distortion
    let sent: Vec<Vec<Complex64>> = pilots
        .phi
        .iter()
        .map(|phi_k| {
            phi_k
                .iter()
                .map(|&p| distort(amp * p, config.xi_t, config.rho_p, &mut rngs.tx))
                .collect()
        })
        .collect();

    let y = g
        .g
        .iter()
        .map(|g_row| {
            let channel_power: f64 = g_row.iter().map(|g| g.norm_sqr()).sum();
            let cond_power = config.rho_p * channel_power;
            (0..tau)
                .map(|i| {
                    let superposed: Complex64 =
                        g_row.iter().zip(&sent).map(|(g_mk, s)| g_mk * s[i]).sum();
                    config.xi_r.sqrt() * superposed
                        + distortion_noise(config.xi_r, cond_power, &mut rngs.rx)
                        + complex_normal(&mut rngs.noise, config.n)
                })
                .collect()
        })
        .collect();
    ReceivedPilot { y }
}

/// One data symbol interval: received scalars plus every random component
/// that produced them, so a validator can split the reception into its
/// constituent terms.
#[derive(Debug, Clone)]
pub struct ReceivedData {
    /// Received sample per access point.
    pub y: Vec<Complex64>,
    /// Transmitted unit-power symbols, one per user.
    pub symbols: Vec<Complex64>,
    /// Realized transmit-side distortion per user.
    pub tx_distortion: Vec<Complex64>,
    /// Realized receive-side distortion per access point.
    pub rx_distortion: Vec<Complex64>,
    /// Realized thermal noise per access point.
    pub noise: Vec<Complex64>,
}

/// Data-phase reception of one symbol at every access point.
pub fn receive_data(
    g: &ChannelRealization,
    eta: &[f64],
    config: &SystemConfig,
    rngs: &mut SignalRngs,
) -> ReceivedData {
    let k = eta.len();
    let symbols: Vec<Complex64> = (0..k).map(|_| complex_normal(&mut rngs.symbols, 1.0)).collect();
    let tx_distortion: Vec<Complex64> = eta
        .iter()
        .map(|&eta_k| distortion_noise(config.xi_t, config.rho_u * eta_k, &mut rngs.tx))
        .collect();

    let mut y = Vec::with_capacity(g.g.len());
    let mut rx_distortion = Vec::with_capacity(g.g.len());
    let mut noise = Vec::with_capacity(g.g.len());
    for g_row in &g.g {
        let cond_power: f64 = config.rho_u
            * g_row
                .iter()
                .zip(eta)
                .map(|(g_mk, &eta_k)| eta_k * g_mk.norm_sqr())
                .sum::<f64>();
        let superposed: Complex64 = g_row
            .iter()
            .zip(eta.iter().zip(symbols.iter().zip(&tx_distortion)))
            .map(|(g_mk, (&eta_k, (s_k, w_t)))| {
                g_mk * ((eta_k * config.rho_u * config.xi_t).sqrt() * s_k + w_t)
            })
            .sum();
        let w_r = distortion_noise(config.xi_r, cond_power, &mut rngs.rx);
        let n_m = complex_normal(&mut rngs.noise, config.n);
        y.push(config.xi_r.sqrt() * superposed + w_r + n_m);
        rx_distortion.push(w_r);
        noise.push(n_m);
    }
    ReceivedData { y, symbols, tx_distortion, rx_distortion, noise }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedSpace;

    fn test_config(m: usize, k: usize) -> SystemConfig {
        let mut c = SystemConfig::with_size(m, k);
        c.n = 1e-3;
        c.rho_p = 1.0;
        c.rho_u = 1.0;
        c
    }

    fn uniform_beta(m: usize, k: usize, value: f64) -> LargeScaleMap {
        LargeScaleMap { beta: vec![vec![value; k]; m] }
    }

    #[test]
    fn pilots_are_orthonormal() {
        let book = make_pilots(4, 4).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let ip = book.project(a, &book.phi[b]);
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((ip - expected).norm() < 1e-12, "gram[{a}][{b}] = {ip}");
            }
        }
        let single = make_pilots(1, 1).unwrap();
        assert!((single.phi[0][0].norm() - 1.0).abs() < 1e-15);
        assert!(make_pilots(3, 4).is_err());
    }

    #[test]
    fn channel_second_moment_and_determinism() {
        let beta = uniform_beta(1, 1, 1.0);
        let space = SeedSpace::new(77);
        let mut rng = space.stream(StreamLabel::Channel, 0);
        let n = 100_000;
        let mut pow = 0.0;
        for _ in 0..n {
            pow += draw_channels(&beta, &mut rng).g[0][0].norm_sqr();
        }
        let mean = pow / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "E|g|^2 = {mean}");

        let mut r1 = space.stream(StreamLabel::Channel, 5);
        let mut r2 = space.stream(StreamLabel::Channel, 5);
        let a = draw_channels(&uniform_beta(3, 2, 0.5), &mut r1);
        let b = draw_channels(&uniform_beta(3, 2, 0.5), &mut r2);
        assert_eq!(a.g, b.g);
    }

    #[test]
    fn distort_preserves_power_and_correlation() {
        let space = SeedSpace::new(3);
        let mut sig = space.stream(StreamLabel::Symbols, 0);
        let mut hw = space.stream(StreamLabel::TxDistortion, 0);

        // xi = 1: identity
        let x = complex_normal(&mut sig, 1.0);
        assert_eq!(distort(x, 1.0, 1.0, &mut hw), x);

        // xi = 0.8 and xi = 0: second moment preserved, correlation sqrt(xi)
        for &(xi, want_corr) in &[(0.8f64, 0.8f64.sqrt()), (0.0, 0.0)] {
            let n = 100_000;
            let mut out_pow = 0.0;
            let mut cross = Complex64::new(0.0, 0.0);
            for _ in 0..n {
                let x = complex_normal(&mut sig, 1.0);
                let y = distort(x, xi, 1.0, &mut hw);
                out_pow += y.norm_sqr();
                cross += y * x.conj();
            }
            let var = out_pow / n as f64;
            let corr = (cross / n as f64).re;
            assert!((var - 1.0).abs() < 0.02, "xi={xi}: output var {var}");
            assert!((corr - want_corr).abs() < 0.02, "xi={xi}: corr {corr}");
        }
    }

    #[test]
    fn noiseless_perfect_hardware_pilot_is_exact() {
        let mut cfg = test_config(2, 3);
        cfg.n = 0.0;
        let beta = uniform_beta(2, 3, 1.0);
        let pilots = make_pilots(3, 3).unwrap();
        let space = SeedSpace::new(9);
        let mut rngs = SignalRngs::new(&space, 0);
        let g = draw_channels(&beta, &mut rngs.channel);
        let rx = receive_pilot(&g, &pilots, &cfg, &mut rngs);
        let amp = (cfg.tau as f64 * cfg.rho_p).sqrt();
        for m in 0..2 {
            for i in 0..3 {
                let expected: Complex64 =
                    (0..3).map(|k| g.g[m][k] * (amp * pilots.phi[k][i])).sum();
                assert!((rx.y[m][i] - expected).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn pilot_conditional_variance_single_user() {
        let mut cfg = test_config(1, 1);
        cfg.xi_t = 0.9;
        cfg.xi_r = 0.8;
        cfg.n = 0.05;
        let beta = uniform_beta(1, 1, 1.0);
        let pilots = make_pilots(1, 1).unwrap();
        let space = SeedSpace::new(21);
        let mut chan = space.stream(StreamLabel::Channel, 0);
        let g = draw_channels(&beta, &mut chan); // fixed channel draw
        let g2 = g.g[0][0].norm_sqr();

        let n = 200_000;
        let mut pow = 0.0;
        let mean = cfg.xi_product().sqrt() * (cfg.rho_p).sqrt() * g.g[0][0] * pilots.phi[0][0];
        for i in 0..n {
            let mut rngs = SignalRngs::new(&space, i as u64 + 1);
            let rx = receive_pilot(&g, &pilots, &cfg, &mut rngs);
            pow += (rx.y[0][0] - mean).norm_sqr();
        }
        let var = pow / n as f64;
        let expected = cfg.rho_p * (1.0 - cfg.xi_t) * cfg.xi_r * g2
            + cfg.rho_p * (1.0 - cfg.xi_r) * g2
            + cfg.n;
        assert!(
            (var - expected).abs() / expected < 0.02,
            "conditional var {var} vs {expected}"
        );
    }

    #[test]
    fn pilot_projection_moments() {
        // Var(phi_k^H y_m) = xi_r xi_t tau rho beta + rho (1 - xi_r xi_t) sum(beta) + N,
        // and the projection correlates with g through sqrt(xi xi tau rho) beta.
        let mut cfg = test_config(1, 2);
        cfg.xi_t = 0.9;
        cfg.xi_r = 0.7;
        cfg.n = 0.1;
        let beta = LargeScaleMap { beta: vec![vec![1.0, 0.5]] };
        let pilots = make_pilots(2, 2).unwrap();
        let space = SeedSpace::new(33);

        let n = 200_000;
        let mut pow = 0.0;
        let mut cross = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let mut rngs = SignalRngs::new(&space, i as u64);
            let g = draw_channels(&beta, &mut rngs.channel);
            let rx = receive_pilot(&g, &pilots, &cfg, &mut rngs);
            let proj = pilots.project(0, &rx.y[0]);
            pow += proj.norm_sqr();
            cross += proj * g.g[0][0].conj();
        }
        let var = pow / n as f64;
        let tau_rho = cfg.tau as f64 * cfg.rho_p;
        let expected = cfg.xi_product() * tau_rho * 1.0
            + cfg.rho_p * (1.0 - cfg.xi_product()) * 1.5
            + cfg.n;
        assert!((var - expected).abs() / expected < 0.02, "{var} vs {expected}");
        let coef = (cross / n as f64).re;
        let expected_coef = (cfg.xi_product() * tau_rho).sqrt() * 1.0;
        assert!((coef - expected_coef).abs() / expected_coef < 0.02);
    }

    #[test]
    fn data_reception_moments() {
        let mut cfg = test_config(1, 2);
        cfg.xi_t = 0.85;
        cfg.xi_r = 0.9;
        cfg.n = 0.2;
        let beta = LargeScaleMap { beta: vec![vec![1.0, 2.0]] };
        let eta = [1.0, 0.5];
        let space = SeedSpace::new(17);

        // eta = 0 leaves thermal noise only
        let mut pow = 0.0;
        let n = 100_000;
        for i in 0..n {
            let mut rngs = SignalRngs::new(&space, i as u64);
            let g = draw_channels(&beta, &mut rngs.channel);
            let rx = receive_data(&g, &[0.0, 0.0], &cfg, &mut rngs);
            pow += rx.y[0].norm_sqr();
        }
        let var = pow / n as f64;
        assert!((var - cfg.n).abs() / cfg.n < 0.02, "silent-user var {var}");

        // unconditional variance rho_u * sum(eta beta) + N
        let mut pow = 0.0;
        for i in 0..n {
            let mut rngs = SignalRngs::new(&space, (n + i) as u64);
            let g = draw_channels(&beta, &mut rngs.channel);
            let rx = receive_data(&g, &eta, &cfg, &mut rngs);
            pow += rx.y[0].norm_sqr();
        }
        let var = pow / n as f64;
        let expected = cfg.rho_u * (1.0 * 1.0 + 0.5 * 2.0) + cfg.n;
        assert!((var - expected).abs() / expected < 0.02, "{var} vs {expected}");
    }

    #[test]
    fn noise_sources_are_uncorrelated() {
        let mut cfg = test_config(2, 2);
        cfg.xi_t = 0.8;
        cfg.xi_r = 0.8;
        cfg.n = 0.5;
        let beta = uniform_beta(2, 2, 1.0);
        let space = SeedSpace::new(31);
        let n = 50_000;
        let mut cross = [Complex64::new(0.0, 0.0); 3];
        for i in 0..n {
            let mut rngs = SignalRngs::new(&space, i as u64);
            let g = draw_channels(&beta, &mut rngs.channel);
            let rd = receive_data(&g, &[1.0, 1.0], &cfg, &mut rngs);
            cross[0] += rd.tx_distortion[0] * rd.noise[0].conj();
            cross[1] += rd.rx_distortion[0] * rd.noise[0].conj();
            cross[2] += rd.tx_distortion[0] * rd.rx_distortion[0].conj();
        }
        for (i, c) in cross.iter().enumerate() {
            let mean = c / n as f64;
            assert!(mean.norm() < 0.02, "source pair {i} correlated: {mean}");
        }
    }

    #[test]
    fn perfect_hardware_data_is_signal_plus_noise() {
        let mut cfg = test_config(2, 2);
        cfg.n = 0.3;
        let beta = uniform_beta(2, 2, 1.0);
        let eta = [1.0, 0.25];
        let mut rngs = SignalRngs::new(&SeedSpace::new(4), 0);
        let g = draw_channels(&beta, &mut rngs.channel);
        let rx = receive_data(&g, &eta, &cfg, &mut rngs);
        for m in 0..2 {
            let expected: Complex64 = (0..2)
                .map(|k| g.g[m][k] * (eta[k] * cfg.rho_u).sqrt() * rx.symbols[k])
                .sum::<Complex64>()
                + rx.noise[m];
            assert!((rx.y[m] - expected).norm() < 1e-12);
        }
    }
}
