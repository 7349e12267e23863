//! Network geometry, large-scale fading and noise power.
//!
//! Access points and users are dropped uniformly at random on a
//! `D × D` square that wraps around (a torus), so no node sits near an
//! artificial boundary. Distances feed a three-slope path-loss model with
//! log-normal shadowing; the resulting linear-scale coefficients
//! `beta[m][k]` are the only thing downstream modules ever see.

use rand::Rng;
use serde::Serialize;

use crate::config::{SystemConfig, BOLTZMANN, NOISE_TEMPERATURE_K};
use crate::rng::{real_normal, SeedSpace, StreamLabel};

/// Node positions, all coordinates in `[0, D)`.
#[derive(Debug, Clone, Serialize)]
pub struct Layout {
    pub ap: Vec<[f64; 2]>,
    pub ue: Vec<[f64; 2]>,
}

/// M×K large-scale fading coefficients in linear scale, `beta[m][k] > 0`.
#[derive(Debug, Clone)]
pub struct LargeScaleMap {
    pub beta: Vec<Vec<f64>>,
}

impl LargeScaleMap {
    pub fn m(&self) -> usize {
        self.beta.len()
    }

    pub fn k(&self) -> usize {
        self.beta.first().map_or(0, |row| row.len())
    }

    /// `sum_k beta[m][k]` for one access point.
    pub fn row_sum(&self, m: usize) -> f64 {
        self.beta[m].iter().sum()
    }
}

/// Drop `M` access points and `K` users i.i.d. uniform on the square.
pub fn place_nodes(config: &SystemConfig, seed: u64) -> Layout {
    let mut rng = SeedSpace::new(seed).stream(StreamLabel::Placement, 0);
    let mut draw = |count: usize| {
        (0..count)
            .map(|_| [rng.gen::<f64>() * config.d, rng.gen::<f64>() * config.d])
            .collect::<Vec<_>>()
    };
    Layout { ap: draw(config.m), ue: draw(config.k) }
}

/// Torus distance on the wrapped square: each axis takes the shorter way
/// around, then the axes combine Euclideanly. Bounded by `D/sqrt(2)`.
pub fn wrapped_distance(a: [f64; 2], b: [f64; 2], d: f64) -> f64 {
    let mut acc = 0.0;
    for axis in 0..2 {
        let delta = (a[axis] - b[axis]).abs();
        let wrapped = delta.min(d - delta);
        acc += wrapped * wrapped;
    }
    acc.sqrt()
}

/// Frequency/antenna-height constant `L` of the three-slope model `[dB]`.
pub fn path_loss_constant_db(config: &SystemConfig) -> f64 {
    let log_f = config.carrier_freq_mhz.log10();
    46.3 + 33.9 * log_f - 13.82 * config.h_ap_m.log10() - (1.1 * log_f - 0.7) * config.h_ue_m
        + (1.56 * log_f - 0.8)
}

/// Three-slope path loss `[dB]` at distance `d` meters.
///
/// Exponent 3.5 beyond `d1`, 2 between `d0` and `d1`, constant inside
/// `d0`. `d == d1` falls in the middle branch, and the branch formulas
/// are applied exactly as written. Distances enter the logarithms in
/// kilometers: the constant `L` is a COST-231 Hata term, which is
/// normalized for km (metre arguments would sink every link tens of dB
/// below the thermal floor).
pub fn path_loss_db(d: f64, config: &SystemConfig) -> f64 {
    let l = path_loss_constant_db(config);
    let d_km = d / 1000.0;
    let (d0, d1) = (config.d0_m / 1000.0, config.d1_m / 1000.0);
    if d_km <= d0 {
        -l - 10.0 * (d1.powf(1.5) * d0 * d0).log10()
    } else if d_km <= d1 {
        -l - 10.0 * (d1.powf(1.5) * d_km * d_km).log10()
    } else {
        -l - 10.0 * d_km.powf(3.5).log10()
    }
}

/// Large-scale coefficients: path loss plus `sigma_sh` dB of log-normal
/// shadowing, i.i.d. across (ap, ue) pairs, converted to linear scale.
pub fn large_scale(layout: &Layout, config: &SystemConfig, seed: u64) -> LargeScaleMap {
    let mut rng = SeedSpace::new(seed).stream(StreamLabel::Shadowing, 0);
    let beta = layout
        .ap
        .iter()
        .map(|&ap| {
            layout
                .ue
                .iter()
                .map(|&ue| {
                    let dist = wrapped_distance(ap, ue, config.d);
                    let db = path_loss_db(dist, config)
                        + real_normal(&mut rng, config.sigma_sh_db);
                    10f64.powf(db / 10.0)
                })
                .collect()
        })
        .collect();
    LargeScaleMap { beta }
}

/// Thermal noise power `N = B * k_B * T0 * NF` `[W]`.
pub fn noise_power(config: &SystemConfig) -> f64 {
    let nf = 10f64.powf(config.noise_figure_db / 10.0);
    config.bandwidth_hz * BOLTZMANN * NOISE_TEMPERATURE_K * nf
}

/// A fully materialized deterministic scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: SystemConfig,
    pub layout: Layout,
    pub beta: LargeScaleMap,
}

impl Scenario {
    /// Geometry and shadowing for `(config, seed)`; bit-reproducible.
    pub fn generate(config: SystemConfig, seed: u64) -> Scenario {
        let layout = place_nodes(&config, seed);
        let beta = large_scale(&layout, &config, seed);
        Scenario { config, layout, beta }
    }
}
