//! Scenario parameters and the key/value config file that carries them.
//!
//! A config file is TOML-style `key = value` lines whose keys mirror the
//! [`SystemConfig`] field names; omitted keys fall back to the defaults
//! below (a desk-scale network of 50 access points and 5 users in a
//! 1 km × 1 km wrapped square). `#` starts a comment.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boltzmann constant `[J/K]`.
pub const BOLTZMANN: f64 = 1.381e-23;
/// Reference temperature for thermal noise `[K]`.
pub const NOISE_TEMPERATURE_K: f64 = 290.0;

/// All scalar model parameters of a scenario.
///
/// Powers are in watts and linear scale; `xi_t`/`xi_r` are the transmit
/// (user) and receive (access point) hardware quality factors in `[0, 1]`,
/// where 1 is distortion-free hardware and 0 is hardware that destroys
/// the signal entirely.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    /// Number of access points.
    pub m: usize,
    /// Number of user equipments.
    pub k: usize,
    /// Coherence interval `[samples]`.
    pub t: usize,
    /// Pilot length `[samples]`; the orthogonal-pilot assumption forces `tau == k`.
    pub tau: usize,
    /// Pilot transmit power `[W]`.
    pub rho_p: f64,
    /// Maximum uplink data power per user `[W]`.
    pub rho_u: f64,
    /// User-side hardware quality in `[0, 1]`.
    pub xi_t: f64,
    /// Access-point-side hardware quality in `[0, 1]`.
    pub xi_r: f64,
    /// Noise power `[W]`. Set to 0 to derive it from bandwidth and noise figure.
    pub n: f64,
    /// Side of the square deployment area `[m]`.
    pub d: f64,
    /// System bandwidth `[Hz]`.
    pub bandwidth_hz: f64,
    /// Receiver noise figure `[dB]`.
    pub noise_figure_db: f64,
    /// Carrier frequency `[MHz]`.
    pub carrier_freq_mhz: f64,
    /// Access-point antenna height `[m]`.
    pub h_ap_m: f64,
    /// User antenna height `[m]`.
    pub h_ue_m: f64,
    /// Inner breakpoint of the three-slope path-loss model `[m]`.
    pub d0_m: f64,
    /// Outer breakpoint of the three-slope path-loss model `[m]`.
    pub d1_m: f64,
    /// Shadow-fading standard deviation `[dB]`.
    pub sigma_sh_db: f64,
    /// Fixed power drawn by each access point `[W]`.
    pub p_ap_w: f64,
    /// Fronthaul traffic power cost `[W per Gbit/s]`.
    pub p_bh_w_per_gbps: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            m: 50,
            k: 5,
            t: 200,
            tau: 5,
            rho_p: 0.1,
            rho_u: 0.1,
            xi_t: 1.0,
            xi_r: 1.0,
            n: 0.0,
            d: 1000.0,
            bandwidth_hz: 20e6,
            noise_figure_db: 9.0,
            carrier_freq_mhz: 1900.0,
            h_ap_m: 15.0,
            h_ue_m: 1.65,
            d0_m: 10.0,
            d1_m: 50.0,
            sigma_sh_db: 8.0,
            p_ap_w: 0.2,
            p_bh_w_per_gbps: 0.25,
        }
    }
}

impl SystemConfig {
    /// Desk-scale defaults with the given network size; pilots track `k`.
    pub fn with_size(m: usize, k: usize) -> Self {
        SystemConfig { m, k, tau: k, ..SystemConfig::default() }
            .validated()
            .expect("default parameters are valid")
    }

    /// Parse a config file, fill derived fields, and check invariants.
    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_str(&text)
    }

    /// Parse config text (TOML key/value lines).
    #[allow(clippy::should_implement_trait)]
    pub fn from_str(text: &str) -> Result<Self> {
        let cfg: SystemConfig =
            toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validated()
    }

    /// Fill the derived noise power and enforce the model invariants.
    pub fn validated(mut self) -> Result<Self> {
        if self.n == 0.0 {
            self.n = crate::netmodel::noise_power(&self);
        }
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.m == 0 || self.k == 0 {
            return fail(format!("m = {} and k = {} must both be at least 1", self.m, self.k));
        }
        if self.tau != self.k {
            return Err(Error::PilotLength { tau: self.tau, k: self.k });
        }
        if self.tau < 1 || self.tau > self.t {
            return fail(format!("need 1 <= tau = {} <= t = {}", self.tau, self.t));
        }
        if !(0.0..=1.0).contains(&self.xi_t) || !(0.0..=1.0).contains(&self.xi_r) {
            return fail(format!("quality factors xi_t = {}, xi_r = {} must lie in [0, 1]", self.xi_t, self.xi_r));
        }
        for (name, v) in [
            ("rho_p", self.rho_p),
            ("rho_u", self.rho_u),
            ("n", self.n),
            ("d", self.d),
            ("bandwidth_hz", self.bandwidth_hz),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return fail(format!("{name} = {v} must be positive and finite"));
            }
        }
        Ok(self)
    }

    /// Fraction of the coherence interval left for data, `(T - tau)/T`.
    pub fn data_fraction(&self) -> f64 {
        (self.t - self.tau) as f64 / self.t as f64
    }

    /// Fraction of the coherence interval spent on pilots, `tau/T` (= `K/T`).
    pub fn pilot_fraction(&self) -> f64 {
        self.tau as f64 / self.t as f64
    }

    /// Combined hardware quality `xi_r * xi_t`.
    pub fn xi_product(&self) -> f64 {
        self.xi_r * self.xi_t
    }

    /// Serialize as `key = value` lines, for echoing into output headers.
    pub fn to_kv_lines(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
