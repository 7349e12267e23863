//! Rate-distortion test channels.
//!
//! Quantizing a Gaussian source for transport over a fronthaul link of
//! capacity `C` bits/s/Hz is modeled by an equivalent noise variance `Q`.
//! Two test channels appear in the system:
//!
//! * the **additive** channel `x_hat = x + q` with
//!   `C = fraction * log2(1 + P/Q)` — used for raw pilot vectors, data
//!   symbols and the per-entry products of the EMCF strategy. `fraction`
//!   is the share of the coherence interval the source occupies
//!   (`K/T` for pilots, `(T - tau)/T` for data).
//! * the **subtractive** channel `g_tilde = g_hat + q` with
//!   `C = (1/T) log2(gamma/Q)` — used for channel estimates, where the
//!   reconstruction variance shrinks to `gamma' = gamma - Q`.
//!
//! A link given zero capacity carries nothing; that is an explicit
//! [`QuantNoise::Dark`] state rather than a huge float, so downstream
//! SINR code can drop the link instead of overflowing.

/// Quantization noise on one link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuantNoise {
    /// Finite noise variance `[W]`.
    Variance(f64),
    /// The link has no capacity; the forwarded signal is fully lost.
    Dark,
}

impl QuantNoise {
    /// Finite variance, or `None` when the link is dark.
    pub fn variance(&self) -> Option<f64> {
        match self {
            QuantNoise::Variance(v) => Some(*v),
            QuantNoise::Dark => None,
        }
    }

    pub fn is_dark(&self) -> bool {
        matches!(self, QuantNoise::Dark)
    }
}

/// Source/capacity description for one additive test channel.
#[derive(Debug, Clone, Copy)]
pub struct TestChannelSpec {
    /// Source power `P` `[W]`.
    pub signal_power: f64,
    /// Link capacity `C` `[bits/s/Hz]`.
    pub capacity: f64,
    /// Prelog share of the coherence interval occupied by the source.
    pub samples_fraction: f64,
}

/// Invert `C = fraction * log2(1 + P/Q)` for the noise variance `Q`.
/// A link with zero capacity — or a source with no samples to carry —
/// is dark.
pub fn distortion_additive(spec: TestChannelSpec) -> QuantNoise {
    debug_assert!(spec.samples_fraction >= 0.0 && spec.samples_fraction <= 1.0);
    debug_assert!(spec.signal_power >= 0.0 && spec.capacity >= 0.0);
    if spec.capacity <= 0.0 || spec.samples_fraction <= 0.0 {
        return QuantNoise::Dark;
    }
    let denom = (spec.capacity / spec.samples_fraction).exp2() - 1.0;
    QuantNoise::Variance(spec.signal_power / denom)
}

/// Capacity consumed by an additive channel with noise `Q` (round trip of
/// [`distortion_additive`]).
pub fn additive_capacity(signal_power: f64, q: f64, samples_fraction: f64) -> f64 {
    samples_fraction * (1.0 + signal_power / q).log2()
}

/// Invert `C_share = (1/T) log2(gamma/Q)` for the subtractive channel:
/// `Q = gamma * 2^(-T * C_share)`. Zero share leaves `Q = gamma`, i.e.
/// nothing of the estimate survives.
pub fn distortion_subtractive(estimate_variance: f64, capacity_share: f64, t: usize) -> f64 {
    debug_assert!(estimate_variance >= 0.0 && capacity_share >= 0.0);
    estimate_variance * (-(t as f64) * capacity_share).exp2()
}

/// Capacity consumed by a subtractive channel (round trip of
/// [`distortion_subtractive`]).
pub fn subtractive_capacity(estimate_variance: f64, q: f64, t: usize) -> f64 {
    (estimate_variance / q).log2() / t as f64
}

/// Baseline distortion of a *real* Gaussian source over capacity `C`,
/// `Q* = P / (2^(2C) - 1)`. Reference only: the system paths all use the
/// complex-symbol forms above, which carry no factor 2.
pub fn real_source_distortion(signal_power: f64, capacity: f64) -> f64 {
    signal_power / ((2.0 * capacity).exp2() - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn additive_examples() {
        // one effective bit halves nothing: Q = P / (2^1 - 1) = P
        let q = distortion_additive(TestChannelSpec {
            signal_power: 3.0,
            capacity: 0.5,
            samples_fraction: 0.5,
        });
        assert_eq!(q, QuantNoise::Variance(3.0));

        // pilot channel: K = 2, T = 200, C_p = 0.1 -> Q = P/(2^10 - 1)
        let q = distortion_additive(TestChannelSpec {
            signal_power: 1.0,
            capacity: 0.1,
            samples_fraction: 2.0 / 200.0,
        });
        match q {
            QuantNoise::Variance(v) => assert!((v - 1.0 / 1023.0).abs() < 1e-15),
            QuantNoise::Dark => panic!("unexpected dark link"),
        }

        // capacity -> infinity kills the noise
        let q = distortion_additive(TestChannelSpec {
            signal_power: 1.0,
            capacity: 500.0,
            samples_fraction: 1.0,
        });
        assert!(q.variance().unwrap() < 1e-100);
        let q = distortion_additive(TestChannelSpec {
            signal_power: 1.0,
            capacity: f64::INFINITY,
            samples_fraction: 1.0,
        });
        assert_eq!(q, QuantNoise::Variance(0.0));

        // zero capacity is a dark link, not a huge variance
        let q = distortion_additive(TestChannelSpec {
            signal_power: 1.0,
            capacity: 0.0,
            samples_fraction: 1.0,
        });
        assert!(q.is_dark());
    }

    #[test]
    fn subtractive_examples() {
        assert_eq!(distortion_subtractive(1.0, 0.0, 200), 1.0);
        assert!((distortion_subtractive(1.0, 0.01, 200) - 0.25).abs() < 1e-15);
        assert!(distortion_subtractive(1.0, 1.0, 200) < 1e-60);
    }

    #[test]
    fn real_source_reference() {
        assert!((real_source_distortion(1.0, 1.0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((real_source_distortion(2.0, 0.5) - 2.0).abs() < 1e-15);
        assert!((real_source_distortion(1.0, 2.0) - 1.0 / 15.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn additive_round_trip(p in 1e-16f64..1e3, c in 1e-3f64..30.0, f in 0.01f64..1.0) {
            let q = distortion_additive(TestChannelSpec {
                signal_power: p,
                capacity: c,
                samples_fraction: f,
            });
            let v = q.variance().unwrap();
            prop_assume!(v > 0.0 && v.is_finite());
            let back = additive_capacity(p, v, f);
            prop_assert!((back - c).abs() <= 1e-10 * c);
        }

        #[test]
        fn subtractive_round_trip(g in 1e-16f64..1e3, share in 1e-5f64..0.2) {
            let t = 200;
            let q = distortion_subtractive(g, share, t);
            prop_assume!(q > 0.0);
            let back = subtractive_capacity(g, q, t);
            prop_assert!((back - share).abs() <= 1e-10 * share);
        }

        #[test]
        fn monotone_in_capacity(p in 1e-6f64..1e3, c in 1e-3f64..20.0) {
            let f = 0.5;
            let q1 = distortion_additive(TestChannelSpec { signal_power: p, capacity: c, samples_fraction: f })
                .variance().unwrap();
            let q2 = distortion_additive(TestChannelSpec { signal_power: p, capacity: c * 1.01, samples_fraction: f })
                .variance().unwrap();
            prop_assert!(q2 < q1);
            // subtractive: reconstruction variance grows with capacity
            let g = 1.0;
            let gp1 = g - distortion_subtractive(g, c / 200.0, 200);
            let gp2 = g - distortion_subtractive(g, c * 1.01 / 200.0, 200);
            prop_assert!(gp2 > gp1);
        }
    }
}
