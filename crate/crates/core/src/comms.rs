//! Downlink SNR and spectral efficiency at the target's demodulator element.
//!
//! Only noise injected during the current round trip is counted; noise that
//! has circulated from earlier iterations is treated as part of the signal.

use serde::{Deserialize, Serialize};

use crate::noise::{noise_variance_at, REFERENCE_TEMPERATURE};

/// Reported in place of `-inf` dB when no power reaches the demodulator.
pub const SNR_FLOOR_DB: f64 = -300.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BsNoisePath {
    /// The base-station noise term enters the SNR as received, without path
    /// loss.
    #[default]
    Literal,
    /// The base-station noise is scaled by the forward link efficiency before
    /// reaching the target element.
    Attenuated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommsParams {
    /// Demodulator element; `None` selects the array's central element.
    pub center: Option<usize>,
    pub demodulator_nf_db: f64,
    /// Implementation loss subtracted from the SNR, dB.
    pub channel_loss_db: f64,
    pub bs_noise_path: BsNoisePath,
}

impl Default for CommsParams {
    fn default() -> Self {
        Self {
            center: None,
            demodulator_nf_db: 7.0,
            channel_loss_db: 3.0,
            bs_noise_path: BsNoisePath::Literal,
        }
    }
}

/// Per-element noise variance radiated by the base station:
/// `G_a (sigma_c^2 + sigma_p^2) + sigma_a^2`.
pub fn bs_noise_variance(pa_gain: f64, sigma_c2: f64, sigma_p2: f64, sigma_a2: f64) -> f64 {
    pa_gain * sigma_c2 + pa_gain * sigma_p2 + sigma_a2
}

/// Terms of the SNR expression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrInputs {
    /// Power received on the demodulator element, W.
    pub p_center: f64,
    pub alpha_pd: f64,
    /// Base-station noise reaching the element, V^2.
    pub sigma_bs2: f64,
    /// Antenna noise of the element, V^2.
    pub sigma_c2: f64,
    pub demodulator_nf_db: f64,
    pub bandwidth: f64,
    pub impedance: f64,
}

/// SNR in dB; [`SNR_FLOOR_DB`] for zero received power.
pub fn snr(inp: &SnrInputs) -> f64 {
    let payload = 1.0 - inp.alpha_pd;
    let signal = payload * 2.0 * inp.impedance * inp.p_center;
    if !(signal > 0.0) {
        return SNR_FLOOR_DB;
    }
    let demod = noise_variance_at(inp.demodulator_nf_db, inp.bandwidth, inp.impedance, REFERENCE_TEMPERATURE);
    let noise = payload * inp.sigma_bs2 + inp.sigma_c2 + demod;
    10.0 * (signal / noise).log10()
}

/// `log2(1 + 10^((snr - loss) / 10))`, bps/Hz.
pub fn spectral_efficiency(snr_db: f64, loss_db: f64) -> f64 {
    (10f64.powf(0.1 * (snr_db - loss_db))).ln_1p() / std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::noise_variance;
    use approx::assert_relative_eq;

    fn table_inputs(p_center: f64) -> SnrInputs {
        let (w, z0) = (500e6, 50.0);
        let sc = noise_variance(3.0, w, z0);
        let sp = noise_variance(6.0, w, z0);
        let sa = noise_variance(5.0, w, z0);
        SnrInputs {
            p_center,
            alpha_pd: 0.02,
            sigma_bs2: bs_noise_variance(100.0, sc, sp, sa),
            sigma_c2: sc,
            demodulator_nf_db: 7.0,
            bandwidth: w,
            impedance: z0,
        }
    }

    #[test]
    fn bs_noise_examples() {
        let v = bs_noise_variance(100.0, 3.99e-10, 7.97e-10, 6.33e-10);
        assert_relative_eq!(v, 1.20233e-7, max_relative = 1e-5);
        assert_eq!(bs_noise_variance(0.0, 1.0, 2.0, 3.0), 3.0);
        assert_eq!(bs_noise_variance(0.0, 0.0, 0.0, 0.0), 0.0);
    }

    #[test]
    fn snr_at_three_milliwatts() {
        let s = snr(&table_inputs(3e-3));
        assert!(s > 63.5 && s < 65.0, "{s}");
        assert_eq!(snr(&table_inputs(0.0)), SNR_FLOOR_DB);
        assert!(snr(&table_inputs(4e-3)) > s);
    }

    #[test]
    fn spectral_efficiency_examples() {
        assert_relative_eq!(spectral_efficiency(68.0, 3.0), 21.592_533_072_988_01, max_relative = 1e-13);
        assert_relative_eq!(spectral_efficiency(3.0, 3.0), 1.0, epsilon = 1e-15);
        assert_relative_eq!(spectral_efficiency(40.0, 5.0), spectral_efficiency(35.0, 0.0), epsilon = 1e-12);
    }
}
