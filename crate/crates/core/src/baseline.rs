//! Single-shot retro-directive beamforming for comparison.
//!
//! The target's demodulator element sends a pilot; every base-station
//! element re-radiates the phase conjugate of what it received, scaled to a
//! configured total power.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelOperator, FieldVector};
use crate::error::{invalid, Error, Result};
use crate::noise::{NoiseSource, Stage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Taper {
    /// Amplitudes proportional to the received pilot amplitudes.
    #[default]
    Matched,
    /// Equal amplitude on every element.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RdbfsConfig {
    /// Pilot element on the target; `None` selects the central element.
    pub pilot_index: Option<usize>,
    /// Total radiated power, W.
    pub total_power: f64,
    pub pilot_power: f64,
    pub taper: Taper,
    /// Antenna-noise variance added to the received pilot, V^2.
    pub pilot_noise_variance: f64,
}

impl Default for RdbfsConfig {
    fn default() -> Self {
        Self {
            pilot_index: None,
            total_power: 20.0,
            pilot_power: 1e-3,
            taper: Taper::Matched,
            pilot_noise_variance: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RdbfsOutcome {
    pub pilot_index: usize,
    pub eta_ct: f64,
    pub p_bs: f64,
    pub p_mt: f64,
    pub bs_field: FieldVector,
    pub mt_field: FieldVector,
}

/// Runs the baseline over `channel` (base station to target). `noise`, when
/// given, supplies the pilot noise draw.
pub fn rdbfs_link(
    channel: &dyn ChannelOperator,
    center: usize,
    impedance: f64,
    config: &RdbfsConfig,
    noise: Option<&NoiseSource>,
) -> Result<RdbfsOutcome> {
    let m = channel.rx_len();
    let pilot_index = config.pilot_index.unwrap_or(center);
    if pilot_index >= m {
        return Err(invalid(format!("pilot element {pilot_index} out of range ({m})")));
    }
    if !(config.total_power > 0.0 && config.total_power.is_finite()) {
        return Err(invalid(format!("total power must be > 0, got {}", config.total_power)));
    }
    if !(config.pilot_power > 0.0) {
        return Err(invalid(format!("pilot power must be > 0, got {}", config.pilot_power)));
    }
    let mut pilot = vec![Complex64::new(0.0, 0.0); m];
    pilot[pilot_index] = Complex64::new((2.0 * impedance * config.pilot_power).sqrt(), 0.0);
    let mut received = channel.reverse(&pilot);
    if let Some(src) = noise {
        let n = src.draw(0, Stage::Pilot, received.len(), config.pilot_noise_variance);
        received.iter_mut().zip(n).for_each(|(r, n)| *r += n);
    }

    let weights: Vec<Complex64> = match config.taper {
        Taper::Matched => received.iter().map(|r| r.conj()).collect(),
        Taper::Uniform => received
            .iter()
            .map(|r| if r.norm() > 0.0 { r.conj() / r.norm() } else { Complex64::new(0.0, 0.0) })
            .collect(),
    };
    let mut bs_field = FieldVector(weights);
    let raw = bs_field.power(impedance);
    if !(raw > 0.0 && raw.is_finite()) {
        return Err(Error::DegeneratePilot);
    }
    bs_field = bs_field.scaled(Complex64::new((config.total_power / raw).sqrt(), 0.0));
    let mt_field = FieldVector(channel.forward(&bs_field));
    let p_bs = bs_field.power(impedance);
    let p_mt = mt_field.power(impedance);
    Ok(RdbfsOutcome {
        pilot_index,
        eta_ct: p_mt / p_bs,
        p_bs,
        p_mt,
        bs_field,
        mt_field,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{build_channel_matrix, ChannelMatrix, ChannelParams};
    use crate::geometry::{build_planar_array, AntennaPattern, CarrierSpec, Vec3};
    use approx::assert_relative_eq;

    fn link(bs_side: usize, mt_side: usize, z: f64) -> ChannelMatrix {
        let c = CarrierSpec::new(30e9, 500e6).unwrap();
        let p = AntennaPattern::microstrip();
        let bs = build_planar_array(bs_side, bs_side, 0.005, Vec3::zeros(), Vec3::z(), p).unwrap();
        let mt = build_planar_array(mt_side, mt_side, 0.005, Vec3::new(0.0, 0.0, z), -Vec3::z(), p).unwrap();
        build_channel_matrix(&bs, &mt, &c, &ChannelParams::friis(&c, 50.0)).unwrap()
    }

    #[test]
    fn single_pair_equals_friis_gain() {
        let h = link(1, 1, 2.0);
        let r = rdbfs_link(&h, 0, 50.0, &RdbfsConfig::default(), None).unwrap();
        assert_relative_eq!(r.eta_ct, h.get(0, 0).norm_sqr(), max_relative = 1e-12);
        assert_relative_eq!(r.p_bs, 20.0, max_relative = 1e-12);
    }

    #[test]
    fn contributions_arrive_in_phase_at_pilot() {
        let h = link(6, 4, 0.8);
        let cfg = RdbfsConfig { taper: Taper::Uniform, ..RdbfsConfig::default() };
        let r = rdbfs_link(&h, 5, 50.0, &cfg, None).unwrap();
        let phases: Vec<f64> = (0..h.cols()).map(|n| (h.get(5, n) * r.bs_field[n]).arg()).collect();
        let spread = phases.iter().cloned().fold(f64::MIN, f64::max) - phases.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread < 1e-9, "{spread}");
    }

    #[test]
    fn degenerate_pilot_and_bad_index() {
        let h = ChannelMatrix::from_entries(1, 2, vec![Complex64::new(0.0, 0.0); 2]).unwrap();
        assert!(matches!(
            rdbfs_link(&h, 0, 50.0, &RdbfsConfig::default(), None),
            Err(Error::DegeneratePilot)
        ));
        assert!(rdbfs_link(&h, 3, 50.0, &RdbfsConfig::default(), None).is_err());
    }
}
