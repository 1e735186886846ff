//! Thermal noise parameters and addressable Gaussian noise draws.
//!
//! Every draw is keyed by `(seed, run, iteration, stage)`: the ChaCha key is
//! built from the seed and run id and the stream id from the iteration and
//! stage, so any single noise vector of any experiment can be regenerated in
//! isolation.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Reference noise temperature, K.
pub const REFERENCE_TEMPERATURE: f64 = 290.0;

/// Noise figures of the receive chain stages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub enabled: bool,
    /// Antenna reception, dB.
    pub antenna_nf_db: f64,
    /// Phase-conjugate mixer, dB.
    pub conjugator_nf_db: f64,
    /// Power amplifier, dB.
    pub amplifier_nf_db: f64,
    /// Demodulator, dB.
    pub demodulator_nf_db: f64,
    pub reference_temperature: f64,
    pub seed: u64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            enabled: true,
            antenna_nf_db: 3.0,
            conjugator_nf_db: 6.0,
            amplifier_nf_db: 5.0,
            demodulator_nf_db: 7.0,
            reference_temperature: REFERENCE_TEMPERATURE,
            seed: 1,
        }
    }
}

impl NoiseParams {
    pub fn disabled() -> Self {
        Self {
            enabled: false,
            ..Self::default()
        }
    }

    pub fn variance(&self, nf_db: f64, bandwidth: f64, impedance: f64) -> f64 {
        noise_variance_at(nf_db, bandwidth, impedance, self.reference_temperature)
    }
}

/// Complex noise variance `2 Z0 k T0 F W` of a stage with noise figure
/// `nf_db`, in V^2, at the 290 K reference temperature.
pub fn noise_variance(nf_db: f64, bandwidth: f64, impedance: f64) -> f64 {
    noise_variance_at(nf_db, bandwidth, impedance, REFERENCE_TEMPERATURE)
}

pub fn noise_variance_at(nf_db: f64, bandwidth: f64, impedance: f64, temperature: f64) -> f64 {
    2.0 * impedance * BOLTZMANN * temperature * 10f64.powf(nf_db / 10.0) * bandwidth
}

/// Where in the loop a noise vector is injected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Stage {
    MtAntenna = 0,
    MtConjugator = 1,
    BsAntenna = 2,
    BsConjugator = 3,
    BsAmplifier = 4,
    Pilot = 5,
}

const STAGES_PER_ITERATION: u64 = 8;

/// Deterministic source of circular complex Gaussian vectors for one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseSource {
    seed: u64,
    run: u64,
}

impl NoiseSource {
    pub fn new(seed: u64, run: u64) -> Self {
        Self { seed, run }
    }

    pub fn run(&self) -> u64 {
        self.run
    }

    /// `len` i.i.d. samples of CN(0, `variance`).
    pub fn draw(&self, iteration: u64, stage: Stage, len: usize, variance: f64) -> Vec<Complex64> {
        if variance == 0.0 {
            return vec![Complex64::new(0.0, 0.0); len];
        }
        let mut rng = self.rng(iteration, stage);
        let scale = (variance / 2.0).sqrt();
        (0..len)
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re * scale, im * scale)
            })
            .collect()
    }

    fn rng(&self, iteration: u64, stage: Stage) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.run.to_le_bytes());
        key[16..24].copy_from_slice(b"rbsnoise");
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(iteration.wrapping_mul(STAGES_PER_ITERATION) + stage as u64);
        rng
    }
}
