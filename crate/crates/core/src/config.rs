//! Scenario configuration.
//!
//! Configs are TOML. Every key may be written as a dotted path at top level
//! (`engine.max_iter = 800`) or inside a table (`[engine]`); omitted keys take
//! the defaults below, and unknown keys are rejected. All quantities are SI.
//!
//! | key | default |
//! |---|---|
//! | `seed` | 1 |
//! | `runs` | 20 |
//! | `carrier.frequency` | 30e9 Hz |
//! | `carrier.bandwidth` | 500e6 Hz |
//! | `carrier.speed` | 299792458 m/s |
//! | `geometry.spacing` | half a wavelength |
//! | `geometry.pattern` | `"microstrip"` |
//! | `geometry.peak_gain` | pi |
//! | `geometry.bs.rows`, `.cols` | 40 |
//! | `geometry.bs.center`, `.normal` | `[0, 0, 0]`, `[0, 0, 1]` |
//! | `geometry.mt.rows`, `.cols` | 40 |
//! | `geometry.mt.center`, `.normal` | `[0, 0, 2]`, `[0, 0, -1]` |
//! | `channel.impedance` | 50 ohm |
//! | `channel.path_loss_exponent` | 2 |
//! | `channel.scaling` | lambda^2 / (16 pi^2) |
//! | `noise.enabled` | true |
//! | `noise.antenna_nf_db`, `conjugator_nf_db`, `amplifier_nf_db`, `demodulator_nf_db` | 3, 6, 5, 7 |
//! | `noise.reference_temperature` | 290 K |
//! | `circuits.limiter.v_max` | sqrt(0.2) V |
//! | `circuits.limiter.mode` | `"uniform"` or `"per-element"` |
//! | `circuits.phase_shift` | the PA phase lag |
//! | `circuits.bs_conjugator.v_lo`, `.phi_lo` | 2 V, 0 |
//! | `circuits.mt_conjugator.v_lo`, `.phi_lo` | 2 V, 0 |
//! | `circuits.amplifier.gain_db` | 20 dB |
//! | `circuits.amplifier.saturation_power` | 20 W |
//! | `circuits.amplifier.smoothness` | 3 |
//! | `circuits.amplifier.phase_lag` | pi/6 |
//! | `circuits.alpha_pd` | 0.02 |
//! | `engine.max_iter` | 5000 |
//! | `engine.conv_threshold` | 1e-3 |
//! | `engine.consecutive` | 3 |
//! | `engine.floor_margin_db` | 10 dB |
//! | `engine.residual_bound` | 1e-3 |
//! | `engine.settle_field` | true |
//! | `harvest.*` | eta_z 0.95, R_L 100, R_g 50, R_s 25, I_s 1e-6, n0 1.05, T 290 |
//! | `comms.channel_loss_db` | 3 dB |
//! | `comms.bs_noise_path` | `"literal"` or `"attenuated"` |
//! | `baseline.taper` | `"matched"` or `"uniform"` |
//! | `baseline.total_power` | converged resonant `P_BS` |
//! | `multiaccess.*` | see [`MultiAccessConfig`] |
//! | `sweep.*` | see [`SweepConfig`] |

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baseline::Taper;
use crate::channel::ChannelParams;
use crate::circuits::{AmplifierParams, ConjugatorParams, DividerParams, LimiterMode, LimiterParams};
use crate::comms::{BsNoisePath, CommsParams};
use crate::engine::{BsChain, ConvergenceParams, MtChain, Scenario};
use crate::error::{ConfigIssue, Error, Result};
use crate::geometry::{build_planar_array, AntennaPattern, CarrierSpec, PatternKind, Vec3, SPEED_OF_LIGHT};
use crate::harvest::HarvestParams;
use crate::noise::NoiseParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub runs: usize,
    pub carrier: CarrierConfig,
    pub geometry: GeometryConfig,
    pub channel: ChannelConfig,
    pub noise: NoiseConfig,
    pub circuits: CircuitsConfig,
    pub engine: EngineConfig,
    pub harvest: HarvestConfig,
    pub comms: CommsConfig,
    pub baseline: BaselineConfig,
    pub multiaccess: MultiAccessConfig,
    pub sweep: SweepConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 1,
            runs: 20,
            carrier: CarrierConfig::default(),
            geometry: GeometryConfig::default(),
            channel: ChannelConfig::default(),
            noise: NoiseConfig::default(),
            circuits: CircuitsConfig::default(),
            engine: EngineConfig::default(),
            harvest: HarvestConfig::default(),
            comms: CommsConfig::default(),
            baseline: BaselineConfig::default(),
            multiaccess: MultiAccessConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CarrierConfig {
    pub frequency: f64,
    pub bandwidth: f64,
    pub speed: f64,
}

impl Default for CarrierConfig {
    fn default() -> Self {
        Self {
            frequency: 30e9,
            bandwidth: 500e6,
            speed: SPEED_OF_LIGHT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArrayConfig {
    pub rows: usize,
    pub cols: usize,
    /// Side-specific defaults apply when omitted; see [`GeometryConfig`].
    pub center: Option<[f64; 3]>,
    pub normal: Option<[f64; 3]>,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        Self { rows: 40, cols: 40, center: None, normal: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    /// Element pitch, m; half a wavelength when omitted.
    pub spacing: Option<f64>,
    pub pattern: PatternKind,
    pub peak_gain: f64,
    pub bs: ArrayConfig,
    pub mt: ArrayConfig,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            spacing: None,
            pattern: PatternKind::Microstrip,
            peak_gain: std::f64::consts::PI,
            bs: ArrayConfig::default(),
            mt: ArrayConfig::default(),
        }
    }
}

impl GeometryConfig {
    pub const BS_CENTER: [f64; 3] = [0.0, 0.0, 0.0];
    pub const BS_NORMAL: [f64; 3] = [0.0, 0.0, 1.0];
    pub const MT_CENTER: [f64; 3] = [0.0, 0.0, 2.0];
    pub const MT_NORMAL: [f64; 3] = [0.0, 0.0, -1.0];

    pub fn bs_center(&self) -> [f64; 3] {
        self.bs.center.unwrap_or(Self::BS_CENTER)
    }

    pub fn bs_normal(&self) -> [f64; 3] {
        self.bs.normal.unwrap_or(Self::BS_NORMAL)
    }

    pub fn mt_center(&self) -> [f64; 3] {
        self.mt.center.unwrap_or(Self::MT_CENTER)
    }

    pub fn mt_normal(&self) -> [f64; 3] {
        self.mt.normal.unwrap_or(Self::MT_NORMAL)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    pub impedance: f64,
    pub path_loss_exponent: f64,
    /// Friis scaling when omitted.
    pub scaling: Option<f64>,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            impedance: 50.0,
            path_loss_exponent: 2.0,
            scaling: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub enabled: bool,
    pub antenna_nf_db: f64,
    pub conjugator_nf_db: f64,
    pub amplifier_nf_db: f64,
    pub demodulator_nf_db: f64,
    pub reference_temperature: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        let n = NoiseParams::default();
        Self {
            enabled: n.enabled,
            antenna_nf_db: n.antenna_nf_db,
            conjugator_nf_db: n.conjugator_nf_db,
            amplifier_nf_db: n.amplifier_nf_db,
            demodulator_nf_db: n.demodulator_nf_db,
            reference_temperature: n.reference_temperature,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimiterConfig {
    pub v_max: f64,
    pub mode: LimiterMode,
}

impl Default for LimiterConfig {
    fn default() -> Self {
        let l = LimiterParams::default();
        Self { v_max: l.v_max, mode: l.mode }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixerConfig {
    pub v_lo: f64,
    pub phi_lo: f64,
}

impl Default for MixerConfig {
    fn default() -> Self {
        Self { v_lo: 2.0, phi_lo: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AmplifierConfig {
    pub gain_db: f64,
    pub saturation_power: f64,
    pub smoothness: f64,
    pub phase_lag: f64,
}

impl Default for AmplifierConfig {
    fn default() -> Self {
        let a = AmplifierParams::default();
        Self {
            gain_db: a.small_signal_gain_db,
            saturation_power: a.saturation_power,
            smoothness: a.smoothness,
            phase_lag: a.phase_lag,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CircuitsConfig {
    pub limiter: LimiterConfig,
    /// Base-station phase shifter, rad; equal to the PA lag when omitted.
    pub phase_shift: Option<f64>,
    pub bs_conjugator: MixerConfig,
    pub mt_conjugator: MixerConfig,
    pub amplifier: AmplifierConfig,
    pub alpha_pd: f64,
}

impl Default for CircuitsConfig {
    fn default() -> Self {
        Self {
            limiter: LimiterConfig::default(),
            phase_shift: None,
            bs_conjugator: MixerConfig::default(),
            mt_conjugator: MixerConfig::default(),
            amplifier: AmplifierConfig::default(),
            alpha_pd: DividerParams::default().alpha_pd,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub max_iter: usize,
    pub conv_threshold: f64,
    pub consecutive: usize,
    pub floor_margin_db: f64,
    pub residual_bound: f64,
    pub settle_field: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        let c = ConvergenceParams::default();
        Self {
            max_iter: c.max_iter,
            conv_threshold: c.threshold,
            consecutive: c.consecutive,
            floor_margin_db: c.floor_margin_db,
            residual_bound: c.residual_bound,
            settle_field: c.settle_field,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarvestConfig {
    pub matching_efficiency: f64,
    pub load_resistance: f64,
    pub input_resistance: f64,
    pub series_resistance: f64,
    pub saturation_current: f64,
    pub ideality: f64,
    pub temperature: f64,
}

impl Default for HarvestConfig {
    fn default() -> Self {
        let h = HarvestParams::default();
        Self {
            matching_efficiency: h.matching_efficiency,
            load_resistance: h.load_resistance,
            input_resistance: h.input_resistance,
            series_resistance: h.series_resistance,
            saturation_current: h.saturation_current,
            ideality: h.ideality,
            temperature: h.temperature,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommsConfig {
    /// Demodulator element; the central element when omitted.
    pub center: Option<usize>,
    pub channel_loss_db: f64,
    pub bs_noise_path: BsNoisePath,
}

impl Default for CommsConfig {
    fn default() -> Self {
        let c = CommsParams::default();
        Self {
            center: c.center,
            channel_loss_db: c.channel_loss_db,
            bs_noise_path: c.bs_noise_path,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub taper: Taper,
    /// Radiated power, W; matched to the resonant system when omitted.
    pub total_power: Option<f64>,
    pub pilot_power: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            taper: Taper::Matched,
            total_power: None,
            pilot_power: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub center: [f64; 3],
    pub priority: f64,
    /// Requested average power, W.
    pub requested: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MultiAccessConfig {
    /// Frame length, s.
    pub frame: f64,
    /// Resonance set-up time per slot, s; taken from the slowest target's
    /// convergence time when omitted.
    pub t_res: Option<f64>,
    pub targets: Vec<TargetConfig>,
    /// Sub-array partition of the base station for FDMA.
    pub sub_rows: usize,
    pub sub_cols: usize,
    pub band_spacing: f64,
}

impl Default for MultiAccessConfig {
    fn default() -> Self {
        Self {
            frame: 1e-4,
            t_res: None,
            targets: vec![
                TargetConfig { center: [0.0, 0.0, 1.0], priority: 1.0, requested: 1.0 },
                TargetConfig { center: [0.2, 0.0, 1.2], priority: 2.0, requested: 1.0 },
                TargetConfig { center: [-0.1, 0.05, 1.2], priority: 1.0, requested: 2.0 },
            ],
            sub_rows: 2,
            sub_cols: 2,
            band_spacing: 500e6,
        }
    }
}

/// Inclusive arithmetic range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..n).map(|i| self.start + i as f64 * self.step).collect()
    }

    fn check(&self, path: &str, issues: &mut Vec<ConfigIssue>) {
        if !(self.step > 0.0 && self.stop >= self.start && self.start.is_finite() && self.stop.is_finite()) {
            issues.push(ConfigIssue::new(path, "needs step > 0 and stop >= start"));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Target distances for the distance sweeps, m.
    pub z: Range,
    /// Distances for the iteration-count study, m.
    pub iteration_z: Range,
    /// Lateral offsets, m, at height `x_height`.
    pub x: Range,
    pub x_height: f64,
    /// Distances shown in the iteration-dynamics and SNR traces, m.
    pub trace_distances: Vec<f64>,
    /// Array sides compared in the iteration-count study.
    pub iteration_sizes: Vec<usize>,
    /// Array sides for the scaling study.
    pub sizes: Vec<usize>,
    /// Fixed target side when only the base station grows.
    pub fixed_mt_side: usize,
    /// Relative precision of the maximum-distance search.
    pub distance_tolerance: f64,
    /// Runs per probed distance in the search; a distance counts as working
    /// when most of them converge.
    pub search_runs: usize,
    /// Grid points per axis of the spatial maps.
    pub map_resolution: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            z: Range { start: 0.5, stop: 4.0, step: 0.1 },
            iteration_z: Range { start: 0.5, stop: 6.0, step: 0.1 },
            x: Range { start: 0.0, stop: 1.5, step: 0.05 },
            x_height: 3.0,
            trace_distances: vec![1.0, 2.0, 3.0],
            iteration_sizes: vec![40, 50],
            sizes: vec![20, 30, 40, 50],
            fixed_mt_side: 40,
            distance_tolerance: 5e-3,
            search_runs: 3,
            map_resolution: 121,
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| {
            let span = e.span().map(|s| format!("at byte {}", s.start)).unwrap_or_default();
            Error::Config(vec![ConfigIssue::new(
                if span.is_empty() { "<input>".to_string() } else { span },
                e.message().to_string(),
            )])
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(vec![ConfigIssue::new(path.display().to_string(), e.to_string())])
        })?;
        Self::from_toml(&text)
    }

    pub fn wavelength(&self) -> f64 {
        self.carrier.speed / self.carrier.frequency
    }

    pub fn spacing(&self) -> f64 {
        self.geometry.spacing.unwrap_or(self.wavelength() / 2.0)
    }

    /// Same config with every optional value filled in.
    pub fn normalized(&self) -> Config {
        let mut c = self.clone();
        c.geometry.spacing = Some(self.spacing());
        c.geometry.bs.center = Some(self.geometry.bs_center());
        c.geometry.bs.normal = Some(self.geometry.bs_normal());
        c.geometry.mt.center = Some(self.geometry.mt_center());
        c.geometry.mt.normal = Some(self.geometry.mt_normal());
        c.channel.scaling = Some(self.channel_params().scaling);
        c.circuits.phase_shift = Some(self.circuits.phase_shift.unwrap_or(self.circuits.amplifier.phase_lag));
        c
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// First 16 hex digits of the SHA-256 of the normalized config.
    pub fn hash(&self) -> String {
        let text = self.normalized().to_toml();
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Every violated constraint, addressed by its dotted key.
    pub fn validate(&self) -> Result<()> {
        let mut issues = Vec::new();
        let mut positive = |path: &str, v: f64| {
            if !(v > 0.0 && v.is_finite()) {
                issues.push(ConfigIssue::new(path, format!("must be > 0, got {v}")));
            }
        };
        positive("carrier.frequency", self.carrier.frequency);
        positive("carrier.bandwidth", self.carrier.bandwidth);
        positive("carrier.speed", self.carrier.speed);
        if let Some(s) = self.geometry.spacing {
            positive("geometry.spacing", s);
        }
        positive("channel.impedance", self.channel.impedance);
        if let Some(s) = self.channel.scaling {
            positive("channel.scaling", s);
        }
        positive("circuits.limiter.v_max", self.circuits.limiter.v_max);
        positive("circuits.bs_conjugator.v_lo", self.circuits.bs_conjugator.v_lo);
        positive("circuits.mt_conjugator.v_lo", self.circuits.mt_conjugator.v_lo);
        positive("circuits.amplifier.gain_db", self.circuits.amplifier.gain_db);
        positive("circuits.amplifier.saturation_power", self.circuits.amplifier.saturation_power);
        positive("circuits.amplifier.smoothness", self.circuits.amplifier.smoothness);
        positive("engine.conv_threshold", self.engine.conv_threshold);
        positive("engine.residual_bound", self.engine.residual_bound);
        positive("noise.reference_temperature", self.noise.reference_temperature);
        positive("harvest.load_resistance", self.harvest.load_resistance);
        positive("harvest.input_resistance", self.harvest.input_resistance);
        positive("harvest.series_resistance", self.harvest.series_resistance);
        positive("harvest.saturation_current", self.harvest.saturation_current);
        positive("harvest.ideality", self.harvest.ideality);
        positive("harvest.temperature", self.harvest.temperature);
        positive("baseline.pilot_power", self.baseline.pilot_power);
        if let Some(p) = self.baseline.total_power {
            positive("baseline.total_power", p);
        }
        positive("multiaccess.frame", self.multiaccess.frame);
        positive("sweep.distance_tolerance", self.sweep.distance_tolerance);

        if !(self.geometry.peak_gain >= 0.0 && self.geometry.peak_gain.is_finite()) {
            issues.push(ConfigIssue::new("geometry.peak_gain", "must be >= 0"));
        }
        let g = &self.geometry;
        for (name, a, center, normal) in [
            ("bs", &g.bs, g.bs_center(), g.bs_normal()),
            ("mt", &g.mt, g.mt_center(), g.mt_normal()),
        ] {
            if a.rows == 0 || a.cols == 0 {
                issues.push(ConfigIssue::new(format!("geometry.{name}.rows"), "rows and cols must be >= 1"));
            }
            let n = Vec3::from(normal).norm();
            if (n - 1.0).abs() > 1e-9 {
                issues.push(ConfigIssue::new(format!("geometry.{name}.normal"), format!("must be a unit vector, |n| = {n}")));
            }
            if !center.iter().all(|c| c.is_finite()) {
                issues.push(ConfigIssue::new(format!("geometry.{name}.center"), "must be finite"));
            }
        }
        if !(self.channel.path_loss_exponent >= 2.0 && self.channel.path_loss_exponent.is_finite()) {
            issues.push(ConfigIssue::new("channel.path_loss_exponent", "must be >= 2"));
        }
        for (path, nf) in [
            ("noise.antenna_nf_db", self.noise.antenna_nf_db),
            ("noise.conjugator_nf_db", self.noise.conjugator_nf_db),
            ("noise.amplifier_nf_db", self.noise.amplifier_nf_db),
            ("noise.demodulator_nf_db", self.noise.demodulator_nf_db),
        ] {
            if !(nf >= 0.0 && nf.is_finite()) {
                issues.push(ConfigIssue::new(path, format!("noise figure must be >= 0 dB, got {nf}")));
            }
        }
        if !(self.circuits.alpha_pd > 0.0 && self.circuits.alpha_pd < 1.0) {
            issues.push(ConfigIssue::new(
                "circuits.alpha_pd",
                format!("divider feedback ratio must lie in (0, 1), got {}", self.circuits.alpha_pd),
            ));
        }
        if !(self.harvest.matching_efficiency > 0.0 && self.harvest.matching_efficiency <= 1.0) {
            issues.push(ConfigIssue::new("harvest.matching_efficiency", "must lie in (0, 1]"));
        }
        if self.engine.max_iter < 1 {
            issues.push(ConfigIssue::new("engine.max_iter", "must be >= 1"));
        }
        if self.engine.consecutive < 1 {
            issues.push(ConfigIssue::new("engine.consecutive", "must be >= 1"));
        }
        if self.runs < 1 {
            issues.push(ConfigIssue::new("runs", "must be >= 1"));
        }
        if let Some(c) = self.comms.center {
            let m = self.geometry.mt.rows * self.geometry.mt.cols;
            if c >= m {
                issues.push(ConfigIssue::new("comms.center", format!("element {c} out of range ({m})")));
            }
        }
        if let Some(t) = self.multiaccess.t_res {
            if !(t >= 0.0 && t < self.multiaccess.frame) {
                issues.push(ConfigIssue::new("multiaccess.t_res", "must lie in [0, frame)"));
            }
        }
        if self.multiaccess.sub_rows == 0
            || self.multiaccess.sub_cols == 0
            || self.multiaccess.sub_rows > self.geometry.bs.rows
            || self.multiaccess.sub_cols > self.geometry.bs.cols
        {
            issues.push(ConfigIssue::new("multiaccess.sub_rows", "partition does not fit the base-station array"));
        }
        for (i, t) in self.multiaccess.targets.iter().enumerate() {
            if !(t.priority >= 0.0 && t.requested >= 0.0) {
                issues.push(ConfigIssue::new(format!("multiaccess.targets[{i}]"), "priority and requested must be >= 0"));
            }
        }
        self.sweep.z.check("sweep.z", &mut issues);
        self.sweep.iteration_z.check("sweep.iteration_z", &mut issues);
        self.sweep.x.check("sweep.x", &mut issues);
        if self.sweep.sizes.iter().chain(&self.sweep.iteration_sizes).any(|s| *s == 0) || self.sweep.fixed_mt_side == 0 {
            issues.push(ConfigIssue::new("sweep.sizes", "array sides must be >= 1"));
        }
        if self.sweep.search_runs == 0 {
            issues.push(ConfigIssue::new("sweep.search_runs", "must be >= 1"));
        }
        if self.sweep.map_resolution < 2 {
            issues.push(ConfigIssue::new("sweep.map_resolution", "must be >= 2"));
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(issues))
        }
    }

    pub fn carrier_spec(&self) -> Result<CarrierSpec> {
        CarrierSpec::with_speed(self.carrier.frequency, self.carrier.bandwidth, self.carrier.speed)
    }

    pub fn channel_params(&self) -> ChannelParams {
        let lambda = self.wavelength();
        ChannelParams {
            path_loss_exponent: self.channel.path_loss_exponent,
            scaling: self
                .channel
                .scaling
                .unwrap_or(lambda * lambda / (16.0 * std::f64::consts::PI.powi(2))),
            impedance: self.channel.impedance,
        }
    }

    pub fn pattern(&self) -> AntennaPattern {
        AntennaPattern {
            kind: self.geometry.pattern,
            peak_gain: self.geometry.peak_gain,
        }
    }

    pub fn noise_params(&self) -> NoiseParams {
        NoiseParams {
            enabled: self.noise.enabled,
            antenna_nf_db: self.noise.antenna_nf_db,
            conjugator_nf_db: self.noise.conjugator_nf_db,
            amplifier_nf_db: self.noise.amplifier_nf_db,
            demodulator_nf_db: self.noise.demodulator_nf_db,
            reference_temperature: self.noise.reference_temperature,
            seed: self.seed,
        }
    }

    pub fn bs_chain(&self) -> BsChain {
        let c = &self.circuits;
        let nf = &self.noise;
        BsChain {
            limiter: LimiterParams { v_max: c.limiter.v_max, mode: c.limiter.mode },
            phase_shift: c.phase_shift.unwrap_or(c.amplifier.phase_lag),
            conjugator: ConjugatorParams {
                v_lo: c.bs_conjugator.v_lo,
                phi_lo: c.bs_conjugator.phi_lo,
                noise_figure_db: nf.conjugator_nf_db,
            },
            amplifier: AmplifierParams {
                small_signal_gain_db: c.amplifier.gain_db,
                saturation_power: c.amplifier.saturation_power,
                smoothness: c.amplifier.smoothness,
                phase_lag: c.amplifier.phase_lag,
                noise_figure_db: nf.amplifier_nf_db,
            },
        }
    }

    pub fn mt_chain(&self) -> MtChain {
        MtChain {
            divider: DividerParams { alpha_pd: self.circuits.alpha_pd },
            conjugator: ConjugatorParams {
                v_lo: self.circuits.mt_conjugator.v_lo,
                phi_lo: self.circuits.mt_conjugator.phi_lo,
                noise_figure_db: self.noise.conjugator_nf_db,
            },
        }
    }

    pub fn convergence(&self) -> ConvergenceParams {
        let e = &self.engine;
        ConvergenceParams {
            max_iter: e.max_iter,
            threshold: e.conv_threshold,
            consecutive: e.consecutive,
            floor_margin_db: e.floor_margin_db,
            residual_bound: e.residual_bound,
            settle_field: e.settle_field,
        }
    }

    pub fn harvest_params(&self) -> HarvestParams {
        let h = &self.harvest;
        HarvestParams {
            matching_efficiency: h.matching_efficiency,
            load_resistance: h.load_resistance,
            input_resistance: h.input_resistance,
            series_resistance: h.series_resistance,
            saturation_current: h.saturation_current,
            ideality: h.ideality,
            temperature: h.temperature,
        }
    }

    pub fn comms_params(&self) -> CommsParams {
        CommsParams {
            center: self.comms.center,
            demodulator_nf_db: self.noise.demodulator_nf_db,
            channel_loss_db: self.comms.channel_loss_db,
            bs_noise_path: self.comms.bs_noise_path,
        }
    }

    /// The configured scenario.
    pub fn scenario(&self) -> Result<Scenario> {
        let g = &self.geometry;
        self.scenario_with(
            (g.bs.rows, g.bs.cols),
            (g.mt.rows, g.mt.cols),
            Vec3::from(g.mt_center()),
        )
    }

    /// The configured scenario with other array sizes and target position.
    pub fn scenario_with(&self, bs_size: (usize, usize), mt_size: (usize, usize), mt_center: Vec3) -> Result<Scenario> {
        let carrier = self.carrier_spec()?;
        let d = self.spacing();
        let p = self.pattern();
        let g = &self.geometry;
        let bs = build_planar_array(bs_size.0, bs_size.1, d, Vec3::from(g.bs_center()), Vec3::from(g.bs_normal()), p)?;
        let mt = build_planar_array(mt_size.0, mt_size.1, d, mt_center, Vec3::from(g.mt_normal()), p)?;
        Ok(Scenario {
            bs,
            mt,
            carrier,
            channel: self.channel_params(),
            noise: self.noise_params(),
            bs_chain: self.bs_chain(),
            mt_chain: self.mt_chain(),
            convergence: self.convergence(),
            runs: self.runs,
        })
    }
}
