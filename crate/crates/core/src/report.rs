//! Link-level summary shared by the resonant loop and the baseline.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelOperator, FieldVector};
use crate::comms::{bs_noise_variance, snr, spectral_efficiency, BsNoisePath, CommsParams, SnrInputs};
use crate::baseline::{rdbfs_link, RdbfsConfig, RdbfsOutcome};
use crate::engine::{Engine, EngineState, ResonanceReport};
use crate::noise::NoiseSource;
use crate::error::{invalid, Result};
use crate::harvest::{dc_output, HarvestParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum System {
    Resonant,
    Retrodirective,
}

impl System {
    pub fn label(&self) -> &'static str {
        match self {
            System::Resonant => "rf-rbs",
            System::Retrodirective => "rd-bfs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkReport {
    pub system: System,
    pub converged: bool,
    pub iterations: usize,
    pub time_to_converge: f64,
    pub eta_ct: f64,
    pub p_bs: f64,
    pub p_mt: f64,
    pub p_dc: f64,
    /// Power on the demodulator element, W.
    pub p_center: f64,
    pub snr_db: f64,
    pub spectral_efficiency: f64,
}

pub const LINK_HEADER: &str =
    "system,converged,iterations,time_to_converge,eta_cT,P_BS,P_MT,P_dc,p_center,snr_dB,spectral_efficiency";

impl LinkReport {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e}",
            self.system.label(),
            self.converged as u8,
            self.iterations,
            self.time_to_converge,
            self.eta_ct,
            self.p_bs,
            self.p_mt,
            self.p_dc,
            self.p_center,
            self.snr_db,
            self.spectral_efficiency
        )
    }
}

/// Receiver-side parameters needed to turn a received field into DC power
/// and a downlink SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Receiver {
    pub harvest: HarvestParams,
    pub comms: CommsParams,
    pub alpha_pd: f64,
    pub impedance: f64,
    pub bandwidth: f64,
    /// Noise variances at the base-station antenna, mixer and amplifier,
    /// and at the target antenna, V^2.
    pub sigma_c2: f64,
    pub sigma_p2: f64,
    pub sigma_a2: f64,
}

/// DC power, SNR and spectral efficiency for a field received on the target.
pub struct Downlink {
    pub p_dc: f64,
    pub p_center: f64,
    pub snr_db: f64,
    pub spectral_efficiency: f64,
}

pub fn downlink(
    received: &FieldVector,
    pa_gain: f64,
    channel: &dyn ChannelOperator,
    center: usize,
    rx: &Receiver,
) -> Result<Downlink> {
    let center = rx.comms.center.unwrap_or(center);
    if center >= received.len() {
        return Err(invalid(format!("demodulator element {center} out of range")));
    }
    let powers = received.element_powers(rx.impedance);
    let dc = dc_output(&powers, rx.alpha_pd, &rx.harvest, center)?;
    let per_element = bs_noise_variance(pa_gain, rx.sigma_c2, rx.sigma_p2, rx.sigma_a2);
    let sigma_bs2 = match rx.comms.bs_noise_path {
        BsNoisePath::Literal => per_element,
        BsNoisePath::Attenuated => {
            let mut probe = vec![Complex64::new(0.0, 0.0); channel.rx_len()];
            probe[center] = Complex64::new(1.0, 0.0);
            let row = channel.reverse(&probe);
            per_element * row.iter().map(|h| h.norm_sqr()).sum::<f64>()
        }
    };
    let snr_db = snr(&SnrInputs {
        p_center: powers[center],
        alpha_pd: rx.alpha_pd,
        sigma_bs2,
        sigma_c2: rx.sigma_c2,
        demodulator_nf_db: rx.comms.demodulator_nf_db,
        bandwidth: rx.bandwidth,
        impedance: rx.impedance,
    });
    Ok(Downlink {
        p_dc: dc.p_dc,
        p_center: powers[center],
        snr_db,
        spectral_efficiency: spectral_efficiency(snr_db, rx.comms.channel_loss_db),
    })
}

impl Receiver {
    /// Receiver of `engine`'s scenario with the given harvesting and
    /// communication settings.
    pub fn for_engine(engine: &Engine, harvest: HarvestParams, comms: CommsParams) -> Self {
        let sc = engine.scenario();
        let z0 = sc.channel.impedance;
        let w = sc.carrier.bandwidth;
        let v = |nf| sc.noise.variance(nf, w, z0);
        Self {
            harvest,
            comms,
            alpha_pd: sc.mt_chain.divider.alpha_pd,
            impedance: z0,
            bandwidth: w,
            sigma_c2: v(sc.noise.antenna_nf_db),
            sigma_p2: v(sc.bs_chain.conjugator.noise_figure_db),
            sigma_a2: v(sc.bs_chain.amplifier.noise_figure_db),
        }
    }
}

/// Link report of a finished resonant run.
pub fn resonant_link(
    engine: &Engine,
    report: &ResonanceReport,
    state: &EngineState,
    rx: &Receiver,
) -> Result<LinkReport> {
    let pa_gain = state.history.last().map_or(
        engine.scenario().bs_chain.amplifier.small_signal_gain(),
        |r| r.pa_gain,
    );
    let d = downlink(&state.s_mt, pa_gain, engine.channel(), engine.scenario().mt.central_index(), rx)?;
    Ok(LinkReport {
        system: System::Resonant,
        converged: report.converged,
        iterations: report.iterations,
        time_to_converge: report.time_to_converge,
        eta_ct: report.eta_ct,
        p_bs: report.p_bs,
        p_mt: report.p_mt,
        p_dc: d.p_dc,
        p_center: d.p_center,
        snr_db: d.snr_db,
        spectral_efficiency: d.spectral_efficiency,
    })
}

/// Link report of the retro-directive baseline over `engine`'s channel. The
/// pilot picks up antenna noise from run `run` when noise is enabled, and the
/// amplifier gain for the noise budget is the one that radiates
/// `config.total_power`.
pub fn retrodirective_link(
    engine: &Engine,
    config: &RdbfsConfig,
    run: u64,
    rx: &Receiver,
) -> Result<(LinkReport, RdbfsOutcome)> {
    let sc = engine.scenario();
    let center = sc.mt.central_index();
    let mut cfg = *config;
    let src = sc.noise.enabled.then(|| NoiseSource::new(sc.noise.seed, run));
    if src.is_some() {
        cfg.pilot_noise_variance = rx.sigma_c2;
    }
    let out = rdbfs_link(engine.channel(), rx.comms.center.unwrap_or(center), rx.impedance, &cfg, src.as_ref())?;
    let pa_gain = sc.bs_chain.amplifier.gain_at_output(out.p_bs);
    let d = downlink(&out.mt_field, pa_gain, engine.channel(), center, rx)?;
    let report = LinkReport {
        system: System::Retrodirective,
        converged: true,
        iterations: 0,
        time_to_converge: 0.0,
        eta_ct: out.eta_ct,
        p_bs: out.p_bs,
        p_mt: out.p_mt,
        p_dc: d.p_dc,
        p_center: d.p_center,
        snr_db: d.snr_db,
        spectral_efficiency: d.spectral_efficiency,
    };
    Ok((report, out))
}
