//! Round-trip resonance iteration between base station and mobile target.
//!
//! One iteration `k` radiates `s_bs_out[k]` from the base station, receives
//! `s_mt[k]` on the target, splits off the feedback branch, phase-conjugates
//! it and sends it back, then limits, phase-shifts, conjugates and amplifies
//! it at the base station to form `s_bs_out[k + 1]`. Thermal noise enters at
//! every receiving antenna, mixer and amplifier.
//!
//! The loop is started from thermal noise alone: initialization passes the
//! antenna, mixer and amplifier noise of the base station through its chain.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::channel::{ChannelOperator, ChannelParams, FieldVector};
use crate::circuits::{
    amplify, conjugate, limit, shift_phase, AmplifierParams, ConjugatorParams, DividerParams,
    LimiterParams,
};
use crate::error::{invalid, Error, Result};
use crate::geometry::{ArrayLayout, CarrierSpec};
use crate::lattice::channel_operator;
use crate::noise::{NoiseParams, NoiseSource, Stage};

/// Base-station circuit chain, in signal order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BsChain {
    pub limiter: LimiterParams,
    pub phase_shift: f64,
    pub conjugator: ConjugatorParams,
    pub amplifier: AmplifierParams,
}

impl Default for BsChain {
    fn default() -> Self {
        let amplifier = AmplifierParams::default();
        Self {
            limiter: LimiterParams::default(),
            // the shifter sits ahead of the mixer, so its phase is reversed by
            // the conjugation and cancels the PA lag when equal to it
            phase_shift: amplifier.phase_lag,
            conjugator: ConjugatorParams::default(),
            amplifier,
        }
    }
}

/// Mobile-target feedback chain. `alpha_pd = 0` opens the loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct MtChain {
    pub divider: DividerParams,
    pub conjugator: ConjugatorParams,
}

/// Stopping and acceptance rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceParams {
    pub max_iter: usize,
    /// Relative change of received power regarded as steady.
    pub threshold: f64,
    /// Consecutive steady iterations required.
    pub consecutive: usize,
    /// Required rise of radiated power over the initial noise floor, dB.
    pub floor_margin_db: f64,
    /// Bound on the self-reproduction residual of one noise-free step.
    pub residual_bound: f64,
    /// After the power rule fires, keep iterating (up to `max_iter`) until
    /// the received field itself changes by less than `residual_bound`.
    pub settle_field: bool,
}

impl Default for ConvergenceParams {
    fn default() -> Self {
        Self {
            max_iter: 5000,
            threshold: 1e-3,
            consecutive: 3,
            floor_margin_db: 10.0,
            residual_bound: 1e-3,
            settle_field: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub bs: ArrayLayout,
    pub mt: ArrayLayout,
    pub carrier: CarrierSpec,
    pub channel: ChannelParams,
    pub noise: NoiseParams,
    pub bs_chain: BsChain,
    pub mt_chain: MtChain,
    pub convergence: ConvergenceParams,
    pub runs: usize,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        self.bs_chain.limiter.validate()?;
        self.bs_chain.conjugator.validate()?;
        self.bs_chain.amplifier.validate()?;
        self.mt_chain.conjugator.validate()?;
        let a = self.mt_chain.divider.alpha_pd;
        if !(0.0..1.0).contains(&a) {
            return Err(invalid(format!("feedback ratio must lie in [0, 1), got {a}")));
        }
        let c = &self.convergence;
        if !(c.threshold > 0.0) {
            return Err(invalid(format!("convergence threshold must be > 0, got {}", c.threshold)));
        }
        if c.max_iter < 1 || c.consecutive < 1 {
            return Err(invalid("max_iter and consecutive must be >= 1"));
        }
        if self.runs < 1 {
            return Err(invalid("at least one run is required"));
        }
        Ok(())
    }

    /// Center-to-center distance of the two arrays, m.
    pub fn center_distance(&self) -> f64 {
        (self.mt.center - self.bs.center).norm()
    }

    /// Feedback power factor of the target: divider then mixer.
    pub fn alpha_mt(&self) -> f64 {
        self.mt_chain.divider.alpha_pd * self.mt_chain.conjugator.power_gain()
    }
}

/// Smallest one-way efficiency for which the small-signal round trip gains
/// power: `(alpha_pd (v_lo/2)^2 (v_lo/2)^2 G0)^(-1/2)`.
pub fn loop_gain_threshold(scenario: &Scenario) -> f64 {
    let g = scenario.alpha_mt()
        * scenario.bs_chain.conjugator.power_gain()
        * scenario.bs_chain.amplifier.small_signal_gain();
    g.powf(-0.5)
}

/// One row of the per-iteration power ledger.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub run: u64,
    pub k: usize,
    /// Radiated by the base station in iteration `k`, W.
    pub p_bs: f64,
    /// Received by the target in iteration `k`, W.
    pub p_mt: f64,
    pub eta_ct: f64,
    pub eta_cr: f64,
    /// Power lost over the round trip.
    pub iota: f64,
    /// Power added by the base station for the next iteration.
    pub gamma: f64,
    /// `||s_mt[k] - s_mt[k-1]|| / ||s_mt[k-1]||`, NaN for `k = 0`.
    pub residual: f64,
    pub pa_gain: f64,
    pub limiter_ratio: f64,
}

pub const LEDGER_HEADER: &str = "run,k,P_BS,P_MT,eta_cT,iota,gamma,residual";

impl LedgerRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e}",
            self.run, self.k, self.p_bs, self.p_mt, self.eta_ct, self.iota, self.gamma, self.residual
        )
    }
}

pub fn write_ledger<W: Write>(rows: &[LedgerRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{LEDGER_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.csv())?;
    }
    Ok(())
}

/// Gain/loss pair of one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainLoss {
    pub iota: f64,
    pub gamma: f64,
}

/// `iota = (1 - a eta_cR eta_cT) P_BS[k]`, `gamma = P_BS[k+1] - a eta_cR eta_cT P_BS[k]`.
pub fn gain_loss(alpha_mt: f64, eta_cr: f64, eta_ct: f64, p_bs: f64, p_bs_next: f64) -> GainLoss {
    let returned = alpha_mt * eta_cr * eta_ct * p_bs;
    GainLoss {
        iota: p_bs - returned,
        gamma: p_bs_next - returned,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineState {
    pub run: u64,
    pub k: usize,
    /// Field received on the target in iteration `k - 1`.
    pub s_mt: FieldVector,
    /// Field the base station radiates in iteration `k`.
    pub s_bs_out: FieldVector,
    pub p_bs: f64,
    pub p_mt: f64,
    pub initial_p_bs: f64,
    pub history: Vec<LedgerRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceReport {
    pub run: u64,
    pub converged: bool,
    /// The steady-power stopping rule fired before `max_iter`.
    pub steady: bool,
    /// Iterations until the steady-power rule fired (or `max_iter`).
    pub iterations: usize,
    /// Extra iterations spent letting the field settle afterwards.
    pub settle_iterations: usize,
    pub eta_ct: f64,
    pub eta_cr: f64,
    pub p_bs: f64,
    pub p_mt: f64,
    pub initial_p_bs: f64,
    pub self_reproduction_residual: f64,
    pub time_to_converge: f64,
}

/// Intermediate quantities of one pass around the loop.
struct Pass {
    s_mt: FieldVector,
    s_bs_out: FieldVector,
    eta_cr: f64,
    pa_gain: f64,
    limiter_ratio: f64,
}

pub struct Engine {
    scenario: Scenario,
    /// Base station to target; the reverse direction is its transpose.
    channel: Box<dyn ChannelOperator>,
}

impl std::fmt::Debug for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Engine").field("scenario", &self.scenario).finish_non_exhaustive()
    }
}

impl Engine {
    pub fn new(scenario: Scenario) -> Result<Self> {
        scenario.validate()?;
        let channel = channel_operator(&scenario.bs, &scenario.mt, &scenario.carrier, &scenario.channel)?;
        Ok(Self { scenario, channel })
    }

    /// Engine over an explicit channel, e.g. a dense reference matrix.
    pub fn with_channel(scenario: Scenario, channel: Box<dyn ChannelOperator>) -> Result<Self> {
        scenario.validate()?;
        if channel.tx_len() != scenario.bs.len() || channel.rx_len() != scenario.mt.len() {
            return Err(invalid("channel dimensions do not match the arrays"));
        }
        Ok(Self { scenario, channel })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn channel(&self) -> &dyn ChannelOperator {
        self.channel.as_ref()
    }

    fn z0(&self) -> f64 {
        self.scenario.channel.impedance
    }

    fn variance(&self, nf_db: f64) -> f64 {
        self.scenario
            .noise
            .variance(nf_db, self.scenario.carrier.bandwidth, self.z0())
    }

    fn draw(&self, src: Option<&NoiseSource>, iteration: u64, stage: Stage, len: usize, nf_db: f64) -> Option<Vec<Complex64>> {
        src.map(|s| s.draw(iteration, stage, len, self.variance(nf_db)))
    }

    fn noise_for(&self, run: u64) -> Option<NoiseSource> {
        self.scenario
            .noise
            .enabled
            .then(|| NoiseSource::new(self.scenario.noise.seed, run))
    }

    /// Base-station chain from the received field to the radiated one.
    fn bs_chain(&self, received: &FieldVector, src: Option<&NoiseSource>, iteration: u64) -> (FieldVector, f64, f64) {
        let chain = &self.scenario.bs_chain;
        let n = received.len();
        let (limited, alpha_l) = limit(received, &chain.limiter);
        let shifted = shift_phase(&limited, chain.phase_shift);
        let np = self.draw(src, iteration, Stage::BsConjugator, n, chain.conjugator.noise_figure_db);
        let conj = conjugate(&shifted, &chain.conjugator, np.as_deref());
        let na = self.draw(src, iteration, Stage::BsAmplifier, n, chain.amplifier.noise_figure_db);
        let (out, g) = amplify(&conj, &chain.amplifier, self.z0(), na.as_deref());
        (out, g, alpha_l)
    }

    /// Thermal noise passed once through the base-station chain. The
    /// perturbation is drawn even when loop noise is disabled.
    pub fn initialize(&self, run: u64) -> EngineState {
        let src = NoiseSource::new(self.scenario.noise.seed, run);
        let n = self.scenario.bs.len();
        let nc = src.draw(0, Stage::BsAntenna, n, self.variance(self.scenario.noise.antenna_nf_db));
        let (s_bs_out, _, _) = self.bs_chain(&FieldVector(nc), Some(&src), 0);
        let p_bs = s_bs_out.power(self.z0());
        EngineState {
            run,
            k: 0,
            s_mt: FieldVector::zeros(self.scenario.mt.len()),
            s_bs_out,
            p_bs,
            p_mt: 0.0,
            initial_p_bs: p_bs,
            history: Vec::new(),
        }
    }

    fn pass(&self, s_bs_out: &FieldVector, src: Option<&NoiseSource>, iteration: u64) -> Pass {
        let sc = &self.scenario;
        let m = sc.mt.len();
        let n = sc.bs.len();

        let mut s_mt = FieldVector(self.channel.forward(s_bs_out));
        if let Some(nz) = self.draw(src, iteration, Stage::MtAntenna, m, sc.noise.antenna_nf_db) {
            s_mt.iter_mut().zip(nz).for_each(|(s, n)| *s += n);
        }

        let alpha_pd = sc.mt_chain.divider.alpha_pd;
        let (returned, eta_cr) = if alpha_pd > 0.0 {
            let feedback = s_mt.scaled(Complex64::new(alpha_pd.sqrt(), 0.0));
            let np = self.draw(src, iteration, Stage::MtConjugator, m, sc.mt_chain.conjugator.noise_figure_db);
            let mt_out = conjugate(&feedback, &sc.mt_chain.conjugator, np.as_deref());
            let back = FieldVector(self.channel.reverse(&mt_out));
            let sent = mt_out.power(self.z0());
            let eta = if sent > 0.0 { back.power(self.z0()) / sent } else { 0.0 };
            (back, eta)
        } else {
            (FieldVector::zeros(n), 0.0)
        };

        let mut received = returned;
        if let Some(nz) = self.draw(src, iteration, Stage::BsAntenna, n, sc.noise.antenna_nf_db) {
            received.iter_mut().zip(nz).for_each(|(s, n)| *s += n);
        }
        let (s_bs_out, pa_gain, limiter_ratio) = self.bs_chain(&received, src, iteration);
        Pass {
            s_mt,
            s_bs_out,
            eta_cr,
            pa_gain,
            limiter_ratio,
        }
    }

    /// Advances one full round trip, appending the ledger row for `k`.
    pub fn step(&self, state: &mut EngineState) -> Result<()> {
        let src = self.noise_for(state.run);
        self.step_with(state, src.as_ref())
    }

    /// Same as [`Engine::step`] with loop noise switched off.
    pub fn step_noiseless(&self, state: &mut EngineState) -> Result<()> {
        self.step_with(state, None)
    }

    fn step_with(&self, state: &mut EngineState, src: Option<&NoiseSource>) -> Result<()> {
        let z0 = self.z0();
        let pass = self.pass(&state.s_bs_out, src, state.k as u64 + 1);
        let p_mt = pass.s_mt.power(z0);
        let p_next = pass.s_bs_out.power(z0);
        let p_sat = self.scenario.bs_chain.amplifier.saturation_power;
        if !pass.s_bs_out.is_finite() || !pass.s_mt.is_finite() || !p_next.is_finite() {
            return Err(Error::NumericalDivergence {
                iteration: state.k,
                reason: "non-finite field".into(),
            });
        }
        if p_next > 10.0 * p_sat {
            return Err(Error::NumericalDivergence {
                iteration: state.k,
                reason: format!("radiated power {p_next:.3e} W exceeds ten times saturation"),
            });
        }
        let eta_ct = if state.p_bs > 0.0 { p_mt / state.p_bs } else { 0.0 };
        let gl = gain_loss(self.scenario.alpha_mt(), pass.eta_cr, eta_ct, state.p_bs, p_next);
        let residual = if state.k == 0 {
            f64::NAN
        } else {
            pass.s_mt.relative_distance(&state.s_mt)
        };
        state.history.push(LedgerRow {
            run: state.run,
            k: state.k,
            p_bs: state.p_bs,
            p_mt,
            eta_ct,
            eta_cr: pass.eta_cr,
            iota: gl.iota,
            gamma: gl.gamma,
            residual,
            pa_gain: pass.pa_gain,
            limiter_ratio: pass.limiter_ratio,
        });
        state.k += 1;
        state.s_mt = pass.s_mt;
        state.s_bs_out = pass.s_bs_out;
        state.p_bs = p_next;
        state.p_mt = p_mt;
        Ok(())
    }

    /// Relative change of the received field over one noise-free round trip.
    pub fn self_reproduction_residual(&self, state: &EngineState) -> f64 {
        if state.k == 0 {
            return f64::INFINITY;
        }
        let pass = self.pass(&state.s_bs_out, None, 0);
        pass.s_mt.relative_distance(&state.s_mt)
    }

    /// Iterates run `run` until the received power is steady or `max_iter`
    /// is reached.
    pub fn run_to_convergence(&self, run: u64) -> Result<(ResonanceReport, EngineState)> {
        let conv = &self.scenario.convergence;
        let mut state = self.initialize(run);
        let mut streak = 0;
        let mut steady = false;
        while state.k < conv.max_iter {
            let prev = state.p_mt;
            self.step(&mut state)?;
            if state.k >= 2 {
                let change = (state.p_mt - prev).abs() / prev.max(f64::MIN_POSITIVE);
                streak = if change < conv.threshold { streak + 1 } else { 0 };
                if streak >= conv.consecutive {
                    steady = true;
                    break;
                }
            }
        }
        let iterations = state.k;
        if steady && conv.settle_field {
            // nearly degenerate modes can leave the field drifting at constant power
            while state.k < conv.max_iter
                && self.self_reproduction_residual(&state) >= conv.residual_bound
            {
                self.step(&mut state)?;
            }
        }
        Ok((self.report(&state, steady, iterations), state))
    }

    fn report(&self, state: &EngineState, steady: bool, iterations: usize) -> ResonanceReport {
        let conv = &self.scenario.convergence;
        let residual = self.self_reproduction_residual(state);
        let above_floor = state.p_bs >= state.initial_p_bs * 10f64.powf(conv.floor_margin_db / 10.0);
        let last = state.history.last();
        ResonanceReport {
            run: state.run,
            converged: steady && above_floor && residual < conv.residual_bound,
            steady,
            iterations,
            settle_iterations: state.k - iterations,
            eta_ct: last.map_or(0.0, |r| r.eta_ct),
            eta_cr: last.map_or(0.0, |r| r.eta_cr),
            p_bs: last.map_or(state.p_bs, |r| r.p_bs),
            p_mt: state.p_mt,
            initial_p_bs: state.initial_p_bs,
            self_reproduction_residual: residual,
            time_to_converge: iterations as f64 * 2.0 * self.scenario.center_distance()
                / self.scenario.carrier.speed,
        }
    }

    /// Independent runs `0..scenario.runs`, in parallel.
    pub fn monte_carlo(&self) -> Result<Vec<(ResonanceReport, EngineState)>> {
        (0..self.scenario.runs as u64)
            .into_par_iter()
            .map(|run| self.run_to_convergence(run))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_planar_array, AntennaPattern, Vec3};
    use approx::assert_relative_eq;

    pub(crate) fn scenario(side: usize, distance: f64) -> Scenario {
        let carrier = CarrierSpec::new(30e9, 500e6).unwrap();
        let d = carrier.wavelength / 2.0;
        let p = AntennaPattern::microstrip();
        let bs = build_planar_array(side, side, d, Vec3::zeros(), Vec3::z(), p).unwrap();
        let mt = build_planar_array(side, side, d, Vec3::new(0.0, 0.0, distance), -Vec3::z(), p).unwrap();
        Scenario {
            bs,
            mt,
            channel: ChannelParams::friis(&carrier, 50.0),
            carrier,
            noise: NoiseParams::default(),
            bs_chain: BsChain::default(),
            mt_chain: MtChain::default(),
            convergence: ConvergenceParams::default(),
            runs: 1,
        }
    }

    #[test]
    fn threshold_examples() {
        let mut s = scenario(2, 1.0);
        assert_relative_eq!(loop_gain_threshold(&s), 0.5f64.sqrt(), epsilon = 1e-15);
        s.bs_chain.amplifier.small_signal_gain_db += 10.0 * 2f64.log10();
        assert_relative_eq!(loop_gain_threshold(&s), 0.5, epsilon = 1e-12);
        s.mt_chain.divider.alpha_pd = 0.005;
        assert_relative_eq!(loop_gain_threshold(&s), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn gain_loss_examples() {
        let g = gain_loss(0.0, 0.9, 0.8, 2.0, 3.0);
        assert_eq!((g.iota, g.gamma), (2.0, 3.0));
        let g = gain_loss(0.5, 0.5, 0.5, 8.0, 8.0);
        assert_relative_eq!(g.iota, 7.0);
        assert_relative_eq!(g.gamma, 7.0);
    }

    #[test]
    fn initialization_is_deterministic_and_noise_sized() {
        let s = scenario(4, 1.0);
        let e = Engine::new(s.clone()).unwrap();
        assert_eq!(e.initialize(3), e.initialize(3));
        assert_ne!(e.initialize(3), e.initialize(4));
        assert_eq!(e.initialize(0).k, 0);
    }

    #[test]
    fn open_loop_radiates_only_noise() {
        let mut s = scenario(4, 1.0);
        s.mt_chain.divider.alpha_pd = 0.0;
        let e = Engine::new(s).unwrap();
        let mut st = e.initialize(0);
        e.step(&mut st).unwrap();
        let row = st.history[0];
        assert_eq!(row.eta_cr, 0.0);
        // the next radiated field is one fresh noise pass, so of the same order
        assert!(st.p_bs < 10.0 * st.initial_p_bs && st.p_bs > 0.1 * st.initial_p_bs);
        let mut quiet = st.clone();
        e.step_noiseless(&mut quiet).unwrap();
        assert_eq!(quiet.p_bs, 0.0);
    }

    #[test]
    fn ledger_csv_row() {
        let r = LedgerRow {
            run: 1,
            k: 2,
            p_bs: 1.5,
            p_mt: 0.25,
            eta_ct: 1.0 / 6.0,
            eta_cr: 0.9,
            iota: 1.0,
            gamma: 1.0,
            residual: f64::NAN,
            pa_gain: 1.0,
            limiter_ratio: 1.0,
        };
        let mut buf = Vec::new();
        write_ledger(&[r], &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with(LEDGER_HEADER));
        assert!(s.contains("1,2,1.50000000000e0,2.50000000000e-1,"));
    }

    #[test]
    fn rejects_bad_scenarios() {
        let mut s = scenario(2, 1.0);
        s.convergence.threshold = 0.0;
        assert!(Engine::new(s).is_err());
        let mut s = scenario(2, 1.0);
        s.mt_chain.divider.alpha_pd = 1.0;
        assert!(Engine::new(s).is_err());
        let mut s = scenario(2, 1.0);
        s.convergence.max_iter = 0;
        assert!(Engine::new(s).is_err());
    }
}
