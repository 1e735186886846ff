//! Loop engine against a hand-rolled dense oracle, plus its run-level
//! guarantees.

use std::f64::consts::PI;

use num_complex::Complex64;
use resonant_beam::channel::{ChannelParams, FieldVector};
use resonant_beam::engine::{BsChain, ConvergenceParams, Engine, MtChain, Scenario};
use resonant_beam::geometry::{build_planar_array, AntennaPattern, CarrierSpec, Vec3};
use resonant_beam::noise::{noise_variance, NoiseParams};

const Z0: f64 = 50.0;
/// Element gain of the oracle's isotropic radiators.
const GAIN: f64 = 2.0;

fn scenario(side: usize, distance: f64, pattern: AntennaPattern, noise: bool) -> Scenario {
    let carrier = CarrierSpec::new(30e9, 500e6).unwrap();
    let d = carrier.wavelength / 2.0;
    let bs = build_planar_array(side, side, d, Vec3::zeros(), Vec3::z(), pattern).unwrap();
    let mt = build_planar_array(side, side, d, Vec3::new(0.0, 0.0, distance), -Vec3::z(), pattern).unwrap();
    Scenario {
        bs,
        mt,
        channel: ChannelParams::friis(&carrier, Z0),
        carrier,
        noise: if noise { NoiseParams::default() } else { NoiseParams::disabled() },
        bs_chain: BsChain::default(),
        mt_chain: MtChain::default(),
        convergence: ConvergenceParams::default(),
        runs: 1,
    }
}

fn power(s: &[Complex64]) -> f64 {
    s.iter().map(|v| v.norm_sqr()).sum::<f64>() / (2.0 * Z0)
}

/// Isotropic free-space loop written out from first principles with the
/// default circuit parameters.
struct Oracle {
    h: Vec<Vec<Complex64>>,
    alpha_pd: f64,
    v_max: f64,
    phase_shift: f64,
    g0: f64,
    p_sat: f64,
    q: f64,
    lag: f64,
}

impl Oracle {
    fn new(sc: &Scenario) -> Self {
        let lambda = sc.carrier.wavelength;
        let k = 2.0 * PI / lambda;
        let h = sc
            .mt
            .positions
            .iter()
            .map(|m| {
                sc.bs
                    .positions
                    .iter()
                    .map(|b| {
                        let l = (m - b).norm();
                        Complex64::from_polar(GAIN * lambda / (4.0 * PI * l), k * l)
                    })
                    .collect()
            })
            .collect();
        Self {
            h,
            alpha_pd: 0.02,
            v_max: 0.2f64.sqrt(),
            phase_shift: PI / 6.0,
            g0: 100.0,
            p_sat: 20.0,
            q: 3.0,
            lag: PI / 6.0,
        }
    }

    fn step(&self, s: &[Complex64]) -> Vec<Complex64> {
        let at_mt: Vec<Complex64> = self
            .h
            .iter()
            .map(|row| row.iter().zip(s).map(|(h, x)| h * x).sum())
            .collect();
        let returned: Vec<Complex64> = at_mt.iter().map(|v| (self.alpha_pd.sqrt() * v).conj()).collect();
        let mut back: Vec<Complex64> = (0..s.len())
            .map(|n| self.h.iter().zip(&returned).map(|(row, r)| row[n] * r).sum())
            .collect();
        let peak = back.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if peak > self.v_max {
            back.iter_mut().for_each(|v| *v *= self.v_max / peak);
        }
        let mixed: Vec<Complex64> = back
            .iter()
            .map(|v| (v * Complex64::from_polar(1.0, self.phase_shift)).conj())
            .collect();
        let p_in = power(&mixed);
        let p_out = self.g0 * p_in / (1.0 + (self.g0 * p_in / self.p_sat).powf(self.q)).powf(1.0 / self.q);
        let gain = Complex64::from_polar((p_out / p_in).sqrt(), self.lag);
        mixed.iter().map(|v| gain * v).collect()
    }
}

#[test]
fn noise_free_loop_matches_dense_oracle() {
    let sc = scenario(6, 0.01, AntennaPattern::isotropic().with_peak_gain(GAIN), false);
    let oracle = Oracle::new(&sc);
    let engine = Engine::new(sc).unwrap();
    let mut state = engine.initialize(0);
    let mut s = state.s_bs_out.0.clone();
    let mut peak = 0.0f64;
    for _ in 0..400 {
        engine.step_noiseless(&mut state).unwrap();
        s = oracle.step(&s);
        let (want, got) = (power(&s), state.p_bs);
        assert!((want - got).abs() <= 1e-9 * want, "k = {}: {got} vs {want}", state.k);
        peak = peak.max(got);
    }
    // the comparison must have exercised the saturating part of the loop
    assert!(peak > 1.0, "peak radiated power {peak}");
    let dist = FieldVector(s).relative_distance(&state.s_bs_out);
    assert!(dist < 1e-9, "field mismatch {dist}");
}

#[test]
fn noise_free_power_rises_until_saturation() {
    let engine = Engine::new(scenario(10, 0.1, AntennaPattern::microstrip(), false)).unwrap();
    let mut state = engine.initialize(3);
    for _ in 0..1500 {
        engine.step_noiseless(&mut state).unwrap();
    }
    let limit = state.p_bs;
    let trace: Vec<f64> = state.history.iter().map(|r| r.p_bs).collect();
    // the first passes strip the non-resonant part of the initial noise
    let start = (0..trace.len()).min_by(|&a, &b| trace[a].total_cmp(&trace[b])).unwrap();
    assert!(start < 20, "power bottomed out at k = {start}");
    for (k, w) in trace.windows(2).enumerate().skip(start) {
        if w[0] >= 0.99 * limit {
            break;
        }
        assert!(w[1] >= w[0], "P_BS fell at k = {k}: {} -> {}", w[0], w[1]);
    }
    assert!(limit > 1.0, "saturated power {limit}");
}

#[test]
fn out_of_range_link_stays_near_the_floor() {
    let engine = Engine::new(scenario(10, 1.0, AntennaPattern::microstrip(), true)).unwrap();
    let (report, _) = engine.run_to_convergence(0).unwrap();
    assert!(!report.converged);
    assert!(report.p_bs <= 100.0 * report.initial_p_bs, "{} vs {}", report.p_bs, report.initial_p_bs);
}

#[test]
fn converged_field_reproduces_itself() {
    let engine = Engine::new(scenario(10, 0.1, AntennaPattern::microstrip(), true)).unwrap();
    let (report, mut state) = engine.run_to_convergence(1).unwrap();
    assert!(report.converged);
    let before = state.s_mt.clone();
    engine.step_noiseless(&mut state).unwrap();
    let change = state.s_mt.relative_distance(&before);
    assert!(change < 1e-3, "one noise-free step moved the field by {change}");
    for row in &state.history {
        assert!((0.0..=1.0).contains(&row.eta_ct) || row.k == 0, "eta_ct {} at k = {}", row.eta_ct, row.k);
    }
}

#[test]
fn identical_seeds_replay_exactly() {
    let engine = Engine::new(scenario(8, 0.08, AntennaPattern::microstrip(), true)).unwrap();
    let (a, sa) = engine.run_to_convergence(4).unwrap();
    let (b, sb) = engine.run_to_convergence(4).unwrap();
    assert_eq!(format!("{a:?}"), format!("{b:?}"));
    assert_eq!(sa.s_bs_out, sb.s_bs_out);
    let (c, _) = engine.run_to_convergence(5).unwrap();
    assert_ne!(a.initial_p_bs, c.initial_p_bs);
}

#[test]
fn initial_noise_power_matches_its_expectation() {
    let mut sc = scenario(20, 1.0, AntennaPattern::microstrip(), true);
    sc.runs = 20;
    let n = sc.bs.len() as f64;
    let engine = Engine::new(sc).unwrap();
    let mean: f64 = (0..20).map(|r| engine.initialize(r).initial_p_bs).sum::<f64>() / 20.0;
    let var = |nf| noise_variance(nf, 500e6, Z0);
    // antenna and mixer noise are amplified by the small-signal gain, PA noise is not
    let expected = n * (100.0 * (var(3.0) + var(6.0)) + var(5.0)) / (2.0 * Z0);
    assert!((mean / expected - 1.0).abs() < 0.05, "{mean:e} vs {expected:e}");
}
