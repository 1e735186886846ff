//! Rectifier operating points against a plain bisection oracle.

use resonant_beam::harvest::{conversion_efficiency, solve_rectifier, HarvestParams, Rectifier, ELECTRON_CHARGE};
use resonant_beam::noise::BOLTZMANN;

/// `ln I0(x)` from the power series, summed in log space so large
/// arguments stay finite.
fn ln_i0_series(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let ln_y = (x * x / 4.0).ln();
    let mut logs = vec![0.0f64];
    let mut k = 0.0;
    loop {
        k += 1.0;
        let next = logs[logs.len() - 1] + ln_y - 2.0 * f64::ln(k);
        logs.push(next);
        if k > x && next < logs[0].max(logs[(x / 2.0) as usize]) - 60.0 {
            break;
        }
    }
    let peak = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    peak + logs.iter().map(|l| (l - peak).exp()).sum::<f64>().ln()
}

/// Output voltage of the doubler by 300 bisection steps.
fn doubler_oracle(p_inc: f64, h: &HarvestParams) -> f64 {
    let vt = h.ideality * BOLTZMANN * h.temperature / ELECTRON_CHARGE;
    let (rg, rl) = (2.0 * h.input_resistance, h.load_resistance / 2.0);
    let p_acc = h.matching_efficiency * p_inc;
    let rhs = ln_i0_series((8.0 * rg * p_acc).sqrt() / vt);
    let f = |v: f64| (1.0 + v / (rl * h.saturation_current)).ln() + v * (1.0 + (rg + h.series_resistance) / rl) / vt - rhs;
    let (mut lo, mut hi) = (0.0, 100.0);
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn doubler_at_ten_milliwatts() {
    let h = HarvestParams::default();
    let want = doubler_oracle(10e-3, &h);
    // frozen oracle value
    assert!((want - FROZEN_V0_10MW).abs() < 1e-9, "oracle drifted: {want}");
    let got = solve_rectifier(10e-3, &h, Rectifier::Doubler).unwrap();
    assert!((got.v0 - want).abs() <= 1e-9 * want, "{} vs {want}", got.v0);
    let eta = conversion_efficiency(got.v0, got.p_acc, h.load_resistance);
    assert!((0.0..1.0).contains(&eta));
}

const FROZEN_V0_10MW: f64 = 0.691_845_843_916;

#[test]
fn oracle_agrees_across_decades() {
    let h = HarvestParams::default();
    for e in -12..=0 {
        let p = 10f64.powi(e);
        let want = doubler_oracle(p, &h);
        let got = solve_rectifier(p, &h, Rectifier::Doubler).unwrap().v0;
        assert!((got - want).abs() <= 1e-8 * want.max(1e-12), "P = {p:e}: {got} vs {want}");
    }
}

#[test]
fn output_voltage_rises_with_power() {
    let h = HarvestParams::default();
    let mut last = 0.0;
    for i in 1..=80 {
        let p = 10f64.powf(-8.0 + 0.1 * i as f64);
        let v = solve_rectifier(p, &h, Rectifier::Doubler).unwrap().v0;
        assert!(v > last, "V0 fell at P = {p:e}");
        last = v;
    }
}
