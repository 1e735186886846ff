//! RF-to-DC conversion with a voltage-doubler rectifier.
//!
//! The diode output voltage `V0` satisfies
//!
//! ```text
//! I0(sqrt(8 Rg Pacc) / Vt) = (1 + V0 / (RL Is)) exp((1 + (Rg + Rs) / RL) V0 / Vt)
//! ```
//!
//! with `Vt = n0 k T / q`. A doubler is modelled by the same relation with
//! `Rg` doubled and `RL` halved. The equation is solved in log space,
//! `ln(1 + V/(RL Is)) + a V - ln I0(x) = 0`, whose left side is strictly
//! increasing in `V`, so the root is unique and bracketed by
//! `[0, ln I0(x) / a]`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::noise::BOLTZMANN;

/// Elementary charge, C.
pub const ELECTRON_CHARGE: f64 = 1.602_176_634e-19;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarvestParams {
    pub matching_efficiency: f64,
    pub load_resistance: f64,
    pub input_resistance: f64,
    pub series_resistance: f64,
    pub saturation_current: f64,
    pub ideality: f64,
    pub temperature: f64,
}

impl Default for HarvestParams {
    fn default() -> Self {
        Self {
            matching_efficiency: 0.95,
            load_resistance: 100.0,
            input_resistance: 50.0,
            series_resistance: 25.0,
            saturation_current: 1e-6,
            ideality: 1.05,
            temperature: 290.0,
        }
    }
}

impl HarvestParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("load_resistance", self.load_resistance),
            ("input_resistance", self.input_resistance),
            ("series_resistance", self.series_resistance),
            ("saturation_current", self.saturation_current),
            ("ideality", self.ideality),
            ("temperature", self.temperature),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.matching_efficiency > 0.0 && self.matching_efficiency <= 1.0) {
            return Err(invalid(format!(
                "matching efficiency must lie in (0, 1], got {}",
                self.matching_efficiency
            )));
        }
        Ok(())
    }

    /// `n0 k T / q`, V.
    pub fn thermal_voltage(&self) -> f64 {
        self.ideality * BOLTZMANN * self.temperature / ELECTRON_CHARGE
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Rectifier {
    #[default]
    Doubler,
    SingleDiode,
}

/// Natural log of the modified Bessel function `I0(x)`, `x >= 0`.
pub fn ln_bessel_i0(x: f64) -> f64 {
    let x = x.abs();
    if x <= 20.0 {
        bessel_i0_series(x).ln()
    } else {
        // I0(x) ~ e^x / sqrt(2 pi x) * sum_j prod_{i<=j} (2i-1)^2 / (i 8x)
        let mut term = 1.0;
        let mut sum = 1.0;
        for j in 1..200 {
            let next = term * ((2 * j - 1) as f64).powi(2) / (j as f64 * 8.0 * x);
            if next >= term {
                break;
            }
            term = next;
            sum += term;
            if term < 1e-17 * sum {
                break;
            }
        }
        x - 0.5 * (2.0 * std::f64::consts::PI * x).ln() + sum.ln()
    }
}

pub fn bessel_i0(x: f64) -> f64 {
    let x = x.abs();
    if x <= 20.0 {
        bessel_i0_series(x)
    } else {
        ln_bessel_i0(x).exp()
    }
}

fn bessel_i0_series(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

/// Solved operating point of one rectifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectifierSolution {
    pub v0: f64,
    pub p_acc: f64,
    /// `|rhs - lhs| / max(lhs, rhs)` of the diode equation at `v0`.
    pub residual: f64,
}

/// Output voltage for incident power `p_inc`, W.
pub fn solve_rectifier(p_inc: f64, params: &HarvestParams, kind: Rectifier) -> Result<RectifierSolution> {
    params.validate()?;
    if !(p_inc >= 0.0 && p_inc.is_finite()) {
        return Err(invalid(format!("incident power must be >= 0, got {p_inc}")));
    }
    let p_acc = params.matching_efficiency * p_inc;
    let (rg, rl) = match kind {
        Rectifier::Doubler => (2.0 * params.input_resistance, params.load_resistance / 2.0),
        Rectifier::SingleDiode => (params.input_resistance, params.load_resistance),
    };
    let vt = params.thermal_voltage();
    let x = (8.0 * rg * p_acc).sqrt() / vt;
    let ln_i0 = ln_bessel_i0(x);
    if ln_i0 == 0.0 {
        return Ok(RectifierSolution { v0: 0.0, p_acc, residual: 0.0 });
    }
    let a = (1.0 + (rg + params.series_resistance) / rl) / vt;
    let ris = rl * params.saturation_current;
    let f = |v: f64| (v / ris).ln_1p() + a * v - ln_i0;
    let df = |v: f64| 1.0 / (ris + v) + a;

    let (mut lo, mut hi) = (0.0, ln_i0 / a);
    if !(f(lo) <= 0.0 && f(hi) >= 0.0) {
        return Err(Error::SolverFailure(format!("root not bracketed for P_inc = {p_inc}")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-9 * hi.max(1e-12) {
            break;
        }
    }
    let mut v = 0.5 * (lo + hi);
    for _ in 0..8 {
        let next = v - f(v) / df(v);
        if !(next >= lo && next <= hi) {
            break;
        }
        if next == v {
            break;
        }
        v = next;
    }
    let r = f(v);
    let residual = r.abs().min(r.exp_m1().abs() / r.exp().max(1.0));
    if !(residual < 1e-12) {
        return Err(Error::SolverFailure(format!(
            "residual {residual:e} at P_inc = {p_inc}"
        )));
    }
    Ok(RectifierSolution { v0: v, p_acc, residual })
}

pub fn solve_doubler(p_inc: f64, params: &HarvestParams) -> Result<f64> {
    solve_rectifier(p_inc, params, Rectifier::Doubler).map(|s| s.v0)
}

pub fn solve_single_diode(p_inc: f64, params: &HarvestParams) -> Result<f64> {
    solve_rectifier(p_inc, params, Rectifier::SingleDiode).map(|s| s.v0)
}

/// `V0^2 / (RL Pacc)`, zero when nothing is accepted.
pub fn conversion_efficiency(v0: f64, p_acc: f64, load_resistance: f64) -> f64 {
    if p_acc <= 0.0 {
        0.0
    } else {
        v0 * v0 / (load_resistance * p_acc)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcReport {
    pub element_v0: Vec<f64>,
    pub element_eta_con: Vec<f64>,
    /// Total DC power at the load, W.
    pub p_dc: f64,
}

/// Rectifies the payload share of each element's received power and sums
/// the DC outputs of every element except `center`, which feeds the
/// demodulator.
pub fn dc_output(
    received: &[f64],
    alpha_pd: f64,
    params: &HarvestParams,
    center: usize,
) -> Result<DcReport> {
    if center >= received.len() {
        return Err(invalid(format!(
            "demodulator element {center} out of range ({})",
            received.len()
        )));
    }
    if !(0.0..1.0).contains(&alpha_pd) {
        return Err(invalid(format!("feedback ratio must lie in [0, 1), got {alpha_pd}")));
    }
    let mut element_v0 = Vec::with_capacity(received.len());
    let mut element_eta_con = Vec::with_capacity(received.len());
    let mut p_dc = 0.0;
    for (m, &p_r) in received.iter().enumerate() {
        let s = solve_rectifier((1.0 - alpha_pd) * p_r, params, Rectifier::Doubler)?;
        let eta = conversion_efficiency(s.v0, s.p_acc, params.load_resistance);
        if m != center {
            p_dc += eta * params.matching_efficiency * (1.0 - alpha_pd) * p_r;
        }
        element_v0.push(s.v0);
        element_eta_con.push(eta);
    }
    Ok(DcReport {
        element_v0,
        element_eta_con,
        p_dc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ln_i0_reference_values() {
        // extended-precision references
        let cases = [
            (0.5, 0.061_549_719_185_481_30),
            (5.0, 3.304_681_775_822_533),
            (19.5, 17.102_438_424_565_19),
            (20.5, 18.077_103_504_148_48),
            (50.0, 47.127_575_501_871_80),
            (107.8, 104.542_087_623_294_4),
            (300.0, 296.229_587_593_002_2),
            (1500.0, 1_495.424_534_634_381),
        ];
        for (x, want) in cases {
            assert_relative_eq!(ln_bessel_i0(x), want, max_relative = 1e-13);
        }
        assert_eq!(bessel_i0(0.0), 1.0);
    }

    #[test]
    fn zero_input_gives_zero_voltage() {
        let s = solve_rectifier(0.0, &HarvestParams::default(), Rectifier::Doubler).unwrap();
        assert_eq!(s.v0, 0.0);
        assert_eq!(conversion_efficiency(0.0, 0.0, 100.0), 0.0);
        assert_eq!(conversion_efficiency(0.0, 1e-3, 100.0), 0.0);
    }

    #[test]
    fn residual_small_across_decades() {
        let p = HarvestParams::default();
        for e in -12..=1 {
            for kind in [Rectifier::Doubler, Rectifier::SingleDiode] {
                let s = solve_rectifier(10f64.powi(e), &p, kind).unwrap();
                assert!(s.residual < 1e-12, "{e} {kind:?} {}", s.residual);
                assert!(s.v0 > 0.0);
            }
        }
    }

    #[test]
    fn rejects_negative_power_and_bad_params() {
        let p = HarvestParams::default();
        assert!(solve_doubler(-1.0, &p).is_err());
        let bad = HarvestParams { load_resistance: 0.0, ..p };
        assert!(solve_doubler(1e-3, &bad).is_err());
        let bad = HarvestParams { matching_efficiency: 1.5, ..p };
        assert!(solve_doubler(1e-3, &bad).is_err());
    }

    #[test]
    fn dc_output_excludes_center_and_handles_zero() {
        let p = HarvestParams::default();
        let zero = dc_output(&[0.0; 4], 0.02, &p, 0).unwrap();
        assert_eq!(zero.p_dc, 0.0);
        let r = dc_output(&[1e-2, 0.0, 1e-2], 0.02, &p, 0).unwrap();
        let s = solve_rectifier(0.98 * 1e-2, &p, Rectifier::Doubler).unwrap();
        let eta = conversion_efficiency(s.v0, s.p_acc, p.load_resistance);
        assert_relative_eq!(r.p_dc, eta * 0.95 * 0.98 * 1e-2, max_relative = 1e-14);
        assert!(dc_output(&[1.0], 0.02, &p, 1).is_err());
    }
}
