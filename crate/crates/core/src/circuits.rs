//! Circuit stages applied to whole-array field vectors: limiter, phase
//! shifter, phase-conjugate mixer, saturating power amplifier and power
//! divider.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::FieldVector;
use crate::error::{invalid, Result};

/// Phase-conjugate mixer driven by a local oscillator at twice the carrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConjugatorParams {
    /// LO amplitude, V. The stage amplitude gain is `v_lo / 2`.
    pub v_lo: f64,
    pub phi_lo: f64,
    pub noise_figure_db: f64,
}

impl Default for ConjugatorParams {
    fn default() -> Self {
        Self {
            v_lo: 2.0,
            phi_lo: 0.0,
            noise_figure_db: 6.0,
        }
    }
}

impl ConjugatorParams {
    pub fn amplitude_gain(&self) -> f64 {
        self.v_lo / 2.0
    }

    pub fn power_gain(&self) -> f64 {
        self.amplitude_gain().powi(2)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_lo > 0.0 && self.v_lo.is_finite()) {
            return Err(invalid(format!("LO amplitude must be > 0, got {}", self.v_lo)));
        }
        Ok(())
    }
}

/// Array power amplifier bank with a smooth AM/AM saturation curve
///
/// ```text
/// P_out = G0 P_in / (1 + (G0 P_in / P_sat)^q)^(1/q)
/// ```
///
/// evaluated on the total input power and applied as one common gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplifierParams {
    pub small_signal_gain_db: f64,
    /// Total saturated output power, W.
    pub saturation_power: f64,
    /// Knee sharpness `q`.
    pub smoothness: f64,
    pub phase_lag: f64,
    pub noise_figure_db: f64,
}

impl Default for AmplifierParams {
    fn default() -> Self {
        Self {
            small_signal_gain_db: 20.0,
            saturation_power: 20.0,
            smoothness: 3.0,
            phase_lag: std::f64::consts::FRAC_PI_6,
            noise_figure_db: 5.0,
        }
    }
}

impl AmplifierParams {
    pub fn small_signal_gain(&self) -> f64 {
        10f64.powf(self.small_signal_gain_db / 10.0)
    }

    /// Total output power for total input power `p_in`, W.
    pub fn output_power(&self, p_in: f64) -> f64 {
        if p_in <= 0.0 {
            return 0.0;
        }
        let linear = self.small_signal_gain() * p_in;
        let q = self.smoothness;
        let ratio = linear / self.saturation_power;
        // (1 + r^q)^(1/q) written to stay finite for huge r
        let denom = if ratio > 1.0 {
            ratio * (1.0 + ratio.powf(-q)).powf(1.0 / q)
        } else {
            (1.0 + ratio.powf(q)).powf(1.0 / q)
        };
        linear / denom
    }

    /// Power gain `G_a(P_in)`; the small-signal gain at zero input.
    pub fn gain(&self, p_in: f64) -> f64 {
        if p_in <= 0.0 {
            self.small_signal_gain()
        } else {
            self.output_power(p_in) / p_in
        }
    }

    /// Power gain at which the amplifier delivers `p_out`; the gain on the
    /// asymptote (zero) at or above saturation.
    pub fn gain_at_output(&self, p_out: f64) -> f64 {
        let y = p_out / self.saturation_power;
        if y <= 0.0 {
            return self.small_signal_gain();
        }
        if y >= 1.0 {
            return 0.0;
        }
        let q = self.smoothness;
        self.small_signal_gain() * (1.0 - y.powf(q)).powf(1.0 / q)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.small_signal_gain_db > 0.0 && self.small_signal_gain_db.is_finite()) {
            return Err(invalid(format!("PA gain must be > 0 dB, got {}", self.small_signal_gain_db)));
        }
        if !(self.saturation_power > 0.0 && self.saturation_power.is_finite()) {
            return Err(invalid(format!("PA saturation power must be > 0, got {}", self.saturation_power)));
        }
        if !(self.smoothness > 0.0 && self.smoothness.is_finite()) {
            return Err(invalid(format!("PA knee parameter must be > 0, got {}", self.smoothness)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum LimiterMode {
    /// One attenuation for the whole array.
    #[default]
    Uniform,
    /// Each element clipped on its own.
    PerElement,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimiterParams {
    /// Maximum permitted amplitude, V.
    pub v_max: f64,
    pub mode: LimiterMode,
}

impl Default for LimiterParams {
    fn default() -> Self {
        Self {
            v_max: 0.2f64.sqrt(),
            mode: LimiterMode::Uniform,
        }
    }
}

impl LimiterParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_max > 0.0 && self.v_max.is_finite()) {
            return Err(invalid(format!("limiter amplitude must be > 0, got {}", self.v_max)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DividerParams {
    /// Fraction of received power fed back towards the base station.
    pub alpha_pd: f64,
}

impl Default for DividerParams {
    fn default() -> Self {
        Self { alpha_pd: 0.02 }
    }
}

impl DividerParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_pd > 0.0 && self.alpha_pd < 1.0) {
            return Err(invalid(format!("divider ratio must lie in (0, 1), got {}", self.alpha_pd)));
        }
        Ok(())
    }
}

/// Attenuates `s` so no amplitude exceeds `v_max`. Returns the output and the
/// attenuation ratio; in per-element mode the ratio is the smallest applied.
/// Amplitudes within rounding of `v_max` count as already limited, which
/// makes the limiter exactly idempotent.
pub fn limit(s: &FieldVector, p: &LimiterParams) -> (FieldVector, f64) {
    let ceiling = p.v_max * (1.0 + 8.0 * f64::EPSILON);
    match p.mode {
        LimiterMode::Uniform => {
            let peak = s.max_amplitude();
            if peak <= ceiling {
                return (s.clone(), 1.0);
            }
            let alpha = p.v_max / peak;
            (s.scaled(Complex64::new(alpha, 0.0)), alpha)
        }
        LimiterMode::PerElement => {
            let mut min_alpha = 1.0f64;
            let out = s
                .iter()
                .map(|v| {
                    let a = v.norm();
                    if a > ceiling {
                        let alpha = p.v_max / a;
                        min_alpha = min_alpha.min(alpha);
                        v * alpha
                    } else {
                        *v
                    }
                })
                .collect();
            (FieldVector(out), min_alpha)
        }
    }
}

pub fn shift_phase(s: &FieldVector, phi: f64) -> FieldVector {
    s.scaled(Complex64::from_polar(1.0, phi))
}

/// `(v_lo/2) e^{j phi_lo} conj(s) + n`.
pub fn conjugate(s: &FieldVector, p: &ConjugatorParams, noise: Option<&[Complex64]>) -> FieldVector {
    let k = Complex64::from_polar(p.amplitude_gain(), p.phi_lo);
    let mut out: Vec<Complex64> = s.iter().map(|v| k * v.conj()).collect();
    if let Some(n) = noise {
        out.iter_mut().zip(n).for_each(|(o, n)| *o += n);
    }
    FieldVector(out)
}

/// Applies the common gain `G_a(P_in)` with the PA phase lag, then adds the
/// PA output noise. Returns the output and `G_a`.
pub fn amplify(
    s: &FieldVector,
    p: &AmplifierParams,
    impedance: f64,
    noise: Option<&[Complex64]>,
) -> (FieldVector, f64) {
    let g = p.gain(s.power(impedance));
    let k = Complex64::from_polar(g.sqrt(), p.phase_lag);
    let mut out: Vec<Complex64> = s.iter().map(|v| k * v).collect();
    if let Some(n) = noise {
        out.iter_mut().zip(n).for_each(|(o, n)| *o += n);
    }
    (FieldVector(out), g)
}

/// Splits `s` into `(feedback, payload)` with power fractions `alpha_pd` and
/// `1 - alpha_pd`.
pub fn divide(s: &FieldVector, p: &DividerParams) -> Result<(FieldVector, FieldVector)> {
    p.validate()?;
    Ok((
        s.scaled(Complex64::new(p.alpha_pd.sqrt(), 0.0)),
        s.scaled(Complex64::new((1.0 - p.alpha_pd).sqrt(), 0.0)),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    const Z0: f64 = 50.0;

    fn fv(v: &[(f64, f64)]) -> FieldVector {
        FieldVector(v.iter().map(|&(r, i)| Complex64::new(r, i)).collect())
    }

    #[test]
    fn limiter_examples() {
        let p = LimiterParams::default();
        let s = fv(&[(0.2, 0.0), (0.0, -0.1)]);
        let (out, a) = limit(&s, &p);
        assert_eq!(a, 1.0);
        assert_eq!(out, s);

        let s = fv(&[(1.0, 0.0), (0.0, 0.5)]);
        let (out, a) = limit(&s, &p);
        assert_relative_eq!(a, 0.2f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(out.max_amplitude(), p.v_max, epsilon = 1e-15);
        assert_relative_eq!(out[1].arg(), PI / 2.0, epsilon = 1e-15);

        let z = FieldVector::zeros(3);
        assert_eq!(limit(&z, &p), (z.clone(), 1.0));
    }

    #[test]
    fn per_element_limiter_clips_only_large_entries() {
        let p = LimiterParams {
            mode: LimiterMode::PerElement,
            ..LimiterParams::default()
        };
        let s = fv(&[(1.0, 0.0), (0.1, 0.0)]);
        let (out, a) = limit(&s, &p);
        assert_relative_eq!(out[0].norm(), p.v_max, epsilon = 1e-15);
        assert_eq!(out[1], s[1]);
        assert_relative_eq!(a, p.v_max, epsilon = 1e-15);
    }

    #[test]
    fn conjugator_examples() {
        let p = ConjugatorParams::default();
        let s = FieldVector(vec![Complex64::from_polar(1.0, PI / 3.0)]);
        let out = conjugate(&s, &p, None);
        assert_relative_eq!(out[0].norm(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(out[0].arg(), -PI / 3.0, epsilon = 1e-15);

        let real = fv(&[(0.7, 0.0)]);
        assert_eq!(conjugate(&real, &p, None), real);

        let lo = ConjugatorParams { v_lo: 4.0, phi_lo: 0.4, ..p };
        let out = conjugate(&s, &lo, None);
        assert_relative_eq!(out[0].norm(), 2.0, epsilon = 1e-15);
        assert_relative_eq!(out[0].arg(), 0.4 - PI / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn amplifier_anchor_points() {
        let p = AmplifierParams::default();
        let lin = p.output_power(1e-3);
        assert_relative_eq!(lin, 0.1, max_relative = 1e-6);
        assert_relative_eq!(10.0 * p.gain(1e-3).log10(), 20.0, epsilon = 1e-5);
        let sat = p.output_power(10.0);
        assert!(sat < 20.0 && sat > 19.9, "{sat}");
        assert_relative_eq!(10.0 * (sat * 1e3).log10(), 43.0, epsilon = 0.1);
        assert_eq!(p.output_power(0.0), 0.0);
        assert!(p.output_power(1e300) <= 20.0);
        for p_in in [1e-6, 1e-3, 0.05, 0.3] {
            let out = p.output_power(p_in);
            assert_relative_eq!(p.gain_at_output(out), p.gain(p_in), max_relative = 1e-9);
        }
    }

    #[test]
    fn amplify_applies_common_gain_and_phase() {
        let p = AmplifierParams::default();
        // 1 mW total on two elements
        let a = (2.0 * Z0 * 0.5e-3f64).sqrt();
        let s = fv(&[(a, 0.0), (0.0, a)]);
        let (out, g) = amplify(&s, &p, Z0, None);
        assert_relative_eq!(g, p.gain(1e-3), max_relative = 1e-15);
        assert_relative_eq!(out.power(Z0), g * 1e-3, max_relative = 1e-12);
        assert_relative_eq!(out[0].arg(), p.phase_lag, epsilon = 1e-15);
        assert_relative_eq!(out[1].arg(), PI / 2.0 + p.phase_lag, epsilon = 1e-15);
        let (z, _) = amplify(&FieldVector::zeros(2), &p, Z0, None);
        assert_eq!(z, FieldVector::zeros(2));
    }

    #[test]
    fn divider_examples() {
        let p = DividerParams::default();
        let a = (2.0 * Z0 * 1e-3f64).sqrt();
        let s = fv(&[(a, 0.0)]);
        let (fb, pay) = divide(&s, &p).unwrap();
        assert_relative_eq!(fb.power(Z0), 0.02e-3, max_relative = 1e-12);
        assert_relative_eq!(pay.power(Z0), 0.98e-3, max_relative = 1e-12);
        let (fb, pay) = divide(&s, &DividerParams { alpha_pd: 0.5 }).unwrap();
        assert_relative_eq!(fb.power(Z0), pay.power(Z0), max_relative = 1e-15);
        for bad in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(divide(&s, &DividerParams { alpha_pd: bad }).is_err());
        }
    }

    #[test]
    fn shifter_examples() {
        let s = fv(&[(1.0, 2.0), (-0.5, 0.25)]);
        assert_eq!(shift_phase(&s, 0.0), s);
        let neg = shift_phase(&s, PI);
        for (a, b) in neg.iter().zip(s.iter()) {
            assert_relative_eq!(a.re, -b.re, epsilon = 1e-15);
            assert_relative_eq!(a.im, -b.im, epsilon = 1e-15);
        }
    }
}
