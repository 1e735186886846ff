//! Spatial power-density and aperture phase maps.
//!
//! Power maps coherently sum the free-space contributions of every source
//! element at each grid point, as seen by a unit-gain isotropic probe. Points
//! closer than a quarter wavelength to any source element are masked.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelParams, FieldVector};
use crate::error::{invalid, Result};
use crate::geometry::{ArrayLayout, CarrierSpec, Vec3};

/// Rectangular sampling plane spanned by two orthogonal unit axes.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub name: String,
    pub origin: Vec3,
    pub axis_a: Vec3,
    pub axis_b: Vec3,
    pub a_label: String,
    pub b_label: String,
    pub a_range: (f64, f64),
    pub b_range: (f64, f64),
    pub resolution: (usize, usize),
}

impl GridSpec {
    /// Vertical `y = 0` plane; `a` runs along x, `b` along z.
    pub fn xoz(x: (f64, f64), z: (f64, f64), resolution: (usize, usize)) -> Self {
        Self {
            name: "xoz".into(),
            origin: Vec3::zeros(),
            axis_a: Vec3::x(),
            axis_b: Vec3::z(),
            a_label: "x".into(),
            b_label: "z".into(),
            a_range: x,
            b_range: z,
            resolution,
        }
    }

    /// Horizontal plane at height `z`; `a` runs along x, `b` along y.
    pub fn xoy(z: f64, x: (f64, f64), y: (f64, f64), resolution: (usize, usize)) -> Self {
        Self {
            name: "xoy".into(),
            origin: Vec3::new(0.0, 0.0, z),
            axis_a: Vec3::x(),
            axis_b: Vec3::y(),
            a_label: "x".into(),
            b_label: "y".into(),
            a_range: x,
            b_range: y,
            resolution,
        }
    }

    fn axis_values(range: (f64, f64), n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![0.5 * (range.0 + range.1)];
        }
        (0..n)
            .map(|i| range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64)
            .collect()
    }

    pub fn a_values(&self) -> Vec<f64> {
        Self::axis_values(self.a_range, self.resolution.0)
    }

    pub fn b_values(&self) -> Vec<f64> {
        Self::axis_values(self.b_range, self.resolution.1)
    }

    pub fn point(&self, a: f64, b: f64) -> Vec3 {
        self.origin + self.axis_a * a + self.axis_b * b
    }
}

/// Scalar map over a 2-D grid, stored row-major with one row per `b` value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldGrid {
    pub name: String,
    pub a_label: String,
    pub b_label: String,
    pub a_values: Vec<f64>,
    pub b_values: Vec<f64>,
    /// Masked entries hold NaN.
    pub values: Vec<f64>,
    pub masked: Vec<bool>,
    /// Factor the values were divided by during normalization.
    pub scale: f64,
}

impl FieldGrid {
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[b * self.a_values.len() + a]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, |m, v| m.max(*v))
    }

    /// `(a, b)` coordinates of the largest unmasked value.
    pub fn argmax(&self) -> (f64, f64) {
        let n = self.a_values.len();
        let (idx, _) = self
            .values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .fold((0, f64::NEG_INFINITY), |best, (i, v)| if *v > best.1 { (i, *v) } else { best });
        (self.a_values[idx % n], self.b_values[idx / n])
    }

    /// RMS difference between the map and its mirror image across `a = 0`,
    /// relative to the RMS of the map. Assumes `a` values symmetric about
    /// zero; pairs with a masked side are skipped.
    pub fn mirror_asymmetry(&self) -> f64 {
        let na = self.a_values.len();
        let (mut diff, mut total) = (0.0, 0.0);
        for b in 0..self.b_values.len() {
            for a in 0..na {
                let v = self.get(a, b);
                let m = self.get(na - 1 - a, b);
                if v.is_finite() && m.is_finite() {
                    diff += (v - m).powi(2);
                    total += v * v;
                }
            }
        }
        if total > 0.0 {
            (diff / total).sqrt()
        } else {
            0.0
        }
    }

    fn normalize(&mut self) {
        let m = self.max();
        if m > 0.0 && m.is_finite() {
            self.values.iter_mut().for_each(|v| *v /= m);
            self.scale = m;
        }
    }

    /// Matrix CSV: a header row of `a` values, then one row per `b` value
    /// led by that value.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "{}\\{}", self.b_label, self.a_label)?;
        for a in &self.a_values {
            write!(out, ",{a:.11e}")?;
        }
        writeln!(out)?;
        let n = self.a_values.len();
        for (j, b) in self.b_values.iter().enumerate() {
            write!(out, "{b:.11e}")?;
            for v in &self.values[j * n..(j + 1) * n] {
                if v.is_finite() {
                    write!(out, ",{v:.11e}")?;
                } else {
                    write!(out, ",nan")?;
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Radiating array with its element excitations.
#[derive(Debug, Clone, Copy)]
pub struct Source<'a> {
    pub layout: &'a ArrayLayout,
    pub field: &'a FieldVector,
}

/// Normalized power density of the superposed `sources` on `grid`.
pub fn sample_power(
    sources: &[Source<'_>],
    grid: &GridSpec,
    carrier: &CarrierSpec,
    params: &ChannelParams,
) -> Result<FieldGrid> {
    for s in sources {
        if s.field.len() != s.layout.len() {
            return Err(invalid("source field does not match its array"));
        }
    }
    if grid.resolution.0 == 0 || grid.resolution.1 == 0 {
        return Err(invalid("grid needs at least one point per axis"));
    }
    let standoff = carrier.wavelength / 4.0;
    let k = carrier.wavenumber();
    let sqrt_beta = params.scaling.sqrt();
    let half_alpha = params.path_loss_exponent / 2.0;
    let a_values = grid.a_values();
    let b_values = grid.b_values();
    let points: Vec<Vec3> = b_values
        .iter()
        .flat_map(|b| a_values.iter().map(move |a| grid.point(*a, *b)))
        .collect();

    let samples: Vec<Option<f64>> = points
        .par_iter()
        .map(|p| {
            let mut sum = Complex64::new(0.0, 0.0);
            for s in sources {
                for (pos, amp) in s.layout.positions.iter().zip(s.field.iter()) {
                    let d = p - pos;
                    let l = d.norm();
                    if l < standoff {
                        return None;
                    }
                    let g = s.layout.gain_towards(&d);
                    sum += amp * Complex64::from_polar(sqrt_beta * l.powf(-half_alpha) * g.sqrt(), k * l);
                }
            }
            Some(sum.norm_sqr() / (2.0 * params.impedance))
        })
        .collect();

    let masked: Vec<bool> = samples.iter().map(Option::is_none).collect();
    let mut out = FieldGrid {
        name: grid.name.clone(),
        a_label: grid.a_label.clone(),
        b_label: grid.b_label.clone(),
        a_values,
        b_values,
        values: samples.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect(),
        masked,
        scale: 1.0,
    };
    out.normalize();
    Ok(out)
}

fn wrap(phase: f64) -> f64 {
    let w = phase.sin().atan2(phase.cos());
    if w <= -PI {
        PI
    } else {
        w
    }
}

fn aperture_grid(layout: &ArrayLayout, name: &str, values: Vec<f64>) -> FieldGrid {
    let a_values = (0..layout.cols)
        .map(|c| (c as f64 - (layout.cols as f64 - 1.0) / 2.0) * layout.spacing)
        .collect();
    let b_values = (0..layout.rows)
        .map(|r| (r as f64 - (layout.rows as f64 - 1.0) / 2.0) * layout.spacing)
        .collect();
    FieldGrid {
        name: name.into(),
        a_label: "u".into(),
        b_label: "v".into(),
        a_values,
        b_values,
        masked: vec![false; values.len()],
        values,
        scale: 1.0,
    }
}

/// Element phases on the array grid, wrapped to `(-pi, pi]`. Axes are the
/// in-plane coordinates along the array's `u` and `v` axes.
pub fn phase_map(layout: &ArrayLayout, field: &FieldVector) -> FieldGrid {
    let values = field.iter().map(|s| wrap(s.arg())).collect();
    aperture_grid(layout, "phase", values)
}

/// Element powers on the array grid, normalized to a maximum of one.
pub fn element_power_map(layout: &ArrayLayout, field: &FieldVector, impedance: f64) -> FieldGrid {
    let mut g = aperture_grid(layout, "element-power", field.element_powers(impedance));
    g.normalize();
    g
}

/// Removes `2 pi` jumps: along the middle column first, then outwards
/// along every row.
pub fn unwrap_phase(map: &FieldGrid) -> Vec<f64> {
    let na = map.a_values.len();
    let nb = map.b_values.len();
    let mut out = map.values.clone();
    let step = |prev: f64, cur: f64| prev + wrap(cur - prev);
    let mid = na / 2;
    for b in 1..nb {
        out[b * na + mid] = step(out[(b - 1) * na + mid], map.values[b * na + mid]);
    }
    for b in 0..nb {
        for a in mid + 1..na {
            out[b * na + a] = step(out[b * na + a - 1], map.values[b * na + a]);
        }
        for a in (0..mid).rev() {
            out[b * na + a] = step(out[b * na + a + 1], map.values[b * na + a]);
        }
    }
    out
}

/// Center `(u0, v0)` of the isophase circles, from a least-squares fit of
/// `c0 + c1 u + c2 v + c3 (u^2 + v^2)` to the unwrapped phase.
pub fn phase_center(map: &FieldGrid) -> Result<(f64, f64)> {
    let unwrapped = unwrap_phase(map);
    let na = map.a_values.len();
    let n = unwrapped.len();
    let mut design = DMatrix::<f64>::zeros(n, 4);
    let mut rhs = DVector::<f64>::zeros(n);
    for (i, v) in unwrapped.iter().enumerate() {
        let u = map.a_values[i % na];
        let w = map.b_values[i / na];
        design[(i, 0)] = 1.0;
        design[(i, 1)] = u;
        design[(i, 2)] = w;
        design[(i, 3)] = u * u + w * w;
        rhs[i] = *v;
    }
    let c = design
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| invalid(format!("phase fit failed: {e}")))?;
    if c[3].abs() < 1e-12 {
        return Err(invalid("phase has no curvature; center undefined"));
    }
    Ok((-c[1] / (2.0 * c[3]), -c[2] / (2.0 * c[3])))
}
