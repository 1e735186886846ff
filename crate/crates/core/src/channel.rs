//! Free-space channel between two arrays.
//!
//! Entry `(m, n)` couples transmit element `n` to receive element `m`:
//!
//! ```text
//! h = sqrt(beta) * L^(-alpha/2) * sqrt(Gt(n) * Gr(m)) * exp(j 2 pi L / lambda)
//! ```
//!
//! with both gains evaluated at the exact per-pair departure and arrival
//! angles. Because the product of gains is symmetric in the two ends, the
//! reverse-direction channel is the transpose of the forward one, which the
//! [`ChannelOperator`] trait exposes as `reverse`.

use std::io::Write;
use std::ops::{Deref, DerefMut};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{ArrayLayout, CarrierSpec, Vec3};

/// Large-scale propagation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub path_loss_exponent: f64,
    pub scaling: f64,
    pub impedance: f64,
}

impl ChannelParams {
    /// Friis free-space propagation: `alpha = 2`, `beta = lambda^2 / (16 pi^2)`.
    pub fn friis(carrier: &CarrierSpec, impedance: f64) -> Self {
        let lambda = carrier.wavelength;
        Self {
            path_loss_exponent: 2.0,
            scaling: lambda * lambda / (16.0 * std::f64::consts::PI.powi(2)),
            impedance,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.path_loss_exponent >= 2.0 && self.path_loss_exponent.is_finite()) {
            return Err(invalid(format!("path-loss exponent must be >= 2, got {}", self.path_loss_exponent)));
        }
        if !(self.scaling > 0.0 && self.scaling.is_finite()) {
            return Err(invalid(format!("channel scaling must be > 0, got {}", self.scaling)));
        }
        if !(self.impedance > 0.0 && self.impedance.is_finite()) {
            return Err(invalid(format!("impedance must be > 0, got {}", self.impedance)));
        }
        Ok(())
    }
}

/// Per-element complex baseband amplitudes, volts.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FieldVector(pub Vec<Complex64>);

impl FieldVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![Complex64::new(0.0, 0.0); len])
    }

    /// Field carrying `power` watts on each element with the given phases.
    pub fn from_powers(powers: &[f64], phases: &[f64], impedance: f64) -> Self {
        Self(
            powers
                .iter()
                .zip(phases)
                .map(|(p, ph)| Complex64::from_polar((2.0 * impedance * p).sqrt(), *ph))
                .collect(),
        )
    }

    /// Power `|s|^2 / (2 Z0)` on each element, W.
    pub fn element_powers(&self, impedance: f64) -> Vec<f64> {
        self.0.iter().map(|s| s.norm_sqr() / (2.0 * impedance)).collect()
    }

    /// Total power over all elements, W.
    pub fn power(&self, impedance: f64) -> f64 {
        self.0.iter().map(|s| s.norm_sqr()).sum::<f64>() / (2.0 * impedance)
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|s| s.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_amplitude(&self) -> f64 {
        self.0.iter().map(|s| s.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self(self.0.iter().map(|s| s * factor).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|s| s.re.is_finite() && s.im.is_finite())
    }

    /// `||self - other|| / ||other||`.
    pub fn relative_distance(&self, other: &FieldVector) -> f64 {
        let diff: f64 = self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        (diff / other.0.iter().map(|s| s.norm_sqr()).sum::<f64>()).sqrt()
    }
}

impl Deref for FieldVector {
    type Target = Vec<Complex64>;
    fn deref(&self) -> &Self::Target {
        &self.0
    }
}

impl DerefMut for FieldVector {
    fn deref_mut(&mut self) -> &mut Self::Target {
        &mut self.0
    }
}

impl From<Vec<Complex64>> for FieldVector {
    fn from(v: Vec<Complex64>) -> Self {
        Self(v)
    }
}

/// Linear map from transmit-array fields to receive-array fields, and its
/// transpose for the reverse direction.
pub trait ChannelOperator: Send + Sync {
    fn tx_len(&self) -> usize;
    fn rx_len(&self) -> usize;
    /// `H x`, transmit side to receive side.
    fn forward(&self, x: &[Complex64]) -> Vec<Complex64>;
    /// `H^T y`, receive side back to transmit side.
    fn reverse(&self, y: &[Complex64]) -> Vec<Complex64>;
}

/// Dense `rx x tx` channel gain matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl ChannelMatrix {
    pub fn from_entries(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(invalid(format!(
                "{} entries do not fill a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, rx: usize, tx: usize) -> Complex64 {
        self.entries[rx * self.cols + tx]
    }

    pub fn row(&self, rx: usize) -> &[Complex64] {
        &self.entries[rx * self.cols..(rx + 1) * self.cols]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn transpose(&self) -> ChannelMatrix {
        let mut entries = Vec::with_capacity(self.entries.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                entries.push(self.get(r, c));
            }
        }
        ChannelMatrix {
            rows: self.cols,
            cols: self.rows,
            entries,
        }
    }

    /// Writes `row,col,re,im` lines.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "row,col,re,im")?;
        for r in 0..self.rows {
            for (c, h) in self.row(r).iter().enumerate() {
                writeln!(out, "{r},{c},{:.11e},{:.11e}", h.re, h.im)?;
            }
        }
        Ok(())
    }
}

impl ChannelOperator for ChannelMatrix {
    fn tx_len(&self) -> usize {
        self.cols
    }

    fn rx_len(&self) -> usize {
        self.rows
    }

    fn forward(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.entries
            .par_chunks(self.cols)
            .map(|row| row.iter().zip(x).map(|(h, s)| h * s).sum())
            .collect()
    }

    fn reverse(&self, y: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.cols];
        for (row, yr) in self.entries.chunks(self.cols).zip(y) {
            for (o, h) in out.iter_mut().zip(row) {
                *o += h * yr;
            }
        }
        out
    }
}

/// Coefficient of the path from `tx` element at `from` to `rx` element at `to`.
pub(crate) fn pair_coefficient(
    tx: &ArrayLayout,
    from: &Vec3,
    rx: &ArrayLayout,
    to: &Vec3,
    wavenumber: f64,
    params: &ChannelParams,
) -> Option<Complex64> {
    let d = to - from;
    let distance = d.norm();
    if !(distance > 0.0) {
        return None;
    }
    let gt = tx.gain_towards(&d);
    let gr = rx.gain_towards(&(-d));
    let amplitude =
        params.scaling.sqrt() * distance.powf(-params.path_loss_exponent / 2.0) * (gt * gr).sqrt();
    Some(Complex64::from_polar(amplitude, wavenumber * distance))
}

/// Dense channel from every `tx` element to every `rx` element.
pub fn build_channel_matrix(
    tx: &ArrayLayout,
    rx: &ArrayLayout,
    carrier: &CarrierSpec,
    params: &ChannelParams,
) -> Result<ChannelMatrix> {
    params.validate()?;
    let k = carrier.wavenumber();
    let cols = tx.len();
    let mut entries = vec![Complex64::new(0.0, 0.0); rx.len() * cols];
    entries
        .par_chunks_mut(cols)
        .zip(rx.positions.par_iter())
        .enumerate()
        .try_for_each(|(m, (row, to))| {
            for (n, (h, from)) in row.iter_mut().zip(&tx.positions).enumerate() {
                *h = pair_coefficient(tx, from, rx, to, k, params).ok_or_else(|| {
                    Error::DegenerateGeometry(format!("tx element {n} coincides with rx element {m}"))
                })?;
            }
            Ok::<(), Error>(())
        })?;
    ChannelMatrix::from_entries(rx.len(), cols, entries)
}

/// `H s + n`; `noise`, when given, must match the receive dimension.
pub fn propagate(
    channel: &dyn ChannelOperator,
    field: &FieldVector,
    noise: Option<&[Complex64]>,
) -> Result<FieldVector> {
    if field.len() != channel.tx_len() {
        return Err(invalid(format!(
            "field has {} elements but the channel expects {}",
            field.len(),
            channel.tx_len()
        )));
    }
    let mut out = channel.forward(field);
    add_noise(&mut out, noise)?;
    Ok(FieldVector(out))
}

/// `H^T s + n`, the same channel traversed from receiver to transmitter.
pub fn propagate_reverse(
    channel: &dyn ChannelOperator,
    field: &FieldVector,
    noise: Option<&[Complex64]>,
) -> Result<FieldVector> {
    if field.len() != channel.rx_len() {
        return Err(invalid(format!(
            "field has {} elements but the channel expects {}",
            field.len(),
            channel.rx_len()
        )));
    }
    let mut out = channel.reverse(field);
    add_noise(&mut out, noise)?;
    Ok(FieldVector(out))
}

pub(crate) fn add_noise(out: &mut [Complex64], noise: Option<&[Complex64]>) -> Result<()> {
    if let Some(n) = noise {
        if n.len() != out.len() {
            return Err(invalid(format!("noise has {} samples, field has {}", n.len(), out.len())));
        }
        for (o, n) in out.iter_mut().zip(n) {
            *o += n;
        }
    }
    Ok(())
}

/// Largest eigenvalue of `H H^H` (the best achievable one-way power
/// efficiency) and its transmit-side excitation, by power iteration.
pub fn dominant_mode(
    channel: &dyn ChannelOperator,
    max_iterations: usize,
    tolerance: f64,
) -> (f64, FieldVector) {
    let n = channel.tx_len();
    // deterministic start with energy in every mode
    let mut x: Vec<Complex64> = (0..n)
        .map(|i| Complex64::from_polar(1.0, 0.7 * (i as f64).powi(2)))
        .collect();
    let mut eig = 0.0;
    for _ in 0..max_iterations {
        let norm = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
        let y = channel.forward(&x);
        // H^H y = conj(H^T conj(y))
        let conj_y: Vec<Complex64> = y.iter().map(|v| v.conj()).collect();
        let next: Vec<Complex64> = channel.reverse(&conj_y).into_iter().map(|v| v.conj()).collect();
        let new_eig = y.iter().map(|v| v.norm_sqr()).sum::<f64>();
        x = next;
        if (new_eig - eig).abs() <= tolerance * new_eig {
            eig = new_eig;
            break;
        }
        eig = new_eig;
    }
    let norm = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    x.iter_mut().for_each(|v| *v /= norm);
    (eig, FieldVector(x))
}
