//! Fast channel operator for parallel, co-aligned arrays.
//!
//! When both arrays share the same element pitch and their grid axes are
//! parallel or anti-parallel, the displacement between transmit element
//! `(r, c)` and receive element `(r', c')` depends only on `(r' - r, c' - c)`
//! once the receive grid is indexed along the transmit axes. The channel is
//! then a 2-D block-Toeplitz correlation, applied here with zero-padded FFTs
//! in `O(P log P)` instead of `O(N M)`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::channel::{pair_coefficient, ChannelOperator, ChannelParams};
use crate::error::{Error, Result};
use crate::geometry::{ArrayLayout, CarrierSpec};

const ALIGN_TOL: f64 = 1e-9;

pub struct LatticeChannel {
    tx_rows: usize,
    tx_cols: usize,
    rx_rows: usize,
    rx_cols: usize,
    flip_rows: bool,
    flip_cols: bool,
    pad_rows: usize,
    pad_cols: usize,
    row_fft: Arc<dyn Fft<f64>>,
    row_ifft: Arc<dyn Fft<f64>>,
    col_fft: Arc<dyn Fft<f64>>,
    col_ifft: Arc<dyn Fft<f64>>,
    // spectra stored transposed (pad_cols x pad_rows)
    forward_kernel: Vec<Complex64>,
    reverse_kernel: Vec<Complex64>,
}

impl std::fmt::Debug for LatticeChannel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LatticeChannel")
            .field("tx", &(self.tx_rows, self.tx_cols))
            .field("rx", &(self.rx_rows, self.rx_cols))
            .field("pad", &(self.pad_rows, self.pad_cols))
            .finish()
    }
}

fn axis_sign(a: f64) -> Option<bool> {
    if (a - 1.0).abs() < ALIGN_TOL {
        Some(false)
    } else if (a + 1.0).abs() < ALIGN_TOL {
        Some(true)
    } else {
        None
    }
}

impl LatticeChannel {
    /// `Ok(None)` when the arrays are not lattice-aligned.
    pub fn try_new(
        tx: &ArrayLayout,
        rx: &ArrayLayout,
        carrier: &CarrierSpec,
        params: &ChannelParams,
    ) -> Result<Option<Self>> {
        params.validate()?;
        if ((tx.spacing - rx.spacing) / tx.spacing).abs() > ALIGN_TOL {
            return Ok(None);
        }
        let (Some(flip_cols), Some(flip_rows)) = (
            axis_sign(rx.u_axis.dot(&tx.u_axis)),
            axis_sign(rx.v_axis.dot(&tx.v_axis)),
        ) else {
            return Ok(None);
        };

        let (tr, tc, rr, rc) = (tx.rows, tx.cols, rx.rows, rx.cols);
        let pad_rows = (tr + rr - 1).next_power_of_two();
        let pad_cols = (tc + rc - 1).next_power_of_two();
        let k = carrier.wavenumber();

        let rx_natural = |ar: usize, ac: usize| -> usize {
            let r = if flip_rows { rr - 1 - ar } else { ar };
            let c = if flip_cols { rc - 1 - ac } else { ac };
            rx.index(r, c)
        };

        let mut fwd = vec![Complex64::new(0.0, 0.0); pad_rows * pad_cols];
        let mut rev = vec![Complex64::new(0.0, 0.0); pad_rows * pad_cols];
        for b in -(tr as isize - 1)..=(rr as isize - 1) {
            let (t_r, a_r) = if b >= 0 { (0, b as usize) } else { ((-b) as usize, 0) };
            for a in -(tc as isize - 1)..=(rc as isize - 1) {
                let (t_c, a_c) = if a >= 0 { (0, a as usize) } else { ((-a) as usize, 0) };
                let from = &tx.positions[tx.index(t_r, t_c)];
                let to = &rx.positions[rx_natural(a_r, a_c)];
                let h = pair_coefficient(tx, from, rx, to, k, params).ok_or_else(|| {
                    Error::DegenerateGeometry("transmit and receive elements coincide".into())
                })?;
                let wrap = |x: isize, n: usize| x.rem_euclid(n as isize) as usize;
                fwd[wrap(b, pad_rows) * pad_cols + wrap(a, pad_cols)] = h;
                rev[wrap(-b, pad_rows) * pad_cols + wrap(-a, pad_cols)] = h;
            }
        }

        let mut planner = FftPlanner::new();
        let mut op = Self {
            tx_rows: tr,
            tx_cols: tc,
            rx_rows: rr,
            rx_cols: rc,
            flip_rows,
            flip_cols,
            pad_rows,
            pad_cols,
            row_fft: planner.plan_fft_forward(pad_cols),
            row_ifft: planner.plan_fft_inverse(pad_cols),
            col_fft: planner.plan_fft_forward(pad_rows),
            col_ifft: planner.plan_fft_inverse(pad_rows),
            forward_kernel: Vec::new(),
            reverse_kernel: Vec::new(),
        };
        op.forward_kernel = op.fft2_transposed(fwd);
        op.reverse_kernel = op.fft2_transposed(rev);
        Ok(Some(op))
    }

    fn rx_natural(&self, ar: usize, ac: usize) -> usize {
        let r = if self.flip_rows { self.rx_rows - 1 - ar } else { ar };
        let c = if self.flip_cols { self.rx_cols - 1 - ac } else { ac };
        r * self.rx_cols + c
    }

    /// Row-major `pad_rows x pad_cols` grid to its 2-D spectrum, laid out
    /// `pad_cols x pad_rows`.
    fn fft2_transposed(&self, mut grid: Vec<Complex64>) -> Vec<Complex64> {
        self.row_fft.process(&mut grid);
        let mut t = transpose(&grid, self.pad_rows, self.pad_cols);
        self.col_fft.process(&mut t);
        t
    }

    /// Inverse of [`Self::fft2_transposed`], including the `1/P` scale.
    fn ifft2_from_transposed(&self, mut spectrum: Vec<Complex64>) -> Vec<Complex64> {
        self.col_ifft.process(&mut spectrum);
        let mut grid = transpose(&spectrum, self.pad_cols, self.pad_rows);
        self.row_ifft.process(&mut grid);
        let scale = 1.0 / (self.pad_rows * self.pad_cols) as f64;
        grid.iter_mut().for_each(|v| *v *= scale);
        grid
    }

    fn convolve(&self, grid: Vec<Complex64>, kernel: &[Complex64]) -> Vec<Complex64> {
        let mut spec = self.fft2_transposed(grid);
        for (s, k) in spec.iter_mut().zip(kernel) {
            *s *= k;
        }
        self.ifft2_from_transposed(spec)
    }
}

fn transpose(src: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); src.len()];
    const B: usize = 16;
    for r0 in (0..rows).step_by(B) {
        for c0 in (0..cols).step_by(B) {
            for r in r0..(r0 + B).min(rows) {
                for c in c0..(c0 + B).min(cols) {
                    out[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
    out
}

impl ChannelOperator for LatticeChannel {
    fn tx_len(&self) -> usize {
        self.tx_rows * self.tx_cols
    }

    fn rx_len(&self) -> usize {
        self.rx_rows * self.rx_cols
    }

    fn forward(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut grid = vec![Complex64::new(0.0, 0.0); self.pad_rows * self.pad_cols];
        for r in 0..self.tx_rows {
            let src = &x[r * self.tx_cols..(r + 1) * self.tx_cols];
            grid[r * self.pad_cols..r * self.pad_cols + self.tx_cols].copy_from_slice(src);
        }
        let out = self.convolve(grid, &self.forward_kernel);
        let mut y = vec![Complex64::new(0.0, 0.0); self.rx_len()];
        for ar in 0..self.rx_rows {
            for ac in 0..self.rx_cols {
                y[self.rx_natural(ar, ac)] = out[ar * self.pad_cols + ac];
            }
        }
        y
    }

    fn reverse(&self, y: &[Complex64]) -> Vec<Complex64> {
        let mut grid = vec![Complex64::new(0.0, 0.0); self.pad_rows * self.pad_cols];
        for ar in 0..self.rx_rows {
            for ac in 0..self.rx_cols {
                grid[ar * self.pad_cols + ac] = y[self.rx_natural(ar, ac)];
            }
        }
        let out = self.convolve(grid, &self.reverse_kernel);
        let mut x = Vec::with_capacity(self.tx_len());
        for r in 0..self.tx_rows {
            x.extend_from_slice(&out[r * self.pad_cols..r * self.pad_cols + self.tx_cols]);
        }
        x
    }
}

/// Best available operator: the FFT lattice form when the geometry allows it,
/// otherwise the dense matrix.
pub fn channel_operator(
    tx: &ArrayLayout,
    rx: &ArrayLayout,
    carrier: &CarrierSpec,
    params: &ChannelParams,
) -> Result<Box<dyn ChannelOperator>> {
    match LatticeChannel::try_new(tx, rx, carrier, params)? {
        Some(op) => Ok(Box::new(op)),
        None => Ok(Box::new(crate::channel::build_channel_matrix(tx, rx, carrier, params)?)),
    }
}
