//! Planar antenna array layouts, element-pair link geometry and element gain
//! patterns.
//!
//! Every array is a rectangular grid lying in a plane. The plane is described
//! by its boresight `normal` and two in-plane grid axes `u` (columns) and `v`
//! (rows), chosen so that `(u, v, normal)` is right-handed. Element `r * cols + c`
//! sits at
//!
//! ```text
//! center + (c - (cols - 1) / 2) * spacing * u + (r - (rows - 1) / 2) * spacing * v
//! ```
//!
//! Angles are measured in each array's own frame: `theta` from the normal,
//! `phi` from the `u` axis towards `v`.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type Vec3 = Vector3<f64>;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Carrier frequency, wavelength and signal bandwidth of the link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarrierSpec {
    pub frequency: f64,
    pub wavelength: f64,
    pub speed: f64,
    pub bandwidth: f64,
}

impl CarrierSpec {
    pub fn new(frequency: f64, bandwidth: f64) -> Result<Self> {
        Self::with_speed(frequency, bandwidth, SPEED_OF_LIGHT)
    }

    pub fn with_speed(frequency: f64, bandwidth: f64, speed: f64) -> Result<Self> {
        if !(frequency > 0.0 && frequency.is_finite()) {
            return Err(invalid(format!("carrier frequency must be > 0, got {frequency}")));
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(invalid(format!("bandwidth must be > 0, got {bandwidth}")));
        }
        if !(speed > 0.0 && speed.is_finite()) {
            return Err(invalid(format!("propagation speed must be > 0, got {speed}")));
        }
        Ok(Self {
            frequency,
            wavelength: speed / frequency,
            speed,
            bandwidth,
        })
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }
}

/// Element radiation pattern family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatternKind {
    Isotropic,
    Microstrip,
}

/// Directional gain of one array element.
///
/// The microstrip pattern is the two-slot cavity model of a rectangular patch
/// on a thin substrate:
///
/// ```text
/// U(theta, phi) = cos^2(pi Le sin(theta) cos(phi))
///               * sinc^2(pi We sin(theta) sin(phi))
///               * (cos^2(phi) + cos^2(theta) sin^2(phi))
/// ```
///
/// with radiating length `Le` and width `We` in wavelengths. `U(0, phi) = 1`,
/// so the gain is `peak_gain * U`. The E-plane is `phi = 0`, the H-plane
/// `phi = pi/2`; both fall to a null at grazing incidence. The half-space
/// behind the ground plane receives zero gain. The isotropic kind radiates
/// equally in every direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntennaPattern {
    pub kind: PatternKind,
    pub peak_gain: f64,
}

impl AntennaPattern {
    /// Effective radiating length of the patch, wavelengths.
    pub const PATCH_LENGTH: f64 = 0.5;
    /// Radiating edge width of the patch, wavelengths.
    pub const PATCH_WIDTH: f64 = 0.4;

    pub const fn isotropic() -> Self {
        Self {
            kind: PatternKind::Isotropic,
            peak_gain: 1.0,
        }
    }

    /// Patch element with boresight gain `pi` (about 5 dBi).
    pub const fn microstrip() -> Self {
        Self {
            kind: PatternKind::Microstrip,
            peak_gain: PI,
        }
    }

    pub fn with_peak_gain(self, peak_gain: f64) -> Self {
        Self { peak_gain, ..self }
    }

    /// Normalised power pattern, `1` at boresight.
    pub fn shape(&self, theta: f64, phi: f64) -> f64 {
        match self.kind {
            PatternKind::Isotropic => 1.0,
            PatternKind::Microstrip if theta > FRAC_PI_2 + 1e-12 => 0.0,
            PatternKind::Microstrip => {
                let (st, ct) = theta.sin_cos();
                let (sp, cp) = phi.sin_cos();
                let e = (PI * Self::PATCH_LENGTH * st * cp).cos();
                let h = sinc(PI * Self::PATCH_WIDTH * st * sp);
                (e * e * h * h * (cp * cp + ct * ct * sp * sp)).max(0.0)
            }
        }
    }

    /// Linear gain towards `(theta, phi)` in the element frame.
    pub fn gain(&self, theta: f64, phi: f64) -> f64 {
        self.peak_gain * self.shape(theta, phi)
    }
}

impl Default for AntennaPattern {
    fn default() -> Self {
        Self::microstrip()
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Gain of `pattern` towards `(theta, phi)`.
pub fn element_gain(pattern: &AntennaPattern, theta: f64, phi: f64) -> f64 {
    pattern.gain(theta, phi)
}

/// Direction relative to an array frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Angles {
    pub theta: f64,
    pub phi: f64,
}

/// Rectangular planar array.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayLayout {
    pub rows: usize,
    pub cols: usize,
    pub spacing: f64,
    pub center: Vec3,
    pub normal: Vec3,
    pub u_axis: Vec3,
    pub v_axis: Vec3,
    pub positions: Vec<Vec3>,
    pub pattern: AntennaPattern,
}

/// Builds a `rows x cols` grid centred on `center` in the plane orthogonal to
/// `normal`.
///
/// The column axis `u` is the projection of global `x` onto the plane (global
/// `y` if the normal is along `x`).
pub fn build_planar_array(
    rows: usize,
    cols: usize,
    spacing: f64,
    center: Vec3,
    normal: Vec3,
    pattern: AntennaPattern,
) -> Result<ArrayLayout> {
    if rows == 0 || cols == 0 {
        return Err(invalid(format!("array needs at least one row and column, got {rows}x{cols}")));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(invalid(format!("element spacing must be > 0, got {spacing}")));
    }
    if !center.iter().all(|c| c.is_finite()) {
        return Err(invalid("array center must be finite"));
    }
    if (normal.norm() - 1.0).abs() > 1e-9 {
        return Err(invalid(format!("array normal must be a unit vector, |n| = {}", normal.norm())));
    }
    if !(pattern.peak_gain >= 0.0 && pattern.peak_gain.is_finite()) {
        return Err(invalid(format!("peak gain must be >= 0, got {}", pattern.peak_gain)));
    }

    let reference = if normal.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let u_axis = (reference - normal * normal.dot(&reference)).normalize();
    let v_axis = normal.cross(&u_axis);

    let row_mid = (rows as f64 - 1.0) / 2.0;
    let col_mid = (cols as f64 - 1.0) / 2.0;
    let mut positions = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let du = (c as f64 - col_mid) * spacing;
            let dv = (r as f64 - row_mid) * spacing;
            positions.push(center + u_axis * du + v_axis * dv);
        }
    }

    Ok(ArrayLayout {
        rows,
        cols,
        spacing,
        center,
        normal,
        u_axis,
        v_axis,
        positions,
        pattern,
    })
}

impl ArrayLayout {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Side lengths of the element grid (first to last element), m.
    pub fn extent(&self) -> (f64, f64) {
        (
            (self.cols as f64 - 1.0) * self.spacing,
            (self.rows as f64 - 1.0) * self.spacing,
        )
    }

    /// Index of the element nearest the array center; for even counts the
    /// element just past the midpoint on each axis.
    pub fn central_index(&self) -> usize {
        (self.rows / 2) * self.cols + self.cols / 2
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    /// In-plane coordinates `(u, v)` of an element relative to the center.
    pub fn local_coordinates(&self, index: usize) -> (f64, f64) {
        let d = self.positions[index] - self.center;
        (d.dot(&self.u_axis), d.dot(&self.v_axis))
    }

    /// Direction of `to - from_element` in this array's frame.
    pub fn angles_towards(&self, direction: &Vec3) -> Angles {
        let len = direction.norm();
        let w = (direction.dot(&self.normal) / len).clamp(-1.0, 1.0);
        let x = direction.dot(&self.u_axis);
        let y = direction.dot(&self.v_axis);
        Angles {
            theta: w.acos(),
            phi: y.atan2(x),
        }
    }

    /// Gain of element pattern towards a global-frame direction.
    pub fn gain_towards(&self, direction: &Vec3) -> f64 {
        let a = self.angles_towards(direction);
        self.pattern.gain(a.theta, a.phi)
    }

    /// Same grid moved so that its center sits at `center`.
    pub fn translated(&self, center: Vec3) -> ArrayLayout {
        let shift = center - self.center;
        ArrayLayout {
            center,
            positions: self.positions.iter().map(|p| p + shift).collect(),
            ..self.clone()
        }
    }

    /// Splits the grid into `row_parts x col_parts` contiguous sub-arrays,
    /// listed row-major. Each sub-array keeps the parent's orientation and
    /// spacing; trailing rows/columns go to the last block.
    pub fn subarrays(&self, row_parts: usize, col_parts: usize) -> Result<Vec<ArrayLayout>> {
        if row_parts == 0 || col_parts == 0 || row_parts > self.rows || col_parts > self.cols {
            return Err(invalid(format!(
                "cannot split a {}x{} array into {row_parts}x{col_parts} blocks",
                self.rows, self.cols
            )));
        }
        let bounds = |n: usize, parts: usize| -> Vec<(usize, usize)> {
            let base = n / parts;
            (0..parts)
                .map(|i| {
                    let start = i * base;
                    let end = if i + 1 == parts { n } else { start + base };
                    (start, end)
                })
                .collect()
        };
        let mut out = Vec::with_capacity(row_parts * col_parts);
        for (r0, r1) in bounds(self.rows, row_parts) {
            for (c0, c1) in bounds(self.cols, col_parts) {
                let mut sum = Vec3::zeros();
                for r in r0..r1 {
                    for c in c0..c1 {
                        sum += self.positions[self.index(r, c)];
                    }
                }
                let n = ((r1 - r0) * (c1 - c0)) as f64;
                let sub = build_planar_array(
                    r1 - r0,
                    c1 - c0,
                    self.spacing,
                    sum / n,
                    self.normal,
                    self.pattern,
                )?;
                out.push(ArrayLayout {
                    u_axis: self.u_axis,
                    v_axis: self.v_axis,
                    ..sub
                });
            }
        }
        Ok(out)
    }
}

/// Distance and angles of the path between one element of each array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    pub distance: f64,
    pub departure: Angles,
    pub arrival: Angles,
}

pub fn link_geometry(
    tx: &ArrayLayout,
    tx_index: usize,
    rx: &ArrayLayout,
    rx_index: usize,
) -> Result<LinkGeometry> {
    let from = tx
        .positions
        .get(tx_index)
        .ok_or_else(|| invalid(format!("tx index {tx_index} out of range ({})", tx.len())))?;
    let to = rx
        .positions
        .get(rx_index)
        .ok_or_else(|| invalid(format!("rx index {rx_index} out of range ({})", rx.len())))?;
    let d = to - from;
    let distance = d.norm();
    if !(distance > 0.0) {
        return Err(Error::DegenerateGeometry(format!(
            "tx element {tx_index} and rx element {rx_index} coincide"
        )));
    }
    Ok(LinkGeometry {
        distance,
        departure: tx.angles_towards(&d),
        arrival: rx.angles_towards(&(-d)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn z_array(rows: usize, cols: usize, spacing: f64, pattern: AntennaPattern) -> ArrayLayout {
        build_planar_array(rows, cols, spacing, Vec3::zeros(), Vec3::z(), pattern).unwrap()
    }

    #[test]
    fn forty_by_forty_extent() {
        let a = z_array(40, 40, 0.005, AntennaPattern::microstrip());
        assert_eq!(a.len(), 1600);
        let xs: Vec<f64> = a.positions.iter().map(|p| p.x).collect();
        let ys: Vec<f64> = a.positions.iter().map(|p| p.y).collect();
        let span = |v: &[f64]| {
            v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min)
        };
        assert_relative_eq!(span(&xs), 39.0 * 0.005, epsilon = 1e-12);
        assert_relative_eq!(span(&ys), 0.195, epsilon = 1e-12);
        assert!(a.positions.iter().all(|p| p.z.abs() < 1e-15));
    }

    #[test]
    fn half_wavelength_grid_spans_mt_aperture() {
        let carrier = CarrierSpec::new(30e9, 500e6).unwrap();
        let a = z_array(40, 40, carrier.wavelength / 2.0, AntennaPattern::microstrip());
        let (w, h) = a.extent();
        assert!((w - 0.2).abs() < 0.01 && (h - 0.2).abs() < 0.01, "{w} {h}");
    }

    #[test]
    fn single_element_at_center() {
        let c = Vec3::new(0.3, -0.1, 2.0);
        let a = build_planar_array(1, 1, 0.7, c, Vec3::z(), AntennaPattern::isotropic()).unwrap();
        assert_eq!(a.positions, vec![c]);
        assert_eq!(a.central_index(), 0);
    }

    #[test]
    fn rejects_bad_parameters() {
        let p = AntennaPattern::isotropic();
        assert!(matches!(
            build_planar_array(2, 2, 0.0, Vec3::zeros(), Vec3::z(), p),
            Err(Error::InvalidParameter(_))
        ));
        assert!(build_planar_array(2, 2, -1.0, Vec3::zeros(), Vec3::z(), p).is_err());
        assert!(build_planar_array(0, 2, 1.0, Vec3::zeros(), Vec3::z(), p).is_err());
        assert!(build_planar_array(2, 2, 1.0, Vec3::zeros(), Vec3::new(0.0, 0.0, 2.0), p).is_err());
    }

    #[test]
    fn grid_lies_in_plane_with_exact_pitch() {
        let n = Vec3::new(1.0, 1.0, 1.0).normalize();
        let a = build_planar_array(3, 4, 0.01, Vec3::new(1.0, 2.0, 3.0), n, AntennaPattern::isotropic())
            .unwrap();
        for p in &a.positions {
            assert!((p - a.center).dot(&n).abs() < 1e-14);
        }
        assert_relative_eq!((a.positions[1] - a.positions[0]).norm(), 0.01, epsilon = 1e-14);
        assert_relative_eq!((a.positions[4] - a.positions[0]).norm(), 0.01, epsilon = 1e-14);
        assert_relative_eq!(a.u_axis.cross(&a.v_axis).dot(&n), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn even_grid_is_point_symmetric() {
        let a = z_array(4, 6, 0.005, AntennaPattern::isotropic());
        for p in &a.positions {
            let mirrored = 2.0 * a.center - p;
            assert!(a.positions.iter().any(|q| (q - mirrored).norm() < 1e-14));
        }
    }

    #[test]
    fn microstrip_peak_is_pi_and_phi_independent() {
        let p = AntennaPattern::microstrip();
        for phi in [0.0, 0.3, 1.0, 2.5, -1.2] {
            assert_relative_eq!(element_gain(&p, 0.0, phi), PI, epsilon = 1e-15);
        }
        assert_eq!(element_gain(&AntennaPattern::isotropic(), 1.1, 0.4), 1.0);
    }

    #[test]
    fn microstrip_rolls_off_monotonically_in_principal_planes() {
        let p = AntennaPattern::microstrip();
        for phi in [0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2] {
            let mut prev = f64::INFINITY;
            for i in 0..=900 {
                let theta = FRAC_PI_2 * i as f64 / 900.0;
                let g = p.gain(theta, phi);
                assert!(g <= prev + 1e-15, "phi {phi} theta {theta}");
                assert!(g >= 0.0);
                prev = g;
            }
            // at least 15 dB down at grazing
            assert!(p.gain(FRAC_PI_2, phi) <= PI * 10f64.powf(-1.5));
        }
    }

    #[test]
    fn behind_plane_gain_is_zero() {
        let p = AntennaPattern::microstrip();
        assert_eq!(p.gain(2.0, 0.0), 0.0);
        let iso = AntennaPattern::isotropic();
        assert_eq!(iso.gain(PI, 0.0), 1.0);
    }

    #[test]
    fn boresight_link() {
        let tx = z_array(1, 1, 0.005, AntennaPattern::microstrip());
        let rx = build_planar_array(1, 1, 0.005, Vec3::new(0.0, 0.0, 2.0), -Vec3::z(), AntennaPattern::microstrip())
            .unwrap();
        let g = link_geometry(&tx, 0, &rx, 0).unwrap();
        assert_relative_eq!(g.distance, 2.0);
        assert_relative_eq!(g.departure.theta, 0.0);
        assert_relative_eq!(g.arrival.theta, 0.0);
    }

    #[test]
    fn offset_link_angles() {
        let tx = z_array(1, 1, 0.005, AntennaPattern::microstrip());
        let rx = build_planar_array(1, 1, 0.005, Vec3::new(0.5, 0.0, 2.0), -Vec3::z(), AntennaPattern::microstrip())
            .unwrap();
        let g = link_geometry(&tx, 0, &rx, 0).unwrap();
        assert_relative_eq!(g.distance, 4.25f64.sqrt(), epsilon = 1e-14);
        assert_relative_eq!(g.departure.theta, 0.25f64.atan(), epsilon = 1e-14);
        assert_relative_eq!(g.departure.theta.to_degrees(), 14.036, epsilon = 1e-3);
        assert_relative_eq!(g.arrival.theta, 0.25f64.atan(), epsilon = 1e-14);
        assert_relative_eq!(g.departure.phi, 0.0, epsilon = 1e-14);
        let back = link_geometry(&rx, 0, &tx, 0).unwrap();
        assert_eq!(back.distance, g.distance);
    }

    #[test]
    fn coincident_elements_are_degenerate() {
        let a = z_array(2, 2, 0.005, AntennaPattern::isotropic());
        assert!(matches!(link_geometry(&a, 1, &a, 1), Err(Error::DegenerateGeometry(_))));
        assert!(matches!(link_geometry(&a, 9, &a, 1), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn subarrays_partition_parent() {
        let a = z_array(40, 40, 0.005, AntennaPattern::microstrip());
        let subs = a.subarrays(2, 2).unwrap();
        assert_eq!(subs.len(), 4);
        assert_eq!(subs.iter().map(|s| s.len()).sum::<usize>(), 1600);
        for s in &subs {
            for p in &s.positions {
                assert!(a.positions.iter().any(|q| (q - p).norm() < 1e-12));
            }
        }
    }
}
