//! Serving several mobile targets from one base station.
//!
//! Under TDMA each target owns a slot of the frame; the first `T_res` of every
//! slot is spent re-establishing resonance and carries no power. Under FDMA
//! the base-station array is split into sub-arrays, each resonating with one
//! target on its own carrier.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::ArrayLayout;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Demand {
    pub mt_id: usize,
    pub priority: f64,
    /// Requested average power, W.
    pub requested: f64,
}

/// Converged link of one target served alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkSummary {
    pub eta_c: f64,
    pub p_bs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TdmaSlot {
    pub mt_id: usize,
    pub t_on: f64,
    pub avg_power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TdmaPlan {
    pub frame: f64,
    pub t_res: f64,
    pub slots: Vec<TdmaSlot>,
}

impl TdmaPlan {
    pub fn occupied(&self) -> f64 {
        self.slots.iter().map(|s| s.t_on).sum()
    }
}

/// Average power delivered over a frame by a slot of length `t_on`:
/// `(t_on - t_res) / frame * eta * p_bs`, zero for slots no longer than
/// `t_res`.
pub fn tdma_average_power(t_on: f64, t_res: f64, frame: f64, eta_c: f64, p_bs: f64) -> f64 {
    if t_on <= t_res {
        0.0
    } else {
        (t_on - t_res) / frame * eta_c * p_bs
    }
}

/// Splits the frame in proportion to `priority * requested`.
///
/// Every served target first receives `t_res`; the remaining time is shared
/// by weight. When the frame cannot cover `t_res` for all of them, the
/// lowest-weight targets are dropped (zero-length slots) until it can.
pub fn allocate_tdma(demands: &[Demand], links: &[LinkSummary], frame: f64, t_res: f64) -> Result<TdmaPlan> {
    if demands.is_empty() {
        return Err(Error::Infeasible("no demands".into()));
    }
    if demands.len() != links.len() {
        return Err(invalid(format!("{} demands but {} links", demands.len(), links.len())));
    }
    if !(t_res >= 0.0 && frame > t_res && frame.is_finite()) {
        return Err(Error::Infeasible(format!(
            "frame {frame} s must exceed the resonance time {t_res} s"
        )));
    }
    for d in demands {
        if !(d.priority >= 0.0 && d.priority.is_finite() && d.requested >= 0.0 && d.requested.is_finite()) {
            return Err(invalid(format!("demand of target {} must be finite and >= 0", d.mt_id)));
        }
    }
    let weights: Vec<f64> = demands.iter().map(|d| d.priority * d.requested).collect();
    let mut active: Vec<usize> = (0..demands.len()).filter(|&i| weights[i] > 0.0).collect();
    if active.is_empty() {
        return Err(Error::Infeasible("all demands are zero".into()));
    }
    // heaviest first; ties keep input order
    active.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    while frame - active.len() as f64 * t_res <= 0.0 {
        active.pop();
    }
    let usable = frame - active.len() as f64 * t_res;
    let total: f64 = active.iter().map(|&i| weights[i]).sum();

    let mut t_on = vec![0.0; demands.len()];
    for &i in &active {
        t_on[i] = t_res + usable * weights[i] / total;
    }
    // rounding can leave the total a few ulps over the frame
    loop {
        let excess = t_on.iter().sum::<f64>() - frame;
        if excess <= 0.0 {
            break;
        }
        let h = &mut t_on[active[0]];
        *h -= excess.max(*h * f64::EPSILON);
    }

    let slots = demands
        .iter()
        .zip(links)
        .zip(&t_on)
        .map(|((d, l), &t)| TdmaSlot {
            mt_id: d.mt_id,
            t_on: t,
            avg_power: tdma_average_power(t, t_res, frame, l.eta_c, l.p_bs),
        })
        .collect();
    Ok(TdmaPlan { frame, t_res, slots })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub band_id: usize,
    pub frequency: f64,
    /// Radiated power assigned to the band, W.
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdmaPlan {
    pub bands: Vec<Band>,
    pub p_total: f64,
}

/// Shares `p_total` among bands in proportion to `demands`; band `i` sits at
/// `base_frequency + i * band_spacing`.
pub fn allocate_fdma(
    p_total: f64,
    demands: &[f64],
    available_bands: usize,
    base_frequency: f64,
    band_spacing: f64,
) -> Result<FdmaPlan> {
    if demands.len() > available_bands {
        return Err(Error::CapacityExceeded {
            requested: demands.len(),
            available: available_bands,
        });
    }
    if demands.is_empty() {
        return Err(Error::Infeasible("no demands".into()));
    }
    if !(p_total > 0.0 && p_total.is_finite()) {
        return Err(invalid(format!("total power must be > 0, got {p_total}")));
    }
    if demands.iter().any(|d| !(*d >= 0.0 && d.is_finite())) {
        return Err(invalid("band demands must be finite and >= 0"));
    }
    let total: f64 = demands.iter().sum();
    if total <= 0.0 {
        return Err(Error::Infeasible("all demands are zero".into()));
    }
    let bands = demands
        .iter()
        .enumerate()
        .map(|(i, d)| Band {
            band_id: i,
            frequency: base_frequency + i as f64 * band_spacing,
            power: p_total * d / total,
        })
        .collect();
    Ok(FdmaPlan { bands, p_total })
}

/// Base-station sub-arrays for FDMA, one per band.
pub fn fdma_subarrays(bs: &ArrayLayout, row_parts: usize, col_parts: usize) -> Result<Vec<ArrayLayout>> {
    bs.subarrays(row_parts, col_parts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn link(eta: f64) -> LinkSummary {
        LinkSummary { eta_c: eta, p_bs: 10.0 }
    }

    #[test]
    fn single_target_gets_whole_frame() {
        let d = [Demand { mt_id: 7, priority: 1.0, requested: 2.0 }];
        let p = allocate_tdma(&d, &[link(0.9)], 1.0, 0.1).unwrap();
        assert_eq!(p.slots[0].t_on, 1.0);
        assert_relative_eq!(p.slots[0].avg_power, 0.9 * 0.9 * 10.0, max_relative = 1e-15);
    }

    #[test]
    fn symmetric_targets_share_equally() {
        let d = [
            Demand { mt_id: 0, priority: 1.0, requested: 1.0 },
            Demand { mt_id: 1, priority: 1.0, requested: 1.0 },
        ];
        let p = allocate_tdma(&d, &[link(0.8), link(0.8)], 1.0, 0.05).unwrap();
        assert_eq!(p.slots[0].t_on, p.slots[1].t_on);
        assert_eq!(p.slots[0].avg_power, p.slots[1].avg_power);
        assert!(p.occupied() <= 1.0);
    }

    #[test]
    fn drops_lightest_when_frame_too_short() {
        let d = [
            Demand { mt_id: 0, priority: 1.0, requested: 1.0 },
            Demand { mt_id: 1, priority: 3.0, requested: 1.0 },
            Demand { mt_id: 2, priority: 2.0, requested: 1.0 },
        ];
        let p = allocate_tdma(&d, &[link(0.9), link(0.9), link(0.9)], 1.0, 0.4).unwrap();
        assert_eq!(p.slots[0].t_on, 0.0);
        assert_eq!(p.slots[0].avg_power, 0.0);
        assert!(p.slots[1].t_on > p.slots[2].t_on);
        assert!(p.occupied() <= 1.0);
    }

    #[test]
    fn infeasible_inputs() {
        let d = [Demand { mt_id: 0, priority: 1.0, requested: 0.0 }];
        assert!(matches!(allocate_tdma(&d, &[link(0.9)], 1.0, 0.1), Err(Error::Infeasible(_))));
        let d = [Demand { mt_id: 0, priority: 1.0, requested: 1.0 }];
        assert!(matches!(allocate_tdma(&d, &[link(0.9)], 0.1, 0.1), Err(Error::Infeasible(_))));
        assert!(matches!(allocate_tdma(&[], &[], 1.0, 0.1), Err(Error::Infeasible(_))));
    }

    #[test]
    fn fdma_examples() {
        let p = allocate_fdma(20.0, &[1.0], 4, 30e9, 500e6).unwrap();
        assert_eq!(p.bands[0].power, 20.0);
        let p = allocate_fdma(20.0, &[1.0; 4], 4, 30e9, 500e6).unwrap();
        assert!(p.bands.iter().all(|b| b.power == 5.0));
        assert_eq!(p.bands[3].frequency, 30e9 + 1.5e9);
        let p = allocate_fdma(20.0, &[3.0, 1.0], 4, 30e9, 500e6).unwrap();
        assert_eq!(p.bands[0].power, 15.0);
        assert_eq!(p.bands[1].power, 5.0);
        assert!(matches!(
            allocate_fdma(20.0, &[1.0; 5], 4, 30e9, 500e6),
            Err(Error::CapacityExceeded { requested: 5, available: 4 })
        ));
    }
}
