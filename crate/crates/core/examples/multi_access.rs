//! Time- and frequency-division sharing of one base station between three
//! targets.

use resonant_beam::multiaccess::{allocate_fdma, allocate_tdma, Demand, LinkSummary};

fn main() -> resonant_beam::Result<()> {
    let demands = [
        Demand { mt_id: 0, priority: 1.0, requested: 1.0 },
        Demand { mt_id: 1, priority: 2.0, requested: 1.0 },
        Demand { mt_id: 2, priority: 1.0, requested: 2.0 },
    ];
    let links = [
        LinkSummary { eta_c: 0.93, p_bs: 17.8 },
        LinkSummary { eta_c: 0.88, p_bs: 18.4 },
        LinkSummary { eta_c: 0.90, p_bs: 18.1 },
    ];
    let plan = allocate_tdma(&demands, &links, 1e-4, 2e-6)?;
    println!("TDMA frame {:.0} us, resonance time {:.1} us", plan.frame * 1e6, plan.t_res * 1e6);
    for s in &plan.slots {
        println!("  MT {}  T_on = {:>6.2} us  average power = {:.3} W", s.mt_id, s.t_on * 1e6, s.avg_power);
    }

    let fdma = allocate_fdma(20.0, &[3.0, 1.0], 4, 30e9, 500e6)?;
    println!("FDMA over {} bands, {} W total", fdma.bands.len(), fdma.p_total);
    for b in &fdma.bands {
        println!("  band {} at {:.2} GHz: {:.2} W", b.band_id, b.frequency / 1e9, b.power);
    }
    Ok(())
}
