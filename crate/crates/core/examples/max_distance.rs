//! Longest on-axis distance at which two equal arrays still resonate.

use resonant_beam::config::Config;
use resonant_beam::experiments::max_distance;

fn main() -> resonant_beam::Result<()> {
    let mut cfg = Config::default();
    cfg.sweep.distance_tolerance = 0.01;
    for side in [10, 20] {
        let b = max_distance(&cfg, (side, side), (side, side), 1)?;
        println!(
            "{side}x{side}: resonates at {:.3} m, fails at {:.3} m (mode efficiency {:.3} / {:.3}, {} probes)",
            b.lower, b.upper, b.lower_mode_eta, b.upper_mode_eta, b.probes
        );
    }
    Ok(())
}
