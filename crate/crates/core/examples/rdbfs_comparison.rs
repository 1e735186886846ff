//! Resonant link against the pilot-driven retro-directive baseline at equal
//! radiated power.

use resonant_beam::config::Config;
use resonant_beam::experiments::evaluate_link;
use resonant_beam::geometry::Vec3;

fn main() -> resonant_beam::Result<()> {
    let cfg = Config { runs: 3, ..Config::default() };
    println!("{:>5} {:>10} {:>10} {:>10}", "z m", "resonant", "baseline", "gap pp");
    for z in [0.2, 0.4, 0.6, 0.8] {
        let sc = cfg.scenario_with((20, 20), (20, 20), Vec3::new(0.0, 0.0, z))?;
        let p = evaluate_link(&cfg, sc)?;
        println!(
            "{z:>5.1} {:>10.4} {:>10.4} {:>10.2}",
            p.eta_ct,
            p.baseline.eta_ct,
            100.0 * (p.eta_ct - p.baseline.eta_ct)
        );
    }
    Ok(())
}
