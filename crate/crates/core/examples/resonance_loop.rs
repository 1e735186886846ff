//! Runs one resonant link from thermal noise to steady state and prints the
//! power ledger every few iterations.

use resonant_beam::config::Config;
use resonant_beam::engine::Engine;
use resonant_beam::geometry::Vec3;

fn main() -> resonant_beam::Result<()> {
    let cfg = Config::default();
    let scenario = cfg.scenario_with((20, 20), (20, 20), Vec3::new(0.0, 0.0, 0.6))?;
    let engine = Engine::new(scenario)?;
    let (report, state) = engine.run_to_convergence(0)?;

    println!("{:>5} {:>12} {:>12} {:>8} {:>8}", "k", "P_BS [W]", "P_MT [W]", "eta_cT", "G_a");
    for row in state.history.iter().step_by(5) {
        println!(
            "{:>5} {:>12.4e} {:>12.4e} {:>8.4} {:>8.2}",
            row.k, row.p_bs, row.p_mt, row.eta_ct, row.pa_gain
        );
    }
    println!(
        "converged={} after {} iterations ({:.1} ns), P_BS={:.3} W, eta_cT={:.4}, residual={:.1e}",
        report.converged,
        report.iterations,
        report.time_to_converge * 1e9,
        report.p_bs,
        report.eta_ct,
        report.self_reproduction_residual
    );
    Ok(())
}
