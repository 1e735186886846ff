//! Power density between the arrays of a converged link, drawn as text.

use resonant_beam::config::Config;
use resonant_beam::engine::Engine;
use resonant_beam::fieldmap::{phase_center, phase_map, sample_power, GridSpec, Source};
use resonant_beam::geometry::Vec3;

fn main() -> resonant_beam::Result<()> {
    let cfg = Config::default();
    let engine = Engine::new(cfg.scenario_with((20, 20), (20, 20), Vec3::new(0.05, 0.0, 0.6))?)?;
    let (_, state) = engine.run_to_convergence(0)?;
    let sc = engine.scenario();

    let grid = GridSpec::xoz((-0.1, 0.15), (0.0, 0.6), (41, 25));
    let map = sample_power(&[Source { layout: &sc.bs, field: &state.s_bs_out }], &grid, &sc.carrier, &sc.channel)?;
    let shades = [' ', '.', ':', '-', '=', '+', '*', '#', '%', '@'];
    let na = map.a_values.len();
    for b in (0..map.b_values.len()).rev() {
        let line: String = (0..na)
            .map(|a| shades[((map.values[b * na + a] * 9.0).round() as usize).min(9)])
            .collect();
        println!("{:>5.2} |{line}|", map.b_values[b]);
    }
    let (x, z) = map.argmax();
    println!("peak at x = {x:.3} m, z = {z:.3} m");

    let (u, v) = phase_center(&phase_map(&sc.bs, &state.s_bs_out))?;
    println!("base-station isophase center at ({u:.3}, {v:.3}) m");
    Ok(())
}
