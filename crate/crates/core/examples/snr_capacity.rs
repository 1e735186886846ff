//! Downlink SNR and spectral efficiency of a converged link.

use resonant_beam::config::Config;
use resonant_beam::engine::Engine;
use resonant_beam::geometry::Vec3;
use resonant_beam::report::{resonant_link, Receiver};

fn main() -> resonant_beam::Result<()> {
    let cfg = Config::default();
    for z in [0.3, 0.5, 0.7] {
        let engine = Engine::new(cfg.scenario_with((20, 20), (20, 20), Vec3::new(0.0, 0.0, z))?)?;
        let rx = Receiver::for_engine(&engine, cfg.harvest_params(), cfg.comms_params());
        let (report, state) = engine.run_to_convergence(0)?;
        let link = resonant_link(&engine, &report, &state, &rx)?;
        println!(
            "z = {z} m  converged={}  p_center={:.3e} W  SNR={:.1} dB  C={:.2} bps/Hz  P_dc={:.3} W",
            link.converged, link.p_center, link.snr_db, link.spectral_efficiency, link.p_dc
        );
    }
    Ok(())
}
