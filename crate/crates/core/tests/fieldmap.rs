//! Spatial and aperture maps of converged links.

use resonant_beam::channel::FieldVector;
use resonant_beam::config::Config;
use resonant_beam::engine::{Engine, EngineState};
use resonant_beam::fieldmap::{phase_center, phase_map, sample_power, GridSpec, Source};
use resonant_beam::geometry::Vec3;

fn converged(mt_center: Vec3) -> (Engine, EngineState) {
    let cfg = Config::default();
    let engine = Engine::new(cfg.scenario_with((40, 40), (40, 40), mt_center).unwrap()).unwrap();
    let (report, state) = engine.run_to_convergence(0).unwrap();
    assert!(report.converged, "{report:?}");
    (engine, state)
}

#[test]
fn beam_peaks_between_the_arrays_and_is_mirror_symmetric() {
    let (engine, state) = converged(Vec3::new(0.0, 0.0, 2.0));
    let sc = engine.scenario();
    let grid = GridSpec::xoz((-0.3, 0.3), (0.0, 2.0), (61, 81));
    let src = [Source { layout: &sc.bs, field: &state.s_bs_out }];
    let map = sample_power(&src, &grid, &sc.carrier, &sc.channel).unwrap();
    assert_eq!(map.max(), 1.0);
    let (x, z) = map.argmax();
    assert!(x.abs() < 0.02, "peak off axis at x = {x}");
    assert!((0.5..=1.5).contains(&z), "peak at z = {z}, midpoint 1.0");
    let asym = map.mirror_asymmetry();
    assert!(asym < 0.05, "mirror asymmetry {asym}");

    // scaling the source leaves the normalized map untouched
    let louder = state.s_bs_out.scaled(num_complex::Complex64::new(0.0, 7.5));
    let scaled = sample_power(&[Source { layout: &sc.bs, field: &louder }], &grid, &sc.carrier, &sc.channel).unwrap();
    for (a, b) in map.values.iter().zip(&scaled.values) {
        assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
    }
}

#[test]
fn aligned_link_has_centered_isophase_circles() {
    let (engine, state) = converged(Vec3::new(0.0, 0.0, 2.0));
    let sc = engine.scenario();
    for (layout, field) in [(&sc.bs, &state.s_bs_out), (&sc.mt, &state.s_mt)] {
        let (u, v) = phase_center(&phase_map(layout, field)).unwrap();
        assert!(u.hypot(v) <= 2.0 * layout.spacing, "phase center ({u}, {v})");
    }
}

#[test]
fn offset_target_moves_the_phase_center() {
    let (engine, state) = converged(Vec3::new(0.5, 0.0, 2.0));
    let sc = engine.scenario();
    let bs: FieldVector = state.s_bs_out.clone();
    let (u, v) = phase_center(&phase_map(&sc.bs, &bs)).unwrap();
    assert!((u - 0.5).abs() <= 0.05, "BS phase center u = {u}");
    assert!(v.abs() <= 2.0 * sc.bs.spacing, "BS phase center v = {v}");
}
