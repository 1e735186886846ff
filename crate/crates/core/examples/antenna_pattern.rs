//! Principal-plane cuts of the patch element pattern.

use resonant_beam::geometry::{element_gain, AntennaPattern};

fn main() {
    let p = AntennaPattern::microstrip();
    let db = |g: f64| if g > 0.0 { 10.0 * g.log10() } else { f64::NEG_INFINITY };
    println!("{:>6} {:>9} {:>9}", "theta", "E dBi", "H dBi");
    for deg in (0..=90).step_by(10) {
        let t = (deg as f64).to_radians();
        let e = element_gain(&p, t, 0.0);
        let h = element_gain(&p, t, std::f64::consts::FRAC_PI_2);
        println!("{deg:>6} {:>9.2} {:>9.2}", db(e), db(h));
    }
}
