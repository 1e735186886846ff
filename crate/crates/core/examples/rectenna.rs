//! DC output of the voltage-doubler and single-diode rectifiers against
//! incident power.

use resonant_beam::harvest::{conversion_efficiency, solve_rectifier, HarvestParams, Rectifier};

fn main() -> resonant_beam::Result<()> {
    let h = HarvestParams::default();
    println!("{:>10} {:>10} {:>8} {:>10}", "P_inc W", "V0 dbl", "eta dbl", "V0 single");
    for e in -12..=0 {
        let p = 10f64.powf(e as f64 / 2.0);
        let d = solve_rectifier(p, &h, Rectifier::Doubler)?;
        let s = solve_rectifier(p, &h, Rectifier::SingleDiode)?;
        println!(
            "{p:>10.2e} {:>10.4} {:>8.4} {:>10.4}",
            d.v0,
            conversion_efficiency(d.v0, d.p_acc, h.load_resistance),
            s.v0
        );
    }
    Ok(())
}
