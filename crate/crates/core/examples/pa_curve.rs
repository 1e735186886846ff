//! Output power and gain of the saturating base-station amplifier.

use resonant_beam::circuits::AmplifierParams;

fn main() {
    let pa = AmplifierParams::default();
    println!("{:>10} {:>10} {:>9}", "P_in dBm", "P_out dBm", "gain dB");
    for i in 0..=12 {
        let dbm = -20.0 + 5.0 * i as f64;
        let p_in = 1e-3 * 10f64.powf(dbm / 10.0);
        let p_out = pa.output_power(p_in);
        println!(
            "{dbm:>10.1} {:>10.2} {:>9.2}",
            10.0 * (p_out / 1e-3).log10(),
            10.0 * pa.gain(p_in).log10()
        );
    }
}
