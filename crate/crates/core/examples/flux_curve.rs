//! Sweeps the rationality parameter and prints mean flux, entropy production
//! and the Perron root. Negative values reverse every preference.

use pcm_entropy::{flux_curve, parse_pcm, Format};

fn main() -> pcm_entropy::Result<()> {
    let pcm = parse_pcm(include_str!("../data/tennis.csv"), Format::Csv)?;
    let gammas: Vec<f64> = (-8..=16).map(|i| i as f64 * 0.25).collect();
    println!("{:>6} {:>10} {:>10} {:>10}", "gamma", "flux", "sdot", "eta");
    for p in flux_curve(&pcm, &gammas)? {
        println!(
            "{:>6.2} {:>10.6} {:>10.6} {:>10.4}",
            p.gamma, p.flux, p.sdot, p.eta
        );
    }
    Ok(())
}
