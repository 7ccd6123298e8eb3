//! Ranks six players from an incomplete set of head-to-head comparisons.
//!
//! The scale is the Perron vector of the raw matrix divided by that of its
//! comparison graph, which removes the advantage of having been compared more
//! often.

use pcm_entropy::{parse_pcm, report, scale_breakdown, Format};

fn main() -> pcm_entropy::Result<()> {
    let pcm = parse_pcm(include_str!("../data/tennis.csv"), Format::Csv)?;
    let parts = scale_breakdown(&pcm)?;

    println!("{:>4} {:>7} {:>7} {:>7}", "", "graph", "raw", "scale");
    for (i, label) in pcm.labels().iter().enumerate() {
        println!(
            "{label:>4} {:>7.3} {:>7.3} {:>7.3}",
            parts.nu[i], parts.g[i], parts.f[i]
        );
    }

    let r = report(&pcm, 1.0)?;
    println!("\nranking:");
    for (label, value) in r.ranking() {
        println!("  {label} {value:.4}");
    }
    println!("entropy production {:.6}", r.sdot);
    Ok(())
}
