//! Draws random 5x5 matrices of varying inconsistency and correlates entropy
//! production with CI and HCI.
//!
//! `cargo run --example correlation_study -- [count] [seed]`

use pcm_entropy::{correlation_study, GeneratorSpec};

fn main() -> pcm_entropy::Result<()> {
    let mut args = std::env::args().skip(1);
    let count = args.next().and_then(|s| s.parse().ok()).unwrap_or(500);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(7);

    let study = correlation_study(&GeneratorSpec::new(5, (0.0, 4.0), seed, count), 1.0)?;
    println!("{count} matrices, seed {seed}");
    println!(
        "pearson r^2   sdot~CI {:.3}  sdot~HCI {:.3}",
        study.r2_ci, study.r2_hci
    );
    println!(
        "spearman r^2  sdot~CI {:.3}  sdot~HCI {:.3}",
        study.rank_r2_ci, study.rank_r2_hci
    );
    println!(
        "mean sdot by alpha quartile: {:.4?}",
        study.binned_mean_sdot(4)
    );
    Ok(())
}
