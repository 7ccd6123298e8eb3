//! Splits entropy production over comparisons and alternatives to find the
//! judgments most worth revisiting.

use pcm_entropy::{decompose, induce, parse_pcm, DecomposeBy, Format};

fn main() -> pcm_entropy::Result<()> {
    let pcm = parse_pcm(include_str!("../data/tennis.csv"), Format::Csv)?;
    let labels = pcm.labels();
    let model = induce(&pcm, 1.0)?;
    println!("sdot = {:.6}  (eta = {:.6})", model.sdot, model.eta);

    let mut pairs = decompose(&model, DecomposeBy::Comparison);
    pairs.sort_by(|x, y| y.value.total_cmp(&x.value));
    println!("\nby comparison:");
    for c in &pairs {
        let b = c.b.expect("pair contributions name both ends");
        let share = 100.0 * c.value / model.sdot;
        println!(
            "  {}-{}  {:.6}  {share:5.1}%",
            labels[c.a], labels[b], c.value
        );
    }

    println!("\nby alternative:");
    for c in decompose(&model, DecomposeBy::Alternative) {
        println!("  {}  {:.6}", labels[c.a], c.value);
    }
    Ok(())
}
