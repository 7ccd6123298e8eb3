//! Completes the tennis matrix by averaging log products over every simple
//! path between each unrelated pair, then compares the two rankings.

use pcm_entropy::{
    eigenvector_scale, enumerate_paths, harker_fill, incomplete_preference_scale, parse_pcm,
    saaty_ci, Format,
};

fn main() -> pcm_entropy::Result<()> {
    let pcm = parse_pcm(include_str!("../data/tennis.csv"), Format::Csv)?;
    let graph = pcm.adjacency();
    let (a, d) = (pcm.label_index("A").unwrap(), pcm.label_index("D").unwrap());
    println!(
        "{} paths from A to D",
        enumerate_paths(&graph, a, d)?.paths.len()
    );

    let filled = harker_fill(&pcm)?;
    print!("{}", filled.to_csv());
    println!("CI of the completed matrix {:.4}", saaty_ci(&filled)?);

    let fh = eigenvector_scale(&filled)?;
    let f = incomplete_preference_scale(&pcm)?;
    println!("\n{:>4} {:>8} {:>8}", "", "filled", "direct");
    for (i, label) in pcm.labels().iter().enumerate() {
        println!("{label:>4} {:>8.4} {:>8.4}", fh[i], f[i]);
    }
    Ok(())
}
