//! Compares the probability of walking a path with that of walking it back.
//! Around a closed loop the log ratio is twice the summed log preferences,
//! so any nonzero value exposes an intransitive cycle.

use pcm_entropy::{induce, parse_pcm, path_log_ratio, Format};

fn main() -> pcm_entropy::Result<()> {
    let pcm = parse_pcm(include_str!("../data/tennis.csv"), Format::Csv)?;
    let model = induce(&pcm, 1.0)?;
    let idx = |l: &str| pcm.label_index(l).unwrap();

    for names in [
        vec!["A", "B", "S", "A"],
        vec!["A", "F", "N", "A"],
        vec!["D", "F", "N", "D"],
        vec!["A", "N", "D"],
        vec!["B", "S", "F", "D", "N", "A"],
    ] {
        let path: Vec<usize> = names.iter().map(|l| idx(l)).collect();
        let r = path_log_ratio(&model, &path)?;
        println!("{:<16} {r:+.6}", names.join("-"));
    }
    Ok(())
}
