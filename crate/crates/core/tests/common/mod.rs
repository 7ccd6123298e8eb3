#![allow(dead_code)]

use pcm_entropy::{parse_pcm, Format, Pcm};

pub const TENNIS_CSV: &str = include_str!("../../data/tennis.csv");

/// Labels in file order.
pub const PLAYERS: [&str; 6] = ["A", "B", "D", "F", "N", "S"];

/// Completed tennis matrix, rounded to two decimals.
pub const FILLED: [[f64; 6]; 6] = [
    [1.0, 1.39, 0.83, 0.76, 0.9, 0.73],
    [0.72, 1.0, 0.74, 0.87, 0.50, 0.77],
    [1.21, 1.36, 1.0, 0.95, 0.77, 0.95],
    [1.32, 1.15, 1.05, 1.0, 0.52, 1.05],
    [1.11, 2.02, 1.29, 1.91, 1.0, 1.42],
    [1.36, 1.3, 1.05, 0.95, 0.71, 1.0],
];

/// Scales of the tennis matrix: eigenvector of the completed matrix, graph
/// Perron vector, raw Perron vector, corrected scale.
pub const F_FILLED: [f64; 6] = [0.150, 0.122, 0.166, 0.161, 0.232, 0.170];
pub const NU: [f64; 6] = [0.211, 0.120, 0.120, 0.211, 0.170, 0.170];
pub const G: [f64; 6] = [0.188, 0.083, 0.116, 0.208, 0.233, 0.173];
pub const F: [f64; 6] = [0.150, 0.117, 0.164, 0.166, 0.231, 0.172];

pub fn tennis() -> Pcm {
    parse_pcm(TENNIS_CSV, Format::Csv).unwrap()
}

pub fn max_gap(x: impl IntoIterator<Item = f64>, y: impl IntoIterator<Item = f64>) -> f64 {
    x.into_iter()
        .zip(y)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}
