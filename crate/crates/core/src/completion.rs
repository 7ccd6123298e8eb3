//! Ranking and filling incomplete comparison matrices.
//!
//! Two routes from an incomplete matrix to a preference scale:
//!
//! * [`harker_fill`] completes the matrix by averaging log path products over
//!   every simple path between the two alternatives, after which the ordinary
//!   eigenvector ranking applies.
//! * [`incomplete_preference_scale`] needs no filling. For a consistent
//!   incomplete matrix the Perron vector of `W` is `g_a = nu_a f_a`, where
//!   `nu` is the Perron vector of the adjacency matrix, so `f = g / nu`
//!   undoes the bias that the missing pattern puts on `g`.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pcm::{AdjacencyGraph, Pcm, Tolerance};
use crate::spectral::perron;

/// Per-pair cap on enumerated simple paths.
pub const PATH_BUDGET: usize = 100_000;

/// Simple paths from `source` to `target`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PathSet {
    pub source: usize,
    pub target: usize,
    pub paths: Vec<Vec<usize>>,
}

/// All simple paths between two alternatives, in lexicographic order.
pub fn enumerate_paths(graph: &AdjacencyGraph, source: usize, target: usize) -> Result<PathSet> {
    enumerate_paths_with_budget(graph, source, target, PATH_BUDGET)
}

pub fn enumerate_paths_with_budget(
    graph: &AdjacencyGraph,
    source: usize,
    target: usize,
    budget: usize,
) -> Result<PathSet> {
    let n = graph.n();
    for i in [source, target] {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, n });
        }
    }
    if source == target {
        return Err(Error::InvalidArgument("path endpoints must differ".into()));
    }
    let adjacency: Vec<Vec<usize>> = (0..n).map(|v| graph.neighbors(v).collect()).collect();
    let mut paths = Vec::new();
    let mut on_path = vec![false; n];
    let mut path = vec![source];
    on_path[source] = true;
    // Stack of next-neighbour cursors, one per vertex on the current path.
    let mut cursors = vec![0usize];

    while let Some(cursor) = cursors.last_mut() {
        let v = *path.last().expect("path and cursors move together");
        if *cursor >= adjacency[v].len() {
            cursors.pop();
            on_path[v] = false;
            path.pop();
            continue;
        }
        let u = adjacency[v][*cursor];
        *cursor += 1;
        if on_path[u] {
            continue;
        }
        if u == target {
            if paths.len() == budget {
                return Err(Error::PathBudgetExceeded {
                    source_vertex: source,
                    target,
                    budget,
                });
            }
            let mut p = path.clone();
            p.push(u);
            paths.push(p);
            continue;
        }
        on_path[u] = true;
        path.push(u);
        cursors.push(0);
    }
    Ok(PathSet {
        source,
        target,
        paths,
    })
}

/// Fills every missing comparison with the geometric mean of path products
/// over all simple paths of the original graph.
///
/// The missing pair `(a, b)` gets `exp((m_ab - m_ba) / 2)`, where `m_ab` is
/// the mean log product along the `a -> b` paths and `m_ba` along the same
/// paths walked backwards, and `(b, a)` gets its exact reciprocal. On an
/// exactly reciprocal input `m_ba = -m_ab`. On rounded tables this keeps the
/// result independent of which of the two directions is listed first.
/// Filled values never feed into other fills.
pub fn harker_fill(pcm: &Pcm) -> Result<Pcm> {
    pcm.ensure_connected()?;
    let n = pcm.n();
    let graph = pcm.adjacency();
    let logs = pcm.log_entries();
    let missing: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| ((a + 1)..n).map(move |b| (a, b)))
        .filter(|&(a, b)| pcm.is_missing(a, b))
        .collect();

    let fills: Vec<((usize, usize), f64)> = missing
        .par_iter()
        .map(|&(a, b)| {
            let set = enumerate_paths(&graph, a, b)?;
            let count = set.paths.len() as f64;
            let (mut fwd, mut rev) = (0.0, 0.0);
            for p in &set.paths {
                for w in p.windows(2) {
                    fwd += logs[(w[0], w[1])];
                    rev += logs[(w[1], w[0])];
                }
            }
            let value = (0.5 * (fwd - rev) / count).exp();
            Ok(((a, b), value))
        })
        .collect::<Result<_>>()?;

    let mut entries = pcm.entries().clone();
    for ((a, b), v) in fills {
        entries[(a, b)] = v;
        entries[(b, a)] = 1.0 / v;
    }
    Pcm::with_tolerance(entries, Some(pcm.labels().to_vec()), Tolerance::DEFAULT)
}

/// L1-normalised right Perron vector of `W`: the classical eigenvector
/// ranking.
pub fn eigenvector_scale(pcm: &Pcm) -> Result<DVector<f64>> {
    Ok(perron(pcm.entries())?.nu)
}

/// Preference scale of a possibly incomplete matrix: `g / nu`, L1-normalised.
pub fn incomplete_preference_scale(pcm: &Pcm) -> Result<DVector<f64>> {
    Ok(scale_breakdown(pcm)?.f)
}

/// The three vectors behind [`incomplete_preference_scale`], each
/// L1-normalised.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleBreakdown {
    /// Perron vector of the adjacency matrix.
    pub nu: DVector<f64>,
    /// Perron vector of the comparison matrix.
    pub g: DVector<f64>,
    /// Corrected preference scale.
    pub f: DVector<f64>,
}

pub fn scale_breakdown(pcm: &Pcm) -> Result<ScaleBreakdown> {
    pcm.ensure_connected()?;
    let nu = perron(&pcm.adjacency().to_matrix())?.nu;
    let g = perron(pcm.entries())?.nu;
    let f = g.component_div(&nu);
    let f = &f / f.sum();
    Ok(ScaleBreakdown { nu, g, f })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pcm::{parse_pcm, Format};
    use approx::assert_relative_eq;

    fn tennis() -> Pcm {
        parse_pcm(include_str!("../data/tennis.csv"), Format::Csv).unwrap()
    }

    /// Brute force: try every ordered selection of distinct intermediates.
    fn brute_force_paths(g: &AdjacencyGraph, s: usize, t: usize) -> Vec<Vec<usize>> {
        let others: Vec<usize> = (0..g.n()).filter(|&v| v != s && v != t).collect();
        let mut out = Vec::new();
        let k = others.len();
        for mask in 0u32..(1 << k) {
            let chosen: Vec<usize> = (0..k)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| others[i])
                .collect();
            permutations(&chosen, &mut |mid| {
                let mut p = vec![s];
                p.extend_from_slice(mid);
                p.push(t);
                if p.windows(2).all(|w| g.has_edge(w[0], w[1])) {
                    out.push(p);
                }
            });
        }
        out.sort();
        out
    }

    fn permutations(items: &[usize], f: &mut impl FnMut(&[usize])) {
        fn go(items: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
            if k == items.len() {
                f(items);
                return;
            }
            for i in k..items.len() {
                items.swap(k, i);
                go(items, k + 1, f);
                items.swap(k, i);
            }
        }
        go(&mut items.to_vec(), 0, f);
    }

    #[test]
    fn tennis_a_to_d_paths_match_brute_force() {
        let g = tennis().adjacency();
        let set = enumerate_paths(&g, 0, 2).unwrap();
        let expected = brute_force_paths(&g, 0, 2);
        assert_eq!(set.paths, expected);
        assert_eq!(set.paths.len(), 8);
        assert!(set.paths.contains(&vec![0, 3, 2]));
        assert!(set.paths.contains(&vec![0, 5, 3, 4, 2]));
    }

    #[test]
    fn all_tennis_pairs_match_brute_force() {
        let g = tennis().adjacency();
        for s in 0..6 {
            for t in 0..6 {
                if s != t {
                    assert_eq!(
                        enumerate_paths(&g, s, t).unwrap().paths,
                        brute_force_paths(&g, s, t)
                    );
                }
            }
        }
    }

    #[test]
    fn small_graph_paths() {
        let path_graph = AdjacencyGraph::from_edges(3, &[(0, 1), (1, 2)]);
        assert_eq!(
            enumerate_paths(&path_graph, 0, 2).unwrap().paths,
            vec![vec![0, 1, 2]]
        );
        let k3 = AdjacencyGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(
            enumerate_paths(&k3, 0, 2).unwrap().paths,
            vec![vec![0, 1, 2], vec![0, 2]]
        );
    }

    #[test]
    fn path_budget_and_bad_endpoints() {
        let k6 = AdjacencyGraph::from_edges(
            6,
            &(0..6)
                .flat_map(|a| ((a + 1)..6).map(move |b| (a, b)))
                .collect::<Vec<_>>(),
        );
        assert!(matches!(
            enumerate_paths_with_budget(&k6, 0, 5, 10),
            Err(Error::PathBudgetExceeded { budget: 10, .. })
        ));
        assert_eq!(enumerate_paths(&k6, 0, 5).unwrap().paths.len(), 65);
        assert!(enumerate_paths(&k6, 1, 1).is_err());
    }

    #[test]
    fn single_path_fill() {
        let mut m = nalgebra::DMatrix::identity(3, 3);
        m[(0, 1)] = 2.0;
        m[(1, 0)] = 0.5;
        m[(1, 2)] = 3.0;
        m[(2, 1)] = 1.0 / 3.0;
        let filled = harker_fill(&Pcm::new(m, None).unwrap()).unwrap();
        assert_relative_eq!(filled.get(0, 2), 6.0, epsilon = 1e-12);
        assert_relative_eq!(filled.get(2, 0), 1.0 / 6.0, epsilon = 1e-12);
    }

    #[test]
    fn complete_input_unchanged() {
        let p = Pcm::from_rows(&[&[1.0, 2.0, 8.0], &[0.5, 1.0, 2.0], &[0.125, 0.5, 1.0]]).unwrap();
        assert_eq!(harker_fill(&p).unwrap(), p);
    }

    #[test]
    fn tennis_fill_is_reciprocal_and_complete() {
        let filled = harker_fill(&tennis()).unwrap();
        assert!(filled.is_complete());
        assert_relative_eq!(filled.get(0, 2), 0.83, epsilon = 0.01);
        assert_relative_eq!(filled.get(1, 4), 0.50, epsilon = 0.01);
        assert_relative_eq!(filled.get(4, 5), 1.42, epsilon = 0.01);
        let t = tennis();
        for a in 0..6 {
            for b in 0..6 {
                if t.is_missing(a, b) {
                    assert!((filled.get(a, b) * filled.get(b, a) - 1.0).abs() < 1e-12);
                } else {
                    assert_eq!(filled.get(a, b), t.get(a, b));
                }
            }
        }
    }

    #[test]
    fn tennis_scale_breakdown() {
        let s = scale_breakdown(&tennis()).unwrap();
        let f = [0.150, 0.117, 0.164, 0.166, 0.231, 0.172];
        let g = [0.188, 0.083, 0.116, 0.208, 0.233, 0.173];
        for i in 0..6 {
            assert!((s.f[i] - f[i]).abs() < 0.002);
            assert!((s.g[i] - g[i]).abs() < 0.002);
        }
    }

    #[test]
    fn complete_consistent_scale_is_exact() {
        let s = incomplete_preference_scale(&Pcm::consistent(&[1.0, 2.0, 4.0]).unwrap()).unwrap();
        for (v, e) in s.iter().zip([1.0 / 7.0, 2.0 / 7.0, 4.0 / 7.0]) {
            assert_relative_eq!(*v, e, epsilon = 1e-9);
        }
    }

    #[test]
    fn incomplete_consistent_chain_scale() {
        let chain = Pcm::consistent_on(&[1.0, 2.0, 4.0, 8.0], |a, b| b == a + 1).unwrap();
        // g_a = nu_a f_a with nu from the path graph; dividing out nu leaves f.
        let s = incomplete_preference_scale(&chain).unwrap();
        for (i, v) in s.iter().enumerate() {
            assert_relative_eq!(*v, [1.0, 2.0, 4.0, 8.0][i] / 15.0, epsilon = 1e-9);
        }
        let filled = harker_fill(&chain).unwrap();
        let h = eigenvector_scale(&filled).unwrap();
        assert!((h - s).amax() < 1e-9);
    }
}
