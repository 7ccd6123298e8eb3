//! The maximum path entropy random walk induced by a comparison matrix.
//!
//! For a parameter `gamma` the walk moves from `a` to `b` with probability
//!
//! ```text
//! k_ab = nu_b / (eta nu_a) * W_ab^gamma
//! ```
//!
//! where `eta`, `nu` and `mu` are the Perron root and right/left vectors of
//! the element-wise power `W^gamma`. The stationary law is `p_a = nu_a mu_a`.
//! The step observable is the log-preference `j_ab`, and the entropy
//! production rate of the walk,
//!
//! ```text
//! sdot = sum_ab p_a k_ab log(k_ab / k_ba) = 2 gamma <j>
//! ```
//!
//! vanishes exactly when the matrix is consistent.
//!
//! `j_ab` is the antisymmetric part `(log W_ab - log W_ba) / 2`, which equals
//! `log W_ab` on exactly reciprocal matrices. Rounded tables are only
//! approximately reciprocal and the identity `sdot = 2 gamma <j>` holds
//! exactly only for the antisymmetric flux.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pcm::Pcm;
use crate::spectral::{elementwise_pow, perron};

/// Agreement required between the two routes to the entropy production.
pub const IDENTITY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct MerwModel {
    pub gamma: f64,
    /// Transition probabilities; row-stochastic.
    pub k: DMatrix<f64>,
    /// Stationary distribution.
    pub p: DVector<f64>,
    pub eta: f64,
    pub nu: DVector<f64>,
    pub mu: DVector<f64>,
    /// Stationary mean of `j_ab` per step.
    pub flux: f64,
    /// Entropy production rate, nats per step.
    pub sdot: f64,
    j: DMatrix<f64>,
}

/// Directed share of the entropy production carried by one edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgeContribution {
    pub a: usize,
    pub b: usize,
    /// `p_a k_ab log(k_ab / k_ba)`.
    pub sigma: f64,
    /// `j_ab`.
    pub jflux: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecomposeBy {
    Comparison,
    Alternative,
}

/// One term of a decomposition. `b` is `None` for per-alternative terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Contribution {
    pub a: usize,
    pub b: Option<usize>,
    pub value: f64,
}

/// A sample of the flux curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FluxPoint {
    pub gamma: f64,
    pub flux: f64,
    pub sdot: f64,
    pub eta: f64,
}

/// Antisymmetric log-preference matrix; zero on the diagonal and on missing
/// pairs.
pub fn log_preference(pcm: &Pcm) -> DMatrix<f64> {
    let l = pcm.log_entries();
    let n = pcm.n();
    DMatrix::from_fn(n, n, |a, b| {
        if a == b || pcm.is_missing(a, b) {
            0.0
        } else {
            0.5 * (l[(a, b)] - l[(b, a)])
        }
    })
}

/// Builds the walk induced by `pcm` at parameter `gamma`.
pub fn induce(pcm: &Pcm, gamma: f64) -> Result<MerwModel> {
    if !gamma.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "gamma must be finite, got {gamma}"
        )));
    }
    pcm.ensure_connected()?;
    let n = pcm.n();
    let powered = elementwise_pow(pcm, gamma);
    let sp = perron(&powered)?;

    let k = DMatrix::from_fn(n, n, |a, b| {
        sp.nu[b] * powered[(a, b)] / (sp.eta * sp.nu[a])
    });
    let p = sp.nu.component_mul(&sp.mu);
    let j = log_preference(pcm);

    let mut flux = 0.0;
    for a in 0..n {
        for b in 0..n {
            flux += p[a] * k[(a, b)] * j[(a, b)];
        }
    }
    // Negative values can only be rounding noise.
    let sdot = (2.0 * gamma * flux).max(0.0);

    Ok(MerwModel {
        gamma,
        k,
        p,
        eta: sp.eta,
        nu: sp.nu,
        mu: sp.mu,
        flux,
        sdot,
        j,
    })
}

/// Entropy production rate of the induced walk. The value is computed from
/// the transition probabilities and checked against `2 gamma <j>`.
pub fn entropy_production(pcm: &Pcm, gamma: f64) -> Result<f64> {
    let model = induce(pcm, gamma)?;
    let direct = model.entropy_production_direct();
    if (direct - model.sdot).abs() > IDENTITY_TOLERANCE * model.sdot.max(1.0) {
        return Err(Error::NumericalMismatch {
            what: "entropy production vs 2*gamma*flux",
            lhs: direct,
            rhs: model.sdot,
        });
    }
    Ok(model.sdot)
}

/// Splits the entropy production over comparisons or over alternatives.
/// Both splits are nonnegative and vanish term by term on consistent
/// matrices. See [`MerwModel::per_comparison`].
pub fn decompose(model: &MerwModel, by: DecomposeBy) -> Vec<Contribution> {
    match by {
        DecomposeBy::Comparison => model
            .per_comparison()
            .into_iter()
            .map(|(a, b, value)| Contribution {
                a,
                b: Some(b),
                value,
            })
            .collect(),
        DecomposeBy::Alternative => model
            .per_alternative()
            .into_iter()
            .enumerate()
            .map(|(a, value)| Contribution { a, b: None, value })
            .collect(),
    }
}

/// `log p(path | start) - log p(reversed | end)`, from transition
/// probabilities.
pub fn path_log_ratio(model: &MerwModel, path: &[usize]) -> Result<f64> {
    let n = model.n();
    if let Some(&bad) = path.iter().find(|&&v| v >= n) {
        return Err(Error::IndexOutOfRange { index: bad, n });
    }
    let mut total = 0.0;
    for w in path.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (fwd, rev) = (model.k[(a, b)], model.k[(b, a)]);
        if fwd <= 0.0 || rev <= 0.0 {
            return Err(Error::MissingEdge { a, b });
        }
        total += fwd.ln() - rev.ln();
    }
    Ok(total)
}

/// Flux, entropy production and Perron root over a grid of `gamma`.
pub fn flux_curve(pcm: &Pcm, gammas: &[f64]) -> Result<Vec<FluxPoint>> {
    gammas
        .iter()
        .map(|&gamma| {
            let m = induce(pcm, gamma)?;
            Ok(FluxPoint {
                gamma,
                flux: m.flux,
                sdot: m.sdot,
                eta: m.eta,
            })
        })
        .collect()
}

impl MerwModel {
    pub fn n(&self) -> usize {
        self.k.nrows()
    }

    /// The antisymmetric log-preference matrix the flux is measured with.
    pub fn j(&self) -> &DMatrix<f64> {
        &self.j
    }

    /// `sum p_a k_ab log(k_ab / k_ba)` over directed off-diagonal edges.
    pub fn entropy_production_direct(&self) -> f64 {
        self.edge_contributions().iter().map(|e| e.sigma).sum()
    }

    /// Directed contributions for every off-diagonal edge. Self-loops carry
    /// nothing and are left out.
    pub fn edge_contributions(&self) -> Vec<EdgeContribution> {
        let n = self.n();
        let mut out = Vec::new();
        for a in 0..n {
            for b in 0..n {
                let kab = self.k[(a, b)];
                if a == b || kab <= 0.0 {
                    continue;
                }
                let sigma = self.p[a] * kab * (kab.ln() - self.k[(b, a)].ln());
                out.push(EdgeContribution {
                    a,
                    b,
                    sigma,
                    jflux: self.j[(a, b)],
                });
            }
        }
        out
    }

    /// `(a, b, value)` for each comparison with `a < b`, where
    ///
    /// ```text
    /// value = (p_a k_ab - p_b k_ba) log(p_a k_ab / (p_b k_ba))
    /// ```
    ///
    /// Every term is nonnegative, vanishes under detailed balance, and the
    /// terms sum to `sdot`.
    pub fn per_comparison(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n();
        let mut out = Vec::new();
        for a in 0..n {
            for b in (a + 1)..n {
                let fwd = self.p[a] * self.k[(a, b)];
                let rev = self.p[b] * self.k[(b, a)];
                if fwd <= 0.0 || rev <= 0.0 {
                    continue;
                }
                out.push((a, b, (fwd - rev) * (fwd.ln() - rev.ln())));
            }
        }
        out
    }

    /// Each alternative receives half of every comparison it takes part in.
    pub fn per_alternative(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        for (a, b, v) in self.per_comparison() {
            out[a] += 0.5 * v;
            out[b] += 0.5 * v;
        }
        out
    }

    /// Largest `|p_a k_ab - p_b k_ba|` over all pairs.
    pub fn detailed_balance_residual(&self) -> f64 {
        let n = self.n();
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in (a + 1)..n {
                let r = (self.p[a] * self.k[(a, b)] - self.p[b] * self.k[(b, a)]).abs();
                worst = worst.max(r);
            }
        }
        worst
    }

    /// `max |p^T k - p^T|`.
    pub fn stationarity_residual(&self) -> f64 {
        (self.k.tr_mul(&self.p) - &self.p).amax()
    }

    /// `max |sum_b k_ab - 1|`.
    pub fn row_sum_residual(&self) -> f64 {
        self.k
            .row_iter()
            .map(|r| (r.sum() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pcm::{parse_pcm, Format};
    use approx::assert_relative_eq;

    fn tennis() -> Pcm {
        parse_pcm(include_str!("../data/tennis.csv"), Format::Csv).unwrap()
    }

    fn worked3() -> Pcm {
        Pcm::from_rows(&[&[1.0, 2.0, 8.0], &[0.5, 1.0, 2.0], &[0.125, 0.5, 1.0]]).unwrap()
    }

    fn chain() -> Pcm {
        Pcm::consistent_on(&[1.0, 2.0, 4.0, 8.0], |a, b| b == a + 1).unwrap()
    }

    #[test]
    fn consistent_complete_walk_is_adjacency_walk() {
        let m = induce(&Pcm::consistent(&[2.0, 1.0, 1.0]).unwrap(), 1.0).unwrap();
        // A is all-ones, so nu(A) is uniform and k_ab = 1/3.
        for v in m.k.iter() {
            assert_relative_eq!(*v, 1.0 / 3.0, epsilon = 1e-12);
        }
        for v in m.p.iter() {
            assert_relative_eq!(*v, 1.0 / 3.0, epsilon = 1e-12);
        }
        assert!(m.sdot < 1e-12);
        assert!(m.detailed_balance_residual() < 1e-12);
    }

    #[test]
    fn gamma_zero_is_reversible() {
        let m = induce(&tennis(), 0.0).unwrap();
        assert_eq!(m.sdot, 0.0);
        let a = tennis().adjacency().to_matrix();
        for r in 0..6 {
            for c in 0..6 {
                let expected = m.nu[c] / (m.eta * m.nu[r]) * a[(r, c)];
                assert_relative_eq!(m.k[(r, c)], expected, epsilon = 1e-15);
            }
        }
        assert!(m.detailed_balance_residual() < 1e-12);
    }

    #[test]
    fn walk_invariants_on_tennis() {
        let pcm = tennis();
        let m = induce(&pcm, 1.0).unwrap();
        assert!(m.row_sum_residual() < 1e-12);
        assert!(m.stationarity_residual() < 1e-10);
        assert_relative_eq!(m.p.sum(), 1.0, epsilon = 1e-12);
        for a in 0..6 {
            for b in 0..6 {
                assert_eq!(m.k[(a, b)] > 0.0, pcm.get(a, b) > 0.0);
            }
        }
        for e in m.edge_contributions() {
            assert_eq!(e.jflux, -m.j()[(e.b, e.a)]);
        }
    }

    #[test]
    fn tennis_entropy_production_golden() {
        // Direct sum from an independent dense eigensolver.
        let s = entropy_production(&tennis(), 1.0).unwrap();
        assert_relative_eq!(s, 0.059_600_315_159_101_59, max_relative = 1e-9);
        let s2 = entropy_production(&tennis(), 2.0).unwrap();
        assert_relative_eq!(s2, 0.244_869_724_920_375_43, max_relative = 1e-9);
    }

    #[test]
    fn incomplete_consistent_chain_has_zero_production() {
        let s = entropy_production(&chain(), 1.0).unwrap();
        assert!(s < 1e-10);
    }

    #[test]
    fn worked_matrix_is_even_in_gamma() {
        let plus = entropy_production(&worked3(), 1.0).unwrap();
        let minus = entropy_production(&worked3(), -1.0).unwrap();
        assert_relative_eq!(plus, 0.070_552_169_751_619_85, max_relative = 1e-9);
        assert!((plus - minus).abs() < 1e-10);
    }

    #[test]
    fn decompositions_sum_to_total() {
        let m = induce(&tennis(), 1.0).unwrap();
        let by_pair = decompose(&m, DecomposeBy::Comparison);
        assert_eq!(by_pair.len(), 9);
        let total: f64 = by_pair.iter().map(|c| c.value).sum();
        assert!((total - m.sdot).abs() < 1e-10);
        assert!(by_pair.iter().all(|c| c.value >= 0.0));
        let by_alt = decompose(&m, DecomposeBy::Alternative);
        assert_eq!(by_alt.len(), 6);
        let total: f64 = by_alt.iter().map(|c| c.value).sum();
        assert!((total - m.sdot).abs() < 1e-10);
    }

    #[test]
    fn consistent_decomposition_vanishes() {
        let m = induce(&chain(), 1.0).unwrap();
        for c in decompose(&m, DecomposeBy::Comparison)
            .into_iter()
            .chain(decompose(&m, DecomposeBy::Alternative))
        {
            assert!(c.value.abs() < 1e-10);
        }
    }

    #[test]
    fn single_cycle_edges_share_the_current() {
        // K3 has one independent cycle, so every edge carries the same net
        // current and the perturbed pair is not singled out.
        let pcm = Pcm::consistent(&[2.0, 1.0, 1.0])
            .unwrap()
            .with_entry(0, 2, 6.0)
            .unwrap();
        let m = induce(&pcm, 1.0).unwrap();
        let current = |a: usize, b: usize| m.p[a] * m.k[(a, b)] - m.p[b] * m.k[(b, a)];
        let j01 = current(0, 1);
        assert!((current(1, 2) - j01).abs() < 1e-14);
        assert!((current(2, 0) - j01).abs() < 1e-14);
    }

    #[test]
    fn perturbed_comparison_ranks_first() {
        let base = Pcm::consistent(&[0.9, 0.3, 0.55, 0.12, 0.7]).unwrap();
        for (a, b) in [(0, 2), (1, 4), (3, 0)] {
            let pcm = base.with_entry(a, b, base.get(a, b) * 2.5).unwrap();
            let m = induce(&pcm, 1.0).unwrap();
            let pairs = m.per_comparison();
            let top = pairs.iter().max_by(|x, y| x.2.total_cmp(&y.2)).unwrap();
            assert_eq!((top.0, top.1), (a.min(b), a.max(b)));
        }
    }

    #[test]
    fn path_ratio_errors_and_trivial_paths() {
        let m = induce(&tennis(), 1.0).unwrap();
        assert_eq!(path_log_ratio(&m, &[3]).unwrap(), 0.0);
        assert!(path_log_ratio(&m, &[0, 1, 0]).unwrap().abs() < 1e-15);
        assert!(matches!(
            path_log_ratio(&m, &[0, 2]),
            Err(Error::MissingEdge { a: 0, b: 2 })
        ));
        assert!(path_log_ratio(&m, &[0, 9]).is_err());
    }

    #[test]
    fn path_ratio_matches_potential_form() {
        let m = induce(&tennis(), 1.3).unwrap();
        let path = [0, 3, 4, 2, 3, 5, 1];
        let direct = path_log_ratio(&m, &path).unwrap();
        let flux_sum: f64 = path.windows(2).map(|w| m.j()[(w[0], w[1])]).sum();
        let expected = 2.0 * m.gamma * flux_sum + 2.0 * (m.nu[1] / m.nu[0]).ln();
        assert!((direct - expected).abs() < 1e-10);
    }

    #[test]
    fn loops_exchange_no_heat_when_consistent() {
        let m = induce(&Pcm::consistent(&[0.3, 0.8, 0.1, 0.5]).unwrap(), 1.7).unwrap();
        for path in [vec![0, 1, 2, 0], vec![3, 1, 0, 2, 1, 3]] {
            assert!(path_log_ratio(&m, &path).unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn flux_curve_parity() {
        let gammas = [-2.0, -0.5, 0.5, 2.0];
        let c = flux_curve(&worked3(), &gammas).unwrap();
        assert!((c[0].eta - c[3].eta).abs() < 1e-10);
        assert!((c[1].eta - c[2].eta).abs() < 1e-10);
        assert!((c[0].flux + c[3].flux).abs() < 1e-10);
        assert!((c[1].flux + c[2].flux).abs() < 1e-10);
    }

    #[test]
    fn flux_is_log_eta_derivative() {
        let h = 1e-5;
        for g in [0.5, 1.0, 2.0] {
            let c = flux_curve(&worked3(), &[g - h, g, g + h]).unwrap();
            let fd = (c[2].eta.ln() - c[0].eta.ln()) / (2.0 * h);
            assert!(
                (fd - c[1].flux).abs() <= 1e-6 * c[1].flux.abs(),
                "{fd} {}",
                c[1].flux
            );
        }
    }

    #[test]
    fn flux_non_decreasing() {
        let gammas: Vec<f64> = (0..=30).map(|i| i as f64 * 0.1).collect();
        let c = flux_curve(&tennis(), &gammas).unwrap();
        for w in c.windows(2) {
            assert!(w[1].flux >= w[0].flux - 1e-12);
        }
    }

    #[test]
    fn disconnected_and_bad_gamma() {
        let p = Pcm::from_rows(&[&[1.0, 0.0], &[0.0, 1.0]]).unwrap();
        assert!(matches!(induce(&p, 1.0), Err(Error::Disconnected { .. })));
        assert!(induce(&worked3(), f64::NAN).is_err());
    }
}
