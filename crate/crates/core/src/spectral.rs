//! Perron eigenpairs of irreducible nonnegative matrices.
//!
//! The solver is Noda's shifted inverse iteration. Each step shifts by the
//! Collatz–Wielandt upper bound `max_i (Mx)_i / x_i`, which never falls below
//! the Perron root, so `(shift*I - M)^-1` stays nonnegative and the iterate
//! stays positive. The lower and upper bounds pinch the root from both sides
//! and convergence is quadratic. Plain power iteration stalls on strongly
//! inconsistent matrices: their subdominant eigenvalues come in complex pairs
//! whose modulus approaches the Perron root.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::pcm::{AdjacencyGraph, Pcm};

/// Iteration cap for a single eigenvector solve.
pub const MAX_ITERATIONS: usize = 100_000;
/// Required `max |M v - eta v| / eta` on the normalised right vector.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

const PINCH_TOLERANCE: f64 = 1e-14;
const STALL_LIMIT: usize = 4;

/// Perron root with right (`nu`) and left (`mu`) eigenvectors.
///
/// `nu` sums to one and `mu` is scaled so that `mu . nu = 1`, which makes
/// `nu[a] * mu[a]` a probability distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralPair {
    pub eta: f64,
    pub nu: DVector<f64>,
    pub mu: DVector<f64>,
}

impl SpectralPair {
    /// `max |M nu - eta nu|_inf / eta`.
    pub fn right_residual(&self, m: &DMatrix<f64>) -> f64 {
        (m * &self.nu - &self.nu * self.eta).amax() / self.eta
    }

    /// Same for the left vector, measured after scaling `mu` to unit L1 norm.
    pub fn left_residual(&self, m: &DMatrix<f64>) -> f64 {
        let mu = &self.mu / self.mu.sum();
        (m.tr_mul(&mu) - &mu * self.eta).amax() / self.eta
    }
}

/// Perron eigenpair of a nonnegative matrix whose positive pattern is
/// strongly connected.
pub fn perron(m: &DMatrix<f64>) -> Result<SpectralPair> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::NotSquare {
            row: 0,
            len: m.ncols(),
            expected: n,
        });
    }
    if n == 0 {
        return Err(Error::TooSmall(0));
    }
    for a in 0..n {
        for b in 0..n {
            let v = m[(a, b)];
            if !v.is_finite() || v < 0.0 {
                return Err(Error::NotNonnegative { row: a, col: b });
            }
        }
    }
    if !strongly_connected(m) {
        return Err(Error::Disconnected {
            components: AdjacencyGraph::from_pattern(m).components(),
        });
    }

    let nu = dominant_vector(m)?;
    let mt = m.transpose();
    let mu = dominant_vector(&mt)?;

    let eta = mu.dot(&(m * &nu)) / mu.dot(&nu);
    let nu = &nu / nu.sum();
    let mu = &mu / mu.dot(&nu);
    let pair = SpectralPair { eta, nu, mu };

    let residual = pair.right_residual(m).max(pair.left_residual(m));
    if residual.is_nan() || residual > RESIDUAL_TOLERANCE {
        return Err(Error::NoConvergence {
            iterations: MAX_ITERATIONS,
            residual,
        });
    }
    Ok(pair)
}

/// Positive right Perron vector with unit L1 norm.
fn dominant_vector(m: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = m.nrows();
    let mut x = DVector::from_element(n, 1.0 / n as f64);
    let mut best_gap = f64::INFINITY;
    let mut stalled = 0;
    let mut last_gap = f64::INFINITY;

    for _ in 0..MAX_ITERATIONS {
        let y = m * &x;
        let (lo, hi) = collatz_bounds(&x, &y);
        let gap = (hi - lo) / hi;
        last_gap = gap;
        if gap <= PINCH_TOLERANCE {
            return Ok(x);
        }
        if gap < 0.5 * best_gap {
            best_gap = gap;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= STALL_LIMIT && gap <= RESIDUAL_TOLERANCE {
                // Rounding floor reached.
                return Ok(x);
            }
        }

        let shifted = DMatrix::identity(n, n) * hi - m;
        x = match shifted.lu().solve(&x) {
            Some(z) if z.iter().all(|v| v.is_finite() && *v > 0.0) => {
                let s = z.sum();
                z / s
            }
            // Singular shift or rounding noise: fall back to a power step.
            _ => {
                let s = y.sum();
                y / s
            }
        };
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITERATIONS,
        residual: last_gap,
    })
}

fn collatz_bounds(x: &DVector<f64>, y: &DVector<f64>) -> (f64, f64) {
    x.iter()
        .zip(y.iter())
        .map(|(xi, yi)| yi / xi)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
            (lo.min(r), hi.max(r))
        })
}

fn strongly_connected(m: &DMatrix<f64>) -> bool {
    let n = m.nrows();
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut stack = vec![0];
        while let Some(v) = stack.pop() {
            for u in 0..n {
                let w = if forward { m[(v, u)] } else { m[(u, v)] };
                if !seen[u] && w > 0.0 {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(true) && reach(false)
}

/// `W^gamma` taken entry by entry. Missing comparisons stay exactly zero for
/// every `gamma`, including `gamma <= 0`.
pub fn elementwise_pow(pcm: &Pcm, gamma: f64) -> DMatrix<f64> {
    pcm.entries()
        .map(|w| if w > 0.0 { w.powf(gamma) } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pcm::{parse_pcm, Format};
    use approx::assert_relative_eq;

    fn worked3() -> Pcm {
        Pcm::from_rows(&[&[1.0, 2.0, 8.0], &[0.5, 1.0, 2.0], &[0.125, 0.5, 1.0]]).unwrap()
    }

    #[test]
    fn all_ones_matrix() {
        for n in 2..7 {
            let sp = perron(&DMatrix::from_element(n, n, 1.0)).unwrap();
            assert_relative_eq!(sp.eta, n as f64, epsilon = 1e-12);
            for v in sp.nu.iter() {
                assert_relative_eq!(*v, 1.0 / n as f64, epsilon = 1e-14);
            }
            assert_relative_eq!(sp.mu.dot(&sp.nu), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn worked_three_by_three_matches_closed_form() {
        // Reciprocal 3x3: eta = 1 + c^(1/3) + c^(-1/3), c = W12 W23 W31.
        let c: f64 = 2.0 * 2.0 * 0.125;
        let expected = 1.0 + c.cbrt() + 1.0 / c.cbrt();
        let sp = perron(worked3().entries()).unwrap();
        assert_relative_eq!(sp.eta, expected, epsilon = 1e-12);
        assert_relative_eq!(sp.eta, 3.0536, epsilon = 1e-4);
    }

    #[test]
    fn tennis_adjacency_vector() {
        let p = parse_pcm(include_str!("../data/tennis.csv"), Format::Csv).unwrap();
        let sp = perron(&p.adjacency().to_matrix()).unwrap();
        let expected = [0.211, 0.120, 0.120, 0.211, 0.170, 0.170];
        for (v, e) in sp.nu.iter().zip(expected) {
            assert!((v - e).abs() < 0.0015, "{v} vs {e}");
        }
    }

    #[test]
    fn rejects_reducible_and_negative() {
        let m = DMatrix::identity(3, 3);
        assert!(matches!(perron(&m), Err(Error::Disconnected { .. })));
        let mut m = DMatrix::from_element(2, 2, 1.0);
        m[(0, 1)] = -1.0;
        assert!(matches!(perron(&m), Err(Error::NotNonnegative { .. })));
    }

    #[test]
    fn extreme_cycle_converges() {
        // Subdominant pair has modulus within 3% of the Perron root.
        let t = (12.0f64 / 3.0).exp();
        let m = DMatrix::from_row_slice(3, 3, &[1.0, t, 1.0 / t, 1.0 / t, 1.0, t, t, 1.0 / t, 1.0]);
        let sp = perron(&m).unwrap();
        let c = t.powi(3);
        assert_relative_eq!(
            sp.eta,
            1.0 + c.cbrt() + 1.0 / c.cbrt(),
            max_relative = 1e-13
        );
        let m = m.map(|x| x.powf(3.0));
        let sp = perron(&m).unwrap();
        assert!(sp.right_residual(&m) < 1e-13);
    }

    #[test]
    fn elementwise_pow_cases() {
        let p = parse_pcm(include_str!("../data/tennis.csv"), Format::Csv).unwrap();
        assert_eq!(elementwise_pow(&p, 1.0), *p.entries());
        assert_eq!(elementwise_pow(&p, 0.0), p.adjacency().to_matrix());
        assert_eq!(elementwise_pow(&p, -2.5)[(0, 2)], 0.0);

        let w = worked3();
        let inv = elementwise_pow(&w, -1.0);
        assert!((inv - w.entries().transpose()).amax() < 1e-15);
    }
}
