//! Random matrix ensembles and the numerical experiments run on them.
//!
//! Random streams come from ChaCha8 (`rand_chacha`), seeded with
//! `seed_from_u64(seed)`. Matrix `i` of an ensemble draws from stream `i`, so
//! results do not depend on thread scheduling. Normal variates use
//! `rand_distr::StandardNormal`. Within one matrix the draw order is: `alpha`,
//! then the scale `f_0..f_{n-1}`, then `rho_ab` for `a = 1..n`, `b = 0..a`.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indices::{hci, saaty_ci};
use crate::merw::induce;
use crate::pcm::{AdjacencyGraph, Pcm, Tolerance};
use crate::spectral::elementwise_pow;

/// Scale entries below this are redrawn so ratios stay finite.
const MIN_SCALE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GeneratorSpec {
    pub n: usize,
    /// Inclusive range that each matrix's `alpha` is drawn from uniformly.
    pub alpha_range: (f64, f64),
    pub seed: u64,
    pub count: usize,
}

impl GeneratorSpec {
    pub fn new(n: usize, alpha_range: (f64, f64), seed: u64, count: usize) -> Self {
        Self {
            n,
            alpha_range,
            seed,
            count,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.alpha_range;
        if self.n < 2 {
            return Err(Error::TooSmall(self.n));
        }
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo <= hi) {
            return Err(Error::InvalidArgument(format!(
                "alpha range must satisfy 0 <= lo <= hi, got [{lo}, {hi}]"
            )));
        }
        if self.count == 0 {
            return Err(Error::InvalidArgument("count must be at least 1".into()));
        }
        Ok(())
    }
}

/// One generated matrix and the inconsistency strength it was drawn with.
#[derive(Debug, Clone)]
pub struct Sample {
    pub alpha: f64,
    pub pcm: Pcm,
}

pub(crate) fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn draw_scale(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| loop {
            let x: f64 = rng.random();
            if x >= MIN_SCALE {
                break x;
            }
        })
        .collect()
}

/// `W_ab = (f_a / f_b) exp(rho_ab alpha)` below the diagonal, exact
/// reciprocals above it.
fn draw_matrix(rng: &mut ChaCha8Rng, n: usize, alpha: f64) -> Pcm {
    let f = draw_scale(rng, n);
    let mut m = DMatrix::identity(n, n);
    for a in 1..n {
        for b in 0..a {
            let rho: f64 = rng.sample(StandardNormal);
            m[(a, b)] = f[a] / f[b] * (rho * alpha).exp();
            m[(b, a)] = 1.0 / m[(a, b)];
        }
    }
    Pcm::with_tolerance(m, None, Tolerance::STRICT).expect("generated matrices are reciprocal")
}

pub fn generate_ensemble(spec: &GeneratorSpec) -> Result<Vec<Sample>> {
    spec.validate()?;
    let (lo, hi) = spec.alpha_range;
    Ok((0..spec.count)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(spec.seed, i as u64);
            let u: f64 = rng.random();
            let alpha = lo + (hi - lo) * u;
            Sample {
                alpha,
                pcm: draw_matrix(&mut rng, spec.n, alpha),
            }
        })
        .collect())
}

/// Complete random matrices of varying inconsistency.
pub fn generate_random_pcm(spec: &GeneratorSpec) -> Result<Vec<Pcm>> {
    Ok(generate_ensemble(spec)?
        .into_iter()
        .map(|s| s.pcm)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub alpha: f64,
    pub sdot: f64,
    pub ci: f64,
    pub hci: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub spec: GeneratorSpec,
    pub gamma: f64,
    pub rows: Vec<StudyRow>,
    /// Squared Pearson correlation of `sdot` with CI.
    pub r2_ci: f64,
    /// Squared Pearson correlation of `sdot` with HCI.
    pub r2_hci: f64,
    /// Squared Spearman rank correlations, for comparison.
    pub rank_r2_ci: f64,
    pub rank_r2_hci: f64,
}

impl StudyResult {
    /// `alpha,sdot,ci,hci` with a header line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("alpha,sdot,ci,hci\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{}", r.alpha, r.sdot, r.ci, r.hci);
        }
        s
    }

    /// Summary without the per-matrix rows.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "n": self.spec.n,
            "count": self.spec.count,
            "seed": self.spec.seed,
            "alphaRange": [self.spec.alpha_range.0, self.spec.alpha_range.1],
            "gamma": self.gamma,
            "r2Ci": self.r2_ci,
            "r2Hci": self.r2_hci,
            "rankR2Ci": self.rank_r2_ci,
            "rankR2Hci": self.rank_r2_hci,
        })
    }

    /// Rows as a Vega-Lite `data.values` array.
    pub fn scatter_values(&self) -> serde_json::Value {
        serde_json::to_value(&self.rows).expect("rows serialize")
    }

    /// Mean `sdot` in `bins` equal-count bins of increasing `alpha`.
    pub fn binned_mean_sdot(&self, bins: usize) -> Vec<f64> {
        let mut rows = self.rows.clone();
        rows.sort_by(|x, y| x.alpha.total_cmp(&y.alpha));
        let len = rows.len();
        (0..bins)
            .map(|i| {
                let chunk = &rows[i * len / bins..(i + 1) * len / bins];
                chunk.iter().map(|r| r.sdot).sum::<f64>() / chunk.len() as f64
            })
            .collect()
    }
}

/// Computes `sdot`, CI and HCI for every matrix of the ensemble and their
/// correlations.
pub fn correlation_study(spec: &GeneratorSpec, gamma: f64) -> Result<StudyResult> {
    let samples = generate_ensemble(spec)?;
    let rows = samples
        .par_iter()
        .map(|s| {
            Ok(StudyRow {
                alpha: s.alpha,
                sdot: induce(&s.pcm, gamma)?.sdot,
                ci: saaty_ci(&s.pcm)?,
                hci: hci(&s.pcm)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let col = |f: fn(&StudyRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    let (sdot, ci, h) = (col(|r| r.sdot), col(|r| r.ci), col(|r| r.hci));
    Ok(StudyResult {
        spec: *spec,
        gamma,
        r2_ci: pearson_r2(&sdot, &ci)?,
        r2_hci: pearson_r2(&sdot, &h)?,
        rank_r2_ci: pearson_r2(&ranks(&sdot), &ranks(&ci))?,
        rank_r2_hci: pearson_r2(&ranks(&sdot), &ranks(&h))?,
        rows,
    })
}

/// Squared Pearson correlation.
pub fn pearson_r2(x: &[f64], y: &[f64]) -> Result<f64> {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx <= 0.0 {
        return Err(Error::DegenerateVariance("first variable"));
    }
    if syy <= 0.0 {
        return Err(Error::DegenerateVariance("second variable"));
    }
    Ok((sxy * sxy / (sxx * syy)).clamp(0.0, 1.0))
}

/// Ranks starting at 1; ties get their average rank.
fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut out = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

// Axiom suite.

/// Tolerance for invariance checks, relative to `max(1, sdot)`.
pub const INVARIANCE_TOLERANCE: f64 = 1e-10;
/// `sdot` at or below this counts as zero.
pub const ZERO_TOLERANCE: f64 = 1e-10;
/// `sdot` above this counts as clearly inconsistent.
pub const POSITIVE_THRESHOLD: f64 = 1e-6;

const POWER_GAMMAS: [f64; 3] = [1.5, 2.0, 3.0];
const DELTA_UP: [f64; 3] = [1.2, 1.5, 2.0];
const DELTA_DOWN: [f64; 3] = [0.8, 0.5, 0.2];
const CONTINUITY_STEPS: [f64; 4] = [1e-3, 1e-4, 1e-5, 1e-6];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub sample: usize,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RequirementResult {
    pub requirement: u8,
    pub name: &'static str,
    pub checks: usize,
    pub witnesses: Vec<Witness>,
}

impl RequirementResult {
    pub fn passed(&self) -> bool {
        self.witnesses.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomReport {
    pub samples: usize,
    pub seed: u64,
    pub requirements: Vec<RequirementResult>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.requirements.iter().all(RequirementResult::passed)
    }
}

/// Shapes of comparison graphs used by the suite and the conjecture check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Pattern {
    Complete {
        n: usize,
    },
    Ring {
        n: usize,
    },
    /// A random spanning tree, one extra edge that closes a cycle, and every
    /// other edge with probability `density`.
    Random {
        n: usize,
        density: f64,
    },
}

impl Pattern {
    pub fn n(&self) -> usize {
        match *self {
            Pattern::Complete { n } | Pattern::Ring { n } | Pattern::Random { n, .. } => n,
        }
    }

    pub fn build(&self, rng: &mut ChaCha8Rng) -> AdjacencyGraph {
        match *self {
            Pattern::Complete { n } => AdjacencyGraph::from_edges(n, &all_pairs(n)),
            Pattern::Ring { n } => {
                let edges: Vec<_> = (0..n).map(|a| (a, (a + 1) % n)).collect();
                AdjacencyGraph::from_edges(n, &edges)
            }
            Pattern::Random { n, density } => {
                let mut order: Vec<usize> = (0..n).collect();
                order.shuffle(rng);
                let mut edges = Vec::new();
                for i in 1..n {
                    let parent = order[rng.random_range(0..i)];
                    edges.push((order[i].min(parent), order[i].max(parent)));
                }
                let rest: Vec<(usize, usize)> = all_pairs(n)
                    .into_iter()
                    .filter(|e| !edges.contains(e))
                    .collect();
                if let Some(&first) = rest.choose(rng) {
                    edges.push(first);
                }
                for e in rest {
                    if !edges.contains(&e) && rng.random::<f64>() < density {
                        edges.push(e);
                    }
                }
                AdjacencyGraph::from_edges(n, &edges)
            }
        }
    }
}

fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|a| ((a + 1)..n).map(move |b| (a, b)))
        .collect()
}

fn sdot_of(pcm: &Pcm) -> Result<f64> {
    Ok(induce(pcm, 1.0)?.sdot)
}

fn close(x: f64, y: f64) -> bool {
    (x - y).abs() <= INVARIANCE_TOLERANCE * x.abs().max(y.abs()).max(1.0)
}

/// Edges whose removal keeps the graph connected, i.e. edges on a cycle.
fn cycle_edges(g: &AdjacencyGraph) -> Vec<(usize, usize)> {
    let edges = g.edges();
    edges
        .iter()
        .copied()
        .filter(|e| {
            let rest: Vec<_> = edges.iter().copied().filter(|x| x != e).collect();
            AdjacencyGraph::from_edges(g.n(), &rest).is_connected()
        })
        .collect()
}

struct SuiteInstance {
    inconsistent: Pcm,
    consistent: Pcm,
    consistent_sparse: Pcm,
}

fn suite_instance(seed: u64, i: usize) -> SuiteInstance {
    let mut rng = stream(seed, i as u64);
    let n = 3 + i % 4;
    let alpha = 0.5 + 1.5 * rng.random::<f64>();
    let inconsistent = draw_matrix(&mut rng, n, alpha);
    let consistent = draw_matrix(&mut rng, n, 0.0);
    let graph = Pattern::Random { n, density: 0.3 }.build(&mut rng);
    let f = draw_scale(&mut rng, n);
    let consistent_sparse =
        Pcm::consistent_on(&f, |a, b| graph.has_edge(a, b)).expect("valid scale");
    SuiteInstance {
        inconsistent,
        consistent,
        consistent_sparse,
    }
}

/// Checks the six axioms for inconsistency indices on random instances.
///
/// 1. `sdot` is zero exactly on consistent matrices.
/// 2. Relabeling alternatives leaves `sdot` unchanged.
/// 3. `sdot(W^g) > sdot(W)` for `g > 1` on inconsistent `W`.
/// 4. Raising one reciprocal pair of a consistent matrix to `delta` increases
///    `sdot` as `delta` moves away from 1 in either direction.
/// 5. `sdot` changes at most linearly under small entry perturbations.
/// 6. `sdot(W^T) = sdot(W)`.
pub fn axiom_suite(samples: usize, seed: u64) -> Result<AxiomReport> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    let per_sample: Vec<[Vec<Witness>; 6]> = (0..samples)
        .into_par_iter()
        .map(|i| check_sample(seed, i))
        .collect::<Result<_>>()?;

    const NAMES: [&str; 6] = [
        "identifies consistent matrices",
        "permutation invariance",
        "power monotonicity",
        "single-entry monotonicity",
        "continuity",
        "transpose invariance",
    ];
    let requirements = (0..6)
        .map(|r| RequirementResult {
            requirement: r as u8 + 1,
            name: NAMES[r],
            checks: samples,
            witnesses: per_sample.iter().flat_map(|w| w[r].clone()).collect(),
        })
        .collect();
    Ok(AxiomReport {
        samples,
        seed,
        requirements,
    })
}

fn check_sample(seed: u64, i: usize) -> Result<[Vec<Witness>; 6]> {
    let inst = suite_instance(seed, i);
    let mut rng = stream(seed ^ 0x9E37_79B9_7F4A_7C15, i as u64);
    let w = &inst.inconsistent;
    let n = w.n();
    let base = sdot_of(w)?;
    let mut out: [Vec<Witness>; 6] = Default::default();
    let mut fail = |r: usize, detail: String| out[r].push(Witness { sample: i, detail });

    // 1
    for (what, c) in [
        ("complete", &inst.consistent),
        ("incomplete", &inst.consistent_sparse),
    ] {
        let s = sdot_of(c)?;
        if s > ZERO_TOLERANCE {
            fail(0, format!("consistent {what} matrix has sdot {s:e}"));
        }
    }
    if base <= POSITIVE_THRESHOLD {
        fail(0, format!("inconsistent matrix has sdot {base:e}"));
    }

    // 2
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let permuted = sdot_of(&w.permute(&perm))?;
    if !close(permuted, base) {
        fail(1, format!("permutation {perm:?}: {permuted:e} vs {base:e}"));
    }

    // 3
    let mut prev = base;
    for g in POWER_GAMMAS {
        let powered = Pcm::with_tolerance(elementwise_pow(w, g), None, Tolerance::DEFAULT)?;
        let s = sdot_of(&powered)?;
        if s <= prev {
            fail(2, format!("gamma {g}: {s:e} <= {prev:e}"));
        }
        prev = s;
    }

    // 4
    let c = if i.is_multiple_of(2) {
        &inst.consistent
    } else {
        &inst.consistent_sparse
    };
    let candidates: Vec<_> = cycle_edges(&c.adjacency())
        .into_iter()
        .filter(|&(a, b)| c.get(a, b).ln().abs() > 1e-3)
        .collect();
    if let Some(&(a, b)) = candidates.choose(&mut rng) {
        for chain in [DELTA_UP, DELTA_DOWN] {
            let mut prev = 0.0;
            for delta in chain {
                let s = sdot_of(&c.with_entry(a, b, c.get(a, b).powf(delta))?)?;
                if s <= prev {
                    fail(
                        3,
                        format!("entry ({a},{b}) delta {delta}: {s:e} <= {prev:e}"),
                    );
                }
                prev = s;
            }
        }
    }

    // 5: slope fitted at the largest step bounds every smaller one.
    let (a, b) = {
        let pairs = all_pairs(n);
        *pairs.choose(&mut rng).expect("n >= 2")
    };
    let delta_at = |eps: f64| -> Result<f64> {
        let moved = w.with_entry(a, b, w.get(a, b) * (1.0 + eps))?;
        Ok((sdot_of(&moved)? - base).abs())
    };
    let fitted = 2.0 * delta_at(CONTINUITY_STEPS[0])? / CONTINUITY_STEPS[0];
    for eps in &CONTINUITY_STEPS[1..] {
        let d = delta_at(*eps)?;
        if d > fitted * eps + 1e-12 {
            fail(
                4,
                format!("entry ({a},{b}) eps {eps:e}: |change| {d:e} > {fitted:e} * eps"),
            );
        }
    }

    // 6
    let t = sdot_of(&w.transpose())?;
    if !close(t, base) {
        fail(5, format!("transpose: {t:e} vs {base:e}"));
    }
    Ok(out)
}

/// Settings for [`conjecture_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConjectureSpec {
    pub pattern: Pattern,
    /// Multiplier applied to the perturbed entry.
    pub alpha: f64,
    pub trials: usize,
    pub seed: u64,
}

/// Two consistent matrices on the same graph with unrelated scales have the
/// same induced walk. This checks that they still do after the same entry of
/// each is multiplied by `alpha`. Returns the largest entrywise gap between
/// the two transition matrices over all trials.
pub fn conjecture_check(spec: &ConjectureSpec) -> Result<f64> {
    if spec.trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    if !(spec.alpha.is_finite() && spec.alpha > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must be positive, got {}",
            spec.alpha
        )));
    }
    let gaps = (0..spec.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(spec.seed, t as u64);
            let graph = spec.pattern.build(&mut rng);
            let n = graph.n();
            let f = draw_scale(&mut rng, n);
            let g = draw_scale(&mut rng, n);
            let edges = graph.edges();
            let &(a, b) = edges.choose(&mut rng).expect("connected graph has edges");
            let perturb = |scale: &[f64]| -> Result<Pcm> {
                let c = Pcm::consistent_on(scale, |x, y| graph.has_edge(x, y))?;
                c.with_entry(a, b, c.get(a, b) * spec.alpha)
            };
            let kw = induce(&perturb(&f)?, 1.0)?.k;
            let kq = induce(&perturb(&g)?, 1.0)?.k;
            Ok((kw - kq).amax())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(gaps.into_iter().fold(0.0, f64::max))
}
