//! Pairwise comparison matrices and their adjacency graphs.
//!
//! A [`Pcm`] holds `n` alternatives and an `n x n` matrix of preference
//! ratios. `entries[(a, b)]` is how strongly `a` is preferred over `b`; the
//! value `0.0` marks a comparison that was never made. Missingness is always
//! symmetric and every positive pair is reciprocal up to a [`Tolerance`].
//!
//! Entries are kept exactly as given. Published tables are rounded, so the
//! default tolerance accepts products like `1.39 * 0.72 = 1.0008`.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum allowed `|W_ab * W_ba - 1|` for positive pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance(pub f64);

impl Tolerance {
    /// Accepts matrices printed to two decimals.
    pub const DEFAULT: Tolerance = Tolerance(0.05);
    /// Exact reciprocity up to floating point rounding.
    pub const STRICT: Tolerance = Tolerance(1e-12);
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// A broken matrix invariant, tied to the entry that breaks it.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Violation {
    Diagonal { a: usize, value: f64 },
    NonFinite { a: usize, b: usize },
    Negative { a: usize, b: usize, value: f64 },
    AsymmetricMissing { a: usize, b: usize },
    Reciprocity { a: usize, b: usize, product: f64 },
    Disconnected { components: Vec<Vec<usize>> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Diagonal { a, value } => {
                write!(f, "diagonal entry ({a}, {a}) is {value}, expected 1")
            }
            Violation::NonFinite { a, b } => write!(f, "entry ({a}, {b}) is not finite"),
            Violation::Negative { a, b, value } => {
                write!(f, "entry ({a}, {b}) = {value} is negative")
            }
            Violation::AsymmetricMissing { a, b } => {
                write!(f, "entry ({a}, {b}) is present but ({b}, {a}) is missing")
            }
            Violation::Reciprocity { a, b, product } => write!(
                f,
                "entries ({a}, {b}) and ({b}, {a}) multiply to {product}, not 1"
            ),
            Violation::Disconnected { components } => {
                write!(f, "adjacency graph has {} components: ", components.len())?;
                let parts: Vec<String> = components.iter().map(|c| format!("{c:?}")).collect();
                write!(f, "{}", parts.join(" "))
            }
        }
    }
}

/// Checks the entry-level invariants of a candidate matrix. Connectivity is
/// not checked here; see [`validate`].
pub fn check_entries(entries: &DMatrix<f64>, tol: Tolerance) -> Vec<Violation> {
    let n = entries.nrows();
    let mut out = Vec::new();
    for a in 0..n {
        let d = entries[(a, a)];
        if d != 1.0 {
            out.push(Violation::Diagonal { a, value: d });
        }
    }
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let w = entries[(a, b)];
            if !w.is_finite() {
                out.push(Violation::NonFinite { a, b });
            } else if w < 0.0 {
                out.push(Violation::Negative { a, b, value: w });
            }
        }
    }
    for a in 0..n {
        for b in (a + 1)..n {
            let (wab, wba) = (entries[(a, b)], entries[(b, a)]);
            if !(wab.is_finite() && wba.is_finite()) || wab < 0.0 || wba < 0.0 {
                continue;
            }
            match (wab > 0.0, wba > 0.0) {
                (true, false) => out.push(Violation::AsymmetricMissing { a, b }),
                (false, true) => out.push(Violation::AsymmetricMissing { a: b, b: a }),
                (true, true) => {
                    let product = wab * wba;
                    if (product - 1.0).abs() > tol.0 {
                        out.push(Violation::Reciprocity { a, b, product });
                    }
                }
                (false, false) => {}
            }
        }
    }
    out
}

/// All invariant violations of a candidate matrix, including connectivity of
/// its adjacency graph. Empty means the matrix is usable for every analysis.
pub fn validate(entries: &DMatrix<f64>, tol: Tolerance) -> Vec<Violation> {
    let mut out = check_entries(entries, tol);
    let graph = AdjacencyGraph::from_pattern(entries);
    let components = graph.components();
    if components.len() > 1 {
        out.push(Violation::Disconnected { components });
    }
    out
}

/// A validated pairwise comparison matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Pcm {
    entries: DMatrix<f64>,
    labels: Vec<String>,
}

impl Pcm {
    /// Builds a matrix with the default reciprocity tolerance. Labels default
    /// to `a1..an` when `None`.
    pub fn new(entries: DMatrix<f64>, labels: Option<Vec<String>>) -> Result<Self> {
        Self::with_tolerance(entries, labels, Tolerance::DEFAULT)
    }

    pub fn with_tolerance(
        entries: DMatrix<f64>,
        labels: Option<Vec<String>>,
        tol: Tolerance,
    ) -> Result<Self> {
        let n = entries.nrows();
        if entries.ncols() != n {
            return Err(Error::NotSquare {
                row: 0,
                len: entries.ncols(),
                expected: n,
            });
        }
        if n < 2 {
            return Err(Error::TooSmall(n));
        }
        let labels = match labels {
            Some(l) if l.len() != n => {
                return Err(Error::LabelCount {
                    expected: n,
                    got: l.len(),
                })
            }
            Some(l) => l,
            None => default_labels(n),
        };
        let violations = check_entries(&entries, tol);
        if !violations.is_empty() {
            return Err(Error::Invalid(violations));
        }
        Ok(Self { entries, labels })
    }

    /// Row-major convenience constructor.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::NotSquare {
                    row: i,
                    len: r.len(),
                    expected: n,
                });
            }
        }
        Self::new(DMatrix::from_fn(n, n, |a, b| rows[a][b]), None)
    }

    /// The consistent matrix `W_ab = scale_a / scale_b` on a given pattern.
    /// `pattern(a, b)` decides whether the comparison is present; it is only
    /// consulted for `a < b`.
    pub fn consistent_on(scale: &[f64], pattern: impl Fn(usize, usize) -> bool) -> Result<Self> {
        let n = scale.len();
        let mut m = DMatrix::identity(n, n);
        for a in 0..n {
            for b in (a + 1)..n {
                if pattern(a, b) {
                    m[(a, b)] = scale[a] / scale[b];
                    m[(b, a)] = 1.0 / m[(a, b)];
                }
            }
        }
        Self::with_tolerance(m, None, Tolerance::STRICT)
    }

    /// The complete consistent matrix built from a positive scale.
    pub fn consistent(scale: &[f64]) -> Result<Self> {
        Self::consistent_on(scale, |_, _| true)
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.entries[(a, b)]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn is_missing(&self, a: usize, b: usize) -> bool {
        self.entries[(a, b)] == 0.0
    }

    /// True when every off-diagonal comparison is present.
    pub fn is_complete(&self) -> bool {
        self.missing_count() == 0
    }

    /// Number of missing unordered comparisons.
    pub fn missing_count(&self) -> usize {
        let n = self.n();
        (0..n)
            .flat_map(|a| ((a + 1)..n).map(move |b| (a, b)))
            .filter(|&(a, b)| self.is_missing(a, b))
            .count()
    }

    pub fn adjacency(&self) -> AdjacencyGraph {
        AdjacencyGraph::from_pattern(&self.entries)
    }

    /// Violations of every invariant, including connectivity.
    pub fn validate(&self) -> Vec<Violation> {
        validate(&self.entries, Tolerance::DEFAULT)
    }

    pub fn ensure_connected(&self) -> Result<()> {
        let components = self.adjacency().components();
        if components.len() > 1 {
            return Err(Error::Disconnected { components });
        }
        Ok(())
    }

    pub fn transpose(&self) -> Pcm {
        Pcm {
            entries: self.entries.transpose(),
            labels: self.labels.clone(),
        }
    }

    /// Relabels alternatives so that new index `i` is old index `perm[i]`.
    /// This is `P W P^T` for the permutation matrix `P` with `P[i][perm[i]] = 1`.
    pub fn permute(&self, perm: &[usize]) -> Pcm {
        let n = self.n();
        assert_eq!(perm.len(), n, "permutation length must equal n");
        Pcm {
            entries: DMatrix::from_fn(n, n, |i, j| self.entries[(perm[i], perm[j])]),
            labels: perm.iter().map(|&p| self.labels[p].clone()).collect(),
        }
    }

    /// Copy with one comparison replaced: `W_ab = value`, `W_ba = 1 / value`,
    /// or both cleared when `value == 0`.
    pub fn with_entry(&self, a: usize, b: usize, value: f64) -> Result<Pcm> {
        let n = self.n();
        for i in [a, b] {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, n });
            }
        }
        if a == b {
            return Err(Error::InvalidArgument(
                "diagonal comparisons are fixed at 1".into(),
            ));
        }
        if !value.is_finite() || value < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "comparison value must be finite and >= 0, got {value}"
            )));
        }
        let mut entries = self.entries.clone();
        if value == 0.0 {
            entries[(a, b)] = 0.0;
            entries[(b, a)] = 0.0;
        } else {
            entries[(a, b)] = value;
            entries[(b, a)] = 1.0 / value;
        }
        Ok(Pcm {
            entries,
            labels: self.labels.clone(),
        })
    }

    /// Element-wise log of positive entries, zero elsewhere.
    pub(crate) fn log_entries(&self) -> DMatrix<f64> {
        self.entries.map(|w| if w > 0.0 { w.ln() } else { 0.0 })
    }

    pub fn to_csv(&self) -> String {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        // Writing to a Vec cannot fail.
        wtr.write_record(&self.labels).expect("in-memory write");
        for a in 0..self.n() {
            let row: Vec<String> = (0..self.n())
                .map(|b| format_number(self.entries[(a, b)]))
                .collect();
            wtr.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(wtr.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&PcmDocument::from(self)).expect("serializable")
    }
}

fn format_number(x: f64) -> String {
    format!("{x}")
}

pub(crate) fn default_labels(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("a{i}")).collect()
}

/// Wire format of a matrix in JSON. Diagonal entries may be `null`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PcmDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    pub entries: Vec<Vec<Option<f64>>>,
}

impl From<&Pcm> for PcmDocument {
    fn from(p: &Pcm) -> Self {
        let n = p.n();
        PcmDocument {
            labels: Some(p.labels.clone()),
            entries: (0..n)
                .map(|a| (0..n).map(|b| Some(p.entries[(a, b)])).collect())
                .collect(),
        }
    }
}

impl PcmDocument {
    pub fn into_pcm(self, tol: Tolerance) -> Result<Pcm> {
        let n = self.entries.len();
        let mut m = DMatrix::zeros(n, n);
        for (a, row) in self.entries.iter().enumerate() {
            if row.len() != n {
                return Err(Error::NotSquare {
                    row: a,
                    len: row.len(),
                    expected: n,
                });
            }
            for (b, v) in row.iter().enumerate() {
                m[(a, b)] = match v {
                    Some(x) => *x,
                    None if a == b => 1.0,
                    None => 0.0,
                };
            }
        }
        Pcm::with_tolerance(m, self.labels, tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// Guesses from a file extension; anything but `.json` is CSV.
    pub fn from_path(path: &std::path::Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Parse(format!("unknown format {other:?}"))),
        }
    }
}

/// Parses a matrix with the default tolerance.
pub fn parse_pcm(text: &str, format: Format) -> Result<Pcm> {
    parse_pcm_with(text, format, Tolerance::DEFAULT)
}

pub fn parse_pcm_with(text: &str, format: Format, tol: Tolerance) -> Result<Pcm> {
    match format {
        Format::Json => serde_json::from_str::<PcmDocument>(text)?.into_pcm(tol),
        Format::Csv => parse_csv(text, tol),
    }
}

fn parse_csv(text: &str, tol: Tolerance) -> Result<Pcm> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut records = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        records.push(rec);
    }
    if records.is_empty() {
        return Err(Error::Parse("empty CSV input".into()));
    }
    let header_is_labels = records[0].iter().any(|f| f.parse::<f64>().is_err());
    let labels = if header_is_labels {
        let h = records.remove(0);
        Some(h.iter().map(str::to_owned).collect::<Vec<_>>())
    } else {
        None
    };
    let n = records.len();
    let mut m = DMatrix::zeros(n, n);
    for (a, rec) in records.iter().enumerate() {
        if rec.len() != n {
            return Err(Error::NotSquare {
                row: a,
                len: rec.len(),
                expected: n,
            });
        }
        for (b, field) in rec.iter().enumerate() {
            m[(a, b)] = field.parse::<f64>().map_err(|_| {
                Error::Parse(format!("row {a}, column {b}: {field:?} is not a number"))
            })?;
        }
    }
    Pcm::with_tolerance(m, labels, tol)
}

/// The 0/1 pattern of available comparisons. The diagonal is always set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyGraph {
    n: usize,
    adj: Vec<bool>,
}

impl AdjacencyGraph {
    /// `adj[a][b] = entries[a][b] > 0`.
    pub fn from_pattern(entries: &DMatrix<f64>) -> Self {
        let n = entries.nrows();
        let adj = (0..n * n).map(|i| entries[(i / n, i % n)] > 0.0).collect();
        Self { n, adj }
    }

    /// Builds a graph from undirected edges; self-loops are always added.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut adj = vec![false; n * n];
        for a in 0..n {
            adj[a * n + a] = true;
        }
        for &(a, b) in edges {
            adj[a * n + b] = true;
            adj[b * n + a] = true;
        }
        Self { n, adj }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a * self.n + b]
    }

    /// Off-diagonal neighbours of `a` in increasing order.
    pub fn neighbors(&self, a: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&b| b != a && self.has_edge(a, b))
    }

    /// Undirected off-diagonal edges `(a, b)` with `a < b`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.n)
            .flat_map(|a| ((a + 1)..self.n).map(move |b| (a, b)))
            .filter(|&(a, b)| self.has_edge(a, b))
            .collect()
    }

    /// The adjacency as a 0/1 real matrix, self-loops included.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(
            self.n,
            self.n,
            |a, b| {
                if self.has_edge(a, b) {
                    1.0
                } else {
                    0.0
                }
            },
        )
    }

    /// Connected components over off-diagonal edges, each sorted, ordered by
    /// smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n];
        let mut out = Vec::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![start];
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                for (u, s) in seen.iter_mut().enumerate() {
                    if u != v && !*s && (self.has_edge(v, u) || self.has_edge(u, v)) {
                        *s = true;
                        comp.push(u);
                        queue.push_back(u);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() == 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const TENNIS_CSV: &str = include_str!("../data/tennis.csv");

    #[test]
    fn parses_tennis_table() {
        let p = parse_pcm(TENNIS_CSV, Format::Csv).unwrap();
        assert_eq!(p.n(), 6);
        assert_eq!(p.get(0, 1), 1.39);
        assert_eq!(p.labels()[4], "N");
        assert_eq!(p.missing_count(), 6);
        assert!(p.validate().is_empty());
    }

    #[test]
    fn smallest_valid_matrix() {
        let p = parse_pcm("1,2\n0.5,1", Format::Csv).unwrap();
        assert_eq!(p.n(), 2);
        assert!(p.is_complete());
        assert_eq!(p.labels(), ["a1", "a2"]);
    }

    #[test]
    fn reciprocity_violation_rejected() {
        let err = parse_pcm("1,2\n0.4,1", Format::Csv).unwrap_err();
        match err {
            Error::Invalid(v) => {
                assert!(matches!(v[..], [Violation::Reciprocity { a: 0, b: 1, .. }]))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn strict_tolerance_rejects_rounded_table() {
        assert!(parse_pcm_with(TENNIS_CSV, Format::Csv, Tolerance::STRICT).is_err());
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            parse_pcm("1,2\n0.5", Format::Csv),
            Err(Error::NotSquare { row: 1, .. })
        ));
        assert!(matches!(
            parse_pcm("1", Format::Csv),
            Err(Error::TooSmall(1))
        ));
        assert!(matches!(
            parse_pcm("1,-2\n-0.5,1", Format::Csv),
            Err(Error::Invalid(_))
        ));
        assert!(matches!(
            parse_pcm("1,2\n0,1", Format::Csv),
            Err(Error::Invalid(_))
        ));
        assert!(matches!(
            parse_pcm("1,x2\n0.5,1\n", Format::Csv),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn json_diagonal_is_optional() {
        let p = parse_pcm(r#"{"entries": [[null, 4], [0.25, null]]}"#, Format::Json).unwrap();
        assert_eq!(p.get(0, 0), 1.0);
        assert_eq!(p.get(0, 1), 4.0);
    }

    #[test]
    fn adjacency_of_tennis() {
        let p = parse_pcm(TENNIS_CSV, Format::Csv).unwrap();
        let g = p.adjacency();
        let names: Vec<String> = g
            .edges()
            .iter()
            .map(|&(a, b)| format!("{}{}", p.labels()[a], p.labels()[b]))
            .collect();
        assert_eq!(
            names,
            ["AB", "AF", "AN", "AS", "BS", "DF", "DN", "FN", "FS"]
        );
        assert!((0..6).all(|a| g.has_edge(a, a)));
        assert!(g.is_connected());
    }

    #[test]
    fn adjacency_trivial_cases() {
        let full = Pcm::consistent(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(
            full.adjacency().to_matrix(),
            DMatrix::from_element(3, 3, 1.0)
        );

        let empty = Pcm::from_rows(&[&[1.0, 0.0], &[0.0, 1.0]]).unwrap();
        assert_eq!(empty.adjacency().to_matrix(), DMatrix::identity(2, 2));
        assert!(!empty.adjacency().is_connected());
        assert!(matches!(
            empty.validate()[..],
            [Violation::Disconnected { .. }]
        ));
    }

    #[test]
    fn connectivity() {
        assert!(!AdjacencyGraph::from_edges(3, &[]).is_connected());
        assert!(AdjacencyGraph::from_edges(3, &[(0, 1), (1, 2)]).is_connected());
        assert_eq!(
            AdjacencyGraph::from_edges(4, &[(0, 2)]).components(),
            vec![vec![0, 2], vec![1], vec![3]]
        );
    }

    #[test]
    fn validate_reports_each_rule() {
        let consistent = Pcm::consistent(&[2.0, 1.0, 1.0]).unwrap();
        assert!(consistent.validate().is_empty());

        let mut m = DMatrix::identity(2, 2);
        m[(0, 1)] = 2.0;
        assert_eq!(
            validate(&m, Tolerance::DEFAULT),
            vec![Violation::AsymmetricMissing { a: 0, b: 1 }]
        );

        let mut m = DMatrix::from_element(2, 2, 1.0);
        m[(1, 1)] = 2.0;
        assert_eq!(
            check_entries(&m, Tolerance::DEFAULT),
            vec![Violation::Diagonal { a: 1, value: 2.0 }]
        );
    }

    #[test]
    fn with_entry_sets_and_retracts() {
        let p = Pcm::from_rows(&[&[1.0, 0.0], &[0.0, 1.0]]).unwrap();
        let q = p.with_entry(0, 1, 4.0).unwrap();
        assert_eq!(q.get(1, 0), 0.25);
        let r = q.with_entry(1, 0, 0.0).unwrap();
        assert_eq!(r, p);
        assert!(p.with_entry(0, 0, 2.0).is_err());
        assert!(p.with_entry(0, 5, 2.0).is_err());
        assert!(p.with_entry(0, 1, f64::NAN).is_err());
    }

    #[test]
    fn permutation_relabels() {
        let p = Pcm::consistent(&[1.0, 2.0, 4.0]).unwrap();
        let q = p.permute(&[2, 0, 1]);
        assert_eq!(q.labels(), ["a3", "a1", "a2"]);
        assert_eq!(q.get(0, 1), 4.0);
    }

    #[test]
    fn csv_round_trip_keeps_values() {
        let p = parse_pcm(TENNIS_CSV, Format::Csv).unwrap();
        let q = parse_pcm(&p.to_csv(), Format::Csv).unwrap();
        assert_eq!(p, q);
        let r = parse_pcm(&p.to_json(), Format::Json).unwrap();
        assert_eq!(p, r);
    }
}
