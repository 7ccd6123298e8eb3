//! Inconsistency analysis for pairwise comparison matrices.
//!
//! Every comparison matrix `W`, complete or not, induces a family of maximum
//! path entropy random walks over its alternatives. The walk is reversible
//! exactly when `W` is consistent, so its entropy production rate is an
//! inconsistency index that needs no filling-in of missing comparisons.
//!
//! ```
//! use pcm_entropy::{parse_pcm, report, Format};
//!
//! let pcm = parse_pcm("1,2,8\n0.5,1,2\n0.125,0.5,1", Format::Csv).unwrap();
//! let r = report(&pcm, 1.0).unwrap();
//! assert!(r.sdot > 0.0);
//! assert!((r.ci.unwrap() - 0.0268).abs() < 1e-4);
//! ```

pub mod cli;
pub mod completion;
pub mod error;
pub mod experiments;
pub mod indices;
pub mod merw;
pub mod pcm;
pub mod service;
pub mod spectral;

pub use completion::{
    eigenvector_scale, enumerate_paths, harker_fill, incomplete_preference_scale, scale_breakdown,
    PathSet, ScaleBreakdown,
};
pub use error::{Error, Result};
pub use experiments::{
    axiom_suite, conjecture_check, correlation_study, generate_ensemble, generate_random_pcm,
    AxiomReport, ConjectureSpec, GeneratorSpec, Pattern, StudyResult,
};
pub use indices::{hci, report, saaty_ci, InconsistencyReport, PairContribution};
pub use merw::{
    decompose, entropy_production, flux_curve, induce, path_log_ratio, Contribution, DecomposeBy,
    EdgeContribution, FluxPoint, MerwModel,
};
pub use pcm::{parse_pcm, parse_pcm_with, AdjacencyGraph, Format, Pcm, Tolerance, Violation};
pub use spectral::{elementwise_pow, perron, SpectralPair};
