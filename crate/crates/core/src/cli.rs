//! The `pcm` command line.
//!
//! Exit status is 0 on success, 1 when an input or computation is rejected
//! and 2 on bad usage. JSON goes to stdout and diagnostics to stderr.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};

use crate::completion::{enumerate_paths, harker_fill};
use crate::error::Error;
use crate::experiments::{axiom_suite, correlation_study, GeneratorSpec};
use crate::indices::report;
use crate::pcm::{parse_pcm, Format, Pcm};
use crate::service::{serve, SessionStore};

/// Default directory for `experiment` output when `--output-dir` is absent.
pub const OUTPUT_DIR_ENV: &str = "PCM_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "pcm",
    version,
    about = "Inconsistency analysis for pairwise comparison matrices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the inconsistency report as JSON.
    Evaluate {
        pcm: PathBuf,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        gamma: f64,
        #[arg(long)]
        format: Option<Format>,
    },
    /// Fill missing comparisons from the geometric mean over paths and write
    /// the complete matrix as CSV.
    Fill {
        pcm: PathBuf,
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[arg(long)]
        format: Option<Format>,
    },
    /// Print alternatives by descending preference.
    Rank {
        pcm: PathBuf,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        format: Option<Format>,
    },
    /// List the simple paths between two alternatives, by label or index.
    Paths {
        pcm: PathBuf,
        a: String,
        b: String,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        format: Option<Format>,
    },
    /// Correlate entropy production with CI and HCI on random matrices.
    Experiment {
        #[arg(long, default_value_t = 5)]
        n: usize,
        #[arg(long, default_value_t = 500)]
        count: usize,
        #[arg(long, default_value_t = 4.0)]
        alpha_max: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        gamma: f64,
        /// Defaults to $PCM_OUTPUT_DIR, then the current directory.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Check the index axioms on random matrices; exits 1 if any fails.
    Axioms {
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the HTTP session service.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        /// Append-only JSON-lines file replayed on start.
        #[arg(long)]
        journal: Option<PathBuf>,
    },
}

/// Runs one command. `argv[0]` is the program name.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                write!(stdout, "{text}")
            } else {
                write!(stderr, "{text}")
            };
            return code;
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(Failure { message }) => {
            let _ = writeln!(stderr, "error: {message}");
            1
        }
    }
}

struct Failure {
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::from(e).into()
    }
}

/// Describes core errors with labels instead of indices where possible.
fn explain(e: Error, pcm: &Pcm) -> Failure {
    let message = match &e {
        Error::Disconnected { components } => {
            let groups: Vec<String> = components
                .iter()
                .map(|c| {
                    let names: Vec<&str> = c.iter().map(|&i| pcm.labels()[i].as_str()).collect();
                    format!("{{{}}}", names.join(", "))
                })
                .collect();
            format!("adjacency graph is disconnected: {}", groups.join(" | "))
        }
        _ => e.to_string(),
    };
    Failure { message }
}

fn load(path: &Path, format: Option<Format>) -> std::result::Result<Pcm, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure {
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    parse_pcm(&text, format.unwrap_or_else(|| Format::from_path(path))).map_err(|e| Failure {
        message: format!("{}: {e}", path.display()),
    })
}

fn resolve(pcm: &Pcm, name: &str) -> std::result::Result<usize, Failure> {
    pcm.label_index(name)
        .or_else(|| name.parse::<usize>().ok().filter(|&i| i < pcm.n()))
        .ok_or_else(|| Failure {
            message: format!("unknown alternative {name:?}"),
        })
}

fn json_line(stdout: &mut dyn Write, value: &impl serde::Serialize) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut *stdout, value).map_err(std::io::Error::from)?;
    writeln!(stdout)
}

fn dispatch(
    command: Command,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> std::result::Result<i32, Failure> {
    match command {
        Command::Evaluate { pcm, gamma, format } => {
            if !gamma.is_finite() {
                return Err(
                    Error::InvalidArgument(format!("gamma must be finite, got {gamma}")).into(),
                );
            }
            let pcm = load(&pcm, format)?;
            let r = report(&pcm, gamma).map_err(|e| explain(e, &pcm))?;
            json_line(stdout, &r)?;
        }
        Command::Fill {
            pcm,
            output,
            format,
        } => {
            let pcm = load(&pcm, format)?;
            let filled = harker_fill(&pcm).map_err(|e| explain(e, &pcm))?;
            match output {
                Some(path) => {
                    std::fs::write(&path, filled.to_csv())?;
                    writeln!(stderr, "wrote {}", path.display())?;
                }
                None => write!(stdout, "{}", filled.to_csv())?,
            }
        }
        Command::Rank { pcm, json, format } => {
            let pcm = load(&pcm, format)?;
            let r = report(&pcm, 1.0).map_err(|e| explain(e, &pcm))?;
            let ranking = r.ranking();
            if json {
                let rows: Vec<_> = ranking
                    .iter()
                    .map(|(l, v)| serde_json::json!({ "label": l, "value": v }))
                    .collect();
                json_line(stdout, &rows)?;
            } else {
                for (label, value) in ranking {
                    writeln!(stdout, "{label} {value:.4}")?;
                }
            }
        }
        Command::Paths {
            pcm,
            a,
            b,
            json,
            format,
        } => {
            let pcm = load(&pcm, format)?;
            let (s, t) = (resolve(&pcm, &a)?, resolve(&pcm, &b)?);
            let set = enumerate_paths(&pcm.adjacency(), s, t)?;
            let named: Vec<Vec<&str>> = set
                .paths
                .iter()
                .map(|p| p.iter().map(|&i| pcm.labels()[i].as_str()).collect())
                .collect();
            if json {
                json_line(stdout, &named)?;
            } else {
                for p in named {
                    writeln!(stdout, "{}", p.join(" "))?;
                }
            }
        }
        Command::Experiment {
            n,
            count,
            alpha_max,
            seed,
            gamma,
            output_dir,
        } => {
            let dir = output_dir
                .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("."));
            let spec = GeneratorSpec::new(n, (0.0, alpha_max), seed, count);
            let study = correlation_study(&spec, gamma)?;
            std::fs::create_dir_all(&dir)?;
            std::fs::write(dir.join("study.csv"), study.to_csv())?;
            let summary = study.summary_json();
            std::fs::write(
                dir.join("summary.json"),
                serde_json::to_string_pretty(&summary).map_err(Error::from)?,
            )?;
            std::fs::write(
                dir.join("scatter.json"),
                serde_json::to_string(&study.scatter_values()).map_err(Error::from)?,
            )?;
            writeln!(
                stderr,
                "wrote study.csv, summary.json, scatter.json to {}",
                dir.display()
            )?;
            json_line(stdout, &summary)?;
        }
        Command::Axioms { samples, seed } => {
            let r = axiom_suite(samples, seed)?;
            let passed = r.passed();
            json_line(
                stdout,
                &serde_json::json!({ "passed": passed, "report": r }),
            )?;
            for req in r.requirements.iter().filter(|q| !q.passed()) {
                writeln!(
                    stderr,
                    "requirement {} ({}) failed on {} samples",
                    req.requirement,
                    req.name,
                    req.witnesses.len()
                )?;
            }
            return Ok(if passed { 0 } else { 1 });
        }
        Command::Serve {
            port,
            host,
            journal,
        } => {
            let store = match journal {
                Some(path) => SessionStore::with_journal(&path)?,
                None => SessionStore::new(),
            };
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(serve((host, port).into(), Arc::new(store)))?;
        }
    }
    Ok(0)
}
