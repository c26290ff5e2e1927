//! Run configuration and input loading.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Serialize;
use sjq_core::causet::{sprinkle_diamond_2d, CausalSet, GreenConvention};
use sjq_core::cfield::HbarGrid;
use sjq_core::io::{parse_causal_set_input, parse_pauli_jordan, read_text};
use sjq_core::kahler::{block_rotation, PauliJordanOperator, DEFAULT_RANK_TOL};
use sjq_core::pipeline::causal_set_operator;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputKind {
    /// Decide from the file contents.
    Auto,
    Matrix,
    CausalSet,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SourceSpec {
    File { path: PathBuf, kind: InputKind },
    Sprinkle { density: f64, seed: u64 },
    /// The unit rotation block, one mode per block.
    Rotation { modes: usize },
}

/// Validated configuration shared by every command.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub source: SourceSpec,
    pub grid: HbarGrid,
    pub cutoff: usize,
    pub tol: Option<f64>,
    pub seed: u64,
    pub coupling: f64,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.cutoff < 4 {
            return Err(CliError::Input(format!("--cutoff must be at least 4, got {}", self.cutoff)));
        }
        if let Some(t) = self.tol {
            if !(t.is_finite() && t > 0.0) {
                return Err(CliError::Input(format!("--tol must be positive, got {t}")));
            }
        }
        if !(self.coupling.is_finite() && self.coupling > 0.0) {
            return Err(CliError::Input(format!("--coupling must be positive, got {}", self.coupling)));
        }
        Ok(())
    }

    pub fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }
}

/// Where the operator came from, echoed into every report.
#[derive(Debug, Clone, Serialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceInfo {
    Matrix { path: String },
    CausalSet { path: String },
    Sprinkle { density: f64, seed: u64 },
    RotationFixture { modes: usize },
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Restriction {
    pub elements: usize,
    pub relations: usize,
    pub rank: usize,
    pub convention: GreenConvention,
}

pub struct Loaded {
    pub source: SourceInfo,
    pub op: PauliJordanOperator,
    pub restriction: Option<Restriction>,
}

fn from_causal_set(c: &CausalSet, coupling: f64, source: SourceInfo) -> Result<Loaded, CliError> {
    let (_, op, convention) = causal_set_operator(c, coupling, DEFAULT_RANK_TOL)?;
    Ok(Loaded {
        source,
        restriction: Some(Restriction {
            elements: c.len(),
            relations: c.relations().len(),
            rank: op.dim(),
            convention,
        }),
        op,
    })
}

fn detect(text: &str) -> InputKind {
    let t = text.trim_start();
    if t.starts_with('{') {
        match serde_json::from_str::<serde_json::Value>(t) {
            Ok(v) if v.get("relations").is_some() => InputKind::CausalSet,
            _ => InputKind::Matrix,
        }
    } else if t.contains('<') || t.contains('>') || sjq_core::io::parse_matrix_csv(t).is_err() {
        InputKind::CausalSet
    } else {
        InputKind::Matrix
    }
}

fn load_file(path: &Path, kind: InputKind, coupling: f64) -> Result<Loaded, CliError> {
    let text = read_text(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let shown = path.display().to_string();
    let kind = match kind {
        InputKind::Auto => detect(&text),
        k => k,
    };
    match kind {
        InputKind::CausalSet => {
            let c = parse_causal_set_input(&text)?;
            from_causal_set(&c, coupling, SourceInfo::CausalSet { path: shown })
        }
        _ => Ok(Loaded {
            op: parse_pauli_jordan(&text)?,
            source: SourceInfo::Matrix { path: shown },
            restriction: None,
        }),
    }
}

pub fn load(cfg: &RunConfig) -> Result<Loaded, CliError> {
    match &cfg.source {
        SourceSpec::File { path, kind } => load_file(path, *kind, cfg.coupling),
        SourceSpec::Sprinkle { density, seed } => {
            let c = sprinkle_diamond_2d(*density, *seed)?;
            from_causal_set(
                &c,
                cfg.coupling,
                SourceInfo::Sprinkle {
                    density: *density,
                    seed: *seed,
                },
            )
        }
        SourceSpec::Rotation { modes } => Ok(Loaded {
            op: PauliJordanOperator::with_identity_gram(block_rotation(&vec![1.0; *modes]))?,
            source: SourceInfo::RotationFixture { modes: *modes },
            restriction: None,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detection() {
        assert_eq!(detect("0,1\n-1,0\n"), InputKind::Matrix);
        assert_eq!(detect("0<1\n1<2"), InputKind::CausalSet);
        assert_eq!(detect("0 1\n1 2"), InputKind::CausalSet);
        assert_eq!(detect(r#"{"n": 2, "relations": [[0, 1]]}"#), InputKind::CausalSet);
        assert_eq!(detect(r#"{"dim": 2, "matrix": [[0, 1], [-1, 0]]}"#), InputKind::Matrix);
    }
}
