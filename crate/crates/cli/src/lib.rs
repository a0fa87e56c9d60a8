//! Experiment driver for `hitlab-core`: configuration, batch runs and
//! deterministic CSV/JSON artifacts.

pub mod checks;
pub mod config;
pub mod experiments;
pub mod output;

use config::Resolved;
use output::{Artifacts, Timings};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::time::Instant;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] hitlab_core::Error),
    #[error("output error: {0}")]
    Output(String),
}

impl RunError {
    /// 2 for configuration and precondition errors, 3 for exhausted resources.
    pub fn exit_code(&self) -> u8 {
        use hitlab_core::Error as E;
        match self {
            RunError::Config(_) | RunError::Output(_) => 2,
            RunError::Core(e) => {
                if e.is_resource() || matches!(e, E::Horizon { .. } | E::Estimation(_) | E::NeverHits(_)) {
                    3
                } else {
                    2
                }
            }
        }
    }
}

/// Result of one experiment before it is written out.
pub struct Outcome {
    pub artifacts: Artifacts,
    pub passed: bool,
    pub summary: String,
    pub stages: BTreeMap<String, f64>,
}

impl Outcome {
    pub fn new(artifacts: Artifacts, passed: bool, summary: String) -> Outcome {
        Outcome {
            artifacts,
            passed,
            summary,
            stages: BTreeMap::new(),
        }
    }
}

/// SHA-256 of the canonical JSON of kind, seed and parameters (not the output path).
pub fn config_hash(cfg: &Resolved) -> String {
    let v = serde_json::json!({
        "kind": cfg.kind.name(),
        "seed": cfg.seed,
        "params": cfg.params,
    });
    hex::encode(Sha256::digest(serde_json::to_vec(&v).expect("serializable")))
}

/// Runs the experiment and writes its artifacts to `cfg.out`.
pub fn run(cfg: &Resolved) -> Result<Outcome, RunError> {
    let start = Instant::now();
    let mut outcome = experiments::run(&cfg.params, cfg.seed)?;
    let total = start.elapsed().as_secs_f64();
    let timings = Timings {
        total_seconds: total,
        stages: std::mem::take(&mut outcome.stages),
    };
    output::write_all(
        &cfg.out,
        cfg.kind.name(),
        cfg.seed,
        &config_hash(cfg),
        outcome.passed,
        &outcome.artifacts,
        &timings,
    )?;
    Ok(outcome)
}
