//! Experiment configuration files, described by
//! `schema/experiment_config.schema.json`.
//!
//! ```json
//! { "command": "solve-kw", "seed": 3, "params": { "random_l1": 1.5, "out": "rho.csv" } }
//! ```

use std::path::Path;

use serde::Deserialize;
use serde_json::Value;

use crate::commands::{self, CliError, CliResult, GenFlowArgs, LoopOpsArgs, RoundtripArgs, SolveKwArgs, VerifyAllArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    SolveKw,
    GenFlow,
    Roundtrip,
    LoopOps,
    VerifyAll,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: CommandName,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "empty_object")]
    pub params: Value,
}

fn empty_object() -> Value {
    Value::Object(Default::default())
}

fn params<T: serde::de::DeserializeOwned>(value: Value) -> Result<T, CliError> {
    serde_json::from_value(value).map_err(|e| CliError::Invalid(format!("params: {e}")))
}

pub fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

pub fn run(path: &Path) -> CliResult {
    let cfg = load(path)?;
    match cfg.command {
        CommandName::SolveKw => commands::solve_kw(&params::<SolveKwArgs>(cfg.params)?, cfg.seed),
        CommandName::GenFlow => commands::gen_flow(&params::<GenFlowArgs>(cfg.params)?),
        CommandName::Roundtrip => commands::roundtrip(&params::<RoundtripArgs>(cfg.params)?),
        CommandName::LoopOps => commands::loop_ops(&params::<LoopOpsArgs>(cfg.params)?, cfg.seed),
        CommandName::VerifyAll => commands::verify_all(&params::<VerifyAllArgs>(cfg.params)?),
    }
}
