//! The on-disk experiment description and the report envelope.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::args::Command;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A subcommand together with every parameter it ran with, including the
/// resolved seed. Serializes as `{"command": ..., "params": {...}}` plus the
/// thread count, and parses back into the same value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    #[serde(flatten)]
    pub command: Command,
    #[serde(default)]
    pub threads: Option<usize>,
}

impl ExperimentSpec {
    pub fn name(&self) -> &'static str {
        self.command.name()
    }

    pub fn seed(&self) -> Option<u64> {
        self.command.seed()
    }

    /// Files the experiment writes besides the report itself.
    pub fn outputs(&self) -> Vec<&Path> {
        self.command.outputs()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading spec {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing spec {}", path.display()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub spec: ExperimentSpec,
    pub results: Value,
    pub diagnostics: Value,
    pub version: String,
}

impl Report {
    /// The seed and output files are copied into the diagnostics so they
    /// sit next to the numbers they produced.
    pub fn new(spec: &ExperimentSpec, results: Value, mut diagnostics: Value) -> Self {
        if let Value::Object(map) = &mut diagnostics {
            map.insert("seed".into(), serde_json::json!(spec.seed()));
            map.insert("outputs".into(), serde_json::json!(spec.outputs()));
        }
        Report {
            spec: spec.clone(),
            results,
            diagnostics,
            version: VERSION.to_string(),
        }
    }

    pub fn emit(&self, out: Option<&PathBuf>) -> Result<()> {
        let text = serde_json::to_string_pretty(self)? + "\n";
        match out {
            Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use clap::Parser;

    use super::*;
    use crate::args::Cli;

    #[test]
    fn specs_round_trip_through_json() {
        let lines: [&[&str]; 6] = [
            &["bbs", "basis", "--kappa", "4"],
            &[
                "bbs",
                "evolve",
                "--config",
                "kappa=1 offset=0 cells=01",
                "--word",
                "-1+1",
            ],
            &[
                "bbs",
                "pitman",
                "--input",
                "p.csv",
                "--transform",
                "inverse",
                "--slopes",
                "-1",
                "2.5",
            ],
            &[
                "bbs",
                "invariance-test",
                "--probs",
                "0.5,0.25,0.25",
                "--color",
                "2",
                "--seed",
                "3",
            ],
            &[
                "bbs",
                "bm-invariance",
                "--kappa",
                "1",
                "--c",
                "0.5,-0.5",
                "--Lprime",
                "20",
            ],
            &["bbs", "donsker", "--c", "0.3,-0.3", "--dump", "d.csv"],
        ];
        for argv in lines {
            let mut command = Cli::try_parse_from(argv).unwrap().command;
            command.resolve_seed();
            let spec = ExperimentSpec {
                command,
                threads: Some(2),
            };
            let text = serde_json::to_string(&spec).unwrap();
            let back: ExperimentSpec = serde_json::from_str(&text).unwrap();
            assert_eq!(back, spec, "{text}");
        }
    }

    #[test]
    fn outputs_and_seed_are_exposed() {
        let cli =
            Cli::try_parse_from(["bbs", "donsker", "--dump", "d.csv", "--seed", "5"]).unwrap();
        let spec = ExperimentSpec {
            command: cli.command,
            threads: None,
        };
        assert_eq!(spec.seed(), Some(5));
        assert_eq!(spec.outputs(), [Path::new("d.csv")]);
        assert_eq!(spec.name(), "donsker");
    }
}
