//! Report envelopes: every primary output carries the run configuration.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use clap::ValueEnum;
use serde::Serialize;

use logicloc::model::{Dims, EpochLog};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    Json,
    Table,
}

/// Provenance echoed into every report header.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RunConfig {
    pub subcommand: &'static str,
    pub inputs: Vec<String>,
    pub output: Option<String>,
    pub seed: Option<u64>,
    pub dims: Option<[usize; 4]>,
    pub lambda_max: Option<f64>,
    pub align_mode: Option<String>,
    pub mix: Option<String>,
    pub ks: Option<Vec<usize>>,
}

impl RunConfig {
    pub fn new(subcommand: &'static str) -> Self {
        RunConfig {
            subcommand,
            ..RunConfig::default()
        }
    }

    pub fn input(mut self, path: &Path) -> Self {
        self.inputs.push(path.display().to_string());
        self
    }

    pub fn output(mut self, path: Option<&Path>) -> Self {
        self.output = path.map(|p| p.display().to_string());
        self
    }

    pub fn dims(mut self, dims: &Dims) -> Self {
        self.dims = Some([dims.d_emb, dims.d_h, dims.d_gat, dims.d_mlp]);
        self
    }

    fn header(&self) -> String {
        let value = serde_json::to_value(self).expect("run config serializes");
        let mut out = String::new();
        for (key, v) in value.as_object().expect("run config is an object") {
            let _ = writeln!(out, "# {key}: {v}");
        }
        out
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    run: &'a RunConfig,
    result: &'a T,
}

/// Renders `result` as JSON wrapped with the run config, or as the run
/// config header followed by `table`.
pub fn render<T: Serialize>(emit: Emit, run: &RunConfig, result: &T, table: impl FnOnce() -> String) -> String {
    match emit {
        Emit::Json => {
            let mut text = serde_json::to_string_pretty(&Envelope { run, result }).expect("report serializes");
            text.push('\n');
            text
        }
        Emit::Table => format!("{}{}", run.header(), table()),
    }
}

/// Writes `text` to `path`, or to stdout when no path is given.
pub fn deliver(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn log_table(log: &[EpochLog]) -> String {
    let mut out = format!(
        "{:>6}{:>9}{:>11}{:>11}{:>11}{:>9}{:>9}{:>9}\n",
        "epoch", "lambda", "loss", "ce", "align", "top-1", "top-5", "top-10"
    );
    for e in log {
        let _ = write!(
            out,
            "{:>6}{:>9.4}{:>11.5}{:>11.5}{:>11.5}",
            e.epoch, e.lambda, e.mean_loss, e.mean_ce, e.mean_align
        );
        match e.heldout_topk {
            Some(acc) => {
                for a in acc {
                    let _ = write!(out, "{:>9.1}", a * 100.0);
                }
            }
            None => out.push_str(&format!("{:>9}{:>9}{:>9}", "-", "-", "-")),
        }
        out.push('\n');
    }
    out
}
