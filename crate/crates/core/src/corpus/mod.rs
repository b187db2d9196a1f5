//! Dataset schema: paired source/pseudocode programs with labeled error lines.
//!
//! Corpora are stored as JSON lines, one program per line:
//!
//! ```text
//! {"problem_id":"p1","source":["int n;", ...],"pseudo":["n = integer", null, ...],
//!  "error_lines":[3],"error_types":["LoopCondition"]}
//! ```
//!
//! Line indices are 0-based and count every physical line, blank or brace-only
//! lines included. Absent pseudocode is an explicit `null` so that index `i`
//! always refers to the same line in both streams.

mod folds;
mod synth;

use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use folds::{load_folds, save_folds, split_folds, FoldSplit};
pub use synth::{synth_corpus, LineRange};

/// The six logic-error categories used for labels and mutation rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ErrorType {
    LoopCondition,
    ConditionBranch,
    StatementIntegrity,
    VariableInitialization,
    DataType,
    Computation,
}

impl ErrorType {
    pub const ALL: [ErrorType; 6] = [
        ErrorType::LoopCondition,
        ErrorType::ConditionBranch,
        ErrorType::StatementIntegrity,
        ErrorType::VariableInitialization,
        ErrorType::DataType,
        ErrorType::Computation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ErrorType::LoopCondition => "LoopCondition",
            ErrorType::ConditionBranch => "ConditionBranch",
            ErrorType::StatementIntegrity => "StatementIntegrity",
            ErrorType::VariableInitialization => "VariableInitialization",
            ErrorType::DataType => "DataType",
            ErrorType::Computation => "Computation",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ErrorType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ErrorType {
    type Err = Error;

    /// Case-insensitive; `_` and `-` separators are ignored.
    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| !matches!(c, '_' | '-')).collect();
        ErrorType::ALL
            .into_iter()
            .find(|t| t.name().eq_ignore_ascii_case(&key))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown error type {s:?}")))
    }
}

/// One program: aligned source and pseudocode lines plus its error labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Program {
    pub problem_id: String,
    #[serde(rename = "source")]
    pub source_lines: Vec<String>,
    #[serde(rename = "pseudo")]
    pub pseudo_lines: Vec<Option<String>>,
    pub error_lines: Vec<usize>,
    pub error_types: Vec<ErrorType>,
}

impl Program {
    /// A clean program (no error labels).
    pub fn clean(
        problem_id: impl Into<String>,
        source_lines: Vec<String>,
        pseudo_lines: Vec<Option<String>>,
    ) -> Self {
        Program {
            problem_id: problem_id.into(),
            source_lines,
            pseudo_lines,
            error_lines: Vec::new(),
            error_types: Vec::new(),
        }
    }

    /// Number of physical lines.
    pub fn len(&self) -> usize {
        self.source_lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source_lines.is_empty()
    }

    pub fn is_clean(&self) -> bool {
        self.error_lines.is_empty()
    }

    pub fn pseudo(&self, line: usize) -> Option<&str> {
        self.pseudo_lines.get(line).and_then(|p| p.as_deref())
    }

    pub fn validate(&self) -> Result<()> {
        let id = &self.problem_id;
        let len = self.source_lines.len();
        if len == 0 {
            return Err(Error::validation(id, "program has no source lines"));
        }
        if self.pseudo_lines.len() != len {
            return Err(Error::validation(
                id,
                format!(
                    "pseudo has {} entries but source has {len} lines",
                    self.pseudo_lines.len()
                ),
            ));
        }
        for (pos, &line) in self.error_lines.iter().enumerate() {
            if line >= len {
                return Err(Error::validation(
                    id,
                    format!("error line {line} out of range for {len} lines"),
                ));
            }
            if pos > 0 && self.error_lines[pos - 1] >= line {
                return Err(Error::validation(
                    id,
                    "error_lines must be strictly ascending without duplicates",
                ));
            }
        }
        if self.error_types.len() != self.error_lines.len() {
            return Err(Error::validation(
                id,
                format!(
                    "{} error types for {} error lines",
                    self.error_types.len(),
                    self.error_lines.len()
                ),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusKind {
    SingleError,
    MultiError,
    Clean,
}

impl CorpusKind {
    fn admits(self, n_errors: usize) -> bool {
        match self {
            CorpusKind::SingleError => n_errors == 1,
            CorpusKind::MultiError => n_errors >= 2,
            CorpusKind::Clean => n_errors == 0,
        }
    }

    fn of_count(n_errors: usize) -> Self {
        match n_errors {
            0 => CorpusKind::Clean,
            1 => CorpusKind::SingleError,
            _ => CorpusKind::MultiError,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub programs: Vec<Program>,
    pub kind: CorpusKind,
}

impl Corpus {
    /// Builds a corpus, validating every program and the kind invariant.
    pub fn new(programs: Vec<Program>, kind: CorpusKind) -> Result<Self> {
        for p in &programs {
            p.validate()?;
            if !kind.admits(p.error_lines.len()) {
                return Err(Error::validation(
                    &p.problem_id,
                    format!(
                        "{} error lines not allowed in a {kind:?} corpus",
                        p.error_lines.len()
                    ),
                ));
            }
        }
        Ok(Corpus { programs, kind })
    }

    /// Builds a corpus whose kind is inferred from the first program.
    pub fn infer(programs: Vec<Program>) -> Result<Self> {
        let kind = programs
            .first()
            .map(|p| CorpusKind::of_count(p.error_lines.len()))
            .unwrap_or(CorpusKind::Clean);
        Corpus::new(programs, kind)
    }

    pub fn len(&self) -> usize {
        self.programs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.programs.is_empty()
    }

    pub fn mean_len(&self) -> f64 {
        if self.programs.is_empty() {
            return 0.0;
        }
        let total: usize = self.programs.iter().map(Program::len).sum();
        total as f64 / self.programs.len() as f64
    }

    /// Serializes to JSON lines. Output is byte-stable for equal corpora.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for p in &self.programs {
            out.push_str(&serde_json::to_string(p).expect("program serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str, origin: &Path) -> Result<Self> {
        let mut programs = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if let Some(p) = parse_record(line, idx + 1, origin)? {
                programs.push(p);
            }
        }
        Corpus::infer(programs)
    }

    /// Programs selected by index, keeping this corpus's kind.
    pub fn subset(&self, indices: &[usize]) -> Corpus {
        Corpus {
            programs: indices.iter().map(|&i| self.programs[i].clone()).collect(),
            kind: self.kind,
        }
    }
}

fn parse_record(line: &str, line_no: usize, origin: &Path) -> Result<Option<Program>> {
    if line.trim().is_empty() {
        return Ok(None);
    }
    let program: Program = serde_json::from_str(line).map_err(|e| Error::Parse {
        path: origin.to_path_buf(),
        line: line_no,
        message: e.to_string(),
    })?;
    program.validate()?;
    Ok(Some(program))
}

/// Loads and validates a JSON-lines corpus file.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut programs = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if let Some(p) = parse_record(&line, idx + 1, path)? {
            programs.push(p);
        }
    }
    Corpus::infer(programs)
}

pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(corpus.to_jsonl().as_bytes())
        .map_err(|e| Error::io(path, e))
}
