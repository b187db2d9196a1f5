//! Per-line semantic alignment between code and pseudocode.
//!
//! Scores come from a pluggable [`AlignScorer`]. The built-in
//! [`LexicalScorer`] is a Jaccard overlap of alphanumeric tokens; scores
//! produced offline by any other model can be loaded with
//! [`load_external_scores`].

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Program};
use crate::error::{Error, Result};
use crate::math::softmax;

/// Maps one (code line, pseudocode line) pair to a score in `[0, 1]`.
/// Implementations must be deterministic and return 0 for absent pseudocode.
pub trait AlignScorer: Send + Sync {
    fn score(&self, code_line: &str, pseudo_line: Option<&str>) -> f64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LexicalScorer;

impl AlignScorer for LexicalScorer {
    fn score(&self, code_line: &str, pseudo_line: Option<&str>) -> f64 {
        lexical_align(code_line, pseudo_line)
    }
}

fn alnum_set(text: &str) -> BTreeSet<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '_'))
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Jaccard similarity of the lowercased alphanumeric token sets.
pub fn lexical_align(code_line: &str, pseudo_line: Option<&str>) -> f64 {
    let Some(pseudo) = pseudo_line else {
        return 0.0;
    };
    let a = alnum_set(code_line);
    let b = alnum_set(pseudo);
    if b.is_empty() {
        return 0.0;
    }
    let inter = a.intersection(&b).count();
    let union = a.union(&b).count();
    inter as f64 / union as f64
}

/// Raw per-line scores in `[0, 1]` and their softmax over lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentVector {
    pub raw: Vec<f64>,
    pub normalized: Vec<f64>,
}

impl AlignmentVector {
    /// Clamps raw scores into `[0, 1]` and caches the softmax.
    pub fn from_raw(raw: Vec<f64>) -> Self {
        let raw: Vec<f64> = raw.into_iter().map(|s| s.clamp(0.0, 1.0)).collect();
        let normalized = softmax(&raw);
        AlignmentVector { raw, normalized }
    }

    /// All-zero raw scores, i.e. uniform normalized scores.
    pub fn neutral(len: usize) -> Self {
        Self::from_raw(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }
}

pub fn score_program(program: &Program, scorer: &dyn AlignScorer) -> AlignmentVector {
    let raw = program
        .source_lines
        .iter()
        .zip(&program.pseudo_lines)
        .map(|(code, pseudo)| scorer.score(code, pseudo.as_deref()))
        .collect();
    AlignmentVector::from_raw(raw)
}

#[derive(Debug, Deserialize)]
struct ScoreRow {
    problem_id: String,
    scores: Vec<f64>,
}

/// Loads externally computed per-line scores, one JSON object per line:
/// `{"problem_id": "...", "scores": [..]}`. Out-of-range values are clamped
/// into `[0, 1]` with a warning.
pub fn load_external_scores(
    path: impl AsRef<Path>,
    corpus: &Corpus,
) -> Result<HashMap<String, AlignmentVector>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_external_scores(&text, path, corpus)
}

pub fn parse_external_scores(
    text: &str,
    origin: &Path,
    corpus: &Corpus,
) -> Result<HashMap<String, AlignmentVector>> {
    let mut lengths: HashMap<&str, usize> = HashMap::new();
    for p in &corpus.programs {
        let len = p.len();
        if let Some(prev) = lengths.insert(&p.problem_id, len) {
            if prev != len {
                return Err(Error::validation(
                    &p.problem_id,
                    "programs sharing this id differ in length; external scores are ambiguous",
                ));
            }
        }
    }
    let mut out = HashMap::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: ScoreRow = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        let expected = *lengths
            .get(row.problem_id.as_str())
            .ok_or_else(|| Error::UnknownProblem(row.problem_id.clone()))?;
        if row.scores.len() != expected {
            return Err(Error::LengthMismatch {
                problem_id: row.problem_id,
                expected,
                found: row.scores.len(),
            });
        }
        if let Some(bad) = row.scores.iter().find(|s| !s.is_finite()) {
            return Err(Error::validation(&row.problem_id, format!("non-finite score {bad}")));
        }
        if row.scores.iter().any(|s| !(0.0..=1.0).contains(s)) {
            log::warn!(
                "{}: clamping out-of-range alignment scores into [0, 1]",
                row.problem_id
            );
        }
        out.insert(row.problem_id, AlignmentVector::from_raw(row.scores));
    }
    Ok(out)
}

/// Where per-program alignment vectors come from.
pub enum AlignSource {
    Scorer(Box<dyn AlignScorer>),
    External(HashMap<String, AlignmentVector>),
}

impl Default for AlignSource {
    fn default() -> Self {
        AlignSource::Scorer(Box::new(LexicalScorer))
    }
}

impl AlignSource {
    pub fn for_program(&self, program: &Program) -> Result<AlignmentVector> {
        match self {
            AlignSource::Scorer(s) => Ok(score_program(program, s.as_ref())),
            AlignSource::External(map) => map
                .get(&program.problem_id)
                .cloned()
                .ok_or_else(|| Error::UnknownProblem(program.problem_id.clone())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::CorpusKind;
    use crate::fixtures::table2_program;
    use proptest::prelude::*;

    #[test]
    fn row4_pair_is_one_half() {
        assert_eq!(lexical_align("len = s.size();", Some("set len to size of s")), 0.5);
    }

    #[test]
    fn identity_and_absence() {
        assert_eq!(lexical_align("x", Some("x")), 1.0);
        assert_eq!(lexical_align("x = 1;", None), 0.0);
        assert_eq!(lexical_align("x = 1;", Some("  ")), 0.0);
        assert_eq!(lexical_align("}", Some("print x")), 0.0);
    }

    #[test]
    fn constant_raw_gives_uniform() {
        let v = AlignmentVector::from_raw(vec![0.3; 4]);
        assert!(v.normalized.iter().all(|&x| (x - 0.25).abs() < 1e-15));
    }

    #[test]
    fn two_line_softmax() {
        let v = AlignmentVector::from_raw(vec![1.0, 0.0]);
        let e = std::f64::consts::E;
        assert!((v.normalized[0] - e / (e + 1.0)).abs() < 1e-15);
        assert!((v.normalized[1] - 1.0 / (e + 1.0)).abs() < 1e-15);
        assert!((v.normalized[0] - 0.7311).abs() < 1e-4);
    }

    #[test]
    fn all_null_pseudo_is_uniform() {
        let mut p = table2_program();
        p.pseudo_lines = vec![None; p.len()];
        let v = score_program(&p, &LexicalScorer);
        assert!(v.raw.iter().all(|&r| r == 0.0));
        let u = 1.0 / p.len() as f64;
        assert!(v.normalized.iter().all(|&x| (x - u).abs() < 1e-15));
    }

    fn table2_corpus() -> Corpus {
        Corpus::new(vec![table2_program()], CorpusKind::SingleError).unwrap()
    }

    #[test]
    fn external_scores_accepted() {
        let corpus = table2_corpus();
        let scores: Vec<String> = (0..15).map(|i| format!("{}", i as f64 / 15.0)).collect();
        let text = format!("{{\"problem_id\":\"table2\",\"scores\":[{}]}}\n", scores.join(","));
        let map = parse_external_scores(&text, Path::new("s"), &corpus).unwrap();
        assert_eq!(map["table2"].len(), 15);
    }

    #[test]
    fn external_short_row_rejected() {
        let corpus = table2_corpus();
        let text = format!("{{\"problem_id\":\"table2\",\"scores\":[{}]}}", vec!["0.5"; 14].join(","));
        match parse_external_scores(&text, Path::new("s"), &corpus).unwrap_err() {
            Error::LengthMismatch {
                problem_id,
                expected,
                found,
            } => assert_eq!((problem_id.as_str(), expected, found), ("table2", 15, 14)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn external_out_of_range_clamped() {
        let corpus = table2_corpus();
        let mut scores = vec!["0.5"; 15];
        scores[3] = "1.7";
        scores[4] = "-0.2";
        let text = format!("{{\"problem_id\":\"table2\",\"scores\":[{}]}}", scores.join(","));
        let map = parse_external_scores(&text, Path::new("s"), &corpus).unwrap();
        assert_eq!(map["table2"].raw[3], 1.0);
        assert_eq!(map["table2"].raw[4], 0.0);
    }

    #[test]
    fn external_unknown_id_rejected() {
        let corpus = table2_corpus();
        let text = r#"{"problem_id":"nope","scores":[0.1]}"#;
        assert!(matches!(
            parse_external_scores(text, Path::new("s"), &corpus),
            Err(Error::UnknownProblem(id)) if id == "nope"
        ));
    }

    proptest! {
        #[test]
        fn jaccard_order_invariant_and_bounded(
            a in proptest::collection::vec("[a-z]{1,3}", 0..8),
            b in proptest::collection::vec("[a-z]{1,3}", 1..8),
        ) {
            let s1 = lexical_align(&a.join(" "), Some(&b.join(" ")));
            let mut ra = a.clone();
            ra.reverse();
            let mut rb = b.clone();
            rb.reverse();
            let s2 = lexical_align(&ra.join(" ; "), Some(&rb.join(" ")));
            prop_assert_eq!(s1, s2);
            prop_assert!((0.0..=1.0).contains(&s1));
        }

        #[test]
        fn shared_token_never_decreases(
            a in proptest::collection::vec("[a-z]{1,3}", 0..8),
            b in proptest::collection::vec("[a-z]{1,3}", 1..8),
            shared in "[a-z]{1,3}",
        ) {
            let before = lexical_align(&a.join(" "), Some(&b.join(" ")));
            let after = lexical_align(
                &format!("{} {shared}", a.join(" ")),
                Some(&format!("{shared} {}", b.join(" "))),
            );
            prop_assert!(after >= before);
        }

        #[test]
        fn normalized_is_shift_invariant(
            raw in proptest::collection::vec(0.0f64..0.5, 1..20),
            shift in 0.0f64..0.5,
        ) {
            let a = AlignmentVector::from_raw(raw.clone());
            let b = AlignmentVector::from_raw(raw.iter().map(|r| r + shift).collect());
            let sum: f64 = a.normalized.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-6);
            for (x, y) in a.normalized.iter().zip(&b.normalized) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
