use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Corpus;
use crate::error::{Error, Result};

/// Assignment of every problem id to one of `k` folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FoldSplit {
    pub fold_assignments: BTreeMap<String, usize>,
}

impl FoldSplit {
    pub fn n_folds(&self) -> usize {
        self.fold_assignments
            .values()
            .max()
            .map_or(0, |&m| m + 1)
    }

    pub fn fold_of(&self, problem_id: &str) -> Option<usize> {
        self.fold_assignments.get(problem_id).copied()
    }

    /// Indices of corpus programs in (`held_out`, rest).
    pub fn partition(&self, corpus: &Corpus, fold: usize) -> Result<(Vec<usize>, Vec<usize>)> {
        let mut held_out = Vec::new();
        let mut rest = Vec::new();
        for (i, p) in corpus.programs.iter().enumerate() {
            match self.fold_of(&p.problem_id) {
                Some(f) if f == fold => held_out.push(i),
                Some(_) => rest.push(i),
                None => return Err(Error::UnknownProblem(p.problem_id.clone())),
            }
        }
        Ok((held_out, rest))
    }
}

/// Splits problem ids into `k` folds. Programs sharing a problem id always
/// land in the same fold, and fold sizes (in problem ids) differ by at most one.
pub fn split_folds(corpus: &Corpus, k: usize, seed: u64) -> Result<FoldSplit> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("k must be at least 2, got {k}")));
    }
    if corpus.is_empty() {
        return Err(Error::InvalidArgument("cannot split an empty corpus".into()));
    }
    let ids: BTreeSet<&str> = corpus.programs.iter().map(|p| p.problem_id.as_str()).collect();
    if ids.len() < k {
        return Err(Error::TooFewGroups {
            groups: ids.len(),
            k,
        });
    }
    let mut ids: Vec<&str> = ids.into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    let fold_assignments = ids
        .into_iter()
        .enumerate()
        .map(|(i, id)| (id.to_string(), i % k))
        .collect();
    Ok(FoldSplit { fold_assignments })
}

pub fn save_folds(folds: &FoldSplit, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(folds).expect("fold map serializes");
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_folds(path: impl AsRef<Path>) -> Result<FoldSplit> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CorpusKind, Program};

    fn corpus_with_ids(ids: &[&str]) -> Corpus {
        let programs = ids
            .iter()
            .map(|id| Program::clean(*id, vec!["x = 1;".into()], vec![None]))
            .collect();
        Corpus::new(programs, CorpusKind::Clean).unwrap()
    }

    #[test]
    fn ten_ids_into_five_folds_of_two() {
        let ids: Vec<String> = (0..10).map(|i| format!("p{i}")).collect();
        let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
        let split = split_folds(&corpus_with_ids(&refs), 5, 7).unwrap();
        let mut sizes = [0usize; 5];
        for &f in split.fold_assignments.values() {
            sizes[f] += 1;
        }
        assert_eq!(sizes, [2; 5]);
    }

    #[test]
    fn deterministic_for_seed() {
        let corpus = corpus_with_ids(&["a", "b", "c", "d", "e", "f", "g"]);
        assert_eq!(
            split_folds(&corpus, 3, 11).unwrap(),
            split_folds(&corpus, 3, 11).unwrap()
        );
    }

    #[test]
    fn infeasible_split_rejected() {
        let corpus = corpus_with_ids(&["a", "b", "c"]);
        assert!(matches!(
            split_folds(&corpus, 5, 0),
            Err(Error::TooFewGroups { groups: 3, k: 5 })
        ));
        assert!(split_folds(&corpus, 1, 0).is_err());
    }

    #[test]
    fn shared_problem_ids_stay_together() {
        let corpus = corpus_with_ids(&["a", "a", "b", "b", "b", "c", "d"]);
        let split = split_folds(&corpus, 2, 3).unwrap();
        let (held, rest) = split.partition(&corpus, 0).unwrap();
        assert_eq!(held.len() + rest.len(), corpus.len());
        for &i in &held {
            for &j in &rest {
                assert_ne!(corpus.programs[i].problem_id, corpus.programs[j].problem_id);
            }
        }
    }
}
