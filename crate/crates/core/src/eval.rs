//! Top-k localization accuracy, per-type ratios and cross-validation.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::align::AlignSource;
use crate::corpus::{Corpus, ErrorType, FoldSplit};
use crate::error::{Error, Result};
use crate::model::network::{predict_example, Example};
use crate::model::params::ModelParams;
use crate::model::train::{train, EpochLog, TrainConfig};
use crate::ranking::RankingResult;

pub const DEFAULT_KS: [usize; 3] = [1, 5, 10];

/// How a multi-line truth set scores against a top-k list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HitRule {
    /// Some true line is among the top k.
    #[default]
    Any,
    /// Every true line is among the top k.
    All,
}

/// Whether any line of `truth` is among the `k` highest-ranked lines.
pub fn topk_hit(ranking: &RankingResult, truth: &[usize], k: usize) -> bool {
    let top = ranking.top(k);
    truth.iter().any(|t| top.contains(t))
}

/// Whether every line of `truth` is among the `k` highest-ranked lines.
pub fn topk_hit_all(ranking: &RankingResult, truth: &[usize], k: usize) -> bool {
    let top = ranking.top(k);
    !truth.is_empty() && truth.iter().all(|t| top.contains(t))
}

fn hit(rule: HitRule, ranking: &RankingResult, truth: &[usize], k: usize) -> bool {
    match rule {
        HitRule::Any => topk_hit(ranking, truth, k),
        HitRule::All => topk_hit_all(ranking, truth, k),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopKReport {
    pub method: String,
    pub n_programs: usize,
    pub ks: Vec<usize>,
    pub hits: Vec<usize>,
    pub accuracy: Vec<f64>,
    pub rule: HitRule,
}

impl TopKReport {
    fn from_hits(method: &str, n_programs: usize, ks: &[usize], hits: Vec<usize>, rule: HitRule) -> Self {
        let accuracy = hits
            .iter()
            .map(|&h| if n_programs == 0 { 0.0 } else { h as f64 / n_programs as f64 })
            .collect();
        TopKReport {
            method: method.to_string(),
            n_programs,
            ks: ks.to_vec(),
            hits,
            accuracy,
            rule,
        }
    }

    /// Accuracy at cut-off `k`, if it was measured.
    pub fn at(&self, k: usize) -> Option<f64> {
        self.ks.iter().position(|&x| x == k).map(|i| self.accuracy[i])
    }

    /// Program-level pooling: total hits over total programs.
    pub fn pooled(method: &str, reports: &[TopKReport]) -> Result<TopKReport> {
        let first = reports
            .first()
            .ok_or_else(|| Error::InvalidArgument("nothing to pool".into()))?;
        if reports.iter().any(|r| r.ks != first.ks || r.rule != first.rule) {
            return Err(Error::InvalidArgument("reports use different cut-offs or hit rules".into()));
        }
        let n = reports.iter().map(|r| r.n_programs).sum();
        let hits = (0..first.ks.len())
            .map(|i| reports.iter().map(|r| r.hits[i]).sum())
            .collect();
        Ok(TopKReport::from_hits(method, n, &first.ks, hits, first.rule))
    }

    pub fn to_table(&self) -> String {
        let mut header = format!("{:<16}{:>8}", "method", "n");
        let mut row = format!("{:<16}{:>8}", self.method, self.n_programs);
        for (k, acc) in self.ks.iter().zip(&self.accuracy) {
            let _ = write!(header, "{:>10}", format!("top-{k}"));
            let _ = write!(row, "{:>10.1}", acc * 100.0);
        }
        format!("{header}\n{row}\n")
    }
}

fn check_ranking(corpus: &Corpus, idx: usize, ranking: &RankingResult) -> Result<()> {
    let p = &corpus.programs[idx];
    if ranking.len() != p.len() {
        return Err(Error::LengthMismatch {
            problem_id: p.problem_id.clone(),
            expected: p.len(),
            found: ranking.len(),
        });
    }
    if p.error_lines.is_empty() {
        return Err(Error::validation(&p.problem_id, "evaluation needs at least one labeled error line"));
    }
    Ok(())
}

/// Mean top-k hit rate with rankings given in corpus order.
pub fn evaluate(
    corpus: &Corpus,
    rankings: &[RankingResult],
    method: &str,
    ks: &[usize],
    rule: HitRule,
) -> Result<TopKReport> {
    if ks.iter().any(|&k| k == 0) {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if rankings.len() < corpus.len() {
        return Err(Error::MissingRanking(corpus.programs[rankings.len()].problem_id.clone()));
    }
    if rankings.len() > corpus.len() {
        return Err(Error::InvalidArgument(format!(
            "{} rankings for {} programs",
            rankings.len(),
            corpus.len()
        )));
    }
    let mut hits = vec![0; ks.len()];
    for (i, ranking) in rankings.iter().enumerate() {
        check_ranking(corpus, i, ranking)?;
        let truth = &corpus.programs[i].error_lines;
        for (h, &k) in hits.iter_mut().zip(ks) {
            *h += hit(rule, ranking, truth, k) as usize;
        }
    }
    Ok(TopKReport::from_hits(method, corpus.len(), ks, hits, rule))
}

/// Orders keyed rankings to match the corpus. Problem ids must be unique.
pub fn rankings_in_order(corpus: &Corpus, keyed: &HashMap<String, RankingResult>) -> Result<Vec<RankingResult>> {
    corpus
        .programs
        .iter()
        .map(|p| {
            keyed
                .get(&p.problem_id)
                .cloned()
                .ok_or_else(|| Error::MissingRanking(p.problem_id.clone()))
        })
        .collect()
}

/// [`evaluate`] for rankings keyed by problem id.
pub fn evaluate_keyed(
    corpus: &Corpus,
    keyed: &HashMap<String, RankingResult>,
    method: &str,
    ks: &[usize],
    rule: HitRule,
) -> Result<TopKReport> {
    evaluate(corpus, &rankings_in_order(corpus, keyed)?, method, ks, rule)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeRow {
    pub error_type: ErrorType,
    pub count: usize,
    pub proportion: f64,
    pub top1_hits: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeBreakdown {
    pub total: usize,
    pub rows: Vec<TypeRow>,
}

impl TypeBreakdown {
    pub fn row(&self, ty: ErrorType) -> Option<&TypeRow> {
        self.rows.iter().find(|r| r.error_type == ty)
    }

    pub fn to_table(&self) -> String {
        let mut out = format!("{:<24}{:>8}{:>12}{:>10}\n", "error type", "count", "proportion", "top-1");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<24}{:>8}{:>12.1}{:>10.1}",
                r.error_type.name(),
                r.count,
                r.proportion * 100.0,
                r.ratio * 100.0
            );
        }
        out
    }
}

/// Top-1 hit rate per error type. Each labeled line is its own entry and
/// counts as a hit only when that line is ranked first.
pub fn per_type_breakdown(corpus: &Corpus, rankings: &[RankingResult]) -> Result<TypeBreakdown> {
    if rankings.len() != corpus.len() {
        return Err(Error::InvalidArgument(format!(
            "{} rankings for {} programs",
            rankings.len(),
            corpus.len()
        )));
    }
    let mut counts: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    let mut total = 0;
    for (i, (p, ranking)) in corpus.programs.iter().zip(rankings).enumerate() {
        check_ranking(corpus, i, ranking)?;
        let first = ranking.order.first().copied();
        for (&line, ty) in p.error_lines.iter().zip(&p.error_types) {
            let entry = counts.entry(ty.index()).or_default();
            entry.0 += 1;
            entry.1 += (first == Some(line)) as usize;
            total += 1;
        }
    }
    let rows = counts
        .into_iter()
        .map(|(idx, (count, hits))| TypeRow {
            error_type: ErrorType::ALL[idx],
            count,
            proportion: count as f64 / total as f64,
            top1_hits: hits,
            ratio: hits as f64 / count as f64,
        })
        .collect();
    Ok(TypeBreakdown { total, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub report: TopKReport,
    pub log: Vec<EpochLog>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub pooled: TopKReport,
    pub folds: Vec<FoldResult>,
    pub breakdown: TypeBreakdown,
    /// Held-out ranking of every program, in corpus order.
    pub rankings: Vec<RankingResult>,
    /// Final parameters of each fold's model.
    #[serde(skip)]
    pub params: Vec<ModelParams>,
}

/// Trains on all folds but one, ranks the held-out fold, and pools
/// program-level hits over all folds.
pub fn cross_validate(
    corpus: &Corpus,
    folds: &FoldSplit,
    cfg: &TrainConfig,
    source: &AlignSource,
    ks: &[usize],
) -> Result<CvReport> {
    let mut rankings: Vec<Option<RankingResult>> = vec![None; corpus.len()];
    let mut fold_results = Vec::with_capacity(folds.n_folds());
    let mut params = Vec::with_capacity(folds.n_folds());
    for fold in 0..folds.n_folds() {
        let (held, _) = folds.partition(corpus, fold)?;
        let outcome = train(corpus, Some((folds, fold)), cfg, source)?;
        let mut fold_rankings = Vec::with_capacity(held.len());
        for &i in &held {
            let ex = Example::from_source(&corpus.programs[i], &outcome.params.vocab, source)?;
            let ranking = predict_example(&outcome.params, &ex)?.ranking();
            rankings[i] = Some(ranking.clone());
            fold_rankings.push(ranking);
        }
        let report = evaluate(&corpus.subset(&held), &fold_rankings, "model", ks, HitRule::Any)?;
        log::info!("fold {fold}: {:?}", report.accuracy);
        fold_results.push(FoldResult {
            fold,
            report,
            log: outcome.log,
        });
        params.push(outcome.params);
    }
    let rankings = rankings
        .into_iter()
        .enumerate()
        .map(|(i, r)| r.ok_or_else(|| Error::MissingRanking(corpus.programs[i].problem_id.clone())))
        .collect::<Result<Vec<_>>>()?;
    let reports: Vec<TopKReport> = fold_results.iter().map(|f| f.report.clone()).collect();
    let pooled = TopKReport::pooled("model", &reports)?;
    let breakdown = per_type_breakdown(corpus, &rankings)?;
    Ok(CvReport {
        pooled,
        folds: fold_results,
        breakdown,
        rankings,
        params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CorpusKind, Program};
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn labeled(id: &str, len: usize, lines: &[usize], ty: ErrorType) -> Program {
        Program {
            problem_id: id.into(),
            source_lines: (0..len).map(|i| format!("x{i}++;")).collect(),
            pseudo_lines: vec![None; len],
            error_lines: lines.to_vec(),
            error_types: vec![ty; lines.len()],
        }
    }

    fn single(n: usize, len: usize, ty: ErrorType, seed: u64) -> Corpus {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let programs = (0..n)
            .map(|i| {
                let line = *(0..len).collect::<Vec<_>>().choose(&mut rng).unwrap();
                labeled(&format!("q{i}"), len, &[line], ty)
            })
            .collect();
        Corpus::new(programs, CorpusKind::SingleError).unwrap()
    }

    fn oracle(corpus: &Corpus) -> Vec<RankingResult> {
        corpus
            .programs
            .iter()
            .map(|p| {
                let mut order = p.error_lines.clone();
                order.extend((0..p.len()).filter(|l| !p.error_lines.contains(l)));
                RankingResult::from_order(order)
            })
            .collect()
    }

    #[test]
    fn rank_lookup_examples() {
        let r = RankingResult::from_order(vec![3, 7, 1, 0, 9, 2, 4, 5, 6, 8]);
        assert!(!topk_hit(&r, &[7], 1));
        assert!(topk_hit(&r, &[7], 2));
        assert!((1..=10).all(|k| topk_hit(&r, &[3], k)));
        assert!(topk_hit(&r, &[2, 9], 5));
        assert!(!topk_hit(&r, &[2, 8], 5));
        assert!(topk_hit(&r, &[8], 40));
        assert!(!topk_hit_all(&r, &[3, 8], 5));
        assert!(topk_hit_all(&r, &[3, 9], 5));
    }

    #[test]
    fn oracle_and_anti_oracle() {
        let corpus = single(50, 15, ErrorType::Computation, 1);
        let rep = evaluate(&corpus, &oracle(&corpus), "oracle", &DEFAULT_KS, HitRule::Any).unwrap();
        assert_eq!(rep.accuracy, vec![1.0, 1.0, 1.0]);
        let anti: Vec<RankingResult> = oracle(&corpus)
            .into_iter()
            .map(|r| RankingResult::from_order(r.order.into_iter().rev().collect()))
            .collect();
        let rep = evaluate(&corpus, &anti, "anti", &DEFAULT_KS, HitRule::Any).unwrap();
        assert_eq!(rep.accuracy, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn random_rankings_near_one_over_l() {
        let corpus = single(1000, 20, ErrorType::LoopCondition, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rankings: Vec<RankingResult> = (0..1000)
            .map(|_| {
                let mut order: Vec<usize> = (0..20).collect();
                order.shuffle(&mut rng);
                RankingResult::from_order(order)
            })
            .collect();
        let rep = evaluate(&corpus, &rankings, "random", &DEFAULT_KS, HitRule::Any).unwrap();
        assert!((rep.accuracy[0] - 0.05).abs() <= 0.02, "{rep:?}");
        assert!(rep.accuracy.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn missing_ranking_names_program() {
        let corpus = single(3, 5, ErrorType::DataType, 3);
        let err = evaluate(&corpus, &oracle(&corpus)[..2], "m", &DEFAULT_KS, HitRule::Any).unwrap_err();
        assert!(matches!(err, Error::MissingRanking(id) if id == "q2"));
        let mut keyed: HashMap<String, RankingResult> = corpus
            .programs
            .iter()
            .map(|p| p.problem_id.clone())
            .zip(oracle(&corpus))
            .collect();
        keyed.remove("q1");
        let err = evaluate_keyed(&corpus, &keyed, "m", &DEFAULT_KS, HitRule::Any).unwrap_err();
        assert!(matches!(err, Error::MissingRanking(id) if id == "q1"));
    }

    #[test]
    fn pooling_weights_by_program_count() {
        let a = TopKReport::from_hits("m", 10, &[1], vec![10], HitRule::Any);
        let b = TopKReport::from_hits("m", 30, &[1], vec![15], HitRule::Any);
        let pooled = TopKReport::pooled("m", &[a.clone(), b]).unwrap();
        assert_eq!(pooled.accuracy, vec![0.625]);
        let same = TopKReport::pooled("m", &[a.clone(), a.clone(), a]).unwrap();
        assert_eq!(same.accuracy, vec![1.0]);
    }

    #[test]
    fn breakdown_counts_and_ratios() {
        let corpus = single(20, 8, ErrorType::DataType, 4);
        let b = per_type_breakdown(&corpus, &oracle(&corpus)).unwrap();
        assert_eq!(b.rows.len(), 1);
        assert_eq!(b.row(ErrorType::DataType).unwrap().ratio, 1.0);
        assert!(b.row(ErrorType::Computation).is_none());

        let multi = Corpus::new(
            vec![
                Program {
                    error_types: vec![ErrorType::LoopCondition, ErrorType::Computation],
                    ..labeled("m0", 6, &[1, 4], ErrorType::LoopCondition)
                },
                Program {
                    error_types: vec![ErrorType::Computation, ErrorType::Computation],
                    ..labeled("m1", 6, &[0, 2], ErrorType::Computation)
                },
            ],
            CorpusKind::MultiError,
        )
        .unwrap();
        let rankings = vec![RankingResult::from_order(vec![4, 1, 0, 2, 3, 5]), RankingResult::from_order(vec![5, 4, 3, 2, 1, 0])];
        let b = per_type_breakdown(&multi, &rankings).unwrap();
        assert_eq!(b.total, 4);
        assert_eq!(b.rows.iter().map(|r| r.count).sum::<usize>(), 4);
        assert!((b.rows.iter().map(|r| r.proportion).sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(b.row(ErrorType::LoopCondition).unwrap().ratio, 0.0);
        let comp = b.row(ErrorType::Computation).unwrap();
        assert_eq!((comp.count, comp.top1_hits), (3, 1));
    }

    #[test]
    fn table_output_has_columns() {
        let rep = TopKReport::from_hits("model", 4, &DEFAULT_KS, vec![1, 2, 4], HitRule::Any);
        let t = rep.to_table();
        assert!(t.contains("top-1") && t.contains("top-10") && t.contains("100.0"));
    }
}
