//! Spectrum-based fault localization baselines.
//!
//! For each line, `ef`/`ep` count failing/passing tests that execute it and
//! `nf`/`np` those that do not. With `F = ef + nf` and `P = ep + np`:
//!
//! ```text
//! tarantula = (ef/F) / (ef/F + ep/P)
//! ochiai    = ef / sqrt(F * (ef + ep))
//! dstar     = ef^star / (ep + nf)
//! ```
//!
//! Degenerate cases: a line never executed by a failing test scores 0 under
//! every formula; tarantula with no passing tests scores 1; dstar with
//! `ep + nf = 0` scores `+inf`.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ranking::RankingResult;

/// Spectrum counts for one line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub ef: u64,
    pub ep: u64,
    pub nf: u64,
    pub np: u64,
}

impl SpectrumRow {
    pub fn new(ef: u64, ep: u64, nf: u64, np: u64) -> Self {
        SpectrumRow { ef, ep, nf, np }
    }

    pub fn failing(&self) -> u64 {
        self.ef + self.nf
    }

    pub fn passing(&self) -> u64 {
        self.ep + self.np
    }
}

pub fn tarantula(row: SpectrumRow) -> f64 {
    if row.ef == 0 {
        return 0.0;
    }
    if row.passing() == 0 {
        return 1.0;
    }
    // (ef/F) / (ef/F + ep/P) with denominators cleared
    let num = row.ef as f64 * row.passing() as f64;
    num / (num + row.ep as f64 * row.failing() as f64)
}

pub fn ochiai(row: SpectrumRow) -> f64 {
    let denom = (row.failing() as f64 * (row.ef + row.ep) as f64).sqrt();
    if row.ef == 0 || denom == 0.0 {
        return 0.0;
    }
    row.ef as f64 / denom
}

pub const DEFAULT_STAR: f64 = 2.0;

pub fn dstar(row: SpectrumRow, star: f64) -> f64 {
    if row.ef == 0 {
        return 0.0;
    }
    let denom = row.ep + row.nf;
    if denom == 0 {
        return f64::INFINITY;
    }
    let ef = row.ef as f64;
    let num = if star.fract() == 0.0 && star.abs() < i32::MAX as f64 {
        ef.powi(star as i32)
    } else {
        ef.powf(star)
    };
    num / denom as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SbflMethod {
    Tarantula,
    Ochiai,
    #[serde(rename = "dstar")]
    DStar { star: f64 },
}

impl SbflMethod {
    pub fn score(self, row: SpectrumRow) -> f64 {
        match self {
            SbflMethod::Tarantula => tarantula(row),
            SbflMethod::Ochiai => ochiai(row),
            SbflMethod::DStar { star } => dstar(row, star),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SbflMethod::Tarantula => "tarantula",
            SbflMethod::Ochiai => "ochiai",
            SbflMethod::DStar { .. } => "dstar",
        }
    }
}

impl fmt::Display for SbflMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SbflMethod::DStar { star } => write!(f, "dstar({star})"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for SbflMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tarantula" => Ok(SbflMethod::Tarantula),
            "ochiai" => Ok(SbflMethod::Ochiai),
            "dstar" => Ok(SbflMethod::DStar { star: DEFAULT_STAR }),
            other => Err(Error::InvalidArgument(format!("unknown SBFL method {other:?}"))),
        }
    }
}

/// Per-line spectra for one program, with constant test totals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpectraRecord {
    pub problem_id: String,
    pub rows: Vec<SpectrumRow>,
}

impl SpectraRecord {
    /// Validates that every line agrees on the failing/passing totals and
    /// that at least one test fails.
    pub fn new(problem_id: impl Into<String>, rows: Vec<SpectrumRow>) -> Result<Self> {
        let problem_id = problem_id.into();
        let Some(first) = rows.first() else {
            return Err(Error::Spectra(format!("{problem_id}: no lines")));
        };
        let (fail, pass) = (first.failing(), first.passing());
        if fail == 0 {
            return Err(Error::Spectra(format!("{problem_id}: no failing tests")));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.failing() != fail || row.passing() != pass {
                return Err(Error::Spectra(format!(
                    "{problem_id}: line {i} totals (fail {}, pass {}) differ from line 0 (fail {fail}, pass {pass})",
                    row.failing(),
                    row.passing()
                )));
            }
        }
        Ok(SpectraRecord { problem_id, rows })
    }

    pub fn n_fail(&self) -> u64 {
        self.rows[0].failing()
    }

    pub fn n_pass(&self) -> u64 {
        self.rows[0].passing()
    }

    pub fn to_file(&self) -> SpectraFile {
        SpectraFile {
            problem_id: self.problem_id.clone(),
            n_pass: self.n_pass(),
            n_fail: self.n_fail(),
            lines: self.rows.iter().map(|r| [r.ef, r.ep]).collect(),
        }
    }
}

/// On-disk spectra layout: totals plus `[ef, ep]` per line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpectraFile {
    pub problem_id: String,
    pub n_pass: u64,
    pub n_fail: u64,
    pub lines: Vec<[u64; 2]>,
}

impl SpectraFile {
    pub fn into_record(self) -> Result<SpectraRecord> {
        let mut rows = Vec::with_capacity(self.lines.len());
        for (i, &[ef, ep]) in self.lines.iter().enumerate() {
            if ef > self.n_fail || ep > self.n_pass {
                return Err(Error::Spectra(format!(
                    "{}: line {i} has ef={ef}, ep={ep} exceeding totals n_fail={}, n_pass={}",
                    self.problem_id, self.n_fail, self.n_pass
                )));
            }
            rows.push(SpectrumRow::new(ef, ep, self.n_fail - ef, self.n_pass - ep));
        }
        SpectraRecord::new(self.problem_id, rows)
    }
}

pub fn parse_spectra(text: &str) -> Result<SpectraRecord> {
    if text.trim().is_empty() {
        return Err(Error::Spectra("empty spectra file".into()));
    }
    let file: SpectraFile =
        serde_json::from_str(text).map_err(|e| Error::Spectra(format!("malformed: {e}")))?;
    file.into_record()
}

pub fn load_spectra(path: impl AsRef<Path>) -> Result<SpectraRecord> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_spectra(&text)
}

pub fn rank_lines(spectra: &SpectraRecord, method: SbflMethod) -> Result<RankingResult> {
    if spectra.n_fail() == 0 {
        return Err(Error::Spectra("no failing tests".into()));
    }
    let scores = spectra.rows.iter().map(|&r| method.score(r)).collect();
    Ok(RankingResult::from_scores(scores))
}

/// Synthetic spectra for a program of `n_lines` with the given faulty lines.
///
/// Each test executes each line independently with probability `coverage`;
/// every failing test executes at least one faulty line, and passing tests
/// execute faulty lines with probability `coverage / 2`.
pub fn synth_spectra(
    problem_id: &str,
    n_lines: usize,
    faulty: &[usize],
    n_pass: u64,
    n_fail: u64,
    coverage: f64,
    seed: u64,
) -> Result<SpectraRecord> {
    if n_fail == 0 || n_lines == 0 || faulty.iter().any(|&l| l >= n_lines) {
        return Err(Error::InvalidArgument(
            "synthetic spectra need n_fail >= 1, n_lines >= 1 and in-range faults".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ef = vec![0u64; n_lines];
    let mut ep = vec![0u64; n_lines];
    for failing in [true, false] {
        let runs = if failing { n_fail } else { n_pass };
        for _ in 0..runs {
            let forced = if failing && !faulty.is_empty() {
                Some(faulty[rng.gen_range(0..faulty.len())])
            } else {
                None
            };
            for line in 0..n_lines {
                let p = if faulty.contains(&line) && !failing {
                    coverage / 2.0
                } else {
                    coverage
                };
                let hit = forced == Some(line) || rng.gen_bool(p.clamp(0.0, 1.0));
                if hit {
                    if failing {
                        ef[line] += 1;
                    } else {
                        ep[line] += 1;
                    }
                }
            }
        }
    }
    let rows = (0..n_lines)
        .map(|l| SpectrumRow::new(ef[l], ep[l], n_fail - ef[l], n_pass - ep[l]))
        .collect();
    SpectraRecord::new(problem_id, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tarantula_examples() {
        assert_eq!(tarantula(SpectrumRow::new(2, 1, 0, 3)), 0.8);
        assert_eq!(tarantula(SpectrumRow::new(0, 2, 3, 1)), 0.0);
        assert_eq!(tarantula(SpectrumRow::new(3, 0, 0, 4)), 1.0);
        assert_eq!(tarantula(SpectrumRow::new(1, 0, 2, 0)), 1.0);
    }

    #[test]
    fn ochiai_examples() {
        let s = ochiai(SpectrumRow::new(2, 1, 0, 3));
        assert!((s - 2.0 / 6f64.sqrt()).abs() < 1e-15);
        assert!((s - 0.81650).abs() < 1e-5);
        assert_eq!(ochiai(SpectrumRow::new(0, 4, 2, 0)), 0.0);
        assert_eq!(ochiai(SpectrumRow::new(3, 0, 0, 2)), 1.0);
    }

    #[test]
    fn dstar_examples() {
        assert_eq!(dstar(SpectrumRow::new(2, 1, 0, 3), 2.0), 4.0);
        assert_eq!(dstar(SpectrumRow::new(3, 0, 0, 0), 2.0), f64::INFINITY);
        assert_eq!(dstar(SpectrumRow::new(0, 1, 1, 0), 2.0), 0.0);
        assert_eq!(dstar(SpectrumRow::new(2, 1, 0, 3), 3.0), 8.0);
    }

    fn record(rows: &[[u64; 2]], n_fail: u64, n_pass: u64) -> SpectraRecord {
        SpectraFile {
            problem_id: "x".into(),
            n_pass,
            n_fail,
            lines: rows.to_vec(),
        }
        .into_record()
        .unwrap()
    }

    #[test]
    fn ranking_follows_scores() {
        let rec = record(&[[1, 3], [3, 0], [2, 1]], 3, 3);
        let r = rank_lines(&rec, SbflMethod::Ochiai).unwrap();
        assert_eq!(r.order, vec![1, 2, 0]);
    }

    #[test]
    fn ties_rank_lower_index_first() {
        let rec = record(&[[1, 1], [2, 0], [1, 1]], 2, 2);
        let r = rank_lines(&rec, SbflMethod::Tarantula).unwrap();
        assert_eq!(r.order, vec![1, 0, 2]);
    }

    #[test]
    fn infinity_sentinel_ranks_first() {
        let rec = record(&[[1, 1], [2, 0], [2, 1]], 2, 3);
        let r = rank_lines(&rec, SbflMethod::DStar { star: 2.0 }).unwrap();
        assert_eq!(r.order[0], 1);
        assert!(r.scores[1].is_infinite());
    }

    #[test]
    fn spectra_file_validation() {
        let ok = r#"{"problem_id":"p","n_pass":3,"n_fail":2,"lines":[[1,0],[2,3],[0,1],[1,1],[2,2],[0,0],[1,3],[2,0],[0,2],[1,1]]}"#;
        assert_eq!(parse_spectra(ok).unwrap().rows.len(), 10);
        let bad = r#"{"problem_id":"p","n_pass":3,"n_fail":2,"lines":[[1,0],[3,0]]}"#;
        assert!(parse_spectra(bad).is_err());
        assert!(matches!(parse_spectra(""), Err(Error::Spectra(_))));
        let no_fail = r#"{"problem_id":"p","n_pass":3,"n_fail":0,"lines":[[0,1]]}"#;
        assert!(parse_spectra(no_fail).is_err());
    }

    #[test]
    fn inconsistent_rows_rejected() {
        let rows = vec![SpectrumRow::new(1, 1, 1, 1), SpectrumRow::new(1, 1, 2, 1)];
        assert!(SpectraRecord::new("p", rows).is_err());
    }

    #[test]
    fn synthetic_spectra_favor_fault() {
        let rec = synth_spectra("s", 20, &[7], 20, 10, 0.5, 3).unwrap();
        let r = rank_lines(&rec, SbflMethod::Ochiai).unwrap();
        assert!(r.rank_of(7).unwrap() < 5, "{:?}", r.order);
        assert_eq!(rec.rows[7].ef, 10);
    }

    #[test]
    fn method_names_parse() {
        assert_eq!("Ochiai".parse::<SbflMethod>().unwrap(), SbflMethod::Ochiai);
        assert_eq!(
            "dstar".parse::<SbflMethod>().unwrap(),
            SbflMethod::DStar { star: 2.0 }
        );
        assert!("jaccard".parse::<SbflMethod>().is_err());
    }

    fn row_strategy() -> impl Strategy<Value = SpectrumRow> {
        (0u64..20, 0u64..20, 0u64..20, 0u64..20)
            .prop_filter("needs a failing test", |(ef, _, nf, _)| ef + nf > 0)
            .prop_map(|(ef, ep, nf, np)| SpectrumRow::new(ef, ep, nf, np))
    }

    proptest! {
        #[test]
        fn bounded_and_monotone_in_ef(row in row_strategy()) {
            let t = tarantula(row);
            let o = ochiai(row);
            prop_assert!((0.0..=1.0).contains(&t));
            prop_assert!((0.0..=1.0 + 1e-15).contains(&o));
            let more = SpectrumRow { ef: row.ef + 1, ..row };
            prop_assert!(tarantula(more) >= t);
            prop_assert!(ochiai(more) >= o);
            prop_assert!(dstar(more, 2.0) >= dstar(row, 2.0));
        }

        #[test]
        fn uniform_scaling(rows in proptest::collection::vec((0u64..6, 0u64..6), 1..12), scale in 1u64..6) {
            let n_fail = rows.iter().map(|r| r.0).max().unwrap().max(1);
            let n_pass = rows.iter().map(|r| r.1).max().unwrap();
            let lines: Vec<[u64; 2]> = rows.iter().map(|&(a, b)| [a, b]).collect();
            let base = record(&lines, n_fail, n_pass);
            let scaled_lines: Vec<[u64; 2]> = lines.iter().map(|&[a, b]| [a * scale, b * scale]).collect();
            let scaled = record(&scaled_lines, n_fail * scale, n_pass * scale);
            for (r, s) in base.rows.iter().zip(&scaled.rows) {
                prop_assert!((tarantula(*r) - tarantula(*s)).abs() < 1e-12);
                prop_assert!((ochiai(*r) - ochiai(*s)).abs() < 1e-12);
            }
            let d = SbflMethod::DStar { star: 2.0 };
            prop_assert_eq!(rank_lines(&base, d).unwrap().order, rank_lines(&scaled, d).unwrap().order);
            let order = rank_lines(&base, SbflMethod::Ochiai).unwrap().order;
            let mut sorted = order.clone();
            sorted.sort_unstable();
            prop_assert_eq!(sorted, (0..lines.len()).collect::<Vec<_>>());
        }
    }
}
