//! `logicloc`: synthesize, mutate, train, localize and evaluate from the shell.

mod report;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use logicloc::align::{load_external_scores, AlignSource};
use logicloc::corpus::{load_corpus, save_corpus, split_folds, synth_corpus, Corpus, LineRange, Program};
use logicloc::eval::{cross_validate, evaluate, per_type_breakdown, rankings_in_order, HitRule};
use logicloc::forge::{forge_corpus_with_report, ForgeKind, TypeMix};
use logicloc::graph::{build_graph, dump_dot};
use logicloc::model::gradcheck::{gradient_check_example, GradCheckOptions};
use logicloc::model::network::Example;
use logicloc::model::train::localize;
use logicloc::model::{load_params, save_params, train, AlignInput, AlignMode, AlignWeighting, Dims, ModelParams, TrainConfig};
use logicloc::ranking::RankingResult;
use logicloc::sbfl::{load_spectra, rank_lines, synth_spectra, SbflMethod, DEFAULT_STAR};

use report::{deliver, log_table, render, Emit, RunConfig};

#[derive(Parser)]
#[command(name = "logicloc", version, about = "Line-level logic error localization")]
struct Cli {
    /// Report format.
    #[arg(long, value_enum, global = true, default_value = "json")]
    emit: Emit,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a clean synthetic corpus.
    Synth(SynthArgs),
    /// Inject labeled logic errors into a clean corpus.
    Forge(ForgeArgs),
    /// Train a localizer and save its parameters.
    Train(TrainCmd),
    /// Rank the lines of each program with a trained model.
    Localize(LocalizeArgs),
    /// Rank lines with a spectrum-based formula.
    Sbfl(SbflArgs),
    /// Top-k accuracy of a model, of saved rankings, or under cross-validation.
    Eval(EvalArgs),
    /// Print the code/pseudocode token graph of one program as DOT.
    GraphDump(GraphArgs),
    /// Compare analytic and finite-difference gradients on one program.
    Gradcheck(GradcheckArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    min_lines: usize,
    #[arg(long, default_value_t = 30)]
    max_lines: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output JSONL path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ForgeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// `single` or `multi`.
    #[arg(long, default_value = "single")]
    kind: ForgeKind,
    /// Error lines per program for `--kind multi`.
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Preset (`uniform`, `table5-s`, `table5-m`) or `type=share,...`.
    #[arg(long, default_value = "table5-s")]
    mix: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Dimensions as one size for every layer or four comma-separated sizes
/// (d_emb,d_h,d_gat,d_mlp).
fn parse_dims(s: &str) -> Result<Dims, String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    let dims = match parts.as_slice() {
        [d] => Dims::uniform(*d),
        [e, h, g, m] => Dims::new(*e, *h, *g, *m),
        _ => return Err("expected one size or four comma-separated sizes".into()),
    };
    dims.validate().map_err(|e| e.to_string())?;
    Ok(dims)
}

fn parse_k(s: &str) -> Result<usize, String> {
    match s.trim().parse::<usize>() {
        Ok(0) => Err("k must be positive".into()),
        Ok(k) => Ok(k),
        Err(e) => Err(format!("{s:?}: {e}")),
    }
}

#[derive(Args, Clone)]
struct TrainArgs {
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 0.05)]
    lr: f64,
    #[arg(long, default_value_t = 0.0)]
    lr_decay: f64,
    #[arg(long, default_value_t = 1)]
    batch_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.3)]
    lambda_max: f64,
    #[arg(long, default_value_t = 5.0)]
    clip: f64,
    #[arg(long, default_value = "32", value_parser = parse_dims)]
    dims: Dims,
    #[arg(long, default_value_t = 1)]
    min_count: usize,
    /// `inverted`, `literal` or `none`.
    #[arg(long, default_value = "inverted")]
    align_mode: AlignMode,
    /// `raw` or `softmax`.
    #[arg(long, default_value = "raw")]
    align_input: AlignInput,
    /// External per-line alignment scores (JSONL) instead of lexical overlap.
    #[arg(long)]
    scores: Option<PathBuf>,
}

impl TrainArgs {
    fn config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            lr: self.lr,
            seed: self.seed,
            lambda_max: self.lambda_max,
            clip: self.clip,
            dims: self.dims,
            min_count: self.min_count,
            align: AlignWeighting::new(self.align_mode, self.align_input),
            batch_size: self.batch_size,
            lr_decay: self.lr_decay,
        }
    }

    fn run_config(&self, subcommand: &'static str) -> RunConfig {
        let mut run = RunConfig::new(subcommand).dims(&self.dims);
        run.seed = Some(self.seed);
        run.lambda_max = Some(self.lambda_max);
        run.align_mode = Some(self.align_mode.to_string());
        if let Some(p) = &self.scores {
            run = run.input(p);
        }
        run
    }
}

#[derive(Args)]
struct TrainCmd {
    #[arg(long)]
    corpus: PathBuf,
    /// Parameter file to write.
    #[arg(long)]
    out: PathBuf,
    /// Hold out one fold of a k-fold split and report its accuracy per epoch.
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long, default_value_t = 0, requires = "folds")]
    holdout: usize,
    #[arg(long, default_value_t = 0)]
    fold_seed: u64,
    #[command(flatten)]
    train: TrainArgs,
}

#[derive(Args)]
struct LocalizeArgs {
    #[arg(long)]
    params: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    /// Restrict to one problem id.
    #[arg(long)]
    program: Option<String>,
    #[arg(long, default_value_t = 10)]
    top_k: usize,
    #[arg(long)]
    scores: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SbflArgs {
    /// `tarantula`, `ochiai` or `dstar`.
    #[arg(long, default_value = "ochiai")]
    method: SbflMethod,
    /// Exponent for dstar.
    #[arg(long, default_value_t = DEFAULT_STAR)]
    star: f64,
    /// Spectra file to rank.
    #[arg(long, conflicts_with = "corpus", required_unless_present = "corpus")]
    spectra: Option<PathBuf>,
    /// Synthesize spectra for every labeled program of this corpus and rank them.
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    n_pass: u64,
    #[arg(long, default_value_t = 5)]
    n_fail: u64,
    #[arg(long, default_value_t = 0.5)]
    coverage: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Evaluate a trained model.
    #[arg(long, conflicts_with_all = ["rankings", "cv"])]
    params: Option<PathBuf>,
    /// Evaluate saved rankings (output of `localize` or `sbfl --corpus`).
    #[arg(long, conflicts_with = "cv")]
    rankings: Option<PathBuf>,
    /// Run k-fold cross-validation with the training flags below.
    #[arg(long)]
    cv: Option<usize>,
    #[arg(long, default_value_t = 0)]
    fold_seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "1,5,10", value_parser = parse_k)]
    k: Vec<usize>,
    /// Require every labeled line in the top k instead of any one.
    #[arg(long)]
    all_hit: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    train: TrainArgs,
}

#[derive(Args)]
struct GraphArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Problem id (defaults to the first program).
    #[arg(long)]
    program: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    program: Option<String>,
    #[arg(long, default_value = "4", value_parser = parse_dims)]
    dims: Dims,
    #[arg(long, default_value_t = 1e-5)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.3)]
    lambda: f64,
    #[arg(long, default_value_t = 200)]
    coords: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "inverted")]
    align_mode: AlignMode,
    /// Exit with status 1 when the error reaches this bound.
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let emit = cli.emit;
    match cli.command {
        Command::Synth(a) => synth(emit, a),
        Command::Forge(a) => forge(emit, a),
        Command::Train(a) => train_cmd(emit, a),
        Command::Localize(a) => localize_cmd(emit, a),
        Command::Sbfl(a) => sbfl(emit, a),
        Command::Eval(a) => eval(emit, a),
        Command::GraphDump(a) => graph_dump(a),
        Command::Gradcheck(a) => gradcheck(emit, a),
    }
}

fn read_corpus(path: &Path) -> Result<Corpus> {
    load_corpus(path).with_context(|| format!("loading corpus {}", path.display()))
}

fn align_source(scores: Option<&Path>, corpus: &Corpus) -> Result<AlignSource> {
    match scores {
        Some(path) => Ok(AlignSource::External(
            load_external_scores(path, corpus).with_context(|| format!("loading scores {}", path.display()))?,
        )),
        None => Ok(AlignSource::default()),
    }
}

fn find_program<'a>(corpus: &'a Corpus, id: Option<&str>) -> Result<&'a Program> {
    match id {
        Some(id) => corpus
            .programs
            .iter()
            .find(|p| p.problem_id == id)
            .with_context(|| format!("no program {id:?} in corpus")),
        None => corpus.programs.first().context("corpus is empty"),
    }
}

#[derive(Serialize)]
struct SynthSummary {
    programs: usize,
    mean_len: f64,
}

fn synth(emit: Emit, a: SynthArgs) -> Result<ExitCode> {
    let corpus = synth_corpus(a.n, LineRange::new(a.min_lines, a.max_lines)?, a.seed)?;
    let Some(out) = &a.out else {
        print!("{}", corpus.to_jsonl());
        return Ok(ExitCode::SUCCESS);
    };
    save_corpus(&corpus, out)?;
    let mut run = RunConfig::new("synth").output(Some(out));
    run.seed = Some(a.seed);
    let summary = SynthSummary {
        programs: corpus.len(),
        mean_len: corpus.mean_len(),
    };
    let text = render(emit, &run, &summary, || {
        format!("programs {}\nmean lines {:.2}\n", summary.programs, summary.mean_len)
    });
    deliver(&text, None)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct ForgeSummary {
    produced: usize,
    skipped: usize,
    counts: HashMap<String, usize>,
    proportions: HashMap<String, f64>,
}

fn forge(emit: Emit, a: ForgeArgs) -> Result<ExitCode> {
    let clean = read_corpus(&a.input)?;
    let mix: TypeMix = a.mix.parse()?;
    let kind = match a.kind {
        ForgeKind::Multi { .. } => ForgeKind::Multi { k: a.k },
        single => single,
    };
    let (corpus, rep) = forge_corpus_with_report(&clean, kind, &mix, a.seed)?;
    save_corpus(&corpus, &a.out)?;
    let mut run = RunConfig::new("forge").input(&a.input).output(Some(&a.out));
    run.seed = Some(a.seed);
    run.mix = Some(a.mix.clone());
    let proportions = rep.proportions();
    let names = logicloc::corpus::ErrorType::ALL;
    let summary = ForgeSummary {
        produced: rep.produced,
        skipped: rep.skipped,
        counts: names.iter().map(|t| (t.to_string(), rep.counts[t.index()])).collect(),
        proportions: names.iter().map(|t| (t.to_string(), proportions[t.index()])).collect(),
    };
    let text = render(emit, &run, &summary, || {
        let mut out = format!("produced {}\nskipped {}\n{:<24}{:>8}{:>10}{:>10}\n", rep.produced, rep.skipped, "error type", "count", "share", "target");
        for t in names {
            let _ = writeln!(
                out,
                "{:<24}{:>8}{:>10.1}{:>10.1}",
                t.to_string(),
                rep.counts[t.index()],
                proportions[t.index()] * 100.0,
                mix.share(t) * 100.0
            );
        }
        out
    });
    deliver(&text, None)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct TrainSummary<'a> {
    parameters: usize,
    vocabulary: usize,
    log: &'a [logicloc::model::EpochLog],
}

fn train_cmd(emit: Emit, a: TrainCmd) -> Result<ExitCode> {
    let corpus = read_corpus(&a.corpus)?;
    let source = align_source(a.train.scores.as_deref(), &corpus)?;
    let cfg = a.train.config();
    let split = match a.folds {
        Some(k) => Some(split_folds(&corpus, k, a.fold_seed)?),
        None => None,
    };
    if let Some(split) = &split {
        if a.holdout >= split.n_folds() {
            bail!("holdout fold {} out of range for {} folds", a.holdout, split.n_folds());
        }
    }
    let outcome = train(&corpus, split.as_ref().map(|s| (s, a.holdout)), &cfg, &source)?;
    save_params(&outcome.params, &a.out)?;
    let run = a.train.run_config("train").input(&a.corpus).output(Some(&a.out));
    let summary = TrainSummary {
        parameters: outcome.params.len(),
        vocabulary: outcome.params.vocab.len(),
        log: &outcome.log,
    };
    let text = render(emit, &run, &summary, || log_table(&outcome.log));
    deliver(&text, None)?;
    Ok(ExitCode::SUCCESS)
}

/// One ranked program, as written by `localize` and `sbfl --corpus` and read
/// back by `eval --rankings`.
#[derive(Serialize, Deserialize)]
struct RankedProgram {
    problem_id: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    probs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    top_k: Vec<usize>,
    ranking: RankingResult,
}

fn ranked_table(rows: &[RankedProgram]) -> String {
    let mut out = String::new();
    for r in rows {
        let top: Vec<String> = r.ranking.top(10).iter().map(usize::to_string).collect();
        let _ = writeln!(out, "{:<16} {}", r.problem_id, top.join(" "));
    }
    out
}

fn localize_cmd(emit: Emit, a: LocalizeArgs) -> Result<ExitCode> {
    let params = load_params(&a.params)?;
    let corpus = read_corpus(&a.corpus)?;
    let source = align_source(a.scores.as_deref(), &corpus)?;
    let programs: Vec<&Program> = match &a.program {
        Some(id) => vec![find_program(&corpus, Some(id))?],
        None => corpus.programs.iter().collect(),
    };
    let mut rows = Vec::with_capacity(programs.len());
    for p in programs {
        let pred = localize(&params, p, &source)?;
        let ranking = pred.ranking();
        rows.push(RankedProgram {
            problem_id: p.problem_id.clone(),
            top_k: ranking.top(a.top_k).to_vec(),
            probs: pred.probs,
            ranking,
        });
    }
    let mut run = RunConfig::new("localize").input(&a.params).input(&a.corpus).output(a.out.as_deref()).dims(&params.dims);
    run.align_mode = Some(params.align.mode.to_string());
    run.ks = Some(vec![a.top_k]);
    if let Some(p) = &a.scores {
        run = run.input(p);
    }
    let text = render(emit, &run, &rows, || ranked_table(&rows));
    deliver(&text, a.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn sbfl(emit: Emit, a: SbflArgs) -> Result<ExitCode> {
    let method = match a.method {
        SbflMethod::DStar { .. } => SbflMethod::DStar { star: a.star },
        m => m,
    };
    let mut run = RunConfig::new("sbfl").output(a.out.as_deref());
    let rows = if let Some(path) = &a.spectra {
        run = run.input(path);
        let spectra = load_spectra(path)?;
        let ranking = rank_lines(&spectra, method)?;
        vec![RankedProgram {
            problem_id: spectra.problem_id,
            probs: Vec::new(),
            top_k: Vec::new(),
            ranking,
        }]
    } else {
        let path = a.corpus.as_ref().expect("clap requires --spectra or --corpus");
        run = run.input(path);
        run.seed = Some(a.seed);
        let corpus = read_corpus(path)?;
        let mut rows = Vec::with_capacity(corpus.len());
        for (i, p) in corpus.programs.iter().enumerate() {
            let spectra = synth_spectra(&p.problem_id, p.len(), &p.error_lines, a.n_pass, a.n_fail, a.coverage, a.seed ^ i as u64)?;
            rows.push(RankedProgram {
                problem_id: p.problem_id.clone(),
                probs: Vec::new(),
                top_k: Vec::new(),
                ranking: rank_lines(&spectra, method)?,
            });
        }
        rows
    };
    #[derive(Serialize)]
    struct SbflResult<'a> {
        method: String,
        rankings: &'a [RankedProgram],
    }
    let result = SbflResult {
        method: method.to_string(),
        rankings: &rows,
    };
    let text = render(emit, &run, &result, || ranked_table(&rows));
    deliver(&text, a.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

/// Reads rankings from a `localize` or `sbfl` JSON report.
fn read_rankings(path: &Path) -> Result<HashMap<String, RankingResult>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let result = value.get("result").context("report has no \"result\" field")?;
    let list = result.get("rankings").unwrap_or(result);
    let rows: Vec<RankedProgram> = serde_json::from_value(list.clone()).context("malformed rankings")?;
    Ok(rows.into_iter().map(|r| (r.problem_id, r.ranking)).collect())
}

fn eval(emit: Emit, a: EvalArgs) -> Result<ExitCode> {
    let corpus = read_corpus(&a.corpus)?;
    let rule = if a.all_hit { HitRule::All } else { HitRule::Any };
    let source = align_source(a.train.scores.as_deref(), &corpus)?;
    let mut run = RunConfig::new("eval").input(&a.corpus).output(a.out.as_deref());
    run.ks = Some(a.k.clone());

    let text = if let Some(k) = a.cv {
        if a.all_hit {
            bail!("--all-hit is not available with --cv");
        }
        let folds = split_folds(&corpus, k, a.fold_seed)?;
        let cfg = a.train.config();
        let report = cross_validate(&corpus, &folds, &cfg, &source, &a.k)?;
        run = RunConfig {
            inputs: run.inputs,
            output: run.output,
            ks: run.ks,
            ..a.train.run_config("eval")
        };
        render(emit, &run, &report, || {
            let mut out = report.pooled.to_table();
            out.push('\n');
            out.push_str(&report.breakdown.to_table());
            out
        })
    } else {
        let (method, rankings) = if let Some(path) = &a.params {
            run = run.input(path);
            let params = load_params(path)?;
            run = run.dims(&params.dims);
            run.align_mode = Some(params.align.mode.to_string());
            let rankings = corpus
                .programs
                .iter()
                .map(|p| localize(&params, p, &source).map(|pred| pred.ranking()))
                .collect::<logicloc::Result<Vec<_>>>()?;
            ("model", rankings)
        } else if let Some(path) = &a.rankings {
            run = run.input(path);
            ("rankings", rankings_in_order(&corpus, &read_rankings(path)?)?)
        } else {
            bail!("one of --params, --rankings or --cv is required");
        };
        let report = evaluate(&corpus, &rankings, method, &a.k, rule)?;
        let breakdown = per_type_breakdown(&corpus, &rankings)?;
        #[derive(Serialize)]
        struct EvalResult<'a> {
            report: &'a logicloc::eval::TopKReport,
            breakdown: &'a logicloc::eval::TypeBreakdown,
        }
        let result = EvalResult {
            report: &report,
            breakdown: &breakdown,
        };
        render(emit, &run, &result, || {
            let mut out = report.to_table();
            out.push('\n');
            out.push_str(&breakdown.to_table());
            out
        })
    };
    deliver(&text, a.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn graph_dump(a: GraphArgs) -> Result<ExitCode> {
    let corpus = read_corpus(&a.corpus)?;
    let program = find_program(&corpus, a.program.as_deref())?;
    deliver(&dump_dot(&build_graph(program)), a.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn gradcheck(emit: Emit, a: GradcheckArgs) -> Result<ExitCode> {
    let corpus = read_corpus(&a.corpus)?;
    let program = find_program(&corpus, a.program.as_deref())?;
    if program.is_clean() {
        bail!("program {} has no labeled error line", program.problem_id);
    }
    if !(1e-6..=1e-4).contains(&a.epsilon) {
        bail!("epsilon must lie in [1e-6, 1e-4], got {}", a.epsilon);
    }
    let vocab = logicloc::lexer::build_vocab(&corpus, 1);
    let params = ModelParams::init(a.dims, vocab, AlignWeighting::new(a.align_mode, AlignInput::Raw), a.seed);
    let ex = Example::from_source(program, &params.vocab, &AlignSource::default())?;
    let opts = GradCheckOptions {
        epsilon: a.epsilon,
        lambda: a.lambda,
        coords: a.coords,
        seed: a.seed,
    };
    let report = gradient_check_example(&params, &ex, &opts)?;
    let mut run = RunConfig::new("gradcheck").input(&a.corpus).dims(&a.dims);
    run.seed = Some(a.seed);
    run.lambda_max = Some(a.lambda);
    run.align_mode = Some(a.align_mode.to_string());
    let text = render(emit, &run, &report, || {
        format!(
            "program {}\ncoordinates {}\nmax relative error {:.3e}\nworst index {} (analytic {:.6e}, numeric {:.6e})\n",
            program.problem_id, report.coords_checked, report.max_rel_error, report.worst.0, report.worst.1, report.worst.2
        )
    });
    deliver(&text, None)?;
    if report.max_rel_error >= a.tolerance {
        eprintln!("error: max relative error {:.3e} exceeds {:.1e}", report.max_rel_error, a.tolerance);
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

#[cfg(test)]
mod tests {
    use super::*;
    use logicloc::eval::DEFAULT_KS;

    #[test]
    fn dims_parse() {
        assert_eq!(parse_dims("8").unwrap(), Dims::uniform(8));
        assert_eq!(parse_dims("4,5,6,7").unwrap(), Dims::new(4, 5, 6, 7));
        assert!(parse_dims("4,5").is_err());
        assert!(parse_dims("0").is_err());
    }

    #[test]
    fn ks_parse() {
        let cli = Cli::try_parse_from(["logicloc", "eval", "--corpus", "c.jsonl", "--cv", "5"]).unwrap();
        let Command::Eval(args) = cli.command else { panic!("expected eval") };
        assert_eq!(args.k, DEFAULT_KS.to_vec());
        assert!(Cli::try_parse_from(["logicloc", "eval", "--corpus", "c", "--k", "0,5"]).is_err());
    }

    #[test]
    fn cli_is_well_formed() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
