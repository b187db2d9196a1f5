//! Labeled logic-error corpora from clean programs by typed, line-preserving
//! token mutations of the code stream.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, CorpusKind, ErrorType, Program};
use crate::error::{Error, Result};
use crate::lexer::{code_spans, tokenize_code_line, Token, TokenKind, STRING_LITERAL};

/// Replace the tokens in `tokens` (indices into the line's token list) with `text`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edit {
    pub tokens: Range<usize>,
    pub text: String,
}

impl Edit {
    fn replace(idx: usize, text: impl Into<String>) -> Self {
        Edit {
            tokens: idx..idx + 1,
            text: text.into(),
        }
    }

    fn delete(tokens: Range<usize>) -> Self {
        Edit {
            tokens,
            text: String::new(),
        }
    }
}

type Planner = fn(&[Token]) -> Option<Vec<Edit>>;

pub struct MutationRule {
    pub name: &'static str,
    pub error_type: ErrorType,
    plan: Planner,
}

impl fmt::Debug for MutationRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MutationRule")
            .field("name", &self.name)
            .field("error_type", &self.error_type)
            .finish()
    }
}

impl MutationRule {
    /// The edits this rule would make, if it matches and changes the tokens.
    pub fn plan(&self, tokens: &[Token]) -> Option<Vec<Edit>> {
        let edits = (self.plan)(tokens)?;
        let changed = edited_texts(tokens, &edits)
            .iter()
            .map(String::as_str)
            .ne(tokens.iter().map(|t| t.text.as_str()));
        changed.then_some(edits)
    }

    /// Rewrites a source line, keeping untouched bytes verbatim.
    pub fn rewrite(&self, line: &str) -> Option<String> {
        let tokens = tokenize_code_line(line, 0);
        let edits = self.plan(&tokens)?;
        let out = apply_edits(line, &edits);
        let retoken: Vec<String> = tokenize_code_line(&out, 0).into_iter().map(|t| t.text).collect();
        let original: Vec<String> = tokens.into_iter().map(|t| t.text).collect();
        (out != line && !out.contains('\n') && retoken != original).then_some(out)
    }
}

fn edited_texts(tokens: &[Token], edits: &[Edit]) -> Vec<String> {
    let mut sorted: Vec<&Edit> = edits.iter().collect();
    sorted.sort_by_key(|e| e.tokens.start);
    let mut out = Vec::with_capacity(tokens.len());
    let mut i = 0;
    for e in sorted {
        out.extend(tokens[i..e.tokens.start].iter().map(|t| t.text.clone()));
        out.extend(code_spans(&e.text).into_iter().map(|s| s.text));
        i = e.tokens.end;
    }
    out.extend(tokens[i..].iter().map(|t| t.text.clone()));
    out
}

fn apply_edits(line: &str, edits: &[Edit]) -> String {
    let spans = code_spans(line);
    let mut sorted: Vec<&Edit> = edits.iter().collect();
    sorted.sort_by_key(|e| std::cmp::Reverse(e.tokens.start));
    let mut out = line.to_string();
    for e in sorted {
        let mut start = spans[e.tokens.start].span.start;
        let mut end = spans[e.tokens.end - 1].span.end;
        if e.text.is_empty() {
            let bytes = out.as_bytes();
            let ws_before = start > 0 && bytes[start - 1].is_ascii_whitespace();
            let ws_after = end < bytes.len() && bytes[end].is_ascii_whitespace();
            if ws_after && (ws_before || start == 0) {
                while end < bytes.len() && bytes[end].is_ascii_whitespace() {
                    end += 1;
                }
            } else if !ws_after && ws_before && end < bytes.len() && matches!(bytes[end], b';' | b',' | b')' | b']') {
                while start > 0 && bytes[start - 1].is_ascii_whitespace() {
                    start -= 1;
                }
            }
        }
        out.replace_range(start..end, &e.text);
    }
    out
}

fn is(tok: Option<&Token>, text: &str) -> bool {
    tok.is_some_and(|t| t.text == text)
}

/// Index of the bracket closing the one at `open`.
fn matching(tokens: &[Token], open: usize) -> Option<usize> {
    let (o, c) = match tokens[open].text.as_str() {
        "(" => ("(", ")"),
        "{" => ("{", "}"),
        "[" => ("[", "]"),
        _ => return None,
    };
    let mut depth = 0usize;
    for (i, t) in tokens.iter().enumerate().skip(open) {
        if t.text == o {
            depth += 1;
        } else if t.text == c {
            depth -= 1;
            if depth == 0 {
                return Some(i);
            }
        }
    }
    None
}

/// The first `for`/`if`/`while` on the line with its parenthesized header.
fn control(tokens: &[Token]) -> Option<(&str, usize, usize)> {
    let kw = tokens
        .iter()
        .position(|t| t.kind == TokenKind::Keyword && matches!(t.text.as_str(), "for" | "if" | "while"))?;
    if !is(tokens.get(kw + 1), "(") {
        return None;
    }
    let close = matching(tokens, kw + 1)?;
    Some((tokens[kw].text.as_str(), kw + 1, close))
}

/// Token range of the condition of a loop (`for`/`while`) or branch (`if`).
fn condition(tokens: &[Token], want_loop: bool) -> Option<Range<usize>> {
    let (kw, open, close) = control(tokens)?;
    match kw {
        "if" if !want_loop => Some(open + 1..close),
        "while" if want_loop => Some(open + 1..close),
        "for" if want_loop => {
            let mut depth = 0;
            let mut semis = Vec::new();
            for i in open + 1..close {
                match tokens[i].text.as_str() {
                    "(" => depth += 1,
                    ")" => depth -= 1,
                    ";" if depth == 0 => semis.push(i),
                    _ => {}
                }
            }
            (semis.len() == 2).then(|| semis[0] + 1..semis[1])
        }
        _ => None,
    }
}

fn is_comparison(text: &str) -> bool {
    matches!(text, "<" | "<=" | ">" | ">=")
}

fn first_in(tokens: &[Token], range: Range<usize>, pred: impl Fn(&str) -> bool) -> Option<usize> {
    range.into_iter().find(|&i| tokens[i].kind == TokenKind::Operator && pred(&tokens[i].text))
}

/// Whether `idx` is a single-token operand within `region`, given the
/// neighbour on its far side from the operator.
fn single_operand(tokens: &[Token], idx: usize, far: Option<usize>, region: &Range<usize>) -> bool {
    let separated = match far {
        Some(j) if region.contains(&j) => matches!(tokens[j].text.as_str(), "&&" | "||" | "(" | ")" | ","),
        _ => true,
    };
    region.contains(&idx)
        && matches!(tokens[idx].kind, TokenKind::Identifier | TokenKind::Number)
        && tokens[idx].text != STRING_LITERAL
        && separated
}

fn loop_flip_strict(t: &[Token]) -> Option<Vec<Edit>> {
    let c = first_in(t, condition(t, true)?, is_comparison)?;
    let flipped = match t[c].text.as_str() {
        "<" => "<=",
        "<=" => "<",
        ">" => ">=",
        _ => ">",
    };
    Some(vec![Edit::replace(c, flipped)])
}

fn loop_shift_bound(t: &[Token]) -> Option<Vec<Edit>> {
    let region = condition(t, true)?;
    let c = first_in(t, region.clone(), is_comparison)?;
    let b = c + 1;
    if !single_operand(t, b, Some(b + 1), &region) {
        return None;
    }
    let up = matches!(t[c].text.as_str(), "<" | "<=");
    let text = match t[b].kind {
        TokenKind::Number => {
            let n: i64 = t[b].text.parse().ok()?;
            (if up { n + 1 } else { n - 1 }).to_string()
        }
        _ => format!("{} {} 1", t[b].text, if up { "+" } else { "-" }),
    };
    Some(vec![Edit::replace(b, text)])
}

fn loop_var_into_bound(t: &[Token]) -> Option<Vec<Edit>> {
    let region = condition(t, true)?;
    let c = first_in(t, region.clone(), is_comparison)?;
    let (var, bound) = (c.checked_sub(1)?, c + 1);
    if t[var].kind != TokenKind::Identifier
        || !single_operand(t, var, var.checked_sub(1), &region)
        || !single_operand(t, bound, Some(bound + 1), &region)
    {
        return None;
    }
    Some(vec![Edit::replace(bound, t[var].text.clone())])
}

fn swap_logical(t: &[Token], want_loop: bool) -> Option<Vec<Edit>> {
    let i = first_in(t, condition(t, want_loop)?, |s| matches!(s, "&&" | "||"))?;
    Some(vec![Edit::replace(i, if t[i].text == "&&" { "||" } else { "&&" })])
}

fn loop_swap_logical(t: &[Token]) -> Option<Vec<Edit>> {
    swap_logical(t, true)
}

fn branch_flip_direction(t: &[Token]) -> Option<Vec<Edit>> {
    let c = first_in(t, condition(t, false)?, is_comparison)?;
    let flipped = match t[c].text.as_str() {
        "<" => ">",
        ">" => "<",
        "<=" => ">=",
        _ => "<=",
    };
    Some(vec![Edit::replace(c, flipped)])
}

fn branch_eq_neq(t: &[Token]) -> Option<Vec<Edit>> {
    let c = first_in(t, condition(t, false)?, |s| matches!(s, "==" | "!="))?;
    Some(vec![Edit::replace(c, if t[c].text == "==" { "!=" } else { "==" })])
}

fn branch_swap_logical(t: &[Token]) -> Option<Vec<Edit>> {
    swap_logical(t, false)
}

fn branch_negate(t: &[Token]) -> Option<Vec<Edit>> {
    let region = condition(t, false)?;
    if region.is_empty() {
        return None;
    }
    Some(vec![Edit::replace(region.start - 1, "(!("), Edit::replace(region.end, "))")])
}

fn compound_to_assign(t: &[Token]) -> Option<Vec<Edit>> {
    let i = t
        .iter()
        .position(|x| x.kind == TokenKind::Operator && matches!(x.text.as_str(), "+=" | "-=" | "*=" | "/=" | "%="))?;
    Some(vec![Edit::replace(i, "=")])
}

fn drop_block_statement(t: &[Token]) -> Option<Vec<Edit>> {
    let open = t.iter().position(|x| x.text == "{")?;
    let close = matching(t, open)?;
    let mut depth = 0;
    let mut semis = Vec::new();
    for i in open + 1..close {
        match t[i].text.as_str() {
            "(" | "{" => depth += 1,
            ")" | "}" => depth -= 1,
            ";" if depth == 0 => semis.push(i),
            _ => {}
        }
    }
    (semis.len() >= 2).then(|| vec![Edit::delete(open + 1..semis[0] + 1)])
}

const TYPE_WORDS: &[&str] = &["int", "long", "short", "unsigned", "signed", "double", "float", "char", "bool", "const"];

/// Index of the first token after a leading type specifier, if the line
/// starts with one.
fn declaration(t: &[Token]) -> Option<usize> {
    let n = t
        .iter()
        .take_while(|x| x.kind == TokenKind::Keyword && TYPE_WORDS.contains(&x.text.as_str()))
        .count();
    (n > 0 && t.get(n).is_some_and(|x| x.kind == TokenKind::Identifier) && !is(t.get(n + 1), "(")).then_some(n)
}

fn init_value(t: &[Token], i: usize) -> bool {
    t.get(i)
        .is_some_and(|x| matches!(x.kind, TokenKind::Identifier | TokenKind::Number) && x.text != STRING_LITERAL)
}

fn chain_init(t: &[Token]) -> Option<Vec<Edit>> {
    let start = declaration(t)?;
    // first declarator of the form `name = value ,`
    let mut i = start;
    loop {
        if t.get(i)?.kind == TokenKind::Identifier && is(t.get(i + 1), "=") && init_value(t, i + 2) && is(t.get(i + 3), ",") {
            break;
        }
        i = (i..t.len()).find(|&j| t[j].text == ",")? + 1;
    }
    let value = i + 2;
    let mut names = Vec::new();
    let mut j = value + 1;
    while is(t.get(j), ",")
        && t.get(j + 1).is_some_and(|x| x.kind == TokenKind::Identifier)
        && (is(t.get(j + 2), ",") || is(t.get(j + 2), ";") || j + 2 == t.len())
    {
        names.push(t[j + 1].text.clone());
        j += 2;
    }
    if names.is_empty() {
        return None;
    }
    let mut text = names.join(" = ");
    text.push_str(" = ");
    text.push_str(&t[value].text);
    Some(vec![Edit {
        tokens: value..j,
        text,
    }])
}

fn drop_initializer(t: &[Token]) -> Option<Vec<Edit>> {
    let start = declaration(t)?;
    let eq = (start..t.len()).find(|&i| {
        t[i].text == "=" && init_value(t, i + 1) && (is(t.get(i + 2), ",") || is(t.get(i + 2), ";") || i + 2 == t.len())
    })?;
    Some(vec![Edit::delete(eq..eq + 2)])
}

fn int_long_long_swap(t: &[Token]) -> Option<Vec<Edit>> {
    let start = declaration(t)?;
    match (t[0].text.as_str(), start) {
        ("int", 1) => Some(vec![Edit::replace(0, "long long")]),
        ("long", 2) if t[1].text == "long" => Some(vec![Edit {
            tokens: 0..2,
            text: "int".into(),
        }]),
        _ => None,
    }
}

fn real_to_int(t: &[Token]) -> Option<Vec<Edit>> {
    let start = declaration(t)?;
    (start == 1 && matches!(t[0].text.as_str(), "double" | "float")).then(|| vec![Edit::replace(0, "int")])
}

fn is_control_line(t: &[Token]) -> bool {
    t.iter()
        .any(|x| x.kind == TokenKind::Keyword && matches!(x.text.as_str(), "for" | "if" | "while" | "else"))
}

fn drop_parens(t: &[Token]) -> Option<Vec<Edit>> {
    if is_control_line(t) {
        return None;
    }
    for open in 0..t.len() {
        if t[open].text != "("
            || open
                .checked_sub(1)
                .is_some_and(|p| matches!(t[p].kind, TokenKind::Identifier | TokenKind::Keyword))
        {
            continue;
        }
        let close = matching(t, open)?;
        if (open + 1..close).any(|i| t[i].kind == TokenKind::Operator) {
            return Some(vec![Edit::delete(open..open + 1), Edit::delete(close..close + 1)]);
        }
    }
    None
}

fn binary_at(t: &[Token], i: usize) -> bool {
    i > 0 && (matches!(t[i - 1].kind, TokenKind::Identifier | TokenKind::Number) || matches!(t[i - 1].text.as_str(), ")" | "]"))
}

fn swap_binary(t: &[Token], a: &str, b: &str) -> Option<Vec<Edit>> {
    if is_control_line(t) {
        return None;
    }
    let i = (0..t.len()).find(|&i| t[i].kind == TokenKind::Operator && (t[i].text == a || t[i].text == b) && binary_at(t, i))?;
    Some(vec![Edit::replace(i, if t[i].text == a { b } else { a })])
}

fn swap_add_sub(t: &[Token]) -> Option<Vec<Edit>> {
    swap_binary(t, "+", "-")
}

fn swap_mul_div(t: &[Token]) -> Option<Vec<Edit>> {
    swap_binary(t, "*", "/")
}

macro_rules! rule {
    ($name:literal, $ty:ident, $plan:ident) => {
        MutationRule {
            name: $name,
            error_type: ErrorType::$ty,
            plan: $plan,
        }
    };
}

static RULES: [MutationRule; 17] = [
    rule!("loop-flip-strict", LoopCondition, loop_flip_strict),
    rule!("loop-shift-bound", LoopCondition, loop_shift_bound),
    rule!("loop-var-into-bound", LoopCondition, loop_var_into_bound),
    rule!("loop-swap-logical", LoopCondition, loop_swap_logical),
    rule!("branch-flip-direction", ConditionBranch, branch_flip_direction),
    rule!("branch-eq-neq", ConditionBranch, branch_eq_neq),
    rule!("branch-swap-logical", ConditionBranch, branch_swap_logical),
    rule!("branch-negate", ConditionBranch, branch_negate),
    rule!("compound-to-assign", StatementIntegrity, compound_to_assign),
    rule!("drop-block-statement", StatementIntegrity, drop_block_statement),
    rule!("chain-init", VariableInitialization, chain_init),
    rule!("drop-initializer", VariableInitialization, drop_initializer),
    rule!("int-long-long-swap", DataType, int_long_long_swap),
    rule!("real-to-int", DataType, real_to_int),
    rule!("drop-parens", Computation, drop_parens),
    rule!("swap-add-sub", Computation, swap_add_sub),
    rule!("swap-mul-div", Computation, swap_mul_div),
];

/// Every rule, in a fixed order.
pub fn rules() -> &'static [MutationRule] {
    &RULES
}

pub fn rule_by_name(name: &str) -> Option<&'static MutationRule> {
    rules().iter().find(|r| r.name == name)
}

/// Rules whose matcher accepts the line, in rule order.
pub fn applicable_rules(line_tokens: &[Token]) -> Vec<&'static MutationRule> {
    rules().iter().filter(|r| r.plan(line_tokens).is_some()).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AppliedMutation {
    pub line: usize,
    pub rule: String,
    pub error_type: ErrorType,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutationResult {
    pub program: Program,
    pub applied: Vec<AppliedMutation>,
}

/// A mutatable site: line index, rule and rewritten line.
struct Site {
    line: usize,
    rule: &'static MutationRule,
    text: String,
}

fn sites(program: &Program) -> Vec<Site> {
    let mut out = Vec::new();
    for (line, src) in program.source_lines.iter().enumerate() {
        for rule in rules() {
            if let Some(text) = rule.rewrite(src) {
                out.push(Site { line, rule, text });
            }
        }
    }
    out
}

fn require_clean(program: &Program) -> Result<()> {
    if !program.is_clean() {
        return Err(Error::validation(&program.problem_id, "only clean programs can be mutated"));
    }
    Ok(())
}

fn assemble(program: &Program, mut chosen: Vec<&Site>) -> MutationResult {
    chosen.sort_by_key(|s| s.line);
    let mut mutated = program.clone();
    let mut applied = Vec::with_capacity(chosen.len());
    for site in chosen {
        mutated.source_lines[site.line] = site.text.clone();
        mutated.error_lines.push(site.line);
        mutated.error_types.push(site.rule.error_type);
        applied.push(AppliedMutation {
            line: site.line,
            rule: site.rule.name.to_string(),
            error_type: site.rule.error_type,
        });
    }
    MutationResult {
        program: mutated,
        applied,
    }
}

/// Mutates one line, drawing uniformly over all applicable (line, rule) pairs.
pub fn mutate_single(program: &Program, seed: u64) -> Result<MutationResult> {
    require_clean(program)?;
    let all = sites(program);
    if all.is_empty() {
        return Err(Error::Unmutatable {
            problem_id: program.problem_id.clone(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pick = &all[rng.gen_range(0..all.len())];
    Ok(assemble(program, vec![pick]))
}

/// Mutates `k` distinct lines, each with a rule drawn uniformly among those
/// applicable to it.
pub fn mutate_multi(program: &Program, k: usize, seed: u64) -> Result<MutationResult> {
    require_clean(program)?;
    if k < 2 {
        return Err(Error::InvalidArgument(format!("multi-line mutation needs k >= 2, got {k}")));
    }
    let all = sites(program);
    let mut lines: Vec<usize> = all.iter().map(|s| s.line).collect();
    lines.dedup();
    if lines.is_empty() {
        return Err(Error::Unmutatable {
            problem_id: program.problem_id.clone(),
        });
    }
    if lines.len() < k {
        return Err(Error::NotEnoughMutatable {
            problem_id: program.problem_id.clone(),
            requested: k,
            available: lines.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<usize> = sample(&mut rng, lines.len(), k).into_iter().map(|i| lines[i]).collect();
    picked.sort_unstable();
    let chosen = picked
        .into_iter()
        .map(|line| {
            let options: Vec<&Site> = all.iter().filter(|s| s.line == line).collect();
            options[rng.gen_range(0..options.len())]
        })
        .collect();
    Ok(assemble(program, chosen))
}

/// Requested share of each error type, indexed by [`ErrorType::index`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypeMix(pub [f64; 6]);

impl TypeMix {
    /// Checks that shares are non-negative and sum to 1 within 1e-6.
    pub fn new(shares: [f64; 6]) -> Result<Self> {
        if shares.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::InvalidArgument(format!("mix shares must be non-negative: {shares:?}")));
        }
        let total: f64 = shares.iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidArgument(format!("mix shares sum to {total}, expected 1")));
        }
        Ok(TypeMix(shares))
    }

    fn normalized(raw: [f64; 6]) -> Self {
        let total: f64 = raw.iter().sum();
        TypeMix(raw.map(|v| v / total))
    }

    pub fn uniform() -> Self {
        TypeMix([1.0 / 6.0; 6])
    }

    pub fn only(ty: ErrorType) -> Self {
        let mut shares = [0.0; 6];
        shares[ty.index()] = 1.0;
        TypeMix(shares)
    }

    /// Single-error proportions of the reference corpus.
    pub fn table5_single() -> Self {
        Self::normalized([21.8, 23.4, 31.3, 12.3, 2.4, 8.8])
    }

    /// Multi-error proportions of the reference corpus, rescaled to sum to 1.
    pub fn table5_multi() -> Self {
        Self::normalized([37.3, 35.2, 16.9, 8.5, 9.2, 11.7])
    }

    pub fn share(&self, ty: ErrorType) -> f64 {
        self.0[ty.index()]
    }
}

impl FromStr for TypeMix {
    type Err = Error;

    /// A preset name (`uniform`, `table5-s`, `table5-m`) or a comma list of
    /// `type=share` pairs.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => return Ok(TypeMix::uniform()),
            "table5-s" => return Ok(TypeMix::table5_single()),
            "table5-m" => return Ok(TypeMix::table5_multi()),
            _ => {}
        }
        let mut shares = [0.0; 6];
        for part in s.split(',') {
            let (name, value) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("unknown mix preset {s:?}")))?;
            let ty: ErrorType = name.trim().parse()?;
            shares[ty.index()] = value
                .trim()
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad share {value:?}")))?;
        }
        TypeMix::new(shares)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ForgeKind {
    Single,
    Multi { k: usize },
}

impl FromStr for ForgeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(ForgeKind::Single),
            "multi" => Ok(ForgeKind::Multi { k: 2 }),
            other => Err(Error::InvalidArgument(format!("unknown forge kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForgeReport {
    pub produced: usize,
    pub skipped: usize,
    /// Labeled lines per error type, indexed by [`ErrorType::index`].
    pub counts: [usize; 6],
}

impl ForgeReport {
    pub fn proportions(&self) -> [f64; 6] {
        let total: usize = self.counts.iter().sum();
        self.counts.map(|c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
    }
}

/// 64-bit FNV-1a; stable across platforms and releases.
fn fnv1a(text: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Picks the eligible type furthest below its target share.
fn most_lacking(mix: &TypeMix, counts: &[usize; 6], eligible: impl Fn(ErrorType) -> bool) -> Option<ErrorType> {
    let next_total = counts.iter().sum::<usize>() as f64 + 1.0;
    let mut best: Option<(f64, ErrorType)> = None;
    for ty in ErrorType::ALL {
        if mix.share(ty) <= 0.0 || !eligible(ty) {
            continue;
        }
        let deficit = mix.share(ty) * next_total - counts[ty.index()] as f64;
        if best.is_none_or(|(d, _)| deficit > d) {
            best = Some((deficit, ty));
        }
    }
    best.map(|(_, ty)| ty)
}

fn forge_one(program: &Program, kind: ForgeKind, mix: &TypeMix, counts: &mut [usize; 6], seed: u64) -> Option<MutationResult> {
    let all = sites(program);
    let k = match kind {
        ForgeKind::Single => 1,
        ForgeKind::Multi { k } => k,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(&program.problem_id));
    let mut local = *counts;
    let mut chosen: Vec<&Site> = Vec::with_capacity(k);
    for _ in 0..k {
        let free = |s: &&Site| !chosen.iter().any(|c| c.line == s.line);
        let ty = most_lacking(mix, &local, |ty| all.iter().filter(free).any(|s| s.rule.error_type == ty))?;
        let lines: Vec<usize> = {
            let mut v: Vec<usize> = all.iter().filter(free).filter(|s| s.rule.error_type == ty).map(|s| s.line).collect();
            v.dedup();
            v
        };
        let line = lines[rng.gen_range(0..lines.len())];
        let options: Vec<&Site> = all.iter().filter(|s| s.line == line && s.rule.error_type == ty).collect();
        chosen.push(options[rng.gen_range(0..options.len())]);
        local[ty.index()] += 1;
    }
    *counts = local;
    Some(assemble(program, chosen))
}

/// Mutates every clean program, steering error types toward `mix`.
/// Programs with no eligible site are skipped and counted.
pub fn forge_corpus_with_report(clean: &Corpus, kind: ForgeKind, mix: &TypeMix, seed: u64) -> Result<(Corpus, ForgeReport)> {
    if clean.is_empty() {
        return Err(Error::InvalidArgument("clean corpus is empty".into()));
    }
    if let ForgeKind::Multi { k } = kind {
        if k < 2 {
            return Err(Error::InvalidArgument(format!("multi-line forging needs k >= 2, got {k}")));
        }
    }
    let mut counts = [0usize; 6];
    let mut programs = Vec::with_capacity(clean.len());
    let mut skipped = 0;
    for p in &clean.programs {
        require_clean(p)?;
        match forge_one(p, kind, mix, &mut counts, seed) {
            Some(result) => programs.push(result.program),
            None => skipped += 1,
        }
    }
    if skipped > 0 {
        log::info!("skipped {skipped} programs without an eligible mutation site");
    }
    let corpus_kind = match kind {
        ForgeKind::Single => CorpusKind::SingleError,
        ForgeKind::Multi { .. } => CorpusKind::MultiError,
    };
    let report = ForgeReport {
        produced: programs.len(),
        skipped,
        counts,
    };
    Ok((Corpus::new(programs, corpus_kind)?, report))
}

pub fn forge_corpus(clean: &Corpus, kind: ForgeKind, mix: &TypeMix, seed: u64) -> Result<Corpus> {
    forge_corpus_with_report(clean, kind, mix, seed).map(|(c, _)| c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{synth_corpus, LineRange};
    use crate::fixtures::{table2_program, TABLE3_PAIRS};

    fn names(line: &str) -> Vec<&'static str> {
        applicable_rules(&tokenize_code_line(line, 0)).iter().map(|r| r.name).collect()
    }

    fn rewrite(name: &str, line: &str) -> Option<String> {
        rule_by_name(name).unwrap().rewrite(line)
    }

    #[test]
    fn every_type_has_two_rules() {
        for ty in ErrorType::ALL {
            assert!(rules().iter().filter(|r| r.error_type == ty).count() >= 2, "{ty}");
        }
        let mut n: Vec<_> = rules().iter().map(|r| r.name).collect();
        n.sort();
        n.dedup();
        assert_eq!(n.len(), rules().len());
    }

    #[test]
    fn loop_condition_pair() {
        let (ty, correct, wrong) = TABLE3_PAIRS[0];
        assert_eq!(ty, ErrorType::LoopCondition);
        // the reference mutant also gains an `int`; the condition change is the error
        assert_eq!(rewrite("loop-var-into-bound", correct).unwrap(), "for (i = 1; i < i; i++)");
        assert_eq!(wrong.replace("int ", ""), "for (i = 1; i < i; i++)");
        assert_eq!(rewrite("loop-flip-strict", correct).unwrap(), "for (i = 1; i <= 10; i++)");
        assert_eq!(rewrite("loop-shift-bound", correct).unwrap(), "for (i = 1; i < 11; i++)");
        assert_eq!(rewrite("loop-shift-bound", "while (i >= n) {").unwrap(), "while (i >= n - 1) {");
        assert_eq!(
            rewrite("loop-swap-logical", "while (a < b && c) {").unwrap(),
            "while (a < b || c) {"
        );
    }

    #[test]
    fn condition_branch_pair() {
        let (_, correct, wrong) = TABLE3_PAIRS[1];
        assert!(names(correct).contains(&"branch-flip-direction"));
        assert_eq!(rewrite("branch-flip-direction", correct).unwrap(), wrong);
        assert_eq!(rewrite("branch-eq-neq", "if (a == b) x++;").unwrap(), "if (a != b) x++;");
        assert_eq!(rewrite("branch-swap-logical", "} else if (a || b) {").unwrap(), "} else if (a && b) {");
        assert_eq!(rewrite("branch-negate", correct).unwrap(), "if (!(n <= 1))");
        assert!(rewrite("branch-flip-direction", "for (i = 0; i < n; i++)").is_none());
    }

    #[test]
    fn statement_integrity_pair() {
        let (_, correct, wrong) = TABLE3_PAIRS[2];
        assert_eq!(rewrite("compound-to-assign", correct).unwrap(), wrong);
        assert_eq!(
            rewrite("drop-block-statement", "for (i = 0; i < n; i++) { t += i; cout << t; }").unwrap(),
            "for (i = 0; i < n; i++) { cout << t; }"
        );
        assert!(rewrite("drop-block-statement", "if (x) { y++; }").is_none());
    }

    #[test]
    fn variable_initialization_pair() {
        let (_, correct, wrong) = TABLE3_PAIRS[3];
        assert_eq!(rewrite("chain-init", correct).unwrap(), wrong);
        assert_eq!(rewrite("drop-initializer", "int t = 29;").unwrap(), "int t;");
        assert_eq!(rewrite("drop-initializer", "long long a, b = 0, c;").unwrap(), "long long a, b, c;");
        assert!(rewrite("chain-init", "int t = 29;").is_none());
    }

    #[test]
    fn data_type_pair() {
        let (_, correct, wrong) = TABLE3_PAIRS[4];
        assert_eq!(rewrite("int-long-long-swap", correct).unwrap(), wrong);
        assert_eq!(rewrite("int-long-long-swap", wrong).unwrap(), correct);
        assert_eq!(rewrite("real-to-int", "double avg = 0;").unwrap(), "int avg = 0;");
        assert!(rewrite("int-long-long-swap", "int main() {").is_none());
    }

    #[test]
    fn computation_pair() {
        let (_, correct, wrong) = TABLE3_PAIRS[5];
        assert!(names(correct).contains(&"drop-parens"));
        assert_eq!(rewrite("drop-parens", correct).unwrap(), wrong);
        assert_eq!(rewrite("swap-add-sub", correct).unwrap(), "int mid = (low - high) / 2;");
        assert_eq!(rewrite("swap-mul-div", correct).unwrap(), "int mid = (low + high) * 2;");
        assert!(rewrite("swap-add-sub", "x = -y;").is_none());
        assert!(rewrite("drop-parens", "if ((a + b) > c) {").is_none());
        assert!(rewrite("drop-parens", "ans = max(a + b, c);").is_none());
    }

    #[test]
    fn unmutatable_lines() {
        assert!(names("return 0;").is_empty());
        assert!(names("}").is_empty());
        assert!(names("{").is_empty());
        let braces = Program::clean("b", vec!["{".into(), "}".into()], vec![None, None]);
        assert!(matches!(mutate_single(&braces, 1), Err(Error::Unmutatable { .. })));
    }

    fn clean_table2() -> Program {
        let mut p = table2_program();
        p.error_lines.clear();
        p.error_types.clear();
        p
    }

    #[test]
    fn single_mutation_is_labeled_and_deterministic() {
        let p = clean_table2();
        let a = mutate_single(&p, 5).unwrap();
        assert_eq!(a, mutate_single(&p, 5).unwrap());
        assert_eq!(a.applied.len(), 1);
        let diff: Vec<usize> = (0..p.len()).filter(|&i| p.source_lines[i] != a.program.source_lines[i]).collect();
        assert_eq!(diff, a.program.error_lines);
        assert_eq!(a.program.pseudo_lines, p.pseudo_lines);
        a.program.validate().unwrap();
    }

    #[test]
    fn multi_mutation_cardinality() {
        let p = clean_table2();
        let m = mutate_multi(&p, 2, 9).unwrap();
        assert_eq!(m.program.error_lines.len(), 2);
        let diff: Vec<usize> = (0..p.len()).filter(|&i| p.source_lines[i] != m.program.source_lines[i]).collect();
        assert_eq!(diff, m.program.error_lines);
        let err = mutate_multi(&p, 50, 9).unwrap_err();
        assert!(matches!(err, Error::NotEnoughMutatable { requested: 50, .. }));
    }

    #[test]
    fn labeled_program_rejected() {
        assert!(matches!(mutate_single(&table2_program(), 0), Err(Error::Validation { .. })));
    }

    #[test]
    fn mix_parsing_and_validation() {
        let s = TypeMix::table5_single();
        assert!((s.0.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((s.share(ErrorType::StatementIntegrity) - 0.313).abs() < 1e-12);
        assert_eq!("table5-s".parse::<TypeMix>().unwrap(), s);
        let m = TypeMix::table5_multi();
        assert!((m.0.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(
            "loop_condition=1.0".parse::<TypeMix>().unwrap(),
            TypeMix::only(ErrorType::LoopCondition)
        );
        assert!("loop_condition=0.5".parse::<TypeMix>().is_err());
        assert!("nonsense".parse::<TypeMix>().is_err());
    }

    #[test]
    fn uniform_mix_over_600_programs() {
        let clean = synth_corpus(600, LineRange::new(10, 30).unwrap(), 21).unwrap();
        let (corpus, report) = forge_corpus_with_report(&clean, ForgeKind::Single, &TypeMix::uniform(), 4).unwrap();
        assert_eq!(corpus.len() + report.skipped, 600);
        for c in report.counts {
            assert!((60..=140).contains(&c), "{:?}", report.counts);
        }
    }

    #[test]
    fn degenerate_mix() {
        let clean = synth_corpus(50, LineRange::new(10, 20).unwrap(), 2).unwrap();
        let corpus = forge_corpus(&clean, ForgeKind::Single, &TypeMix::only(ErrorType::LoopCondition), 1).unwrap();
        assert!(!corpus.is_empty());
        assert!(corpus
            .programs
            .iter()
            .all(|p| p.error_types == vec![ErrorType::LoopCondition]));
    }

    #[test]
    fn multi_corpus_kind() {
        let clean = synth_corpus(30, LineRange::new(12, 20).unwrap(), 3).unwrap();
        let corpus = forge_corpus(&clean, ForgeKind::Multi { k: 3 }, &TypeMix::table5_multi(), 1).unwrap();
        assert_eq!(corpus.kind, CorpusKind::MultiError);
        assert!(corpus.programs.iter().all(|p| p.error_lines.len() == 3));
    }

    #[test]
    fn empty_corpus_rejected() {
        let empty = Corpus::new(vec![], CorpusKind::Clean).unwrap();
        assert!(forge_corpus(&empty, ForgeKind::Single, &TypeMix::uniform(), 0).is_err());
    }
}
