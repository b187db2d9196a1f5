//! Template grammar for small clean C++-style programs with line-aligned
//! pseudocode. Used for desk-scale training and tests when no external
//! corpus is available.
//!
//! Every program has the same coarse shape: declarations, input, a body of
//! loops/branches/statements, then `return 0;` and a closing brace. Brace-only
//! and return lines carry no pseudocode.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Corpus, CorpusKind, Program};
use crate::error::{Error, Result};

/// Inclusive bounds on generated program length.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LineRange {
    pub min: usize,
    pub max: usize,
}

impl LineRange {
    pub const LIMITS: (usize, usize) = (5, 60);

    pub fn new(min: usize, max: usize) -> Result<Self> {
        let (lo, hi) = Self::LIMITS;
        if min > max || min < lo || max > hi {
            return Err(Error::InvalidArgument(format!(
                "line range [{min}, {max}] must lie within [{lo}, {hi}]"
            )));
        }
        Ok(LineRange { min, max })
    }
}

/// Generates `n_programs` clean programs whose lengths are drawn uniformly
/// from `range`. Identical arguments yield identical corpora.
pub fn synth_corpus(n_programs: usize, range: LineRange, seed: u64) -> Result<Corpus> {
    if n_programs == 0 {
        return Err(Error::InvalidArgument("n_programs must be positive".into()));
    }
    LineRange::new(range.min, range.max)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let programs = (0..n_programs)
        .map(|i| {
            let target = rng.gen_range(range.min..=range.max);
            let program_seed: u64 = rng.gen();
            Generator::new(program_seed).program(format!("p{i:05}"), target)
        })
        .collect();
    Corpus::new(programs, CorpusKind::Clean)
}

struct Line {
    code: String,
    pseudo: Option<String>,
}

impl Line {
    fn new(code: String, pseudo: impl Into<String>) -> Self {
        Line {
            code,
            pseudo: Some(pseudo.into()),
        }
    }

    fn bare(code: &str) -> Self {
        Line {
            code: code.to_string(),
            pseudo: None,
        }
    }

    fn indented(mut self, depth: usize) -> Self {
        self.code = format!("{}{}", "  ".repeat(depth), self.code);
        self
    }
}

const INT_NAMES: &[&str] = &[
    "n", "m", "x", "y", "a", "b", "c", "sum", "ans", "cnt", "total", "low", "high", "mid", "len",
    "res", "cur", "val", "t", "red", "green", "blue", "p", "q", "d", "w", "h", "s",
];
const LOOP_VARS: &[&str] = &["i", "j", "k"];
const DOUBLE_NAMES: &[&str] = &["avg", "ratio", "rate", "area"];

const COMPARISONS: &[(&str, &str)] = &[
    ("<", "is less than"),
    ("<=", "is less than or equal to"),
    (">", "is greater than"),
    (">=", "is greater than or equal to"),
    ("==", "is equal to"),
    ("!=", "is not equal to"),
];

struct Generator {
    rng: ChaCha8Rng,
    ints: Vec<&'static str>,
    double: Option<&'static str>,
}

impl Generator {
    fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pool = INT_NAMES.to_vec();
        pool.shuffle(&mut rng);
        let n_ints = rng.gen_range(4..=7);
        let ints = pool[..n_ints].to_vec();
        let double = if rng.gen_bool(0.4) {
            DOUBLE_NAMES.choose(&mut rng).copied()
        } else {
            None
        };
        Generator { rng, ints, double }
    }

    fn program(mut self, problem_id: String, target: usize) -> Program {
        let mut lines = Vec::with_capacity(target);
        // Epilogue is `return 0;` + `}`; reserve it up front.
        let mut budget = target - 2;

        lines.extend(self.declarations(budget.clamp(1, 3), budget));
        budget = target - 2 - lines.len();

        if budget >= 3 && self.rng.gen_bool(0.8) {
            lines.push(self.read_input());
            budget -= 1;
        }

        let mut blocks: Vec<Vec<Line>> = Vec::new();
        // One loop, one branch and one arithmetic statement whenever they fit.
        if budget >= 3 {
            let b = self.loop_block(budget - 2, 0, true);
            budget -= b.len();
            blocks.push(b);
        }
        if budget >= 2 {
            let b = vec![self.inline_if(0, false)];
            budget -= 1;
            blocks.push(b);
        }
        if budget >= 1 {
            blocks.push(vec![self.arithmetic(0, &[])]);
            budget -= 1;
        }
        while budget > 0 {
            let b = self.block(budget, 0, &[]);
            budget -= b.len();
            blocks.push(b);
        }
        blocks.shuffle(&mut self.rng);
        lines.extend(blocks.into_iter().flatten());

        lines.push(Line::bare("return 0;"));
        lines.push(Line::bare("}"));
        debug_assert_eq!(lines.len(), target);

        let (source_lines, pseudo_lines) = lines.into_iter().map(|l| (l.code, l.pseudo)).unzip();
        Program::clean(problem_id, source_lines, pseudo_lines)
    }

    fn pick_int(&mut self) -> &'static str {
        self.ints.choose(&mut self.rng).copied().unwrap()
    }

    fn operand(&mut self, loop_vars: &[&'static str]) -> String {
        if !loop_vars.is_empty() && self.rng.gen_bool(0.3) {
            return loop_vars.choose(&mut self.rng).unwrap().to_string();
        }
        if self.rng.gen_bool(0.25) {
            return self.rng.gen_range(1..=20).to_string();
        }
        self.pick_int().to_string()
    }

    fn declarations(&mut self, max_lines: usize, budget: usize) -> Vec<Line> {
        let n = if budget >= 8 {
            self.rng.gen_range(2..=max_lines.max(2))
        } else {
            1
        };
        let mut names = self.ints.clone();
        let mut out = Vec::new();
        for idx in 0..n {
            let last = idx + 1 == n;
            let take = if last {
                names.len()
            } else {
                self.rng.gen_range(1..=names.len().saturating_sub(n - idx - 1).max(1))
            };
            let group: Vec<&str> = names.drain(..take.min(names.len())).collect();
            if group.is_empty() {
                break;
            }
            out.push(self.declaration(&group));
        }
        if let Some(d) = self.double {
            if out.len() < max_lines && budget > out.len() + 4 {
                let v = format!("{}.{}", self.rng.gen_range(0..5), self.rng.gen_range(1..10));
                out.push(Line::new(
                    format!("double {d} = {v};"),
                    format!("{d} = double with value {v}"),
                ));
            } else {
                self.double = None;
            }
        }
        out
    }

    fn declaration(&mut self, group: &[&str]) -> Line {
        let long = self.rng.gen_bool(0.25);
        let (ty, ty_words) = if long {
            ("long long", "long integers")
        } else {
            ("int", "integers")
        };
        let init = self.rng.gen_bool(0.6);
        let list = group.join(", ");
        if init {
            let v = self.rng.gen_range(0..=30);
            let first = group[0];
            let code = format!("{ty} {first} = {v}{};", tail(&group[1..]));
            let pseudo = if group.len() == 1 {
                format!("let {first} be {} with value {v}", ty_words.trim_end_matches('s'))
            } else {
                format!(
                    "let {first} = {v} and {} be {ty_words}",
                    group[1..].join(", ")
                )
            };
            return Line::new(code, pseudo);
        }
        Line::new(format!("{ty} {list};"), format!("let {list} be {ty_words}"))
    }

    fn read_input(&mut self) -> Line {
        let a = self.pick_int();
        if self.rng.gen_bool(0.5) {
            let b = self.pick_int();
            if b != a {
                return Line::new(format!("cin >> {a} >> {b};"), format!("read {a} and {b}"));
            }
        }
        Line::new(format!("cin >> {a};"), format!("read {a}"))
    }

    fn block(&mut self, budget: usize, depth: usize, loop_vars: &[&'static str]) -> Vec<Line> {
        let roll = self.rng.gen_range(0..10);
        match roll {
            0 | 1 if budget >= 3 && depth < 2 => self.loop_block(budget - 2, depth, false),
            2 if budget >= 3 && depth < 2 => self.if_block(budget, depth, loop_vars),
            3 if budget >= 3 && depth < 2 => self.while_block(budget - 2, depth, loop_vars),
            4 if depth < 2 => vec![self.inline_loop(depth)],
            _ => vec![self.statement(depth, loop_vars)],
        }
    }

    fn body(&mut self, budget: usize, depth: usize, loop_vars: &[&'static str]) -> Vec<Line> {
        let want = self.rng.gen_range(1..=budget.clamp(1, 3));
        let mut out = Vec::new();
        while out.len() < want {
            let b = self.block(want - out.len(), depth, loop_vars);
            out.extend(b);
        }
        out
    }

    fn statement(&mut self, depth: usize, loop_vars: &[&'static str]) -> Line {
        match self.rng.gen_range(0..9) {
            0 | 1 => self.arithmetic(depth, loop_vars),
            2 | 3 => self.compound(depth, loop_vars),
            4 => {
                let t = self.pick_int();
                let a = self.operand(loop_vars);
                Line::new(
                    format!("{t} = max({t}, {a});"),
                    format!("set {t} to max of {t}, {a}"),
                )
                .indented(depth)
            }
            5 => {
                let a = self.pick_int();
                Line::new(format!("cout << {a} << endl;"), format!("print {a}")).indented(depth)
            }
            6 => self.inline_if(depth, !loop_vars.is_empty()),
            7 if self.double.is_some() => {
                let d = self.double.unwrap();
                let a = self.operand(loop_vars);
                Line::new(
                    format!("{d} = {d} + {a} * 1.5;"),
                    format!("set {d} to {d} + {a} * 1.5"),
                )
                .indented(depth)
            }
            _ => {
                let t = self.pick_int();
                Line::new(format!("{t}++;"), format!("increment {t}")).indented(depth)
            }
        }
    }

    fn arithmetic(&mut self, depth: usize, loop_vars: &[&'static str]) -> Line {
        let t = self.pick_int();
        let a = self.operand(loop_vars);
        let b = self.operand(loop_vars);
        let c = self.operand(loop_vars);
        let expr = match self.rng.gen_range(0..5) {
            0 => format!("({a} + {b}) / 2"),
            1 => format!("{a} + {b} * {c}"),
            2 => format!("{a} - {b} + {c}"),
            3 => format!("{a} * ({b} - {c})"),
            _ => format!("({a} - {b}) * {c}"),
        };
        Line::new(format!("{t} = {expr};"), format!("set {t} to {expr}")).indented(depth)
    }

    fn compound(&mut self, depth: usize, loop_vars: &[&'static str]) -> Line {
        let t = self.pick_int();
        let a = self.operand(loop_vars);
        let (op, pseudo) = match self.rng.gen_range(0..4) {
            0 | 1 => ("+=", format!("add {a} to {t}")),
            2 => ("-=", format!("subtract {a} from {t}")),
            _ => ("*=", format!("multiply {t} by {a}")),
        };
        Line::new(format!("{t} {op} {a};"), pseudo).indented(depth)
    }

    fn comparison(&mut self, loop_vars: &[&'static str]) -> (String, String) {
        let lhs = if !loop_vars.is_empty() && self.rng.gen_bool(0.3) {
            loop_vars.choose(&mut self.rng).unwrap().to_string()
        } else {
            self.pick_int().to_string()
        };
        let rhs = self.operand(loop_vars);
        let (op, words) = *COMPARISONS.choose(&mut self.rng).unwrap();
        (format!("{lhs} {op} {rhs}"), format!("{lhs} {words} {rhs}"))
    }

    fn condition(&mut self, loop_vars: &[&'static str]) -> (String, String) {
        let (c1, p1) = self.comparison(loop_vars);
        if self.rng.gen_bool(0.35) {
            let (c2, p2) = self.comparison(loop_vars);
            let (op, word) = if self.rng.gen_bool(0.5) {
                ("&&", "and")
            } else {
                ("||", "or")
            };
            return (format!("{c1} {op} {c2}"), format!("{p1} {word} {p2}"));
        }
        (c1, p1)
    }

    fn inline_if(&mut self, depth: usize, in_loop: bool) -> Line {
        let loop_vars: &[&'static str] = &[];
        let (cond, words) = self.condition(loop_vars);
        if in_loop && self.rng.gen_bool(0.4) {
            return Line::new(format!("if ({cond}) break;"), format!("if {words}, break"))
                .indented(depth);
        }
        let t = self.pick_int();
        let a = self.operand(loop_vars);
        Line::new(
            format!("if ({cond}) {t} = {a};"),
            format!("if {words}, set {t} to {a}"),
        )
        .indented(depth)
    }

    fn loop_header(&mut self, var: &'static str) -> (String, String) {
        let bound = if self.rng.gen_bool(0.4) {
            self.rng.gen_range(5..=100).to_string()
        } else {
            self.pick_int().to_string()
        };
        let decl = if self.rng.gen_bool(0.8) { "int " } else { "" };
        match self.rng.gen_range(0..4) {
            0 | 1 => (
                format!("for ({decl}{var} = 0; {var} < {bound}; {var}++)"),
                format!("for {var} = 0 to {bound} exclusive"),
            ),
            2 => (
                format!("for ({decl}{var} = 1; {var} <= {bound}; {var}++)"),
                format!("for {var} = 1 to {bound} inclusive"),
            ),
            _ => (
                format!("for ({decl}{var} = {bound}; {var} > 0; {var}--)"),
                format!("for {var} = {bound} down to 0 exclusive"),
            ),
        }
    }

    /// `for` header, a body of at most `body_budget` lines, closing brace.
    fn loop_block(&mut self, body_budget: usize, depth: usize, force_compound: bool) -> Vec<Line> {
        let var = LOOP_VARS[depth.min(LOOP_VARS.len() - 1)];
        let (head, words) = self.loop_header(var);
        let mut out = vec![Line::new(format!("{head} {{"), words).indented(depth)];
        let vars: Vec<&'static str> = LOOP_VARS[..=depth.min(LOOP_VARS.len() - 1)].to_vec();
        let mut body = self.body(body_budget, depth + 1, &vars);
        if force_compound {
            body[0] = self.compound(depth + 1, &vars);
        }
        out.extend(body);
        out.push(Line::bare("}").indented(depth));
        out
    }

    fn inline_loop(&mut self, depth: usize) -> Line {
        let var = LOOP_VARS[depth.min(LOOP_VARS.len() - 1)];
        let (head, words) = self.loop_header(var);
        let t = self.pick_int();
        Line::new(
            format!("{head} {{ {t} += {var}; cout << {t}; }}"),
            format!("{words}, add {var} to {t} and print {t}"),
        )
        .indented(depth)
    }

    fn while_block(&mut self, body_budget: usize, depth: usize, loop_vars: &[&'static str]) -> Vec<Line> {
        let x = self.pick_int();
        let (cond, words) = if self.rng.gen_bool(0.3) {
            let y = self.pick_int();
            let n = self.rng.gen_range(2..50);
            (
                format!("{x} > 0 && {y} < {n}"),
                format!("{x} is greater than 0 and {y} is less than {n}"),
            )
        } else {
            (format!("{x} > 0"), format!("{x} is greater than 0"))
        };
        let mut out = vec![Line::new(format!("while ({cond}) {{"), format!("while {words}")).indented(depth)];
        let mut body = self.body(body_budget, depth + 1, loop_vars);
        let last = body.len() - 1;
        body[last] = if self.rng.gen_bool(0.5) {
            Line::new(format!("{x} /= 2;"), format!("divide {x} by 2"))
        } else {
            Line::new(format!("{x} -= 1;"), format!("subtract 1 from {x}"))
        }
        .indented(depth + 1);
        out.extend(body);
        out.push(Line::bare("}").indented(depth));
        out
    }

    fn if_block(&mut self, budget: usize, depth: usize, loop_vars: &[&'static str]) -> Vec<Line> {
        let (cond, words) = self.condition(loop_vars);
        let mut out = vec![Line::new(format!("if ({cond}) {{"), format!("if {words}")).indented(depth)];
        let with_else = budget >= 5 && self.rng.gen_bool(0.3);
        if with_else {
            let first = (budget - 3) / 2;
            out.extend(self.body(first, depth + 1, loop_vars));
            out.push(Line::new("} else {".to_string(), "else").indented(depth));
            let rest = budget - 1 - out.len();
            out.extend(self.body(rest, depth + 1, loop_vars));
        } else {
            out.extend(self.body(budget - 2, depth + 1, loop_vars));
        }
        out.push(Line::bare("}").indented(depth));
        out
    }
}

fn tail(rest: &[&str]) -> String {
    rest.iter().map(|n| format!(", {n}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_program_length_in_range() {
        let corpus = synth_corpus(1, LineRange::new(14, 16).unwrap(), 1).unwrap();
        assert_eq!(corpus.len(), 1);
        let p = &corpus.programs[0];
        assert!((14..=16).contains(&p.len()));
        assert!(p.is_clean());
    }

    #[test]
    fn five_hundred_programs_average_near_twenty() {
        let corpus = synth_corpus(500, LineRange::new(10, 30).unwrap(), 3).unwrap();
        assert_eq!(corpus.len(), 500);
        let mean = corpus.mean_len();
        // Uniform on [10, 30]: sd of the mean is ~6.06/sqrt(500) ~ 0.27.
        assert!((mean - 20.0).abs() < 1.0, "mean length {mean}");
        assert!(corpus.programs.iter().all(|p| (10..=30).contains(&p.len())));
    }

    #[test]
    fn same_seed_is_byte_identical() {
        let range = LineRange::new(10, 30).unwrap();
        let a = synth_corpus(40, range, 9).unwrap().to_jsonl();
        let b = synth_corpus(40, range, 9).unwrap().to_jsonl();
        assert_eq!(a, b);
        assert_ne!(a, synth_corpus(40, range, 10).unwrap().to_jsonl());
    }

    #[test]
    fn unannotated_lines_are_braces_or_returns() {
        let corpus = synth_corpus(200, LineRange::new(5, 60).unwrap(), 4).unwrap();
        for p in &corpus.programs {
            for (code, pseudo) in p.source_lines.iter().zip(&p.pseudo_lines) {
                if pseudo.is_none() {
                    let t = code.trim();
                    assert!(t == "}" || t.starts_with("return"), "{code:?}");
                }
            }
        }
    }

    #[test]
    fn every_length_in_limits_is_reachable() {
        for len in 5..=60 {
            let corpus = synth_corpus(3, LineRange::new(len, len).unwrap(), len as u64).unwrap();
            assert!(corpus.programs.iter().all(|p| p.len() == len));
        }
    }

    #[test]
    fn range_outside_limits_rejected() {
        assert!(LineRange::new(4, 10).is_err());
        assert!(LineRange::new(10, 61).is_err());
        assert!(LineRange::new(20, 10).is_err());
    }
}
