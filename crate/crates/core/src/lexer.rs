//! Token streams for code and pseudocode lines, and the shared vocabulary.
//!
//! Code is split C-style with maximal munch on multi-character operators.
//! String and character literals collapse to a single `<str>` token.
//! Pseudocode is split on whitespace with punctuation detached, and words are
//! lowercased so that "Set len" and "set len" produce the same tokens.

use std::collections::HashMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Program};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenKind {
    Identifier,
    Keyword,
    Number,
    Operator,
    Punct,
    Word,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Stream {
    Code,
    Pseudo,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub kind: TokenKind,
    pub line: usize,
    pub col: usize,
    pub stream: Stream,
}

/// Placeholder text for string and character literals.
pub const STRING_LITERAL: &str = "<str>";

const KEYWORDS: &[&str] = &[
    "auto", "bool", "break", "case", "char", "class", "const", "continue", "default", "delete",
    "do", "double", "else", "false", "float", "for", "if", "include", "int", "long", "namespace",
    "new", "return", "short", "signed", "sizeof", "static", "struct", "switch", "template",
    "true", "typedef", "typename", "unsigned", "using", "void", "while",
];

const THREE_CHAR_OPS: &[&str] = &["<<=", ">>="];
const TWO_CHAR_OPS: &[&str] = &[
    "<=", ">=", "==", "!=", "&&", "||", "<<", ">>", "++", "--", "+=", "-=", "*=", "/=", "%=",
    "&=", "|=", "^=", "->", "::",
];
const ONE_CHAR_OPS: &[char] = &['+', '-', '*', '/', '%', '<', '>', '=', '!', '&', '|', '^', '~', '?', ':'];

pub fn is_keyword(text: &str) -> bool {
    KEYWORDS.contains(&text)
}

/// A code token together with its byte span in the source line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Spanned {
    pub text: String,
    pub kind: TokenKind,
    pub span: Range<usize>,
}

pub(crate) fn code_spans(line: &str) -> Vec<Spanned> {
    let bytes = line.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < line.len() {
        let c = line[i..].chars().next().unwrap();
        let start = i;
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let text = &line[start..i];
            let kind = if is_keyword(text) {
                TokenKind::Keyword
            } else {
                TokenKind::Identifier
            };
            out.push(Spanned {
                text: text.to_string(),
                kind,
                span: start..i,
            });
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'.') {
                i += 1;
            }
            out.push(Spanned {
                text: line[start..i].to_string(),
                kind: TokenKind::Number,
                span: start..i,
            });
            continue;
        }
        if c == '"' || c == '\'' {
            i += 1;
            while i < bytes.len() && bytes[i] != c as u8 {
                if bytes[i] == b'\\' {
                    i += 1;
                }
                i += 1;
            }
            i = (i + 1).min(line.len());
            out.push(Spanned {
                text: STRING_LITERAL.to_string(),
                kind: TokenKind::Number,
                span: start..i,
            });
            continue;
        }
        let rest = &line[i..];
        if let Some(op) = THREE_CHAR_OPS
            .iter()
            .chain(TWO_CHAR_OPS)
            .find(|op| rest.starts_with(**op))
        {
            i += op.len();
            out.push(Spanned {
                text: op.to_string(),
                kind: TokenKind::Operator,
                span: start..i,
            });
            continue;
        }
        i += c.len_utf8();
        let kind = if ONE_CHAR_OPS.contains(&c) {
            TokenKind::Operator
        } else {
            TokenKind::Punct
        };
        out.push(Spanned {
            text: c.to_string(),
            kind,
            span: start..i,
        });
    }
    out
}

pub fn tokenize_code_line(line: &str, line_idx: usize) -> Vec<Token> {
    code_spans(line)
        .into_iter()
        .enumerate()
        .map(|(col, s)| Token {
            text: s.text,
            kind: s.kind,
            line: line_idx,
            col,
            stream: Stream::Code,
        })
        .collect()
}

fn is_pseudo_op(c: char) -> bool {
    matches!(c, '=' | '+' | '-' | '*' | '/' | '%' | '<' | '>' | '!' | '&' | '|' | '^')
}

pub fn tokenize_pseudo_line(line: Option<&str>, line_idx: usize) -> Vec<Token> {
    let Some(line) = line else {
        return Vec::new();
    };
    let mut out: Vec<(String, TokenKind)> = Vec::new();
    for chunk in line.split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let start = i;
            if c.is_alphanumeric() || c == '_' {
                while i < chars.len()
                    && (chars[i].is_alphanumeric()
                        || chars[i] == '_'
                        || (chars[i] == '.'
                            && i > start
                            && chars[i - 1].is_ascii_digit()
                            && chars.get(i + 1).is_some_and(char::is_ascii_digit)))
                {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                let numeric = text.chars().all(|ch| ch.is_ascii_digit() || ch == '.');
                if numeric {
                    out.push((text, TokenKind::Number));
                } else {
                    out.push((text.to_lowercase(), TokenKind::Word));
                }
            } else if is_pseudo_op(c) {
                while i < chars.len() && is_pseudo_op(chars[i]) {
                    i += 1;
                }
                out.push((chars[start..i].iter().collect(), TokenKind::Operator));
            } else {
                i += 1;
                out.push((c.to_string(), TokenKind::Punct));
            }
        }
    }
    out.into_iter()
        .enumerate()
        .map(|(col, (text, kind))| Token {
            text,
            kind,
            line: line_idx,
            col,
            stream: Stream::Pseudo,
        })
        .collect()
}

/// Per-line token streams for a whole program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramTokens {
    pub code: Vec<Vec<Token>>,
    pub pseudo: Vec<Vec<Token>>,
}

impl ProgramTokens {
    pub fn new(program: &Program) -> Self {
        let code = program
            .source_lines
            .iter()
            .enumerate()
            .map(|(i, l)| tokenize_code_line(l, i))
            .collect();
        let pseudo = program
            .pseudo_lines
            .iter()
            .enumerate()
            .map(|(i, l)| tokenize_pseudo_line(l.as_deref(), i))
            .collect();
        ProgramTokens { code, pseudo }
    }

    pub fn n_lines(&self) -> usize {
        self.code.len()
    }

    pub fn all(&self) -> impl Iterator<Item = &Token> {
        self.code.iter().flatten().chain(self.pseudo.iter().flatten())
    }
}

/// Token text ↔ integer id. Ids 0 and 1 are reserved for padding and
/// unknown tokens; the rest are assigned by descending frequency, then
/// lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: HashMap<String, usize>,
}

impl Vocabulary {
    pub const PAD: usize = 0;
    pub const UNK: usize = 1;
    pub const PAD_TEXT: &'static str = "<pad>";
    pub const UNK_TEXT: &'static str = "<unk>";

    pub fn from_tokens(words: impl IntoIterator<Item = String>) -> Self {
        let mut tokens = vec![Self::PAD_TEXT.to_string(), Self::UNK_TEXT.to_string()];
        tokens.extend(
            words
                .into_iter()
                .filter(|w| w != Self::PAD_TEXT && w != Self::UNK_TEXT),
        );
        let ids = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary { tokens, ids }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn encode(&self, text: &str) -> usize {
        self.ids.get(text).copied().unwrap_or(Self::UNK)
    }

    pub fn decode(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn contains(&self, text: &str) -> bool {
        self.ids.contains_key(text)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

impl From<Vec<String>> for Vocabulary {
    fn from(tokens: Vec<String>) -> Self {
        let rest = tokens.into_iter().skip(2);
        Vocabulary::from_tokens(rest)
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.tokens
    }
}

/// Builds the vocabulary over both streams of every program. Tokens seen
/// fewer than `min_count` times map to the unknown id.
pub fn build_vocab(corpus: &Corpus, min_count: usize) -> Vocabulary {
    let mut counts: HashMap<String, usize> = HashMap::new();
    for program in &corpus.programs {
        for token in ProgramTokens::new(program).all() {
            *counts.entry(token.text.clone()).or_default() += 1;
        }
    }
    let mut entries: Vec<(String, usize)> = counts
        .into_iter()
        .filter(|(_, c)| *c >= min_count)
        .collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Vocabulary::from_tokens(entries.into_iter().map(|(t, _)| t))
}
