//! Code–pseudocode token graph.
//!
//! Nodes are all code tokens followed by all pseudocode tokens, each group in
//! (line, col) order. Edge kinds:
//!
//! - `Seq`: consecutive tokens on the same line of the same stream.
//! - `CodeMatch`: two code identifiers with identical text, anywhere in the program.
//! - `CrossMatch`: a code identifier/number and a pseudocode word/number whose
//!   lowercased texts are equal, on any pair of lines.
//! - `SelfLoop`: every node, so each attention neighbourhood is nonempty.
//!
//! There are no edges between consecutive lines; cross-line information flows
//! only through match edges.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::corpus::Program;
use crate::error::{Error, Result};
use crate::lexer::{ProgramTokens, Stream, Token, TokenKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdgeKind {
    Seq,
    CodeMatch,
    CrossMatch,
    SelfLoop,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CpGraph {
    pub nodes: Vec<Token>,
    /// Directed edge set; every non-loop edge is present in both directions.
    pub edges: BTreeSet<(usize, usize, EdgeKind)>,
    adjacency: Vec<Vec<(usize, EdgeKind)>>,
    /// Distinct neighbour nodes per node (ascending), self included.
    attention: Vec<Vec<usize>>,
    code_lines: Vec<Range<usize>>,
    pseudo_lines: Vec<Range<usize>>,
}

pub fn build_graph(program: &Program) -> CpGraph {
    CpGraph::from_tokens(&ProgramTokens::new(program))
}

impl CpGraph {
    pub fn from_tokens(tokens: &ProgramTokens) -> Self {
        let mut nodes = Vec::new();
        let mut code_lines = Vec::with_capacity(tokens.n_lines());
        for line in &tokens.code {
            let start = nodes.len();
            nodes.extend(line.iter().cloned());
            code_lines.push(start..nodes.len());
        }
        let mut pseudo_lines = Vec::with_capacity(tokens.n_lines());
        for line in &tokens.pseudo {
            let start = nodes.len();
            nodes.extend(line.iter().cloned());
            pseudo_lines.push(start..nodes.len());
        }

        let mut edges = BTreeSet::new();
        let mut both = |u: usize, v: usize, kind: EdgeKind| {
            edges.insert((u, v, kind));
            edges.insert((v, u, kind));
        };

        for range in code_lines.iter().chain(&pseudo_lines) {
            for u in range.start..range.end.saturating_sub(1) {
                both(u, u + 1, EdgeKind::Seq);
            }
        }

        let mut identifiers: HashMap<&str, Vec<usize>> = HashMap::new();
        let mut code_keys: HashMap<String, Vec<usize>> = HashMap::new();
        for (idx, tok) in nodes.iter().enumerate() {
            if tok.stream != Stream::Code {
                continue;
            }
            if tok.kind == TokenKind::Identifier {
                identifiers.entry(&tok.text).or_default().push(idx);
            }
            if matches!(tok.kind, TokenKind::Identifier | TokenKind::Number) {
                code_keys.entry(tok.text.to_lowercase()).or_default().push(idx);
            }
        }
        for group in identifiers.values() {
            for (a, &u) in group.iter().enumerate() {
                for &v in &group[a + 1..] {
                    both(u, v, EdgeKind::CodeMatch);
                }
            }
        }
        for (idx, tok) in nodes.iter().enumerate() {
            if tok.stream != Stream::Pseudo || !matches!(tok.kind, TokenKind::Word | TokenKind::Number) {
                continue;
            }
            if let Some(code_nodes) = code_keys.get(&tok.text) {
                for &u in code_nodes {
                    both(u, idx, EdgeKind::CrossMatch);
                }
            }
        }
        for u in 0..nodes.len() {
            edges.insert((u, u, EdgeKind::SelfLoop));
        }

        let mut adjacency = vec![Vec::new(); nodes.len()];
        for &(u, v, kind) in &edges {
            adjacency[u].push((v, kind));
        }
        let attention = adjacency
            .iter()
            .map(|list| {
                let mut nbrs: Vec<usize> = list.iter().map(|&(v, _)| v).collect();
                nbrs.dedup();
                nbrs
            })
            .collect();

        CpGraph {
            nodes,
            edges,
            adjacency,
            attention,
            code_lines,
            pseudo_lines,
        }
    }

    /// Builds a graph from explicit nodes and undirected edges. Self-loops are
    /// added to every node. Intended for tests and synthetic experiments.
    pub fn from_edges(nodes: Vec<Token>, undirected: &[(usize, usize, EdgeKind)]) -> Self {
        let mut edges = BTreeSet::new();
        for &(u, v, k) in undirected {
            assert!(u < nodes.len() && v < nodes.len(), "edge endpoint out of range");
            edges.insert((u, v, k));
            edges.insert((v, u, k));
        }
        for u in 0..nodes.len() {
            edges.insert((u, u, EdgeKind::SelfLoop));
        }
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for &(u, v, kind) in &edges {
            adjacency[u].push((v, kind));
        }
        let attention = adjacency
            .iter()
            .map(|list| {
                let mut nbrs: Vec<usize> = list.iter().map(|&(v, _)| v).collect();
                nbrs.dedup();
                nbrs
            })
            .collect();
        CpGraph {
            nodes,
            edges,
            adjacency,
            attention,
            code_lines: Vec::new(),
            pseudo_lines: Vec::new(),
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_lines(&self) -> usize {
        self.code_lines.len()
    }

    /// Neighbours of `node` with the kind of each connecting edge, ascending
    /// by node index. Includes the self-loop.
    pub fn neighbors(&self, node: usize) -> Result<&[(usize, EdgeKind)]> {
        self.adjacency
            .get(node)
            .map(Vec::as_slice)
            .ok_or(Error::NodeOutOfRange {
                node,
                len: self.nodes.len(),
            })
    }

    /// Distinct neighbour nodes (the attention neighbourhood), ascending.
    pub fn attention_neighbors(&self, node: usize) -> &[usize] {
        &self.attention[node]
    }

    pub fn count_edges(&self, kind: EdgeKind) -> usize {
        self.edges.iter().filter(|e| e.2 == kind).count()
    }

    /// Node range of the code tokens on `line`.
    pub fn code_line(&self, line: usize) -> Range<usize> {
        self.code_lines[line].clone()
    }

    /// Node range of the pseudocode tokens on `line`.
    pub fn pseudo_line(&self, line: usize) -> Range<usize> {
        self.pseudo_lines[line].clone()
    }

    /// Returns the graph with its nodes reordered so that new node `i` is old
    /// node `perm[i]`. Line ranges are dropped.
    pub fn permuted(&self, perm: &[usize]) -> CpGraph {
        let mut inverse = vec![0; perm.len()];
        for (new, &old) in perm.iter().enumerate() {
            inverse[old] = new;
        }
        let nodes = perm.iter().map(|&old| self.nodes[old].clone()).collect();
        let undirected: Vec<_> = self
            .edges
            .iter()
            .filter(|e| e.2 != EdgeKind::SelfLoop)
            .map(|&(u, v, k)| (inverse[u], inverse[v], k))
            .collect();
        CpGraph::from_edges(nodes, &undirected)
    }
}

fn escape(text: &str) -> String {
    text.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Renders the graph as a DOT digraph. Each stored directed edge becomes one
/// DOT edge carrying its kind as an attribute.
pub fn dump_dot(graph: &CpGraph) -> String {
    let mut out = String::from("digraph cp {\n");
    for (i, tok) in graph.nodes.iter().enumerate() {
        let stream = match tok.stream {
            Stream::Code => "code",
            Stream::Pseudo => "pseudo",
        };
        let shape = match tok.stream {
            Stream::Code => "box",
            Stream::Pseudo => "ellipse",
        };
        writeln!(
            out,
            "  n{i} [label=\"{}\", stream={stream}, line={}, col={}, shape={shape}];",
            escape(&tok.text),
            tok.line,
            tok.col
        )
        .unwrap();
    }
    for &(u, v, kind) in &graph.edges {
        writeln!(out, "  n{u} -> n{v} [kind={kind:?}];").unwrap();
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::table2_program;
    use crate::lexer::tokenize_code_line;

    fn find(graph: &CpGraph, stream: Stream, line: usize, text: &str) -> Vec<usize> {
        graph
            .nodes
            .iter()
            .enumerate()
            .filter(|(_, t)| t.stream == stream && t.line == line && t.text == text)
            .map(|(i, _)| i)
            .collect()
    }

    #[test]
    fn row4_cross_matches() {
        let g = build_graph(&table2_program());
        for word in ["len", "s", "size"] {
            let code = find(&g, Stream::Code, 4, word);
            let pseudo = find(&g, Stream::Pseudo, 4, word);
            assert_eq!((code.len(), pseudo.len()), (1, 1), "{word}");
            assert!(g.edges.contains(&(code[0], pseudo[0], EdgeKind::CrossMatch)));
            assert!(g.edges.contains(&(pseudo[0], code[0], EdgeKind::CrossMatch)));
        }
        // function words have no code counterpart on that line pair
        let to = find(&g, Stream::Pseudo, 4, "to")[0];
        assert!(g
            .neighbors(to)
            .unwrap()
            .iter()
            .all(|&(_, k)| k != EdgeKind::CrossMatch));
    }

    #[test]
    fn minimal_graph() {
        let p = Program::clean("one", vec!["x".into()], vec![None]);
        let g = build_graph(&p);
        assert_eq!(g.n_nodes(), 1);
        assert_eq!(g.edges.len(), 1);
        assert_eq!(g.neighbors(0).unwrap(), &[(0, EdgeKind::SelfLoop)]);
        assert!(matches!(g.neighbors(1), Err(Error::NodeOutOfRange { node: 1, len: 1 })));
    }

    #[test]
    fn ans_occurrences_fully_connected() {
        let g = build_graph(&table2_program());
        let occ: Vec<usize> = g
            .nodes
            .iter()
            .enumerate()
            .filter(|(_, t)| t.stream == Stream::Code && t.text == "ans")
            .map(|(i, _)| i)
            .collect();
        let lines: BTreeSet<usize> = occ.iter().map(|&i| g.nodes[i].line).collect();
        assert_eq!(lines, BTreeSet::from([2, 10, 12]));
        // line 10 holds two occurrences (`ans = max(ans, k)`), so 4 nodes, 6 pairs
        assert_eq!(occ.len(), 4);
        let mut pairs = 0;
        let mut line_pairs = BTreeSet::new();
        for (a, &u) in occ.iter().enumerate() {
            for &v in &occ[a + 1..] {
                assert!(g.edges.contains(&(u, v, EdgeKind::CodeMatch)));
                pairs += 1;
                let (lu, lv) = (g.nodes[u].line, g.nodes[v].line);
                if lu != lv {
                    line_pairs.insert((lu.min(lv), lu.max(lv)));
                }
            }
        }
        assert_eq!(pairs, 6);
        assert_eq!(line_pairs.len(), 3);
    }

    #[test]
    fn middle_token_has_seq_neighbors() {
        let p = Program::clean("m", vec!["a + b".into()], vec![None]);
        let g = build_graph(&p);
        let n = g.neighbors(1).unwrap();
        assert!(n.contains(&(0, EdgeKind::Seq)));
        assert!(n.contains(&(1, EdgeKind::SelfLoop)));
        assert!(n.contains(&(2, EdgeKind::Seq)));
        assert!(n.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn code_len_reaches_pseudo_len_on_line4() {
        let g = build_graph(&table2_program());
        let code = find(&g, Stream::Code, 4, "len")[0];
        let pseudo = find(&g, Stream::Pseudo, 4, "len")[0];
        assert!(g
            .neighbors(code)
            .unwrap()
            .contains(&(pseudo, EdgeKind::CrossMatch)));
    }

    #[test]
    fn structural_invariants_hold() {
        let program = table2_program();
        let g = build_graph(&program);
        let tokens = ProgramTokens::new(&program);
        let n_code: usize = tokens.code.iter().map(Vec::len).sum();
        let n_pseudo: usize = tokens.pseudo.iter().map(Vec::len).sum();
        assert_eq!(g.n_nodes(), n_code + n_pseudo);
        for &(u, v, k) in &g.edges {
            if k == EdgeKind::SelfLoop {
                assert_eq!(u, v);
            } else {
                assert!(g.edges.contains(&(v, u, k)));
            }
            if k == EdgeKind::CrossMatch {
                assert_ne!(g.nodes[u].stream, g.nodes[v].stream);
            }
        }
        for u in 0..g.n_nodes() {
            assert!(g.edges.contains(&(u, u, EdgeKind::SelfLoop)));
        }
        assert_eq!(build_graph(&program), g);
    }

    #[test]
    fn keywords_and_punctuation_do_not_code_match() {
        let p = Program::clean("k", vec!["int a;".into(), "int b;".into()], vec![None, None]);
        let g = build_graph(&p);
        assert_eq!(g.count_edges(EdgeKind::CodeMatch), 0);
    }

    #[test]
    fn dot_of_empty_and_single_graph() {
        let empty = CpGraph::from_edges(Vec::new(), &[]);
        assert_eq!(dump_dot(&empty), "digraph cp {\n}\n");
        let single = CpGraph::from_tokens(&ProgramTokens {
            code: vec![tokenize_code_line("x", 0)],
            pseudo: vec![Vec::new()],
        });
        let dot = dump_dot(&single);
        assert_eq!(dot.matches("[label=").count(), 1);
        assert_eq!(dot.matches("->").count(), 1);
        assert!(dot.contains("n0 -> n0 [kind=SelfLoop]"));
    }

    #[test]
    fn dot_cross_match_count_agrees() {
        let g = build_graph(&table2_program());
        let dot = dump_dot(&g);
        assert_eq!(
            dot.matches("[kind=CrossMatch]").count(),
            g.count_edges(EdgeKind::CrossMatch)
        );
        assert!(g.count_edges(EdgeKind::CrossMatch) > 0);
        assert_eq!(dump_dot(&g), dot);
    }

    #[test]
    fn dot_escapes_quotes() {
        let p = Program::clean("q", vec!["a".into()], vec![Some("say \"hi\"".into())]);
        let dot = dump_dot(&build_graph(&p));
        assert!(dot.contains(r#"label="\"""#));
    }
}
