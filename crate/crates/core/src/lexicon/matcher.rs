//! Aho-Corasick automaton over token ids.
//!
//! Patterns are token sequences, so every match is aligned to token
//! boundaries by construction: a surface can never match inside a longer
//! word. Tokens absent from every pattern map to no symbol and send the
//! automaton back to the root.

use std::collections::{BTreeMap, HashMap, VecDeque};

use super::Lexicon;

const ROOT: u32 = 0;
const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    /// Canonical surface, tokens joined by single spaces.
    pub surface: String,
    pub token_len: usize,
    /// Sorted category ids.
    pub categories: Vec<String>,
}

/// One occurrence of a pattern over tokens `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PatternMatch {
    pub start: usize,
    pub end: usize,
    pub pattern: usize,
}

#[derive(Debug, Clone)]
struct Node {
    /// Sorted by symbol.
    children: Vec<(u32, u32)>,
    fail: u32,
    /// Pattern ending exactly at this node.
    output: u32,
    /// Nearest proper suffix node that has an output.
    dict: u32,
}

impl Node {
    fn new() -> Self {
        Self {
            children: Vec::new(),
            fail: ROOT,
            output: NONE,
            dict: NONE,
        }
    }

    fn child(&self, sym: u32) -> Option<u32> {
        self.children
            .binary_search_by_key(&sym, |&(s, _)| s)
            .ok()
            .map(|i| self.children[i].1)
    }
}

/// Immutable matcher compiled from a [`Lexicon`]. Safe to share across
/// threads.
#[derive(Debug, Clone)]
pub struct CompiledMatcher {
    vocab: HashMap<String, u32>,
    nodes: Vec<Node>,
    patterns: Vec<Pattern>,
    by_surface: HashMap<String, usize>,
    lexicon_version: String,
}

impl CompiledMatcher {
    pub fn new(lexicon: &Lexicon) -> Self {
        let mut grouped: BTreeMap<&str, Vec<String>> = BTreeMap::new();
        for item in lexicon.items() {
            grouped
                .entry(item.surface.as_str())
                .or_default()
                .push(item.category_id.clone());
        }

        let mut vocab: HashMap<String, u32> = HashMap::new();
        let mut nodes = vec![Node::new()];
        let mut patterns = Vec::with_capacity(grouped.len());
        let mut by_surface = HashMap::with_capacity(grouped.len());

        for (surface, mut categories) in grouped {
            categories.sort();
            categories.dedup();
            let mut state = ROOT;
            let mut len = 0;
            for tok in surface.split(' ') {
                let next_id = vocab.len() as u32;
                let sym = *vocab.entry(tok.to_owned()).or_insert(next_id);
                state = match nodes[state as usize].child(sym) {
                    Some(s) => s,
                    None => {
                        let s = nodes.len() as u32;
                        nodes.push(Node::new());
                        let children = &mut nodes[state as usize].children;
                        let pos = children.partition_point(|&(c, _)| c < sym);
                        children.insert(pos, (sym, s));
                        s
                    }
                };
                len += 1;
            }
            let idx = patterns.len();
            nodes[state as usize].output = idx as u32;
            by_surface.insert(surface.to_owned(), idx);
            patterns.push(Pattern {
                surface: surface.to_owned(),
                token_len: len,
                categories,
            });
        }

        build_failure_links(&mut nodes);

        Self {
            vocab,
            nodes,
            patterns,
            by_surface,
            lexicon_version: lexicon.version(),
        }
    }

    pub fn patterns(&self) -> &[Pattern] {
        &self.patterns
    }

    pub fn lexicon_version(&self) -> &str {
        &self.lexicon_version
    }

    /// Categories of a canonical surface, if it is a lexical item.
    pub fn categories_for(&self, surface: &str) -> Option<&[String]> {
        self.by_surface
            .get(surface)
            .map(|&i| self.patterns[i].categories.as_slice())
    }

    fn step(&self, mut state: u32, sym: Option<u32>) -> u32 {
        let Some(sym) = sym else {
            return ROOT;
        };
        loop {
            if let Some(next) = self.nodes[state as usize].child(sym) {
                return next;
            }
            if state == ROOT {
                return ROOT;
            }
            state = self.nodes[state as usize].fail;
        }
    }

    /// All occurrences of all patterns, sorted by `(start, end)`.
    pub fn find<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<PatternMatch> {
        let mut out = Vec::new();
        let mut state = ROOT;
        for (i, tok) in tokens.iter().enumerate() {
            state = self.step(state, self.vocab.get(tok.as_ref()).copied());
            let mut node = state;
            if self.nodes[node as usize].output == NONE {
                node = self.nodes[node as usize].dict;
            }
            while node != NONE {
                let pattern = self.nodes[node as usize].output as usize;
                let len = self.patterns[pattern].token_len;
                out.push(PatternMatch {
                    start: i + 1 - len,
                    end: i + 1,
                    pattern,
                });
                node = self.nodes[node as usize].dict;
            }
        }
        out.sort_unstable();
        out
    }

    pub fn is_match<S: AsRef<str>>(&self, tokens: &[S]) -> bool {
        let mut state = ROOT;
        for tok in tokens {
            state = self.step(state, self.vocab.get(tok.as_ref()).copied());
            let n = &self.nodes[state as usize];
            if n.output != NONE || n.dict != NONE {
                return true;
            }
        }
        false
    }
}

fn build_failure_links(nodes: &mut [Node]) {
    let mut queue = VecDeque::new();
    for &(_, child) in &nodes[ROOT as usize].children {
        queue.push_back(child);
    }
    while let Some(state) = queue.pop_front() {
        let children = nodes[state as usize].children.clone();
        for (sym, child) in children {
            let mut f = nodes[state as usize].fail;
            let target = loop {
                if let Some(t) = nodes[f as usize].child(sym) {
                    break t;
                }
                if f == ROOT {
                    break ROOT;
                }
                f = nodes[f as usize].fail;
            };
            nodes[child as usize].fail = target;
            let t = &nodes[target as usize];
            nodes[child as usize].dict = if t.output != NONE { target } else { t.dict };
            queue.push_back(child);
        }
    }
}

#[cfg(test)]
mod tests {
    use std::path::Path;

    use super::*;
    use crate::lexicon::{ItemKind, Schema};
    use crate::text::token_strings;

    fn matcher(lines: &str) -> CompiledMatcher {
        let schema = Schema::parse("amor\tA\nraiva\tR\nmedo\tM\n", Path::new("s")).unwrap();
        let mut lex = Lexicon::new(schema);
        lex.add_from_str(lines, Path::new("l"), ItemKind::Base).unwrap();
        lex.compile()
    }

    #[test]
    fn whole_token_only() {
        let m = matcher("amo\tamor\n");
        let hits = m.find(&token_strings("eu amo isso"));
        assert_eq!(
            hits,
            [PatternMatch {
                start: 1,
                end: 2,
                pattern: 0
            }]
        );
        assert!(m.find(&token_strings("amostra")).is_empty());
        assert!(!m.is_match(&token_strings("amostra")));
    }

    #[test]
    fn overlapping_and_nested_patterns() {
        let m = matcher("a b\tamor\nb\traiva\nb c d\tmedo\nc\tmedo\n");
        let toks = token_strings("a b c d");
        let found: Vec<(usize, usize, &str)> = m
            .find(&toks)
            .iter()
            .map(|h| (h.start, h.end, m.patterns()[h.pattern].surface.as_str()))
            .collect();
        assert_eq!(found, [(0, 2, "a b"), (1, 2, "b"), (1, 4, "b c d"), (2, 3, "c")]);
    }

    #[test]
    fn polysemous_surface_is_one_pattern() {
        let m = matcher("saudade\tamor\nsaudade\traiva\n");
        assert_eq!(m.patterns().len(), 1);
        assert_eq!(m.categories_for("saudade").unwrap(), ["amor", "raiva"]);
        assert!(m.categories_for("sauda").is_none());
    }

    #[test]
    fn failure_links_recover_partial_prefixes() {
        let m = matcher("a a b\tamor\n");
        let hits = m.find(&token_strings("a a a b"));
        assert_eq!(
            hits,
            [PatternMatch {
                start: 1,
                end: 4,
                pattern: 0
            }]
        );
    }

    #[test]
    fn empty_lexicon_matches_nothing() {
        let m = matcher("");
        assert!(m.find(&token_strings("qualquer coisa")).is_empty());
    }
}
