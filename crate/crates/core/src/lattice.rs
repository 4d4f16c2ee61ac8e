//! Morphological analysis lattices.
//!
//! A sentence lattice is factored per token: each token offers a list of
//! candidate analyses, and every full path picks exactly one analysis per
//! token. Node numbering (used by the lattice file format) places token
//! boundary nodes between tokens and allocates fresh segment boundary
//! nodes inside each multi-morpheme analysis.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::domain::{Morpheme, MultiLabel, Token};
use crate::error::{Error, Result};

/// POS given to whole-token fallback analyses.
pub const UNKNOWN_POS: &str = "UNK";

/// A morpheme template: surface form and POS without token ownership.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Segment {
    pub form: String,
    pub pos: String,
}

impl Segment {
    pub fn new(form: impl Into<String>, pos: impl Into<String>) -> Self {
        Segment {
            form: form.into(),
            pos: pos.into(),
        }
    }
}

/// One candidate decomposition of a single token.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Analysis {
    morphemes: Vec<Morpheme>,
}

impl Analysis {
    pub fn from_segments(token_index: usize, segments: &[Segment]) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::Empty("analysis"));
        }
        let morphemes = segments
            .iter()
            .enumerate()
            .map(|(slot, s)| Morpheme::new(s.form.clone(), s.pos.clone(), token_index, slot))
            .collect::<Result<Vec<_>>>()?;
        Ok(Analysis { morphemes })
    }

    pub fn morphemes(&self) -> &[Morpheme] {
        &self.morphemes
    }

    pub fn len(&self) -> usize {
        self.morphemes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.morphemes.is_empty()
    }

    pub fn segments(&self) -> Vec<Segment> {
        self.morphemes
            .iter()
            .map(|m| Segment::new(m.form.clone(), m.pos.clone()))
            .collect()
    }

    fn key(&self) -> Vec<(&str, &str)> {
        self.morphemes
            .iter()
            .map(|m| (m.form.as_str(), m.pos.as_str()))
            .collect()
    }
}

/// The candidate analyses of one token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenLattice {
    pub token_index: usize,
    /// Surface form, when the lattice was built from tokens.
    pub surface: Option<String>,
    analyses: Vec<Analysis>,
}

impl TokenLattice {
    /// Builds a token lattice, dropping repeated analyses while keeping
    /// first-seen order.
    pub fn new(token_index: usize, surface: Option<String>, analyses: Vec<Analysis>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut unique = Vec::with_capacity(analyses.len());
        for a in analyses {
            if a.morphemes.iter().any(|m| m.token_index != token_index) {
                return Err(Error::invalid(
                    "analysis",
                    format!("morpheme owned by another token than {token_index}"),
                ));
            }
            if seen.insert(
                a.key()
                    .into_iter()
                    .map(|(f, p)| (f.to_string(), p.to_string()))
                    .collect::<Vec<_>>(),
            ) {
                unique.push(a);
            }
        }
        if unique.is_empty() {
            return Err(Error::Empty("token lattice"));
        }
        Ok(TokenLattice {
            token_index,
            surface,
            analyses: unique,
        })
    }

    pub fn analyses(&self) -> &[Analysis] {
        &self.analyses
    }
}

/// Lattice over a whole sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceLattice {
    tokens: Vec<TokenLattice>,
}

/// An edge of the node-level view of a lattice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub morpheme: Morpheme,
}

impl SentenceLattice {
    pub fn new(tokens: Vec<TokenLattice>) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::Empty("lattice"));
        }
        for (i, t) in tokens.iter().enumerate() {
            if t.token_index != i {
                return Err(Error::invalid(
                    "token lattice index",
                    format!("{} at {i}", t.token_index),
                ));
            }
        }
        Ok(SentenceLattice { tokens })
    }

    pub fn tokens(&self) -> &[TokenLattice] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Number of full paths, saturating at `u128::MAX`.
    pub fn path_count(&self) -> u128 {
        self.tokens
            .iter()
            .fold(1u128, |acc, t| acc.saturating_mul(t.analyses.len() as u128))
    }

    /// Morphemes of the path that takes analysis `choices[t]` at token `t`.
    pub fn path(&self, choices: &[usize]) -> Vec<Morpheme> {
        self.tokens
            .iter()
            .zip(choices)
            .flat_map(|(t, &c)| t.analyses[c].morphemes.iter().cloned())
            .collect()
    }

    /// Node-level edges. Node 0 is the sentence start; each token's
    /// segment boundary nodes are numbered before its closing token
    /// boundary node.
    pub fn edges(&self) -> Vec<Edge> {
        let mut edges = Vec::new();
        let mut start = 0;
        let mut next = 1;
        for t in &self.tokens {
            let internal: usize = t.analyses.iter().map(|a| a.len() - 1).sum();
            let end = next + internal;
            for a in &t.analyses {
                let mut from = start;
                for (i, m) in a.morphemes.iter().enumerate() {
                    let to = if i + 1 == a.len() {
                        end
                    } else {
                        let n = next;
                        next += 1;
                        n
                    };
                    edges.push(Edge {
                        from,
                        to,
                        morpheme: m.clone(),
                    });
                    from = to;
                }
            }
            start = end;
            next = end + 1;
        }
        edges
    }

    /// Rebuilds a lattice from node-level edges. Each token's analyses are
    /// the paths from its first to its last node, in edge order.
    pub fn from_edges(edges: &[Edge]) -> Result<Self> {
        let token_count = edges.iter().map(|e| e.morpheme.token_index + 1).max().unwrap_or(0);
        let mut groups: Vec<Vec<&Edge>> = vec![Vec::new(); token_count];
        for e in edges {
            groups[e.morpheme.token_index].push(e);
        }
        let mut tokens = Vec::with_capacity(token_count);
        let mut prev_end: Option<usize> = None;
        for (t, group) in groups.iter().enumerate() {
            if group.is_empty() {
                return Err(Error::invalid("lattice", format!("token {} has no edges", t + 1)));
            }
            let froms: BTreeSet<usize> = group.iter().map(|e| e.from).collect();
            let tos: BTreeSet<usize> = group.iter().map(|e| e.to).collect();
            let starts: Vec<usize> = froms.difference(&tos).copied().collect();
            let ends: Vec<usize> = tos.difference(&froms).copied().collect();
            let (&[start], &[end]) = (starts.as_slice(), ends.as_slice()) else {
                return Err(Error::invalid(
                    "lattice",
                    format!("token {} does not have a single entry and exit node", t + 1),
                ));
            };
            if let Some(p) = prev_end {
                if p != start {
                    return Err(Error::invalid(
                        "lattice",
                        format!("token {} starts at node {start}, previous token ends at {p}", t + 1),
                    ));
                }
            }
            prev_end = Some(end);

            let mut out: HashMap<usize, Vec<&Edge>> = HashMap::new();
            for e in group {
                out.entry(e.from).or_default().push(e);
            }
            let mut analyses = Vec::new();
            let mut stack: Vec<Segment> = Vec::new();
            collect_paths(start, end, &out, &mut stack, &mut analyses, group.len())?;
            let analyses = analyses
                .iter()
                .map(|segs| Analysis::from_segments(t, segs))
                .collect::<Result<Vec<_>>>()?;
            tokens.push(TokenLattice::new(t, None, analyses)?);
        }
        SentenceLattice::new(tokens)
    }
}

fn collect_paths(
    node: usize,
    end: usize,
    out: &HashMap<usize, Vec<&Edge>>,
    stack: &mut Vec<Segment>,
    paths: &mut Vec<Vec<Segment>>,
    max_depth: usize,
) -> Result<()> {
    if node == end {
        paths.push(stack.clone());
        return Ok(());
    }
    if stack.len() >= max_depth {
        return Err(Error::invalid("lattice", "cycle among token edges"));
    }
    for e in out.get(&node).map(Vec::as_slice).unwrap_or_default() {
        stack.push(Segment::new(e.morpheme.form.clone(), e.morpheme.pos.clone()));
        collect_paths(e.to, end, out, stack, paths, max_depth)?;
        stack.pop();
    }
    Ok(())
}

/// Surface forms mapped to their listed analyses, plus splittable
/// prefixes.
///
/// Listed analyses need not concatenate back to the surface form.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    entries: HashMap<String, Vec<Vec<Segment>>>,
    prefixes: Vec<Segment>,
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an analysis for `surface`; exact repeats are ignored.
    pub fn add(&mut self, surface: impl Into<String>, analysis: Vec<Segment>) -> Result<()> {
        if analysis.is_empty() {
            return Err(Error::Empty("lexicon analysis"));
        }
        let list = self.entries.entry(surface.into()).or_default();
        if !list.contains(&analysis) {
            list.push(analysis);
        }
        Ok(())
    }

    /// Registers a prefix that may be peeled off a token whose remainder
    /// is analyzable. Prefixes are tried in registration order.
    pub fn add_prefix(&mut self, prefix: Segment) {
        if !self.prefixes.contains(&prefix) {
            self.prefixes.push(prefix);
        }
    }

    pub fn get(&self, surface: &str) -> Option<&[Vec<Segment>]> {
        self.entries.get(surface).map(Vec::as_slice)
    }

    pub fn prefixes(&self) -> &[Segment] {
        &self.prefixes
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty() && self.prefixes.is_empty()
    }

    /// Entries sorted by surface form.
    pub fn entries(&self) -> Vec<(&str, &[Vec<Segment>])> {
        let mut v: Vec<_> = self.entries.iter().map(|(k, a)| (k.as_str(), a.as_slice())).collect();
        v.sort_by(|a, b| a.0.cmp(b.0));
        v
    }

    fn candidates(&self, surface: &str) -> Vec<Vec<Segment>> {
        let mut out: Vec<Vec<Segment>> = self.get(surface).map(<[_]>::to_vec).unwrap_or_default();
        for prefix in &self.prefixes {
            let Some(rest) = surface.strip_prefix(prefix.form.as_str()) else {
                continue;
            };
            if rest.is_empty() || prefix.form.is_empty() {
                continue;
            }
            for tail in self.candidates(rest) {
                let mut a = Vec::with_capacity(tail.len() + 1);
                a.push(prefix.clone());
                a.extend(tail);
                out.push(a);
            }
        }
        out
    }
}

/// Builds the lattice of candidate analyses for a token sequence.
///
/// Each token gets its lexicon analyses, then analyses from peeling
/// registered prefixes off forms whose remainder is analyzable. Tokens
/// with neither get a single whole-token analysis tagged [`UNKNOWN_POS`].
pub fn analyze(tokens: &[Token], lexicon: &Lexicon) -> Result<SentenceLattice> {
    if tokens.is_empty() {
        return Err(Error::Empty("token sequence"));
    }
    let mut lattices = Vec::with_capacity(tokens.len());
    for (i, token) in tokens.iter().enumerate() {
        let mut candidates = lexicon.candidates(&token.form);
        if candidates.is_empty() {
            candidates.push(vec![Segment::new(token.form.clone(), UNKNOWN_POS)]);
        }
        let analyses = candidates
            .iter()
            .map(|segs| Analysis::from_segments(i, segs))
            .collect::<Result<Vec<_>>>()?;
        lattices.push(TokenLattice::new(i, Some(token.form.clone()), analyses)?);
    }
    SentenceLattice::new(lattices)
}

/// Enumerates up to `cap` full paths, varying the last token fastest.
pub fn enumerate_paths(lattice: &SentenceLattice, cap: usize) -> Vec<Vec<Morpheme>> {
    enumerate_choices(lattice, cap)
        .iter()
        .map(|c| lattice.path(c))
        .collect()
}

/// Like [`enumerate_paths`], returning the per-token analysis indices.
pub fn enumerate_choices(lattice: &SentenceLattice, cap: usize) -> Vec<Vec<usize>> {
    let sizes: Vec<usize> = lattice.tokens.iter().map(|t| t.analyses.len()).collect();
    let mut out = Vec::new();
    if cap == 0 {
        return out;
    }
    let mut choice = vec![0usize; sizes.len()];
    loop {
        out.push(choice.clone());
        if out.len() >= cap {
            return out;
        }
        let mut pos = sizes.len();
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            choice[pos] += 1;
            if choice[pos] < sizes[pos] {
                break;
            }
            choice[pos] = 0;
        }
    }
}

/// Result of [`prune`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pruned {
    pub lattice: SentenceLattice,
    /// Tokens for which no analysis had the required morpheme count, so
    /// their full analysis set was kept.
    pub fallback_tokens: Vec<usize>,
}

/// Keeps, for each token, only analyses whose morpheme count equals the
/// length of the token's multi-label.
pub fn prune(lattice: &SentenceLattice, multilabels: &[MultiLabel]) -> Result<Pruned> {
    if multilabels.len() != lattice.len() {
        return Err(Error::LengthMismatch {
            left: multilabels.len(),
            right: lattice.len(),
            context: "multi-labels vs lattice tokens",
        });
    }
    let mut fallback_tokens = Vec::new();
    let mut tokens = Vec::with_capacity(lattice.len());
    for (t, ml) in lattice.tokens.iter().zip(multilabels) {
        let kept: Vec<Analysis> = t.analyses.iter().filter(|a| a.len() == ml.len()).cloned().collect();
        if kept.is_empty() {
            fallback_tokens.push(t.token_index);
            tokens.push(t.clone());
        } else {
            tokens.push(TokenLattice {
                token_index: t.token_index,
                surface: t.surface.clone(),
                analyses: kept,
            });
        }
    }
    Ok(Pruned {
        lattice: SentenceLattice { tokens },
        fallback_tokens,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::tokens_from_forms;

    fn seg(spec: &str) -> Vec<Segment> {
        spec.split('+')
            .map(|p| {
                let (f, pos) = p.split_once('/').unwrap();
                Segment::new(f, pos)
            })
            .collect()
    }

    fn lbny_lexicon() -> Lexicon {
        let mut lex = Lexicon::new();
        // livni; le+beny; li+bn+y; livney
        lex.add("lbny", seg("lbny/NNP")).unwrap();
        lex.add("lbny", seg("l/IN+bny/NNP")).unwrap();
        lex.add("lbny", seg("lbnh/NN+y/PRP")).unwrap();
        lex.add("lbny", seg("l/IN+bn/NN+y/PRP")).unwrap();
        lex
    }

    fn labayit_lexicon() -> Lexicon {
        let mut lex = Lexicon::new();
        lex.add("labayit", seg("le/IN+ha/DET+bayit/NN")).unwrap();
        lex.add("labayit", seg("le/IN+bayit/NN")).unwrap();
        lex.add("halavan", seg("ha/DET+lavan/JJ")).unwrap();
        lex.add("halavan", seg("halavan/NNP")).unwrap();
        lex.add("hamerotz", seg("ha/DET+merotz/NN")).unwrap();
        lex
    }

    #[test]
    fn analyze_uses_lexicon_entries() {
        let tokens = tokens_from_forms(&["labayit"]).unwrap();
        let lattice = analyze(&tokens, &labayit_lexicon()).unwrap();
        let lens: Vec<usize> = lattice.tokens()[0].analyses().iter().map(Analysis::len).collect();
        assert_eq!(lens, vec![3, 2]);
    }

    #[test]
    fn analyze_falls_back_to_whole_token() {
        let tokens = tokens_from_forms(&["qwz"]).unwrap();
        let lattice = analyze(&tokens, &Lexicon::new()).unwrap();
        let analyses = lattice.tokens()[0].analyses();
        assert_eq!(analyses.len(), 1);
        assert_eq!(analyses[0].segments(), seg("qwz/UNK"));
    }

    #[test]
    fn analyze_lbny_four_readings() {
        let tokens = tokens_from_forms(&["lbny"]).unwrap();
        let lattice = analyze(&tokens, &lbny_lexicon()).unwrap();
        let mut lens: Vec<usize> = lattice.tokens()[0].analyses().iter().map(Analysis::len).collect();
        lens.sort();
        assert_eq!(lens, vec![1, 2, 2, 3]);
    }

    #[test]
    fn analyze_peels_prefixes() {
        let mut lex = Lexicon::new();
        lex.add("bayit", seg("bayit/NN")).unwrap();
        lex.add_prefix(Segment::new("le", "IN"));
        lex.add_prefix(Segment::new("ve", "CC"));
        let tokens = tokens_from_forms(&["velebayit", "lebayit", "le"]).unwrap();
        let lattice = analyze(&tokens, &lex).unwrap();
        assert_eq!(
            lattice.tokens()[0].analyses()[0].segments(),
            seg("ve/CC+le/IN+bayit/NN")
        );
        assert_eq!(lattice.tokens()[1].analyses()[0].segments(), seg("le/IN+bayit/NN"));
        // nothing left after peeling: fallback
        assert_eq!(lattice.tokens()[2].analyses()[0].segments(), seg("le/UNK"));
    }

    #[test]
    fn analyses_are_deduplicated() {
        let mut lex = Lexicon::new();
        lex.add("lebayit", seg("le/IN+bayit/NN")).unwrap();
        lex.add("bayit", seg("bayit/NN")).unwrap();
        lex.add_prefix(Segment::new("le", "IN"));
        let tokens = tokens_from_forms(&["lebayit"]).unwrap();
        let lattice = analyze(&tokens, &lex).unwrap();
        assert_eq!(lattice.tokens()[0].analyses().len(), 1);
    }

    #[test]
    fn analyze_rejects_empty_input() {
        assert!(analyze(&[], &Lexicon::new()).is_err());
    }

    fn sized_lattice(sizes: &[usize]) -> SentenceLattice {
        let tokens = sizes
            .iter()
            .enumerate()
            .map(|(t, &n)| {
                let analyses = (0..n)
                    .map(|a| {
                        let segs: Vec<Segment> = (0..=a).map(|k| Segment::new(format!("t{t}a{a}m{k}"), "X")).collect();
                        Analysis::from_segments(t, &segs).unwrap()
                    })
                    .collect();
                TokenLattice::new(t, None, analyses).unwrap()
            })
            .collect();
        SentenceLattice::new(tokens).unwrap()
    }

    #[test]
    fn path_enumeration_follows_product_rule() {
        let lattice = sized_lattice(&[1, 2, 2]);
        assert_eq!(lattice.path_count(), 4);
        let choices = enumerate_choices(&lattice, 100);
        assert_eq!(
            choices,
            vec![vec![0, 0, 0], vec![0, 0, 1], vec![0, 1, 0], vec![0, 1, 1]]
        );
        assert_eq!(enumerate_paths(&sized_lattice(&[1, 1, 1]), 10).len(), 1);
        assert_eq!(enumerate_paths(&lattice, 3).len(), 3);
    }

    #[test]
    fn labayit_halavan_paths_are_cross_product() {
        let tokens = tokens_from_forms(&["labayit", "halavan"]).unwrap();
        let lattice = analyze(&tokens, &labayit_lexicon()).unwrap();
        let paths: Vec<String> = enumerate_paths(&lattice, 100)
            .iter()
            .map(|p| p.iter().map(|m| m.form.as_str()).collect::<Vec<_>>().join(" "))
            .collect();
        assert_eq!(
            paths,
            vec![
                "le ha bayit ha lavan",
                "le ha bayit halavan",
                "le bayit ha lavan",
                "le bayit halavan",
            ]
        );
    }

    #[test]
    fn prune_keeps_matching_lengths() {
        let lattice = sized_lattice(&[3]);
        let two: MultiLabel = "O^O".parse().unwrap();
        let pruned = prune(&lattice, &[two]).unwrap();
        assert!(pruned.fallback_tokens.is_empty());
        let lens: Vec<usize> = pruned.lattice.tokens()[0]
            .analyses()
            .iter()
            .map(Analysis::len)
            .collect();
        assert_eq!(lens, vec![2]);
    }

    #[test]
    fn prune_single_analysis_unchanged() {
        let lattice = sized_lattice(&[1]);
        let pruned = prune(&lattice, &["O".parse().unwrap()]).unwrap();
        assert_eq!(pruned.lattice, lattice);
        assert!(pruned.fallback_tokens.is_empty());
    }

    #[test]
    fn prune_falls_back_when_nothing_matches() {
        let lattice = sized_lattice(&[3, 1]);
        let four: MultiLabel = "O^O^O^O".parse().unwrap();
        let pruned = prune(&lattice, &[four, "O".parse().unwrap()]).unwrap();
        assert_eq!(pruned.fallback_tokens, vec![0]);
        assert_eq!(pruned.lattice, lattice);
    }

    #[test]
    fn prune_length_mismatch() {
        assert!(prune(&sized_lattice(&[1, 1]), &["O".parse().unwrap()]).is_err());
    }

    #[test]
    fn edges_round_trip() {
        let tokens = tokens_from_forms(&["hamerotz", "labayit", "halavan", "qwz"]).unwrap();
        let lattice = analyze(&tokens, &labayit_lexicon()).unwrap();
        let edges = lattice.edges();
        // token boundaries are shared between adjacent tokens
        assert_eq!(edges[0].from, 0);
        let back = SentenceLattice::from_edges(&edges).unwrap();
        for (a, b) in back.tokens().iter().zip(lattice.tokens()) {
            assert_eq!(a.analyses(), b.analyses());
        }
    }

    #[test]
    fn from_edges_handles_shared_internal_nodes() {
        // l/IN then either bny/NNP or bn/NN+y/PRP, sharing node 1
        let m = |f: &str, p: &str, slot| Morpheme::new(f, p, 0, slot).unwrap();
        let edges = vec![
            Edge {
                from: 0,
                to: 1,
                morpheme: m("l", "IN", 0),
            },
            Edge {
                from: 1,
                to: 3,
                morpheme: m("bny", "NNP", 1),
            },
            Edge {
                from: 1,
                to: 2,
                morpheme: m("bn", "NN", 1),
            },
            Edge {
                from: 2,
                to: 3,
                morpheme: m("y", "PRP", 2),
            },
            Edge {
                from: 0,
                to: 3,
                morpheme: m("lbny", "NNP", 0),
            },
        ];
        let lattice = SentenceLattice::from_edges(&edges).unwrap();
        let analyses: Vec<Vec<Segment>> = lattice.tokens()[0].analyses().iter().map(Analysis::segments).collect();
        assert_eq!(
            analyses,
            vec![seg("l/IN+bny/NNP"), seg("l/IN+bn/NN+y/PRP"), seg("lbny/NNP")]
        );
    }
}
