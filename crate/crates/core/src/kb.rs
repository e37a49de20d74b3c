//! WordNet-style knowledge base: synsets, typed relations and a lemma dictionary.
//!
//! The graph is loaded from three TSV files (`synsets.tsv`, `relations.tsv`,
//! `lexicon.tsv`), validated once and then only queried. Synsets are stored in
//! id order, so every derived structure is independent of input line order.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

pub const SYNSETS_FILE: &str = "synsets.tsv";
pub const RELATIONS_FILE: &str = "relations.tsv";
pub const LEXICON_FILE: &str = "lexicon.tsv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pos {
    Noun,
    Verb,
    Adjective,
    Adverb,
}

impl Pos {
    pub fn parse(tag: &str) -> Option<Pos> {
        match tag {
            "n" => Some(Pos::Noun),
            "v" => Some(Pos::Verb),
            "a" => Some(Pos::Adjective),
            "r" => Some(Pos::Adverb),
            _ => None,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Pos::Noun => "n",
            Pos::Verb => "v",
            Pos::Adjective => "a",
            Pos::Adverb => "r",
        }
    }
}

/// Relation labels understood by the loader.
///
/// Everything except [`RelationKind::Lexical`] is semantic; gloss links count
/// as semantic relations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RelationKind {
    Hypernym,
    Hyponym,
    MemberMeronym,
    PartMeronym,
    SubstanceMeronym,
    MemberHolonym,
    PartHolonym,
    SubstanceHolonym,
    Antonym,
    Gloss,
    OtherSemantic,
    Lexical,
}

impl RelationKind {
    pub const ALL: [RelationKind; 12] = [
        RelationKind::Hypernym,
        RelationKind::Hyponym,
        RelationKind::MemberMeronym,
        RelationKind::PartMeronym,
        RelationKind::SubstanceMeronym,
        RelationKind::MemberHolonym,
        RelationKind::PartHolonym,
        RelationKind::SubstanceHolonym,
        RelationKind::Antonym,
        RelationKind::Gloss,
        RelationKind::OtherSemantic,
        RelationKind::Lexical,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RelationKind::Hypernym => "hypernym",
            RelationKind::Hyponym => "hyponym",
            RelationKind::MemberMeronym => "member_meronym",
            RelationKind::PartMeronym => "part_meronym",
            RelationKind::SubstanceMeronym => "substance_meronym",
            RelationKind::MemberHolonym => "member_holonym",
            RelationKind::PartHolonym => "part_holonym",
            RelationKind::SubstanceHolonym => "substance_holonym",
            RelationKind::Antonym => "antonym",
            RelationKind::Gloss => "gloss",
            RelationKind::OtherSemantic => "other_semantic",
            RelationKind::Lexical => "lexical",
        }
    }

    pub fn parse(name: &str) -> Option<RelationKind> {
        RelationKind::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn is_semantic(self) -> bool {
        self != RelationKind::Lexical
    }
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which hypernym path defines a synset's depth when several exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DepthRule {
    /// Fewest edges to any root (WordNet's `min_depth`).
    #[default]
    Shortest,
    /// Most edges to any root.
    Longest,
}

/// One validation problem, tied to the file line that caused it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KbIssue {
    Malformed { file: &'static str, line: usize, reason: String },
    DuplicateSynset { line: usize, id: String },
    MissingEndpoint { file: &'static str, line: usize, id: String },
    CycleInHypernyms { synsets: Vec<String> },
}

impl fmt::Display for KbIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KbIssue::Malformed { file, line, reason } => write!(f, "{file}:{line}: {reason}"),
            KbIssue::DuplicateSynset { line, id } => {
                write!(f, "{SYNSETS_FILE}:{line}: duplicate synset {id}")
            }
            KbIssue::MissingEndpoint { file, line, id } => {
                write!(f, "{file}:{line}: unknown synset {id}")
            }
            KbIssue::CycleInHypernyms { synsets } => {
                write!(f, "hypernym cycle through {} synsets: {}", synsets.len(), synsets.join(", "))
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum KbError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("invalid knowledge base ({} problems):\n{}", .0.len(), format_issues(.0))]
    Invalid(Vec<KbIssue>),
    #[error("unknown synset {0}")]
    UnknownSynset(String),
}

fn format_issues(issues: &[KbIssue]) -> String {
    issues.iter().map(|i| format!("  {i}")).collect::<Vec<_>>().join("\n")
}

impl KbError {
    pub fn issues(&self) -> &[KbIssue] {
        match self {
            KbError::Invalid(issues) => issues,
            _ => &[],
        }
    }
}

/// Unvalidated knowledge-base rows, each tagged with its 1-based source line.
#[derive(Debug, Clone, Default)]
pub struct KbRows {
    pub synsets: Vec<(usize, String, Pos)>,
    pub relations: Vec<(usize, String, RelationKind, String)>,
    pub lexicon: Vec<(usize, String, String)>,
    issues: Vec<KbIssue>,
}

impl KbRows {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn synset(&mut self, id: &str, pos: Pos) -> &mut Self {
        let line = self.synsets.len() + 1;
        self.synsets.push((line, id.to_string(), pos));
        self
    }

    pub fn relation(&mut self, source: &str, kind: RelationKind, target: &str) -> &mut Self {
        let line = self.relations.len() + 1;
        self.relations.push((line, source.to_string(), kind, target.to_string()));
        self
    }

    pub fn lemma(&mut self, lemma: &str, synset: &str) -> &mut Self {
        let line = self.lexicon.len() + 1;
        self.lexicon.push((line, lemma.to_string(), synset.to_string()));
        self
    }

    pub fn build(&self) -> Result<KbGraph, KbError> {
        KbGraph::from_rows(self.clone())
    }
}

/// Immutable, validated knowledge-base graph.
#[derive(Debug, Clone)]
pub struct KbGraph {
    ids: Vec<String>,
    pos: Vec<Pos>,
    id_index: HashMap<String, u32>,
    relations: Vec<(u32, RelationKind, u32)>,
    /// Outgoing semantic (kind, target) pairs, deduplicated.
    semantic_out: Vec<Vec<(RelationKind, u32)>>,
    /// Undirected semantic adjacency without self loops, sorted.
    undirected: Vec<Vec<u32>>,
    parents: Vec<Vec<u32>>,
    depth_shortest: Vec<u32>,
    depth_longest: Vec<u32>,
    lemmas: Vec<String>,
    lemma_index: HashMap<String, u32>,
    lemma_synsets: Vec<Vec<u32>>,
    synset_lemmas: Vec<Vec<u32>>,
    hypernym_edges: usize,
}

impl KbGraph {
    /// Loads and validates the three TSV files.
    pub fn load(
        synsets_path: &Path,
        relations_path: &Path,
        lexicon_path: &Path,
    ) -> Result<KbGraph, KbError> {
        let mut rows = KbRows::new();
        for (line, fields) in read_rows(synsets_path, SYNSETS_FILE, 2, &mut rows.issues)? {
            match Pos::parse(&fields[1]) {
                Some(pos) => rows.synsets.push((line, fields[0].clone(), pos)),
                None => rows.issues.push(KbIssue::Malformed {
                    file: SYNSETS_FILE,
                    line,
                    reason: format!("unknown part of speech {:?}", fields[1]),
                }),
            }
        }
        for (line, fields) in read_rows(relations_path, RELATIONS_FILE, 3, &mut rows.issues)? {
            let kind = RelationKind::parse(&fields[1]).unwrap_or_else(|| {
                log::warn!(
                    "{RELATIONS_FILE}:{line}: unknown relation {:?}, loaded as other_semantic",
                    fields[1]
                );
                RelationKind::OtherSemantic
            });
            rows.relations.push((line, fields[0].clone(), kind, fields[2].clone()));
        }
        for (line, fields) in read_rows(lexicon_path, LEXICON_FILE, 2, &mut rows.issues)? {
            rows.lexicon.push((line, fields[0].clone(), fields[1].clone()));
        }
        KbGraph::from_rows(rows)
    }

    /// Loads `synsets.tsv`, `relations.tsv` and `lexicon.tsv` from one directory.
    pub fn load_dir(dir: &Path) -> Result<KbGraph, KbError> {
        KbGraph::load(&dir.join(SYNSETS_FILE), &dir.join(RELATIONS_FILE), &dir.join(LEXICON_FILE))
    }

    fn from_rows(rows: KbRows) -> Result<KbGraph, KbError> {
        let mut issues = rows.issues;

        let mut first_line: HashMap<&str, usize> = HashMap::new();
        let mut entries: Vec<(&str, Pos)> = Vec::with_capacity(rows.synsets.len());
        for (line, id, pos) in &rows.synsets {
            if id.is_empty() {
                issues.push(KbIssue::Malformed {
                    file: SYNSETS_FILE,
                    line: *line,
                    reason: "empty synset id".into(),
                });
                continue;
            }
            if first_line.insert(id, *line).is_some() {
                issues.push(KbIssue::DuplicateSynset { line: *line, id: id.clone() });
                continue;
            }
            entries.push((id, *pos));
        }
        entries.sort_unstable();
        let ids: Vec<String> = entries.iter().map(|(id, _)| id.to_string()).collect();
        let pos: Vec<Pos> = entries.iter().map(|(_, p)| *p).collect();
        let id_index: HashMap<String, u32> =
            ids.iter().enumerate().map(|(i, id)| (id.clone(), i as u32)).collect();
        let n = ids.len();

        let resolve = |file: &'static str, line: usize, id: &str, issues: &mut Vec<KbIssue>| {
            let found = id_index.get(id).copied();
            if found.is_none() {
                issues.push(KbIssue::MissingEndpoint { file, line, id: id.to_string() });
            }
            found
        };

        let mut relations = Vec::with_capacity(rows.relations.len());
        for (line, src, kind, tgt) in &rows.relations {
            let s = resolve(RELATIONS_FILE, *line, src, &mut issues);
            let t = resolve(RELATIONS_FILE, *line, tgt, &mut issues);
            if let (Some(s), Some(t)) = (s, t) {
                relations.push((s, *kind, t));
            }
        }

        let mut lexicon_pairs: Vec<(String, u32)> = Vec::with_capacity(rows.lexicon.len());
        for (line, lemma, sid) in &rows.lexicon {
            if lemma.is_empty() {
                issues.push(KbIssue::Malformed {
                    file: LEXICON_FILE,
                    line: *line,
                    reason: "empty lemma".into(),
                });
                continue;
            }
            if let Some(s) = resolve(LEXICON_FILE, *line, sid, &mut issues) {
                lexicon_pairs.push((lemma.clone(), s));
            }
        }

        if !issues.is_empty() {
            return Err(KbError::Invalid(issues));
        }

        let mut parent_sets: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); n];
        let mut semantic_sets: Vec<BTreeSet<(RelationKind, u32)>> = vec![BTreeSet::new(); n];
        let mut undirected_sets: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); n];
        for &(s, kind, t) in &relations {
            match kind {
                RelationKind::Hypernym => {
                    parent_sets[s as usize].insert(t);
                }
                RelationKind::Hyponym => {
                    parent_sets[t as usize].insert(s);
                }
                _ => {}
            }
            if kind.is_semantic() {
                semantic_sets[s as usize].insert((kind, t));
                if s != t {
                    undirected_sets[s as usize].insert(t);
                    undirected_sets[t as usize].insert(s);
                }
            }
        }
        let parents: Vec<Vec<u32>> = parent_sets.into_iter().map(|p| p.into_iter().collect()).collect();
        let hypernym_edges = parents.iter().map(Vec::len).sum();

        let (depth_shortest, depth_longest) = match hypernym_depths(&parents) {
            Ok(d) => d,
            Err(cyclic) => {
                let synsets = cyclic.into_iter().map(|i| ids[i as usize].clone()).collect();
                return Err(KbError::Invalid(vec![KbIssue::CycleInHypernyms { synsets }]));
            }
        };

        let mut seen_pairs = std::collections::HashSet::new();
        let mut lemma_ids: Vec<&str> = lexicon_pairs.iter().map(|(l, _)| l.as_str()).collect();
        lemma_ids.sort_unstable();
        lemma_ids.dedup();
        let lemmas: Vec<String> = lemma_ids.iter().map(|l| l.to_string()).collect();
        let lemma_index: HashMap<String, u32> =
            lemmas.iter().enumerate().map(|(i, l)| (l.clone(), i as u32)).collect();
        let mut lemma_synsets = vec![Vec::new(); lemmas.len()];
        let mut synset_lemmas = vec![Vec::new(); n];
        for (lemma, s) in &lexicon_pairs {
            let l = lemma_index[lemma];
            if !seen_pairs.insert((l, *s)) {
                continue;
            }
            lemma_synsets[l as usize].push(*s);
            synset_lemmas[*s as usize].push(l);
        }
        for list in &mut lemma_synsets {
            list.sort_unstable();
        }

        Ok(KbGraph {
            ids,
            pos,
            id_index,
            relations,
            semantic_out: semantic_sets.into_iter().map(|s| s.into_iter().collect()).collect(),
            undirected: undirected_sets.into_iter().map(|s| s.into_iter().collect()).collect(),
            parents,
            depth_shortest,
            depth_longest,
            lemmas,
            lemma_index,
            lemma_synsets,
            synset_lemmas,
            hypernym_edges,
        })
    }

    pub fn synset_count(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }

    /// Number of distinct (child, parent) hypernym links, counting hyponym
    /// rows in reverse.
    pub fn hypernym_edge_count(&self) -> usize {
        self.hypernym_edges
    }

    /// Synsets with no hypernym.
    pub fn roots(&self) -> Vec<&str> {
        (0..self.ids.len())
            .filter(|&i| self.parents[i].is_empty())
            .map(|i| self.ids[i].as_str())
            .collect()
    }

    /// Number of distinct lemma strings.
    pub fn lemma_count(&self) -> usize {
        self.lemmas.len()
    }

    /// Number of distinct (lemma, synset) pairs.
    pub fn lexicon_entry_count(&self) -> usize {
        self.synset_lemmas.iter().map(Vec::len).sum()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.id_index.contains_key(id)
    }

    pub fn pos_of(&self, id: &str) -> Result<Pos, KbError> {
        Ok(self.pos[self.index_of(id)? as usize])
    }

    /// Sorted ids of every synset listing `lemma`; empty for unknown lemmas.
    pub fn synsets_of(&self, lemma: &str) -> Vec<&str> {
        self.lemma_index
            .get(lemma)
            .map(|&l| {
                self.lemma_synsets[l as usize].iter().map(|&s| self.ids[s as usize].as_str()).collect()
            })
            .unwrap_or_default()
    }

    /// Lemmas of a synset in lexicon-file order.
    pub fn lemmas_of(&self, id: &str) -> Result<Vec<&str>, KbError> {
        let s = self.index_of(id)?;
        Ok(self.synset_lemmas[s as usize].iter().map(|&l| self.lemmas[l as usize].as_str()).collect())
    }

    /// First-degree semantic relations leaving `id`, one entry per distinct
    /// (kind, target) pair.
    pub fn semantic_neighbors(&self, id: &str) -> Result<Vec<(RelationKind, &str)>, KbError> {
        let s = self.index_of(id)?;
        Ok(self.semantic_out[s as usize]
            .iter()
            .map(|&(k, t)| (k, self.ids[t as usize].as_str()))
            .collect())
    }

    /// Depth under the default [`DepthRule::Shortest`].
    pub fn hypernym_depth(&self, id: &str) -> Result<usize, KbError> {
        self.hypernym_depth_with(id, DepthRule::default())
    }

    pub fn hypernym_depth_with(&self, id: &str, rule: DepthRule) -> Result<usize, KbError> {
        let s = self.index_of(id)? as usize;
        Ok(match rule {
            DepthRule::Shortest => self.depth_shortest[s],
            DepthRule::Longest => self.depth_longest[s],
        } as usize)
    }

    /// Direct hypernyms of `id`.
    pub fn hypernyms(&self, id: &str) -> Result<Vec<&str>, KbError> {
        let s = self.index_of(id)?;
        Ok(self.parents[s as usize].iter().map(|&p| self.ids[p as usize].as_str()).collect())
    }

    /// Single-word lemmas of noun synsets with at least `min_len` characters,
    /// sorted.
    pub fn single_word_nouns(&self, min_len: usize) -> Vec<&str> {
        self.single_word_lemmas(min_len, Some(Pos::Noun))
    }

    /// Single-word lemmas with at least `min_len` characters attached to a
    /// synset of `pos` (any part of speech when `None`), sorted.
    pub fn single_word_lemmas(&self, min_len: usize, pos: Option<Pos>) -> Vec<&str> {
        self.lemmas
            .iter()
            .enumerate()
            .filter(|(l, lemma)| {
                !is_multiword(lemma)
                    && lemma.chars().count() >= min_len
                    && self.lemma_synsets[*l]
                        .iter()
                        .any(|&s| pos.is_none_or(|p| self.pos[s as usize] == p))
            })
            .map(|(_, lemma)| lemma.as_str())
            .collect()
    }

    /// Writes the graph as canonically sorted TSV files into `dir`.
    pub fn save_dir(&self, dir: &Path) -> io::Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut syn = BufWriter::new(File::create(dir.join(SYNSETS_FILE))?);
        let mut rel = BufWriter::new(File::create(dir.join(RELATIONS_FILE))?);
        let mut lex = BufWriter::new(File::create(dir.join(LEXICON_FILE))?);
        self.write_tsv(&mut syn, &mut rel, &mut lex)?;
        syn.flush()?;
        rel.flush()?;
        lex.flush()
    }

    pub fn write_tsv(
        &self,
        synsets: &mut impl Write,
        relations: &mut impl Write,
        lexicon: &mut impl Write,
    ) -> io::Result<()> {
        for (id, pos) in self.ids.iter().zip(&self.pos) {
            writeln!(synsets, "{id}\t{}", pos.tag())?;
        }
        let mut rels: Vec<(&str, &str, &str)> = self
            .relations
            .iter()
            .map(|&(s, k, t)| (self.ids[s as usize].as_str(), k.name(), self.ids[t as usize].as_str()))
            .collect();
        rels.sort_unstable();
        for (s, k, t) in rels {
            writeln!(relations, "{s}\t{k}\t{t}")?;
        }
        for (l, lemma) in self.lemmas.iter().enumerate() {
            for &s in &self.lemma_synsets[l] {
                writeln!(lexicon, "{lemma}\t{}", self.ids[s as usize])?;
            }
        }
        Ok(())
    }

    // Index-level accessors for the walker and feature extractors.

    pub(crate) fn index_of(&self, id: &str) -> Result<u32, KbError> {
        self.id_index.get(id).copied().ok_or_else(|| KbError::UnknownSynset(id.to_string()))
    }

    pub(crate) fn lemma(&self, l: u32) -> &str {
        &self.lemmas[l as usize]
    }

    pub(crate) fn lemma_id(&self, lemma: &str) -> Option<u32> {
        self.lemma_index.get(lemma).copied()
    }

    pub(crate) fn lemma_synset_indices(&self, l: u32) -> &[u32] {
        &self.lemma_synsets[l as usize]
    }

    pub(crate) fn synset_lemma_indices(&self, s: u32) -> &[u32] {
        &self.synset_lemmas[s as usize]
    }

    pub(crate) fn undirected_neighbors(&self, s: u32) -> &[u32] {
        &self.undirected[s as usize]
    }

    pub(crate) fn semantic_degree(&self, s: u32) -> usize {
        self.semantic_out[s as usize].len()
    }

    pub(crate) fn depth_index(&self, s: u32, rule: DepthRule) -> u32 {
        match rule {
            DepthRule::Shortest => self.depth_shortest[s as usize],
            DepthRule::Longest => self.depth_longest[s as usize],
        }
    }

    pub(crate) fn pos_index(&self, s: u32) -> Pos {
        self.pos[s as usize]
    }
}

/// `_` and space both mark multiword expressions in wordnet exports.
pub fn is_multiword(lemma: &str) -> bool {
    lemma.contains(['_', ' '])
}

/// Shortest and longest path lengths to a root, or the synsets left on a
/// cycle when the hypernym graph is not a DAG.
fn hypernym_depths(parents: &[Vec<u32>]) -> Result<(Vec<u32>, Vec<u32>), Vec<u32>> {
    let n = parents.len();
    let mut children: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut pending: Vec<usize> = parents.iter().map(Vec::len).collect();
    for (c, ps) in parents.iter().enumerate() {
        for &p in ps {
            children[p as usize].push(c as u32);
        }
    }
    let mut shortest = vec![u32::MAX; n];
    let mut longest = vec![0u32; n];
    let mut queue: Vec<u32> = (0..n as u32).filter(|&i| pending[i as usize] == 0).collect();
    for &r in &queue {
        shortest[r as usize] = 0;
    }
    let mut head = 0;
    while head < queue.len() {
        let p = queue[head] as usize;
        head += 1;
        for &c in &children[p] {
            let c = c as usize;
            shortest[c] = shortest[c].min(shortest[p] + 1);
            longest[c] = longest[c].max(longest[p] + 1);
            pending[c] -= 1;
            if pending[c] == 0 {
                queue.push(c as u32);
            }
        }
    }
    if queue.len() < n {
        return Err((0..n as u32).filter(|&i| pending[i as usize] > 0).collect());
    }
    Ok((shortest, longest))
}

fn read_rows(
    path: &Path,
    file: &'static str,
    columns: usize,
    issues: &mut Vec<KbIssue>,
) -> Result<Vec<(usize, Vec<String>)>, KbError> {
    let io_err = |source| KbError::Io { path: path.to_path_buf(), source };
    let reader = BufReader::new(File::open(path).map_err(io_err)?);
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err)?;
        let lineno = i + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<String> = line.split('\t').map(str::to_string).collect();
        if fields.len() != columns {
            issues.push(KbIssue::Malformed {
                file,
                line: lineno,
                reason: format!("expected {columns} tab-separated fields, found {}", fields.len()),
            });
            continue;
        }
        rows.push((lineno, fields));
    }
    Ok(rows)
}
