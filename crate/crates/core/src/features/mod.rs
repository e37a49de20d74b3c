//! Per-noun psycholinguistic features: concreteness (CNC), Zipf frequency
//! (FRQ), semantic neighbourhood density (SND) and phonological
//! neighbourhood density (PND).

pub mod pnd;

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, BufRead, BufReader, Read, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::TokenCounts;
use crate::kb::{DepthRule, KbGraph, Pos};
pub use pnd::{levenshtein, PndIndex};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("{0:?} is not a known noun")]
    UnknownNoun(String),
    #[error("feature file line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureKind {
    Cnc,
    Frq,
    Snd,
    Pnd,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 4] = [FeatureKind::Cnc, FeatureKind::Frq, FeatureKind::Snd, FeatureKind::Pnd];

    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Cnc => "CNC",
            FeatureKind::Frq => "FRQ",
            FeatureKind::Snd => "SND",
            FeatureKind::Pnd => "PND",
        }
    }

    pub fn parse(s: &str) -> Option<FeatureKind> {
        FeatureKind::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureEntry {
    pub raw: f64,
    pub normalized: Option<f64>,
    pub cluster: Option<i8>,
}

impl FeatureEntry {
    pub fn raw(raw: f64) -> Self {
        FeatureEntry { raw, normalized: None, cluster: None }
    }
}

/// One feature's values for a set of nouns, keyed and written in noun order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureDictionary {
    pub kind: FeatureKind,
    pub entries: BTreeMap<String, FeatureEntry>,
}

impl FeatureDictionary {
    pub fn new(kind: FeatureKind) -> Self {
        FeatureDictionary { kind, entries: BTreeMap::new() }
    }

    pub fn from_raw<I: IntoIterator<Item = (String, f64)>>(kind: FeatureKind, values: I) -> Self {
        FeatureDictionary {
            kind,
            entries: values.into_iter().map(|(n, v)| (n, FeatureEntry::raw(v))).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn raw_values(&self) -> BTreeMap<String, f64> {
        self.entries.iter().map(|(n, e)| (n.clone(), e.raw)).collect()
    }

    /// `<noun>\t<raw>\t<normalized|NA>\t<cluster|NA>` under a `# kind=` header.
    /// Reals use the shortest exact representation.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "# kind={}", self.kind)?;
        for (noun, e) in &self.entries {
            let norm = e.normalized.map_or("NA".to_string(), |v| v.to_string());
            let cluster = e.cluster.map_or("NA".to_string(), |c| c.to_string());
            writeln!(out, "{noun}\t{}\t{norm}\t{cluster}", e.raw)?;
        }
        out.flush()
    }

    pub fn read_tsv<R: Read>(input: R) -> Result<FeatureDictionary, FeatureError> {
        let mut kind = None;
        let mut entries = BTreeMap::new();
        for (i, line) in BufReader::new(input).lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            let bad = |reason: String| FeatureError::Malformed { line: lineno, reason };
            if let Some(k) = line.strip_prefix("# kind=") {
                kind = Some(FeatureKind::parse(k.trim()).ok_or_else(|| bad(format!("unknown kind {k:?}")))?);
                continue;
            }
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 4 {
                return Err(bad(format!("expected 4 fields, found {}", f.len())));
            }
            let real = |s: &str| s.parse::<f64>().ok().filter(|v| v.is_finite());
            let raw = real(f[1]).ok_or_else(|| bad(format!("bad raw value {:?}", f[1])))?;
            let normalized = match f[2] {
                "NA" => None,
                s => Some(real(s).ok_or_else(|| bad(format!("bad normalized value {s:?}")))?),
            };
            let cluster = match f[3] {
                "NA" => None,
                s => Some(
                    s.parse::<i8>()
                        .ok()
                        .filter(|c| (-1..=1).contains(c))
                        .ok_or_else(|| bad(format!("bad cluster {s:?}")))?,
                ),
            };
            if entries.insert(f[0].to_string(), FeatureEntry { raw, normalized, cluster }).is_some() {
                return Err(bad(format!("duplicate noun {:?}", f[0])));
            }
        }
        let kind = kind.ok_or(FeatureError::Malformed { line: 1, reason: "missing `# kind=` header".into() })?;
        Ok(FeatureDictionary { kind, entries })
    }
}

fn noun_synsets(kb: &KbGraph, noun: &str) -> Result<Vec<u32>, FeatureError> {
    let l = kb.lemma_id(noun).ok_or_else(|| FeatureError::UnknownNoun(noun.to_string()))?;
    let synsets: Vec<u32> =
        kb.lemma_synset_indices(l).iter().copied().filter(|&s| kb.pos_index(s) == Pos::Noun).collect();
    if synsets.is_empty() {
        return Err(FeatureError::UnknownNoun(noun.to_string()));
    }
    Ok(synsets)
}

/// Mean hypernym depth over the noun's noun synsets.
pub fn concreteness(kb: &KbGraph, noun: &str, rule: DepthRule) -> Result<f64, FeatureError> {
    let synsets = noun_synsets(kb, noun)?;
    let sum: u64 = synsets.iter().map(|&s| kb.depth_index(s, rule) as u64).sum();
    Ok(sum as f64 / synsets.len() as f64)
}

/// Mean count of first-degree semantic neighbours over the noun's noun synsets.
pub fn snd(kb: &KbGraph, noun: &str) -> Result<f64, FeatureError> {
    let synsets = noun_synsets(kb, noun)?;
    let sum: usize = synsets.iter().map(|&s| kb.semantic_degree(s)).sum();
    Ok(sum as f64 / synsets.len() as f64)
}

/// Orthographic neighbours of `noun` in an indexed lexicon.
pub fn pnd(index: &PndIndex, noun: &str) -> Result<usize, FeatureError> {
    index.count(noun).ok_or_else(|| FeatureError::UnknownNoun(noun.to_string()))
}

/// Zipf frequency of `noun`; 0 for nouns absent from the corpus.
pub fn frequency(counts: &TokenCounts, noun: &str) -> f64 {
    crate::corpus::zipf_value(counts.get(noun), counts.total())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PndScope {
    /// Single-word noun lemmas only.
    #[default]
    Nouns,
    /// Single-word lemmas of every part of speech.
    AllPos,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureOptions {
    pub min_len: usize,
    pub pnd_scope: PndScope,
    pub depth_rule: DepthRule,
}

impl Default for FeatureOptions {
    fn default() -> Self {
        FeatureOptions { min_len: 3, pnd_scope: PndScope::Nouns, depth_rule: DepthRule::Shortest }
    }
}

/// The four raw feature dictionaries in CNC, FRQ, SND, PND order. The noun
/// set is the KB's single-word nouns; FRQ omits nouns absent from the corpus.
pub fn compute_all(kb: &KbGraph, counts: &TokenCounts, opts: &FeatureOptions) -> [FeatureDictionary; 4] {
    let nouns = kb.single_word_nouns(opts.min_len);
    let lexicon = match opts.pnd_scope {
        PndScope::Nouns => nouns.clone(),
        PndScope::AllPos => kb.single_word_lemmas(opts.min_len, None),
    };
    let index = PndIndex::build(&lexicon);

    let rows: Vec<(f64, Option<f64>, f64, f64)> = nouns
        .par_iter()
        .map(|noun| {
            let cnc = concreteness(kb, noun, opts.depth_rule).expect("listed noun has noun synsets");
            let frq = (counts.get(noun) > 0).then(|| frequency(counts, noun));
            let snd = snd(kb, noun).expect("listed noun has noun synsets");
            let pnd = pnd(&index, noun).expect("noun is in the PND lexicon") as f64;
            (cnc, frq, snd, pnd)
        })
        .collect();

    let mut dicts = FeatureKind::ALL.map(FeatureDictionary::new);
    for (noun, (cnc, frq, snd, pnd)) in nouns.iter().zip(rows) {
        dicts[0].entries.insert(noun.to_string(), FeatureEntry::raw(cnc));
        if let Some(frq) = frq {
            dicts[1].entries.insert(noun.to_string(), FeatureEntry::raw(frq));
        }
        dicts[2].entries.insert(noun.to_string(), FeatureEntry::raw(snd));
        dicts[3].entries.insert(noun.to_string(), FeatureEntry::raw(pnd));
    }
    dicts
}
