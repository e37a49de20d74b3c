//! Deterministic toy inputs for end-to-end runs: a fully lexicalized
//! 100-synset knowledge base, a one-million-token corpus whose sentences
//! follow the KB's neighbourhoods, a small gold similarity file and a run
//! configuration.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::kb::{self, KbGraph, KbRows, Pos, RelationKind};

pub const NOUN_SYNSETS: usize = 92;
pub const VERB_SYNSETS: usize = 8;
pub const CORPUS_TOKENS: u64 = 1_000_000;
pub const DEFAULT_SEED: u64 = 20_240_601;

pub const CORPUS_FILE: &str = "corpus.txt";
pub const GOLD_FILE: &str = "gold.tsv";
pub const CONFIG_FILE: &str = "run.toml";
pub const KB_DIR: &str = "kb";

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";
const FILLERS: [&str; 24] = [
    "ta", "ne", "lo", "si", "ku", "ber", "eta", "da", "ez", "bat", "hau", "zen", "oso", "ere", "izan", "bere",
    "egin", "gabe", "orain", "beti", "non", "nola", "baina", "edo",
];

#[derive(Debug, Clone)]
pub struct ToyKb {
    /// `(id, pos)` in id order.
    pub synsets: Vec<(String, Pos)>,
    pub relations: Vec<(usize, RelationKind, usize)>,
    /// `lemmas[s]` lists synset s's lemmas.
    pub lemmas: Vec<Vec<String>>,
}

impl ToyKb {
    /// Undirected semantic adjacency.
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); self.synsets.len()];
        for &(a, k, b) in &self.relations {
            if k.is_semantic() && a != b {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
        adj.into_iter().map(|s| s.into_iter().collect()).collect()
    }

    pub fn to_graph(&self) -> KbGraph {
        let mut rows = KbRows::new();
        for (id, pos) in &self.synsets {
            rows.synset(id, *pos);
        }
        for &(a, k, b) in &self.relations {
            rows.relation(&self.synsets[a].0, k, &self.synsets[b].0);
        }
        for (s, lemmas) in self.lemmas.iter().enumerate() {
            for lemma in lemmas {
                rows.lemma(lemma, &self.synsets[s].0);
            }
        }
        rows.build().expect("toy KB is valid")
    }

    pub fn write_dir(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        let mut s = BufWriter::new(File::create(dir.join(kb::SYNSETS_FILE))?);
        for (id, pos) in &self.synsets {
            writeln!(s, "{id}\t{}", pos.tag())?;
        }
        s.flush()?;
        let mut r = BufWriter::new(File::create(dir.join(kb::RELATIONS_FILE))?);
        for &(a, k, b) in &self.relations {
            writeln!(r, "{}\t{}\t{}", self.synsets[a].0, k.name(), self.synsets[b].0)?;
        }
        r.flush()?;
        let mut l = BufWriter::new(File::create(dir.join(kb::LEXICON_FILE))?);
        for (s, lemmas) in self.lemmas.iter().enumerate() {
            for lemma in lemmas {
                writeln!(l, "{lemma}\t{}", self.synsets[s].0)?;
            }
        }
        l.flush()
    }
}

fn syllable(rng: &mut ChaCha8Rng) -> String {
    let mut s = String::new();
    s.push(CONSONANTS[rng.random_range(0..CONSONANTS.len())] as char);
    s.push(VOWELS[rng.random_range(0..VOWELS.len())] as char);
    if rng.random_bool(0.3) {
        s.push(CONSONANTS[rng.random_range(0..CONSONANTS.len())] as char);
    }
    s
}

fn fresh_word(rng: &mut ChaCha8Rng) -> String {
    loop {
        let n = rng.random_range(2..=3);
        let w: String = (0..n).map(|_| syllable(rng)).collect();
        if w.len() >= 4 {
            return w;
        }
    }
}

/// One substitution, insertion or deletion.
fn mutate(word: &str, rng: &mut ChaCha8Rng) -> String {
    let mut c: Vec<u8> = word.bytes().collect();
    let i = rng.random_range(0..c.len());
    let letter = |rng: &mut ChaCha8Rng, like: u8| {
        if VOWELS.contains(&like) {
            VOWELS[rng.random_range(0..VOWELS.len())]
        } else {
            CONSONANTS[rng.random_range(0..CONSONANTS.len())]
        }
    };
    match rng.random_range(0..3) {
        0 => c[i] = letter(rng, c[i]),
        1 => c.insert(i, letter(rng, c[i])),
        _ => {
            c.remove(i);
        }
    }
    String::from_utf8(c).expect("ascii")
}

struct Words {
    used: HashSet<String>,
    all: Vec<String>,
}

impl Words {
    fn next(&mut self, rng: &mut ChaCha8Rng) -> String {
        loop {
            let w = if !self.all.is_empty() && rng.random_bool(0.35) {
                mutate(&self.all[rng.random_range(0..self.all.len())], rng)
            } else {
                fresh_word(rng)
            };
            if w.len() >= 3 && self.used.insert(w.clone()) {
                self.all.push(w.clone());
                return w;
            }
        }
    }
}

pub fn toy_kb(seed: u64) -> ToyKb {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = NOUN_SYNSETS + VERB_SYNSETS;
    let synsets: Vec<(String, Pos)> = (0..n)
        .map(|i| {
            let pos = if i < NOUN_SYNSETS { Pos::Noun } else { Pos::Verb };
            (format!("{:08}-{}", 1000 + 17 * i, pos.tag()), pos)
        })
        .collect();

    let mut edges: BTreeSet<(usize, RelationKind, usize)> = BTreeSet::new();
    let mut both = |a: usize, fwd: RelationKind, back: RelationKind, b: usize| {
        edges.insert((a, fwd, b));
        edges.insert((b, back, a));
    };
    // noun taxonomy rooted at 0; a handful of second parents
    for i in 1..NOUN_SYNSETS {
        let p = rng.random_range(0..i);
        both(i, RelationKind::Hypernym, RelationKind::Hyponym, p);
        if i > 10 && rng.random_bool(0.08) {
            let q = rng.random_range(0..i);
            if q != p {
                both(i, RelationKind::Hypernym, RelationKind::Hyponym, q);
            }
        }
    }
    for i in NOUN_SYNSETS + 1..n {
        let p = rng.random_range(NOUN_SYNSETS..i);
        both(i, RelationKind::Hypernym, RelationKind::Hyponym, p);
    }
    let pick_pair = |rng: &mut ChaCha8Rng| loop {
        let (a, b) = (rng.random_range(1..NOUN_SYNSETS), rng.random_range(1..NOUN_SYNSETS));
        if a != b {
            return (a, b);
        }
    };
    for _ in 0..25 {
        let (a, b) = pick_pair(&mut rng);
        both(a, RelationKind::PartMeronym, RelationKind::PartHolonym, b);
    }
    for _ in 0..6 {
        let (a, b) = pick_pair(&mut rng);
        both(a, RelationKind::MemberMeronym, RelationKind::MemberHolonym, b);
    }
    for _ in 0..3 {
        let (a, b) = pick_pair(&mut rng);
        both(a, RelationKind::Antonym, RelationKind::Antonym, b);
    }
    for v in NOUN_SYNSETS..n {
        let noun = rng.random_range(1..NOUN_SYNSETS);
        both(v, RelationKind::Lexical, RelationKind::Lexical, noun);
    }

    let mut words = Words { used: HashSet::new(), all: Vec::new() };
    let mut lemmas: Vec<Vec<String>> = vec![Vec::new(); n];
    for (s, list) in lemmas.iter_mut().enumerate() {
        list.push(words.next(&mut rng));
        if rng.random_bool(0.4) {
            list.push(words.next(&mut rng));
        }
        // polysemy: reuse an earlier synset's word
        if s > 5 && rng.random_bool(0.15) {
            let w = words.all[rng.random_range(0..words.all.len())].clone();
            if !list.contains(&w) {
                list.push(w);
            }
        }
    }
    // lemmas the noun feature extractors must skip
    for (s, extra) in [(3, "ka"), (7, "zo"), (11, "buru_handi"), (19, "etxe zuri")] {
        lemmas[s].push(extra.to_string());
    }

    ToyKb { synsets, relations: edges.into_iter().collect(), lemmas }
}

/// Sentences drawn around KB neighbourhoods, interleaved with filler words.
/// Tokens are counted after tokenization; the last sentence is cut so the
/// total is exactly `tokens`. A few noun lemmas never occur.
pub fn write_corpus<W: Write>(kb: &ToyKb, seed: u64, tokens: u64, mut out: W) -> io::Result<Vec<String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let adj = kb.neighbors();
    let n = kb.synsets.len();
    // Zipf-like topic weights over a shuffled synset order
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let mut cumulative = Vec::with_capacity(n);
    let mut acc = 0.0;
    for rank in 0..n {
        acc += 1.0 / (rank as f64 + 1.0);
        cumulative.push(acc);
    }
    let mut filler_cum = Vec::new();
    let mut facc = 0.0;
    for rank in 0..FILLERS.len() {
        facc += 1.0 / (rank as f64 + 1.0);
        filler_cum.push(facc);
    }
    let absent: HashSet<&str> = [5usize, 23, 41, 60, 77]
        .iter()
        .filter_map(|&s| kb.lemmas[s].first().map(String::as_str))
        .collect();

    let mut written = 0u64;
    let mut line: Vec<String> = Vec::new();
    while written < tokens {
        let r = rng.random::<f64>() * acc;
        let topic = order[cumulative.partition_point(|&c| c < r).min(n - 1)];
        let len = rng.random_range(8..=16);
        let mut sentence: Vec<String> = Vec::with_capacity(len);
        while sentence.len() < len {
            if rng.random_bool(0.45) {
                let r = rng.random::<f64>() * facc;
                sentence.push(FILLERS[filler_cum.partition_point(|&c| c < r).min(FILLERS.len() - 1)].to_string());
                continue;
            }
            let mut s = topic;
            let hop = rng.random::<f64>();
            if hop >= 0.4 && !adj[s].is_empty() {
                s = adj[s][rng.random_range(0..adj[s].len())];
                if hop >= 0.8 && !adj[s].is_empty() {
                    s = adj[s][rng.random_range(0..adj[s].len())];
                }
            }
            let lemma = &kb.lemmas[s][rng.random_range(0..kb.lemmas[s].len())];
            if absent.contains(lemma.as_str()) {
                continue;
            }
            for part in lemma.split(['_', ' ']) {
                sentence.push(part.to_string());
            }
        }
        let room = (tokens - written) as usize;
        sentence.truncate(room);
        written += sentence.len() as u64;
        line.push(render_sentence(&sentence));
        if line.len() == 2 || written == tokens {
            writeln!(out, "{}", line.join(" "))?;
            line.clear();
        }
    }
    out.flush()?;
    let mut absent: Vec<String> = absent.into_iter().map(String::from).collect();
    absent.sort();
    Ok(absent)
}

/// Capitalized first word, a comma after the third, a closing period.
fn render_sentence(tokens: &[String]) -> String {
    let mut s = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            s.push_str(if i == 3 { ", " } else { " " });
        }
        if i == 0 {
            let mut c = t.chars();
            if let Some(f) = c.next() {
                s.extend(f.to_uppercase());
                s.push_str(c.as_str());
            }
        } else {
            s.push_str(t);
        }
    }
    s.push('.');
    s
}

/// Noun pairs scored by taxonomy distance, plus two out-of-vocabulary pairs.
pub fn write_gold<W: Write>(kb: &ToyKb, seed: u64, pairs: usize, mut out: W) -> io::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    let mut tree: Vec<Vec<usize>> = vec![Vec::new(); kb.synsets.len()];
    for &(a, k, b) in &kb.relations {
        if k == RelationKind::Hypernym {
            tree[a].push(b);
            tree[b].push(a);
        }
    }
    let dist = |from: usize, to: usize| -> usize {
        let mut seen = vec![usize::MAX; tree.len()];
        let mut q = VecDeque::from([from]);
        seen[from] = 0;
        while let Some(x) = q.pop_front() {
            if x == to {
                return seen[x];
            }
            for &y in &tree[x] {
                if seen[y] == usize::MAX {
                    seen[y] = seen[x] + 1;
                    q.push_back(y);
                }
            }
        }
        usize::MAX
    };
    let mut seen = HashSet::new();
    let mut written = 0;
    writeln!(out, "# word1\tword2\tscore")?;
    while written < pairs {
        let (a, b) = (rng.random_range(1..NOUN_SYNSETS), rng.random_range(1..NOUN_SYNSETS));
        let (wa, wb) = (&kb.lemmas[a][0], &kb.lemmas[b][0]);
        if wa == wb {
            continue;
        }
        let key = if wa < wb { (wa.clone(), wb.clone()) } else { (wb.clone(), wa.clone()) };
        if !seen.insert(key) {
            continue;
        }
        let d = dist(a, b);
        let score = 10.0 * (-0.5 * d as f64).exp();
        writeln!(out, "{wa}\t{wb}\t{score:.2}")?;
        written += 1;
    }
    writeln!(out, "qqxz\t{}\t5.00", kb.lemmas[1][0])?;
    writeln!(out, "{}\tzzqx\t1.00", kb.lemmas[2][0])?;
    out.flush()
}

pub const RUN_CONFIG: &str = r#"language = "toy"
seed = 42
workers = 0

[paths]
kb_dir = "kb"
corpus = ["corpus.txt"]
gold = ["gold.tsv"]
output = "out"

[walk]
alpha = 0.85
walks_per_lexicalization = 200

[train.text]
dim = 32
epochs = 3
negatives = 5
min_count = 5
subsample = 1e-3
min_n = 3
max_n = 5

[train.kb]
dim = 32
epochs = 3
negatives = 5
min_count = 1
subsample = 1e-3
min_n = 3
max_n = 5

[pairs]
"#;

#[derive(Debug, Clone)]
pub struct FixtureSummary {
    pub synsets: usize,
    pub relations: usize,
    pub lexicon_entries: usize,
    /// Noun lemmas that never occur in the corpus.
    pub absent_from_corpus: Vec<String>,
}

/// Writes `kb/`, `corpus.txt`, `gold.tsv` and `run.toml` into `dir`.
pub fn write_fixture(dir: &Path, seed: u64) -> io::Result<FixtureSummary> {
    fs::create_dir_all(dir)?;
    let kb = toy_kb(seed);
    kb.write_dir(&dir.join(KB_DIR))?;
    let absent = write_corpus(&kb, seed, CORPUS_TOKENS, BufWriter::new(File::create(dir.join(CORPUS_FILE))?))?;
    write_gold(&kb, seed, 40, BufWriter::new(File::create(dir.join(GOLD_FILE))?))?;
    fs::write(dir.join(CONFIG_FILE), RUN_CONFIG)?;
    Ok(FixtureSummary {
        synsets: kb.synsets.len(),
        relations: kb.relations.len(),
        lexicon_entries: kb.lemmas.iter().map(Vec::len).sum(),
        absent_from_corpus: absent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Tokenizer;

    #[test]
    fn toy_kb_loads_and_is_symmetric() {
        let t = toy_kb(DEFAULT_SEED);
        let dir = tempfile::tempdir().unwrap();
        t.write_dir(dir.path()).unwrap();
        let kb = KbGraph::load_dir(dir.path()).unwrap();
        assert_eq!(kb.synset_count(), 100);
        assert_eq!(kb.roots().len(), 2);
        let edges: HashSet<(usize, usize)> = t.relations.iter().map(|&(a, _, b)| (a, b)).collect();
        assert!(edges.iter().all(|&(a, b)| edges.contains(&(b, a))));
        assert!(t.lemmas.iter().all(|l| !l.is_empty()));
        let g = t.to_graph();
        assert_eq!(g.relation_count(), kb.relation_count());
        assert_eq!(g.lemma_count(), kb.lemma_count());
    }

    #[test]
    fn corpus_has_exact_token_count() {
        let t = toy_kb(DEFAULT_SEED);
        let mut raw = Vec::new();
        let absent = write_corpus(&t, DEFAULT_SEED, 5000, &mut raw).unwrap();
        let n = Tokenizer::new(true).preprocess(&raw[..], io::sink()).unwrap();
        assert_eq!(n, 5000);
        let text = String::from_utf8(raw).unwrap().to_lowercase();
        let tokens: HashSet<&str> = text.split(|c: char| !c.is_alphanumeric()).collect();
        assert!(absent.iter().all(|w| !tokens.contains(w.as_str())));
    }

    #[test]
    fn generation_is_deterministic() {
        let t = toy_kb(7);
        let (mut a, mut b) = (Vec::new(), Vec::new());
        write_corpus(&t, 7, 2000, &mut a).unwrap();
        write_corpus(&toy_kb(7), 7, 2000, &mut b).unwrap();
        assert_eq!(a, b);
        let (mut ga, mut gb) = (Vec::new(), Vec::new());
        write_gold(&t, 7, 10, &mut ga).unwrap();
        write_gold(&t, 7, 10, &mut gb).unwrap();
        assert_eq!(ga, gb);
    }
}
