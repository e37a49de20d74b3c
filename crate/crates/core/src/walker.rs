//! Monte-Carlo PageRank random walks over the knowledge base, emitted as a
//! pseudo-corpus of lemma sequences.
//!
//! Walk `i` draws from its own ChaCha stream (`seed`, stream `i`), so the
//! output is identical for any worker count. Lines are written in walk-index
//! order.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::kb::KbGraph;

/// Walks launched per distinct lemma, from 200 million walks over the 147306
/// lemmas of English WordNet 3.0.
pub const DEFAULT_WALKS_PER_LEXICALIZATION: f64 = 1358.0;

const BLOCK: u64 = 4096;

#[derive(Debug, Error)]
pub enum WalkError {
    #[error("knowledge base has no synsets")]
    EmptyGraph,
    #[error("invalid walk configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WalkBudget {
    /// Total walks launched, discarded ones included.
    Total(u64),
    /// Walks launched per distinct lemma of the knowledge base.
    PerLexicalization(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkConfig {
    /// Probability of continuing to a neighbor at each step.
    pub alpha: f64,
    pub budget: WalkBudget,
    pub seed: u64,
    pub min_tokens_per_walk: usize,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            alpha: 0.85,
            budget: WalkBudget::PerLexicalization(DEFAULT_WALKS_PER_LEXICALIZATION),
            seed: 0,
            min_tokens_per_walk: 2,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<(), WalkError> {
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(WalkError::InvalidConfig(format!("alpha must be in [0, 1), got {}", self.alpha)));
        }
        match self.budget {
            WalkBudget::Total(0) => Err(WalkError::InvalidConfig("n_walks must be positive".into())),
            WalkBudget::PerLexicalization(r) if !(r > 0.0 && r.is_finite()) => Err(
                WalkError::InvalidConfig(format!("walks_per_lexicalization must be positive, got {r}")),
            ),
            _ if self.min_tokens_per_walk == 0 => {
                Err(WalkError::InvalidConfig("min_tokens_per_walk must be positive".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn walk_count(&self, kb: &KbGraph) -> u64 {
        match self.budget {
            WalkBudget::Total(n) => n,
            WalkBudget::PerLexicalization(r) => default_walk_count(kb.lemma_count(), r),
        }
    }
}

/// `round(ratio * lexicalizations)`, at least 1.
pub fn default_walk_count(lexicalizations: usize, walks_per_lexicalization: f64) -> u64 {
    ((lexicalizations as f64 * walks_per_lexicalization).round() as u64).max(1)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WalkStats {
    pub walks_launched: u64,
    pub walks_emitted: u64,
    pub walks_discarded: u64,
    /// Tokens in emitted lines.
    pub total_tokens: u64,
    /// Tokens produced before discarding short walks.
    pub tokens_generated: u64,
}

impl WalkStats {
    fn absorb(&mut self, other: &WalkStats) {
        self.walks_launched += other.walks_launched;
        self.walks_emitted += other.walks_emitted;
        self.walks_discarded += other.walks_discarded;
        self.total_tokens += other.total_tokens;
        self.tokens_generated += other.tokens_generated;
    }

    /// Single key-value line for the diagnostics stream.
    pub fn to_json_line(&self) -> String {
        format!(
            "{{\"walks_launched\": {}, \"walks_emitted\": {}, \"walks_discarded\": {}, \"total_tokens\": {}, \"tokens_generated\": {}}}",
            self.walks_launched, self.walks_emitted, self.walks_discarded, self.total_tokens, self.tokens_generated
        )
    }
}

/// Lemma ids emitted by walk number `index`.
pub fn walk(kb: &KbGraph, cfg: &WalkConfig, index: u64) -> Vec<u32> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index);
    let mut tokens = Vec::new();
    let mut current = rng.random_range(0..kb.synset_count()) as u32;
    emit(kb, current, &mut rng, &mut tokens);
    loop {
        if rng.random::<f64>() >= cfg.alpha {
            break;
        }
        let neighbors = kb.undirected_neighbors(current);
        if neighbors.is_empty() {
            break;
        }
        current = neighbors[rng.random_range(0..neighbors.len())];
        emit(kb, current, &mut rng, &mut tokens);
    }
    tokens
}

fn emit(kb: &KbGraph, synset: u32, rng: &mut ChaCha8Rng, tokens: &mut Vec<u32>) {
    let lemmas = kb.synset_lemma_indices(synset);
    if !lemmas.is_empty() {
        tokens.push(lemmas[rng.random_range(0..lemmas.len())]);
    }
}

fn run_block(kb: &KbGraph, cfg: &WalkConfig, start: u64, end: u64) -> (String, WalkStats) {
    let mut out = String::new();
    let mut stats = WalkStats::default();
    for i in start..end {
        let tokens = walk(kb, cfg, i);
        stats.walks_launched += 1;
        stats.tokens_generated += tokens.len() as u64;
        if tokens.len() < cfg.min_tokens_per_walk {
            stats.walks_discarded += 1;
            continue;
        }
        stats.walks_emitted += 1;
        stats.total_tokens += tokens.len() as u64;
        for (j, &l) in tokens.iter().enumerate() {
            if j > 0 {
                out.push(' ');
            }
            // one token per lemma: inner spaces become underscores
            for c in kb.lemma(l).chars() {
                out.push(if c == ' ' { '_' } else { c });
            }
        }
        out.push('\n');
    }
    (out, stats)
}

/// Writes the pseudo-corpus to `sink`, one walk per line. Blocks of walks run
/// on the current rayon pool and are merged back in index order.
pub fn generate_pseudo_corpus<W: Write>(
    kb: &KbGraph,
    cfg: &WalkConfig,
    mut sink: W,
) -> Result<WalkStats, WalkError> {
    cfg.validate()?;
    if kb.is_empty() {
        return Err(WalkError::EmptyGraph);
    }
    let n_walks = cfg.walk_count(kb);
    let n_blocks = n_walks.div_ceil(BLOCK);
    let batch = (rayon::current_num_threads() as u64 * 4).max(1);
    let mut stats = WalkStats::default();
    let mut first = 0;
    while first < n_blocks {
        let last = (first + batch).min(n_blocks);
        let results: Vec<(String, WalkStats)> = (first..last)
            .into_par_iter()
            .map(|b| run_block(kb, cfg, b * BLOCK, ((b + 1) * BLOCK).min(n_walks)))
            .collect();
        for (text, s) in &results {
            sink.write_all(text.as_bytes())?;
            stats.absorb(s);
        }
        first = last;
    }
    sink.flush()?;
    Ok(stats)
}
