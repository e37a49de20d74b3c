mod common;

use lexsim::embedding::{self, cosine, EmbeddingError, EmbeddingSpace, TrainConfig};
use lexsim::eval::{read_gold, spearman_eval};
use rand::Rng;

const BLOCKS: [[&str; 6]; 3] = [
    ["apple", "pear", "plum", "grape", "melon", "berry"],
    ["hammer", "saw", "drill", "chisel", "wrench", "pliers"],
    ["river", "lake", "ocean", "stream", "pond", "creek"],
];

fn block_corpus(seed: u64, tokens: usize) -> Vec<String> {
    let mut rng = common::rng(seed);
    let mut lines = Vec::new();
    let mut n = 0;
    while n < tokens {
        let b = &BLOCKS[rng.random_range(0..BLOCKS.len())];
        let line: Vec<&str> = (0..8).map(|_| b[rng.random_range(0..b.len())]).collect();
        n += line.len();
        lines.push(line.join(" "));
    }
    lines
}

fn small_cfg(workers: usize) -> TrainConfig {
    TrainConfig { dim: 24, epochs: 3, min_count: 1, subsample: 0.0, negatives: 5, seed: 11, workers, ..TrainConfig::default() }
}

fn block_gold() -> String {
    let all: Vec<(usize, &str)> = BLOCKS.iter().enumerate().flat_map(|(i, b)| b.iter().map(move |w| (i, *w))).collect();
    let mut gold = String::new();
    for (i, (ba, a)) in all.iter().enumerate() {
        for (bb, b) in &all[i + 1..] {
            gold.push_str(&format!("{a}\t{b}\t{}\n", if ba == bb { 10 } else { 0 }));
        }
    }
    gold
}

#[test]
fn text_format_round_trips_to_six_decimals() {
    let lines = block_corpus(1, 20_000);
    let space = embedding::train(lines.iter().map(String::as_str), &small_cfg(1)).unwrap();
    let mut buf = Vec::new();
    space.write_text(&mut buf).unwrap();
    let back = EmbeddingSpace::read_text(buf.as_slice()).unwrap();
    assert_eq!(back.words(), space.words());
    for (w, v) in space.iter() {
        let u = back.vector(w).unwrap();
        assert!(v.iter().zip(u).all(|(a, b)| (a - b).abs() <= 5.1e-7), "{w}");
    }
    // the subword table is not part of the text format
    assert!(space.subwords().is_some());
    assert!(back.subwords().is_none());
}

#[test]
fn malformed_vector_files_are_located() {
    let err = EmbeddingSpace::read_text("2 3\na 1 2 3\nb 1 2\n".as_bytes()).unwrap_err();
    assert!(matches!(err, EmbeddingError::DimensionMismatch { line: 3, expected: 3, found: 2 }), "{err:?}");
    let err = EmbeddingSpace::read_text("2 1\na 1\na 2\n".as_bytes()).unwrap_err();
    assert!(matches!(err, EmbeddingError::DuplicateWord { line: 3, .. }), "{err:?}");
    let err = EmbeddingSpace::read_text("3 1\na 1\n".as_bytes()).unwrap_err();
    assert!(matches!(err, EmbeddingError::CountMismatch { declared: 3, found: 1 }));
    let err = EmbeddingSpace::read_text("x y\n".as_bytes()).unwrap_err();
    assert!(matches!(err, EmbeddingError::MalformedHeader(_)));
    let err = EmbeddingSpace::read_text("1 1\na nope\n".as_bytes()).unwrap_err();
    assert!(matches!(err, EmbeddingError::MalformedRow { line: 2, .. }));
}

#[test]
fn single_worker_training_is_deterministic() {
    let lines = block_corpus(2, 10_000);
    let a = embedding::train(lines.iter().map(String::as_str), &small_cfg(1)).unwrap();
    let b = embedding::train(lines.iter().map(String::as_str), &small_cfg(1)).unwrap();
    assert_eq!(a, b);
    let c = embedding::train(lines.iter().map(String::as_str), &TrainConfig { seed: 12, ..small_cfg(1) }).unwrap();
    assert_ne!(a, c);
}

#[test]
fn parallel_training_matches_serial_quality() {
    let lines = block_corpus(3, 60_000);
    let gold = read_gold("blocks", block_gold().as_bytes()).unwrap();
    let serial = embedding::train(lines.iter().map(String::as_str), &small_cfg(1)).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let parallel = pool.install(|| embedding::train(lines.iter().map(String::as_str), &small_cfg(4))).unwrap();
    let (rs, rp) = (spearman_eval(&serial, &gold).unwrap().rho, spearman_eval(&parallel, &gold).unwrap().rho);
    assert!(rs > 0.5, "serial rho {rs}");
    assert!((rs - rp).abs() < 0.02, "serial {rs} vs parallel {rp}");
}

#[test]
fn unseen_words_compose_from_subwords() {
    let lines = block_corpus(4, 20_000);
    let space = embedding::train(lines.iter().map(String::as_str), &small_cfg(1)).unwrap();
    assert!(!space.contains("drills"));
    let v = space.resolve("drills").expect("shares n-grams with drill");
    assert!(cosine(&v, space.vector("drill").unwrap()) > 0.3);
    assert!(space.resolve("qqqq").is_none());
    assert!(matches!(space.cosine("qqqq", "drill"), Err(EmbeddingError::OutOfVocabulary(_))));

    let plain = embedding::train(lines.iter().map(String::as_str), &TrainConfig { ngrams: None, ..small_cfg(1) }).unwrap();
    assert!(plain.resolve("drills").is_none());
}

#[test]
fn degenerate_inputs_are_errors() {
    let cfg = small_cfg(1);
    assert!(matches!(embedding::train(Vec::<&str>::new(), &cfg), Err(EmbeddingError::EmptyCorpus)));
    let rare = TrainConfig { min_count: 100, ..cfg.clone() };
    assert!(matches!(embedding::train(["a b c"], &rare), Err(EmbeddingError::VocabularyEmpty(100))));
    let bad = TrainConfig { dim: 0, ..cfg };
    assert!(matches!(embedding::train(["a b c"], &bad), Err(EmbeddingError::InvalidConfig(_))));
}
