mod common;

use std::collections::{BTreeSet, HashMap};

use lexsim::dataset::{
    cluster_dictionary, iqr_filter, l2_normalize, pnd_cluster, quantile, read_dataset, two_cluster, DatasetError,
    NounPairRecord, PairCaps, PairPlan, SimilarityReport, Values, DATASET_HEADER,
};
use lexsim::embedding::EmbeddingSpace;
use lexsim::features::{FeatureDictionary, FeatureEntry, FeatureKind};
use proptest::prelude::*;
use rand::Rng;

fn values(xs: &[f64]) -> Values {
    xs.iter().enumerate().map(|(i, &v)| (format!("n{i:03}"), v)).collect()
}

#[test]
fn quantiles_interpolate_between_order_statistics() {
    let xs = [1.0, 2.0, 3.0, 4.0, 10.0];
    assert_eq!(quantile(&xs, 0.0), 1.0);
    assert_eq!(quantile(&xs, 0.25), 2.0);
    assert_eq!(quantile(&xs, 0.5), 3.0);
    assert_eq!(quantile(&xs, 1.0), 10.0);
    assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.25), 1.75);
}

#[test]
fn iqr_drops_the_outlier() {
    let kept = iqr_filter(&values(&[1.0, 2.0, 3.0, 4.0, 100.0]), 1.5).unwrap();
    assert_eq!(kept.len(), 4);
    assert!(!kept.values().any(|&v| v == 100.0));
    assert!(matches!(iqr_filter(&values(&[1.0, 2.0, 3.0]), 1.5), Err(DatasetError::TooFewValues { needed: 4, found: 3 })));
    assert!(matches!(l2_normalize(&values(&[0.0, 0.0])), Err(DatasetError::AllZero)));
}

#[test]
fn two_clusters_need_two_distinct_values() {
    assert!(matches!(two_cluster(&values(&[3.0, 3.0, 3.0])), Err(DatasetError::DegenerateInput)));
    let labels = two_cluster(&values(&[0.0, 0.1, 0.2, 5.0, 5.1])).unwrap();
    assert_eq!(labels.values().copied().collect::<Vec<_>>(), [0, 0, 0, 1, 1]);
}

#[test]
fn pnd_zeros_form_their_own_group() {
    let out = pnd_cluster(&values(&[0.0, 0.0, 1.0, 2.0, 9.0, 10.0])).unwrap();
    let labels: Vec<i8> = out.values().map(|p| p.1).collect();
    assert_eq!(labels, [-1, -1, 0, 0, 1, 1]);
    assert_eq!(out["n000"].0, 0.0);
    let norm: f64 = out.values().map(|p| p.0 * p.0).sum::<f64>();
    assert!((norm - 1.0).abs() < 1e-12);
    // only zeros: everyone is -1
    assert!(pnd_cluster(&values(&[0.0, 0.0])).unwrap().values().all(|p| p.1 == -1));
}

#[test]
fn pnd_zeros_bypass_the_outlier_filter() {
    // eight zeros would make zero the IQR-typical value and push the rest out
    let mut raw = vec![0.0; 8];
    raw.extend([3.0, 4.0, 5.0, 6.0, 20.0]);
    let d = FeatureDictionary::from_raw(FeatureKind::Pnd, values(&raw));
    let c = cluster_dictionary(&d, 1.5).unwrap();
    assert_eq!(c.entries.values().filter(|e| e.cluster == Some(-1)).count(), 8);
    assert_eq!(c.entries.values().filter(|e| e.cluster.is_some_and(|c| c >= 0)).count(), 4, "20 is an outlier among nonzeros");
}

#[test]
fn clustered_dictionaries_are_normalized() {
    let mut rng = common::rng(40);
    let raw: Vec<f64> = (0..300).map(|_| rng.random_range(0.0..10.0)).collect();
    let d = FeatureDictionary::from_raw(FeatureKind::Cnc, values(&raw));
    let c = cluster_dictionary(&d, 1.5).unwrap();
    let norm: f64 = c.entries.values().map(|e| e.normalized.unwrap().powi(2)).sum();
    assert!((norm - 1.0).abs() < 1e-12);
    for (n, e) in &c.entries {
        assert_eq!(e.raw, d.entries[n].raw);
    }
}

fn plan_inputs(n: usize, seed: u64) -> ([FeatureDictionary; 4], [EmbeddingSpace; 3]) {
    let mut rng = common::rng(seed);
    let mut dicts = FeatureKind::ALL.map(FeatureDictionary::new);
    let mut spaces = [EmbeddingSpace::new(3), EmbeddingSpace::new(3), EmbeddingSpace::new(3)];
    for i in 0..n {
        let noun = format!("noun{i:04}");
        for (k, d) in dicts.iter_mut().enumerate() {
            // one noun in twenty is missing a feature
            if rng.random_ratio(1, 20) {
                continue;
            }
            let low = if k == 3 { -1 } else { 0 };
            d.entries.insert(
                noun.clone(),
                FeatureEntry { raw: i as f64, normalized: Some(rng.random()), cluster: Some(rng.random_range(low..=1)) },
            );
        }
        for s in spaces.iter_mut() {
            if rng.random_ratio(1, 30) {
                continue;
            }
            let v: [f32; 3] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            s.insert(&noun, &v).unwrap();
        }
    }
    (dicts, spaces)
}

#[test]
fn plan_emits_every_pair_within_each_signature() {
    let (dicts, spaces) = plan_inputs(300, 41);
    let plan = PairPlan::new(dicts.each_ref(), spaces.each_ref(), None).unwrap();
    let mut buf = Vec::new();
    let stats = plan.write(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with(DATASET_HEADER));
    let records = read_dataset(text.as_bytes()).unwrap();
    let direct: Vec<String> = plan.records().iter().map(ToString::to_string).collect();
    assert_eq!(records.iter().map(ToString::to_string).collect::<Vec<_>>(), direct);
    assert_eq!(records.len() as u64, stats.pairs);

    // independent grouping
    let mut groups: HashMap<[i8; 4], Vec<&str>> = HashMap::new();
    for noun in dicts[0].entries.keys() {
        let sig: Option<Vec<i8>> = dicts.iter().map(|d| d.entries.get(noun).and_then(|e| e.cluster)).collect();
        if let Some(sig) = sig.filter(|_| spaces.iter().all(|s| s.contains(noun))) {
            groups.entry(sig.try_into().unwrap()).or_default().push(noun);
        }
    }
    let expected: BTreeSet<(String, String)> = groups
        .values()
        .flat_map(|g| {
            g.iter().enumerate().flat_map(move |(i, a)| g[i + 1..].iter().map(move |b| (a.to_string(), b.to_string())))
        })
        .collect();
    let got: BTreeSet<(String, String)> = records.iter().map(|r| (r.noun_a.clone(), r.noun_b.clone())).collect();
    assert_eq!(got, expected);
    assert_eq!(stats.groups, groups.len());
    assert_eq!(stats.eligible_nouns, groups.values().map(Vec::len).sum::<usize>());
}

#[test]
fn capped_sampling_is_seeded_and_bounded() {
    let (dicts, spaces) = plan_inputs(400, 42);
    let caps = PairCaps { max_pairs_per_signature: 50, seed: 9 };
    let plan = PairPlan::new(dicts.each_ref(), spaces.each_ref(), Some(caps)).unwrap();
    let a = plan.records();
    assert_eq!(a, PairPlan::new(dicts.each_ref(), spaces.each_ref(), Some(caps)).unwrap().records());
    let other = PairPlan::new(dicts.each_ref(), spaces.each_ref(), Some(PairCaps { seed: 10, ..caps })).unwrap();
    assert_ne!(a, other.records());
    let mut per_sig: HashMap<[i8; 4], usize> = HashMap::new();
    for r in &a {
        *per_sig.entry(r.clusters).or_default() += 1;
        assert!(r.noun_a < r.noun_b);
    }
    for (sig, size) in plan.group_sizes() {
        let all = size * size.saturating_sub(1) / 2;
        assert_eq!(per_sig.get(&sig).copied().unwrap_or(0), all.min(50), "{sig:?}");
    }
    let unique: BTreeSet<_> = a.iter().map(|r| (&r.noun_a, &r.noun_b)).collect();
    assert_eq!(unique.len(), a.len());
}

#[test]
fn dictionaries_must_come_in_order() {
    let (dicts, spaces) = plan_inputs(10, 43);
    let swapped = [&dicts[1], &dicts[0], &dicts[2], &dicts[3]];
    assert!(matches!(PairPlan::new(swapped, spaces.each_ref(), None), Err(DatasetError::WrongKind { .. })));
}

#[test]
fn report_bins_have_closed_lower_edges() {
    let mut r = SimilarityReport::default();
    for s in [-0.5, 0.0, 0.2, 0.39, 0.4, 0.8, 1.0] {
        r.add([s, s, s]);
    }
    assert_eq!(r.counts[0], [1, 1, 2, 1, 0, 2]);
    let pct = r.percentages();
    assert!((pct[1].iter().sum::<f64>() - 100.0).abs() < 1e-9);
    let mut buf = Vec::new();
    r.write_tsv(&mut buf).unwrap();
    assert!(String::from_utf8(buf).unwrap().starts_with("# pairs=7\n"));
}

#[test]
fn malformed_dataset_lines_are_located() {
    let err = read_dataset("#header\nonly\ttwo\n".as_bytes()).unwrap_err();
    assert!(matches!(err, DatasetError::Malformed { line: 2, .. }));
}

proptest! {
    #[test]
    fn records_survive_a_text_round_trip(
        a in "[a-z]{1,8}", b in "[a-z]{1,8}",
        fa in prop::array::uniform4(-1e3f64..1e3), fb in prop::array::uniform4(-1e3f64..1e3),
        c in prop::array::uniform4(-1i8..=1), s in prop::array::uniform3(-1.0f64..1.0),
    ) {
        let r = NounPairRecord { noun_a: a, noun_b: b, features_a: fa, features_b: fb, clusters: c, sims: s };
        let back = NounPairRecord::parse(&r.to_string(), 1).unwrap();
        prop_assert_eq!(&back.noun_a, &r.noun_a);
        prop_assert_eq!(back.clusters, r.clusters);
        let close = |x: &[f64], y: &[f64]| x.iter().zip(y).all(|(a, b)| (a - b).abs() <= 5e-7);
        prop_assert!(close(&back.features_a, &fa));
        prop_assert!(close(&back.features_b, &fb));
        prop_assert!(close(&back.sims, &s));
    }

    #[test]
    fn two_cluster_is_optimal(xs in prop::collection::vec(0u8..40, 2..60)) {
        let v = values(&xs.iter().map(|&x| x as f64 / 4.0).collect::<Vec<_>>());
        let mut sorted: Vec<f64> = v.values().copied().collect();
        sorted.sort_by(f64::total_cmp);
        match (two_cluster(&v), common::exhaustive_split(&sorted)) {
            (Ok(labels), Some(k)) => {
                let threshold = sorted[k];
                for (n, &x) in &v {
                    prop_assert_eq!(labels[n], i8::from(x >= threshold));
                }
            }
            (Err(DatasetError::DegenerateInput), None) => {}
            (got, want) => prop_assert!(false, "{:?} vs {:?}", got, want),
        }
    }

    #[test]
    fn iqr_keeps_the_middle_half(xs in prop::collection::vec(-100.0f64..100.0, 4..80), k in 0.0f64..3.0) {
        let v = values(&xs);
        let kept = iqr_filter(&v, k).unwrap();
        let mut sorted = xs.clone();
        sorted.sort_by(f64::total_cmp);
        let (q1, q3) = (quantile(&sorted, 0.25), quantile(&sorted, 0.75));
        for (n, x) in &v {
            prop_assert_eq!(kept.contains_key(n), *x >= q1 - k * (q3 - q1) && *x <= q3 + k * (q3 - q1));
        }
    }
}
