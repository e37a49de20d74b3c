mod common;

use lexsim::align::{build_hybrid, fit_orthogonal_map, seed_dictionary, AlignError, HybridWeights, Preprocessed};
use lexsim::embedding::{norm, EmbeddingSpace};
use nalgebra::DMatrix;
use rand_distr::{Distribution, Normal};

fn rotated_pair(n: usize, d: usize, noise: f64, seed: u64) -> (EmbeddingSpace, EmbeddingSpace, DMatrix<f64>) {
    let mut rng = common::rng(seed);
    let g = Normal::new(0.0, 1.0).unwrap();
    let r = DMatrix::from_fn(d, d, |_, _| g.sample(&mut rng)).qr().q();
    let (mut text, mut kb) = (EmbeddingSpace::new(d), EmbeddingSpace::new(d));
    for i in 0..n {
        let x: Vec<f32> = (0..d).map(|_| g.sample(&mut rng) as f32).collect();
        let y: Vec<f32> = (0..d)
            .map(|j| ((0..d).map(|k| x[k] as f64 * r[(k, j)]).sum::<f64>() + noise * g.sample(&mut rng)) as f32)
            .collect();
        text.insert(&format!("w{i:04}"), &x).unwrap();
        kb.insert(&format!("w{i:04}"), &y).unwrap();
    }
    (text, kb, r)
}

#[test]
fn noisy_rotation_is_recovered_approximately() {
    for (noise, tol) in [(0.01, 0.05), (0.1, 0.3)] {
        let (text, kb, r) = rotated_pair(2000, 16, noise, 7);
        let seeds = seed_dictionary(&text, &kb).unwrap();
        let fit = fit_orthogonal_map(&text, &kb, &seeds).unwrap();
        let err = (&fit.transform - &r).norm();
        assert!(err < tol, "noise {noise}: |W-R| = {err}");
        assert!(fit.orthogonality_defect() < 1e-10);
        // unit rows: the mean squared error is bounded by the worst case 4
        assert!(fit.residual < 4.0 * noise * noise * 16.0 + 1e-6, "residual {}", fit.residual);
    }
}

#[test]
fn more_noise_means_larger_residual() {
    let residual = |noise| {
        let (text, kb, _) = rotated_pair(800, 8, noise, 9);
        fit_orthogonal_map(&text, &kb, &seed_dictionary(&text, &kb).unwrap()).unwrap().residual
    };
    let (a, b, c) = (residual(0.0), residual(0.05), residual(0.3));
    assert!(a < 1e-10 && a < b && b < c, "{a} {b} {c}");
}

#[test]
fn seeds_are_the_sorted_intersection() {
    let mut text = EmbeddingSpace::new(2);
    let mut kb = EmbeddingSpace::new(2);
    for w in ["zeta", "alpha", "mid"] {
        text.insert(w, &[1.0, 0.0]).unwrap();
    }
    for w in ["mid", "zeta", "kbonly"] {
        kb.insert(w, &[0.0, 1.0]).unwrap();
    }
    assert_eq!(seed_dictionary(&text, &kb).unwrap(), ["mid", "zeta"]);
    let other = EmbeddingSpace::new(3);
    assert!(matches!(seed_dictionary(&text, &other), Err(AlignError::DimensionMismatch { .. })));
    let mut disjoint = EmbeddingSpace::new(2);
    disjoint.insert("nothing", &[1.0, 1.0]).unwrap();
    assert!(matches!(seed_dictionary(&text, &disjoint), Err(AlignError::EmptyIntersection)));
    assert!(matches!(fit_orthogonal_map(&text, &kb, &["alpha".into()]), Err(AlignError::UnknownSeed(_))));
}

#[test]
fn preprocessing_centres_and_normalizes() {
    let (text, _, _) = rotated_pair(300, 6, 0.0, 3);
    let p = Preprocessed::new(&text);
    let mut mean = [0.0f64; 6];
    for i in 0..text.len() {
        let row = p.row(i);
        assert!((row.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    // re-normalizing after centring leaves only a small residual mean
    assert!(mean.iter().map(|m| (m / 300.0).abs()).fold(0.0, f64::max) < 0.1);
}

#[test]
fn hybrid_covers_the_union_with_unit_vectors() {
    let (mut text, mut kb, _) = rotated_pair(200, 8, 0.05, 5);
    text.insert("textonly", &[1.0; 8]).unwrap();
    kb.insert("kbonly", &[0.5; 8]).unwrap();
    let fit = fit_orthogonal_map(&text, &kb, &seed_dictionary(&text, &kb).unwrap()).unwrap();
    let hybrid = build_hybrid(&text, &kb, &fit, HybridWeights::default()).unwrap();
    assert_eq!(hybrid.len(), 202);
    assert!(hybrid.contains("textonly") && hybrid.contains("kbonly"));
    for (w, v) in hybrid.iter() {
        assert!((norm(v) - 1.0).abs() < 1e-5, "{w}");
    }
    // a KB-only word is its preprocessed KB vector
    let p = Preprocessed::new(&kb);
    let at = kb.words().iter().position(|w| w == "kbonly").unwrap();
    let v = hybrid.vector("kbonly").unwrap();
    assert!(v.iter().zip(p.row(at)).all(|(a, b)| (*a as f64 - b).abs() < 1e-6));

    let bad = HybridWeights { text: 0.0, kb: 0.0 };
    assert!(matches!(build_hybrid(&text, &kb, &fit, bad), Err(AlignError::InvalidWeights)));
}

#[test]
fn hybrid_weights_select_a_side() {
    let (text, kb, _) = rotated_pair(100, 4, 0.2, 6);
    let fit = fit_orthogonal_map(&text, &kb, &seed_dictionary(&text, &kb).unwrap()).unwrap();
    let kb_only = build_hybrid(&text, &kb, &fit, HybridWeights { text: 0.0, kb: 1.0 }).unwrap();
    let p = Preprocessed::new(&kb);
    for (i, w) in kb.words().iter().enumerate() {
        let v = kb_only.vector(w).unwrap();
        assert!(v.iter().zip(p.row(i)).all(|(a, b)| (*a as f64 - b).abs() < 1e-6), "{w}");
    }
}
