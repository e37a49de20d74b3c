//! Skip-gram negative-sampling objective for one (center, context, negatives)
//! triple:
//!
//! `L = -ln σ(u_pos · h) - Σ_n ln σ(-u_n · h)`
//!
//! where `h` is the center's hidden vector and `u_*` are output vectors. The
//! trainer takes SGD steps along the gradients computed here.

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln σ(x)` without overflow for large |x|.
fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// `-∂L/∂score` for an output with the given label (1 positive, 0 negative).
#[inline]
pub fn score_coefficient(score: f64, label: f64) -> f64 {
    label - sigmoid(score)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn loss(hidden: &[f64], positive: &[f64], negatives: &[&[f64]]) -> f64 {
    -log_sigmoid(dot(positive, hidden)) - negatives.iter().map(|n| log_sigmoid(-dot(n, hidden))).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub hidden: Vec<f64>,
    pub positive: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

/// Analytic gradients of [`loss`].
pub fn gradients(hidden: &[f64], positive: &[f64], negatives: &[&[f64]]) -> Gradients {
    let mut grad_h = vec![0.0; hidden.len()];
    let g = score_coefficient(dot(positive, hidden), 1.0);
    for (gh, &u) in grad_h.iter_mut().zip(positive) {
        *gh -= g * u;
    }
    let grad_pos = hidden.iter().map(|&h| -g * h).collect();
    let mut grad_negs = Vec::with_capacity(negatives.len());
    for n in negatives {
        let g = score_coefficient(dot(n, hidden), 0.0);
        for (gh, &u) in grad_h.iter_mut().zip(n.iter()) {
            *gh -= g * u;
        }
        grad_negs.push(hidden.iter().map(|&h| -g * h).collect());
    }
    Gradients { hidden: grad_h, positive: grad_pos, negatives: grad_negs }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(800.0) <= 1.0 && sigmoid(-800.0) >= 0.0);
        assert!((log_sigmoid(-800.0) + 800.0).abs() < 1e-9);
        assert!(log_sigmoid(800.0).abs() < 1e-300);
    }

    #[test]
    fn zero_vectors_give_ln2_per_term() {
        let z = [0.0; 3];
        let l = loss(&z, &z, &[&z, &z]);
        assert!((l - 3.0 * std::f64::consts::LN_2).abs() < 1e-12);
    }
}
