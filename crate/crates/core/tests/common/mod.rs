#![allow(dead_code)]

use std::sync::Arc;

use cltlab::measure::{DiscreteMeasure, LpVector};
use proptest::prelude::*;

/// Positive weights on an integer grid of the given length.
pub fn measure(weights: Vec<f64>) -> Arc<DiscreteMeasure> {
    let points = (0..weights.len()).map(|i| i as f64).collect();
    Arc::new(DiscreteMeasure::new(points, weights).unwrap())
}

pub fn vector(mu: &Arc<DiscreteMeasure>, values: Vec<f64>) -> LpVector {
    LpVector::new(mu.clone(), values).unwrap()
}

pub fn weights(len: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..2.0, len)
}

/// `k` vectors sharing one random measure.
pub fn vectors(k: usize, len: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<LpVector>> {
    weights(len).prop_flat_map(move |w| {
        let n = w.len();
        (Just(w), prop::collection::vec(prop::collection::vec(-3.0f64..3.0, n), k))
    })
    .prop_map(|(w, vals)| {
        let mu = measure(w);
        vals.into_iter().map(|v| vector(&mu, v)).collect()
    })
}

/// A discrete probability law with 1..=max atoms (atoms sorted, distinct).
pub fn law(max: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    prop::collection::btree_set(-400i32..400, 1..=max).prop_flat_map(|atoms| {
        let n = atoms.len();
        (Just(atoms), prop::collection::vec(0.05f64..1.0, n))
    })
    .prop_map(|(atoms, raw)| {
        let total: f64 = raw.iter().sum();
        let mut probs: Vec<f64> = raw.iter().map(|r| r / total).collect();
        let head: f64 = probs[..probs.len() - 1].iter().sum();
        *probs.last_mut().unwrap() = 1.0 - head;
        (atoms.into_iter().map(|a| a as f64 / 100.0).collect(), probs)
    })
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
