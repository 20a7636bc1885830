//! Deterministic parallel Monte Carlo.
//!
//! Replicates are grouped into fixed-size chunks; chunk `c` draws from
//! stream `c` of the master seed and chunk results are reduced in index
//! order. The output therefore does not depend on the worker count.

use rayon::prelude::*;

use crate::rng::{replicate_rng, LabRng};

pub const CHUNK: usize = 256;

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub reps: usize,
}

impl MeanEstimate {
    pub fn from_sums(sum: f64, sumsq: f64, reps: usize) -> Self {
        let n = reps as f64;
        let mean = sum / n;
        let var = if reps > 1 {
            ((sumsq - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        Self {
            mean,
            stderr: (var / n).sqrt(),
            reps,
        }
    }

    pub fn from_values(values: &[f64]) -> Self {
        let sum: f64 = values.iter().sum();
        let mean = sum / values.len() as f64;
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        let n = values.len() as f64;
        let var = if values.len() > 1 { ss / (n - 1.0) } else { 0.0 };
        Self {
            mean,
            stderr: (var / n).sqrt(),
            reps: values.len(),
        }
    }
}

/// Run `reps` replicates of `f`, each chunk with its own stream, and
/// return the per-replicate values in replicate order.
pub fn replicate_values<F>(reps: usize, seed: u64, f: F) -> Vec<f64>
where
    F: Fn(&mut LabRng) -> f64 + Sync,
{
    replicate_vectors(reps, seed, 1, |rng, out| out[0] = f(rng))
}

/// Like [`replicate_values`] but each replicate writes `width` numbers.
/// The result is row-major, `reps × width`.
pub fn replicate_vectors<F>(reps: usize, seed: u64, width: usize, f: F) -> Vec<f64>
where
    F: Fn(&mut LabRng, &mut [f64]) + Sync,
{
    let chunks = reps.div_ceil(CHUNK);
    let parts: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = replicate_rng(seed, c as u64);
            let len = CHUNK.min(reps - c * CHUNK);
            let mut out = vec![0.0; len * width];
            for row in out.chunks_mut(width.max(1)) {
                f(&mut rng, row);
            }
            out
        })
        .collect();
    parts.concat()
}

pub fn replicate_mean<F>(reps: usize, seed: u64, f: F) -> MeanEstimate
where
    F: Fn(&mut LabRng) -> f64 + Sync,
{
    MeanEstimate::from_values(&replicate_values(reps, seed, f))
}
