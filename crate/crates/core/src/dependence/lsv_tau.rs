//! Empirical `τ₁` for the LSV map.
//!
//! Orbits start from the Ulam density (plus burn-in). Their initial
//! points are binned into cells of equal stationary mass; for each lag
//! `k` the law of `X_k` within a bin is compared in `W₁` with the pooled
//! law of `X_k` over all orbits, and the distances are averaged with the
//! bin frequencies as weights.

use crate::error::{invalid, Result};
use crate::generators::{lsv::lsv_step_unchecked, ulam_density, UlamDensity, DEFAULT_BURN_IN, DEFAULT_ULAM_BINS};
use crate::mc::replicate_vectors;

use super::{CoefficientKind, CoefficientSequence, Provenance};

const MODULE: &str = "dependence";

/// Bins with fewer samples than this widen the error bars and are flagged.
pub const MIN_BIN_SAMPLES: usize = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct LsvTauConfig {
    pub gamma: f64,
    pub k_list: Vec<usize>,
    pub n_bins: usize,
    pub n_mc: usize,
    pub seed: u64,
    pub ulam_bins: usize,
    pub burn_in: usize,
    pub batches: usize,
}

impl LsvTauConfig {
    pub fn new(gamma: f64, k_list: Vec<usize>, n_bins: usize, n_mc: usize, seed: u64) -> Self {
        Self {
            gamma,
            k_list,
            n_bins,
            n_mc,
            seed,
            ulam_bins: DEFAULT_ULAM_BINS,
            burn_in: DEFAULT_BURN_IN,
            batches: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsvTauResult {
    pub sequence: CoefficientSequence,
    /// Number of bins holding fewer than `MIN_BIN_SAMPLES` initial points.
    pub sparse_bins: usize,
    pub min_bin_count: usize,
}

fn bin_edges(density: &UlamDensity, n_bins: usize) -> Vec<f64> {
    (1..n_bins)
        .map(|b| {
            let target = b as f64 / n_bins as f64;
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if density.cdf(mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

/// `∫ |F_a − F_b|` for two sorted samples.
pub(crate) fn w1_sorted(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut acc = 0.0;
    let mut prev = f64::NAN;
    while i < a.len() || j < b.len() {
        let x = if j >= b.len() || (i < a.len() && a[i] <= b[j]) {
            a[i]
        } else {
            b[j]
        };
        if prev.is_finite() {
            acc += ((i as f64 / na) - (j as f64 / nb)).abs() * (x - prev);
        }
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        prev = x;
    }
    acc
}

fn estimate(bins: &[usize], endpoints: &[Vec<f64>], n_bins: usize) -> Vec<f64> {
    let n = bins.len();
    endpoints
        .iter()
        .map(|xs| {
            let mut pooled = xs.clone();
            pooled.sort_by(f64::total_cmp);
            let mut per_bin: Vec<Vec<f64>> = vec![Vec::new(); n_bins];
            for (b, x) in bins.iter().zip(xs) {
                per_bin[*b].push(*x);
            }
            per_bin
                .iter_mut()
                .filter(|v| !v.is_empty())
                .map(|v| {
                    v.sort_by(f64::total_cmp);
                    (v.len() as f64 / n as f64) * w1_sorted(v, &pooled)
                })
                .sum()
        })
        .collect()
}

pub fn tau1_lsv_empirical(cfg: &LsvTauConfig) -> Result<LsvTauResult> {
    if !(cfg.gamma > 0.0 && cfg.gamma < 1.0) {
        return Err(invalid(MODULE, format!("gamma must lie in (0,1), got {}", cfg.gamma)));
    }
    if cfg.n_bins < 16 {
        return Err(invalid(MODULE, format!("need at least 16 bins, got {}", cfg.n_bins)));
    }
    if cfg.k_list.is_empty() {
        return Err(invalid(MODULE, "k_list is empty"));
    }
    if cfg.batches < 2 || cfg.n_mc < cfg.batches * cfg.n_bins {
        return Err(invalid(MODULE, "n_mc too small for the requested bins and batches"));
    }
    let density = ulam_density(cfg.gamma, cfg.ulam_bins)?;
    let edges = bin_edges(&density, cfg.n_bins);
    let mut ks = cfg.k_list.clone();
    ks.sort_unstable();
    ks.dedup();
    let width = 1 + ks.len();
    let k_max = *ks.last().expect("nonempty");
    let gamma = cfg.gamma;
    let rows = replicate_vectors(cfg.n_mc, cfg.seed, width, |rng, out| {
        let mut x = density.sample(rng);
        for _ in 0..cfg.burn_in {
            x = lsv_step_unchecked(x, gamma);
        }
        out[0] = edges.partition_point(|e| *e <= x) as f64;
        let mut slot = 1;
        for step in 0..=k_max {
            if slot < width && ks[slot - 1] == step {
                out[slot] = x;
                slot += 1;
            }
            x = lsv_step_unchecked(x, gamma);
        }
    });
    let bins: Vec<usize> = rows.chunks(width).map(|r| r[0] as usize).collect();
    let endpoints: Vec<Vec<f64>> = (0..ks.len())
        .map(|c| rows.chunks(width).map(|r| r[c + 1]).collect())
        .collect();

    let values = estimate(&bins, &endpoints, cfg.n_bins);

    let size = cfg.n_mc / cfg.batches;
    let batch_vals: Vec<Vec<f64>> = (0..cfg.batches)
        .map(|b| {
            let r = b * size..(b + 1) * size;
            let eps: Vec<Vec<f64>> = endpoints.iter().map(|e| e[r.clone()].to_vec()).collect();
            estimate(&bins[r.clone()], &eps, cfg.n_bins)
        })
        .collect();
    let mut counts = vec![0usize; cfg.n_bins];
    for b in &bins {
        counts[*b] += 1;
    }
    let min_bin_count = *counts.iter().min().expect("bins nonempty");
    let sparse_bins = counts.iter().filter(|c| **c < MIN_BIN_SAMPLES).count();
    let widen = if sparse_bins > 0 {
        (MIN_BIN_SAMPLES as f64 / min_bin_count.max(1) as f64).sqrt()
    } else {
        1.0
    };
    let nb = cfg.batches as f64;
    let stderr: Vec<f64> = (0..ks.len())
        .map(|c| {
            let m = batch_vals.iter().map(|v| v[c]).sum::<f64>() / nb;
            let var = batch_vals.iter().map(|v| (v[c] - m).powi(2)).sum::<f64>() / (nb - 1.0);
            widen * (var / nb).sqrt()
        })
        .collect();
    let provenance = Provenance::Estimated(format!(
        "gamma={};n_bins={};n_mc={};seed={};burn_in={};ulam_bins={};batches={}",
        cfg.gamma, cfg.n_bins, cfg.n_mc, cfg.seed, cfg.burn_in, cfg.ulam_bins, cfg.batches
    ));
    let n = ks.len();
    Ok(LsvTauResult {
        sequence: CoefficientSequence {
            kind: CoefficientKind::Tau1,
            ks,
            values,
            provenance,
            delta: None,
            stderr: Some(stderr),
            argmax: vec![None; n],
        },
        sparse_bins,
        min_bin_count,
    })
}
