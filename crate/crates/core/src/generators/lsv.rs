//! The LSV intermittent map and an Ulam approximation of its invariant density.

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::rng::LabRng;

const MODULE: &str = "generators";
const ULAM_TOL: f64 = 1e-14;
const ULAM_MAX_ITER: usize = 200_000;

/// One application of `T_γ`. The result is clamped to `[0, 1]`.
pub fn lsv_step(x: f64, gamma: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(invalid(MODULE, format!("lsv_step needs x in [0,1], got {x}")));
    }
    Ok(lsv_step_unchecked(x, gamma))
}

#[inline]
pub(crate) fn lsv_step_unchecked(x: f64, gamma: f64) -> f64 {
    let y = if x < 0.5 {
        x * (1.0 + (2.0 * x).powf(gamma))
    } else {
        2.0 * x - 1.0
    };
    y.clamp(0.0, 1.0)
}

/// Inverse of the left branch `x ↦ x(1+(2x)^γ)` on `[0, ½]`.
fn left_branch_inverse(y: f64, gamma: f64) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    if y >= 1.0 {
        return 0.5;
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid * (1.0 + (2.0 * mid).powf(gamma)) < y {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Piecewise-constant density on `m` equal cells of `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct UlamDensity {
    gamma: f64,
    /// Density value on each cell; `Σ heights / m = 1`.
    heights: Vec<f64>,
    cum_mass: Vec<f64>,
    iterations: usize,
}

impl UlamDensity {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn bins(&self) -> usize {
        self.heights.len()
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Mass of cell `i`.
    pub fn cell_mass(&self, i: usize) -> f64 {
        self.heights[i] / self.bins() as f64
    }

    pub fn cell_of(&self, x: f64) -> usize {
        let m = self.bins();
        ((x * m as f64) as usize).min(m - 1)
    }

    pub fn density(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        self.heights[self.cell_of(x)]
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        let m = self.bins() as f64;
        let i = self.cell_of(x);
        let below = if i == 0 { 0.0 } else { self.cum_mass[i - 1] };
        (below + self.heights[i] * (x - i as f64 / m)).min(1.0)
    }

    pub fn sample(&self, rng: &mut LabRng) -> f64 {
        let i = crate::generators::markov::sample_cumulative(&self.cum_mass, rng);
        let m = self.bins() as f64;
        let u: f64 = rng.random();
        ((i as f64 + u) / m).min(1.0)
    }
}

/// Leading left eigenvector of the Ulam matrix of `T_γ` on `m_bins` cells.
///
/// The matrix entries are exact interval lengths: every cell is split at
/// the preimages of all cell edges, so each piece maps into a single cell.
pub fn ulam_density(gamma: f64, m_bins: usize) -> Result<UlamDensity> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(invalid(MODULE, format!("gamma must lie in [0,1), got {gamma}")));
    }
    if m_bins < 16 {
        return Err(invalid(MODULE, format!("ulam_density needs at least 16 bins, got {m_bins}")));
    }
    let m = m_bins;
    let mf = m as f64;
    let mut cuts: Vec<f64> = Vec::with_capacity(3 * m + 3);
    for k in 0..=m {
        let e = k as f64 / mf;
        cuts.push(e);
        cuts.push(left_branch_inverse(e, gamma));
        cuts.push(0.5 * (e + 1.0));
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-15);

    // Sparse rows: (destination, probability).
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
    for w in cuts.windows(2) {
        let (u, v) = (w[0], w[1]);
        if v <= u {
            continue;
        }
        let mid = 0.5 * (u + v);
        let src = ((mid * mf) as usize).min(m - 1);
        let dst = ((lsv_step_unchecked(mid, gamma) * mf) as usize).min(m - 1);
        let row = &mut rows[src];
        match row.iter_mut().find(|(d, _)| *d == dst) {
            Some(entry) => entry.1 += (v - u) * mf,
            None => row.push((dst, (v - u) * mf)),
        }
    }
    for row in &mut rows {
        let s: f64 = row.iter().map(|e| e.1).sum();
        for e in row.iter_mut() {
            e.1 /= s;
        }
    }

    let mut mass = vec![1.0 / mf; m];
    let mut next = vec![0.0; m];
    let mut iterations = 0;
    loop {
        iterations += 1;
        next.iter_mut().for_each(|x| *x = 0.0);
        for (i, row) in rows.iter().enumerate() {
            for &(j, p) in row {
                next[j] += mass[i] * p;
            }
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= total);
        let diff: f64 = next.iter().zip(&mass).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut mass, &mut next);
        if diff < ULAM_TOL {
            break;
        }
        if iterations >= ULAM_MAX_ITER {
            return Err(Error::NonConvergence {
                module: MODULE,
                msg: format!("Ulam power iteration stalled at L1 change {diff:e} after {iterations} steps"),
            });
        }
    }
    let mut acc = 0.0;
    let cum_mass = mass
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect();
    Ok(UlamDensity {
        gamma,
        heights: mass.iter().map(|p| p * mf).collect(),
        cum_mass,
        iterations,
    })
}
