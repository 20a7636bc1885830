//! Monte Carlo estimates of the chain coefficients.
//!
//! Tuples `(X_{−i}, X₀, X_k, X_{k+l})` are drawn from the stationary chain
//! and each coefficient is evaluated as a plug-in functional of the
//! empirical joint law of the tuple, at the auxiliary lag (and thresholds)
//! where the exact supremum is attained. Standard errors come from a
//! multinomial bootstrap of the tuple counts: the coefficients are sums of
//! absolute values, and batch means at smaller sample sizes misjudge the
//! spread near those kinks.

use rand_distr::{Binomial, Distribution};

use crate::error::{invalid, Result};
use crate::generators::FiniteMarkov;
use crate::mc::{replicate_values, replicate_vectors};
use crate::rng::{derive_seed, LabRng};

use super::exact::{alpha_at, pair_w1, w1_on_atoms, Attained, Branch, CoefficientKind};

const MODULE: &str = "dependence";

pub const BOOTSTRAP_REPS: usize = 200;
const BOOTSTRAP_SALT: u64 = 0xB007;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Empirical joint law of `(X_{−i}, X₀, X_k, X_{k+l})`, flattened in that
/// order with radix `d`.
struct JointLaw {
    d: usize,
    probs: Vec<f64>,
}

impl JointLaw {
    fn idx(&self, m: usize, j: usize, a: usize, b: usize) -> usize {
        ((m * self.d + j) * self.d + a) * self.d + b
    }

    fn p(&self, m: usize, j: usize, a: usize, b: usize) -> f64 {
        self.probs[self.idx(m, j, a, b)]
    }

    fn pi0(&self) -> Vec<f64> {
        let d = self.d;
        (0..d)
            .map(|j| {
                let mut s = 0.0;
                for m in 0..d {
                    for a in 0..d {
                        for b in 0..d {
                            s += self.p(m, j, a, b);
                        }
                    }
                }
                s
            })
            .collect()
    }

    /// Conditional law of `(X_k, X_{k+l})` given `X₀ = j`, and the pooled law.
    fn pair_given_x0(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        let d = self.d;
        let mut cond = vec![vec![0.0; d * d]; d];
        let mut pooled = vec![0.0; d * d];
        for m in 0..d {
            for j in 0..d {
                for a in 0..d {
                    for b in 0..d {
                        let p = self.p(m, j, a, b);
                        cond[j][a * d + b] += p;
                        pooled[a * d + b] += p;
                    }
                }
            }
        }
        let pi0 = self.pi0();
        for (j, c) in cond.iter_mut().enumerate() {
            if pi0[j] > 0.0 {
                c.iter_mut().for_each(|x| *x /= pi0[j]);
            }
        }
        (cond, pooled)
    }
}

fn plug_in(
    kind: CoefficientKind,
    law: &JointLaw,
    states: &[f64],
    delta: f64,
    at: &Attained,
) -> Result<f64> {
    let d = law.d;
    let pi0 = law.pi0();
    let (cond, pooled) = law.pair_given_x0();
    let cond_xk: Vec<Vec<f64>> = cond
        .iter()
        .map(|c| (0..d).map(|a| (0..d).map(|b| c[a * d + b]).sum()).collect())
        .collect();
    let pooled_xk: Vec<f64> = (0..d).map(|a| (0..d).map(|b| pooled[a * d + b]).sum()).collect();
    let s = states;

    let gamma = || -> f64 {
        (0..d)
            .map(|j| {
                let m: f64 = (0..d).map(|a| cond_xk[j][a] * s[a]).sum();
                pi0[j] * s[j].abs() * m.abs()
            })
            .sum()
    };
    let a_tilde = || -> f64 {
        let g: Vec<f64> = (0..d)
            .map(|j| s[j] * (0..d).map(|a| cond_xk[j][a] * s[a]).sum::<f64>())
            .collect();
        let mean: f64 = (0..d).map(|j| pi0[j] * g[j]).sum();
        let mut acc = 0.0;
        for m in 0..d {
            for j in 0..d {
                let pmj: f64 = (0..d)
                    .flat_map(|a| (0..d).map(move |b| (a, b)))
                    .map(|(a, b)| law.p(m, j, a, b))
                    .sum();
                acc += pmj * s[m].abs().powf(delta) * (g[j] - mean).abs();
            }
        }
        acc
    };
    let b_tilde = || -> f64 {
        let h: Vec<f64> = (0..d)
            .map(|j| (0..d * d).map(|i| cond[j][i] * s[i / d] * s[i % d]).sum())
            .collect();
        let mean: f64 = (0..d * d).map(|i| pooled[i] * s[i / d] * s[i % d]).sum();
        (0..d).map(|j| pi0[j] * s[j].abs().powf(delta) * (h[j] - mean).abs()).sum()
    };
    let tau1 = || -> f64 { (0..d).map(|j| pi0[j] * w1_on_atoms(s, &cond_xk[j], &pooled_xk)).sum() };
    let tau_pair = || -> Result<f64> {
        let mut acc = 0.0;
        for j in 0..d {
            if pi0[j] > 0.0 {
                acc += pi0[j] * pair_w1(s, &cond[j], &pooled)?;
            }
        }
        Ok(0.5 * acc)
    };
    let beta = || -> f64 {
        (0..d)
            .map(|j| pi0[j] * cond[j].iter().zip(&pooled).map(|(x, y)| (x - y).abs()).sum::<f64>())
            .sum()
    };

    Ok(match kind {
        CoefficientKind::GammaTilde => gamma(),
        CoefficientKind::ATilde => a_tilde(),
        CoefficientKind::BTilde => b_tilde(),
        CoefficientKind::Gamma2Tilde => match at.branch {
            Branch::Second => b_tilde(),
            _ => a_tilde(),
        },
        CoefficientKind::Tau1 => tau1(),
        CoefficientKind::Tau2 => match at.branch {
            Branch::Second => tau_pair()?,
            _ => tau1(),
        },
        CoefficientKind::Beta2 => beta(),
        CoefficientKind::Alpha2 => match at.thresholds {
            Some((x, y)) => alpha_at(s, &cond, &pooled, &pi0, x, y),
            None => 0.0,
        },
    })
}

/// The lags `(i, l)` that the tuple must span for `kind` at `at`.
fn tuple_lags(kind: CoefficientKind, at: &Attained) -> (usize, usize) {
    let lag = at.lag.unwrap_or(0);
    match kind {
        CoefficientKind::ATilde => (lag, 0),
        CoefficientKind::Gamma2Tilde if at.branch != Branch::Second => (lag, 0),
        CoefficientKind::GammaTilde | CoefficientKind::Tau1 => (0, 0),
        CoefficientKind::Tau2 if at.branch != Branch::Second => (0, 0),
        _ => (0, lag),
    }
}

/// Estimate `kind` at lag `k` from `samples` simulated tuples, evaluated
/// at the maximizer `at` of the exact computation.
pub fn mc_coefficient(
    chain: &FiniteMarkov,
    kind: CoefficientKind,
    k: usize,
    delta: f64,
    at: &Attained,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if samples < 1000 {
        return Err(invalid(MODULE, "need at least 1000 samples"));
    }
    let d = chain.dim();
    let (i_lag, l_lag) = tuple_lags(kind, at);
    let rows = |m: usize| -> Vec<Vec<f64>> {
        let p = chain.power(m);
        (0..d)
            .map(|r| {
                let mut acc = 0.0;
                (0..d)
                    .map(|c| {
                        acc += p[(r, c)];
                        acc
                    })
                    .collect()
            })
            .collect()
    };
    let (cum_i, cum_k, cum_l) = (rows(i_lag), rows(k), rows(l_lag));
    let tuples = replicate_vectors(samples, seed, 4, |rng, out| {
        let m = chain.sample_stationary(rng);
        let j = crate::generators::markov::sample_cumulative(&cum_i[m], rng);
        let a = crate::generators::markov::sample_cumulative(&cum_k[j], rng);
        let b = crate::generators::markov::sample_cumulative(&cum_l[a], rng);
        out[0] = m as f64;
        out[1] = j as f64;
        out[2] = a as f64;
        out[3] = b as f64;
    });
    let n = samples;
    let cells = d * d * d * d;
    let mut counts = vec![0u64; cells];
    for r in tuples.chunks_exact(4) {
        counts[((r[0] as usize * d + r[1] as usize) * d + r[2] as usize) * d + r[3] as usize] += 1;
    }
    let law_of = |c: &[u64]| JointLaw {
        d,
        probs: c.iter().map(|&x| x as f64 / n as f64).collect(),
    };
    let value = plug_in(kind, &law_of(&counts), chain.states(), delta, at)?;
    let boot = replicate_values(BOOTSTRAP_REPS, derive_seed(seed, BOOTSTRAP_SALT), |rng| {
        let c = multinomial(rng, n as u64, &counts);
        plug_in(kind, &law_of(&c), chain.states(), delta, at).unwrap_or(f64::NAN)
    });
    if boot.iter().any(|v| !v.is_finite()) {
        return Err(invalid(MODULE, "bootstrap replicate failed"));
    }
    let mean_b = boot.iter().sum::<f64>() / boot.len() as f64;
    let var_b = boot.iter().map(|v| (v - mean_b).powi(2)).sum::<f64>() / (boot.len() - 1) as f64;
    Ok(McEstimate {
        value,
        stderr: var_b.sqrt(),
        samples: n,
    })
}

/// Resample `total` draws from the empirical cell frequencies by
/// sequential conditional binomials.
fn multinomial(rng: &mut LabRng, total: u64, counts: &[u64]) -> Vec<u64> {
    let mut left_n = total;
    let mut left_mass: u64 = counts.iter().sum();
    counts
        .iter()
        .map(|&c| {
            if left_n == 0 || c == 0 {
                left_mass -= c;
                return 0;
            }
            let p = c as f64 / left_mass as f64;
            let x = if p >= 1.0 {
                left_n
            } else {
                Binomial::new(left_n, p).map(|b| b.sample(rng)).unwrap_or(0)
            };
            left_n -= x;
            left_mass -= c;
            x
        })
        .collect()
}
