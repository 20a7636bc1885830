//! Exact dependence coefficients of a finite stationary chain.
//!
//! Conditioning on `F₀` reduces to conditioning on `X₀` by the Markov
//! property, so every coefficient is a finite sum over states. Suprema
//! over the auxiliary lags `i`, `j`, `l` run over `0..=max_lag`; the
//! maximizing lag is reported.

use nalgebra::DMatrix;

use crate::error::{invalid, Result};
use crate::generators::FiniteMarkov;
use crate::transport::solve_transport;

const MODULE: &str = "dependence";

pub const DEFAULT_MAX_LAG: usize = 64;

/// A coefficient value with the point where its supremum is attained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Attained {
    pub value: f64,
    /// Maximizing auxiliary lag, when the definition has one.
    pub lag: Option<usize>,
    /// Maximizing thresholds `(x, y)` for `α₂`.
    pub thresholds: Option<(f64, f64)>,
    /// Which branch of a `max(·,·)` definition won.
    pub branch: Branch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Single,
    /// `ã` in `γ̃₂`, or `τ₁` in `τ₂`.
    First,
    /// `b̃` in `γ̃₂`, or the pair term in `τ₂`.
    Second,
}

impl Attained {
    fn plain(value: f64) -> Self {
        Self {
            value,
            lag: None,
            thresholds: None,
            branch: Branch::Single,
        }
    }
}

fn require_centered(chain: &FiniteMarkov) -> Result<()> {
    if chain.is_centered() {
        Ok(())
    } else {
        Err(invalid(
            MODULE,
            format!("chain is not centered (mean {:e}); use FiniteMarkov::centered", chain.mean()),
        ))
    }
}

fn mat_vec(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum())
        .collect()
}

/// `γ̃(k) = Σ_j π_j |s_j| |(P^k s)_j|`.
pub fn gamma_tilde_exact(chain: &FiniteMarkov, k: usize) -> Result<f64> {
    require_centered(chain)?;
    let s = chain.states();
    let cond = mat_vec(&chain.power(k), s);
    Ok(chain
        .stationary()
        .iter()
        .zip(s)
        .zip(&cond)
        .map(|((p, x), c)| p * x.abs() * c.abs())
        .sum())
}

/// `ã(k) = sup_i E(|X_{−i}|^δ |E[X₀X_k|X₀] − E X₀X_k|)`.
pub fn a_tilde_exact(chain: &FiniteMarkov, k: usize, delta: f64, max_lag: usize) -> Result<Attained> {
    require_centered(chain)?;
    let s = chain.states();
    let pi = chain.stationary();
    let d = chain.dim();
    let m_k = mat_vec(&chain.power(k), s);
    let g: Vec<f64> = (0..d).map(|j| s[j] * m_k[j]).collect();
    let mean_g: f64 = (0..d).map(|j| pi[j] * g[j]).sum();
    let dev: Vec<f64> = g.iter().map(|x| (x - mean_g).abs()).collect();
    let weight: Vec<f64> = s.iter().map(|x| x.abs().powf(delta)).collect();
    let mut best = Attained {
        value: f64::NEG_INFINITY,
        lag: Some(0),
        thresholds: None,
        branch: Branch::Single,
    };
    let mut p_i = DMatrix::identity(d, d);
    for i in 0..=max_lag {
        // joint law of (X_{−i}, X₀) is π_m P^i(m, j)
        let v: f64 = (0..d)
            .map(|m| pi[m] * weight[m] * (0..d).map(|j| p_i[(m, j)] * dev[j]).sum::<f64>())
            .sum();
        if v > best.value {
            best.value = v;
            best.lag = Some(i);
        }
        p_i = &p_i * chain.transition();
    }
    Ok(best)
}

/// `b̃(k) = sup_j E(|X₀|^δ |E[X_k X_{k+j}|X₀] − E X_k X_{k+j}|)`.
pub fn b_tilde_exact(chain: &FiniteMarkov, k: usize, delta: f64, max_lag: usize) -> Result<Attained> {
    require_centered(chain)?;
    let s = chain.states();
    let pi = chain.stationary();
    let d = chain.dim();
    let pk = chain.power(k);
    let weight: Vec<f64> = s.iter().map(|x| x.abs().powf(delta)).collect();
    let mut best = Attained {
        value: f64::NEG_INFINITY,
        lag: Some(0),
        thresholds: None,
        branch: Branch::Single,
    };
    let mut pj_s = s.to_vec();
    for j in 0..=max_lag {
        // h(a) = s_a (P^j s)_a = E[X_k X_{k+j} | X_k = a]
        let h: Vec<f64> = (0..d).map(|a| s[a] * pj_s[a]).collect();
        let cond = mat_vec(&pk, &h);
        let mean: f64 = (0..d).map(|a| pi[a] * h[a]).sum();
        let v: f64 = (0..d).map(|l| pi[l] * weight[l] * (cond[l] - mean).abs()).sum();
        if v > best.value {
            best.value = v;
            best.lag = Some(j);
        }
        pj_s = mat_vec(chain.transition(), &pj_s);
    }
    Ok(best)
}

/// `γ̃_{2,δ}(k) = max(ã(k), b̃(k))`.
pub fn gamma2_tilde_exact(chain: &FiniteMarkov, k: usize, delta: f64, max_lag: usize) -> Result<Attained> {
    let a = a_tilde_exact(chain, k, delta, max_lag)?;
    let b = b_tilde_exact(chain, k, delta, max_lag)?;
    Ok(if a.value >= b.value {
        Attained { branch: Branch::First, ..a }
    } else {
        Attained { branch: Branch::Second, ..b }
    })
}

/// `W₁` between two laws on the same real atoms, via the CDF difference.
pub(crate) fn w1_on_atoms(atoms: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let mut order: Vec<usize> = (0..atoms.len()).collect();
    order.sort_by(|&i, &j| atoms[i].total_cmp(&atoms[j]));
    let mut fa = 0.0;
    let mut fb = 0.0;
    let mut acc = 0.0;
    for w in order.windows(2) {
        fa += a[w[0]];
        fb += b[w[0]];
        acc += (fa - fb).abs() * (atoms[w[1]] - atoms[w[0]]);
    }
    acc
}

/// `τ₁(k) = Σ_j π_j W₁(P^k(j, ·), π)`.
pub fn tau1_exact(chain: &FiniteMarkov, k: usize) -> Result<f64> {
    let pk = chain.power(k);
    let pi = chain.stationary();
    let s = chain.states();
    let d = chain.dim();
    Ok((0..d)
        .map(|j| {
            let row: Vec<f64> = (0..d).map(|a| pk[(j, a)]).collect();
            pi[j] * w1_on_atoms(s, &row, pi)
        })
        .sum())
}

/// Optimal transport cost between two laws on pairs of states under
/// `c((a,b),(a',b')) = ½(|s_a − s_a'| + |s_b − s_b'|)`.
pub(crate) fn pair_w1(states: &[f64], p: &[f64], q: &[f64]) -> Result<f64> {
    let d = states.len();
    let support = |w: &[f64]| -> Vec<usize> { (0..d * d).filter(|&i| w[i] > 0.0).collect() };
    let (sp, sq) = (support(p), support(q));
    let supply: Vec<f64> = sp.iter().map(|&i| p[i]).collect();
    let demand: Vec<f64> = sq.iter().map(|&i| q[i]).collect();
    // Renormalize against rounding so the LP sees exactly equal totals.
    let ts: f64 = supply.iter().sum();
    let td: f64 = demand.iter().sum();
    let demand: Vec<f64> = demand.iter().map(|x| x * ts / td).collect();
    let cost: Vec<Vec<f64>> = sp
        .iter()
        .map(|&u| {
            sq.iter()
                .map(|&v| {
                    let (a, b) = (u / d, u % d);
                    let (a2, b2) = (v / d, v % d);
                    0.5 * ((states[a] - states[a2]).abs() + (states[b] - states[b2]).abs())
                })
                .collect()
        })
        .collect();
    Ok(solve_transport(&supply, &demand, &cost)?.cost)
}

/// Conditional pair laws `P((X_k, X_{k+l}) = (a,b) | X₀ = j)` (row `j`,
/// flattened `a·d + b`) and the stationary pair law.
fn pair_laws(pk: &DMatrix<f64>, pl: &DMatrix<f64>, pi: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let d = pi.len();
    let cond = (0..d)
        .map(|j| {
            let mut v = vec![0.0; d * d];
            for a in 0..d {
                for b in 0..d {
                    v[a * d + b] = pk[(j, a)] * pl[(a, b)];
                }
            }
            v
        })
        .collect();
    let mut stat = vec![0.0; d * d];
    for a in 0..d {
        for b in 0..d {
            stat[a * d + b] = pi[a] * pl[(a, b)];
        }
    }
    (cond, stat)
}

/// `τ(F₀, (X_k, X_{k+l})) = ½ Σ_j π_j W(P_{(X_k,X_{k+l})|X₀=j}, P_{(X_k,X_{k+l})})`.
pub fn tau_pair_exact(chain: &FiniteMarkov, k: usize, l: usize) -> Result<f64> {
    let pi = chain.stationary();
    let (cond, stat) = pair_laws(&chain.power(k), &chain.power(l), pi);
    let mut acc = 0.0;
    for (j, c) in cond.iter().enumerate() {
        if pi[j] > 0.0 {
            acc += pi[j] * pair_w1(chain.states(), c, &stat)?;
        }
    }
    Ok(0.5 * acc)
}

/// `τ₂(k) = max(τ₁(k), sup_l τ(F₀, (X_k, X_{k+l})))`.
pub fn tau2_exact(chain: &FiniteMarkov, k: usize, max_lag: usize) -> Result<Attained> {
    let t1 = tau1_exact(chain, k)?;
    let pi = chain.stationary();
    let pk = chain.power(k);
    let mut pl = DMatrix::identity(chain.dim(), chain.dim());
    let mut best_pair = (f64::NEG_INFINITY, 0);
    for l in 0..=max_lag {
        let (cond, stat) = pair_laws(&pk, &pl, pi);
        let mut acc = 0.0;
        for (j, c) in cond.iter().enumerate() {
            if pi[j] > 0.0 {
                acc += pi[j] * pair_w1(chain.states(), c, &stat)?;
            }
        }
        let v = 0.5 * acc;
        if v > best_pair.0 {
            best_pair = (v, l);
        }
        pl = &pl * chain.transition();
    }
    Ok(if t1 >= best_pair.0 {
        Attained {
            value: t1,
            lag: Some(best_pair.1),
            thresholds: None,
            branch: Branch::First,
        }
    } else {
        Attained {
            value: best_pair.0,
            lag: Some(best_pair.1),
            thresholds: None,
            branch: Branch::Second,
        }
    })
}

/// `β₂(k) = sup_l Σ_j π_j Σ_{(a,b)} |P((X_k,X_{k+l}) = (a,b) | X₀=j) − P((X_k,X_{k+l}) = (a,b))|`.
///
/// This is the norm of the supremum over `‖f‖_∞ ≤ 1`, so no ½ appears.
pub fn beta2_exact(chain: &FiniteMarkov, k: usize, max_lag: usize) -> Result<Attained> {
    let pi = chain.stationary();
    let pk = chain.power(k);
    let mut pl = DMatrix::identity(chain.dim(), chain.dim());
    let mut best = Attained {
        value: f64::NEG_INFINITY,
        lag: Some(0),
        thresholds: None,
        branch: Branch::Single,
    };
    for l in 0..=max_lag {
        let (cond, stat) = pair_laws(&pk, &pl, pi);
        let v: f64 = cond
            .iter()
            .zip(pi)
            .map(|(c, p)| p * c.iter().zip(&stat).map(|(x, y)| (x - y).abs()).sum::<f64>())
            .sum();
        if v > best.value {
            best.value = v;
            best.lag = Some(l);
        }
        pl = &pl * chain.transition();
    }
    Ok(best)
}

/// Thresholds at which the centered indicators can be non-trivial: every
/// state value except the largest (above it the indicator is constant 1).
pub(crate) fn threshold_grid(states: &[f64]) -> Vec<f64> {
    let mut t = states.to_vec();
    t.sort_by(f64::total_cmp);
    t.dedup();
    t.pop();
    t
}

/// `α(F₀, (X_k, X_{k+l}))` at fixed thresholds.
pub(crate) fn alpha_at(
    states: &[f64],
    cond: &[Vec<f64>],
    stat: &[f64],
    pi: &[f64],
    x: f64,
    y: f64,
) -> f64 {
    let d = states.len();
    let fx: f64 = (0..d * d).filter(|i| states[i / d] <= x).map(|i| stat[i]).sum();
    let fy: f64 = (0..d * d).filter(|i| states[i % d] <= y).map(|i| stat[i]).sum();
    let prod = |i: usize| {
        let ix = if states[i / d] <= x { 1.0 } else { 0.0 };
        let iy = if states[i % d] <= y { 1.0 } else { 0.0 };
        (ix - fx) * (iy - fy)
    };
    let uncond: f64 = (0..d * d).map(|i| stat[i] * prod(i)).sum();
    cond.iter()
        .zip(pi)
        .map(|(c, p)| p * ((0..d * d).map(|i| c[i] * prod(i)).sum::<f64>() - uncond).abs())
        .sum()
}

/// `α₂(k) = sup_l sup_{x,y} ‖E[1⁽⁰⁾_{X_k≤x} 1⁽⁰⁾_{X_{k+l}≤y} | X₀] − E[…]‖₁`.
pub fn alpha2_exact(chain: &FiniteMarkov, k: usize, max_lag: usize) -> Result<Attained> {
    let pi = chain.stationary();
    let s = chain.states();
    let pk = chain.power(k);
    let grid = threshold_grid(s);
    let mut pl = DMatrix::identity(chain.dim(), chain.dim());
    let mut best = Attained {
        value: 0.0,
        lag: Some(0),
        thresholds: None,
        branch: Branch::Single,
    };
    for l in 0..=max_lag {
        let (cond, stat) = pair_laws(&pk, &pl, pi);
        for &x in &grid {
            for &y in &grid {
                let v = alpha_at(s, &cond, &stat, pi, x, y);
                if v > best.value {
                    best.value = v;
                    best.lag = Some(l);
                    best.thresholds = Some((x, y));
                }
            }
        }
        pl = &pl * chain.transition();
    }
    Ok(best)
}

/// Which coefficient to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CoefficientKind {
    GammaTilde,
    ATilde,
    BTilde,
    Gamma2Tilde,
    Tau1,
    Tau2,
    Beta2,
    Alpha2,
}

impl CoefficientKind {
    pub const ALL: [CoefficientKind; 8] = [
        CoefficientKind::GammaTilde,
        CoefficientKind::ATilde,
        CoefficientKind::BTilde,
        CoefficientKind::Gamma2Tilde,
        CoefficientKind::Tau1,
        CoefficientKind::Tau2,
        CoefficientKind::Beta2,
        CoefficientKind::Alpha2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CoefficientKind::GammaTilde => "gamma_tilde",
            CoefficientKind::ATilde => "a_tilde",
            CoefficientKind::BTilde => "b_tilde",
            CoefficientKind::Gamma2Tilde => "gamma2_tilde",
            CoefficientKind::Tau1 => "tau1",
            CoefficientKind::Tau2 => "tau2",
            CoefficientKind::Beta2 => "beta2",
            CoefficientKind::Alpha2 => "alpha2",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| invalid(MODULE, format!("unknown coefficient kind '{s}'")))
    }

    /// Kinds whose definition involves `δ`.
    pub fn uses_delta(self) -> bool {
        matches!(self, CoefficientKind::ATilde | CoefficientKind::BTilde | CoefficientKind::Gamma2Tilde)
    }
}

/// Dispatch to the exact routine for `kind`.
pub fn exact_coefficient(
    chain: &FiniteMarkov,
    kind: CoefficientKind,
    k: usize,
    delta: f64,
    max_lag: usize,
) -> Result<Attained> {
    match kind {
        CoefficientKind::GammaTilde => gamma_tilde_exact(chain, k).map(Attained::plain),
        CoefficientKind::ATilde => a_tilde_exact(chain, k, delta, max_lag),
        CoefficientKind::BTilde => b_tilde_exact(chain, k, delta, max_lag),
        CoefficientKind::Gamma2Tilde => gamma2_tilde_exact(chain, k, delta, max_lag),
        CoefficientKind::Tau1 => tau1_exact(chain, k).map(Attained::plain),
        CoefficientKind::Tau2 => tau2_exact(chain, k, max_lag),
        CoefficientKind::Beta2 => beta2_exact(chain, k, max_lag),
        CoefficientKind::Alpha2 => alpha2_exact(chain, k, max_lag),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn two_state() -> FiniteMarkov {
        FiniteMarkov::two_state(0.75).unwrap()
    }

    #[test]
    fn two_state_gamma_and_tau1_are_powers_of_half() {
        let c = two_state();
        for k in 1..=10 {
            let expected = 0.5f64.powi(k as i32);
            assert_relative_eq!(gamma_tilde_exact(&c, k).unwrap(), expected, epsilon = 1e-15);
            assert_relative_eq!(tau1_exact(&c, k).unwrap(), expected, epsilon = 1e-15);
        }
    }

    #[test]
    fn two_state_gamma2_vanishes() {
        let c = two_state();
        for k in 1..6 {
            assert!(gamma2_tilde_exact(&c, k, 1.0, 16).unwrap().value.abs() < 1e-15);
        }
    }

    #[test]
    fn iid_chain_has_zero_coefficients() {
        let c = FiniteMarkov::iid(vec![-1.0, 0.0, 2.0], vec![0.4, 0.4, 0.2]).unwrap().centered();
        for kind in CoefficientKind::ALL {
            for k in 1..4 {
                let v = exact_coefficient(&c, kind, k, 0.5, 8).unwrap().value;
                assert!(v.abs() < 1e-14, "{kind:?} k={k}: {v}");
            }
        }
    }

    #[test]
    fn non_centered_chain_rejected() {
        let c = FiniteMarkov::two_state(0.75).unwrap();
        let shifted = FiniteMarkov::new(
            c.states().iter().map(|s| s + 1.0).collect(),
            vec![vec![0.75, 0.25], vec![0.25, 0.75]],
        )
        .unwrap();
        assert!(gamma_tilde_exact(&shifted, 1).is_err());
        assert!(tau1_exact(&shifted, 1).is_ok());
    }

    #[test]
    fn tau2_dominates_tau1_and_alpha_below_beta() {
        let c = FiniteMarkov::reference_three_state();
        for k in 1..6 {
            let t2 = tau2_exact(&c, k, 16).unwrap().value;
            assert!(t2 >= tau1_exact(&c, k).unwrap());
            let a = alpha2_exact(&c, k, 16).unwrap().value;
            let b = beta2_exact(&c, k, 16).unwrap().value;
            assert!(a <= b + 1e-15);
        }
    }

    #[test]
    fn identity_chain_keeps_beta_at_maximum() {
        let rows = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        // The identity chain has no unique stationary law.
        assert!(FiniteMarkov::new(vec![-1.0, 0.0, 1.0], rows.clone()).is_err());
        let pi = vec![0.25, 0.5, 0.25];
        let copy = FiniteMarkov::with_stationary(vec![-1.0, 0.0, 1.0], rows, pi.clone()).unwrap();
        let max = 2.0 * (1.0 - pi.iter().map(|p| p * p).sum::<f64>());
        for k in [1, 7, 30] {
            assert_relative_eq!(beta2_exact(&copy, k, 4).unwrap().value, max, epsilon = 1e-14);
        }
        let sticky = FiniteMarkov::two_state(1.0 - 1e-9).unwrap();
        for k in [1, 5, 20] {
            let b = beta2_exact(&sticky, k, 4).unwrap().value;
            assert_relative_eq!(b, 1.0, epsilon = 1e-6);
        }
    }
}
