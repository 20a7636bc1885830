//! Finite-state stationary Markov chains with exact linear-algebra access.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::rng::LabRng;

const MODULE: &str = "generators";

/// A stationary chain on real states `s_1, …, s_d` with row-stochastic
/// transition matrix `P` and invariant law `π`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMarkov {
    states: Vec<f64>,
    transition: DMatrix<f64>,
    stationary: Vec<f64>,
    cum_rows: Vec<Vec<f64>>,
    cum_stationary: Vec<f64>,
}

fn cumulative(probs: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    probs
        .map(|p| {
            acc += p;
            acc
        })
        .collect()
}

pub(crate) fn sample_cumulative(cum: &[f64], rng: &mut LabRng) -> usize {
    let u: f64 = rng.random::<f64>() * cum[cum.len() - 1];
    cum.partition_point(|c| *c <= u).min(cum.len() - 1)
}

impl FiniteMarkov {
    pub fn new(states: Vec<f64>, rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::build(states, rows, None)
    }

    /// A chain whose invariant law is not unique (e.g. `P = I`); `π` is
    /// supplied by the caller and checked against `πP = π`.
    pub fn with_stationary(states: Vec<f64>, rows: Vec<Vec<f64>>, stationary: Vec<f64>) -> Result<Self> {
        Self::build(states, rows, Some(stationary))
    }

    fn build(states: Vec<f64>, rows: Vec<Vec<f64>>, given: Option<Vec<f64>>) -> Result<Self> {
        let d = states.len();
        if d == 0 {
            return Err(invalid(MODULE, "chain needs at least one state"));
        }
        if rows.len() != d || rows.iter().any(|r| r.len() != d) {
            return Err(invalid(MODULE, format!("transition matrix must be {d}x{d}")));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
                return Err(invalid(MODULE, format!("row {i} has a negative or non-finite entry")));
            }
            let s: f64 = r.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(invalid(MODULE, format!("row {i} sums to {s}, not 1")));
            }
        }
        let transition = DMatrix::from_fn(d, d, |i, j| rows[i][j]);
        let stationary = match given {
            None => stationary_law(&transition)?,
            Some(pi) => {
                check_invariant(&transition, &pi)?;
                pi
            }
        };
        let cum_rows = rows.iter().map(|r| cumulative(r.iter().copied())).collect();
        let cum_stationary = cumulative(stationary.iter().copied());
        Ok(Self {
            states,
            transition,
            stationary,
            cum_rows,
            cum_stationary,
        })
    }

    /// Two states `(−1, 1)`, staying put with probability `a`.
    pub fn two_state(a: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&a) {
            return Err(invalid(MODULE, format!("stay probability must lie in [0,1], got {a}")));
        }
        Self::new(vec![-1.0, 1.0], vec![vec![a, 1.0 - a], vec![1.0 - a, a]])
    }

    /// The non-reversible three-state chain used as the reference model for
    /// coefficient cross-checks. States have distinct absolute values and
    /// are centered under `π`.
    pub fn reference_three_state() -> Self {
        Self::new(
            vec![-2.0, 0.5, 1.5],
            vec![
                vec![0.5, 0.3, 0.2],
                vec![0.2, 0.6, 0.2],
                vec![0.3, 0.3, 0.4],
            ],
        )
        .expect("reference chain is valid")
        .centered()
    }

    /// An i.i.d. sequence written as a chain whose rows all equal `probs`.
    pub fn iid(states: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        let d = probs.len();
        Self::new(states, vec![probs; d])
    }

    /// Shift the states so that `Σ π_j s_j = 0`.
    pub fn centered(mut self) -> Self {
        let m = self.mean();
        for s in &mut self.states {
            *s -= m;
        }
        self
    }

    pub fn states(&self) -> &[f64] {
        &self.states
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn transition(&self) -> &DMatrix<f64> {
        &self.transition
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn mean(&self) -> f64 {
        self.states.iter().zip(&self.stationary).map(|(s, p)| s * p).sum()
    }

    pub fn is_centered(&self) -> bool {
        self.mean().abs() <= 1e-12 * (1.0 + self.states.iter().fold(0.0f64, |a, s| a.max(s.abs())))
    }

    /// `P^k`, with `P^0 = I`.
    pub fn power(&self, k: usize) -> DMatrix<f64> {
        markov_power(self, k)
    }

    pub(crate) fn sample_stationary(&self, rng: &mut LabRng) -> usize {
        sample_cumulative(&self.cum_stationary, rng)
    }

    pub(crate) fn step(&self, from: usize, rng: &mut LabRng) -> usize {
        sample_cumulative(&self.cum_rows[from], rng)
    }

    /// Fill `out` with state indices of a stationary path.
    pub(crate) fn fill_indices(&self, rng: &mut LabRng, out: &mut [usize]) {
        if out.is_empty() {
            return;
        }
        let mut s = self.sample_stationary(rng);
        out[0] = s;
        for slot in out.iter_mut().skip(1) {
            s = self.step(s, rng);
            *slot = s;
        }
    }

    /// Modulus of the second-largest eigenvalue of `P`.
    pub fn second_eigenvalue_modulus(&self) -> f64 {
        let mut moduli: Vec<f64> = self
            .transition
            .complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .collect();
        moduli.sort_by(|a, b| b.total_cmp(a));
        moduli.get(1).copied().unwrap_or(0.0)
    }
}

fn stationary_law(p: &DMatrix<f64>) -> Result<Vec<f64>> {
    let d = p.nrows();
    // (Pᵀ − I)π = 0 with the last equation replaced by Σπ = 1.
    let mut a = p.transpose() - DMatrix::identity(d, d);
    for j in 0..d {
        a[(d - 1, j)] = 1.0;
    }
    let mut rhs = DVector::zeros(d);
    rhs[d - 1] = 1.0;
    let pi = a.lu().solve(&rhs).ok_or_else(|| Error::Invariant {
        module: MODULE,
        msg: "transition matrix has no unique stationary law".into(),
    })?;
    let pi: Vec<f64> = pi.iter().map(|v| if v.abs() < 1e-15 { 0.0 } else { *v }).collect();
    if pi.iter().any(|v| *v < -1e-12) {
        return Err(Error::Invariant {
            module: MODULE,
            msg: "stationary solve produced negative mass (chain not irreducible?)".into(),
        });
    }
    let pi: Vec<f64> = pi.into_iter().map(|v| v.max(0.0)).collect();
    check_invariant(p, &pi)?;
    Ok(pi)
}

fn check_invariant(p: &DMatrix<f64>, pi: &[f64]) -> Result<()> {
    let d = p.nrows();
    if pi.len() != d {
        return Err(Error::LengthMismatch {
            module: MODULE,
            expected: d,
            got: pi.len(),
        });
    }
    let total: f64 = pi.iter().sum();
    if pi.iter().any(|v| !(*v >= 0.0)) || (total - 1.0).abs() > 1e-12 {
        return Err(invalid(MODULE, "stationary law must be a probability vector"));
    }
    let row = DMatrix::from_row_slice(1, d, pi);
    let resid = (&row * p - &row).abs().max();
    if resid > 1e-10 {
        return Err(Error::Invariant {
            module: MODULE,
            msg: format!("πP = π violated by {resid:e}"),
        });
    }
    Ok(())
}

/// `P^k` by repeated squaring.
pub fn markov_power(model: &FiniteMarkov, k: usize) -> DMatrix<f64> {
    let d = model.dim();
    let mut result = DMatrix::identity(d, d);
    let mut base = model.transition.clone();
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            result = &result * &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn power_examples() {
        let m = FiniteMarkov::two_state(0.75).unwrap();
        assert_eq!(m.power(0), DMatrix::identity(2, 2));
        assert_relative_eq!(m.power(2)[(0, 0)], 0.625, epsilon = 1e-15);
        for k in [1usize, 3, 7, 12] {
            let expected = (1.0 + 0.5f64.powi(k as i32)) / 2.0;
            assert_relative_eq!(m.power(k)[(1, 1)], expected, epsilon = 1e-14);
        }
        let far = FiniteMarkov::reference_three_state().power(200);
        let pi = FiniteMarkov::reference_three_state().stationary().to_vec();
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(far[(i, j)], pi[j], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn power_is_a_semigroup() {
        let m = FiniteMarkov::reference_three_state();
        for (a, b) in [(0, 3), (2, 5), (7, 11)] {
            let lhs = m.power(a + b);
            let rhs = m.power(a) * m.power(b);
            assert!((lhs - rhs).abs().max() < 1e-10);
        }
        for k in 0..20 {
            let p = m.power(k);
            for i in 0..3 {
                assert!((p.row(i).sum() - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn stationary_law_is_invariant() {
        let m = FiniteMarkov::reference_three_state();
        let pi = DMatrix::from_row_slice(1, 3, m.stationary());
        assert!((&pi * m.transition() - &pi).abs().max() < 1e-12);
        assert!(m.is_centered());
        assert_relative_eq!(m.stationary().iter().sum::<f64>(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn rejects_non_stochastic_rows() {
        assert!(FiniteMarkov::new(vec![0.0, 1.0], vec![vec![0.5, 0.4], vec![0.5, 0.5]]).is_err());
        assert!(FiniteMarkov::new(vec![0.0, 1.0], vec![vec![1.2, -0.2], vec![0.5, 0.5]]).is_err());
        assert!(FiniteMarkov::new(vec![0.0], vec![vec![0.5, 0.5]]).is_err());
    }

    #[test]
    fn second_eigenvalue_of_two_state() {
        let m = FiniteMarkov::two_state(0.75).unwrap();
        assert_relative_eq!(m.second_eigenvalue_modulus(), 0.5, epsilon = 1e-12);
    }
}
