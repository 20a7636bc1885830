//! Upper-tail quantile function of a nonnegative discrete law, its
//! primitive, and the generalized inverse of that primitive.
//!
//! With distinct atoms `v_1 > v_2 > … > v_r ≥ 0` of masses `q_i` and
//! `c_i = q_1 + … + q_i`, the quantile `Q(u) = inf{t ≥ 0 : P(X > t) ≤ u}`
//! equals `v_i` on `[c_{i−1}, c_i)` and `0` on `[1, ∞)`. Its primitive
//! `H(x) = ∫₀^x Q` is piecewise linear with knots `c_i`.

use crate::error::{invalid, Result};

const MODULE: &str = "dependence";

#[derive(Debug, Clone, PartialEq)]
pub struct NonnegLaw {
    /// Distinct atoms in decreasing order.
    values: Vec<f64>,
    probs: Vec<f64>,
    /// `c_i`, with `cum[r−1] = 1`.
    cum: Vec<f64>,
    /// `H(c_i)`.
    prim: Vec<f64>,
}

impl NonnegLaw {
    pub fn new(atoms: &[f64], probs: &[f64]) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != probs.len() {
            return Err(invalid(MODULE, "law needs equally many atoms and probabilities"));
        }
        if atoms.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
            return Err(invalid(MODULE, "law atoms must be finite and nonnegative"));
        }
        if probs.iter().any(|p| !(*p >= 0.0)) {
            return Err(invalid(MODULE, "law probabilities must be nonnegative"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(invalid(MODULE, format!("law probabilities sum to {total}, not 1")));
        }
        let mut pairs: Vec<(f64, f64)> = atoms
            .iter()
            .zip(probs)
            .filter(|(_, p)| **p > 0.0)
            .map(|(a, p)| (*a, *p / total))
            .collect();
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut values: Vec<f64> = Vec::new();
        let mut masses: Vec<f64> = Vec::new();
        for (a, p) in pairs {
            match values.last() {
                Some(v) if *v == a => *masses.last_mut().expect("nonempty") += p,
                _ => {
                    values.push(a);
                    masses.push(p);
                }
            }
        }
        let mut cum = Vec::with_capacity(values.len());
        let mut prim = Vec::with_capacity(values.len());
        let (mut c, mut h) = (0.0, 0.0);
        for (v, q) in values.iter().zip(&masses) {
            c += q;
            h += v * q;
            cum.push(c);
            prim.push(h);
        }
        *cum.last_mut().expect("nonempty") = 1.0;
        Ok(Self {
            values,
            probs: masses,
            cum,
            prim,
        })
    }

    /// Equal-weight law of a sample; the absolute values are taken.
    pub fn from_sample(sample: &[f64]) -> Result<Self> {
        if sample.is_empty() {
            return Err(invalid(MODULE, "empty sample"));
        }
        let abs: Vec<f64> = sample.iter().map(|x| x.abs()).collect();
        let w = vec![1.0 / sample.len() as f64; sample.len()];
        Self::new(&abs, &w)
    }

    /// Law of `|s_j|` under `π`.
    pub fn abs_of(states: &[f64], probs: &[f64]) -> Result<Self> {
        let abs: Vec<f64> = states.iter().map(|x| x.abs()).collect();
        Self::new(&abs, probs)
    }

    pub fn atoms(&self) -> &[f64] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn mean(&self) -> f64 {
        *self.prim.last().expect("nonempty")
    }

    pub fn moment(&self, r: f64) -> f64 {
        self.values.iter().zip(&self.probs).map(|(v, p)| p * v.powf(r)).sum()
    }

    /// `Q(u)` for `u ≥ 0`; zero from `u = 1` on.
    pub(crate) fn quantile_at(&self, u: f64) -> f64 {
        let i = self.cum.partition_point(|c| *c <= u);
        if i >= self.values.len() {
            0.0
        } else {
            self.values[i]
        }
    }

    pub fn quantile_upper(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(invalid(MODULE, format!("quantile level must lie in (0,1), got {u}")));
        }
        Ok(self.quantile_at(u))
    }

    /// `H(x) = ∫₀^x Q(u) du`.
    pub fn primitive(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let i = self.cum.partition_point(|c| *c <= x);
        if i >= self.values.len() {
            return self.mean();
        }
        let (c0, h0) = if i == 0 { (0.0, 0.0) } else { (self.cum[i - 1], self.prim[i - 1]) };
        h0 + self.values[i] * (x - c0)
    }

    /// Generalized inverse `G(y) = inf{x : H(x) ≥ y}`, saturating at 1
    /// above the range of `H`.
    pub fn g_inverse(&self, y: f64) -> Result<f64> {
        if !(y >= 0.0) {
            return Err(invalid(MODULE, format!("G is defined for y ≥ 0, got {y}")));
        }
        Ok(self.g_inverse_unchecked(y))
    }

    fn g_inverse_unchecked(&self, y: f64) -> f64 {
        if y == 0.0 {
            return 0.0;
        }
        if y > self.mean() {
            return 1.0;
        }
        let i = self.prim.partition_point(|h| *h < y);
        let i = i.min(self.values.len() - 1);
        let (c0, h0) = if i == 0 { (0.0, 0.0) } else { (self.cum[i - 1], self.prim[i - 1]) };
        if self.values[i] == 0.0 {
            return c0;
        }
        c0 + (y - h0) / self.values[i]
    }

    /// `∫₀^y Q^{a}(G(u)) du`. On `[H(c_{i−1}), H(c_i))` the integrand is `v_i^a`.
    fn composed_integral(&self, y: f64, a: f64) -> f64 {
        let mut acc = 0.0;
        let mut h0 = 0.0;
        for (v, h1) in self.values.iter().zip(&self.prim) {
            if y <= h0 {
                break;
            }
            let len = y.min(*h1) - h0;
            if len > 0.0 && *v > 0.0 {
                acc += v.powf(a) * len;
            }
            h0 = *h1;
        }
        acc
    }

    /// `∫₀^β Q^{a}(u) du`.
    fn power_integral(&self, beta: f64, a: f64) -> f64 {
        let mut acc = 0.0;
        let mut c0 = 0.0;
        for (v, c1) in self.values.iter().zip(&self.cum) {
            if beta <= c0 {
                break;
            }
            let len = beta.min(*c1) - c0;
            if len > 0.0 && *v > 0.0 {
                acc += v.powf(a) * len;
            }
            c0 = *c1;
        }
        acc
    }
}

/// `4 ∫₀^{τ/2} Q^{1+δ}∘G(u) du`.
pub fn mixing_integral_tau(law: &NonnegLaw, tau_value: f64, delta: f64) -> Result<f64> {
    if !(tau_value >= 0.0) {
        return Err(invalid(MODULE, format!("tau must be nonnegative, got {tau_value}")));
    }
    Ok(4.0 * law.composed_integral(tau_value / 2.0, 1.0 + delta))
}

/// `∫₀^β Q^{2+δ}(u) du`.
pub fn mixing_integral_beta(law: &NonnegLaw, beta_value: f64, delta: f64) -> Result<f64> {
    if !(beta_value >= 0.0) {
        return Err(invalid(MODULE, format!("beta must be nonnegative, got {beta_value}")));
    }
    Ok(law.power_integral(beta_value, 2.0 + delta))
}

/// `∫₀^β Q^{r}(u) du` for a general exponent.
pub fn quantile_power_integral(law: &NonnegLaw, beta_value: f64, r: f64) -> Result<f64> {
    if !(beta_value >= 0.0) {
        return Err(invalid(MODULE, format!("beta must be nonnegative, got {beta_value}")));
    }
    Ok(law.power_integral(beta_value, r))
}

/// Both sides of the change of variables bounding the τ-integral by the
/// β-integral: with `τ = 2 H(β)`,
/// `∫₀^{τ/2} Q^{1+δ}∘G = ∫₀^{G(τ/2)} Q^{2+δ} ≤ ∫₀^β Q^{2+δ}`.
pub fn change_of_variables_sides(law: &NonnegLaw, beta: f64, delta: f64) -> Result<(f64, f64)> {
    let tau = 2.0 * law.primitive(beta);
    let lhs = mixing_integral_tau(law, tau, delta)? / 4.0;
    let rhs = mixing_integral_beta(law, beta, delta)?;
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn one_two() -> NonnegLaw {
        NonnegLaw::new(&[1.0, 2.0], &[0.5, 0.5]).unwrap()
    }

    #[test]
    fn quantile_examples() {
        let l = one_two();
        assert_eq!(l.quantile_upper(0.6).unwrap(), 1.0);
        assert_eq!(l.quantile_upper(0.3).unwrap(), 2.0);
        assert_eq!(l.quantile_upper(0.5).unwrap(), 1.0);
        let c = NonnegLaw::new(&[3.0], &[1.0]).unwrap();
        assert_eq!(c.quantile_upper(0.999).unwrap(), 3.0);
        let z = NonnegLaw::new(&[0.0], &[1.0]).unwrap();
        assert_eq!(z.quantile_upper(0.2).unwrap(), 0.0);
        assert!(l.quantile_upper(0.0).is_err());
        assert!(l.quantile_upper(1.0).is_err());
    }

    #[test]
    fn g_examples() {
        let l = one_two();
        assert_relative_eq!(l.primitive(0.25), 0.5);
        assert_relative_eq!(l.g_inverse(1.0).unwrap(), 0.5);
        assert_eq!(l.g_inverse(0.0).unwrap(), 0.0);
        assert_eq!(l.g_inverse(1.6).unwrap(), 1.0);
        let c = NonnegLaw::new(&[4.0], &[1.0]).unwrap();
        assert_relative_eq!(c.g_inverse(2.0).unwrap(), 0.5);
        assert!(l.g_inverse(-1.0).is_err());
    }

    #[test]
    fn tau_integral_examples() {
        let unit = NonnegLaw::new(&[1.0], &[1.0]).unwrap();
        for tau in [0.0, 0.3, 1.0, 2.0, 3.5] {
            assert_relative_eq!(
                mixing_integral_tau(&unit, tau, 0.7).unwrap(),
                4.0 * (tau / 2.0f64).min(1.0),
                epsilon = 1e-15
            );
        }
        assert_relative_eq!(mixing_integral_tau(&one_two(), 0.5, 1.0).unwrap(), 4.0, epsilon = 1e-15);
    }

    #[test]
    fn beta_integral_bounded_by_sup() {
        let l = NonnegLaw::new(&[0.5, 1.5, 3.0], &[0.2, 0.5, 0.3]).unwrap();
        for beta in [0.0, 0.1, 0.4, 0.9, 1.0] {
            let v = mixing_integral_beta(&l, beta, 0.5).unwrap();
            assert!(v <= 3f64.powf(2.5) * beta + 1e-15);
        }
        assert_eq!(mixing_integral_beta(&l, 0.0, 0.5).unwrap(), 0.0);
    }
}
