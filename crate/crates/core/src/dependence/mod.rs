//! Dependence and mixing coefficients, quantile integrals, and the
//! summability conditions built from them.

pub mod exact;
pub mod lsv_tau;
pub mod montecarlo;
pub mod quantile;

use crate::csvio::{fmt_f64, CsvTable};
use crate::error::{invalid, Result};
use crate::generators::FiniteMarkov;
use crate::measure::DiscreteMeasure;

pub use exact::{
    a_tilde_exact, alpha2_exact, b_tilde_exact, beta2_exact, exact_coefficient, gamma2_tilde_exact,
    gamma_tilde_exact, tau1_exact, tau2_exact, tau_pair_exact, Attained, Branch, CoefficientKind,
    DEFAULT_MAX_LAG,
};
pub use lsv_tau::{tau1_lsv_empirical, LsvTauConfig};
pub use montecarlo::{mc_coefficient, McEstimate};
pub use quantile::{
    change_of_variables_sides, mixing_integral_beta, mixing_integral_tau, quantile_power_integral, NonnegLaw,
};

const MODULE: &str = "dependence";

#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Exact,
    /// Monte Carlo, with a description of the parameters used.
    Estimated(String),
}

impl Provenance {
    pub fn label(&self) -> String {
        match self {
            Provenance::Exact => "exact".into(),
            Provenance::Estimated(p) => format!("estimated({p})"),
        }
    }
}

/// Values of one coefficient indexed by `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSequence {
    pub kind: CoefficientKind,
    pub ks: Vec<usize>,
    pub values: Vec<f64>,
    pub provenance: Provenance,
    pub delta: Option<f64>,
    pub stderr: Option<Vec<f64>>,
    /// Maximizing auxiliary lag per entry, for the sup-type kinds.
    pub argmax: Vec<Option<usize>>,
}

impl CoefficientSequence {
    /// A sequence given directly by its values at `k = 1, 2, …`.
    pub fn from_values(kind: CoefficientKind, values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if values.iter().any(|v| !(*v >= 0.0)) {
            return Err(invalid(MODULE, "coefficient values must be nonnegative"));
        }
        let n = values.len();
        Ok(Self {
            kind,
            ks: (1..=n).collect(),
            values,
            provenance,
            delta: None,
            stderr: None,
            argmax: vec![None; n],
        })
    }

    /// Exact values for `k = 1..=k_max`.
    pub fn exact(
        chain: &FiniteMarkov,
        kind: CoefficientKind,
        k_max: usize,
        delta: f64,
        max_lag: usize,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(k_max);
        let mut argmax = Vec::with_capacity(k_max);
        for k in 1..=k_max {
            let a = exact_coefficient(chain, kind, k, delta, max_lag)?;
            // Round-off can leave −1e−17 on vanishing coefficients.
            values.push(a.value.max(0.0));
            argmax.push(a.lag);
        }
        Ok(Self {
            kind,
            ks: (1..=k_max).collect(),
            values,
            provenance: Provenance::Exact,
            delta: kind.uses_delta().then_some(delta),
            stderr: None,
            argmax,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn to_csv(&self) -> CsvTable {
        let mut header = vec!["k", "value", "provenance"];
        if self.stderr.is_some() {
            header.push("stderr");
        }
        let mut t = CsvTable::new(header);
        t.meta("kind", self.kind.name());
        if let Some(d) = self.delta {
            t.meta("delta", d.to_string());
        }
        for (i, (k, v)) in self.ks.iter().zip(&self.values).enumerate() {
            let mut row = vec![k.to_string(), fmt_f64(*v), self.provenance.label()];
            if let Some(se) = &self.stderr {
                row.push(fmt_f64(se[i]));
            }
            t.push_row(row);
        }
        t
    }
}

/// Which series to test for summability.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionVariant {
    /// `Σ k^{1+(2+2δ)/(r−2−δ)} τ₂(k)`.
    TauI,
    /// `Σ k τ₂(k)^{1−(1+δ)/(r−1)}`.
    TauII,
    /// `τ₂(n) = O(bⁿ)`, `b < 1`.
    TauIII,
    /// `Σ k^{1+(4+2δ)/(r−2−δ)} β₂(k)`.
    BetaI,
    /// `Σ k β₂(k)^{1−(2+δ)/r}`.
    BetaII,
    /// `β₂(n) = O(bⁿ)`.
    BetaIII,
    /// `Σ k ∫₀^{τ₂(k)/2} Q^{1+δ}∘G`.
    TauIntegral,
    /// `Σ k ∫₀^{β₂(k)} Q^{2+δ}`.
    BetaIntegral,
}

impl ConditionVariant {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "tau_i" => Self::TauI,
            "tau_ii" => Self::TauII,
            "tau_iii" => Self::TauIII,
            "beta_i" => Self::BetaI,
            "beta_ii" => Self::BetaII,
            "beta_iii" => Self::BetaIII,
            "tau_integral" => Self::TauIntegral,
            "beta_integral" => Self::BetaIntegral,
            other => return Err(invalid(MODULE, format!("unknown condition variant '{other}'"))),
        })
    }

    fn needs_r(self) -> bool {
        matches!(self, Self::TauI | Self::TauII | Self::BetaI | Self::BetaII)
    }

    fn geometric_only(self) -> bool {
        matches!(self, Self::TauIII | Self::BetaIII)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Converged,
    Diverged,
    Inconclusive,
}

/// Fitted tail of the series terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailFit {
    /// `t_k ≈ C ρ^k`.
    Geometric { ratio: f64, ratio_stderr: f64, r_squared: f64 },
    /// `t_k ≈ C k^{s}`.
    Polynomial { exponent: f64, exponent_stderr: f64, r_squared: f64 },
    /// Terms vanish identically from some index on.
    Finite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub variant: ConditionVariant,
    pub terms: Vec<f64>,
    pub partial_sums: Vec<f64>,
    pub fitted_tail: Option<TailFit>,
    pub verdict: Verdict,
}

impl ConditionReport {
    pub fn converged(&self) -> bool {
        self.verdict == Verdict::Converged
    }
}

/// OLS of `y` on `x`: `(slope, intercept, slope_stderr, r²)`.
pub(crate) fn ols(x: &[f64], y: &[f64]) -> (f64, f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let se = if x.len() > 2 { (sse / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    (slope, intercept, se, r2)
}

const Z_CRIT: f64 = 2.0;

/// Fit the tail of `terms` (indexed by `ks`) and decide summability.
fn tail_verdict(ks: &[usize], terms: &[f64], geometric_only: bool) -> (Option<TailFit>, Verdict) {
    if terms.len() < 4 {
        return (None, Verdict::Inconclusive);
    }
    let last_positive = terms.iter().rposition(|t| *t > 0.0);
    let Some(last) = last_positive else {
        return (Some(TailFit::Finite), Verdict::Converged);
    };
    // A run of exact zeros at the end: the series is a finite sum.
    if terms.len() - 1 - last >= 4 {
        return (Some(TailFit::Finite), Verdict::Converged);
    }
    let start = terms.len() / 2;
    let pts: Vec<(f64, f64, f64)> = ks[start..]
        .iter()
        .zip(&terms[start..])
        .filter(|(_, t)| **t > 0.0)
        .map(|(k, t)| (*k as f64, (*k as f64).ln(), t.ln()))
        .collect();
    if pts.len() < 4 {
        return (None, Verdict::Inconclusive);
    }
    let kx: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let lx: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let ly: Vec<f64> = pts.iter().map(|p| p.2).collect();
    let (gs, _, gse, gr2) = ols(&kx, &ly);
    let (ps, _, pse, pr2) = ols(&lx, &ly);
    let geometric = TailFit::Geometric {
        ratio: gs.exp(),
        ratio_stderr: gs.exp() * gse,
        r_squared: gr2,
    };
    if geometric_only {
        let verdict = if gs + Z_CRIT * gse < 0.0 {
            Verdict::Converged
        } else if gs - Z_CRIT * gse >= 0.0 {
            Verdict::Diverged
        } else {
            Verdict::Inconclusive
        };
        return (Some(geometric), verdict);
    }
    if gr2 > pr2 && gs + Z_CRIT * gse < 0.0 {
        return (Some(geometric), Verdict::Converged);
    }
    let fit = TailFit::Polynomial {
        exponent: ps,
        exponent_stderr: pse,
        r_squared: pr2,
    };
    let verdict = if ps + Z_CRIT * pse < -1.0 {
        Verdict::Converged
    } else if ps - Z_CRIT * pse >= -1.0 {
        Verdict::Diverged
    } else {
        Verdict::Inconclusive
    };
    (Some(fit), verdict)
}

/// Partial sums and a tail verdict for the series named by `variant`.
///
/// `law` is the law of `‖X₀‖`; it is needed by the integral variants.
/// `r` is the moment order for variants (i) and (ii); `None` means `r = ∞`
/// for variant (i).
pub fn condition_check(
    coefs: &CoefficientSequence,
    law: Option<&NonnegLaw>,
    delta: f64,
    variant: ConditionVariant,
    r: Option<f64>,
) -> Result<ConditionReport> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(invalid(MODULE, format!("delta must lie in (0,1], got {delta}")));
    }
    let r_val = r.unwrap_or(f64::INFINITY);
    if variant.needs_r() && !(r_val > 2.0 + delta) {
        return Err(invalid(MODULE, format!("moment order r must exceed 2+δ, got {r_val}")));
    }
    if matches!(variant, ConditionVariant::TauII | ConditionVariant::BetaII) && r_val.is_infinite() {
        return Err(invalid(MODULE, "variant (ii) needs a finite tail exponent r"));
    }
    let need_law = matches!(variant, ConditionVariant::TauIntegral | ConditionVariant::BetaIntegral);
    if need_law && law.is_none() {
        return Err(invalid(MODULE, "integral variants need the law of the norm"));
    }
    let terms: Vec<f64> = coefs
        .ks
        .iter()
        .zip(&coefs.values)
        .map(|(&k, &c)| {
            let kf = k as f64;
            Ok(match variant {
                ConditionVariant::TauI => {
                    let e = if r_val.is_infinite() { 1.0 } else { 1.0 + (2.0 + 2.0 * delta) / (r_val - 2.0 - delta) };
                    kf.powf(e) * c
                }
                ConditionVariant::TauII => kf * c.powf(1.0 - (1.0 + delta) / (r_val - 1.0)),
                ConditionVariant::BetaI => {
                    let e = if r_val.is_infinite() { 1.0 } else { 1.0 + (4.0 + 2.0 * delta) / (r_val - 2.0 - delta) };
                    kf.powf(e) * c
                }
                ConditionVariant::BetaII => kf * c.powf(1.0 - (2.0 + delta) / r_val),
                ConditionVariant::TauIII | ConditionVariant::BetaIII => c,
                ConditionVariant::TauIntegral => kf * mixing_integral_tau(law.expect("checked"), c, delta)? / 4.0,
                ConditionVariant::BetaIntegral => kf * mixing_integral_beta(law.expect("checked"), c, delta)?,
            })
        })
        .collect::<Result<_>>()?;
    let mut acc = 0.0;
    let partial_sums = terms
        .iter()
        .map(|t| {
            acc += t;
            acc
        })
        .collect();
    let (fitted_tail, verdict) = tail_verdict(&coefs.ks, &terms, variant.geometric_only());
    Ok(ConditionReport {
        variant,
        terms,
        partial_sums,
        fitted_tail,
        verdict,
    })
}

/// Report for the quantile condition on `Y_{p,μ} = |F_μ(Y₀)|^{1/p}`.
#[derive(Debug, Clone, PartialEq)]
pub struct YpmuReport {
    pub law: NonnegLaw,
    pub condition: ConditionReport,
    /// `μ` carries a truncation of infinite tail mass at the grid edge.
    pub truncated: bool,
}

/// Build the law of `Y_{p,μ}` from a discrete law of `Y₀` and evaluate
/// `Σ k ∫₀^{β₂(k)} Q_{Y_{p,μ}}^r(u) du` through its tail verdict.
pub fn y_pmu_quantile_condition(
    mu: &DiscreteMeasure,
    y_atoms: &[f64],
    y_probs: &[f64],
    p: f64,
    beta_seq: &CoefficientSequence,
    r: f64,
) -> Result<YpmuReport> {
    if !(p >= 1.0) {
        return Err(invalid(MODULE, format!("p must be ≥ 1, got {p}")));
    }
    if !(r > 0.0) {
        return Err(invalid(MODULE, format!("exponent r must be positive, got {r}")));
    }
    let atoms: Vec<f64> = y_atoms
        .iter()
        .map(|y| mu.signed_cumulative(*y).abs().powf(1.0 / p))
        .collect();
    let law = NonnegLaw::new(&atoms, y_probs)?;
    let terms: Vec<f64> = beta_seq
        .ks
        .iter()
        .zip(&beta_seq.values)
        .map(|(&k, &b)| Ok(k as f64 * quantile_power_integral(&law, b, r)?))
        .collect::<Result<_>>()?;
    let mut acc = 0.0;
    let partial_sums = terms
        .iter()
        .map(|t| {
            acc += t;
            acc
        })
        .collect();
    let (fitted_tail, verdict) = tail_verdict(&beta_seq.ks, &terms, false);
    Ok(YpmuReport {
        law,
        condition: ConditionReport {
            variant: ConditionVariant::BetaIntegral,
            terms,
            partial_sums,
            fitted_tail,
            verdict,
        },
        truncated: mu.truncation().is_some(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(values: Vec<f64>) -> CoefficientSequence {
        CoefficientSequence::from_values(CoefficientKind::Tau2, values, Provenance::Exact).unwrap()
    }

    #[test]
    fn geometric_sequence_converges() {
        let s = seq((1..=40).map(|k| 0.5f64.powi(k)).collect());
        for v in [ConditionVariant::TauI, ConditionVariant::TauII, ConditionVariant::TauIII] {
            let rep = condition_check(&s, None, 1.0, v, Some(5.0)).unwrap();
            assert_eq!(rep.verdict, Verdict::Converged, "{v:?}");
        }
    }

    #[test]
    fn harmonic_with_linear_weight_diverges() {
        let s = seq((1..=64).map(|k| 1.0 / k as f64).collect());
        let rep = condition_check(&s, None, 1.0, ConditionVariant::TauI, None).unwrap();
        assert_eq!(rep.verdict, Verdict::Diverged);
        assert!(rep.partial_sums[63] > 63.0);
    }

    #[test]
    fn cubic_decay_with_linear_weight_converges() {
        let s = seq((1..=64).map(|k| (k as f64).powi(-3)).collect());
        let rep = condition_check(&s, None, 1.0, ConditionVariant::TauI, None).unwrap();
        assert_eq!(rep.verdict, Verdict::Converged);
        match rep.fitted_tail {
            Some(TailFit::Polynomial { exponent, .. }) => assert!((exponent + 2.0).abs() < 1e-9),
            other => panic!("unexpected fit {other:?}"),
        }
    }

    #[test]
    fn short_sequences_are_inconclusive() {
        let s = seq(vec![0.5, 0.25, 0.125]);
        let rep = condition_check(&s, None, 1.0, ConditionVariant::TauI, None).unwrap();
        assert_eq!(rep.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn uniform_y_on_lebesgue_gives_root_law() {
        let mu = DiscreteMeasure::lebesgue(0.0, 1.0, 1000).unwrap();
        let m = 2000;
        let y: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) / m as f64).collect();
        let w = vec![1.0 / m as f64; m];
        let b = CoefficientSequence::from_values(
            CoefficientKind::Beta2,
            (1..=20).map(|k| 0.5f64.powi(k)).collect(),
            Provenance::Exact,
        )
        .unwrap();
        let rep = y_pmu_quantile_condition(&mu, &y, &w, 2.0, &b, 3.0).unwrap();
        for u in [0.1, 0.5, 0.9] {
            let q = rep.law.quantile_upper(u).unwrap();
            assert!((q - (1.0 - u).sqrt()).abs() < 5e-3, "u={u} q={q}");
        }
        assert!(rep.condition.converged());
        assert!(!rep.truncated);
        let truncated = mu.clone().with_truncation(0.0, 1.0);
        let rep = y_pmu_quantile_condition(&truncated, &y, &w, 2.0, &b, 3.0).unwrap();
        assert!(rep.truncated);
    }
}
