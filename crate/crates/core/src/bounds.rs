//! The explicit rate bound `n^{−δ/2} b(n, M, δ)` and empirical rate fits.
//!
//! ```text
//! b(n, M, δ) = (c_δ + M) Σ_{k≥1} k^{δ/2} γ(k) + Σ_{k=1}^n (k+2) γ_{2,δ}(k)
//!              + E‖X₀‖^{2+δ} + E‖G‖^{2+δ}
//! c_δ        = (2^δ + 2) λ^{δ/2} + 2^δ (E‖G‖²)^{δ/2}
//! ```
//!
//! Coefficients are known up to `k_max`; beyond it both series are extended
//! by a geometric fit through the last [`TAIL_FIT_POINTS`] values, and a
//! fitted ratio `≥ 1` makes the bound infinite rather than silently
//! truncated.

use std::sync::Arc;

use crate::csvio::{fmt_f64, CsvTable};
use crate::dependence::{ols, CoefficientKind, CoefficientSequence, Provenance};
use crate::empirical::field_from_sorted;
use crate::error::{invalid, Result};
use crate::frechet::SmoothTestFunction;
use crate::gaussian::{abs_normal_moment, covariance_markov_exact, FeatureMap, GaussianSampler};
use crate::generators::{FiniteMarkov, ProcessModel};
use crate::mc::{replicate_vectors, MeanEstimate};
use crate::metrics::{delta_n_grid, Certification, DeltaEstimate, FieldBuilder};

const MODULE: &str = "bounds_rates";

pub const TAIL_FIT_POINTS: usize = 8;
pub const MIN_LAMBDA_KMAX: usize = 8;
const PLATEAU_TOL: f64 = 0.05;

/// `(2^δ + 2) λ^{δ/2} + 2^δ (E‖G‖²)^{δ/2}`.
pub fn c_delta(lambda: f64, eg2: f64, delta: f64) -> f64 {
    let t = 2f64.powf(delta);
    (t + 2.0) * lambda.powf(delta / 2.0) + t * eg2.powf(delta / 2.0)
}

/// `sup_k E‖S_k‖²/k` over `k ≤ k_max`, with the per-`k` ratios.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSup {
    pub value: f64,
    pub argmax: usize,
    /// `E‖S_k‖²/k` for `k = 1..=k_max`.
    pub ratios: Vec<f64>,
    pub stderr: Option<Vec<f64>>,
    /// `lim_k E‖S_k‖²/k` when known in closed form.
    pub limit: Option<f64>,
    /// The ratios have settled by `k_max`.
    pub plateau: bool,
    pub exact: bool,
}

fn markov_ratios(chain: &FiniteMarkov, k_max: usize) -> Vec<f64> {
    let pi = chain.stationary();
    let mean = chain.mean();
    let s: Vec<f64> = chain.states().iter().map(|x| x - mean).collect();
    let p = chain.transition();
    let d = s.len();
    // c_j = Σ_i π_i s_i (P^j s)_i
    let mut v = s.clone();
    let mut cov = Vec::with_capacity(k_max);
    for _ in 0..k_max {
        cov.push((0..d).map(|i| pi[i] * s[i] * v[i]).sum::<f64>());
        v = (0..d).map(|i| (0..d).map(|j| p[(i, j)] * v[j]).sum()).collect();
    }
    // E S_k² = k c_0 + 2 Σ_{j<k} (k − j) c_j
    (1..=k_max)
        .map(|k| {
            let cross: f64 = (1..k).map(|j| (k - j) as f64 * cov[j]).sum();
            (k as f64 * cov[0] + 2.0 * cross) / k as f64
        })
        .collect()
}

/// `λ = sup_{k ≤ k_max} E‖S_k‖²/k`. Exact for scalar i.i.d. and Markov
/// models, where the long-run variance also enters the supremum since the
/// ratios converge to it; Monte Carlo otherwise, with `‖·‖` the L^p(μ) norm
/// of the field.
pub fn lambda_sup(
    model: &ProcessModel,
    builder: &FieldBuilder,
    p: f64,
    k_max: usize,
    reps: usize,
    seed: u64,
) -> Result<LambdaSup> {
    if k_max < MIN_LAMBDA_KMAX {
        return Err(invalid(MODULE, format!("lambda_sup needs k_max >= {MIN_LAMBDA_KMAX}, got {k_max}")));
    }
    let (ratios, stderr, limit, exact) = match (model, builder) {
        (ProcessModel::Iid(m), FieldBuilder::Scalar) => {
            let v = m.marginal.variance();
            (vec![v; k_max], None, Some(v), true)
        }
        (ProcessModel::Markov(c), FieldBuilder::Scalar) => {
            let sigma2 = covariance_markov_exact(c, &FeatureMap::Scalar)?.matrix[(0, 0)];
            (markov_ratios(c, k_max), None, Some(sigma2), true)
        }
        _ => {
            if reps < 2 {
                return Err(invalid(MODULE, "Monte Carlo lambda needs at least two replicates"));
            }
            let (ratios, se) = lambda_mc(model, builder, p, k_max, reps, seed)?;
            (ratios, Some(se), None, false)
        }
    };
    let (mut argmax, mut value) = (1, ratios[0]);
    for (i, r) in ratios.iter().enumerate() {
        if *r > value {
            value = *r;
            argmax = i + 1;
        }
    }
    if let Some(l) = limit {
        if l > value {
            value = l;
            argmax = usize::MAX;
        }
    }
    let last = ratios[k_max - 1];
    let mid = ratios[k_max / 2 - 1];
    let plateau = match limit {
        Some(l) => (last - l).abs() <= PLATEAU_TOL * l.abs().max(f64::MIN_POSITIVE),
        None => {
            let noise = stderr.as_ref().map_or(0.0, |s| 3.0 * s[k_max - 1].hypot(s[k_max / 2 - 1]));
            (last - mid).abs() <= PLATEAU_TOL * last.abs() + noise
        }
    };
    Ok(LambdaSup {
        value,
        argmax,
        ratios,
        stderr,
        limit,
        plateau,
        exact,
    })
}

fn lambda_mc(
    model: &ProcessModel,
    builder: &FieldBuilder,
    p: f64,
    k_max: usize,
    reps: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let values = match builder {
        FieldBuilder::Scalar => {
            let center = model
                .mean()
                .ok_or_else(|| invalid(MODULE, format!("{} has no closed-form mean for centering", model.tag())))?;
            replicate_vectors(reps, seed, k_max, |rng, out| {
                let mut y = vec![0.0; k_max];
                model.fill(rng, &mut y);
                let mut s = 0.0;
                for (k, v) in y.iter().enumerate() {
                    s += v - center;
                    out[k] = s * s / (k + 1) as f64;
                }
            })
        }
        FieldBuilder::Empirical { mu, cdf } => {
            let f = cdf.on_grid(mu)?;
            let mu: Arc<_> = mu.clone();
            replicate_vectors(reps, seed, k_max, |rng, out| {
                let mut y = vec![0.0; k_max];
                model.fill(rng, &mut y);
                let mut g = vec![0.0; mu.len()];
                let mut sorted: Vec<f64> = Vec::with_capacity(k_max);
                for (k, v) in y.iter().enumerate() {
                    let at = sorted.partition_point(|z| z <= v);
                    sorted.insert(at, *v);
                    // ‖S_k‖²/k = ‖G_k‖² with G_k = S_k/√k
                    field_from_sorted(&sorted, mu.points(), &f, &mut g);
                    out[k] = crate::measure::lp_norm_raw(&g, mu.weights(), p).powi(2);
                }
            })
        }
    };
    let mut ratios = Vec::with_capacity(k_max);
    let mut se = Vec::with_capacity(k_max);
    for k in 0..k_max {
        let col: Vec<f64> = (0..reps).map(|r| values[r * k_max + k]).collect();
        let m = MeanEstimate::from_values(&col);
        ratios.push(m.mean);
        se.push(m.stderr);
    }
    Ok((ratios, se))
}

/// Everything the bound needs besides `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundInputs {
    pub delta: f64,
    pub m: f64,
    /// `γ(k)` for `k = 1..=k_max`.
    pub gamma_seq: CoefficientSequence,
    /// `γ_{2,δ}(k)` for `k = 1..=k_max`.
    pub gamma2_seq: CoefficientSequence,
    /// `E‖X₀‖^{2+δ}`.
    pub moment_x: f64,
    /// `E‖G‖^{2+δ}`.
    pub moment_g: f64,
    pub lambda: f64,
    /// `E‖G‖²`.
    pub eg2: f64,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(invalid(MODULE, format!("delta must lie in (0, 1], got {}", self.delta)));
        }
        let scalars = [self.m, self.moment_x, self.moment_g, self.lambda, self.eg2];
        if scalars.iter().any(|v| !(*v >= 0.0)) {
            return Err(invalid(MODULE, "M, moments, lambda and E‖G‖² must be nonnegative"));
        }
        for s in [&self.gamma_seq, &self.gamma2_seq] {
            if s.ks.iter().enumerate().any(|(i, k)| *k != i + 1) {
                return Err(invalid(MODULE, "coefficient sequences must be indexed k = 1, 2, …"));
            }
            if s.values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                return Err(invalid(MODULE, "coefficient values must be finite and nonnegative"));
            }
        }
        Ok(())
    }

    /// Exact inputs for a centered scalar model: zero coefficients for
    /// i.i.d. data, exact `γ̃`, `γ̃_{2,δ}` and covariances for a chain.
    pub fn exact_scalar(model: &ProcessModel, delta: f64, m: f64, k_max: usize, max_lag: usize) -> Result<Self> {
        let r = 2.0 + delta;
        let (gamma_seq, gamma2_seq, moment_x, lambda, eg2) = match model {
            ProcessModel::Iid(iid) => {
                let marg = &iid.marginal;
                if marg.mean().abs() > 1e-12 {
                    return Err(invalid(MODULE, "the bound is stated for centered sequences"));
                }
                let zeros = vec![0.0; k_max];
                let v = marg.variance();
                (
                    CoefficientSequence::from_values(CoefficientKind::GammaTilde, zeros.clone(), Provenance::Exact)?,
                    CoefficientSequence::from_values(CoefficientKind::Gamma2Tilde, zeros, Provenance::Exact)?,
                    marg.abs_moment(r),
                    v,
                    v,
                )
            }
            ProcessModel::Markov(chain) => {
                if !chain.is_centered() {
                    return Err(invalid(MODULE, "the bound is stated for centered sequences"));
                }
                let lam = lambda_sup(model, &FieldBuilder::Scalar, 2.0, k_max.max(MIN_LAMBDA_KMAX), 0, 0)?;
                let sigma2 = lam.limit.unwrap_or(lam.value);
                let mx: f64 = chain
                    .states()
                    .iter()
                    .zip(chain.stationary())
                    .map(|(s, p)| p * s.abs().powf(r))
                    .sum();
                (
                    CoefficientSequence::exact(chain, CoefficientKind::GammaTilde, k_max, delta, max_lag)?,
                    CoefficientSequence::exact(chain, CoefficientKind::Gamma2Tilde, k_max, delta, max_lag)?,
                    mx,
                    lam.value,
                    sigma2,
                )
            }
            ProcessModel::Lsv(_) => {
                return Err(invalid(MODULE, "exact bound inputs are available for i.i.d. and Markov models only"));
            }
        };
        Ok(Self {
            delta,
            m,
            gamma_seq,
            gamma2_seq,
            moment_x,
            moment_g: eg2.powf(r / 2.0) * abs_normal_moment(r),
            lambda,
            eg2,
        })
    }
}

/// Geometric extension `C ρ^k` of a nonnegative sequence beyond its end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailModel {
    /// The last values vanish; nothing is added.
    Zero,
    Geometric { c: f64, ratio: f64 },
    /// The fitted ratio is at least 1.
    Divergent { ratio: f64 },
}

pub fn fit_tail(values: &[f64]) -> TailModel {
    let start = values.len().saturating_sub(TAIL_FIT_POINTS);
    let pts: Vec<(f64, f64)> = (start..values.len())
        .filter(|&i| values[i] > 0.0)
        .map(|i| ((i + 1) as f64, values[i].ln()))
        .collect();
    let last = values.last().copied().unwrap_or(0.0);
    if pts.len() < 3 {
        return if last > 0.0 {
            TailModel::Divergent { ratio: f64::NAN }
        } else {
            TailModel::Zero
        };
    }
    let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let (slope, intercept, _, _) = ols(&x, &y);
    let ratio = slope.exp();
    if ratio >= 1.0 {
        TailModel::Divergent { ratio }
    } else {
        TailModel::Geometric {
            c: intercept.exp(),
            ratio,
        }
    }
}

/// `Σ_{k > k_max} w(k) C ρ^k` summed until the terms stop mattering.
fn geometric_tail_sum(c: f64, ratio: f64, k_max: usize, weight: impl Fn(f64) -> f64) -> f64 {
    let mut sum = 0.0;
    let mut k = k_max + 1;
    loop {
        let term = weight(k as f64) * c * ratio.powi(k as i32);
        sum += term;
        if term <= 1e-18 * sum.max(f64::MIN_POSITIVE) || k > k_max + 100_000 {
            break;
        }
        k += 1;
    }
    sum
}

/// Value of the bound at one `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundValue {
    pub n: usize,
    /// `n^{−δ/2}`.
    pub prefactor: f64,
    /// `b(n, M, δ)`.
    pub bracket: f64,
    /// `prefactor · bracket`.
    pub bound: f64,
    pub c_delta: f64,
    /// `Σ_{k≥1} k^{δ/2} γ(k)` including its fitted tail.
    pub gamma_series: f64,
    /// `Σ_{k=1}^n (k+2) γ_{2,δ}(k)`.
    pub gamma2_partial: f64,
    pub diagnosis: Option<String>,
}

pub fn bound_b(inputs: &BoundInputs, n: usize) -> Result<BoundValue> {
    inputs.validate()?;
    if n == 0 {
        return Err(invalid(MODULE, "n must be at least 1"));
    }
    let delta = inputs.delta;
    let cd = c_delta(inputs.lambda, inputs.eg2, delta);
    let mut diagnosis = Vec::new();

    let g = &inputs.gamma_seq.values;
    let head: f64 = g.iter().enumerate().map(|(i, v)| ((i + 1) as f64).powf(delta / 2.0) * v).sum();
    let gamma_series = match fit_tail(g) {
        TailModel::Zero => head,
        TailModel::Geometric { c, ratio } => head + geometric_tail_sum(c, ratio, g.len(), |k| k.powf(delta / 2.0)),
        TailModel::Divergent { ratio } => {
            diagnosis.push(format!("gamma series: tail ratio {ratio:.4} >= 1, declared divergent"));
            f64::INFINITY
        }
    };

    let g2 = &inputs.gamma2_seq.values;
    let known = n.min(g2.len());
    let mut gamma2_partial: f64 = (0..known).map(|i| (i + 3) as f64 * g2[i]).sum();
    if n > g2.len() {
        match fit_tail(g2) {
            TailModel::Zero => {}
            TailModel::Geometric { c, ratio } => {
                gamma2_partial += (g2.len() + 1..=n).map(|k| (k + 2) as f64 * c * ratio.powi(k as i32)).sum::<f64>();
            }
            TailModel::Divergent { ratio } => {
                diagnosis.push(format!(
                    "gamma2 partial sum needs k up to {n} beyond k_max = {}: tail ratio {ratio:.4} >= 1",
                    g2.len()
                ));
                gamma2_partial = f64::INFINITY;
            }
        }
    }

    let bracket = (cd + inputs.m) * gamma_series + gamma2_partial + inputs.moment_x + inputs.moment_g;
    let prefactor = (n as f64).powf(-delta / 2.0);
    Ok(BoundValue {
        n,
        prefactor,
        bracket,
        bound: prefactor * bracket,
        c_delta: cd,
        gamma_series,
        gamma2_partial,
        diagnosis: (!diagnosis.is_empty()).then(|| diagnosis.join("; ")),
    })
}

/// Least-squares line through `(log n, log value)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub ns: Vec<usize>,
    pub log_values: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub r_squared: f64,
    /// Grid points dropped because their value was not positive.
    pub dropped: Vec<usize>,
}

pub fn rate_fit(ns: &[usize], values: &[f64]) -> Result<RateFit> {
    if ns.len() != values.len() {
        return Err(crate::Error::LengthMismatch {
            module: MODULE,
            expected: ns.len(),
            got: values.len(),
        });
    }
    if ns.is_empty() || ns[0] == 0 || ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid(MODULE, "n grid must be positive and strictly increasing"));
    }
    let mut kept_n = Vec::new();
    let mut logs = Vec::new();
    let mut dropped = Vec::new();
    for (&n, &v) in ns.iter().zip(values) {
        if v > 0.0 && v.is_finite() {
            kept_n.push(n);
            logs.push(v.ln());
        } else {
            eprintln!("warning: [{MODULE}] dropping n = {n} with nonpositive estimate {v}");
            dropped.push(n);
        }
    }
    if kept_n.len() < 4 {
        return Err(invalid(MODULE, format!("rate fit needs 4 positive points, {} survive", kept_n.len())));
    }
    if (*kept_n.last().unwrap() as f64) < 4.0 * kept_n[0] as f64 {
        return Err(invalid(MODULE, "rate fit needs the grid to span at least two dyadic octaves"));
    }
    let x: Vec<f64> = kept_n.iter().map(|n| (*n as f64).ln()).collect();
    let (slope, intercept, slope_stderr, r_squared) = ols(&x, &logs);
    Ok(RateFit {
        ns: kept_n,
        log_values: logs,
        slope,
        intercept,
        slope_stderr,
        r_squared,
        dropped,
    })
}

pub fn rate_fit_estimates(estimates: &[DeltaEstimate]) -> Result<RateFit> {
    let ns: Vec<usize> = estimates.iter().map(|e| e.n).collect();
    let vs: Vec<f64> = estimates.iter().map(|e| e.value).collect();
    rate_fit(&ns, &vs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominanceRow {
    pub n: usize,
    pub delta_hat: f64,
    pub stderr: f64,
    pub bound: f64,
    /// `bound − delta_hat`.
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominanceReport {
    pub rows: Vec<DominanceRow>,
    pub estimates: Vec<DeltaEstimate>,
    /// `delta_hat ≤ bound + 3·stderr` at every `n`.
    pub pass: bool,
}

impl DominanceReport {
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(["n", "delta_hat", "stderr", "bound", "slack"]);
        for r in &self.rows {
            t.push_row(vec![
                r.n.to_string(),
                fmt_f64(r.delta_hat),
                fmt_f64(r.stderr),
                fmt_f64(r.bound),
                fmt_f64(r.slack),
            ]);
        }
        t
    }
}

/// Measured `Δ_n(f)` against `n^{−δ/2} b(n, M, δ)` on a grid of `n`.
#[allow(clippy::too_many_arguments)]
pub fn dominance_check(
    inputs: &BoundInputs,
    f: &SmoothTestFunction,
    model: &ProcessModel,
    ns: &[usize],
    reps: usize,
    gaussian: &GaussianSampler,
    seed: u64,
    cert: &Certification,
) -> Result<DominanceReport> {
    let estimates = delta_n_grid(f, model, &FieldBuilder::Scalar, ns, reps, gaussian, seed, cert)?;
    let mut rows = Vec::with_capacity(ns.len());
    let mut pass = true;
    for e in &estimates {
        let b = bound_b(inputs, e.n)?;
        pass &= e.value <= b.bound + 3.0 * e.stderr;
        rows.push(DominanceRow {
            n: e.n,
            delta_hat: e.value,
            stderr: e.stderr,
            bound: b.bound,
            slack: b.bound - e.value,
        });
    }
    Ok(DominanceReport { rows, estimates, pass })
}
