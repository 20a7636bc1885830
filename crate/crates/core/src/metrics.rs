//! Distances between laws on the line and Monte Carlo smooth-functional
//! discrepancies.
//!
//! `wasserstein_1d` uses the quantile coupling and is exact for discrete
//! laws. `ot_lp_oracle` solves the transport problem on the full cost matrix
//! and serves as an independent check of it. `delta_n` estimates
//! `|E f(S_n/√n) − E f(G)|` and `zolotarev_lower` a dictionary lower bound
//! for the Zolotarev distance; neither claims more than it measures.

use std::sync::Arc;

use crate::empirical::{field_from_sorted, CdfSpec};
use crate::error::{invalid, Error, Result};
use crate::frechet::{lambda_class_check, LambdaCheckConfig, LambdaReport, SmoothTestFunction, TestFunctionKind};
use crate::gaussian::GaussianSampler;
use crate::generators::ProcessModel;
use crate::mc::{replicate_values, replicate_vectors, MeanEstimate};
use crate::measure::DiscreteMeasure;
use crate::rng::{derive_seed, LabRng};
use crate::transport::{solve_transport, TransportPlan};

const MODULE: &str = "metrics";

pub const MAX_ORACLE_ATOMS: usize = 64;
pub const MIN_DELTA_REPS: usize = 100;
const GAUSSIAN_SALT: u64 = 0x6A05_5EED;

/// A probability law with finitely many atoms, stored sorted with
/// duplicates merged.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteLaw1D {
    atoms: Vec<f64>,
    probs: Vec<f64>,
}

impl DiscreteLaw1D {
    pub fn new(atoms: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(invalid(MODULE, "law needs at least one atom"));
        }
        if atoms.len() != probs.len() {
            return Err(Error::LengthMismatch {
                module: MODULE,
                expected: atoms.len(),
                got: probs.len(),
            });
        }
        if atoms.iter().any(|a| !a.is_finite()) || probs.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(invalid(MODULE, "atoms must be finite and probabilities positive"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(MODULE, format!("probabilities sum to {total}, not 1")));
        }
        let mut pairs: Vec<(f64, f64)> = atoms.into_iter().zip(probs).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut atoms: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut probs: Vec<f64> = Vec::with_capacity(pairs.len());
        for (a, p) in pairs {
            if atoms.last() == Some(&a) {
                *probs.last_mut().unwrap() += p;
            } else {
                atoms.push(a);
                probs.push(p);
            }
        }
        Ok(Self { atoms, probs })
    }

    /// Equal weights on the sample points.
    pub fn from_sample(xs: &[f64]) -> Result<Self> {
        if xs.is_empty() {
            return Err(invalid(MODULE, "empty sample"));
        }
        let w = 1.0 / xs.len() as f64;
        let mut probs = vec![w; xs.len()];
        // absorb the rounding of n·(1/n) into the last atom
        let drift = 1.0 - probs.iter().sum::<f64>();
        *probs.last_mut().unwrap() += drift;
        Self::new(xs.to_vec(), probs)
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0) || p.is_infinite() {
        return Err(invalid(MODULE, format!("Wasserstein order must be finite and >= 1, got {p}")));
    }
    Ok(())
}

/// `W_p(a, b) = (∫₀¹ |F_a^{-1}(u) − F_b^{-1}(u)|^p du)^{1/p}`. Both quantile
/// functions are constant between consecutive merged cumulative masses.
pub fn wasserstein_1d(a: &DiscreteLaw1D, b: &DiscreteLaw1D, p: f64) -> Result<f64> {
    check_p(p)?;
    let (mut i, mut j) = (0, 0);
    let (mut ca, mut cb) = (a.probs[0], b.probs[0]);
    let mut u = 0.0;
    let mut acc = 0.0;
    loop {
        let next = ca.min(cb);
        acc += (next - u).max(0.0) * (a.atoms[i] - b.atoms[j]).abs().powf(p);
        u = next;
        let last_a = i + 1 == a.len();
        let last_b = j + 1 == b.len();
        if last_a && last_b {
            break;
        }
        // advance whichever cumulative mass was reached; ties advance both
        let adv_a = !last_a && (ca <= cb || last_b);
        let adv_b = !last_b && (cb <= ca || last_a);
        if adv_a {
            i += 1;
            ca += a.probs[i];
        }
        if adv_b {
            j += 1;
            cb += b.probs[j];
        }
    }
    // rounding can leave a sliver below u = 1
    acc += (1.0 - u).max(0.0) * (a.atoms[a.len() - 1] - b.atoms[b.len() - 1]).abs().powf(p);
    Ok(acc.powf(1.0 / p))
}

/// Empirical `W_p` between two samples: matched order statistics for equal
/// sizes, the merged-quantile formula otherwise.
pub fn wasserstein_samples(xs: &[f64], ys: &[f64], p: f64) -> Result<f64> {
    check_p(p)?;
    if xs.is_empty() || ys.is_empty() {
        return Err(invalid(MODULE, "empty sample"));
    }
    if xs.len() == ys.len() {
        let mut a = xs.to_vec();
        let mut b = ys.to_vec();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let s: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).abs().powf(p)).sum();
        return Ok((s / a.len() as f64).powf(1.0 / p));
    }
    wasserstein_1d(&DiscreteLaw1D::from_sample(xs)?, &DiscreteLaw1D::from_sample(ys)?, p)
}

/// Optimal plan for the cost `|x_i − y_j|^p`.
pub fn ot_lp_plan(a: &DiscreteLaw1D, b: &DiscreteLaw1D, p: f64) -> Result<TransportPlan> {
    check_p(p)?;
    if a.len() > MAX_ORACLE_ATOMS || b.len() > MAX_ORACLE_ATOMS {
        return Err(invalid(
            MODULE,
            format!("transport oracle is limited to {MAX_ORACLE_ATOMS} atoms per law"),
        ));
    }
    let cost: Vec<Vec<f64>> = a
        .atoms
        .iter()
        .map(|x| b.atoms.iter().map(|y| (x - y).abs().powf(p)).collect())
        .collect();
    solve_transport(&a.probs, &b.probs, &cost)
}

/// `(min_π Σ π_ij |x_i − y_j|^p)^{1/p}` by network flow.
pub fn ot_lp_oracle(a: &DiscreteLaw1D, b: &DiscreteLaw1D, p: f64) -> Result<f64> {
    Ok(ot_lp_plan(a, b, p)?.cost.max(0.0).powf(1.0 / p))
}

/// Exponent `−δ/(4+2δ)` of the Wasserstein rate implied by a Zolotarev
/// rate `n^{−δ/2}`.
pub fn wasserstein_rate_target(delta: f64) -> f64 {
    -delta / (4.0 + 2.0 * delta)
}

/// How the partial sum is lifted before `f` is applied.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldBuilder {
    /// `S_n = Σ (X_k − E X)` on the real line.
    Scalar,
    /// The empirical distribution field in L^p(μ).
    Empirical { mu: Arc<DiscreteMeasure>, cdf: CdfSpec },
}

impl FieldBuilder {
    pub fn measure(&self) -> Arc<DiscreteMeasure> {
        match self {
            FieldBuilder::Scalar => Arc::new(DiscreteMeasure::unit_atom()),
            FieldBuilder::Empirical { mu, .. } => mu.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            FieldBuilder::Scalar => 1,
            FieldBuilder::Empirical { mu, .. } => mu.len(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            FieldBuilder::Scalar => "scalar".into(),
            FieldBuilder::Empirical { mu, cdf } => {
                format!("empirical-field(grid={} points, F={})", mu.len(), cdf.source())
            }
        }
    }
}

/// Membership of `f` in Λ_{2+δ}(B, M) is either checked or waived.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Certification {
    Check(LambdaCheckConfig),
    Waived,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaEstimate {
    pub n: usize,
    pub f: SmoothTestFunction,
    /// `|model_mean − gaussian_mean|`.
    pub value: f64,
    pub stderr: f64,
    pub reps: usize,
    pub seed: u64,
    pub gaussian_seed: u64,
    pub model_mean: MeanEstimate,
    pub gaussian_mean: MeanEstimate,
    pub certificate: Option<LambdaReport>,
}

fn certify(f: &SmoothTestFunction, cert: &Certification, domain: &Arc<DiscreteMeasure>) -> Result<Option<LambdaReport>> {
    match cert {
        Certification::Waived => Ok(None),
        Certification::Check(cfg) => {
            let report = lambda_class_check(f, cfg, domain)?;
            if !report.pass {
                return Err(invalid(
                    MODULE,
                    format!(
                        "{} is not certified in the smooth class (Hölder ratio {:.4}, ‖f''(0)‖ = {:.4}, M = {}); waive explicitly to proceed",
                        f.label(),
                        report.max_ratio,
                        report.norm_at_zero,
                        cfg.m_bound
                    ),
                ));
            }
            Ok(Some(report))
        }
    }
}

/// `Δ_n(f)` at a single `n`.
#[allow(clippy::too_many_arguments)]
pub fn delta_n(
    f: &SmoothTestFunction,
    model: &ProcessModel,
    builder: &FieldBuilder,
    n: usize,
    reps: usize,
    gaussian: &GaussianSampler,
    seed: u64,
    cert: &Certification,
) -> Result<DeltaEstimate> {
    Ok(delta_n_grid(f, model, builder, &[n], reps, gaussian, seed, cert)?.remove(0))
}

/// `Δ_n(f)` on an increasing grid of `n`. Replicate `r` simulates one path
/// of length `max n` and reads every `n` off its prefixes; the Gaussian
/// draws are shared by all `n`.
#[allow(clippy::too_many_arguments)]
pub fn delta_n_grid(
    f: &SmoothTestFunction,
    model: &ProcessModel,
    builder: &FieldBuilder,
    ns: &[usize],
    reps: usize,
    gaussian: &GaussianSampler,
    seed: u64,
    cert: &Certification,
) -> Result<Vec<DeltaEstimate>> {
    if reps < MIN_DELTA_REPS {
        return Err(invalid(MODULE, format!("delta_n needs at least {MIN_DELTA_REPS} replicates, got {reps}")));
    }
    if ns.is_empty() || ns[0] == 0 || ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid(MODULE, "n grid must be nonempty, positive and strictly increasing"));
    }
    let mu = builder.measure();
    if gaussian.dim() != builder.dim() || gaussian.measure().points() != mu.points() {
        return Err(Error::MeasureMismatch { module: MODULE });
    }
    if matches!(builder, FieldBuilder::Empirical { .. }) && f.is_scalar() {
        return Err(invalid(MODULE, "field models need a functional on L^p(μ), not a scalar test function"));
    }
    let certificate = certify(f, cert, &mu)?;

    let n_max = *ns.last().unwrap();
    let w = mu.weights().to_vec();
    let width = ns.len();
    let model_values = match builder {
        FieldBuilder::Scalar => {
            let center = model
                .mean()
                .ok_or_else(|| invalid(MODULE, format!("{} has no closed-form mean for centering", model.tag())))?;
            replicate_vectors(reps, seed, width, |rng, out| {
                let mut y = vec![0.0; n_max];
                model.fill(rng, &mut y);
                let mut s = 0.0;
                let mut next = 0;
                for (k, v) in y.iter().enumerate() {
                    s += v - center;
                    if k + 1 == ns[next] {
                        out[next] = f.eval_raw(&[s / (ns[next] as f64).sqrt()], &w);
                        next += 1;
                    }
                }
            })
        }
        FieldBuilder::Empirical { mu, cdf } => {
            let fgrid = cdf.on_grid(mu)?;
            let points = mu.points();
            replicate_vectors(reps, seed, width, |rng, out| {
                let mut y = vec![0.0; n_max];
                model.fill(rng, &mut y);
                let mut g = vec![0.0; points.len()];
                for (o, &n) in out.iter_mut().zip(ns) {
                    let mut prefix = y[..n].to_vec();
                    prefix.sort_by(f64::total_cmp);
                    field_from_sorted(&prefix, points, &fgrid, &mut g);
                    *o = f.eval_raw(&g, &w);
                }
            })
        }
    };

    let gaussian_seed = derive_seed(seed, GAUSSIAN_SALT);
    let g_values = replicate_values(reps, gaussian_seed, |rng| {
        let mut g = vec![0.0; gaussian.dim()];
        gaussian.sample_into(rng, &mut g);
        f.eval_raw(&g, &w)
    });
    let gaussian_mean = MeanEstimate::from_values(&g_values);

    Ok(ns
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let col: Vec<f64> = (0..reps).map(|r| model_values[r * width + j]).collect();
            let model_mean = MeanEstimate::from_values(&col);
            DeltaEstimate {
                n,
                f: f.clone(),
                value: (model_mean.mean - gaussian_mean.mean).abs(),
                stderr: model_mean.stderr.hypot(gaussian_mean.stderr),
                reps,
                seed,
                gaussian_seed,
                model_mean,
                gaussian_mean,
                certificate,
            }
        })
        .collect())
}

/// Scalar test functions in Λ⁰_{2+δ}(ℝ): `|x|^{2+δ}`, `x|x|^{1+δ}` and
/// one-sided ramps `((±x − a)_+)^{2+δ}`, each scaled so that the second
/// derivative is δ-Hölder with constant 1; `x³/6` is added when δ = 1.
pub fn default_dictionary(delta: f64) -> Result<Vec<SmoothTestFunction>> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(invalid(MODULE, format!("delta must lie in (0, 1], got {delta}")));
    }
    let r = 2.0 + delta;
    let base = 1.0 / (r * (1.0 + delta));
    let mut dict = vec![
        SmoothTestFunction::new(TestFunctionKind::AbsPower { r }, base)?,
        SmoothTestFunction::new(TestFunctionKind::SignedPower { r }, base / 2f64.powf(1.0 - delta))?,
    ];
    for shift in [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0] {
        dict.push(SmoothTestFunction::new(TestFunctionKind::Ramp { r, shift }, base)?);
    }
    if delta == 1.0 {
        dict.push(SmoothTestFunction::new(
            TestFunctionKind::Polynomial {
                coeffs: vec![0.0, 0.0, 0.0, 1.0],
            },
            1.0 / 6.0,
        )?);
    }
    Ok(dict)
}

/// Check `f(0) = f'(0) = f''(0) = 0` and the Hölder condition with `M = 0`.
pub fn certify_zolotarev_member(f: &SmoothTestFunction, delta: f64) -> Result<()> {
    if !f.is_scalar() {
        return Err(invalid(MODULE, "Zolotarev dictionaries hold scalar test functions"));
    }
    // f(±h)/h = O(h^{1+δ}) for members of the class
    let h = 1e-8;
    let slope = (f.eval_scalar(h) - f.eval_scalar(-h)) / (2.0 * h);
    if f.eval_scalar(0.0) != 0.0 || slope.abs() > 1e-6 || f.d2_scalar(0.0) != 0.0 {
        return Err(invalid(MODULE, format!("{} does not vanish to second order at 0", f.label())));
    }
    let report = lambda_class_check(
        f,
        &LambdaCheckConfig::new(delta, 0.0),
        &Arc::new(DiscreteMeasure::unit_atom()),
    )?;
    if !report.pass {
        return Err(invalid(
            MODULE,
            format!("{} fails the Hölder check (ratio {:.6})", f.label(), report.max_ratio),
        ));
    }
    Ok(())
}

/// A lower bound for `ζ_{2+δ}(A, B)` from a finite dictionary.
#[derive(Debug, Clone, PartialEq)]
pub struct ZolotarevLower {
    /// `max_f |E f(A) − E f(B)|`; a lower bound, never the distance itself.
    pub value: f64,
    pub stderr: f64,
    pub argmax: usize,
    pub labels: Vec<String>,
    pub differences: Vec<f64>,
    pub stderrs: Vec<f64>,
}

/// Monte Carlo `max_f |E f(A) − E f(B)|` over a certified dictionary.
pub fn zolotarev_lower(
    dictionary: &[SmoothTestFunction],
    delta: f64,
    law_a: &(dyn Fn(&mut LabRng) -> f64 + Sync),
    law_b: &(dyn Fn(&mut LabRng) -> f64 + Sync),
    reps: usize,
    seed: u64,
) -> Result<ZolotarevLower> {
    if dictionary.is_empty() {
        return Err(invalid(MODULE, "empty dictionary"));
    }
    if reps < 2 {
        return Err(invalid(MODULE, "need at least two replicates"));
    }
    for f in dictionary {
        certify_zolotarev_member(f, delta)?;
    }
    let width = dictionary.len();
    let eval_law = |law: &(dyn Fn(&mut LabRng) -> f64 + Sync), s: u64| {
        replicate_vectors(reps, s, width, |rng, out| {
            let x = law(rng);
            for (o, f) in out.iter_mut().zip(dictionary) {
                *o = f.eval_scalar(x);
            }
        })
    };
    let va = eval_law(law_a, derive_seed(seed, 1));
    let vb = eval_law(law_b, derive_seed(seed, 2));
    let column = |v: &[f64], j: usize| -> MeanEstimate {
        MeanEstimate::from_values(&(0..reps).map(|r| v[r * width + j]).collect::<Vec<_>>())
    };
    let mut differences = Vec::with_capacity(width);
    let mut stderrs = Vec::with_capacity(width);
    for j in 0..width {
        let (a, b) = (column(&va, j), column(&vb, j));
        differences.push((a.mean - b.mean).abs());
        stderrs.push(a.stderr.hypot(b.stderr));
    }
    let argmax = (0..width)
        .max_by(|&i, &j| differences[i].total_cmp(&differences[j]))
        .unwrap();
    Ok(ZolotarevLower {
        value: differences[argmax],
        stderr: stderrs[argmax],
        argmax,
        labels: dictionary.iter().map(|f| f.label()).collect(),
        differences,
        stderrs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::abs_normal_moment;
    use crate::generators::{IidModel, Marginal};
    use approx::assert_relative_eq;
    use rand_distr::{Distribution, StandardNormal};

    fn law(a: &[f64], p: &[f64]) -> DiscreteLaw1D {
        DiscreteLaw1D::new(a.to_vec(), p.to_vec()).unwrap()
    }

    #[test]
    fn wasserstein_examples() {
        for p in [1.0, 2.0, 3.5] {
            assert_relative_eq!(wasserstein_1d(&law(&[0.0], &[1.0]), &law(&[1.0], &[1.0]), p).unwrap(), 1.0);
        }
        let a = law(&[0.0, 1.0], &[0.5, 0.5]);
        let b = law(&[0.0, 2.0], &[0.5, 0.5]);
        assert_relative_eq!(wasserstein_1d(&a, &b, 1.0).unwrap(), 0.5, epsilon = 1e-15);
        assert_eq!(wasserstein_1d(&a, &a, 2.0).unwrap(), 0.0);
        assert!(wasserstein_1d(&a, &b, 0.5).is_err());
        assert!(DiscreteLaw1D::new(vec![], vec![]).is_err());
    }

    #[test]
    fn oracle_matches_on_fixed_instance() {
        let a = law(&[-1.0, 0.3, 2.0], &[0.2, 0.5, 0.3]);
        let b = law(&[0.0, 1.0], &[0.6, 0.4]);
        for p in [1.0, 2.0, 3.0] {
            assert_relative_eq!(
                wasserstein_1d(&a, &b, p).unwrap(),
                ot_lp_oracle(&a, &b, p).unwrap(),
                epsilon = 1e-12
            );
        }
        assert_eq!(ot_lp_oracle(&a, &a, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn sample_forms_agree() {
        let xs = [0.3, -1.0, 2.0, 0.0];
        let ys = [1.0, 1.5, -0.5, 0.2];
        let direct = wasserstein_samples(&xs, &ys, 2.0).unwrap();
        let merged = wasserstein_1d(
            &DiscreteLaw1D::from_sample(&xs).unwrap(),
            &DiscreteLaw1D::from_sample(&ys).unwrap(),
            2.0,
        )
        .unwrap();
        assert_relative_eq!(direct, merged, epsilon = 1e-14);
    }

    #[test]
    fn rate_target_examples() {
        assert_relative_eq!(wasserstein_rate_target(1.0), -1.0 / 6.0);
        assert_relative_eq!(wasserstein_rate_target(0.5), -0.1);
        assert!(wasserstein_rate_target(1e-12).abs() < 1e-12);
    }

    #[test]
    fn rademacher_square_has_no_discrepancy() {
        let model = ProcessModel::Iid(IidModel::new(Marginal::Rademacher));
        let g = GaussianSampler::scalar(1.0).unwrap();
        let cert = Certification::Check(LambdaCheckConfig::new(1.0, 2.0));
        let est = delta_n_grid(&SmoothTestFunction::square(), &model, &FieldBuilder::Scalar, &[4, 16, 64], 4000, &g, 3, &cert)
            .unwrap();
        for e in &est {
            assert!(e.value < 3.0 * e.stderr + 1e-12, "{e:?}");
            assert!(e.certificate.unwrap().pass);
        }
        // E(S_n/√n)² = 1 exactly; the model side alone is unbiased
        assert!((est[2].model_mean.mean - 1.0).abs() < 4.0 * est[2].model_mean.stderr);
    }

    #[test]
    fn uncertified_function_rejected_unless_waived() {
        let model = ProcessModel::Iid(IidModel::new(Marginal::Rademacher));
        let g = GaussianSampler::scalar(1.0).unwrap();
        let sq = SmoothTestFunction::square();
        let strict = Certification::Check(LambdaCheckConfig::new(1.0, 1.0));
        assert!(delta_n(&sq, &model, &FieldBuilder::Scalar, 8, 200, &g, 1, &strict).is_err());
        assert!(delta_n(&sq, &model, &FieldBuilder::Scalar, 8, 200, &g, 1, &Certification::Waived).is_ok());
        assert!(delta_n(&sq, &model, &FieldBuilder::Scalar, 8, 50, &g, 1, &Certification::Waived).is_err());
    }

    #[test]
    fn dictionary_is_certified() {
        for delta in [0.25, 0.5, 1.0] {
            let dict = default_dictionary(delta).unwrap();
            assert_eq!(dict.len(), if delta == 1.0 { 9 } else { 8 });
            for f in &dict {
                certify_zolotarev_member(f, delta).unwrap();
            }
        }
        let bad = SmoothTestFunction::square();
        assert!(certify_zolotarev_member(&bad, 1.0).is_err());
    }

    #[test]
    fn zolotarev_normal_scales() {
        let dict = vec![SmoothTestFunction::abs_cube()];
        let a = |rng: &mut LabRng| -> f64 { StandardNormal.sample(rng) };
        let b = |rng: &mut LabRng| -> f64 { 2.0 * Distribution::<f64>::sample(&StandardNormal, rng) };
        let z = zolotarev_lower(&dict, 1.0, &a, &b, 200_000, 9).unwrap();
        let exact = 7.0 * abs_normal_moment(3.0) / 6.0;
        assert_relative_eq!(exact, 7.0 * 2.0 * (2.0 / std::f64::consts::PI).sqrt() / 6.0, epsilon = 1e-14);
        assert!((z.value - exact).abs() < 4.0 * z.stderr, "{z:?} vs {exact}");
        let same = zolotarev_lower(&dict, 1.0, &a, &a, 20_000, 9).unwrap();
        assert!(same.value < 4.0 * same.stderr);
        assert!(zolotarev_lower(&[], 1.0, &a, &b, 10, 1).is_err());
    }
}
