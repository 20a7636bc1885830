//! The empirical distribution field `G_n(t) = n^{-1/2} Σ_k (1{Y_k ≤ t} − F(t))`
//! as an element of L^p(μ).

use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::generators::{Marginal, ProcessModel, SamplePath, UlamDensity};
use crate::mc::replicate_values;
use crate::measure::{dual_maximizer, lp_norm_raw, pairing, DiscreteMeasure, LpVector};

const MODULE: &str = "empirical_process";

pub const DEFAULT_GRID_POINTS: usize = 512;
pub const DEFAULT_CALIBRATION_LEN: usize = 1_000_000;

/// Where the stationary distribution function `F` comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum CdfSpec {
    Marginal(Marginal),
    /// Stationary density of the LSV map from the Ulam scheme.
    Ulam(Arc<UlamDensity>),
    /// Piecewise-linear through `(points, values)`, constant outside.
    Tabulated { points: Vec<f64>, values: Vec<f64> },
    /// Right-continuous step cdf of a calibration sample.
    Empirical { sorted: Vec<f64>, source: String },
}

impl CdfSpec {
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        Ok(CdfSpec::Marginal(Marginal::uniform(a, b)?))
    }

    pub fn tabulated(points: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != values.len() {
            return Err(invalid(MODULE, "tabulated cdf needs matching, nonempty points and values"));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid(MODULE, "tabulated cdf points must be strictly increasing"));
        }
        Ok(CdfSpec::Tabulated { points, values })
    }

    pub fn from_sample(sample: &[f64], source: impl Into<String>) -> Result<Self> {
        if sample.is_empty() || sample.iter().any(|x| !x.is_finite()) {
            return Err(invalid(MODULE, "calibration sample must be nonempty and finite"));
        }
        let mut sorted = sample.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(CdfSpec::Empirical {
            sorted,
            source: source.into(),
        })
    }

    /// Empirical cdf of an independent run of `n_cal` steps.
    pub fn calibrate(model: &ProcessModel, n_cal: usize, seed: u64) -> Result<Self> {
        let path = model.simulate(n_cal, seed)?;
        Self::from_sample(
            &path.values,
            format!("calibration run: {} n_cal={n_cal} seed={seed}", model.tag()),
        )
    }

    /// Analytic `F` where one exists: the marginal of an i.i.d. model, the
    /// stationary law of a chain, the Ulam density of an LSV model.
    pub fn for_model(model: &ProcessModel) -> Result<Self> {
        match model {
            ProcessModel::Iid(m) => Ok(CdfSpec::Marginal(m.marginal.clone())),
            ProcessModel::Markov(c) => Ok(CdfSpec::Marginal(Marginal::discrete(
                c.states().to_vec(),
                c.stationary().to_vec(),
            )?)),
            ProcessModel::Lsv(m) => match m.density() {
                Some(d) => Ok(CdfSpec::Ulam(d.clone())),
                None => Err(invalid(MODULE, "LSV model has no Ulam density; calibrate instead")),
            },
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            CdfSpec::Marginal(m) => m.cdf(t),
            CdfSpec::Ulam(d) => d.cdf(t),
            CdfSpec::Tabulated { points, values } => {
                let j = points.partition_point(|p| *p <= t);
                if j == 0 {
                    values[0]
                } else if j == points.len() {
                    values[j - 1]
                } else {
                    let (x0, x1) = (points[j - 1], points[j]);
                    let s = (t - x0) / (x1 - x0);
                    values[j - 1] + s * (values[j] - values[j - 1])
                }
            }
            CdfSpec::Empirical { sorted, .. } => {
                sorted.partition_point(|y| *y <= t) as f64 / sorted.len() as f64
            }
        }
    }

    pub fn source(&self) -> String {
        match self {
            CdfSpec::Marginal(m) => format!("analytic: {}", m.label()),
            CdfSpec::Ulam(d) => format!("ulam: gamma={} bins={}", d.gamma(), d.bins()),
            CdfSpec::Tabulated { points, .. } => format!("tabulated: {} points", points.len()),
            CdfSpec::Empirical { source, .. } => source.clone(),
        }
    }

    /// `F` on the grid of `mu`, checked to be a nondecreasing map into [0, 1].
    pub fn on_grid(&self, mu: &DiscreteMeasure) -> Result<Vec<f64>> {
        let f: Vec<f64> = mu.points().iter().map(|t| self.eval(*t)).collect();
        if let Some(v) = f.iter().find(|v| !(**v >= -1e-12 && **v <= 1.0 + 1e-12)) {
            return Err(invalid(MODULE, format!("cdf value {v} outside [0, 1]")));
        }
        if let Some(i) = (1..f.len()).find(|&i| f[i] < f[i - 1] - 1e-12) {
            return Err(invalid(
                MODULE,
                format!("non-monotone cdf: F({}) = {} < F({}) = {}", mu.points()[i], f[i], mu.points()[i - 1], f[i - 1]),
            ));
        }
        Ok(f.into_iter().map(|v| v.clamp(0.0, 1.0)).collect())
    }
}

/// `G_n` on the grid of `measure`, with the `F` it was centered by.
#[derive(Debug, Clone)]
pub struct EmpiricalField {
    pub measure: Arc<DiscreteMeasure>,
    pub true_cdf: Vec<f64>,
    pub field: LpVector,
    pub n: usize,
}

impl EmpiricalField {
    pub fn norm(&self, p: f64) -> f64 {
        lp_norm_raw(self.field.values(), self.measure.weights(), p)
    }
}

/// Write `√n(F_n(t_i) − F(t_i))` into `out`; `sorted` must be ascending.
pub(crate) fn field_from_sorted(sorted: &[f64], points: &[f64], cdf: &[f64], out: &mut [f64]) {
    let n = sorted.len() as f64;
    let root = n.sqrt();
    let mut j = 0;
    for ((o, t), f) in out.iter_mut().zip(points).zip(cdf) {
        while j < sorted.len() && sorted[j] <= *t {
            j += 1;
        }
        *o = root * (j as f64 / n - f);
    }
}

pub fn empirical_field(path: &[f64], cdf: &CdfSpec, mu: Arc<DiscreteMeasure>) -> Result<EmpiricalField> {
    if path.is_empty() {
        return Err(invalid(MODULE, "empirical field needs at least one observation"));
    }
    if path.iter().any(|y| !y.is_finite()) {
        return Err(invalid(MODULE, "observations must be finite"));
    }
    let true_cdf = cdf.on_grid(&mu)?;
    let mut sorted = path.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut values = vec![0.0; mu.len()];
    field_from_sorted(&sorted, mu.points(), &true_cdf, &mut values);
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invariant {
            module: MODULE,
            msg: "field has non-finite entries".into(),
        });
    }
    Ok(EmpiricalField {
        field: LpVector::new(mu.clone(), values)?,
        measure: mu,
        true_cdf,
        n: path.len(),
    })
}

pub fn empirical_field_of(path: &SamplePath, cdf: &CdfSpec, mu: Arc<DiscreteMeasure>) -> Result<EmpiricalField> {
    empirical_field(&path.values, cdf, mu)
}

/// `sup{|∫ g·x dμ| : ‖g‖_q ≤ 1}`, attained at the dual maximizer.
pub fn sobolev_sup(x: &LpVector, p: f64) -> Result<f64> {
    if !(p >= 2.0) || p.is_infinite() {
        return Err(invalid(MODULE, format!("sobolev_sup needs finite p >= 2, got {p}")));
    }
    match dual_maximizer(x, p) {
        Ok(g) => Ok(pairing(&g, x)?.abs()),
        Err(Error::Singular { .. }) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// `∫ F(1−F) dμ`, the exact `E‖G_n‖²_{L²(μ)}` for i.i.d. data.
pub fn iid_l2_moment(cdf: &CdfSpec, mu: &DiscreteMeasure) -> Result<f64> {
    let f = cdf.on_grid(mu)?;
    Ok(f.iter().zip(mu.weights()).map(|(f, w)| w * f * (1.0 - f)).sum())
}

/// Lebesgue grid of `m` cells on the sample range widened by 5% each side.
pub fn default_grid(sample: &[f64], m: usize) -> Result<Arc<DiscreteMeasure>> {
    if sample.is_empty() {
        return Err(invalid(MODULE, "cannot build a grid from an empty sample"));
    }
    let lo = sample.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = sample.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 };
    Ok(Arc::new(
        DiscreteMeasure::lebesgue(lo - pad, hi + pad, m)?.with_truncation(lo - pad, hi + pad),
    ))
}

/// Per-replicate `‖G_n‖_p`, replicate `r` simulated from stream `r`.
pub fn replicate_field_norms(
    model: &ProcessModel,
    cdf: &CdfSpec,
    mu: &Arc<DiscreteMeasure>,
    n: usize,
    p: f64,
    reps: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if n == 0 || reps == 0 {
        return Err(invalid(MODULE, "need n >= 1 and reps >= 1"));
    }
    let f = cdf.on_grid(mu)?;
    let points = mu.points();
    let w = mu.weights();
    Ok(replicate_values(reps, seed, |rng| {
        let mut y = vec![0.0; n];
        model.fill(rng, &mut y);
        y.sort_by(f64::total_cmp);
        let mut g = vec![0.0; points.len()];
        field_from_sorted(&y, points, &f, &mut g);
        lp_norm_raw(&g, w, p)
    }))
}
