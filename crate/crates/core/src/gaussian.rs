//! Limiting covariance operators and the Gaussian field they define.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};

use crate::csvio::{fmt_f64, CsvTable};
use crate::error::{invalid, Error, Result};
use crate::generators::{FiniteMarkov, Marginal, ProcessModel};
use crate::mc::{replicate_mean, MeanEstimate};
use crate::measure::{lp_norm_raw, DiscreteMeasure, LpVector};
use crate::rng::{replicate_rng, LabRng};

const MODULE: &str = "gaussian_limit";

pub const DEFAULT_CLIP_TOL: f64 = 1e-10;

/// `E|Z|^r` for a standard normal `Z`.
pub fn abs_normal_moment(r: f64) -> f64 {
    2f64.powf(r / 2.0) * statrs::function::gamma::gamma((r + 1.0) / 2.0) / std::f64::consts::PI.sqrt()
}

/// How a real observation is lifted into the grid space.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureMap {
    /// The observation itself, on a single unit atom.
    Scalar,
    /// `t ↦ 1{x ≤ t}` on the points of the measure.
    Indicator(Arc<DiscreteMeasure>),
}

impl FeatureMap {
    pub fn measure(&self) -> Arc<DiscreteMeasure> {
        match self {
            FeatureMap::Scalar => Arc::new(DiscreteMeasure::unit_atom()),
            FeatureMap::Indicator(mu) => mu.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            FeatureMap::Scalar => 1,
            FeatureMap::Indicator(mu) => mu.len(),
        }
    }

    /// Uncentered feature of `x`.
    pub fn eval(&self, x: f64, out: &mut [f64]) {
        match self {
            FeatureMap::Scalar => out[0] = x,
            FeatureMap::Indicator(mu) => {
                for (o, t) in out.iter_mut().zip(mu.points()) {
                    *o = if x <= *t { 1.0 } else { 0.0 };
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Taper {
    Truncate,
    Bartlett,
}

impl Taper {
    fn weight(self, k: usize, window: usize) -> f64 {
        match self {
            Taper::Truncate => 1.0,
            Taper::Bartlett => 1.0 - k as f64 / (window as f64 + 1.0),
        }
    }
}

/// Symmetric covariance `K(t_i, t_j)` on the points of a measure.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceOperator {
    pub measure: Arc<DiscreteMeasure>,
    pub matrix: DMatrix<f64>,
    /// `None` means the lag series was summed to infinity in closed form.
    pub lag_window: Option<usize>,
    pub taper: Taper,
}

impl CovarianceOperator {
    pub fn new(measure: Arc<DiscreteMeasure>, matrix: DMatrix<f64>) -> Result<Self> {
        let m = measure.len();
        if matrix.nrows() != m || matrix.ncols() != m {
            return Err(Error::LengthMismatch {
                module: MODULE,
                expected: m,
                got: matrix.nrows(),
            });
        }
        let asym = (&matrix - matrix.transpose()).abs().max();
        if asym > 1e-12 * (1.0 + matrix.abs().max()) {
            return Err(invalid(MODULE, format!("covariance not symmetric (defect {asym:e})")));
        }
        Ok(Self {
            measure,
            matrix,
            lag_window: None,
            taper: Taper::Truncate,
        })
    }

    /// `E‖G‖²_{L²(μ)} = Σ_i w_i K(t_i, t_i)`.
    pub fn weighted_trace(&self) -> f64 {
        self.measure
            .weights()
            .iter()
            .enumerate()
            .map(|(i, w)| w * self.matrix[(i, i)])
            .sum()
    }

    pub fn to_csv(&self) -> CsvTable {
        let pts = self.measure.points();
        let mut header = vec!["t".to_string()];
        header.extend(pts.iter().map(|t| fmt_f64(*t)));
        let mut table = CsvTable::new(header);
        table.meta(
            "lag_window",
            self.lag_window.map_or("exact".to_string(), |l| l.to_string()),
        );
        table.meta("taper", format!("{:?}", self.taper).to_lowercase());
        for (i, t) in pts.iter().enumerate() {
            let mut row = vec![fmt_f64(*t)];
            row.extend(self.matrix.row(i).iter().map(|v| fmt_f64(*v)));
            table.push_row(row);
        }
        table
    }
}

fn centered_features(chain: &FiniteMarkov, feature: &FeatureMap) -> DMatrix<f64> {
    let d = chain.dim();
    let m = feature.dim();
    let mut phi = DMatrix::zeros(d, m);
    let mut buf = vec![0.0; m];
    for (j, s) in chain.states().iter().enumerate() {
        feature.eval(*s, &mut buf);
        for a in 0..m {
            phi[(j, a)] = buf[a];
        }
    }
    let pi = chain.stationary();
    for a in 0..m {
        let mean: f64 = (0..d).map(|j| pi[j] * phi[(j, a)]).sum();
        for j in 0..d {
            phi[(j, a)] -= mean;
        }
    }
    phi
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Exact long-run covariance `Σ_{k∈ℤ} cov(φ(X₀), φ(X_k))` of a finite chain.
///
/// The lag series is summed in closed form with the fundamental matrix
/// `Z = (I − P + 1πᵀ)⁻¹`: for centered `φ̄`, `Σ_{k≥1} P^k φ̄ = (Z − I) φ̄`.
pub fn covariance_markov_exact(chain: &FiniteMarkov, feature: &FeatureMap) -> Result<CovarianceOperator> {
    let d = chain.dim();
    let phi = centered_features(chain, feature);
    let pi = DVector::from_column_slice(chain.stationary());
    let dpi = DMatrix::from_diagonal(&pi);
    let ones = DVector::from_element(d, 1.0);
    let fundamental = (DMatrix::identity(d, d) - chain.transition() + &ones * pi.transpose())
        .try_inverse()
        .ok_or_else(|| Error::Singular {
            module: MODULE,
            msg: "fundamental matrix of the chain is singular".into(),
        })?;
    let cov0 = phi.transpose() * &dpi * &phi;
    let tail = phi.transpose() * &dpi * (fundamental - DMatrix::identity(d, d)) * &phi;
    let k = &cov0 + &tail + tail.transpose();
    CovarianceOperator::new(feature.measure(), symmetrize(k))
}

/// Lag-windowed covariance of a finite chain with exact lag terms from `P^k`.
pub fn covariance_markov_lagged(
    chain: &FiniteMarkov,
    feature: &FeatureMap,
    max_lag: usize,
    taper: Taper,
) -> Result<CovarianceOperator> {
    let phi = centered_features(chain, feature);
    let dpi = DMatrix::from_diagonal(&DVector::from_column_slice(chain.stationary()));
    let left = phi.transpose() * &dpi;
    let mut k = &left * &phi;
    let mut pk_phi = phi.clone();
    for lag in 1..=max_lag {
        pk_phi = chain.transition() * pk_phi;
        let c = &left * &pk_phi;
        let w = taper.weight(lag, max_lag);
        k += (&c + c.transpose()) * w;
    }
    let mut op = CovarianceOperator::new(feature.measure(), symmetrize(k))?;
    op.lag_window = Some(max_lag);
    op.taper = taper;
    Ok(op)
}

/// Exact covariance for models with closed-form lag structure.
pub fn covariance_exact(model: &ProcessModel, feature: &FeatureMap) -> Result<CovarianceOperator> {
    match model {
        ProcessModel::Iid(m) => {
            let mu = feature.measure();
            let matrix = match feature {
                FeatureMap::Scalar => DMatrix::from_element(1, 1, m.marginal.variance()),
                FeatureMap::Indicator(grid) => iid_indicator_covariance(&m.marginal, grid.points()),
            };
            CovarianceOperator::new(mu, matrix)
        }
        ProcessModel::Markov(chain) => covariance_markov_exact(chain, feature),
        ProcessModel::Lsv(_) => Err(invalid(
            MODULE,
            "no closed-form covariance for the LSV map; use covariance_from_paths",
        )),
    }
}

fn iid_indicator_covariance(marginal: &Marginal, pts: &[f64]) -> DMatrix<f64> {
    let f: Vec<f64> = pts.iter().map(|t| marginal.cdf(*t)).collect();
    DMatrix::from_fn(pts.len(), pts.len(), |i, j| f[i.min(j)].min(f[i.max(j)]) - f[i] * f[j])
}

/// Default window `⌊n^{1/3}⌋` for path-based estimation.
pub fn default_lag_window(n: usize) -> usize {
    let mut l = (n as f64).cbrt().floor() as usize;
    while (l + 1).pow(3) <= n {
        l += 1;
    }
    while l > 0 && l.pow(3) > n {
        l -= 1;
    }
    l
}

/// Lag-window covariance estimate from an ensemble of observed paths.
///
/// Features are centered by `mean_feature` when supplied (known
/// stationary law), otherwise by the pooled sample mean.
pub fn covariance_from_paths(
    paths: &[Vec<f64>],
    feature: &FeatureMap,
    max_lag: Option<usize>,
    taper: Taper,
    mean_feature: Option<&[f64]>,
) -> Result<CovarianceOperator> {
    if paths.is_empty() || paths.iter().any(|p| p.is_empty()) {
        return Err(invalid(MODULE, "need at least one nonempty path"));
    }
    let n_min = paths.iter().map(Vec::len).min().unwrap_or(0);
    let lag = max_lag.unwrap_or_else(|| default_lag_window(n_min));
    if lag >= n_min {
        return Err(invalid(
            MODULE,
            format!("max_lag {lag} exceeds the available path length {n_min}"),
        ));
    }
    let m = feature.dim();
    let mut feats: Vec<DMatrix<f64>> = Vec::with_capacity(paths.len());
    let mut buf = vec![0.0; m];
    for p in paths {
        let mut f = DMatrix::zeros(p.len(), m);
        for (t, x) in p.iter().enumerate() {
            feature.eval(*x, &mut buf);
            for a in 0..m {
                f[(t, a)] = buf[a];
            }
        }
        feats.push(f);
    }
    let center: Vec<f64> = match mean_feature {
        Some(c) => {
            if c.len() != m {
                return Err(Error::LengthMismatch {
                    module: MODULE,
                    expected: m,
                    got: c.len(),
                });
            }
            c.to_vec()
        }
        None => {
            let total: usize = feats.iter().map(|f| f.nrows()).sum();
            (0..m)
                .map(|a| feats.iter().map(|f| f.column(a).sum()).sum::<f64>() / total as f64)
                .collect()
        }
    };
    for f in &mut feats {
        for a in 0..m {
            f.column_mut(a).add_scalar_mut(-center[a]);
        }
    }
    let mut k = DMatrix::zeros(m, m);
    let mut count = 0.0;
    for f in &feats {
        let n = f.nrows();
        let mut kp = f.transpose() * f / n as f64;
        for lag_k in 1..=lag {
            let a = f.rows(0, n - lag_k);
            let b = f.rows(lag_k, n - lag_k);
            let c = a.transpose() * b / n as f64;
            kp += (&c + c.transpose()) * taper.weight(lag_k, lag);
        }
        k += kp;
        count += 1.0;
    }
    let mut op = CovarianceOperator::new(feature.measure(), symmetrize(k / count))?;
    op.lag_window = Some(lag);
    op.taper = taper;
    Ok(op)
}

/// Outcome of an eigenvalue clip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdReport {
    pub min_eigenvalue: f64,
    pub clipped: usize,
    /// Frobenius norm of the change made by the projection.
    pub reconstruction_error: f64,
}

/// Clip eigenvalues below `tol · λ_max` to zero.
pub fn psd_project(k: &CovarianceOperator, tol: f64) -> (CovarianceOperator, PsdReport) {
    let eig = k.matrix.clone().symmetric_eigen();
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let floor = tol * lmax;
    let mut clipped = 0;
    let vals = eig.eigenvalues.map(|l| {
        if l < floor {
            if l != 0.0 {
                clipped += 1;
            }
            0.0
        } else {
            l
        }
    });
    let min_eigenvalue = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if clipped == 0 {
        let report = PsdReport {
            min_eigenvalue,
            clipped,
            reconstruction_error: 0.0,
        };
        return (k.clone(), report);
    }
    let rebuilt = symmetrize(&eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose());
    let err = (&rebuilt - &k.matrix).norm();
    let mut out = k.clone();
    out.matrix = rebuilt;
    (
        out,
        PsdReport {
            min_eigenvalue,
            clipped,
            reconstruction_error: err,
        },
    )
}

/// Draws `G = A Z` with `A Aᵀ` the projected covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSampler {
    measure: Arc<DiscreteMeasure>,
    factor: DMatrix<f64>,
    report: PsdReport,
}

impl GaussianSampler {
    pub fn new(k: &CovarianceOperator) -> Self {
        Self::with_tolerance(k, DEFAULT_CLIP_TOL)
    }

    pub fn with_tolerance(k: &CovarianceOperator, tol: f64) -> Self {
        let (proj, report) = psd_project(k, tol);
        let m = proj.matrix.nrows();
        let eig = proj.matrix.symmetric_eigen();
        let lmax = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
        let keep: Vec<usize> = (0..eig.eigenvalues.len())
            .filter(|&i| eig.eigenvalues[i] > tol * lmax && eig.eigenvalues[i] > 0.0)
            .collect();
        let mut factor = DMatrix::zeros(m, keep.len());
        for (c, &i) in keep.iter().enumerate() {
            let s = eig.eigenvalues[i].sqrt();
            for r in 0..m {
                factor[(r, c)] = eig.eigenvectors[(r, i)] * s;
            }
        }
        Self {
            measure: k.measure.clone(),
            factor,
            report,
        }
    }

    /// Scalar `N(0, σ²)`.
    pub fn scalar(variance: f64) -> Result<Self> {
        if !(variance >= 0.0) {
            return Err(invalid(MODULE, format!("variance must be nonnegative, got {variance}")));
        }
        let k = CovarianceOperator::new(Arc::new(DiscreteMeasure::unit_atom()), DMatrix::from_element(1, 1, variance))?;
        Ok(Self::new(&k))
    }

    pub fn measure(&self) -> &Arc<DiscreteMeasure> {
        &self.measure
    }

    pub fn dim(&self) -> usize {
        self.factor.nrows()
    }

    pub fn rank(&self) -> usize {
        self.factor.ncols()
    }

    pub fn report(&self) -> PsdReport {
        self.report
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        &self.factor * self.factor.transpose()
    }

    pub fn sample_into(&self, rng: &mut LabRng, out: &mut [f64]) {
        let r = self.rank();
        out.iter_mut().for_each(|v| *v = 0.0);
        for c in 0..r {
            let z: f64 = StandardNormal.sample(rng);
            for (i, o) in out.iter_mut().enumerate() {
                *o += self.factor[(i, c)] * z;
            }
        }
    }

    pub fn sample(&self, rng: &mut LabRng) -> LpVector {
        let mut v = vec![0.0; self.dim()];
        self.sample_into(rng, &mut v);
        LpVector::new(self.measure.clone(), v).expect("sampler dimension matches its measure")
    }
}

/// `n_samples` independent draws; draw `i` uses stream `i` of `seed`.
pub fn sample_gaussian(sampler: &GaussianSampler, n_samples: usize, seed: u64) -> Vec<LpVector> {
    (0..n_samples)
        .map(|i| sampler.sample(&mut replicate_rng(seed, i as u64)))
        .collect()
}

/// Monte Carlo `E‖G‖_{L^p(μ)}^power`.
pub fn gaussian_moment(
    sampler: &GaussianSampler,
    p_norm: f64,
    power: f64,
    n_mc: usize,
    seed: u64,
) -> Result<MeanEstimate> {
    if n_mc < 1000 {
        return Err(invalid(MODULE, format!("gaussian_moment needs n_mc ≥ 1000, got {n_mc}")));
    }
    if !(p_norm >= 1.0) {
        return Err(invalid(MODULE, format!("norm exponent must be ≥ 1, got {p_norm}")));
    }
    let w = self_weights(sampler);
    Ok(replicate_mean(n_mc, seed, |rng| {
        let mut v = vec![0.0; sampler.dim()];
        sampler.sample_into(rng, &mut v);
        lp_norm_raw(&v, &w, p_norm).powf(power)
    }))
}

fn self_weights(s: &GaussianSampler) -> Vec<f64> {
    s.measure.weights().to_vec()
}
