//! Stationary real-sequence generators.
//!
//! Every generator is a pure function of `(model, seed)`: the same pair
//! always reproduces the same path bit for bit.

pub mod lsv;
pub mod markov;

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::csvio::{fmt_f64, CsvTable};
use crate::error::{invalid, Result};
use crate::rng::{replicate_rng, LabRng};

pub use lsv::{lsv_step, ulam_density, UlamDensity};
pub use markov::{markov_power, FiniteMarkov};

const MODULE: &str = "generators";

/// One-dimensional marginal of an i.i.d. sequence.
#[derive(Debug, Clone, PartialEq)]
pub enum Marginal {
    Rademacher,
    Uniform { a: f64, b: f64 },
    Discrete { atoms: Vec<f64>, probs: Vec<f64> },
    StandardNormal,
}

impl Marginal {
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        if !(a < b && a.is_finite() && b.is_finite()) {
            return Err(invalid(MODULE, format!("uniform needs finite a < b, got ({a}, {b})")));
        }
        Ok(Marginal::Uniform { a, b })
    }

    pub fn discrete(atoms: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != probs.len() {
            return Err(invalid(MODULE, "discrete marginal needs equally many atoms and probs"));
        }
        if probs.iter().any(|p| !(*p >= 0.0)) || atoms.iter().any(|a| !a.is_finite()) {
            return Err(invalid(MODULE, "discrete marginal has a negative prob or non-finite atom"));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(invalid(MODULE, format!("discrete probs sum to {s}, not 1")));
        }
        Ok(Marginal::Discrete { atoms, probs })
    }

    pub fn sample(&self, rng: &mut LabRng) -> f64 {
        match self {
            Marginal::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            Marginal::Uniform { a, b } => a + (b - a) * rng.random::<f64>(),
            Marginal::Discrete { atoms, probs } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (x, p) in atoms.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return *x;
                    }
                }
                atoms[atoms.len() - 1]
            }
            Marginal::StandardNormal => StandardNormal.sample(rng),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Marginal::Rademacher | Marginal::StandardNormal => 0.0,
            Marginal::Uniform { a, b } => 0.5 * (a + b),
            Marginal::Discrete { atoms, probs } => atoms.iter().zip(probs).map(|(x, p)| x * p).sum(),
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            Marginal::Rademacher | Marginal::StandardNormal => 1.0,
            Marginal::Uniform { a, b } => (b - a).powi(2) / 12.0,
            Marginal::Discrete { atoms, probs } => {
                let m = self.mean();
                atoms.iter().zip(probs).map(|(x, p)| p * (x - m).powi(2)).sum()
            }
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        match self {
            Marginal::Rademacher => {
                if t < -1.0 {
                    0.0
                } else if t < 1.0 {
                    0.5
                } else {
                    1.0
                }
            }
            Marginal::Uniform { a, b } => ((t - a) / (b - a)).clamp(0.0, 1.0),
            Marginal::Discrete { atoms, probs } => atoms
                .iter()
                .zip(probs)
                .filter(|(x, _)| **x <= t)
                .map(|(_, p)| p)
                .sum::<f64>()
                .min(1.0),
            Marginal::StandardNormal => 0.5 * statrs::function::erf::erfc(-t / std::f64::consts::SQRT_2),
        }
    }

    /// `E|X|^r` in closed form.
    pub fn abs_moment(&self, r: f64) -> f64 {
        match self {
            Marginal::Rademacher => 1.0,
            Marginal::StandardNormal => crate::gaussian::abs_normal_moment(r),
            Marginal::Uniform { a, b } => {
                // ∫_a^b |x|^r dx / (b − a)
                let prim = |x: f64| x.signum() * x.abs().powf(r + 1.0) / (r + 1.0);
                (prim(*b) - prim(*a)) / (b - a)
            }
            Marginal::Discrete { atoms, probs } => {
                atoms.iter().zip(probs).map(|(x, p)| p * x.abs().powf(r)).sum()
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            Marginal::Rademacher => "rademacher".into(),
            Marginal::Uniform { a, b } => format!("uniform(a={a},b={b})"),
            Marginal::Discrete { atoms, probs } => format!("discrete(atoms={atoms:?},probs={probs:?})"),
            Marginal::StandardNormal => "normal".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IidModel {
    pub marginal: Marginal,
}

impl IidModel {
    pub fn new(marginal: Marginal) -> Self {
        Self { marginal }
    }

    pub fn fill(&self, rng: &mut LabRng, out: &mut [f64]) {
        if let Marginal::Rademacher = self.marginal {
            // 64 signs per draw.
            for chunk in out.chunks_mut(64) {
                let bits: u64 = rng.random();
                for (i, v) in chunk.iter_mut().enumerate() {
                    *v = if (bits >> i) & 1 == 1 { 1.0 } else { -1.0 };
                }
            }
        } else {
            for v in out.iter_mut() {
                *v = self.marginal.sample(rng);
            }
        }
    }
}

/// Initial-point strategy for LSV orbits.
#[derive(Debug, Clone, PartialEq)]
pub enum LsvInit {
    UlamDensity { m_bins: usize },
    /// A point just to the right of the neutral fixed point.
    FixedPointPerturbed,
    Uniform,
}

impl fmt::Display for LsvInit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LsvInit::UlamDensity { m_bins } => write!(f, "ulam(m={m_bins})"),
            LsvInit::FixedPointPerturbed => write!(f, "fixed-point-perturbed"),
            LsvInit::Uniform => write!(f, "uniform"),
        }
    }
}

pub const DEFAULT_BURN_IN: usize = 1000;
pub const DEFAULT_ULAM_BINS: usize = 1024;

#[derive(Debug, Clone, PartialEq)]
pub struct LsvModel {
    gamma: f64,
    burn_in: usize,
    init: LsvInit,
    density: Option<Arc<UlamDensity>>,
}

impl LsvModel {
    pub fn new(gamma: f64, burn_in: usize, init: LsvInit) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(invalid(MODULE, format!("LSV gamma must lie in (0,1), got {gamma}")));
        }
        let density = match init {
            LsvInit::UlamDensity { m_bins } => Some(Arc::new(ulam_density(gamma, m_bins)?)),
            _ => None,
        };
        Ok(Self {
            gamma,
            burn_in,
            init,
            density,
        })
    }

    /// Ulam initialization on 1024 cells with 10³ burn-in steps.
    pub fn with_defaults(gamma: f64) -> Result<Self> {
        Self::new(gamma, DEFAULT_BURN_IN, LsvInit::UlamDensity { m_bins: DEFAULT_ULAM_BINS })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in
    }

    pub fn init(&self) -> &LsvInit {
        &self.init
    }

    pub fn density(&self) -> Option<&Arc<UlamDensity>> {
        self.density.as_ref()
    }

    /// Rate experiments are only covered by the theory for `γ < 1/3`.
    pub fn check_rate_regime(&self) -> Result<()> {
        if self.gamma < 1.0 / 3.0 {
            Ok(())
        } else {
            Err(invalid(MODULE, format!("rate experiments need gamma < 1/3, got {}", self.gamma)))
        }
    }

    pub fn initial_point(&self, rng: &mut LabRng) -> f64 {
        let x0 = match &self.init {
            LsvInit::UlamDensity { .. } => self.density.as_ref().expect("density built").sample(rng),
            LsvInit::FixedPointPerturbed => 1e-6 * (1.0 + rng.random::<f64>()),
            LsvInit::Uniform => rng.random::<f64>(),
        };
        let mut x = x0;
        for _ in 0..self.burn_in {
            x = lsv::lsv_step_unchecked(x, self.gamma);
        }
        x
    }

    pub fn fill(&self, rng: &mut LabRng, out: &mut [f64]) {
        let mut x = self.initial_point(rng);
        for v in out.iter_mut() {
            *v = x;
            x = lsv::lsv_step_unchecked(x, self.gamma);
        }
    }
}

/// A stationary real sequence.
#[derive(Debug, Clone, PartialEq)]
pub enum ProcessModel {
    Iid(IidModel),
    Markov(FiniteMarkov),
    Lsv(LsvModel),
}

impl ProcessModel {
    pub fn tag(&self) -> String {
        match self {
            ProcessModel::Iid(m) => format!("iid:{}", m.marginal.label()),
            ProcessModel::Markov(m) => format!("markov(states={:?})", m.states()),
            ProcessModel::Lsv(m) => format!("lsv:gamma={}", m.gamma()),
        }
    }

    /// Fill `out` with one path drawn from `rng`.
    pub fn fill(&self, rng: &mut LabRng, out: &mut [f64]) {
        match self {
            ProcessModel::Iid(m) => m.fill(rng, out),
            ProcessModel::Markov(m) => {
                let mut idx = vec![0usize; out.len()];
                m.fill_indices(rng, &mut idx);
                for (v, i) in out.iter_mut().zip(idx) {
                    *v = m.states()[i];
                }
            }
            ProcessModel::Lsv(m) => m.fill(rng, out),
        }
    }

    /// A path of length `n` from the stream `(seed, 0)`.
    pub fn simulate(&self, n: usize, seed: u64) -> Result<SamplePath> {
        if n == 0 {
            return Err(invalid(MODULE, "path length must be at least 1"));
        }
        let mut rng = replicate_rng(seed, 0);
        let mut values = vec![0.0; n];
        self.fill(&mut rng, &mut values);
        Ok(SamplePath {
            values,
            tag: self.tag(),
            seed,
            burn_in: match self {
                ProcessModel::Lsv(m) => Some(m.burn_in()),
                _ => None,
            },
        })
    }

    /// Mean of the stationary marginal, when known in closed form.
    pub fn mean(&self) -> Option<f64> {
        match self {
            ProcessModel::Iid(m) => Some(m.marginal.mean()),
            ProcessModel::Markov(m) => Some(m.mean()),
            ProcessModel::Lsv(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    pub values: Vec<f64>,
    pub tag: String,
    pub seed: u64,
    pub burn_in: Option<usize>,
}

impl SamplePath {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(["value"]);
        t.meta("model", &self.tag);
        t.meta("seed", self.seed.to_string());
        if let Some(b) = self.burn_in {
            t.meta("burn_in", b.to_string());
            t.meta("time_direction", "forward orbit of T_gamma (partial-sum functionals only)");
        }
        for v in &self.values {
            t.push_row(vec![fmt_f64(*v)]);
        }
        t
    }
}
