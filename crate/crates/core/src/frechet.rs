//! Closed-form Fréchet derivatives of `ψ_p^q(x) = ‖x‖_{L^p(μ)}^q`.
//!
//! Derivatives are evaluated on given directions rather than materialized
//! as tensors: every order costs O(m) on an m-point grid. A central
//! finite-difference oracle that only ever calls `ψ` itself is provided to
//! check the closed forms independently.
//!
//! With `n = ‖x‖_p`, `A(h,k) = ∫ h k |x|^{p−2}`, `B(h) = ∫ h x|x|^{p−2}` and
//! `C(h,k,l) = ∫ h k l x|x|^{p−4}`:
//!
//! ```text
//! ψ'(x)h          = q n^{q−p} B(h)
//! ψ''(x)(h1,h2)   = q(p−1) n^{q−p} A(h1,h2) + q(q−p) n^{q−2p} B(h1)B(h2)
//! ψ'''(x)(h1,h2,h3) = q(p−1)(p−2) n^{q−p} C(h1,h2,h3)
//!                   + q(p−1)(q−p) n^{q−2p} [B(h1)A(h2,h3) + B(h2)A(h1,h3) + B(h3)A(h1,h2)]
//!                   + q(q−p)(q−2p) n^{q−3p} B(h1)B(h2)B(h3)
//! ```

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::measure::{lp_norm_raw, signed_pow, DiscreteMeasure, LpVector};
use crate::rng::{replicate_rng, LabRng};

const MODULE: &str = "frechet_functionals";

/// Norms below this are treated as the origin.
pub const SINGULAR_NORM: f64 = 1e-12;

/// Default number of random rank-one probes for bilinear-form norms.
pub const DEFAULT_PROBES: usize = 64;

/// `x ↦ ‖x‖_p^q` on a discretized L^p(μ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiFunctional {
    p: f64,
    q: f64,
}

struct Kernels<'a> {
    x: &'a [f64],
    w: &'a [f64],
    p: f64,
    norm: f64,
}

impl Kernels<'_> {
    /// ∫ h k |x|^{p−2}
    fn a(&self, h: &[f64], k: &[f64]) -> f64 {
        let r = self.p - 2.0;
        (0..self.x.len())
            .map(|i| self.w[i] * h[i] * k[i] * self.x[i].abs().powf(r))
            .sum()
    }

    /// ∫ h x|x|^{p−2}
    fn b(&self, h: &[f64]) -> f64 {
        let r = self.p - 1.0;
        (0..self.x.len())
            .map(|i| self.w[i] * h[i] * signed_pow(self.x[i], r))
            .sum()
    }

    /// ∫ h k l x|x|^{p−4}
    fn c(&self, h: &[f64], k: &[f64], l: &[f64]) -> f64 {
        let r = self.p - 3.0;
        (0..self.x.len())
            .map(|i| self.w[i] * h[i] * k[i] * l[i] * signed_pow(self.x[i], r))
            .sum()
    }
}

impl PsiFunctional {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !(p >= 2.0) || !p.is_finite() {
            return Err(invalid(MODULE, format!("psi needs 2 <= p < inf, got p = {p}")));
        }
        if !(q > 0.0) || !q.is_finite() {
            return Err(invalid(MODULE, format!("psi needs q > 0, got q = {q}")));
        }
        Ok(Self { p, q })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    fn kernels<'a>(&self, x: &'a [f64], w: &'a [f64]) -> Kernels<'a> {
        Kernels {
            x,
            w,
            p: self.p,
            norm: lp_norm_raw(x, w, self.p),
        }
    }

    fn check(x: &LpVector, dirs: &[&LpVector]) -> Result<()> {
        for d in dirs {
            x.check_same(d)?;
        }
        Ok(())
    }

    pub(crate) fn eval_raw(&self, x: &[f64], w: &[f64]) -> f64 {
        lp_norm_raw(x, w, self.p).powf(self.q)
    }

    /// `‖x‖_p^q`.
    pub fn eval(&self, x: &LpVector) -> f64 {
        self.eval_raw(x.values(), x.weights())
    }

    /// First derivative `ψ'(x)h`. At the origin this is 0 when `q > 1`.
    pub fn d1(&self, x: &LpVector, h: &LpVector) -> Result<f64> {
        Self::check(x, &[h])?;
        let k = self.kernels(x.values(), x.weights());
        if k.norm < SINGULAR_NORM {
            return if self.q > 1.0 {
                Ok(0.0)
            } else {
                Err(Error::Singular {
                    module: MODULE,
                    msg: format!("first derivative at the origin needs q > 1 (q = {})", self.q),
                })
            };
        }
        Ok(self.q * k.norm.powf(self.q - self.p) * k.b(h.values()))
    }

    /// Second derivative `ψ''(x)(h1, h2)`.
    pub fn d2(&self, x: &LpVector, h1: &LpVector, h2: &LpVector) -> Result<f64> {
        Self::check(x, &[h1, h2])?;
        self.d2_raw(x.values(), x.weights(), h1.values(), h2.values())
    }

    pub(crate) fn d2_raw(&self, x: &[f64], w: &[f64], h1: &[f64], h2: &[f64]) -> Result<f64> {
        let (p, q) = (self.p, self.q);
        let k = self.kernels(x, w);
        if k.norm < SINGULAR_NORM {
            if p == 2.0 && q == 2.0 {
                return Ok(2.0 * (0..x.len()).map(|i| w[i] * h1[i] * h2[i]).sum::<f64>());
            }
            return if q > 2.0 {
                Ok(0.0)
            } else {
                Err(Error::Singular {
                    module: MODULE,
                    msg: format!("second derivative at the origin needs q > 2 (q = {q})"),
                })
            };
        }
        let n = k.norm;
        let mut out = q * (p - 1.0) * n.powf(q - p) * k.a(h1, h2);
        if q != p {
            out += q * (q - p) * n.powf(q - 2.0 * p) * k.b(h1) * k.b(h2);
        }
        Ok(out)
    }

    /// Third derivative `ψ'''(x)(h1, h2, h3)`, defined for `p = 2` and
    /// `p ≥ 3` away from the origin.
    pub fn d3(&self, x: &LpVector, h1: &LpVector, h2: &LpVector, h3: &LpVector) -> Result<f64> {
        let (p, q) = (self.p, self.q);
        if p != 2.0 && p < 3.0 {
            return Err(invalid(
                MODULE,
                format!("third derivative needs p = 2 or p >= 3, got p = {p}"),
            ));
        }
        Self::check(x, &[h1, h2, h3])?;
        let k = self.kernels(x.values(), x.weights());
        if k.norm < SINGULAR_NORM {
            return Err(Error::Singular {
                module: MODULE,
                msg: "third derivative is not evaluated at the origin".into(),
            });
        }
        let (h1, h2, h3) = (h1.values(), h2.values(), h3.values());
        let n = k.norm;
        let mut out = 0.0;
        if p != 2.0 {
            out += q * (p - 1.0) * (p - 2.0) * n.powf(q - p) * k.c(h1, h2, h3);
        }
        if q != p {
            let (b1, b2, b3) = (k.b(h1), k.b(h2), k.b(h3));
            out += q * (p - 1.0) * (q - p)
                * n.powf(q - 2.0 * p)
                * (b1 * k.a(h2, h3) + b2 * k.a(h1, h3) + b3 * k.a(h1, h2));
            out += q * (q - p) * (q - 2.0 * p) * n.powf(q - 3.0 * p) * b1 * b2 * b3;
        }
        Ok(out)
    }
}

/// `6(2p² − 8p + 7)`, the Lipschitz constant certifying `ψ_p^3 / c_p` in
/// the class Λ_3(L^p(μ), 0).
pub fn holder_constant(p: f64) -> Result<f64> {
    if !(p >= 3.0) {
        return Err(invalid(MODULE, format!("holder_constant needs p >= 3, got {p}")));
    }
    Ok(6.0 * (2.0 * p * p - 8.0 * p + 7.0))
}

/// Finite-difference estimate with a Richardson-style error indicator
/// (difference between step `h` and step `2h`, divided by 3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdEstimate {
    pub value: f64,
    pub est_error: f64,
    /// Richardson combination `value + (value − value_{2h})/3`, which
    /// cancels the `h²` term of the central difference.
    pub extrapolated: f64,
    pub step: f64,
}

/// Default step for a central difference of the given order at a point of
/// norm `scale`: `ε^{1/(order+2)} (1 + scale)`.
pub fn default_fd_step(order: usize, scale: f64) -> f64 {
    f64::EPSILON.powf(1.0 / (order as f64 + 2.0)) * (1.0 + scale)
}

fn central_difference(f: &dyn Fn(&[f64]) -> f64, x: &[f64], dirs: &[&[f64]], h: f64) -> f64 {
    let order = dirs.len();
    let mut point = vec![0.0; x.len()];
    let mut acc = 0.0;
    for mask in 0..(1usize << order) {
        let mut sign = 1.0;
        point.copy_from_slice(x);
        for (j, d) in dirs.iter().enumerate() {
            let s = if mask >> j & 1 == 1 { -1.0 } else { 1.0 };
            sign *= s;
            for (pi, di) in point.iter_mut().zip(d.iter()) {
                *pi += s * h * di;
            }
        }
        acc += sign * f(&point);
    }
    acc / (2.0 * h).powi(order as i32)
}

/// Central-difference mixed directional derivative of an arbitrary
/// function of the grid values. Used as the independent oracle for the
/// closed forms; it only ever evaluates `f`.
pub fn fd_directional(
    f: &dyn Fn(&[f64]) -> f64,
    x: &[f64],
    dirs: &[&[f64]],
    step: f64,
) -> Result<FdEstimate> {
    if !(1..=3).contains(&dirs.len()) {
        return Err(invalid(MODULE, format!("fd order must be 1..=3, got {}", dirs.len())));
    }
    if !(step > 0.0) {
        return Err(invalid(MODULE, format!("fd step must be positive, got {step}")));
    }
    let v1 = central_difference(f, x, dirs, step);
    let v2 = central_difference(f, x, dirs, 2.0 * step);
    Ok(FdEstimate {
        value: v1,
        est_error: (v1 - v2).abs() / 3.0,
        extrapolated: v1 + (v1 - v2) / 3.0,
        step,
    })
}

/// Central-difference derivative of `ψ` along `directions` (order =
/// number of directions). `step = None` picks [`default_fd_step`].
pub fn fd_derivative(
    psi: &PsiFunctional,
    x: &LpVector,
    directions: &[&LpVector],
    step: Option<f64>,
) -> Result<FdEstimate> {
    for d in directions {
        x.check_same(d)?;
    }
    let w = x.weights().to_vec();
    let step = step.unwrap_or_else(|| default_fd_step(directions.len(), lp_norm_raw(x.values(), &w, psi.p)));
    let f = |v: &[f64]| psi.eval_raw(v, &w);
    let dirs: Vec<&[f64]> = directions.iter().map(|d| d.values()).collect();
    fd_directional(&f, x.values(), &dirs, step)
}

/// One closed-form derivative compared with its finite-difference oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeCheck {
    pub trial: usize,
    pub order: usize,
    pub grid_points: usize,
    pub closed: f64,
    pub fd: f64,
    /// `|closed − fd| / max(|closed|, ‖x‖^{q−order} Π‖h_i‖)`; the second
    /// term is the natural size of the form, so near-cancelling values do
    /// not inflate the error.
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrechetVerification {
    pub p: f64,
    pub q: f64,
    pub rows: Vec<DerivativeCheck>,
    /// Largest relative error for orders 1, 2, 3.
    pub max_rel: [f64; 3],
}

/// Compare orders 1–3 of `ψ_p^q` with central differences at `trials`
/// random points of random 4–8 point grids. Grid values are kept at least
/// 0.3 away from zero so that `|x|^{p−3}` stays smooth along every stencil.
/// The oracle value is the Richardson-extrapolated central difference.
pub fn verify_frechet(psi: &PsiFunctional, trials: usize, seed: u64) -> Result<FrechetVerification> {
    let mut rows = Vec::with_capacity(3 * trials);
    let mut max_rel = [0.0f64; 3];
    for trial in 0..trials {
        let mut rng = replicate_rng(seed, trial as u64);
        let m = rng.random_range(4..=8usize);
        let points: Vec<f64> = (0..m).map(|i| i as f64).collect();
        let weights: Vec<f64> = (0..m).map(|_| rng.random_range(0.5..1.5)).collect();
        let mu = Arc::new(DiscreteMeasure::new(points, weights)?);
        let xv: Vec<f64> = (0..m)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                z.signum() * (0.3 + z.abs())
            })
            .collect();
        let x = LpVector::new(mu.clone(), xv)?;
        let dirs: Vec<LpVector> = (0..3)
            .map(|_| {
                let v: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
                LpVector::new(mu.clone(), v)
            })
            .collect::<Result<_>>()?;
        let w = mu.weights();
        let nx = lp_norm_raw(x.values(), w, psi.p);
        for order in 1..=3 {
            let d: Vec<&LpVector> = dirs[..order].iter().collect();
            let closed = match order {
                1 => psi.d1(&x, d[0])?,
                2 => psi.d2(&x, d[0], d[1])?,
                _ => psi.d3(&x, d[0], d[1], d[2])?,
            };
            let fd = fd_derivative(psi, &x, &d, None)?.extrapolated;
            let natural = nx.powf(psi.q - order as f64)
                * d.iter().map(|h| lp_norm_raw(h.values(), w, psi.p)).product::<f64>();
            let rel_error = (closed - fd).abs() / closed.abs().max(natural);
            max_rel[order - 1] = max_rel[order - 1].max(rel_error);
            rows.push(DerivativeCheck {
                trial,
                order,
                grid_points: m,
                closed,
                fd,
                rel_error,
            });
        }
    }
    Ok(FrechetVerification {
        p: psi.p,
        q: psi.q,
        rows,
        max_rel,
    })
}

/// The functional families used as test functions `f` in Δ_n(f).
#[derive(Debug, Clone, PartialEq)]
pub enum TestFunctionKind {
    /// `ψ_p^q` on L^p(μ).
    PsiPower { p: f64, q: f64 },
    /// `|x|^r` on the real line.
    AbsPower { r: f64 },
    /// `x|x|^{r−1}` on the real line.
    SignedPower { r: f64 },
    /// `Σ c_k x^k` on the real line.
    Polynomial { coeffs: Vec<f64> },
    /// One-sided truncated power `((x − a)_+)^r` for `a ≥ 0`, mirrored to
    /// `((a − x)_+)^r` for `a < 0`; flat on a neighbourhood of 0 when `a ≠ 0`.
    Ramp { r: f64, shift: f64 },
}

/// A test function `scale · kind`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothTestFunction {
    pub kind: TestFunctionKind,
    pub scale: f64,
}

impl SmoothTestFunction {
    pub fn new(kind: TestFunctionKind, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(invalid(MODULE, format!("scale must be positive, got {scale}")));
        }
        match &kind {
            TestFunctionKind::PsiPower { p, q } => {
                PsiFunctional::new(*p, *q)?;
            }
            TestFunctionKind::AbsPower { r }
            | TestFunctionKind::SignedPower { r }
            | TestFunctionKind::Ramp { r, .. } => {
                if !(*r >= 2.0) {
                    return Err(invalid(MODULE, format!("power must be >= 2 for a C^2 test function, got {r}")));
                }
            }
            TestFunctionKind::Polynomial { coeffs } => {
                if coeffs.is_empty() {
                    return Err(invalid(MODULE, "polynomial needs at least one coefficient"));
                }
            }
        }
        Ok(Self { kind, scale })
    }

    /// `|x|³/6`, in Λ⁰_3(ℝ).
    pub fn abs_cube() -> Self {
        Self {
            kind: TestFunctionKind::AbsPower { r: 3.0 },
            scale: 1.0 / 6.0,
        }
    }

    /// `x²`, in Λ_{2+δ}(ℝ, 2) for every δ.
    pub fn square() -> Self {
        Self {
            kind: TestFunctionKind::Polynomial {
                coeffs: vec![0.0, 0.0, 1.0],
            },
            scale: 1.0,
        }
    }

    pub fn psi(p: f64, q: f64, scale: f64) -> Result<Self> {
        Self::new(TestFunctionKind::PsiPower { p, q }, scale)
    }

    pub fn is_scalar(&self) -> bool {
        !matches!(self.kind, TestFunctionKind::PsiPower { .. })
    }

    pub fn label(&self) -> String {
        match &self.kind {
            TestFunctionKind::PsiPower { p, q } => format!("psi(p={p},q={q})*{}", self.scale),
            TestFunctionKind::AbsPower { r } => format!("|x|^{r}*{}", self.scale),
            TestFunctionKind::SignedPower { r } => format!("x|x|^{}*{}", r - 1.0, self.scale),
            TestFunctionKind::Polynomial { coeffs } => format!("poly{coeffs:?}*{}", self.scale),
            TestFunctionKind::Ramp { r, shift } => format!("ramp(r={r},shift={shift})*{}", self.scale),
        }
    }

    /// Value at a real number (ψ reduces to `|x|^q` on a one-atom measure).
    pub fn eval_scalar(&self, x: f64) -> f64 {
        self.scale
            * match &self.kind {
                TestFunctionKind::PsiPower { q, .. } => x.abs().powf(*q),
                TestFunctionKind::AbsPower { r } => x.abs().powf(*r),
                TestFunctionKind::SignedPower { r } => signed_pow(x, *r),
                TestFunctionKind::Polynomial { coeffs } => {
                    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
                }
                TestFunctionKind::Ramp { r, shift } => ramp_arg(x, *shift).powf(*r),
            }
    }

    /// Value at raw grid values; scalar kinds read the first entry.
    pub(crate) fn eval_raw(&self, x: &[f64], w: &[f64]) -> f64 {
        match &self.kind {
            TestFunctionKind::PsiPower { p, q } => self.scale * lp_norm_raw(x, w, *p).powf(*q),
            _ => self.eval_scalar(x[0]),
        }
    }

    /// Value at a grid function. Scalar kinds accept one-point vectors only.
    pub fn eval(&self, x: &LpVector) -> Result<f64> {
        match &self.kind {
            TestFunctionKind::PsiPower { p, q } => Ok(self.scale * PsiFunctional::new(*p, *q)?.eval(x)),
            _ => Ok(self.eval_scalar(scalar_value(x)?)),
        }
    }

    /// Second derivative at a real number (the 1×1 bilinear form).
    pub fn d2_scalar(&self, x: f64) -> f64 {
        self.scale
            * match &self.kind {
                TestFunctionKind::PsiPower { q, .. } | TestFunctionKind::AbsPower { r: q } => {
                    let r = *q;
                    if r == 2.0 {
                        2.0
                    } else {
                        r * (r - 1.0) * x.abs().powf(r - 2.0)
                    }
                }
                TestFunctionKind::SignedPower { r } => r * (r - 1.0) * signed_pow(x, r - 2.0),
                TestFunctionKind::Polynomial { coeffs } => coeffs
                    .iter()
                    .enumerate()
                    .skip(2)
                    .map(|(k, c)| c * (k * (k - 1)) as f64 * x.powi(k as i32 - 2))
                    .sum(),
                TestFunctionKind::Ramp { r, shift } => {
                    let u = ramp_arg(x, *shift);
                    if u == 0.0 {
                        0.0
                    } else {
                        r * (r - 1.0) * u.powf(r - 2.0)
                    }
                }
            }
    }

    /// Second derivative `f''(x)(u, v)`.
    pub fn d2(&self, x: &LpVector, u: &LpVector, v: &LpVector) -> Result<f64> {
        match &self.kind {
            TestFunctionKind::PsiPower { p, q } => Ok(self.scale * PsiFunctional::new(*p, *q)?.d2(x, u, v)?),
            _ => Ok(self.d2_scalar(scalar_value(x)?) * scalar_value(u)? * scalar_value(v)?),
        }
    }
}

fn ramp_arg(x: f64, shift: f64) -> f64 {
    if shift >= 0.0 {
        (x - shift).max(0.0)
    } else {
        (shift - x).max(0.0)
    }
}

fn scalar_value(x: &LpVector) -> Result<f64> {
    if x.len() != 1 {
        return Err(invalid(
            MODULE,
            format!("scalar test function applied to a {}-point vector", x.len()),
        ));
    }
    Ok(x.values()[0])
}

fn random_direction(rng: &mut LabRng, w: &[f64], p: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..w.len()).map(|_| rng.sample(StandardNormal)).collect();
        let n = lp_norm_raw(&v, w, p);
        if n > 1e-8 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Probe lower bound for the operator norm of the bilinear form
/// `(u, v) ↦ form(u, v)` over unit vectors of L^p(μ). Half of the probes
/// are diagonal (`u = v`).
pub fn probe_bilinear_norm(
    form: &dyn Fn(&[f64], &[f64]) -> Result<f64>,
    weights: &[f64],
    p: f64,
    probes: usize,
    rng: &mut LabRng,
) -> Result<f64> {
    let mut best: f64 = 0.0;
    for k in 0..probes {
        let u = random_direction(rng, weights, p);
        let v = if k % 2 == 0 {
            u.clone()
        } else {
            random_direction(rng, weights, p)
        };
        best = best.max(form(&u, &v)?.abs());
    }
    Ok(best)
}

/// Probe lower bound of `‖ψ''(x) − ψ''(y)‖` (bilinear-form norm on
/// L^p(μ)). Pass `y = None` to compare against the origin.
pub fn psi_d2_increment_norm(
    psi: &PsiFunctional,
    x: &LpVector,
    y: Option<&LpVector>,
    probes: usize,
    rng: &mut LabRng,
) -> Result<f64> {
    if let Some(y) = y {
        x.check_same(y)?;
    }
    let w = x.weights();
    let form = |u: &[f64], v: &[f64]| -> Result<f64> {
        let a = psi.d2_raw(x.values(), w, u, v)?;
        let b = match y {
            Some(y) => psi.d2_raw(y.values(), w, u, v)?,
            None => psi.d2_raw(&vec![0.0; w.len()], w, u, v)?,
        };
        Ok(a - b)
    };
    probe_bilinear_norm(&form, w, psi.p(), probes, rng)
}

/// Parameters of a Λ_{2+δ}(B, M) membership check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaCheckConfig {
    pub delta: f64,
    pub m_bound: f64,
    pub trials: usize,
    pub probes: usize,
    pub seed: u64,
}

impl LambdaCheckConfig {
    pub fn new(delta: f64, m_bound: f64) -> Self {
        Self {
            delta,
            m_bound,
            trials: 500,
            probes: DEFAULT_PROBES,
            seed: 0x1A4B,
        }
    }
}

/// Result of [`lambda_class_check`]. For L^p(μ)-valued arguments the norms
/// are probe lower bounds (`lower_bound = true`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaReport {
    pub max_ratio: f64,
    pub norm_at_zero: f64,
    pub pass: bool,
    pub lower_bound: bool,
}

fn scalar_sample(rng: &mut LabRng) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    z * 10f64.powf(rng.random_range(-2.0..1.0))
}

/// Estimate `sup ‖f''(x) − f''(y)‖ / ‖x − y‖^δ` over random pairs and
/// `‖f''(0)‖`; pass iff the first is at most 1 and the second at most `M`.
/// `domain` is the measure on which ψ-type functions are exercised.
pub fn lambda_class_check(
    f: &SmoothTestFunction,
    cfg: &LambdaCheckConfig,
    domain: &Arc<DiscreteMeasure>,
) -> Result<LambdaReport> {
    let delta = cfg.delta;
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(invalid(MODULE, format!("delta must lie in (0, 1], got {delta}")));
    }
    let mut rng = replicate_rng(cfg.seed, 0);
    let mut max_ratio: f64 = 0.0;
    if f.is_scalar() {
        for t in 0..cfg.trials {
            let x = scalar_sample(&mut rng);
            let y = match t % 3 {
                0 => scalar_sample(&mut rng),
                1 => -x,
                _ => x + scalar_sample(&mut rng) * 1e-3,
            };
            if x == y {
                continue;
            }
            let ratio = (f.d2_scalar(x) - f.d2_scalar(y)).abs() / (x - y).abs().powf(delta);
            max_ratio = max_ratio.max(ratio);
        }
        let norm_at_zero = f.d2_scalar(0.0).abs();
        return Ok(LambdaReport {
            max_ratio,
            norm_at_zero,
            pass: max_ratio <= 1.0 + 1e-9 && norm_at_zero <= cfg.m_bound + 1e-12,
            lower_bound: false,
        });
    }

    let TestFunctionKind::PsiPower { p, q } = f.kind else {
        unreachable!("non-scalar kinds are psi powers");
    };
    let psi = PsiFunctional::new(p, q)?;
    let w = domain.weights();
    for _ in 0..cfg.trials {
        let scale = 10f64.powf(rng.random_range(-1.0..1.0));
        let xv: Vec<f64> = (0..w.len()).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
        let yv: Vec<f64> = (0..w.len()).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
        let x = LpVector::new(Arc::clone(domain), xv)?;
        let y = LpVector::new(Arc::clone(domain), yv)?;
        let dist = lp_norm_raw(x.sub(&y)?.values(), w, p);
        if dist == 0.0 {
            continue;
        }
        let inc = f.scale * psi_d2_increment_norm(&psi, &x, Some(&y), cfg.probes, &mut rng)?;
        max_ratio = max_ratio.max(inc / dist.powf(delta));
    }
    let zero = LpVector::zeros(Arc::clone(domain));
    let norm_at_zero = match probe_bilinear_norm(
        &|u, v| psi.d2_raw(zero.values(), w, u, v),
        w,
        p,
        cfg.probes,
        &mut rng,
    ) {
        Ok(v) => f.scale * v,
        Err(Error::Singular { .. }) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    Ok(LambdaReport {
        max_ratio,
        norm_at_zero,
        pass: max_ratio <= 1.0 + 1e-9 && norm_at_zero <= cfg.m_bound + 1e-12,
        lower_bound: true,
    })
}
