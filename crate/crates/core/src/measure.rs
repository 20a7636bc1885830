//! Discretized L^p(μ) spaces.
//!
//! A σ-finite measure on the real line is represented by point masses
//! `w_i` sitting on an increasing grid `t_i`. Integrals are exact finite
//! sums, so Hölder duality and the closed-form derivative identities used
//! elsewhere in the crate hold to rounding error rather than quadrature
//! error. Measures of infinite mass must be truncated by the caller; the
//! truncation window is recorded on the measure.

use std::sync::Arc;

use crate::csvio::{fmt_f64, CsvTable};
use crate::error::{invalid, Error, Result};

const MODULE: &str = "measure_space";

/// Point-mass discretization of a σ-finite measure.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    points: Vec<f64>,
    weights: Vec<f64>,
    truncation: Option<(f64, f64)>,
}

impl DiscreteMeasure {
    pub fn new(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid(MODULE, "measure needs at least one point"));
        }
        if points.len() != weights.len() {
            return Err(Error::LengthMismatch {
                module: MODULE,
                expected: points.len(),
                got: weights.len(),
            });
        }
        if points.iter().any(|t| !t.is_finite()) {
            return Err(invalid(MODULE, "grid points must be finite"));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid(MODULE, "grid points must be strictly increasing"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(invalid(MODULE, "weights must be finite and nonnegative"));
        }
        if !weights.iter().any(|w| *w > 0.0) {
            return Err(invalid(MODULE, "at least one weight must be positive"));
        }
        Ok(Self {
            points,
            weights,
            truncation: None,
        })
    }

    /// Lebesgue measure on `[a, b]`, discretized as `m` cell midpoints each
    /// carrying the cell width.
    pub fn lebesgue(a: f64, b: f64, m: usize) -> Result<Self> {
        if !(a < b) || m == 0 {
            return Err(invalid(MODULE, format!("bad Lebesgue grid [{a}, {b}] with {m} cells")));
        }
        let h = (b - a) / m as f64;
        let points = (0..m).map(|i| a + (i as f64 + 0.5) * h).collect();
        Self::new(points, vec![h; m])
    }

    /// The one-atom probability measure; L^p of it is the real line.
    pub fn unit_atom() -> Self {
        Self {
            points: vec![0.0],
            weights: vec![1.0],
            truncation: None,
        }
    }

    /// Mark this measure as the restriction of an infinite-mass measure to
    /// `[lo, hi]`.
    pub fn with_truncation(mut self, lo: f64, hi: f64) -> Self {
        self.truncation = Some((lo, hi));
        self
    }

    pub fn truncation(&self) -> Option<(f64, f64)> {
        self.truncation
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Signed cumulative `F_μ(x) = μ(]0, x])` for `x ≥ 0` and
    /// `−μ([x, 0[)` for `x < 0`.
    pub fn signed_cumulative(&self, x: f64) -> f64 {
        if x >= 0.0 {
            self.points
                .iter()
                .zip(&self.weights)
                .filter(|(t, _)| **t > 0.0 && **t <= x)
                .map(|(_, w)| w)
                .sum()
        } else {
            -self
                .points
                .iter()
                .zip(&self.weights)
                .filter(|(t, _)| **t >= x && **t < 0.0)
                .map(|(_, w)| w)
                .sum::<f64>()
        }
    }
}

/// Conjugate exponent pair `1/p + 1/q = 1`. For `p = 1` the conjugate is
/// stored as `f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualExponent {
    pub p: f64,
    pub q: f64,
}

impl DualExponent {
    pub fn new(p: f64) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(invalid(MODULE, format!("exponent p = {p} must be >= 1")));
        }
        let q = if p == 1.0 {
            f64::INFINITY
        } else if p.is_infinite() {
            1.0
        } else {
            p / (p - 1.0)
        };
        Ok(Self { p, q })
    }
}

/// A grid function regarded as an element of L^p(μ).
#[derive(Debug, Clone)]
pub struct LpVector {
    measure: Arc<DiscreteMeasure>,
    values: Vec<f64>,
}

impl LpVector {
    pub fn new(measure: Arc<DiscreteMeasure>, values: Vec<f64>) -> Result<Self> {
        if values.len() != measure.len() {
            return Err(Error::LengthMismatch {
                module: MODULE,
                expected: measure.len(),
                got: values.len(),
            });
        }
        Ok(Self { measure, values })
    }

    pub fn zeros(measure: Arc<DiscreteMeasure>) -> Self {
        let values = vec![0.0; measure.len()];
        Self { measure, values }
    }

    /// A real number viewed as an element of L^p of the unit atom.
    pub fn scalar(x: f64) -> Self {
        Self {
            measure: Arc::new(DiscreteMeasure::unit_atom()),
            values: vec![x],
        }
    }

    pub fn measure(&self) -> &Arc<DiscreteMeasure> {
        &self.measure
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn weights(&self) -> &[f64] {
        self.measure.weights()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn same_measure(&self, other: &LpVector) -> bool {
        Arc::ptr_eq(&self.measure, &other.measure) || *self.measure == *other.measure
    }

    pub(crate) fn check_same(&self, other: &LpVector) -> Result<()> {
        if self.same_measure(other) {
            Ok(())
        } else {
            Err(Error::MeasureMismatch { module: MODULE })
        }
    }

    pub fn scaled(&self, c: f64) -> LpVector {
        self.map(|v| c * v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> LpVector {
        LpVector {
            measure: Arc::clone(&self.measure),
            values: self.values.iter().map(|v| f(*v)).collect(),
        }
    }

    /// `self + c·other`.
    pub fn axpy(&self, c: f64, other: &LpVector) -> Result<LpVector> {
        self.check_same(other)?;
        Ok(LpVector {
            measure: Arc::clone(&self.measure),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + c * b)
                .collect(),
        })
    }

    pub fn add(&self, other: &LpVector) -> Result<LpVector> {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &LpVector) -> Result<LpVector> {
        self.axpy(-1.0, other)
    }

    /// Export as CSV with columns `point,weight,value`.
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(["point", "weight", "value"]);
        if let Some((lo, hi)) = self.measure.truncation() {
            t.meta("truncation", format!("{},{}", fmt_f64(lo), fmt_f64(hi)));
        }
        for ((p, w), v) in self.measure.points().iter().zip(self.weights()).zip(&self.values) {
            t.push_row(vec![fmt_f64(*p), fmt_f64(*w), fmt_f64(*v)]);
        }
        t
    }

    pub fn from_csv(table: &CsvTable) -> Result<LpVector> {
        let points = table.f64_column("point")?;
        let weights = table.f64_column("weight")?;
        let values = table.f64_column("value")?;
        let measure = DiscreteMeasure::new(points, weights)?;
        LpVector::new(Arc::new(measure), values)
    }
}

/// Signed power `sgn(v)·|v|^r`, zero at `v = 0` for every `r ≥ 0`.
#[inline]
pub(crate) fn signed_pow(v: f64, r: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v.signum() * v.abs().powf(r)
    }
}

pub(crate) fn lp_norm_raw(values: &[f64], weights: &[f64], p: f64) -> f64 {
    if p == 2.0 {
        return values
            .iter()
            .zip(weights)
            .map(|(v, w)| w * v * v)
            .sum::<f64>()
            .sqrt();
    }
    values
        .iter()
        .zip(weights)
        .map(|(v, w)| w * v.abs().powf(p))
        .sum::<f64>()
        .powf(1.0 / p)
}

/// `(Σ_i w_i |v_i|^p)^{1/p}`.
pub fn lp_norm(x: &LpVector, p: f64) -> Result<f64> {
    if !(p >= 1.0) || p.is_infinite() {
        return Err(invalid(MODULE, format!("lp_norm needs finite p >= 1, got {p}")));
    }
    if x.values.len() != x.weights().len() {
        return Err(Error::LengthMismatch {
            module: MODULE,
            expected: x.weights().len(),
            got: x.values.len(),
        });
    }
    Ok(lp_norm_raw(&x.values, x.weights(), p))
}

/// `∫ g·d dμ`.
pub fn pairing(g: &LpVector, d: &LpVector) -> Result<f64> {
    g.check_same(d)?;
    Ok(g.values
        .iter()
        .zip(&d.values)
        .zip(d.weights())
        .map(|((a, b), w)| w * a * b)
        .sum())
}

fn check_all_same(factors: &[&LpVector], base: &LpVector) -> Result<()> {
    for f in factors {
        base.check_same(f)?;
    }
    Ok(())
}

/// `Σ_i w_i (Π_j h_{j,i}) · sgn(v_i)|v_i|^{e+1}`, i.e. `∫ h_1⋯h_k x|x|^e dμ`
/// with the integrand set to zero wherever the base vanishes.
pub fn integrate_product(factors: &[&LpVector], kernel_exponent: f64, base: &LpVector) -> Result<f64> {
    check_all_same(factors, base)?;
    let r = kernel_exponent + 1.0;
    Ok((0..base.len())
        .map(|i| {
            let prod: f64 = factors.iter().map(|h| h.values[i]).product();
            base.weights()[i] * prod * signed_pow(base.values[i], r)
        })
        .sum())
}

/// `Σ_i w_i (Π_j h_{j,i}) · |v_i|^r`, i.e. `∫ h_1⋯h_k |x|^r dμ` with
/// `|0|^0 = 1`.
pub fn integrate_abs_product(factors: &[&LpVector], r: f64, base: &LpVector) -> Result<f64> {
    check_all_same(factors, base)?;
    Ok((0..base.len())
        .map(|i| {
            let prod: f64 = factors.iter().map(|h| h.values[i]).product();
            base.weights()[i] * prod * base.values[i].abs().powf(r)
        })
        .sum())
}

/// `2‖x‖² + 2(p−1)‖y‖² − ‖x+y‖² − ‖x−y‖²` in L^p(μ); nonnegative because
/// L^p(μ) is (2, √(p−1))-smooth for `p ≥ 2`.
pub fn two_smooth_slack(x: &LpVector, y: &LpVector, p: f64) -> Result<f64> {
    if !(p >= 2.0) {
        return Err(invalid(MODULE, format!("two_smooth_slack needs p >= 2, got {p}")));
    }
    x.check_same(y)?;
    let nx = lp_norm(x, p)?;
    let ny = lp_norm(y, p)?;
    let plus = lp_norm(&x.add(y)?, p)?;
    let minus = lp_norm(&x.sub(y)?, p)?;
    Ok(2.0 * nx * nx + 2.0 * (p - 1.0) * ny * ny - plus * plus - minus * minus)
}

/// The unit-norm element of L^q(μ) attaining `∫ g·d dμ = ‖d‖_p`:
/// `g_i = sgn(d_i)|d_i|^{p−1} / ‖d‖_p^{p−1}`.
pub fn dual_maximizer(d: &LpVector, p: f64) -> Result<LpVector> {
    if !(p > 1.0) || p.is_infinite() {
        return Err(invalid(MODULE, format!("dual_maximizer needs 1 < p < inf, got {p}")));
    }
    let norm = lp_norm(d, p)?;
    if norm == 0.0 {
        return Err(Error::Singular {
            module: MODULE,
            msg: "dual maximizer of the zero vector is undefined".into(),
        });
    }
    let scale = norm.powf(p - 1.0);
    Ok(d.map(|v| signed_pow(v, p - 1.0) / scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn vec_on(weights: &[f64], values: &[f64]) -> LpVector {
        let points = (0..weights.len()).map(|i| i as f64).collect();
        let m = Arc::new(DiscreteMeasure::new(points, weights.to_vec()).unwrap());
        LpVector::new(m, values.to_vec()).unwrap()
    }

    #[test]
    fn norm_examples() {
        assert_eq!(lp_norm(&vec_on(&[1.0], &[3.0]), 2.0).unwrap(), 3.0);
        assert_eq!(lp_norm(&vec_on(&[1.0, 1.0], &[3.0, 4.0]), 2.0).unwrap(), 5.0);
        assert_relative_eq!(lp_norm(&vec_on(&[0.5, 0.5], &[1.0, 1.0]), 3.0).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn norm_rejects_small_p() {
        assert!(lp_norm(&vec_on(&[1.0], &[1.0]), 0.5).is_err());
    }

    #[test]
    fn measure_validation() {
        assert!(DiscreteMeasure::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(DiscreteMeasure::new(vec![0.0, 1.0], vec![1.0, -1.0]).is_err());
        assert!(DiscreteMeasure::new(vec![0.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(DiscreteMeasure::new(vec![0.0, 1.0], vec![1.0]).is_err());
        // σ-finite: mass above one is fine
        assert_eq!(DiscreteMeasure::new(vec![0.0, 1.0], vec![3.0, 4.0]).unwrap().total_mass(), 7.0);
    }

    #[test]
    fn length_mismatch_rejected() {
        let m = Arc::new(DiscreteMeasure::unit_atom());
        assert!(matches!(
            LpVector::new(m, vec![1.0, 2.0]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn integrate_product_examples() {
        let one = vec_on(&[1.0], &[1.0]);
        let base = vec_on(&[1.0], &[2.0]);
        assert_eq!(integrate_product(&[&one], 1.0, &base).unwrap(), 4.0);

        let zero = vec_on(&[1.0], &[0.0]);
        assert_eq!(integrate_product(&[&one, &one], 0.0, &zero).unwrap(), 0.0);
        assert_eq!(integrate_product(&[&one, &one], -1.0, &zero).unwrap(), 0.0);

        let h = vec_on(&[1.0, 1.0], &[1.0, 1.0]);
        let base = vec_on(&[1.0, 1.0], &[1.0, -1.0]);
        assert_eq!(integrate_product(&[&h], 1.0, &base).unwrap(), 0.0);
    }

    #[test]
    fn measure_mismatch_detected() {
        let a = vec_on(&[1.0, 1.0], &[1.0, 1.0]);
        let b = vec_on(&[1.0, 2.0], &[1.0, 1.0]);
        assert!(matches!(
            integrate_product(&[&a], 1.0, &b),
            Err(Error::MeasureMismatch { .. })
        ));
        assert!(two_smooth_slack(&a, &b, 3.0).is_err());
    }

    #[test]
    fn slack_examples() {
        let x = vec_on(&[1.0, 1.0], &[1.0, 0.0]);
        let y0 = vec_on(&[1.0, 1.0], &[0.0, 0.0]);
        assert_relative_eq!(two_smooth_slack(&x, &y0, 4.0).unwrap(), 0.0, epsilon = 1e-15);
        let y = vec_on(&[1.0, 1.0], &[0.3, -2.0]);
        assert_relative_eq!(two_smooth_slack(&x, &y, 2.0).unwrap(), 0.0, epsilon = 1e-12);

        // p = 4, x = e1, y = e2: ‖x±y‖_4 = 2^{1/4}, so slack = 2 + 6 − 2·√2.
        let y = vec_on(&[1.0, 1.0], &[0.0, 1.0]);
        let expected = 2.0 + 6.0 - 2.0 * 2f64.sqrt();
        assert_relative_eq!(two_smooth_slack(&x, &y, 4.0).unwrap(), expected, epsilon = 1e-14);
        assert!(expected > 0.0);
    }

    #[test]
    fn dual_maximizer_examples() {
        let d = vec_on(&[1.0], &[5.0]);
        let g = dual_maximizer(&d, 2.0).unwrap();
        assert_relative_eq!(g.values()[0], 1.0);
        assert_relative_eq!(pairing(&g, &d).unwrap(), 5.0);

        let d = vec_on(&[1.0, 1.0], &[3.0, 4.0]);
        let g = dual_maximizer(&d, 2.0).unwrap();
        assert_relative_eq!(g.values()[0], 0.6, epsilon = 1e-15);
        assert_relative_eq!(g.values()[1], 0.8, epsilon = 1e-15);
        assert_relative_eq!(pairing(&g, &d).unwrap(), 5.0, epsilon = 1e-14);

        // p = 3: g = 2^{-2/3}(1,−1), ‖g‖_{3/2} = 1, pairing 2^{1/3}.
        let d = vec_on(&[1.0, 1.0], &[1.0, -1.0]);
        let g = dual_maximizer(&d, 3.0).unwrap();
        let c = 2f64.powf(-2.0 / 3.0);
        assert_relative_eq!(g.values()[0], c, epsilon = 1e-15);
        assert_relative_eq!(g.values()[1], -c, epsilon = 1e-15);
        assert_relative_eq!(lp_norm(&g, 1.5).unwrap(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(pairing(&g, &d).unwrap(), 2f64.powf(1.0 / 3.0), epsilon = 1e-14);
        assert_relative_eq!(pairing(&g, &d).unwrap(), lp_norm(&d, 3.0).unwrap(), epsilon = 1e-14);
    }

    #[test]
    fn dual_of_zero_rejected() {
        let d = vec_on(&[1.0, 1.0], &[0.0, 0.0]);
        assert!(matches!(dual_maximizer(&d, 2.0), Err(Error::Singular { .. })));
        assert!(dual_maximizer(&vec_on(&[1.0], &[1.0]), 1.0).is_err());
    }

    #[test]
    fn dual_exponent_sentinel() {
        assert_eq!(DualExponent::new(1.0).unwrap().q, f64::INFINITY);
        assert_relative_eq!(DualExponent::new(3.0).unwrap().q, 1.5);
        assert!(DualExponent::new(0.9).is_err());
    }

    #[test]
    fn signed_cumulative_matches_definition() {
        let m = DiscreteMeasure::new(vec![-1.0, -0.5, 0.0, 0.5, 1.0], vec![1.0, 2.0, 4.0, 8.0, 16.0]).unwrap();
        assert_eq!(m.signed_cumulative(0.0), 0.0);
        assert_eq!(m.signed_cumulative(0.7), 8.0);
        assert_eq!(m.signed_cumulative(1.0), 24.0);
        assert_eq!(m.signed_cumulative(-0.5), -2.0);
        assert_eq!(m.signed_cumulative(-2.0), -3.0);
    }

    #[test]
    fn csv_round_trip() {
        let x = vec_on(&[0.25, 0.75], &[1.5, -2.0]);
        let back = LpVector::from_csv(&CsvTable::parse(&x.to_csv().render()).unwrap()).unwrap();
        assert!(back.same_measure(&x));
        assert_eq!(back.values(), x.values());
    }
}
