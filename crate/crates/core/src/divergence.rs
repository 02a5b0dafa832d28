//! f-divergences and the convex generators that index the OQS[f] family.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::ProbVector;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A strictly convex generator `f` with `f(1) = 0`, its derivative `F = f'`,
/// the derivative of `F`, and the closed-form inverse `F^{-1}`.
///
/// `f_at_zero` is `lim_{x→0} f(x)` and `slope_at_infinity` is
/// `lim_{x→∞} f(x)/x`; they define the terms with zero arguments.
#[derive(Clone)]
pub struct FSpec {
    pub name: String,
    pub f: RealFn,
    pub f_deriv: RealFn,
    pub f_deriv_prime: RealFn,
    pub f_deriv_inv: RealFn,
    pub f_at_zero: f64,
    pub slope_at_infinity: f64,
}

impl fmt::Debug for FSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FSpec")
            .field("name", &self.name)
            .finish_non_exhaustive()
    }
}

impl PartialEq for FSpec {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
    }
}

impl FSpec {
    /// Kullback-Leibler generator `f(x) = x log x`.
    pub fn kl() -> Self {
        Self {
            name: "kl".into(),
            f: Arc::new(|x| if x == 0.0 { 0.0 } else { x * x.ln() }),
            f_deriv: Arc::new(|x| 1.0 + x.ln()),
            f_deriv_prime: Arc::new(|x| 1.0 / x),
            f_deriv_inv: Arc::new(|y| (y - 1.0).exp()),
            f_at_zero: 0.0,
            slope_at_infinity: f64::INFINITY,
        }
    }

    /// Pearson generator `f(x) = (1 − x)^2`.
    pub fn pearson() -> Self {
        Self {
            name: "pearson".into(),
            f: Arc::new(|x| (1.0 - x) * (1.0 - x)),
            f_deriv: Arc::new(|x| 2.0 * x - 2.0),
            f_deriv_prime: Arc::new(|_| 2.0),
            f_deriv_inv: Arc::new(|y| 1.0 + y / 2.0),
            f_at_zero: 1.0,
            slope_at_infinity: f64::INFINITY,
        }
    }

    /// Looks up a built-in generator by name (`kl` or `pearson`).
    pub fn builtin(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "kl" => Ok(Self::kl()),
            "pearson" => Ok(Self::pearson()),
            _ => Err(Error::UnknownFSpec(name.to_string())),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn deriv(&self, x: f64) -> f64 {
        (self.f_deriv)(x)
    }

    pub fn deriv_prime(&self, x: f64) -> f64 {
        (self.f_deriv_prime)(x)
    }

    pub fn deriv_inv(&self, y: f64) -> f64 {
        (self.f_deriv_inv)(y)
    }

    /// One term `q f(p/q)` under the zero-argument conventions.
    fn term(&self, p: f64, q: f64) -> f64 {
        match (p > 0.0, q > 0.0) {
            (_, true) if p == 0.0 => q * self.f_at_zero,
            (_, true) => q * self.eval(p / q),
            (false, false) => 0.0,
            (true, false) => p * self.slope_at_infinity,
        }
    }
}

/// `I(p : q) = Σ q_i f(p_i / q_i)`.
pub fn f_divergence(p: &ProbVector, q: &ProbVector, spec: &FSpec) -> Result<f64> {
    if p.shape() != q.shape() {
        return Err(Error::ShapeMismatch {
            expected: q.probs().len(),
            got: p.probs().len(),
        });
    }
    f_divergence_slices(p.probs(), q.probs(), spec)
}

/// Slice form of [`f_divergence`] for arbitrary nonnegative vectors.
pub fn f_divergence_slices(p: &[f64], q: &[f64], spec: &FSpec) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::ShapeMismatch {
            expected: q.len(),
            got: p.len(),
        });
    }
    for (index, &value) in p.iter().chain(q).enumerate() {
        if value < 0.0 || value.is_nan() {
            return Err(Error::NegativeEntry {
                index: index % p.len(),
                value,
            });
        }
    }
    Ok(p.iter().zip(q).map(|(&a, &b)| spec.term(a, b)).sum())
}

/// Numerical sanity checks of a generator over a log-spaced grid on `[1e-4, 1e4]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FSpecDiagnostics {
    pub f_at_one: f64,
    /// Smallest raw second difference `f(x+h) − 2f(x) + f(x−h)` with `h = x/100`.
    pub min_second_difference: f64,
    pub convex: bool,
    pub deriv_increasing: bool,
    /// Largest `|F^{-1}(F(x)) − x| / max(1, x)`.
    pub max_inverse_error: f64,
}

impl FSpecDiagnostics {
    pub fn passes(&self) -> bool {
        self.f_at_one.abs() < 1e-12
            && self.convex
            && self.deriv_increasing
            && self.max_inverse_error < 1e-10
    }
}

const GRID_POINTS: usize = 401;

pub fn validate_fspec(spec: &FSpec) -> FSpecDiagnostics {
    let grid: Vec<f64> = (0..GRID_POINTS)
        .map(|k| 10f64.powf(-4.0 + 8.0 * k as f64 / (GRID_POINTS - 1) as f64))
        .collect();

    let mut min_second_difference = f64::INFINITY;
    let mut convex = true;
    for &x in &grid {
        let h = x / 100.0;
        let (a, b, c) = (spec.eval(x - h), spec.eval(x), spec.eval(x + h));
        let d2 = a - 2.0 * b + c;
        min_second_difference = min_second_difference.min(d2);
        // Positive beyond rounding noise of the three evaluations.
        let noise = 64.0 * f64::EPSILON * (a.abs() + 2.0 * b.abs() + c.abs());
        if !(d2 > noise) {
            convex = false;
        }
    }

    let derivs: Vec<f64> = grid.iter().map(|&x| spec.deriv(x)).collect();
    let deriv_increasing = derivs.windows(2).all(|w| w[1] > w[0]);

    let max_inverse_error = grid
        .iter()
        .zip(&derivs)
        .map(|(&x, &y)| (spec.deriv_inv(y) - x).abs() / x.max(1.0))
        .fold(0.0, f64::max);

    FSpecDiagnostics {
        f_at_one: spec.eval(1.0),
        min_second_difference,
        convex,
        deriv_increasing,
        max_inverse_error,
    }
}
