//! Constrained multinomial maximum likelihood.
//!
//! [`fit`] maximizes `Σ n_i log π_i` subject to `h(π) = 0`. It iterates in
//! the log-linear parameterization `θ = log m` of the Poisson kernel
//! `ℓ(m) = Σ (n_i log m_i − m_i)`, evaluating constraints at `π = m / Σm`.
//! Because `h(m / Σm)` is invariant to scale, the Poisson and multinomial
//! estimates coincide and the fitted counts sum to `n`.
//!
//! Each iteration solves the Lagrangian saddle system with the Fisher
//! information `D(m)` (the exact Hessian of `ℓ` in `θ`) and the linearized
//! constraints `h + H_θ δ = 0`, where `H_θ = ∂h/∂θᵀ = J(π) Σ(π)`. Steps are
//! halved until the exact-penalty merit `ℓ − ρ‖h‖₁` does not decrease.
//!
//! [`fit_loglinear_kl`] is an independent path for the log-linear models
//! (S, QS, OQS): Newton's method on `log m = Xθ`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::divergence::FSpec;
use crate::error::{Error, Result};
use crate::inference::{g_squared, p_value};
use crate::model::{
    build_design, degrees_of_freedom, ml_shifts, orthocomplement_of, qs_design, transformed_ratios,
    ConstraintSystem, DesignMatrix, Model, ParamLayout,
};
use crate::table::{OrbitSet, ProbVector, ScoreVector, Shape, Table};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Largest change of any fitted count between iterations.
    pub update_tol: f64,
    /// Largest absolute constraint value.
    pub residual_tol: f64,
    pub max_halvings: usize,
    /// Added to every count to form the starting point.
    pub start_smoothing: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            update_tol: 1e-9,
            residual_tol: 1e-10,
            max_halvings: 30,
            start_smoothing: 0.1,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0
            || self.max_halvings == 0
            || !(self.update_tol > 0.0)
            || !(self.residual_tol > 0.0)
            || !(self.start_smoothing > 0.0)
        {
            return Err(Error::Config(format!(
                "solver settings must be positive: {self:?}"
            )));
        }
        Ok(())
    }
}

/// `ψ` for one orbit, keyed by its sorted (1-based) representative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitParam {
    pub representative: Vec<usize>,
    pub value: f64,
}

/// Parameters of an OQS[f] fit: `F(π_i/π^S_i) = Σ_t β_t u_{i_t} + ψ_{orbit(i)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OqsParams {
    /// `β_1, …, β_T`, with `β_{reference_axis} = 0`.
    pub beta: Vec<f64>,
    /// 1-based axis whose coefficient is fixed at zero.
    pub reference_axis: usize,
    pub psi: Vec<OrbitParam>,
    /// Largest residual of the least-squares decode.
    pub residual: f64,
}

impl OqsParams {
    /// Re-expresses the parameters with `β_axis = 0`.
    pub fn renormalized(&self, axis: usize, scores: &ScoreVector) -> Result<Self> {
        let t = self.beta.len();
        if axis < 1 || axis > t {
            return Err(Error::AxisOutOfRange { axis, t });
        }
        let shift = self.beta[axis - 1];
        let u = scores.values();
        // Σ_t u_{i_t} is constant on an orbit, so a common shift of β moves into ψ.
        let psi = self
            .psi
            .iter()
            .map(|p| OrbitParam {
                representative: p.representative.clone(),
                value: p.value + shift * p.representative.iter().map(|&c| u[c - 1]).sum::<f64>(),
            })
            .collect();
        Ok(Self {
            beta: self.beta.iter().map(|b| b - shift).collect(),
            reference_axis: axis,
            psi,
            residual: self.residual,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Params {
    None,
    Oqs(OqsParams),
    /// Shifts `δ_1, …, δ_{T−1}` with `logit F^{(t)}_i = logit F^{(1)}_i − δ_{t−1}`.
    Ml {
        delta: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: String,
    pub pi_hat: ProbVector,
    pub m_hat: Vec<f64>,
    pub params: Params,
    pub g_squared: f64,
    pub df: usize,
    pub p_value: f64,
    /// Multinomial log-likelihood kernel `Σ n_i log π̂_i`.
    pub log_likelihood: f64,
    pub converged: bool,
    pub iterations: usize,
    pub max_constraint_residual: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

fn log_likelihood(counts: &[f64], pi: &[f64]) -> f64 {
    counts
        .iter()
        .zip(pi)
        .filter(|(&n, _)| n > 0.0)
        .map(|(&n, &p)| n * p.ln())
        .sum()
}

fn poisson_kernel(counts: &[f64], m: &[f64]) -> f64 {
    counts
        .iter()
        .zip(m)
        .map(|(&n, &mi)| if n > 0.0 { n * mi.ln() - mi } else { -mi })
        .sum()
}

fn normalized(m: &[f64]) -> Vec<f64> {
    let total: f64 = m.iter().sum();
    m.iter().map(|v| v / total).collect()
}

/// Smoothed starting distribution `(n_i + δ₀) / (n + δ₀ r^T)`.
pub fn smoothed_start(table: &Table, smoothing: f64) -> Result<ProbVector> {
    let w: Vec<f64> = table
        .counts()
        .iter()
        .map(|&c| c as f64 + smoothing)
        .collect();
    ProbVector::from_weights(table.r(), table.t(), &w)
}

/// Maximum likelihood fit of the model `cs` to `table`.
pub fn fit(table: &Table, cs: &ConstraintSystem, cfg: &SolverConfig) -> Result<FitResult> {
    cfg.validate()?;
    let start = smoothed_start(table, cfg.start_smoothing)?;
    fit_from(table, cs, cfg, &start)
}

struct Solve {
    lambda: DVector<f64>,
    fallback: bool,
}

/// `(H D⁻¹ Hᵀ) λ = rhs` with full pivoting, or least squares when singular.
fn solve_multipliers(a: DMatrix<f64>, rhs: &DVector<f64>) -> Solve {
    let scale = a.amax();
    let lu = a.clone().full_piv_lu();
    let pivots_ok = {
        let u = lu.u();
        let d = u.nrows().min(u.ncols());
        (0..d).all(|i| u[(i, i)].abs() > 1e-13 * scale)
    };
    if pivots_ok {
        if let Some(lambda) = lu.solve(rhs) {
            return Solve {
                lambda,
                fallback: false,
            };
        }
    }
    let svd = a.svd(true, true);
    let lambda = svd
        .solve(rhs, 1e-12 * scale.max(f64::MIN_POSITIVE))
        .unwrap_or_else(|_| DVector::zeros(rhs.len()));
    Solve {
        lambda,
        fallback: true,
    }
}

/// Trial counts, their proportions, constraint values and merit.
type Trial = (Vec<f64>, Vec<f64>, DVector<f64>, f64);

/// An accepted point and whether it came from an unshortened step.
type Accepted = (Vec<f64>, Vec<f64>, DVector<f64>, bool);

/// Second-order corrections tried before a step is shortened.
const SOC_ROUNDS: usize = 5;

/// Largest change of any `log m_i` in one iteration.
const MAX_LOG_STEP: f64 = 4.0;

/// `∂h/∂θᵀ` transposed onto `λ`: `Σ(π) J(π)ᵀ λ` at `π = m / Σm`.
fn constraint_gradient(
    cs: &ConstraintSystem,
    m: &[f64],
    lambda: &DVector<f64>,
) -> Result<DVector<f64>> {
    let pi = normalized(m);
    let v = cs.jacobian(&pi)?.tr_mul(lambda);
    let mean: f64 = pi.iter().zip(v.iter()).map(|(p, x)| p * x).sum();
    Ok(DVector::from_iterator(
        pi.len(),
        pi.iter().zip(v.iter()).map(|(p, x)| p * (x - mean)),
    ))
}

/// `step + D⁻¹Hᵀ(HD⁻¹Hᵀ)⁻¹(−h(θ + step))`: the least-change projection of the
/// trial point back onto the linearized constraints.
fn second_order_correction(
    m: &[f64],
    step: &[f64],
    h_theta: &DMatrix<f64>,
    trial_h: &DVector<f64>,
) -> Option<Vec<f64>> {
    let mut scaled = h_theta.clone();
    for (i, mut col) in scaled.column_iter_mut().enumerate() {
        col /= m[i];
    }
    let a = &scaled * h_theta.transpose();
    let mu = a.full_piv_lu().solve(&(-trial_h))?;
    let shift = scaled.tr_mul(&mu);
    let out: Vec<f64> = step.iter().zip(shift.iter()).map(|(s, c)| s + c).collect();
    out.iter().all(|v| v.is_finite()).then_some(out)
}

/// Newton step in `θ` using the curvature of `λᵀh`, or `None` when the
/// KKT system is singular or the curvature cannot be evaluated.
fn newton_step(
    cs: &ConstraintSystem,
    m: &[f64],
    score: &[f64],
    h: &DVector<f64>,
    h_theta: &DMatrix<f64>,
    lambda: &DVector<f64>,
) -> Option<Vec<f64>> {
    let ncell = m.len();
    let d = h.len();
    let eps: f64 = 1e-5;
    let mut curvature = DMatrix::zeros(ncell, ncell);
    let mut shifted = m.to_vec();
    for j in 0..ncell {
        shifted[j] = m[j] * eps.exp();
        let up = constraint_gradient(cs, &shifted, lambda).ok()?;
        shifted[j] = m[j] * (-eps).exp();
        let down = constraint_gradient(cs, &shifted, lambda).ok()?;
        shifted[j] = m[j];
        curvature.set_column(j, &((up - down) / (2.0 * eps)));
    }
    let curvature = (&curvature + curvature.transpose()) * 0.5;

    // Work in φ = D^{1/2} θ, where cells drifting to zero keep O(1) entries.
    let root: Vec<f64> = m.iter().map(|v| v.sqrt()).collect();
    let mut hessian = DMatrix::from_fn(ncell, ncell, |i, j| {
        -curvature[(i, j)] / (root[i] * root[j])
    });
    for i in 0..ncell {
        hessian[(i, i)] += 1.0;
    }
    let mut jac = h_theta.clone();
    for (j, mut col) in jac.column_iter_mut().enumerate() {
        col /= root[j];
    }
    // Only a step toward a local maximum is useful: the Hessian of the
    // negated Lagrangian must be positive definite on the tangent space.
    let tangent = orthocomplement_of(&jac.transpose()).ok()?.u;
    if tangent.ncols() > 0
        && (tangent.transpose() * &hessian * &tangent)
            .cholesky()
            .is_none()
    {
        return None;
    }

    let mut kkt = DMatrix::zeros(ncell + d, ncell + d);
    kkt.view_mut((0, 0), (ncell, ncell)).copy_from(&hessian);
    kkt.view_mut((0, ncell), (ncell, d))
        .copy_from(&(-jac.transpose()));
    kkt.view_mut((ncell, 0), (d, ncell)).copy_from(&jac);
    let mut rhs = DVector::zeros(ncell + d);
    for i in 0..ncell {
        rhs[i] = score[i] / root[i];
    }
    for k in 0..d {
        rhs[ncell + k] = -h[k];
    }
    let sol = kkt.full_piv_lu().solve(&rhs)?;
    let step: Vec<f64> = (0..ncell).map(|i| sol[i] / root[i]).collect();
    if step.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(step)
}

/// [`fit`] from an explicit strictly positive starting distribution.
pub fn fit_from(
    table: &Table,
    cs: &ConstraintSystem,
    cfg: &SolverConfig,
    start: &ProbVector,
) -> Result<FitResult> {
    cfg.validate()?;
    let shape = table.shape();
    if cs.shape() != shape || start.shape() != shape {
        return Err(Error::ShapeMismatch {
            expected: shape.cells(),
            got: cs.shape().cells(),
        });
    }
    if cs.dim() >= shape.cells() {
        return Err(Error::Config(format!(
            "constraint dimension {} leaves no free cells",
            cs.dim()
        )));
    }
    if start.probs().iter().any(|&p| !(p > 0.0)) {
        return Err(Error::InvalidProbVector(
            "starting point must be strictly positive".into(),
        ));
    }

    let counts = table.counts_f64();
    let n = table.n() as f64;
    let ncell = shape.cells();
    let mut m: Vec<f64> = start.probs().iter().map(|p| p * n).collect();
    let mut pi = normalized(&m);
    let mut h = cs.eval(&pi)?;
    let mut rho = 1.0f64;
    let mut warnings = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iterations {
        iterations += 1;
        let jac = cs.jacobian(&pi)?;
        // H_θ = J Σ(π): column i is π_i (J_{·i} − Jπ).
        let jpi = &jac * DVector::from_column_slice(&pi);
        let mut h_theta = jac;
        for (i, mut col) in h_theta.column_iter_mut().enumerate() {
            col -= &jpi;
            col *= pi[i];
        }
        let score: Vec<f64> = counts.iter().zip(&m).map(|(n, m)| n - m).collect();

        let lambda = if cs.dim() == 0 {
            DVector::zeros(0)
        } else {
            let mut scaled = h_theta.clone();
            for (i, mut col) in scaled.column_iter_mut().enumerate() {
                col /= m[i];
            }
            let a = &scaled * h_theta.transpose();
            let g_over_m = DVector::from_iterator(ncell, score.iter().zip(&m).map(|(g, m)| g / m));
            let rhs = -&h - &h_theta * g_over_m;
            let solved = solve_multipliers(a, &rhs);
            if solved.fallback && !warnings.iter().any(|w: &String| w.starts_with("singular")) {
                warnings.push(format!(
                    "singular multiplier system at iteration {iterations}; used a least-squares step"
                ));
            }
            solved.lambda
        };
        let correction = h_theta.tr_mul(&lambda);
        let fisher: Vec<f64> = (0..ncell)
            .map(|i| (score[i] + correction[i]) / m[i])
            .collect();
        let newton = if cs.dim() > 0 {
            newton_step(cs, &m, &score, &h, &h_theta, &lambda)
        } else {
            None
        };

        rho = rho.max(2.0 * lambda.amax() + 1.0);
        let merit_at = |ll: f64, h: &DVector<f64>| ll - rho * h.lp_norm(1);
        let current = merit_at(poisson_kernel(&counts, &m), &h);
        let slack = 1e-12 * (1.0 + current.abs());
        let capped = |step: &[f64]| -> f64 {
            let largest = step.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if largest > MAX_LOG_STEP {
                MAX_LOG_STEP / largest
            } else {
                1.0
            }
        };
        let try_step = |step: &[f64], scale: f64| -> Option<Trial> {
            let trial: Vec<f64> = m
                .iter()
                .zip(step)
                .map(|(mi, s)| mi * (scale * s).exp())
                .collect();
            if !trial.iter().all(|v| v.is_finite() && *v > 0.0) {
                return None;
            }
            let trial_pi = normalized(&trial);
            let trial_h = cs.eval(&trial_pi).ok()?;
            let value = merit_at(poisson_kernel(&counts, &trial), &trial_h);
            Some((trial, trial_pi, trial_h, value))
        };

        // A step scaled to the cap, followed by second-order corrections
        // that restore feasibility lost to constraint curvature.
        let corrected_step = |base: &[f64]| -> Option<Accepted> {
            let cap = capped(base);
            let mut step: Vec<f64> = base.iter().map(|v| v * cap).collect();
            for _ in 0..=SOC_ROUNDS {
                let (trial, trial_pi, trial_h, value) = try_step(&step, 1.0)?;
                if value >= current - slack {
                    return Some((trial, trial_pi, trial_h, cap == 1.0));
                }
                step = second_order_correction(&m, &step, &h_theta, &trial_h)?;
            }
            None
        };

        let mut accepted = newton.as_deref().and_then(corrected_step);
        if accepted.is_none() {
            accepted = corrected_step(&fisher);
        }
        if accepted.is_none() {
            let mut scale = 0.5 * capped(&fisher);
            for _ in 0..cfg.max_halvings {
                if let Some((trial, trial_pi, trial_h, value)) = try_step(&fisher, scale) {
                    if value >= current - slack {
                        accepted = Some((trial, trial_pi, trial_h, false));
                        break;
                    }
                }
                scale *= 0.5;
            }
        }
        let Some((trial, trial_pi, trial_h, full_step)) = accepted else {
            warnings.push(format!("step halving exhausted at iteration {iterations}"));
            break;
        };

        let update = m
            .iter()
            .zip(&trial)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        m = trial;
        pi = trial_pi;
        h = trial_h;
        let residual = if h.is_empty() { 0.0 } else { h.amax() };
        if full_step && update < cfg.update_tol && residual < cfg.residual_tol {
            converged = true;
            break;
        }
    }

    let max_constraint_residual = if h.is_empty() { 0.0 } else { h.amax() };
    if !converged && !warnings.iter().any(|w| w.starts_with("step")) {
        warnings.push(format!(
            "no convergence after {iterations} iterations (residual {max_constraint_residual:.3e})"
        ));
    }
    let pi_hat = ProbVector::from_weights(shape.r, shape.t, &pi)?;
    let m_hat: Vec<f64> = pi_hat.probs().iter().map(|p| p * n).collect();
    let g2 = g_squared(table, &m_hat)?;
    let df = cs.dim();
    let params = match decode_params(cs, &pi_hat) {
        Ok(p) => p,
        Err(e) => {
            warnings.push(format!("parameters not recovered: {e}"));
            Params::None
        }
    };
    Ok(FitResult {
        model: cs.label().to_string(),
        log_likelihood: log_likelihood(&counts, pi_hat.probs()),
        pi_hat,
        m_hat,
        params,
        g_squared: g2,
        df,
        p_value: p_value(g2, df)?,
        converged,
        iterations,
        max_constraint_residual,
        warnings,
    })
}

fn decode_params(cs: &ConstraintSystem, pi: &ProbVector) -> Result<Params> {
    match cs.params() {
        ParamLayout::None => Ok(Params::None),
        ParamLayout::Ml => Ok(Params::Ml {
            delta: ml_shifts(pi.shape(), pi.probs())?,
        }),
        ParamLayout::Oqs { design } => {
            let spec = cs
                .spec()
                .ok_or_else(|| Error::Config("OQS layout without a generator".into()))?;
            Ok(Params::Oqs(decode_oqs(design, spec, pi)?))
        }
    }
}

fn decode_oqs(design: &DesignMatrix, spec: &FSpec, pi: &ProbVector) -> Result<OqsParams> {
    let y = transformed_ratios(pi.shape(), pi.probs(), spec)?;
    let svd = design.x.clone().svd(true, true);
    let theta = svd
        .solve(&y, 1e-12)
        .map_err(|e| Error::Config(format!("least squares failed: {e}")))?;
    let residual = (&design.x * &theta - &y).amax();
    Ok(oqs_from_theta(design, &theta, residual))
}

/// `β` with `β_T = 0` from coefficients of the contrasts `u_{i_t} − u_{i_T}`.
///
/// `Σ_{t<T} c_t (u_{i_t} − u_{i_T})` equals `Σ_t β_t u_{i_t} − (Σ c) Σ_t u_{i_t}`
/// with `β_t = c_t + Σ c`; the last term is constant on orbits.
fn beta_from_contrasts(c: &[f64]) -> (Vec<f64>, f64) {
    let total: f64 = c.iter().sum();
    let mut beta: Vec<f64> = c.iter().map(|v| v + total).collect();
    beta.push(0.0);
    (beta, total)
}

fn oqs_from_theta(design: &DesignMatrix, theta: &DVector<f64>, residual: f64) -> OqsParams {
    let shape = design.shape;
    let contrasts: Vec<f64> = theta.rows(0, design.score_cols).iter().copied().collect();
    let (beta, total) = beta_from_contrasts(&contrasts);
    let u = design.scores.values();
    let orbits = OrbitSet::shared(shape);
    let psi = orbits
        .orbits()
        .iter()
        .enumerate()
        .map(|(o, orbit)| OrbitParam {
            representative: orbit.representative.iter().map(|c| c + 1).collect(),
            value: theta[design.score_cols + o]
                - total * orbit.representative.iter().map(|&c| u[c]).sum::<f64>(),
        })
        .collect();
    OqsParams {
        beta,
        reference_axis: shape.t,
        psi,
        residual,
    }
}

/// Decodes `(β, ψ)` of the OQS[f] model `cs` from a fitted distribution and
/// re-normalizes `β` so that `β_{reference_axis} = 0`.
///
/// Fails when the fitted distribution does not satisfy the model to within
/// `1e-6` in the transformed scale.
pub fn recover_params(
    fit: &FitResult,
    cs: &ConstraintSystem,
    reference_axis: usize,
) -> Result<Params> {
    match cs.params() {
        ParamLayout::Oqs { design } => {
            let spec = cs
                .spec()
                .ok_or_else(|| Error::Config("OQS layout without a generator".into()))?;
            let raw = decode_oqs(design, spec, &fit.pi_hat)?;
            if raw.residual > 1e-6 {
                return Err(Error::Inconsistent(raw.residual));
            }
            Ok(Params::Oqs(
                raw.renormalized(reference_axis, &design.scores)?,
            ))
        }
        ParamLayout::Ml => Ok(Params::Ml {
            delta: ml_shifts(fit.pi_hat.shape(), fit.pi_hat.probs())?,
        }),
        ParamLayout::None => Ok(Params::None),
    }
}

/// Closed-form maximum likelihood counts under complete symmetry: orbit means.
pub fn symmetry_mle(table: &Table) -> Vec<f64> {
    table.orbits().symmetrize_slice(&table.counts_f64())
}

/// Log-linear fit `log m = Xθ` for S, QS or OQS (KL) by Newton's method on
/// the Poisson likelihood.
pub fn fit_loglinear_kl(
    table: &Table,
    model: &Model,
    u: &ScoreVector,
    cfg: &SolverConfig,
) -> Result<FitResult> {
    cfg.validate()?;
    let shape = table.shape();
    let orbits = table.orbits();
    let (x, design) = match model {
        Model::S => (orbit_design(shape, &orbits), None),
        Model::Qs => (qs_design(shape.r, shape.t)?, None),
        Model::OqsF(spec) if spec.name == "kl" => {
            let d = build_design(shape.r, shape.t, u)?;
            (d.x.clone(), Some(d))
        }
        other => {
            return Err(Error::Config(format!(
                "model {other} has no log-linear form"
            )))
        }
    };
    let counts = table.counts_f64();
    let n = table.n() as f64;
    let ncell = shape.cells();
    let k = x.ncols();

    // Start at the uniform table: ψ = log(n / r^T), all other coefficients 0.
    let mut theta = DVector::zeros(k);
    let offset = k - orbits.len();
    for o in 0..orbits.len() {
        theta[offset + o] = (n / ncell as f64).ln();
    }
    let mut m: Vec<f64> = (&x * &theta).iter().map(|v| v.exp()).collect();
    let mut converged = false;
    let mut iterations = 0;
    let mut warnings = Vec::new();

    while iterations < cfg.max_iterations {
        iterations += 1;
        let resid = DVector::from_iterator(ncell, counts.iter().zip(&m).map(|(n, m)| n - m));
        let grad = x.tr_mul(&resid);
        let mut weighted = x.clone();
        for (i, mut row) in weighted.row_iter_mut().enumerate() {
            row *= m[i];
        }
        let info = x.tr_mul(&weighted);
        let Some(step) = info.clone().full_piv_lu().solve(&grad) else {
            warnings.push(format!("singular information at iteration {iterations}"));
            break;
        };
        let current = poisson_kernel(&counts, &m);
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=cfg.max_halvings {
            let trial_theta = &theta + &step * scale;
            let trial: Vec<f64> = (&x * &trial_theta).iter().map(|v| v.exp()).collect();
            if trial.iter().all(|v| v.is_finite() && *v > 0.0) {
                let value = poisson_kernel(&counts, &trial);
                if value >= current - 1e-12 * (1.0 + current.abs()) {
                    accepted = Some((trial_theta, trial));
                    break;
                }
            }
            scale *= 0.5;
        }
        let Some((new_theta, trial)) = accepted else {
            warnings.push(format!("step halving exhausted at iteration {iterations}"));
            break;
        };
        let update = m
            .iter()
            .zip(&trial)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        theta = new_theta;
        m = trial;
        if update < cfg.update_tol {
            converged = true;
            break;
        }
    }
    if !converged && warnings.is_empty() {
        warnings.push(format!("no convergence after {iterations} iterations"));
    }

    let pi_hat = ProbVector::from_weights(shape.r, shape.t, &m)?;
    let m_hat: Vec<f64> = pi_hat.probs().iter().map(|p| p * n).collect();
    let g2 = g_squared(table, &m_hat)?;
    let df = degrees_of_freedom(model, shape.r, shape.t)?;
    let params = match &design {
        Some(d) => {
            // log π = Xθ − log Σm and F = 1 + log(π/π^S); only β is reported
            // from θ, ψ is re-derived from the fitted table.
            match decode_oqs(d, &FSpec::kl(), &pi_hat) {
                Ok(mut p) => {
                    let contrasts: Vec<f64> = theta.rows(0, d.score_cols).iter().copied().collect();
                    p.beta = beta_from_contrasts(&contrasts).0;
                    Params::Oqs(p)
                }
                Err(e) => {
                    warnings.push(format!("parameters not recovered: {e}"));
                    Params::None
                }
            }
        }
        None => Params::None,
    };
    Ok(FitResult {
        model: model.tag(),
        log_likelihood: log_likelihood(&counts, pi_hat.probs()),
        pi_hat,
        m_hat,
        params,
        g_squared: g2,
        df,
        p_value: p_value(g2, df)?,
        converged,
        iterations,
        max_constraint_residual: 0.0,
        warnings,
    })
}

fn orbit_design(shape: Shape, orbits: &OrbitSet) -> DMatrix<f64> {
    let mut x = DMatrix::zeros(shape.cells(), orbits.len());
    for i in 0..shape.cells() {
        x[(i, orbits.orbit_id(i))] = 1.0;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets;
    use crate::model::{constraint_me, constraint_mh, constraint_oqsf, constraint_s};
    use crate::table::marginal_moment;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> SolverConfig {
        SolverConfig::default()
    }

    fn dysmenorrhea() -> (Table, ScoreVector) {
        let doc = datasets::dysmenorrhea();
        let u = doc.scores_or_default();
        (doc.table, u)
    }

    fn random_table(rng: &mut ChaCha8Rng, r: usize, t: usize, max: u64) -> Table {
        loop {
            let counts: Vec<u64> = (0..r.pow(t as u32))
                .map(|_| rng.random_range(0..=max))
                .collect();
            if counts.iter().any(|&c| c > 0) {
                return Table::new(r, t, counts).unwrap();
            }
        }
    }

    fn fit_model(table: &Table, model: &Model, u: &ScoreVector) -> FitResult {
        let cs = ConstraintSystem::for_model(model, table.r(), table.t(), u).unwrap();
        fit(table, &cs, &cfg()).unwrap()
    }

    fn oqs_beta(fit: &FitResult, u: &ScoreVector, axis: usize) -> Vec<f64> {
        match &fit.params {
            Params::Oqs(p) => p.renormalized(axis, u).unwrap().beta,
            other => panic!("expected OQS parameters, got {other:?}"),
        }
    }

    /// Independent POQS fit: for fixed `β` each orbit's conditional
    /// probabilities are `(1 + (η_i − η̄)/2) / #A`, so the profile
    /// log-likelihood is `Σ n_i log g_i(β)`, maximized by Nelder–Mead.
    fn poqs_profile_fit(table: &Table, u: &ScoreVector) -> (Vec<f64>, f64) {
        let shape = table.shape();
        let orbits = table.orbits();
        let counts = table.counts_f64();
        let uv = u.values();
        let fitted = |b: &[f64]| -> Option<Vec<f64>> {
            let beta = [0.0, b[0], b[1]];
            let mut m = vec![0.0; shape.cells()];
            for orbit in orbits.orbits() {
                let eta: Vec<f64> = orbit
                    .members
                    .iter()
                    .map(|&i| {
                        shape
                            .coords(i)
                            .iter()
                            .zip(&beta)
                            .map(|(&c, b)| b * uv[c])
                            .sum()
                    })
                    .collect();
                let mean = eta.iter().sum::<f64>() / eta.len() as f64;
                let total: f64 = orbit.members.iter().map(|&i| counts[i]).sum();
                for (&i, e) in orbit.members.iter().zip(&eta) {
                    let g = 1.0 + (e - mean) / 2.0;
                    if g <= 0.0 {
                        return None;
                    }
                    m[i] = total * g / eta.len() as f64;
                }
            }
            Some(m)
        };
        let objective = |b: &[f64]| match fitted(b) {
            Some(m) => g_squared(table, &m).unwrap_or(f64::INFINITY),
            None => f64::INFINITY,
        };
        let mut simplex = [vec![0.0, 0.0], vec![0.5, 0.0], vec![0.0, 0.5]];
        for _ in 0..5000 {
            simplex.sort_by(|a, b| objective(a).total_cmp(&objective(b)));
            let centroid: Vec<f64> = (0..2)
                .map(|j| (simplex[0][j] + simplex[1][j]) / 2.0)
                .collect();
            let along = |s: f64| -> Vec<f64> {
                (0..2)
                    .map(|j| centroid[j] + s * (simplex[2][j] - centroid[j]))
                    .collect()
            };
            let reflected = along(-1.0);
            if objective(&reflected) < objective(&simplex[0]) {
                let expanded = along(-2.0);
                simplex[2] = if objective(&expanded) < objective(&reflected) {
                    expanded
                } else {
                    reflected
                };
            } else if objective(&reflected) < objective(&simplex[1]) {
                simplex[2] = reflected;
            } else {
                let contracted = along(0.5);
                if objective(&contracted) < objective(&simplex[2]) {
                    simplex[2] = contracted;
                } else {
                    let best = simplex[0].clone();
                    for v in simplex.iter_mut().skip(1) {
                        for j in 0..2 {
                            v[j] = best[j] + 0.5 * (v[j] - best[j]);
                        }
                    }
                }
            }
        }
        simplex.sort_by(|a, b| objective(a).total_cmp(&objective(b)));
        let best = simplex[0].clone();
        let g2 = objective(&best);
        (vec![0.0, best[0], best[1]], g2)
    }

    #[test]
    fn s_fit_is_orbit_mean() {
        let (table, u) = dysmenorrhea();
        let f = fit_model(&table, &Model::S, &u);
        assert!(f.converged);
        let closed = symmetry_mle(&table);
        for (a, b) in f.m_hat.iter().zip(&closed) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-8);
        }
        // Orbit {(1,1,2),(1,2,1),(2,1,1)}: (4 + 3 + 2) / 3.
        let idx = table.shape().index(&[0, 0, 1]);
        assert_abs_diff_eq!(f.m_hat[idx], 3.0, epsilon = 1e-8);
        assert_eq!(f.df, 17);
    }

    #[test]
    fn s_fit_matches_closed_form_on_random_tables() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let r = rng.random_range(2..=4);
            let t = rng.random_range(2..=3);
            let table = random_table(&mut rng, r, t, 12);
            let f = fit_model(&table, &Model::S, &ScoreVector::equal_interval(r));
            assert!(f.converged, "{:?}", f.warnings);
            let closed = symmetry_mle(&table);
            for (a, b) in f.m_hat.iter().zip(&closed) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn dysmenorrhea_marginal_models() {
        let (table, u) = dysmenorrhea();
        let mh = fit_model(&table, &Model::Mh, &u);
        assert!(mh.converged);
        assert_eq!(mh.df, 4);
        assert!((mh.g_squared - 46.28).abs() < 0.01, "{}", mh.g_squared);
        let me = fit_model(&table, &Model::Me, &u);
        assert!(me.converged);
        assert_eq!(me.df, 2);
        assert!((me.g_squared - 44.81).abs() < 0.01, "{}", me.g_squared);
        let ml = fit_model(&table, &Model::Ml, &u);
        assert!(ml.converged);
        assert!((ml.g_squared - 0.52).abs() < 0.01, "{}", ml.g_squared);
        let Params::Ml { delta } = &ml.params else {
            panic!("no shifts")
        };
        assert!(
            (delta[0] - 2.04).abs() < 0.01 && (delta[1] - 2.43).abs() < 0.01,
            "{delta:?}"
        );
    }

    #[test]
    fn poqs_matches_profile_likelihood_oracle() {
        let (table, u) = dysmenorrhea();
        let f = fit_model(&table, &Model::OqsF(FSpec::pearson()), &u);
        assert!(f.converged, "{:?}", f.warnings);
        let (beta, g2) = poqs_profile_fit(&table, &u);
        assert_abs_diff_eq!(f.g_squared, g2, epsilon = 1e-6);
        for (a, b) in oqs_beta(&f, &u, 1).iter().zip(&beta) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-4);
        }
    }

    #[test]
    fn symmetric_table_fits_exactly() {
        // Orbit-constant counts: every model's constraints hold at the data.
        let shape = Shape::new(3, 3).unwrap();
        let orbits = OrbitSet::shared(shape);
        let counts: Vec<u64> = (0..shape.cells())
            .map(|i| 2 + orbits.orbit_id(i) as u64)
            .collect();
        let table = Table::new(3, 3, counts).unwrap();
        let u = ScoreVector::equal_interval(3);
        for model in [
            Model::S,
            Model::Qs,
            Model::OqsF(FSpec::kl()),
            Model::OqsF(FSpec::pearson()),
            Model::Mh,
            Model::Me,
            Model::Ml,
        ] {
            let f = fit_model(&table, &model, &u);
            assert!(f.converged, "{model}");
            assert!(f.g_squared < 1e-10, "{model}: {}", f.g_squared);
            for (m, n) in f.m_hat.iter().zip(table.counts()) {
                assert_abs_diff_eq!(*m, *n as f64, epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn loglinear_path_agrees_with_constraint_path() {
        let (table, u) = dysmenorrhea();
        let kl = Model::OqsF(FSpec::kl());
        let a = fit_model(&table, &kl, &u);
        let b = fit_loglinear_kl(&table, &kl, &u, &cfg()).unwrap();
        assert!(a.converged && b.converged);
        assert_abs_diff_eq!(a.g_squared, b.g_squared, epsilon = 1e-6);
        for (x, y) in oqs_beta(&a, &u, 1).iter().zip(oqs_beta(&b, &u, 1)) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-6);
        }
        let s = fit_loglinear_kl(&table, &Model::S, &u, &cfg()).unwrap();
        for (x, y) in s.m_hat.iter().zip(symmetry_mle(&table)) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-8);
        }
        let qs_a = fit_model(&table, &Model::Qs, &u);
        let qs_b = fit_loglinear_kl(&table, &Model::Qs, &u, &cfg()).unwrap();
        assert_abs_diff_eq!(qs_a.g_squared, qs_b.g_squared, epsilon = 1e-6);
    }

    #[test]
    fn loglinear_rejects_non_kl_models() {
        let (table, u) = dysmenorrhea();
        assert!(fit_loglinear_kl(&table, &Model::Me, &u, &cfg()).is_err());
        assert!(fit_loglinear_kl(&table, &Model::OqsF(FSpec::pearson()), &u, &cfg()).is_err());
    }

    #[test]
    fn saturated_oqs_reproduces_data() {
        let table = Table::new(2, 2, vec![5, 1, 7, 3]).unwrap();
        let u = ScoreVector::equal_interval(2);
        let f = fit_loglinear_kl(&table, &Model::OqsF(FSpec::kl()), &u, &cfg()).unwrap();
        assert_eq!(f.df, 0);
        assert!(f.g_squared < 1e-10);
        for (m, n) in f.m_hat.iter().zip(table.counts()) {
            assert_abs_diff_eq!(*m, *n as f64, epsilon = 1e-8);
        }
    }

    #[test]
    fn joint_oqs_and_me_equals_symmetry_from_random_starts() {
        let (table, u) = dysmenorrhea();
        let s = fit_model(&table, &Model::S, &u);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for spec in [FSpec::kl(), FSpec::pearson()] {
            let joint = ConstraintSystem::stack(
                "OQS+ME",
                vec![
                    constraint_oqsf(3, 3, &u, &spec).unwrap(),
                    constraint_me(3, 3, &u).unwrap(),
                ],
            )
            .unwrap();
            for _ in 0..5 {
                let w: Vec<f64> = (0..27).map(|_| rng.random_range(0.2..1.0)).collect();
                let start = ProbVector::from_weights(3, 3, &w).unwrap();
                let f = fit_from(&table, &joint, &cfg(), &start).unwrap();
                assert!(f.converged, "{}: {:?}", spec.name, f.warnings);
                for (a, b) in f.pi_hat.probs().iter().zip(s.pi_hat.probs()) {
                    assert_abs_diff_eq!(a, b, epsilon = 1e-6);
                }
            }
        }
    }

    #[test]
    fn sufficient_statistics_are_matched() {
        let (table, u) = dysmenorrhea();
        let counts = table.counts_f64();
        let orbits = table.orbits();
        let observed_totals = orbits.orbit_totals(&counts);

        let s = fit_model(&table, &Model::S, &u);
        for (a, b) in orbits.orbit_totals(&s.m_hat).iter().zip(&observed_totals) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-8);
        }

        let oqs = fit_model(&table, &Model::OqsF(FSpec::kl()), &u);
        for (a, b) in orbits.orbit_totals(&oqs.m_hat).iter().zip(&observed_totals) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-8);
        }
        let n = table.n() as f64;
        let observed = table.proportions();
        for axis in 1..=3 {
            let fitted = marginal_moment(&oqs.pi_hat, axis, &u).unwrap();
            let data = marginal_moment(&observed, axis, &u).unwrap();
            assert_abs_diff_eq!(n * fitted, n * data, epsilon = 1e-8);
        }

        let me = fit_model(&table, &Model::Me, &u);
        assert_abs_diff_eq!(me.m_hat.iter().sum::<f64>(), n, epsilon = 1e-8);
        let first = marginal_moment(&me.pi_hat, 1, &u).unwrap();
        for axis in 2..=3 {
            assert_abs_diff_eq!(
                marginal_moment(&me.pi_hat, axis, &u).unwrap(),
                first,
                epsilon = 1e-10
            );
        }
    }

    /// Maximizes `Σ n_i log π_i` over `{π > 0 : Aπ = 0, Σπ = 1}` by projected
    /// Newton ascent on the barrier objective `Σ (n_i + μ) log π_i`, with the
    /// step projected onto the null space of the constraints and `μ → 0`.
    fn projected_ascent(counts: &[f64], a: &DMatrix<f64>) -> f64 {
        let ncell = counts.len();
        let mut full = DMatrix::zeros(a.nrows() + 1, ncell);
        full.view_mut((0, 0), (a.nrows(), ncell)).copy_from(a);
        full.row_mut(a.nrows()).fill(1.0);
        let z = orthocomplement_of(&full.transpose()).unwrap().u;
        let objective = |p: &DVector<f64>, mu: f64| -> f64 {
            counts
                .iter()
                .zip(p.iter())
                .map(|(n, p)| (n + mu) * p.ln())
                .sum()
        };
        let mut p = DVector::from_element(ncell, 1.0 / ncell as f64);
        let mut mu = 1.0;
        while mu > 1e-14 {
            for _ in 0..50 {
                let grad = DVector::from_iterator(
                    ncell,
                    counts.iter().zip(p.iter()).map(|(n, p)| (n + mu) / p),
                );
                let curv = DVector::from_iterator(
                    ncell,
                    counts.iter().zip(p.iter()).map(|(n, p)| (n + mu) / (p * p)),
                );
                let reduced = z.transpose() * DMatrix::from_diagonal(&curv) * &z;
                let Some(coef) = reduced.full_piv_lu().solve(&z.tr_mul(&grad)) else {
                    break;
                };
                let dir = &z * coef;
                let mut step = 1.0f64;
                for (pi, di) in p.iter().zip(dir.iter()) {
                    if *di < 0.0 {
                        step = step.min(0.99 * pi / -di);
                    }
                }
                let base = objective(&p, mu);
                while objective(&(&p + &dir * step), mu) < base && step > 1e-16 {
                    step *= 0.5;
                }
                p += &dir * step;
                if z.tr_mul(&grad).amax() * step < 1e-14 {
                    break;
                }
            }
            mu *= 0.1;
        }
        objective(&p, 0.0)
    }

    #[test]
    fn linear_models_match_projected_ascent_on_binary_tables() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = ScoreVector::equal_interval(2);
        let probe: Vec<f64> = (0..8).map(|i| 0.05 + i as f64 * 0.02).collect();
        for case in 0..100 {
            let n = rng.random_range(1..=20u64);
            let mut counts = vec![0u64; 8];
            for _ in 0..n {
                counts[rng.random_range(0..8)] += 1;
            }
            let table = Table::new(2, 3, counts).unwrap();
            let data = table.counts_f64();
            for cs in [
                constraint_s(2, 3).unwrap(),
                constraint_me(2, 3, &u).unwrap(),
                constraint_mh(2, 3).unwrap(),
            ] {
                // The linear constraints are read off their constant Jacobian.
                let a = cs.jacobian(&probe).unwrap();
                // Degenerate boundary optima can leave an empty cell decaying
                // sublinearly; the likelihood is still compared there.
                let f = fit(&table, &cs, &cfg()).unwrap();
                assert!(
                    f.converged || f.max_constraint_residual < 1e-8,
                    "case {case} {}: {:?}",
                    cs.label(),
                    f.warnings
                );
                let oracle = projected_ascent(&data, &a);
                assert!(
                    (f.log_likelihood - oracle).abs() < 1e-6,
                    "case {case} {}: {} vs {oracle}",
                    cs.label(),
                    f.log_likelihood
                );
            }
        }
    }

    #[test]
    fn recover_beta_from_constructed_kl_oqs_distribution() {
        let shape = Shape::new(3, 3).unwrap();
        let orbits = OrbitSet::shared(shape);
        let u = ScoreVector::equal_interval(3);
        let beta = [0.3, -0.2, 0.0];
        let psi = [0.1, -0.4, 0.3, 0.0, 0.2, -0.1, 0.5, -0.3, 0.2, 0.05];
        let w: Vec<f64> = (0..shape.cells())
            .map(|i| {
                let lin: f64 = shape
                    .coords(i)
                    .iter()
                    .zip(&beta)
                    .map(|(&c, b)| b * u.values()[c])
                    .sum();
                (lin + psi[orbits.orbit_id(i)]).exp()
            })
            .collect();
        let pi_hat = ProbVector::from_weights(3, 3, &w).unwrap();
        let result = synthetic_fit(pi_hat);
        let cs = constraint_oqsf(3, 3, &u, &FSpec::kl()).unwrap();
        let Params::Oqs(p) = recover_params(&result, &cs, 3).unwrap() else {
            panic!()
        };
        for (a, b) in p.beta.iter().zip(&beta) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-8);
        }
        assert!(p.residual < 1e-10);
    }

    #[test]
    fn recover_beta_from_constructed_pearson_distribution() {
        let shape = Shape::new(3, 3).unwrap();
        let orbits = OrbitSet::shared(shape);
        let u = ScoreVector::equal_interval(3);
        let beta = [0.0, 0.4, 0.25];
        let mut w = vec![0.0; shape.cells()];
        for (o, orbit) in orbits.orbits().iter().enumerate() {
            let eta: Vec<f64> = orbit
                .members
                .iter()
                .map(|&i| {
                    shape
                        .coords(i)
                        .iter()
                        .zip(&beta)
                        .map(|(&c, b)| b * u.values()[c])
                        .sum()
                })
                .collect();
            let mean = eta.iter().sum::<f64>() / eta.len() as f64;
            let mass = 1.0 + o as f64 * 0.1;
            for (&i, e) in orbit.members.iter().zip(&eta) {
                w[i] = mass * (1.0 + (e - mean) / 2.0);
            }
        }
        let result = synthetic_fit(ProbVector::from_weights(3, 3, &w).unwrap());
        let cs = constraint_oqsf(3, 3, &u, &FSpec::pearson()).unwrap();
        let Params::Oqs(p) = recover_params(&result, &cs, 1).unwrap() else {
            panic!()
        };
        for (a, b) in p.beta.iter().zip(&beta) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-8);
        }
    }

    #[test]
    fn recover_params_of_symmetric_fit_is_zero() {
        let (table, u) = dysmenorrhea();
        let s = fit_model(&table, &Model::S, &u);
        let cs = constraint_oqsf(3, 3, &u, &FSpec::pearson()).unwrap();
        let Params::Oqs(p) = recover_params(&s, &cs, 1).unwrap() else {
            panic!()
        };
        assert!(p.beta.iter().all(|b| b.abs() < 1e-6), "{:?}", p.beta);
    }

    #[test]
    fn recover_params_flags_inconsistent_fit() {
        let (table, u) = dysmenorrhea();
        let me = fit_model(&table, &Model::Me, &u);
        let cs = constraint_oqsf(3, 3, &u, &FSpec::kl()).unwrap();
        assert!(matches!(
            recover_params(&me, &cs, 1),
            Err(Error::Inconsistent(_))
        ));
    }

    #[test]
    fn renormalization_moves_shift_into_psi() {
        let (table, u) = dysmenorrhea();
        let f = fit_model(&table, &Model::OqsF(FSpec::pearson()), &u);
        let Params::Oqs(p) = &f.params else { panic!() };
        let q = p.renormalized(1, &u).unwrap();
        assert_eq!(q.beta[0], 0.0);
        assert_eq!(q.reference_axis, 1);
        // Both parameterizations give the same linear predictor.
        let shape = table.shape();
        let orbits = table.orbits();
        for i in 0..shape.cells() {
            let c = shape.coords(i);
            let eta = |p: &OqsParams| -> f64 {
                c.iter()
                    .zip(&p.beta)
                    .map(|(&ci, b)| b * u.values()[ci])
                    .sum::<f64>()
                    + p.psi[orbits.orbit_id(i)].value
            };
            assert_abs_diff_eq!(eta(p), eta(&q), epsilon = 1e-10);
        }
        assert!(p.renormalized(4, &u).is_err());
    }

    fn synthetic_fit(pi_hat: ProbVector) -> FitResult {
        let m_hat = pi_hat.probs().iter().map(|p| p * 100.0).collect();
        FitResult {
            model: "synthetic".into(),
            pi_hat,
            m_hat,
            params: Params::None,
            g_squared: 0.0,
            df: 0,
            p_value: 1.0,
            log_likelihood: 0.0,
            converged: true,
            iterations: 0,
            max_constraint_residual: 0.0,
            warnings: Vec::new(),
        }
    }

    #[test]
    fn non_convergence_is_reported() {
        let (table, u) = dysmenorrhea();
        let cs = ConstraintSystem::for_model(&Model::OqsF(FSpec::pearson()), 3, 3, &u).unwrap();
        let short = SolverConfig {
            max_iterations: 2,
            ..cfg()
        };
        let f = fit(&table, &cs, &short).unwrap();
        assert!(!f.converged);
        assert!(!f.warnings.is_empty());
        assert_eq!(f.iterations, 2);
    }

    #[test]
    fn config_and_shape_validation() {
        let (table, u) = dysmenorrhea();
        let cs = ConstraintSystem::for_model(&Model::Me, 3, 3, &u).unwrap();
        let bad = SolverConfig {
            update_tol: 0.0,
            ..cfg()
        };
        assert!(fit(&table, &cs, &bad).is_err());
        let other =
            ConstraintSystem::for_model(&Model::Me, 2, 3, &ScoreVector::equal_interval(2)).unwrap();
        assert!(matches!(
            fit(&table, &other, &cfg()),
            Err(Error::ShapeMismatch { .. })
        ));
        let start = ProbVector::new(3, 3, {
            let mut v = vec![1.0 / 26.0; 27];
            v[0] = 0.0;
            v
        })
        .unwrap();
        assert!(fit_from(&table, &cs, &cfg(), &start).is_err());
    }

    #[test]
    fn smoothed_start_formula() {
        let table = Table::new(2, 2, vec![3, 0, 1, 6]).unwrap();
        let p = smoothed_start(&table, 0.5).unwrap();
        assert_abs_diff_eq!(p.probs()[1], 0.5 / 12.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.probs()[3], 6.5 / 12.0, epsilon = 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn fit_invariants_and_likelihood_dominance(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let table = random_table(&mut rng, 3, 3, 8);
            let u = ScoreVector::equal_interval(3);
            let n = table.n() as f64;
            let s = fit_model(&table, &Model::S, &u);
            for model in [Model::OqsF(FSpec::kl()), Model::OqsF(FSpec::pearson()), Model::Me] {
                let f = fit_model(&table, &model, &u);
                prop_assert!(f.converged, "{model}: {:?}", f.warnings);
                prop_assert!((f.m_hat.iter().sum::<f64>() - n).abs() < 1e-8);
                prop_assert!(f.max_constraint_residual < 1e-8);
                prop_assert!(f.g_squared >= 0.0);
                prop_assert!(s.g_squared >= f.g_squared - 1e-8, "{model}: {} < {}", s.g_squared, f.g_squared);
            }
        }
    }
}
