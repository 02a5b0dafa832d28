//! Models as differentiable constraint systems `h(π) = 0`.
//!
//! Every model here is the zero set of a map `h` from cell vectors to `R^d`
//! with an analytic Jacobian. `d` is the model's degrees of freedom.
//!
//! | tag          | model                         | constraint form                          |
//! |--------------|-------------------------------|------------------------------------------|
//! | `s`          | complete symmetry             | `π_j − π_rep` for non-representatives    |
//! | `qs`         | quasi-symmetry                | `U_QSᵀ log(π / π^S)`                     |
//! | `oqs`        | ordinal quasi-symmetry (KL)   | `Uᵀ F(π / π^S)`, `F(x) = 1 + log x`      |
//! | `poqs`       | Pearsonian OQS                | `Uᵀ F(π / π^S)`, `F(x) = 2x − 2`         |
//! | `oqsf:<f>`   | OQS[f] for a named generator  | `Uᵀ F(π / π^S)`                          |
//! | `mh`         | marginal homogeneity          | `Pr(X_t = j) − Pr(X_1 = j)`              |
//! | `me`         | marginal moment equality      | `W π`                                    |
//! | `ml`         | marginal logistic             | parallel cumulative logits               |
//!
//! Constraint maps are evaluated on raw cell vectors. The transform-based
//! constraints are scale invariant; the linear ones are not, and the solver
//! always evaluates them at normalized points.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::divergence::FSpec;
use crate::error::{Error, Result};
use crate::table::{OrbitSet, ProbVector, ScoreVector, Shape};

/// Relative singular-value cutoff for rank decisions.
pub const RANK_CUTOFF: f64 = 1e-10;

/// A model of the symmetry family.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    S,
    Qs,
    OqsF(FSpec),
    Mh,
    Me,
    Ml,
}

impl Model {
    /// Parses a command-line model tag.
    pub fn parse(tag: &str) -> Result<Self> {
        let lower = tag.trim().to_ascii_lowercase();
        match lower.as_str() {
            "s" => Ok(Self::S),
            "qs" => Ok(Self::Qs),
            "oqs" => Ok(Self::OqsF(FSpec::kl())),
            "poqs" => Ok(Self::OqsF(FSpec::pearson())),
            "mh" => Ok(Self::Mh),
            "me" => Ok(Self::Me),
            "ml" => Ok(Self::Ml),
            _ => match lower.strip_prefix("oqsf:") {
                Some(name) => FSpec::builtin(name)
                    .map(Self::OqsF)
                    .map_err(|_| Error::UnknownModel(tag.to_string())),
                None => Err(Error::UnknownModel(tag.to_string())),
            },
        }
    }

    pub fn oqs(spec: FSpec) -> Self {
        Self::OqsF(spec)
    }

    /// Canonical tag, accepted by [`Model::parse`].
    pub fn tag(&self) -> String {
        match self {
            Self::S => "s".into(),
            Self::Qs => "qs".into(),
            Self::OqsF(spec) => match spec.name.as_str() {
                "kl" => "oqs".into(),
                "pearson" => "poqs".into(),
                other => format!("oqsf:{other}"),
            },
            Self::Mh => "mh".into(),
            Self::Me => "me".into(),
            Self::Ml => "ml".into(),
        }
    }

    pub fn spec(&self) -> Option<&FSpec> {
        match self {
            Self::OqsF(spec) => Some(spec),
            _ => None,
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::S => write!(f, "S"),
            Self::Qs => write!(f, "QS"),
            Self::OqsF(spec) => match spec.name.as_str() {
                "kl" => write!(f, "OQS"),
                "pearson" => write!(f, "POQS"),
                other => write!(f, "OQS[{other}]"),
            },
            Self::Mh => write!(f, "MH"),
            Self::Me => write!(f, "ME"),
            Self::Ml => write!(f, "ML"),
        }
    }
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Number of permutation orbits of an r^T lattice.
pub fn orbit_count(r: usize, t: usize) -> usize {
    binomial(r + t - 1, t)
}

/// Residual degrees of freedom of `model` on an r^T table.
pub fn degrees_of_freedom(model: &Model, r: usize, t: usize) -> Result<usize> {
    let shape = Shape::new(r, t)?;
    let s = shape.cells() - orbit_count(r, t);
    Ok(match model {
        Model::S => s,
        Model::OqsF(_) => s - (t - 1),
        Model::Me => t - 1,
        Model::Mh => (t - 1) * (r - 1),
        Model::Ml => (t - 1) * (r - 2),
        Model::Qs => s - (t - 1) * (r - 1),
    })
}

/// The OQS[f] design `X = (x_1, …, x_{T−1}, X_sym)`.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    pub shape: Shape,
    pub scores: ScoreVector,
    /// `r^T × K`. Score columns first, then one indicator column per orbit.
    pub x: DMatrix<f64>,
    pub score_cols: usize,
}

impl DesignMatrix {
    pub fn k(&self) -> usize {
        self.x.ncols()
    }

    /// The score block `(x_1, …, x_{T−1})`.
    pub fn score_block(&self) -> DMatrix<f64> {
        self.x.columns(0, self.score_cols).into_owned()
    }

    /// The orbit-indicator block `X_sym`.
    pub fn orbit_block(&self) -> DMatrix<f64> {
        self.x
            .columns(self.score_cols, self.x.ncols() - self.score_cols)
            .into_owned()
    }
}

fn check_scores(shape: Shape, u: &ScoreVector) -> Result<()> {
    if u.len() != shape.r {
        return Err(Error::InvalidScores(format!(
            "expected {} scores, got {}",
            shape.r,
            u.len()
        )));
    }
    Ok(())
}

fn orbit_indicators(orbits: &OrbitSet) -> DMatrix<f64> {
    let n = orbits.shape().cells();
    let mut m = DMatrix::zeros(n, orbits.len());
    for i in 0..n {
        m[(i, orbits.orbit_id(i))] = 1.0;
    }
    m
}

/// Score contrast matrix: row `t` holds `u_{i_t} − u_{i_T}` for each cell.
fn score_contrasts(shape: Shape, u: &ScoreVector) -> DMatrix<f64> {
    let n = shape.cells();
    let uv = u.values();
    DMatrix::from_fn(shape.t - 1, n, |t, i| {
        let c = shape.coords(i);
        uv[c[t]] - uv[c[shape.t - 1]]
    })
}

pub fn build_design(r: usize, t: usize, u: &ScoreVector) -> Result<DesignMatrix> {
    let shape = Shape::new(r, t)?;
    check_scores(shape, u)?;
    let orbits = OrbitSet::shared(shape);
    let contrasts = score_contrasts(shape, u);
    let ind = orbit_indicators(&orbits);
    let n = shape.cells();
    let score_cols = t - 1;
    let x = DMatrix::from_fn(n, score_cols + orbits.len(), |i, j| {
        if j < score_cols {
            contrasts[(j, i)]
        } else {
            ind[(i, j - score_cols)]
        }
    });
    Ok(DesignMatrix {
        shape,
        scores: u.clone(),
        x,
        score_cols,
    })
}

/// The quasi-symmetry design: category indicators `[i_t = j]` for
/// `t < T`, `j < r`, followed by the orbit indicators.
pub fn qs_design(r: usize, t: usize) -> Result<DMatrix<f64>> {
    let shape = Shape::new(r, t)?;
    let orbits = OrbitSet::shared(shape);
    let ind = orbit_indicators(&orbits);
    let main = (t - 1) * (r - 1);
    Ok(DMatrix::from_fn(
        shape.cells(),
        main + orbits.len(),
        |i, j| {
            if j < main {
                let (axis, cat) = (j / (r - 1), j % (r - 1));
                f64::from(u8::from(shape.coords(i)[axis] == cat))
            } else {
                ind[(i, j - main)]
            }
        },
    ))
}

/// Orthonormal basis of the orthogonal complement of a column space.
#[derive(Debug, Clone)]
pub struct Orthocomplement {
    /// `r^T × d₁`.
    pub u: DMatrix<f64>,
}

impl Orthocomplement {
    pub fn dim(&self) -> usize {
        self.u.ncols()
    }
}

pub fn orthocomplement(x: &DesignMatrix) -> Result<Orthocomplement> {
    orthocomplement_of(&x.x)
}

/// Basis of `span(x)^⊥` from an SVD rank decision followed by an
/// eigendecomposition of the complementary projector.
pub fn orthocomplement_of(x: &DMatrix<f64>) -> Result<Orthocomplement> {
    let (n, k) = x.shape();
    if k == 0 {
        return Ok(Orthocomplement {
            u: DMatrix::identity(n, n),
        });
    }
    let svd = x.clone().svd(true, false);
    let sv = &svd.singular_values;
    let smax = sv.max();
    let rank = sv.iter().filter(|&&s| s > RANK_CUTOFF * smax).count();
    if rank < k {
        return Err(Error::RankDeficient { rank, cols: k });
    }
    let d = n - rank;
    if d == 0 {
        return Ok(Orthocomplement {
            u: DMatrix::zeros(n, 0),
        });
    }
    let q = svd.u.expect("left singular vectors requested");
    let mut basis = DMatrix::zeros(n, rank);
    let mut col = 0;
    for (j, &s) in sv.iter().enumerate() {
        if s > RANK_CUTOFF * smax {
            basis.set_column(col, &q.column(j));
            col += 1;
        }
    }
    let projector = DMatrix::identity(n, n) - &basis * basis.transpose();
    let eig = projector.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut u = DMatrix::zeros(n, d);
    for (c, &j) in order.iter().take(d).enumerate() {
        u.set_column(c, &eig.eigenvectors.column(j));
    }
    Ok(Orthocomplement { u })
}

/// How a fitted solution decodes to model parameters.
#[derive(Debug, Clone)]
pub enum ParamLayout {
    None,
    /// `F(π/π^S) = Xθ`; `θ = (β_1, …, β_{T−1}, ψ_orbit…)` with `β_T = 0`.
    Oqs {
        design: Arc<DesignMatrix>,
    },
    /// Occasion shifts `δ_{t−1}` of the marginal cumulative logits.
    Ml,
}

#[derive(Debug, Clone)]
enum Body {
    /// `h(π) = A π`.
    Linear(DMatrix<f64>),
    /// `h(π) = Bᵀ F(π / π^S)` for an orthonormal basis `B` of a design complement.
    Transform {
        basis: DMatrix<f64>,
        spec: FSpec,
    },
    /// Parallel cumulative logits across axes.
    Logit,
    Stack(Vec<ConstraintSystem>),
}

/// A model represented as `{π : h(π) = 0}`.
#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    label: String,
    shape: Shape,
    dim: usize,
    body: Body,
    params: ParamLayout,
}

impl ConstraintSystem {
    /// Builds the constraint system of `model` with scores `u`.
    pub fn for_model(model: &Model, r: usize, t: usize, u: &ScoreVector) -> Result<Self> {
        match model {
            Model::S => constraint_s(r, t),
            Model::Qs => constraint_qs(r, t),
            Model::OqsF(spec) => constraint_oqsf(r, t, u, spec),
            Model::Mh => constraint_mh(r, t),
            Model::Me => constraint_me(r, t, u),
            Model::Ml => constraint_ml(r, t),
        }
    }

    /// Joint system imposing every part simultaneously.
    pub fn stack(label: impl Into<String>, parts: Vec<ConstraintSystem>) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Config("cannot stack zero constraint systems".into()))?;
        let shape = first.shape;
        if let Some(bad) = parts.iter().find(|p| p.shape != shape) {
            return Err(Error::ShapeMismatch {
                expected: shape.cells(),
                got: bad.shape.cells(),
            });
        }
        Ok(Self {
            label: label.into(),
            shape,
            dim: parts.iter().map(|p| p.dim).sum(),
            body: Body::Stack(parts),
            params: ParamLayout::None,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &ParamLayout {
        &self.params
    }

    /// The transform generator, for OQS[f] and QS systems.
    pub fn spec(&self) -> Option<&FSpec> {
        match &self.body {
            Body::Transform { spec, .. } => Some(spec),
            _ => None,
        }
    }

    /// Same model with the orthocomplement basis replaced by `basis`,
    /// which must span the same space (used to check basis invariance).
    pub fn with_basis(&self, basis: DMatrix<f64>) -> Result<Self> {
        match &self.body {
            Body::Transform { basis: old, spec } => {
                if basis.shape() != old.shape() {
                    return Err(Error::ShapeMismatch {
                        expected: old.ncols(),
                        got: basis.ncols(),
                    });
                }
                Ok(Self {
                    body: Body::Transform {
                        basis,
                        spec: spec.clone(),
                    },
                    ..self.clone()
                })
            }
            _ => Err(Error::Config(format!(
                "`{}` has no orthocomplement basis",
                self.label
            ))),
        }
    }

    /// The orthocomplement basis of a transform system.
    pub fn basis(&self) -> Option<&DMatrix<f64>> {
        match &self.body {
            Body::Transform { basis, .. } => Some(basis),
            _ => None,
        }
    }

    fn check_len(&self, pi: &[f64]) -> Result<()> {
        if pi.len() != self.shape.cells() {
            return Err(Error::ShapeMismatch {
                expected: self.shape.cells(),
                got: pi.len(),
            });
        }
        Ok(())
    }

    /// `h(π)`.
    pub fn eval(&self, pi: &[f64]) -> Result<DVector<f64>> {
        self.check_len(pi)?;
        match &self.body {
            Body::Linear(a) => Ok(a * DVector::from_column_slice(pi)),
            Body::Transform { basis, spec } => {
                let (values, _) = transform_values(self.shape, pi, spec, false)?;
                Ok(basis.tr_mul(&values))
            }
            Body::Logit => logit_eval(self.shape, pi),
            Body::Stack(parts) => {
                let mut out = Vec::with_capacity(self.dim);
                for p in parts {
                    out.extend(p.eval(pi)?.iter());
                }
                Ok(DVector::from_vec(out))
            }
        }
    }

    pub fn eval_prob(&self, p: &ProbVector) -> Result<DVector<f64>> {
        self.eval(p.probs())
    }

    /// `∂h/∂πᵀ`, a `d × r^T` matrix.
    pub fn jacobian(&self, pi: &[f64]) -> Result<DMatrix<f64>> {
        self.check_len(pi)?;
        match &self.body {
            Body::Linear(a) => Ok(a.clone()),
            Body::Transform { basis, spec } => transform_jacobian(self.shape, pi, spec, basis),
            Body::Logit => logit_jacobian(self.shape, pi),
            Body::Stack(parts) => {
                let n = self.shape.cells();
                let mut out = DMatrix::zeros(self.dim, n);
                let mut row = 0;
                for p in parts {
                    let j = p.jacobian(pi)?;
                    out.rows_mut(row, p.dim).copy_from(&j);
                    row += p.dim;
                }
                Ok(out)
            }
        }
    }

    /// Whether the map is linear in `π`.
    pub fn is_linear(&self) -> bool {
        match &self.body {
            Body::Linear(_) => true,
            Body::Stack(parts) => parts.iter().all(ConstraintSystem::is_linear),
            _ => false,
        }
    }
}

fn cell_error(shape: Shape, idx: usize, reason: impl Into<String>) -> Error {
    Error::Domain {
        cell: shape.coords(idx).iter().map(|c| c + 1).collect(),
        reason: reason.into(),
    }
}

/// Ratios `π_i / π^S_i` (= `#A(i) π^c_i`) and, optionally, conditional
/// probabilities `π^c_i`. Returns `(F(ratio), conditional)`.
fn transform_values(
    shape: Shape,
    pi: &[f64],
    spec: &FSpec,
    want_conditional: bool,
) -> Result<(DVector<f64>, Vec<f64>)> {
    let orbits = OrbitSet::shared(shape);
    let totals = orbits.orbit_totals(pi);
    let n = shape.cells();
    let mut values = DVector::zeros(n);
    let mut cond = if want_conditional {
        vec![0.0; n]
    } else {
        Vec::new()
    };
    for i in 0..n {
        let id = orbits.orbit_id(i);
        let total = totals[id];
        if !(total > 0.0) {
            return Err(cell_error(shape, i, "orbit total is zero"));
        }
        let size = orbits.orbits()[id].members.len();
        let c = if size == 1 { 1.0 } else { pi[i] / total };
        let v = spec.deriv(size as f64 * c);
        if !v.is_finite() {
            return Err(cell_error(
                shape,
                i,
                format!("F({}) is not finite", size as f64 * c),
            ));
        }
        values[i] = v;
        if want_conditional {
            cond[i] = c;
        }
    }
    Ok((values, cond))
}

fn transform_jacobian(
    shape: Shape,
    pi: &[f64],
    spec: &FSpec,
    basis: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let orbits = OrbitSet::shared(shape);
    let (_, cond) = transform_values(shape, pi, spec, true)?;
    let totals = orbits.orbit_totals(pi);
    let d = basis.ncols();
    let mut jac = DMatrix::zeros(d, shape.cells());
    for (id, orbit) in orbits.orbits().iter().enumerate() {
        let size = orbit.members.len();
        if size == 1 {
            // F(π/π^S) ≡ F(1) on singleton orbits.
            continue;
        }
        let pis = totals[id] / size as f64;
        // g[a] = F'(ratio_a) / π^S for each member a.
        let g: Vec<f64> = orbit
            .members
            .iter()
            .map(|&a| spec.deriv_prime(size as f64 * cond[a]) / pis)
            .collect();
        for &j in &orbit.members {
            for k in 0..d {
                let mut acc = 0.0;
                for (ai, &a) in orbit.members.iter().enumerate() {
                    let dij = if a == j {
                        g[ai] * (1.0 - cond[a])
                    } else {
                        -g[ai] * cond[a]
                    };
                    acc += basis[(a, k)] * dij;
                }
                jac[(k, j)] = acc;
            }
        }
    }
    Ok(jac)
}

/// Cumulative marginals `F_i^{(t)} = Pr(X_t ≤ i)` for `i < r`, indexed `[t][i]`.
fn cumulative_marginals(shape: Shape, pi: &[f64]) -> Vec<Vec<f64>> {
    (1..=shape.t)
        .map(|axis| {
            let m = crate::table::marginal_sums(shape, pi, axis);
            m.iter()
                .take(shape.r - 1)
                .scan(0.0, |acc, v| {
                    *acc += v;
                    Some(*acc)
                })
                .collect()
        })
        .collect()
}

fn logits(shape: Shape, pi: &[f64]) -> Result<Vec<Vec<f64>>> {
    cumulative_marginals(shape, pi)
        .into_iter()
        .enumerate()
        .map(|(t, row)| {
            row.into_iter()
                .enumerate()
                .map(|(i, f)| {
                    if f > 0.0 && f < 1.0 {
                        Ok((f / (1.0 - f)).ln())
                    } else {
                        Err(Error::LogitDomain {
                            axis: t + 1,
                            category: i + 1,
                            value: f,
                        })
                    }
                })
                .collect()
        })
        .collect()
}

fn logit_eval(shape: Shape, pi: &[f64]) -> Result<DVector<f64>> {
    let l = logits(shape, pi)?;
    let mut out = Vec::with_capacity((shape.t - 1) * shape.r.saturating_sub(2));
    for t in 1..shape.t {
        for i in 1..shape.r - 1 {
            out.push((l[t][i] - l[0][i]) - (l[t][0] - l[0][0]));
        }
    }
    Ok(DVector::from_vec(out))
}

fn logit_jacobian(shape: Shape, pi: &[f64]) -> Result<DMatrix<f64>> {
    logits(shape, pi)?;
    let cum = cumulative_marginals(shape, pi);
    let n = shape.cells();
    let rows = (shape.t - 1) * (shape.r - 2);
    let mut jac = DMatrix::zeros(rows, n);
    // d logit F_i^{(t)} / dπ_c = [c_t ≤ i] / (F (1 − F))
    let dlogit = |t: usize, i: usize, c: &[usize]| -> f64 {
        if c[t] <= i {
            let f = cum[t][i];
            1.0 / (f * (1.0 - f))
        } else {
            0.0
        }
    };
    for cell in 0..n {
        let c = shape.coords(cell);
        let mut row = 0;
        for t in 1..shape.t {
            for i in 1..shape.r - 1 {
                jac[(row, cell)] =
                    dlogit(t, i, &c) - dlogit(0, i, &c) - dlogit(t, 0, &c) + dlogit(0, 0, &c);
                row += 1;
            }
        }
    }
    Ok(jac)
}

/// Occasion shifts `δ_{t−1} = logit F_i^{(1)} − logit F_i^{(t)}`, averaged over `i`.
pub fn ml_shifts(shape: Shape, pi: &[f64]) -> Result<Vec<f64>> {
    let l = logits(shape, pi)?;
    let cats = (shape.r - 1) as f64;
    Ok((1..shape.t)
        .map(|t| (0..shape.r - 1).map(|i| l[0][i] - l[t][i]).sum::<f64>() / cats)
        .collect())
}

pub fn constraint_oqsf(
    r: usize,
    t: usize,
    u: &ScoreVector,
    spec: &FSpec,
) -> Result<ConstraintSystem> {
    let design = build_design(r, t, u)?;
    let basis = orthocomplement(&design)?.u;
    Ok(ConstraintSystem {
        label: Model::OqsF(spec.clone()).tag(),
        shape: design.shape,
        dim: basis.ncols(),
        body: Body::Transform {
            basis,
            spec: spec.clone(),
        },
        params: ParamLayout::Oqs {
            design: Arc::new(design),
        },
    })
}

pub fn constraint_qs(r: usize, t: usize) -> Result<ConstraintSystem> {
    let shape = Shape::new(r, t)?;
    let basis = orthocomplement_of(&qs_design(r, t)?)?.u;
    Ok(ConstraintSystem {
        label: "qs".into(),
        shape,
        dim: basis.ncols(),
        body: Body::Transform {
            basis,
            spec: FSpec::kl(),
        },
        params: ParamLayout::None,
    })
}

/// `W π = 0` with `W = (x_1, …, x_{T−1})ᵀ`.
pub fn constraint_me(r: usize, t: usize, u: &ScoreVector) -> Result<ConstraintSystem> {
    let shape = Shape::new(r, t)?;
    check_scores(shape, u)?;
    Ok(linear("me", shape, score_contrasts(shape, u)))
}

pub fn constraint_mh(r: usize, t: usize) -> Result<ConstraintSystem> {
    let shape = Shape::new(r, t)?;
    let n = shape.cells();
    let rows = (t - 1) * (r - 1);
    let a = DMatrix::from_fn(rows, n, |row, cell| {
        let (axis, cat) = (1 + row / (r - 1), row % (r - 1));
        let c = shape.coords(cell);
        f64::from(u8::from(c[axis] == cat)) - f64::from(u8::from(c[0] == cat))
    });
    Ok(linear("mh", shape, a))
}

pub fn constraint_s(r: usize, t: usize) -> Result<ConstraintSystem> {
    let shape = Shape::new(r, t)?;
    let orbits = OrbitSet::shared(shape);
    let n = shape.cells();
    let d = n - orbits.len();
    let mut a = DMatrix::zeros(d, n);
    let mut row = 0;
    for orbit in orbits.orbits() {
        let rep = orbit.members[0];
        for &j in &orbit.members[1..] {
            a[(row, j)] = 1.0;
            a[(row, rep)] = -1.0;
            row += 1;
        }
    }
    Ok(linear("s", shape, a))
}

pub fn constraint_ml(r: usize, t: usize) -> Result<ConstraintSystem> {
    let shape = Shape::new(r, t)?;
    Ok(ConstraintSystem {
        label: "ml".into(),
        shape,
        dim: (t - 1) * (r - 2),
        body: Body::Logit,
        params: ParamLayout::Ml,
    })
}

fn linear(label: &str, shape: Shape, a: DMatrix<f64>) -> ConstraintSystem {
    ConstraintSystem {
        label: label.into(),
        shape,
        dim: a.nrows(),
        body: Body::Linear(a),
        params: ParamLayout::None,
    }
}

/// `F(π_i / π^S_i)` for every cell.
pub fn transformed_ratios(shape: Shape, pi: &[f64], spec: &FSpec) -> Result<DVector<f64>> {
    Ok(transform_values(shape, pi, spec, false)?.0)
}
