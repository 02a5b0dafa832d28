//! Likelihood-ratio, Wald and conditional test statistics.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ConstraintSystem;
use crate::solver::FitResult;
use crate::table::Table;

/// Condition numbers above this are reported alongside a Wald statistic.
pub const CONDITION_WARN: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StatisticKind {
    LikelihoodRatio,
    Wald,
    Conditional,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub kind: StatisticKind,
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    /// Condition number of `HΣHᵀ` when it exceeds [`CONDITION_WARN`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<f64>,
}

impl TestReport {
    pub fn new(kind: StatisticKind, statistic: f64, df: usize) -> Result<Self> {
        Ok(Self {
            kind,
            statistic,
            df,
            p_value: p_value(statistic, df)?,
            condition: None,
        })
    }

    pub fn rejected_at(&self, level: f64) -> bool {
        self.p_value < level
    }
}

/// `G² = 2 Σ n_i log(n_i / m̂_i)`, with empty cells contributing zero.
pub fn g_squared(table: &Table, m_hat: &[f64]) -> Result<f64> {
    let counts = table.counts();
    if m_hat.len() != counts.len() {
        return Err(Error::ShapeMismatch {
            expected: counts.len(),
            got: m_hat.len(),
        });
    }
    let shape = table.shape();
    let mut g2 = 0.0;
    for (idx, (&n, &m)) in counts.iter().zip(m_hat).enumerate() {
        if n == 0 {
            continue;
        }
        if !(m > 0.0) {
            return Err(Error::InfiniteStatistic {
                cell: shape.coords(idx).iter().map(|c| c + 1).collect(),
                observed: n,
            });
        }
        let n = n as f64;
        g2 += n * (n / m).ln();
    }
    // Rounding can leave a saturated fit a hair below zero.
    Ok((2.0 * g2).max(0.0))
}

/// Multinomial covariance `Σ(p) = D(p) − p pᵀ`.
pub fn multinomial_covariance(p: &[f64]) -> DMatrix<f64> {
    let v = DVector::from_column_slice(p);
    DMatrix::from_diagonal(&v) - &v * v.transpose()
}

/// `H Σ(p) Hᵀ` for a `d × N` Jacobian, without forming `Σ`.
pub fn constraint_covariance(jac: &DMatrix<f64>, p: &[f64]) -> DMatrix<f64> {
    let pv = DVector::from_column_slice(p);
    let hp = jac * &pv;
    let mut scaled = jac.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= p[j];
    }
    &scaled * jac.transpose() - &hp * hp.transpose()
}

/// Wald statistic `Δ = n h(p)ᵀ (H Σ Hᵀ)^{-1} h(p)` at the sample proportions.
pub fn wald_delta(table: &Table, cs: &ConstraintSystem) -> Result<TestReport> {
    wald_delta_at(table.proportions().probs(), table.n() as f64, cs)
}

/// Wald statistic at an arbitrary probability vector `p` with sample size `n`.
pub fn wald_delta_at(p: &[f64], n: f64, cs: &ConstraintSystem) -> Result<TestReport> {
    let d = cs.dim();
    if d == 0 {
        return TestReport::new(StatisticKind::Wald, 0.0, 0);
    }
    let h = cs.eval(p)?;
    let jac = cs.jacobian(p)?;
    let v = constraint_covariance(&jac, p);

    let eig = v.clone().symmetric_eigen();
    let (mut imin, mut imax) = (0, 0);
    for (i, &e) in eig.eigenvalues.iter().enumerate() {
        if e < eig.eigenvalues[imin] {
            imin = i;
        }
        if e > eig.eigenvalues[imax] {
            imax = i;
        }
    }
    let (lmin, lmax) = (eig.eigenvalues[imin], eig.eigenvalues[imax]);
    let condition = if lmin > 0.0 {
        lmax / lmin
    } else {
        f64::INFINITY
    };
    if !(lmax > 0.0) || lmin <= 1e-14 * lmax {
        let direction = eig.eigenvectors.column(imin).iamax();
        return Err(Error::Singular {
            direction: direction + 1,
            condition,
        });
    }

    let x = v.full_piv_lu().solve(&h).ok_or(Error::Singular {
        direction: 1,
        condition,
    })?;
    let delta = (n * h.dot(&x)).max(0.0);
    let mut report = TestReport::new(StatisticKind::Wald, delta, d)?;
    if condition > CONDITION_WARN {
        report.condition = Some(condition);
    }
    Ok(report)
}

/// `G²(S) − G²(M)` for a model M implied by S, on `df(S) − df(M)` df.
pub fn conditional_test(fit_s: &FitResult, fit_sub: &FitResult) -> Result<TestReport> {
    if fit_s.pi_hat.shape() != fit_sub.pi_hat.shape() {
        return Err(Error::ShapeMismatch {
            expected: fit_s.pi_hat.probs().len(),
            got: fit_sub.pi_hat.probs().len(),
        });
    }
    if fit_sub.df > fit_s.df {
        return Err(Error::Config(format!(
            "conditioning model has more df ({}) than the restricted model ({})",
            fit_sub.df, fit_s.df
        )));
    }
    let stat = fit_s.g_squared - fit_sub.g_squared;
    if stat < -1e-8 {
        return Err(Error::NestingViolation(stat));
    }
    TestReport::new(
        StatisticKind::Conditional,
        stat.max(0.0),
        fit_s.df - fit_sub.df,
    )
}

/// Upper tail of the chi-squared distribution.
pub fn chisq_sf(x: f64, df: usize) -> Result<f64> {
    if df == 0 {
        return Err(Error::Config("chi-squared df must be at least 1".into()));
    }
    if x.is_nan() {
        return Err(Error::Config("chi-squared argument is NaN".into()));
    }
    if x <= 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    statrs::function::gamma::checked_gamma_ur(df as f64 / 2.0, x / 2.0)
        .map_err(|e| Error::Config(format!("incomplete gamma: {e}")))
}

/// p-value with the degenerate zero-df case mapped to 1.
pub fn p_value(statistic: f64, df: usize) -> Result<f64> {
    if df == 0 {
        Ok(1.0)
    } else {
        chisq_sf(statistic, df)
    }
}
