//! Report types and their human-readable rendering.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use symfit::simulate::StudyReport;
use symfit::solver::OrbitParam;
use symfit::TestReport;

/// Significance level marked with `*` in human output.
pub const STAR_LEVEL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub input: String,
    /// SHA-256 of the input file, hex encoded.
    pub input_sha256: String,
    pub config: RunConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub models: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub scores: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ref_axis: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fspec: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableInfo {
    #[serde(rename = "T")]
    pub t: usize,
    pub r: usize,
    pub n: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub model: String,
    pub label: String,
    pub g_squared: f64,
    pub df: usize,
    pub p_value: f64,
    pub significant: bool,
    pub converged: bool,
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_axis: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<Vec<OrbitParam>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wald: Option<TestReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wald_error: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalReport {
    /// Restricted model, always S.
    pub model: String,
    /// Conditioning model.
    pub given: String,
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionReport {
    pub fspec: String,
    pub g2_s: f64,
    pub g2_oqs: f64,
    pub g2_me: f64,
    /// `G²(S) − G²(OQS[f])`.
    pub conditional: ConditionalReport,
    /// `G²(S) − G²(OQS[f]) − G²(ME)`.
    pub additivity_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub provenance: Provenance,
    pub table: TableInfo,
    pub fits: Vec<ModelReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub conditional: Vec<ConditionalReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<PartitionReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisSummary {
    pub axis: usize,
    pub name: String,
    pub margin: Vec<u64>,
    pub proportions: Vec<f64>,
    pub moment: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescribeReport {
    pub provenance: Provenance,
    pub table: TableInfo,
    pub orbits: usize,
    pub scores: Vec<f64>,
    pub axes: Vec<AxisSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub provenance: Provenance,
    pub study: StudyReport,
}

fn star(significant: bool) -> &'static str {
    if significant {
        "*"
    } else {
        " "
    }
}

fn joined(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:.2}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn header(out: &mut String, p: &Provenance, t: &TableInfo) {
    let _ = writeln!(out, "{} {}  {}", p.tool, p.version, p.command);
    let _ = writeln!(out, "input   {}", p.input);
    let _ = writeln!(out, "sha256  {}", p.input_sha256);
    let _ = writeln!(out, "T = {}, r = {}, n = {}", t.t, t.r, t.n);
}

impl AnalysisReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        header(&mut out, &self.provenance, &self.table);
        if !self.fits.is_empty() {
            let _ = writeln!(
                out,
                "\n{:<10} {:>9} {:>4} {:>9}",
                "Model", "G2", "df", "p-value"
            );
            for f in &self.fits {
                let _ = writeln!(
                    out,
                    "{:<10} {:>8.2}{} {:>4} {:>9.4}{}",
                    f.label,
                    f.g_squared,
                    star(f.significant),
                    f.df,
                    f.p_value,
                    if f.converged { "" } else { "  (not converged)" }
                );
            }
        }
        let params: Vec<&ModelReport> = self
            .fits
            .iter()
            .filter(|f| f.beta.is_some() || f.delta.is_some())
            .collect();
        if !params.is_empty() {
            let _ = writeln!(out, "\nParameters");
            for f in params {
                if let (Some(beta), Some(axis)) = (&f.beta, f.reference_axis) {
                    let _ = writeln!(
                        out,
                        "{:<10} beta (beta_{axis} = 0): {}",
                        f.label,
                        joined(beta)
                    );
                    if let Some(psi) = &f.psi {
                        let cells: Vec<String> = psi
                            .iter()
                            .map(|p| {
                                let rep: String =
                                    p.representative.iter().map(|c| c.to_string()).collect();
                                format!("{rep}:{:.2}", p.value)
                            })
                            .collect();
                        let _ = writeln!(out, "{:<10} psi: {}", "", cells.join(" "));
                    }
                }
                if let Some(delta) = &f.delta {
                    let _ = writeln!(out, "{:<10} delta: {}", f.label, joined(delta));
                }
            }
        }
        if !self.conditional.is_empty() {
            let _ = writeln!(out, "\nConditional tests");
            for c in &self.conditional {
                render_conditional(&mut out, c);
            }
        }
        if let Some(p) = &self.partition {
            let _ = writeln!(out, "\nPartition (f = {})", p.fspec);
            let _ = writeln!(out, "G2(S)            {:>8.2}", p.g2_s);
            let _ = writeln!(out, "G2(OQS[f])       {:>8.2}", p.g2_oqs);
            let _ = writeln!(out, "G2(ME)           {:>8.2}", p.g2_me);
            render_conditional(&mut out, &p.conditional);
            let _ = writeln!(out, "additivity gap   {:>8.2}", p.additivity_gap);
        }
        let waldish: Vec<&ModelReport> = self
            .fits
            .iter()
            .filter(|f| f.wald.is_some() || f.wald_error.is_some())
            .collect();
        if !waldish.is_empty() {
            let _ = writeln!(out, "\nWald statistics");
            for f in waldish {
                match (&f.wald, &f.wald_error) {
                    (Some(w), _) => {
                        let _ = writeln!(
                            out,
                            "{:<10} {:>8.2}{} {:>4} {:>9.4}",
                            f.label,
                            w.statistic,
                            star(w.p_value < STAR_LEVEL),
                            w.df,
                            w.p_value
                        );
                    }
                    (None, Some(e)) => {
                        let _ = writeln!(out, "{:<10} unavailable: {e}", f.label);
                    }
                    _ => {}
                }
            }
        }
        let _ = writeln!(out, "\n* significant at the 5% level");
        let warnings: Vec<String> = self
            .fits
            .iter()
            .flat_map(|f| f.warnings.iter().map(move |w| format!("{}: {w}", f.label)))
            .collect();
        for w in warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }
}

fn render_conditional(out: &mut String, c: &ConditionalReport) {
    let _ = writeln!(
        out,
        "G2({}|{}) {:>8.2}{} with {} df, p = {:.4}",
        c.model,
        c.given,
        c.statistic,
        star(c.significant),
        c.df,
        c.p_value
    );
}

impl DescribeReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        header(&mut out, &self.provenance, &self.table);
        let _ = writeln!(out, "orbits  {}", self.orbits);
        let _ = writeln!(out, "scores  {}", joined(&self.scores));
        let _ = writeln!(out, "\n{:<8} {:<24} {:>8}", "Axis", "Margin", "Moment");
        for a in &self.axes {
            let margin = a
                .margin
                .iter()
                .map(|m| m.to_string())
                .collect::<Vec<_>>()
                .join(" ");
            let _ = writeln!(out, "{:<8} {:<24} {:>8.2}", a.name, margin, a.moment);
        }
        out
    }
}

impl SimulationReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let p = &self.provenance;
        let s = &self.study;
        let _ = writeln!(out, "{} {}  {}", p.tool, p.version, p.command);
        let _ = writeln!(out, "input   {}", p.input);
        let _ = writeln!(out, "sha256  {}", p.input_sha256);
        let _ = writeln!(out, "study   {:?}, f = {}", s.study, s.fspec);
        for sum in &s.summaries {
            let _ = writeln!(
                out,
                "\nn = {}, R = {}, seed = {}, failures = {} ({:.1}%)",
                sum.n,
                sum.replications,
                sum.seed,
                sum.failures.total(),
                100.0 * sum.failure_rate
            );
            let _ = writeln!(
                out,
                "{:<12} {:>4} {:>9} {:>9} {:>8} {:>7}",
                "statistic", "df", "mean", "variance", "reject", "se"
            );
            for st in &sum.stats {
                let _ = writeln!(
                    out,
                    "{:<12} {:>4} {:>9.2} {:>9.2} {:>8.3} {:>7.3}",
                    st.name, st.df, st.mean, st.variance, st.rejection_rate, st.rejection_se
                );
            }
            if let (Some(m), Some(se)) = (sum.additivity_residual, sum.additivity_residual_se) {
                let _ = writeln!(
                    out,
                    "mean |G2(S) - G2(OQS[f]) - G2(ME)| = {m:.4} (se {se:.4})"
                );
            }
        }
        if let Some(d) = s.residual_decreasing {
            let _ = writeln!(out, "\nresidual decreasing across n: {d}");
        }
        let _ = writeln!(out, "valid: {}", s.valid);
        out
    }
}
