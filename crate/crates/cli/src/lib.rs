//! Command-line front end for symfit.
//!
//! Every command produces a report that renders either as a human-readable
//! summary (statistics rounded to two decimals, `*` at the 5% level) or as
//! JSON at full precision.

pub mod args;
pub mod error;
pub mod report;

use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};
use symfit::simulate::{run_study, StudyFile};
use symfit::table::{marginal_dist, marginal_moment};
use symfit::{
    conditional_test, degrees_of_freedom, fit, wald_delta, ConstraintSystem, FSpec, FitResult,
    Model, Params, ScoreVector, SolverConfig, Table, TableDocument,
};

use crate::args::{
    Cli, Command, DescribeArgs, FitArgs, Format, Output, PartitionArgs, SimulateArgs, TableInput,
};
use crate::error::{CliError, Result};
use crate::report::{
    AnalysisReport, AxisSummary, ConditionalReport, DescribeReport, ModelReport, PartitionReport,
    Provenance, RunConfig, SimulationReport, TableInfo, STAR_LEVEL,
};

/// Rendered output and a failure to report after it has been written.
pub struct Outcome {
    pub text: String,
    pub out: Option<std::path::PathBuf>,
    pub status: Option<CliError>,
}

pub fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Partition(a) => cmd_partition(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Describe(a) => cmd_describe(a),
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn provenance(command: &str, input: &Path, bytes: &[u8], config: RunConfig) -> Provenance {
    Provenance {
        tool: "symfit".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        input: input.display().to_string(),
        input_sha256: digest(bytes),
        config,
    }
}

struct Loaded {
    doc: TableDocument,
    scores: ScoreVector,
    bytes: Vec<u8>,
}

fn load(input: &TableInput) -> Result<Loaded> {
    let bytes = read(&input.input)?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| CliError::Input(format!("{}: not UTF-8", input.input.display())))?;
    let doc = TableDocument::parse(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", input.input.display())))?;
    let scores = match input.scores.as_deref() {
        None => doc.scores_or_default(),
        Some("equal") => ScoreVector::equal_interval(doc.table.r()),
        Some(path) => parse_scores(Path::new(path), doc.table.r())?,
    };
    Ok(Loaded { doc, scores, bytes })
}

fn parse_scores(path: &Path, r: usize) -> Result<ScoreVector> {
    let text = String::from_utf8(read(path)?)
        .map_err(|_| CliError::Input(format!("{}: not UTF-8", path.display())))?;
    let values = text
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| CliError::Input(format!("{}: `{s}` is not a score", path.display())))
        })
        .collect::<Result<Vec<_>>>()?;
    if values.len() != r {
        return Err(CliError::Input(format!(
            "{}: {} scores, expected r = {r}",
            path.display(),
            values.len()
        )));
    }
    ScoreVector::new(values).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn table_info(t: &Table) -> TableInfo {
    TableInfo {
        t: t.t(),
        r: t.r(),
        n: t.n(),
    }
}

fn emit<T: Serialize>(output: &Output, report: &T, human: impl FnOnce() -> String) -> String {
    match output.format {
        Format::Human => human(),
        Format::Machine => {
            let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
            s.push('\n');
            s
        }
    }
}

fn fit_one(
    table: &Table,
    model: &Model,
    scores: &ScoreVector,
    ref_axis: usize,
) -> Result<(FitResult, ModelReport)> {
    let cs = ConstraintSystem::for_model(model, table.r(), table.t(), scores)?;
    let f = fit(table, &cs, &SolverConfig::default())?;
    let expected_df = degrees_of_freedom(model, table.r(), table.t())?;
    debug_assert_eq!(f.df, expected_df);
    let (beta, reference_axis, psi, delta) = match &f.params {
        Params::Oqs(p) => {
            let p = p.renormalized(ref_axis, scores)?;
            (Some(p.beta), Some(ref_axis), Some(p.psi), None)
        }
        Params::Ml { delta } => (None, None, None, Some(delta.clone())),
        Params::None => (None, None, None, None),
    };
    let (wald, wald_error) = match wald_delta(table, &cs) {
        Ok(w) => (Some(w), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let report = ModelReport {
        model: model.tag(),
        label: model.to_string(),
        g_squared: f.g_squared,
        df: f.df,
        p_value: f.p_value,
        significant: f.p_value < STAR_LEVEL,
        converged: f.converged,
        iterations: f.iterations,
        beta,
        reference_axis,
        psi,
        delta,
        wald,
        wald_error,
        warnings: f.warnings.clone(),
    };
    Ok((f, report))
}

fn conditional_report(s: &FitResult, sub: &FitResult, given: &Model) -> Result<ConditionalReport> {
    let c = conditional_test(s, sub).map_err(|e| match e {
        symfit::Error::NestingViolation(_) => CliError::Convergence(format!("G2(S|{given}): {e}")),
        other => other.into(),
    })?;
    Ok(ConditionalReport {
        model: "S".into(),
        given: given.to_string(),
        statistic: c.statistic,
        df: c.df,
        p_value: c.p_value,
        significant: c.p_value < STAR_LEVEL,
    })
}

fn nonconverged(fits: &[ModelReport]) -> Option<CliError> {
    let bad: Vec<&str> = fits
        .iter()
        .filter(|f| !f.converged)
        .map(|f| f.label.as_str())
        .collect();
    (!bad.is_empty())
        .then(|| CliError::Convergence(format!("no convergence for {}", bad.join(", "))))
}

pub fn cmd_fit(a: FitArgs) -> Result<Outcome> {
    let loaded = load(&a.table)?;
    let table = &loaded.doc.table;
    if a.ref_axis < 1 || a.ref_axis > table.t() {
        return Err(CliError::Input(format!(
            "--ref-axis {} outside 1..={}",
            a.ref_axis,
            table.t()
        )));
    }
    let models = a
        .models
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(Model::parse)
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if models.is_empty() {
        return Err(CliError::Input("--models lists no models".into()));
    }

    let mut fits = Vec::new();
    let mut reports = Vec::new();
    for m in &models {
        let (f, r) = fit_one(table, m, &loaded.scores, a.ref_axis)?;
        fits.push(f);
        reports.push(r);
    }
    let mut conditional = Vec::new();
    if let Some(si) = models.iter().position(|m| *m == Model::S) {
        for (i, m) in models.iter().enumerate() {
            if i != si && *m != Model::S {
                conditional.push(conditional_report(&fits[si], &fits[i], m)?);
            }
        }
    }
    let report = AnalysisReport {
        provenance: provenance(
            "fit",
            &a.table.input,
            &loaded.bytes,
            RunConfig {
                models: models.iter().map(Model::tag).collect(),
                scores: loaded.scores.values().to_vec(),
                ref_axis: Some(a.ref_axis),
                ..RunConfig::default()
            },
        ),
        table: table_info(table),
        fits: reports,
        conditional,
        partition: None,
    };
    let status = nonconverged(&report.fits);
    Ok(Outcome {
        text: emit(&a.output, &report, || report.render()),
        out: a.output.out,
        status,
    })
}

pub fn cmd_partition(a: PartitionArgs) -> Result<Outcome> {
    let loaded = load(&a.table)?;
    let table = &loaded.doc.table;
    let spec = FSpec::builtin(&a.fspec)?;
    let oqs = Model::OqsF(spec.clone());
    let models = [Model::S, oqs.clone(), Model::Me];
    let mut fits = Vec::new();
    let mut reports = Vec::new();
    for m in &models {
        let (f, r) = fit_one(table, m, &loaded.scores, 1)?;
        fits.push(f);
        reports.push(r);
    }
    let conditional = conditional_report(&fits[0], &fits[1], &oqs)?;
    let partition = PartitionReport {
        fspec: spec.name.clone(),
        g2_s: fits[0].g_squared,
        g2_oqs: fits[1].g_squared,
        g2_me: fits[2].g_squared,
        conditional,
        additivity_gap: fits[0].g_squared - fits[1].g_squared - fits[2].g_squared,
    };
    let report = AnalysisReport {
        provenance: provenance(
            "partition",
            &a.table.input,
            &loaded.bytes,
            RunConfig {
                models: models.iter().map(Model::tag).collect(),
                scores: loaded.scores.values().to_vec(),
                fspec: Some(spec.name.clone()),
                ..RunConfig::default()
            },
        ),
        table: table_info(table),
        fits: reports,
        conditional: Vec::new(),
        partition: Some(partition),
    };
    let status = nonconverged(&report.fits);
    Ok(Outcome {
        text: emit(&a.output, &report, || report.render()),
        out: a.output.out,
        status,
    })
}

pub fn cmd_simulate(a: SimulateArgs) -> Result<Outcome> {
    let bytes = read(&a.input)?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| CliError::Input(format!("{}: not UTF-8", a.input.display())))?;
    let mut file = StudyFile::parse(&text)
        .map_err(|e| CliError::Input(format!("{}: {e}", a.input.display())))?;
    if let Some(seed) = a.seed {
        file.seed = seed;
    }
    let study = run_study(&file, a.input.parent())?;
    let status = (!study.valid).then(|| {
        CliError::Convergence("more than 1% of replicates failed in at least one study".into())
    });
    let report = SimulationReport {
        provenance: provenance(
            "simulate",
            &a.input,
            &bytes,
            RunConfig {
                models: file.models.clone(),
                scores: file.scores.clone().unwrap_or_default(),
                fspec: Some(file.fspec.clone()),
                seed: Some(file.seed),
                ..RunConfig::default()
            },
        ),
        study,
    };
    Ok(Outcome {
        text: emit(&a.output, &report, || report.render()),
        out: a.output.out,
        status,
    })
}

pub fn cmd_describe(a: DescribeArgs) -> Result<Outcome> {
    let loaded = load(&a.table)?;
    let table = &loaded.doc.table;
    let p = table.proportions();
    let shape = table.shape();
    let counts = table.counts();
    let mut axes = Vec::new();
    for axis in 1..=table.t() {
        let stride = shape.r.pow((shape.t - axis) as u32);
        let mut margin = vec![0u64; shape.r];
        for (idx, &c) in counts.iter().enumerate() {
            margin[(idx / stride) % shape.r] += c;
        }
        axes.push(AxisSummary {
            axis,
            name: loaded.doc.axis_name(axis),
            margin,
            proportions: marginal_dist(&p, axis)?,
            moment: marginal_moment(&p, axis, &loaded.scores)?,
        });
    }
    let report = DescribeReport {
        provenance: provenance(
            "describe",
            &a.table.input,
            &loaded.bytes,
            RunConfig {
                scores: loaded.scores.values().to_vec(),
                ..RunConfig::default()
            },
        ),
        table: table_info(table),
        orbits: table.orbits().len(),
        scores: loaded.scores.values().to_vec(),
        axes,
    };
    Ok(Outcome {
        text: emit(&a.output, &report, || report.render()),
        out: a.output.out,
        status: None,
    })
}
