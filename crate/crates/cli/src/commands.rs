use std::time::Instant;

use qemcheck_core::geometry::GeometryError;
use qemcheck_core::identities::{
    catalog, lookup, summarize_pointwise, summarize_sample, CatalogEntry, CheckKind, IdentityError,
};
use qemcheck_core::models::{default_taus, example_structure, make_chart, Family, ModelError, ModelSpec};
use qemcheck_core::quadrature::{default_resolution, integral_suite, QuadratureError};
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::report::{Report, RunReport, Skipped, SCHEMA_VERSION};

/// Everything that maps to exit code 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid model: {0}")]
    Model(#[from] ModelError),
    #[error(transparent)]
    Identity(#[from] IdentityError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("{0}")]
    Usage(String),
}

const HYPERBOLIC_NOTE: &str = "hyperbolic λ = −(n−1) − m(u−τ)/u uses the sign fixed by ∇²h = h g \
     for h = cosh(distance to the base point); it coincides with λ solved from the trace";

fn model_spec(config: &RunConfig, n: usize, tau: f64, m_index: usize) -> Result<ModelSpec, CliError> {
    let mut spec = ModelSpec::new(config.family, n, tau, config.m[m_index])
        .with_radius(config.r)
        .with_axis(config.v_axis);
    if let Some(chart) = config.chart {
        spec = spec.with_chart(chart);
    }
    spec.validate()?;
    Ok(spec)
}

fn single_spec(config: &RunConfig) -> Result<ModelSpec, CliError> {
    config.require_single()?;
    let tau = config.tau.as_ref().expect("checked by require_single")[0];
    model_spec(config, config.n[0], tau, 0)
}

fn require_compact(spec: &ModelSpec) -> Result<(), CliError> {
    if make_chart(spec)?.is_compact() {
        return Ok(());
    }
    let reason = if spec.family == Family::Sphere {
        format!("the {} chart does not cover the sphere; use chart = polar", spec.chart)
    } else {
        format!("the {} model is noncompact", spec.family)
    };
    Err(CliError::Usage(format!("integral checks need a compact manifold: {reason}")))
}

/// Runs the selected catalog entries on the example structure of `spec`.
pub fn run_structure(spec: &ModelSpec, ids: &[&str], config: &RunConfig) -> Result<RunReport, CliError> {
    let entries: Vec<&CatalogEntry> = ids.iter().map(|id| lookup(id).expect("suite ids come from the catalog")).collect();
    let integral: Vec<&str> = entries
        .iter()
        .filter(|e| e.kind == CheckKind::Integral)
        .map(|e| e.id)
        .collect();
    if !integral.is_empty() {
        require_compact(spec)?;
    }
    let resolution = match &config.grid {
        Some(grid) if grid.len() != spec.dim => {
            return Err(ConfigError::Value {
                key: "grid".into(),
                reason: format!("{} axes given for dimension {}", grid.len(), spec.dim),
            }
            .into())
        }
        Some(grid) => grid.clone(),
        None => default_resolution(spec.dim),
    };

    let s = example_structure(spec)?;
    let sample = s.chart().sample_points(config.points, config.seed)?;
    let mut run = RunReport::new(spec.clone(), sample.len());
    if spec.family == Family::Hyperbolic {
        run.notes.push(HYPERBOLIC_NOTE.into());
    }
    let mut runnable_integrals = Vec::new();
    for entry in entries {
        if let Some(reason) = entry.inapplicable(&s) {
            run.skipped.push(Skipped {
                id: entry.id.into(),
                reason,
            });
            continue;
        }
        match entry.kind {
            CheckKind::Pointwise => run
                .checks
                .push(summarize_pointwise(entry.id, &s, &sample, &config.tolerances)?),
            CheckKind::Sample => run
                .checks
                .push(summarize_sample(entry.id, &s, &sample, &config.tolerances)?),
            CheckKind::Integral => runnable_integrals.push(entry.id),
        }
    }
    if !integral.is_empty() {
        run.integrals = integral_suite(spec, &resolution, &runnable_integrals, &config.tolerances)?;
    }
    Ok(run.finish())
}

pub fn verify(config: &RunConfig) -> Result<Report, CliError> {
    let start = Instant::now();
    let spec = single_spec(config)?;
    let ids = config.suite.ids(&[CheckKind::Pointwise, CheckKind::Sample]);
    let run = run_structure(&spec, &ids, config)?;
    Ok(Report::new("verify", config.clone(), vec![run], start.elapsed().as_secs_f64()))
}

pub fn integrate(config: &RunConfig) -> Result<Report, CliError> {
    let start = Instant::now();
    let spec = single_spec(config)?;
    require_compact(&spec)?;
    let ids = config.suite.ids(&[CheckKind::Integral]);
    let run = run_structure(&spec, &ids, config)?;
    Ok(Report::new("integrate", config.clone(), vec![run], start.elapsed().as_secs_f64()))
}

/// Every combination of `n`, `m` and `τ`. Without a `tau` key each
/// dimension gets three valid defaults. All combinations are validated
/// before any computation starts.
pub fn scan(config: &RunConfig) -> Result<Report, CliError> {
    let start = Instant::now();
    let mut specs = Vec::new();
    for &n in &config.n {
        let taus = match &config.tau {
            Some(t) => t.clone(),
            None => default_taus(config.family, n, config.r).to_vec(),
        };
        for m_index in 0..config.m.len() {
            for &tau in &taus {
                specs.push(model_spec(config, n, tau, m_index)?);
            }
        }
    }
    let ids = config.suite.ids(&[CheckKind::Pointwise, CheckKind::Sample]);
    if ids.iter().any(|id| lookup(id).is_some_and(|e| e.kind == CheckKind::Integral)) {
        for spec in &specs {
            require_compact(spec)?;
        }
    }
    let runs = specs
        .iter()
        .map(|spec| run_structure(spec, &ids, config))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Report::new("scan", config.clone(), runs, start.elapsed().as_secs_f64()))
}

#[derive(Serialize)]
pub struct CatalogListing {
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub entries: &'static [CatalogEntry],
}

pub fn catalog_json() -> String {
    let listing = CatalogListing {
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION"),
        entries: catalog(),
    };
    let mut text = serde_json::to_string_pretty(&listing).expect("catalog serializes");
    text.push('\n');
    text
}
