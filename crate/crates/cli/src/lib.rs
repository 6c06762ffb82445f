//! Command-line front end for the `latvol` library: CSV in, plot-ready
//! JSON/CSV out.
//!
//! The binary parses flags into a [`RunConfig`], and [`run`] executes it.
//! Every artifact embeds the fully resolved configuration (defaults filled
//! in), so re-running with the embedded config reproduces the artifact
//! byte for byte.

pub mod args;
pub mod ingest;
pub mod output;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use latvol::inference::{
    conditional_return_density, filter_sequence, fit_ml, forecast_path, smooth, FitOptions,
    GridSpec,
};
use latvol::model::{family, LatentModel, ModelParams, ParamSpec};
use latvol::simulate::{abs_return_acf, acf_power_law_fit, structure_functions};
use latvol::ReturnSeries;

use output::{emit, format_float, CsvTable, Meta};

/// Errors surfaced to the user; the binary prints them as a JSON object on
/// stderr and exits nonzero.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Core(#[from] latvol::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Config(String),
    #[error("input row {row}: {message}")]
    Ingest { row: usize, message: String },
}

/// Machine-readable rendering of an error, written to stderr by the binary.
pub fn error_json(e: &CliError) -> String {
    let kind = match e {
        CliError::Core(_) => "core",
        CliError::Io(_) => "io",
        CliError::Csv(_) => "csv",
        CliError::Json(_) => "json",
        CliError::Config(_) => "config",
        CliError::Ingest { .. } => "ingest",
    };
    serde_json::json!({"error": {"kind": kind, "message": e.to_string()}}).to_string()
}

/// Output format of an artifact.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum,
)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

/// How the value column of an input CSV is interpreted.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum,
)]
#[serde(rename_all = "lowercase")]
pub enum IngestMode {
    /// Values are prices; returns are log differences.
    Prices,
    /// Values are already (log) returns.
    #[default]
    Returns,
}

/// Fixed model parameters passed on the command line.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamFlags {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub psi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sigma_u: Option<f64>,
}

impl ParamFlags {
    pub fn is_empty(&self) -> bool {
        *self == ParamFlags::default()
    }
}

/// Input-CSV interpretation settings.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestConfig {
    /// Value column name; the last column when absent.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub column: Option<String>,
    /// Label (date) column name; labels are carried through to outputs.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub date_column: Option<String>,
    pub mode: IngestMode,
}

impl IngestConfig {
    pub fn is_default(&self) -> bool {
        *self == IngestConfig::default()
    }
}

/// Subcommand plus its own settings, fully resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum CommandConfig {
    Fit {
        restarts: usize,
        max_evals: usize,
    },
    Smooth,
    FilterSeq {
        start: usize,
    },
    Forecast {
        n_max: usize,
    },
    Density {
        n: usize,
        grid_points: usize,
        grid_span: f64,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        grid: Option<Vec<f64>>,
    },
    Simulate {
        t: usize,
        latent: bool,
    },
    Diagnose {
        /// None means "resolve from the data"; the emitted meta always holds
        /// the resolved values.
        #[serde(skip_serializing_if = "Option::is_none", default)]
        q: Option<Vec<f64>>,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        scales: Option<Vec<usize>>,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        max_lag: Option<usize>,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        acf_range: Option<(usize, usize)>,
    },
}

/// A fully resolved run: everything that determines the artifact's bytes.
/// The output path is deliberately not part of it -- it says where the
/// artifact goes, not what it contains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: CommandConfig,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub input: Option<PathBuf>,
    pub format: OutputFormat,
    pub seed: u64,
    pub tau: usize,
    pub jobs: usize,
    #[serde(skip_serializing_if = "ParamFlags::is_empty", default)]
    pub params: ParamFlags,
    #[serde(skip_serializing_if = "IngestConfig::is_default", default)]
    pub ingest: IngestConfig,
}

/// Execute a run, writing the artifact to `output` (stdout when `None`).
pub fn run(config: &RunConfig, output: Option<&Path>) -> Result<(), CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs.max(1))
        .build()
        .map_err(|e| CliError::Config(format!("could not build a worker pool: {e}")))?;
    pool.install(|| dispatch(config, output))
}

fn dispatch(config: &RunConfig, output: Option<&Path>) -> Result<(), CliError> {
    match &config.command {
        CommandConfig::Fit { restarts, max_evals } => {
            cmd_fit(config, output, *restarts, *max_evals)
        }
        CommandConfig::Smooth => cmd_smooth(config, output),
        CommandConfig::FilterSeq { start } => cmd_filter_seq(config, output, *start),
        CommandConfig::Forecast { n_max } => cmd_forecast(config, output, *n_max),
        CommandConfig::Density {
            n,
            grid_points,
            grid_span,
            grid,
        } => cmd_density(config, output, *n, *grid_points, *grid_span, grid.as_deref()),
        CommandConfig::Simulate { t, latent } => cmd_simulate(config, output, *t, *latent),
        CommandConfig::Diagnose { .. } => cmd_diagnose(config, output),
    }
}

fn meta(config: &RunConfig, warnings: Vec<String>) -> Meta {
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    Meta {
        version: env!("CARGO_PKG_VERSION"),
        config: config.clone(),
        warnings,
    }
}

fn load_series(config: &RunConfig) -> Result<(ReturnSeries, Vec<String>), CliError> {
    let path = config.input.as_deref().ok_or_else(|| {
        CliError::Config("--input is required for this command".to_string())
    })?;
    let (series, skipped) = ingest::load(path, &config.ingest)?;
    let mut warnings = Vec::new();
    if skipped > 0 {
        warnings.push(format!(
            "skipped {skipped} input row(s) with missing values"
        ));
    }
    Ok((series, warnings))
}

fn build_model(config: &RunConfig) -> Result<Box<dyn LatentModel>, CliError> {
    let name = config.model.as_deref().ok_or_else(|| {
        CliError::Config("--model is required for this command".to_string())
    })?;
    let fam = family(name)?;
    let spec = ParamSpec {
        sigma: config.params.sigma,
        lambda: config.params.lambda,
        r: config.params.r,
        tau: Some(config.tau),
        psi: config.params.psi,
        sigma_u: config.params.sigma_u,
    };
    Ok(fam.build(&spec)?)
}

fn cmd_fit(
    config: &RunConfig,
    output: Option<&Path>,
    restarts: usize,
    max_evals: usize,
) -> Result<(), CliError> {
    let name = config.model.as_deref().ok_or_else(|| {
        CliError::Config("--model is required for this command".to_string())
    })?;
    if !config.params.is_empty() {
        return Err(CliError::Config(
            "fit estimates the parameters; remove the fixed-parameter flags".to_string(),
        ));
    }
    let fam = family(name)?;
    let (series, mut warnings) = load_series(config)?;
    let options = FitOptions {
        tau: config.tau,
        restarts,
        max_evals,
        seed: config.seed,
    };
    let fit = fit_ml(fam, &series, &options)?;
    if fit.boundary {
        warnings.push(
            "fit ended on the parameter boundary; estimates are unreliable".to_string(),
        );
    }
    if !fit.converged {
        warnings.push(format!(
            "optimizer stopped at the evaluation budget ({} evaluations) before meeting \
             its tolerances",
            fit.evaluations
        ));
    }

    let mut rows: Vec<Vec<String>> = vec![vec!["model".into(), fit.params.name().into()]];
    match &fit.params {
        ModelParams::Sv(p) => {
            rows.push(vec!["psi".into(), format_float(p.psi)]);
            rows.push(vec!["sigma_u".into(), format_float(p.sigma_u)]);
            rows.push(vec!["sigma".into(), format_float(p.sigma)]);
        }
        ModelParams::Mrw(p) => {
            rows.push(vec!["lambda".into(), format_float(p.lambda)]);
            rows.push(vec!["sigma".into(), format_float(p.sigma)]);
            rows.push(vec!["R".into(), format_float(p.r)]);
            rows.push(vec!["tau".into(), p.tau.to_string()]);
        }
    }
    rows.push(vec![
        "log_likelihood".into(),
        format_float(fit.log_likelihood),
    ]);
    rows.push(vec!["converged".into(), fit.converged.to_string()]);
    rows.push(vec!["boundary".into(), fit.boundary.to_string()]);
    rows.push(vec!["evaluations".into(), fit.evaluations.to_string()]);
    let table = CsvTable {
        header: vec!["key".into(), "value".into()],
        rows,
    };
    emit(output, config.format, &meta(config, warnings), &fit, &table)
}

#[derive(Serialize)]
struct LatentRow {
    t: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    date: Option<String>,
    h: f64,
    vol: f64,
}

fn latent_rows(values: &[f64], labels: Option<&[String]>, first_t: usize) -> Vec<LatentRow> {
    values
        .iter()
        .enumerate()
        .map(|(i, &h)| {
            let t = first_t + i;
            LatentRow {
                t,
                date: labels.map(|l| l[t - 1].clone()),
                h,
                vol: (0.5 * h).exp(),
            }
        })
        .collect()
}

fn latent_table(rows: &[LatentRow]) -> CsvTable {
    let with_dates = rows.first().is_some_and(|r| r.date.is_some());
    let mut header = vec!["t".to_string()];
    if with_dates {
        header.push("date".into());
    }
    header.push("h".into());
    header.push("vol".into());
    let body = rows
        .iter()
        .map(|r| {
            let mut row = vec![r.t.to_string()];
            if with_dates {
                row.push(r.date.clone().unwrap_or_default());
            }
            row.push(format_float(r.h));
            row.push(format_float(r.vol));
            row
        })
        .collect();
    CsvTable { header, rows: body }
}

fn cmd_smooth(config: &RunConfig, output: Option<&Path>) -> Result<(), CliError> {
    let (series, warnings) = load_series(config)?;
    let model = build_model(config)?;
    let estimate = smooth(model.as_ref(), &series)?;
    let rows = latent_rows(&estimate.values, series.labels(), 1);
    let table = latent_table(&rows);
    emit(output, config.format, &meta(config, warnings), &rows, &table)
}

fn cmd_filter_seq(
    config: &RunConfig,
    output: Option<&Path>,
    start: usize,
) -> Result<(), CliError> {
    let (series, warnings) = load_series(config)?;
    let model = build_model(config)?;
    let estimates = filter_sequence(model.as_ref(), &series, start)?;
    let rows = latent_rows(&estimates, series.labels(), start);
    let table = latent_table(&rows);
    emit(output, config.format, &meta(config, warnings), &rows, &table)
}

#[derive(Serialize)]
struct ForecastRow {
    horizon: usize,
    h_hat: f64,
    variance: f64,
    vol: f64,
}

fn cmd_forecast(config: &RunConfig, output: Option<&Path>, n_max: usize) -> Result<(), CliError> {
    let (series, warnings) = load_series(config)?;
    let model = build_model(config)?;
    let curve = forecast_path(model.as_ref(), &series, n_max)?;
    let rows: Vec<ForecastRow> = curve
        .iter()
        .map(|e| ForecastRow {
            horizon: e.horizon,
            h_hat: e.values[0],
            variance: e.variance.unwrap_or(f64::NAN),
            vol: (0.5 * e.values[0]).exp(),
        })
        .collect();
    let table = CsvTable {
        header: vec![
            "horizon".into(),
            "h_hat".into(),
            "variance".into(),
            "vol".into(),
        ],
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    r.horizon.to_string(),
                    format_float(r.h_hat),
                    format_float(r.variance),
                    format_float(r.vol),
                ]
            })
            .collect(),
    };
    emit(output, config.format, &meta(config, warnings), &rows, &table)
}

#[derive(Serialize)]
struct DensityRow {
    x: f64,
    density: f64,
}

#[derive(Serialize)]
struct DensityData {
    normalization: f64,
    curve: Vec<DensityRow>,
}

fn cmd_density(
    config: &RunConfig,
    output: Option<&Path>,
    n: usize,
    grid_points: usize,
    grid_span: f64,
    grid: Option<&[f64]>,
) -> Result<(), CliError> {
    let (series, mut warnings) = load_series(config)?;
    let model = build_model(config)?;
    let spec = match grid {
        Some(g) => GridSpec::Explicit(g.to_vec()),
        None => GridSpec::Auto {
            points: grid_points,
            span_stds: grid_span,
        },
    };
    let curve = conditional_return_density(model.as_ref(), &series, n, &spec)?;
    if (curve.normalization - 1.0).abs() > 0.01 {
        warnings.push(format!(
            "density grid may be too coarse or too narrow: raw probability mass {:.6} \
             (values far from 1 mean the grid misses mass)",
            curve.normalization
        ));
    }
    let data = DensityData {
        normalization: curve.normalization,
        curve: curve
            .grid
            .iter()
            .zip(curve.density.iter())
            .map(|(&x, &density)| DensityRow { x, density })
            .collect(),
    };
    let table = CsvTable {
        header: vec!["x".into(), "density".into()],
        rows: data
            .curve
            .iter()
            .map(|r| vec![format_float(r.x), format_float(r.density)])
            .collect(),
    };
    emit(output, config.format, &meta(config, warnings), &data, &table)
}

#[derive(Serialize)]
struct SimRow {
    t: usize,
    x: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    h: Option<f64>,
}

fn cmd_simulate(
    config: &RunConfig,
    output: Option<&Path>,
    t: usize,
    latent: bool,
) -> Result<(), CliError> {
    if config.input.is_some() {
        return Err(CliError::Config(
            "simulate generates its own data; remove --input".to_string(),
        ));
    }
    let model = build_model(config)?;
    let sim = model.sample(t, config.seed)?;
    let rows: Vec<SimRow> = sim
        .returns
        .iter()
        .enumerate()
        .map(|(i, &x)| SimRow {
            t: i + 1,
            x,
            h: latent.then(|| sim.latent[i]),
        })
        .collect();
    let mut header = vec!["t".to_string(), "x".to_string()];
    if latent {
        header.push("h".into());
    }
    let table = CsvTable {
        header,
        rows: rows
            .iter()
            .map(|r| {
                let mut row = vec![r.t.to_string(), format_float(r.x)];
                if let Some(h) = r.h {
                    row.push(format_float(h));
                }
                row
            })
            .collect(),
    };
    emit(output, config.format, &meta(config, Vec::new()), &rows, &table)
}

#[derive(Serialize)]
struct AcfData {
    lags: Vec<usize>,
    autocorr: Vec<f64>,
    product_moment: Vec<f64>,
}

#[derive(Serialize)]
struct DiagnoseData {
    scaling: latvol::simulate::ScalingEstimate,
    acf: AcfData,
    acf_fit: latvol::simulate::AcfSlopeFit,
}

fn cmd_diagnose(config: &RunConfig, output: Option<&Path>) -> Result<(), CliError> {
    let (series, mut warnings) = load_series(config)?;
    let t_len = series.len();
    let CommandConfig::Diagnose {
        q,
        scales,
        max_lag,
        acf_range,
    } = &config.command
    else {
        unreachable!("dispatch sends only diagnose configs here");
    };

    // resolve data-dependent defaults and echo them into the meta
    let q = q.clone().unwrap_or_else(|| vec![1.0, 2.0, 3.0, 4.0]);
    let scales = match scales {
        Some(s) => s.clone(),
        None => {
            let mut s = Vec::new();
            let mut v = 8usize;
            while v <= t_len / 8 && s.len() < 12 {
                s.push(v);
                v *= 2;
            }
            if s.len() < 2 {
                return Err(CliError::Config(format!(
                    "series too short for scaling diagnostics ({t_len} observations)"
                )));
            }
            s
        }
    };
    let max_lag = max_lag.unwrap_or_else(|| (t_len / 4).clamp(1, 256));
    let acf_range = match acf_range {
        Some(r) => *r,
        None => {
            let lo = 4.min(max_lag.saturating_sub(1)).max(1);
            (lo, (max_lag / 2).max(lo + 1))
        }
    };
    let resolved = RunConfig {
        command: CommandConfig::Diagnose {
            q: Some(q.clone()),
            scales: Some(scales.clone()),
            max_lag: Some(max_lag),
            acf_range: Some(acf_range),
        },
        ..config.clone()
    };

    let scaling = structure_functions(series.values(), &q, &scales)?;
    let acf = abs_return_acf(series.values(), max_lag)?;
    let acf_fit = acf_power_law_fit(&acf, acf_range.0, acf_range.1)?;
    if !acf_fit.reliable {
        warnings.push(
            "ACF power-law slope is unreliable: most autocorrelations in the fit range \
             sit inside the Bartlett noise band"
                .to_string(),
        );
    }

    let mut rows: Vec<Vec<String>> = Vec::new();
    for i in 0..scaling.q.len() {
        rows.push(vec![
            "scaling".into(),
            format_float(scaling.q[i]),
            format_float(scaling.zeta[i]),
            format_float(scaling.r_squared[i]),
        ]);
    }
    for (lag, (ac, pm)) in acf
        .autocorr
        .iter()
        .zip(acf.product_moment.iter())
        .enumerate()
    {
        rows.push(vec![
            "acf".into(),
            lag.to_string(),
            format_float(*ac),
            format_float(*pm),
        ]);
    }
    rows.push(vec![
        "acf_fit".into(),
        format_float(acf_fit.slope),
        format_float(acf_fit.r_squared),
        acf_fit.reliable.to_string(),
    ]);
    let table = CsvTable {
        header: vec![
            "section".into(),
            "a".into(),
            "b".into(),
            "c".into(),
        ],
        rows,
    };

    let data = DiagnoseData {
        scaling,
        acf: AcfData {
            lags: (0..=max_lag).collect(),
            autocorr: acf.autocorr,
            product_moment: acf.product_moment,
        },
        acf_fit,
    };
    emit(output, config.format, &meta(&resolved, warnings), &data, &table)
}
