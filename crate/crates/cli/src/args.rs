//! Flag definitions and their translation into a resolved [`RunConfig`].

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use latvol::model::DEFAULT_TRUNCATION;

use crate::{CliError, CommandConfig, IngestConfig, IngestMode, OutputFormat, ParamFlags, RunConfig};

/// Likelihood-based inference for latent-volatility return models.
#[derive(Debug, Parser)]
#[command(name = "latvol", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Model name: "sv" or "mrw".
    #[arg(long, global = true)]
    pub model: Option<String>,

    /// Input CSV of prices or returns.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,

    /// Artifact destination (stdout when omitted).
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    /// Artifact format.
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,

    /// Random seed (simulation and optimizer restarts).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Truncation depth of the latent conditionals (mrw only).
    #[arg(long, global = true)]
    pub tau: Option<usize>,

    /// Worker threads for independent work units.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// Intermittency coefficient (mrw), in (0, sqrt 2).
    #[arg(long, global = true)]
    pub lambda: Option<f64>,

    /// Return scale, positive (both models).
    #[arg(long, global = true)]
    pub sigma: Option<f64>,

    /// Decorrelation scale in steps (mrw), greater than 1.
    #[arg(long = "R", global = true)]
    pub r: Option<f64>,

    /// AR(1) persistence (sv), in (-1, 1).
    #[arg(long, global = true)]
    pub psi: Option<f64>,

    /// Latent innovation standard deviation (sv), positive.
    #[arg(long = "sigma-u", global = true)]
    pub sigma_u: Option<f64>,

    /// Value column of the input CSV (default: the last column).
    #[arg(long, global = true)]
    pub column: Option<String>,

    /// Label column (ISO-8601 dates) carried through to outputs.
    #[arg(long = "date-column", global = true)]
    pub date_column: Option<String>,

    /// Whether the value column holds prices or returns.
    #[arg(long, global = true, value_enum)]
    pub mode: Option<IngestMode>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate model parameters by maximum likelihood.
    Fit {
        /// Optimizer restarts after the first run.
        #[arg(long, default_value_t = 2)]
        restarts: usize,
        /// Likelihood-evaluation budget per optimizer run.
        #[arg(long = "max-evals", default_value_t = 400)]
        max_evals: usize,
    },
    /// Smoothed latent path (posterior mode given the full sample).
    Smooth,
    /// Filtered latent estimates for each prefix from --start to T.
    FilterSeq {
        /// First prefix length to filter at.
        #[arg(long, default_value_t = 1)]
        start: usize,
    },
    /// Latent point forecasts for horizons 1..=N-max.
    Forecast {
        /// Largest forecast horizon.
        #[arg(long = "N-max", default_value_t = 20)]
        n_max: usize,
    },
    /// Conditional density of the return N steps past the sample.
    Density {
        /// Forecast horizon of the return.
        #[arg(long = "N", default_value_t = 1)]
        n: usize,
        /// Grid size when the grid is automatic.
        #[arg(long = "grid-points", default_value_t = 257)]
        grid_points: usize,
        /// Automatic grid half-width in sample standard deviations.
        #[arg(long = "grid-span", default_value_t = 8.0)]
        grid_span: f64,
        /// Explicit comma-separated grid (overrides the automatic one).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        grid: Option<Vec<f64>>,
    },
    /// Draw a synthetic return sample from a fully specified model.
    Simulate {
        /// Sample length.
        #[arg(long = "T")]
        t: usize,
        /// Also write the latent path.
        #[arg(long)]
        latent: bool,
    },
    /// Multifractal scaling and volatility-persistence diagnostics.
    Diagnose {
        /// Comma-separated moment orders (default 1,2,3,4).
        #[arg(long, value_delimiter = ',')]
        q: Option<Vec<f64>>,
        /// Comma-separated increment scales (default: dyadic up to T/8).
        #[arg(long, value_delimiter = ',')]
        scales: Option<Vec<usize>>,
        /// Largest |x| autocorrelation lag (default: T/4 capped at 256).
        #[arg(long = "max-lag")]
        max_lag: Option<usize>,
        /// Lag range "lo,hi" for the ACF power-law fit.
        #[arg(long = "acf-range", value_delimiter = ',', num_args = 2)]
        acf_range: Option<Vec<usize>>,
    },
}

impl Cli {
    /// Resolve defaults and split into the run configuration and the output
    /// path (which deliberately stays outside the config).
    pub fn into_config(self) -> Result<(RunConfig, Option<PathBuf>), CliError> {
        let command = match self.command {
            Command::Fit { restarts, max_evals } => CommandConfig::Fit { restarts, max_evals },
            Command::Smooth => CommandConfig::Smooth,
            Command::FilterSeq { start } => CommandConfig::FilterSeq { start },
            Command::Forecast { n_max } => CommandConfig::Forecast { n_max },
            Command::Density {
                n,
                grid_points,
                grid_span,
                grid,
            } => CommandConfig::Density {
                n,
                grid_points,
                grid_span,
                grid,
            },
            Command::Simulate { t, latent } => CommandConfig::Simulate { t, latent },
            Command::Diagnose {
                q,
                scales,
                max_lag,
                acf_range,
            } => {
                let acf_range = match acf_range {
                    None => None,
                    Some(v) if v.len() == 2 => Some((v[0], v[1])),
                    Some(v) => {
                        return Err(CliError::Config(format!(
                            "--acf-range takes exactly two lags, got {}",
                            v.len()
                        )))
                    }
                };
                CommandConfig::Diagnose {
                    q,
                    scales,
                    max_lag,
                    acf_range,
                }
            }
        };
        let config = RunConfig {
            command,
            model: self.model,
            input: self.input,
            format: self.format.unwrap_or_default(),
            seed: self.seed.unwrap_or(0),
            tau: self.tau.unwrap_or(DEFAULT_TRUNCATION),
            jobs: self.jobs.unwrap_or(1),
            params: ParamFlags {
                lambda: self.lambda,
                sigma: self.sigma,
                r: self.r,
                psi: self.psi,
                sigma_u: self.sigma_u,
            },
            ingest: IngestConfig {
                column: self.column,
                date_column: self.date_column,
                mode: self.mode.unwrap_or_default(),
            },
        };
        Ok((config, self.output))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> (RunConfig, Option<PathBuf>) {
        Cli::try_parse_from(args)
            .expect("flags parse")
            .into_config()
            .expect("config resolves")
    }

    #[test]
    fn simulate_flags_resolve_with_spec_spellings() {
        let (config, output) = parse(&[
            "latvol", "simulate", "--model", "mrw", "--lambda", "0.33", "--sigma", "0.01",
            "--R", "512", "--T", "2048", "--seed", "7",
        ]);
        assert_eq!(
            config.command,
            CommandConfig::Simulate {
                t: 2048,
                latent: false
            }
        );
        assert_eq!(config.model.as_deref(), Some("mrw"));
        assert_eq!(config.params.lambda, Some(0.33));
        assert_eq!(config.params.r, Some(512.0));
        assert_eq!(config.seed, 7);
        assert_eq!(config.tau, DEFAULT_TRUNCATION);
        assert_eq!(config.jobs, 1);
        assert_eq!(config.format, OutputFormat::Json);
        assert!(output.is_none());
    }

    #[test]
    fn global_flags_work_after_the_subcommand() {
        let (config, output) = parse(&[
            "latvol", "forecast", "--model", "sv", "--N-max", "250", "--psi", "0.98",
            "--sigma-u", "0.2", "--sigma", "0.01", "--input", "x.csv", "--output", "out.json",
        ]);
        assert_eq!(config.command, CommandConfig::Forecast { n_max: 250 });
        assert_eq!(config.params.psi, Some(0.98));
        assert_eq!(config.params.sigma_u, Some(0.2));
        assert_eq!(output, Some(PathBuf::from("out.json")));
    }

    #[test]
    fn density_grid_list_parses_negative_values() {
        let (config, _) = parse(&[
            "latvol", "density", "--model", "sv", "--input", "x.csv", "--N", "3",
            "--grid", "-0.02,0,0.02",
        ]);
        match config.command {
            CommandConfig::Density { n, grid, .. } => {
                assert_eq!(n, 3);
                assert_eq!(grid, Some(vec![-0.02, 0.0, 0.02]));
            }
            other => panic!("wrong command: {other:?}"),
        }
    }

    #[test]
    fn acf_range_requires_two_lags() {
        // num_args = 2 makes clap itself reject a single value
        assert!(Cli::try_parse_from([
            "latvol", "diagnose", "--input", "x.csv", "--acf-range", "4",
        ])
        .is_err());
    }

    #[test]
    fn config_survives_a_json_round_trip() {
        let (config, _) = parse(&[
            "latvol", "diagnose", "--input", "x.csv", "--q", "0.5,1,2", "--max-lag", "64",
        ]);
        let s = serde_json::to_string(&config).unwrap();
        let back: RunConfig = serde_json::from_str(&s).unwrap();
        assert_eq!(config, back);
    }
}
