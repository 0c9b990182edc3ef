//! Command-line front end.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::{fit_ar, read_trace_csv, ArModel};
use crate::sim::{
    run_scenario_with, sweep, write_records_csv_header, write_summary_json, write_sweep_csv, RecordWriter, Scenario,
    ScenarioConfig, SweepAxis,
};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "beamtrack", version, about = "Vehicular mmWave beam tracking simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit an autoregressive stroke model to a measured trace.
    Fit {
        /// CSV with columns time_s,height_m.
        input: PathBuf,
        #[arg(long, default_value_t = crate::sim::DEFAULT_PREDICTOR_ORDER as u64,
              value_parser = clap::value_parser!(u64).range(1..))]
        order: u64,
        /// Where to write the model JSON.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the Monte Carlo simulation of one scenario.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory for records.csv and summary.json.
        #[arg(long)]
        out: PathBuf,
        /// Overrides the master seed of the configuration.
        #[arg(long)]
        seed: Option<u64>,
        /// Skip the per-interval CSV.
        #[arg(long)]
        no_records: bool,
    },
    /// Re-run a scenario over a list of values of one parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        axis: SweepAxis,
        /// Comma-separated values: ms for bi-duration, degrees for
        /// beamwidth, metres for ranging-std.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Output directory for sweep.csv and one summary per point.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check a configuration without running it (exit status 0 or 1).
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

/// JSON written by `fit` and accepted as a `model` stroke source.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FittedModelFile {
    pub model: ArModel,
    pub prediction_error_variance: f64,
    pub source_sha256: String,
    pub source_samples: usize,
}

pub fn read_model_file(path: &Path) -> Result<ArModel> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let parsed: FittedModelFile = serde_json::from_reader(file)?;
    Ok(parsed.model)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn flush(mut w: BufWriter<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig::from_toml_path(path)?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    Ok(cfg)
}

/// Runs one command, writing human-readable progress to `stdout`.
pub fn run<W: Write>(cli: Cli, stdout: &mut W) -> Result<()> {
    let out_err = |e| Error::io("<stdout>", e);
    match cli.command {
        Command::Fit { input, order, out } => {
            let bytes = std::fs::read(&input).map_err(|e| Error::io(&input, e))?;
            let trace = read_trace_csv(bytes.as_slice())?;
            let model = fit_ar(&trace, order as usize)?;
            let file = FittedModelFile {
                prediction_error_variance: model.innovation_variance(),
                source_sha256: hex::encode(Sha256::digest(&bytes)),
                source_samples: trace.len(),
                model,
            };
            let mut w = create(&out)?;
            serde_json::to_writer_pretty(&mut w, &file)?;
            flush(w, &out)?;
            writeln!(
                stdout,
                "fitted AR({order}) to {} samples; prediction error variance {:.6e} m^2",
                file.source_samples, file.prediction_error_variance
            )
            .map_err(out_err)?;
        }
        Command::Simulate {
            config,
            out,
            seed,
            no_records,
        } => {
            let cfg = load_config(&config, seed)?;
            let scenario = Scenario::new(cfg)?;
            std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            log::info!(
                "simulating {} runs x {} intervals",
                scenario.config().n_monte_carlo,
                scenario.n_bi()
            );
            let result = if no_records {
                run_scenario_with(&scenario, |_| Ok(()))?
            } else {
                let path = out.join("records.csv");
                let mut w = create(&path)?;
                write_records_csv_header(&mut w, &scenario.metadata()).map_err(|e| Error::io(&path, e))?;
                let labels = scenario.config().policies.iter().map(|p| p.label()).collect();
                let mut writer = RecordWriter::new(w, labels)?;
                let result = run_scenario_with(&scenario, |r| writer.write(r))?;
                flush(writer.finish()?, &path)?;
                result
            };
            let path = out.join("summary.json");
            let mut w = create(&path)?;
            write_summary_json(&mut w, &result, scenario.config())?;
            flush(w, &path)?;
            for p in &result.policies {
                writeln!(
                    stdout,
                    "{:<24} throughput {:>8.3} Gbps  FER {:.4}  efficiency {:.3}",
                    p.label,
                    p.mean_throughput_bps / 1e9,
                    p.frame_error_rate,
                    p.efficiency
                )
                .map_err(out_err)?;
            }
        }
        Command::Sweep {
            config,
            axis,
            values,
            out,
            seed,
        } => {
            let cfg = load_config(&config, seed)?;
            let si: Vec<f64> = values.iter().map(|&v| axis.from_user_unit(v)).collect();
            let points = sweep(&cfg, axis, &si)?;
            std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
            for (i, point) in points.iter().enumerate() {
                let point_cfg = axis.apply(&cfg, point.axis_value)?;
                let path = out.join(format!("point_{i:03}.json"));
                let mut w = create(&path)?;
                write_summary_json(&mut w, &point.result, &point_cfg)?;
                flush(w, &path)?;
            }
            let path = out.join("sweep.csv");
            let mut w = create(&path)?;
            write_sweep_csv(&mut w, &cfg, axis, &points)?;
            flush(w, &path)?;
            writeln!(stdout, "wrote {} sweep points to {}", points.len(), out.display()).map_err(out_err)?;
        }
        Command::Validate { config } => {
            let cfg = ScenarioConfig::from_toml_path(&config)?;
            Scenario::new(cfg.clone())?;
            writeln!(stdout, "ok: config_hash={}", cfg.hash()).map_err(out_err)?;
        }
    }
    Ok(())
}
