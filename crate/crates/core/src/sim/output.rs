use std::io::Write;

use serde::Serialize;

use crate::sim::config::ScenarioConfig;
use crate::sim::engine::{BiRecord, RunMetadata, SimResult};
use crate::sim::sweep::{SweepAxis, SweepPoint};
use crate::Result;

/// Version of the per-interval CSV layout.
pub const SCHEMA_VERSION: u32 = 1;

/// Writes the `#` comment block that heads every output CSV.
pub fn write_csv_header<W: Write>(out: &mut W, config_hash: &str, master_seed: u64) -> std::io::Result<()> {
    writeln!(out, "# schema_version={SCHEMA_VERSION}")?;
    writeln!(out, "# config_hash={config_hash}")?;
    writeln!(out, "# master_seed={master_seed}")?;
    Ok(())
}

pub fn write_records_csv_header<W: Write>(out: &mut W, meta: &RunMetadata) -> std::io::Result<()> {
    write_csv_header(out, &meta.config_hash, meta.master_seed)
}

#[derive(Serialize)]
struct Summary<'a> {
    schema_version: u32,
    #[serde(flatten)]
    result: &'a SimResult,
    config: &'a ScenarioConfig,
}

/// Streams per-interval records to CSV.
pub struct RecordWriter<W: Write> {
    csv: csv::Writer<W>,
    labels: Vec<String>,
}

impl<W: Write> RecordWriter<W> {
    /// `out` should already hold the comment header.
    pub fn new(out: W, labels: Vec<String>) -> Result<Self> {
        let mut csv = csv::Writer::from_writer(out);
        csv.write_record([
            "run",
            "bi",
            "policy",
            "efficiency",
            "throughput_bps",
            "min_margin_db",
            "frame_ok",
        ])?;
        Ok(Self { csv, labels })
    }

    pub fn write(&mut self, r: &BiRecord) -> Result<()> {
        self.csv.write_record([
            r.run.to_string(),
            r.bi.to_string(),
            self.labels[r.policy].clone(),
            r.efficiency.to_string(),
            r.throughput_bps.to_string(),
            r.min_margin_db.to_string(),
            u8::from(r.frame_ok).to_string(),
        ])?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.csv.flush().map_err(|e| crate::Error::io("<records>", e))?;
        self.csv
            .into_inner()
            .map_err(|e| crate::Error::io("<records>", e.into_error()))
    }
}

/// JSON summary: metadata, per-policy aggregates and the resolved config.
pub fn write_summary_json<W: Write>(out: W, result: &SimResult, config: &ScenarioConfig) -> Result<()> {
    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        result,
        config,
    };
    serde_json::to_writer_pretty(out, &summary)?;
    Ok(())
}

/// One row per (axis value, policy); the axis value is written in the
/// user-facing unit (ms, degrees or metres). The header comment carries the
/// hash of the base configuration.
pub fn write_sweep_csv<W: Write>(
    mut out: W,
    base: &ScenarioConfig,
    axis: SweepAxis,
    points: &[SweepPoint],
) -> Result<()> {
    write_csv_header(&mut out, &base.hash(), base.master_seed).map_err(|e| crate::Error::io("<sweep>", e))?;
    writeln!(out, "# axis={}", axis.name()).map_err(|e| crate::Error::io("<sweep>", e))?;
    let mut csv = csv::Writer::from_writer(out);
    csv.write_record(["axis_value", "policy", "mean_throughput_bps", "frame_error_rate", "efficiency"])?;
    for point in points {
        for p in &point.result.policies {
            csv.write_record([
                axis.to_user_unit(point.axis_value).to_string(),
                p.label.clone(),
                p.mean_throughput_bps.to_string(),
                p.frame_error_rate.to_string(),
                p.efficiency.to_string(),
            ])?;
        }
    }
    csv.flush().map_err(|e| crate::Error::io("<sweep>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{run_scenario_with, Scenario, ScenarioConfig};

    #[test]
    fn record_csv_has_header_and_rows() {
        let mut cfg = ScenarioConfig::reference();
        cfg.n_monte_carlo = 1;
        cfg.duration = 0.05;
        let scenario = Scenario::new(cfg).unwrap();
        let mut buf = Vec::new();
        write_records_csv_header(&mut buf, &scenario.metadata()).unwrap();
        let labels = scenario.config().policies.iter().map(|p| p.label()).collect();
        let mut writer = RecordWriter::new(buf, labels).unwrap();
        run_scenario_with(&scenario, |r| writer.write(r)).unwrap();
        let text = String::from_utf8(writer.finish().unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# schema_version=1"));
        assert!(lines[1].starts_with("# config_hash="));
        assert_eq!(lines[3], "run,bi,policy,efficiency,throughput_bps,min_margin_db,frame_ok");
        assert_eq!(lines.len(), 4 + 5 * 3);
        assert!(lines[4].starts_with("0,0,conventional_ba,0.8,"));
    }
}
