//! Scenario configuration.
//!
//! A scenario is described on disk by a TOML file ([`ScenarioFile`]) whose
//! fields are all optional except the two stroke sources; omitted fields take
//! the reference vehicle/link values. Resolving a file yields a fully
//! specified [`ScenarioConfig`] in SI units, which is what the engine runs and
//! what output files echo and hash.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::array::{elements_for_beamwidth, ArrayConfig, GainMode};
use crate::channel::{ChannelParams, THERMAL_NOISE_FLOOR_DBM_PER_HZ};
use crate::dynamics::{ArModel, InterpolationKind};
use crate::geometry::VehicleGeometry;
use crate::protocol::{FrameConfig, PointingPolicy};

pub const DEFAULT_MONTE_CARLO_RUNS: usize = 100;
pub const DEFAULT_DURATION_S: f64 = 200.0;
pub const DEFAULT_DISTANCE_M: f64 = 5.0;
pub const DEFAULT_PREDICTOR_ORDER: usize = 10;
pub const DEFAULT_INTERPOLATION_FACTOR: usize = 10;
pub const DEFAULT_SENSOR_RANGING_STD_M: f64 = 0.1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid scenario configuration:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),
    #[error("cannot parse {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid {axis} sweep value {value}: {reason}")]
    InvalidAxisValue { axis: String, value: f64, reason: String },
    #[error("cannot read {path}: {message}")]
    Read { path: String, message: String },
}

/// When the log-normal shadowing term is redrawn.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShadowingRedraw {
    #[default]
    PerBi,
    PerRun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum StrokeSource {
    /// Synthesize a fresh realization per run from the model (its mean is
    /// the vehicle rest height).
    Synthetic { model: ArModel },
    /// Replay a measured trace, re-centred on the rest height.
    Csv { path: PathBuf },
}

/// Piecewise-constant inter-vehicle distance: `(start_s, distance_m)` pairs
/// sorted by start time, the first starting at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceProfile(pub Vec<(f64, f64)>);

impl DistanceProfile {
    pub fn constant(distance: f64) -> Self {
        Self(vec![(0.0, distance)])
    }

    pub fn at(&self, time: f64) -> f64 {
        self.0
            .iter()
            .take_while(|(start, _)| *start <= time)
            .last()
            .map(|&(_, d)| d)
            .unwrap_or(self.0[0].1)
    }

    fn validate(&self, problems: &mut Vec<String>) {
        if self.0.is_empty() {
            problems.push("distance schedule must not be empty".into());
            return;
        }
        if self.0[0].0 != 0.0 {
            problems.push("distance schedule must start at time 0".into());
        }
        if self.0.windows(2).any(|w| w[1].0 <= w[0].0) {
            problems.push("distance schedule start times must be strictly increasing".into());
        }
        if self.0.iter().any(|&(_, d)| !(d > 0.0 && d.is_finite())) {
            problems.push("distances must be positive".into());
        }
    }
}

/// Fully resolved scenario in SI units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub master_seed: u64,
    pub n_monte_carlo: usize,
    pub duration: f64,
    pub distance: DistanceProfile,
    pub vehicle1: VehicleGeometry,
    pub vehicle2: VehicleGeometry,
    pub array: ArrayConfig,
    pub channel: ChannelParams,
    pub frame: FrameConfig,
    pub policies: Vec<PointingPolicy>,
    pub stroke1: StrokeSource,
    pub stroke2: StrokeSource,
    pub interpolation: InterpolationKind,
    pub interpolation_factor: usize,
    pub predictor_order: usize,
    pub shadowing: ShadowingRedraw,
}

impl ScenarioConfig {
    /// Reference scenario: 4.5 m / 5 m vehicles with arrays at 0.5 m / 1 m,
    /// 64-element arrays, 60 GHz, 10 ms intervals, 5 m spacing, synthetic
    /// 50 Hz strokes and all three policies.
    pub fn reference() -> Self {
        let vehicle1 = VehicleGeometry {
            length: 4.5,
            rest_height: 0.5,
        };
        let vehicle2 = VehicleGeometry {
            length: 5.0,
            rest_height: 1.0,
        };
        Self {
            master_seed: 1,
            n_monte_carlo: DEFAULT_MONTE_CARLO_RUNS,
            duration: DEFAULT_DURATION_S,
            distance: DistanceProfile::constant(DEFAULT_DISTANCE_M),
            vehicle1,
            vehicle2,
            array: ArrayConfig {
                n_elements: 64,
                amplitude_mismatch_db_std: 1.0,
                phase_mismatch_bound: 3f64.to_radians(),
                gain_mode: GainMode::Literal,
            },
            channel: ChannelParams::default(),
            frame: FrameConfig::default(),
            policies: vec![
                PointingPolicy::conventional(),
                PointingPolicy::sensor_aided(DEFAULT_SENSOR_RANGING_STD_M),
                PointingPolicy::IdealOracle,
            ],
            stroke1: StrokeSource::Synthetic {
                model: ArModel::default_stroke(vehicle1.rest_height),
            },
            stroke2: StrokeSource::Synthetic {
                model: ArModel::default_stroke(vehicle2.rest_height),
            },
            interpolation: InterpolationKind::CubicSpline,
            interpolation_factor: DEFAULT_INTERPOLATION_FACTOR,
            predictor_order: DEFAULT_PREDICTOR_ORDER,
            shadowing: ShadowingRedraw::PerBi,
        }
    }

    pub fn n_bi(&self) -> usize {
        (self.duration / self.frame.bi_duration + 1e-9).floor() as usize
    }

    pub fn beamwidth_3db(&self) -> f64 {
        self.array.beamwidth_3db()
    }

    pub fn with_beamwidth(mut self, beamwidth: f64) -> Self {
        self.array.n_elements = elements_for_beamwidth(beamwidth);
        self
    }

    /// Checks every invariant and reports all violations at once.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut problems = Vec::new();
        if self.n_monte_carlo == 0 {
            problems.push("n_monte_carlo must be at least 1".into());
        }
        problems.extend(self.frame.validate());
        if !(self.duration.is_finite() && self.duration >= self.frame.bi_duration) {
            problems.push("duration_s must be at least one beacon interval".into());
        }
        self.distance.validate(&mut problems);
        for (name, v) in [("vehicle1", &self.vehicle1), ("vehicle2", &self.vehicle2)] {
            if VehicleGeometry::new(v.length, v.rest_height).is_none() {
                problems.push(format!("{name}: length and rest height must be positive"));
            }
        }
        if let Err(e) = self.array.validate() {
            problems.push(format!("array: {e}"));
        }
        problems.extend(self.channel.validate());
        if self.policies.is_empty() {
            problems.push("at least one policy is required".into());
        }
        problems.extend(self.policies.iter().filter_map(|p| p.validate()));
        if self.predictor_order == 0 {
            problems.push("predictor_order must be at least 1".into());
        }
        if self.interpolation_factor == 0 {
            problems.push("interpolation_factor must be at least 1".into());
        }
        for (name, source) in [("strokes.vehicle1", &self.stroke1), ("strokes.vehicle2", &self.stroke2)] {
            if let StrokeSource::Synthetic { model } = source {
                if !model.is_stationary() {
                    problems.push(format!("{name}: stroke model is not stationary"));
                }
                let step = 1.0 / (model.sample_rate() * self.interpolation_factor as f64);
                if self.frame.time_step > 0.0 && (step - self.frame.time_step).abs() > 1e-9 {
                    problems.push(format!(
                        "{name}: source rate {} Hz x interpolation factor {} does not match time step {} s",
                        model.sample_rate(),
                        self.interpolation_factor,
                        self.frame.time_step
                    ));
                }
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(problems))
        }
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn from_toml_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let file: ScenarioFile = toml::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        file.resolve(path.parent().unwrap_or(Path::new(".")))
    }
}

/// On-disk scenario description. Times in seconds, angles in degrees,
/// distances and heights in metres.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub master_seed: Option<u64>,
    pub n_monte_carlo: Option<usize>,
    pub duration_s: Option<f64>,
    pub distance_m: Option<f64>,
    /// `[[start_s, distance_m], ...]`; overrides `distance_m`.
    pub distance_schedule: Option<Vec<(f64, f64)>>,
    pub predictor_order: Option<usize>,
    pub interpolation: Option<InterpolationKind>,
    pub interpolation_factor: Option<usize>,
    pub shadowing_redraw: Option<ShadowingRedraw>,
    pub vehicle1: Option<VehicleFile>,
    pub vehicle2: Option<VehicleFile>,
    pub array: Option<ArrayFile>,
    pub channel: Option<ChannelFile>,
    pub frame: Option<FrameFile>,
    pub policies: Option<Vec<PolicyFile>>,
    pub strokes: Option<StrokesFile>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleFile {
    pub length_m: Option<f64>,
    pub rest_height_m: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrayFile {
    pub n_elements: Option<usize>,
    /// Alternative to `n_elements`: `N = round(0.866 / beamwidth)`.
    pub beamwidth_deg: Option<f64>,
    pub amplitude_mismatch_db: Option<f64>,
    pub phase_mismatch_deg: Option<f64>,
    pub gain_mode: Option<GainMode>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFile {
    pub carrier_freq_hz: Option<f64>,
    pub pathloss_exponent: Option<f64>,
    pub shadowing_std_db: Option<f64>,
    pub bandwidth_hz: Option<f64>,
    pub noise_figure_db: Option<f64>,
    pub tx_power_dbm: Option<f64>,
    pub noise_floor_dbm_per_hz: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameFile {
    pub bi_duration_s: Option<f64>,
    pub signaling_overhead_s: Option<f64>,
    pub ba_overhead_s: Option<f64>,
    pub time_step_s: Option<f64>,
    pub distance_update_period_s: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyFile {
    pub kind: String,
    pub ranging_std_m: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrokesFile {
    pub vehicle1: Option<StrokeFile>,
    pub vehicle2: Option<StrokeFile>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrokeFile {
    /// `synthetic`, `model` (JSON written by `fit`) or `csv`.
    pub source: Option<String>,
    pub path: Option<PathBuf>,
    pub coefficients: Option<Vec<f64>>,
    pub innovation_variance: Option<f64>,
    pub sample_rate_hz: Option<f64>,
}

impl ScenarioFile {
    /// Applies defaults and converts to SI units; relative paths are taken
    /// from `base_dir`. All problems are collected before failing.
    pub fn resolve(&self, base_dir: &Path) -> Result<ScenarioConfig, ConfigError> {
        let mut cfg = ScenarioConfig::reference();
        let mut problems = Vec::new();

        if let Some(v) = self.master_seed {
            cfg.master_seed = v;
        }
        if let Some(v) = self.n_monte_carlo {
            cfg.n_monte_carlo = v;
        }
        if let Some(v) = self.duration_s {
            cfg.duration = v;
        }
        if let Some(v) = self.distance_m {
            cfg.distance = DistanceProfile::constant(v);
        }
        if let Some(v) = &self.distance_schedule {
            cfg.distance = DistanceProfile(v.clone());
        }
        if let Some(v) = self.predictor_order {
            cfg.predictor_order = v;
        }
        if let Some(v) = self.interpolation {
            cfg.interpolation = v;
        }
        if let Some(v) = self.interpolation_factor {
            cfg.interpolation_factor = v;
        }
        if let Some(v) = self.shadowing_redraw {
            cfg.shadowing = v;
        }
        for (file, geom) in [(&self.vehicle1, &mut cfg.vehicle1), (&self.vehicle2, &mut cfg.vehicle2)] {
            if let Some(f) = file {
                if let Some(v) = f.length_m {
                    geom.length = v;
                }
                if let Some(v) = f.rest_height_m {
                    geom.rest_height = v;
                }
            }
        }
        if let Some(a) = &self.array {
            match (a.n_elements, a.beamwidth_deg) {
                (Some(_), Some(_)) => problems.push("array: give n_elements or beamwidth_deg, not both".into()),
                (Some(n), None) => cfg.array.n_elements = n,
                (None, Some(bw)) if bw > 0.0 => cfg.array.n_elements = elements_for_beamwidth(bw.to_radians()),
                (None, Some(_)) => problems.push("array.beamwidth_deg must be positive".into()),
                (None, None) => {}
            }
            if let Some(v) = a.amplitude_mismatch_db {
                cfg.array.amplitude_mismatch_db_std = v;
            }
            if let Some(v) = a.phase_mismatch_deg {
                cfg.array.phase_mismatch_bound = v.to_radians();
            }
            if let Some(v) = a.gain_mode {
                cfg.array.gain_mode = v;
            }
        }
        if let Some(c) = &self.channel {
            let ch = &mut cfg.channel;
            let fields = [
                (c.carrier_freq_hz, &mut ch.carrier_freq),
                (c.pathloss_exponent, &mut ch.pathloss_exponent),
                (c.shadowing_std_db, &mut ch.shadowing_std_db),
                (c.bandwidth_hz, &mut ch.bandwidth),
                (c.noise_figure_db, &mut ch.noise_figure_db),
                (c.tx_power_dbm, &mut ch.tx_power_dbm),
            ];
            for (src, dst) in fields {
                if let Some(v) = src {
                    *dst = v;
                }
            }
            ch.noise_floor_dbm_per_hz = c.noise_floor_dbm_per_hz.unwrap_or(THERMAL_NOISE_FLOOR_DBM_PER_HZ);
        }
        if let Some(f) = &self.frame {
            let fr = &mut cfg.frame;
            let fields = [
                (f.bi_duration_s, &mut fr.bi_duration),
                (f.signaling_overhead_s, &mut fr.signaling_overhead),
                (f.ba_overhead_s, &mut fr.ba_overhead),
                (f.time_step_s, &mut fr.time_step),
                (f.distance_update_period_s, &mut fr.distance_update_period),
            ];
            for (src, dst) in fields {
                if let Some(v) = src {
                    *dst = v;
                }
            }
        }
        if let Some(list) = &self.policies {
            cfg.policies.clear();
            for (i, p) in list.iter().enumerate() {
                match p.kind.as_str() {
                    "conventional_ba" => cfg.policies.push(PointingPolicy::ConventionalBa {
                        ranging_std: p.ranging_std_m,
                    }),
                    "sensor_aided" => cfg.policies.push(PointingPolicy::SensorAided {
                        ranging_std: p.ranging_std_m.unwrap_or(DEFAULT_SENSOR_RANGING_STD_M),
                    }),
                    "ideal_oracle" => cfg.policies.push(PointingPolicy::IdealOracle),
                    other => problems.push(format!(
                        "policies[{i}].kind: unknown policy `{other}` (expected conventional_ba, sensor_aided or ideal_oracle)"
                    )),
                }
            }
        }

        let strokes = self.strokes.clone().unwrap_or_default();
        let resolved = [
            ("strokes.vehicle1", strokes.vehicle1.as_ref(), cfg.vehicle1.rest_height),
            ("strokes.vehicle2", strokes.vehicle2.as_ref(), cfg.vehicle2.rest_height),
        ]
        .map(|(name, file, rest)| resolve_stroke(name, file, rest, base_dir, &mut problems));
        let [s1, s2] = resolved;
        if let Some(s) = s1 {
            cfg.stroke1 = s;
        }
        if let Some(s) = s2 {
            cfg.stroke2 = s;
        }

        if let Err(ConfigError::Invalid(more)) = cfg.validate() {
            problems.extend(more);
        }
        if problems.is_empty() {
            Ok(cfg)
        } else {
            Err(ConfigError::Invalid(problems))
        }
    }
}

fn resolve_stroke(
    name: &str,
    file: Option<&StrokeFile>,
    rest_height: f64,
    base_dir: &Path,
    problems: &mut Vec<String>,
) -> Option<StrokeSource> {
    let Some(file) = file else {
        problems.push(format!("{name}: missing stroke source"));
        return None;
    };
    let Some(source) = file.source.as_deref() else {
        problems.push(format!("{name}.source: missing (expected synthetic, model or csv)"));
        return None;
    };
    let path = file.path.as_ref().map(|p| {
        if p.is_absolute() {
            p.clone()
        } else {
            base_dir.join(p)
        }
    });
    match source {
        "synthetic" => {
            if let Some(coefficients) = &file.coefficients {
                let Some(var) = file.innovation_variance else {
                    problems.push(format!("{name}.innovation_variance: required with coefficients"));
                    return None;
                };
                let rate = file.sample_rate_hz.unwrap_or(50.0);
                match ArModel::new(coefficients.clone(), var, rest_height, rate) {
                    Ok(model) => Some(StrokeSource::Synthetic { model }),
                    Err(e) => {
                        problems.push(format!("{name}: {e}"));
                        None
                    }
                }
            } else {
                Some(StrokeSource::Synthetic {
                    model: ArModel::default_stroke(rest_height),
                })
            }
        }
        "model" => {
            let Some(path) = path else {
                problems.push(format!("{name}.path: required for a model source"));
                return None;
            };
            match crate::cli::read_model_file(&path) {
                Ok(model) => Some(StrokeSource::Synthetic {
                    model: model.with_mean(rest_height),
                }),
                Err(e) => {
                    problems.push(format!("{name}.path: {e}"));
                    None
                }
            }
        }
        "csv" => match path {
            Some(path) if path.exists() => Some(StrokeSource::Csv { path }),
            Some(path) => {
                problems.push(format!("{name}.path: {} does not exist", path.display()));
                None
            }
            None => {
                problems.push(format!("{name}.path: required for a csv source"));
                None
            }
        },
        other => {
            problems.push(format!("{name}.source: unknown source `{other}`"));
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ScenarioConfig, ConfigError> {
        let f: ScenarioFile = toml::from_str(text).unwrap();
        f.resolve(Path::new("."))
    }

    const STROKES: &str = "[strokes.vehicle1]\nsource = \"synthetic\"\n[strokes.vehicle2]\nsource = \"synthetic\"\n";

    #[test]
    fn reference_is_valid() {
        let cfg = ScenarioConfig::reference();
        cfg.validate().unwrap();
        assert_eq!(cfg.n_bi(), 20_000);
        assert_eq!(parse(STROKES).unwrap(), cfg);
    }

    #[test]
    fn missing_stroke_source_names_field() {
        let err = parse("[strokes.vehicle1]\nsource = \"synthetic\"\n").unwrap_err();
        assert!(err.to_string().contains("strokes.vehicle2"), "{err}");
    }

    #[test]
    fn all_problems_listed_together() {
        let text = format!(
            "n_monte_carlo = 0\nduration_s = 0.001\n[array]\nn_elements = 0\n[[policies]]\nkind = \"bogus\"\n{STROKES}"
        );
        let ConfigError::Invalid(problems) = parse(&text).unwrap_err() else {
            panic!("expected validation error");
        };
        assert!(problems.len() >= 4, "{problems:?}");
    }

    #[test]
    fn units_are_converted() {
        let text = format!(
            "[array]\nbeamwidth_deg = 1.0\nphase_mismatch_deg = 6.0\n[frame]\nbi_duration_s = 0.05\n[[policies]]\nkind = \"sensor_aided\"\nranging_std_m = 0.3\n{STROKES}"
        );
        let cfg = parse(&text).unwrap();
        assert_eq!(cfg.array.n_elements, 50);
        assert!((cfg.array.phase_mismatch_bound - 6f64.to_radians()).abs() < 1e-15);
        assert_eq!(cfg.frame.bi_duration, 0.05);
        assert_eq!(cfg.policies, vec![PointingPolicy::sensor_aided(0.3)]);
    }

    #[test]
    fn rate_mismatch_is_reported() {
        let text = format!("[frame]\ntime_step_s = 0.001\nbi_duration_s = 0.01\n{STROKES}");
        let err = parse(&text).unwrap_err().to_string();
        assert!(err.contains("does not match time step"), "{err}");
    }

    #[test]
    fn hash_tracks_content() {
        let a = ScenarioConfig::reference();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.master_seed = 2;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn distance_schedule_lookup() {
        let d = DistanceProfile(vec![(0.0, 5.0), (10.0, 8.0)]);
        assert_eq!(d.at(0.0), 5.0);
        assert_eq!(d.at(9.99), 5.0);
        assert_eq!(d.at(10.0), 8.0);
        let mut problems = Vec::new();
        DistanceProfile(vec![(1.0, 5.0), (0.5, -1.0)]).validate(&mut problems);
        assert_eq!(problems.len(), 3);
    }
}
