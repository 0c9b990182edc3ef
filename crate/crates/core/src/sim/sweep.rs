use serde::{Deserialize, Serialize};

use crate::protocol::PointingPolicy;
use crate::sim::config::{ConfigError, ScenarioConfig};
use crate::sim::engine::{run_scenario, SimResult};
use crate::Result;

/// Parameter varied by a sweep. Values are SI: seconds, radians, metres.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Beacon interval duration.
    BiDuration,
    /// 3 dB beamwidth; the element count becomes `round(0.866 / beamwidth)`.
    Beamwidth,
    /// Ranging noise of the sensor-aided policies.
    RangingStd,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            Self::BiDuration => "bi_duration",
            Self::Beamwidth => "beamwidth",
            Self::RangingStd => "ranging_std",
        }
    }

    /// Conversion from the user-facing unit (ms, degrees, m) to SI.
    pub fn from_user_unit(self, value: f64) -> f64 {
        match self {
            Self::BiDuration => value * 1e-3,
            Self::Beamwidth => value.to_radians(),
            Self::RangingStd => value,
        }
    }

    pub fn to_user_unit(self, value: f64) -> f64 {
        match self {
            Self::BiDuration => value * 1e3,
            Self::Beamwidth => value.to_degrees(),
            Self::RangingStd => value,
        }
    }

    /// Returns the base configuration with this axis set to `value`.
    pub fn apply(self, base: &ScenarioConfig, value: f64) -> Result<ScenarioConfig, ConfigError> {
        let invalid = |reason: String| ConfigError::InvalidAxisValue {
            axis: self.name().into(),
            value,
            reason,
        };
        let mut cfg = base.clone();
        match self {
            Self::BiDuration => {
                if !(value > 0.0 && value.is_finite()) {
                    return Err(invalid("must be positive".into()));
                }
                cfg.frame.bi_duration = value;
            }
            Self::Beamwidth => {
                if !(value > 0.0 && value.is_finite()) {
                    return Err(invalid("must be positive".into()));
                }
                cfg = cfg.with_beamwidth(value);
            }
            Self::RangingStd => {
                if !(value >= 0.0 && value.is_finite()) {
                    return Err(invalid("must be non-negative".into()));
                }
                if !cfg.policies.iter().any(|p| matches!(p, PointingPolicy::SensorAided { .. })) {
                    return Err(invalid("scenario has no sensor-aided policy".into()));
                }
                for p in &mut cfg.policies {
                    if let PointingPolicy::SensorAided { ranging_std } = p {
                        *ranging_std = value;
                    }
                }
            }
        }
        cfg.validate().map_err(|e| match e {
            ConfigError::Invalid(problems) => invalid(problems.join("; ")),
            other => other,
        })?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// SI value of the swept parameter.
    pub axis_value: f64,
    pub result: SimResult,
}

/// Runs the base scenario once per value. All values are checked before
/// anything is simulated.
pub fn sweep(base: &ScenarioConfig, axis: SweepAxis, values: &[f64]) -> Result<Vec<SweepPoint>> {
    let configs = values
        .iter()
        .map(|&v| axis.apply(base, v))
        .collect::<Result<Vec<_>, _>>()?;
    values
        .iter()
        .zip(configs)
        .map(|(&axis_value, cfg)| {
            Ok(SweepPoint {
                axis_value,
                result: run_scenario(&cfg)?,
            })
        })
        .collect()
}
