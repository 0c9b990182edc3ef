//! Beacon-interval timing, pointing policies and the frame-error rule.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::to_db;
use crate::geometry::{los_true, LinkState};

/// A frame is lost if the SNR drops this far below the oracle SNR at any step.
pub const FRAME_ERROR_MARGIN_DB: f64 = 6.0;

const DIVISIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum ProtocolError {
    #[error("sensor-aided estimate requires a predicted peer height")]
    MissingPrediction,
    #[error("conventional estimate requires a beam-alignment anchor")]
    MissingAnchor,
    #[error("SNR traces differ in length ({policy} vs {ideal})")]
    LengthMismatch { policy: usize, ideal: usize },
}

/// Timing of one beacon interval, all in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameConfig {
    pub bi_duration: f64,
    pub signaling_overhead: f64,
    pub ba_overhead: f64,
    pub time_step: f64,
    pub distance_update_period: f64,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self {
            bi_duration: 0.010,
            signaling_overhead: 0.1e-3,
            ba_overhead: 1.9e-3,
            time_step: 2e-3,
            distance_update_period: 0.2,
        }
    }
}

impl FrameConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if !(self.signaling_overhead > 0.0) {
            problems.push("frame.signaling_overhead_s must be positive".into());
        }
        if !(self.ba_overhead >= 0.0) {
            problems.push("frame.ba_overhead_s must be non-negative".into());
        }
        if !(self.signaling_overhead + self.ba_overhead < self.bi_duration) {
            problems.push("frame overheads must be shorter than frame.bi_duration_s".into());
        }
        if !(self.time_step > 0.0) {
            problems.push("frame.time_step_s must be positive".into());
        } else {
            if !divides(self.time_step, self.bi_duration) {
                problems.push("frame.time_step_s must divide frame.bi_duration_s".into());
            }
            if !(self.distance_update_period >= self.time_step) {
                problems.push("frame.distance_update_period_s must be at least one time step".into());
            }
        }
        problems
    }

    pub fn steps_per_bi(&self) -> usize {
        (self.bi_duration / self.time_step).round() as usize
    }

    pub fn steps_per_distance_update(&self) -> usize {
        ((self.distance_update_period / self.time_step).round() as usize).max(1)
    }
}

fn divides(step: f64, total: f64) -> bool {
    let ratio = total / step;
    (ratio - ratio.round()).abs() * step <= DIVISIBILITY_TOL && ratio.round() >= 1.0
}

/// How the LOS direction is estimated inside a beacon interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PointingPolicy {
    /// Beam sweep at the start of every interval; the peer height is frozen
    /// at that instant and the sweep leaves a uniform residual error.
    ConventionalBa {
        /// When set, the estimate divides by the ranged distance (with this
        /// accuracy) instead of the true one.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ranging_std: Option<f64>,
    },
    /// Peer stroke predictions exchanged at the interval start, combined with
    /// the ranged distance.
    SensorAided { ranging_std: f64 },
    /// Exact geometry at every step.
    IdealOracle,
}

impl PointingPolicy {
    pub fn conventional() -> Self {
        PointingPolicy::ConventionalBa { ranging_std: None }
    }

    pub fn sensor_aided(ranging_std: f64) -> Self {
        PointingPolicy::SensorAided { ranging_std }
    }

    pub fn ranging_std(&self) -> f64 {
        match *self {
            PointingPolicy::ConventionalBa { ranging_std } => ranging_std.unwrap_or(0.0),
            PointingPolicy::SensorAided { ranging_std } => ranging_std,
            PointingPolicy::IdealOracle => 0.0,
        }
    }

    pub fn uses_ranging(&self) -> bool {
        matches!(
            self,
            PointingPolicy::SensorAided { .. } | PointingPolicy::ConventionalBa { ranging_std: Some(_) }
        )
    }

    /// Stable identifier used in output files.
    pub fn label(&self) -> String {
        match *self {
            PointingPolicy::ConventionalBa { ranging_std: None } => "conventional_ba".into(),
            PointingPolicy::ConventionalBa { ranging_std: Some(s) } => format!("conventional_ba_sr{s}"),
            PointingPolicy::SensorAided { ranging_std } => format!("sensor_aided_sr{ranging_std}"),
            PointingPolicy::IdealOracle => "ideal_oracle".into(),
        }
    }

    pub fn validate(&self) -> Option<String> {
        let s = self.ranging_std();
        (!(s >= 0.0 && s.is_finite())).then(|| format!("policy {}: ranging_std must be non-negative", self.label()))
    }
}

/// Fraction of the interval left for data.
pub fn efficiency(policy: &PointingPolicy, frame: &FrameConfig) -> f64 {
    match policy {
        PointingPolicy::ConventionalBa { .. } => {
            1.0 - (frame.signaling_overhead + frame.ba_overhead) / frame.bi_duration
        }
        PointingPolicy::SensorAided { .. } => 1.0 - frame.signaling_overhead / frame.bi_duration,
        PointingPolicy::IdealOracle => 1.0,
    }
}

/// What a conventional sweep leaves behind at the start of an interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaAnchor {
    /// Peer height at the alignment instant.
    pub peer_height: f64,
    /// Residual LOS error of the sweep, radians.
    pub alignment_error: f64,
}

/// Residual sweep error, uniform on `(-beamwidth, +beamwidth)`.
pub fn draw_alignment_error<R: Rng + ?Sized>(beamwidth: f64, rng: &mut R) -> f64 {
    beamwidth * rng.random_range(-1.0..1.0)
}

/// Ranging noise with standard deviation `ranging_std`.
pub fn draw_ranging_noise<R: Rng + ?Sized>(ranging_std: f64, rng: &mut R) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    ranging_std * z
}

/// Estimated LOS elevation seen from vehicle 1.
///
/// `link.measured_distance` must already carry the ranging noise of the
/// current update epoch.
pub fn estimate_los(
    policy: &PointingPolicy,
    link: &LinkState,
    anchor: Option<&BaAnchor>,
    predicted_h2: Option<f64>,
) -> Result<f64, ProtocolError> {
    match policy {
        PointingPolicy::ConventionalBa { ranging_std } => {
            let anchor = anchor.ok_or(ProtocolError::MissingAnchor)?;
            let distance = if ranging_std.is_some() {
                link.measured_distance
            } else {
                link.distance
            };
            Ok(los_true(link.h1, anchor.peer_height, distance) + anchor.alignment_error)
        }
        PointingPolicy::SensorAided { .. } => {
            let h2_hat = predicted_h2.ok_or(ProtocolError::MissingPrediction)?;
            Ok(los_true(link.h1, h2_hat, link.measured_distance))
        }
        PointingPolicy::IdealOracle => Ok(link.los()),
    }
}

/// Estimated and ideal pointing angles of both arrays at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointingDecision {
    pub theta_point_hat: [f64; 2],
    pub theta_point_true: [f64; 2],
}

impl PointingDecision {
    pub fn mispointing(&self, vehicle: usize) -> f64 {
        self.theta_point_hat[vehicle] - self.theta_point_true[vehicle]
    }
}

/// Pointing angles given each vehicle's own pitch (known exactly) and the
/// link LOS estimate. Vehicle 2 sees the LOS mirrored.
pub fn pointing_angles(pitch1: f64, pitch2: f64, los_hat: f64, los: f64) -> PointingDecision {
    PointingDecision {
        theta_point_hat: [-pitch1 + los_hat, -pitch2 - los_hat],
        theta_point_true: [-pitch1 + los, -pitch2 - los],
    }
}

/// Smallest per-step SNR margin, in dB, relative to the oracle trace.
pub fn min_margin_db(snr_trace: &[f64], ideal_snr_trace: &[f64]) -> Result<f64, ProtocolError> {
    if snr_trace.len() != ideal_snr_trace.len() {
        return Err(ProtocolError::LengthMismatch {
            policy: snr_trace.len(),
            ideal: ideal_snr_trace.len(),
        });
    }
    Ok(snr_trace
        .iter()
        .zip(ideal_snr_trace)
        .map(|(s, i)| to_db(*s) - to_db(*i))
        .fold(f64::INFINITY, f64::min))
}

pub fn margin_ok(margin_db: f64) -> bool {
    !(margin_db < -FRAME_ERROR_MARGIN_DB)
}

/// `false` iff some step falls more than the margin below the oracle.
pub fn frame_ok(snr_trace: &[f64], ideal_snr_trace: &[f64]) -> Result<bool, ProtocolError> {
    min_margin_db(snr_trace, ideal_snr_trace).map(margin_ok)
}
