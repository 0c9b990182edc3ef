//! Monte Carlo engine.
//!
//! Every run draws its own stroke realizations, RF mismatch and channel
//! randomness from streams keyed by `(master_seed, run, purpose, index)`, so
//! all policies inside a run see identical conditions and any run can be
//! reproduced in isolation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array::{RfMismatch, Ula};
use crate::channel::{noise_power_dbm, path_loss_db, LinkBudgetSample};
use crate::dynamics::{
    fit_ar, interpolate_with, predict, read_trace_csv, synthesize, ArModel, DynamicsError, StrokeTrace,
};
use crate::geometry::{pitch_angle, LinkState, VehicleGeometry};
use crate::protocol::{
    draw_alignment_error, efficiency, estimate_los, frame_ok, min_margin_db, pointing_angles, BaAnchor,
    PointingPolicy,
};
use crate::rng::{derive_seed, stream, StreamTag};
use crate::sim::config::{ScenarioConfig, ShadowingRedraw, StrokeSource};
use crate::{Error, Result};
use rand_distr::{Distribution, StandardNormal};

/// Lower clamp on a ranged distance, as a fraction of the true distance.
const MIN_RANGED_FRACTION: f64 = 1e-3;

const MIN_FIT_SAMPLES_PER_ORDER: usize = 100;

/// Outcome of one policy over one beacon interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiRecord {
    pub run: usize,
    pub bi: usize,
    /// Index into the scenario's policy list.
    pub policy: usize,
    pub efficiency: f64,
    pub throughput_bps: f64,
    pub min_margin_db: f64,
    pub frame_ok: bool,
}

/// Aggregate over all runs and intervals of one policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySummary {
    pub label: String,
    pub policy: PointingPolicy,
    pub efficiency: f64,
    pub mean_throughput_bps: f64,
    pub frame_error_rate: f64,
    pub n_records: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub master_seed: u64,
    pub config_hash: String,
    pub n_monte_carlo: usize,
    pub n_bi_per_run: usize,
    pub n_elements: usize,
    pub beamwidth_3db_rad: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub metadata: RunMetadata,
    pub policies: Vec<PolicySummary>,
}

impl SimResult {
    pub fn policy(&self, label: &str) -> Option<&PolicySummary> {
        self.policies.iter().find(|p| p.label == label)
    }
}

/// A validated scenario with its measured traces loaded.
#[derive(Debug, Clone)]
pub struct Scenario {
    config: ScenarioConfig,
    measured: [Option<StrokeTrace>; 2],
    noise_dbm: f64,
    steps_per_bi: usize,
    n_bi: usize,
    warmup: usize,
}

impl Scenario {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let load = |source: &StrokeSource, geom: &VehicleGeometry| -> Result<Option<StrokeTrace>> {
            match source {
                StrokeSource::Synthetic { .. } => Ok(None),
                StrokeSource::Csv { path } => {
                    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
                    let trace = read_trace_csv(file)?;
                    Ok(Some(trace.recentered(geom.rest_height)))
                }
            }
        };
        let measured = [
            load(&config.stroke1, &config.vehicle1)?,
            load(&config.stroke2, &config.vehicle2)?,
        ];
        let expected_rate = 1.0 / config.frame.time_step;
        for trace in measured.iter().flatten() {
            let rate = trace.sample_rate() * config.interpolation_factor as f64;
            if (rate - expected_rate).abs() > 1e-6 * expected_rate {
                return Err(crate::sim::ConfigError::Invalid(vec![format!(
                    "measured trace at {} Hz x interpolation factor {} does not match time step {} s",
                    trace.sample_rate(),
                    config.interpolation_factor,
                    config.frame.time_step
                )])
                .into());
            }
        }
        Ok(Self {
            noise_dbm: noise_power_dbm(&config.channel),
            steps_per_bi: config.frame.steps_per_bi(),
            n_bi: config.n_bi(),
            warmup: config.predictor_order,
            measured,
            config,
        })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn n_bi(&self) -> usize {
        self.n_bi
    }

    pub fn steps_per_bi(&self) -> usize {
        self.steps_per_bi
    }

    /// Fine-grid samples needed per vehicle: predictor warm-up plus the
    /// simulated horizon.
    pub fn trace_len(&self) -> usize {
        self.warmup + self.n_bi * self.steps_per_bi
    }

    pub fn metadata(&self) -> RunMetadata {
        RunMetadata {
            master_seed: self.config.master_seed,
            config_hash: self.config.hash(),
            n_monte_carlo: self.config.n_monte_carlo,
            n_bi_per_run: self.n_bi,
            n_elements: self.config.array.n_elements,
            beamwidth_3db_rad: self.config.beamwidth_3db(),
        }
    }

    fn needs_predictor(&self) -> bool {
        self.config
            .policies
            .iter()
            .any(|p| matches!(p, PointingPolicy::SensorAided { .. }))
    }

    fn fine_trace(&self, vehicle: usize, run: usize) -> Result<StrokeTrace> {
        let (source, tag) = match vehicle {
            0 => (&self.config.stroke1, StreamTag::StrokeVehicle1),
            _ => (&self.config.stroke2, StreamTag::StrokeVehicle2),
        };
        let factor = self.config.interpolation_factor;
        // Short scenarios still get enough samples for a stable fit.
        let needed = self.trace_len().max(MIN_FIT_SAMPLES_PER_ORDER * self.config.predictor_order);
        let coarse_len = (needed - 1).div_ceil(factor) + 1;
        let coarse = match source {
            StrokeSource::Synthetic { model } => {
                let seed = derive_seed(self.config.master_seed, &[run as u64, tag as u64]);
                synthesize(model, coarse_len, seed)?
            }
            StrokeSource::Csv { .. } => {
                let trace = self.measured[vehicle].clone().expect("measured trace loaded");
                if trace.len() < coarse_len {
                    return Err(DynamicsError::TraceTooShort {
                        required: coarse_len,
                        actual: trace.len(),
                    }
                    .into());
                }
                trace
            }
        };
        Ok(interpolate_with(&coarse, factor, self.config.interpolation)?)
    }
}

/// Per-run state shared by all policies.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub run: usize,
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    /// Predictor for the peer (vehicle 2) stroke, fitted on its fine trace.
    pub predictor: Option<ArModel>,
    pub ula1: Ula,
    pub ula2: Ula,
    /// Standard-normal ranging draws, one per distance update epoch.
    pub ranging_z: Vec<f64>,
    pub shadow_per_run_db: Option<f64>,
}

impl RunContext {
    pub fn new(scenario: &Scenario, run: usize) -> Result<Self> {
        let cfg = &scenario.config;
        let seed = cfg.master_seed;
        let r = run as u64;
        let h1 = scenario.fine_trace(0, run)?.into_samples();
        let trace2 = scenario.fine_trace(1, run)?;
        let predictor = if scenario.needs_predictor() {
            Some(fit_ar(&trace2, cfg.predictor_order)?)
        } else {
            None
        };
        let h2 = trace2.into_samples();
        let mismatch = |tag: StreamTag| RfMismatch::draw(&cfg.array, &mut stream(seed, &[r, tag as u64]));
        let ula1 = Ula::new(cfg.array, mismatch(StreamTag::MismatchVehicle1));
        let ula2 = Ula::new(cfg.array, mismatch(StreamTag::MismatchVehicle2));
        let total_steps = scenario.n_bi * scenario.steps_per_bi;
        let n_epochs = total_steps.div_ceil(cfg.frame.steps_per_distance_update());
        let mut ranging_rng = stream(seed, &[r, StreamTag::Ranging as u64]);
        let ranging_z = (0..n_epochs).map(|_| StandardNormal.sample(&mut ranging_rng)).collect();
        let shadow_per_run_db = (cfg.shadowing == ShadowingRedraw::PerRun)
            .then(|| cfg.channel.draw_shadowing(&mut stream(seed, &[r, StreamTag::Shadowing as u64])));
        Ok(Self {
            run,
            h1,
            h2,
            predictor,
            ula1,
            ula2,
            ranging_z,
            shadow_per_run_db,
        })
    }
}

/// Simulates interval `bi` of a run for every policy of the scenario,
/// appending one record per policy to `out`.
pub fn run_bi(scenario: &Scenario, ctx: &RunContext, bi: usize, out: &mut Vec<BiRecord>) -> Result<()> {
    let cfg = &scenario.config;
    let seed = cfg.master_seed;
    let r = ctx.run as u64;
    let steps = scenario.steps_per_bi;
    let first_step = bi * steps;
    let k0 = scenario.warmup + first_step;

    let shadow_db = match ctx.shadow_per_run_db {
        Some(s) => s,
        None => cfg
            .channel
            .draw_shadowing(&mut stream(seed, &[r, StreamTag::Shadowing as u64, bi as u64])),
    };
    let beamwidth = cfg.beamwidth_3db();
    let alignment_error =
        draw_alignment_error(beamwidth, &mut stream(seed, &[r, StreamTag::BeamAlignment as u64, bi as u64]));
    let anchor = BaAnchor {
        peer_height: ctx.h2[k0],
        alignment_error,
    };
    // Sensor data is exchanged at the start of the interval: the peer
    // height is exact there and predicted afterwards.
    let predicted_h2: Option<Vec<f64>> = match &ctx.predictor {
        Some(model) => {
            let history = &ctx.h2[k0 + 1 - model.order()..=k0];
            let mut p = Vec::with_capacity(steps);
            p.push(ctx.h2[k0]);
            p.extend(predict(model, history, steps - 1)?);
            Some(p)
        }
        None => None,
    };

    let update = cfg.frame.steps_per_distance_update();
    let peak_db = [ctx.ula1.peak_gain(), ctx.ula2.peak_gain()];
    let mut ideal_snr = Vec::with_capacity(steps);
    let mut links = Vec::with_capacity(steps);
    let mut path_losses = Vec::with_capacity(steps);
    for i in 0..steps {
        let step = first_step + i;
        let k = k0 + i;
        let distance = cfg.distance.at(step as f64 * cfg.frame.time_step);
        let pl = path_loss_db(distance, &cfg.channel, shadow_db);
        let budget = LinkBudgetSample::evaluate(&cfg.channel, pl, peak_db[0], peak_db[1], scenario.noise_dbm);
        ideal_snr.push(budget.snr_linear);
        path_losses.push(pl);
        links.push(LinkState {
            time_index: step,
            h1: ctx.h1[k],
            h2: ctx.h2[k],
            distance,
            measured_distance: distance,
        });
    }

    let mut snr = Vec::with_capacity(steps);
    for (index, policy) in cfg.policies.iter().enumerate() {
        snr.clear();
        for (i, link) in links.iter().enumerate() {
            let mut link = *link;
            let sigma = policy.ranging_std();
            if policy.uses_ranging() && sigma > 0.0 {
                let z = ctx.ranging_z[link.time_index / update];
                link.measured_distance = (link.distance + sigma * z).max(MIN_RANGED_FRACTION * link.distance);
            }
            let h2_hat = predicted_h2.as_ref().map(|p| p[i]);
            let los_hat = estimate_los(policy, &link, Some(&anchor), h2_hat)?;
            let pitch1 = pitch_angle(link.h1, cfg.vehicle1.rest_height, cfg.vehicle1.length);
            let pitch2 = pitch_angle(link.h2, cfg.vehicle2.rest_height, cfg.vehicle2.length);
            let decision = pointing_angles(pitch1, pitch2, los_hat, link.los());
            let g1 = ctx.ula1.gain(decision.theta_point_hat[0], decision.theta_point_true[0]);
            let g2 = ctx.ula2.gain(decision.theta_point_hat[1], decision.theta_point_true[1]);
            let budget = LinkBudgetSample::evaluate(&cfg.channel, path_losses[i], g1, g2, scenario.noise_dbm);
            snr.push(budget.snr_linear);
        }
        let margin = min_margin_db(&snr, &ideal_snr)?;
        let ok = frame_ok(&snr, &ideal_snr)?;
        let eta = efficiency(policy, &cfg.frame);
        let throughput = if ok {
            let mean_log = snr.iter().map(|s| (1.0 + s).log2()).sum::<f64>() / steps as f64;
            eta * cfg.channel.bandwidth * mean_log
        } else {
            0.0
        };
        out.push(BiRecord {
            run: ctx.run,
            bi,
            policy: index,
            efficiency: eta,
            throughput_bps: throughput,
            min_margin_db: margin,
            frame_ok: ok,
        });
    }
    Ok(())
}

/// Simulates every interval of one run.
pub fn run_once(scenario: &Scenario, run: usize) -> Result<Vec<BiRecord>> {
    let ctx = RunContext::new(scenario, run)?;
    let mut records = Vec::with_capacity(scenario.n_bi * scenario.config.policies.len());
    for bi in 0..scenario.n_bi {
        run_bi(scenario, &ctx, bi, &mut records)?;
    }
    Ok(records)
}

#[derive(Debug, Clone, Default)]
struct Accumulator {
    throughput: f64,
    errors: usize,
    count: usize,
}

/// Runs all Monte Carlo runs and aggregates them. Every record is passed to
/// `sink` in `(run, bi, policy)` order regardless of how runs are scheduled,
/// so results and written files do not depend on the thread count.
pub fn run_scenario_with<F>(scenario: &Scenario, mut sink: F) -> Result<SimResult>
where
    F: FnMut(&BiRecord) -> Result<()>,
{
    let cfg = &scenario.config;
    let n_policies = cfg.policies.len();
    let mut acc = vec![Accumulator::default(); n_policies];
    let chunk = rayon::current_num_threads().max(1);
    let runs: Vec<usize> = (0..cfg.n_monte_carlo).collect();
    for batch in runs.chunks(chunk) {
        let outcomes: Vec<Result<Vec<BiRecord>>> = batch.par_iter().map(|&r| run_once(scenario, r)).collect();
        for outcome in outcomes {
            for record in outcome? {
                let a = &mut acc[record.policy];
                a.throughput += record.throughput_bps;
                a.errors += usize::from(!record.frame_ok);
                a.count += 1;
                sink(&record)?;
            }
        }
    }
    let policies = cfg
        .policies
        .iter()
        .zip(acc)
        .map(|(policy, a)| {
            let n = a.count.max(1) as f64;
            PolicySummary {
                label: policy.label(),
                policy: *policy,
                efficiency: efficiency(policy, &cfg.frame),
                mean_throughput_bps: a.throughput / n,
                frame_error_rate: a.errors as f64 / n,
                n_records: a.count,
            }
        })
        .collect();
    Ok(SimResult {
        metadata: scenario.metadata(),
        policies,
    })
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<SimResult> {
    let scenario = Scenario::new(config.clone())?;
    run_scenario_with(&scenario, |_| Ok(()))
}
