use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{DynamicsError, StrokeTrace, TraceOrigin};

/// Minimum number of samples per model coefficient accepted by [`fit_ar`].
const SAMPLES_PER_COEFFICIENT: usize = 10;

/// Burn-in length, in multiples of the order, discarded by [`synthesize`].
const BURN_IN_PER_COEFFICIENT: usize = 10;

/// Autoregressive model of a stroke process.
///
/// The process is `x[t] - mean = sum_k coefficients[k-1] * (x[t-k] - mean) + e[t]`
/// with `e[t] ~ N(0, innovation_variance)`. `sample_rate` records the rate the
/// model was fitted at (or is meant to be driven at).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArModel {
    order: usize,
    coefficients: Vec<f64>,
    innovation_variance: f64,
    mean: f64,
    sample_rate: f64,
}

impl ArModel {
    pub fn new(
        coefficients: Vec<f64>,
        innovation_variance: f64,
        mean: f64,
        sample_rate: f64,
    ) -> Result<Self, DynamicsError> {
        if coefficients.is_empty() {
            return Err(DynamicsError::InvalidOrder);
        }
        if !(innovation_variance.is_finite() && innovation_variance >= 0.0) {
            return Err(DynamicsError::InvalidVariance(innovation_variance));
        }
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(DynamicsError::InvalidSampleRate(sample_rate));
        }
        Ok(Self {
            order: coefficients.len(),
            coefficients,
            innovation_variance,
            mean,
            sample_rate,
        })
    }

    /// Builds a model whose poles are the given `(frequency_hz, radius)`
    /// conjugate pairs, scaled so the stationary standard deviation equals
    /// `target_std`.
    pub fn from_resonances(
        resonances: &[(f64, f64)],
        sample_rate: f64,
        target_std: f64,
        mean: f64,
    ) -> Result<Self, DynamicsError> {
        // A(z) = prod (1 - 2 r cos w z^-1 + r^2 z^-2), stored as [1, c1, c2, ...].
        let mut poly = vec![1.0];
        for &(freq, radius) in resonances {
            let w = 2.0 * std::f64::consts::PI * freq / sample_rate;
            let section = [1.0, -2.0 * radius * w.cos(), radius * radius];
            let mut next = vec![0.0; poly.len() + 2];
            for (i, &p) in poly.iter().enumerate() {
                for (j, &s) in section.iter().enumerate() {
                    next[i + j] += p * s;
                }
            }
            poly = next;
        }
        let coefficients: Vec<f64> = poly[1..].iter().map(|c| -c).collect();
        let unit = Self::new(coefficients, 1.0, mean, sample_rate)?;
        if !unit.is_stationary() {
            return Err(DynamicsError::UnstableModel);
        }
        let gain = unit.variance_gain();
        let mut model = unit;
        model.innovation_variance = target_std * target_std / gain;
        Ok(model)
    }

    /// Default stroke model for a passenger car sampled at 50 Hz: a handful of
    /// lightly damped body and suspension modes below 5 Hz.
    pub fn default_stroke(mean: f64) -> Self {
        Self::from_resonances(&DEFAULT_STROKE_RESONANCES, 50.0, DEFAULT_STROKE_STD_M, mean)
            .expect("default stroke resonances are stationary")
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn innovation_variance(&self) -> f64 {
        self.innovation_variance
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn with_mean(mut self, mean: f64) -> Self {
        self.mean = mean;
        self
    }

    /// Schur–Cohn test via the step-down recursion: the model is stationary
    /// iff every reflection coefficient has magnitude below one.
    pub fn is_stationary(&self) -> bool {
        reflection_coefficients(&self.coefficients).is_some_and(|ks| ks.iter().all(|k| k.abs() < 1.0))
    }

    /// Ratio of stationary process variance to innovation variance,
    /// `sum psi_k^2` over the impulse response.
    pub fn variance_gain(&self) -> f64 {
        let p = self.order;
        let mut psi = vec![0.0; p];
        let mut total = 0.0;
        let mut current = 1.0;
        for _ in 0..1_000_000 {
            total += current * current;
            psi.rotate_right(1);
            psi[0] = current;
            current = self.coefficients.iter().zip(&psi).map(|(a, x)| a * x).sum();
            let tail: f64 = psi.iter().map(|x| x.abs()).sum::<f64>() + current.abs();
            if tail < 1e-14 {
                break;
            }
        }
        total
    }

    /// Stationary variance of the process.
    pub fn process_variance(&self) -> f64 {
        self.innovation_variance * self.variance_gain()
    }

    fn one_step(&self, recent_newest_first: impl Iterator<Item = f64>) -> f64 {
        self.coefficients
            .iter()
            .zip(recent_newest_first)
            .map(|(a, x)| a * (x - self.mean))
            .sum::<f64>()
            + self.mean
    }
}

const DEFAULT_STROKE_STD_M: f64 = 0.07;

const DEFAULT_STROKE_RESONANCES: [(f64, f64); 5] = [
    (1.5, 0.98),
    (2.2, 0.975),
    (3.0, 0.965),
    (3.8, 0.95),
    (4.6, 0.93),
];

/// Step-down recursion from AR coefficients to reflection coefficients.
/// Returns `None` when an intermediate reflection has unit magnitude.
fn reflection_coefficients(coefficients: &[f64]) -> Option<Vec<f64>> {
    let mut a = coefficients.to_vec();
    let mut ks = Vec::with_capacity(a.len());
    while let Some(&k) = a.last() {
        ks.push(k);
        let denom = 1.0 - k * k;
        if denom <= 0.0 {
            return None;
        }
        let m = a.len();
        let prev: Vec<f64> = (0..m - 1).map(|j| (a[j] + k * a[m - 2 - j]) / denom).collect();
        a = prev;
    }
    ks.reverse();
    Some(ks)
}

/// Yule–Walker fit through the Levinson–Durbin recursion on the biased
/// autocovariance of the mean-removed trace.
pub fn fit_ar(trace: &StrokeTrace, order: usize) -> Result<ArModel, DynamicsError> {
    if order == 0 {
        return Err(DynamicsError::InvalidOrder);
    }
    let x = trace.samples();
    let required = SAMPLES_PER_COEFFICIENT * order;
    if x.len() < required {
        return Err(DynamicsError::TraceTooShort {
            required,
            actual: x.len(),
        });
    }

    let mean = trace.mean();
    let centered: Vec<f64> = x.iter().map(|h| h - mean).collect();
    let n = centered.len() as f64;
    let autocov: Vec<f64> = (0..=order)
        .map(|lag| {
            centered[lag..]
                .iter()
                .zip(&centered)
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / n
        })
        .collect();

    // Relative cut-off so that traces constant up to rounding are degenerate too.
    let scale = mean.abs().max(1.0);
    if autocov[0] <= (scale * 1e-12).powi(2) {
        return Err(DynamicsError::DegenerateTrace);
    }

    let mut a: Vec<f64> = Vec::with_capacity(order);
    let mut err = autocov[0];
    for m in 1..=order {
        let acc = autocov[m]
            - a.iter()
                .enumerate()
                .map(|(k, ak)| ak * autocov[m - 1 - k])
                .sum::<f64>();
        let k = acc / err;
        if !(k.abs() < 1.0) {
            return Err(DynamicsError::UnstableModel);
        }
        let prev = a.clone();
        for j in 0..a.len() {
            a[j] = prev[j] - k * prev[m - 2 - j];
        }
        a.push(k);
        err *= 1.0 - k * k;
    }

    ArModel::new(a, err.max(0.0), mean, trace.sample_rate())
}

/// Iterated one-step prediction of the next `horizon` samples after
/// `history` (oldest first). No innovation noise is injected.
pub fn predict(model: &ArModel, history: &[f64], horizon: usize) -> Result<Vec<f64>, DynamicsError> {
    let p = model.order();
    if history.len() < p {
        return Err(DynamicsError::HistoryTooShort {
            required: p,
            actual: history.len(),
        });
    }
    let mut window: Vec<f64> = history[history.len() - p..].to_vec();
    let mut out = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let next = model.one_step(window.iter().rev().copied());
        out.push(next);
        window.remove(0);
        window.push(next);
    }
    Ok(out)
}

/// Generates `length` samples from the model, discarding a burn-in of
/// ten times the order.
pub fn synthesize(model: &ArModel, length: usize, seed: u64) -> Result<StrokeTrace, DynamicsError> {
    if !model.is_stationary() {
        return Err(DynamicsError::UnstableModel);
    }
    if length == 0 {
        return Err(DynamicsError::EmptyTrace);
    }
    let p = model.order();
    let burn_in = BURN_IN_PER_COEFFICIENT * p;
    let noise = Normal::new(0.0, model.innovation_variance().sqrt())
        .map_err(|_| DynamicsError::InvalidVariance(model.innovation_variance()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Ring buffer of centred values, newest at `head`.
    let mut ring = vec![0.0; p];
    let mut head = 0usize;
    let mut out = Vec::with_capacity(length);
    for step in 0..burn_in + length {
        let mut x: f64 = noise.sample(&mut rng);
        for (k, a) in model.coefficients().iter().enumerate() {
            x += a * ring[(head + p - k) % p];
        }
        head = (head + 1) % p;
        ring[head] = x;
        if step >= burn_in {
            out.push(x + model.mean());
        }
    }
    StrokeTrace::with_sanity_limit(out, model.sample_rate(), TraceOrigin::Synthetic, f64::INFINITY)
}
