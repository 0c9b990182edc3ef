//! Half-wavelength uniform linear array with per-element RF mismatch.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Beamwidth constant of a ULA: `theta_3dB ~= 0.866 / N` radians.
pub const BEAMWIDTH_CONSTANT: f64 = 0.866;

/// How the beamforming weights relate to the array response.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainMode {
    /// Weight and response are the same mismatched steering vector, so the
    /// element phase errors cancel and the peak gain is `(sum rho^2)^2 / N`.
    #[default]
    Literal,
    /// Weights are ideal phase ramps; the mismatch only affects the response.
    IdealWeights,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    pub n_elements: usize,
    /// Standard deviation of the element amplitude error, in dB.
    pub amplitude_mismatch_db_std: f64,
    /// Half-width of the uniform element phase error, in radians.
    pub phase_mismatch_bound: f64,
    #[serde(default)]
    pub gain_mode: GainMode,
}

impl ArrayConfig {
    pub fn ideal(n_elements: usize) -> Self {
        Self {
            n_elements,
            amplitude_mismatch_db_std: 0.0,
            phase_mismatch_bound: 0.0,
            gain_mode: GainMode::Literal,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let mut problems = Vec::new();
        if self.n_elements == 0 {
            problems.push("n_elements must be at least 1".to_string());
        }
        if !(self.amplitude_mismatch_db_std >= 0.0 && self.amplitude_mismatch_db_std.is_finite()) {
            problems.push("amplitude mismatch std must be finite and non-negative".to_string());
        }
        if !(self.phase_mismatch_bound >= 0.0 && self.phase_mismatch_bound < PI) {
            problems.push("phase mismatch bound must lie in [0, pi)".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(problems.join("; "))
        }
    }

    pub fn beamwidth_3db(&self) -> f64 {
        beamwidth_3db(self.n_elements)
    }
}

/// Per-element complex hardware factors `rho_n * exp(j psi_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RfMismatch {
    factors: Vec<Complex64>,
}

impl RfMismatch {
    pub fn ideal(n_elements: usize) -> Self {
        Self {
            factors: vec![Complex64::new(1.0, 0.0); n_elements],
        }
    }

    pub fn draw<R: Rng + ?Sized>(config: &ArrayConfig, rng: &mut R) -> Self {
        let amplitude_db = Normal::new(0.0, config.amplitude_mismatch_db_std)
            .expect("validated amplitude std");
        let bound = config.phase_mismatch_bound;
        let factors = (0..config.n_elements)
            .map(|_| {
                let db: f64 = amplitude_db.sample(rng);
                let psi = if bound > 0.0 {
                    rng.random_range(-bound..bound)
                } else {
                    0.0
                };
                Complex64::from_polar(10f64.powf(db / 10.0), psi)
            })
            .collect();
        Self { factors }
    }

    pub fn from_factors(factors: Vec<Complex64>) -> Self {
        Self { factors }
    }

    pub fn factors(&self) -> &[Complex64] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }
}

pub fn draw_mismatch(config: &ArrayConfig, seed: u64) -> RfMismatch {
    RfMismatch::draw(config, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// `a_n(theta) = h_n exp(-j pi (n-1) sin theta)`.
pub fn steering_vector(theta: f64, mismatch: &RfMismatch) -> Vec<Complex64> {
    let s = theta.sin();
    mismatch
        .factors
        .iter()
        .enumerate()
        .map(|(n, h)| h * Complex64::from_polar(1.0, -PI * n as f64 * s))
        .collect()
}

/// Gain `(1/N) |w(theta_hat)^H a(theta_true)|^2` evaluated by direct inner
/// product of the two steering vectors.
pub fn array_gain(theta_hat: f64, theta_true: f64, config: &ArrayConfig, mismatch: &RfMismatch) -> f64 {
    let response = steering_vector(theta_true, mismatch);
    let weights = match config.gain_mode {
        GainMode::Literal => steering_vector(theta_hat, mismatch),
        GainMode::IdealWeights => steering_vector(theta_hat, &RfMismatch::ideal(mismatch.len())),
    };
    let inner: Complex64 = weights.iter().zip(&response).map(|(w, a)| w.conj() * a).sum();
    inner.norm_sqr() / mismatch.len() as f64
}

/// Closed-form array factor gain for an ideal ULA, as a function of the
/// sine-space pointing error `sin(theta_hat) - sin(theta_true)`.
pub fn ideal_gain_closed_form(sine_difference: f64, n_elements: usize) -> f64 {
    let n = n_elements as f64;
    let half = PI * sine_difference / 2.0;
    if half.sin().abs() < 1e-12 {
        // Main-lobe peak (or an exact grating lobe): the ratio tends to +-1.
        return n;
    }
    let den = n * half.sin();
    let ratio = (half * n).sin() / den;
    n * ratio * ratio
}

pub fn beamwidth_3db(n_elements: usize) -> f64 {
    BEAMWIDTH_CONSTANT / n_elements as f64
}

/// Element count whose nominal beamwidth is closest to `beamwidth` radians.
pub fn elements_for_beamwidth(beamwidth: f64) -> usize {
    ((BEAMWIDTH_CONSTANT / beamwidth).round() as usize).max(1)
}

/// A ULA with a fixed mismatch realization. The gain depends on the two
/// angles only through their sine difference, so the pattern is evaluated
/// as a polynomial in `exp(j pi (sin theta_hat - sin theta_true))`.
#[derive(Debug, Clone)]
pub struct Ula {
    config: ArrayConfig,
    mismatch: RfMismatch,
    pattern_weights: Vec<Complex64>,
    peak_gain: f64,
}

impl Ula {
    pub fn new(config: ArrayConfig, mismatch: RfMismatch) -> Self {
        assert_eq!(config.n_elements, mismatch.len(), "mismatch length must equal N");
        let pattern_weights: Vec<Complex64> = match config.gain_mode {
            GainMode::Literal => mismatch.factors.iter().map(|h| Complex64::new(h.norm_sqr(), 0.0)).collect(),
            GainMode::IdealWeights => mismatch.factors.clone(),
        };
        let mut ula = Self {
            config,
            mismatch,
            pattern_weights,
            peak_gain: 0.0,
        };
        ula.peak_gain = ula.gain_from_sine_difference(0.0);
        ula
    }

    pub fn ideal(n_elements: usize) -> Self {
        Self::new(ArrayConfig::ideal(n_elements), RfMismatch::ideal(n_elements))
    }

    pub fn config(&self) -> &ArrayConfig {
        &self.config
    }

    pub fn mismatch(&self) -> &RfMismatch {
        &self.mismatch
    }

    pub fn n_elements(&self) -> usize {
        self.config.n_elements
    }

    /// Gain with zero pointing error.
    pub fn peak_gain(&self) -> f64 {
        self.peak_gain
    }

    pub fn gain(&self, theta_hat: f64, theta_true: f64) -> f64 {
        if theta_hat == theta_true {
            return self.peak_gain;
        }
        self.gain_from_sine_difference(theta_hat.sin() - theta_true.sin())
    }

    pub fn gain_from_sine_difference(&self, sine_difference: f64) -> f64 {
        if self.config.gain_mode == GainMode::Literal {
            return self.real_pattern_gain(PI * sine_difference);
        }
        let z = Complex64::from_polar(1.0, PI * sine_difference);
        let mut acc = Complex64::new(0.0, 0.0);
        for w in self.pattern_weights.iter().rev() {
            acc = acc * z + w;
        }
        acc.norm_sqr() / self.config.n_elements as f64
    }

    /// Clenshaw evaluation of `sum w_n exp(j n x)` for real weights.
    fn real_pattern_gain(&self, x: f64) -> f64 {
        let (sin_x, cos_x) = x.sin_cos();
        let two_cos = 2.0 * cos_x;
        let (mut b1, mut b2) = (0.0, 0.0);
        for w in self.pattern_weights[1..].iter().rev() {
            let b0 = w.re + two_cos * b1 - b2;
            b2 = b1;
            b1 = b0;
        }
        let re = self.pattern_weights[0].re + b1 * cos_x - b2;
        let im = b1 * sin_x;
        (re * re + im * im) / self.config.n_elements as f64
    }
}
