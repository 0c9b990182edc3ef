use serde::{Deserialize, Serialize};

use super::{DynamicsError, StrokeTrace, TraceOrigin};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterpolationKind {
    /// Natural cubic spline through the knots.
    #[default]
    CubicSpline,
    Linear,
}

impl InterpolationKind {
    fn min_knots(self) -> usize {
        match self {
            InterpolationKind::CubicSpline => 3,
            InterpolationKind::Linear => 2,
        }
    }
}

/// Upsamples `trace` by an integer factor with a natural cubic spline.
pub fn interpolate(trace: &StrokeTrace, factor: usize) -> Result<StrokeTrace, DynamicsError> {
    interpolate_with(trace, factor, InterpolationKind::CubicSpline)
}

/// Upsamples `trace` by `factor`. The output has `(len - 1) * factor + 1`
/// samples and reproduces every original sample exactly.
pub fn interpolate_with(
    trace: &StrokeTrace,
    factor: usize,
    kind: InterpolationKind,
) -> Result<StrokeTrace, DynamicsError> {
    if factor == 0 {
        return Err(DynamicsError::InvalidFactor);
    }
    if factor == 1 {
        return Ok(trace.clone());
    }
    let y = trace.samples();
    if y.len() < kind.min_knots() {
        return Err(DynamicsError::TraceTooShort {
            required: kind.min_knots(),
            actual: y.len(),
        });
    }

    let curvature = match kind {
        InterpolationKind::CubicSpline => natural_spline_curvature(y),
        InterpolationKind::Linear => vec![0.0; y.len()],
    };

    let mut out = Vec::with_capacity((y.len() - 1) * factor + 1);
    for i in 0..y.len() - 1 {
        out.push(y[i]);
        let (y0, y1) = (y[i], y[i + 1]);
        let (m0, m1) = (curvature[i], curvature[i + 1]);
        for j in 1..factor {
            let u = j as f64 / factor as f64;
            let v = 1.0 - u;
            let linear = v * y0 + u * y1;
            let cubic = ((v * v * v - v) * m0 + (u * u * u - u) * m1) / 6.0;
            out.push(linear + cubic);
        }
    }
    out.push(y[y.len() - 1]);

    StrokeTrace::with_sanity_limit(
        out,
        trace.sample_rate() * factor as f64,
        TraceOrigin::Interpolated,
        f64::INFINITY,
    )
}

/// Second derivatives of the natural cubic spline through unit-spaced knots,
/// via the Thomas algorithm on `M[i-1] + 4 M[i] + M[i+1] = 6 (y[i-1] - 2 y[i] + y[i+1])`.
fn natural_spline_curvature(y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    let inner = n - 2;
    let mut c_prime = vec![0.0; inner];
    let mut d_prime = vec![0.0; inner];
    for k in 0..inner {
        let i = k + 1;
        let rhs = 6.0 * (y[i - 1] - 2.0 * y[i] + y[i + 1]);
        if k == 0 {
            c_prime[k] = 1.0 / 4.0;
            d_prime[k] = rhs / 4.0;
        } else {
            let denom = 4.0 - c_prime[k - 1];
            c_prime[k] = 1.0 / denom;
            d_prime[k] = (rhs - d_prime[k - 1]) / denom;
        }
    }
    m[inner] = d_prime[inner - 1];
    for k in (0..inner - 1).rev() {
        m[k + 1] = d_prime[k] - c_prime[k] * m[k + 2];
    }
    m
}
