use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::DynamicsError;

/// Strokes are centimetre-scale; anything further than this from the trace
/// mean is treated as corrupt input.
pub const DEFAULT_SANITY_LIMIT_M: f64 = 0.5;

/// Tolerance when checking that a CSV trace is uniformly sampled.
const UNIFORM_STEP_TOL_S: f64 = 1e-6;

pub const TRACE_CSV_HEADER: [&str; 2] = ["time_s", "height_m"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceOrigin {
    Measured,
    Synthetic,
    Interpolated,
}

/// Uniformly sampled vertical antenna height, in metres.
#[derive(Debug, Clone, PartialEq)]
pub struct StrokeTrace {
    samples: Vec<f64>,
    sample_rate: f64,
    origin: TraceOrigin,
}

impl StrokeTrace {
    pub fn new(
        samples: Vec<f64>,
        sample_rate: f64,
        origin: TraceOrigin,
    ) -> Result<Self, DynamicsError> {
        Self::with_sanity_limit(samples, sample_rate, origin, DEFAULT_SANITY_LIMIT_M)
    }

    pub fn with_sanity_limit(
        samples: Vec<f64>,
        sample_rate: f64,
        origin: TraceOrigin,
        limit: f64,
    ) -> Result<Self, DynamicsError> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(DynamicsError::InvalidSampleRate(sample_rate));
        }
        if samples.is_empty() {
            return Err(DynamicsError::EmptyTrace);
        }
        if let Some(index) = samples.iter().position(|h| !h.is_finite()) {
            return Err(DynamicsError::NonFiniteSample { index });
        }
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        for (index, &h) in samples.iter().enumerate() {
            let deviation = (h - mean).abs();
            if deviation > limit {
                return Err(DynamicsError::SanityLimitExceeded {
                    index,
                    deviation,
                    limit,
                });
            }
        }
        Ok(Self {
            samples,
            sample_rate,
            origin,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn origin(&self) -> TraceOrigin {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        (self.samples.len() - 1) as f64 / self.sample_rate
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Shifts the trace so that its mean equals `rest_height`.
    pub fn recentered(&self, rest_height: f64) -> Self {
        let shift = rest_height - self.mean();
        Self {
            samples: self.samples.iter().map(|h| h + shift).collect(),
            sample_rate: self.sample_rate,
            origin: self.origin,
        }
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}

/// Reads a `time_s,height_m` CSV. Lines starting with `#` are comments.
pub fn read_trace_csv<R: Read>(reader: R) -> Result<StrokeTrace, DynamicsError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);

    let header_line = rdr.position().line();
    let headers = rdr.headers().map_err(|e| parse_err(header_line.max(1), e))?;
    if headers.iter().collect::<Vec<_>>() != TRACE_CSV_HEADER {
        return Err(DynamicsError::Parse {
            line: 1,
            message: format!(
                "expected header `time_s,height_m`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut times = Vec::new();
    let mut heights = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(line, e)
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 2 {
            return Err(DynamicsError::Parse {
                line,
                message: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let t: f64 = parse_field(&record[0], line, "time_s")?;
        let h: f64 = parse_field(&record[1], line, "height_m")?;
        if let Some(&prev) = times.last() {
            if t <= prev {
                return Err(DynamicsError::Parse {
                    line,
                    message: format!("time {t} is not strictly increasing (previous {prev})"),
                });
            }
            if times.len() >= 2 {
                let step = times[1] - times[0];
                if ((t - prev) - step).abs() > UNIFORM_STEP_TOL_S {
                    return Err(DynamicsError::Parse {
                        line,
                        message: format!(
                            "non-uniform time step {} (expected {step})",
                            t - prev
                        ),
                    });
                }
            }
        }
        times.push(t);
        heights.push(h);
    }

    if times.len() < 2 {
        return Err(DynamicsError::TraceTooShort {
            required: 2,
            actual: times.len(),
        });
    }
    let sample_rate = 1.0 / (times[1] - times[0]);
    StrokeTrace::new(heights, sample_rate, TraceOrigin::Measured)
}

pub fn write_trace_csv<W: Write>(trace: &StrokeTrace, writer: W) -> Result<(), csv::Error> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(TRACE_CSV_HEADER)?;
    for (i, h) in trace.samples().iter().enumerate() {
        let t = i as f64 / trace.sample_rate();
        wtr.write_record([t.to_string(), h.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

fn parse_field(raw: &str, line: u64, name: &str) -> Result<f64, DynamicsError> {
    let v: f64 = raw.parse().map_err(|_| DynamicsError::Parse {
        line,
        message: format!("cannot parse {name} value `{raw}`"),
    })?;
    if !v.is_finite() {
        return Err(DynamicsError::Parse {
            line,
            message: format!("{name} value `{raw}` is not finite"),
        });
    }
    Ok(v)
}

fn parse_err(line: u64, e: csv::Error) -> DynamicsError {
    DynamicsError::Parse {
        line,
        message: e.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_construction() {
        assert_eq!(
            StrokeTrace::new(vec![], 50.0, TraceOrigin::Measured),
            Err(DynamicsError::EmptyTrace)
        );
        assert_eq!(
            StrokeTrace::new(vec![0.5], 0.0, TraceOrigin::Measured),
            Err(DynamicsError::InvalidSampleRate(0.0))
        );
        assert_eq!(
            StrokeTrace::new(vec![0.5, f64::NAN], 50.0, TraceOrigin::Measured),
            Err(DynamicsError::NonFiniteSample { index: 1 })
        );
        assert!(matches!(
            StrokeTrace::new(vec![0.0, 0.0, 0.0, 3.0], 50.0, TraceOrigin::Measured),
            Err(DynamicsError::SanityLimitExceeded { .. })
        ));
    }

    #[test]
    fn recentering_moves_the_mean() {
        let t = StrokeTrace::new(vec![0.01, -0.01, 0.03], 50.0, TraceOrigin::Synthetic).unwrap();
        let r = t.recentered(1.0);
        assert!((r.mean() - 1.0).abs() < 1e-15);
        assert!((r.samples()[2] - r.samples()[0] - 0.02).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let t = StrokeTrace::new(vec![0.5, 0.51, 0.49, 0.5], 50.0, TraceOrigin::Synthetic).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&t, &mut buf).unwrap();
        let back = read_trace_csv(buf.as_slice()).unwrap();
        assert_eq!(back.samples(), t.samples());
        assert!((back.sample_rate() - 50.0).abs() < 1e-9);
        assert_eq!(back.origin(), TraceOrigin::Measured);
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let bad_header = "t,h\n0,0.5\n0.02,0.5\n";
        assert!(matches!(
            read_trace_csv(bad_header.as_bytes()),
            Err(DynamicsError::Parse { line: 1, .. })
        ));

        let bad_value = "time_s,height_m\n0,0.5\n0.02,abc\n";
        assert!(matches!(
            read_trace_csv(bad_value.as_bytes()),
            Err(DynamicsError::Parse { line: 3, .. })
        ));

        let non_uniform = "time_s,height_m\n0,0.5\n0.02,0.5\n0.05,0.5\n";
        assert!(matches!(
            read_trace_csv(non_uniform.as_bytes()),
            Err(DynamicsError::Parse { line: 4, .. })
        ));

        let backwards = "# comment\ntime_s,height_m\n0,0.5\n0,0.5\n";
        assert!(matches!(
            read_trace_csv(backwards.as_bytes()),
            Err(DynamicsError::Parse { line: 4, .. })
        ));
    }

    #[test]
    fn csv_tolerates_tiny_step_jitter() {
        let csv = "time_s,height_m\n0,0.5\n0.02,0.5\n0.0400000005,0.5\n";
        let t = read_trace_csv(csv.as_bytes()).unwrap();
        assert_eq!(t.len(), 3);
    }
}
