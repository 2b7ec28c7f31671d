//! Measured current/voltage traces: parsing, state segmentation and
//! extraction of a [`PowerProfile`] and [`ActivationCycle`].
//!
//! Trace files are UTF-8 CSV with the header `time_s,current_a,voltage_v` or
//! `time_s,current_a,voltage_v,state`. Lines starting with `#` are comments.
//! Each sample owns the interval up to the next sample; the last sample owns
//! the mean sampling interval.

use std::io::{self, Read, Write};

use serde::Serialize;

use crate::duty_cycle::{ActivationCycle, OperatingState, PowerProfile, TrafficModel};
use crate::error::{ensure_non_negative, ensure_positive, Error, Result};

const HEADER: [&str; 3] = ["time_s", "current_a", "voltage_v"];
const STATE_COLUMN: &str = "state";

/// Relative slack when comparing the trace span against whole activation cycles.
const SPAN_SLACK: f64 = 1e-6;

/// Fewer samples than this inside the shortest state triggers a warning.
pub const MIN_SAMPLES_PER_STATE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceSample {
    pub time_s: f64,
    pub current_a: f64,
    pub voltage_v: f64,
    pub state: Option<OperatingState>,
}

impl TraceSample {
    /// Instantaneous power `v·i`.
    pub fn power_w(&self) -> f64 {
        self.current_a * self.voltage_v
    }
}

/// Parses a trace from any reader.
pub fn parse_trace<R: Read>(source: R) -> Result<Vec<TraceSample>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .quoting(false)
        .from_reader(source);

    let mut records = reader.records();
    let header = match records.next() {
        None => return Err(Error::EmptyInput),
        Some(r) => r.map_err(csv_error)?,
    };
    let line_of = |r: &csv::StringRecord| r.position().map_or(0, |p| p.line());
    let labeled = if header.iter().eq(HEADER) {
        false
    } else if header
        .iter()
        .eq(HEADER.iter().copied().chain([STATE_COLUMN]))
    {
        true
    } else {
        return Err(Error::Parse {
            line: line_of(&header),
            message: format!(
                "expected header `time_s,current_a,voltage_v[,state]`, found `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    };
    let columns = if labeled { 4 } else { 3 };

    let mut samples: Vec<TraceSample> = Vec::new();
    for record in records {
        let record = record.map_err(csv_error)?;
        let line = line_of(&record);
        if record.len() != columns {
            return Err(Error::Parse {
                line,
                message: format!("expected {columns} fields, found {}", record.len()),
            });
        }
        let number = |idx: usize, name: &str| -> Result<f64> {
            let raw = &record[idx];
            let v: f64 = raw.parse().map_err(|_| Error::Parse {
                line,
                message: format!("{name}: `{raw}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    message: format!("{name}: `{raw}` is not finite"),
                });
            }
            Ok(v)
        };
        let time_s = number(0, "time_s")?;
        let current_a = number(1, "current_a")?;
        let voltage_v = number(2, "voltage_v")?;
        let range_error = |message: String| Error::Parse { line, message };
        if time_s < 0.0 {
            return Err(range_error(format!("time_s must be >= 0, got {time_s}")));
        }
        if current_a < 0.0 {
            return Err(range_error(format!(
                "current_a must be >= 0, got {current_a}"
            )));
        }
        if voltage_v <= 0.0 {
            return Err(range_error(format!(
                "voltage_v must be > 0, got {voltage_v}"
            )));
        }
        let state = if labeled && !record[3].is_empty() {
            Some(
                record[3]
                    .parse::<OperatingState>()
                    .map_err(|_| Error::Parse {
                        line,
                        message: format!("state: `{}` is not one of tx|rx|proc|idle", &record[3]),
                    })?,
            )
        } else {
            None
        };
        if let Some(prev) = samples.last() {
            if time_s <= prev.time_s {
                return Err(Error::Sequencing {
                    line,
                    previous: prev.time_s,
                    current: time_s,
                });
            }
        }
        samples.push(TraceSample {
            time_s,
            current_a,
            voltage_v,
            state,
        });
    }
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(samples)
}

/// Parses a trace held in memory.
pub fn parse_trace_str(source: &str) -> Result<Vec<TraceSample>> {
    parse_trace(source.as_bytes())
}

fn csv_error(err: csv::Error) -> Error {
    let line = err.position().map_or(0, |p| p.line());
    let message = match err.kind() {
        csv::ErrorKind::Utf8 { .. } => "invalid UTF-8".to_string(),
        _ => err.to_string(),
    };
    Error::Parse { line, message }
}

/// Writes samples in the trace CSV format. The state column is emitted when
/// any sample carries a label.
pub fn write_trace_csv<W: Write>(mut out: W, samples: &[TraceSample]) -> io::Result<()> {
    let labeled = samples.iter().any(|s| s.state.is_some());
    if labeled {
        writeln!(out, "time_s,current_a,voltage_v,state")?;
    } else {
        writeln!(out, "time_s,current_a,voltage_v")?;
    }
    for s in samples {
        write!(out, "{},{},{}", s.time_s, s.current_a, s.voltage_v)?;
        if labeled {
            write!(out, ",{}", s.state.map_or("", OperatingState::as_str))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct StateStats {
    pub total_duration_s: f64,
    pub mean_power_w: f64,
    pub sample_count: u64,
}

/// Per-state totals over a trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StateSegmentation {
    pub tx: StateStats,
    pub rx: StateStats,
    pub proc: StateStats,
    pub idle: StateStats,
    pub trace_span_s: f64,
    pub max_sample_gap_s: f64,
}

impl StateSegmentation {
    pub fn state(&self, state: OperatingState) -> &StateStats {
        match state {
            OperatingState::Tx => &self.tx,
            OperatingState::Rx => &self.rx,
            OperatingState::Proc => &self.proc,
            OperatingState::Idle => &self.idle,
        }
    }

    /// `Σ duration·mean_power` over the four states.
    pub fn energy_j(&self) -> f64 {
        OperatingState::ALL
            .iter()
            .map(|&s| {
                let st = self.state(s);
                st.total_duration_s * st.mean_power_w
            })
            .sum()
    }
}

fn segment_with<F>(samples: &[TraceSample], mut classify: F) -> Result<StateSegmentation>
where
    F: FnMut(usize, &TraceSample) -> Result<OperatingState>,
{
    if samples.len() < 2 {
        return Err(Error::TooFewSamples {
            count: samples.len(),
        });
    }
    let n = samples.len();
    let first = samples[0].time_s;
    let last = samples[n - 1].time_s;
    let mean_gap = (last - first) / (n - 1) as f64;

    let mut duration = [0.0f64; 4];
    let mut energy = [0.0f64; 4];
    let mut count = [0u64; 4];
    let mut max_gap = 0.0f64;
    for (i, sample) in samples.iter().enumerate() {
        let gap = match samples.get(i + 1) {
            Some(next) => next.time_s - sample.time_s,
            None => mean_gap,
        };
        max_gap = max_gap.max(gap);
        let k = classify(i, sample)?.index();
        duration[k] += gap;
        energy[k] += sample.power_w() * gap;
        count[k] += 1;
    }
    let stats = |k: usize| StateStats {
        total_duration_s: duration[k],
        mean_power_w: if duration[k] > 0.0 {
            energy[k] / duration[k]
        } else {
            0.0
        },
        sample_count: count[k],
    };
    Ok(StateSegmentation {
        tx: stats(OperatingState::Tx.index()),
        rx: stats(OperatingState::Rx.index()),
        proc: stats(OperatingState::Proc.index()),
        idle: stats(OperatingState::Idle.index()),
        trace_span_s: (last - first) + mean_gap,
        max_sample_gap_s: max_gap,
    })
}

/// Aggregates samples by their state labels.
pub fn segment_by_label(samples: &[TraceSample]) -> Result<StateSegmentation> {
    segment_with(samples, |i, s| {
        s.state.ok_or(Error::MissingLabel { index: i })
    })
}

/// Current thresholds `t1 < t2 < t3` splitting idle | proc | rx | tx.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds([f64; 3]);

impl Thresholds {
    pub fn new(t1: f64, t2: f64, t3: f64) -> Result<Self> {
        ensure_non_negative("threshold t1", t1)?;
        ensure_positive("threshold t2", t2)?;
        ensure_positive("threshold t3", t3)?;
        if !(t1 < t2 && t2 < t3) {
            return Err(Error::Domain(format!(
                "thresholds must be strictly ascending, got {t1}, {t2}, {t3}"
            )));
        }
        Ok(Thresholds([t1, t2, t3]))
    }

    pub fn values(&self) -> [f64; 3] {
        self.0
    }

    /// A sample exactly on a threshold belongs to the upper band.
    pub fn classify(&self, current_a: f64) -> OperatingState {
        let [t1, t2, t3] = self.0;
        if current_a >= t3 {
            OperatingState::Tx
        } else if current_a >= t2 {
            OperatingState::Rx
        } else if current_a >= t1 {
            OperatingState::Proc
        } else {
            OperatingState::Idle
        }
    }
}

/// Aggregates samples by classifying their current into bands.
pub fn segment_by_threshold(
    samples: &[TraceSample],
    thresholds: &Thresholds,
) -> Result<StateSegmentation> {
    segment_with(samples, |_, s| Ok(thresholds.classify(s.current_a)))
}

/// Non-fatal observations made while turning a trace into model parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum IngestWarning {
    /// A gap between samples is longer than the shortest state, so short
    /// consumption peaks may have been missed.
    SampleGapExceedsState {
        max_sample_gap_s: f64,
        state: OperatingState,
        state_duration_s: f64,
    },
    /// The shortest state is covered by fewer than [`MIN_SAMPLES_PER_STATE`] samples per cycle.
    SparseSampling {
        state: OperatingState,
        samples_per_cycle: f64,
    },
    /// The trace does not cover a whole number of activation cycles.
    FractionalCycles { cycles: f64 },
    /// Samples after the last whole cycle were dropped.
    TrailingCycleTruncated {
        kept_span_s: f64,
        dropped_samples: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtractedProfile {
    pub profile: PowerProfile,
    pub cycle: ActivationCycle,
    pub warnings: Vec<IngestWarning>,
}

/// Turns per-state totals into a power profile and a cycle whose period comes
/// from the traffic model.
pub fn profile_from_segmentation(
    seg: &StateSegmentation,
    traffic: TrafficModel,
) -> Result<ExtractedProfile> {
    let t_activation = traffic.activation_s()?;
    let span = seg.trace_span_s;
    if span < t_activation * (1.0 - SPAN_SLACK) {
        return Err(Error::InsufficientTrace {
            span_s: span,
            required_s: t_activation,
        });
    }
    let raw: Vec<f64> = OperatingState::ALL
        .iter()
        .map(|&s| seg.state(s).total_duration_s / span)
        .collect();
    let total: f64 = raw.iter().sum();
    let alpha = |s: OperatingState| raw[s.index()] / total;
    let cycle = ActivationCycle::new(
        t_activation,
        alpha(OperatingState::Tx),
        alpha(OperatingState::Rx),
        alpha(OperatingState::Proc),
    )?;
    let profile = PowerProfile::new(
        seg.tx.mean_power_w,
        seg.rx.mean_power_w,
        seg.proc.mean_power_w,
        seg.idle.mean_power_w,
    )?;

    let mut warnings = Vec::new();
    let cycles = span / t_activation;
    if (cycles - cycles.round()).abs() > SPAN_SLACK * cycles {
        warnings.push(IngestWarning::FractionalCycles { cycles });
    }
    let shortest = OperatingState::ALL
        .into_iter()
        .filter(|&s| seg.state(s).sample_count > 0 && cycle.alpha(s) > 0.0)
        .min_by(|&a, &b| cycle.alpha(a).total_cmp(&cycle.alpha(b)));
    if let Some(state) = shortest {
        let state_duration_s = cycle.duration(state);
        if seg.max_sample_gap_s > state_duration_s {
            warnings.push(IngestWarning::SampleGapExceedsState {
                max_sample_gap_s: seg.max_sample_gap_s,
                state,
                state_duration_s,
            });
        }
        let samples_per_cycle = seg.state(state).sample_count as f64 / cycles;
        if samples_per_cycle < MIN_SAMPLES_PER_STATE {
            warnings.push(IngestWarning::SparseSampling {
                state,
                samples_per_cycle,
            });
        }
    }
    Ok(ExtractedProfile {
        profile,
        cycle,
        warnings,
    })
}

/// How samples are assigned to states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segmenter {
    Labels,
    Thresholds(Thresholds),
}

impl Segmenter {
    pub fn segment(&self, samples: &[TraceSample]) -> Result<StateSegmentation> {
        match self {
            Segmenter::Labels => segment_by_label(samples),
            Segmenter::Thresholds(t) => segment_by_threshold(samples, t),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ingested {
    pub segmentation: StateSegmentation,
    pub profile: PowerProfile,
    pub cycle: ActivationCycle,
    pub warnings: Vec<IngestWarning>,
}

/// Segments a trace, drops any trailing partial cycle, and extracts the model
/// parameters.
pub fn ingest(
    samples: &[TraceSample],
    segmenter: Segmenter,
    traffic: TrafficModel,
) -> Result<Ingested> {
    let t_activation = traffic.activation_s()?;
    let full = segmenter.segment(samples)?;
    let whole_cycles = (full.trace_span_s / t_activation * (1.0 + SPAN_SLACK)).floor();

    let mut segmentation = full;
    let mut truncation = None;
    if whole_cycles >= 1.0 && full.trace_span_s > whole_cycles * t_activation * (1.0 + SPAN_SLACK) {
        let end = samples[0].time_s + whole_cycles * t_activation;
        let kept = samples.partition_point(|s| s.time_s < end);
        if kept >= 2 {
            let trimmed = segmenter.segment(&samples[..kept])?;
            if trimmed.trace_span_s >= t_activation * (1.0 - SPAN_SLACK) {
                segmentation = trimmed;
                truncation = Some(IngestWarning::TrailingCycleTruncated {
                    kept_span_s: trimmed.trace_span_s,
                    dropped_samples: samples.len() - kept,
                });
            }
        }
    }

    let extracted = profile_from_segmentation(&segmentation, traffic)?;
    let mut warnings: Vec<IngestWarning> = truncation.into_iter().collect();
    warnings.extend(extracted.warnings);
    Ok(Ingested {
        segmentation,
        profile: extracted.profile,
        cycle: extracted.cycle,
        warnings,
    })
}

/// Synthetic traces with known ground truth.
pub mod synth {
    use super::*;

    /// States in the order they occur within a cycle.
    pub const CYCLE_ORDER: [OperatingState; 4] = [
        OperatingState::Proc,
        OperatingState::Tx,
        OperatingState::Rx,
        OperatingState::Idle,
    ];

    #[derive(Debug, Clone, Copy, PartialEq)]
    pub struct SynthOptions {
        pub voltage_v: f64,
        /// Uniform samples per activation cycle.
        pub samples_per_cycle: u64,
        pub cycles: u64,
        pub start_time_s: f64,
        pub labeled: bool,
    }

    impl Default for SynthOptions {
        fn default() -> Self {
            SynthOptions {
                voltage_v: 3.0,
                samples_per_cycle: 1000,
                cycles: 1,
                start_time_s: 0.0,
                labeled: true,
            }
        }
    }

    /// Number of samples each state gets per cycle: `round(α·N)` for the busy
    /// states, idle takes the rest.
    pub fn samples_per_state(cycle: &ActivationCycle, samples_per_cycle: u64) -> [u64; 4] {
        let n = samples_per_cycle as f64;
        let mut counts = [0u64; 4];
        let mut busy = 0;
        for s in [OperatingState::Tx, OperatingState::Rx, OperatingState::Proc] {
            let c = (cycle.alpha(s) * n).round() as u64;
            counts[s.index()] = c;
            busy += c;
        }
        counts[OperatingState::Idle.index()] = samples_per_cycle.saturating_sub(busy);
        counts
    }

    /// Uniformly sampled trace of `profile` running `cycle`. State boundaries
    /// fall on sample instants, so durations are recovered exactly when every
    /// `α·N` is an integer.
    pub fn synthesize_trace(
        profile: &PowerProfile,
        cycle: &ActivationCycle,
        opts: &SynthOptions,
    ) -> Result<Vec<TraceSample>> {
        ensure_positive("voltage_v", opts.voltage_v)?;
        ensure_non_negative("start_time_s", opts.start_time_s)?;
        if opts.samples_per_cycle == 0 || opts.cycles == 0 {
            return Err(Error::Domain(
                "samples_per_cycle and cycles must be >= 1".into(),
            ));
        }
        let counts = samples_per_state(cycle, opts.samples_per_cycle);
        if counts.iter().sum::<u64>() != opts.samples_per_cycle {
            return Err(Error::InfeasibleCycle(
                "rounded busy samples exceed samples_per_cycle".into(),
            ));
        }
        let period = cycle.t_activation();
        let step = period / opts.samples_per_cycle as f64;
        let mut out = Vec::with_capacity((opts.samples_per_cycle * opts.cycles) as usize);
        for c in 0..opts.cycles {
            let cycle_start = opts.start_time_s + c as f64 * period;
            let mut j = 0u64;
            for state in CYCLE_ORDER {
                for _ in 0..counts[state.index()] {
                    out.push(TraceSample {
                        time_s: cycle_start + j as f64 * step,
                        current_a: profile.power(state) / opts.voltage_v,
                        voltage_v: opts.voltage_v,
                        state: opts.labeled.then_some(state),
                    });
                    j += 1;
                }
            }
        }
        Ok(out)
    }
}
