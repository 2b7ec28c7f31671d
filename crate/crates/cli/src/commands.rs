//! Subcommand implementations. Each returns the rendered report; writing it
//! out is left to the caller so every command stays a pure function of its
//! configuration and input files.

use std::fmt::Write as _;

use lpwan_lifetime::battery::{
    linear_depletion_month, remaining_capacity_exponential, remaining_capacity_linear, Battery,
    BatterySpec, JOULES_PER_WH,
};
use lpwan_lifetime::duty_cycle::{
    average_power, ActivationCycle, OperatingState, PerMessageCost, PowerProfile, TrafficModel,
};
use lpwan_lifetime::lifetime::{
    lifetime_exponential, lifetime_ideal, lifetime_linear, LifetimeEstimate, ModelConstants,
};
use lpwan_lifetime::simulator::{self, DischargeMode, SimConfig, Termination};
use lpwan_lifetime::trace::{IngestWarning, StateSegmentation};
use serde::Serialize;

use crate::config::{ingest_file, Format, RunConfig};
use crate::error::{CliError, CliResult};

/// Bumped whenever a report's JSON layout changes.
pub const SCHEMA_VERSION: u32 = 1;

pub const DEFAULT_HORIZON_MONTHS: u32 = 240;

/// A rendered report, plus the trajectory CSV for `simulate`.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub body: String,
    pub trajectory_csv: Option<String>,
}

impl Output {
    fn body(body: String) -> Self {
        Output {
            body,
            trajectory_csv: None,
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn years_text(e: &LifetimeEstimate) -> String {
    match (e.lifetime_years(), e.lifetime_s()) {
        (Some(y), Some(s)) => format!("{y:.2} years ({s} s)"),
        _ => "infinite".to_string(),
    }
}

fn csv_lifetime(value: Option<f64>) -> String {
    value.map_or_else(|| "infinite".to_string(), |v| v.to_string())
}

/// Echo of every parameter a report was computed from.
#[derive(Debug, Serialize)]
struct InputsEcho {
    #[serde(skip_serializing_if = "Option::is_none")]
    battery: Option<BatterySpec>,
    constants: ModelConstants,
    #[serde(skip_serializing_if = "Option::is_none")]
    profile: Option<PowerProfile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cycle: Option<ActivationCycle>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    traffic: Option<TrafficModel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    thresholds: Option<[f64; 3]>,
}

impl InputsEcho {
    fn new(cfg: &RunConfig, battery: Option<&Battery>) -> Self {
        InputsEcho {
            battery: battery.map(BatterySpec::from),
            constants: cfg.constants(),
            profile: None,
            cycle: None,
            trace: cfg.trace.as_ref().map(|p| p.display().to_string()),
            traffic: cfg.traffic,
            thresholds: cfg.thresholds,
        }
    }

    fn with_load(mut self, profile: PowerProfile, cycle: ActivationCycle) -> Self {
        self.profile = Some(profile);
        self.cycle = Some(cycle);
        self
    }
}

#[derive(Debug, Serialize)]
struct EstimateReport {
    schema_version: u32,
    command: &'static str,
    inputs: InputsEcho,
    effective_capacity_j: f64,
    average_power_w: f64,
    estimates: [LifetimeEstimate; 3],
    warnings: Vec<IngestWarning>,
}

/// Ideal, exponential and linear lifetimes side by side.
pub fn estimate(cfg: &RunConfig) -> CliResult<Output> {
    let battery = cfg.battery()?;
    let constants = cfg.constants();
    let load = cfg.workload()?;
    let p_avg = average_power(&load.profile, &load.cycle);
    let e_eff = battery.effective_capacity_j();
    let estimates = [
        lifetime_ideal(e_eff, p_avg, &constants)?,
        lifetime_exponential(&battery, p_avg, &constants)?,
        lifetime_linear(&battery, p_avg, &constants)?,
    ];
    let report = EstimateReport {
        schema_version: SCHEMA_VERSION,
        command: "estimate",
        inputs: InputsEcho::new(cfg, Some(&battery)).with_load(load.profile, load.cycle),
        effective_capacity_j: e_eff,
        average_power_w: p_avg,
        estimates,
        warnings: load.ingested.map(|i| i.warnings).unwrap_or_default(),
    };
    let body = match cfg.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&report),
        Format::Csv => {
            let mut s = String::from("model,lifetime_s,lifetime_years\n");
            for (name, e) in ["ideal", "exponential", "linear"]
                .iter()
                .zip(&report.estimates)
            {
                let _ = writeln!(
                    s,
                    "{name},{},{}",
                    csv_lifetime(e.lifetime_s()),
                    csv_lifetime(e.lifetime_years())
                );
            }
            s
        }
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "effective capacity: {e_eff} J");
            let _ = writeln!(s, "average power:      {p_avg:.6e} W");
            for (name, e) in ["ideal", "exponential", "linear"]
                .iter()
                .zip(&report.estimates)
            {
                let _ = writeln!(s, "{name:<12} {}", years_text(e));
            }
            for w in &report.warnings {
                let _ = writeln!(s, "warning: {}", warning_text(w));
            }
            s
        }
    };
    Ok(Output::body(body))
}

#[derive(Debug, Serialize)]
struct Curve {
    d: f64,
    remaining_j: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct SweepInputs {
    capacity_j: f64,
    usable_fraction: f64,
    d_pct_values: Vec<f64>,
    horizon_months: u32,
}

#[derive(Debug, Serialize)]
struct SweepReport {
    schema_version: u32,
    command: &'static str,
    inputs: SweepInputs,
    t_months: Vec<u32>,
    curves: Vec<Curve>,
}

/// Exponential capacity curves for a family of self-discharge rates.
pub fn sweep_d(cfg: &RunConfig, d_pct_values: &[f64], horizon_months: u32) -> CliResult<Output> {
    if d_pct_values.is_empty() {
        return Err(CliError::config(
            "sweep.d_pct_values",
            "no self-discharge values given",
        ));
    }
    if horizon_months == 0 {
        return Err(CliError::config("horizon_months", "horizon must be > 0"));
    }
    let base = cfg.battery()?;
    let t_months: Vec<u32> = (0..=horizon_months).collect();
    let mut curves = Vec::with_capacity(d_pct_values.len());
    for (i, &pct) in d_pct_values.iter().enumerate() {
        let d = pct / 100.0;
        let battery = base
            .with_self_discharge_rate(d)
            .map_err(|e| CliError::config(&format!("sweep.d_pct_values[{i}]"), e.to_string()))?;
        let remaining_j = t_months
            .iter()
            .map(|&t| remaining_capacity_exponential(&battery, f64::from(t)))
            .collect::<Result<Vec<_>, _>>()?;
        curves.push(Curve { d, remaining_j });
    }
    let report = SweepReport {
        schema_version: SCHEMA_VERSION,
        command: "sweep-d",
        inputs: SweepInputs {
            capacity_j: base.capacity_j(),
            usable_fraction: base.usable_fraction(),
            d_pct_values: d_pct_values.to_vec(),
            horizon_months,
        },
        t_months,
        curves,
    };
    let body = match cfg.format.unwrap_or(Format::Csv) {
        Format::Json => to_json(&report),
        Format::Csv => {
            let mut s = String::from("t_months");
            for c in &report.curves {
                let _ = write!(s, ",d={}", c.d);
            }
            s.push('\n');
            for (row, t) in report.t_months.iter().enumerate() {
                let _ = write!(s, "{t}");
                for c in &report.curves {
                    let _ = write!(s, ",{}", c.remaining_j[row]);
                }
                s.push('\n');
            }
            s
        }
        Format::Text => {
            let mut s = String::from("month");
            for c in &report.curves {
                let _ = write!(s, " {:>12}", format!("D={}%", c.d * 100.0));
            }
            s.push_str("   (Wh)\n");
            for (row, t) in report.t_months.iter().enumerate() {
                let _ = write!(s, "{t:>5}");
                for c in &report.curves {
                    let _ = write!(s, " {:>12.4}", c.remaining_j[row] / JOULES_PER_WH);
                }
                s.push('\n');
            }
            s
        }
    };
    Ok(Output::body(body))
}

#[derive(Debug, Serialize)]
struct LoadComparison {
    average_power_w: f64,
    exponential: LifetimeEstimate,
    linear: LifetimeEstimate,
    /// exponential minus linear lifetime, seconds
    gap_s: Option<f64>,
}

#[derive(Debug, Serialize)]
struct DischargeSummary {
    linear_depletion_month: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    load: Option<LoadComparison>,
}

#[derive(Debug, Serialize)]
struct DischargeRow {
    t_months: u32,
    exponential_j: f64,
    linear_j: f64,
}

#[derive(Debug, Serialize)]
struct DischargeReport {
    schema_version: u32,
    command: &'static str,
    inputs: InputsEcho,
    horizon_months: u32,
    summary: DischargeSummary,
    rows: Vec<DischargeRow>,
}

/// Linear against exponential self-discharge for one battery.
pub fn compare_discharge(cfg: &RunConfig, horizon_months: u32) -> CliResult<Output> {
    if horizon_months == 0 {
        return Err(CliError::config("horizon_months", "horizon must be > 0"));
    }
    let battery = cfg.battery()?;
    let constants = cfg.constants();
    let mut inputs = InputsEcho::new(cfg, Some(&battery));
    let mut rows = Vec::with_capacity(horizon_months as usize + 1);
    for t in 0..=horizon_months {
        rows.push(DischargeRow {
            t_months: t,
            exponential_j: remaining_capacity_exponential(&battery, f64::from(t))?,
            linear_j: remaining_capacity_linear(&battery, f64::from(t))?,
        });
    }
    let load = if cfg.has_workload() {
        let w = cfg.workload()?;
        inputs = inputs.with_load(w.profile, w.cycle);
        let p = average_power(&w.profile, &w.cycle);
        let exponential = lifetime_exponential(&battery, p, &constants)?;
        let linear = lifetime_linear(&battery, p, &constants)?;
        let gap_s = exponential
            .lifetime_s()
            .zip(linear.lifetime_s())
            .map(|(e, l)| e - l);
        Some(LoadComparison {
            average_power_w: p,
            exponential,
            linear,
            gap_s,
        })
    } else {
        None
    };
    let report = DischargeReport {
        schema_version: SCHEMA_VERSION,
        command: "compare-discharge",
        inputs,
        horizon_months,
        summary: DischargeSummary {
            linear_depletion_month: linear_depletion_month(&battery),
            load,
        },
        rows,
    };
    let summary_lines = || {
        let mut lines = Vec::new();
        match report.summary.linear_depletion_month {
            Some(m) => lines.push(format!("linear_depletion_month={m}")),
            None => lines.push("linear_depletion_month=none".to_string()),
        }
        if let Some(l) = &report.summary.load {
            lines.push(format!("average_power_w={}", l.average_power_w));
            lines.push(format!(
                "exponential_lifetime_s={}",
                csv_lifetime(l.exponential.lifetime_s())
            ));
            lines.push(format!(
                "linear_lifetime_s={}",
                csv_lifetime(l.linear.lifetime_s())
            ));
            lines.push(format!("lifetime_gap_s={}", csv_lifetime(l.gap_s)));
        }
        lines
    };
    let body = match cfg.format.unwrap_or(Format::Csv) {
        Format::Json => to_json(&report),
        Format::Csv => {
            let mut s = String::new();
            for line in summary_lines() {
                let _ = writeln!(s, "# {line}");
            }
            s.push_str("t_months,exponential_j,linear_j\n");
            for r in &report.rows {
                let _ = writeln!(s, "{},{},{}", r.t_months, r.exponential_j, r.linear_j);
            }
            s
        }
        Format::Text => {
            let mut s = String::new();
            match report.summary.linear_depletion_month {
                Some(m) => {
                    let _ = writeln!(
                        s,
                        "linear curve reaches zero at month {m} ({:.2} years)",
                        m * constants.k_spm / constants.seconds_per_year
                    );
                }
                None => s.push_str("no self-discharge: both curves are flat\n"),
            }
            if let Some(l) = &report.summary.load {
                let _ = writeln!(s, "exponential lifetime: {}", years_text(&l.exponential));
                let _ = writeln!(s, "linear lifetime:      {}", years_text(&l.linear));
                if let Some(gap) = l.gap_s {
                    let _ = writeln!(
                        s,
                        "gap:                  {:.2} years",
                        gap / constants.seconds_per_year
                    );
                }
            }
            s.push_str("month  exponential_Wh  linear_Wh\n");
            for r in &report.rows {
                let _ = writeln!(
                    s,
                    "{:>5}  {:>14.4}  {:>9.4}",
                    r.t_months,
                    r.exponential_j / JOULES_PER_WH,
                    r.linear_j / JOULES_PER_WH
                );
            }
            s
        }
    };
    Ok(Output::body(body))
}

#[derive(Debug, Serialize)]
struct TrafficRow {
    traffic: TrafficModel,
    t_activation_s: f64,
    average_power_w: f64,
    ideal: LifetimeEstimate,
    exponential: LifetimeEstimate,
    linear: LifetimeEstimate,
}

#[derive(Debug, Serialize)]
struct TrafficReport {
    schema_version: u32,
    command: &'static str,
    inputs: InputsEcho,
    per_message: PerMessageCost,
    rows: Vec<TrafficRow>,
}

/// Lifetimes under each traffic preset with fixed per-message busy times.
pub fn compare_traffic(cfg: &RunConfig) -> CliResult<Output> {
    let battery = cfg.battery()?;
    let constants = cfg.constants();
    let (profile, per_message) = match (cfg.per_message, cfg.profile) {
        (Some(cost), Some(profile)) if cfg.trace.is_none() => (profile, cost),
        (Some(cost), _) => (cfg.workload()?.profile, cost),
        (None, _) => {
            let w = cfg.workload()?;
            (w.profile, PerMessageCost::from_cycle(&w.cycle))
        }
    };
    let mut rows = Vec::with_capacity(3);
    for traffic in TrafficModel::PRESETS {
        let t_activation_s = traffic.activation_s()?;
        let cycle = per_message.cycle(t_activation_s)?;
        let p = average_power(&profile, &cycle);
        rows.push(TrafficRow {
            traffic,
            t_activation_s,
            average_power_w: p,
            ideal: lifetime_ideal(battery.effective_capacity_j(), p, &constants)?,
            exponential: lifetime_exponential(&battery, p, &constants)?,
            linear: lifetime_linear(&battery, p, &constants)?,
        });
    }
    let mut inputs = InputsEcho::new(cfg, Some(&battery));
    inputs.profile = Some(profile);
    let report = TrafficReport {
        schema_version: SCHEMA_VERSION,
        command: "compare-traffic",
        inputs,
        per_message,
        rows,
    };
    let body = match cfg.format.unwrap_or(Format::Csv) {
        Format::Json => to_json(&report),
        Format::Csv => {
            let mut s = String::from(
                "traffic,t_activation_s,average_power_w,ideal_s,exponential_s,linear_s,exponential_years\n",
            );
            for r in &report.rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{}",
                    r.traffic,
                    r.t_activation_s,
                    r.average_power_w,
                    csv_lifetime(r.ideal.lifetime_s()),
                    csv_lifetime(r.exponential.lifetime_s()),
                    csv_lifetime(r.linear.lifetime_s()),
                    csv_lifetime(r.exponential.lifetime_years()),
                );
            }
            s
        }
        Format::Text => {
            let mut s = String::from("traffic  avg power (W)  exponential lifetime\n");
            for r in &report.rows {
                let _ = writeln!(
                    s,
                    "{:<8} {:>13.4e}  {}",
                    r.traffic.to_string(),
                    r.average_power_w,
                    years_text(&r.exponential)
                );
            }
            s
        }
    };
    Ok(Output::body(body))
}

#[derive(Debug, Serialize)]
struct SimSummary {
    lifetime_s: f64,
    lifetime_years: f64,
    termination: Termination,
    cycles_completed: u64,
    trajectory_points: usize,
}

#[derive(Debug, Serialize)]
struct SimReport {
    schema_version: u32,
    command: &'static str,
    inputs: InputsEcho,
    simulator: SimConfig,
    result: SimSummary,
    average_power_w: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    closed_form_exponential_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gap_s: Option<f64>,
}

/// Runs the discharge simulator and reports its agreement with the closed form.
pub fn simulate(cfg: &RunConfig) -> CliResult<Output> {
    let battery = cfg.battery()?;
    let constants = cfg.constants();
    let load = cfg.workload()?;
    let sim_cfg = cfg.simulator.unwrap_or_default();
    let result = simulator::simulate(&battery, &load.profile, &load.cycle, &sim_cfg, &constants)?;

    let inflated = simulator::apply_retransmissions(&load.cycle, sim_cfg.retransmission_factor)?;
    let p_avg = average_power(&load.profile, &inflated);
    let closed = if sim_cfg.discharge_mode == DischargeMode::PaperBalance && p_avg > 0.0 {
        lifetime_exponential(&battery, p_avg, &constants)?.lifetime_s()
    } else {
        None
    };
    let gap_s = match (closed, result.termination) {
        (Some(c), Termination::Depleted) => Some((result.lifetime_s - c).abs()),
        _ => None,
    };

    let mut csv = Vec::new();
    simulator::write_trajectory_csv(&mut csv, &result.trajectory)?;
    let csv = String::from_utf8(csv).expect("ascii csv");

    let report = SimReport {
        schema_version: SCHEMA_VERSION,
        command: "simulate",
        inputs: InputsEcho::new(cfg, Some(&battery)).with_load(load.profile, load.cycle),
        simulator: sim_cfg,
        result: SimSummary {
            lifetime_s: result.lifetime_s,
            lifetime_years: result.lifetime_s / constants.seconds_per_year,
            termination: result.termination,
            cycles_completed: result.cycles_completed,
            trajectory_points: result.trajectory.len(),
        },
        average_power_w: p_avg,
        closed_form_exponential_s: closed,
        gap_s,
    };
    let body = match cfg.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&report),
        Format::Csv => csv.clone(),
        Format::Text => {
            let mut s = String::new();
            let term = match report.result.termination {
                Termination::Depleted => "depleted",
                Termination::TimeCapReached => "time cap reached",
            };
            let _ = writeln!(
                s,
                "simulated lifetime: {:.2} years ({} s), {term}",
                report.result.lifetime_years, report.result.lifetime_s
            );
            let _ = writeln!(s, "cycles completed:   {}", report.result.cycles_completed);
            if let (Some(c), Some(g)) = (closed, gap_s) {
                let _ = writeln!(s, "closed form:        {c} s (gap {g} s)");
            }
            s
        }
    };
    Ok(Output {
        body,
        trajectory_csv: Some(csv),
    })
}

#[derive(Debug, Serialize)]
struct IngestSource {
    trace: String,
    traffic: TrafficModel,
    #[serde(skip_serializing_if = "Option::is_none")]
    thresholds: Option<[f64; 3]>,
}

#[derive(Debug, Serialize)]
struct IngestReport {
    schema_version: u32,
    command: &'static str,
    source: IngestSource,
    profile: PowerProfile,
    cycle: ActivationCycle,
    segmentation: StateSegmentation,
    warnings: Vec<IngestWarning>,
}

/// Reduces a trace to a profile and cycle. The JSON report can be passed
/// back as `--config` to the other subcommands.
pub fn ingest(cfg: &RunConfig) -> CliResult<Output> {
    let path = cfg
        .trace
        .as_ref()
        .ok_or_else(|| CliError::config("trace", "no trace file given"))?;
    let traffic = cfg
        .traffic
        .ok_or_else(|| CliError::config("traffic", "a traffic model is required"))?;
    let ingested = ingest_file(path, traffic, cfg.thresholds()?)?;
    let report = IngestReport {
        schema_version: SCHEMA_VERSION,
        command: "ingest",
        source: IngestSource {
            trace: path.display().to_string(),
            traffic,
            thresholds: cfg.thresholds,
        },
        profile: ingested.profile,
        cycle: ingested.cycle,
        segmentation: ingested.segmentation,
        warnings: ingested.warnings,
    };
    let body = match cfg.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&report),
        Format::Csv => {
            let mut s = String::from("state,total_duration_s,mean_power_w,sample_count,alpha\n");
            for st in OperatingState::ALL {
                let seg = report.segmentation.state(st);
                let _ = writeln!(
                    s,
                    "{st},{},{},{},{}",
                    seg.total_duration_s,
                    seg.mean_power_w,
                    seg.sample_count,
                    report.cycle.alpha(st)
                );
            }
            s
        }
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(
                s,
                "trace span {} s, activation period {} s ({traffic})",
                report.segmentation.trace_span_s,
                report.cycle.t_activation()
            );
            for st in OperatingState::ALL {
                let _ = writeln!(
                    s,
                    "{:<5} power {:>12.4e} W  alpha {:.6}",
                    st.as_str(),
                    report.profile.power(st),
                    report.cycle.alpha(st)
                );
            }
            for w in &report.warnings {
                let _ = writeln!(s, "warning: {}", warning_text(w));
            }
            s
        }
    };
    Ok(Output::body(body))
}

pub fn warning_text(w: &IngestWarning) -> String {
    match w {
        IngestWarning::SampleGapExceedsState {
            max_sample_gap_s,
            state,
            state_duration_s,
        } => format!(
            "largest sample gap {max_sample_gap_s} s exceeds the {state} state duration {state_duration_s} s; short peaks may be missed"
        ),
        IngestWarning::SparseSampling {
            state,
            samples_per_cycle,
        } => format!("only {samples_per_cycle} samples per cycle in the {state} state"),
        IngestWarning::FractionalCycles { cycles } => {
            format!("trace covers {cycles} activation cycles, not a whole number")
        }
        IngestWarning::TrailingCycleTruncated {
            kept_span_s,
            dropped_samples,
        } => format!(
            "dropped {dropped_samples} samples after the last whole cycle (kept {kept_span_s} s)"
        ),
    }
}
