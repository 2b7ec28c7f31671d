//! Run configuration: JSON file plus command-line overrides.

use std::fs;
use std::path::{Path, PathBuf};

use lpwan_lifetime::battery::{Battery, BatterySpec};
use lpwan_lifetime::duty_cycle::{ActivationCycle, PerMessageCost, PowerProfile, TrafficModel};
use lpwan_lifetime::lifetime::ModelConstants;
use lpwan_lifetime::simulator::SimConfig;
use lpwan_lifetime::trace::{self, Ingested, Segmenter, Thresholds};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Output encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Text,
}

/// Everything a subcommand may read. Unknown top-level keys are ignored so an
/// `ingest` report can be fed back in as a config.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub battery: Option<BatterySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<PowerProfile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cycle: Option<ActivationCycle>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub traffic: Option<TrafficModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_message: Option<PerMessageCost>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<ModelConstants>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulator: Option<SimConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon_months: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub d_pct_values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon_months: Option<u32>,
}

/// Inline overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub capacity_wh: Option<f64>,
    pub d_pct_month: Option<f64>,
    pub traffic: Option<TrafficModel>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    /// Parses JSON, reporting the offending field path on failure.
    pub fn from_json(text: &str) -> CliResult<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config {
                path: if path == "." { String::new() } else { path },
                message: e.into_inner().to_string(),
            }
        })
    }

    /// Reads a config file; a relative `trace` path is taken relative to the file.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config {
            path: String::new(),
            message: format!("cannot read config {}: {e}", path.display()),
        })?;
        let mut cfg = Self::from_json(&text)?;
        if let (Some(trace), Some(dir)) = (cfg.trace.as_mut(), path.parent()) {
            if trace.is_relative() && !dir.as_os_str().is_empty() {
                *trace = dir.join(&*trace);
            }
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if o.capacity_wh.is_some() || o.d_pct_month.is_some() {
            let base = self.battery.unwrap_or(BatterySpec {
                capacity_wh: f64::NAN,
                self_discharge_pct_per_month: 0.0,
                usable_fraction: 1.0,
            });
            self.battery = Some(BatterySpec {
                capacity_wh: o.capacity_wh.unwrap_or(base.capacity_wh),
                self_discharge_pct_per_month: o
                    .d_pct_month
                    .unwrap_or(base.self_discharge_pct_per_month),
                usable_fraction: base.usable_fraction,
            });
        }
        if o.traffic.is_some() {
            self.traffic = o.traffic;
        }
        if o.format.is_some() {
            self.format = o.format;
        }
        if o.out.is_some() {
            self.out.clone_from(&o.out);
        }
    }

    pub fn battery(&self) -> CliResult<Battery> {
        let spec = self
            .battery
            .ok_or_else(|| CliError::config("battery", "missing battery"))?;
        if spec.capacity_wh.is_nan() {
            return Err(CliError::config("battery.capacity_wh", "missing capacity"));
        }
        Battery::try_from(spec).map_err(|e| CliError::config("battery", e.to_string()))
    }

    pub fn constants(&self) -> ModelConstants {
        self.constants.unwrap_or_default()
    }

    pub fn thresholds(&self) -> CliResult<Option<Thresholds>> {
        self.thresholds
            .map(|[a, b, c]| Thresholds::new(a, b, c))
            .transpose()
            .map_err(|e| CliError::config("thresholds", e.to_string()))
    }

    pub fn has_workload(&self) -> bool {
        self.profile.is_some() || self.cycle.is_some() || self.trace.is_some()
    }

    /// The load to evaluate: either `profile` + `cycle`, or a trace reduced
    /// with the traffic model. A traffic model given alongside a cycle
    /// replaces its period and keeps the busy time per message.
    pub fn workload(&self) -> CliResult<Workload> {
        match (&self.trace, self.profile, self.cycle) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => Err(CliError::config(
                "trace",
                "give either a trace or profile+cycle, not both",
            )),
            (Some(path), None, None) => {
                let traffic = self.traffic.ok_or_else(|| {
                    CliError::config("traffic", "a traffic model is required with a trace")
                })?;
                let ingested = ingest_file(path, traffic, self.thresholds()?)?;
                Ok(Workload {
                    profile: ingested.profile,
                    cycle: ingested.cycle,
                    ingested: Some(ingested),
                })
            }
            (None, Some(profile), Some(cycle)) => {
                let cycle = match self.traffic {
                    Some(t) => {
                        let period = t
                            .activation_s()
                            .map_err(|e| CliError::config("traffic", e.to_string()))?;
                        PerMessageCost::from_cycle(&cycle)
                            .cycle(period)
                            .map_err(|e| CliError::config("traffic", e.to_string()))?
                    }
                    None => cycle,
                };
                Ok(Workload {
                    profile,
                    cycle,
                    ingested: None,
                })
            }
            (None, None, _) => Err(CliError::config("profile", "missing power profile")),
            (None, Some(_), None) => Err(CliError::config("cycle", "missing activation cycle")),
        }
    }
}

/// Resolved load.
#[derive(Debug, Clone)]
pub struct Workload {
    pub profile: PowerProfile,
    pub cycle: ActivationCycle,
    pub ingested: Option<Ingested>,
}

/// Reads, parses and reduces a trace file.
pub fn ingest_file(
    path: &Path,
    traffic: TrafficModel,
    thresholds: Option<Thresholds>,
) -> CliResult<Ingested> {
    let file = fs::File::open(path)
        .map_err(|e| CliError::Input(format!("cannot open trace {}: {e}", path.display())))?;
    let samples = trace::parse_trace(std::io::BufReader::new(file))?;
    let segmenter = thresholds.map_or(Segmenter::Labels, Segmenter::Thresholds);
    Ok(trace::ingest(&samples, segmenter, traffic)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_path_in_errors() {
        let err = RunConfig::from_json(r#"{"battery": {"capacity_wh": "five"}}"#).unwrap_err();
        match err {
            CliError::Config { path, .. } => assert_eq!(path, "battery.capacity_wh"),
            other => panic!("{other:?}"),
        }
        let err = RunConfig::from_json(
            r#"{"cycle": {"t_activation_s": 10, "alpha_tx": 0.1, "alpha_rx": 0, "alpha_proc": 0, "alpha_idle": 0.9}}"#,
        )
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn overrides_build_battery() {
        let mut cfg = RunConfig::default();
        cfg.apply(&Overrides {
            capacity_wh: Some(5.0),
            d_pct_month: Some(0.5),
            ..Overrides::default()
        });
        let b = cfg.battery().unwrap();
        assert_eq!(b.capacity_j(), 18_000.0);
        assert_eq!(b.self_discharge_rate(), 0.005);

        let mut only_d = RunConfig::default();
        only_d.apply(&Overrides {
            d_pct_month: Some(0.5),
            ..Overrides::default()
        });
        assert!(matches!(only_d.battery(), Err(CliError::Config { .. })));
    }

    #[test]
    fn workload_requires_exactly_one_source() {
        let cfg = RunConfig::from_json(
            r#"{"profile": {"p_tx_w": 0.1, "p_rx_w": 0.05, "p_proc_w": 0.01, "p_idle_w": 1e-6},
                "trace": "x.csv", "traffic": "1/hour"}"#,
        )
        .unwrap();
        assert!(matches!(cfg.workload(), Err(CliError::Config { .. })));
        assert!(RunConfig::default().workload().is_err());
    }

    #[test]
    fn traffic_replaces_cycle_period() {
        let cfg = RunConfig::from_json(
            r#"{"profile": {"p_tx_w": 0.1, "p_rx_w": 0.05, "p_proc_w": 0.01, "p_idle_w": 1e-6},
                "cycle": {"t_activation_s": 10, "alpha_tx": 0.1, "alpha_rx": 0, "alpha_proc": 0},
                "traffic": "1/day"}"#,
        )
        .unwrap();
        let w = cfg.workload().unwrap();
        assert_eq!(w.cycle.t_activation(), 86_400.0);
        assert_eq!(
            w.cycle
                .duration(lpwan_lifetime::duty_cycle::OperatingState::Tx),
            1.0
        );
    }
}
