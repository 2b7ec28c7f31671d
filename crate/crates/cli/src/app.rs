//! Argument parsing and dispatch.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use lpwan_lifetime::duty_cycle::TrafficModel;
use lpwan_lifetime::simulator::DischargeMode;

use crate::commands::{self, Output, DEFAULT_HORIZON_MONTHS};
use crate::config::{Format, Overrides, RunConfig};
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "lpwan-lt",
    version,
    about = "Battery lifetime estimates for duty-cycled LPWAN nodes"
)]
pub struct Cli {
    /// JSON run configuration
    #[arg(long, global = true, env = "LPWAN_LT_CONFIG")]
    pub config: Option<PathBuf>,

    #[arg(long, global = true)]
    pub capacity_wh: Option<f64>,

    /// Self-discharge in percent of capacity per month
    #[arg(long, global = true)]
    pub d_pct_month: Option<f64>,

    /// 1/day, 1/hour, 10/hour, or a custom period such as 600s
    #[arg(long, global = true)]
    pub traffic: Option<TrafficModel>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Write the report here instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    PaperBalance,
    CompoundDecay,
}

impl From<ModeArg> for DischargeMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::PaperBalance => DischargeMode::PaperBalance,
            ModeArg::CompoundDecay => DischargeMode::CompoundDecay,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ideal, exponential and linear lifetimes for one configuration
    Estimate,
    /// Remaining capacity over time for several self-discharge rates
    SweepD {
        /// Comma-separated self-discharge rates in percent per month
        #[arg(long, value_delimiter = ',')]
        d_pct: Vec<f64>,
        #[arg(long)]
        horizon_months: Option<u32>,
    },
    /// Linear against exponential self-discharge
    CompareDischarge {
        #[arg(long)]
        horizon_months: Option<u32>,
    },
    /// Lifetimes under the 1/day, 1/hour and 10/hour presets
    CompareTraffic,
    /// Time-stepped discharge simulation
    Simulate {
        #[arg(long)]
        time_step: Option<f64>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Expected transmissions per message
        #[arg(long)]
        retransmissions: Option<f64>,
        #[arg(long)]
        max_sim_time: Option<f64>,
        /// Write the trajectory CSV here
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Reduce a current trace to a power profile and activation cycle
    Ingest {
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Three ascending current thresholds in amperes, comma-separated
        #[arg(long, value_delimiter = ',', num_args = 1)]
        thresholds: Option<Vec<f64>>,
    },
}

/// Builds the effective configuration and runs the chosen subcommand.
pub fn run(cli: Cli) -> CliResult<()> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.apply(&Overrides {
        capacity_wh: cli.capacity_wh,
        d_pct_month: cli.d_pct_month,
        traffic: cli.traffic,
        format: cli.format,
        out: cli.out.clone(),
    });
    let out_path = cfg.out.clone();
    let output = execute(&cli.command, &mut cfg)?;
    if let Command::Simulate {
        trajectory: Some(path),
        ..
    } = &cli.command
    {
        if let Some(csv) = &output.trajectory_csv {
            fs::write(path, csv)?;
        }
    }
    match out_path {
        Some(path) => fs::write(path, &output.body)?,
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(output.body.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

/// Applies subcommand flags to `cfg` and renders the report.
pub fn execute(command: &Command, cfg: &mut RunConfig) -> CliResult<Output> {
    match command {
        Command::Estimate => commands::estimate(cfg),
        Command::SweepD {
            d_pct,
            horizon_months,
        } => {
            let sweep = cfg.sweep.as_ref();
            let values = if !d_pct.is_empty() {
                d_pct.clone()
            } else if let Some(s) = sweep {
                s.d_pct_values.clone()
            } else if let Some(b) = cfg.battery {
                vec![b.self_discharge_pct_per_month]
            } else {
                Vec::new()
            };
            let horizon = horizon_months
                .or(sweep.and_then(|s| s.horizon_months))
                .or(cfg.horizon_months)
                .unwrap_or(DEFAULT_HORIZON_MONTHS);
            commands::sweep_d(cfg, &values, horizon)
        }
        Command::CompareDischarge { horizon_months } => {
            let horizon = horizon_months
                .or(cfg.horizon_months)
                .unwrap_or(DEFAULT_HORIZON_MONTHS);
            commands::compare_discharge(cfg, horizon)
        }
        Command::CompareTraffic => commands::compare_traffic(cfg),
        Command::Simulate {
            time_step,
            mode,
            retransmissions,
            max_sim_time,
            ..
        } => {
            let mut sim = cfg.simulator.unwrap_or_default();
            if let Some(dt) = time_step {
                sim.time_step_s = *dt;
            }
            if let Some(m) = mode {
                sim.discharge_mode = (*m).into();
            }
            if let Some(r) = retransmissions {
                sim.retransmission_factor = *r;
            }
            if let Some(t) = max_sim_time {
                sim.max_sim_time_s = *t;
            }
            cfg.simulator = Some(sim);
            commands::simulate(cfg)
        }
        Command::Ingest { trace, thresholds } => {
            if let Some(t) = trace {
                cfg.trace = Some(t.clone());
            }
            if let Some(t) = thresholds {
                let t: [f64; 3] = t.as_slice().try_into().map_err(|_| {
                    CliError::config("thresholds", format!("expected 3 values, got {}", t.len()))
                })?;
                cfg.thresholds = Some(t);
            }
            commands::ingest(cfg)
        }
    }
}
