//! Discrete-time discharge simulation of the end-point state machine.
//!
//! Every activation cycle runs proc → tx → rx → idle, each state lasting
//! `α_i·t_activation`. Time advances in steps of at most `time_step_s`; a step
//! is cut short at every state transition so the energy drawn per state is
//! exact, and the depletion instant is interpolated inside the final step.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::battery::Battery;
use crate::duty_cycle::{average_power, ActivationCycle, OperatingState, PowerProfile};
use crate::error::{ensure_positive, Error, Result};
use crate::lifetime::{decay_rate_per_second, ModelConstants};

/// Upper bound on recorded trajectory points when the stride is chosen automatically.
pub const MAX_TRAJECTORY_POINTS: u64 = 100_000;

const STATE_ORDER: [OperatingState; 4] = [
    OperatingState::Proc,
    OperatingState::Tx,
    OperatingState::Rx,
    OperatingState::Idle,
];

/// When the device is considered dead.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DischargeMode {
    /// Consumed energy reaches the self-discharged initial capacity `E·(1 − D)^(t/k_spm)`.
    PaperBalance,
    /// Self-discharge acts on the energy still stored, which reaches zero.
    CompoundDecay,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub time_step_s: f64,
    pub discharge_mode: DischargeMode,
    /// Expected transmissions per message, `r ≥ 1`.
    pub retransmission_factor: f64,
    pub max_sim_time_s: f64,
    /// Record every Nth step; `None` picks a stride that keeps the trajectory
    /// under [`MAX_TRAJECTORY_POINTS`].
    pub trajectory_stride: Option<u64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            time_step_s: 1.0,
            discharge_mode: DischargeMode::PaperBalance,
            retransmission_factor: 1.0,
            max_sim_time_s: 200.0 * crate::lifetime::DEFAULT_SECONDS_PER_YEAR,
            trajectory_stride: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("time_step_s", self.time_step_s)?;
        ensure_positive("max_sim_time_s", self.max_sim_time_s)?;
        if !(self.retransmission_factor >= 1.0 && self.retransmission_factor.is_finite()) {
            return Err(Error::Domain(format!(
                "retransmission_factor must be a finite value >= 1, got {}",
                self.retransmission_factor
            )));
        }
        if self.trajectory_stride == Some(0) {
            return Err(Error::Domain("trajectory_stride must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Depleted,
    TimeCapReached,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub time_s: f64,
    /// Energy left before depletion under the configured mode.
    pub available_j: f64,
    pub consumed_j: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub lifetime_s: f64,
    pub termination: Termination,
    pub cycles_completed: u64,
    pub trajectory: Vec<TrajectoryPoint>,
}

/// Inflates the transmit fraction by the expected number of transmissions.
pub fn apply_retransmissions(cycle: &ActivationCycle, r: f64) -> Result<ActivationCycle> {
    if !(r >= 1.0 && r.is_finite()) {
        return Err(Error::Domain(format!(
            "retransmission factor must be a finite value >= 1, got {r}"
        )));
    }
    let alpha_tx = r * cycle.alpha_tx();
    let busy = alpha_tx + cycle.alpha_rx() + cycle.alpha_proc();
    if busy > 1.0 {
        return Err(Error::InfeasibleCycle(format!(
            "with {r} transmissions per message the busy fraction is {busy}"
        )));
    }
    cycle.with_alpha_tx(alpha_tx)
}

struct Segment {
    power: f64,
    end_offset: f64,
}

/// Runs the state machine until the battery is depleted or the time cap is hit.
pub fn simulate(
    battery: &Battery,
    profile: &PowerProfile,
    cycle: &ActivationCycle,
    config: &SimConfig,
    constants: &ModelConstants,
) -> Result<SimResult> {
    config.validate()?;
    let cycle = apply_retransmissions(cycle, config.retransmission_factor)?;
    let period = cycle.t_activation();
    let dt = config.time_step_s;
    let e_eff = battery.effective_capacity_j();
    let lambda = decay_rate_per_second(battery.self_discharge_rate(), constants.k_spm);

    let mut segments = Vec::with_capacity(4);
    let mut offset = 0.0;
    for state in STATE_ORDER {
        let d = cycle.duration(state);
        if d <= 0.0 {
            continue;
        }
        offset += d;
        segments.push(Segment {
            power: profile.power(state),
            end_offset: offset.min(period),
        });
    }
    // the last state always closes the cycle exactly
    if let Some(last) = segments.last_mut() {
        last.end_offset = period;
    }

    let stride = config
        .trajectory_stride
        .unwrap_or_else(|| auto_stride(&cycle, profile, e_eff, config));

    let mut t = 0.0f64;
    let mut consumed = 0.0f64;
    // compound mode only: energy still stored
    let mut stored = e_eff;
    let mut steps: u64 = 0;
    let mut trajectory = vec![TrajectoryPoint {
        time_s: 0.0,
        available_j: e_eff,
        consumed_j: 0.0,
    }];
    let margin = |t: f64, consumed: f64, stored: f64| match config.discharge_mode {
        DischargeMode::PaperBalance => e_eff * (-lambda * t).exp() - consumed,
        DischargeMode::CompoundDecay => stored,
    };

    let mut cycle_index: u64 = 0;
    loop {
        let cycle_start = cycle_index as f64 * period;
        for seg in &segments {
            let seg_end = (cycle_start + seg.end_offset).min(config.max_sim_time_s);
            while t < seg_end {
                let new_t = if seg_end - t <= dt { seg_end } else { t + dt };
                let h = new_t - t;
                let drawn = seg.power * h;
                let before = margin(t, consumed, stored);
                let new_consumed = consumed + drawn;
                let new_stored = match config.discharge_mode {
                    DischargeMode::PaperBalance => stored,
                    DischargeMode::CompoundDecay => {
                        let decay = (-lambda * h).exp();
                        stored * decay - drawn * decay.sqrt()
                    }
                };
                let after = margin(new_t, new_consumed, new_stored);
                if after <= 0.0 {
                    let frac = before / (before - after);
                    let death = t + frac * h;
                    if trajectory.last().is_some_and(|p| p.time_s >= death) {
                        trajectory.pop();
                    }
                    trajectory.push(TrajectoryPoint {
                        time_s: death,
                        available_j: 0.0,
                        consumed_j: consumed + frac * drawn,
                    });
                    return Ok(SimResult {
                        lifetime_s: death,
                        termination: Termination::Depleted,
                        cycles_completed: cycle_index,
                        trajectory,
                    });
                }
                t = new_t;
                consumed = new_consumed;
                stored = new_stored;
                steps += 1;
                if steps.is_multiple_of(stride) {
                    trajectory.push(TrajectoryPoint {
                        time_s: t,
                        available_j: after,
                        consumed_j: consumed,
                    });
                }
            }
            if t >= config.max_sim_time_s {
                if trajectory.last().map(|p| p.time_s) != Some(t) {
                    trajectory.push(TrajectoryPoint {
                        time_s: t,
                        available_j: margin(t, consumed, stored),
                        consumed_j: consumed,
                    });
                }
                let cycles_completed = if t >= cycle_start + period {
                    cycle_index + 1
                } else {
                    cycle_index
                };
                return Ok(SimResult {
                    lifetime_s: t,
                    termination: Termination::TimeCapReached,
                    cycles_completed,
                    trajectory,
                });
            }
        }
        cycle_index += 1;
    }
}

fn auto_stride(
    cycle: &ActivationCycle,
    profile: &PowerProfile,
    e_eff: f64,
    config: &SimConfig,
) -> u64 {
    let p_avg = average_power(profile, cycle);
    let horizon = if p_avg > 0.0 {
        (e_eff / p_avg).min(config.max_sim_time_s)
    } else {
        config.max_sim_time_s
    };
    let steps_per_cycle: f64 = STATE_ORDER
        .iter()
        .map(|&s| (cycle.duration(s) / config.time_step_s).ceil())
        .sum::<f64>()
        .max(1.0);
    let cycles = (horizon / cycle.t_activation()).ceil().max(1.0);
    let estimate = cycles * steps_per_cycle;
    let budget = (MAX_TRAJECTORY_POINTS - 2) as f64;
    (estimate / budget).ceil().max(1.0) as u64
}

/// Writes the trajectory as `time_s,available_j,consumed_j` CSV.
pub fn write_trajectory_csv<W: Write>(
    mut out: W,
    trajectory: &[TrajectoryPoint],
) -> io::Result<()> {
    writeln!(out, "time_s,available_j,consumed_j")?;
    for p in trajectory {
        writeln!(out, "{},{},{}", p.time_s, p.available_j, p.consumed_j)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::duty_cycle::cycle_from_durations;

    #[test]
    fn retransmission_examples() {
        let c = cycle_from_durations(3.6, 3.6, 28.8, 3600.0).unwrap();
        assert_eq!(apply_retransmissions(&c, 1.0).unwrap(), c);

        let doubled = apply_retransmissions(&c, 2.0).unwrap();
        assert!((doubled.alpha_tx() - 0.002).abs() < 1e-15);
        assert!((c.alpha_idle() - doubled.alpha_idle() - 0.001).abs() < 1e-15);
        assert_eq!(doubled.alpha_rx(), c.alpha_rx());
        assert_eq!(doubled.alpha_proc(), c.alpha_proc());

        let heavy = ActivationCycle::new(10.0, 0.6, 0.0, 0.0).unwrap();
        assert!(matches!(
            apply_retransmissions(&heavy, 2.0),
            Err(Error::InfeasibleCycle(_))
        ));
        assert!(apply_retransmissions(&c, 0.5).is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = SimConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.time_step_s = 0.0;
        assert!(cfg.validate().is_err());
        let cfg = SimConfig {
            retransmission_factor: 0.9,
            ..SimConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = SimConfig {
            trajectory_stride: Some(0),
            ..SimConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn constant_drain_without_self_discharge() {
        let battery = Battery::new(100.0, 0.0, 1.0).unwrap();
        let profile = PowerProfile::constant(0.3).unwrap();
        let cycle = cycle_from_durations(1.0, 2.0, 3.0, 20.0).unwrap();
        let cfg = SimConfig::default();
        let r = simulate(&battery, &profile, &cycle, &cfg, &ModelConstants::default()).unwrap();
        assert_eq!(r.termination, Termination::Depleted);
        assert!((r.lifetime_s - 100.0 / 0.3).abs() <= cfg.time_step_s);
        assert_eq!(r.cycles_completed, 16);
    }

    #[test]
    fn zero_load_compound_hits_time_cap() {
        let battery = Battery::new(10.0, 0.005, 1.0).unwrap();
        let profile = PowerProfile::constant(0.0).unwrap();
        let cycle = ActivationCycle::all_idle(60.0).unwrap();
        let cfg = SimConfig {
            discharge_mode: DischargeMode::CompoundDecay,
            max_sim_time_s: 10_000.0,
            time_step_s: 5.0,
            ..SimConfig::default()
        };
        let r = simulate(&battery, &profile, &cycle, &cfg, &ModelConstants::default()).unwrap();
        assert_eq!(r.termination, Termination::TimeCapReached);
        assert_eq!(r.lifetime_s, 10_000.0);
        let last = r.trajectory.last().unwrap();
        assert_eq!(last.time_s, 10_000.0);
        assert!(last.available_j > 0.0 && last.available_j < 10.0);
    }

    #[test]
    fn trajectory_csv_header() {
        let mut buf = Vec::new();
        let pts = [TrajectoryPoint {
            time_s: 0.5,
            available_j: 2.0,
            consumed_j: 0.25,
        }];
        write_trajectory_csv(&mut buf, &pts).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "time_s,available_j,consumed_j\n0.5,2,0.25\n"
        );
    }
}
