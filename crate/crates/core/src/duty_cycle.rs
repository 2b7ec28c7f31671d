//! Duty-cycle fractions, per-state power and energy, and traffic presets.
//!
//! An activation cycle of period `t_activation` is split into four states.
//! Fractions `α` are dimensionless: `α_tx + α_rx + α_proc + α_idle = 1`, with
//! `α_idle` always derived from the other three. Energy spent in a state over
//! an elapsed time `t` is `P_i·α_i·t`, so summing the states gives
//! `average_power·t`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_non_negative, ensure_positive, Error, Result};

/// Slack allowed on the unit sum of the non-idle fractions.
const UNIT_SUM_SLACK: f64 = 1e-12;

/// Operational state of an end-point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatingState {
    Tx,
    Rx,
    Proc,
    Idle,
}

impl OperatingState {
    pub const ALL: [OperatingState; 4] = [
        OperatingState::Tx,
        OperatingState::Rx,
        OperatingState::Proc,
        OperatingState::Idle,
    ];

    /// Position in [`OperatingState::ALL`].
    pub fn index(self) -> usize {
        match self {
            OperatingState::Tx => 0,
            OperatingState::Rx => 1,
            OperatingState::Proc => 2,
            OperatingState::Idle => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            OperatingState::Tx => "tx",
            OperatingState::Rx => "rx",
            OperatingState::Proc => "proc",
            OperatingState::Idle => "idle",
        }
    }
}

impl fmt::Display for OperatingState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OperatingState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tx" => Ok(OperatingState::Tx),
            "rx" => Ok(OperatingState::Rx),
            "proc" => Ok(OperatingState::Proc),
            "idle" => Ok(OperatingState::Idle),
            other => Err(Error::Domain(format!(
                "unknown state `{other}`, expected tx|rx|proc|idle"
            ))),
        }
    }
}

/// Average power drawn in each state, watts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PowerProfileJson", into = "PowerProfileJson")]
pub struct PowerProfile {
    pub p_tx: f64,
    pub p_rx: f64,
    pub p_proc: f64,
    pub p_idle: f64,
}

impl PowerProfile {
    pub fn new(p_tx: f64, p_rx: f64, p_proc: f64, p_idle: f64) -> Result<Self> {
        ensure_non_negative("p_tx", p_tx)?;
        ensure_non_negative("p_rx", p_rx)?;
        ensure_non_negative("p_proc", p_proc)?;
        ensure_non_negative("p_idle", p_idle)?;
        Ok(Self {
            p_tx,
            p_rx,
            p_proc,
            p_idle,
        })
    }

    /// Same power in every state.
    pub fn constant(p: f64) -> Result<Self> {
        Self::new(p, p, p, p)
    }

    pub fn power(&self, state: OperatingState) -> f64 {
        match state {
            OperatingState::Tx => self.p_tx,
            OperatingState::Rx => self.p_rx,
            OperatingState::Proc => self.p_proc,
            OperatingState::Idle => self.p_idle,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PowerProfileJson {
    p_tx_w: f64,
    p_rx_w: f64,
    p_proc_w: f64,
    p_idle_w: f64,
}

impl TryFrom<PowerProfileJson> for PowerProfile {
    type Error = Error;

    fn try_from(j: PowerProfileJson) -> Result<Self> {
        PowerProfile::new(j.p_tx_w, j.p_rx_w, j.p_proc_w, j.p_idle_w)
    }
}

impl From<PowerProfile> for PowerProfileJson {
    fn from(p: PowerProfile) -> Self {
        PowerProfileJson {
            p_tx_w: p.p_tx,
            p_rx_w: p.p_rx,
            p_proc_w: p.p_proc,
            p_idle_w: p.p_idle,
        }
    }
}

/// One activation cycle: its period and the share of it spent in each state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ActivationCycleJson", into = "ActivationCycleJson")]
pub struct ActivationCycle {
    t_activation: f64,
    alpha_tx: f64,
    alpha_rx: f64,
    alpha_proc: f64,
}

impl ActivationCycle {
    pub fn new(t_activation: f64, alpha_tx: f64, alpha_rx: f64, alpha_proc: f64) -> Result<Self> {
        ensure_positive("t_activation", t_activation)?;
        for (name, a) in [
            ("alpha_tx", alpha_tx),
            ("alpha_rx", alpha_rx),
            ("alpha_proc", alpha_proc),
        ] {
            ensure_non_negative(name, a)?;
            if a > 1.0 {
                return Err(Error::Domain(format!("{name} must be <= 1, got {a}")));
            }
        }
        let busy = alpha_tx + alpha_rx + alpha_proc;
        if busy > 1.0 + UNIT_SUM_SLACK {
            return Err(Error::InfeasibleCycle(format!(
                "alpha_tx + alpha_rx + alpha_proc = {busy} exceeds 1"
            )));
        }
        Ok(Self {
            t_activation,
            alpha_tx,
            alpha_rx,
            alpha_proc,
        })
    }

    /// A cycle spent entirely in standby.
    pub fn all_idle(t_activation: f64) -> Result<Self> {
        Self::new(t_activation, 0.0, 0.0, 0.0)
    }

    pub fn t_activation(&self) -> f64 {
        self.t_activation
    }

    pub fn alpha_tx(&self) -> f64 {
        self.alpha_tx
    }

    pub fn alpha_rx(&self) -> f64 {
        self.alpha_rx
    }

    pub fn alpha_proc(&self) -> f64 {
        self.alpha_proc
    }

    /// `1 − (α_tx + α_rx + α_proc)`.
    pub fn alpha_idle(&self) -> f64 {
        (1.0 - (self.alpha_tx + self.alpha_rx + self.alpha_proc)).max(0.0)
    }

    pub fn alpha(&self, state: OperatingState) -> f64 {
        match state {
            OperatingState::Tx => self.alpha_tx,
            OperatingState::Rx => self.alpha_rx,
            OperatingState::Proc => self.alpha_proc,
            OperatingState::Idle => self.alpha_idle(),
        }
    }

    /// Time spent in `state` during one cycle.
    pub fn duration(&self, state: OperatingState) -> f64 {
        self.alpha(state) * self.t_activation
    }

    /// Same fractions with a different period.
    pub fn with_t_activation(&self, t_activation: f64) -> Result<Self> {
        Self::new(t_activation, self.alpha_tx, self.alpha_rx, self.alpha_proc)
    }

    pub(crate) fn with_alpha_tx(&self, alpha_tx: f64) -> Result<Self> {
        Self::new(self.t_activation, alpha_tx, self.alpha_rx, self.alpha_proc)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ActivationCycleJson {
    t_activation_s: f64,
    alpha_tx: f64,
    alpha_rx: f64,
    alpha_proc: f64,
}

impl TryFrom<ActivationCycleJson> for ActivationCycle {
    type Error = Error;

    fn try_from(j: ActivationCycleJson) -> Result<Self> {
        ActivationCycle::new(j.t_activation_s, j.alpha_tx, j.alpha_rx, j.alpha_proc)
    }
}

impl From<ActivationCycle> for ActivationCycleJson {
    fn from(c: ActivationCycle) -> Self {
        ActivationCycleJson {
            t_activation_s: c.t_activation,
            alpha_tx: c.alpha_tx,
            alpha_rx: c.alpha_rx,
            alpha_proc: c.alpha_proc,
        }
    }
}

/// Builds a cycle from the time spent in each busy state per activation.
pub fn cycle_from_durations(
    d_tx: f64,
    d_rx: f64,
    d_proc: f64,
    t_activation: f64,
) -> Result<ActivationCycle> {
    ensure_non_negative("d_tx", d_tx)?;
    ensure_non_negative("d_rx", d_rx)?;
    ensure_non_negative("d_proc", d_proc)?;
    ensure_positive("t_activation", t_activation)?;
    let busy = d_tx + d_rx + d_proc;
    if busy > t_activation {
        return Err(Error::InfeasibleCycle(format!(
            "busy time {busy} s exceeds activation period {t_activation} s"
        )));
    }
    ActivationCycle::new(
        t_activation,
        d_tx / t_activation,
        d_rx / t_activation,
        d_proc / t_activation,
    )
}

/// Transmit fraction implied by one `s_msg`-bit message at `b_tx` bit/s per cycle.
pub fn alpha_tx_from_message(s_msg_bits: f64, b_tx_bps: f64, t_activation: f64) -> Result<f64> {
    ensure_positive("s_msg", s_msg_bits)?;
    ensure_positive("b_tx", b_tx_bps)?;
    ensure_positive("t_activation", t_activation)?;
    let airtime = s_msg_bits / b_tx_bps;
    if airtime > t_activation {
        return Err(Error::InfeasibleCycle(format!(
            "message airtime {airtime} s exceeds activation period {t_activation} s"
        )));
    }
    Ok(airtime / t_activation)
}

/// Duty-cycle weighted mean power.
pub fn average_power(profile: &PowerProfile, cycle: &ActivationCycle) -> f64 {
    profile.p_tx * cycle.alpha_tx
        + profile.p_rx * cycle.alpha_rx
        + profile.p_proc * cycle.alpha_proc
        + profile.p_idle * cycle.alpha_idle()
}

/// Energy spent in each state over an elapsed time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StateEnergies {
    pub e_tx: f64,
    pub e_rx: f64,
    pub e_proc: f64,
    pub e_stby: f64,
}

impl StateEnergies {
    pub fn total(&self) -> f64 {
        self.e_tx + self.e_rx + self.e_proc + self.e_stby
    }
}

pub fn state_energies_over_period(
    profile: &PowerProfile,
    cycle: &ActivationCycle,
    t: f64,
) -> Result<StateEnergies> {
    ensure_non_negative("t", t)?;
    Ok(StateEnergies {
        e_tx: profile.p_tx * cycle.alpha_tx * t,
        e_rx: profile.p_rx * cycle.alpha_rx * t,
        e_proc: profile.p_proc * cycle.alpha_proc * t,
        e_stby: profile.p_idle * cycle.alpha_idle() * t,
    })
}

/// CMOS switching power `α·C·f·V²`, a helper for estimating `P_proc`.
pub fn dynamic_power(activity: f64, c_eff_f: f64, freq_hz: f64, voltage_v: f64) -> Result<f64> {
    ensure_non_negative("activity factor", activity)?;
    if activity > 1.0 {
        return Err(Error::Domain(format!(
            "activity factor must be <= 1, got {activity}"
        )));
    }
    ensure_positive("c_eff", c_eff_f)?;
    ensure_positive("frequency", freq_hz)?;
    ensure_positive("voltage", voltage_v)?;
    Ok(activity * c_eff_f * freq_hz * voltage_v * voltage_v)
}

/// Normalized message-rate presets used to compare technologies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrafficModel {
    OneMsgPerDay,
    OneMsgPerHour,
    TenMsgPerHour,
    Custom(f64),
}

impl TrafficModel {
    pub const PRESETS: [TrafficModel; 3] = [
        TrafficModel::OneMsgPerDay,
        TrafficModel::OneMsgPerHour,
        TrafficModel::TenMsgPerHour,
    ];

    /// Activation period in seconds.
    pub fn activation_s(&self) -> Result<f64> {
        match *self {
            TrafficModel::OneMsgPerDay => Ok(86_400.0),
            TrafficModel::OneMsgPerHour => Ok(3_600.0),
            TrafficModel::TenMsgPerHour => Ok(360.0),
            TrafficModel::Custom(t) => {
                ensure_positive("custom activation period", t)?;
                Ok(t)
            }
        }
    }
}

pub fn traffic_model_activation(preset: TrafficModel) -> Result<f64> {
    preset.activation_s()
}

impl fmt::Display for TrafficModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrafficModel::OneMsgPerDay => f.write_str("1/day"),
            TrafficModel::OneMsgPerHour => f.write_str("1/hour"),
            TrafficModel::TenMsgPerHour => f.write_str("10/hour"),
            TrafficModel::Custom(t) => write!(f, "{t}s"),
        }
    }
}

impl FromStr for TrafficModel {
    type Err = Error;

    /// Accepts `1/day`, `1/hour`, `10/hour`, or a custom period such as `900s`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1/day" => Ok(TrafficModel::OneMsgPerDay),
            "1/hour" => Ok(TrafficModel::OneMsgPerHour),
            "10/hour" => Ok(TrafficModel::TenMsgPerHour),
            other => {
                let secs = other
                    .strip_suffix('s')
                    .and_then(|n| n.parse::<f64>().ok())
                    .ok_or_else(|| {
                        Error::Domain(format!(
                            "unknown traffic model `{other}`, expected 1/day|1/hour|10/hour|<seconds>s"
                        ))
                    })?;
                ensure_positive("custom activation period", secs)?;
                Ok(TrafficModel::Custom(secs))
            }
        }
    }
}

impl Serialize for TrafficModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TrafficModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Busy time spent per message, independent of how often messages are sent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerMessageCost {
    pub d_tx_s: f64,
    pub d_rx_s: f64,
    pub d_proc_s: f64,
}

impl PerMessageCost {
    pub fn from_cycle(cycle: &ActivationCycle) -> Self {
        PerMessageCost {
            d_tx_s: cycle.duration(OperatingState::Tx),
            d_rx_s: cycle.duration(OperatingState::Rx),
            d_proc_s: cycle.duration(OperatingState::Proc),
        }
    }

    pub fn cycle(&self, t_activation: f64) -> Result<ActivationCycle> {
        cycle_from_durations(self.d_tx_s, self.d_rx_s, self.d_proc_s, t_activation)
    }
}
