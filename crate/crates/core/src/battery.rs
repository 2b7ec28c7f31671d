//! Battery description, unit conversions and self-discharge capacity curves.
//!
//! Capacities are held in joules. Self-discharge `D` is the fraction of the
//! initial capacity lost per month; months are real-valued so both curves are
//! continuous in time.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_non_negative, ensure_positive, Error, Result};

/// Joules per watt-hour.
pub const JOULES_PER_WH: f64 = 3600.0;

/// Coulombs per amp-hour.
pub const COULOMBS_PER_AH: f64 = 3600.0;

/// A single-use battery.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Battery {
    capacity_j: f64,
    self_discharge_rate: f64,
    usable_fraction: f64,
}

impl Battery {
    /// Builds a battery from its nominal capacity in joules, the monthly
    /// self-discharge fraction `D ∈ [0, 1)` and the usable fraction `η ∈ (0, 1]`.
    pub fn new(capacity_j: f64, self_discharge_rate: f64, usable_fraction: f64) -> Result<Self> {
        ensure_positive("capacity_j", capacity_j)?;
        ensure_non_negative("self_discharge_rate", self_discharge_rate)?;
        if self_discharge_rate >= 1.0 {
            return Err(Error::Domain(format!(
                "self_discharge_rate must be < 1, got {self_discharge_rate}"
            )));
        }
        ensure_positive("usable_fraction", usable_fraction)?;
        if usable_fraction > 1.0 {
            return Err(Error::Domain(format!(
                "usable_fraction must be <= 1, got {usable_fraction}"
            )));
        }
        Ok(Self {
            capacity_j,
            self_discharge_rate,
            usable_fraction,
        })
    }

    /// Battery with `η = 1`, capacity given in watt-hours.
    pub fn from_wh(capacity_wh: f64, self_discharge_rate: f64) -> Result<Self> {
        Self::new(capacity_wh * JOULES_PER_WH, self_discharge_rate, 1.0)
    }

    /// Battery rated in amp-hours at a nominal voltage.
    pub fn from_ah(capacity_ah: f64, voltage_v: f64, self_discharge_rate: f64) -> Result<Self> {
        let wh = energy_wh_from_ah(capacity_ah, voltage_v)?;
        Self::new(wh * JOULES_PER_WH, self_discharge_rate, 1.0)
    }

    pub fn with_usable_fraction(self, usable_fraction: f64) -> Result<Self> {
        Self::new(self.capacity_j, self.self_discharge_rate, usable_fraction)
    }

    pub fn with_self_discharge_rate(self, self_discharge_rate: f64) -> Result<Self> {
        Self::new(self.capacity_j, self_discharge_rate, self.usable_fraction)
    }

    pub fn capacity_j(&self) -> f64 {
        self.capacity_j
    }

    pub fn self_discharge_rate(&self) -> f64 {
        self.self_discharge_rate
    }

    pub fn usable_fraction(&self) -> f64 {
        self.usable_fraction
    }

    /// Capacity deliverable above the supply voltage threshold, `E·η`.
    pub fn effective_capacity_j(&self) -> f64 {
        self.capacity_j * self.usable_fraction
    }
}

/// JSON form of a [`Battery`]: capacity in Wh and self-discharge in percent per month.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatterySpec {
    pub capacity_wh: f64,
    pub self_discharge_pct_per_month: f64,
    #[serde(default = "default_usable_fraction")]
    pub usable_fraction: f64,
}

fn default_usable_fraction() -> f64 {
    1.0
}

impl TryFrom<BatterySpec> for Battery {
    type Error = Error;

    fn try_from(spec: BatterySpec) -> Result<Self> {
        ensure_positive("capacity_wh", spec.capacity_wh)?;
        ensure_finite(
            "self_discharge_pct_per_month",
            spec.self_discharge_pct_per_month,
        )?;
        Battery::new(
            spec.capacity_wh * JOULES_PER_WH,
            spec.self_discharge_pct_per_month / 100.0,
            spec.usable_fraction,
        )
    }
}

impl From<&Battery> for BatterySpec {
    fn from(b: &Battery) -> Self {
        BatterySpec {
            capacity_wh: b.capacity_j / JOULES_PER_WH,
            self_discharge_pct_per_month: b.self_discharge_rate * 100.0,
            usable_fraction: b.usable_fraction,
        }
    }
}

/// `Q = I·t`.
pub fn charge_from_current_time(current_a: f64, duration_s: f64) -> Result<f64> {
    ensure_non_negative("current_a", current_a)?;
    ensure_non_negative("duration_s", duration_s)?;
    Ok(current_a * duration_s)
}

/// `E = Q·V`.
pub fn energy_from_charge(charge_c: f64, voltage_v: f64) -> Result<f64> {
    ensure_non_negative("charge_c", charge_c)?;
    ensure_non_negative("voltage_v", voltage_v)?;
    Ok(charge_c * voltage_v)
}

/// Amp-hours at a voltage, in watt-hours.
pub fn energy_wh_from_ah(charge_ah: f64, voltage_v: f64) -> Result<f64> {
    ensure_non_negative("charge_ah", charge_ah)?;
    ensure_non_negative("voltage_v", voltage_v)?;
    Ok(charge_ah * voltage_v)
}

/// Remaining capacity after `t_months` of exponential self-discharge:
/// `E·η·(1 − D)^t`.
pub fn remaining_capacity_exponential(battery: &Battery, t_months: f64) -> Result<f64> {
    ensure_non_negative("t_months", t_months)?;
    Ok(battery.effective_capacity_j() * (1.0 - battery.self_discharge_rate).powf(t_months))
}

/// Remaining capacity after `t_months` of linear self-discharge:
/// `max(0, E·η·(1 − D·t))`, zero from `t = 1/D` onwards.
pub fn remaining_capacity_linear(battery: &Battery, t_months: f64) -> Result<f64> {
    ensure_non_negative("t_months", t_months)?;
    let fraction = (1.0 - battery.self_discharge_rate * t_months).max(0.0);
    Ok(battery.effective_capacity_j() * fraction)
}

/// Month at which the linear curve reaches zero, `None` when `D = 0`.
pub fn linear_depletion_month(battery: &Battery) -> Option<f64> {
    (battery.self_discharge_rate > 0.0).then(|| 1.0 / battery.self_discharge_rate)
}
