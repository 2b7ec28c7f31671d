//! Closed-form battery lifetime under a constant average load.
//!
//! The exponential model balances consumption against the self-discharged
//! initial stock:
//!
//! ```text
//! p·t = E·(1 − D)^(t / k_spm) = E·e^(−λt),   λ = −ln(1 − D) / k_spm
//! ```
//!
//! Setting `x = λt` gives `x·eˣ = λE/p`, hence `t = W₀(λE/p) / λ`. The argument
//! of `W₀` is always positive so the principal branch is the only one needed.
//! The linear model replaces the decay by `1 − D·t/k_spm` and has the explicit
//! root `t = E / (p + E·D/k_spm)`.
//!
//! [`lifetime_oracle`] solves the same balances by bisection without going
//! through Lambert W, and is what the closed forms are checked against.

use serde::{Deserialize, Serialize};

use crate::battery::{remaining_capacity_exponential, remaining_capacity_linear, Battery};
use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::lambert::lambert_w0;

pub const DEFAULT_SECONDS_PER_MONTH: f64 = 2_592_000.0;
pub const DEFAULT_SECONDS_PER_YEAR: f64 = 31_536_000.0;

/// Upper end of the oracle's search bracket, in years.
pub const ORACLE_HORIZON_YEARS: f64 = 200.0;
const ORACLE_MAX_STEPS: u32 = 60;
const ORACLE_ABS_TOL_S: f64 = 1e-6;
const ORACLE_REL_TOL: f64 = 1e-12;

/// Time-unit constants of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelConstantsJson", into = "ModelConstantsJson")]
pub struct ModelConstants {
    /// Seconds per month.
    pub k_spm: f64,
    pub seconds_per_year: f64,
}

impl Default for ModelConstants {
    fn default() -> Self {
        ModelConstants {
            k_spm: DEFAULT_SECONDS_PER_MONTH,
            seconds_per_year: DEFAULT_SECONDS_PER_YEAR,
        }
    }
}

impl ModelConstants {
    pub fn new(k_spm: f64, seconds_per_year: f64) -> Result<Self> {
        ensure_positive("k_spm", k_spm)?;
        ensure_positive("seconds_per_year", seconds_per_year)?;
        Ok(ModelConstants {
            k_spm,
            seconds_per_year,
        })
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelConstantsJson {
    #[serde(default = "default_k_spm")]
    k_spm_s: f64,
    #[serde(default = "default_seconds_per_year")]
    seconds_per_year_s: f64,
}

fn default_k_spm() -> f64 {
    DEFAULT_SECONDS_PER_MONTH
}

fn default_seconds_per_year() -> f64 {
    DEFAULT_SECONDS_PER_YEAR
}

impl TryFrom<ModelConstantsJson> for ModelConstants {
    type Error = Error;

    fn try_from(j: ModelConstantsJson) -> Result<Self> {
        ModelConstants::new(j.k_spm_s, j.seconds_per_year_s)
    }
}

impl From<ModelConstants> for ModelConstantsJson {
    fn from(c: ModelConstants) -> Self {
        ModelConstantsJson {
            k_spm_s: c.k_spm,
            seconds_per_year_s: c.seconds_per_year,
        }
    }
}

/// Solved lifetime. A device that never depletes is `Infinite`, never `f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lifetime {
    Finite(f64),
    Infinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LifetimeModel {
    Ideal,
    ExponentialSelfDischarge,
    LinearSelfDischarge,
    OracleBisection,
    Simulated,
}

/// Which self-discharge curve a balance is solved against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DischargeCurve {
    Exponential,
    Linear,
}

/// Inputs a lifetime was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateInputs {
    pub effective_capacity_j: f64,
    pub average_power_w: f64,
    pub self_discharge_rate: f64,
    pub k_spm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifetimeEstimate {
    pub lifetime: Lifetime,
    pub model: LifetimeModel,
    pub inputs: EstimateInputs,
    pub seconds_per_year: f64,
}

impl LifetimeEstimate {
    pub fn lifetime_s(&self) -> Option<f64> {
        match self.lifetime {
            Lifetime::Finite(s) => Some(s),
            Lifetime::Infinite => None,
        }
    }

    pub fn lifetime_years(&self) -> Option<f64> {
        self.lifetime_s().map(|s| s / self.seconds_per_year)
    }

    pub fn is_infinite(&self) -> bool {
        self.lifetime == Lifetime::Infinite
    }
}

impl Serialize for LifetimeEstimate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            model: LifetimeModel,
            infinite: bool,
            lifetime_s: Option<f64>,
            lifetime_years: Option<f64>,
            inputs: &'a EstimateInputs,
        }
        Repr {
            model: self.model,
            infinite: self.is_infinite(),
            lifetime_s: self.lifetime_s(),
            lifetime_years: self.lifetime_years(),
            inputs: &self.inputs,
        }
        .serialize(s)
    }
}

/// Continuous decay rate `λ = −ln(1 − D)/k_spm`, per second.
pub fn decay_rate_per_second(self_discharge_rate: f64, k_spm: f64) -> f64 {
    -(-self_discharge_rate).ln_1p() / k_spm
}

fn estimate(
    lifetime: Lifetime,
    model: LifetimeModel,
    effective_capacity_j: f64,
    p_avg: f64,
    self_discharge_rate: f64,
    constants: &ModelConstants,
) -> LifetimeEstimate {
    LifetimeEstimate {
        lifetime,
        model,
        inputs: EstimateInputs {
            effective_capacity_j,
            average_power_w: p_avg,
            self_discharge_rate,
            k_spm: constants.k_spm,
        },
        seconds_per_year: constants.seconds_per_year,
    }
}

/// `t = E/p`, no self-discharge.
pub fn lifetime_ideal(
    effective_capacity_j: f64,
    p_avg: f64,
    constants: &ModelConstants,
) -> Result<LifetimeEstimate> {
    ensure_positive("effective_capacity_j", effective_capacity_j)?;
    ensure_non_negative("p_avg", p_avg)?;
    let lifetime = if p_avg == 0.0 {
        Lifetime::Infinite
    } else {
        Lifetime::Finite(effective_capacity_j / p_avg)
    };
    Ok(estimate(
        lifetime,
        LifetimeModel::Ideal,
        effective_capacity_j,
        p_avg,
        0.0,
        constants,
    ))
}

/// `t = W₀(λE/p)/λ`; equal to the ideal lifetime when `D = 0`.
pub fn lifetime_exponential(
    battery: &Battery,
    p_avg: f64,
    constants: &ModelConstants,
) -> Result<LifetimeEstimate> {
    ensure_positive("p_avg", p_avg)?;
    let e_eff = battery.effective_capacity_j();
    let d = battery.self_discharge_rate();
    let seconds = if d == 0.0 {
        e_eff / p_avg
    } else {
        let lambda = decay_rate_per_second(d, constants.k_spm);
        let z = lambda * e_eff / p_avg;
        if !z.is_finite() {
            return Err(Error::Numeric(format!(
                "λE/p overflows for E = {e_eff} J, p = {p_avg} W"
            )));
        }
        lambert_w0(z)? / lambda
    };
    Ok(estimate(
        Lifetime::Finite(seconds),
        LifetimeModel::ExponentialSelfDischarge,
        e_eff,
        p_avg,
        d,
        constants,
    ))
}

/// `t = E/(p + E·D/k_spm)`; bounded by `k_spm/D` even without load.
pub fn lifetime_linear(
    battery: &Battery,
    p_avg: f64,
    constants: &ModelConstants,
) -> Result<LifetimeEstimate> {
    ensure_non_negative("p_avg", p_avg)?;
    let e_eff = battery.effective_capacity_j();
    let d = battery.self_discharge_rate();
    let drain = p_avg + e_eff * d / constants.k_spm;
    let lifetime = if drain == 0.0 {
        Lifetime::Infinite
    } else {
        Lifetime::Finite(e_eff / drain)
    };
    Ok(estimate(
        lifetime,
        LifetimeModel::LinearSelfDischarge,
        e_eff,
        p_avg,
        d,
        constants,
    ))
}

/// Bisection on `p·t − capacity(t)` over `[0, 200 years]`.
pub fn lifetime_oracle(
    battery: &Battery,
    p_avg: f64,
    constants: &ModelConstants,
    curve: DischargeCurve,
) -> Result<LifetimeEstimate> {
    let t_max = ORACLE_HORIZON_YEARS * constants.seconds_per_year;
    lifetime_oracle_within(battery, p_avg, constants, curve, t_max)
}

/// [`lifetime_oracle`] with an explicit bracket end `t_max_s`.
pub fn lifetime_oracle_within(
    battery: &Battery,
    p_avg: f64,
    constants: &ModelConstants,
    curve: DischargeCurve,
    t_max_s: f64,
) -> Result<LifetimeEstimate> {
    ensure_positive("p_avg", p_avg)?;
    ensure_positive("t_max_s", t_max_s)?;
    let capacity = |t: f64| -> Result<f64> {
        let months = t / constants.k_spm;
        match curve {
            DischargeCurve::Exponential => remaining_capacity_exponential(battery, months),
            DischargeCurve::Linear => remaining_capacity_linear(battery, months),
        }
    };
    let balance = |t: f64| -> Result<f64> { Ok(p_avg * t - capacity(t)?) };

    if balance(t_max_s)? < 0.0 {
        return Err(Error::Bracket { t_max_s });
    }
    let (mut lo, mut hi) = (0.0f64, t_max_s);
    for _ in 0..ORACLE_MAX_STEPS {
        if hi - lo <= ORACLE_ABS_TOL_S.min(ORACLE_REL_TOL * lo) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if balance(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(estimate(
        Lifetime::Finite(0.5 * (lo + hi)),
        LifetimeModel::OracleBisection,
        battery.effective_capacity_j(),
        p_avg,
        battery.self_discharge_rate(),
        constants,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    fn five_wh(d: f64) -> Battery {
        Battery::from_wh(5.0, d).unwrap()
    }

    #[test]
    fn ideal_examples() {
        let c = ModelConstants::default();
        let est = lifetime_ideal(18_000.0, 1e-4, &c).unwrap();
        assert_eq!(est.lifetime_s(), Some(1.8e8));
        assert!((est.lifetime_years().unwrap() - 5.71).abs() < 0.005);
        assert_eq!(
            lifetime_ideal(7.5, 7.5, &c).unwrap().lifetime_s(),
            Some(1.0)
        );
        assert!(lifetime_ideal(18_000.0, 0.0, &c).unwrap().is_infinite());
        assert!(lifetime_ideal(18_000.0, -1.0, &c).is_err());
    }

    #[test]
    fn exponential_examples() {
        let c = ModelConstants::default();
        let ideal = lifetime_exponential(&five_wh(0.0), 1e-4, &c).unwrap();
        assert_eq!(ideal.lifetime_s(), Some(1.8e8));

        // reference from an independent bisection of p·t = E·0.995^(t/k_spm)
        let est = lifetime_exponential(&five_wh(0.005), 1e-4, &c).unwrap();
        assert!(rel(est.lifetime_s().unwrap(), 137_872_786.512_932_66) < 1e-12);
        assert!((est.lifetime_years().unwrap() - 4.37).abs() < 0.005);

        let heavy = lifetime_exponential(&five_wh(0.005), 1.0, &c).unwrap();
        assert!(rel(heavy.lifetime_s().unwrap(), 18_000.0) < 1e-4);

        assert!(lifetime_exponential(&five_wh(0.005), 0.0, &c).is_err());
        assert!(lifetime_exponential(&five_wh(0.005), -1.0, &c).is_err());
    }

    #[test]
    fn linear_examples() {
        let c = ModelConstants::default();
        let bound = lifetime_linear(&five_wh(0.005), 0.0, &c).unwrap();
        assert!(rel(bound.lifetime_s().unwrap(), 5.184e8) < 1e-15);
        assert!((bound.lifetime_years().unwrap() - 16.44).abs() < 0.005);

        let flat = lifetime_linear(&five_wh(0.0), 1e-4, &c).unwrap();
        assert_eq!(flat.lifetime_s(), Some(1.8e8));

        let est = lifetime_linear(&five_wh(0.005), 1e-4, &c).unwrap();
        let t = est.lifetime_s().unwrap();
        assert!(rel(t, 18_000.0 / (1e-4 + 18_000.0 * 0.005 / 2_592_000.0)) < 1e-15);
        assert!(rel(t, 1.336_082_474_226_804e8) < 1e-12);
        let residual = 1e-4 * t - 18_000.0 * (1.0 - 0.005 * t / 2_592_000.0);
        assert!(residual.abs() <= 1e-10 * 18_000.0);

        assert!(lifetime_linear(&five_wh(0.0), 0.0, &c)
            .unwrap()
            .is_infinite());
    }

    #[test]
    fn oracle_examples() {
        let c = ModelConstants::default();
        let b = five_wh(0.005);
        let oracle = lifetime_oracle(&b, 1e-4, &c, DischargeCurve::Exponential).unwrap();
        let closed = lifetime_exponential(&b, 1e-4, &c).unwrap();
        assert!(rel(oracle.lifetime_s().unwrap(), closed.lifetime_s().unwrap()) < 1e-9);
        assert_eq!(oracle.model, LifetimeModel::OracleBisection);

        let flat = lifetime_oracle(&five_wh(0.0), 1e-4, &c, DischargeCurve::Exponential).unwrap();
        assert!(rel(flat.lifetime_s().unwrap(), 1.8e8) < 1e-9);

        let lin = lifetime_oracle(&b, 1e-4, &c, DischargeCurve::Linear).unwrap();
        let lin_closed = lifetime_linear(&b, 1e-4, &c).unwrap();
        assert!(rel(lin.lifetime_s().unwrap(), lin_closed.lifetime_s().unwrap()) < 1e-9);
    }

    #[test]
    fn oracle_reports_bracket_failure() {
        let c = ModelConstants::default();
        let b = Battery::from_wh(100.0, 0.0).unwrap();
        assert!(matches!(
            lifetime_oracle(&b, 1e-6, &c, DischargeCurve::Exponential),
            Err(Error::Bracket { .. })
        ));
    }

    #[test]
    fn balance_residual_is_tiny() {
        let c = ModelConstants::default();
        for (wh, d, p) in [(5.0, 0.005, 1e-4), (0.1, 0.05, 1e-6), (100.0, 0.01, 1.0)] {
            let b = Battery::from_wh(wh, d).unwrap();
            let t = lifetime_exponential(&b, p, &c)
                .unwrap()
                .lifetime_s()
                .unwrap();
            let stock = remaining_capacity_exponential(&b, t / c.k_spm).unwrap();
            assert!(rel(p * t, stock) < 1e-10, "wh={wh} d={d} p={p}");
        }
    }

    #[test]
    fn estimate_json_shape() {
        let c = ModelConstants::default();
        let est = lifetime_ideal(10.0, 0.0, &c).unwrap();
        let v = serde_json::to_value(est).unwrap();
        assert_eq!(v["infinite"], true);
        assert!(v["lifetime_s"].is_null());
        assert_eq!(v["model"], "ideal");

        let cfg: ModelConstants = serde_json::from_str(r#"{"k_spm_s": 2629800}"#).unwrap();
        assert_eq!(cfg.k_spm, 2_629_800.0);
        assert_eq!(cfg.seconds_per_year, DEFAULT_SECONDS_PER_YEAR);
        assert!(serde_json::from_str::<ModelConstants>(r#"{"k_spm_s": 0}"#).is_err());
    }
}
