#![no_main]

use libfuzzer_sys::fuzz_target;
use lpwan_lifetime::battery::{Battery, BatterySpec};
use lpwan_lifetime::duty_cycle::{ActivationCycle, PowerProfile};
use lpwan_lifetime::lifetime::ModelConstants;
use lpwan_lifetime::simulator::SimConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(spec) = serde_json::from_slice::<BatterySpec>(data) {
        if let Ok(b) = Battery::try_from(spec) {
            assert!(b.effective_capacity_j() > 0.0);
        }
    }
    if let Ok(p) = serde_json::from_slice::<PowerProfile>(data) {
        let again: PowerProfile =
            serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(again, p);
    }
    if let Ok(c) = serde_json::from_slice::<ActivationCycle>(data) {
        assert!(c.alpha_idle() >= 0.0 && c.t_activation() > 0.0);
    }
    let _ = serde_json::from_slice::<ModelConstants>(data);
    if let Ok(cfg) = serde_json::from_slice::<SimConfig>(data) {
        let _ = cfg.validate();
    }
});
