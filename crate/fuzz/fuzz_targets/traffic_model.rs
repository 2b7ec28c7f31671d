#![no_main]

use libfuzzer_sys::fuzz_target;
use lpwan_lifetime::duty_cycle::TrafficModel;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(model) = text.parse::<TrafficModel>() {
        let period = model.activation_s().unwrap();
        assert!(period > 0.0 && period.is_finite());
        assert_eq!(model.to_string().parse::<TrafficModel>().unwrap(), model);
    }
});
