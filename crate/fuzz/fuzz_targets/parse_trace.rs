#![no_main]

use libfuzzer_sys::fuzz_target;
use lpwan_lifetime::duty_cycle::TrafficModel;
use lpwan_lifetime::trace::{ingest, parse_trace, write_trace_csv, Segmenter, Thresholds};

fuzz_target!(|data: &[u8]| {
    let Ok(samples) = parse_trace(data) else {
        return;
    };
    for s in &samples {
        assert!(s.time_s.is_finite() && s.current_a.is_finite() && s.voltage_v.is_finite());
    }
    for w in samples.windows(2) {
        assert!(w[1].time_s > w[0].time_s);
    }

    let mut out = Vec::new();
    write_trace_csv(&mut out, &samples).unwrap();
    assert_eq!(parse_trace(out.as_slice()).unwrap(), samples);

    let thresholds = Thresholds::new(1e-4, 1e-2, 5e-2).unwrap();
    for segmenter in [Segmenter::Labels, Segmenter::Thresholds(thresholds)] {
        let _ = ingest(&samples, segmenter, TrafficModel::Custom(1.0));
    }
});
