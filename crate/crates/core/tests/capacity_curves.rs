use lpwan_lifetime::battery::{remaining_capacity_exponential, remaining_capacity_linear, Battery};
use proptest::prelude::*;

fn d_grid() -> impl Iterator<Item = f64> {
    [1e-4, 1e-3, 0.005, 0.01, 0.05, 0.2, 0.5, 0.9].into_iter()
}

#[test]
fn exponential_dominates_linear_after_one_month() {
    for d in d_grid() {
        let b = Battery::new(1000.0, d, 1.0).unwrap();
        for i in 0..=400 {
            let t = 1.0 + i as f64 * 0.5;
            let exp = remaining_capacity_exponential(&b, t).unwrap();
            let lin = remaining_capacity_linear(&b, t).unwrap();
            assert!(exp >= lin * (1.0 - 1e-14), "d={d} t={t}: {exp} < {lin}");
        }
    }
}

#[test]
fn linear_dominates_exponential_within_first_month() {
    for d in d_grid() {
        let b = Battery::new(1000.0, d, 1.0).unwrap();
        for i in 1..100 {
            let t = i as f64 / 100.0;
            let exp = remaining_capacity_exponential(&b, t).unwrap();
            let lin = remaining_capacity_linear(&b, t).unwrap();
            assert!(exp <= lin * (1.0 + 1e-14), "d={d} t={t}");
        }
    }
}

#[test]
fn linear_hits_zero_at_inverse_rate() {
    for d in [0.005, 0.01, 0.05, 0.25, 0.5] {
        let b = Battery::new(42.0, d, 1.0).unwrap();
        assert_eq!(remaining_capacity_linear(&b, 1.0 / d).unwrap(), 0.0);
        assert!(remaining_capacity_linear(&b, 0.999 / d).unwrap() > 0.0);
    }
}

proptest! {
    #[test]
    fn curves_are_monotone(cap in 1e-3f64..1e6, d in 0.0f64..0.99, t0 in 0.0f64..500.0, dt in 0.0f64..50.0) {
        let b = Battery::new(cap, d, 1.0).unwrap();
        let t1 = t0 + dt;
        prop_assert!(remaining_capacity_exponential(&b, t1).unwrap()
            <= remaining_capacity_exponential(&b, t0).unwrap());
        prop_assert!(remaining_capacity_linear(&b, t1).unwrap()
            <= remaining_capacity_linear(&b, t0).unwrap());
    }

    #[test]
    fn exponential_stays_positive(cap in 1e-3f64..1e6, d in 0.0f64..0.5, t in 0.0f64..1000.0) {
        let b = Battery::new(cap, d, 1.0).unwrap();
        prop_assert!(remaining_capacity_exponential(&b, t).unwrap() > 0.0);
    }

    #[test]
    fn usable_fraction_scales_curves(cap in 1e-3f64..1e6, d in 0.0f64..0.99, eta in 0.01f64..1.0, t in 0.0f64..300.0) {
        let full = Battery::new(cap, d, 1.0).unwrap();
        let derated = full.with_usable_fraction(eta).unwrap();
        let e = remaining_capacity_exponential(&derated, t).unwrap();
        let l = remaining_capacity_linear(&derated, t).unwrap();
        prop_assert!((e - eta * remaining_capacity_exponential(&full, t).unwrap()).abs() <= 1e-12 * e.max(1e-300));
        prop_assert!((l - eta * remaining_capacity_linear(&full, t).unwrap()).abs() <= 1e-12 * cap);
        prop_assert_eq!(remaining_capacity_exponential(&derated, 0.0).unwrap(), cap * eta);
    }
}
