use approx::assert_relative_eq;
use bgm_core::analysis::{
    log_grid, memory_report, regularity_scaling, rho_n, scaling_integral, variance_class_report, variance_ratio_curve,
    MemoryClass, VarianceClass,
};
use bgm_core::covariance::variance;
use bgm_core::kernels::ProcessSpec;

fn spec(family: &str, flavor: &str) -> ProcessSpec {
    ProcessSpec::parse(family, flavor).unwrap()
}

#[test]
fn first_increment_correlations() {
    assert_relative_eq!(rho_n(&spec("stable:alpha=0.5", "derivative"), 1).unwrap(), -0.292_893_218_8, max_relative = 1e-8);
    assert_relative_eq!(rho_n(&spec("stable:alpha=1.5", "integral"), 1).unwrap(), 0.414_213_562_4, max_relative = 1e-8);
    assert_relative_eq!(rho_n(&spec("exponential", "derivative"), 1).unwrap(), -0.316_060_279_4, max_relative = 1e-8);
}

#[test]
fn stable_memory_reports() {
    let short = memory_report(&spec("stable:alpha=0.5", "derivative"), 200).unwrap();
    assert!(short.all_negative);
    assert_eq!(short.classification, MemoryClass::ShortRange);
    assert!((short.decay_exponent_fit.unwrap().exponent + 1.5).abs() < 0.1);

    let long = memory_report(&spec("stable:alpha=1.5", "integral"), 200).unwrap();
    assert!(long.all_positive);
    assert_eq!(long.classification, MemoryClass::LongRange);
    assert!((long.decay_exponent_fit.unwrap().exponent + 0.5).abs() < 0.1);

    let mut buf = Vec::new();
    long.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("n,rho,partial_abs_sum\n"));
    assert_eq!(text.lines().count(), 201);
}

#[test]
fn exponential_memory_is_short() {
    let r = memory_report(&spec("exponential", "derivative"), 50).unwrap();
    assert_eq!(r.classification, MemoryClass::ShortRange);
    // |rho_m| = (1 - 1/e) e^{-(m-1)} / 2, so the tail beyond n is e^{-n} / 2
    let want = (1..).find(|&n| 0.5 * (-(n as f64)).exp() < 1e-6).unwrap();
    assert_eq!(r.cauchy_cutoff, Some(want));
}

#[test]
fn variance_classes() {
    let e = variance_class_report(&spec("exponential", "derivative")).unwrap();
    assert_eq!(e.class, VarianceClass::FiniteLimit);
    assert!(e.consistent);
    let s = variance_class_report(&spec("stable:alpha=0.5", "derivative")).unwrap();
    assert_eq!(s.class, VarianceClass::DivergesSublinearly);
    assert!(s.consistent);
    assert!(variance_class_report(&spec("stable:alpha=1.5", "integral")).is_err());
}

#[test]
fn brownian_regularity() {
    let r = regularity_scaling(&spec("stable:alpha=1", "derivative"), &log_grid(1e-2, 1e2, 9)).unwrap();
    assert_eq!(r.fitted_exponent, 0.0);
    assert_relative_eq!(r.holder_gamma_bound, 0.5);
    assert!(r.local_time_beta.is_none());
    for g in &r.g_values {
        assert_relative_eq!(*g, std::f64::consts::PI, max_relative = 1e-8);
    }
}

#[test]
fn regularity_rejects_bad_grids() {
    let s = spec("stable:alpha=0.5", "derivative");
    assert!(regularity_scaling(&s, &log_grid(1e-2, 1e2, 5)).is_err());
    assert!(regularity_scaling(&s, &log_grid(1e-3, 1e2, 12)).is_err());
    let linear: Vec<f64> = (1..=10).map(|k| k as f64).collect();
    assert!(regularity_scaling(&s, &linear).is_err());
}

#[test]
fn scaling_integral_tracks_variance() {
    // t g(1/t) is proportional to V(t)
    for (f, fl) in [("stable:alpha=0.5", "derivative"), ("exponential", "derivative"), ("ml:alpha=0.2,beta=0.8", "integral")] {
        let s = spec(f, fl);
        let ratios: Vec<f64> = [1.0, 2.0, 4.0, 8.0]
            .iter()
            .map(|&t| t * scaling_integral(&s, 1.0 / t).unwrap() / variance(&s, t).unwrap())
            .collect();
        for r in &ratios {
            assert!((r / ratios[0] - 1.0).abs() < 0.01, "{f}: {ratios:?}");
        }
    }
}

#[test]
fn derivative_variance_ratio_is_bounded() {
    for f in ["gamma", "tempered1:alpha=0.5,lambda=1"] {
        for (t, ratio) in variance_ratio_curve(&spec(f, "derivative"), &[0.1, 1.0, 10.0]).unwrap() {
            assert!(ratio > 0.0 && ratio <= 2.0, "{f} t = {t}: {ratio}");
        }
    }
}
