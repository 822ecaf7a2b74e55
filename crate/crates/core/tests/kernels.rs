use approx::assert_relative_eq;
use bgm_core::kernels::{gfo_apply_smooth, gfo_indicator, ibp_residual, kernel_eval, ProcessSpec, TestFunction};
use bgm_core::ou::{h_kernel, OuSpec};
use bgm_core::special::gamma;

fn spec(family: &str, flavor: &str) -> ProcessSpec {
    ProcessSpec::parse(family, flavor).unwrap()
}

#[test]
fn indicator_images() {
    let g = spec("gamma", "derivative");
    assert_relative_eq!(gfo_indicator(&g, 0.0, 1.0, -1.0).unwrap(), -0.170_483_423_69, max_relative = 1e-9);
    let st = spec("stable:alpha=0.5", "derivative");
    assert_relative_eq!(gfo_indicator(&st, 0.0, 1.0, 0.5).unwrap(), 0.970_451_204_6, max_relative = 1e-9);
    assert_eq!(gfo_indicator(&st, 0.0, 1.0, 2.0).unwrap(), 0.0);
}

#[test]
fn integral_flavor_kernel() {
    let s = spec("stable:alpha=1.5", "integral");
    let chi = 0.5f64.powf(0.25) / gamma(1.25f64).unwrap().value;
    let want = s.normalization().unwrap().sqrt() * chi;
    assert_relative_eq!(kernel_eval(&s, 1.0, 0.5).unwrap(), want, max_relative = 1e-9);
}

#[test]
fn exponential_operator_on_sine() {
    let s = spec("exponential", "derivative");
    let f = TestFunction::Sine { omega: 1.0, phase: 0.0 };
    for x in [-1.0f64, 0.3, 2.0] {
        assert_relative_eq!(gfo_apply_smooth(&s, &f, x).unwrap(), 0.5 * (x.cos() + x.sin()), epsilon = 1e-9);
    }
}

#[test]
fn integration_by_parts_examples() {
    let e = spec("exponential", "derivative");
    assert!(ibp_residual(&e, &TestFunction::gaussian(0.0, 1.0), 1.0).unwrap() <= 1e-5);
    let st = spec("stable:alpha=0.5", "derivative");
    assert!(ibp_residual(&st, &TestFunction::gaussian(2.0, 1.0), 2.0).unwrap() <= 1e-5);
}

#[test]
fn ou_kernel_exponential_driver() {
    // k(s, -1) = sqrt(C) (e^{-(s+1)} - e^{-1}); the convolution term is elementary
    let s = spec("exponential", "derivative");
    let ou = OuSpec::new(s.clone(), 1.0, 1.0, 0.0).unwrap();
    let want = -s.normalization().unwrap().sqrt() * (-2.0f64).exp();
    assert_relative_eq!(h_kernel(&ou, 1.0, -1.0).unwrap(), want, max_relative = 1e-9);
}
