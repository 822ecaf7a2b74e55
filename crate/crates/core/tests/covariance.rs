use approx::assert_relative_eq;
use bgm_core::analysis::{rho_n, rho_n_from_variance, rho_partial_sum};
use bgm_core::covariance::{covariance_fourier, covariance_time, read_covariance_csv, variance, CovarianceTable};
use bgm_core::kernels::ProcessSpec;

fn spec(family: &str, flavor: &str) -> ProcessSpec {
    ProcessSpec::parse(family, flavor).unwrap()
}

#[test]
fn brownian_variance_is_t() {
    let bm = spec("stable:alpha=1", "derivative");
    for t in [0.25, 1.0, 3.0, 10.0] {
        assert_relative_eq!(variance(&bm, t).unwrap(), t, max_relative = 1e-9);
    }
    assert_relative_eq!(covariance_time(&bm, 1.0, 3.0).unwrap(), 1.0, max_relative = 1e-9);
}

#[test]
fn exponential_cov_one_two() {
    let s = spec("exponential", "derivative");
    let got = covariance_time(&s, 1.0, 2.0).unwrap();
    assert!((got - 0.6839).abs() < 1e-4, "{got}");
}

#[test]
fn fbm_entry_from_table() {
    let s = spec("stable:alpha=0.5", "derivative");
    let grid: Vec<f64> = (0..=8).map(|k| 0.5 * k as f64).collect();
    let table = CovarianceTable::time_domain(&s, &grid).unwrap();
    assert!((table.values[(4, 2)] - 0.70711).abs() < 1e-4);
    assert_eq!(table.values[(0, 5)], 0.0);
}

#[test]
fn table_csv_round_trip() {
    let s = spec("gamma", "derivative");
    let grid = [0.5, 1.0, 2.0];
    let table = CovarianceTable::time_domain(&s, &grid).unwrap();
    let mut buf = Vec::new();
    table.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("t,s,cov,route\n"));
    assert_eq!(text.lines().count(), 1 + 9);
    let (g, m) = read_covariance_csv(buf.as_slice()).unwrap();
    assert_eq!(g, grid);
    assert_eq!(m, table.values);
}

#[test]
fn spectral_route_matches_fbm() {
    let s = spec("stable:alpha=0.5", "derivative");
    for (t, u) in [(1.0, 1.0), (0.5, 2.0), (3.0, 1.5)] {
        let want = 0.5 * (f64::sqrt(t) + f64::sqrt(u) - f64::sqrt((t - u).abs()));
        assert!((covariance_fourier(&s, t, u).unwrap() - want).abs() < 1e-6);
    }
}

#[test]
fn fbm_increment_correlation_asymptotics() {
    // rho_n ~ H (2H - 1) n^{2H - 2}
    for (alpha, flavor) in [(0.5, "derivative"), (1.5, "integral")] {
        let s = spec(&format!("stable:alpha={alpha}"), flavor);
        let h = alpha / 2.0;
        let n = 100;
        let exact = 0.5 * ((101f64).powf(alpha) - 2.0 * (100f64).powf(alpha) + (99f64).powf(alpha));
        let asym = h * (2.0 * h - 1.0) * (n as f64).powf(2.0 * h - 2.0);
        let got = rho_n(&s, n).unwrap();
        assert_relative_eq!(got, exact, max_relative = 1e-6);
        assert_relative_eq!(got, asym, max_relative = 1e-3);
    }
}

#[test]
fn rho_direct_and_variance_forms_agree() {
    for (f, fl) in [("exponential", "derivative"), ("ml:alpha=0.2,beta=0.8", "integral")] {
        let s = spec(f, fl);
        for n in [1, 3, 10] {
            let a = rho_n(&s, n).unwrap();
            let b = rho_n_from_variance(&s, n).unwrap();
            assert!((a - b).abs() <= 1e-8 * (1.0 + b.abs()), "{s} n = {n}: {a} vs {b}");
        }
    }
}

#[test]
fn telescoped_sum_matches_direct_sum() {
    let s = spec("stable:alpha=1.5", "integral");
    let direct: f64 = (1..=20).map(|n| rho_n(&s, n).unwrap()).sum();
    assert_relative_eq!(rho_partial_sum(&s, 20).unwrap(), direct, max_relative = 1e-8);
}

#[test]
fn rejects_bad_grids() {
    let s = spec("stable:alpha=0.5", "derivative");
    assert!(CovarianceTable::time_domain(&s, &[]).is_err());
    assert!(CovarianceTable::time_domain(&s, &[1.0, 0.5]).is_err());
    assert!(CovarianceTable::time_domain(&s, &[-1.0, 0.5]).is_err());
}
