use bgm_core::covariance::{covariance_time, CovarianceTable};
use bgm_core::kernels::ProcessSpec;
use bgm_core::ou::{ou_mean, ou_simulate, OuSpec};
use bgm_core::simulate::{empirical_cov, empirical_cov_se, read_paths_csv, simulate, Method, WienerDesign};

fn spec(family: &str, flavor: &str) -> ProcessSpec {
    ProcessSpec::parse(family, flavor).unwrap()
}

#[test]
fn same_seed_same_paths() {
    let s = spec("exponential", "derivative");
    for method in [Method::Cholesky, Method::CirculantEmbedding] {
        let a = simulate(&s, 20, 0.1, 50, 42, method).unwrap();
        let b = simulate(&s, 20, 0.1, 50, 42, method).unwrap();
        let c = simulate(&s, 20, 0.1, 50, 43, method).unwrap();
        assert_eq!(a.paths(), b.paths());
        assert_ne!(a.paths(), c.paths());
        assert!(a.paths().column(0).iter().all(|v| *v == 0.0));
    }
}

#[test]
fn csv_output_is_stable_and_reads_back() {
    let s = spec("stable:alpha=0.5", "derivative");
    let ens = simulate(&s, 5, 0.2, 3, 7, Method::Cholesky).unwrap();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    ens.write_csv(&mut a).unwrap();
    simulate(&s, 5, 0.2, 3, 7, Method::Cholesky).unwrap().write_csv(&mut b).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a.clone()).unwrap();
    assert!(text.starts_with("path_id,t,value\n"));
    assert!(!text.contains('\r'));
    let (grid, paths) = read_paths_csv(a.as_slice()).unwrap();
    assert_eq!(grid, ens.grid());
    assert_eq!(&paths, ens.paths());

    let mut meta = Vec::new();
    ens.write_metadata(&mut meta).unwrap();
    let meta = String::from_utf8(meta).unwrap();
    for line in ["process=bgm", "seed=7", "method=cholesky", "grid=0:1:0.2", "n_paths=3"] {
        assert!(meta.lines().any(|l| l == line), "missing {line} in\n{meta}");
    }
}

#[test]
fn methods_agree_in_distribution() {
    let s = spec("stable:alpha=0.5", "derivative");
    let n = 20_000;
    let chol = simulate(&s, 4, 0.5, n, 1, Method::Cholesky).unwrap();
    let circ = simulate(&s, 4, 0.5, n, 2, Method::CirculantEmbedding).unwrap();
    assert_eq!(circ.method_used(), Method::CirculantEmbedding);
    for (i, j) in [(1, 1), (2, 4), (4, 4)] {
        let want = covariance_time(&s, 0.5 * i as f64, 0.5 * j as f64).unwrap();
        for ens in [&chol, &circ] {
            let z = (empirical_cov(ens, i, j).unwrap() - want) / empirical_cov_se(ens, i, j).unwrap();
            assert!(z.abs() < 4.0, "{} ({i},{j}): z = {z}", ens.method());
        }
    }
}

#[test]
fn monte_carlo_design_tracks_analytic_covariance() {
    let s = spec("stable:alpha=0.5", "derivative");
    let times = [0.5, 1.0, 1.5, 2.0];
    let design = WienerDesign::new(&s, &times).unwrap();
    let implied = design.implied_covariance();
    let table = CovarianceTable::time_domain(&s, &times).unwrap();
    let err = (&implied - &table.values).abs().max();
    assert!(err < 1e-3, "max deviation {err}");

    let mc = simulate(&s, 4, 0.5, 20_000, 3, Method::MonteCarloMvN).unwrap();
    assert_eq!(mc.method_used(), Method::MonteCarloMvN);
    let z = (empirical_cov(&mc, 4, 4).unwrap() - table.values[(3, 3)]) / empirical_cov_se(&mc, 4, 4).unwrap();
    assert!(z.abs() < 4.0, "z = {z}");
}

#[test]
fn rejects_degenerate_requests() {
    let s = spec("exponential", "derivative");
    assert!(simulate(&s, 0, 0.1, 10, 0, Method::Cholesky).is_err());
    assert!(simulate(&s, 10, 0.0, 10, 0, Method::Cholesky).is_err());
    assert!(simulate(&s, 10, 0.1, 0, 0, Method::Cholesky).is_err());
    assert!("qr".parse::<Method>().is_err());
    assert_eq!("mc".parse::<Method>().unwrap(), Method::MonteCarloMvN);
}

#[test]
fn ou_paths_have_the_right_mean() {
    let s = spec("exponential", "derivative");
    let ou = OuSpec::new(s.clone(), 0.5, 1.0, 2.0).unwrap();
    let driver = simulate(&s, 16, 0.125, 20_000, 5, Method::Cholesky).unwrap();
    let paths = ou_simulate(&ou, &driver).unwrap();
    assert!(paths.ou_params().is_some());
    assert!(ou_simulate(&ou, &paths).is_err());
    for k in [4, 16] {
        let col = paths.paths().column(k);
        let m = col.sum() / col.len() as f64;
        let want = ou_mean(&ou, paths.grid()[k]).unwrap();
        assert!((m - want).abs() < 0.03, "t = {}: {m} vs {want}", paths.grid()[k]);
    }
    let wrong = OuSpec::new(spec("gamma", "derivative"), 0.5, 1.0, 0.0).unwrap();
    assert!(ou_simulate(&wrong, &driver).is_err());
}
