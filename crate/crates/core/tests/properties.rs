use bgm_core::covariance::{min_eigenvalue, variance, CovarianceTable};
use bgm_core::kernels::ProcessSpec;
use bgm_core::simulate::NormalStream;
use proptest::prelude::*;

fn stable(alpha: f64) -> ProcessSpec {
    let flavor = if alpha <= 1.0 { "derivative" } else { "integral" };
    ProcessSpec::parse(&format!("stable:alpha={alpha}"), flavor).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn stable_covariance_is_fbm(alpha in 0.1f64..1.9, t in 0.05f64..20.0, s in 0.05f64..20.0) {
        prop_assume!((alpha - 1.0).abs() > 0.02);
        let spec = stable(alpha);
        let got = bgm_core::covariance::covariance_time(&spec, t, s).unwrap();
        let want = 0.5 * (t.powf(alpha) + s.powf(alpha) - (t - s).abs().powf(alpha));
        prop_assert!((got - want).abs() <= 1e-6 * want.abs().max(1.0), "{got} vs {want}");
    }

    #[test]
    fn covariance_tables_are_psd(start in 0.1f64..1.0, step in 0.05f64..1.0, n in 2usize..7) {
        let grid: Vec<f64> = (0..n).map(|k| start + k as f64 * step).collect();
        for (f, fl) in [("exponential", "derivative"), ("gamma", "derivative"), ("ml:alpha=0.2,beta=0.8", "integral")] {
            let spec = ProcessSpec::parse(f, fl).unwrap();
            let table = CovarianceTable::time_domain(&spec, &grid).unwrap();
            prop_assert!(table.values == table.values.transpose());
            let scale = table.values.diagonal().max();
            prop_assert!(min_eigenvalue(&table.values) >= -1e-10 * scale);
        }
    }

    #[test]
    fn variance_concavity_follows_flavor(t in 0.5f64..8.0, h in 0.05f64..0.5) {
        // second difference of V is twice the increment correlation
        for (f, fl, sign) in [("exponential", "derivative", -1.0), ("tempered2:alpha=0.4,lambda=1", "derivative", -1.0),
                              ("ml:alpha=0.2,beta=0.8", "integral", 1.0)] {
            let spec = ProcessSpec::parse(f, fl).unwrap();
            let d2 = variance(&spec, t + h).unwrap() - 2.0 * variance(&spec, t).unwrap() + variance(&spec, t - h).unwrap();
            prop_assert!(sign * d2 > 0.0, "{f}: second difference {d2} at t = {t}, h = {h}");
        }
    }

    #[test]
    fn variance_is_increasing(t in 0.01f64..50.0, dt in 0.01f64..5.0) {
        for (f, fl) in [("exponential", "derivative"), ("stable:alpha=0.5", "derivative"), ("ml:alpha=0.2,beta=0.8", "integral")] {
            let spec = ProcessSpec::parse(f, fl).unwrap();
            // the exponential variance saturates in double precision for large t
            prop_assert!(variance(&spec, t + dt).unwrap() >= variance(&spec, t).unwrap());
        }
    }

    #[test]
    fn normal_stream_is_deterministic(seed in any::<u64>(), stream in 0u64..1000) {
        let mut a = NormalStream::new(seed, stream);
        let mut b = NormalStream::new(seed, stream);
        for _ in 0..16 {
            let x = a.next();
            prop_assert!(x.is_finite());
            prop_assert_eq!(x.to_bits(), b.next().to_bits());
        }
    }
}
