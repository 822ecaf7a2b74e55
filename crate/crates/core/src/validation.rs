//! Cross-checks between independently computed quantities: Sonine
//! residuals, integration by parts, time-domain against spectral
//! covariance, the sign of the increment correlations, and simulated
//! against analytic covariance.

use std::fmt;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::analysis::rho_n;
use crate::catalog::{BernsteinFamily, Flavor, Kernel};
use crate::covariance::CovarianceTable;
use crate::error::{Error, Result};
use crate::kernels::{ibp_residual, ProcessSpec, TestFunction};

/// Times at which Sonine residuals are checked.
pub const SONINE_TIMES: [f64; 3] = [0.1, 1.0, 10.0];
/// Times for the integration-by-parts grid.
pub const IBP_TIMES: [f64; 3] = [0.5, 1.0, 2.0];
pub const IBP_TOLERANCE: f64 = 1e-5;
/// Grid for route agreement.
pub const ROUTE_GRID: [f64; 5] = [0.5, 1.0, 1.5, 2.0, 3.0];
pub const ROUTE_TOLERANCE: f64 = 1e-3;
/// Lags covered by the sign check.
pub const SIGN_LAGS: usize = 100;

/// Gaussian test functions for the integration-by-parts grid.
pub fn ibp_test_functions() -> [TestFunction; 3] {
    [TestFunction::gaussian(0.0, 1.0), TestFunction::gaussian(2.0, 1.0), TestFunction::gaussian(0.5, 0.5)]
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub subject: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn below(name: impl Into<String>, subject: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            subject: subject.into(),
            value,
            threshold,
            passed: value <= threshold,
            detail: String::new(),
        }
    }

    fn failed(name: impl Into<String>, subject: impl Into<String>, threshold: f64, err: &Error) -> Self {
        Self {
            name: name.into(),
            subject: subject.into(),
            value: f64::NAN,
            threshold,
            passed: false,
            detail: err.to_string(),
        }
    }

    fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {} [{}] value={:.3e} threshold={:.1e}", self.name, self.subject, self.value, self.threshold)?;
        if !self.detail.is_empty() {
            write!(f, " ({})", self.detail)?;
        }
        Ok(())
    }
}

/// Residual budget for `int_0^t nu kappa = 1`: looser where one of the
/// kernels comes from an expensive special-function evaluation.
pub fn sonine_threshold(family: &BernsteinFamily) -> f64 {
    match family {
        BernsteinFamily::MittagLeffler { .. } | BernsteinFamily::Gamma => 1e-5,
        _ => 1e-6,
    }
}

/// Sonine residuals at [`SONINE_TIMES`]; empty when the family lacks one of
/// the two kernels.
pub fn sonine_checks(family: &BernsteinFamily) -> Vec<Check> {
    if !(family.has(Kernel::Nu) && family.has(Kernel::Kappa)) {
        return Vec::new();
    }
    let thr = sonine_threshold(family);
    SONINE_TIMES
        .par_iter()
        .map(|&t| {
            let subject = format!("{family} t={t}");
            match family.sonine_residual(t) {
                Ok(r) => Check::below("sonine", subject, (r - 1.0).abs(), thr),
                Err(e) => Check::failed("sonine", subject, thr, &e.into()),
            }
        })
        .collect()
}

/// Integration-by-parts residuals over the test functions and [`IBP_TIMES`].
pub fn ibp_checks(spec: &ProcessSpec) -> Vec<Check> {
    let cases: Vec<(TestFunction, f64)> =
        ibp_test_functions().into_iter().flat_map(|f| IBP_TIMES.into_iter().map(move |t| (f, t))).collect();
    cases
        .par_iter()
        .map(|(f, t)| {
            let subject = match f {
                TestFunction::Gaussian { center, width, .. } => format!("{spec} gaussian({center},{width}) t={t}"),
                _ => format!("{spec} t={t}"),
            };
            match ibp_residual(spec, f, *t) {
                Ok(r) => Check::below("ibp", subject, r, IBP_TOLERANCE),
                Err(e) => Check::failed("ibp", subject, IBP_TOLERANCE, &e),
            }
        })
        .collect()
}

/// Largest entrywise difference between the time-domain and the calibrated
/// spectral covariance on `grid`.
pub fn route_check(spec: &ProcessSpec, grid: &[f64]) -> Check {
    let subject = format!("{spec}");
    let diff = CovarianceTable::time_domain(spec, grid)
        .and_then(|a| CovarianceTable::fourier(spec, grid).map(|b| (&a.values - &b.values).abs().max()));
    match diff {
        Ok(d) => Check::below("route", subject, d, ROUTE_TOLERANCE),
        Err(e) => Check::failed("route", subject, ROUTE_TOLERANCE, &e),
    }
}

/// Increment correlations negative (derivative flavor) or positive
/// (integral flavor) for every lag up to `n_max`. The value is the number of
/// lags with the wrong sign.
pub fn sign_check(spec: &ProcessSpec, n_max: usize) -> Check {
    let subject = format!("{spec}");
    let rho: Result<Vec<f64>> = (1..=n_max).into_par_iter().map(|n| rho_n(spec, n)).collect();
    match rho {
        Ok(r) => {
            let wrong: Vec<usize> = r
                .iter()
                .enumerate()
                .filter(|(_, v)| match spec.flavor() {
                    Flavor::Derivative => !(**v < 0.0),
                    Flavor::Integral => !(**v > 0.0),
                })
                .map(|(i, _)| i + 1)
                .collect();
            let want = match spec.flavor() {
                Flavor::Derivative => "negative",
                Flavor::Integral => "positive",
            };
            let mut c = Check::below("sign", subject, wrong.len() as f64, 0.0)
                .with_detail(format!("rho_n {want} for n = 1..{n_max}"));
            if let Some(n) = wrong.first() {
                c.detail = format!("rho_{n} = {:.3e} is not {want}", r[n - 1]);
            }
            c
        }
        Err(e) => Check::failed("sign", subject, 0.0, &e),
    }
}

/// Every cross-check for one spec.
pub fn cross_check_suite(spec: &ProcessSpec) -> Vec<Check> {
    let mut out = sonine_checks(spec.family());
    out.extend(ibp_checks(spec));
    out.push(route_check(spec, &ROUTE_GRID));
    out.push(sign_check(spec, SIGN_LAGS));
    out
}

/// Empirical against analytic covariance at one pair of times.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CovDeviation {
    pub t: f64,
    pub s: f64,
    pub empirical: f64,
    pub analytic: f64,
    pub std_error: f64,
}

impl CovDeviation {
    /// Deviation in standard errors.
    pub fn z(&self) -> f64 {
        if self.std_error > 0.0 {
            (self.empirical - self.analytic) / self.std_error
        } else if self.empirical == self.analytic {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Compares sample covariances of `paths` (rows are paths, columns follow
/// `path_grid`) with `analytic` on `cov_grid`. Every time of `cov_grid` must
/// appear in `path_grid`.
pub fn covariance_deviations(
    path_grid: &[f64],
    paths: &DMatrix<f64>,
    cov_grid: &[f64],
    analytic: &DMatrix<f64>,
) -> Result<Vec<CovDeviation>> {
    let n = paths.nrows();
    if n < 2 {
        return Err(Error::InvalidArgument("need at least 2 paths".into()));
    }
    let locate = |t: f64| {
        path_grid
            .iter()
            .position(|g| (g - t).abs() <= 1e-9 * t.abs().max(1.0))
            .ok_or_else(|| Error::InvalidArgument(format!("time {t} of the covariance grid is not on the path grid")))
    };
    let idx: Vec<usize> = cov_grid.iter().map(|&t| locate(t)).collect::<Result<_>>()?;
    let nf = n as f64;
    let means: Vec<f64> = idx.iter().map(|&k| paths.column(k).sum() / nf).collect();
    let mut out = Vec::new();
    for a in 0..idx.len() {
        for b in a..idx.len() {
            let (ka, kb) = (idx[a], idx[b]);
            let prods: Vec<f64> =
                (0..n).map(|p| (paths[(p, ka)] - means[a]) * (paths[(p, kb)] - means[b])).collect();
            let empirical = prods.iter().sum::<f64>() / (nf - 1.0);
            let mp = prods.iter().sum::<f64>() / nf;
            let var = prods.iter().map(|x| (x - mp).powi(2)).sum::<f64>() / (nf - 1.0);
            out.push(CovDeviation {
                t: cov_grid[a],
                s: cov_grid[b],
                empirical,
                analytic: analytic[(a, b)],
                std_error: (var / nf).sqrt(),
            });
        }
    }
    Ok(out)
}
