//! Memory and regularity diagnostics: increment correlations `rho_n`,
//! short- and long-range classification, long-time variance behavior and
//! the scaling exponent of the spectral increment integral.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use crate::catalog::{integrable_at_infinity, CheckStatus, Flavor};
use crate::covariance::{spectral_integral, spectral_weight, variance, variance_time};
use crate::error::{Error, Result};
use crate::kernels::{cut_points, ProcessSpec};
use crate::numerics::{integrate_from, Trap};
use crate::quad::{tanh_sinh, Tolerance};

/// Threshold on `|rho_n|` below which the partial sums of `|rho_n|` are
/// treated as settled.
pub const CAUCHY_THRESHOLD: f64 = 1e-6;

/// Largest lag scanned for the Cauchy cutoff.
pub const CAUCHY_SCAN_MAX: usize = 10_000;

/// Decay exponent separating short from long memory.
pub const DECAY_SPLIT: f64 = -1.0;

fn rho_tol() -> Tolerance<f64> {
    Tolerance::new(0.0, 1e-10)
}

/// Correlation of the unit increments `B_{n+1} - B_n` and `B_1 - B_0`.
///
/// Evaluated as a single integral of kernel products instead of the second
/// difference of `V`, which would lose most digits for large `n`. With `g`
/// the flavor's tail kernel (`nu` or `chi`) and `D(y) = g(y + 1) - g(y)`:
/// `rho_n = C [int_0^inf D(x) D(n + x) dx + int_0^1 g(x) D(n - 1 + x) dx]`.
pub fn rho_n(spec: &ProcessSpec, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("rho_n needs n >= 1".into()));
    }
    let c = spec.normalization()?;
    let nf = n as f64;
    let tol = rho_tol();
    let trap = Trap::default();
    let cuts = cut_points(spec.family(), &[1.0, nf, nf + 1.0]);
    let past = integrate_from(
        |x| trap.get(spec.tail_increment(x, 1.0)) * trap.get(spec.tail_increment(nf + x, 1.0)),
        0.0,
        &cuts,
        true,
        0.0,
        tol,
    );
    let past = trap.finish(past)?.value;
    let mut near = Vec::from([0.0]);
    near.extend(cut_points(spec.family(), &[1.0]).into_iter().filter(|&p| p > 0.0 && p < 1.0));
    near.push(1.0);
    near.sort_by(|a, b| a.partial_cmp(b).unwrap());
    near.dedup();
    let mut recent = 0.0;
    for w in near.windows(2) {
        let r = tanh_sinh(
            |x, _, _| trap.get(spec.tail(x)) * trap.get(spec.tail_increment(nf - 1.0 + x, 1.0)),
            w[0],
            w[1],
            tol,
        );
        recent += match r {
            Err(crate::quad::QuadError::NotConverged { value, abs_error }) if abs_error <= 1e-9 * value.abs().max(1e-300) => {
                Ok(crate::quad::Estimate { value, abs_error, evaluations: 0 })
            }
            other => other,
        }
        .map_err(Error::from)
        .and_then(|e| trap.finish(Ok(e)))?
        .value;
    }
    Ok(c * (past + recent))
}

/// `rho_n` as the second difference `(V(n+1) + V(n-1) - 2V(n)) / 2`.
pub fn rho_n_from_variance(spec: &ProcessSpec, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("rho_n needs n >= 1".into()));
    }
    let nf = n as f64;
    Ok(0.5 * (variance(spec, nf + 1.0)? + variance(spec, nf - 1.0)? - 2.0 * variance(spec, nf)?))
}

/// `sum_{n=1}^{N} rho_n = (V(N+1) - V(N) - V(1)) / 2`, from the telescoping
/// of the second differences.
pub fn rho_partial_sum(spec: &ProcessSpec, big_n: usize) -> Result<f64> {
    let nf = big_n as f64;
    Ok(0.5 * (variance(spec, nf + 1.0)? - variance(spec, nf)? - variance(spec, 1.0)?))
}

/// First lag `n <= n_max` with `|rho_n| < threshold`, assuming `|rho_n|` is
/// eventually decreasing. Lags are scanned on a geometric grid and the
/// crossing is then located by bisection.
pub fn cauchy_cutoff(spec: &ProcessSpec, threshold: f64, n_max: usize) -> Result<Option<usize>> {
    let mut prev = 0usize;
    let mut n = 1usize;
    loop {
        if rho_n(spec, n)?.abs() < threshold {
            let (mut lo, mut hi) = (prev, n);
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                if rho_n(spec, mid)?.abs() < threshold {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(Some(hi));
        }
        if n >= n_max {
            return Ok(None);
        }
        prev = n;
        n = ((n as f64 * 1.5).ceil() as usize).max(n + 1).min(n_max);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MemoryClass {
    ShortRange,
    LongRange,
    Indeterminate,
}

impl fmt::Display for MemoryClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MemoryClass::ShortRange => "short-range",
            MemoryClass::LongRange => "long-range",
            MemoryClass::Indeterminate => "indeterminate",
        })
    }
}

/// Log-log least squares slope and `r^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogFit {
    pub exponent: f64,
    pub r2: f64,
}

/// Fits `ln y = e ln x + c` over the points with positive finite `y`.
pub fn log_log_fit(points: &[(f64, f64)]) -> Option<LogFit> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LogFit { exponent: sxy / sxx, r2 })
}

/// Increment correlations up to lag `N` and the memory classification.
///
/// Short range: fitted decay exponent of `|rho_n|` on the upper half below
/// -1 and a Cauchy cutoff found before lag 10^4. Long range: exponent at or
/// above -1. Anything else is indeterminate.
#[derive(Clone, Debug)]
pub struct MemoryReport {
    pub spec: ProcessSpec,
    /// `(n, rho_n)` for `n = 1..=N`.
    pub rho: Vec<(usize, f64)>,
    pub all_negative: bool,
    pub all_positive: bool,
    /// `sum_{n <= m} |rho_n|` for `m = 1..=N`.
    pub partial_abs_sums: Vec<f64>,
    pub decay_exponent_fit: Option<LogFit>,
    /// First lag with `|rho_n| < CAUCHY_THRESHOLD`, if any up to `CAUCHY_SCAN_MAX`.
    pub cauchy_cutoff: Option<usize>,
    pub classification: MemoryClass,
}

impl MemoryReport {
    /// CSV `n,rho,partial_abs_sum`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "rho", "partial_abs_sum"])?;
        for ((n, r), s) in self.rho.iter().zip(&self.partial_abs_sums) {
            w.write_record([n.to_string(), format!("{r:.16e}"), format!("{s:.16e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Computes `rho_1..rho_N` (in parallel), their signs and partial sums, and
/// classifies the memory.
pub fn memory_report(spec: &ProcessSpec, big_n: usize) -> Result<MemoryReport> {
    if big_n < 10 {
        return Err(Error::InvalidArgument(format!("memory report needs N >= 10, got {big_n}")));
    }
    let rho: Vec<(usize, f64)> =
        (1..=big_n).into_par_iter().map(|n| rho_n(spec, n).map(|r| (n, r))).collect::<Result<_>>()?;
    let all_negative = rho.iter().all(|(_, r)| *r < 0.0);
    let all_positive = rho.iter().all(|(_, r)| *r > 0.0);
    let partial_abs_sums = rho
        .iter()
        .scan(0.0, |acc, (_, r)| {
            *acc += r.abs();
            Some(*acc)
        })
        .collect();
    let upper: Vec<(f64, f64)> = rho.iter().filter(|(n, _)| 2 * n >= big_n).map(|(n, r)| (*n as f64, r.abs())).collect();
    let fit = log_log_fit(&upper);
    let cutoff = cauchy_cutoff(spec, CAUCHY_THRESHOLD, CAUCHY_SCAN_MAX)?;
    let classification = match fit {
        Some(f) if f.exponent >= DECAY_SPLIT => MemoryClass::LongRange,
        // every sample underflowed: faster than any power
        None if cutoff.is_some() && upper.iter().all(|(_, r)| *r == 0.0) => MemoryClass::ShortRange,
        Some(_) if cutoff.is_some() => MemoryClass::ShortRange,
        _ => MemoryClass::Indeterminate,
    };
    Ok(MemoryReport {
        spec: spec.clone(),
        rho,
        all_negative,
        all_positive,
        partial_abs_sums,
        decay_exponent_fit: fit,
        cauchy_cutoff: cutoff,
        classification,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarianceClass {
    FiniteLimit,
    DivergesSublinearly,
}

impl fmt::Display for VarianceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VarianceClass::FiniteLimit => "finite-limit",
            VarianceClass::DivergesSublinearly => "diverges-sublinearly",
        })
    }
}

/// Long-time variance classification with the evidence behind it.
#[derive(Clone, Debug, PartialEq)]
pub struct VarianceClassReport {
    pub class: VarianceClass,
    /// Fitted power of `nu` on `[1e4, 1e7]` (`-inf` for faster than any power).
    pub tail_exponent: f64,
    /// `(t, V(t))` at `t = 1e2, 1e3, 1e4`.
    pub samples: Vec<(f64, f64)>,
    /// Whether the samples agree with the class: shrinking increments for a
    /// finite limit, growing increments with decreasing `V(t)/t` otherwise.
    pub consistent: bool,
}

/// Whether `V(t)` has a finite limit, decided by `nu` in `L^2(0, inf)`;
/// derivative flavor only.
pub fn variance_class_report(spec: &ProcessSpec) -> Result<VarianceClassReport> {
    if spec.flavor() != Flavor::Derivative {
        return Err(Error::InvalidArgument("variance classification applies to the derivative flavor".into()));
    }
    let family = spec.family();
    let probe = integrable_at_infinity(|s| family.nu(s), 2.0);
    let tail_exponent = probe.exponents.first().copied().unwrap_or(f64::NAN);
    let class = match probe.status {
        CheckStatus::Pass => VarianceClass::FiniteLimit,
        CheckStatus::Fail => VarianceClass::DivergesSublinearly,
        CheckStatus::Indeterminate => {
            return Err(Error::Divergent(format!(
                "square integrability of nu at infinity is indeterminate (fitted exponents {:?})",
                probe.exponents
            )))
        }
    };
    let samples: Vec<(f64, f64)> =
        [1e2, 1e3, 1e4].into_par_iter().map(|t| variance(spec, t).map(|v| (t, v))).collect::<Result<_>>()?;
    let (v2, v3, v4) = (samples[0].1, samples[1].1, samples[2].1);
    // on a decade grid a power law has growing increments, while an
    // approach to a limit (however slow) has shrinking ones
    let (d1, d2) = (v3 - v2, v4 - v3);
    let consistent = match class {
        VarianceClass::FiniteLimit => d2 <= d1 + 1e-12 * v4,
        VarianceClass::DivergesSublinearly => d2 > d1 && d1 > 0.0 && v4 / 1e4 < v2 / 1e2,
    };
    Ok(VarianceClassReport { class, tail_exponent, samples, consistent })
}

pub fn variance_class(spec: &ProcessSpec) -> Result<VarianceClass> {
    Ok(variance_class_report(spec)?.class)
}

/// Scaling of `g(a) = int_R A(a x) (1 - cos x) / x^2 dx` with the spectral
/// weight `A`, and the exponents it implies.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingReport {
    pub a_grid: Vec<f64>,
    pub g_values: Vec<f64>,
    pub fitted_exponent: f64,
    pub fit_r2: f64,
    /// Paths are `gamma`-Hölder for every `gamma` below this bound,
    /// `(1 - e) / 2` for fitted exponent `e`.
    pub holder_gamma_bound: f64,
    /// The fitted exponent when it lies in `(0, 1)`, where the lower bound
    /// `g(a) >= c a^beta` gives square integrable local times.
    pub local_time_beta: Option<f64>,
}

impl ScalingReport {
    /// CSV `a,g,fit_exponent`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["a", "g", "fit_exponent"])?;
        for (a, g) in self.a_grid.iter().zip(&self.g_values) {
            w.write_record([format!("{a:.16e}"), format!("{g:.16e}"), format!("{:.16e}", self.fitted_exponent)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (l, h) = (lo.ln(), hi.ln());
    (0..n).map(|i| (l + (h - l) * i as f64 / (n - 1) as f64).exp()).collect()
}

fn check_scaling_grid(a_grid: &[f64]) -> Result<()> {
    if a_grid.len() < 8 {
        return Err(Error::InvalidArgument(format!("scaling grid needs >= 8 points, got {}", a_grid.len())));
    }
    let slack = 1e-9;
    if a_grid.iter().any(|&a| !(a >= 1e-2 * (1.0 - slack) && a <= 1e2 * (1.0 + slack))) {
        return Err(Error::InvalidArgument("scaling grid must lie in [1e-2, 1e2]".into()));
    }
    let steps: Vec<f64> = a_grid.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    let s0 = steps[0];
    if !(s0 > 0.0) || steps.iter().any(|s| (s - s0).abs() > 1e-6 * s0) {
        return Err(Error::InvalidArgument("scaling grid must be increasing and log-spaced".into()));
    }
    Ok(())
}

/// `g(a)` for one dilation.
pub fn scaling_integral(spec: &ProcessSpec, a: f64) -> Result<f64> {
    // int_0^inf A(ax) (2 - 2 cos x) / x^2 dx covers both half lines
    let g = spectral_integral(|x| spectral_weight(spec, a * x), 1.0, 1.0)?;
    if !(g.is_finite() && g > 0.0) {
        return Err(Error::Divergent(format!("g(a) at a = {a} evaluated to {g}")));
    }
    Ok(g)
}

pub fn regularity_scaling(spec: &ProcessSpec, a_grid: &[f64]) -> Result<ScalingReport> {
    check_scaling_grid(a_grid)?;
    let g_values: Vec<f64> = a_grid.par_iter().map(|&a| scaling_integral(spec, a)).collect::<Result<_>>()?;
    let pts: Vec<(f64, f64)> = a_grid.iter().copied().zip(g_values.iter().copied()).collect();
    let fit = log_log_fit(&pts).ok_or_else(|| Error::Divergent("scaling fit has too few usable points".into()))?;
    // a flat profile fits exponent 0 up to rounding
    let e = if fit.exponent.abs() < 1e-9 { 0.0 } else { fit.exponent };
    let local_time_beta = (e > 0.0 && e < 1.0).then_some(e);
    Ok(ScalingReport {
        a_grid: a_grid.to_vec(),
        g_values,
        fitted_exponent: e,
        fit_r2: fit.r2,
        holder_gamma_bound: ((1.0 - e) / 2.0).max(0.0),
        local_time_beta,
    })
}

/// `(t, part1 / part2)` over `t_grid`, from the variance decomposition.
pub fn variance_ratio_curve(spec: &ProcessSpec, t_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    if t_grid.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::InvalidArgument("ratio grid needs finite t > 0".into()));
    }
    t_grid.par_iter().map(|&t| variance_time(spec, t).map(|d| (t, d.ratio()))).collect()
}

/// `int_0^inf ln(1 + v)^2 / v^2 dv`, which equals `pi^2 / 3`.
pub fn log1p_square_integral() -> Result<f64> {
    let tol = Tolerance::new(0.0, 1e-13);
    let r = integrate_from(
        |v| {
            let l = v.ln_1p();
            (l / v).powi(2)
        },
        0.0,
        &[1.0, 10.0, 100.0],
        true,
        0.0,
        tol,
    );
    Ok(r?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::BernsteinFamily;

    fn stable(alpha: f64, flavor: Flavor) -> ProcessSpec {
        ProcessSpec::new(BernsteinFamily::stable(alpha).unwrap(), flavor).unwrap()
    }

    #[test]
    fn rho_one_matches_fbm() {
        let d = stable(0.5, Flavor::Derivative);
        assert!((rho_n(&d, 1).unwrap() - (2f64.sqrt() - 2.0) / 2.0).abs() < 1e-9);
        let i = stable(1.5, Flavor::Integral);
        assert!((rho_n(&i, 1).unwrap() - (2f64.sqrt() - 1.0)).abs() < 1e-9);
    }

    #[test]
    fn log_integral() {
        let v = log1p_square_integral().unwrap();
        assert!((v - std::f64::consts::PI.powi(2) / 3.0).abs() < 1e-10, "{v}");
    }

    #[test]
    fn grid_validation() {
        let spec = stable(0.5, Flavor::Derivative);
        assert!(regularity_scaling(&spec, &log_grid(1e-2, 1e2, 5)).is_err());
        assert!(regularity_scaling(&spec, &[0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0]).is_err());
    }
}
