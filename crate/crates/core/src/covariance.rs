//! Variance and covariance of the process, in the time domain and through
//! the spectral density `|phi(ix)|^{+-2}`.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::catalog::Flavor;
use crate::error::{Error, Result};
use crate::kernels::ProcessSpec;
use crate::numerics::{decades, integrate_from, Trap};
use crate::quad::{exp_sinh, oscillatory_tail, QuadError, Tolerance, Trig};

/// `V(t) = C (part1 + part2)`, where part1 collects `u < 0` and part2
/// `0 < u < t` in `int k_raw(t, u)^2 du`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VarianceDecomposition {
    pub t: f64,
    pub total: f64,
    pub part1: f64,
    pub part2: f64,
}

impl VarianceDecomposition {
    /// `part1 / part2`, infinite when part2 vanishes.
    pub fn ratio(&self) -> f64 {
        if self.part2 == 0.0 {
            f64::INFINITY
        } else {
            self.part1 / self.part2
        }
    }
}

/// Time-domain variance of `B_t`.
pub fn variance_time(spec: &ProcessSpec, t: f64) -> Result<VarianceDecomposition> {
    let (part1, part2) = spec.raw_parts(t)?;
    let c = spec.normalization()?;
    Ok(VarianceDecomposition { t, total: c * (part1 + part2), part1, part2 })
}

/// `V(t)` alone.
pub fn variance(spec: &ProcessSpec, t: f64) -> Result<f64> {
    Ok(variance_time(spec, t)?.total)
}

/// `Cov(B_t, B_s) = (V(t) + V(s) - V(|t - s|)) / 2`.
pub fn covariance_time(spec: &ProcessSpec, t: f64, s: f64) -> Result<f64> {
    if !(t >= 0.0 && s >= 0.0) {
        return Err(Error::InvalidArgument(format!("covariance needs t, s >= 0, got {t}, {s}")));
    }
    let (a, b) = if t <= s { (t, s) } else { (s, t) };
    if a == 0.0 {
        return Ok(0.0);
    }
    if a == b {
        return variance(spec, a);
    }
    Ok(0.5 * (variance(spec, a)? + variance(spec, b)? - variance(spec, b - a)?))
}

/// Spectral weight `|phi(ix)|^2` (derivative flavor) or `|phi(ix)|^{-2}`
/// (integral flavor).
pub fn spectral_weight(spec: &ProcessSpec, x: f64) -> Result<f64> {
    let m2 = spec.family().phi_mod2(x)?;
    Ok(match spec.flavor() {
        Flavor::Derivative => m2,
        Flavor::Integral => 1.0 / m2,
    })
}

fn spectral_tol() -> Tolerance<f64> {
    // covariances are O(1); a kinked kernel leaves a slowly decaying ripple
    // in the spectral weight that a purely relative target cannot resolve
    Tolerance::new(1e-12, 1e-10)
}

/// `int_0^inf A(x) [1 - cos tx - cos sx + cos (t-s)x] / x^2 dx`.
///
/// The bracket is evaluated as `4 sin(tx/2) sin(sx/2) cos((t-s)x/2)` on
/// `[0, X]`; beyond `X` each cosine is integrated separately against the
/// envelope `A(x)/x^2` with zero-to-zero panels.
pub fn spectral_integral<A: Fn(f64) -> Result<f64>>(a_fn: A, t: f64, s: f64) -> Result<f64> {
    if t == 0.0 || s == 0.0 {
        return Ok(0.0);
    }
    let tol = spectral_tol();
    let top = t.max(s);
    let x_split = (20.0 * std::f64::consts::PI / top).max(20.0);
    let trap = Trap::default();
    let mut cuts = decades(1e-3, x_split);
    let step = std::f64::consts::PI / top;
    let mut k = 1.0;
    while k * step < x_split {
        cuts.push(k * step);
        k += 1.0;
    }
    // bracket / x^2, arranged so tiny x cannot underflow
    let bracket = |x: f64| 4.0 * ((0.5 * t * x).sin() / x) * ((0.5 * s * x).sin() / x) * (0.5 * (t - s) * x).cos();
    let head = integrate_from(
        |x| {
            if x == 0.0 {
                return 0.0;
            }
            trap.get(a_fn(x)) * bracket(x)
        },
        0.0,
        &cuts,
        false,
        x_split,
        tol,
    );
    let head = trap.finish(head)?.value;

    // tail: collect (coefficient, frequency) terms, merging zero frequencies
    let d = (t - s).abs();
    let mut constant = 1.0;
    let mut waves: Vec<(f64, f64)> = vec![(-1.0, t), (-1.0, s)];
    if d == 0.0 {
        constant += 1.0;
    } else {
        waves.push((1.0, d));
    }
    let envelope = |x: f64| trap.get(a_fn(x)) / (x * x);
    let flat = exp_sinh(|x, _| envelope(x), x_split, x_split, tol);
    let mut tail = constant * trap.finish(flat)?.value;
    for (coef, omega) in waves {
        let r = oscillatory_tail(envelope, omega, Trig::Cos, x_split, tol);
        let r = match r {
            Err(QuadError::NotConverged { value, abs_error }) if abs_error <= 1e-8 * (1.0 + value.abs()) => {
                Ok(crate::quad::Estimate { value, abs_error, evaluations: 0 })
            }
            other => other,
        };
        tail += coef * trap.finish(r)?.value;
    }
    Ok(head + tail)
}

/// Spectral constant `N` with `covariance_fourier(1, 1) = 1`.
fn fourier_scale(spec: &ProcessSpec) -> Result<f64> {
    spec.fourier_scale_cell()
        .get_or_init(|| {
            let raw = spectral_integral(|x| spectral_weight(spec, x), 1.0, 1.0)?;
            if !(raw > 0.0 && raw.is_finite()) {
                return Err(Error::Divergent(format!("spectral calibration integral = {raw}")));
            }
            Ok(1.0 / raw)
        })
        .clone()
}

/// Covariance by the spectral route, calibrated so that `Var(B_1) = 1`.
pub fn covariance_fourier(spec: &ProcessSpec, t: f64, s: f64) -> Result<f64> {
    if !(t >= 0.0 && s >= 0.0) {
        return Err(Error::InvalidArgument(format!("covariance needs t, s >= 0, got {t}, {s}")));
    }
    if t == 0.0 || s == 0.0 {
        return Ok(0.0);
    }
    let n = fourier_scale(spec)?;
    Ok(n * spectral_integral(|x| spectral_weight(spec, x), t, s)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    TimeDomain,
    Fourier,
}

impl Route {
    pub fn as_str(&self) -> &'static str {
        match self {
            Route::TimeDomain => "time",
            Route::Fourier => "fourier",
        }
    }
}

/// Covariance matrix on a time grid.
#[derive(Clone, Debug)]
pub struct CovarianceTable {
    pub grid: Vec<f64>,
    pub values: DMatrix<f64>,
    pub route: Route,
    pub spec: ProcessSpec,
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty time grid".into()));
    }
    if grid.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(Error::InvalidArgument("grid times must be finite and >= 0".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("grid must be strictly increasing".into()));
    }
    Ok(())
}

impl CovarianceTable {
    /// Time-domain table; each distinct `V` is computed once.
    pub fn time_domain(spec: &ProcessSpec, grid: &[f64]) -> Result<Self> {
        check_grid(grid)?;
        let mut lags: Vec<f64> = grid.to_vec();
        for (i, a) in grid.iter().enumerate() {
            for b in &grid[i + 1..] {
                lags.push(b - a);
            }
        }
        lags.par_iter().map(|&t| variance(spec, t).map(|_| ())).collect::<Result<Vec<()>>>()?;
        let n = grid.len();
        let mut values = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let c = covariance_time(spec, grid[i], grid[j])?;
                values[(i, j)] = c;
                values[(j, i)] = c;
            }
        }
        Ok(Self { grid: grid.to_vec(), values, route: Route::TimeDomain, spec: spec.clone() })
    }

    /// Spectral-route table.
    pub fn fourier(spec: &ProcessSpec, grid: &[f64]) -> Result<Self> {
        check_grid(grid)?;
        fourier_scale(spec)?;
        let n = grid.len();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
        let vals = pairs
            .par_iter()
            .map(|&(i, j)| covariance_fourier(spec, grid[i], grid[j]))
            .collect::<Result<Vec<f64>>>()?;
        let mut values = DMatrix::zeros(n, n);
        for (&(i, j), v) in pairs.iter().zip(vals) {
            values[(i, j)] = v;
            values[(j, i)] = v;
        }
        Ok(Self { grid: grid.to_vec(), values, route: Route::Fourier, spec: spec.clone() })
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.values)
    }

    /// CSV with header `t,s,cov,route`, one row per ordered pair.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["t", "s", "cov", "route"])?;
        for (i, t) in self.grid.iter().enumerate() {
            for (j, s) in self.grid.iter().enumerate() {
                w.write_record([
                    format!("{t}"),
                    format!("{s}"),
                    format!("{:.16e}", self.values[(i, j)]),
                    self.route.as_str().to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.clone().symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Reads a covariance CSV (`t,s,cov[,route]`) into its grid and matrix.
pub fn read_covariance_csv<R: Read>(input: R) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let field = |k: usize| -> Result<f64> {
            rec.get(k)
                .ok_or_else(|| Error::InvalidArgument(format!("covariance CSV row has fewer than {} fields", k + 1)))?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::InvalidArgument(format!("covariance CSV: {e}")))
        };
        rows.push((field(0)?, field(1)?, field(2)?));
    }
    let mut grid: Vec<f64> = rows.iter().map(|r| r.0).collect();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    let index = |t: f64| grid.iter().position(|g| *g == t);
    let n = grid.len();
    let mut m = DMatrix::from_element(n, n, f64::NAN);
    for (t, s, c) in rows {
        match (index(t), index(s)) {
            (Some(i), Some(j)) => m[(i, j)] = c,
            _ => return Err(Error::InvalidArgument(format!("covariance CSV: time {s} is not on the grid"))),
        }
    }
    if m.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument("covariance CSV does not cover every pair of grid times".into()));
    }
    Ok((grid, m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponential_closed_forms() {
        let s = ProcessSpec::parse("exponential", "derivative").unwrap();
        let c = s.normalization().unwrap();
        for t in [0.5, 2.0, 5.0] {
            assert_relative_eq!(variance(&s, t).unwrap(), c * (1.0 - (-t).exp()), max_relative = 1e-9);
        }
        let want = 0.5 * (1.0 + (-1.0f64).exp());
        assert_relative_eq!(covariance_time(&s, 1.0, 2.0).unwrap(), want, max_relative = 1e-9);
    }

    #[test]
    fn stable_fbm_covariance_both_routes() {
        let s = ProcessSpec::parse("stable:alpha=0.5", "derivative").unwrap();
        let want = 0.5 * 2f64.sqrt();
        assert_relative_eq!(covariance_time(&s, 2.0, 1.0).unwrap(), want, max_relative = 1e-8);
        assert!((covariance_fourier(&s, 2.0, 1.0).unwrap() - want).abs() < 1e-6);
        assert_relative_eq!(covariance_fourier(&s, 1.0, 1.0).unwrap(), 1.0, max_relative = 1e-12);
        assert_eq!(covariance_fourier(&s, 3.0, 0.0).unwrap(), 0.0);
    }
}
