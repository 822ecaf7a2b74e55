//! Sample paths on a uniform grid `t_k = k h`, `k = 0..=n`.
//!
//! Random numbers come from ChaCha8 seeded with `seed_from_u64(seed)`; path
//! `p` uses stream `p`, so an ensemble does not depend on how the paths are
//! scheduled across threads. Standard normals are produced by the inverse
//! normal CDF applied to `((bits >> 11) + 1/2) / 2^53`.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::covariance::{min_eigenvalue, variance};
use crate::error::{Error, Result};
use crate::kernels::ProcessSpec;
use crate::numerics::{integrate_from, Trap};
use crate::quad::{gk21, tanh_sinh, Tolerance};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Cholesky,
    CirculantEmbedding,
    MonteCarloMvN,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Cholesky => "cholesky",
            Method::CirculantEmbedding => "circulant",
            Method::MonteCarloMvN => "mc",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cholesky" => Ok(Method::Cholesky),
            "circulant" | "circulant-embedding" => Ok(Method::CirculantEmbedding),
            "mc" | "monte-carlo" | "montecarlo" => Ok(Method::MonteCarloMvN),
            other => Err(Error::InvalidArgument(format!("unknown method '{other}' (cholesky, circulant, mc)"))),
        }
    }
}

/// Per-path source of standard normals.
pub struct NormalStream {
    rng: ChaCha8Rng,
    normal: Normal,
}

impl NormalStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, normal: Normal::standard() }
    }

    pub fn next(&mut self) -> f64 {
        let u = ((self.rng.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64;
        self.normal.inverse_cdf(u)
    }

    pub fn fill(&mut self, out: &mut [f64]) {
        for x in out {
            *x = self.next();
        }
    }
}

/// Simulated paths, one row per path; column `k` is time `k h`.
#[derive(Clone, Debug)]
pub struct PathEnsemble {
    spec: ProcessSpec,
    grid: Vec<f64>,
    h: f64,
    paths: DMatrix<f64>,
    seed: u64,
    method: Method,
    method_used: Method,
    warnings: Vec<String>,
    ou: Option<OuParams>,
}

/// Parameters recorded on an ensemble produced by the OU transformation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OuParams {
    pub theta: f64,
    pub sigma: f64,
    pub u0: f64,
}

impl PathEnsemble {
    pub fn spec(&self) -> &ProcessSpec {
        &self.spec
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn paths(&self) -> &DMatrix<f64> {
        &self.paths
    }

    pub fn n_paths(&self) -> usize {
        self.paths.nrows()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Requested method.
    pub fn method(&self) -> Method {
        self.method
    }

    /// Method actually used (differs after a circulant fallback).
    pub fn method_used(&self) -> Method {
        self.method_used
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// OU parameters when the paths are OU paths rather than the driver.
    pub fn ou_params(&self) -> Option<OuParams> {
        self.ou
    }

    /// Same grid and provenance with new path values, tagged as OU paths.
    pub(crate) fn with_ou_paths(&self, paths: DMatrix<f64>, ou: OuParams) -> Self {
        Self { paths, ou: Some(ou), ..self.clone() }
    }

    /// CSV `path_id,t,value`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["path_id", "t", "value"])?;
        for p in 0..self.paths.nrows() {
            for (k, t) in self.grid.iter().enumerate() {
                w.write_record([p.to_string(), format!("{t}"), format!("{:.16e}", self.paths[(p, k)])])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Sidecar metadata, one `key=value` per line.
    pub fn write_metadata<W: Write>(&self, mut out: W) -> Result<()> {
        let n = self.grid.len() - 1;
        match self.ou {
            None => writeln!(out, "process=bgm")?,
            Some(p) => {
                writeln!(out, "process=ou")?;
                writeln!(out, "theta={}", p.theta)?;
                writeln!(out, "sigma={}", p.sigma)?;
                writeln!(out, "u0={}", p.u0)?;
            }
        }
        writeln!(out, "family={}", self.spec.family())?;
        writeln!(out, "flavor={}", self.spec.flavor())?;
        writeln!(out, "seed={}", self.seed)?;
        writeln!(out, "method={}", self.method)?;
        writeln!(out, "method_used={}", self.method_used)?;
        writeln!(out, "n_steps={n}")?;
        writeln!(out, "h={}", self.h)?;
        writeln!(out, "n_paths={}", self.paths.nrows())?;
        writeln!(out, "grid=0:{}:{}", self.grid[n], self.h)?;
        for w in &self.warnings {
            writeln!(out, "warning={w}")?;
        }
        Ok(())
    }
}

/// Simulates `n_paths` paths of the process on `t_k = k h`, `k = 0..=n_steps`.
pub fn simulate(
    spec: &ProcessSpec,
    n_steps: usize,
    h: f64,
    n_paths: usize,
    seed: u64,
    method: Method,
) -> Result<PathEnsemble> {
    if n_steps == 0 || n_paths == 0 || !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "simulation needs n_steps >= 1, h > 0 and n_paths >= 1 (got {n_steps}, {h}, {n_paths})"
        )));
    }
    let grid: Vec<f64> = (0..=n_steps).map(|k| k as f64 * h).collect();
    let mut warnings = Vec::new();
    let (method_used, rows) = match method {
        Method::Cholesky => {
            let v = grid_variances(spec, &grid)?;
            (Method::Cholesky, cholesky_paths(&v, n_paths, seed, &mut warnings)?)
        }
        Method::CirculantEmbedding => {
            let v = grid_variances(spec, &grid)?;
            let v_next = variance(spec, (n_steps + 1) as f64 * h)?;
            match circulant_paths(&v, v_next, n_paths, seed)? {
                Some(rows) => (Method::CirculantEmbedding, rows),
                None => {
                    let msg = "circulant embedding has a negative eigenvalue; fell back to Cholesky".to_string();
                    log::warn!("{msg}");
                    warnings.push(msg);
                    (Method::Cholesky, cholesky_paths(&v, n_paths, seed, &mut warnings)?)
                }
            }
        }
        Method::MonteCarloMvN => {
            let design = WienerDesign::new(spec, &grid[1..])?;
            (Method::MonteCarloMvN, design.paths(n_paths, seed))
        }
    };
    let mut paths = DMatrix::zeros(n_paths, n_steps + 1);
    for (p, row) in rows.iter().enumerate() {
        for (k, x) in row.iter().enumerate() {
            paths[(p, k + 1)] = *x;
        }
    }
    Ok(PathEnsemble { spec: spec.clone(), grid, h, paths, seed, method, method_used, warnings, ou: None })
}

/// `V(t_k)` on the grid, `V(0) = 0`.
fn grid_variances(spec: &ProcessSpec, grid: &[f64]) -> Result<Vec<f64>> {
    grid.par_iter().map(|&t| if t == 0.0 { Ok(0.0) } else { variance(spec, t) }).collect()
}

/// Covariance of `B_{t_1..t_n}` from `V(kh)`, using stationarity of increments.
fn grid_covariance(v: &[f64]) -> DMatrix<f64> {
    let n = v.len() - 1;
    DMatrix::from_fn(n, n, |i, j| 0.5 * (v[i + 1] + v[j + 1] - v[i.abs_diff(j)]))
}

fn cholesky_paths(v: &[f64], n_paths: usize, seed: u64, warnings: &mut Vec<String>) -> Result<Vec<Vec<f64>>> {
    let cov = grid_covariance(v);
    let n = cov.nrows();
    let min_eig = min_eigenvalue(&cov);
    if min_eig < -1e-8 {
        return Err(Error::NotPositiveSemidefinite { min_eigenvalue: min_eig });
    }
    let l = match cov.clone().cholesky() {
        Some(c) => c.l(),
        None => {
            let jitter = 1e-12 * cov.trace() / n as f64;
            let msg = format!("covariance is numerically singular; added diagonal jitter {jitter:.3e}");
            log::warn!("{msg}");
            warnings.push(msg);
            let mut m = cov;
            for i in 0..n {
                m[(i, i)] += jitter;
            }
            m.cholesky().ok_or(Error::NotPositiveSemidefinite { min_eigenvalue: min_eig })?.l()
        }
    };
    Ok((0..n_paths)
        .into_par_iter()
        .map(|p| {
            let mut z = DVector::zeros(n);
            NormalStream::new(seed, p as u64).fill(z.as_mut_slice());
            (&l * z).as_slice().to_vec()
        })
        .collect())
}

/// Davies-Harte sampling of the stationary increments; `None` when the
/// embedding has an eigenvalue below `-1e-10`.
fn circulant_paths(v: &[f64], v_next: f64, n_paths: usize, seed: u64) -> Result<Option<Vec<Vec<f64>>>> {
    let n = v.len() - 1;
    // increment autocovariance gamma(k) = (V((k+1)h) + V(|k-1|h) - 2 V(kh)) / 2
    let vk = |k: usize| if k <= n { v[k] } else { v_next };
    let gamma = |k: usize| -> f64 {
        if k == 0 {
            v[1]
        } else {
            0.5 * (vk(k + 1) + v[k - 1] - 2.0 * v[k])
        }
    };
    let m = 2 * n;
    let mut c: Vec<Complex64> = (0..m)
        .map(|j| Complex64::new(gamma(if j <= n { j } else { m - j }), 0.0))
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(m);
    fft.process(&mut c);
    let lambda: Vec<f64> = c.iter().map(|z| z.re).collect();
    if lambda.iter().any(|&l| l < -1e-10) {
        return Ok(None);
    }
    let scale: Vec<f64> = lambda.iter().map(|&l| (l.max(0.0) / m as f64).sqrt()).collect();
    let rows = (0..n_paths)
        .into_par_iter()
        .map(|p| {
            let mut stream = NormalStream::new(seed, p as u64);
            let mut w: Vec<Complex64> = scale
                .iter()
                .map(|&s| {
                    let re = stream.next();
                    let im = stream.next();
                    Complex64::new(s * re, s * im)
                })
                .collect();
            fft.process(&mut w);
            let mut acc = 0.0;
            w[..n]
                .iter()
                .map(|z| {
                    acc += z.re;
                    acc
                })
                .collect()
        })
        .collect();
    Ok(Some(rows))
}

/// Discretization of `B_t = int k(t, u) dW_u` on cells `[u_j, u_{j+1}]` of
/// `[-U, t_n]`: `B_t ~ sum_j a_j(t) Z_j` with `a_j(t)` the cell average of
/// `k(t, .)` times the square root of the cell width.
///
/// Cells are uniform of width `h/16` between grid times, graded
/// geometrically (ratio `sqrt 2`, 80 levels, over the last 8 uniform
/// widths) towards each grid time and towards `0` from the left, where the kernel may be singular, and grow
/// geometrically on the far past. `U` doubles until the omitted `L^2` mass
/// is below `1e-4` for every grid time.
///
/// Averaging misses a fixed fraction of the `L^2` mass of the cell that
/// ends at a singularity, however small the cell. Each such cell gets an
/// extra independent normal carrying the missing mass.
pub struct WienerDesign {
    pub cells: Vec<(f64, f64)>,
    /// Row `i` holds `a_j(t_i)` for every cell.
    pub weights: DMatrix<f64>,
    pub horizon: f64,
}

const MC_MAX_STEPS: usize = 256;
const MC_TAIL_MASS: f64 = 1e-4;
const GRADING_LEVELS: i32 = 160;
/// Uniform cells replaced by the graded zone next to a singular point.
const GRADED_CELLS: f64 = 8.0;

fn graded_left_of(end: f64, width: f64) -> Vec<f64> {
    // boundaries from end - width up to end, shrinking toward end
    let r = 2f64.powf(0.25);
    let mut out: Vec<f64> = (0..=GRADING_LEVELS).map(|k| end - width / r.powi(k)).collect();
    out.push(end);
    out.dedup();
    out
}

impl WienerDesign {
    pub fn new(spec: &ProcessSpec, times: &[f64]) -> Result<Self> {
        if times.is_empty() || times.len() > MC_MAX_STEPS {
            return Err(Error::InvalidArgument(format!(
                "Monte Carlo discretization supports 1..={MC_MAX_STEPS} grid times, got {}",
                times.len()
            )));
        }
        let c = spec.normalization()?;
        let top = *times.last().unwrap();
        let h = times[0];
        let fine = h / 16.0;

        let horizon = tail_horizon(spec, times, c)?;

        // past, as distances from 0: graded, uniform up to max(top, 1), then
        // geometric out to the horizon
        let near = top.max(1.0);
        let mut dist: Vec<f64> = graded_left_of(0.0, GRADED_CELLS * fine).iter().map(|b| -b).rev().collect();
        let mut k = GRADED_CELLS + 1.0;
        while k * fine < near {
            dist.push(k * fine);
            k += 1.0;
        }
        let mut d = near;
        dist.push(d);
        while d < horizon {
            d = (d * 1.05).min(horizon);
            dist.push(d);
        }
        let mut bounds: Vec<f64> = dist.iter().rev().map(|d| -d).collect();
        // present: per step, uniform then graded into the grid time
        let mut prev = 0.0;
        for &t in times {
            let w = (t - prev) / 16.0;
            for k in 1..(16 - GRADED_CELLS as usize) {
                bounds.push(prev + k as f64 * w);
            }
            bounds.extend(graded_left_of(t, GRADED_CELLS * w).into_iter().skip(1));
            prev = t;
        }
        bounds.dedup();
        let cells: Vec<(f64, f64)> = bounds.windows(2).map(|w| (w[0], w[1])).filter(|(a, b)| b > a).collect();

        let rows: Vec<Vec<(f64, Option<f64>)>> = times
            .par_iter()
            .map(|&t| cells.iter().map(|&(a, b)| cell_weight(spec, t, a, b, c)).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        // one extra independent column per singular end cell
        let singular: Vec<usize> = (0..cells.len()).filter(|&j| rows.iter().any(|r| r[j].1.is_some())).collect();
        let m = cells.len();
        let weights = DMatrix::from_fn(times.len(), m + singular.len(), |i, j| {
            if j < m {
                rows[i][j].0
            } else {
                rows[i][singular[j - m]].1.unwrap_or(0.0)
            }
        });
        Ok(Self { cells, weights, horizon })
    }

    /// Covariance the discretization reproduces exactly, `W W^T`.
    pub fn implied_covariance(&self) -> DMatrix<f64> {
        &self.weights * self.weights.transpose()
    }

    fn paths(&self, n_paths: usize, seed: u64) -> Vec<Vec<f64>> {
        let m = self.weights.ncols();
        (0..n_paths)
            .into_par_iter()
            .map(|p| {
                let mut z = DVector::zeros(m);
                NormalStream::new(seed, p as u64).fill(z.as_mut_slice());
                (&self.weights * z).as_slice().to_vec()
            })
            .collect()
    }
}

/// Smallest `U` found by doubling from `max(16, 8 t_n)` with
/// `C int_U^inf k(t, -x)^2 dx < MC_TAIL_MASS` for all grid times. Slowly
/// decaying tails skip ahead using the decay rate seen per doubling.
fn tail_horizon(spec: &ProcessSpec, times: &[f64], c: f64) -> Result<f64> {
    let tol = Tolerance::new(1e-12, 1e-6);
    let mass = |u: f64| -> Result<f64> {
        let mut worst: f64 = 0.0;
        for &t in times {
            let trap = Trap::default();
            let r = integrate_from(|x| trap.get(spec.tail_increment(x, t)).powi(2), u, &[2.0 * u], true, 0.0, tol);
            worst = worst.max(c * trap.finish(r)?.value);
        }
        Ok(worst)
    };
    let mut u = (8.0 * times.last().unwrap()).max(16.0);
    let mut prev: Option<f64> = None;
    for _ in 0..64 {
        let m = mass(u)?;
        if m < MC_TAIL_MASS {
            return Ok(u);
        }
        let mut jump = 1.0;
        if let Some(p) = prev {
            let rate = (p / m).log2();
            if rate > 0.0 {
                jump = ((m / MC_TAIL_MASS).log2() / rate).ceil().clamp(1.0, 64.0);
            }
        }
        prev = Some(m);
        u *= 2f64.powf(jump);
        if !u.is_finite() || u > 1e60 {
            break;
        }
    }
    Err(Error::Divergent("kernel tail mass does not fall below the truncation budget".into()))
}

/// `(int_a^b k(t, u) du) / sqrt(b - a)`.
fn cell_weight(spec: &ProcessSpec, t: f64, a: f64, b: f64, c: f64) -> Result<(f64, Option<f64>)> {
    if a >= t {
        return Ok((0.0, None));
    }
    let trap = Trap::default();
    let width = b - a;
    if b == t || b == 0.0 {
        // singular end: integrate with the exact distance to it, and keep the
        // part of the L^2 mass that the cell average misses
        let k = |dr: f64| if b == t { spec.tail(dr) } else { spec.tail_increment(dr, t) };
        let tol = Tolerance::new(0.0, 1e-9);
        let settle = |r: std::result::Result<crate::quad::Estimate<f64>, crate::quad::QuadError>| match r {
            Err(crate::quad::QuadError::NotConverged { value, .. }) => Ok(value),
            other => other.map(|e| e.value),
        };
        let integral = trap.finish(settle(tanh_sinh(|_, _, dr| trap.get(k(dr)), a, b, tol)))?;
        let mass = trap.finish(settle(tanh_sinh(|_, _, dr| trap.get(k(dr)).powi(2), a, b, tol)))?;
        let w = c.sqrt() * integral / width.sqrt();
        let residual = (c * mass - w * w).max(0.0).sqrt();
        return Ok((w, Some(residual)));
    }
    let mut f = |u: f64| if u < 0.0 { trap.get(spec.tail_increment(-u, t)) } else { trap.get(spec.tail(t - u)) };
    let r = gk21(&mut f, a, b).map(|(v, _)| v);
    Ok((c.sqrt() * trap.finish(r)? / width.sqrt(), None))
}

/// Reads a path CSV (`path_id,t,value`) into its time grid and a matrix
/// with one row per path. Every path must cover the same times.
pub fn read_paths_csv<R: Read>(input: R) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let bad = |msg: String| Error::InvalidArgument(format!("path CSV: {msg}"));
    let mut rdr = csv::Reader::from_reader(input);
    let mut rows: Vec<(usize, f64, f64)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() < 3 {
            return Err(bad(format!("expected 3 fields, got {}", rec.len())));
        }
        let id = rec[0].trim().parse::<usize>().map_err(|e| bad(e.to_string()))?;
        let t = rec[1].trim().parse::<f64>().map_err(|e| bad(e.to_string()))?;
        let v = rec[2].trim().parse::<f64>().map_err(|e| bad(e.to_string()))?;
        rows.push((id, t, v));
    }
    let mut grid: Vec<f64> = rows.iter().map(|r| r.1).collect();
    grid.sort_by(|a, b| a.total_cmp(b));
    grid.dedup();
    let mut ids: Vec<usize> = rows.iter().map(|r| r.0).collect();
    ids.sort_unstable();
    ids.dedup();
    let mut m = DMatrix::from_element(ids.len(), grid.len(), f64::NAN);
    for (id, t, v) in rows {
        let p = ids.binary_search(&id).unwrap_or_default();
        let k = grid.binary_search_by(|g| g.total_cmp(&t)).unwrap_or_default();
        m[(p, k)] = v;
    }
    if m.iter().any(|v| v.is_nan()) {
        return Err(bad("paths do not share a common grid".into()));
    }
    Ok((grid, m))
}

/// Unbiased sample covariance of the values at grid indices `i` and `j`.
pub fn empirical_cov(ens: &PathEnsemble, i: usize, j: usize) -> Result<f64> {
    let (x, y) = columns(ens, i, j)?;
    let n = x.len() as f64;
    let (mx, my) = (mean(&x), mean(&y));
    Ok(x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (n - 1.0))
}

/// Standard error of `empirical_cov`, from the sample variance of the
/// centered products.
pub fn empirical_cov_se(ens: &PathEnsemble, i: usize, j: usize) -> Result<f64> {
    let (x, y) = columns(ens, i, j)?;
    let n = x.len() as f64;
    let (mx, my) = (mean(&x), mean(&y));
    let prods: Vec<f64> = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).collect();
    let mp = mean(&prods);
    let var = prods.iter().map(|p| (p - mp).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((var / n).sqrt())
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn columns(ens: &PathEnsemble, i: usize, j: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = ens.grid.len();
    if i >= k || j >= k {
        return Err(Error::InvalidArgument(format!("grid index out of range ({i}, {j}) for {k} times")));
    }
    if ens.n_paths() < 2 {
        return Err(Error::InvalidArgument("empirical covariance needs at least 2 paths".into()));
    }
    Ok((ens.paths.column(i).iter().copied().collect(), ens.paths.column(j).iter().copied().collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{BernsteinFamily, Flavor};

    #[test]
    fn normals_are_reproducible_per_stream() {
        let mut a = NormalStream::new(7, 3);
        let mut b = NormalStream::new(7, 3);
        let mut c = NormalStream::new(7, 4);
        let xa: Vec<f64> = (0..5).map(|_| a.next()).collect();
        let xb: Vec<f64> = (0..5).map(|_| b.next()).collect();
        let xc: Vec<f64> = (0..5).map(|_| c.next()).collect();
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
    }

    #[test]
    fn method_names_round_trip() {
        for m in [Method::Cholesky, Method::CirculantEmbedding, Method::MonteCarloMvN] {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
        }
    }

    #[test]
    fn brownian_circulant_matches_cholesky_law() {
        let spec = ProcessSpec::new(BernsteinFamily::stable(1.0).unwrap(), Flavor::Derivative).unwrap();
        let e = simulate(&spec, 8, 0.25, 4000, 1, Method::CirculantEmbedding).unwrap();
        assert_eq!(e.method_used(), Method::CirculantEmbedding);
        let v = empirical_cov(&e, 4, 4).unwrap();
        assert!((v - 1.0).abs() < 4.0 * empirical_cov_se(&e, 4, 4).unwrap(), "{v}");
    }
}
