//! Ornstein-Uhlenbeck process driven by the Bernstein-Gaussian motion `X`:
//! the solution of `U_t = u0 - theta int_0^t U_s ds + sigma X_t`,
//!
//! `U_t = u0 e^{-theta t} + sigma X_t - sigma theta int_0^t e^{theta (s - t)} X_s ds`.
//!
//! As a Wiener integral `U_t - E U_t = sigma int h_t(x) dW_x` with
//! `h_t(x) = k(t, x) - theta int_0^t e^{theta (s - t)} k(s, x) ds`.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{cut_points, ProcessSpec};
use crate::numerics::{integrate_from, Trap};
use crate::quad::{tanh_sinh, Estimate, QuadError, Tolerance};
use crate::simulate::{OuParams, PathEnsemble};

#[derive(Clone, Debug)]
pub struct OuSpec {
    process: ProcessSpec,
    theta: f64,
    sigma: f64,
    u0: f64,
}

impl OuSpec {
    pub fn new(process: ProcessSpec, theta: f64, sigma: f64, u0: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::InvalidArgument(format!("OU needs theta > 0, got {theta}")));
        }
        if !sigma.is_finite() || !u0.is_finite() {
            return Err(Error::InvalidArgument("OU sigma and u0 must be finite".into()));
        }
        Ok(Self { process, theta, sigma, u0 })
    }

    pub fn process(&self) -> &ProcessSpec {
        &self.process
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn u0(&self) -> f64 {
        self.u0
    }

    fn params(&self) -> OuParams {
        OuParams { theta: self.theta, sigma: self.sigma, u0: self.u0 }
    }
}

fn inner_tol() -> Tolerance<f64> {
    Tolerance::new(1e-13, 1e-11)
}

fn settle(r: std::result::Result<Estimate<f64>, QuadError>) -> std::result::Result<f64, QuadError> {
    match r {
        Err(QuadError::NotConverged { value, abs_error }) if abs_error <= 1e-9 * (1.0 + value.abs()) => Ok(value),
        other => other.map(|e| e.value),
    }
}

/// `h_t(x)` with `d = t - x` supplied exactly, for `x < t`.
fn h_with_distance(ou: &OuSpec, t: f64, x: f64, d: f64) -> Result<f64> {
    let spec = &ou.process;
    let sc = spec.normalization()?.sqrt();
    let theta = ou.theta;
    let trap = Trap::default();
    let (direct, weighted) = if x >= 0.0 {
        // int_x^t e^{-theta (t - s)} g(s - x) ds with r = s - x
        let r = tanh_sinh(|_, r, dr| (-theta * dr).exp() * trap.get(spec.tail(r)), 0.0, d, inner_tol());
        (trap.get(spec.tail(d)), trap.finish(settle(r))?)
    } else {
        let y = -x;
        let r = tanh_sinh(|s, _, dr| (-theta * dr).exp() * trap.get(spec.tail_increment(y, s)), 0.0, t, inner_tol());
        (trap.get(spec.tail_increment(y, t)), trap.finish(settle(r))?)
    };
    trap.finish(Ok(()))?;
    Ok(sc * (direct - theta * weighted))
}

/// `h_t(x)`; zero for `x >= t`.
pub fn h_kernel(ou: &OuSpec, t: f64, x: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) || x.is_nan() {
        return Err(Error::InvalidArgument(format!("h kernel needs t > 0 and a real x, got t = {t}, x = {x}")));
    }
    if x >= t {
        return Ok(0.0);
    }
    h_with_distance(ou, t, x, t - x)
}

/// `E U_t = u0 e^{-theta t}`.
pub fn ou_mean(ou: &OuSpec, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("OU mean needs t >= 0, got {t}")));
    }
    Ok(ou.u0 * (-ou.theta * t).exp())
}

/// `Cov(U_{t1}, U_{t2}) = sigma^2 int h_{t1}(x) h_{t2}(x) dx`, split at
/// `0` and `min(t1, t2)`.
pub fn ou_cov(ou: &OuSpec, t1: f64, t2: f64) -> Result<f64> {
    if !(t1 >= 0.0 && t2 >= 0.0) || !t1.is_finite() || !t2.is_finite() {
        return Err(Error::InvalidArgument(format!("OU covariance needs t1, t2 >= 0, got {t1}, {t2}")));
    }
    if ou.sigma == 0.0 || t1 == 0.0 || t2 == 0.0 {
        return Ok(0.0);
    }
    let (a, b) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
    let tol = Tolerance::new(1e-12, 1e-9);
    let trap = Trap::default();
    // x < 0, as y = -x
    let cuts = cut_points(ou.process.family(), &[a, b]);
    let past = integrate_from(
        |y| trap.get(h_with_distance(ou, a, -y, a + y)) * trap.get(h_with_distance(ou, b, -y, b + y)),
        0.0,
        &cuts,
        true,
        0.0,
        tol,
    );
    let past = trap.finish(past)?.value;
    // 0 < x < a; the exact distance to a is the one that matters
    let mut pieces = vec![0.0, 0.5 * a, a];
    if b - a < 0.5 * a && b > a {
        pieces.insert(2, a - (b - a));
    }
    let mut present = 0.0;
    for w in pieces.windows(2) {
        let r = tanh_sinh(
            |x, _, dr| {
                let da = if w[1] == a { dr } else { a - x };
                trap.get(h_with_distance(ou, a, x, da)) * trap.get(h_with_distance(ou, b, x, b - a + da))
            },
            w[0],
            w[1],
            tol,
        );
        present += trap.finish(settle(r))?;
    }
    Ok(ou.sigma * ou.sigma * (past + present))
}

/// OU covariance matrix on `grid`.
pub fn ou_cov_matrix(ou: &OuSpec, grid: &[f64]) -> Result<DMatrix<f64>> {
    let n = grid.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let vals = pairs.par_iter().map(|&(i, j)| ou_cov(ou, grid[i], grid[j])).collect::<Result<Vec<f64>>>()?;
    let mut m = DMatrix::zeros(n, n);
    for (&(i, j), v) in pairs.iter().zip(vals) {
        m[(i, j)] = v;
        m[(j, i)] = v;
    }
    Ok(m)
}

/// Applies the solution formula to each driver path, with the convolution
/// integral accumulated by the trapezoid rule:
/// `I_{k+1} = e^{-theta h} I_k + h/2 (e^{-theta h} X_k + X_{k+1})`.
pub fn ou_simulate(ou: &OuSpec, ensemble: &PathEnsemble) -> Result<PathEnsemble> {
    if ensemble.ou_params().is_some() {
        return Err(Error::InvalidArgument("ensemble already holds OU paths".into()));
    }
    let (a, b) = (ensemble.spec(), &ou.process);
    if a.family() != b.family() || a.flavor() != b.flavor() {
        return Err(Error::InvalidArgument(format!("driver ensemble is {a}, OU spec expects {b}")));
    }
    let h = ensemble.step();
    let grid = ensemble.grid();
    if grid.iter().enumerate().any(|(k, t)| (t - k as f64 * h).abs() > 1e-12 * t.abs().max(1.0)) {
        return Err(Error::InvalidArgument("driver grid is not uniform with the recorded step".into()));
    }
    let (theta, sigma, u0) = (ou.theta, ou.sigma, ou.u0);
    let decay = (-theta * h).exp();
    let x = ensemble.paths();
    let (n_paths, n_cols) = x.shape();
    let rows: Vec<Vec<f64>> = (0..n_paths)
        .into_par_iter()
        .map(|p| {
            let mut out = Vec::with_capacity(n_cols);
            let mut integral = 0.0;
            for k in 0..n_cols {
                if k > 0 {
                    integral = decay * integral + 0.5 * h * (decay * x[(p, k - 1)] + x[(p, k)]);
                }
                out.push(u0 * (-theta * grid[k]).exp() + sigma * x[(p, k)] - sigma * theta * integral);
            }
            out
        })
        .collect();
    let paths = DMatrix::from_fn(n_paths, n_cols, |p, k| rows[p][k]);
    Ok(ensemble.with_ou_paths(paths, ou.params()))
}

/// Largest `|U_t - u0 + theta trapz(U, 0, t) - sigma X_t|` over the grid,
/// per path, for OU paths `ou_paths` built from `driver`.
pub fn integral_equation_residual(ou: &OuSpec, driver: &PathEnsemble, ou_paths: &PathEnsemble) -> Result<Vec<f64>> {
    if driver.paths().shape() != ou_paths.paths().shape() {
        return Err(Error::InvalidArgument("driver and OU ensembles differ in shape".into()));
    }
    let h = driver.step();
    let (x, u) = (driver.paths(), ou_paths.paths());
    Ok((0..x.nrows())
        .into_par_iter()
        .map(|p| {
            let mut trapz = 0.0;
            let mut worst: f64 = 0.0;
            for k in 0..x.ncols() {
                if k > 0 {
                    trapz += 0.5 * h * (u[(p, k - 1)] + u[(p, k)]);
                }
                let r = u[(p, k)] - ou.u0 + ou.theta * trapz - ou.sigma * x[(p, k)];
                worst = worst.max(r.abs());
            }
            worst
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{BernsteinFamily, Flavor};

    fn bm() -> ProcessSpec {
        ProcessSpec::new(BernsteinFamily::stable(1.0).unwrap(), Flavor::Derivative).unwrap()
    }

    #[test]
    fn brownian_h_kernel_is_exponential() {
        let ou = OuSpec::new(bm(), 0.7, 1.0, 0.0).unwrap();
        for x in [0.1, 0.5, 0.9] {
            let want = (-0.7f64 * (1.0 - x)).exp();
            assert!((h_kernel(&ou, 1.0, x).unwrap() - want).abs() < 1e-10);
        }
        assert!(h_kernel(&ou, 1.0, -0.5).unwrap().abs() < 1e-12);
        assert_eq!(h_kernel(&ou, 1.0, 1.5).unwrap(), 0.0);
    }

    #[test]
    fn brownian_variance_closed_form() {
        let theta = 1.0;
        let ou = OuSpec::new(bm(), theta, 1.0, 0.0).unwrap();
        for t in [0.5, 1.0, 2.0] {
            let want = (1.0 - (-2.0 * theta * t).exp()) / (2.0 * theta);
            let got = ou_cov(&ou, t, t).unwrap();
            assert!((got - want).abs() < 1e-8, "t = {t}: {got} vs {want}");
        }
    }

    #[test]
    fn rejects_nonpositive_theta() {
        assert!(OuSpec::new(bm(), 0.0, 1.0, 0.0).is_err());
    }
}
