//! Catalog of Bernstein functions with their Lévy densities, tails and
//! Sonine partners.
//!
//! Every family is described by a Bernstein function `phi`, its Lévy density
//! `nu_bar`, the tail `nu(s) = int_s^inf nu_bar`, the associate kernel `kappa`
//! (with `int_0^t nu(z) kappa(t - z) dz = 1`) and `chi(x) = int_0^x kappa`.
//! Not every family has every kernel; asking for a missing one yields
//! [`CatalogError::UnsupportedEvaluator`].

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use thiserror::Error;

use crate::quad::{exp_sinh, fourier_half_line, gauss_kronrod, tanh_sinh, QuadError, Tolerance, Trig};
use crate::special::{
    exp_integral_e1, exp_integral_ei, gamma, gamma_inc_lower, gamma_inc_upper, ml_raw,
    regularized_gamma_p_shifted, rgamma, SpecialFnError,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CatalogError {
    #[error("invalid parameters for {family}: {reason}")]
    InvalidParameter { family: &'static str, reason: String },
    #[error("cannot parse family specification `{input}`: {reason}")]
    Parse { input: String, reason: String },
    #[error("{family} has no {kernel} evaluator")]
    UnsupportedEvaluator { family: &'static str, kernel: Kernel },
    #[error("argument outside domain: {0}")]
    Domain(String),
    #[error(transparent)]
    Special(#[from] SpecialFnError),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

pub type CatalogResult<T> = Result<T, CatalogError>;

/// Which operator the process is built from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Flavor {
    /// Generalized Riemann-Liouville derivative, kernel `nu`.
    Derivative,
    /// Generalized Riemann-Liouville integral, kernel `kappa`.
    Integral,
}

impl fmt::Display for Flavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Flavor::Derivative => "derivative",
            Flavor::Integral => "integral",
        })
    }
}

impl FromStr for Flavor {
    type Err = CatalogError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "derivative" => Ok(Flavor::Derivative),
            "integral" => Ok(Flavor::Integral),
            other => Err(CatalogError::Parse {
                input: other.to_string(),
                reason: "flavor must be `derivative` or `integral`".into(),
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Kernel {
    NuBar,
    Nu,
    Kappa,
    Chi,
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kernel::NuBar => "nu_bar",
            Kernel::Nu => "nu",
            Kernel::Kappa => "kappa",
            Kernel::Chi => "chi",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    ClosedForm,
    Quadrature,
    LaplaceInversion,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StableComponent {
    pub alpha: f64,
    pub weight: f64,
}

/// A Bernstein function from the catalog.
#[derive(Clone, Debug, PartialEq)]
pub enum BernsteinFamily {
    /// `phi(x) = x^c` with `c = |1 - alpha| / 2`; fractional Brownian motion.
    Stable { alpha: f64 },
    /// `phi(x) = x (x + lambda)^{-(alpha + 1)/2}`.
    TemperedI { alpha: f64, lambda: f64 },
    /// `phi(x) = (lambda + x)^alpha - lambda^alpha`.
    TemperedII { alpha: f64, lambda: f64 },
    /// `phi(x) = x^{1 - beta + alpha} / (x^alpha + 1)`.
    MittagLeffler { alpha: f64, beta: f64 },
    /// `phi(x) = log(1 + x)`.
    Gamma,
    /// `phi(x) = x / (1 + x)`.
    Exponential,
    /// `kappa(z) = z^{-alpha} 1_{z <= 1} + z^{-beta} 1_{z > 1}`.
    CompositeStable { alpha: f64, beta: f64 },
    /// Weighted sum of stable components, all below or all above one.
    DistributedOrderStable { components: Vec<StableComponent> },
    /// `kappa(z) = z^{-delta} 1_{z < 1} + z^{-1} 1_{z >= 1}`.
    PowerLogKernel { delta: f64 },
    /// `kappa(z) = z^{-1/2} 1_{z < e} + 1/(sqrt(z) log z) 1_{z >= e}`.
    SqrtLogKernel,
}

fn invalid<T>(family: &'static str, reason: impl Into<String>) -> CatalogResult<T> {
    Err(CatalogError::InvalidParameter { family, reason: reason.into() })
}

fn in_open(x: f64, lo: f64, hi: f64) -> bool {
    x.is_finite() && x > lo && x < hi
}

impl BernsteinFamily {
    pub fn stable(alpha: f64) -> CatalogResult<Self> {
        if !in_open(alpha, 0.0, 2.0) {
            return invalid("stable", "alpha must lie in (0, 2)");
        }
        Ok(Self::Stable { alpha })
    }

    pub fn tempered_i(alpha: f64, lambda: f64) -> CatalogResult<Self> {
        if !in_open(alpha, 0.0, 1.0) || !(lambda > 0.0 && lambda.is_finite()) {
            return invalid("tempered1", "need alpha in (0, 1) and lambda > 0");
        }
        Ok(Self::TemperedI { alpha, lambda })
    }

    pub fn tempered_ii(alpha: f64, lambda: f64) -> CatalogResult<Self> {
        if !in_open(alpha, 0.0, 1.0) || !(lambda > 0.0 && lambda.is_finite()) {
            return invalid("tempered2", "need alpha in (0, 1) and lambda > 0");
        }
        Ok(Self::TemperedII { alpha, lambda })
    }

    pub fn mittag_leffler(alpha: f64, beta: f64) -> CatalogResult<Self> {
        if !(in_open(alpha, 0.0, 1.0) && in_open(beta, alpha, 1.0)) {
            return invalid("ml", "need 0 < alpha < beta < 1");
        }
        Ok(Self::MittagLeffler { alpha, beta })
    }

    pub fn composite(alpha: f64, beta: f64) -> CatalogResult<Self> {
        if !(in_open(alpha, 0.0, 1.0) && in_open(beta, alpha, 1.0)) {
            return invalid("composite", "need 0 < alpha < beta < 1");
        }
        Ok(Self::CompositeStable { alpha, beta })
    }

    pub fn distributed_order(components: Vec<StableComponent>) -> CatalogResult<Self> {
        if components.is_empty() {
            return invalid("distorder", "at least one component is required");
        }
        let below = components.iter().all(|c| in_open(c.alpha, 0.0, 1.0));
        let above = components.iter().all(|c| in_open(c.alpha, 1.0, 2.0));
        if !(below || above) {
            return invalid("distorder", "alphas must all lie in (0, 1) or all in (1, 2)");
        }
        if components.iter().any(|c| !(c.weight > 0.0 && c.weight.is_finite())) {
            return invalid("distorder", "weights must be positive");
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return invalid("distorder", format!("weights must sum to 1 (got {total})"));
        }
        Ok(Self::DistributedOrderStable { components })
    }

    pub fn power_log_kernel(delta: f64) -> CatalogResult<Self> {
        if !in_open(delta, 0.0, 1.0) {
            return invalid("powerlog", "delta must lie in (0, 1)");
        }
        Ok(Self::PowerLogKernel { delta })
    }

    /// Short family tag used in diagnostics.
    pub fn tag(&self) -> &'static str {
        match self {
            Self::Stable { .. } => "stable",
            Self::TemperedI { .. } => "tempered1",
            Self::TemperedII { .. } => "tempered2",
            Self::MittagLeffler { .. } => "ml",
            Self::Gamma => "gamma",
            Self::Exponential => "exponential",
            Self::CompositeStable { .. } => "composite",
            Self::DistributedOrderStable { .. } => "distorder",
            Self::PowerLogKernel { .. } => "powerlog",
            Self::SqrtLogKernel => "sqrtlog",
        }
    }

    /// Evaluation strategy for a kernel, `None` when the family lacks it.
    pub fn strategy(&self, kernel: Kernel) -> Option<Strategy> {
        use Kernel::*;
        use Strategy::*;
        match (self, kernel) {
            (Self::Stable { alpha }, Kappa | Chi) if *alpha == 1.0 => None,
            (Self::Stable { .. }, _) => Some(ClosedForm),
            (Self::DistributedOrderStable { components }, k) => {
                let below = components[0].alpha < 1.0;
                match k {
                    NuBar | Nu if below => Some(ClosedForm),
                    Kappa | Chi if !below => Some(ClosedForm),
                    _ => None,
                }
            }
            (Self::TemperedI { .. } | Self::TemperedII { .. } | Self::Exponential, NuBar | Nu) => Some(ClosedForm),
            (Self::TemperedI { .. } | Self::TemperedII { .. } | Self::Exponential, _) => None,
            (Self::MittagLeffler { .. }, _) => Some(ClosedForm),
            (Self::Gamma, NuBar | Nu) => Some(ClosedForm),
            (Self::Gamma, Kappa | Chi) => Some(Quadrature),
            (Self::CompositeStable { .. } | Self::PowerLogKernel { .. } | Self::SqrtLogKernel, Kappa | Chi) => {
                Some(ClosedForm)
            }
            (Self::CompositeStable { .. } | Self::PowerLogKernel { .. } | Self::SqrtLogKernel, _) => None,
        }
    }

    pub fn has(&self, kernel: Kernel) -> bool {
        self.strategy(kernel).is_some()
    }

    fn unsupported<T>(&self, kernel: Kernel) -> CatalogResult<T> {
        Err(CatalogError::UnsupportedEvaluator { family: self.tag(), kernel })
    }

    /// Points where the kernels are not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::CompositeStable { .. } | Self::PowerLogKernel { .. } => vec![1.0],
            Self::SqrtLogKernel => vec![std::f64::consts::E],
            _ => Vec::new(),
        }
    }

    /// Whether `nu(0+)` is infinite.
    pub fn nu_singular_at_zero(&self) -> bool {
        match self {
            Self::Stable { alpha } => *alpha != 1.0,
            Self::Exponential => false,
            _ => true,
        }
    }

    pub fn sonine_pair(&self) -> SoninePair<'_> {
        SoninePair { family: self }
    }

    // -----------------------------------------------------------------------
    // Bernstein function

    /// `phi(theta)` for `theta > 0`.
    pub fn phi(&self, theta: f64) -> CatalogResult<f64> {
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(CatalogError::Domain(format!("phi needs theta > 0, got {theta}")));
        }
        Ok(match self {
            Self::Stable { alpha } => theta.powf(stable_c(*alpha)),
            Self::DistributedOrderStable { components } => {
                if components[0].alpha < 1.0 {
                    components.iter().map(|c| c.weight * theta.powf(stable_c(c.alpha))).sum()
                } else {
                    1.0 / components.iter().map(|c| c.weight * theta.powf(-stable_c(c.alpha))).sum::<f64>()
                }
            }
            Self::TemperedI { alpha, lambda } => theta * (theta + lambda).powf(-(alpha + 1.0) / 2.0),
            Self::TemperedII { alpha, lambda } => lambda.powf(*alpha) * (alpha * (theta / lambda).ln_1p()).exp_m1(),
            Self::MittagLeffler { alpha, beta } => theta.powf(1.0 - beta + alpha) / (theta.powf(*alpha) + 1.0),
            Self::Gamma => theta.ln_1p(),
            Self::Exponential => theta / (1.0 + theta),
            Self::CompositeStable { alpha, beta } => 1.0 / composite_laplace(*alpha, *beta, theta)?,
            Self::PowerLogKernel { delta } => 1.0 / composite_laplace(*delta, 1.0, theta)?,
            Self::SqrtLogKernel => 1.0 / sqrtlog_laplace(theta)?,
        })
    }

    /// `phi(i x)` from a complex closed form, `None` when the family has
    /// none registered.
    pub fn phi_imag_axis(&self, x: f64) -> Option<CatalogResult<Complex64>> {
        if x == 0.0 || !x.is_finite() {
            return Some(Err(CatalogError::Domain(format!("phi(ix) needs finite x != 0, got {x}"))));
        }
        let z = Complex64::new(0.0, x);
        let v = match self {
            Self::Stable { alpha } => Ok(imag_power(x, stable_c(*alpha))),
            Self::DistributedOrderStable { components } => {
                if components[0].alpha < 1.0 {
                    Ok(components.iter().map(|c| c.weight * imag_power(x, stable_c(c.alpha))).sum())
                } else {
                    let s: Complex64 = components.iter().map(|c| c.weight * imag_power(x, -stable_c(c.alpha))).sum();
                    Ok(1.0 / s)
                }
            }
            Self::TemperedI { alpha, lambda } => Ok(z * (z + lambda).powf(-(alpha + 1.0) / 2.0)),
            Self::TemperedII { alpha, lambda } => {
                let w = z / lambda;
                Ok(lambda.powf(*alpha) * complex_expm1(*alpha * complex_ln1p(w)))
            }
            Self::MittagLeffler { alpha, beta } => {
                Ok(imag_power(x, 1.0 - beta + alpha) / (imag_power(x, *alpha) + 1.0))
            }
            Self::Gamma => Ok(Complex64::new(0.5 * (x * x).ln_1p(), x.atan())),
            Self::Exponential => Ok(z / (1.0 + z)),
            Self::CompositeStable { alpha, beta } => composite_laplace_imag(*alpha, *beta, x).map(|k| 1.0 / k),
            Self::PowerLogKernel { delta } => composite_laplace_imag(*delta, 1.0, x).map(|k| 1.0 / k),
            Self::SqrtLogKernel => return None,
        };
        Some(v)
    }

    /// `|phi(i x)|^2`, from the complex closed form when one exists and by
    /// oscillatory quadrature otherwise.
    pub fn phi_mod2(&self, x: f64) -> CatalogResult<f64> {
        match self.phi_imag_axis(x) {
            Some(v) => v.map(|c| c.norm_sqr()),
            None => self.phi_mod2_quadrature(x),
        }
    }

    /// `|phi(i x)|^2` through the Fourier transform of `nu`
    /// (`|phi(ix)|^2 = x^2 |int_0^inf e^{-ixy} nu(y) dy|^2`) or, when only the
    /// associate kernel is known, through `1 / |kappa~(ix)|^2`.
    pub fn phi_mod2_quadrature(&self, x: f64) -> CatalogResult<f64> {
        if x == 0.0 || !x.is_finite() {
            return Err(CatalogError::Domain(format!("phi_mod2 needs finite x != 0, got {x}")));
        }
        let w = x.abs();
        let tol = Tolerance::new(1e-13, 1e-10);
        let bps = self.breakpoints();
        if self.has(Kernel::Nu) {
            let f = |y: f64| self.nu(y).unwrap_or(f64::NAN);
            let c = fourier_half_line(f, w, Trig::Cos, &bps, tol)?.value;
            let s = fourier_half_line(f, w, Trig::Sin, &bps, tol)?.value;
            Ok(w * w * (c * c + s * s))
        } else if self.has(Kernel::Kappa) {
            let f = |y: f64| self.kappa(y).unwrap_or(f64::NAN);
            let c = fourier_half_line(f, w, Trig::Cos, &bps, tol)?.value;
            let s = fourier_half_line(f, w, Trig::Sin, &bps, tol)?.value;
            Ok(1.0 / (c * c + s * s))
        } else {
            self.unsupported(Kernel::Nu)
        }
    }

    // -----------------------------------------------------------------------
    // Kernels

    /// Lévy density `nu_bar(s)`, `s > 0`.
    pub fn nu_bar(&self, s: f64) -> CatalogResult<f64> {
        check_positive(s, "nu_bar")?;
        match self {
            Self::Stable { alpha } => {
                let c = stable_c(*alpha);
                Ok(if c == 0.0 { 0.0 } else { c * s.powf(-c - 1.0) * rgamma(1.0 - c) })
            }
            Self::DistributedOrderStable { components } if components[0].alpha < 1.0 => Ok(components
                .iter()
                .map(|k| {
                    let c = stable_c(k.alpha);
                    k.weight * c * s.powf(-c - 1.0) * rgamma(1.0 - c)
                })
                .sum()),
            Self::TemperedI { alpha, lambda } => {
                let nu = self.nu(s)?;
                Ok(nu * (lambda + (1.0 - alpha) / (2.0 * s)))
            }
            Self::TemperedII { alpha, lambda } => {
                Ok(alpha * (-lambda * s - (1.0 + alpha) * s.ln()).exp() * rgamma(1.0 - alpha))
            }
            Self::MittagLeffler { alpha, beta } => {
                let e = ml_raw(*alpha, beta - 1.0, -s.powf(*alpha))?;
                Ok(-s.powf(beta - 2.0) * e)
            }
            Self::Gamma => Ok((-s).exp() / s),
            Self::Exponential => Ok((-s).exp()),
            _ => self.unsupported(Kernel::NuBar),
        }
    }

    /// Tail `nu(s) = int_s^inf nu_bar`, `s > 0`.
    pub fn nu(&self, s: f64) -> CatalogResult<f64> {
        check_positive(s, "nu")?;
        match self {
            Self::Stable { alpha } => {
                let c = stable_c(*alpha);
                Ok(s.powf(-c) * rgamma(1.0 - c))
            }
            Self::DistributedOrderStable { components } if components[0].alpha < 1.0 => Ok(components
                .iter()
                .map(|k| {
                    let c = stable_c(k.alpha);
                    k.weight * s.powf(-c) * rgamma(1.0 - c)
                })
                .sum()),
            Self::TemperedI { alpha, lambda } => {
                let p = (alpha - 1.0) / 2.0;
                Ok((-lambda * s + p * s.ln()).exp() * rgamma((1.0 + alpha) / 2.0))
            }
            Self::TemperedII { alpha, lambda } => {
                let x = lambda * s;
                if x > 700.0 {
                    return Ok(0.0);
                }
                let g = gamma_inc_upper(-alpha, x)?.value;
                Ok(alpha * lambda.powf(*alpha) * g * rgamma(1.0 - alpha))
            }
            Self::MittagLeffler { alpha, beta } => {
                let e = ml_raw(*alpha, *beta, -s.powf(*alpha))?;
                Ok(s.powf(beta - 1.0) * e)
            }
            Self::Gamma => {
                if s > 700.0 {
                    return Ok(0.0);
                }
                Ok(exp_integral_e1(s)?.value)
            }
            Self::Exponential => Ok((-s).exp()),
            _ => self.unsupported(Kernel::Nu),
        }
    }

    /// Associate kernel `kappa(s)`, `s > 0`.
    pub fn kappa(&self, s: f64) -> CatalogResult<f64> {
        check_positive(s, "kappa")?;
        match self {
            Self::Stable { alpha } if *alpha != 1.0 => {
                let c = stable_c(*alpha);
                Ok(s.powf(c - 1.0) * rgamma(c))
            }
            Self::DistributedOrderStable { components } if components[0].alpha > 1.0 => Ok(components
                .iter()
                .map(|k| {
                    let c = stable_c(k.alpha);
                    k.weight * s.powf(c - 1.0) * rgamma(c)
                })
                .sum()),
            Self::MittagLeffler { alpha, beta } => {
                Ok(s.powf(alpha - beta) * rgamma(1.0 - beta + alpha) + s.powf(-beta) * rgamma(1.0 - beta))
            }
            Self::Gamma => gamma_kappa(s),
            Self::CompositeStable { alpha, beta } => Ok(if s <= 1.0 { s.powf(-alpha) } else { s.powf(-beta) }),
            Self::PowerLogKernel { delta } => Ok(if s < 1.0 { s.powf(-delta) } else { 1.0 / s }),
            Self::SqrtLogKernel => {
                Ok(if s < std::f64::consts::E { 1.0 / s.sqrt() } else { 1.0 / (s.sqrt() * s.ln()) })
            }
            _ => self.unsupported(Kernel::Kappa),
        }
    }

    /// `chi(s) = int_0^s kappa`, `s >= 0`.
    pub fn chi(&self, s: f64) -> CatalogResult<f64> {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(CatalogError::Domain(format!("chi needs s >= 0, got {s}")));
        }
        if !self.has(Kernel::Chi) {
            return self.unsupported(Kernel::Chi);
        }
        if s == 0.0 {
            return Ok(0.0);
        }
        match self {
            Self::Stable { alpha } => {
                let c = stable_c(*alpha);
                Ok(s.powf(c) * rgamma(1.0 + c))
            }
            Self::DistributedOrderStable { components } => Ok(components
                .iter()
                .map(|k| {
                    let c = stable_c(k.alpha);
                    k.weight * s.powf(c) * rgamma(1.0 + c)
                })
                .sum()),
            Self::MittagLeffler { alpha, beta } => Ok(s.powf(alpha - beta + 1.0) * rgamma(2.0 - beta + alpha)
                + s.powf(1.0 - beta) * rgamma(2.0 - beta)),
            Self::Gamma => gamma_chi(s),
            Self::CompositeStable { alpha, beta } => Ok(composite_chi(*alpha, *beta, s)),
            Self::PowerLogKernel { delta } => {
                Ok(if s < 1.0 { s.powf(1.0 - delta) / (1.0 - delta) } else { 1.0 / (1.0 - delta) + s.ln() })
            }
            Self::SqrtLogKernel => sqrtlog_chi(s),
            _ => self.unsupported(Kernel::Chi),
        }
    }

    /// `nu(u) - nu(u + t)` for `u > 0`, `t >= 0`, computed without
    /// cancellation where a closed form allows.
    pub fn nu_increment(&self, u: f64, t: f64) -> CatalogResult<f64> {
        if t == 0.0 {
            return Ok(0.0);
        }
        match self {
            Self::Stable { alpha } => {
                let c = stable_c(*alpha);
                Ok(power_decrement(u, t, c) * rgamma(1.0 - c))
            }
            Self::DistributedOrderStable { components } if components[0].alpha < 1.0 => Ok(components
                .iter()
                .map(|k| {
                    let c = stable_c(k.alpha);
                    k.weight * power_decrement(u, t, c) * rgamma(1.0 - c)
                })
                .sum()),
            _ => Ok(self.nu(u)? - self.nu(u + t)?),
        }
    }

    /// `chi(u + t) - chi(u)` for `u >= 0`, `t >= 0`.
    pub fn chi_increment(&self, u: f64, t: f64) -> CatalogResult<f64> {
        if t == 0.0 {
            return Ok(0.0);
        }
        if u == 0.0 {
            return self.chi(t);
        }
        let stable_part = |c: f64| power_increment(u, t, c) * rgamma(1.0 + c);
        match self {
            Self::Stable { alpha } if *alpha != 1.0 => Ok(stable_part(stable_c(*alpha))),
            Self::DistributedOrderStable { components } if components[0].alpha > 1.0 => {
                Ok(components.iter().map(|k| k.weight * stable_part(stable_c(k.alpha))).sum())
            }
            Self::MittagLeffler { alpha, beta } => Ok(power_increment(u, t, alpha - beta + 1.0)
                * rgamma(2.0 - beta + alpha)
                + power_increment(u, t, 1.0 - beta) * rgamma(2.0 - beta)),
            Self::CompositeStable { beta, .. } if u > 1.0 => Ok(power_increment(u, t, 1.0 - beta) / (1.0 - beta)),
            Self::PowerLogKernel { .. } if u >= 1.0 => Ok((t / u).ln_1p()),
            Self::SqrtLogKernel if u >= std::f64::consts::E && t < 0.1 * u => {
                let tol = Tolerance::new(1e-300, 1e-13);
                Ok(gauss_kronrod(|z: f64| 1.0 / (z.sqrt() * z.ln()), u, u + t, tol)?.value)
            }
            _ => Ok(self.chi(u + t)? - self.chi(u)?),
        }
    }

    // -----------------------------------------------------------------------
    // Sonine residual

    /// `int_0^t nu(z) kappa(t - z) dz`; equal to one for a Sonine pair.
    pub fn sonine_residual(&self, t: f64) -> CatalogResult<f64> {
        check_positive(t, "sonine_residual")?;
        if !self.has(Kernel::Nu) {
            return self.unsupported(Kernel::Nu);
        }
        if !self.has(Kernel::Kappa) {
            return self.unsupported(Kernel::Kappa);
        }
        let tol = Tolerance::new(1e-14, 1e-11);
        let half = 0.5 * t;
        let mut bad = None;
        let mut guard = |r: CatalogResult<f64>| match r {
            Ok(v) => v,
            Err(e) => {
                bad.get_or_insert(e);
                0.0
            }
        };
        // nu singular at z = 0, kappa smooth there
        let first = tanh_sinh(|_, z, _| guard(self.nu(z)) * guard(self.kappa(t - z)), 0.0, half, tol)?;
        // kappa singular at w = 0: subtract nu(t) so the product stays bounded
        let nu_t = guard(self.nu(t));
        let second = tanh_sinh(
            |_, w, _| guard(self.nu_increment(t - w, w)) * guard(self.kappa(w)),
            0.0,
            half,
            tol,
        )?;
        let chi_half = guard(self.chi(half));
        if let Some(e) = bad {
            return Err(e);
        }
        Ok(first.value + second.value + nu_t * chi_half)
    }

    // -----------------------------------------------------------------------
    // Grammar

    fn param_list(&self) -> Vec<(String, String)> {
        let p = |k: &str, v: f64| (k.to_string(), format!("{v}"));
        match self {
            Self::Stable { alpha } => vec![p("alpha", *alpha)],
            Self::TemperedI { alpha, lambda } | Self::TemperedII { alpha, lambda } => {
                vec![p("alpha", *alpha), p("lambda", *lambda)]
            }
            Self::MittagLeffler { alpha, beta } | Self::CompositeStable { alpha, beta } => {
                vec![p("alpha", *alpha), p("beta", *beta)]
            }
            Self::DistributedOrderStable { components } => {
                let join = |f: &dyn Fn(&StableComponent) -> f64| {
                    components.iter().map(|c| format!("{}", f(c))).collect::<Vec<_>>().join("|")
                };
                vec![("alphas".into(), join(&|c| c.alpha)), ("weights".into(), join(&|c| c.weight))]
            }
            Self::PowerLogKernel { delta } => vec![p("delta", *delta)],
            Self::Gamma | Self::Exponential | Self::SqrtLogKernel => Vec::new(),
        }
    }
}

impl fmt::Display for BernsteinFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())?;
        let params = self.param_list();
        if !params.is_empty() {
            let body: Vec<String> = params.into_iter().map(|(k, v)| format!("{k}={v}")).collect();
            write!(f, ":{}", body.join(","))?;
        }
        Ok(())
    }
}

impl FromStr for BernsteinFamily {
    type Err = CatalogError;

    fn from_str(input: &str) -> Result<Self, Self::Err> {
        let err = |reason: &str| CatalogError::Parse { input: input.to_string(), reason: reason.to_string() };
        let s = input.trim();
        let (tag, rest) = match s.split_once(':') {
            Some((t, r)) => (t.trim(), r.trim()),
            None => (s, ""),
        };
        let mut params: Vec<(&str, &str)> = Vec::new();
        if !rest.is_empty() {
            for item in rest.split(',') {
                let (k, v) = item.split_once('=').ok_or_else(|| err("parameters must be key=value"))?;
                params.push((k.trim(), v.trim()));
            }
        }
        let get = |key: &str| -> Result<f64, CatalogError> {
            let v = params.iter().find(|(k, _)| *k == key).ok_or_else(|| err(&format!("missing `{key}`")))?;
            v.1.parse::<f64>().map_err(|_| err(&format!("`{key}` is not a number")))
        };
        let list = |key: &str| -> Result<Vec<f64>, CatalogError> {
            let v = params.iter().find(|(k, _)| *k == key).ok_or_else(|| err(&format!("missing `{key}`")))?;
            v.1.split('|')
                .map(|x| x.trim().parse::<f64>().map_err(|_| err(&format!("`{key}` has a non-numeric entry"))))
                .collect()
        };
        let allowed: &[&str] = match tag {
            "stable" => &["alpha"],
            "tempered1" | "tempered2" => &["alpha", "lambda"],
            "ml" | "composite" => &["alpha", "beta"],
            "distorder" => &["alphas", "weights"],
            "gamma" | "exponential" => &[],
            _ => return Err(err("unknown family")),
        };
        if let Some((k, _)) = params.iter().find(|(k, _)| !allowed.contains(k)) {
            return Err(err(&format!("unexpected parameter `{k}`")));
        }
        match tag {
            "stable" => Self::stable(get("alpha")?),
            "tempered1" => Self::tempered_i(get("alpha")?, get("lambda")?),
            "tempered2" => Self::tempered_ii(get("alpha")?, get("lambda")?),
            "ml" => Self::mittag_leffler(get("alpha")?, get("beta")?),
            "composite" => Self::composite(get("alpha")?, get("beta")?),
            "distorder" => {
                let a = list("alphas")?;
                let w = list("weights")?;
                if a.len() != w.len() {
                    return Err(err("alphas and weights differ in length"));
                }
                Self::distributed_order(
                    a.into_iter().zip(w).map(|(alpha, weight)| StableComponent { alpha, weight }).collect(),
                )
            }
            "gamma" => Ok(Self::Gamma),
            _ => Ok(Self::Exponential),
        }
    }
}

/// Evaluators of one family's Sonine pair, with their strategies.
#[derive(Clone, Copy, Debug)]
pub struct SoninePair<'a> {
    family: &'a BernsteinFamily,
}

impl SoninePair<'_> {
    pub fn nu_bar(&self, s: f64) -> CatalogResult<f64> {
        self.family.nu_bar(s)
    }
    pub fn nu(&self, s: f64) -> CatalogResult<f64> {
        self.family.nu(s)
    }
    pub fn kappa(&self, s: f64) -> CatalogResult<f64> {
        self.family.kappa(s)
    }
    pub fn chi(&self, s: f64) -> CatalogResult<f64> {
        self.family.chi(s)
    }
    pub fn strategy(&self, kernel: Kernel) -> Option<Strategy> {
        self.family.strategy(kernel)
    }
}

/// `phi(theta)` for a family.
pub fn phi(family: &BernsteinFamily, theta: f64) -> CatalogResult<f64> {
    family.phi(theta)
}

/// `|phi(ix)|^2` for a family.
pub fn phi_mod2(family: &BernsteinFamily, x: f64) -> CatalogResult<f64> {
    family.phi_mod2(x)
}

/// `int_0^t nu(z) kappa(t - z) dz`.
pub fn sonine_residual(family: &BernsteinFamily, t: f64) -> CatalogResult<f64> {
    family.sonine_residual(t)
}

/// Default instance of every CLI family, paired with the flavors it supports.
pub fn default_catalog() -> Vec<(BernsteinFamily, Flavor)> {
    use BernsteinFamily as B;
    let comp = |pairs: &[(f64, f64)]| {
        B::DistributedOrderStable {
            components: pairs.iter().map(|&(alpha, weight)| StableComponent { alpha, weight }).collect(),
        }
    };
    vec![
        (B::Stable { alpha: 0.5 }, Flavor::Derivative),
        (comp(&[(0.3, 0.5), (0.6, 0.5)]), Flavor::Derivative),
        (B::TemperedI { alpha: 0.5, lambda: 1.0 }, Flavor::Derivative),
        (B::TemperedII { alpha: 0.4, lambda: 1.0 }, Flavor::Derivative),
        (B::MittagLeffler { alpha: 0.3, beta: 0.7 }, Flavor::Derivative),
        (B::Gamma, Flavor::Derivative),
        (B::Exponential, Flavor::Derivative),
        (B::Stable { alpha: 1.5 }, Flavor::Integral),
        (comp(&[(1.3, 0.5), (1.6, 0.5)]), Flavor::Integral),
        (B::MittagLeffler { alpha: 0.2, beta: 0.8 }, Flavor::Integral),
        (B::CompositeStable { alpha: 0.4, beta: 0.8 }, Flavor::Integral),
    ]
}

// ---------------------------------------------------------------------------
// Condition probes

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    Indeterminate,
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
            CheckStatus::Indeterminate => "indeterminate",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionCheck {
    pub status: CheckStatus,
    /// Fitted log-log slopes used by the probe.
    pub exponents: Vec<f64>,
}

impl ConditionCheck {
    fn new(status: CheckStatus, exponents: Vec<f64>) -> Self {
        Self { status, exponents }
    }

    fn and(self, other: Self) -> Self {
        use CheckStatus::*;
        let status = match (self.status, other.status) {
            (Fail, _) | (_, Fail) => Fail,
            (Indeterminate, _) | (_, Indeterminate) => Indeterminate,
            _ => Pass,
        };
        let mut exponents = self.exponents;
        exponents.extend(other.exponents);
        Self { status, exponents }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport {
    pub cond_c: ConditionCheck,
    pub cond_k: ConditionCheck,
    pub a1: ConditionCheck,
    pub a2: ConditionCheck,
    pub b1: ConditionCheck,
    pub b2: ConditionCheck,
    pub notes: Vec<String>,
}

impl ConditionReport {
    /// Whether the integrability conditions gating `flavor` are not failed.
    pub fn admits(&self, flavor: Flavor) -> bool {
        let (x, y) = match flavor {
            Flavor::Derivative => (&self.a1, &self.a2),
            Flavor::Integral => (&self.b1, &self.b2),
        };
        x.status == CheckStatus::Pass && y.status == CheckStatus::Pass
    }
}

/// Least-squares slope of `ln f` against `ln x` on 13 points spanning three
/// decades starting at `10^lo_exp`.
#[derive(Clone, Copy, Debug)]
struct PowerFit {
    slope: f64,
    r2: f64,
    /// All samples were zero (super-polynomial decay or identically zero).
    vanished: bool,
}

fn power_fit<F: Fn(f64) -> CatalogResult<f64>>(f: F, lo_exp: f64) -> Option<PowerFit> {
    const N: usize = 13;
    let mut xs = Vec::with_capacity(N);
    let mut ys = Vec::with_capacity(N);
    let mut zeros = 0;
    for i in 0..N {
        let e = lo_exp + 3.0 * i as f64 / (N - 1) as f64;
        let x = 10f64.powf(e);
        let v = f(x).ok()?.abs();
        if !v.is_finite() {
            return None;
        }
        if v == 0.0 {
            zeros += 1;
            continue;
        }
        xs.push(x.ln());
        ys.push(v.ln());
    }
    if zeros == N {
        return Some(PowerFit { slope: f64::NEG_INFINITY, r2: 1.0, vanished: true });
    }
    if xs.len() < 4 {
        // mostly underflowed: decays faster than any power
        return Some(PowerFit { slope: f64::NEG_INFINITY, r2: 1.0, vanished: true });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    // a nearly flat log-profile is a good power fit even when r^2 is noisy
    let ss_res = (syy - sxy * sxy / sxx).max(0.0);
    let r2 = if syy <= 1e-24 * n || (ss_res / n).sqrt() <= 1e-3 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Some(PowerFit { slope, r2, vanished: false })
}

const SLOPE_MARGIN: f64 = 0.01;
const R2_MIN: f64 = 0.99;
const SUPER_POLY: f64 = -10.0;

/// `f^q` integrable near zero.
fn integrable_at_zero<F: Fn(f64) -> CatalogResult<f64>>(f: F, q: f64) -> ConditionCheck {
    match power_fit(f, -7.0) {
        None => ConditionCheck::new(CheckStatus::Indeterminate, vec![]),
        Some(fit) if fit.vanished => ConditionCheck::new(CheckStatus::Pass, vec![0.0]),
        Some(fit) if fit.r2 < R2_MIN => ConditionCheck::new(CheckStatus::Indeterminate, vec![fit.slope]),
        Some(fit) => {
            let e = q * fit.slope;
            let status = if e > -1.0 + SLOPE_MARGIN {
                CheckStatus::Pass
            } else if e < -1.0 - SLOPE_MARGIN {
                CheckStatus::Fail
            } else {
                CheckStatus::Indeterminate
            };
            ConditionCheck::new(status, vec![fit.slope])
        }
    }
}

/// `f^q` integrable at infinity.
pub(crate) fn integrable_at_infinity<F: Fn(f64) -> CatalogResult<f64>>(f: F, q: f64) -> ConditionCheck {
    match power_fit(f, 4.0) {
        None => ConditionCheck::new(CheckStatus::Indeterminate, vec![]),
        Some(fit) if fit.vanished || fit.slope < SUPER_POLY => ConditionCheck::new(CheckStatus::Pass, vec![fit.slope]),
        Some(fit) if fit.r2 < R2_MIN => ConditionCheck::new(CheckStatus::Indeterminate, vec![fit.slope]),
        Some(fit) => {
            let e = q * fit.slope;
            let status = if e < -1.0 - SLOPE_MARGIN {
                CheckStatus::Pass
            } else if e > -1.0 + SLOPE_MARGIN {
                CheckStatus::Fail
            } else {
                CheckStatus::Indeterminate
            };
            ConditionCheck::new(status, vec![fit.slope])
        }
    }
}

/// `f -> 0` (sign = -1) or `f -> inf` (sign = +1) as a power near `10^lo_exp`.
fn power_limit<F: Fn(f64) -> CatalogResult<f64>>(f: F, lo_exp: f64, want_growth_in_x: bool) -> ConditionCheck {
    match power_fit(f, lo_exp) {
        None => ConditionCheck::new(CheckStatus::Indeterminate, vec![]),
        Some(fit) if fit.vanished => {
            let status = if want_growth_in_x { CheckStatus::Fail } else { CheckStatus::Pass };
            ConditionCheck::new(status, vec![f64::NEG_INFINITY])
        }
        Some(fit) if fit.r2 < R2_MIN && fit.slope.abs() > SLOPE_MARGIN => {
            ConditionCheck::new(CheckStatus::Indeterminate, vec![fit.slope])
        }
        Some(fit) => {
            let ok = if want_growth_in_x { fit.slope > SLOPE_MARGIN } else { fit.slope < -SLOPE_MARGIN };
            let status = if ok { CheckStatus::Pass } else { CheckStatus::Fail };
            ConditionCheck::new(status, vec![fit.slope])
        }
    }
}

fn missing_kernel(notes: &mut Vec<String>, cond: &str, kernel: Kernel) -> ConditionCheck {
    notes.push(format!("{cond}: no {kernel} evaluator for this family"));
    ConditionCheck::new(CheckStatus::Indeterminate, vec![])
}

/// Probes conditions (C), (K), (A1)-(A2) and (B1)-(B2) numerically, then
/// applies the parameter restrictions each family declares.
pub fn check_conditions(family: &BernsteinFamily, flavor: Flavor) -> ConditionReport {
    let mut notes = Vec::new();
    let phi = |t: f64| family.phi(t);
    let phi_over = |t: f64| family.phi(t).map(|p| p / t);
    // phi -> 0 at 0 means slope > 0 near 0; phi -> inf at inf means slope > 0
    let cond_c = power_limit(phi, -8.0, true).and(power_limit(phi, 5.0, true));
    let cond_k = power_limit(phi_over, -8.0, false).and(power_limit(phi_over, 5.0, false));

    let a1 = if family.has(Kernel::NuBar) {
        integrable_at_infinity(|s| family.nu_bar(s), 2.0)
    } else {
        missing_kernel(&mut notes, "A1", Kernel::NuBar)
    };
    let a2 = if family.has(Kernel::Nu) {
        // L^p(1, inf) for some p >= 1 holds as soon as nu decays like a power
        let tail = match power_fit(|s| family.nu(s), 4.0) {
            None => ConditionCheck::new(CheckStatus::Indeterminate, vec![]),
            Some(f) if f.vanished => ConditionCheck::new(CheckStatus::Pass, vec![f64::NEG_INFINITY]),
            Some(f) if f.r2 < R2_MIN => ConditionCheck::new(CheckStatus::Indeterminate, vec![f.slope]),
            Some(f) => ConditionCheck::new(
                if f.slope < -SLOPE_MARGIN { CheckStatus::Pass } else { CheckStatus::Fail },
                vec![f.slope],
            ),
        };
        integrable_at_zero(|s| family.nu(s), 2.0).and(tail)
    } else {
        missing_kernel(&mut notes, "A2", Kernel::Nu)
    };
    let b1 = if family.has(Kernel::Kappa) {
        integrable_at_zero(|s| family.kappa(s), 1.0).and(integrable_at_infinity(|s| family.kappa(s), 2.0))
    } else {
        missing_kernel(&mut notes, "B1", Kernel::Kappa)
    };
    let b2 = if family.has(Kernel::Chi) {
        integrable_at_zero(|s| family.chi(s), 2.0)
    } else {
        missing_kernel(&mut notes, "B2", Kernel::Chi)
    };
    let mut report = ConditionReport { cond_c, cond_k, a1, a2, b1, b2, notes };
    apply_declared_constraints(family, flavor, &mut report);
    report
}

fn apply_declared_constraints(family: &BernsteinFamily, flavor: Flavor, r: &mut ConditionReport) {
    let fail = |c: &mut ConditionCheck| c.status = CheckStatus::Fail;
    match family {
        BernsteinFamily::Stable { alpha } => {
            if *alpha > 1.0 {
                fail(&mut r.a1);
                fail(&mut r.a2);
                r.notes.push("A1/A2: for alpha > 1 the derivative-type tail would not be non-increasing; use the integral flavor".into());
            } else {
                fail(&mut r.b1);
                fail(&mut r.b2);
                r.notes.push("B1/B2: stable alpha <= 1 is defined through the derivative flavor only".into());
            }
            if *alpha == 1.0 {
                r.a2.status = CheckStatus::Pass;
                r.notes.push("A2: alpha = 1 admitted as the Brownian boundary case (nu = 1, kernel 1_[0,t))".into());
            }
        }
        BernsteinFamily::DistributedOrderStable { components } => {
            if components[0].alpha > 1.0 {
                fail(&mut r.a1);
                fail(&mut r.a2);
                r.notes.push("A1/A2: alphas in (1, 2) are defined through the integral flavor only".into());
            }
        }
        BernsteinFamily::CompositeStable { alpha, .. } if *alpha >= 2.0 / 3.0 => {
            fail(&mut r.b2);
            r.notes.push(format!("B2: composite family requires alpha < 2/3 (alpha = {alpha})"));
        }
        _ => {}
    }
    if flavor == Flavor::Derivative && r.cond_k.status != CheckStatus::Pass {
        r.notes.push("K: not required for the derivative flavor".into());
    }
}

// ---------------------------------------------------------------------------
// Helpers

fn check_positive(s: f64, what: &str) -> CatalogResult<()> {
    if s > 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(CatalogError::Domain(format!("{what} needs a positive finite argument, got {s}")))
    }
}

/// Exponent `c = |1 - alpha| / 2` of the stable Bernstein function.
pub fn stable_c(alpha: f64) -> f64 {
    (1.0 - alpha).abs() / 2.0
}

/// `u^{-c} - (u + t)^{-c}` without cancellation.
fn power_decrement(u: f64, t: f64, c: f64) -> f64 {
    -u.powf(-c) * (-c * (t / u).ln_1p()).exp_m1()
}

/// `(u + t)^p - u^p` without cancellation.
fn power_increment(u: f64, t: f64, p: f64) -> f64 {
    u.powf(p) * (p * (t / u).ln_1p()).exp_m1()
}

/// `(i x)^p` on the principal branch.
fn imag_power(x: f64, p: f64) -> Complex64 {
    let arg = x.signum() * std::f64::consts::FRAC_PI_2 * p;
    Complex64::from_polar(x.abs().powf(p), arg)
}

fn complex_ln1p(w: Complex64) -> Complex64 {
    if w.norm() < 1e-4 {
        // w - w^2/2 + w^3/3 - w^4/4
        w * (1.0 - w * (0.5 - w * (1.0 / 3.0 - 0.25 * w)))
    } else {
        (1.0 + w).ln()
    }
}

fn complex_expm1(w: Complex64) -> Complex64 {
    if w.norm() < 1e-4 {
        w * (1.0 + w * (0.5 + w * (1.0 / 6.0 + w / 24.0)))
    } else {
        w.exp() - 1.0
    }
}

fn composite_chi(alpha: f64, beta: f64, s: f64) -> f64 {
    if s <= 1.0 {
        s.powf(1.0 - alpha) / (1.0 - alpha)
    } else {
        let k = (alpha - beta) / ((1.0 - alpha) * (1.0 - beta));
        k + s.powf(1.0 - beta) / (1.0 - beta)
    }
}

/// Laplace transform of the composite kernel at real `theta > 0`;
/// `beta = 1` gives the power-log kernel.
fn composite_laplace(alpha: f64, beta: f64, theta: f64) -> CatalogResult<f64> {
    let head = theta.powf(alpha - 1.0) * gamma_inc_lower(1.0 - alpha, theta)?.value;
    let tail = if theta > 700.0 {
        0.0
    } else {
        theta.powf(beta - 1.0) * gamma_inc_upper(1.0 - beta, theta)?.value
    };
    Ok(head + tail)
}

/// `int_1^inf z^{-p} e^{-i x z} dz` for `x > 0` and `0 < p <= 1`. Rotating
/// the contour onto `z = 1 - i v / x` gives
/// `-i e^{-ix} x^{p-1} int_0^inf (x - i v)^{-p} e^{-v} dv`, which is
/// non-oscillatory and stays accurate for tiny `x`.
fn oscillatory_power_tail(p: f64, x: f64) -> CatalogResult<Complex64> {
    let tol = Tolerance::new(1e-300, 1e-12);
    let modulus = |v: f64| (-p * x.hypot(v).ln() - v).exp();
    let re = exp_sinh(|v: f64, _| modulus(v) * (p * v.atan2(x)).cos(), 0.0, 1.0, tol)?.value;
    let im = exp_sinh(|v: f64, _| modulus(v) * (p * v.atan2(x)).sin(), 0.0, 1.0, tol)?.value;
    let rotated = Complex64::new(re, im) * x.powf(p - 1.0);
    Ok(Complex64::new(0.0, -1.0) * Complex64::from_polar(1.0, -x) * rotated)
}

/// `int_0^1 z^{-p} e^{-i x z} dz` for `x > 0`, `p < 1`.
fn power_head(p: f64, x: f64) -> CatalogResult<Complex64> {
    if x <= 2.0 {
        // sum_k (-ix)^k / (k! (k + 1 - p))
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term / (1.0 - p);
        for k in 1..60 {
            term *= Complex64::new(0.0, -x) / k as f64;
            let add = term / (k as f64 + 1.0 - p);
            sum += add;
            if add.norm() <= 1e-17 * sum.norm() {
                break;
            }
        }
        Ok(sum)
    } else {
        Ok(gamma(1.0 - p)?.value * imag_power(x, p - 1.0) - oscillatory_power_tail(p, x)?)
    }
}

/// `kappa~(ix)` for the composite kernel.
fn composite_laplace_imag(alpha: f64, beta: f64, x: f64) -> CatalogResult<Complex64> {
    let w = x.abs();
    let v = power_head(alpha, w)? + oscillatory_power_tail(beta, w)?;
    Ok(if x < 0.0 { v.conj() } else { v })
}

fn sqrtlog_chi(s: f64) -> CatalogResult<f64> {
    let e = std::f64::consts::E;
    if s < e {
        return Ok(2.0 * s.sqrt());
    }
    // int_e^s dz / (sqrt z ln z) = li(sqrt s) - li(sqrt e), li(y) = Ei(ln y)
    let tail = exp_integral_ei(0.5 * s.ln())?.value - exp_integral_ei(0.5)?.value;
    Ok(2.0 * e.sqrt() + tail)
}

fn sqrtlog_laplace(theta: f64) -> CatalogResult<f64> {
    let e = std::f64::consts::E;
    let head = theta.powf(-0.5) * gamma_inc_lower(0.5, e * theta)?.value;
    let tol = Tolerance::new(1e-300, 1e-12);
    let tail = exp_sinh(|z: f64, _| (-theta * z).exp() / (z.sqrt() * z.ln()), e, 1.0 / theta, tol)?.value;
    Ok(head + tail)
}

/// Associate kernel of the Gamma subordinator,
/// `kappa(x) = int_{-1}^0 gamma(y, x) / Gamma(y) dy`, where the integrand is
/// the regularized lower incomplete gamma continued to negative order.
fn gamma_kappa(x: f64) -> CatalogResult<f64> {
    let tol = Tolerance::new(1e-300, 1e-12);
    let mut bad = None;
    let r = tanh_sinh(
        |_, dl: f64, _| match regularized_gamma_p_shifted(dl, x) {
            Ok(v) => v,
            Err(e) => {
                bad.get_or_insert(e);
                0.0
            }
        },
        -1.0,
        0.0,
        tol,
    )?;
    if let Some(e) = bad {
        return Err(e.into());
    }
    Ok(r.value)
}

/// `chi(x) = int_0^inf P(a, x) da` for the Gamma subordinator.
fn gamma_chi(x: f64) -> CatalogResult<f64> {
    let tol = Tolerance::new(1e-300, 1e-12);
    let split = x + 6.0 * x.sqrt() + 6.0;
    let mut bad = None;
    let mut p = |a: f64| match regularized_gamma_p_shifted(a + 1.0, x) {
        Ok(v) => v,
        Err(e) => {
            bad.get_or_insert(e);
            0.0
        }
    };
    let head = tanh_sinh(|a, _, _| p(a), 0.0, split, tol)?.value;
    let tail = exp_sinh(|a, _| p(a), split, 1.0 + x.sqrt(), tol)?.value;
    if let Some(e) = bad {
        return Err(e.into());
    }
    Ok(head + tail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grammar_round_trip() {
        for s in [
            "stable:alpha=0.5",
            "tempered1:alpha=0.5,lambda=1",
            "tempered2:alpha=0.5,lambda=1",
            "ml:alpha=0.3,beta=0.7",
            "gamma",
            "exponential",
            "composite:alpha=0.4,beta=0.8",
            "distorder:alphas=0.3|0.6,weights=0.5|0.5",
        ] {
            let f: BernsteinFamily = s.parse().unwrap();
            assert_eq!(f.to_string(), s);
        }
        assert!("stable:alpha=2.5".parse::<BernsteinFamily>().is_err());
        assert!("ml:alpha=0.7,beta=0.3".parse::<BernsteinFamily>().is_err());
        assert!("distorder:alphas=0.3|1.6,weights=0.5|0.5".parse::<BernsteinFamily>().is_err());
        assert!("distorder:alphas=0.3|0.6,weights=0.5|0.4".parse::<BernsteinFamily>().is_err());
        assert!("stable:beta=0.5".parse::<BernsteinFamily>().is_err());
        assert!("weibull".parse::<BernsteinFamily>().is_err());
    }

    #[test]
    fn phi_examples() {
        assert_relative_eq!(BernsteinFamily::Stable { alpha: 0.5 }.phi(4.0).unwrap(), 2f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(BernsteinFamily::Gamma.phi(1.0).unwrap(), 2f64.ln(), max_relative = 1e-15);
    }

    #[test]
    fn phi_mod2_examples() {
        assert_relative_eq!(BernsteinFamily::Stable { alpha: 0.5 }.phi_mod2(4.0).unwrap(), 2.0, max_relative = 1e-14);
        assert_relative_eq!(BernsteinFamily::Exponential.phi_mod2(1.0).unwrap(), 0.5, max_relative = 1e-14);
        let g = BernsteinFamily::Gamma.phi_mod2(1.0).unwrap();
        let want = 0.25 * 2f64.ln().powi(2) + std::f64::consts::FRAC_PI_4.powi(2);
        assert_relative_eq!(g, want, max_relative = 1e-14);
        assert_relative_eq!(g, 0.736_963_528_5, max_relative = 1e-9);
        assert_relative_eq!(BernsteinFamily::Gamma.phi_mod2_quadrature(1.0).unwrap(), want, max_relative = 1e-7);
    }

    #[test]
    fn kernel_examples() {
        let s = BernsteinFamily::Stable { alpha: 0.5 };
        assert_relative_eq!(s.nu(1.0).unwrap(), 1.0 / gamma(0.75).unwrap().value, max_relative = 1e-14);
        assert_relative_eq!(s.nu(1.0).unwrap(), 0.816_048_939_1, max_relative = 1e-9);
        assert_relative_eq!(BernsteinFamily::Gamma.nu(1.0).unwrap(), 0.219_383_934_395_520_27, max_relative = 1e-13);
        let c = BernsteinFamily::CompositeStable { alpha: 0.4, beta: 0.8 };
        assert_relative_eq!(c.chi(1.0).unwrap(), 1.0 / 0.6, max_relative = 1e-15);
        assert!(matches!(
            BernsteinFamily::TemperedI { alpha: 0.5, lambda: 1.0 }.kappa(1.0),
            Err(CatalogError::UnsupportedEvaluator { .. })
        ));
    }

    #[test]
    fn gamma_kappa_reference() {
        // kappa(x) = e^{-x} int_0^inf x^{t-1} / Gamma(t) dt, evaluated independently
        for (x, want) in [(0.001, 22.784_351_842_00), (0.1, 1.664_394_555_436_85), (1.0, 1.032_920_947_575_26)] {
            assert_relative_eq!(BernsteinFamily::Gamma.kappa(x).unwrap(), want, max_relative = 1e-10);
        }
    }

    #[test]
    fn sonine_closed_forms() {
        let s = BernsteinFamily::Stable { alpha: 0.5 };
        for t in [1.0, 7.3] {
            assert!((s.sonine_residual(t).unwrap() - 1.0).abs() < 1e-8);
        }
        let ml = BernsteinFamily::MittagLeffler { alpha: 0.3, beta: 0.7 };
        assert!((ml.sonine_residual(1.0).unwrap() - 1.0).abs() < 1e-5);
    }

    #[test]
    fn condition_truth_table() {
        use CheckStatus::*;
        let r = check_conditions(&BernsteinFamily::Stable { alpha: 0.5 }, Flavor::Derivative);
        assert_eq!((r.a1.status, r.a2.status), (Pass, Pass));
        let r = check_conditions(&BernsteinFamily::Gamma, Flavor::Derivative);
        assert_eq!(r.cond_k.status, Fail);
        assert_eq!((r.a1.status, r.a2.status), (Pass, Pass));
        let r = check_conditions(&BernsteinFamily::CompositeStable { alpha: 0.7, beta: 0.8 }, Flavor::Integral);
        assert_eq!(r.b2.status, Fail);
        let r = check_conditions(&BernsteinFamily::Stable { alpha: 1.5 }, Flavor::Derivative);
        assert_eq!(r.a1.status, Fail);
        let r = check_conditions(&BernsteinFamily::Exponential, Flavor::Derivative);
        assert_eq!(r.cond_c.status, Fail);
    }
}
