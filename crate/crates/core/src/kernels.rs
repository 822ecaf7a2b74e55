//! Mandelbrot-Van Ness kernels of the Bernstein-Gaussian motion and the
//! generalized fractional operators applied to indicators and test functions.
//!
//! For a family with tail `nu` and associate kernel `kappa` (and
//! `chi = int kappa`) the unnormalized kernels are
//!
//! * derivative flavor: `k_raw(t, u) = nu((t-u)_+) - nu((-u)_+)`
//! * integral flavor: `k_raw(t, u) = chi((t-u)_+) - chi((-u)_+)`
//!
//! where a vanishing positive part contributes zero. The process kernel is
//! `k = sqrt(C) k_raw` with `C = 1 / int k_raw(1, u)^2 du`, so `Var(B_1) = 1`.

use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use crate::catalog::{check_conditions, BernsteinFamily, ConditionReport, Flavor, Kernel};
use crate::error::{Error, Result};
use crate::numerics::{decades, integrate_from, Memo, Trap};
use crate::quad::{fourier_half_line, gauss_kronrod, tanh_sinh, Estimate, QuadError, Tolerance, Trig};

/// Relative accuracy of the variance integrals behind `C` and `V(t)`.
pub(crate) const VARIANCE_RTOL: f64 = 1e-11;

struct SpecInner {
    family: BernsteinFamily,
    flavor: Flavor,
    conditions: ConditionReport,
    normalization: OnceLock<Result<f64>>,
    raw_parts: Memo<(f64, f64)>,
    pub(crate) fourier_scale: OnceLock<Result<f64>>,
}

/// A family together with the operator flavor that builds the process.
/// Cloning is cheap and clones share the cached normalization and variances.
#[derive(Clone)]
pub struct ProcessSpec {
    inner: Arc<SpecInner>,
}

impl fmt::Debug for ProcessSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProcessSpec")
            .field("family", &self.inner.family)
            .field("flavor", &self.inner.flavor)
            .finish()
    }
}

impl fmt::Display for ProcessSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.inner.family, self.inner.flavor)
    }
}

impl ProcessSpec {
    /// Validates the flavor against the family's kernels and the integrability
    /// conditions gating it: (A1)-(A2) for the derivative flavor, (B1)-(B2) for
    /// the integral flavor. Both must pass.
    pub fn new(family: BernsteinFamily, flavor: Flavor) -> Result<Self> {
        let needed: &[Kernel] = match flavor {
            Flavor::Derivative => &[Kernel::Nu],
            Flavor::Integral => &[Kernel::Kappa, Kernel::Chi],
        };
        for &k in needed {
            if !family.has(k) {
                return Err(Error::InvalidFlavor { family: family.to_string(), flavor, kernel: k });
            }
        }
        let conditions = check_conditions(&family, flavor);
        if !conditions.admits(flavor) {
            let (x, y, nx, ny) = match flavor {
                Flavor::Derivative => (&conditions.a1, &conditions.a2, "A1", "A2"),
                Flavor::Integral => (&conditions.b1, &conditions.b2, "B1", "B2"),
            };
            let mut detail = format!("{nx} {}, {ny} {}", x.status, y.status);
            if !conditions.notes.is_empty() {
                detail.push_str("; ");
                detail.push_str(&conditions.notes.join("; "));
            }
            return Err(Error::ConditionsNotMet { family: family.to_string(), flavor, detail });
        }
        Ok(Self {
            inner: Arc::new(SpecInner {
                family,
                flavor,
                conditions,
                normalization: OnceLock::new(),
                raw_parts: Memo::default(),
                fourier_scale: OnceLock::new(),
            }),
        })
    }

    /// Parses the family grammar and the flavor name.
    pub fn parse(family: &str, flavor: &str) -> Result<Self> {
        Self::new(family.parse()?, flavor.parse()?)
    }

    pub fn family(&self) -> &BernsteinFamily {
        &self.inner.family
    }

    pub fn flavor(&self) -> Flavor {
        self.inner.flavor
    }

    pub fn conditions(&self) -> &ConditionReport {
        &self.inner.conditions
    }

    pub(crate) fn fourier_scale_cell(&self) -> &OnceLock<Result<f64>> {
        &self.inner.fourier_scale
    }

    /// Normalization constant `C = 1 / int k_raw(1, u)^2 du`, computed once.
    pub fn normalization(&self) -> Result<f64> {
        self.inner
            .normalization
            .get_or_init(|| {
                let (p1, p2) = self.raw_parts(1.0)?;
                let total = p1 + p2;
                if !(total > 0.0 && total.is_finite()) {
                    return Err(Error::Divergent(format!("int k_raw(1,u)^2 du = {total}")));
                }
                Ok(1.0 / total)
            })
            .clone()
    }

    /// Unnormalized variance parts at `t`: the integral of `k_raw(t, u)^2`
    /// over `u < 0` and over `0 < u < t`.
    pub(crate) fn raw_parts(&self, t: f64) -> Result<(f64, f64)> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!("time must be finite and >= 0, got {t}")));
        }
        if t == 0.0 {
            return Ok((0.0, 0.0));
        }
        self.inner.raw_parts.get_or_compute(t, || raw_variance_parts(&self.inner.family, self.inner.flavor, t))
    }

    /// `k_raw` pieces: the tail kernel at a positive argument.
    pub(crate) fn tail(&self, x: f64) -> Result<f64> {
        Ok(match self.inner.flavor {
            Flavor::Derivative => self.inner.family.nu(x)?,
            Flavor::Integral => self.inner.family.chi(x)?,
        })
    }

    /// `g(y + t) - g(y)` for the flavor's kernel `g` (negative in the
    /// derivative flavor), with `y > 0`.
    pub(crate) fn tail_increment(&self, y: f64, t: f64) -> Result<f64> {
        Ok(match self.inner.flavor {
            Flavor::Derivative => -self.inner.family.nu_increment(y, t)?,
            Flavor::Integral => self.inner.family.chi_increment(y, t)?,
        })
    }
}

/// Cut points for integrals of kernel products over `[0, inf)` when the
/// kernels are shifted by `shifts`.
pub(crate) fn cut_points(family: &BernsteinFamily, shifts: &[f64]) -> Vec<f64> {
    let top = shifts.iter().fold(1.0f64, |m, s| m.max(*s));
    let mut cuts = decades(1e-2, 10.0 * top);
    for &s in shifts {
        if s > 0.0 {
            cuts.push(s);
            cuts.push(2.0 * s);
        }
    }
    for b in family.breakpoints() {
        cuts.push(b);
        for &s in shifts {
            if b > s {
                cuts.push(b - s);
            }
        }
    }
    cuts
}

pub(crate) fn variance_tol() -> Tolerance<f64> {
    Tolerance::new(0.0, VARIANCE_RTOL)
}

/// `(part1, part2)` of `int k_raw(t, u)^2 du`:
/// derivative flavor `int_0^inf [nu(u) - nu(t+u)]^2 du` and `int_0^t nu(u)^2 du`,
/// integral flavor `int_0^inf [chi(t+u) - chi(u)]^2 du` and `int_0^t chi(u)^2 du`.
fn raw_variance_parts(family: &BernsteinFamily, flavor: Flavor, t: f64) -> Result<(f64, f64)> {
    let tol = variance_tol();
    let cuts = cut_points(family, &[t]);
    let trap = Trap::default();
    let (p1, p2) = match flavor {
        Flavor::Derivative => {
            let p1 = integrate_from(|u| trap.get(family.nu_increment(u, t)).powi(2), 0.0, &cuts, true, 0.0, tol);
            let p1 = trap.finish(p1)?;
            let p2 = integrate_from(|u| trap.get(family.nu(u)).powi(2), 0.0, &cuts, false, t, tol);
            (p1, trap.finish(p2)?)
        }
        Flavor::Integral => {
            let p1 = integrate_from(|u| trap.get(family.chi_increment(u, t)).powi(2), 0.0, &cuts, true, 0.0, tol);
            let p1 = trap.finish(p1)?;
            let p2 = integrate_from(|u| trap.get(family.chi(u)).powi(2), 0.0, &cuts, false, t, tol);
            (p1, trap.finish(p2)?)
        }
    };
    if !p1.value.is_finite() || !p2.value.is_finite() {
        return Err(Error::Divergent(format!("variance parts at t = {t} are not finite")));
    }
    Ok((p1.value, p2.value))
}

/// Normalization constant `C` of the spec.
pub fn normalization_constant(spec: &ProcessSpec) -> Result<f64> {
    spec.normalization()
}

/// Unnormalized kernel `k_raw(t, u)`; `+inf` at `u = t` when the derivative
/// kernel is singular there.
pub fn kernel_raw(spec: &ProcessSpec, t: f64, u: f64) -> Result<f64> {
    if !(t >= 0.0) || !t.is_finite() || u.is_nan() {
        return Err(Error::InvalidArgument(format!("kernel needs t >= 0 and a real u, got t = {t}, u = {u}")));
    }
    if t == 0.0 || u > t {
        return Ok(0.0);
    }
    if u == t {
        let singular = spec.flavor() == Flavor::Derivative && spec.family().nu_singular_at_zero();
        return Ok(if singular { f64::INFINITY } else { 0.0 });
    }
    if u < 0.0 {
        spec.tail_increment(-u, t)
    } else {
        spec.tail(t - u)
    }
}

/// Process kernel `k(t, u) = sqrt(C) k_raw(t, u)`.
pub fn kernel_eval(spec: &ProcessSpec, t: f64, u: f64) -> Result<f64> {
    let raw = kernel_raw(spec, t, u)?;
    if raw == 0.0 || raw.is_infinite() {
        return Ok(raw);
    }
    Ok(spec.normalization()?.sqrt() * raw)
}

/// Operator image of the indicator of `[a, b)` at `x`, without the
/// normalization constant: `nu((b-x)_+) - nu((a-x)_+)` in the derivative
/// flavor and `chi((b-x)_+) - chi((a-x)_+)` in the integral flavor.
pub fn gfo_indicator(spec: &ProcessSpec, a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a < b) || !a.is_finite() || !b.is_finite() || x.is_nan() {
        return Err(Error::InvalidArgument(format!("indicator needs a < b, got [{a}, {b})")));
    }
    if x >= b {
        return Ok(0.0);
    }
    if x < a {
        return spec.tail_increment(a - x, b - a);
    }
    spec.tail(b - x)
}

/// Smooth test functions for the operators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TestFunction {
    /// `amplitude * exp(-((x - center) / width)^2)`.
    Gaussian { center: f64, width: f64, amplitude: f64 },
    /// `sin(omega x + phase)`.
    Sine { omega: f64, phase: f64 },
    Zero,
}

impl TestFunction {
    pub fn gaussian(center: f64, width: f64) -> Self {
        TestFunction::Gaussian { center, width, amplitude: 1.0 }
    }

    pub fn value(&self, x: f64) -> f64 {
        match *self {
            TestFunction::Gaussian { center, width, amplitude } => {
                let z = (x - center) / width;
                amplitude * (-z * z).exp()
            }
            TestFunction::Sine { omega, phase } => (omega * x + phase).sin(),
            TestFunction::Zero => 0.0,
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            TestFunction::Gaussian { center, width, .. } => {
                -2.0 * (x - center) / (width * width) * self.value(x)
            }
            TestFunction::Sine { omega, phase } => omega * (omega * x + phase).cos(),
            TestFunction::Zero => 0.0,
        }
    }

    /// Interval outside of which a Gaussian is below the smallest normal
    /// double.
    fn support(&self) -> Option<(f64, f64)> {
        match *self {
            TestFunction::Gaussian { center, width, .. } => Some((center - 28.0 * width, center + 28.0 * width)),
            _ => None,
        }
    }
}

fn smooth_tol() -> Tolerance<f64> {
    Tolerance::new(1e-12, 1e-10)
}

/// Left-sided (Weyl-type) operator applied to a test function, without the
/// normalization constant: `int_0^inf f'(x - s) nu(s) ds` in the derivative
/// flavor and `int_0^inf f(x - s) kappa(s) ds` in the integral flavor.
pub fn gfo_apply_smooth(spec: &ProcessSpec, f: &TestFunction, x: f64) -> Result<f64> {
    let family = spec.family();
    let flavor = spec.flavor();
    let kernel = |s: f64| -> Result<f64> {
        Ok(match flavor {
            Flavor::Derivative => family.nu(s)?,
            Flavor::Integral => family.kappa(s)?,
        })
    };
    let weight = |y: f64| match flavor {
        Flavor::Derivative => f.derivative(y),
        Flavor::Integral => f.value(y),
    };
    match *f {
        TestFunction::Zero => Ok(0.0),
        TestFunction::Gaussian { center, width, .. } => {
            let hi = x - center + 28.0 * width;
            if hi <= 0.0 {
                return Ok(0.0);
            }
            let lo = (x - center - 28.0 * width).max(0.0);
            let mut cuts: Vec<f64> = (-3..=3).map(|k| x - center + k as f64 * width).collect();
            cuts.extend(family.breakpoints());
            if lo == 0.0 {
                cuts.push(width.min(hi) * 0.5);
            }
            let trap = Trap::default();
            let r = integrate_from(|s| weight(x - s) * trap.get(kernel(s)), lo, &cuts, false, hi, smooth_tol());
            Ok(trap.finish(r)?.value)
        }
        TestFunction::Sine { omega, phase } => {
            if !(omega > 0.0) {
                return Err(Error::InvalidArgument("sine test function needs omega > 0".into()));
            }
            let bps = family.breakpoints();
            let trap = Trap::default();
            let c = fourier_half_line(|s| trap.get(kernel(s)), omega, Trig::Cos, &bps, smooth_tol());
            let c = trap.finish(c)?.value;
            let s = fourier_half_line(|s| trap.get(kernel(s)), omega, Trig::Sin, &bps, smooth_tol());
            let s = trap.finish(s)?.value;
            let arg = omega * x + phase;
            Ok(match flavor {
                // f'(x - s) = omega cos(arg - omega s)
                Flavor::Derivative => omega * (arg.cos() * c + arg.sin() * s),
                // f(x - s) = sin(arg - omega s)
                Flavor::Integral => arg.sin() * c - arg.cos() * s,
            })
        }
    }
}

/// Accepts an unconverged estimate whose error bound sits far below the
/// residuals `ibp_residual` is compared against.
fn loose(r: std::result::Result<Estimate<f64>, QuadError>) -> std::result::Result<Estimate<f64>, QuadError> {
    match r {
        Err(QuadError::NotConverged { value, abs_error }) if abs_error <= 1e-8 => {
            Ok(Estimate { value, abs_error, evaluations: 0 })
        }
        other => other,
    }
}

/// Integration-by-parts residual
/// `|<f, M_- 1_(0,t]> - <M_+ f, 1_(0,t]>|` for a Gaussian test function, with
/// the left side built from [`gfo_indicator`] and the right side integrating
/// [`gfo_apply_smooth`] over `(0, t)`. Both operators omit the normalization
/// constant, which multiplies the two sides alike.
pub fn ibp_residual(spec: &ProcessSpec, f: &TestFunction, t: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("ibp_residual needs t > 0, got {t}")));
    }
    let (lo, hi) = match (f, f.support()) {
        (TestFunction::Zero, _) => return Ok(0.0),
        (_, Some(s)) => s,
        _ => return Err(Error::InvalidArgument("ibp_residual needs a Gaussian test function".into())),
    };
    let tol = smooth_tol();
    let trap = Trap::default();
    // left side, split where the indicator image is singular
    let mut left = 0.0;
    let neg_hi = hi.min(0.0);
    if lo < neg_hi {
        // x < 0: indicator image uses the exact distance to 0 near 0
        let r = tanh_sinh(
            |x, _, dr| {
                let y = if neg_hi == 0.0 { dr } else { -x };
                f.value(x) * trap.get(spec.tail_increment(y, t))
            },
            lo,
            neg_hi,
            tol,
        );
        left += trap.finish(loose(r))?.value;
    }
    let (a, b) = (lo.max(0.0), hi.min(t));
    if a < b {
        let r = tanh_sinh(
            |x, _, dr| {
                let z = if b == t { dr } else { t - x };
                f.value(x) * trap.get(spec.tail(z))
            },
            a,
            b,
            tol,
        );
        left += trap.finish(loose(r))?.value;
    }
    // right side
    let r = gauss_kronrod(|x: f64| trap.get(gfo_apply_smooth(spec, f, x)), 0.0, t, Tolerance::new(1e-11, 1e-10));
    let right = trap.finish(loose(r))?.value;
    Ok((left - right).abs())
}

/// Fourier transform `int e^{i xi x} M_- 1_[0,t)(x) dx` of the indicator image
/// (without the normalization constant), for `xi > 0`.
pub fn indicator_fourier(spec: &ProcessSpec, t: f64, xi: f64) -> Result<Complex64> {
    if !(t > 0.0 && xi > 0.0) {
        return Err(Error::InvalidArgument(format!("indicator_fourier needs t > 0 and xi > 0, got {t}, {xi}")));
    }
    let tol = Tolerance::new(1e-13, 1e-11);
    let trap = Trap::default();
    // 0 < x < t: substitute z = t - x
    let head_c = tanh_sinh(|z, _, _| trap.get(spec.tail(z)) * (xi * z).cos(), 0.0, t, tol);
    let head_c = trap.finish(head_c)?.value;
    let head_s = tanh_sinh(|z, _, _| trap.get(spec.tail(z)) * (xi * z).sin(), 0.0, t, tol);
    let head_s = trap.finish(head_s)?.value;
    // e^{i xi (t - z)} = e^{i xi t} e^{-i xi z}
    let head = Complex64::from_polar(1.0, xi * t) * Complex64::new(head_c, -head_s);
    // x < 0: substitute y = -x
    let mut bps: Vec<f64> = spec.family().breakpoints();
    bps.extend(spec.family().breakpoints().iter().filter(|b| **b > t).map(|b| b - t));
    bps.push(t);
    let tail_c = fourier_half_line(|y| trap.get(spec.tail_increment(y, t)), xi, Trig::Cos, &bps, tol);
    let tail_c = trap.finish(tail_c)?.value;
    let tail_s = fourier_half_line(|y| trap.get(spec.tail_increment(y, t)), xi, Trig::Sin, &bps, tol);
    let tail_s = trap.finish(tail_s)?.value;
    Ok(head + Complex64::new(tail_c, -tail_s))
}

/// Modulus of the indicator image's Fourier transform predicted by the
/// Bernstein function: `|phi(i xi)|^{+-1} |e^{i t xi} - 1| / xi`.
pub fn indicator_fourier_modulus(spec: &ProcessSpec, t: f64, xi: f64) -> Result<f64> {
    let m2 = spec.family().phi_mod2(xi)?;
    let a = match spec.flavor() {
        Flavor::Derivative => m2.sqrt(),
        Flavor::Integral => 1.0 / m2.sqrt(),
    };
    Ok(a * 2.0 * (0.5 * t * xi).sin().abs() / xi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec(f: &str, fl: &str) -> ProcessSpec {
        ProcessSpec::parse(f, fl).unwrap()
    }

    #[test]
    fn stable_normalization_matches_fbm_constant() {
        for alpha in [0.5, 1.0] {
            let s = ProcessSpec::new(BernsteinFamily::Stable { alpha }, Flavor::Derivative).unwrap();
            let want = (std::f64::consts::PI * alpha / 2.0).sin() * crate::special::gamma(1.0 + alpha).unwrap().value;
            assert_relative_eq!(s.normalization().unwrap(), want, max_relative = 1e-9);
        }
    }

    #[test]
    fn exponential_normalization() {
        let e = std::f64::consts::E;
        assert_relative_eq!(spec("exponential", "derivative").normalization().unwrap(), e / (e - 1.0), max_relative = 1e-10);
    }

    #[test]
    fn kernel_examples() {
        let s = spec("exponential", "derivative");
        let e = std::f64::consts::E;
        let want = (e / (e - 1.0)).sqrt() * ((-2.0f64).exp() - (-1.0f64).exp());
        assert_relative_eq!(kernel_eval(&s, 1.0, -1.0).unwrap(), want, max_relative = 1e-10);
        assert_relative_eq!(want, -0.292_486_264_41, max_relative = 1e-9);
        assert_eq!(kernel_eval(&s, 0.0, -3.0).unwrap(), 0.0);
        assert_eq!(kernel_eval(&s, 1.0, 2.0).unwrap(), 0.0);
        let st = spec("stable:alpha=0.5", "derivative");
        assert_eq!(kernel_eval(&st, 1.0, 1.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn rejects_inadmissible_specs() {
        assert!(matches!(ProcessSpec::parse("stable:alpha=1.5", "derivative"), Err(Error::ConditionsNotMet { .. })));
        assert!(matches!(ProcessSpec::parse("exponential", "integral"), Err(Error::InvalidFlavor { .. })));
        assert!(matches!(ProcessSpec::parse("composite:alpha=0.7,beta=0.8", "integral"), Err(Error::ConditionsNotMet { .. })));
    }
}
