//! Internal helpers shared by the process-level modules.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::quad::{exp_sinh, tanh_sinh, Estimate, QuadError, Tolerance};

/// Records the first error raised inside an integrand, so the integrand can
/// keep returning plain numbers to the quadrature routine.
#[derive(Default)]
pub(crate) struct Trap {
    first: RefCell<Option<Error>>,
}

impl Trap {
    pub fn get<E: Into<Error>>(&self, r: std::result::Result<f64, E>) -> f64 {
        match r {
            Ok(v) => v,
            Err(e) => {
                let mut slot = self.first.borrow_mut();
                if slot.is_none() {
                    *slot = Some(e.into());
                }
                0.0
            }
        }
    }

    /// The trapped error takes precedence over whatever the quadrature made
    /// of the zeros substituted for it.
    pub fn finish<T>(&self, r: std::result::Result<T, QuadError>) -> Result<T> {
        if let Some(e) = self.first.borrow_mut().take() {
            return Err(e);
        }
        r.map_err(Error::from)
    }
}

/// Memo keyed by an `f64` argument, with one initialization per key even
/// under concurrent first access.
pub(crate) struct Memo<V> {
    cells: Mutex<HashMap<u64, Arc<OnceLock<Result<V>>>>>,
}

impl<V: Clone> Default for Memo<V> {
    fn default() -> Self {
        Self { cells: Mutex::new(HashMap::new()) }
    }
}

impl<V: Clone> Memo<V> {
    pub fn get_or_compute(&self, key: f64, f: impl FnOnce() -> Result<V>) -> Result<V> {
        let cell = {
            let mut map = self.cells.lock().unwrap_or_else(|p| p.into_inner());
            map.entry(key.to_bits()).or_default().clone()
        };
        cell.get_or_init(f).clone()
    }
}

/// Accepts a non-converged piece whose error estimate is already below the
/// absolute budget.
fn settle(r: std::result::Result<Estimate<f64>, QuadError>) -> std::result::Result<Estimate<f64>, QuadError> {
    match r {
        Err(QuadError::NotConverged { value, abs_error }) => {
            Ok(Estimate { value, abs_error, evaluations: 0 })
        }
        other => other,
    }
}

/// `int_lo^inf f` split at `cuts` (sorted and filtered here). Each finite
/// piece is integrated by tanh-sinh, so integrable singularities at the cut
/// points are allowed; the last piece runs to infinity by exp-sinh. A piece
/// that misses its own tolerance is accepted when its error estimate is
/// within the tolerance of the total.
pub(crate) fn integrate_from<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    cuts: &[f64],
    infinite: bool,
    hi: f64,
    tol: Tolerance<f64>,
) -> std::result::Result<Estimate<f64>, QuadError> {
    let mut pts: Vec<f64> = cuts.iter().copied().filter(|c| c.is_finite() && *c > lo && *c < hi).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * a.abs().max(1.0));
    let mut nodes = vec![lo];
    nodes.extend(pts);
    if !infinite {
        nodes.push(hi);
    }
    let mut total = Estimate { value: 0.0, abs_error: 0.0, evaluations: 0 };
    for w in nodes.windows(2) {
        let (a, b) = (w[0], w[1]);
        let piece = settle(tanh_sinh(|x, _, _| f(x), a, b, tol))?;
        total = total.combine(piece);
    }
    if infinite {
        let a = *nodes.last().unwrap();
        let scale = a.abs().max(1.0);
        let piece = settle(exp_sinh(|x, _| f(x), a, scale, tol))?;
        total = total.combine(piece);
    }
    let budget = tol.target(total.value);
    if total.abs_error > budget * 1e3 {
        return Err(QuadError::NotConverged { value: total.value, abs_error: total.abs_error });
    }
    Ok(total)
}

/// Decade cut points between `lo` and `hi`.
pub(crate) fn decades(lo: f64, hi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    if !(lo > 0.0 && hi > lo) {
        return out;
    }
    let mut p = 10f64.powf(lo.log10().ceil());
    while p < hi {
        out.push(p);
        p *= 10.0;
    }
    out
}
