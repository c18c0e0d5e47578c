//! Characteristic values `a_nu(q)` of the Mathieu equation
//! `phi'' + (a - 2 q cos 2 theta) phi = 0` for fractional order `nu`.
//!
//! A Floquet solution `phi = exp(i nu theta) sum_m c_m exp(2 i m theta)`
//! turns the equation into the symmetric tridiagonal eigenproblem
//!
//! ```text
//! (nu + 2m)^2 c_m + q (c_{m-1} + c_{m+1}) = a c_m,   m = -K..=K.
//! ```
//!
//! For fractional `nu` the diagonal entries are pairwise distinct, and a
//! tridiagonal matrix with non-zero off-diagonals has simple eigenvalues, so
//! branches never cross as `q` grows from zero. The branch that starts at
//! `nu^2` therefore keeps its rank `#{m : |nu + 2m| < |nu|}` in the sorted
//! spectrum for every `q`, and it is extracted directly by Sturm-sequence
//! bisection. The sign of `q` does not matter: conjugating with
//! `diag((-1)^m)` maps `q` to `-q`, hence `a_nu(q) = a_nu(-q)` and evaluation
//! always uses `|q|`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default minimum distance of `nu` from an integer.
pub const DEFAULT_INTEGER_GUARD: f64 = 1e-3;
/// Truncation is grown until consecutive values agree to this absolute level.
pub const TRUNCATION_TOLERANCE: f64 = 1e-10;
const MAX_HALF_WIDTH: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MathieuQuery {
    pub order: f64,
    pub q: f64,
    /// Starting truncation half-width `K`; grown until converged.
    pub half_width: usize,
    /// Minimum accepted distance of `order` from an integer.
    pub integer_guard: f64,
}

impl MathieuQuery {
    pub fn new(order: f64, q: f64) -> Self {
        Self {
            order,
            q,
            half_width: minimum_half_width(order, q),
            integer_guard: DEFAULT_INTEGER_GUARD,
        }
    }

    fn validate(&self) -> Result<()> {
        if !self.order.is_finite() || !self.q.is_finite() {
            return Err(Error::Domain(format!(
                "non-finite Mathieu query nu = {}, q = {}",
                self.order, self.q
            )));
        }
        let frac = (self.order - self.order.round()).abs();
        if frac <= self.integer_guard {
            return Err(Error::BranchResolution(format!(
                "order {} lies within {} of an integer; the fractional-order branch is not \
                 defined there (reduce the guard or move off the resonance centre)",
                self.order, self.integer_guard
            )));
        }
        if self.half_width < minimum_half_width(self.order, 0.0) {
            return Err(Error::Numeric(format!(
                "truncation K = {} too small for order {}; need K ≥ max(10, ceil|nu| + 10)",
                self.half_width, self.order
            )));
        }
        Ok(())
    }
}

/// Smallest admissible `K`: at least 10, `ceil|nu| + 10`, and enough modes
/// to cover the classically allowed band `|nu + 2m| <~ 2 sqrt|q|`.
pub fn minimum_half_width(order: f64, q: f64) -> usize {
    let by_order = order.abs().ceil() as usize + 10;
    let by_q = q.abs().sqrt().ceil() as usize + 10;
    by_order.max(by_q).max(10)
}

/// Rank of the `nu^2` branch among `{(nu + 2m)^2}`: the number of `m != 0`
/// with `|nu + 2m| < |nu|`, which is `floor|nu|` for fractional `nu`.
fn branch_rank(order: f64) -> usize {
    order.abs().floor() as usize
}

/// Number of eigenvalues of the truncated operator strictly below `x`.
fn sturm_count(order: f64, q: f64, half_width: usize, x: f64) -> usize {
    let n = 2 * half_width + 1;
    let q2 = q * q;
    let mut count = 0;
    let mut pivot = 1.0;
    for i in 0..n {
        let m = i as f64 - half_width as f64;
        let d = (order + 2.0 * m).powi(2) - x;
        pivot = if i == 0 { d } else { d - q2 / pivot };
        if pivot == 0.0 {
            pivot = -f64::EPSILON * (d.abs() + q2.abs()).max(f64::MIN_POSITIVE);
        }
        if pivot < 0.0 {
            count += 1;
        }
    }
    count
}

/// `rank`-th smallest eigenvalue (0-based) of the truncated operator.
fn ranked_eigenvalue(order: f64, q: f64, half_width: usize, rank: usize) -> f64 {
    // Gershgorin bounds
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..=2 * half_width {
        let m = i as f64 - half_width as f64;
        let d = (order + 2.0 * m).powi(2);
        lo = lo.min(d - 2.0 * q.abs());
        hi = hi.max(d + 2.0 * q.abs());
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(order, q, half_width, mid) > rank {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Numerically exact `a_nu(q)` for fractional `nu`.
///
/// The truncation starts at `query.half_width` and grows in steps of ten
/// until two consecutive values differ by less than
/// `max(1e-10, 1e-13 |a|)`.
pub fn char_value_numeric(query: &MathieuQuery) -> Result<f64> {
    query.validate()?;
    let q = query.q.abs();
    if q == 0.0 {
        return Ok(query.order * query.order);
    }
    let rank = branch_rank(query.order);
    let mut k = query.half_width.max(minimum_half_width(query.order, q));
    let mut prev = ranked_eigenvalue(query.order, q, k, rank);
    loop {
        let next_k = k + 10;
        if next_k > MAX_HALF_WIDTH {
            return Err(Error::Numeric(format!(
                "Mathieu truncation did not converge below K = {MAX_HALF_WIDTH} for nu = {}, q = {}",
                query.order, query.q
            )));
        }
        let next = ranked_eigenvalue(query.order, q, next_k, rank);
        if (next - prev).abs() < TRUNCATION_TOLERANCE.max(1e-13 * next.abs()) {
            return Ok(next);
        }
        k = next_k;
        prev = next;
    }
}

/// Convenience wrapper around [`char_value_numeric`] with default guards.
pub fn char_value(order: f64, q: f64) -> Result<f64> {
    char_value_numeric(&MathieuQuery::new(order, q))
}

fn perturbative_guard(order: f64, q: f64) -> Result<f64> {
    let s = order * order - 1.0;
    if (order.abs() - 1.0).abs() <= DEFAULT_INTEGER_GUARD {
        return Err(Error::Domain(format!("order {order} too close to 1 for the q² expansion")));
    }
    if q.abs() >= s.abs() / 2.0 {
        return Err(Error::Domain(format!(
            "|q| = {} outside the q² expansion range |q| < |nu² - 1|/2 = {} (use the numeric solver)",
            q.abs(),
            s.abs() / 2.0
        )));
    }
    Ok(s)
}

/// `a_nu(q) ≈ nu^2 + q^2 / (2 (nu^2 - 1))`.
pub fn char_value_perturbative(order: f64, q: f64) -> Result<f64> {
    let s = perturbative_guard(order, q)?;
    Ok(order * order + q * q / (2.0 * s))
}

/// How [`d2a_dnu2`] evaluates the second derivative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DerivativeMode {
    /// Exact second derivative of the q² expansion.
    Perturbative,
    /// Central difference of [`char_value_numeric`] with the given step in `nu`.
    Numeric { step: f64 },
}

/// `d^2 a_nu(q) / d nu^2`.
///
/// In perturbative mode this is `2 + q^2 (3 nu^2 + 1) / (nu^2 - 1)^3`.
pub fn d2a_dnu2(order: f64, q: f64, mode: DerivativeMode) -> Result<f64> {
    match mode {
        DerivativeMode::Perturbative => {
            let s = perturbative_guard(order, q)?;
            Ok(2.0 + q * q * (3.0 * order * order + 1.0) / (s * s * s))
        }
        DerivativeMode::Numeric { step } => {
            let f = |nu: f64| char_value(nu, q);
            Ok((f(order + step)? - 2.0 * f(order)? + f(order - step)?) / (step * step))
        }
    }
}
