//! Airy function Ai and its zeros.
//!
//! Ai is summed from its Maclaurin series on `[-8, 5]` and from the
//! large-argument expansions outside. On the oscillatory side the series
//! loses about six digits to cancellation at `x = -8`, where the asymptotic
//! series is already accurate to `~exp(-30)`; both stay below `1e-10`
//! absolute error across the switch.

use std::f64::consts::{FRAC_PI_4, PI};

use crate::error::{Error, Result};

/// Ai(0).
const AI0: f64 = 0.355_028_053_887_817_2;
/// -Ai'(0).
const AIP0: f64 = 0.258_819_403_792_806_8;

const SWITCH_NEGATIVE: f64 = -8.0;
const SWITCH_POSITIVE: f64 = 5.0;

/// The Airy function of the first kind.
pub fn ai(x: f64) -> f64 {
    if x.is_nan() {
        f64::NAN
    } else if x < SWITCH_NEGATIVE {
        ai_oscillatory(-x)
    } else if x > SWITCH_POSITIVE {
        ai_decaying(x)
    } else {
        ai_series(x)
    }
}

fn ai_series(x: f64) -> f64 {
    let x3 = x * x * x;
    let mut f = 1.0;
    let mut g = x;
    let mut tf = 1.0;
    let mut tg = x;
    for k in 1..200 {
        let k3 = 3.0 * k as f64;
        tf *= x3 / ((k3 - 1.0) * k3);
        tg *= x3 / (k3 * (k3 + 1.0));
        f += tf;
        g += tg;
        if tf.abs() < 1e-17 * f.abs().max(1.0) && tg.abs() < 1e-17 * g.abs().max(1.0) {
            break;
        }
    }
    AI0 * f - AIP0 * g
}

/// Coefficients `u_k` of the large-argument expansions (DLMF 9.7.2).
fn u_coefficients(count: usize) -> Vec<f64> {
    let mut u = Vec::with_capacity(count);
    u.push(1.0);
    for k in 1..count {
        let kf = k as f64;
        let prev = u[k - 1];
        u.push(
            prev * (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0)
                / ((2.0 * kf - 1.0) * 216.0 * kf),
        );
    }
    u
}

/// Sum `sum_k sign^k u_k / zeta^k`, truncated at the smallest term.
fn asymptotic_sums(zeta: f64) -> (f64, f64) {
    let u = u_coefficients(40);
    // even and odd parts with alternating signs
    let mut p = 0.0;
    let mut q = 0.0;
    let mut last = f64::INFINITY;
    for (k, &uk) in u.iter().enumerate() {
        let term = uk / zeta.powi(k as i32);
        if term > last {
            break;
        }
        last = term;
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * term;
        } else {
            q += sign * term;
        }
    }
    (p, q)
}

fn ai_oscillatory(y: f64) -> f64 {
    let zeta = 2.0 / 3.0 * y.powf(1.5);
    let (p, q) = asymptotic_sums(zeta);
    let phase = zeta - FRAC_PI_4;
    (phase.cos() * p + phase.sin() * q) / (PI.sqrt() * y.powf(0.25))
}

fn ai_decaying(x: f64) -> f64 {
    let zeta = 2.0 / 3.0 * x.powf(1.5);
    let u = u_coefficients(40);
    let mut sum = 0.0;
    let mut last = f64::INFINITY;
    for (k, &uk) in u.iter().enumerate() {
        let term = uk / zeta.powi(k as i32);
        if term > last {
            break;
        }
        last = term;
        sum += if k % 2 == 0 { term } else { -term };
    }
    (-zeta).exp() * sum / (2.0 * PI.sqrt() * x.powf(0.25))
}

/// First-guess location of the `k`-th zero of Ai (1-based), from the
/// large-`k` expansion of `-a_k`.
fn zero_estimate(k: usize) -> f64 {
    let t = 3.0 * PI * (4.0 * k as f64 - 1.0) / 8.0;
    let t2 = t.powi(-2);
    -t.powf(2.0 / 3.0) * (1.0 + t2 * (5.0 / 48.0 - t2 * (5.0 / 36.0)))
}

/// The `k`-th zero of Ai counted from the origin (`k >= 1`), a negative number.
pub fn ai_zero(k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("Airy zeros are numbered from 1".into()));
    }
    let guess = zero_estimate(k);
    let half_gap = 0.25 * PI / guess.abs().sqrt();
    let (mut lo, mut hi) = (guess - half_gap, guess + half_gap);
    let (mut flo, fhi) = (ai(lo), ai(hi));
    if flo.signum() == fhi.signum() {
        return Err(Error::Numeric(format!("no sign change bracketing Airy zero n = {k}")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = ai(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    if hi - lo > 1e-12 * hi.abs() {
        return Err(Error::Numeric(format!("bisection did not converge for Airy zero n = {k}")));
    }
    Ok(0.5 * (lo + hi))
}
