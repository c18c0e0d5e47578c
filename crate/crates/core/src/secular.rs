//! Secular (resonance-averaged) theory of the driven bouncer.
//!
//! Near the `N`-th primary resonance `N H'(I_N) = omega` the averaged
//! Hamiltonian is a pendulum in the slow angle, and its quantisation is a
//! Mathieu equation of fractional order. The quasi-energies are
//!
//! ```text
//! E_n = (N^2 H'' hbar^2 / 8) a_nu(n)(q) - (N H' - omega)^2 / (2 N^2 H'') + H0(I0)
//! q   = 4 lambda V / (N^2 H'' hbar^2),      V = M g (I0 / I_N)^(2/3)
//! nu  = (2 / (N hbar)) [I - 4 I0 + 3 I0 (I0 / I_N)^(1/3)],   I = (n + 3/4) hbar
//! ```
//!
//! with `H'`, `H''` evaluated at the launch action `I0`. Energies here live
//! in the frame rotating with `omega / N`: at `lambda = 0` they equal the
//! Taylor expansion of `H0` about `I0` minus `(omega / N)(I - I0)`, a linear
//! term that drops out of every second difference.
//!
//! The revival time is `T = 4 pi hbar / |d^2 E / dn^2|`, taken as a unit-step
//! central difference around `round(n0)`. Two closed forms follow from the
//! `q^2` expansion of `a`; both are linear in `lambda^2` and lose meaning once
//! `|q|` is not small.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mathieu::{char_value, char_value_perturbative};
use crate::spectrum::{
    action_of_energy, energy_of_action, h_prime, level_action, ActionAnglePoint, MASLOV_OFFSET,
};
use crate::units::Bouncer;

/// Launch energies above this multiple of `hbar omega` count as "large".
pub const HIGH_ENERGY_RATIO: f64 = 100.0;

/// The primary resonance nearest the launch action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceData {
    /// Resonance order: `N` bounces per drive period.
    pub order: u32,
    /// Action at the resonance centre `I_N`.
    pub action: f64,
    /// Energy at the resonance centre `E_N = H0(I_N)`.
    pub energy: f64,
    /// Coupling strength `V = M g (I0 / I_N)^(2/3)` (a force).
    pub coupling: f64,
    /// Drive angular frequency.
    pub drive: f64,
}

/// Locate `N = round(omega / H'(I0))` and solve `N H'(I_N) = omega` by bisection.
pub fn find_resonance(b: &Bouncer, drive: f64, action0: f64) -> Result<ResonanceData> {
    if !(drive > 0.0) || !drive.is_finite() {
        return Err(Error::Domain(format!("drive frequency must be > 0, got {drive}")));
    }
    if !(action0 > 0.0) || !action0.is_finite() {
        return Err(Error::Domain(format!("launch action must be > 0, got {action0}")));
    }
    let ratio = drive / h_prime(b, action0)?;
    let order = ratio.round();
    if order < 1.0 {
        return Err(Error::Domain(format!(
            "drive is slower than the bounce (omega / H' = {ratio:.3}); no primary resonance N ≥ 1"
        )));
    }
    let target = drive / order;
    let f = |i: f64| h_prime(b, i).map(|h| h - target);

    // H' decreases with I; widen the bracket geometrically
    let (mut lo, mut hi) = (action0, action0);
    while f(lo)? < 0.0 {
        lo *= 0.5;
    }
    while f(hi)? > 0.0 {
        hi *= 2.0;
    }
    if f(action0)? == 0.0 {
        lo = action0;
        hi = action0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let action = 0.5 * (lo + hi);
    let residual = (order * h_prime(b, action)? - drive) / drive;
    if residual.abs() > 1e-10 {
        return Err(Error::Numeric(format!(
            "resonance bisection stalled with relative residual {residual:e}"
        )));
    }
    // closed form N = (omega^3 / M g^2)^(1/3) (3 I_N / pi^2)^(1/3)
    let closed = (drive.powi(3) / (b.mass * b.gravity * b.gravity)).cbrt()
        * (3.0 * action / (PI * PI)).cbrt();
    if ((closed - order) / order).abs() > 1e-8 {
        return Err(Error::Numeric(format!(
            "resonance order {order} disagrees with closed form {closed}"
        )));
    }
    Ok(ResonanceData {
        order: order as u32,
        action,
        energy: energy_of_action(b, action)?,
        coupling: b.weight() * (action0 / action).powf(2.0 / 3.0),
        drive,
    })
}

/// `nu(I) = (2 / (N hbar)) [I - 4 I0 + 3 I0 (I0 / I_N)^(1/3)]`.
pub fn nu_index(action: f64, action0: f64, res: &ResonanceData, hbar: f64) -> Result<f64> {
    if !(action > 0.0) || !(action0 > 0.0) || !(res.action > 0.0) {
        return Err(Error::Domain(format!(
            "actions must be > 0 (I = {action}, I0 = {action0}, I_N = {})",
            res.action
        )));
    }
    let centre = 4.0 * action0 - 3.0 * action0 * (action0 / res.action).cbrt();
    Ok(2.0 / (res.order as f64 * hbar) * (action - centre))
}

/// Mathieu `q` and the affine map `a = offset + slope * E` from quasi-energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MathieuParameters {
    /// Signed `q`; negative because `H'' < 0`. Only `|q|` enters `a_nu(q)`.
    pub q: f64,
    pub offset: f64,
    pub slope: f64,
}

impl MathieuParameters {
    pub fn a_of_energy(&self, energy: f64) -> f64 {
        self.offset + self.slope * energy
    }

    pub fn energy_of_a(&self, a: f64) -> f64 {
        (a - self.offset) / self.slope
    }
}

pub fn mathieu_parameters(
    b: &Bouncer,
    lambda: f64,
    res: &ResonanceData,
    action0: f64,
) -> Result<MathieuParameters> {
    if !(action0 > 0.0) {
        return Err(Error::Domain(format!("launch action must be > 0, got {action0}")));
    }
    if !(lambda >= 0.0) {
        return Err(Error::Domain(format!("modulation amplitude must be ≥ 0, got {lambda}")));
    }
    let p = ActionAnglePoint::at(b, action0)?;
    let n = res.order as f64;
    let scale = n * n * p.curvature * b.hbar * b.hbar;
    let detuning = n * p.frequency - res.drive;
    let slope = 8.0 / scale;
    Ok(MathieuParameters {
        q: 4.0 * lambda * res.coupling / scale,
        offset: slope * (detuning * detuning / (2.0 * n * n * p.curvature) - p.energy),
        slope,
    })
}

/// Which characteristic value feeds the quasi-energies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum QuasiEnergyMode {
    /// Fourier-matrix eigenvalue, valid for any `q`.
    #[default]
    Numeric,
    /// `nu^2 + q^2 / (2 (nu^2 - 1))`, guarded to small `q`.
    Perturbative,
}

/// Secular model of one launch condition under one drive frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecularModel {
    pub bouncer: Bouncer,
    /// Launch point in action-angle form (`I0`, `E_n0`, `H'`, `H''`).
    pub launch: ActionAnglePoint,
    /// Real-valued mean quantum number `I0 / hbar - 3/4`.
    pub n0: f64,
    pub resonance: ResonanceData,
}

impl SecularModel {
    /// Model for a packet released at rest from height `z0`.
    pub fn from_height(b: Bouncer, drive: f64, z0: f64) -> Result<Self> {
        if !(z0 > 0.0) {
            return Err(Error::Domain(format!("launch height must be > 0, got {z0}")));
        }
        Self::from_action(b, drive, action_of_energy(&b, b.weight() * z0)?)
    }

    pub fn from_action(b: Bouncer, drive: f64, action0: f64) -> Result<Self> {
        b.validate()?;
        let resonance = find_resonance(&b, drive, action0)?;
        Ok(Self {
            bouncer: b,
            launch: ActionAnglePoint::at(&b, action0)?,
            n0: action0 / b.hbar - MASLOV_OFFSET,
            resonance,
        })
    }

    pub fn drive(&self) -> f64 {
        self.resonance.drive
    }

    pub fn parameters(&self, lambda: f64) -> Result<MathieuParameters> {
        mathieu_parameters(&self.bouncer, lambda, &self.resonance, self.launch.action)
    }

    pub fn nu(&self, action: f64) -> Result<f64> {
        nu_index(action, self.launch.action, &self.resonance, self.bouncer.hbar)
    }

    pub fn nu0(&self) -> Result<f64> {
        self.nu(self.launch.action)
    }

    /// `r = (E_N / E_n0)^(1/2)`.
    pub fn r(&self) -> f64 {
        (self.resonance.energy / self.launch.energy).sqrt()
    }

    /// `r^2 hbar omega / (4 E_n0)`.
    pub fn a_small(&self) -> f64 {
        self.r().powi(2) * self.bouncer.hbar * self.drive() / (4.0 * self.launch.energy)
    }

    fn char_value(&self, n: i64, q: f64, mode: QuasiEnergyMode) -> Result<f64> {
        if n < 0 {
            return Err(Error::Domain(format!("quantum number must be ≥ 0, got {n}")));
        }
        let nu = self.nu(level_action(&self.bouncer, n as f64))?;
        match mode {
            QuasiEnergyMode::Numeric => char_value(nu, q),
            QuasiEnergyMode::Perturbative => char_value_perturbative(nu, q),
        }
    }

    /// Quasi-energy of level `n` in the rotating frame.
    pub fn quasi_energy(&self, n: i64, lambda: f64, mode: QuasiEnergyMode) -> Result<f64> {
        let p = self.parameters(lambda)?;
        Ok(p.energy_of_a(self.char_value(n, p.q, mode)?))
    }

    /// `4 pi hbar / |E_{n+1} - 2 E_n + E_{n-1}|` around `n = round(n0)`.
    pub fn revival_time_spectral(&self, lambda: f64, mode: QuasiEnergyMode) -> Result<f64> {
        if self.n0 < 2.0 {
            return Err(Error::Domain(format!("mean quantum number {} below 2", self.n0)));
        }
        let p = self.parameters(lambda)?;
        let n = self.n0.round() as i64;
        // the affine offset cancels in the stencil, so difference `a` directly
        let d2a = self.char_value(n + 1, p.q, mode)? - 2.0 * self.char_value(n, p.q, mode)?
            + self.char_value(n - 1, p.q, mode)?;
        let d2e = d2a / p.slope;
        if d2e == 0.0 || !d2e.is_finite() {
            return Err(Error::Singular(format!(
                "quasi-energy curvature vanished at n = {n} (degenerate spectrum)"
            )));
        }
        Ok(4.0 * PI * self.bouncer.hbar / d2e.abs())
    }

    /// Undriven revival time from the spectral route.
    pub fn revival_time_undriven(&self) -> Result<f64> {
        self.revival_time_spectral(0.0, QuasiEnergyMode::Numeric)
    }

    fn drive_ratio(&self, lambda: f64) -> f64 {
        self.bouncer.weight() * lambda / self.launch.energy
    }

    /// Shift `1 - T/T0` from the full closed form in `r` and `a`.
    pub fn shift_eq12(&self, lambda: f64) -> Result<f64> {
        let u2 = (1.0 - self.r()).powi(2);
        let a2 = self.a_small().powi(2);
        if u2 <= a2 {
            return Err(Error::Singular(format!(
                "launch inside the resonance core: (1 - r)^2 = {u2:e} ≤ a^2 = {a2:e}"
            )));
        }
        Ok(self.drive_ratio(lambda).powi(2) * (3.0 * u2 + a2) / (8.0 * (u2 - a2).powi(3)))
    }

    /// Shift `1 - T/T0` in the large-energy limit `a -> 0`.
    pub fn shift_eq13(&self, lambda: f64) -> Result<f64> {
        let u = 1.0 - self.r();
        if u == 0.0 {
            return Err(Error::Singular("launch at the resonance centre (r = 1)".into()));
        }
        Ok(3.0 / 8.0 * self.drive_ratio(lambda).powi(2) / u.powi(4))
    }

    pub fn revival_time_eq12(&self, lambda: f64) -> Result<f64> {
        Ok(self.revival_time_undriven()? * (1.0 - self.shift_eq12(lambda)?))
    }

    pub fn revival_time_eq13(&self, lambda: f64) -> Result<f64> {
        Ok(self.revival_time_undriven()? * (1.0 - self.shift_eq13(lambda)?))
    }

    /// The intermediate closed form in `nu0` with the prefactor
    /// `{8 lambda E_N (I0/I_N)^2 / hbar^2}^2` taken literally. That prefactor
    /// is not dimensionless, so the value depends on the unit system; it is
    /// reported for comparison only.
    pub fn revival_time_as_printed(&self, lambda: f64) -> Result<f64> {
        let nu = self.nu0()?;
        let s = nu * nu - 1.0;
        let k = 8.0 * lambda * self.resonance.energy * (self.launch.action / self.resonance.action).powi(2)
            / self.bouncer.hbar.powi(2);
        Ok(self.revival_time_undriven()? * (1.0 - 0.5 * k * k * (3.0 * nu * nu + 1.0) / s.powi(3)))
    }

    /// All revival-time routes at one modulation amplitude.
    pub fn predict(&self, lambda: f64, mode: QuasiEnergyMode) -> Result<RevivalPrediction> {
        let p = self.parameters(lambda)?;
        let e_hw = self.launch.energy / (self.bouncer.hbar * self.drive());
        Ok(RevivalPrediction {
            lambda,
            order: self.resonance.order,
            resonance_action: self.resonance.action,
            resonance_energy: self.resonance.energy,
            coupling: self.resonance.coupling,
            n0: self.n0,
            action0: self.launch.action,
            energy0: self.launch.energy,
            nu0: self.nu0()?,
            q: p.q,
            r: self.r(),
            a_small: self.a_small(),
            t0: self.revival_time_undriven()?,
            t_spectral: self.revival_time_spectral(lambda, mode)?,
            t_eq12: self.revival_time_eq12(lambda)?,
            t_eq13: self.revival_time_eq13(lambda)?,
            t_as_printed: self.revival_time_as_printed(lambda)?,
            validity: Validity {
                perturbative: p.q.abs() < 1.0,
                high_energy: e_hw > HIGH_ENERGY_RATIO,
                energy_over_hbar_omega: e_hw,
            },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Validity {
    /// `|q| < 1`, where the `q^2` closed forms apply.
    pub perturbative: bool,
    /// `E_n0 > 100 hbar omega`, the premise of the `a -> 0` form.
    pub high_energy: bool,
    pub energy_over_hbar_omega: f64,
}

/// Revival-time predictions at one modulation amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RevivalPrediction {
    pub lambda: f64,
    pub order: u32,
    pub resonance_action: f64,
    pub resonance_energy: f64,
    pub coupling: f64,
    pub n0: f64,
    pub action0: f64,
    pub energy0: f64,
    pub nu0: f64,
    pub q: f64,
    pub r: f64,
    pub a_small: f64,
    pub t0: f64,
    pub t_spectral: f64,
    pub t_eq12: f64,
    pub t_eq13: f64,
    /// Diagnostic only; see [`SecularModel::revival_time_as_printed`].
    pub t_as_printed: f64,
    pub validity: Validity,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mathieu::{d2a_dnu2, DerivativeMode};
    use crate::spectrum::{energy_of_action, h_double_prime};
    use crate::units::{scales_for, CESIUM_MASS_KG, HBAR_SI};
    use std::f64::consts::TAU;

    const OMEGA: f64 = TAU * 930.0;

    fn cesium() -> Bouncer {
        Bouncer { mass: CESIUM_MASS_KG, gravity: 9.8, hbar: HBAR_SI }
    }

    fn fig2() -> SecularModel {
        SecularModel::from_height(cesium(), OMEGA, 20.1e-6).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn drive_at_bounce_frequency_is_first_resonance() {
        let b = cesium();
        let i0 = 150.0 * b.hbar;
        let res = find_resonance(&b, h_prime(&b, i0).unwrap(), i0).unwrap();
        assert_eq!(res.order, 1);
        assert!(rel(res.action, i0) < 1e-12);
    }

    #[test]
    fn slow_drive_has_no_resonance() {
        let b = cesium();
        let i0 = 150.0 * b.hbar;
        let w = 0.3 * h_prime(&b, i0).unwrap();
        assert!(matches!(find_resonance(&b, w, i0), Err(Error::Domain(_))));
        assert!(find_resonance(&b, OMEGA, -1.0).is_err());
    }

    #[test]
    fn fig2_resonance() {
        let b = cesium();
        let period = b.bounce_period(20.1e-6);
        assert!((period - 4.05e-3).abs() < 0.01e-3, "{period}");
        let m = fig2();
        let res = m.resonance;
        assert_eq!(res.order, 4);
        assert_eq!((OMEGA * period / TAU).round() as u32, 4);
        assert!(rel(4.0 * h_prime(&b, res.action).unwrap(), OMEGA) < 1e-10);
        let z_n = res.energy / b.weight();
        assert!((z_n - 22.661_58e-6).abs() < 1e-11, "{z_n}");
        let v = b.weight() * (m.launch.action / res.action).powf(2.0 / 3.0);
        assert!(rel(res.coupling, v) < 1e-14);
    }

    #[test]
    fn fig2_fixtures() {
        // 40-digit evaluation of the same formulas
        let m = fig2();
        assert!(rel(m.n0, 176.422_064_774_016_4) < 1e-10);
        assert!(rel(m.nu0().unwrap(), -15.470_431_893_655_03) < 1e-9);
        assert!(rel(m.parameters(0.56e-6).unwrap().q, -872.651_557_601_862) < 1e-9);
        assert!(rel(m.r(), 1.061_810_604_518_32) < 1e-12);
        assert!(rel(m.a_small(), 3.995_402_645_718_68e-3) < 1e-10);
        assert!(rel(m.revival_time_undriven().unwrap(), 4.306_024_348_685_927) < 1e-9);
    }

    #[test]
    fn scaled_and_si_models_agree() {
        let si = fig2();
        let s = scales_for(&si.bouncer).unwrap();
        let scaled = SecularModel::from_height(Bouncer::SCALED, OMEGA * s.time, 20.1e-6 / s.length).unwrap();
        assert_eq!(scaled.resonance.order, si.resonance.order);
        assert!(rel(scaled.resonance.action * s.action, si.resonance.action) < 1e-10);
        assert!(rel(scaled.resonance.energy * s.energy, si.resonance.energy) < 1e-10);
        let lam = 0.3e-9;
        let (p, q) = (si.predict(lam, QuasiEnergyMode::Numeric).unwrap(), scaled.predict(lam / s.length, QuasiEnergyMode::Numeric).unwrap());
        assert!(rel(q.q, p.q) < 1e-9);
        assert!(rel(q.nu0, p.nu0) < 1e-9);
        for (a, b) in [(q.t0, p.t0), (q.t_spectral, p.t_spectral), (q.t_eq12, p.t_eq12), (q.t_eq13, p.t_eq13)] {
            assert!(rel(a * s.time, b) < 1e-8, "{} vs {b}", a * s.time);
        }
    }

    #[test]
    fn q_is_linear_in_lambda() {
        let m = fig2();
        assert_eq!(m.parameters(0.0).unwrap().q, 0.0);
        let q1 = m.parameters(0.37e-6).unwrap().q;
        assert_eq!(m.parameters(0.74e-6).unwrap().q, 2.0 * q1);
        assert!(q1 < 0.0);
        assert!(matches!(mathieu_parameters(&m.bouncer, 1e-7, &m.resonance, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn nu_vanishes_at_resonance_and_has_fixed_slope() {
        let b = cesium();
        let i0 = 200.0 * b.hbar;
        let res = find_resonance(&b, 3.0 * h_prime(&b, i0).unwrap(), i0).unwrap();
        assert!(nu_index(i0, i0, &res, b.hbar).unwrap().abs() < 1e-9);
        let m = fig2();
        let i = m.launch.action;
        let slope = (m.nu(i + 7.0 * b.hbar).unwrap() - m.nu(i).unwrap()) / 7.0;
        assert!((slope - 0.5).abs() < 1e-9);
    }

    #[test]
    fn undriven_quasi_energies_follow_the_spectrum() {
        let m = fig2();
        let b = m.bouncer;
        let n0 = m.n0.round() as i64;
        for n in n0 - 5..=n0 + 5 {
            let i = level_action(&b, n as f64);
            let e = m.quasi_energy(n, 0.0, QuasiEnergyMode::Numeric).unwrap();
            let rotating = m.drive() / m.resonance.order as f64 * (i - m.launch.action);
            let semi = energy_of_action(&b, i).unwrap();
            assert!(rel(e + rotating, semi) < 1e-3);
            // the residual is the cubic Taylor term, (10/162)(dI/I)^3
            let cubic = 10.0 / 162.0 * ((i - m.launch.action) / m.launch.action).powi(3).abs();
            assert!(rel(e + rotating, semi) < 1.1 * cubic + 1e-12, "{n}");
        }
    }

    #[test]
    fn quasi_energy_differences_are_smooth() {
        let m = fig2();
        let n0 = m.n0.round() as i64;
        for lambda in [1e-10, 0.56e-6] {
            let e: Vec<f64> = (n0 - 20..=n0 + 20)
                .map(|n| m.quasi_energy(n, lambda, QuasiEnergyMode::Numeric).unwrap())
                .collect();
            let d: Vec<f64> = e.windows(2).map(|w| w[1] - w[0]).collect();
            let dd: Vec<f64> = d.windows(2).map(|w| w[1] - w[0]).collect();
            let scale = dd.iter().fold(0.0f64, |s, x| s.max(x.abs()));
            for w in dd.windows(2) {
                assert!((w[1] - w[0]).abs() <= 2.0 * scale, "{lambda}");
            }
        }
    }

    #[test]
    fn undriven_revival_time() {
        let m = fig2();
        let b = m.bouncer;
        let t0 = m.revival_time_undriven().unwrap();
        let analytic = 4.0 * PI / (b.hbar * h_double_prime(&b, m.launch.action).unwrap().abs());
        assert!(rel(t0, analytic) < 1e-9);
        let classical = 6.0 * m.n0 * b.bounce_period(20.1e-6);
        assert!(rel(t0, classical) < 0.01, "{t0} vs {classical}");
        assert!((t0 - 4.3).abs() < 0.05);
        for route in [m.revival_time_eq12(0.0), m.revival_time_eq13(0.0), m.revival_time_as_printed(0.0)] {
            assert!(rel(route.unwrap(), t0) < 1e-10);
        }
        let p = m.predict(0.0, QuasiEnergyMode::Perturbative).unwrap();
        assert!(rel(p.t_spectral, t0) < 1e-10);
    }

    #[test]
    fn shift_is_quadratic_in_lambda() {
        let m = fig2();
        let t0 = m.revival_time_undriven().unwrap();
        let lam = 0.1e-9;
        for mode in [QuasiEnergyMode::Numeric, QuasiEnergyMode::Perturbative] {
            let d1 = t0 - m.revival_time_spectral(lam, mode).unwrap();
            let d2 = t0 - m.revival_time_spectral(2.0 * lam, mode).unwrap();
            assert!(d1 > 0.0);
            assert!(rel(d2 / d1, 4.0) < 1e-3, "{mode:?}: {}", d2 / d1);
        }
    }

    #[test]
    fn spectral_stencil_matches_analytic_curvature() {
        let m = fig2();
        let b = m.bouncer;
        for lam in [0.0, 0.05e-9, 0.3e-9] {
            let p = m.parameters(lam).unwrap();
            let a2 = d2a_dnu2(m.nu(level_action(&b, m.n0.round())).unwrap(), p.q, DerivativeMode::Perturbative).unwrap();
            let step = 2.0 / m.resonance.order as f64;
            let t = 4.0 * PI * b.hbar / (a2 * step * step / p.slope).abs();
            let spectral = m.revival_time_spectral(lam, QuasiEnergyMode::Perturbative).unwrap();
            assert!(rel(spectral, t) < 1e-6, "{lam}: {spectral} vs {t}");
        }
    }

    #[test]
    fn closed_forms_match_the_expansion() {
        // 1 - T/T0 = q^2 (3 nu0^2 + 1) / (2 (nu0^2 - 1)^3)
        let m = fig2();
        let nu = m.nu0().unwrap();
        for lam in [1e-10, 0.56e-6] {
            let q = m.parameters(lam).unwrap().q;
            let expected = q * q * (3.0 * nu * nu + 1.0) / (2.0 * (nu * nu - 1.0).powi(3));
            assert!(rel(m.shift_eq12(lam).unwrap(), expected) < 1e-9);
        }
    }

    #[test]
    fn large_energy_limit() {
        // gap of the two shifts is (10/3)(a / (1 - r))^2 to leading order
        for z0 in [20.1e-6, 29.8e-6, 60e-6, 150e-6] {
            let m = SecularModel::from_height(cesium(), OMEGA, z0).unwrap();
            let lam = 1e-7;
            let gap = rel(m.shift_eq13(lam).unwrap(), m.shift_eq12(lam).unwrap());
            let eps = (m.a_small() / (1.0 - m.r())).powi(2);
            assert!(rel(gap, 10.0 / 3.0 * eps) < 10.0 * eps, "{z0}: {gap}");
        }
    }

    #[test]
    fn resonance_centre_is_singular() {
        let b = cesium();
        let i0 = 180.0 * b.hbar;
        let m = SecularModel::from_action(b, h_prime(&b, i0).unwrap(), i0).unwrap();
        assert!(matches!(m.revival_time_eq12(1e-7), Err(Error::Singular(_))));
        assert!(matches!(m.revival_time_eq13(1e-7), Err(Error::Singular(_))));
    }

    #[test]
    fn larger_launch_energy_shifts_less() {
        let a = SecularModel::from_height(cesium(), OMEGA, 29.8e-6).unwrap();
        let b = fig2();
        assert_eq!(a.resonance.order, 5);
        for lam in [0.28e-6, 0.56e-6, 1.13e-6] {
            assert!(a.shift_eq12(lam).unwrap() < b.shift_eq12(lam).unwrap());
        }
    }

    #[test]
    fn prediction_flags() {
        let m = fig2();
        let small = m.predict(1e-10, QuasiEnergyMode::Numeric).unwrap();
        assert!(small.validity.perturbative);
        assert!(!small.validity.high_energy);
        let big = m.predict(0.56e-6, QuasiEnergyMode::Numeric).unwrap();
        assert!(!big.validity.perturbative);
        assert!(big.t_spectral.is_finite());
        assert!(m.predict(0.56e-6, QuasiEnergyMode::Perturbative).is_err());
    }
}
