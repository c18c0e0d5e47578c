//! The unperturbed quantum bouncer: gravity above a hard mirror.
//!
//! With the hard wall at `z = 0`, the action of a bounce orbit of energy `E`
//! is `I = (8 E^3 / (9 pi^2 M g^2))^(1/2)`, so `E(I) = (9 pi^2 M g^2 I^2 / 8)^(1/3)`.
//! Semiclassical levels sit at `I = (n + 3/4) hbar`; exact levels are the
//! Airy zeros scaled by `(M g^2 hbar^2 / 2)^(1/3)`.

use std::f64::consts::PI;
use std::io::Write;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

use serde::{Deserialize, Serialize};

use crate::airy::ai_zero;
use crate::error::{Error, Result};
use crate::units::{Bouncer, PhysicalParams};

/// Maslov index of the gravity-plus-hard-wall orbit.
pub const MASLOV_OFFSET: f64 = 0.75;

/// Energy, frequency and frequency slope at a given action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionAnglePoint {
    pub action: f64,
    pub energy: f64,
    /// Bounce angular frequency `dE/dI`.
    pub frequency: f64,
    /// `d^2E/dI^2`, negative for the bouncer.
    pub curvature: f64,
}

impl ActionAnglePoint {
    pub fn at(b: &Bouncer, action: f64) -> Result<Self> {
        Ok(Self {
            action,
            energy: energy_of_action(b, action)?,
            frequency: h_prime(b, action)?,
            curvature: h_double_prime(b, action)?,
        })
    }
}

fn energy_coefficient(b: &Bouncer) -> f64 {
    9.0 * PI * PI * b.mass * b.gravity * b.gravity / 8.0
}

/// `E(I) = (9 pi^2 M g^2 I^2 / 8)^(1/3)`.
pub fn energy_of_action(b: &Bouncer, action: f64) -> Result<f64> {
    if !(action >= 0.0) {
        return Err(Error::Domain(format!("action must be ≥ 0, got {action}")));
    }
    Ok((energy_coefficient(b) * action * action).cbrt())
}

/// Inverse of [`energy_of_action`].
pub fn action_of_energy(b: &Bouncer, energy: f64) -> Result<f64> {
    if !(energy >= 0.0) {
        return Err(Error::Domain(format!("energy must be ≥ 0, got {energy}")));
    }
    Ok((energy * energy * energy / energy_coefficient(b)).sqrt())
}

/// Bounce angular frequency `H'(I) = 2 E / (3 I)`.
pub fn h_prime(b: &Bouncer, action: f64) -> Result<f64> {
    if !(action > 0.0) {
        return Err(Error::Domain(format!("H' needs action > 0, got {action}")));
    }
    Ok(2.0 * energy_of_action(b, action)? / (3.0 * action))
}

/// `H''(I) = -2 E / (9 I^2)`; equivalently `-(M g^2)^(1/3) (pi / (9 I^2))^(2/3)`.
pub fn h_double_prime(b: &Bouncer, action: f64) -> Result<f64> {
    if !(action > 0.0) {
        return Err(Error::Domain(format!("H'' needs action > 0, got {action}")));
    }
    Ok(-2.0 * energy_of_action(b, action)? / (9.0 * action * action))
}

/// Semiclassical action of level `n`: `(n + 3/4) hbar`.
pub fn level_action(b: &Bouncer, n: f64) -> f64 {
    (n + MASLOV_OFFSET) * b.hbar
}

/// Energy unit of the exact spectrum, `(M g^2 hbar^2 / 2)^(1/3)`.
pub fn airy_energy_unit(b: &Bouncer) -> f64 {
    (b.mass * b.gravity * b.gravity * b.hbar * b.hbar / 2.0).cbrt()
}

/// Real-valued mean quantum number of a packet released at rest from `z0`.
pub fn quantum_number_of_height(b: &Bouncer, z0: f64) -> Result<f64> {
    if !(z0 > 0.0) {
        return Err(Error::Domain(format!("height must be > 0, got {z0}")));
    }
    Ok(action_of_energy(b, b.weight() * z0)? / b.hbar - MASLOV_OFFSET)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumLevel {
    /// Quantum number, 0 for the ground state.
    pub n: usize,
    /// Exact hard-wall energy from the `(n+1)`-th Airy zero.
    pub energy_exact: f64,
    /// Semiclassical energy at `I = (n + 3/4) hbar`.
    pub energy_semiclassical: f64,
    pub action: f64,
}

/// Exact and semiclassical levels of the hard-wall bouncer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTable {
    pub levels: Vec<SpectrumLevel>,
}

/// The lowest `count` levels of the hard-wall bouncer.
pub fn airy_levels(b: &Bouncer, count: usize) -> Result<SpectrumTable> {
    if count == 0 {
        return Err(Error::Domain("level count must be ≥ 1".into()));
    }
    b.validate()?;
    let unit = airy_energy_unit(b);
    let levels = (0..count)
        .map(|n| {
            let action = level_action(b, n as f64);
            Ok(SpectrumLevel {
                n,
                energy_exact: -ai_zero(n + 1)? * unit,
                energy_semiclassical: energy_of_action(b, action)?,
                action,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumTable { levels })
}

impl SpectrumTable {
    /// Relative gap `|E_semi - E_exact| / E_exact` per level.
    pub fn relative_gaps(&self) -> Vec<f64> {
        self.levels
            .iter()
            .map(|l| ((l.energy_semiclassical - l.energy_exact) / l.energy_exact).abs())
            .collect()
    }

    /// CSV with columns `n, E_exact_J, E_semi_J, I_n_Js`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "E_exact_J", "E_semi_J", "I_n_Js"])?;
        for l in &self.levels {
            w.write_record([
                l.n.to_string(),
                l.energy_exact.to_string(),
                l.energy_semiclassical.to_string(),
                l.action.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Maslov index of an orbit between two smooth turning points.
pub const SOFT_MASLOV_OFFSET: f64 = 0.5;
const QUADRATURE_NODES: usize = 96;

/// The bouncer above the exponential mirror `V0 exp(-kappa z)` actually
/// simulated, quantized by WKB between its two soft turning points.
///
/// When `V0` is small against the packet energy the atom reflects well below
/// `z = 0`, and the spectrum (hence the revival time) departs strongly from
/// the hard-wall law.
#[derive(Debug, Clone)]
pub struct SoftWallBouncer {
    pub bouncer: Bouncer,
    pub mirror_strength: f64,
    pub mirror_steepness: f64,
    rule: GaussLegendre,
}

impl SoftWallBouncer {
    pub fn new(params: &PhysicalParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            bouncer: params.bouncer(),
            mirror_strength: params.mirror_strength,
            mirror_steepness: params.mirror_steepness,
            rule: GaussLegendre::new(NonZeroUsize::new(QUADRATURE_NODES).expect("nonzero")),
        })
    }

    pub fn potential(&self, z: f64) -> f64 {
        self.bouncer.weight() * z + self.mirror_strength * (-self.mirror_steepness * z).exp()
    }

    /// Position of the potential minimum.
    pub fn minimum(&self) -> f64 {
        (self.mirror_strength * self.mirror_steepness / self.bouncer.weight()).ln() / self.mirror_steepness
    }

    /// Wall-side and gravity-side turning points at energy `e`.
    pub fn turning_points(&self, e: f64) -> Result<(f64, f64)> {
        let zm = self.minimum();
        if !(e > self.potential(zm)) {
            return Err(Error::Domain(format!("energy {e:e} J is not above the potential minimum")));
        }
        let w = self.bouncer.weight();
        let kappa = self.mirror_steepness;
        // V exceeds e beyond these bounds
        let top = zm.max(0.0) + e / w;
        let bottom = zm.min(0.0) - (e / self.mirror_strength).max(1.0).ln() / kappa - 1.0 / kappa;
        let root = |mut inside: f64, mut outside: f64| {
            for _ in 0..200 {
                let mid = 0.5 * (inside + outside);
                if mid == inside || mid == outside {
                    break;
                }
                if self.potential(mid) < e {
                    inside = mid;
                } else {
                    outside = mid;
                }
            }
            0.5 * (inside + outside)
        };
        Ok((root(zm, bottom), root(zm, top)))
    }

    /// `I(E) = (1/pi) * integral sqrt(2 M (E - V)) dz` between the turning points.
    pub fn action_of_energy(&self, e: f64) -> Result<f64> {
        let (zw, zt) = self.turning_points(e)?;
        let zm = self.minimum();
        let two_m = 2.0 * self.bouncer.mass;
        // z = turn + (zm - turn) u^2 turns the endpoint square root into a smooth u^2
        let leg = |turn: f64| {
            let span = zm - turn;
            self.rule.integrate(0.0, 1.0, |u| {
                let z = turn + span * u * u;
                (two_m * (e - self.potential(z))).max(0.0).sqrt() * 2.0 * u * span.abs()
            })
        };
        Ok((leg(zw) + leg(zt)) / PI)
    }

    /// Inverse of [`Self::action_of_energy`].
    pub fn energy_of_action(&self, action: f64) -> Result<f64> {
        if !(action > 0.0) {
            return Err(Error::Domain(format!("action must be > 0, got {action}")));
        }
        let v_min = self.potential(self.minimum());
        let mut lo = v_min;
        let mut hi = v_min + self.bouncer.weight() / self.mirror_steepness;
        while self.action_of_energy(hi)? < action {
            lo = hi;
            hi = v_min + 2.0 * (hi - v_min);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if mid > v_min && self.action_of_energy(mid)? < action {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// WKB level `n`, real-valued: `I = (n + 1/2) hbar`.
    pub fn level_energy(&self, n: f64) -> Result<f64> {
        self.energy_of_action((n + SOFT_MASLOV_OFFSET) * self.bouncer.hbar)
    }

    pub fn quantum_number(&self, e: f64) -> Result<f64> {
        Ok(self.action_of_energy(e)? / self.bouncer.hbar - SOFT_MASLOV_OFFSET)
    }

    /// Revival time `4 pi hbar / |E(n+1) - 2 E(n) + E(n-1)|` at the level of energy `e`.
    pub fn revival_time(&self, e: f64) -> Result<f64> {
        let n = self.quantum_number(e)?;
        if n < 1.0 {
            return Err(Error::Domain(format!("level {n:.3} has no lower neighbour")));
        }
        let [a, b, c] = [n - 1.0, n, n + 1.0].map(|k| self.level_energy(k));
        let d2 = a? - 2.0 * b? + c?;
        if d2 == 0.0 {
            return Err(Error::Singular("spectrum has no curvature at this energy".into()));
        }
        Ok(4.0 * PI * self.bouncer.hbar / d2.abs())
    }

    /// Classical bounce period `2 pi / (dE/dI)` at energy `e`.
    pub fn bounce_period(&self, e: f64) -> Result<f64> {
        let n = self.quantum_number(e)?;
        let spacing = 0.5 * (self.level_energy(n + 1.0)? - self.level_energy(n - 1.0)?);
        Ok(2.0 * PI * self.bouncer.hbar / spacing)
    }
}
