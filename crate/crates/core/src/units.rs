//! Physical inputs and the gravitational unit system used by the numerics.
//!
//! Lengths are measured in `l0 = (hbar^2 / (2 M^2 g))^(1/3)`, times in
//! `t0 = (2 hbar / (M g^2))^(1/3)` and energies in `E0 = M g l0`. In these
//! units `hbar = 1`, the mass is `1/2` and the gravitational acceleration is
//! `2`, so the unperturbed Hamiltonian reads `p^2 + z`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Atomic mass unit (kg), CODATA 2018.
pub const ATOMIC_MASS_UNIT_KG: f64 = 1.660_539_066_60e-27;
/// Mass of cesium-133 used when the configuration does not give one.
pub const CESIUM_MASS_KG: f64 = 132.905 * ATOMIC_MASS_UNIT_KG;
/// Reduced Planck constant (J s), CODATA 2018.
pub const HBAR_SI: f64 = 1.054_571_817e-34;
/// Standard gravity used by default (m/s^2).
pub const DEFAULT_GRAVITY: f64 = 9.8;

/// Mass, gravity and Planck constant of a bouncing particle, in any
/// consistent unit system.
///
/// Everything in [`crate::spectrum`] and [`crate::secular`] is written against
/// this type so the same code runs in SI and in scaled units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bouncer {
    pub mass: f64,
    pub gravity: f64,
    pub hbar: f64,
}

impl Bouncer {
    /// The bouncer in the scaled units of [`ScaleSet`].
    pub const SCALED: Bouncer = Bouncer {
        mass: 0.5,
        gravity: 2.0,
        hbar: 1.0,
    };

    pub fn validate(&self) -> Result<()> {
        positive("mass", self.mass)?;
        positive("gravity", self.gravity)?;
        positive("hbar", self.hbar)
    }

    /// Weight `M g`; the slope of the gravitational potential.
    pub fn weight(&self) -> f64 {
        self.mass * self.gravity
    }

    /// Period of a classical bounce from rest at height `z0` above a hard wall.
    pub fn bounce_period(&self, z0: f64) -> f64 {
        2.0 * (2.0 * z0 / self.gravity).sqrt()
    }
}

/// Dimensional inputs of the driven cavity, SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Atomic mass M (kg).
    pub mass: f64,
    /// Gravitational acceleration g (m/s^2).
    pub gravity: f64,
    /// Reduced Planck constant (J s).
    pub hbar: f64,
    /// Drive angular frequency omega (rad/s).
    pub drive_angular_frequency: f64,
    /// Mirror modulation amplitude lambda (m).
    pub modulation_amplitude: f64,
    /// Evanescent-wave mirror strength V0 (J).
    pub mirror_strength: f64,
    /// Evanescent-wave steepness kappa (1/m).
    pub mirror_steepness: f64,
}

impl PhysicalParams {
    /// Mirror strength from an effective Rabi frequency in rad/s: `V0 = hbar Omega_eff / 4`.
    pub fn mirror_strength_from_rabi(hbar: f64, rabi_angular_frequency: f64) -> f64 {
        hbar * rabi_angular_frequency / 4.0
    }

    pub fn bouncer(&self) -> Bouncer {
        Bouncer {
            mass: self.mass,
            gravity: self.gravity,
            hbar: self.hbar,
        }
    }

    /// Drive period `2 pi / omega` (s).
    pub fn drive_period(&self) -> f64 {
        std::f64::consts::TAU / self.drive_angular_frequency
    }

    pub fn validate(&self) -> Result<()> {
        positive("physical.mass", self.mass)?;
        positive("physical.gravity", self.gravity)?;
        positive("physical.hbar", self.hbar)?;
        positive("physical.drive_angular_frequency", self.drive_angular_frequency)?;
        positive("physical.mirror_strength", self.mirror_strength)?;
        positive("physical.mirror_steepness", self.mirror_steepness)?;
        finite("physical.modulation_amplitude", self.modulation_amplitude)?;
        if self.modulation_amplitude < 0.0 {
            return Err(Error::validation(
                "physical.modulation_amplitude",
                "modulation_amplitude must be ≥ 0",
            ));
        }
        Ok(())
    }
}

/// Characteristic scales of the gravitational unit system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleSet {
    /// l0 (m).
    pub length: f64,
    /// t0 (s).
    pub time: f64,
    /// E0 = M g l0 (J).
    pub energy: f64,
    /// E0 t0 = hbar (J s).
    pub action: f64,
}

impl ScaleSet {
    /// Momentum unit `hbar / l0` (kg m/s).
    pub fn momentum(&self) -> f64 {
        self.action / self.length
    }

    /// Angular frequencies scale with `1 / t0`.
    pub fn angular_frequency(&self) -> f64 {
        1.0 / self.time
    }
}

/// Derive `l0`, `t0`, `E0` and the action unit from `(M, g, hbar)`.
pub fn derive_scales(params: &PhysicalParams) -> Result<ScaleSet> {
    params.validate()?;
    scales_for(&params.bouncer())
}

pub(crate) fn scales_for(b: &Bouncer) -> Result<ScaleSet> {
    b.validate()?;
    let length = (b.hbar * b.hbar / (2.0 * b.mass * b.mass * b.gravity)).cbrt();
    let time = (2.0 * b.hbar / (b.mass * b.gravity * b.gravity)).cbrt();
    let energy = b.mass * b.gravity * length;
    Ok(ScaleSet {
        length,
        time,
        energy,
        action: energy * time,
    })
}

/// Position, momentum and width of the initial Gaussian (SI).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    /// Mean height z0 (m).
    pub z0: f64,
    /// Momentum parameter p0 of the printed phase factor (kg m/s).
    pub p0: f64,
    /// Spatial width (m).
    pub dz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Lower edge (m), inside the mirror.
    pub z_min: f64,
    /// Upper edge (m).
    pub z_max: f64,
    /// Number of grid points, a power of two.
    pub n_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeSpec {
    /// Step (s); divides the drive period exactly.
    pub dt: f64,
    /// End of the run (s).
    pub t_end: f64,
    /// Steps between recorded samples.
    pub record_stride: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSpec {
    /// Fractional half-width of the revival search window around the prediction.
    pub revival_search_window: f64,
    /// Sliding-maximum window for the |C| envelope (s).
    pub envelope_window: f64,
}

/// A fully validated experiment description in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub physical: PhysicalParams,
    pub initial_state: InitialState,
    pub grid: GridSpec,
    pub time: TimeSpec,
    pub analysis: AnalysisSpec,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        self.physical.validate()?;
        let s = &self.initial_state;
        finite("initial_state.z0", s.z0)?;
        finite("initial_state.p0", s.p0)?;
        positive("initial_state.dz", s.dz)?;
        let g = &self.grid;
        finite("grid.z_min", g.z_min)?;
        finite("grid.z_max", g.z_max)?;
        if !g.n_points.is_power_of_two() || g.n_points < 4 {
            return Err(Error::validation(
                "grid.n_points",
                format!("{} is not a power of two ≥ 4", g.n_points),
            ));
        }
        if !(g.z_min < 0.0 && 0.0 < s.z0 && s.z0 < g.z_max) {
            return Err(Error::validation(
                "grid",
                format!(
                    "require z_min < 0 < z0 < z_max, got z_min = {}, z0 = {}, z_max = {}",
                    g.z_min, s.z0, g.z_max
                ),
            ));
        }
        let t = &self.time;
        positive("time.dt", t.dt)?;
        positive("time.t_end", t.t_end)?;
        if t.record_stride == 0 {
            return Err(Error::validation("time.record_stride", "must be ≥ 1"));
        }
        self.steps_per_period()?;
        let a = &self.analysis;
        positive("analysis.revival_search_window", a.revival_search_window)?;
        if a.revival_search_window >= 1.0 {
            return Err(Error::validation(
                "analysis.revival_search_window",
                "fractional half-width must be < 1",
            ));
        }
        positive("analysis.envelope_window", a.envelope_window)
    }

    /// Integer number of steps per drive period; errors when `dt` does not
    /// divide the period.
    pub fn steps_per_period(&self) -> Result<usize> {
        steps_per_period(self.physical.drive_period(), self.time.dt)
    }

    /// Total number of steps in the run (`t_end` rounded up to a whole step).
    pub fn total_steps(&self) -> usize {
        (self.time.t_end / self.time.dt - 1e-9).ceil().max(0.0) as usize
    }

    pub fn bouncer(&self) -> Bouncer {
        self.physical.bouncer()
    }

    /// Classical bounce period at the initial height (hard-wall estimate).
    pub fn bounce_period(&self) -> f64 {
        self.bouncer().bounce_period(self.initial_state.z0)
    }
}

pub(crate) fn steps_per_period(period: f64, dt: f64) -> Result<usize> {
    let ratio = period / dt;
    let n = ratio.round();
    if n < 1.0 || ((ratio - n) / n).abs() > 1e-9 {
        return Err(Error::validation(
            "time.dt",
            format!("dt must divide the drive period {period:e} s exactly (ratio {ratio})"),
        ));
    }
    Ok(n as usize)
}

/// A configuration expressed in the scaled units of [`ScaleSet`].
///
/// Positions are in `l0`, times in `t0`, energies in `E0`, momenta in
/// `hbar / l0`. The constants `mass`, `gravity` and `hbar` of the scheme are
/// recorded explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledConfig {
    pub scales: ScaleSet,
    pub mass: f64,
    pub gravity: f64,
    pub hbar: f64,
    pub drive_angular_frequency: f64,
    pub modulation_amplitude: f64,
    pub mirror_strength: f64,
    pub mirror_steepness: f64,
    pub z0: f64,
    pub p0: f64,
    pub dz: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub n_points: usize,
    pub dt: f64,
    pub t_end: f64,
    pub record_stride: usize,
    pub revival_search_window: f64,
    pub envelope_window: f64,
}

impl ScaledConfig {
    pub fn bouncer(&self) -> Bouncer {
        Bouncer {
            mass: self.mass,
            gravity: self.gravity,
            hbar: self.hbar,
        }
    }

    /// Dimensionless drive strength `lambda omega^2 / g`.
    pub fn drive_strength(&self) -> f64 {
        self.modulation_amplitude * self.drive_angular_frequency.powi(2) / self.gravity
    }

    pub fn drive_period(&self) -> f64 {
        std::f64::consts::TAU / self.drive_angular_frequency
    }

    pub fn steps_per_period(&self) -> Result<usize> {
        steps_per_period(self.drive_period(), self.dt)
    }

    pub fn total_steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize
    }
}

/// Express every dimensional quantity of `config` in scaled units.
pub fn nondimensionalize(config: &SimulationConfig) -> Result<ScaledConfig> {
    config.validate()?;
    let s = derive_scales(&config.physical)?;
    let p = &config.physical;
    let b = Bouncer::SCALED;
    Ok(ScaledConfig {
        scales: s,
        mass: b.mass,
        gravity: b.gravity,
        hbar: b.hbar,
        drive_angular_frequency: p.drive_angular_frequency * s.time,
        modulation_amplitude: p.modulation_amplitude / s.length,
        mirror_strength: p.mirror_strength / s.energy,
        mirror_steepness: p.mirror_steepness * s.length,
        z0: config.initial_state.z0 / s.length,
        p0: config.initial_state.p0 / s.momentum(),
        dz: config.initial_state.dz / s.length,
        z_min: config.grid.z_min / s.length,
        z_max: config.grid.z_max / s.length,
        n_points: config.grid.n_points,
        dt: config.time.dt / s.time,
        t_end: config.time.t_end / s.time,
        record_stride: config.time.record_stride,
        revival_search_window: config.analysis.revival_search_window,
        envelope_window: config.analysis.envelope_window / s.time,
    })
}

/// Inverse of [`nondimensionalize`].
pub fn dimensionalize(scaled: &ScaledConfig) -> SimulationConfig {
    let s = &scaled.scales;
    // M, g and hbar follow from the scales: l0 t0^-2 is g/2 and hbar = E0 t0.
    let gravity = 2.0 * s.length / (s.time * s.time);
    let mass = s.energy / (gravity * s.length);
    SimulationConfig {
        physical: PhysicalParams {
            mass,
            gravity,
            hbar: s.action,
            drive_angular_frequency: scaled.drive_angular_frequency / s.time,
            modulation_amplitude: scaled.modulation_amplitude * s.length,
            mirror_strength: scaled.mirror_strength * s.energy,
            mirror_steepness: scaled.mirror_steepness / s.length,
        },
        initial_state: InitialState {
            z0: scaled.z0 * s.length,
            p0: scaled.p0 * s.momentum(),
            dz: scaled.dz * s.length,
        },
        grid: GridSpec {
            z_min: scaled.z_min * s.length,
            z_max: scaled.z_max * s.length,
            n_points: scaled.n_points,
        },
        time: TimeSpec {
            dt: scaled.dt * s.time,
            t_end: scaled.t_end * s.time,
            record_stride: scaled.record_stride,
        },
        analysis: AnalysisSpec {
            revival_search_window: scaled.revival_search_window,
            envelope_window: scaled.envelope_window * s.time,
        },
    }
}

fn finite(field: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::validation(field, format!("{v} is not finite")))
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    finite(field, v)?;
    if v > 0.0 {
        Ok(())
    } else {
        Err(Error::validation(field, format!("{v} must be > 0")))
    }
}
