//! Split-step Fourier propagation of the moving-frame Schrödinger equation
//!
//! ```text
//! i hbar d/dt psi = [p^2 / 2M + M g z (1 - eps sin(omega t)) + V0 exp(-kappa z)] psi,
//! eps = lambda omega^2 / g,
//! ```
//!
//! where `z = z_lab - lambda sin(omega t)` is measured from the oscillating
//! mirror. One Strang step is `K(dt/2) V(t + dt/2) K(dt/2)` with the kinetic
//! factor applied exactly in momentum space. Consecutive half kinetic steps
//! are fused, so a step costs one inverse and one forward FFT.
//!
//! All arithmetic runs in whatever unit system the caller chooses; [`propagate`]
//! uses the gravitational units of [`crate::units`] and reports SI values.

use std::f64::consts::{PI, TAU};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{nondimensionalize, ScaleSet, ScaledConfig, SimulationConfig};

/// Largest `|kappa z|` fed to `exp`; beyond it the wall is clamped.
pub const EXPONENT_CLAMP: f64 = 700.0;
/// Edge-to-peak amplitude ratio above which the packet counts as escaped.
pub const CONTAINMENT_THRESHOLD: f64 = 1e-8;
/// Largest potential phase per step, in radians, over the accessible region.
pub const MAX_PHASE_PER_STEP: f64 = 0.5;
/// Packet centre must sit this many widths inside the grid.
pub const MIN_MARGIN_WIDTHS: f64 = 5.0;
/// Points at each end of the grid inspected for containment.
const EDGE_POINTS: usize = 4;
/// Block length of the factored `exp(i c z)` tables.
const BLOCK: usize = 64;

/// Uniform periodic grid and its conjugate wavenumbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub z_min: f64,
    pub z_max: f64,
    pub n_points: usize,
    /// `(z_max - z_min) / n_points`.
    pub dz: f64,
}

impl Grid {
    pub fn new(z_min: f64, z_max: f64, n_points: usize) -> Result<Self> {
        if !n_points.is_power_of_two() || n_points < 4 {
            return Err(Error::Geometry(format!("{n_points} grid points is not a power of two ≥ 4")));
        }
        if !(z_min < z_max) || !z_min.is_finite() || !z_max.is_finite() {
            return Err(Error::Geometry(format!("empty grid [{z_min}, {z_max}]")));
        }
        Ok(Self { z_min, z_max, n_points, dz: (z_max - z_min) / n_points as f64 })
    }

    pub fn z(&self, j: usize) -> f64 {
        self.z_min + j as f64 * self.dz
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.z(j)).collect()
    }

    /// Wavenumbers in FFT order, spanning `[-pi/dz, pi/dz)`.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n_points;
        let dk = TAU / (n as f64 * self.dz);
        (0..n)
            .map(|j| if j < n / 2 { j as f64 * dk } else { (j as f64 - n as f64) * dk })
            .collect()
    }

    /// Largest representable wavenumber `pi / dz`.
    pub fn k_max(&self) -> f64 {
        PI / self.dz
    }
}

/// Moving-frame potential `M g z (1 - eps sin(omega t)) + V0 exp(-kappa z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    /// `M g`.
    pub weight: f64,
    /// `eps = lambda omega^2 / g`.
    pub drive_strength: f64,
    pub drive_frequency: f64,
    pub mirror_strength: f64,
    pub mirror_steepness: f64,
}

impl Potential {
    /// No potential at all (test support).
    pub const FREE: Potential = Potential {
        weight: 0.0,
        drive_strength: 0.0,
        drive_frequency: 1.0,
        mirror_strength: 0.0,
        mirror_steepness: 0.0,
    };

    pub fn from_scaled(c: &ScaledConfig) -> Self {
        Self {
            weight: c.mass * c.gravity,
            drive_strength: c.drive_strength(),
            drive_frequency: c.drive_angular_frequency,
            mirror_strength: c.mirror_strength,
            mirror_steepness: c.mirror_steepness,
        }
    }

    /// Time-independent part; the flag is set when the wall exponent was clamped.
    pub fn static_value(&self, z: f64) -> (f64, bool) {
        let x = -self.mirror_steepness * z;
        let clamped = x > EXPONENT_CLAMP;
        let wall = if self.mirror_strength == 0.0 { 0.0 } else { self.mirror_strength * x.min(EXPONENT_CLAMP).exp() };
        (self.weight * z + wall, clamped)
    }

    /// Full potential at time `t`.
    pub fn value(&self, z: f64, t: f64) -> (f64, bool) {
        let (v, clamped) = self.static_value(z);
        (v - self.drive_force(t) * z, clamped)
    }

    /// Inertial force `M g eps sin(omega t)` of the oscillating frame.
    pub fn drive_force(&self, t: f64) -> f64 {
        if self.drive_strength == 0.0 {
            0.0
        } else {
            self.weight * self.drive_strength * (self.drive_frequency * t).sin()
        }
    }
}

/// Coordinate frame of a packet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Frame {
    /// `z = z_lab - amplitude sin(frequency t)`, attached to the mirror.
    Moving { amplitude: f64, frequency: f64 },
}

impl Frame {
    /// Lab-frame height of a moving-frame height at time `t`.
    pub fn to_lab(&self, z: f64, t: f64) -> f64 {
        match *self {
            Frame::Moving { amplitude, frequency } => z + amplitude * (frequency * t).sin(),
        }
    }
}

/// Complex amplitudes on a grid at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct WavePacket {
    pub grid: Grid,
    pub amplitudes: Vec<Complex64>,
    pub time: f64,
    pub frame: Frame,
}

impl WavePacket {
    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.dz
    }

    /// `<self|other>` with the `dz` weight.
    pub fn overlap(&self, other: &WavePacket) -> Complex64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum::<Complex64>()
            * self.grid.dz
    }

    pub fn mean_position(&self) -> f64 {
        self.moment(1) / self.norm()
    }

    /// Position variance.
    pub fn position_variance(&self) -> f64 {
        let m = self.mean_position();
        self.moment(2) / self.norm() - m * m
    }

    fn moment(&self, power: i32) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(j, a)| a.norm_sqr() * self.grid.z(j).powi(power))
            .sum::<f64>()
            * self.grid.dz
    }

    /// Probability per wavenumber bin in FFT order, summing to the norm.
    pub fn momentum_distribution(&self) -> Vec<f64> {
        let mut buf = self.amplitudes.clone();
        FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
        let w = self.grid.dz / self.grid.n_points as f64;
        buf.iter().map(|c| c.norm_sqr() * w).collect()
    }

    /// Largest edge-to-peak amplitude ratio over both grid ends.
    pub fn edge_ratio(&self) -> f64 {
        edge_ratio(&self.amplitudes)
    }
}

fn edge_ratio(a: &[Complex64]) -> f64 {
    let peak = a.iter().fold(0.0f64, |m, c| m.max(c.norm_sqr()));
    if peak == 0.0 {
        return 0.0;
    }
    let n = a.len();
    let k = EDGE_POINTS.min(n / 2);
    let edge = a[..k].iter().chain(&a[n - k..]).fold(0.0f64, |m, c| m.max(c.norm_sqr()));
    (edge / peak).sqrt()
}

/// `(2 pi dz^2)^(-1/4) exp(-(z - z0)^2 / (2 dz)^2) exp(-i p0 (z - z0) / hbar)`,
/// renormalised on the grid. The printed phase gives mean momentum `-p0`.
pub fn make_gaussian(z0: f64, p0: f64, width: f64, grid: &Grid, hbar: f64, frame: Frame) -> Result<WavePacket> {
    if !(width > 0.0) {
        return Err(Error::Geometry(format!("packet width must be > 0, got {width}")));
    }
    let margin = MIN_MARGIN_WIDTHS * width;
    if z0 - grid.z_min < margin || grid.z_max - z0 < margin {
        return Err(Error::Geometry(format!(
            "packet centre {z0} needs {MIN_MARGIN_WIDTHS} widths ({margin}) of clearance inside [{}, {}]",
            grid.z_min, grid.z_max
        )));
    }
    if width < grid.dz {
        return Err(Error::Geometry(format!("packet width {width} is below the grid spacing {}", grid.dz)));
    }
    let norm = (TAU * width * width).powf(-0.25);
    let mut amplitudes: Vec<Complex64> = (0..grid.n_points)
        .map(|j| {
            let x = grid.z(j) - z0;
            Complex64::from_polar(norm * (-(x * x) / (4.0 * width * width)).exp(), -p0 * x / hbar)
        })
        .collect();
    let s = (amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * grid.dz).sqrt();
    amplitudes.iter_mut().for_each(|a| *a /= s);
    Ok(WavePacket { grid: *grid, amplitudes, time: 0.0, frame })
}

/// Precomputed factors for repeated Strang steps at fixed `dt`.
pub struct Stepper {
    grid: Grid,
    potential: Potential,
    mass: f64,
    hbar: f64,
    dt: f64,
    k: Vec<f64>,
    kin_half: Vec<Complex64>,
    kin_full: Vec<Complex64>,
    /// `exp(-i V_static dt / hbar) / N`; the `1/N` completes the FFT round trip.
    static_phase: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    coarse: Vec<Complex64>,
    fine: Vec<Complex64>,
    clamped: bool,
}

impl Stepper {
    pub fn new(grid: Grid, potential: Potential, mass: f64, hbar: f64, dt: f64) -> Result<Self> {
        if !(dt != 0.0 && dt.is_finite()) {
            return Err(Error::Setup(format!("time step must be finite and non-zero, got {dt}")));
        }
        let n = grid.n_points;
        let k = grid.wavenumbers();
        let kinetic = |kk: f64, tau: f64| Complex64::from_polar(1.0, -hbar * kk * kk / (2.0 * mass) * tau);
        let kin_half = k.iter().map(|&kk| kinetic(kk, 0.5 * dt)).collect();
        let kin_full = k.iter().map(|&kk| kinetic(kk, dt)).collect();
        let mut clamped = false;
        let static_phase = (0..n)
            .map(|j| {
                let (v, c) = potential.static_value(grid.z(j));
                clamped |= c;
                Complex64::from_polar(1.0 / n as f64, -v * dt / hbar)
            })
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        Ok(Self {
            grid,
            potential,
            mass,
            hbar,
            dt,
            k,
            kin_half,
            kin_full,
            static_phase,
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            coarse: vec![Complex64::new(0.0, 0.0); n.div_ceil(BLOCK)],
            fine: vec![Complex64::new(0.0, 0.0); BLOCK],
            clamped,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Whether any grid point needed the wall-exponent clamp.
    pub fn clamped(&self) -> bool {
        self.clamped
    }

    fn to_momentum(&mut self, buf: &mut [Complex64]) {
        self.forward.process_with_scratch(buf, &mut self.scratch);
    }

    fn to_position(&mut self, buf: &mut [Complex64]) {
        self.inverse.process_with_scratch(buf, &mut self.scratch);
    }

    /// Apply the potential factor for a step centred at `t_mid` to position
    /// amplitudes scaled by `N` (straight out of the inverse FFT).
    fn apply_potential(&mut self, buf: &mut [Complex64], t_mid: f64) {
        let force = self.potential.drive_force(t_mid);
        if force == 0.0 {
            buf.iter_mut().zip(&self.static_phase).for_each(|(a, s)| *a *= s);
            return;
        }
        // exp(i c z_j) with z_j = z_min + (BLOCK b + r) dz, factored per block
        let c = force * self.dt / self.hbar;
        for (b, v) in self.coarse.iter_mut().enumerate() {
            *v = Complex64::from_polar(1.0, c * self.grid.z(b * BLOCK));
        }
        for (r, v) in self.fine.iter_mut().enumerate() {
            *v = Complex64::from_polar(1.0, c * r as f64 * self.grid.dz);
        }
        for ((chunk, s), coarse) in buf
            .chunks_mut(BLOCK)
            .zip(self.static_phase.chunks(BLOCK))
            .zip(&self.coarse)
        {
            for ((a, s), f) in chunk.iter_mut().zip(s).zip(&self.fine) {
                *a *= s * (coarse * f);
            }
        }
    }

    /// Advance momentum-space amplitudes that already carry the leading half
    /// kinetic factor by one potential kick and one full kinetic step.
    /// `trailing_half` finishes with a half step instead, landing on a true
    /// time level.
    fn kick(&mut self, psi_k: &mut [Complex64], t_mid: f64, trailing_half: bool) {
        self.to_position(psi_k);
        self.apply_potential(psi_k, t_mid);
        self.to_momentum(psi_k);
        let kin = if trailing_half { &self.kin_half } else { &self.kin_full };
        psi_k.iter_mut().zip(kin).for_each(|(a, k)| *a *= k);
    }

    /// One Strang step of `packet` from `packet.time`.
    pub fn step(&mut self, packet: &mut WavePacket) {
        self.steps(packet, 1);
    }

    /// `count` Strang steps of `packet`.
    pub fn steps(&mut self, packet: &mut WavePacket, count: usize) {
        if count == 0 {
            return;
        }
        let t0 = packet.time;
        let psi = &mut packet.amplitudes;
        self.to_momentum(psi);
        psi.iter_mut().zip(&self.kin_half).for_each(|(a, k)| *a *= k);
        for s in 0..count {
            self.kick(psi, t0 + (s as f64 + 0.5) * self.dt, s + 1 == count);
        }
        self.to_position(psi);
        let inv = 1.0 / self.grid.n_points as f64;
        psi.iter_mut().for_each(|a| *a *= inv);
        packet.time = t0 + count as f64 * self.dt;
    }

    /// Kinetic-energy expectation from momentum amplitudes (unnormalised FFT).
    fn kinetic_and_momentum(&self, psi_k: &[Complex64]) -> (f64, f64) {
        let w = self.grid.dz / self.grid.n_points as f64;
        let (mut t, mut p) = (0.0, 0.0);
        for (a, &k) in psi_k.iter().zip(&self.k) {
            let prob = a.norm_sqr();
            p += prob * k;
            t += prob * k * k;
        }
        (t * w * self.hbar * self.hbar / (2.0 * self.mass), p * w * self.hbar)
    }
}

/// Relax `packet` toward the ground state of the static potential by
/// imaginary-time split steps (test support). Returns the final energy.
pub fn relax(packet: &mut WavePacket, potential: &Potential, mass: f64, hbar: f64, tau: f64, steps: usize) -> f64 {
    let grid = packet.grid;
    let n = grid.n_points;
    let k = grid.wavenumbers();
    let kin: Vec<f64> = k.iter().map(|&kk| (-hbar * kk * kk / (2.0 * mass) * 0.5 * tau).exp()).collect();
    let pot: Vec<f64> = (0..n).map(|j| (-potential.static_value(grid.z(j)).0 * tau / hbar).exp()).collect();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let psi = &mut packet.amplitudes;
    for _ in 0..steps {
        fwd.process(psi);
        psi.iter_mut().zip(&kin).for_each(|(a, k)| *a *= k / n as f64);
        inv.process(psi);
        psi.iter_mut().zip(&pot).for_each(|(a, v)| *a *= v);
        fwd.process(psi);
        psi.iter_mut().zip(&kin).for_each(|(a, k)| *a *= k / n as f64);
        inv.process(psi);
        let s = (psi.iter().map(|a| a.norm_sqr()).sum::<f64>() * grid.dz).sqrt();
        psi.iter_mut().for_each(|a| *a /= s);
    }
    energy(packet, potential, mass, hbar)
}

/// `<H>` of a normalised packet at its own time.
pub fn energy(packet: &WavePacket, potential: &Potential, mass: f64, hbar: f64) -> f64 {
    let grid = packet.grid;
    let kin: f64 = packet
        .momentum_distribution()
        .iter()
        .zip(grid.wavenumbers())
        .map(|(p, k)| p * hbar * hbar * k * k / (2.0 * mass))
        .sum();
    let pot: f64 = packet
        .amplitudes
        .iter()
        .enumerate()
        .map(|(j, a)| a.norm_sqr() * potential.value(grid.z(j), packet.time).0)
        .sum::<f64>()
        * grid.dz;
    (kin + pot) / packet.norm()
}

/// Maximum `|V_static| dt / hbar` over points with `V_static ≤ ceiling`.
///
/// The time-dependent part is linear in `z`; linear potentials are propagated
/// exactly by the splitting (they only translate momentum), so they are left
/// out. Points above `ceiling` are classically forbidden for the packet, where
/// the amplitude is negligible and phase wrapping is harmless.
pub fn phase_per_step(grid: &Grid, potential: &Potential, hbar: f64, dt: f64, ceiling: f64) -> f64 {
    (0..grid.n_points)
        .map(|j| potential.static_value(grid.z(j)).0)
        .filter(|v| *v <= ceiling)
        .fold(0.0f64, |m, v| m.max(v.abs()))
        * dt.abs()
        / hbar
}

/// Autocorrelation `C(t) = <psi(0)|psi(t)>` at the recorded times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutocorrelationSeries {
    /// Sample times (s).
    pub times: Vec<f64>,
    pub values: Vec<Complex64>,
    /// Steps between samples.
    pub stride: usize,
}

impl AutocorrelationSeries {
    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|c| c.norm()).collect()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Expectation values recorded alongside `C(t)` (SI, moving frame).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Observables {
    pub norm: Vec<f64>,
    /// `<z>` (m) from the mirror.
    pub mean_z: Vec<f64>,
    /// `<p>` (kg m/s).
    pub mean_p: Vec<f64>,
    /// `<H(t)>` (J).
    pub mean_energy: Vec<f64>,
}

/// Result of [`propagate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Propagation {
    pub series: AutocorrelationSeries,
    pub observables: Observables,
    pub steps: usize,
    /// Snapshots requested through [`PropagateOptions::checkpoints`] (SI grid and time).
    pub checkpoints: Vec<WavePacket>,
    /// Drive amplitude and frequency (SI) of the moving frame.
    pub frame: Frame,
}

impl Propagation {
    /// Lab-frame `<z_lab> = <z> + lambda sin(omega t)` per sample (m).
    pub fn lab_mean_z(&self) -> Vec<f64> {
        self.series.times.iter().zip(&self.observables.mean_z).map(|(&t, &z)| self.frame.to_lab(z, t)).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PropagateOptions {
    /// Times (s) at which to keep a copy of the packet; the first recorded
    /// sample at or after each time is used.
    pub checkpoints: Vec<f64>,
}

/// Pre-run checks plus the scaled ingredients of a run.
pub struct Setup {
    pub scaled: ScaledConfig,
    pub grid: Grid,
    pub potential: Potential,
    pub initial: WavePacket,
    /// Potential phase per step over the accessible region (rad).
    pub phase_per_step: f64,
}

/// Validate a configuration and build the scaled grid, potential and packet.
pub fn setup(config: &SimulationConfig) -> Result<Setup> {
    let sc = nondimensionalize(config)?;
    sc.steps_per_period()?;
    let grid = Grid::new(sc.z_min, sc.z_max, sc.n_points)?;
    let potential = Potential::from_scaled(&sc);
    let frame = Frame::Moving { amplitude: sc.modulation_amplitude, frequency: sc.drive_angular_frequency };
    let initial = make_gaussian(sc.z0, sc.p0, sc.dz, &grid, sc.hbar, frame)?;
    let e0 = energy(&initial, &potential, sc.mass, sc.hbar);
    let phase = phase_per_step(&grid, &potential, sc.hbar, sc.dt, 2.0 * e0.abs());
    if phase >= MAX_PHASE_PER_STEP {
        return Err(Error::Setup(format!(
            "potential phase per step {phase:.3} rad ≥ {MAX_PHASE_PER_STEP} over the accessible region; \
             use more steps per drive period"
        )));
    }
    let k_needed = (2.0 * sc.mass * 2.0 * e0.abs()).sqrt() / sc.hbar;
    if k_needed >= grid.k_max() {
        return Err(Error::Setup(format!(
            "grid resolves wavenumbers up to {:.3} but the packet reaches {k_needed:.3}; use more points",
            grid.k_max()
        )));
    }
    Ok(Setup { scaled: sc, grid, potential, initial, phase_per_step: phase })
}

/// Run the configured propagation, recording every `record_stride` steps.
pub fn propagate(config: &SimulationConfig, options: &PropagateOptions) -> Result<Propagation> {
    let Setup { scaled: sc, grid, potential, initial, .. } = setup(config)?;
    let s = sc.scales;
    let mut stepper = Stepper::new(grid, potential, sc.mass, sc.hbar, sc.dt)?;
    let total = sc.total_steps();
    let stride = sc.record_stride;
    let n = grid.n_points;

    let mut psi0_k = initial.amplitudes.clone();
    stepper.to_momentum(&mut psi0_k);

    let mut psi = psi0_k.clone();
    psi.iter_mut().zip(&stepper.kin_half).for_each(|(a, k)| *a *= k);
    let mut sample = vec![Complex64::new(0.0, 0.0); n];
    let mut position = vec![Complex64::new(0.0, 0.0); n];

    let capacity = total / stride + 2;
    let mut series = AutocorrelationSeries { times: Vec::with_capacity(capacity), values: Vec::with_capacity(capacity), stride };
    let mut obs = Observables::default();
    let mut pending: Vec<f64> = options.checkpoints.iter().map(|t| t / s.time).collect();
    pending.sort_by(f64::total_cmp);
    pending.reverse();
    let mut checkpoints = Vec::new();
    let w = grid.dz / n as f64;

    let mut record = |step: usize, psi_t_k: &[Complex64], stepper: &mut Stepper| -> Result<()> {
        let t = step as f64 * sc.dt;
        let c: Complex64 = psi0_k.iter().zip(psi_t_k).map(|(a, b)| a.conj() * b).sum::<Complex64>() * w;
        let norm: f64 = psi_t_k.iter().map(|a| a.norm_sqr()).sum::<f64>() * w;
        let (kin, p) = stepper.kinetic_and_momentum(psi_t_k);
        position.copy_from_slice(psi_t_k);
        stepper.to_position(&mut position);
        let inv = 1.0 / n as f64;
        let (mut z1, mut v1) = (0.0, 0.0);
        for (j, a) in position.iter().enumerate() {
            let prob = a.norm_sqr() * inv * inv;
            let z = grid.z(j);
            z1 += prob * z;
            v1 += prob * potential.value(z, t).0;
        }
        let ratio = edge_ratio(&position);
        if ratio > CONTAINMENT_THRESHOLD {
            return Err(Error::Containment { time_s: t * s.time, ratio });
        }
        series.times.push(t * s.time);
        series.values.push(c);
        obs.norm.push(norm);
        obs.mean_z.push(z1 * grid.dz / norm * s.length);
        obs.mean_p.push(p / norm * s.momentum());
        obs.mean_energy.push((kin + v1 * grid.dz) / norm * s.energy);
        while pending.last().is_some_and(|&tc| tc <= t + 0.5 * sc.dt) {
            pending.pop();
            let amplitudes = position.iter().map(|a| a * inv / s.length.sqrt()).collect();
            checkpoints.push(WavePacket {
                grid: Grid::new(grid.z_min * s.length, grid.z_max * s.length, n)?,
                amplitudes,
                time: t * s.time,
                frame: Frame::Moving {
                    amplitude: sc.modulation_amplitude * s.length,
                    frequency: sc.drive_angular_frequency / s.time,
                },
            });
        }
        Ok(())
    };

    sample.copy_from_slice(&psi0_k);
    record(0, &sample, &mut stepper)?;
    for step in 0..total {
        let t_mid = (step as f64 + 0.5) * sc.dt;
        stepper.to_position(&mut psi);
        stepper.apply_potential(&mut psi, t_mid);
        stepper.to_momentum(&mut psi);
        let done = step + 1;
        if done % stride == 0 || done == total {
            for ((o, a), k) in sample.iter_mut().zip(&psi).zip(&stepper.kin_half) {
                *o = a * k;
            }
            record(done, &sample, &mut stepper)?;
        }
        psi.iter_mut().zip(&stepper.kin_full).for_each(|(a, k)| *a *= k);
    }

    Ok(Propagation {
        series,
        observables: obs,
        steps: total,
        checkpoints,
        frame: Frame::Moving {
            amplitude: config.physical.modulation_amplitude,
            frequency: config.physical.drive_angular_frequency,
        },
    })
}

/// Scales used by a configuration, for converting scaled diagnostics.
pub fn scales(config: &SimulationConfig) -> Result<ScaleSet> {
    Ok(nondimensionalize(config)?.scales)
}
