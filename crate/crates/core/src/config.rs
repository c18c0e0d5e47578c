//! Experiment configuration documents.
//!
//! A configuration is a TOML document with a required `schema_version` and
//! the sections `physical`, `initial_state`, `grid`, `time` and `analysis`.
//! Every quantity is either a bare number in SI units or a string carrying
//! its unit, such as `"20.1 um"` or `"0.93 kHz"`. See the README for the full
//! key list.

use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::units::{
    AnalysisSpec, GridSpec, InitialState, PhysicalParams, SimulationConfig, TimeSpec,
    CESIUM_MASS_KG, DEFAULT_GRAVITY, HBAR_SI, ATOMIC_MASS_UNIT_KG,
};

pub const SCHEMA_VERSION: i64 = 1;

pub const DEFAULT_N_POINTS: usize = 4096;
pub const DEFAULT_STEPS_PER_PERIOD: usize = 2048;
/// Default gap between the initial height and the top of the grid (m).
pub const DEFAULT_TOP_MARGIN: f64 = 25e-6;
/// Default depth of the grid inside the mirror, in decay lengths.
pub const DEFAULT_MIRROR_DEPTH: f64 = 8.0;
pub const DEFAULT_SEARCH_WINDOW: f64 = 0.25;
/// Default envelope window, in classical bounce periods.
pub const DEFAULT_ENVELOPE_BOUNCES: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dim {
    Length,
    InverseLength,
    Time,
    Frequency,
    AngularFrequency,
    Mass,
    Energy,
    Momentum,
    Acceleration,
    Action,
}

impl Dim {
    fn name(self) -> &'static str {
        match self {
            Dim::Length => "length",
            Dim::InverseLength => "inverse length",
            Dim::Time => "time",
            Dim::Frequency => "frequency",
            Dim::AngularFrequency => "angular frequency",
            Dim::Mass => "mass",
            Dim::Energy => "energy",
            Dim::Momentum => "momentum",
            Dim::Acceleration => "acceleration",
            Dim::Action => "action",
        }
    }
}

fn unit(symbol: &str) -> Option<(Dim, f64)> {
    use Dim::*;
    let u = match symbol {
        "m" => (Length, 1.0),
        "mm" => (Length, 1e-3),
        "um" | "μm" | "µm" => (Length, 1e-6),
        "nm" => (Length, 1e-9),
        "1/m" | "m^-1" => (InverseLength, 1.0),
        "1/um" | "1/μm" | "um^-1" => (InverseLength, 1e6),
        "s" => (Time, 1.0),
        "ms" => (Time, 1e-3),
        "us" | "μs" | "µs" => (Time, 1e-6),
        "Hz" => (Frequency, 1.0),
        "kHz" | "KHz" => (Frequency, 1e3),
        "MHz" => (Frequency, 1e6),
        "rad/s" | "1/s" => (AngularFrequency, 1.0),
        "krad/s" => (AngularFrequency, 1e3),
        "kg" => (Mass, 1.0),
        "u" | "Da" => (Mass, ATOMIC_MASS_UNIT_KG),
        "J" => (Energy, 1.0),
        "kg*m/s" | "kg m/s" => (Momentum, 1.0),
        "m/s^2" | "m/s2" => (Acceleration, 1.0),
        "J*s" | "J s" => (Action, 1.0),
        _ => return None,
    };
    Some(u)
}

/// Collects problems while walking the document so that all of them are
/// reported together.
struct Reader<'a> {
    root: &'a Table,
    problems: Vec<String>,
}

impl<'a> Reader<'a> {
    fn section(&mut self, name: &str) -> Option<&'a Table> {
        match self.root.get(name) {
            None => None,
            Some(Value::Table(t)) => Some(t),
            Some(_) => {
                self.problems.push(format!("{name}: expected a table"));
                None
            }
        }
    }

    fn check_keys(&mut self, path: &str, table: Option<&Table>, allowed: &[&str]) {
        if let Some(t) = table {
            for k in t.keys() {
                if !allowed.contains(&k.as_str()) {
                    let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                    self.problems.push(format!("{p}: unknown field"));
                }
            }
        }
    }

    fn quantity(&mut self, table: Option<&Table>, section: &str, key: &str, dim: Dim) -> Option<f64> {
        let path = format!("{section}.{key}");
        let value = table?.get(key)?;
        let parsed = match value {
            Value::Float(f) => Ok(*f),
            Value::Integer(i) => Ok(*i as f64),
            Value::String(s) => parse_quantity(s, dim),
            _ => Err(format!("expected a number or a quantity string, got {}", value.type_str())),
        };
        match parsed {
            Ok(v) if v.is_finite() => Some(v),
            Ok(v) => {
                self.problems.push(format!("{path}: {v} is not finite"));
                None
            }
            Err(e) => {
                self.problems.push(format!("{path}: {e}"));
                None
            }
        }
    }

    fn integer(&mut self, table: Option<&Table>, section: &str, key: &str) -> Option<i64> {
        let value = table?.get(key)?;
        match value {
            Value::Integer(i) => Some(*i),
            _ => {
                let path = if section.is_empty() { key.to_string() } else { format!("{section}.{key}") };
                self.problems.push(format!("{path}: expected an integer"));
                None
            }
        }
    }

    fn float(&mut self, table: Option<&Table>, section: &str, key: &str) -> Option<f64> {
        let value = table?.get(key)?;
        match value {
            Value::Float(f) => Some(*f),
            Value::Integer(i) => Some(*i as f64),
            _ => {
                self.problems.push(format!("{section}.{key}: expected a number"));
                None
            }
        }
    }

    fn boolean(&mut self, table: Option<&Table>, section: &str, key: &str) -> Option<bool> {
        let value = table?.get(key)?;
        match value {
            Value::Boolean(b) => Some(*b),
            _ => {
                self.problems.push(format!("{section}.{key}: expected a boolean"));
                None
            }
        }
    }

    fn missing(&mut self, path: &str) {
        self.problems.push(format!("{path}: missing required field"));
    }
}

fn parse_quantity(text: &str, dim: Dim) -> std::result::Result<f64, String> {
    let text = text.trim();
    // Longest prefix that parses as a number; the remainder is the unit.
    let split = (1..=text.len())
        .rev()
        .filter(|&i| text.is_char_boundary(i))
        .find(|&i| text[..i].trim().parse::<f64>().is_ok())
        .ok_or_else(|| format!("cannot parse number in {text:?}"))?;
    let (num, sym) = text.split_at(split);
    let value: f64 = num
        .trim()
        .parse()
        .map_err(|_| format!("cannot parse number in {text:?}"))?;
    let sym = sym.trim();
    if sym.is_empty() {
        return Ok(value);
    }
    let (unit_dim, factor) = unit(sym).ok_or_else(|| format!("unknown unit {sym:?}"))?;
    if unit_dim != dim {
        return Err(format!(
            "unit mismatch: {sym:?} is a {} unit, expected {}",
            unit_dim.name(),
            dim.name()
        ));
    }
    Ok(value * factor)
}

/// Parse a length such as `"0.56 um"`; a bare number is in metres.
pub fn parse_length(text: &str) -> Result<f64> {
    parse_quantity(text, Dim::Length).map_err(|reason| Error::validation("length", reason))
}

const PHYSICAL_KEYS: &[&str] = &[
    "mass",
    "gravity",
    "hbar",
    "drive_frequency",
    "drive_angular_frequency",
    "modulation_amplitude",
    "mirror_strength",
    "rabi_frequency",
    "angular",
    "mirror_steepness",
    "mirror_decay_length",
];
const INITIAL_KEYS: &[&str] = &["z0", "p0", "dz"];
const GRID_KEYS: &[&str] = &["z_min", "z_max", "n_points"];
const TIME_KEYS: &[&str] = &["dt", "steps_per_period", "t_end", "record_stride"];
const ANALYSIS_KEYS: &[&str] = &["revival_search_window", "envelope_window"];

/// Parse and validate a configuration document, filling every default.
pub fn load_config(text: &str) -> Result<SimulationConfig> {
    let root: Table = text.parse().map_err(|e: toml::de::Error| Error::Schema {
        problems: vec![format!("not a valid TOML document: {}", e.message())],
    })?;
    let mut r = Reader { root: &root, problems: Vec::new() };
    r.check_keys(
        "",
        Some(&root),
        &["schema_version", "physical", "initial_state", "grid", "time", "analysis"],
    );

    match r.integer(Some(&root), "", "schema_version") {
        None if !root.contains_key("schema_version") => r.missing("schema_version"),
        Some(v) if v != SCHEMA_VERSION => r
            .problems
            .push(format!("schema_version: unsupported version {v}, expected {SCHEMA_VERSION}")),
        _ => {}
    }

    let phys = r.section("physical");
    let init = r.section("initial_state");
    let grid = r.section("grid");
    let time = r.section("time");
    let analysis = r.section("analysis");
    r.check_keys("physical", phys, PHYSICAL_KEYS);
    r.check_keys("initial_state", init, INITIAL_KEYS);
    r.check_keys("grid", grid, GRID_KEYS);
    r.check_keys("time", time, TIME_KEYS);
    r.check_keys("analysis", analysis, ANALYSIS_KEYS);

    let mass = r.quantity(phys, "physical", "mass", Dim::Mass).unwrap_or(CESIUM_MASS_KG);
    let gravity = r
        .quantity(phys, "physical", "gravity", Dim::Acceleration)
        .unwrap_or(DEFAULT_GRAVITY);
    let hbar = r.quantity(phys, "physical", "hbar", Dim::Action).unwrap_or(HBAR_SI);

    let cyclic = r.quantity(phys, "physical", "drive_frequency", Dim::Frequency);
    let angular = r.quantity(phys, "physical", "drive_angular_frequency", Dim::AngularFrequency);
    let omega = match (cyclic, angular) {
        (Some(f), None) => Some(std::f64::consts::TAU * f),
        (None, Some(w)) => Some(w),
        (Some(_), Some(_)) => {
            r.problems.push(
                "physical: give only one of drive_frequency and drive_angular_frequency".into(),
            );
            None
        }
        (None, None) => {
            r.missing("physical.drive_frequency");
            None
        }
    };

    let lambda = r.quantity(phys, "physical", "modulation_amplitude", Dim::Length);
    if lambda.is_none() && !phys.is_some_and(|t| t.contains_key("modulation_amplitude")) {
        r.missing("physical.modulation_amplitude");
    }

    let steep = r.quantity(phys, "physical", "mirror_steepness", Dim::InverseLength);
    let decay = r.quantity(phys, "physical", "mirror_decay_length", Dim::Length);
    let kappa = match (steep, decay) {
        (Some(k), None) => Some(k),
        (None, Some(l)) if l > 0.0 => Some(1.0 / l),
        (None, Some(l)) => {
            r.problems.push(format!("physical.mirror_decay_length: {l} must be > 0"));
            None
        }
        (Some(_), Some(_)) => {
            r.problems
                .push("physical: give only one of mirror_steepness and mirror_decay_length".into());
            None
        }
        (None, None) => {
            r.missing("physical.mirror_steepness");
            None
        }
    };

    let strength = r.quantity(phys, "physical", "mirror_strength", Dim::Energy);
    let rabi = r.quantity(phys, "physical", "rabi_frequency", Dim::AngularFrequency);
    let rabi_is_angular = r.boolean(phys, "physical", "angular").unwrap_or(true);
    let v0 = match (strength, rabi) {
        (Some(v), None) => Some(v),
        (None, Some(w)) => {
            let w = if rabi_is_angular { w } else { std::f64::consts::TAU * w };
            Some(PhysicalParams::mirror_strength_from_rabi(hbar, w))
        }
        (Some(_), Some(_)) => {
            r.problems.push("physical: give only one of mirror_strength and rabi_frequency".into());
            None
        }
        (None, None) => {
            r.missing("physical.mirror_strength");
            None
        }
    };

    let z0 = r.quantity(init, "initial_state", "z0", Dim::Length);
    if z0.is_none() && !init.is_some_and(|t| t.contains_key("z0")) {
        r.missing("initial_state.z0");
    }
    let p0 = r.quantity(init, "initial_state", "p0", Dim::Momentum).unwrap_or(0.0);
    let dz = r.quantity(init, "initial_state", "dz", Dim::Length);
    if dz.is_none() && !init.is_some_and(|t| t.contains_key("dz")) {
        r.missing("initial_state.dz");
    }

    let z_min = r.quantity(grid, "grid", "z_min", Dim::Length);
    let z_max = r.quantity(grid, "grid", "z_max", Dim::Length);
    let n_points = match r.integer(grid, "grid", "n_points") {
        Some(n) if n > 0 => Some(n as usize),
        Some(n) => {
            r.problems.push(format!("grid.n_points: {n} must be positive"));
            None
        }
        None => Some(DEFAULT_N_POINTS),
    };
    if let Some(n) = n_points {
        if !n.is_power_of_two() || n < 4 {
            r.problems.push(format!("grid.n_points: {n} is not a power of two"));
        }
    }

    let dt = r.quantity(time, "time", "dt", Dim::Time);
    let steps = r.integer(time, "time", "steps_per_period");
    let t_end = r.quantity(time, "time", "t_end", Dim::Time);
    if t_end.is_none() && !time.is_some_and(|t| t.contains_key("t_end")) {
        r.missing("time.t_end");
    }
    let stride = r.integer(time, "time", "record_stride");

    let search = r
        .float(analysis, "analysis", "revival_search_window")
        .unwrap_or(DEFAULT_SEARCH_WINDOW);
    let envelope = r.quantity(analysis, "analysis", "envelope_window", Dim::Time);

    if !r.problems.is_empty() {
        return Err(Error::Schema { problems: r.problems });
    }
    // Every `None` below has been reported as a problem already.
    let (omega, lambda, kappa, v0, z0, dz, t_end, n_points) = (
        omega.unwrap(),
        lambda.unwrap(),
        kappa.unwrap(),
        v0.unwrap(),
        z0.unwrap(),
        dz.unwrap(),
        t_end.unwrap(),
        n_points.unwrap(),
    );

    let period = std::f64::consts::TAU / omega;
    let (dt, steps) = match (dt, steps) {
        (Some(_), Some(_)) => {
            return Err(schema("time: give only one of dt and steps_per_period"));
        }
        (Some(dt), None) => (dt, (period / dt).round().max(1.0) as usize),
        (None, Some(n)) if n > 0 => (period / n as f64, n as usize),
        (None, Some(n)) => return Err(schema(format!("time.steps_per_period: {n} must be positive"))),
        (None, None) => (period / DEFAULT_STEPS_PER_PERIOD as f64, DEFAULT_STEPS_PER_PERIOD),
    };
    let record_stride = match stride {
        Some(s) if s > 0 => s as usize,
        Some(s) => return Err(schema(format!("time.record_stride: {s} must be positive"))),
        None => (steps / 16).max(1),
    };

    let physical = PhysicalParams {
        mass,
        gravity,
        hbar,
        drive_angular_frequency: omega,
        modulation_amplitude: lambda,
        mirror_strength: v0,
        mirror_steepness: kappa,
    };
    let config = SimulationConfig {
        physical,
        initial_state: InitialState { z0, p0, dz },
        grid: GridSpec {
            z_min: z_min.unwrap_or(-DEFAULT_MIRROR_DEPTH / kappa),
            z_max: z_max.unwrap_or(z0 + DEFAULT_TOP_MARGIN),
            n_points,
        },
        time: TimeSpec { dt, t_end, record_stride },
        analysis: AnalysisSpec {
            revival_search_window: search,
            envelope_window: envelope
                .unwrap_or(DEFAULT_ENVELOPE_BOUNCES * physical.bouncer().bounce_period(z0)),
        },
    };
    config.validate()?;
    Ok(config)
}

fn schema(msg: impl Into<String>) -> Error {
    Error::Schema { problems: vec![msg.into()] }
}

/// Serialize a configuration in the same schema, with every default
/// resolved and every quantity as a bare SI number.
///
/// `load_config(&to_toml(&c))` returns `c` unchanged.
pub fn to_toml(config: &SimulationConfig) -> String {
    let p = &config.physical;
    let s = &config.initial_state;
    let g = &config.grid;
    let t = &config.time;
    let a = &config.analysis;
    format!(
        "schema_version = {SCHEMA_VERSION}\n\
         \n\
         [physical]\n\
         mass = {:?} # kg\n\
         gravity = {:?} # m/s^2\n\
         hbar = {:?} # J s\n\
         drive_angular_frequency = {:?} # rad/s\n\
         modulation_amplitude = {:?} # m\n\
         mirror_strength = {:?} # J\n\
         mirror_steepness = {:?} # 1/m\n\
         \n\
         [initial_state]\n\
         z0 = {:?} # m\n\
         p0 = {:?} # kg m/s\n\
         dz = {:?} # m\n\
         \n\
         [grid]\n\
         z_min = {:?} # m\n\
         z_max = {:?} # m\n\
         n_points = {}\n\
         \n\
         [time]\n\
         dt = {:?} # s\n\
         t_end = {:?} # s\n\
         record_stride = {}\n\
         \n\
         [analysis]\n\
         revival_search_window = {:?}\n\
         envelope_window = {:?} # s\n",
        p.mass,
        p.gravity,
        p.hbar,
        p.drive_angular_frequency,
        p.modulation_amplitude,
        p.mirror_strength,
        p.mirror_steepness,
        s.z0,
        s.p0,
        s.dz,
        g.z_min,
        g.z_max,
        g.n_points,
        t.dt,
        t.t_end,
        t.record_stride,
        a.revival_search_window,
        a.envelope_window,
    )
}
