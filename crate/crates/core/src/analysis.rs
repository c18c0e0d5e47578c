//! Revival-time extraction from autocorrelation traces, `lambda` sweeps and
//! comparison with the secular predictions.
//!
//! The revival is read off the upper envelope of `|C(t)|`, a centred sliding
//! maximum over a few bounce periods that hides the oscillation at the
//! classical period. Inside the search window the tallest sample of `|C|`
//! (the sample carrying the envelope maximum) is refined by a three-point
//! parabola.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::propagator::{propagate, AutocorrelationSeries, PropagateOptions, Propagation};
use crate::secular::{QuasiEnergyMode, RevivalPrediction, SecularModel};
use crate::spectrum::SoftWallBouncer;
use crate::units::SimulationConfig;

/// Launch height of the quick profile (m).
pub const QUICK_HEIGHT: f64 = 5e-6;
pub const QUICK_N_POINTS: usize = 1024;
pub const QUICK_STEPS_PER_PERIOD: usize = 512;
/// Grid headroom above the launch height in the quick profile (m).
pub const QUICK_TOP_MARGIN: f64 = 15e-6;
/// Samples per drive period in the quick profile.
const QUICK_SAMPLES_PER_PERIOD: usize = 16;

/// A cheap variant of `config`: lower launch height (`n0` near 21), coarser
/// grid and step, and a horizon just past the undriven revival.
pub fn quick_profile(config: &SimulationConfig) -> Result<SimulationConfig> {
    let mut c = *config;
    c.initial_state.z0 = QUICK_HEIGHT.min(config.initial_state.z0);
    c.grid.z_max = c.initial_state.z0 + QUICK_TOP_MARGIN;
    c.grid.n_points = QUICK_N_POINTS;
    c.time.dt = c.physical.drive_period() / QUICK_STEPS_PER_PERIOD as f64;
    c.time.record_stride = QUICK_STEPS_PER_PERIOD / QUICK_SAMPLES_PER_PERIOD;
    c.analysis.envelope_window = crate::config::DEFAULT_ENVELOPE_BOUNCES * c.bounce_period();
    let t0 = soft_wall_revival_time(&c)?;
    c.time.t_end = t0 * (1.0 + c.analysis.revival_search_window) * 1.05;
    c.validate()?;
    Ok(c)
}

/// Centred sliding maximum of `values` over `2 half + 1` samples.
pub fn sliding_max(values: &[f64], half: usize) -> Vec<f64> {
    let n = values.len();
    let mut out = Vec::with_capacity(n);
    let mut window: VecDeque<usize> = VecDeque::new();
    let mut next = 0;
    for i in 0..n {
        let hi = (i + half).min(n - 1);
        while next <= hi {
            while window.back().is_some_and(|&j| values[j] <= values[next]) {
                window.pop_back();
            }
            window.push_back(next);
            next += 1;
        }
        while window.front().is_some_and(|&j| j + half < i) {
            window.pop_front();
        }
        out.push(values[*window.front().expect("window holds the current sample")]);
    }
    out
}

/// Sample spacing of a uniformly sampled series.
fn spacing(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::Detection("series needs at least two samples".into()));
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(Error::Detection("series times must increase".into()));
    }
    Ok(dt)
}

/// Envelope of `|C(t)|`: the maximum over a window of `window` seconds
/// centred on each sample.
pub fn envelope(series: &AutocorrelationSeries, window: f64) -> Result<Vec<f64>> {
    let dt = spacing(&series.times)?;
    let span = series.times[series.len() - 1] - series.times[0];
    if !(window > 0.0) || window > span {
        return Err(Error::Detection(format!(
            "envelope window {window:e} s must be positive and no longer than the series ({span:e} s)"
        )));
    }
    let half = ((0.5 * window / dt).round() as usize).max(1);
    Ok(sliding_max(&series.magnitudes(), half))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RevivalMeasurement {
    pub t_detected: f64,
    /// Refined `|C|` at the detected time, in `(0, 1]`.
    pub peak_height: f64,
    pub search_window: (f64, f64),
    pub envelope_window: f64,
    /// The peak sits within half an envelope window of a search-window edge,
    /// so a taller revival may lie outside.
    pub edge_saturated: bool,
}

/// Vertex of the parabola through three equally spaced samples, as an
/// offset in units of the spacing and the value there.
fn parabola_vertex(left: f64, mid: f64, right: f64) -> (f64, f64) {
    let curvature = left - 2.0 * mid + right;
    if curvature >= 0.0 {
        return (0.0, mid);
    }
    let offset = (0.5 * (left - right) / curvature).clamp(-0.5, 0.5);
    (offset, mid - 0.25 * (left - right) * offset)
}

/// Locate the revival within `predicted (1 ± half_width)`.
pub fn detect_revival(
    series: &AutocorrelationSeries,
    predicted: f64,
    half_width: f64,
    envelope_window: f64,
) -> Result<RevivalMeasurement> {
    if !(predicted > 0.0) || !(half_width > 0.0 && half_width < 1.0) {
        return Err(Error::Detection(format!(
            "need predicted time > 0 and 0 < half width < 1, got {predicted:e} and {half_width}"
        )));
    }
    let dt = spacing(&series.times)?;
    let (lo, hi) = (predicted * (1.0 - half_width), predicted * (1.0 + half_width));
    let last = series.times[series.len() - 1];
    if last < hi - 0.5 * dt {
        return Err(Error::Detection(format!(
            "series ends at {last:e} s, before the search window closes at {hi:e} s"
        )));
    }
    let env = envelope(series, envelope_window)?;
    let mags = series.magnitudes();
    let idx: Vec<usize> = (0..series.len()).filter(|&i| series.times[i] >= lo && series.times[i] <= hi).collect();
    let (&first, &end) = match (idx.first(), idx.last()) {
        (Some(a), Some(b)) if b > a => (a, b),
        _ => return Err(Error::Detection("search window holds fewer than two samples".into())),
    };
    // the envelope maximum over the window is carried by the tallest |C| sample
    let best = (first..=end).fold(first, |b, i| if mags[i] > mags[b] { i } else { b });
    if best == first || best == end {
        return Err(Error::Detection(format!(
            "no interior maximum of |C| in [{lo:e}, {hi:e}] s; the envelope is monotone there"
        )));
    }
    debug_assert!(env[best] >= mags[best]);
    let (offset, height) = parabola_vertex(mags[best - 1], mags[best], mags[best + 1]);
    let t = series.times[best] + offset * dt;
    let guard = 0.5 * envelope_window;
    Ok(RevivalMeasurement {
        t_detected: t,
        peak_height: height.min(1.0),
        search_window: (lo, hi),
        envelope_window,
        edge_saturated: t - lo < guard || hi - t < guard,
    })
}

/// An envelope peak.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopePeak {
    pub time: f64,
    pub height: f64,
    /// Height above the higher of the two surrounding minima.
    pub prominence: f64,
}

/// Peaks of the envelope with height ≥ `min_height` and prominence ≥
/// `min_prominence` between `t_from` and `t_to`, in time order. Each
/// envelope plateau is reported at its centre.
pub fn envelope_peaks(
    series: &AutocorrelationSeries,
    window: f64,
    t_from: f64,
    t_to: f64,
    min_height: f64,
    min_prominence: f64,
) -> Result<Vec<EnvelopePeak>> {
    let env = envelope(series, window)?;
    // collapse the staircase into runs of equal value
    let mut runs: Vec<(usize, usize, f64)> = Vec::new();
    for (i, &v) in env.iter().enumerate() {
        match runs.last_mut() {
            Some(r) if r.2 == v => r.1 = i,
            _ => runs.push((i, i, v)),
        }
    }
    let mut peaks = Vec::new();
    for k in 1..runs.len().saturating_sub(1) {
        let (a, b, v) = runs[k];
        if !(v > runs[k - 1].2 && v > runs[k + 1].2) || v < min_height {
            continue;
        }
        let time = 0.5 * (series.times[a] + series.times[b]);
        if time < t_from || time > t_to {
            continue;
        }
        let side_min = |iter: &mut dyn Iterator<Item = usize>| {
            let mut lowest = v;
            for j in iter {
                if runs[j].2 > v {
                    return lowest;
                }
                lowest = lowest.min(runs[j].2);
            }
            lowest
        };
        let left = side_min(&mut (0..k).rev());
        let right = side_min(&mut (k + 1..runs.len()));
        let prominence = v - left.max(right);
        if prominence >= min_prominence {
            peaks.push(EnvelopePeak { time, height: v, prominence });
        }
    }
    Ok(peaks)
}

/// Change of the bounce-averaged `<E>` between the first and the last
/// averaging window, relative to the initial energy.
pub fn energy_drift(times: &[f64], energy: &[f64], window: f64) -> Result<f64> {
    let dt = spacing(times)?;
    let m = (window / dt).round() as usize;
    if m == 0 || 2 * m > energy.len() {
        return Err(Error::Detection(format!("averaging window {window:e} s does not fit the series")));
    }
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    Ok((mean(&energy[energy.len() - m..]) - mean(&energy[..m])) / energy[0])
}

/// One row of a modulation-amplitude sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    /// Detected revival time (s).
    pub t_lambda: Option<f64>,
    /// `T_lambda / T0` with the detected `T0` of the `lambda = 0` row.
    pub ratio: Option<f64>,
    pub peak_height: Option<f64>,
    pub edge_saturated: bool,
    /// Centre of the search window (s).
    pub search_centre: f64,
    pub predicted_ratio_eq12: Option<f64>,
    pub predicted_ratio_eq13: Option<f64>,
    pub predicted_ratio_spectral: Option<f64>,
    pub q: Option<f64>,
    /// Why the row has no measurement, if it has none.
    pub failure: Option<String>,
}

impl SweepRow {
    /// Relative deviation of the measured ratio from the closed-form prediction.
    pub fn deviation(&self) -> Option<f64> {
        match (self.ratio, self.predicted_ratio_eq12) {
            (Some(r), Some(p)) if p != 0.0 => Some(((r - p) / p).abs()),
            _ => None,
        }
    }

    /// Usable for the power-law fit.
    fn fittable(&self) -> bool {
        self.lambda > 0.0 && !self.edge_saturated && self.ratio.is_some_and(|r| r < 1.0)
    }
}

/// Power law `1 - T_lambda / T0 ≈ c lambda^beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLaw {
    pub exponent: f64,
    pub coefficient: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// Rows sorted by `lambda`.
    pub rows: Vec<SweepRow>,
    /// Detected undriven revival time (s).
    pub t0_detected: Option<f64>,
    /// Hard-wall prediction of the undriven revival time (s).
    pub t0_predicted: f64,
    /// Undriven revival time of the exponential mirror (s); centres the searches.
    pub t0_soft_wall: f64,
    pub fit: Option<PowerLaw>,
    /// The propagation behind each row, same order as `rows`; `None` where it failed.
    #[serde(skip)]
    pub runs: Vec<Option<Propagation>>,
}

/// Least-squares slope and intercept of `log y` against `log x`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Option<PowerLaw> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let exponent = sxy / sxx;
    Some(PowerLaw { exponent, coefficient: (my - exponent * mx).exp(), points: pts.len() })
}

/// Fit the power law to the usable rows of a sweep.
pub fn fit_rows(rows: &[SweepRow]) -> Option<PowerLaw> {
    let pts: Vec<(f64, f64)> =
        rows.iter().filter(|r| r.fittable()).map(|r| (r.lambda, 1.0 - r.ratio.unwrap_or(1.0))).collect();
    fit_power_law(&pts)
}

/// The secular model of a configuration's launch condition.
pub fn secular_model(config: &SimulationConfig) -> Result<SecularModel> {
    let p = &config.physical;
    SecularModel::from_height(p.bouncer(), p.drive_angular_frequency, config.initial_state.z0)
}

/// Predictions for each `lambda`; a failing route yields `None`.
pub fn predictions(model: &SecularModel, lambdas: &[f64]) -> Vec<Option<RevivalPrediction>> {
    lambdas.iter().map(|&l| model.predict(l, QuasiEnergyMode::Numeric).ok()).collect()
}

/// Mean energy of the initial Gaussian in the static potential (J).
pub fn packet_energy(config: &SimulationConfig) -> f64 {
    let p = &config.physical;
    let s = &config.initial_state;
    let kappa = p.mirror_steepness;
    let kinetic = (s.p0 * s.p0 + (p.hbar / (2.0 * s.dz)).powi(2)) / (2.0 * p.mass);
    let wall = p.mirror_strength * (-kappa * s.z0 + 0.5 * (kappa * s.dz).powi(2)).exp();
    p.bouncer().weight() * s.z0 + wall + kinetic
}

/// Undriven revival time of the simulated Hamiltonian, from the WKB spectrum
/// of the exponential mirror at the packet's mean energy (s).
pub fn soft_wall_revival_time(config: &SimulationConfig) -> Result<f64> {
    SoftWallBouncer::new(&config.physical)?.revival_time(packet_energy(config))
}

/// Expected revival time of the configured run (s), used to centre detection.
pub fn expected_revival_time(config: &SimulationConfig) -> Result<f64> {
    let t0 = soft_wall_revival_time(config)?;
    let pred = secular_model(config)?.predict(config.physical.modulation_amplitude, QuasiEnergyMode::Numeric).ok();
    Ok(search_centre(t0, pred.as_ref()))
}

/// Where to look for the revival at `lambda`: the undriven revival of the
/// simulated mirror, scaled by the predicted ratio while the `q^2` theory is
/// valid.
fn search_centre(t0: f64, prediction: Option<&RevivalPrediction>) -> f64 {
    match prediction {
        Some(p) if p.validity.perturbative => t0 * p.t_spectral / p.t0,
        _ => t0,
    }
}

/// Run one propagation per `lambda` (on `jobs` threads) and measure each revival.
///
/// Each run's `t_end` is extended when needed to cover its search window.
pub fn sweep_lambda(base: &SimulationConfig, lambdas: &[f64], jobs: usize) -> Result<SweepResult> {
    if !lambdas.contains(&0.0) {
        return Err(Error::Validation {
            field: "lambda_list".into(),
            reason: "the sweep needs lambda = 0 to define T0".into(),
        });
    }
    let mut lambdas: Vec<f64> = lambdas.to_vec();
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();
    let model = secular_model(base)?;
    let t0_predicted = model.revival_time_undriven()?;
    let t0_soft_wall = soft_wall_revival_time(base)?;
    let preds = predictions(&model, &lambdas);
    let w = base.analysis.revival_search_window;

    let run = |i: usize| -> (SweepRow, Option<Propagation>) {
        let lambda = lambdas[i];
        let pred = preds[i].as_ref();
        let centre = search_centre(t0_soft_wall, pred);
        let mut cfg = *base;
        cfg.physical.modulation_amplitude = lambda;
        let needed = centre * (1.0 + w) + 2.0 * cfg.time.dt * cfg.time.record_stride as f64;
        cfg.time.t_end = cfg.time.t_end.max(needed);
        let mut row = SweepRow {
            lambda,
            t_lambda: None,
            ratio: None,
            peak_height: None,
            edge_saturated: false,
            search_centre: centre,
            predicted_ratio_eq12: pred.map(|p| p.t_eq12 / p.t0),
            predicted_ratio_eq13: pred.map(|p| p.t_eq13 / p.t0),
            predicted_ratio_spectral: pred.map(|p| p.t_spectral / p.t0),
            q: pred.map(|p| p.q),
            failure: None,
        };
        let prop = match propagate(&cfg, &PropagateOptions::default()) {
            Ok(p) => p,
            Err(e) => {
                row.failure = Some(e.to_string());
                return (row, None);
            }
        };
        match detect_revival(&prop.series, centre, w, cfg.analysis.envelope_window) {
            Ok(m) => {
                row.t_lambda = Some(m.t_detected);
                row.peak_height = Some(m.peak_height);
                row.edge_saturated = m.edge_saturated;
            }
            Err(e) => row.failure = Some(e.to_string()),
        }
        (row, Some(prop))
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Setup(format!("cannot start worker pool: {e}")))?;
    let results: Vec<(SweepRow, Option<Propagation>)> =
        pool.install(|| (0..lambdas.len()).into_par_iter().map(run).collect());
    let (mut rows, runs): (Vec<SweepRow>, Vec<Option<Propagation>>) = results.into_iter().unzip();

    let t0_detected = rows.iter().find(|r| r.lambda == 0.0).and_then(|r| r.t_lambda);
    if let Some(t0) = t0_detected {
        for r in &mut rows {
            r.ratio = r.t_lambda.map(|t| t / t0);
        }
    }
    let fit = fit_rows(&rows);
    Ok(SweepResult { rows, t0_detected, t0_predicted, t0_soft_wall, fit, runs })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub lambda: f64,
    pub measured_ratio: Option<f64>,
    pub predicted_ratio: Option<f64>,
    pub deviation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    pub max_deviation: Option<f64>,
    pub mean_deviation: Option<f64>,
}

/// Relative deviation of measured `T_lambda / T0` from the closed-form
/// prediction at each `lambda`.
pub fn compare(sweep: &SweepResult, predictions: &[Option<RevivalPrediction>]) -> Result<Comparison> {
    if sweep.rows.len() != predictions.len() {
        return Err(Error::Mismatch(format!(
            "{} sweep rows but {} predictions",
            sweep.rows.len(),
            predictions.len()
        )));
    }
    let mut rows = Vec::with_capacity(predictions.len());
    for (r, p) in sweep.rows.iter().zip(predictions) {
        if let Some(p) = p {
            if (p.lambda - r.lambda).abs() > 1e-12 * r.lambda.abs().max(1e-12) {
                return Err(Error::Mismatch(format!("lambda {} vs prediction at {}", r.lambda, p.lambda)));
            }
        }
        let predicted = p.as_ref().map(|p| p.t_eq12 / p.t0);
        let deviation = match (r.ratio, predicted) {
            (Some(m), Some(q)) if q != 0.0 => Some(((m - q) / q).abs()),
            _ => None,
        };
        rows.push(ComparisonRow { lambda: r.lambda, measured_ratio: r.ratio, predicted_ratio: predicted, deviation });
    }
    let devs: Vec<f64> = rows.iter().filter_map(|r| r.deviation).collect();
    let max_deviation = devs.iter().copied().reduce(f64::max);
    let mean_deviation = (!devs.is_empty()).then(|| devs.iter().sum::<f64>() / devs.len() as f64);
    Ok(Comparison { rows, max_deviation, mean_deviation })
}
