//! Acceptance suite: one PASS/FAIL line per criterion, at the stated tolerances.
//!
//! The full-scale propagations (eight runs at launch heights 20.1 and 29.8 um)
//! take about an hour on one core. `REVIVAL_ACCEPTANCE_QUICK=1` skips them and
//! prints SKIP for the criteria that need them.
//!
//! A failing criterion is reported, not asserted: the suite exits 0 unless the
//! harness itself breaks.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use revival_core::analysis::{
    detect_revival, envelope, envelope_peaks, quick_profile, secular_model, soft_wall_revival_time, sweep_lambda,
    SweepResult,
};
use revival_core::config::load_config;
use revival_core::io::write_sweep_csv;
use revival_core::mathieu::{char_value, char_value_numeric, char_value_perturbative, MathieuQuery};
use revival_core::propagator::{propagate, PropagateOptions};
use revival_core::secular::QuasiEnergyMode;
use revival_core::spectrum::{airy_energy_unit, airy_levels, energy_of_action, h_double_prime};
use revival_core::SimulationConfig;

const UM: f64 = 1e-6;
const LAMBDAS_UM: [f64; 3] = [0.28, 0.56, 1.13];

/// Launch-height parameter set with the grid and step pinned for acceptance.
fn config(z0_um: f64, steps_per_period: usize) -> SimulationConfig {
    let doc = format!(
        r#"
schema_version = 1
[physical]
drive_frequency = "0.93 kHz"
modulation_amplitude = 0
mirror_decay_length = "0.57 um"
rabi_frequency = 23.38e3
[initial_state]
z0 = "{z0_um} um"
dz = "0.28 um"
[grid]
n_points = 2048
[time]
steps_per_period = {steps_per_period}
record_stride = {stride}
t_end = "0.1 s"
"#,
        stride = steps_per_period / 16
    );
    load_config(&doc).expect("acceptance configuration")
}

fn fig2() -> SimulationConfig {
    config(20.1, 2048)
}

/// The phase guard needs finer steps at the larger launch height.
fn high() -> SimulationConfig {
    config(29.8, 3072)
}

fn verdict(id: u32, pass: Option<bool>, text: String) {
    let tag = match pass {
        Some(true) => "PASS",
        Some(false) => "FAIL",
        None => "SKIP",
    };
    println!("criterion {id} | {tag} | {text}");
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// `Ai` from its Maclaurin series, accurate to ~1e-15 for |x| < 3.
fn ai_series(x: f64) -> f64 {
    const C1: f64 = 0.355_028_053_887_817_24;
    const C2: f64 = 0.258_819_403_792_806_8;
    let (mut f, mut g) = (1.0, x);
    let (mut tf, mut tg) = (1.0, x);
    let x3 = x * x * x;
    for k in 1..60 {
        let k = k as f64;
        tf *= x3 / ((3.0 * k - 1.0) * (3.0 * k));
        tg *= x3 / ((3.0 * k) * (3.0 * k + 1.0));
        f += tf;
        g += tg;
    }
    C1 * f - C2 * g
}

fn first_airy_zero() -> f64 {
    let (mut lo, mut hi) = (-2.5, -2.2);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ai_series(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn criterion_1() {
    let start = Instant::now();
    let b = fig2().bouncer();
    let table = airy_levels(&b, 200).expect("levels");
    let e1 = table.levels[0].energy_exact / airy_energy_unit(&b);
    let oracle = -first_airy_zero();
    let gap = table.relative_gaps()[176];
    let elapsed = start.elapsed().as_secs_f64();
    let pass = table.levels.len() == 200
        && rel(e1, oracle) < 1e-6
        && (e1 - 2.33811).abs() <= 5e-6
        && gap < 1e-4
        && elapsed < 1.0;
    verdict(
        1,
        Some(pass),
        format!(
            "E(1)/unit = {e1:.12} vs series-root oracle {oracle:.12} (rel {:.1e}; quoted 2.33811 within its rounding); \
             semiclassical gap at n=176 = {gap:.2e} (< 1e-4); {elapsed:.3} s",
            rel(e1, oracle)
        ),
    );
}

fn criterion_2() {
    let start = Instant::now();
    let b = fig2().bouncer();
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let i0 = b.hbar * 10f64.powf(i as f64 * 4.0 / 49.0);
        let e = |x: f64| energy_of_action(&b, x).expect("energy");
        // five-point stencil, Richardson-extrapolated in the step
        let d2 = |h: f64| {
            (-e(i0 + 2.0 * h) + 16.0 * e(i0 + h) - 30.0 * e(i0) + 16.0 * e(i0 - h) - e(i0 - 2.0 * h)) / (12.0 * h * h)
        };
        let h = 0.02 * i0;
        let fd = (64.0 * d2(0.5 * h) - d2(h)) / 63.0;
        let closed = -(b.mass * b.gravity * b.gravity).cbrt() * (PI / (9.0 * i0 * i0)).powf(2.0 / 3.0);
        worst = worst.max(rel(fd, closed));
        assert!(rel(h_double_prime(&b, i0).unwrap(), closed) < 1e-12);
    }
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        2,
        Some(worst < 1e-8 && elapsed < 1.0),
        format!("max relative gap, finite difference vs closed form over 50 actions in [hbar, 1e4 hbar] = {worst:.2e}; {elapsed:.3} s"),
    );
}

/// Leading coefficient of the `q^4` term of `a_nu(q)`.
fn q4_coefficient(nu: f64) -> f64 {
    let s = nu * nu;
    (5.0 * s + 7.0) / (32.0 * (s - 1.0).powi(3) * (s - 4.0))
}

fn criterion_3() {
    let start = Instant::now();
    let mut rng = rand::rngs::StdRng::seed_from_u64(17);
    let mut zero_worst: f64 = 0.0;
    let mut drawn = 0;
    while drawn < 100 {
        let nu: f64 = rng.gen_range(1.5..10.0);
        if (nu - nu.round()).abs() < 0.01 {
            continue;
        }
        drawn += 1;
        let a = char_value(nu, 0.0).expect("a(0)");
        zero_worst = zero_worst.max((a - nu * nu).abs() / (f64::EPSILON * nu * nu));
    }
    // |numeric - perturbative| <= C q^4 with C = 1.5 |leading q^4 coefficient|
    let mut q4_ok = true;
    let mut ratio_max: f64 = 0.0;
    for i in 0..34 {
        let nu = 1.5 + 0.25 * i as f64;
        if (nu - nu.round()).abs() < 0.1 {
            continue;
        }
        let c = 1.5 * q4_coefficient(nu).abs();
        for j in 1..=30 {
            let q = 0.01 * j as f64;
            let gap = (char_value(nu, q).unwrap() - char_value_perturbative(nu, q).unwrap()).abs();
            if gap > 1e-13 {
                ratio_max = ratio_max.max(gap / (q4_coefficient(nu).abs() * q.powi(4)));
            }
            q4_ok &= gap <= c * q.powi(4) + 1e-13;
        }
    }
    let mut trunc_worst: f64 = 0.0;
    for (nu, q) in [(1.5, 0.3), (5.37, 0.3), (9.75, 0.2), (15.4704, 872.65), (13.29, 3.9)] {
        let base = MathieuQuery::new(nu, q);
        let wide = MathieuQuery { half_width: 4 * base.half_width, ..base };
        let (a, b) = (char_value_numeric(&base).unwrap(), char_value_numeric(&wide).unwrap());
        trunc_worst = trunc_worst.max((a - b).abs() / a.abs().max(1.0));
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = zero_worst <= 4.0 && q4_ok && trunc_worst < 1e-10 && elapsed < 10.0;
    verdict(
        3,
        Some(pass),
        format!(
            "a(0) = nu^2 within {zero_worst:.1} ulp-scale units over 100 random nu; \
             gap/(c4 q^4) <= {ratio_max:.3} (bound 1.5) where above rounding on nu in [1.5, 10], q in [0.01, 0.3]; \
             truncation change {trunc_worst:.1e}; {elapsed:.2} s"
        ),
    );
}

/// Revival-peak `|C|` of the quick profile at a given refinement.
fn quick_peak(base: &SimulationConfig, refine: usize) -> (f64, f64) {
    let mut c = *base;
    c.grid.n_points *= refine;
    c.time.dt /= refine as f64;
    c.time.record_stride *= refine;
    let t_soft = soft_wall_revival_time(&c).unwrap();
    let run = propagate(&c, &PropagateOptions::default()).expect("quick run");
    let m = detect_revival(&run.series, t_soft, 0.25, c.analysis.envelope_window).expect("quick revival");
    (m.peak_height, m.t_detected)
}

fn criterion_4(full: Option<&SweepResult>) {
    let start = Instant::now();
    let quick = quick_profile(&fig2()).unwrap();
    let (coarse, t_c) = quick_peak(&quick, 1);
    let (fine, t_f) = quick_peak(&quick, 2);
    let quick_s = start.elapsed().as_secs_f64();
    let change = (coarse - fine).abs();
    let quick_ok = change < 1e-4 && quick_s < 300.0;
    let quick_text = format!(
        "quick profile revival |C| {coarse:.6} -> {fine:.6} (change {change:.1e}, peak at {t_c:.5} -> {t_f:.5} s) \
         on halving dz and dt, {quick_s:.0} s"
    );
    match full.and_then(|s| s.runs[0].as_ref()) {
        Some(run) => {
            let drift = run.observables.norm.iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max);
            let t = run.series.times.last().copied().unwrap_or(0.0);
            verdict(
                4,
                Some(quick_ok && drift < 1e-9),
                format!("full lambda=0 run to {t:.2} s ({} steps): max |norm - 1| = {drift:.1e}; {quick_text}", run.steps),
            );
        }
        None => verdict(4, if quick_ok { None } else { Some(false) }, format!("full run skipped; {quick_text}")),
    }
}

fn criterion_5(sweep: &SweepResult, base: &SimulationConfig) {
    let t0 = sweep.t0_predicted;
    let t_soft = sweep.t0_soft_wall;
    let (Some(row), Some(run)) = (sweep.rows.first(), sweep.runs[0].as_ref()) else {
        verdict(5, Some(false), "lambda = 0 run failed".into());
        return;
    };
    let Some(t_det) = row.t_lambda else {
        verdict(5, Some(false), format!("no revival detected: {:?}", row.failure));
        return;
    };
    let w = base.analysis.envelope_window;
    let series = &run.series;
    // the revival found near the simulated mirror's prediction is the tallest
    // recurrence after the collapse
    let mags = series.magnitudes();
    let after = series.times.iter().position(|&t| t > 0.55 * t_det).unwrap_or(0);
    let tallest = after + mags[after..].iter().enumerate().fold(0, |b, (i, v)| if *v > mags[after + b] { i } else { b });
    let literal = detect_revival(series, t0, 0.25, w);
    let peaks = envelope_peaks(series, w, 0.1 * t_det, 0.9 * t_det, 0.3, 0.1).unwrap();
    let env = envelope(series, w).unwrap();
    let mut plateau: Vec<f64> = series
        .times
        .iter()
        .zip(&env)
        .filter(|(t, _)| **t > 0.3 * t_det && **t < 0.45 * t_det)
        .map(|(_, e)| *e)
        .collect();
    plateau.sort_by(f64::total_cmp);
    let plateau = plateau.get(plateau.len() / 2).copied().unwrap_or(f64::NAN);
    let peak_list: Vec<String> = peaks.iter().map(|p| format!("{:.3}T ({:.2})", p.time / t_det, p.height)).collect();
    let within = rel(t_det, t0) < 0.05;
    let literal_text = match literal {
        Ok(m) => format!(
            "the window T0 +/- 25% alone peaks at {:.4} s = {:.3} of the detected revival (|C| {:.2})",
            m.t_detected,
            m.t_detected / t_det,
            m.peak_height
        ),
        Err(e) => format!("the window T0 +/- 25% alone finds nothing: {e}"),
    };
    verdict(
        5,
        Some(within && peaks.len() >= 2),
        format!(
            "revival at {t_det:.4} s (|C| {:.3}, tallest recurrence at {:.4} s) vs hard-wall T0 = {t0:.4} s: ratio {:.4} \
             (tolerance 5%); exponential-mirror WKB predicts {t_soft:.4} s (ratio {:.4}); {literal_text}; \
             {} fractional peaks before the revival: [{}]; envelope plateau {plateau:.3}, revival exceeds it by {:.3}",
            row.peak_height.unwrap_or(f64::NAN),
            series.times[tallest],
            t_det / t0,
            t_det / t_soft,
            peaks.len(),
            peak_list.join(", "),
            row.peak_height.unwrap_or(f64::NAN) - plateau
        ),
    );
}

fn row_summary(s: &SweepResult) -> String {
    s.rows
        .iter()
        .map(|r| match r.ratio {
            Some(x) => format!(
                "{:.2}um: {x:.4}{}",
                r.lambda / UM,
                if r.edge_saturated { " (edge)" } else { "" }
            ),
            None => format!("{:.2}um: failed ({})", r.lambda / UM, r.failure.as_deref().unwrap_or("no detection")),
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn criterion_6(sweep: &SweepResult) {
    let rows = row_summary(sweep);
    match sweep.fit {
        Some(f) => verdict(
            6,
            Some((f.exponent - 2.0).abs() <= 0.2 && f.points == 3),
            format!("beta = {:.3} (c = {:.3e}, {} points) from T_lambda/T0 at 20.1 um: {rows}", f.exponent, f.coefficient, f.points),
        ),
        None => {
            let p = fig2().physical;
            let k: Vec<String> = LAMBDAS_UM
                .iter()
                .map(|l| format!("{:.1}", 4.0 * l * UM * p.drive_angular_frequency.powi(2) / p.gravity))
                .collect();
            verdict(
                6,
                Some(false),
                format!(
                    "fewer than two rows with 0 < 1 - T_lambda/T0 usable for the fit: {rows}; \
                     stochasticity 4 lambda omega^2 / g = [{}]",
                    k.join(", ")
                ),
            )
        }
    }
}

fn criterion_7(low: &SweepResult, high: &SweepResult) {
    let mut ordered = true;
    let mut dev_ok = true;
    let mut parts = Vec::new();
    for (a, b) in low.rows.iter().zip(&high.rows).filter(|(a, _)| a.lambda > 0.0) {
        let (ra, rb) = (a.ratio, b.ratio);
        let strictly = matches!((ra, rb), (Some(x), Some(y)) if (1.0 - y).abs() < (1.0 - x).abs());
        ordered &= strictly;
        for r in [a, b] {
            dev_ok &= r.deviation().is_some_and(|d| d <= 0.05);
        }
        let f = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.4}"));
        parts.push(format!(
            "{:.2}um: |1-T/T0| {} (20.1) vs {} (29.8), eq12 ratio {} / {}, deviation {} / {}",
            a.lambda / UM,
            f(ra.map(|x| (1.0 - x).abs())),
            f(rb.map(|x| (1.0 - x).abs())),
            f(a.predicted_ratio_eq12),
            f(b.predicted_ratio_eq12),
            f(a.deviation()),
            f(b.deviation()),
        ));
    }
    verdict(
        7,
        Some(ordered && dev_ok),
        format!("ordering {}; deviation <= 5% {}; {}", if ordered { "holds" } else { "violated" }, if dev_ok { "holds" } else { "violated" }, parts.join("; ")),
    );
}

fn criterion_8() {
    let start = Instant::now();
    let cfg = fig2();
    let model = secular_model(&cfg).unwrap();
    let mut worst: f64 = 0.0;
    let mut first_break = None;
    for l_um in [0.01, 0.02, 0.05, 0.1, 0.28, 0.56, 1.13] {
        let l = l_um * UM;
        let t = [
            model.revival_time_spectral(l, QuasiEnergyMode::Numeric),
            model.revival_time_eq12(l),
            model.revival_time_eq13(l),
        ];
        let spread = match t {
            [Ok(a), Ok(b), Ok(c)] => {
                let hi = a.max(b).max(c);
                let lo = a.min(b).min(c);
                (hi - lo) / lo.abs().min(hi.abs())
            }
            _ => f64::INFINITY,
        };
        if spread > 0.02 && first_break.is_none() {
            first_break = Some(l_um);
        }
        worst = worst.max(spread);
    }
    let high_model = secular_model(&high()).unwrap();
    let p = high_model.predict(0.0, QuasiEnergyMode::Numeric).unwrap();
    let lam = 0.28 * UM;
    let s12 = high_model.shift_eq12(lam).unwrap();
    let s13 = high_model.shift_eq13(lam).unwrap();
    let gap = ((s13 - s12) / s12).abs();
    let elapsed = start.elapsed().as_secs_f64();
    let routes_ok = worst <= 0.02;
    let gap_ok = !p.validity.high_energy || gap < 1e-3;
    verdict(
        8,
        Some(routes_ok && gap_ok && elapsed < 1.0),
        format!(
            "route spread over lambda in [0.01, 1.13] um at 20.1 um: max {worst:.3e} (tolerance 2%, first exceeded at {}); \
             large-energy gap |shift13/shift12 - 1| = {gap:.2e} at 29.8 um where E/hbar omega = {:.1} (tolerance 1e-3); {elapsed:.2} s",
            first_break.map_or("none".to_string(), |l| format!("{l} um")),
            p.validity.energy_over_hbar_omega
        ),
    );
}

fn sweep_bytes(s: &SweepResult) -> (Vec<u8>, Vec<u8>) {
    let mut csv = Vec::new();
    write_sweep_csv(s, &mut csv).unwrap();
    (csv, serde_json::to_vec(s).unwrap())
}

fn criterion_9() {
    let start = Instant::now();
    let quick = quick_profile(&fig2()).unwrap();
    let lambdas = [0.0, 0.02 * UM, 0.04 * UM];
    let serial = sweep_lambda(&quick, &lambdas, 1).unwrap();
    let parallel = sweep_lambda(&quick, &lambdas, 4).unwrap();
    let again = sweep_lambda(&quick, &lambdas, 1).unwrap();
    let (a, b, c) = (sweep_bytes(&serial), sweep_bytes(&parallel), sweep_bytes(&again));
    let traces_equal = serial.runs.iter().zip(&parallel.runs).all(|(x, y)| match (x, y) {
        (Some(x), Some(y)) => x.series == y.series && x.observables == y.observables,
        _ => false,
    });
    verdict(
        9,
        Some(a == b && a == c && traces_equal),
        format!(
            "quick sweep over {} amplitudes: CSV ({} bytes) and JSON ({} bytes) identical for jobs=1, jobs=4 and a rerun; \
             series identical; {:.0} s",
            lambdas.len(),
            a.0.len(),
            a.1.len(),
            start.elapsed().as_secs_f64()
        ),
    );
}

fn full_sweep(base: &SimulationConfig) -> SweepResult {
    let mut lambdas = vec![0.0];
    lambdas.extend(LAMBDAS_UM.iter().map(|l| l * UM));
    sweep_lambda(base, &lambdas, 1).expect("sweep")
}

fn main() {
    let quick_only = std::env::var("REVIVAL_ACCEPTANCE_QUICK").is_ok_and(|v| v == "1");
    println!("acceptance suite ({})", if quick_only { "full-scale runs skipped" } else { "full scale" });
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_8();
    criterion_9();
    if quick_only {
        criterion_4(None);
        for id in 5..=7 {
            verdict(id, None, "needs the full-scale runs".into());
        }
        return;
    }
    let start = Instant::now();
    let low = full_sweep(&fig2());
    println!("  20.1 um sweep: {:.0} s", start.elapsed().as_secs_f64());
    criterion_4(Some(&low));
    criterion_5(&low, &fig2());
    criterion_6(&low);
    let start = Instant::now();
    let high = full_sweep(&high());
    println!("  29.8 um sweep: {:.0} s; rows {}", start.elapsed().as_secs_f64(), row_summary(&high));
    criterion_7(&low, &high);
}
