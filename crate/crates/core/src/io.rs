//! File formats: autocorrelation and sweep CSVs, and the binary packet checkpoint.
//!
//! Checkpoint layout, all little-endian:
//!
//! ```text
//! offset  size  field
//!      0     8  magic "RVLPSI01"
//!      8     8  n_points (u64)
//!     16     8  z_min (m, f64)
//!     24     8  z_max (m, f64)
//!     32     8  time (s, f64)
//!     40     8  drive amplitude of the moving frame (m, f64)
//!     48     8  drive angular frequency (rad/s, f64)
//!     56  16 n  re, im of each amplitude (f64 pairs, m^-1/2)
//! ```

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::analysis::SweepResult;
use crate::error::{Error, Result};
use crate::propagator::{Frame, Grid, Propagation, WavePacket};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"RVLPSI01";
const HEADER_LEN: usize = 56;

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `autocorr.csv`: `t_s, re_C, im_C, abs_C, norm, mean_z_m, mean_p, mean_E_J`.
pub fn write_autocorr_csv<W: Write>(run: &Propagation, out: W) -> Result<()> {
    let s = &run.series;
    let o = &run.observables;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t_s", "re_C", "im_C", "abs_C", "norm", "mean_z_m", "mean_p", "mean_E_J"])?;
    for i in 0..s.len() {
        let c = s.values[i];
        w.write_record([
            s.times[i].to_string(),
            c.re.to_string(),
            c.im.to_string(),
            c.norm().to_string(),
            o.norm[i].to_string(),
            o.mean_z[i].to_string(),
            o.mean_p[i].to_string(),
            o.mean_energy[i].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `sweep.csv`: `lambda_m, T_lambda_s, ratio, peak_height, predicted_ratio_eq12,
/// predicted_ratio_eq13, deviation`. Missing values are empty fields.
pub fn write_sweep_csv<W: Write>(sweep: &SweepResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "lambda_m",
        "T_lambda_s",
        "ratio",
        "peak_height",
        "predicted_ratio_eq12",
        "predicted_ratio_eq13",
        "deviation",
    ])?;
    for r in &sweep.rows {
        w.write_record([
            r.lambda.to_string(),
            fmt_opt(r.t_lambda),
            fmt_opt(r.ratio),
            fmt_opt(r.peak_height),
            fmt_opt(r.predicted_ratio_eq12),
            fmt_opt(r.predicted_ratio_eq13),
            fmt_opt(r.deviation()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_checkpoint<W: Write>(packet: &WavePacket, mut out: W) -> Result<()> {
    let Frame::Moving { amplitude, frequency } = packet.frame;
    let mut buf = Vec::with_capacity(HEADER_LEN + 16 * packet.amplitudes.len());
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&(packet.grid.n_points as u64).to_le_bytes());
    for v in [packet.grid.z_min, packet.grid.z_max, packet.time, amplitude, frequency] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for c in &packet.amplitudes {
        buf.extend_from_slice(&c.re.to_le_bytes());
        buf.extend_from_slice(&c.im.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut input: R) -> Result<WavePacket> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() < HEADER_LEN || &bytes[..8] != CHECKPOINT_MAGIC {
        return Err(Error::Io("not a packet checkpoint".into()));
    }
    let f = |at: usize| f64::from_le_bytes(bytes[at..at + 8].try_into().expect("8-byte field"));
    let n = u64::from_le_bytes(bytes[8..16].try_into().expect("8-byte field")) as usize;
    if bytes.len() != HEADER_LEN + 16 * n {
        return Err(Error::Io(format!("checkpoint holds {} bytes, header promises {n} points", bytes.len())));
    }
    let grid = Grid::new(f(16), f(24), n)?;
    let amplitudes = (0..n).map(|j| Complex64::new(f(HEADER_LEN + 16 * j), f(HEADER_LEN + 16 * j + 8))).collect();
    Ok(WavePacket { grid, amplitudes, time: f(32), frame: Frame::Moving { amplitude: f(40), frequency: f(48) } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::load_config;
    use crate::propagator::{make_gaussian, propagate, PropagateOptions};

    #[test]
    fn checkpoint_round_trip() {
        let grid = Grid::new(-3e-6, 29e-6, 256).unwrap();
        let frame = Frame::Moving { amplitude: 5.6e-7, frequency: 5843.4 };
        let mut p = make_gaussian(12e-6, 1e-29, 1e-6, &grid, 1.0545718e-34, frame).unwrap();
        p.time = 0.125;
        let mut buf = Vec::new();
        write_checkpoint(&p, &mut buf).unwrap();
        assert_eq!(buf.len(), HEADER_LEN + 16 * 256);
        let back = read_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(back, p);
        buf.truncate(100);
        assert!(read_checkpoint(buf.as_slice()).is_err());
    }

    #[test]
    fn autocorr_csv_has_one_row_per_sample() {
        let doc = crate::propagator::tests::SMALL;
        let mut cfg = load_config(doc).unwrap();
        cfg.time.t_end = 2e-3;
        let run = propagate(&cfg, &PropagateOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_autocorr_csv(&run, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t_s,re_C,im_C,abs_C,norm,mean_z_m,mean_p,mean_E_J"));
        assert_eq!(lines.count(), run.series.len());
    }
}
