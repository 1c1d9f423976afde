//! CSV and JSON writers. Floats use 17 significant digits so files are
//! bit-stable across runs.

use std::fmt::Write as _;
use std::path::Path;

use prodline::{EnsembleStats64, JumpEvent, TrajectoryRecord64};

use crate::CliError;

/// `d.dddddddddddddddde±x`: 17 significant digits, exact for f64.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn row(out: &mut String, fields: &[f64]) {
    for (i, x) in fields.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&fmt_float(*x));
    }
    out.push('\n');
}

pub const MOMENTS_HEADER: &str =
    "t,mean_w,se_w,mean_capacity,se_capacity,mean_q,se_q,mean_rho_b,se_rho_b";
pub const HISTOGRAM_HEADER: &str = "repairs,frequency";
pub const TRAJECTORY_HEADER: &str = "t,w,r,capacity,q,rho_b";
pub const JUMPS_HEADER: &str = "time,kind,w_before,w_after,r_after,q_after,mass_after";

pub fn moments_csv(stats: &EnsembleStats64) -> String {
    let m = &stats.moments;
    let mut out = String::with_capacity(m.sample_times.len() * 220);
    out.push_str(MOMENTS_HEADER);
    out.push('\n');
    for (i, &t) in m.sample_times.iter().enumerate() {
        row(
            &mut out,
            &[
                t,
                m.w.mean[i],
                m.w.stderr[i],
                m.capacity.mean[i],
                m.capacity.stderr[i],
                m.q.mean[i],
                m.q.stderr[i],
                m.outflow_density.mean[i],
                m.outflow_density.stderr[i],
            ],
        );
    }
    out
}

pub fn histogram_csv(stats: &EnsembleStats64) -> String {
    let mut out = String::from(HISTOGRAM_HEADER);
    out.push('\n');
    for (k, f) in &stats.repair_histogram {
        let _ = writeln!(out, "{k},{}", fmt_float(*f));
    }
    out
}

pub fn trajectory_csv(record: &TrajectoryRecord64) -> String {
    let mut out = String::from(TRAJECTORY_HEADER);
    out.push('\n');
    for i in 0..record.sample_times.len() {
        let capacity = record.capacity_series[i];
        let r = if capacity > 0.0 { 1.0 } else { 0.0 };
        row(
            &mut out,
            &[
                record.sample_times[i],
                record.w_series[i],
                r,
                capacity,
                record.q_series[i],
                record.outflow_density_series[i],
            ],
        );
    }
    out
}

pub fn jumps_csv(jumps: &[JumpEvent<f64>]) -> String {
    let mut out = String::from(JUMPS_HEADER);
    out.push('\n');
    for j in jumps {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt_float(j.time),
            j.kind.as_str(),
            fmt_float(j.w_before),
            fmt_float(j.w_after),
            j.r_after.bit(),
            fmt_float(j.q_after),
            fmt_float(j.mass_after),
        );
    }
    out
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::Io {
        path,
        reason: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_carry_17_significant_digits() {
        assert_eq!(fmt_float(0.5), "5.0000000000000000e-1");
        assert_eq!(fmt_float(0.0), "0.0000000000000000e0");
        for x in [0.1, 1.0 / 3.0, 6.02e23, -2.5e-300] {
            assert_eq!(fmt_float(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }
}
