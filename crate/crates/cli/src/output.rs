//! Output-directory writers: trajectory CSVs, metrics/summary JSON, and the
//! effective-config echo.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use liectrl::adaptive::{TrackingMetrics, TrackingRun};

/// Writes a rollout as CSV: time, actual pose (position + row-major rotation)
/// and twist, then the reference counterparts. A zero-length rollout
/// produces the header only.
pub fn write_trajectory_csv(path: &Path, run: &TrackingRun) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let mut header: Vec<String> = vec!["t".into()];
    for prefix in ["", "ref_"] {
        for axis in ["px", "py", "pz"] {
            header.push(format!("{prefix}{axis}"));
        }
        for i in 0..3 {
            for j in 0..3 {
                header.push(format!("{prefix}r{i}{j}"));
            }
        }
        for axis in ["wx", "wy", "wz", "vx", "vy", "vz"] {
            header.push(format!("{prefix}{axis}"));
        }
    }
    writeln!(w, "{}", header.join(","))?;

    if run.samples.len() <= 1 {
        return w.flush();
    }
    for s in &run.samples {
        let mut fields: Vec<String> = vec![format!("{}", s.t)];
        for (pose, twist) in [(&s.pose, &s.twist), (&s.ref_pose, &s.ref_twist)] {
            for k in 0..3 {
                fields.push(format!("{}", pose.position()[k]));
            }
            let r = pose.rotation().matrix();
            for i in 0..3 {
                for j in 0..3 {
                    fields.push(format!("{}", r[(i, j)]));
                }
            }
            for k in 0..3 {
                fields.push(format!("{}", twist.omega[k]));
            }
            for k in 0..3 {
                fields.push(format!("{}", twist.vel[k]));
            }
        }
        writeln!(w, "{}", fields.join(","))?;
    }
    w.flush()
}

pub fn write_metrics_json(path: &Path, metrics: &TrackingMetrics) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(metrics).expect("metrics serialize");
    std::fs::write(path, text + "\n")
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(value).expect("value serializes");
    std::fs::write(path, text + "\n")
}
