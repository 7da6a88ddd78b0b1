use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::VerifyError;

/// Residual stand-in for a point where evaluation failed.
pub const FAILED_EVALUATION: f64 = f64::MAX;

/// One line of the JSON-lines report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub check: String,
    pub bundle: String,
    pub n_points: usize,
    pub max_residual: f64,
    pub mean_residual: f64,
    pub worst_point: Vec<f64>,
    pub pass: bool,
    pub seed: u64,
    pub wall_time_ms: f64,
}

impl ResidualReport {
    /// Aggregates per-point residuals. A report passes when the largest
    /// residual is below `tolerance`, or is exactly zero.
    pub fn from_residuals(
        check: &str,
        bundle: &str,
        residuals: &[(f64, Vec<f64>)],
        tolerance: f64,
        seed: u64,
        wall_time_ms: f64,
    ) -> ResidualReport {
        let mut max = 0.0_f64;
        let mut worst = Vec::new();
        let mut sum = 0.0;
        for (r, x) in residuals {
            let r = if r.is_nan() { FAILED_EVALUATION } else { *r };
            sum += r.min(FAILED_EVALUATION / residuals.len() as f64);
            if r > max || worst.is_empty() {
                max = max.max(r);
                worst = x.clone();
            }
        }
        let n = residuals.len();
        ResidualReport {
            check: check.into(),
            bundle: bundle.into(),
            n_points: n,
            max_residual: max,
            mean_residual: if n == 0 { 0.0 } else { sum / n as f64 },
            worst_point: worst,
            pass: n > 0 && (max < tolerance || max == 0.0),
            seed,
            wall_time_ms,
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("reports contain only finite numbers")
    }
}

pub fn write_jsonl(path: &Path, reports: &[ResidualReport]) -> Result<(), VerifyError> {
    let io = |e: std::io::Error| VerifyError::Io(format!("{}: {e}", path.display()));
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    for r in reports {
        writeln!(f, "{}", r.to_json_line()).map_err(io)?;
    }
    f.flush().map_err(io)
}

pub fn summary_table(reports: &[ResidualReport]) -> String {
    let mut out = format!(
        "{:<28} {:<26} {:>6} {:>12} {:>12}  {}\n",
        "check", "bundle", "points", "max", "mean", "result"
    );
    for r in reports {
        out.push_str(&format!(
            "{:<28} {:<26} {:>6} {:>12.3e} {:>12.3e}  {}\n",
            r.check,
            r.bundle,
            r.n_points,
            r.max_residual,
            r.mean_residual,
            if r.pass { "PASS" } else { "FAIL" }
        ));
    }
    let failed = reports.iter().filter(|r| !r.pass).count();
    out.push_str(&format!("{} reports, {} failed\n", reports.len(), failed));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_residual_passes_at_zero_tolerance() {
        let r = ResidualReport::from_residuals("c", "b", &[(0.0, vec![1.0])], 0.0, 1, 0.0);
        assert!(r.pass);
        let r = ResidualReport::from_residuals("c", "b", &[(1e-17, vec![1.0])], 0.0, 1, 0.0);
        assert!(!r.pass);
    }

    #[test]
    fn worst_point_tracks_maximum() {
        let r = ResidualReport::from_residuals(
            "c",
            "b",
            &[(1.0, vec![0.0]), (3.0, vec![1.0]), (2.0, vec![2.0])],
            10.0,
            1,
            0.0,
        );
        assert_eq!(r.max_residual, 3.0);
        assert_eq!(r.worst_point, vec![1.0]);
        assert_eq!(r.mean_residual, 2.0);
    }

    #[test]
    fn json_keys() {
        let r = ResidualReport::from_residuals("c", "b", &[(0.5, vec![1.0, 2.0])], 1.0, 9, 1.5);
        let v: serde_json::Value = serde_json::from_str(&r.to_json_line()).unwrap();
        let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        keys.sort();
        assert_eq!(
            keys,
            [
                "bundle",
                "check",
                "max_residual",
                "mean_residual",
                "n_points",
                "pass",
                "seed",
                "wall_time_ms",
                "worst_point"
            ]
        );
    }
}
