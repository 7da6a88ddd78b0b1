use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::VerifyError;

pub const SUITE_NAMES: [&str; 6] = ["morphism", "classify", "curvature", "torsion", "theorem1", "killing"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Suite {
    Morphism,
    Classify,
    Curvature,
    Torsion,
    Theorem1,
    Killing,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Morphism,
        Suite::Classify,
        Suite::Curvature,
        Suite::Torsion,
        Suite::Theorem1,
        Suite::Killing,
    ];

    pub fn name(self) -> &'static str {
        SUITE_NAMES[self as usize]
    }

    /// Expands `all` and removes duplicates; the result is in canonical suite order.
    pub fn resolve(names: &[String]) -> Result<Vec<Suite>, VerifyError> {
        let mut out = Vec::new();
        for raw in names {
            let name = raw.trim();
            if name == "all" {
                out.extend(Suite::ALL);
                continue;
            }
            match Suite::ALL.iter().find(|s| s.name() == name) {
                Some(s) => out.push(*s),
                None => {
                    return Err(VerifyError::Usage(format!(
                        "unknown suite `{name}`; valid suites: {}, all",
                        SUITE_NAMES.join(", ")
                    )))
                }
            }
        }
        if out.is_empty() {
            return Err(VerifyError::Usage(format!(
                "no suite selected; valid suites: {}, all",
                SUITE_NAMES.join(", ")
            )));
        }
        out.sort();
        out.dedup();
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckConfig {
    pub suites: Vec<String>,
    pub tolerance: f64,
    pub fd_tolerance: f64,
    pub samples: usize,
    pub seed: u64,
    pub jet_order: usize,
    pub output_path: String,
    pub margin: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            suites: vec!["all".into()],
            tolerance: 1e-7,
            fd_tolerance: 1e-6,
            samples: 200,
            seed: 0,
            jet_order: 2,
            output_path: "report.jsonl".into(),
            margin: 0.05,
        }
    }
}

impl CheckConfig {
    pub fn from_file(path: &Path) -> Result<CheckConfig, VerifyError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| VerifyError::Io(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| VerifyError::Usage(format!("invalid config {}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<Vec<Suite>, VerifyError> {
        if !(self.tolerance >= 0.0) || !(self.fd_tolerance >= 0.0) {
            return Err(VerifyError::Usage("tolerances must be non-negative".into()));
        }
        if self.samples < 1 {
            return Err(VerifyError::Usage("samples must be at least 1".into()));
        }
        if !(1..=3).contains(&self.jet_order) {
            return Err(VerifyError::Usage(format!(
                "jet order must be 1, 2 or 3, got {}",
                self.jet_order
            )));
        }
        if !(self.margin >= 0.0) {
            return Err(VerifyError::Usage("margin must be non-negative".into()));
        }
        Suite::resolve(&self.suites)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_expands_in_canonical_order() {
        let s = Suite::resolve(&["killing".into(), "all".into()]).unwrap();
        assert_eq!(s, Suite::ALL.to_vec());
    }

    #[test]
    fn unknown_suite_lists_valid_names() {
        match Suite::resolve(&["bogus".into()]) {
            Err(VerifyError::Usage(msg)) => assert!(msg.contains("morphism") && msg.contains("theorem1")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn defaults() {
        let c = CheckConfig::default();
        assert_eq!(c.tolerance, 1e-7);
        assert_eq!(c.fd_tolerance, 1e-6);
        assert_eq!(c.samples, 200);
        assert_eq!(c.jet_order, 2);
        assert_eq!(c.margin, 0.05);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn partial_json_uses_defaults() {
        let c: CheckConfig = serde_json::from_str(r#"{"samples": 10, "suites": ["torsion"]}"#).unwrap();
        assert_eq!(c.samples, 10);
        assert_eq!(c.tolerance, 1e-7);
        assert_eq!(c.validate().unwrap(), vec![Suite::Torsion]);
    }
}
