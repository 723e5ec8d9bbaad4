use bcrecon::{ConditionReport, InversionSettings, ReconstructionReport, SignedSubset, Spectrum};
use serde::{Deserialize, Serialize};

use crate::files::{ProblemSpec, RegionSpec};

/// Everything needed to rerun a command: the full problem document and every
/// setting that influenced the result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub problem: ProblemSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum_file: Option<String>,
    pub settings: Settings,
    pub results: Results,
    pub warnings: Vec<String>,
    /// Wall-clock figures are left out of written files so repeated runs
    /// produce identical bytes; they are printed instead.
    pub timing: Option<Timing>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub theorem1_tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<RegionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inversion: Option<InversionSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify_tolerance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Results {
    Roots {
        report: ConditionReport,
        combinations: Vec<SignedSubset>,
    },
    Reconstruction(ReconstructionReport),
    Verify {
        spectrum: Spectrum,
        reconstruction: ReconstructionReport,
        span_distance: f64,
        pass: bool,
    },
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}
