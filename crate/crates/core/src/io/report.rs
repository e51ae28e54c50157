//! The JSON report bundle. Each analysis writes one section; a bundle
//! collects whichever sections a run directory holds. No timestamps are
//! recorded, so reruns give byte-identical files.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::posnergen::S6Params;
use crate::trajstats::{EnergyStats, Formation, KSelection, Persistence, TimelineSegment};

pub const TOOL_NAME: &str = "posner";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub tool: String,
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skip_frames: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skip_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestep_fs: Option<f64>,
}

impl RunMetadata {
    pub fn new() -> RunMetadata {
        RunMetadata {
            tool: TOOL_NAME.into(),
            version: TOOL_VERSION.into(),
            source: None,
            seed: None,
            tolerance: None,
            skip_frames: None,
            skip_fraction: None,
            timestep_fs: None,
        }
    }
}

impl Default for RunMetadata {
    fn default() -> Self {
        RunMetadata::new()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineSection {
    pub metadata: RunMetadata,
    pub frames: usize,
    pub segments: Vec<TimelineSegment>,
    /// Percent of retained frames per label.
    pub occurrence: BTreeMap<String, f64>,
    pub persistence: BTreeMap<String, Persistence>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AverageSection {
    pub metadata: RunMetadata,
    pub reference: String,
    pub frames_used: usize,
    pub label: String,
    pub order: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    pub mode: usize,
    pub eigenvalue: f64,
    pub explained_fraction: f64,
    /// Largest per-atom displacement at amplitude √λ (Å).
    pub max_displacement: f64,
    /// Labels of mean ± √λ·mode.
    pub plus_label: String,
    pub minus_label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaSection {
    pub metadata: RunMetadata,
    pub frames: usize,
    /// Eigenvalues are in amu·Å² when set, Å² otherwise.
    #[serde(default)]
    pub mass_weighted: bool,
    pub mean_label: String,
    pub total_variance: f64,
    pub modes: Vec<ModeSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSection {
    pub metadata: RunMetadata,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection: Option<KSelection>,
    pub inertia: f64,
    pub silhouette: f64,
    pub sizes: Vec<usize>,
    pub centroid_labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySection {
    pub metadata: RunMetadata,
    pub stats: EnergyStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationCensus {
    pub metadata: RunMetadata,
    pub diagonal: f64,
    pub rotation_step: f64,
    pub scale_factors: Vec<f64>,
    pub modes: Vec<String>,
    pub rotated: usize,
    pub scaled: usize,
    pub templates: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct S6Section {
    pub metadata: RunMetadata,
    pub starts: usize,
    pub best_start: usize,
    pub params: S6Params,
    pub energy: f64,
    pub label: String,
    pub relaxed_energy: f64,
    pub relaxed_label: String,
    pub relaxed_converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormationSection {
    pub e_cluster: f64,
    pub e_unit: f64,
    pub n: u32,
    pub result: Formation,
}

/// Everything found in one run directory.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReportBundle {
    pub metadata: RunMetadata,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timeline: Option<TimelineSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub average: Option<AverageSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pca: Option<PcaSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clusters: Option<ClusterSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy: Option<EnergySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generation: Option<GenerationCensus>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s6min: Option<S6Section>,
}

/// File names of the sections inside a run directory.
pub mod files {
    pub const TIMELINE: &str = "timeline.json";
    pub const AVERAGE: &str = "average.json";
    pub const PCA: &str = "pca.json";
    pub const CLUSTERS: &str = "clusters.json";
    pub const ENERGY: &str = "energy.json";
    pub const CENSUS: &str = "census.json";
    pub const S6MIN: &str = "s6min.json";
    pub const REPORT: &str = "report.json";
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajstats::{energy_stats, segments, occurrence_histogram, persistence_stats, formation_check};
    use crate::geom::Trajectory;

    #[test]
    fn bundle_roundtrips() {
        let labels: Vec<String> = ["C1", "C1", "S6", "Cs"].iter().map(|s| s.to_string()).collect();
        let tl = segments(&labels, 3, 2.5);
        let mut meta = RunMetadata::new();
        meta.tolerance = Some(0.1);
        meta.seed = Some(7);
        let s = crate::fixture::random_cloud(3, 1);
        let traj = Trajectory::new(vec![s.clone().with_energy(-1.0 / 3.0), s.with_energy(0.1 + 0.2)], 1.0).unwrap();
        let bundle = ReportBundle {
            metadata: meta.clone(),
            timeline: Some(TimelineSection {
                metadata: meta.clone(),
                frames: 4,
                occurrence: occurrence_histogram(&tl).unwrap(),
                persistence: persistence_stats(&tl).unwrap(),
                segments: tl,
            }),
            energy: Some(EnergySection { metadata: meta.clone(), stats: energy_stats(&traj, 7).unwrap() }),
            s6min: Some(S6Section {
                metadata: meta,
                starts: 2,
                best_start: 1,
                params: S6Params::default(),
                energy: -1234.567890123,
                label: "S6".into(),
                relaxed_energy: -1300.0,
                relaxed_label: "C1".into(),
                relaxed_converged: true,
            }),
            ..ReportBundle::default()
        };
        let text = to_json(&bundle);
        let back: ReportBundle = serde_json::from_str(&text).unwrap();
        assert_eq!(back, bundle);
        assert_eq!(to_json(&back), text);
        assert!(!text.contains("\"pca\""));
    }

    #[test]
    fn formation_section_roundtrips() {
        let f = FormationSection { e_cluster: -271.66, e_unit: -84.244, n: 3, result: formation_check(-271.66, -84.244, 3).unwrap() };
        let back: FormationSection = serde_json::from_str(&to_json(&f)).unwrap();
        assert_eq!(back, f);
    }
}
