//! Per-frame symmetry timelines and their summaries, energy spread, PCA
//! eigenmodes and k-means clustering of trajectories.

mod cluster;
mod pca;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Trajectory;
use crate::symdetect::detect_point_group;

pub use cluster::{kmeans, select_k, silhouette, ClusterResult, KSelection, MAX_ITERATIONS, SILHOUETTE_SAMPLE};
pub use pca::{eigenmode_displacements, pca, pca_weighted, pca_with, ModeDisplacements, PcaResult};

/// Equilibration frames dropped before a timeline by default.
pub const DEFAULT_SKIP_FRAMES: usize = 500;
pub const DEFAULT_ENERGY_BINS: usize = 50;

/// A run of consecutive frames sharing a point-group label. Frame indices
/// refer to the full trajectory and are inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineSegment {
    pub start_frame: usize,
    pub end_frame: usize,
    pub label: String,
    pub duration_fs: f64,
}

impl TimelineSegment {
    pub fn frames(&self) -> usize {
        self.end_frame - self.start_frame + 1
    }
}

/// Point-group label of every frame from `skip` on.
pub fn frame_labels(traj: &Trajectory, tol: f64, skip: usize) -> Result<Vec<String>> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    if skip >= traj.len() {
        return Err(Error::InvalidArgument(format!(
            "skipping {skip} of {} frames leaves nothing",
            traj.len()
        )));
    }
    Ok(traj.frames()[skip..].par_iter().map(|f| detect_point_group(f, tol).label.to_string()).collect())
}

/// Merges equal consecutive labels; `first_frame` is the index of `labels[0]`.
pub fn segments(labels: &[String], first_frame: usize, timestep_fs: f64) -> Vec<TimelineSegment> {
    let mut out: Vec<TimelineSegment> = Vec::new();
    for (i, label) in labels.iter().enumerate() {
        let frame = first_frame + i;
        match out.last_mut() {
            Some(seg) if &seg.label == label => seg.end_frame = frame,
            _ => out.push(TimelineSegment { start_frame: frame, end_frame: frame, label: label.clone(), duration_fs: 0.0 }),
        }
    }
    for seg in &mut out {
        seg.duration_fs = seg.frames() as f64 * timestep_fs;
    }
    out
}

pub fn symmetry_timeline(traj: &Trajectory, tol: f64, skip_frames: usize) -> Result<Vec<TimelineSegment>> {
    let labels = frame_labels(traj, tol, skip_frames)?;
    Ok(segments(&labels, skip_frames, traj.timestep_fs))
}

fn require_nonempty(timeline: &[TimelineSegment]) -> Result<()> {
    if timeline.is_empty() {
        return Err(Error::InvalidArgument("empty timeline".into()));
    }
    Ok(())
}

/// Frame-weighted share of each label, in percent.
pub fn occurrence_histogram(timeline: &[TimelineSegment]) -> Result<BTreeMap<String, f64>> {
    require_nonempty(timeline)?;
    let mut frames: BTreeMap<String, usize> = BTreeMap::new();
    for seg in timeline {
        *frames.entry(seg.label.clone()).or_default() += seg.frames();
    }
    let total: usize = frames.values().sum();
    Ok(frames.into_iter().map(|(k, n)| (k, 100.0 * n as f64 / total as f64)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Persistence {
    pub max_duration_fs: f64,
    pub mean_duration_fs: f64,
    pub segment_count: usize,
    pub total_duration_fs: f64,
}

pub fn persistence_stats(timeline: &[TimelineSegment]) -> Result<BTreeMap<String, Persistence>> {
    require_nonempty(timeline)?;
    let mut out: BTreeMap<String, Persistence> = BTreeMap::new();
    for seg in timeline {
        let p = out.entry(seg.label.clone()).or_insert(Persistence {
            max_duration_fs: 0.0,
            mean_duration_fs: 0.0,
            segment_count: 0,
            total_duration_fs: 0.0,
        });
        p.max_duration_fs = p.max_duration_fs.max(seg.duration_fs);
        p.segment_count += 1;
        p.total_duration_fs += seg.duration_fs;
    }
    for p in out.values_mut() {
        p.mean_duration_fs = p.total_duration_fs / p.segment_count as f64;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `counts.len() + 1` bin edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyStats {
    pub frames: usize,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub min: f64,
    pub max: f64,
    /// max − min.
    pub spread: f64,
    pub histogram: Histogram,
}

/// Statistics of the per-frame energies (eV). Every frame must carry one.
pub fn energy_stats(traj: &Trajectory, bins: usize) -> Result<EnergyStats> {
    if bins == 0 {
        return Err(Error::InvalidArgument("need at least one histogram bin".into()));
    }
    let energies: Vec<f64> = traj
        .frames()
        .iter()
        .enumerate()
        .map(|(i, f)| f.energy.ok_or(Error::MissingEnergy(i)))
        .collect::<Result<_>>()?;
    let n = energies.len() as f64;
    let mean = energies.iter().sum::<f64>() / n;
    let var = energies.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n;
    let min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let max = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (max - min) / bins as f64;
    let edges = (0..=bins).map(|i| if i == bins { max } else { min + width * i as f64 }).collect();
    let mut counts = vec![0; bins];
    for e in &energies {
        let b = if width > 0.0 { (((e - min) / width) as usize).min(bins - 1) } else { 0 };
        counts[b] += 1;
    }
    Ok(EnergyStats {
        frames: energies.len(),
        mean,
        std: var.sqrt(),
        min,
        max,
        spread: max - min,
        histogram: Histogram { edges, counts },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Formation {
    pub delta: f64,
    pub more_stable: bool,
}

/// Energy of a cluster relative to `n` separate units, reported at 1 neV
/// resolution so that inputs given to a few decimals give a clean result.
pub fn formation_check(e_cluster: f64, e_unit: f64, n: u32) -> Result<Formation> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let delta = ((e_cluster - n as f64 * e_unit) * 1e9).round() / 1e9;
    Ok(Formation { delta, more_stable: delta < 0.0 })
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    use super::*;
    use crate::fixture::{inversion_pairs, random_cloud};
    use crate::geom::Structure;
    use crate::posnergen::{build_template, perturb, TemplateGroup};

    fn traj(frames: Vec<Structure>) -> Trajectory {
        Trajectory::new(frames, 2.0).unwrap()
    }

    fn seg(start: usize, end: usize, label: &str, dt: f64) -> TimelineSegment {
        TimelineSegment { start_frame: start, end_frame: end, label: label.into(), duration_fs: (end - start + 1) as f64 * dt }
    }

    #[test]
    fn identical_frames_make_one_segment() {
        let s6 = build_template(TemplateGroup::S6).unwrap();
        let t = traj(vec![s6; 12]);
        let tl = symmetry_timeline(&t, 0.01, 2).unwrap();
        assert_eq!(tl, vec![seg(2, 11, "S6", 2.0)]);
        assert_eq!(occurrence_histogram(&tl).unwrap(), BTreeMap::from([("S6".to_string(), 100.0)]));
        let p = &persistence_stats(&tl).unwrap()["S6"];
        assert_eq!((p.max_duration_fs, p.mean_duration_fs, p.segment_count), (20.0, 20.0, 1));
        assert!(symmetry_timeline(&t, 0.01, 12).is_err());
        assert!(symmetry_timeline(&t, 0.0, 0).is_err());
    }

    #[test]
    fn alternating_frames() {
        let ci = inversion_pairs(3);
        let c1 = perturb(&ci, 0.3, 4).unwrap();
        let frames: Vec<Structure> = (0..9).map(|i| if i % 2 == 0 { ci.clone() } else { c1.clone() }).collect();
        let t = traj(frames.clone());
        let tl = symmetry_timeline(&t, 1e-3, 0).unwrap();
        assert_eq!(tl.len(), 9);
        for (i, s) in tl.iter().enumerate() {
            let oracle = detect_point_group(&frames[i], 1e-3).label.to_string();
            assert_eq!((s.start_frame, s.end_frame, &s.label), (i, i, &oracle));
        }
        assert_eq!(tl[0].label, "Ci");
        assert_eq!(tl[1].label, "C1");
    }

    #[test]
    fn histogram_and_persistence_by_hand() {
        let tl = vec![seg(0, 3, "C1", 1.0), seg(4, 7, "Cs", 1.0)];
        let h = occurrence_histogram(&tl).unwrap();
        assert_eq!((h["C1"], h["Cs"]), (50.0, 50.0));

        let tl = vec![seg(0, 9, "C1", 2.5), seg(10, 11, "S6", 2.5), seg(12, 30, "C1", 2.5), seg(31, 36, "S6", 2.5)];
        let p = persistence_stats(&tl).unwrap();
        assert_eq!((p["C1"].max_duration_fs, p["C1"].mean_duration_fs, p["C1"].segment_count), (47.5, 36.25, 2));
        assert_eq!((p["S6"].max_duration_fs, p["S6"].mean_duration_fs, p["S6"].segment_count), (15.0, 10.0, 2));
        let h = occurrence_histogram(&tl).unwrap();
        assert!((h.values().sum::<f64>() - 100.0).abs() < 1e-9);
        assert!((h["S6"] - 800.0 / 37.0).abs() < 1e-12);
        assert!(occurrence_histogram(&[]).is_err());
        assert!(persistence_stats(&[]).is_err());
    }

    #[test]
    fn segment_durations_cover_the_span() {
        let labels: Vec<String> = "aabbbacccca".chars().map(String::from).collect();
        let tl = segments(&labels, 5, 0.5);
        assert_eq!(tl.len(), 5);
        assert_eq!(tl.iter().map(|s| s.duration_fs).sum::<f64>(), 5.5);
        assert_eq!((tl[0].start_frame, tl.last().unwrap().end_frame), (5, 15));
    }

    fn with_energies(es: &[f64]) -> Trajectory {
        let s = random_cloud(3, 0);
        traj(es.iter().map(|e| s.clone().with_energy(*e)).collect())
    }

    #[test]
    fn energy_statistics() {
        let c = energy_stats(&with_energies(&[-3.0; 5]), 10).unwrap();
        assert_eq!((c.std, c.spread), (0.0, 0.0));
        assert_eq!(c.histogram.counts[0], 5);

        let e = energy_stats(&with_energies(&[0.0, 1.0, 2.0]), 4).unwrap();
        assert_eq!((e.mean, e.spread, e.min, e.max), (1.0, 2.0, 0.0, 2.0));
        assert_eq!(e.histogram.counts, vec![1, 0, 1, 1]);
        assert_eq!(e.histogram.edges, vec![0.0, 0.5, 1.0, 1.5, 2.0]);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let normal = Normal::new(-250.0, 0.3).unwrap();
        let n = 5000;
        let es: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
        let g = energy_stats(&with_energies(&es), DEFAULT_ENERGY_BINS).unwrap();
        let bound = 3.0 * 0.3 / (n as f64).sqrt();
        assert!((g.mean + 250.0).abs() < bound && (g.std - 0.3).abs() < bound);
        assert_eq!(g.histogram.counts.iter().sum::<usize>(), n);
        assert_eq!(g.histogram.counts.len(), 50);

        let s = random_cloud(3, 0);
        let t = traj(vec![s.clone().with_energy(1.0), s.clone(), s]);
        assert_eq!(energy_stats(&t, 5).unwrap_err(), Error::MissingEnergy(1));
    }

    #[test]
    fn formation() {
        let f = formation_check(-271.660, -84.244, 3).unwrap();
        assert_eq!(f, Formation { delta: -18.928, more_stable: true });
        let f = formation_check(-264.997, -84.244, 3).unwrap();
        assert_eq!(f.delta, -12.265);
        let f = formation_check(3.0 * -84.244, -84.244, 3).unwrap();
        assert_eq!(f, Formation { delta: 0.0, more_stable: false });
        assert!(formation_check(1.0, 1.0, 0).is_err());
    }
}
