use nalgebra::DMatrix;

use crate::align::Weighting;
use crate::error::{Error, Result};
use crate::geom::{Structure, Trajectory, Vec3};
use crate::linalg::jacobi_eigen;

/// Principal modes of the flattened 3N coordinates of an aligned trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaResult {
    pub mean: Structure,
    pub weighting: Weighting,
    /// Descending and clipped at zero; Å², or amu·Å² when mass weighted.
    pub eigenvalues: Vec<f64>,
    /// Unit 3N vectors in the (possibly mass-weighted) coordinates,
    /// largest-magnitude component positive.
    pub eigenvectors: Vec<Vec<f64>>,
    /// Share of the total variance per mode; all zero when there is none.
    pub explained_fraction: Vec<f64>,
}

impl PcaResult {
    pub fn modes(&self) -> usize {
        self.eigenvalues.len()
    }

    /// The mean structure moved along `mode` by `amplitude` (in the units of
    /// √λ).
    pub fn displaced(&self, mode: usize, amplitude: f64) -> Result<Structure> {
        let d = eigenmode_displacements(self, mode, Some(amplitude))?;
        self.mean.with_positions(self.mean.positions().iter().zip(&d.vectors).map(|(x, v)| x + v).collect())
    }
}

/// Covariance with divisor F − 1. Frames are assumed already superposed.
pub fn pca(traj: &Trajectory) -> Result<PcaResult> {
    pca_with(traj.frames())
}

pub fn pca_with(frames: &[Structure]) -> Result<PcaResult> {
    pca_weighted(frames, Weighting::Equal)
}

/// With [`Weighting::Mass`] every coordinate is scaled by √m before the
/// covariance is formed; displacements are mapped back to Å.
pub fn pca_weighted(frames: &[Structure], weighting: Weighting) -> Result<PcaResult> {
    if frames.len() < 2 {
        return Err(Error::InvalidArgument(format!("PCA needs at least 2 frames, got {}", frames.len())));
    }
    let f = frames.len();
    let d = 3 * frames[0].len();
    let w = coordinate_weights(&frames[0], weighting);
    let data: Vec<Vec<f64>> = frames.iter().map(|s| s.flatten()).collect();
    let mean: Vec<f64> = (0..d).map(|k| data.iter().map(|x| x[k]).sum::<f64>() / f as f64).collect();

    let mut centered = DMatrix::<f64>::zeros(f, d);
    for (i, x) in data.iter().enumerate() {
        for k in 0..d {
            centered[(i, k)] = (x[k] - mean[k]) * w[k];
        }
    }
    let cov = (centered.transpose() * &centered) / (f - 1) as f64;
    let eig = jacobi_eigen(&cov);

    let eigenvalues: Vec<f64> = eig.values.iter().map(|v| v.max(0.0)).collect();
    let eigenvectors: Vec<Vec<f64>> = (0..d)
        .map(|k| {
            let mut v: Vec<f64> = eig.vectors.column(k).iter().copied().collect();
            let big = v.iter().copied().fold(0.0, |m: f64, x| if x.abs() > m.abs() { x } else { m });
            if big < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            v
        })
        .collect();
    let total: f64 = eigenvalues.iter().sum();
    let explained_fraction = eigenvalues.iter().map(|v| if total > 0.0 { v / total } else { 0.0 }).collect();

    let positions = mean.chunks(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect();
    let mut mean_structure = frames[0].with_positions(positions)?;
    mean_structure.energy = None;
    mean_structure.time_fs = None;
    mean_structure.label = Some(format!("PCA mean of {f} frames"));
    Ok(PcaResult { mean: mean_structure, weighting, eigenvalues, eigenvectors, explained_fraction })
}

fn coordinate_weights(s: &Structure, weighting: Weighting) -> Vec<f64> {
    s.elements()
        .iter()
        .flat_map(|e| {
            let w = match weighting {
                Weighting::Equal => 1.0,
                Weighting::Mass => e.mass().sqrt(),
            };
            [w; 3]
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeDisplacements {
    pub amplitude: f64,
    pub vectors: Vec<Vec3>,
    pub max_magnitude: f64,
}

/// Per-atom displacement of `mode` scaled by `amplitude` (default √λ).
pub fn eigenmode_displacements(pca: &PcaResult, mode: usize, amplitude: Option<f64>) -> Result<ModeDisplacements> {
    if mode >= pca.modes() {
        return Err(Error::InvalidArgument(format!("mode {mode} out of range ({} modes)", pca.modes())));
    }
    let amplitude = amplitude.unwrap_or_else(|| pca.eigenvalues[mode].sqrt());
    let w = coordinate_weights(&pca.mean, pca.weighting);
    let vectors: Vec<Vec3> = pca.eigenvectors[mode]
        .chunks(3)
        .zip(w.chunks(3))
        .map(|(c, w)| Vec3::new(c[0], c[1], c[2]) * (amplitude / w[0]))
        .collect();
    let max_magnitude = vectors.iter().map(|v| v.norm()).fold(0.0, f64::max);
    Ok(ModeDisplacements { amplitude, vectors, max_magnitude })
}
