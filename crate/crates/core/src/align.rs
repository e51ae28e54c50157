//! Rigid-body superposition and time-averaged structures.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::{apply_transform, Mat3, RigidTransform, Structure, Trajectory, Vec3};

/// Fraction of a run discarded as equilibration before averaging.
pub const DEFAULT_SKIP_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    #[default]
    Equal,
    Mass,
}

/// Proper rigid transform minimizing `rmsd(t(mobile), reference)`.
pub fn kabsch(mobile: &Structure, reference: &Structure) -> Result<RigidTransform> {
    kabsch_with(mobile, reference, Weighting::Equal)
}

pub fn kabsch_with(mobile: &Structure, reference: &Structure, weighting: Weighting) -> Result<RigidTransform> {
    mobile.check_compatible(reference)?;
    let weights: Vec<f64> = match weighting {
        Weighting::Equal => vec![1.0; mobile.len()],
        Weighting::Mass => mobile.elements().iter().map(|e| e.mass()).collect(),
    };
    let total: f64 = weights.iter().sum();
    let mean = |s: &Structure| -> Vec3 {
        s.positions().iter().zip(&weights).map(|(p, w)| p * *w).sum::<Vec3>() / total
    };
    let cm = mean(mobile);
    let cr = mean(reference);

    let mut h = Mat3::zeros();
    for ((p, q), w) in mobile.positions().iter().zip(reference.positions()).zip(&weights) {
        h += (p - cm) * (q - cr).transpose() * *w;
    }
    let svd = h.svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested Vᵀ");
    // Flip the direction of the smallest singular value if the optimum is a
    // reflection. nalgebra returns singular values in descending order.
    let d = (v_t.transpose() * u.transpose()).determinant().signum();
    let correction = Mat3::from_diagonal(&Vec3::new(1.0, 1.0, if d < 0.0 { -1.0 } else { 1.0 }));
    let rotation = v_t.transpose() * correction * u.transpose();
    let translation = cr - rotation * cm;
    RigidTransform::new(rotation, translation)
}

/// Kabsch-aligned copy of `mobile` together with its residual RMSD.
pub fn superpose(mobile: &Structure, reference: &Structure) -> Result<(Structure, f64)> {
    let t = kabsch(mobile, reference)?;
    let aligned = apply_transform(mobile, &t)?;
    let residual = crate::geom::rmsd(&aligned, reference)?;
    Ok((aligned, residual))
}

/// Which structure frames are superposed onto.
#[derive(Debug, Clone, PartialEq)]
pub enum Reference {
    /// First frame kept after dropping `⌈f·F⌉` equilibration frames.
    FirstRetained(f64),
    Frame(usize),
    External(Structure),
}

impl Default for Reference {
    fn default() -> Self {
        Reference::FirstRetained(DEFAULT_SKIP_FRACTION)
    }
}

impl Reference {
    pub fn resolve(&self, traj: &Trajectory) -> Result<Structure> {
        let frame = match self {
            Reference::External(s) => {
                s.check_compatible(&traj.frames()[0])?;
                return Ok(s.clone());
            }
            Reference::FirstRetained(f) => skip_count(traj.len(), *f)?,
            Reference::Frame(i) => *i,
        };
        traj.frames().get(frame).cloned().ok_or_else(|| {
            Error::InvalidArgument(format!("reference frame {frame} out of range for {} frames", traj.len()))
        })
    }
}

/// Every frame replaced by its superposition onto `reference`.
pub fn align_trajectory(traj: &Trajectory, reference: &Structure) -> Result<Trajectory> {
    align_trajectory_with(traj, reference, Weighting::Equal)
}

pub fn align_trajectory_with(traj: &Trajectory, reference: &Structure, weighting: Weighting) -> Result<Trajectory> {
    let frames = traj
        .frames()
        .par_iter()
        .map(|f| apply_transform(f, &kabsch_with(f, reference, weighting)?))
        .collect::<Result<Vec<_>>>()?;
    traj.with_frames(frames)
}

/// Number of leading frames dropped for a skip fraction.
pub fn skip_count(frames: usize, skip_fraction: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&skip_fraction) {
        return Err(Error::InvalidArgument(format!("skip fraction {skip_fraction} not in [0, 1)")));
    }
    let skip = (skip_fraction * frames as f64).ceil() as usize;
    if skip >= frames {
        return Err(Error::InvalidArgument(format!("skipping {skip} of {frames} frames leaves nothing")));
    }
    Ok(skip)
}

/// Per-atom mean over the frames kept after `⌈skip_fraction·F⌉`. Frames
/// must already be aligned. Energy is averaged when every kept frame has one.
pub fn time_average(traj: &Trajectory, skip_fraction: f64) -> Result<Structure> {
    let skip = skip_count(traj.len(), skip_fraction)?;
    let kept = &traj.frames()[skip..];
    let n = kept.len() as f64;
    let positions: Vec<Vec3> = (0..traj.n_atoms())
        .into_par_iter()
        .map(|atom| {
            let column: Vec<Vec3> = kept.iter().map(|f| f.positions()[atom]).collect();
            pairwise_sum(&column) / n
        })
        .collect();
    let mut avg = kept[0].with_positions(positions)?;
    avg.time_fs = None;
    avg.energy = kept.iter().map(|f| f.energy).collect::<Option<Vec<f64>>>().map(|e| e.iter().sum::<f64>() / n);
    avg.label = Some(format!("time average of {} frames", kept.len()));
    Ok(avg)
}

// Recursive halving keeps the rounding error O(log F) and makes the result
// independent of how callers chunk the frames.
pub(crate) fn pairwise_sum(values: &[Vec3]) -> Vec3 {
    if values.len() <= 8 {
        return values.iter().fold(Vec3::zeros(), |acc, v| acc + v);
    }
    let (a, b) = values.split_at(values.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}
