use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{phosphate_groups, PhosphateGroup, DEFAULT_SCALE_FACTORS};
use crate::error::{Error, Result};
use crate::geom::{euler_zyx, Mat3, Structure, Vec3};

/// One way of choosing per-group rotations from the angle grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenerationMode {
    /// The same grid rotation applied to every group.
    UniformAllGroups,
    /// Each group swept through the grid with the others left in place.
    PerGroupSweep,
    /// Only the given group swept through the grid.
    SingleGroupSweep(usize),
    /// `cap` seeded draws from the full product of per-group grid rotations.
    FullProductCapped { cap: usize },
}

impl std::fmt::Display for GenerationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GenerationMode::UniformAllGroups => f.write_str("uniform"),
            GenerationMode::PerGroupSweep => f.write_str("per-group"),
            GenerationMode::SingleGroupSweep(g) => write!(f, "group-{g}"),
            GenerationMode::FullProductCapped { .. } => f.write_str("product"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationScheme {
    /// Grid spacing of each of the three ZYX Euler angles (degrees).
    pub rotation_step: f64,
    pub modes: Vec<GenerationMode>,
    pub scale_factors: Vec<f64>,
    /// Seed for the full-product draws.
    pub seed: u64,
}

impl Default for GenerationScheme {
    fn default() -> Self {
        GenerationScheme {
            rotation_step: 30.0,
            modes: vec![
                GenerationMode::UniformAllGroups,
                GenerationMode::PerGroupSweep,
                GenerationMode::FullProductCapped { cap: 3000 },
            ],
            scale_factors: DEFAULT_SCALE_FACTORS.to_vec(),
            seed: 0,
        }
    }
}

impl GenerationScheme {
    pub fn validate(&self) -> Result<()> {
        let steps = 360.0 / self.rotation_step;
        if !(self.rotation_step > 0.0) || (steps - steps.round()).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "rotation step {} does not divide 360",
                self.rotation_step
            )));
        }
        if let Some(f) = self.scale_factors.iter().find(|f| !(**f > 0.0)) {
            return Err(Error::InvalidArgument(format!("scale factor must be positive, got {f}")));
        }
        Ok(())
    }

    fn grid(&self) -> Vec<Mat3> {
        let n = (360.0 / self.rotation_step).round() as usize;
        let step = self.rotation_step.to_radians();
        let mut out = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    out.push(euler_zyx(i as f64 * step, j as f64 * step, k as f64 * step));
                }
            }
        }
        out
    }

    /// Per-group grid indices for every candidate, in generation order.
    /// `None` leaves a group as in the seed.
    fn candidates(&self, n_groups: usize, grid: usize) -> Result<Vec<(GenerationMode, Vec<Option<usize>>)>> {
        let mut out = Vec::new();
        for &mode in &self.modes {
            match mode {
                GenerationMode::UniformAllGroups => {
                    out.extend((0..grid).map(|t| (mode, vec![Some(t); n_groups])));
                }
                GenerationMode::PerGroupSweep => {
                    for g in 0..n_groups {
                        out.extend((0..grid).map(|t| (mode, single(n_groups, g, t))));
                    }
                }
                GenerationMode::SingleGroupSweep(g) => {
                    if g >= n_groups {
                        return Err(Error::InvalidArgument(format!("group {g} out of range ({n_groups} groups)")));
                    }
                    out.extend((0..grid).map(|t| (mode, single(n_groups, g, t))));
                }
                GenerationMode::FullProductCapped { cap } => {
                    let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                    for _ in 0..cap {
                        out.push((mode, (0..n_groups).map(|_| Some(rng.random_range(0..grid))).collect()));
                    }
                }
            }
        }
        Ok(out)
    }
}

fn single(n: usize, g: usize, t: usize) -> Vec<Option<usize>> {
    let mut v = vec![None; n];
    v[g] = Some(t);
    v
}

// Rounded O offsets of every group, each group's four sorted, so relabeling
// O within a group does not change the key.
fn key(offsets: &[[Vec3; 4]]) -> Vec<[i64; 3]> {
    let mut key = Vec::with_capacity(offsets.len() * 4);
    for group in offsets {
        let mut g: Vec<[i64; 3]> = group.iter().map(|o| [0, 1, 2].map(|k| (o[k] * 1e5).round() as i64)).collect();
        g.sort_unstable();
        key.extend(g);
    }
    key
}

/// Rotates the phosphates of `seed` rigidly about their P atoms as the scheme
/// prescribes and drops duplicates (same O positions up to relabeling within
/// a group). The first candidate of the uniform mode is the seed itself.
pub fn enumerate_rotated(seed: &Structure, scheme: &GenerationScheme) -> Result<Vec<Structure>> {
    scheme.validate()?;
    let groups = phosphate_groups(seed)?;
    let grid = scheme.grid();
    let candidates = scheme.candidates(groups.len(), grid.len())?;
    let base: Vec<[Vec3; 4]> = groups
        .iter()
        .map(|g| g.o.map(|o| seed.positions()[o] - seed.positions()[g.p]))
        .collect();
    let place = |choice: &[Option<usize>]| -> Vec<[Vec3; 4]> {
        base.iter()
            .zip(choice)
            .map(|(offs, c)| match c {
                Some(t) => offs.map(|o| grid[*t] * o),
                None => *offs,
            })
            .collect()
    };

    let keys: Vec<Vec<[i64; 3]>> = candidates.par_iter().map(|(_, c)| key(&place(c))).collect();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (index, ((mode, choice), k)) in candidates.iter().zip(keys).enumerate() {
        if seen.insert(k) {
            let s = apply(seed, &groups, &place(choice))?;
            out.push(s.with_label(format!("rotated {mode} {index}")));
        }
    }
    Ok(out)
}

fn apply(seed: &Structure, groups: &[PhosphateGroup], offsets: &[[Vec3; 4]]) -> Result<Structure> {
    let mut pos = seed.positions().to_vec();
    for (g, offs) in groups.iter().zip(offsets) {
        for (o, off) in g.o.iter().zip(offs) {
            pos[*o] = pos[g.p] + off;
        }
    }
    let mut s = seed.with_positions(pos)?;
    s.energy = None;
    Ok(s)
}
