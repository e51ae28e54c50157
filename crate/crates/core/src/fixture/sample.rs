//! Synthetic Posner-like trajectory with planted structure.
//!
//! Every frame starts from the exact S6 template. Outside the interludes one
//! O atom is pushed 0.8 Å off its site, which breaks every symmetry at
//! tolerance 0.1, and the cluster sits in one of two basins `±e`, where `e`
//! moves each Ca and each rigid PO₄ by a fixed vector of length
//! `basin_amplitude`. Basin residences are random runs. During the
//! interludes the frame is the exact template. Thermal-like noise is added
//! per atom and the whole frame tumbles and drifts, so analyses need
//! alignment first. Energies come from the default pair potential.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{random_rotation, Vec3};
use crate::error::Result;
use crate::ffopt::{energy, PairPotentialParams};
use crate::geom::{axis_angle, Trajectory};
use crate::posnergen::{build_template, phosphate_groups, TemplateGroup};

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRunSpec {
    pub frames: usize,
    pub timestep_fs: f64,
    /// Equilibration frames an analysis should drop.
    pub skip_frames: usize,
    /// (first frame, length) of each exact-S6 interlude.
    pub interludes: Vec<(usize, usize)>,
    pub displaced_atom: usize,
    pub displacement: f64,
    pub basin_amplitude: f64,
    /// Shortest and longest basin residence (frames).
    pub residence: (usize, usize),
    /// Per-coordinate noise (Å) outside and inside the interludes.
    pub noise: f64,
    pub interlude_noise: f64,
    /// Largest per-frame tumbling step (rad) and drift (Å).
    pub tumble: f64,
    pub drift: f64,
    pub seed: u64,
}

impl Default for SampleRunSpec {
    fn default() -> Self {
        SampleRunSpec {
            frames: 1700,
            timestep_fs: 2.5,
            skip_frames: 500,
            interludes: vec![(700, 40), (1100, 32), (1450, 24)],
            displaced_atom: 10,
            displacement: 0.8,
            basin_amplitude: 0.22,
            residence: (60, 260),
            noise: 0.05,
            interlude_noise: 0.01,
            tumble: 0.02,
            drift: 0.01,
            seed: 2024,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRun {
    pub spec: SampleRunSpec,
    pub trajectory: Trajectory,
    /// Basin of each frame: `Some(0 | 1)`, or `None` inside an interlude.
    pub basins: Vec<Option<usize>>,
}

impl SampleRun {
    pub fn is_interlude(&self, frame: usize) -> bool {
        self.spec.interludes.iter().any(|(s, n)| frame >= *s && frame < s + n)
    }

    /// Upper bound on the per-atom amplitude of any collective motion
    /// planted in the retained frames (Å).
    pub fn amplitude_bound(&self) -> f64 {
        0.3
    }

    /// The planted segments of the retained frames as
    /// `(first, last, is_interlude)`, inclusive.
    pub fn planted_segments(&self) -> Vec<(usize, usize, bool)> {
        let mut out: Vec<(usize, usize, bool)> = Vec::new();
        for f in self.spec.skip_frames..self.spec.frames {
            let high = self.is_interlude(f);
            match out.last_mut() {
                Some(seg) if seg.2 == high => seg.1 = f,
                _ => out.push((f, f, high)),
            }
        }
        out
    }
}

/// The trajectory shipped as `fixtures/sample_run.xyz`.
pub fn sample_run() -> SampleRun {
    sample_run_with(&SampleRunSpec::default()).expect("default sample run builds")
}

pub fn sample_run_with(spec: &SampleRunSpec) -> Result<SampleRun> {
    let base = build_template(TemplateGroup::S6)?;
    let n = base.len();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let push = unit(&mut rng) * spec.displacement;
    // One vector per Ca and per phosphate group, mean-free.
    let groups = phosphate_groups(&base)?;
    let mut e = vec![Vec3::zeros(); n];
    for (i, el) in base.elements().iter().enumerate() {
        if *el == crate::Element::CA {
            e[i] = unit(&mut rng) * spec.basin_amplitude;
        }
    }
    for g in &groups {
        let v = unit(&mut rng) * spec.basin_amplitude;
        for i in std::iter::once(g.p).chain(g.o) {
            e[i] = v;
        }
    }
    let mean: Vec3 = e.iter().sum::<Vec3>() / n as f64;
    e.iter_mut().for_each(|v| *v -= mean);

    let noise = Normal::new(0.0, spec.noise).expect("finite noise");
    let quiet = Normal::new(0.0, spec.interlude_noise).expect("finite noise");
    let params = PairPotentialParams::default();

    let mut basin = 0;
    let mut left = rng.random_range(spec.residence.0..=spec.residence.1);
    let mut rotation = random_rotation(&mut rng);
    let mut shift = Vec3::zeros();
    let mut frames = Vec::with_capacity(spec.frames);
    let mut basins = Vec::with_capacity(spec.frames);
    for f in 0..spec.frames {
        if left == 0 {
            basin = 1 - basin;
            left = rng.random_range(spec.residence.0..=spec.residence.1);
        }
        left -= 1;
        let interlude = spec.interludes.iter().any(|(s, len)| f >= *s && f < s + len);
        let sign = if basin == 0 { 1.0 } else { -1.0 };
        let mut pos = base.positions().to_vec();
        for (i, x) in pos.iter_mut().enumerate() {
            let d = if interlude { &quiet } else { &noise };
            *x += Vec3::new(d.sample(&mut rng), d.sample(&mut rng), d.sample(&mut rng));
            if !interlude {
                *x += e[i] * sign;
            }
        }
        if !interlude {
            pos[spec.displaced_atom] += push;
        }
        rotation = axis_angle(&unit(&mut rng), rng.random_range(0.0..=spec.tumble)) * rotation;
        shift += unit(&mut rng) * rng.random_range(0.0..=spec.drift);
        let moved: Vec<Vec3> = pos.iter().map(|x| rotation * x + shift).collect();
        let mut s = base.with_positions(moved)?;
        s.label = None;
        s.time_fs = Some(f as f64 * spec.timestep_fs);
        s.energy = Some(energy(&s, &params)?);
        frames.push(s);
        basins.push((!interlude).then_some(basin));
    }
    let mut trajectory = Trajectory::new(frames, spec.timestep_fs)?;
    trajectory.label = "synthetic sample run".into();
    Ok(SampleRun { spec: spec.clone(), trajectory, basins })
}

fn unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0));
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symdetect::detect_point_group;

    fn small() -> SampleRunSpec {
        SampleRunSpec { frames: 120, skip_frames: 20, interludes: vec![(50, 10)], residence: (15, 30), ..SampleRunSpec::default() }
    }

    #[test]
    fn planted_labels() {
        let run = sample_run_with(&small()).unwrap();
        for (f, s) in run.trajectory.frames().iter().enumerate() {
            let label = detect_point_group(s, 0.1).label.to_string();
            if run.is_interlude(f) {
                assert_eq!(label, "S6", "frame {f}");
            } else {
                assert_eq!(label, "C1", "frame {f}");
            }
        }
        assert_eq!(run.planted_segments(), vec![(20, 49, false), (50, 59, true), (60, 119, false)]);
        assert!(run.basins.contains(&Some(0)) && run.basins.contains(&Some(1)));
        assert!(run.trajectory.frames().iter().all(|f| f.energy.is_some()));
        assert_eq!(run.trajectory.frames()[3].time_fs, Some(7.5));
    }

    #[test]
    fn seeded() {
        assert_eq!(sample_run_with(&small()).unwrap(), sample_run_with(&small()).unwrap());
        let other = SampleRunSpec { seed: 1, ..small() };
        assert_ne!(sample_run_with(&other).unwrap().trajectory, sample_run_with(&small()).unwrap().trajectory);
    }
}
