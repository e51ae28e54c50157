//! Structures, trajectories and rigid transforms.
//!
//! Coordinates are in Å, energies in eV and masses in amu throughout. Atom
//! identity is the positional index: nothing in the crate reorders atoms, so
//! index `i` refers to the same atom in every structure derived from another.

use nalgebra::{DMatrix, Matrix3, Vector3};

use crate::element::Element;
use crate::error::{Error, Result};
use crate::linalg::jacobi_eigen;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Element-tagged coordinates with optional per-structure metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Structure {
    elements: Vec<Element>,
    positions: Vec<Vec3>,
    pub energy: Option<f64>,
    pub time_fs: Option<f64>,
    pub label: Option<String>,
}

impl Structure {
    pub fn new(elements: Vec<Element>, positions: Vec<Vec3>) -> Result<Structure> {
        if elements.is_empty() {
            return Err(Error::EmptyStructure);
        }
        if elements.len() != positions.len() {
            return Err(Error::AtomMismatch(format!(
                "{} elements but {} positions",
                elements.len(),
                positions.len()
            )));
        }
        if let Some(i) = positions.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::NonFinite(i));
        }
        Ok(Structure { elements, positions, energy: None, time_fs: None, label: None })
    }

    pub fn from_atoms<I>(atoms: I) -> Result<Structure>
    where
        I: IntoIterator<Item = (Element, Vec3)>,
    {
        let (elements, positions) = atoms.into_iter().unzip();
        Structure::new(elements, positions)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.positions
    }

    pub fn atoms(&self) -> impl Iterator<Item = (Element, &Vec3)> + '_ {
        self.elements.iter().copied().zip(&self.positions)
    }

    pub fn with_energy(mut self, energy: f64) -> Structure {
        self.energy = Some(energy);
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Structure {
        self.label = Some(label.into());
        self
    }

    /// Same atoms and metadata, new coordinates.
    pub fn with_positions(&self, positions: Vec<Vec3>) -> Result<Structure> {
        let mut s = Structure::new(self.elements.clone(), positions)?;
        s.energy = self.energy;
        s.time_fs = self.time_fs;
        s.label = self.label.clone();
        Ok(s)
    }

    /// Maps every position through `f`, keeping elements and metadata.
    pub fn map_positions(&self, f: impl FnMut(&Vec3) -> Vec3) -> Result<Structure> {
        self.with_positions(self.positions.iter().map(f).collect())
    }

    pub fn translated(&self, by: &Vec3) -> Structure {
        let mut s = self.clone();
        for p in &mut s.positions {
            *p += by;
        }
        s
    }

    /// Copy translated so that the centroid sits at the origin.
    pub fn centered(&self) -> Structure {
        self.translated(&-centroid(self))
    }

    pub fn count(&self, element: Element) -> usize {
        self.elements.iter().filter(|&&e| e == element).count()
    }

    /// Flattened coordinates `[x0, y0, z0, x1, ...]`.
    pub fn flatten(&self) -> Vec<f64> {
        self.positions.iter().flat_map(|p| [p.x, p.y, p.z]).collect()
    }

    pub fn same_atoms(&self, other: &Structure) -> bool {
        self.elements == other.elements
    }

    pub(crate) fn check_compatible(&self, other: &Structure) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::AtomMismatch(format!(
                "{} atoms vs {} atoms",
                self.len(),
                other.len()
            )));
        }
        if let Some(i) = (0..self.len()).find(|&i| self.elements[i] != other.elements[i]) {
            return Err(Error::AtomMismatch(format!(
                "atom {i} is {} in one structure and {} in the other",
                self.elements[i], other.elements[i]
            )));
        }
        Ok(())
    }
}

/// Frames sharing one atom list, with sampling metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    frames: Vec<Structure>,
    pub timestep_fs: f64,
    pub temperature_k: Option<f64>,
    pub label: String,
}

impl Trajectory {
    pub fn new(frames: Vec<Structure>, timestep_fs: f64) -> Result<Trajectory> {
        let first = frames.first().ok_or_else(|| {
            Error::InvalidArgument("a trajectory needs at least one frame".into())
        })?;
        for (i, f) in frames.iter().enumerate().skip(1) {
            first.check_compatible(f).map_err(|e| match e {
                Error::AtomMismatch(m) => Error::AtomMismatch(format!("frame {i}: {m}")),
                other => other,
            })?;
        }
        if !(timestep_fs.is_finite() && timestep_fs > 0.0) {
            return Err(Error::InvalidArgument(format!("timestep {timestep_fs} fs")));
        }
        Ok(Trajectory { frames, timestep_fs, temperature_k: None, label: String::new() })
    }

    pub fn frames(&self) -> &[Structure] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<Structure> {
        self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn n_atoms(&self) -> usize {
        self.frames[0].len()
    }

    /// Same metadata, new frames (validated like `new`).
    pub fn with_frames(&self, frames: Vec<Structure>) -> Result<Trajectory> {
        let mut t = Trajectory::new(frames, self.timestep_fs)?;
        t.temperature_k = self.temperature_k;
        t.label = self.label.clone();
        Ok(t)
    }
}

/// A proper rigid motion `x -> R x + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub rotation: Mat3,
    pub translation: Vec3,
}

const ROTATION_TOL: f64 = 1e-10;

impl RigidTransform {
    pub fn new(rotation: Mat3, translation: Vec3) -> Result<RigidTransform> {
        let t = RigidTransform { rotation, translation };
        t.validate()?;
        Ok(t)
    }

    pub fn identity() -> RigidTransform {
        RigidTransform { rotation: Mat3::identity(), translation: Vec3::zeros() }
    }

    pub fn translation(by: Vec3) -> RigidTransform {
        RigidTransform { rotation: Mat3::identity(), translation: by }
    }

    pub fn rotation(rotation: Mat3) -> Result<RigidTransform> {
        RigidTransform::new(rotation, Vec3::zeros())
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.rotation;
        if !r.iter().chain(self.translation.iter()).all(|x| x.is_finite()) {
            return Err(Error::InvalidRotation("non-finite entries".into()));
        }
        let ortho = (r.transpose() * r - Mat3::identity()).amax();
        if ortho > ROTATION_TOL {
            return Err(Error::InvalidRotation(format!("|RᵀR - I| = {ortho:e}")));
        }
        let det = r.determinant();
        if (det - 1.0).abs() > ROTATION_TOL {
            return Err(Error::InvalidRotation(format!("det = {det}")));
        }
        Ok(())
    }

    pub fn apply(&self, x: &Vec3) -> Vec3 {
        self.rotation * x + self.translation
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: next.rotation * self.rotation,
            translation: next.rotation * self.translation + next.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform { rotation: rt, translation: -(rt * self.translation) }
    }
}

/// Rotation by `angle` (rad) about `axis` (need not be normalized).
pub fn axis_angle(axis: &Vec3, angle: f64) -> Mat3 {
    let a = axis.normalize();
    let k = Mat3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0);
    Mat3::identity() + k * angle.sin() + k * k * (1.0 - angle.cos())
}

/// Reflection through the plane with normal `normal`.
pub fn reflection(normal: &Vec3) -> Mat3 {
    let n = normal.normalize();
    Mat3::identity() - 2.0 * n * n.transpose()
}

/// Intrinsic rotation `Rz(yaw) · Ry(pitch) · Rx(roll)`.
pub fn euler_zyx(yaw: f64, pitch: f64, roll: f64) -> Mat3 {
    axis_angle(&Vec3::z(), yaw) * axis_angle(&Vec3::y(), pitch) * axis_angle(&Vec3::x(), roll)
}

/// Inverse of [`euler_zyx`], with pitch in [-π/2, π/2].
pub fn euler_zyx_angles(r: &Mat3) -> (f64, f64, f64) {
    let pitch = (-r[(2, 0)]).clamp(-1.0, 1.0).asin();
    if r[(2, 0)].abs() > 1.0 - 1e-12 {
        // Gimbal lock: only yaw - roll (or yaw + roll) is determined.
        return (f64::atan2(-r[(0, 1)], r[(1, 1)]), pitch, 0.0);
    }
    (r[(1, 0)].atan2(r[(0, 0)]), pitch, r[(2, 1)].atan2(r[(2, 2)]))
}

pub fn centroid(s: &Structure) -> Vec3 {
    s.positions.iter().sum::<Vec3>() / s.len() as f64
}

pub fn center_of_mass(s: &Structure) -> Vec3 {
    let (weighted, total) = s
        .atoms()
        .fold((Vec3::zeros(), 0.0), |(acc, m), (e, p)| (acc + p * e.mass(), m + e.mass()));
    weighted / total
}

/// Inertia tensor about the center of mass, with its principal decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct Inertia {
    pub tensor: Mat3,
    /// Principal moments (amu·Å²), descending.
    pub moments: [f64; 3],
    /// Principal axes as columns, matching `moments`.
    pub axes: Mat3,
}

/// Relative eigenvalue gap below which two principal moments count as equal.
pub const DEGENERACY_GAP: f64 = 1e-6;

impl Inertia {
    pub fn axis(&self, k: usize) -> Vec3 {
        self.axes.column(k).into_owned()
    }

    /// Pairs `(i, j)` of principal moments that are degenerate.
    pub fn degenerate_pairs(&self) -> Vec<(usize, usize)> {
        let scale = self.moments[0].abs().max(f64::MIN_POSITIVE);
        let mut out = Vec::new();
        for i in 0..3 {
            for j in (i + 1)..3 {
                if (self.moments[i] - self.moments[j]).abs() / scale < DEGENERACY_GAP {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn is_spherical_top(&self) -> bool {
        self.degenerate_pairs().len() == 3
    }
}

pub fn inertia_tensor(s: &Structure) -> Result<Inertia> {
    if s.len() < 2 {
        return Err(Error::Degenerate("inertia tensor needs at least two atoms".into()));
    }
    let com = center_of_mass(s);
    let mut tensor = Mat3::zeros();
    for (e, p) in s.atoms() {
        let r = p - com;
        tensor += e.mass() * (Mat3::identity() * r.norm_squared() - r * r.transpose());
    }
    if tensor.amax() == 0.0 {
        return Err(Error::Degenerate("all atoms coincide".into()));
    }
    let eig = jacobi_eigen(&DMatrix::from_fn(3, 3, |r, c| tensor[(r, c)]));
    let mut axes = Mat3::from_fn(|r, c| eig.vectors[(r, c)]);
    if axes.determinant() < 0.0 {
        axes.column_mut(2).neg_mut();
    }
    Ok(Inertia { tensor, moments: [eig.values[0], eig.values[1], eig.values[2]], axes })
}

/// Root-mean-square deviation without any superposition.
pub fn rmsd(a: &Structure, b: &Structure) -> Result<f64> {
    a.check_compatible(b)?;
    let ss: f64 = a.positions.iter().zip(&b.positions).map(|(p, q)| (p - q).norm_squared()).sum();
    Ok((ss / a.len() as f64).sqrt())
}

pub fn apply_transform(s: &Structure, t: &RigidTransform) -> Result<Structure> {
    t.validate()?;
    s.map_positions(|p| t.apply(p))
}
