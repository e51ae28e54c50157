use std::f64::consts::{PI, TAU};
use std::fmt;

use serde::Serialize;

use crate::geom::{axis_angle, reflection, Mat3, Vec3};

/// A point operation about the molecular centroid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ElementKind {
    Identity,
    Inversion,
    /// Rotation by `2π·power/order` about `axis`.
    ProperRotation { axis: Vec3, order: u32, power: u32 },
    /// Rotation by `2π·power/order` about `axis` followed by reflection
    /// through the plane perpendicular to it.
    ImproperRotation { axis: Vec3, order: u32, power: u32 },
    Mirror { normal: Vec3 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetryElement {
    #[serde(flatten)]
    pub kind: ElementKind,
    /// Largest matched atom displacement under the operation divided by the
    /// molecular radius.
    pub score: f64,
}

impl ElementKind {
    pub fn rotation(axis: Vec3, order: u32) -> ElementKind {
        ElementKind::ProperRotation { axis: canonical_axis(&axis), order, power: 1 }
    }

    pub fn improper(axis: Vec3, order: u32) -> ElementKind {
        ElementKind::ImproperRotation { axis: canonical_axis(&axis), order, power: 1 }
    }

    pub fn mirror(normal: Vec3) -> ElementKind {
        ElementKind::Mirror { normal: canonical_axis(&normal) }
    }

    pub fn matrix(&self) -> Mat3 {
        match *self {
            ElementKind::Identity => Mat3::identity(),
            ElementKind::Inversion => -Mat3::identity(),
            ElementKind::ProperRotation { axis, order, power } => {
                axis_angle(&axis, TAU * power as f64 / order as f64)
            }
            ElementKind::ImproperRotation { axis, order, power } => {
                reflection(&axis) * axis_angle(&axis, TAU * power as f64 / order as f64)
            }
            ElementKind::Mirror { normal } => reflection(&normal),
        }
    }

    pub fn axis(&self) -> Option<Vec3> {
        match *self {
            ElementKind::ProperRotation { axis, .. } | ElementKind::ImproperRotation { axis, .. } => {
                Some(axis)
            }
            ElementKind::Mirror { normal } => Some(normal),
            _ => None,
        }
    }

    pub fn is_proper(&self) -> bool {
        matches!(self, ElementKind::Identity | ElementKind::ProperRotation { .. })
    }

    /// Sort rank used for deterministic ordering and deduplication keys.
    pub(crate) fn rank(&self) -> (u8, u32, u32) {
        match *self {
            ElementKind::Identity => (0, 0, 0),
            ElementKind::Inversion => (1, 0, 0),
            ElementKind::ProperRotation { order, power, .. } => (2, order, power),
            ElementKind::ImproperRotation { order, power, .. } => (3, order, power),
            ElementKind::Mirror { .. } => (4, 0, 0),
        }
    }

    /// Classifies an orthogonal matrix. Rotation angles are snapped to the
    /// nearest `2πk/n` with `n <= max_order`; `None` if no such fraction fits.
    pub fn from_matrix(m: &Mat3, max_order: u32) -> Option<ElementKind> {
        let det = m.determinant();
        let proper = if det > 0.0 { *m } else { -*m };
        let (axis, angle) = rotation_axis_angle(&proper);
        if det > 0.0 {
            if angle < ANGLE_SNAP {
                return Some(ElementKind::Identity);
            }
            let (k, n) = snap_fraction(angle, max_order)?;
            let axis = if n == 2 { canonical_axis(&axis) } else { axis };
            Some(ElementKind::ProperRotation { axis, order: n, power: k })
        } else {
            // m = -R(a, φ) = σ_a · R(-a, π - φ)
            let psi = PI - angle;
            if psi < ANGLE_SNAP {
                return Some(ElementKind::Mirror { normal: canonical_axis(&axis) });
            }
            if (PI - psi) < ANGLE_SNAP {
                return Some(ElementKind::Inversion);
            }
            let (k, n) = snap_fraction(psi, max_order)?;
            Some(ElementKind::ImproperRotation { axis: -axis, order: n, power: k })
        }
    }
}

const ANGLE_SNAP: f64 = 1e-3;
const FRACTION_SNAP: f64 = 1e-2;

// Angle in [0, π] and unit axis of a proper rotation.
fn rotation_axis_angle(r: &Mat3) -> (Vec3, f64) {
    let cos = ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    let angle = cos.acos();
    let skew = Vec3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]);
    if skew.norm() > 1e-6 && angle < PI - 1e-3 {
        return (skew.normalize(), angle);
    }
    // Near π the axis is the dominant column of (R + I)/2 = a·aᵀ.
    let sym = (r + Mat3::identity()) * 0.5;
    let k = (0..3).max_by(|&i, &j| sym[(i, i)].total_cmp(&sym[(j, j)])).unwrap();
    let mut axis: Vec3 = sym.column(k).into_owned();
    if axis.norm() < 1e-12 {
        return (Vec3::z(), angle);
    }
    axis.normalize_mut();
    if skew.dot(&axis) < 0.0 {
        axis = -axis;
    }
    (axis, angle)
}

// Smallest n (and its k) with |angle - 2πk/n| within the snap window.
fn snap_fraction(angle: f64, max_order: u32) -> Option<(u32, u32)> {
    (2..=max_order).find_map(|n| {
        let k = (angle * n as f64 / TAU).round();
        (k >= 1.0 && (angle - TAU * k / n as f64).abs() <= FRACTION_SNAP).then_some((k as u32, n))
    })
}

/// Unit axis with the first clearly non-zero component positive.
pub fn canonical_axis(v: &Vec3) -> Vec3 {
    let u = v.normalize();
    match u.iter().find(|c| c.abs() > 1e-6) {
        Some(&c) if c < 0.0 => -u,
        _ => u,
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            ElementKind::Identity => f.write_str("E"),
            ElementKind::Inversion => f.write_str("i"),
            ElementKind::ProperRotation { order, power: 1, .. } => write!(f, "C{order}"),
            ElementKind::ProperRotation { order, power, .. } => write!(f, "C{order}^{power}"),
            ElementKind::ImproperRotation { order, power: 1, .. } => write!(f, "S{order}"),
            ElementKind::ImproperRotation { order, power, .. } => write!(f, "S{order}^{power}"),
            ElementKind::Mirror { .. } => f.write_str("σ"),
        }
    }
}

impl fmt::Display for SymmetryElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind.axis() {
            Some(a) => write!(f, "{} [{:.4}, {:.4}, {:.4}] score {:.4}", self.kind, a.x, a.y, a.z, self.score),
            None => write!(f, "{} score {:.4}", self.kind, self.score),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip(kind: ElementKind) {
        let m = kind.matrix();
        let back = ElementKind::from_matrix(&m, 16).unwrap();
        assert!((back.matrix() - m).amax() < 1e-9, "{kind:?} -> {back:?}");
    }

    #[test]
    fn classify_roundtrip() {
        let axis = Vec3::new(0.3, -0.5, 0.8);
        roundtrip(ElementKind::Identity);
        roundtrip(ElementKind::Inversion);
        roundtrip(ElementKind::mirror(axis));
        for n in 2..=8 {
            for k in 1..n {
                roundtrip(ElementKind::ProperRotation { axis: axis.normalize(), order: n, power: k });
            }
        }
        for n in 3..=16 {
            for k in 1..n {
                roundtrip(ElementKind::ImproperRotation { axis: axis.normalize(), order: n, power: k });
            }
        }
    }

    #[test]
    fn classify_names() {
        let z = Vec3::z();
        let c3_squared = ElementKind::rotation(z, 3).matrix().pow(2);
        let k = ElementKind::from_matrix(&c3_squared, 8).unwrap();
        assert_eq!(k.to_string(), "C3");
        assert!((k.axis().unwrap() + z).norm() < 1e-12);

        let s6_cubed = ElementKind::improper(z, 6).matrix().pow(3);
        assert_eq!(ElementKind::from_matrix(&s6_cubed, 8), Some(ElementKind::Inversion));
        let s4 = ElementKind::improper(z, 4).matrix();
        assert_eq!(ElementKind::from_matrix(&s4, 8).unwrap().to_string(), "S4");
        let c5_2 = ElementKind::ProperRotation { axis: z, order: 5, power: 2 };
        assert_eq!(ElementKind::from_matrix(&c5_2.matrix(), 8).unwrap().to_string(), "C5^2");
        assert_eq!(ElementKind::from_matrix(&axis_angle(&z, 1.0), 8), None);
    }
}
