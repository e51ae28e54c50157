use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{push_phosphate, PhosphateTemplate, DEFAULT_DIAGONAL};
use crate::element::Element;
use crate::error::{Error, Result};
use crate::geom::{axis_angle, euler_zyx, euler_zyx_angles, Mat3, Structure, Vec3};
use crate::symdetect::{closure, ElementKind};

/// Generated atoms closer than this are an unphysical parameter set.
pub const MIN_SEPARATION: f64 = 0.3;
const SAME_SITE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TemplateGroup {
    S6,
    Th,
    C3v,
    D3d,
}

impl TemplateGroup {
    pub const ALL: [TemplateGroup; 4] = [TemplateGroup::S6, TemplateGroup::Th, TemplateGroup::C3v, TemplateGroup::D3d];
}

impl fmt::Display for TemplateGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for TemplateGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TemplateGroup::ALL
            .into_iter()
            .find(|g| g.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown template group `{s}` (S6, Th, C3v, D3d)")))
    }
}

/// Free parameters of an exactly S6-symmetric Posner structure with the S6
/// axis along z: 1 + 3 + 3 + 3 = 10 scalars.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct S6Params {
    /// Height of the axial Ca pair (Å).
    pub z_axial: f64,
    /// Representative of the six-membered Ca orbit (Å).
    pub ca_orbit: Vec3,
    /// Representative P position (Å).
    pub p_orbit: Vec3,
    /// ZYX Euler angles (rad) of the representative PO₄.
    pub orient: [f64; 3],
}

impl S6Params {
    pub const COUNT: usize = 10;

    /// The cube seed of body diagonal `diagonal`, turned so that one body
    /// diagonal lies along z. The result has more than S6 symmetry.
    pub fn from_cube(diagonal: f64) -> S6Params {
        let q = cube_frame();
        let h = diagonal / 3f64.sqrt() / 2.0;
        let (yaw, pitch, roll) = euler_zyx_angles(&q);
        S6Params {
            z_axial: diagonal / 2.0,
            ca_orbit: q * Vec3::new(h, h, -h),
            p_orbit: q * Vec3::new(h, 0.0, 0.0),
            orient: [yaw, pitch, roll],
        }
    }

    pub fn to_array(&self) -> [f64; 10] {
        let (c, p, o) = (self.ca_orbit, self.p_orbit, self.orient);
        [self.z_axial, c.x, c.y, c.z, p.x, p.y, p.z, o[0], o[1], o[2]]
    }

    pub fn from_array(a: &[f64; 10]) -> S6Params {
        S6Params {
            z_axial: a[0],
            ca_orbit: Vec3::new(a[1], a[2], a[3]),
            p_orbit: Vec3::new(a[4], a[5], a[6]),
            orient: [a[7], a[8], a[9]],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.to_array().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("S6 parameters must be finite".into()));
        }
        if !(self.z_axial > 0.0) || self.ca_orbit.norm() == 0.0 || self.p_orbit.norm() == 0.0 {
            return Err(Error::InvalidArgument(
                "S6 parameters need z_axial > 0 and non-zero orbit representatives".into(),
            ));
        }
        Ok(())
    }
}

impl Default for S6Params {
    /// The turned cube seed with the Ca and P orbits twisted about the axis
    /// and the phosphate tilted, which leaves S6 as the only symmetry.
    fn default() -> Self {
        let cube = S6Params::from_cube(DEFAULT_DIAGONAL);
        let [yaw, pitch, roll] = cube.orient;
        S6Params {
            z_axial: cube.z_axial,
            ca_orbit: axis_angle(&Vec3::z(), 0.12) * cube.ca_orbit,
            p_orbit: axis_angle(&Vec3::z(), -0.09) * cube.p_orbit + Vec3::new(0.0, 0.0, 0.15),
            orient: [yaw + 0.25, pitch + 0.1, roll - 0.15],
        }
    }
}

// Rotation taking the (1,1,1) body diagonal onto z.
fn cube_frame() -> Mat3 {
    let d = Vec3::new(1.0, 1.0, 1.0).normalize();
    axis_angle(&d.cross(&Vec3::z()), d.dot(&Vec3::z()).acos())
}

fn s6_operations() -> Vec<Mat3> {
    let s6 = ElementKind::improper(Vec3::z(), 6).matrix();
    let mut ops = vec![Mat3::identity()];
    for k in 1..6 {
        ops.push(ops[k - 1] * s6);
    }
    ops
}

/// Exactly S6-symmetric structure: Ca at the origin, the axial pair at
/// `±z_axial`, the S6 orbits of `ca_orbit` and of the oriented phosphate at
/// `p_orbit`.
pub fn build_s6(params: &S6Params, template: &PhosphateTemplate) -> Result<Structure> {
    params.validate()?;
    let ops = s6_operations();
    let [yaw, pitch, roll] = params.orient;
    let turn = euler_zyx(yaw, pitch, roll);
    let offsets = template.offsets().map(|o| turn * o);

    let mut atoms = vec![
        (Element::CA, Vec3::zeros()),
        (Element::CA, Vec3::new(0.0, 0.0, params.z_axial)),
        (Element::CA, Vec3::new(0.0, 0.0, -params.z_axial)),
    ];
    atoms.extend(ops.iter().map(|g| (Element::CA, g * params.ca_orbit)));
    for g in &ops {
        push_phosphate(&mut atoms, g * params.p_orbit, &offsets.map(|o| g * o));
    }
    check_separation(&atoms)?;
    Ok(Structure::from_atoms(atoms)?.with_label("S6 builder"))
}

fn check_separation(atoms: &[(Element, Vec3)]) -> Result<()> {
    for i in 0..atoms.len() {
        for j in i + 1..atoms.len() {
            let d = (atoms[i].1 - atoms[j].1).norm();
            if d < MIN_SEPARATION {
                return Err(Error::Collision(format!("atoms {i} and {j} are {d:.3} Å apart")));
            }
        }
    }
    Ok(())
}

/// All images of an asymmetric unit under the group generated by
/// `generators`. A phosphate on a special position must be invariant under
/// the operations fixing its P.
fn replicate(generators: &[Mat3], ca: &[Vec3], phosphates: &[(Vec3, [Vec3; 4])]) -> Result<Vec<(Element, Vec3)>> {
    let mut ops = vec![Mat3::identity()];
    for g in generators {
        ops = closure(&ops, g).ok_or_else(|| Error::InvalidArgument("generators do not close".into()))?;
    }
    let mut ca_sites: Vec<Vec3> = Vec::new();
    for c in ca {
        for g in &ops {
            let image = g * c;
            if !ca_sites.iter().any(|q| (q - image).norm() < SAME_SITE) {
                ca_sites.push(image);
            }
        }
    }
    let mut po4: Vec<(Vec3, [Vec3; 4])> = Vec::new();
    for (p, offsets) in phosphates {
        for g in &ops {
            let image = g * p;
            let turned = offsets.map(|o| g * o);
            match po4.iter().find(|(q, _)| (q - image).norm() < SAME_SITE) {
                Some((_, existing)) => {
                    if !turned.iter().all(|o| existing.iter().any(|e| (e - o).norm() < SAME_SITE)) {
                        return Err(Error::InvalidArgument(
                            "phosphate is not invariant under its site symmetry".into(),
                        ));
                    }
                }
                None => po4.push((image, turned)),
            }
        }
    }
    let mut atoms: Vec<(Element, Vec3)> = ca_sites.into_iter().map(|c| (Element::CA, c)).collect();
    for (p, offsets) in &po4 {
        push_phosphate(&mut atoms, *p, offsets);
    }
    check_separation(&atoms)?;
    Ok(atoms)
}

/// Exactly symmetric Posner-stoichiometry structure for one of the
/// hand-built groups, all derived from the 9 Å cube.
pub fn build_template(group: TemplateGroup) -> Result<Structure> {
    let template = PhosphateTemplate::default();
    let h = DEFAULT_DIAGONAL / 3f64.sqrt() / 2.0;
    let atoms = match group {
        TemplateGroup::S6 => return Ok(build_s6(&S6Params::default(), &template)?.with_label("S6 template")),
        TemplateGroup::Th => {
            // Tetrahedron with its C2 along x and edges in the xy and xz
            // planes, as required at a face centre of Th.
            let b = template.po_bond;
            let (u, v) = (b / 3f64.sqrt(), b * (2.0f64 / 3.0).sqrt());
            let offsets = [Vec3::new(u, v, 0.0), Vec3::new(u, -v, 0.0), Vec3::new(-u, 0.0, v), Vec3::new(-u, 0.0, -v)];
            let generators = [
                ElementKind::rotation(Vec3::new(1.0, 1.0, 1.0), 3).matrix(),
                ElementKind::rotation(Vec3::z(), 2).matrix(),
                -Mat3::identity(),
            ];
            replicate(&generators, &[Vec3::zeros(), Vec3::new(h, h, h)], &[(Vec3::new(h, 0.0, 0.0), offsets)])?
        }
        TemplateGroup::D3d => {
            let q = cube_frame();
            let offsets = template.offsets().map(|o| q * o);
            let generators = [
                ElementKind::improper(Vec3::z(), 6).matrix(),
                ElementKind::rotation(q * Vec3::new(1.0, -1.0, 0.0), 2).matrix(),
            ];
            let ca = [Vec3::zeros(), Vec3::new(0.0, 0.0, DEFAULT_DIAGONAL / 2.0), q * Vec3::new(h, h, -h)];
            replicate(&generators, &ca, &[(q * Vec3::new(h, 0.0, 0.0), offsets)])?
        }
        TemplateGroup::C3v => {
            // The D3d arrangement with the two halves pulled apart unequally,
            // which removes the inversion centre and the C2 axes.
            let q = cube_frame();
            let offsets = template.offsets().map(|o| q * o);
            let generators = [
                ElementKind::rotation(Vec3::z(), 3).matrix(),
                ElementKind::mirror(q * Vec3::new(1.0, -1.0, 0.0)).matrix(),
            ];
            let ca = [
                Vec3::zeros(),
                Vec3::new(0.0, 0.0, 4.5),
                Vec3::new(0.0, 0.0, -4.2),
                q * Vec3::new(h, h, -h),
                q * Vec3::new(-h, -h, h) * 0.96,
            ];
            let phosphates = [
                (q * Vec3::new(h, 0.0, 0.0), offsets),
                (q * Vec3::new(-h, 0.0, 0.0) * 1.03, offsets.map(|o| -o)),
            ];
            replicate(&generators, &ca, &phosphates)?
        }
    };
    Ok(Structure::from_atoms(atoms)?.with_label(format!("{group} template")))
}
