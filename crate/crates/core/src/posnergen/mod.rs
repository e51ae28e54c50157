//! Candidate Posner (Ca₉(PO₄)₆) structures.
//!
//! Three routes are provided: the cube scheme (a BCC arrangement of Ca with
//! phosphates on the face centres, followed by rigid phosphate rotations and
//! radial scaling), exactly symmetric templates built from an asymmetric unit
//! and a group, and the 10-parameter S6 builder used by constrained
//! minimization.
//!
//! Atom order is fixed everywhere: 9 Ca, then six `P O O O O` blocks.

mod enumerate;
mod templates;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::element::Element;
use crate::error::{Error, Result};
use crate::geom::{Structure, Vec3};

pub use enumerate::{enumerate_rotated, GenerationMode, GenerationScheme};
pub use templates::{build_s6, build_template, S6Params, TemplateGroup};

/// Cube body diagonal (Å) of the seed structure.
pub const DEFAULT_DIAGONAL: f64 = 9.0;
pub const DEFAULT_SCALE_FACTORS: [f64; 4] = [0.90, 0.95, 1.00, 1.05];

/// Rigid PO₄ tetrahedron.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhosphateTemplate {
    /// P–O distance (Å).
    pub po_bond: f64,
}

impl Default for PhosphateTemplate {
    fn default() -> Self {
        PhosphateTemplate { po_bond: 1.55 }
    }
}

impl PhosphateTemplate {
    /// O offsets from P: alternate cube corners, so the three C2 axes lie
    /// along x, y and z.
    pub fn offsets(&self) -> [Vec3; 4] {
        let c = self.po_bond / 3f64.sqrt();
        [
            Vec3::new(c, c, c),
            Vec3::new(c, -c, -c),
            Vec3::new(-c, c, -c),
            Vec3::new(-c, -c, c),
        ]
    }
}

/// A phosphate located in a structure by atom index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhosphateGroup {
    pub p: usize,
    pub o: [usize; 4],
}

/// Appends a P and its four O at `p + offsets`.
pub(crate) fn push_phosphate(atoms: &mut Vec<(Element, Vec3)>, p: Vec3, offsets: &[Vec3; 4]) {
    atoms.push((Element::P, p));
    atoms.extend(offsets.iter().map(|o| (Element::O, p + o)));
}

/// 9 Ca on a body-centred cube (centre first, then the corners) and a PO₄ on
/// each of the six face centres, tetrahedra axis-aligned.
pub fn build_cube_seed(diagonal: f64, template: &PhosphateTemplate) -> Result<Structure> {
    if !(diagonal > 0.0) {
        return Err(Error::InvalidArgument(format!("cube diagonal must be positive, got {diagonal}")));
    }
    let half = diagonal / 3f64.sqrt() / 2.0;
    let mut atoms = vec![(Element::CA, Vec3::zeros())];
    for sx in [1.0, -1.0] {
        for sy in [1.0, -1.0] {
            for sz in [1.0, -1.0] {
                atoms.push((Element::CA, Vec3::new(sx, sy, sz) * half));
            }
        }
    }
    let offsets = template.offsets();
    for axis in 0..3 {
        for sign in [1.0, -1.0] {
            let mut p = Vec3::zeros();
            p[axis] = sign * half;
            push_phosphate(&mut atoms, p, &offsets);
        }
    }
    Ok(Structure::from_atoms(atoms)?.with_label(format!("cube seed diagonal {diagonal}")))
}

/// Each P with its four nearest O. Fails if an O would belong to two groups
/// or there are too few O.
pub fn phosphate_groups(s: &Structure) -> Result<Vec<PhosphateGroup>> {
    let oxygens: Vec<usize> = (0..s.len()).filter(|&i| s.elements()[i] == Element::O).collect();
    let mut owner = vec![None; s.len()];
    let mut groups = Vec::new();
    for p in (0..s.len()).filter(|&i| s.elements()[i] == Element::P) {
        if oxygens.len() < 4 {
            return Err(Error::MalformedSeed(format!("P {p} has fewer than four O atoms available")));
        }
        let mut near = oxygens.clone();
        let pp = s.positions()[p];
        near.sort_by(|&a, &b| {
            (s.positions()[a] - pp).norm().total_cmp(&(s.positions()[b] - pp).norm()).then(a.cmp(&b))
        });
        let o = [near[0], near[1], near[2], near[3]];
        for &i in &o {
            if let Some(other) = owner[i].replace(p) {
                return Err(Error::MalformedSeed(format!("O {i} is among the nearest to both P {other} and P {p}")));
            }
        }
        groups.push(PhosphateGroup { p, o });
    }
    if groups.is_empty() {
        return Err(Error::MalformedSeed("no P atoms".into()));
    }
    Ok(groups)
}

/// Each structure at each scale factor about atom `center`: non-phosphate
/// atoms and P move radially, O follow their P rigidly. Output is
/// structure-major.
pub fn scale_set(structures: &[Structure], factors: &[f64], center: usize) -> Result<Vec<Structure>> {
    if let Some(f) = factors.iter().find(|f| !(**f > 0.0)) {
        return Err(Error::InvalidArgument(format!("scale factor must be positive, got {f}")));
    }
    let mut out = Vec::with_capacity(structures.len() * factors.len());
    for s in structures {
        if center >= s.len() {
            return Err(Error::InvalidArgument(format!("center index {center} out of range")));
        }
        let groups = phosphate_groups(s)?;
        let mut parent: Vec<Option<usize>> = vec![None; s.len()];
        for g in &groups {
            for &o in &g.o {
                parent[o] = Some(g.p);
            }
        }
        let c = s.positions()[center];
        for &f in factors {
            let pos = s.positions();
            let scaled: Vec<Vec3> = (0..s.len())
                .map(|i| match parent[i] {
                    Some(p) => c + (pos[p] - c) * f + (pos[i] - pos[p]),
                    None => c + (pos[i] - c) * f,
                })
                .collect();
            let mut t = s.with_positions(scaled)?;
            t.energy = None;
            t.label = Some(match &s.label {
                Some(l) => format!("{l} scale {f}"),
                None => format!("scale {f}"),
            });
            out.push(t);
        }
    }
    Ok(out)
}

/// Every coordinate displaced by uniform noise in `[-magnitude, magnitude]`.
pub fn perturb(s: &Structure, magnitude: f64, seed: u64) -> Result<Structure> {
    if !(magnitude >= 0.0) {
        return Err(Error::InvalidArgument(format!("perturbation magnitude must be >= 0, got {magnitude}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    s.map_positions(|p| {
        p + Vec3::new(
            rng.random_range(-magnitude..=magnitude),
            rng.random_range(-magnitude..=magnitude),
            rng.random_range(-magnitude..=magnitude),
        )
    })
}

/// True when the structure is Ca₉P₆O₂₄.
pub fn is_posner(s: &Structure) -> bool {
    s.len() == 39 && s.count(Element::CA) == 9 && s.count(Element::P) == 6 && s.count(Element::O) == 24
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symdetect::{score_operation, SymmetryElement, ElementKind, molecular_radius};

    #[test]
    fn template_is_regular() {
        let t = PhosphateTemplate::default();
        let o = t.offsets();
        for a in &o {
            assert!((a.norm() - 1.55).abs() < 1e-12);
        }
        for i in 0..4 {
            for j in i + 1..4 {
                let cos = o[i].dot(&o[j]) / (o[i].norm() * o[j].norm());
                assert!((cos.acos() - (-1.0f64 / 3.0).acos()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn cube_seed_geometry() {
        let s = build_cube_seed(9.0, &PhosphateTemplate::default()).unwrap();
        assert!(is_posner(&s));
        let edge = 9.0 / 3f64.sqrt();
        assert!((edge - 5.19615).abs() < 1e-5);
        assert_eq!(s.positions()[0], Vec3::zeros());
        for k in 1..9 {
            assert!((s.positions()[k].norm() - 3f64.sqrt() / 2.0 * edge).abs() < 1e-12);
        }
        let groups = phosphate_groups(&s).unwrap();
        assert_eq!(groups.len(), 6);
        for g in groups {
            assert!((s.positions()[g.p].norm() - edge / 2.0).abs() < 1e-12);
            for o in g.o {
                assert!(((s.positions()[o] - s.positions()[g.p]).norm() - 1.55).abs() < 1e-12);
            }
        }
        assert!(build_cube_seed(0.0, &PhosphateTemplate::default()).is_err());
    }

    #[test]
    fn ambiguous_groups_rejected() {
        let s = Structure::from_atoms([
            (Element::P, Vec3::new(0.0, 0.0, 0.0)),
            (Element::P, Vec3::new(0.5, 0.0, 0.0)),
            (Element::O, Vec3::new(1.0, 0.0, 0.0)),
            (Element::O, Vec3::new(-1.0, 0.0, 0.0)),
            (Element::O, Vec3::new(0.0, 1.0, 0.0)),
            (Element::O, Vec3::new(0.0, -1.0, 0.0)),
            (Element::O, Vec3::new(5.0, 0.0, 0.0)),
            (Element::O, Vec3::new(5.0, 1.0, 0.0)),
            (Element::O, Vec3::new(5.0, 0.0, 1.0)),
            (Element::O, Vec3::new(5.0, 1.0, 1.0)),
        ])
        .unwrap();
        assert!(matches!(phosphate_groups(&s), Err(Error::MalformedSeed(_))));
        assert!(phosphate_groups(&crate::fixture::ring(4, 1.0)).is_err());
    }

    #[test]
    fn scaling() {
        let pair = Structure::from_atoms([
            (Element::CA, Vec3::new(0.0, 0.0, 0.0)),
            (Element::CA, Vec3::new(0.0, 3.0, 0.0)),
            (Element::P, Vec3::new(2.0, 0.0, 0.0)),
            (Element::O, Vec3::new(3.0, 0.0, 0.0)),
            (Element::O, Vec3::new(2.0, 1.0, 0.0)),
            (Element::O, Vec3::new(1.0, 0.0, 0.0)),
            (Element::O, Vec3::new(2.0, -1.0, 0.0)),
        ])
        .unwrap();
        let out = scale_set(&[pair.clone()], &[1.0, 2.0], 0).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].positions(), pair.positions());
        let doubled = &out[1];
        assert!(((doubled.positions()[1] - doubled.positions()[0]).norm() - 6.0).abs() < 1e-12);
        for o in 3..7 {
            assert!(((doubled.positions()[o] - doubled.positions()[2]).norm() - 1.0).abs() < 1e-12);
        }

        let seed = build_cube_seed(9.0, &PhosphateTemplate::default()).unwrap();
        let scaled = scale_set(&[seed.clone()], &DEFAULT_SCALE_FACTORS, 0).unwrap();
        for (t, f) in scaled.iter().zip(DEFAULT_SCALE_FACTORS) {
            assert!(is_posner(t));
            let d0 = (seed.positions()[1] - seed.positions()[9]).norm();
            let d1 = (t.positions()[1] - t.positions()[9]).norm();
            assert!((d1 - f * d0).abs() < 1e-10);
            for g in phosphate_groups(t).unwrap() {
                for o in g.o {
                    assert!(((t.positions()[o] - t.positions()[g.p]).norm() - 1.55).abs() < 1e-10);
                }
            }
        }
        assert!(scale_set(&[seed.clone()], &[0.0], 0).is_err());
        assert!(scale_set(&[seed], &[1.0], 99).is_err());
    }

    #[test]
    fn perturbation() {
        let s = build_template(TemplateGroup::S6).unwrap();
        assert_eq!(perturb(&s, 0.0, 1).unwrap().positions(), s.positions());
        assert_eq!(perturb(&s, 0.01, 5).unwrap(), perturb(&s, 0.01, 5).unwrap());
        assert_ne!(perturb(&s, 0.01, 5).unwrap(), perturb(&s, 0.01, 6).unwrap());

        let m = 0.01;
        let noisy = perturb(&s, m, 5).unwrap();
        for (p, q) in s.positions().iter().zip(noisy.positions()) {
            assert!((p - q).amax() <= m);
        }
        // Each centred atom moves by at most 2√3·m, so a generator that maps
        // the exact structure onto itself displaces the noisy one by at most
        // twice that.
        let bound_abs = 4.0 * 3f64.sqrt() * m;
        let radius = molecular_radius(&noisy);
        for kind in [ElementKind::improper(Vec3::z(), 6), ElementKind::rotation(Vec3::z(), 3), ElementKind::Inversion] {
            let score = score_operation(&noisy, &kind.matrix()).unwrap();
            assert!(score <= bound_abs / radius, "{kind}: {score}");
            let e = SymmetryElement { kind, score: 0.0 };
            assert!(crate::symdetect::score_element(&s, &e).unwrap() < 1e-12);
        }
        assert!(perturb(&s, -1.0, 0).is_err());
    }
}
