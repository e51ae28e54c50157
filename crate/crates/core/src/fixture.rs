//! Reference structures with known point groups, the most stable Posner
//! structure reported from the dynamical ensemble, and the synthetic sample
//! trajectory shipped with the crate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::element::Element;
use crate::geom::{Structure, Vec3};
use crate::io::xyz::parse_xyz;

mod sample;

pub use sample::{sample_run, sample_run_with, SampleRun, SampleRunSpec};

const MOST_STABLE_XYZ: &str = include_str!("../fixtures/most_stable.xyz");

/// The 39-atom lowest-energy time-averaged Posner structure. It is C1 at
/// tolerance 0.1 and Cs at 0.25.
pub fn most_stable() -> Structure {
    parse_xyz(MOST_STABLE_XYZ).expect("embedded fixture parses")
}

pub fn most_stable_xyz() -> &'static str {
    MOST_STABLE_XYZ
}

fn build(atoms: &[(Element, [f64; 3])]) -> Structure {
    Structure::from_atoms(atoms.iter().map(|&(e, p)| (e, Vec3::from(p)))).expect("valid fixture")
}

/// Regular tetrahedron of O around a central P (Td).
pub fn tetrahedron_with_center() -> Structure {
    let o = Element::O;
    build(&[
        (Element::P, [0.0, 0.0, 0.0]),
        (o, [1.0, 1.0, 1.0]),
        (o, [1.0, -1.0, -1.0]),
        (o, [-1.0, 1.0, -1.0]),
        (o, [-1.0, -1.0, 1.0]),
    ])
}

/// Six atoms at ±e₁, ±e₂, ±e₃ (Oh).
pub fn octahedron() -> Structure {
    let o = Element::O;
    build(&[
        (o, [1.0, 0.0, 0.0]),
        (o, [-1.0, 0.0, 0.0]),
        (o, [0.0, 1.0, 0.0]),
        (o, [0.0, -1.0, 0.0]),
        (o, [0.0, 0.0, 1.0]),
        (o, [0.0, 0.0, -1.0]),
    ])
}

/// Regular planar ring of `n` identical atoms (Dnh).
pub fn ring(n: usize, radius: f64) -> Structure {
    Structure::from_atoms((0..n).map(|k| {
        let t = std::f64::consts::TAU * k as f64 / n as f64;
        (Element::CA, Vec3::new(radius * t.cos(), radius * t.sin(), 0.0))
    }))
    .expect("valid ring")
}

/// Square of four identical atoms (D4h).
pub fn square() -> Structure {
    ring(4, 1.0)
}

/// Ethane-like staggered frame: two P on the axis, three O on each end
/// rotated 60° against each other (D3d).
pub fn staggered() -> Structure {
    let mut atoms = vec![(Element::P, Vec3::new(0.0, 0.0, 0.77)), (Element::P, Vec3::new(0.0, 0.0, -0.77))];
    for k in 0..3 {
        let t = std::f64::consts::TAU * k as f64 / 3.0;
        atoms.push((Element::O, Vec3::new(t.cos(), t.sin(), 1.16)));
        let u = t + std::f64::consts::PI / 3.0;
        atoms.push((Element::O, Vec3::new(u.cos(), u.sin(), -1.16)));
    }
    Structure::from_atoms(atoms).expect("valid fixture")
}

/// Bent A-B₂ molecule (C2v).
pub fn bent_ab2() -> Structure {
    build(&[
        (Element::P, [0.0, 0.0, 0.0]),
        (Element::O, [1.2, 0.0, 0.8]),
        (Element::O, [-1.2, 0.0, 0.8]),
    ])
}

/// Random set plus its inversion image (Ci).
pub fn inversion_pairs(seed: u64) -> Structure {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut atoms = Vec::new();
    for k in 0..4 {
        let e = [Element::CA, Element::P, Element::O, Element::O][k];
        let p = random_point(&mut rng, 2.0);
        atoms.push((e, p));
        atoms.push((e, -p));
    }
    Structure::from_atoms(atoms).expect("valid fixture")
}

/// Random set plus its mirror image through the xy-plane (Cs).
pub fn mirror_pairs(seed: u64) -> Structure {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut atoms = Vec::new();
    for k in 0..4 {
        let e = [Element::CA, Element::P, Element::O, Element::O][k];
        let p = random_point(&mut rng, 2.0);
        atoms.push((e, p));
        atoms.push((e, Vec3::new(p.x, p.y, -p.z)));
    }
    atoms.push((Element::P, Vec3::new(0.4, -0.7, 0.0)));
    Structure::from_atoms(atoms).expect("valid fixture")
}

/// Uniform random cloud of one element (C1 at any small tolerance).
pub fn random_cloud(n: usize, seed: u64) -> Structure {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Structure::from_atoms((0..n).map(|_| (Element::O, random_point(&mut rng, 3.0)))).expect("valid fixture")
}

/// Idealized Ca₃(PO₄)₂ monomer: three Ca in a plane, two PO₄ on the axis
/// pointing away from each other, eclipsed (D3h).
pub fn d3h_monomer() -> Structure {
    let po = 1.55;
    let cos_t = -1.0 / 3.0_f64;
    let sin_t = (1.0 - cos_t * cos_t).sqrt();
    let h = 2.1;
    let mut atoms = Vec::new();
    for k in 0..3 {
        let t = std::f64::consts::TAU * k as f64 / 3.0;
        atoms.push((Element::CA, Vec3::new(3.0 * t.cos(), 3.0 * t.sin(), 0.0)));
    }
    for side in [1.0, -1.0] {
        let p = Vec3::new(0.0, 0.0, side * h);
        atoms.push((Element::P, p));
        atoms.push((Element::O, p + Vec3::new(0.0, 0.0, side * po)));
        for k in 0..3 {
            let t = std::f64::consts::TAU * k as f64 / 3.0 + std::f64::consts::PI / 3.0;
            let dir = Vec3::new(sin_t * t.cos(), sin_t * t.sin(), -side * -cos_t);
            atoms.push((Element::O, p + dir * po));
        }
    }
    Structure::from_atoms(atoms).expect("valid fixture")
}

/// Chiral (C1) 4-atom set used by the superposition tests.
pub fn chiral_four() -> Structure {
    build(&[
        (Element::P, [0.0, 0.0, 0.0]),
        (Element::O, [1.5, 0.0, 0.0]),
        (Element::CA, [0.0, 2.0, 0.0]),
        (Element::O, [0.3, 0.4, 1.1]),
    ])
}

pub(crate) fn random_point(rng: &mut ChaCha8Rng, half_width: f64) -> Vec3 {
    Vec3::new(
        rng.random_range(-half_width..=half_width),
        rng.random_range(-half_width..=half_width),
        rng.random_range(-half_width..=half_width),
    )
}

pub(crate) fn random_rotation(rng: &mut ChaCha8Rng) -> crate::geom::Mat3 {
    // Uniform on SO(3) via a random unit quaternion.
    let (u1, u2, u3): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
    let q = nalgebra::UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(
        (1.0 - u1).sqrt() * (std::f64::consts::TAU * u2).sin(),
        (1.0 - u1).sqrt() * (std::f64::consts::TAU * u2).cos(),
        u1.sqrt() * (std::f64::consts::TAU * u3).sin(),
        u1.sqrt() * (std::f64::consts::TAU * u3).cos(),
    ));
    q.to_rotation_matrix().into_inner()
}
