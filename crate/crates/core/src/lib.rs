//! Structural analysis of calcium phosphate (Posner, Ca₉(PO₄)₆) clusters.
//!
//! The crate covers:
//!
//! * [`geom`]: structures, trajectories, rigid transforms, inertia and RMSD;
//! * [`symdetect`]: tolerance-based point-group detection with Schoenflies labels;
//! * [`align`]: Kabsch superposition and time-averaged structures;
//! * [`trajstats`]: symmetry timelines, persistence, energy spread, PCA and k-means;
//! * [`posnergen`]: candidate-structure generation (cube scheme, symmetric
//!   templates, the 10-parameter S6 builder);
//! * [`ffopt`]: a rigid-ion Coulomb + Buckingham model with local relaxation
//!   and S6-constrained minimization;
//! * [`io`]: XYZ / extended-XYZ reading and writing.
//!
//! ```
//! use posner::symdetect::detect_point_group;
//! use posner::posnergen::{build_template, TemplateGroup};
//!
//! let s6 = build_template(TemplateGroup::S6).unwrap();
//! let group = detect_point_group(&s6, 1e-6);
//! assert_eq!(group.label.to_string(), "S6");
//! ```

pub mod align;
pub mod element;
pub mod error;
pub mod ffopt;
pub mod fixture;
pub mod geom;
pub mod io;
pub mod linalg;
pub mod posnergen;
pub mod symdetect;
pub mod trajstats;

pub use element::Element;
pub use error::{Error, Result};
pub use geom::{RigidTransform, Structure, Trajectory, Vec3};

#[cfg(doctest)]
mod book {
    macro_rules! chapter {
        ($name:ident, $path:literal) => {
            #[doc = include_str!(concat!("../../../book/src/", $path))]
            mod $name {}
        };
    }
    chapter!(introduction, "introduction.md");
    chapter!(geometry, "geometry.md");
    chapter!(symmetry, "symmetry.md");
    chapter!(alignment, "alignment.md");
    chapter!(trajectories, "trajectories.md");
    chapter!(generation, "generation.md");
    chapter!(force_field, "force-field.md");
    chapter!(cli, "cli.md");
}
