//! Rigid-ion pair potential: point-charge Coulomb plus Buckingham
//! `A·exp(-r/ρ) - C/r⁶`, with local relaxation and S6-constrained
//! minimization over the 10 builder parameters.
//!
//! The default parameters are illustrative: formal Ca²⁺ and P⁵⁺ with O²⁻,
//! which makes Ca₉(PO₄)₆ neutral, and short-range terms chosen so that an
//! isolated ion pair sits near a typical bond length. They are not a
//! published force field.
//!
//! Parameters can be read from TOML:
//!
//! ```toml
//! coulomb_constant = 14.399645   # eV·Å/e², optional
//! cutoff = 12.0                  # Å, optional; no cutoff if absent
//! exclude_intra_phosphate = false
//!
//! [charges]
//! Ca = 2.0
//! P = 5.0
//! O = -2.0
//!
//! [[buckingham]]
//! pair = ["Ca", "O"]
//! A = 3340.0     # eV
//! rho = 0.3437   # Å
//! C = 0.0        # eV·Å⁶
//! ```

mod relax;
mod s6;
mod simplex;

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::element::Element;
use crate::error::{Error, Result};
use crate::geom::{Structure, Vec3};
use crate::posnergen::phosphate_groups;

pub use relax::{relax, OptimizerConfig, Relaxed};
pub use s6::{minimize_s6, minimize_s6_within, s6_generator_score, s6_objective, s6_starts, S6Minimum};
pub use simplex::{nelder_mead, SimplexResult};

/// eV·Å per e².
pub const COULOMB_CONSTANT: f64 = 14.399645;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Buckingham {
    pub pair: [Element; 2],
    #[serde(rename = "A")]
    pub a: f64,
    pub rho: f64,
    #[serde(rename = "C", default)]
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairPotentialParams {
    pub charges: BTreeMap<Element, f64>,
    #[serde(default)]
    pub buckingham: Vec<Buckingham>,
    #[serde(default)]
    pub cutoff: Option<f64>,
    #[serde(default = "default_coulomb")]
    pub coulomb_constant: f64,
    /// Skip P–O and O–O pairs inside each PO₄ (frozen rigid tetrahedra).
    #[serde(default)]
    pub exclude_intra_phosphate: bool,
}

fn default_coulomb() -> f64 {
    COULOMB_CONSTANT
}

impl Default for PairPotentialParams {
    fn default() -> Self {
        let charges = BTreeMap::from([(Element::CA, 2.0), (Element::P, 5.0), (Element::O, -2.0)]);
        PairPotentialParams {
            charges,
            buckingham: vec![
                Buckingham { pair: [Element::CA, Element::O], a: 3340.0, rho: 0.3437, c: 0.0 },
                Buckingham { pair: [Element::O, Element::O], a: 22764.0, rho: 0.149, c: 27.88 },
                Buckingham { pair: [Element::P, Element::O], a: 27800.0, rho: 0.2, c: 0.0 },
            ],
            cutoff: None,
            coulomb_constant: COULOMB_CONSTANT,
            exclude_intra_phosphate: false,
        }
    }
}

impl PairPotentialParams {
    pub fn from_toml_str(text: &str) -> Result<PairPotentialParams> {
        let p: PairPotentialParams = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("parameters serialize")
    }

    pub fn validate(&self) -> Result<()> {
        if let Some((e, q)) = self.charges.iter().find(|(_, q)| !q.is_finite()) {
            return Err(Error::Config(format!("charge of {e} is {q}")));
        }
        let mut seen = HashSet::new();
        for b in &self.buckingham {
            if !(b.a.is_finite() && b.c.is_finite() && b.rho.is_finite()) {
                return Err(Error::Config(format!("non-finite Buckingham term for {}-{}", b.pair[0], b.pair[1])));
            }
            if b.a != 0.0 && !(b.rho > 0.0) {
                return Err(Error::Config(format!("rho must be positive for {}-{}", b.pair[0], b.pair[1])));
            }
            if !seen.insert(ordered(b.pair[0], b.pair[1])) {
                return Err(Error::Config(format!("duplicate Buckingham pair {}-{}", b.pair[0], b.pair[1])));
            }
        }
        if self.cutoff.is_some_and(|c| !(c > 0.0)) {
            return Err(Error::Config("cutoff must be positive".into()));
        }
        if !(self.coulomb_constant.is_finite()) {
            return Err(Error::Config("coulomb_constant must be finite".into()));
        }
        Ok(())
    }

    pub fn rigid(&self) -> PairPotentialParams {
        PairPotentialParams { exclude_intra_phosphate: true, ..self.clone() }
    }

    /// Net charge of a structure under these charges.
    pub fn total_charge(&self, s: &Structure) -> Result<f64> {
        s.elements().iter().map(|e| self.charge(*e)).sum()
    }

    fn charge(&self, e: Element) -> Result<f64> {
        self.charges.get(&e).copied().ok_or_else(|| Error::Config(format!("no charge defined for {e}")))
    }

    fn buckingham_for(&self, a: Element, b: Element) -> Option<&Buckingham> {
        let key = ordered(a, b);
        self.buckingham.iter().find(|t| ordered(t.pair[0], t.pair[1]) == key)
    }
}

fn ordered(a: Element, b: Element) -> (Element, Element) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Per-structure lookup tables.
struct Model {
    charges: Vec<f64>,
    species: Vec<usize>,
    // Flattened n_species² table.
    short: Vec<Option<(f64, f64, f64)>>,
    n_species: usize,
    excluded: HashSet<(usize, usize)>,
    k: f64,
    cutoff: Option<f64>,
}

impl Model {
    fn new(s: &Structure, p: &PairPotentialParams) -> Result<Model> {
        let mut kinds: Vec<Element> = s.elements().to_vec();
        kinds.sort();
        kinds.dedup();
        let species = s.elements().iter().map(|e| kinds.binary_search(e).expect("present")).collect();
        let charges = s.elements().iter().map(|e| p.charge(*e)).collect::<Result<Vec<_>>>()?;
        let n = kinds.len();
        let mut short = vec![None; n * n];
        for (i, a) in kinds.iter().enumerate() {
            for (j, b) in kinds.iter().enumerate() {
                short[i * n + j] = p.buckingham_for(*a, *b).map(|t| (t.a, t.rho, t.c));
            }
        }
        let mut excluded = HashSet::new();
        if p.exclude_intra_phosphate {
            for g in phosphate_groups(s)? {
                let members = [g.p, g.o[0], g.o[1], g.o[2], g.o[3]];
                for (x, &i) in members.iter().enumerate() {
                    for &j in &members[x + 1..] {
                        excluded.insert((i.min(j), i.max(j)));
                    }
                }
            }
        }
        Ok(Model { charges, species, short, n_species: n, excluded, k: p.coulomb_constant, cutoff: p.cutoff })
    }

    /// Pair energy and dE/dr, or `None` when the pair does not interact.
    fn pair(&self, i: usize, j: usize, r: f64) -> Option<(f64, f64)> {
        if self.cutoff.is_some_and(|c| r > c) || self.excluded.contains(&(i, j)) {
            return None;
        }
        let qq = self.k * self.charges[i] * self.charges[j];
        let mut e = qq / r;
        let mut de = -qq / (r * r);
        if let Some((a, rho, c)) = self.short[self.species[i] * self.n_species + self.species[j]] {
            let rep = if a != 0.0 { a * (-r / rho).exp() } else { 0.0 };
            let r6 = r.powi(6);
            e += rep - c / r6;
            de += (if a != 0.0 { -rep / rho } else { 0.0 }) + 6.0 * c / (r6 * r);
        }
        Some((e, de))
    }
}

const SINGULAR_DISTANCE: f64 = 1e-6;

/// Total energy (eV), summing each pair once.
pub fn energy(s: &Structure, p: &PairPotentialParams) -> Result<f64> {
    let model = Model::new(s, p)?;
    let pos = s.positions();
    let mut total = 0.0;
    for i in 0..pos.len() {
        for j in i + 1..pos.len() {
            let r = (pos[i] - pos[j]).norm();
            if r < SINGULAR_DISTANCE {
                return Err(Error::Singular(i, j));
            }
            if let Some((e, _)) = model.pair(i, j, r) {
                total += e;
            }
        }
    }
    Ok(total)
}

/// Energy and its gradient with respect to every atom position (eV/Å).
pub fn energy_and_gradient(s: &Structure, p: &PairPotentialParams) -> Result<(f64, Vec<Vec3>)> {
    let model = Model::new(s, p)?;
    let pos = s.positions();
    let mut total = 0.0;
    let mut grad = vec![Vec3::zeros(); pos.len()];
    for i in 0..pos.len() {
        for j in i + 1..pos.len() {
            let d = pos[i] - pos[j];
            let r = d.norm();
            if r < SINGULAR_DISTANCE {
                return Err(Error::Singular(i, j));
            }
            if let Some((e, de)) = model.pair(i, j, r) {
                total += e;
                let g = d * (de / r);
                grad[i] += g;
                grad[j] -= g;
            }
        }
    }
    Ok((total, grad))
}

pub fn gradient(s: &Structure, p: &PairPotentialParams) -> Result<Vec<Vec3>> {
    Ok(energy_and_gradient(s, p)?.1)
}
