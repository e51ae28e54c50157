//! Tolerance-based point-group detection.
//!
//! An operation is scored by applying it about the centroid, pairing every
//! transformed atom with an original atom of the same element so that the
//! largest displacement is as small as possible (a bottleneck assignment),
//! and dividing that displacement by the molecular radius. An operation is
//! accepted when its score does not exceed the tolerance.
//!
//! Accepted operations are then assembled into a group in order of increasing
//! score: each one is adopted only if the group it generates together with
//! the operations adopted so far is finite and every member of that group
//! scores no worse than the level being processed. When two near-symmetries
//! are mutually incompatible (a pseudo-C3 axis and a pseudo-mirror at an
//! oblique angle, say), the better-scoring one wins. Because the order of
//! processing depends only on scores, the group found at a larger tolerance
//! always contains the group found at a smaller one.

mod element;
mod group;
mod matching;

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, HashSet};

use rayon::prelude::*;

pub use element::{canonical_axis, ElementKind, SymmetryElement};
pub use group::{PointGroup, Schoenflies};

use crate::error::{Error, Result};
use crate::geom::{centroid, inertia_tensor, Mat3, Structure, Vec3};
use group::classify;
pub(crate) use group::{closure, same_op};
use matching::{bottleneck, CostMatrix};

/// Default tolerance for point-group labels.
pub const DEFAULT_TOLERANCE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectOptions {
    /// Highest proper rotation order tested on each candidate axis; improper
    /// rotations are tested up to twice this.
    pub max_rotation_order: u32,
    /// Accepted elements of one kind and order whose axes are closer than
    /// this are merged, keeping the better score.
    pub merge_angle_deg: f64,
    /// A structure whose smallest principal moment is below this fraction of
    /// the largest is treated as linear.
    pub linear_threshold: f64,
}

impl Default for DetectOptions {
    fn default() -> Self {
        DetectOptions { max_rotation_order: 8, merge_angle_deg: 1.0, linear_threshold: 1e-4 }
    }
}

/// Largest distance of any atom from the centroid (Å).
pub fn molecular_radius(s: &Structure) -> f64 {
    let c = centroid(s);
    s.positions().iter().map(|p| (p - c).norm()).fold(0.0, f64::max)
}

/// Normalized score of an operation (see the module docs). `f64::INFINITY`
/// if no element-preserving pairing exists.
pub fn score_element(s: &Structure, element: &SymmetryElement) -> Result<f64> {
    score_operation(s, &element.kind.matrix())
}

/// Score of an arbitrary orthogonal matrix applied about the centroid.
pub fn score_operation(s: &Structure, op: &Mat3) -> Result<f64> {
    let prepared = Prepared::new(s);
    if prepared.radius == 0.0 {
        return Err(Error::Degenerate("molecular radius is zero".into()));
    }
    Ok(prepared.score(op, f64::INFINITY).unwrap_or(f64::INFINITY))
}

/// Every candidate element scoring at most `tol`, identity included, sorted
/// by score.
pub fn find_elements(s: &Structure, tol: f64) -> Vec<SymmetryElement> {
    find_elements_with(s, tol, &DetectOptions::default())
}

pub fn find_elements_with(s: &Structure, tol: f64, opts: &DetectOptions) -> Vec<SymmetryElement> {
    let prepared = Prepared::new(s);
    let identity = SymmetryElement { kind: ElementKind::Identity, score: 0.0 };
    if prepared.radius == 0.0 {
        return vec![identity];
    }
    let axes = candidate_axes(s, &prepared);
    let per_axis: Vec<Vec<SymmetryElement>> = axes
        .par_iter()
        .map(|axis| {
            let mut found = Vec::new();
            let mut try_kind = |kind: ElementKind| {
                if let Some(score) = prepared.score(&kind.matrix(), tol) {
                    found.push(SymmetryElement { kind, score });
                }
            };
            for n in 2..=opts.max_rotation_order {
                try_kind(ElementKind::rotation(*axis, n));
            }
            for n in 3..=2 * opts.max_rotation_order {
                try_kind(ElementKind::improper(*axis, n));
            }
            try_kind(ElementKind::mirror(*axis));
            found
        })
        .collect();

    let mut out = vec![identity];
    if let Some(score) = prepared.score(&-Mat3::identity(), tol) {
        out.push(SymmetryElement { kind: ElementKind::Inversion, score });
    }
    let cos_merge = opts.merge_angle_deg.to_radians().cos();
    for e in per_axis.into_iter().flatten() {
        let axis = e.kind.axis().expect("axis-bearing element");
        let dup = out.iter_mut().find(|o| {
            o.kind.rank() == e.kind.rank()
                && o.kind.axis().is_some_and(|a| a.dot(&axis).abs() >= cos_merge)
        });
        match dup {
            Some(o) if e.score < o.score => *o = e,
            Some(_) => {}
            None => out.push(e),
        }
    }
    sort_elements(&mut out);
    out
}

pub fn detect_point_group(s: &Structure, tol: f64) -> PointGroup {
    detect_point_group_with(s, tol, &DetectOptions::default())
}

pub fn detect_point_group_with(s: &Structure, tol: f64, opts: &DetectOptions) -> PointGroup {
    let prepared = Prepared::new(s);
    let identity = SymmetryElement { kind: ElementKind::Identity, score: 0.0 };
    if prepared.radius == 0.0 {
        return PointGroup {
            label: Schoenflies::Kh,
            order: None,
            tolerance: tol,
            elements: vec![identity],
        };
    }
    if let Some(group) = detect_linear(s, &prepared, tol, opts) {
        return group;
    }

    let candidates = find_elements_with(s, tol, opts);
    let ops = assemble(&prepared, &candidates, tol);
    let max_order = 4 * opts.max_rotation_order.max(5);
    let mut elements: Vec<SymmetryElement> = ops
        .iter()
        .filter_map(|(m, score)| {
            ElementKind::from_matrix(m, max_order).map(|kind| SymmetryElement { kind, score: *score })
        })
        .collect();
    sort_elements(&mut elements);
    let kinds: Vec<ElementKind> = elements.iter().map(|e| e.kind).collect();
    let label = classify(&kinds);
    PointGroup { label, order: label.order(), tolerance: tol, elements }
}

fn detect_linear(
    s: &Structure,
    prepared: &Prepared,
    tol: f64,
    opts: &DetectOptions,
) -> Option<PointGroup> {
    let inertia = inertia_tensor(s).ok()?;
    if inertia.moments[2] >= opts.linear_threshold * inertia.moments[0] {
        return None;
    }
    let mut elements = vec![SymmetryElement { kind: ElementKind::Identity, score: 0.0 }];
    let label = match prepared.score(&-Mat3::identity(), tol) {
        Some(score) => {
            elements.push(SymmetryElement { kind: ElementKind::Inversion, score });
            Schoenflies::DInfH
        }
        None => Schoenflies::CInfV,
    };
    Some(PointGroup { label, order: None, tolerance: tol, elements })
}

// Absolute slack when comparing a group member's score with the level being
// processed, so exactly symmetric structures (scores at round-off) close.
const LEVEL_SLACK: f64 = 1e-9;

#[derive(PartialEq)]
struct Event {
    level: f64,
    seq: usize,
    index: usize,
}

impl Eq for Event {}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.level.total_cmp(&other.level).then(self.seq.cmp(&other.seq))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Grows a group from `candidates` (sorted by score) in order of score.
fn assemble(prepared: &Prepared, candidates: &[SymmetryElement], tol: f64) -> Vec<(Mat3, f64)> {
    let mut group: Vec<(Mat3, f64)> = vec![(Mat3::identity(), 0.0)];
    let mut queue: BinaryHeap<Reverse<Event>> = candidates
        .iter()
        .enumerate()
        .filter(|(_, e)| e.kind != ElementKind::Identity)
        .map(|(index, e)| Reverse(Event { level: e.score, seq: index, index }))
        .collect();
    let mut seq = candidates.len();

    while let Some(Reverse(event)) = queue.pop() {
        let op = candidates[event.index].kind.matrix();
        if group.iter().any(|(m, _)| same_op(m, &op)) {
            continue;
        }
        let current: Vec<Mat3> = group.iter().map(|(m, _)| *m).collect();
        let Some(closed) = closure(&current, &op) else {
            continue;
        };
        let mut scored = Vec::with_capacity(closed.len());
        let mut worst = 0.0_f64;
        let mut feasible = true;
        for m in closed {
            if let Some(&known) = group.iter().find(|(g, _)| same_op(g, &m)) {
                scored.push(known);
                continue;
            }
            match prepared.score(&m, tol) {
                Some(score) => {
                    worst = worst.max(score);
                    scored.push((m, score));
                }
                None => {
                    feasible = false;
                    break;
                }
            }
        }
        if !feasible {
            continue;
        }
        if worst <= event.level + LEVEL_SLACK {
            group = scored;
        } else {
            queue.push(Reverse(Event { level: worst, seq, index: event.index }));
            seq += 1;
        }
    }
    group
}

fn sort_elements(elements: &mut [SymmetryElement]) {
    elements.sort_by(|a, b| {
        a.score
            .total_cmp(&b.score)
            .then(a.kind.rank().cmp(&b.kind.rank()))
            .then_with(|| lexicographic(a.kind.axis(), b.kind.axis()))
    });
}

fn lexicographic(a: Option<Vec3>, b: Option<Vec3>) -> Ordering {
    match (a, b) {
        (Some(a), Some(b)) => a
            .iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal),
        _ => Ordering::Equal,
    }
}

/// Centroid-centred coordinates grouped by element.
struct Prepared {
    positions: Vec<Vec3>,
    species: Vec<Vec<usize>>,
    radius: f64,
}

impl Prepared {
    fn new(s: &Structure) -> Prepared {
        let c = centroid(s);
        let positions: Vec<Vec3> = s.positions().iter().map(|p| p - c).collect();
        let radius = positions.iter().map(|p| p.norm()).fold(0.0, f64::max);
        let mut kinds: Vec<_> = s.elements().to_vec();
        kinds.sort();
        kinds.dedup();
        let species = kinds
            .iter()
            .map(|k| (0..s.len()).filter(|&i| s.elements()[i] == *k).collect())
            .collect();
        Prepared { positions, species, radius }
    }

    /// Normalized score of `op`, or `None` if it exceeds `cap`.
    fn score(&self, op: &Mat3, cap: f64) -> Option<f64> {
        let cap_abs = cap * self.radius;
        let mut worst = 0.0_f64;
        for idx in &self.species {
            let n = idx.len();
            let mut data = Vec::with_capacity(n * n);
            for &i in idx {
                let image = op * self.positions[i];
                let mut row_min = f64::INFINITY;
                for &j in idx {
                    let d = (image - self.positions[j]).norm();
                    row_min = row_min.min(d);
                    data.push(d);
                }
                if row_min > cap_abs {
                    return None;
                }
            }
            let cost = CostMatrix { n, data };
            worst = worst.max(bottleneck(&cost, cap_abs)?);
        }
        Some(worst / self.radius)
    }
}

/// Unit directions through the centroid that may carry symmetry elements:
/// principal inertia axes, atom directions, same-element pair sums and
/// differences, and same-element triple normals.
fn candidate_axes(s: &Structure, prepared: &Prepared) -> Vec<Vec3> {
    let r = prepared.radius;
    let p = &prepared.positions;
    let mut raw: Vec<Vec3> = Vec::new();
    let mut push = |v: Vec3, scale: f64| {
        if v.norm() > 1e-6 * scale {
            raw.push(canonical_axis(&v));
        }
    };
    if let Ok(inertia) = inertia_tensor(s) {
        for k in 0..3 {
            push(inertia.axis(k), 1.0);
        }
    }
    for x in p {
        push(*x, r);
    }
    for idx in &prepared.species {
        for (a, &i) in idx.iter().enumerate() {
            for &j in &idx[a + 1..] {
                push(p[i] + p[j], r);
                push(p[i] - p[j], r);
            }
        }
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate().skip(a + 1) {
                for &k in &idx[b + 1..] {
                    push((p[j] - p[i]).cross(&(p[k] - p[i])), r * r);
                }
            }
        }
    }
    let mut seen = HashSet::new();
    raw.into_iter()
        .filter(|v| seen.insert(v.iter().map(|c| (c * 1e6).round() as i64).collect::<Vec<_>>()))
        .collect()
}

#[cfg(test)]
mod tests;
