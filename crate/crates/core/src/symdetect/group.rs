use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use super::element::{canonical_axis, ElementKind, SymmetryElement};
use crate::error::Error;
use crate::geom::{Mat3, Vec3};

/// Schoenflies symbol. `Sn(m)` stores the full improper order (S4, S6, ...).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Schoenflies {
    C1,
    Cs,
    Ci,
    Cn(u32),
    Cnv(u32),
    Cnh(u32),
    Sn(u32),
    Dn(u32),
    Dnd(u32),
    Dnh(u32),
    T,
    Th,
    Td,
    O,
    Oh,
    I,
    Ih,
    CInfV,
    DInfH,
    Kh,
}

impl Schoenflies {
    /// Group order; `None` for the continuous groups.
    pub fn order(self) -> Option<u32> {
        use Schoenflies::*;
        Some(match self {
            C1 => 1,
            Cs | Ci => 2,
            Cn(n) => n,
            Cnv(n) | Cnh(n) | Dn(n) => 2 * n,
            Sn(m) => m,
            Dnd(n) | Dnh(n) => 4 * n,
            T => 12,
            Th | Td | O => 24,
            Oh => 48,
            I => 60,
            Ih => 120,
            CInfV | DInfH | Kh => return None,
        })
    }

    pub fn has_inversion(self) -> bool {
        use Schoenflies::*;
        match self {
            Ci | Th | Oh | Ih | DInfH | Kh => true,
            Cnh(n) | Dnh(n) => n % 2 == 0,
            Dnd(n) => n % 2 == 1,
            Sn(m) => (m / 2) % 2 == 1,
            _ => false,
        }
    }

    /// The low-symmetry classes that dominate relaxed Posner structures.
    pub fn is_low_symmetry(self) -> bool {
        matches!(self, Schoenflies::C1 | Schoenflies::Cs | Schoenflies::Ci)
    }
}

impl fmt::Display for Schoenflies {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Schoenflies::*;
        match *self {
            C1 => f.write_str("C1"),
            Cs => f.write_str("Cs"),
            Ci => f.write_str("Ci"),
            Cn(n) => write!(f, "C{n}"),
            Cnv(n) => write!(f, "C{n}v"),
            Cnh(n) => write!(f, "C{n}h"),
            Sn(m) => write!(f, "S{m}"),
            Dn(n) => write!(f, "D{n}"),
            Dnd(n) => write!(f, "D{n}d"),
            Dnh(n) => write!(f, "D{n}h"),
            T => f.write_str("T"),
            Th => f.write_str("Th"),
            Td => f.write_str("Td"),
            O => f.write_str("O"),
            Oh => f.write_str("Oh"),
            I => f.write_str("I"),
            Ih => f.write_str("Ih"),
            CInfV => f.write_str("C∞v"),
            DInfH => f.write_str("D∞h"),
            Kh => f.write_str("Kh"),
        }
    }
}

impl FromStr for Schoenflies {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        use Schoenflies::*;
        let fixed = match s {
            "C1" => Some(C1),
            "Cs" => Some(Cs),
            "Ci" => Some(Ci),
            "T" => Some(T),
            "Th" => Some(Th),
            "Td" => Some(Td),
            "O" => Some(O),
            "Oh" => Some(Oh),
            "I" => Some(I),
            "Ih" => Some(Ih),
            "C∞v" | "Cinfv" => Some(CInfV),
            "D∞h" | "Dinfh" => Some(DInfH),
            "Kh" => Some(Kh),
            _ => None,
        };
        if let Some(g) = fixed {
            return Ok(g);
        }
        let bad = || Error::InvalidArgument(format!("not a Schoenflies symbol: {s}"));
        let (head, rest) = s.split_at(1.min(s.len()));
        let digits: String = rest.chars().take_while(|c| c.is_ascii_digit()).collect();
        let n: u32 = digits.parse().map_err(|_| bad())?;
        let suffix = &rest[digits.len()..];
        match (head, suffix) {
            ("C", "") if n >= 2 => Ok(Cn(n)),
            ("C", "v") if n >= 2 => Ok(Cnv(n)),
            ("C", "h") if n >= 2 => Ok(Cnh(n)),
            ("S", "") if n >= 4 && n % 2 == 0 => Ok(Sn(n)),
            ("D", "") if n >= 2 => Ok(Dn(n)),
            ("D", "d") if n >= 2 => Ok(Dnd(n)),
            ("D", "h") if n >= 2 => Ok(Dnh(n)),
            _ => Err(bad()),
        }
    }
}

impl Serialize for Schoenflies {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// A detected point group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointGroup {
    #[serde(rename = "schoenflies")]
    pub label: Schoenflies,
    /// Group order; `None` when infinite.
    pub order: Option<u32>,
    pub tolerance: f64,
    /// Every operation of the group (identity included) with its score.
    pub elements: Vec<SymmetryElement>,
}

impl PointGroup {
    pub fn has_inversion(&self) -> bool {
        self.elements.iter().any(|e| e.kind == ElementKind::Inversion)
    }

    pub fn count(&self, name: &str) -> usize {
        self.elements.iter().filter(|e| e.kind.to_string() == name).count()
    }
}

/// Matrices closer than this (Frobenius) are the same operation.
pub(crate) const SAME_OPERATION: f64 = 0.05;
/// Largest finite point group (Ih).
pub(crate) const MAX_GROUP_ORDER: usize = 120;

pub(crate) fn same_op(a: &Mat3, b: &Mat3) -> bool {
    (a - b).norm() < SAME_OPERATION
}

/// Closes `ops ∪ {extra}` under multiplication. `None` if the closure grows
/// beyond any finite point group.
pub(crate) fn closure(ops: &[Mat3], extra: &Mat3) -> Option<Vec<Mat3>> {
    let mut set: Vec<Mat3> = ops.to_vec();
    if !set.iter().any(|m| same_op(m, &Mat3::identity())) {
        set.insert(0, Mat3::identity());
    }
    if set.iter().any(|m| same_op(m, extra)) {
        return Some(set);
    }
    let mut generators: Vec<Mat3> = set.iter().skip(1).copied().collect();
    generators.push(*extra);
    set.push(*extra);
    let mut frontier = 0;
    while frontier < set.len() {
        let g = set[frontier];
        frontier += 1;
        for h in &generators {
            for prod in [g * h, h * g] {
                if !set.iter().any(|m| same_op(m, &prod)) {
                    if set.len() >= MAX_GROUP_ORDER {
                        return None;
                    }
                    set.push(prod);
                }
            }
        }
    }
    Some(set)
}

/// Assigns the Schoenflies label of a finite group of operations.
pub(crate) fn classify(ops: &[ElementKind]) -> Schoenflies {
    use Schoenflies::*;

    // Distinct proper axes with their highest order.
    let mut axes: Vec<(Vec3, u32)> = Vec::new();
    let mut proper_count = 0;
    let mut mirrors: Vec<Vec3> = Vec::new();
    let mut has_inversion = false;
    let mut impropers: Vec<(Vec3, u32)> = Vec::new();
    for op in ops {
        match *op {
            ElementKind::Identity => proper_count += 1,
            ElementKind::ProperRotation { axis, order, .. } => {
                proper_count += 1;
                let axis = canonical_axis(&axis);
                match axes.iter_mut().find(|(a, _)| parallel(a, &axis)) {
                    Some((_, n)) => *n = (*n).max(order),
                    None => axes.push((axis, order)),
                }
            }
            ElementKind::Mirror { normal } => mirrors.push(normal),
            ElementKind::Inversion => has_inversion = true,
            ElementKind::ImproperRotation { axis, order, .. } => impropers.push((axis, order)),
        }
    }

    let high_axes = axes.iter().filter(|(_, n)| *n >= 3).count();
    if high_axes >= 2 {
        let has_c5 = axes.iter().any(|(_, n)| *n == 5);
        let has_c4 = axes.iter().any(|(_, n)| *n == 4);
        return match (proper_count, has_c5, has_c4) {
            (60, _, _) | (_, true, _) => {
                if has_inversion {
                    Ih
                } else {
                    I
                }
            }
            (24, _, _) | (_, _, true) => {
                if has_inversion {
                    Oh
                } else {
                    O
                }
            }
            _ if has_inversion => Th,
            _ if !mirrors.is_empty() => Td,
            _ => T,
        };
    }

    // Principal axis: highest order, then lexicographically largest axis.
    let principal = axes.iter().copied().max_by(|(a, n), (b, m)| {
        n.cmp(m).then_with(|| {
            b.iter()
                .zip(a.iter())
                .map(|(y, x)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    let Some((axis, n)) = principal else {
        return if !mirrors.is_empty() {
            Cs
        } else if has_inversion {
            Ci
        } else {
            C1
        };
    };

    let sigma_h = mirrors.iter().any(|m| parallel(m, &axis));
    let perpendicular_c2 = axes
        .iter()
        .filter(|(a, order)| order % 2 == 0 && perpendicular(a, &axis))
        .count();
    if perpendicular_c2 >= n as usize {
        return if sigma_h {
            Dnh(n)
        } else if !mirrors.is_empty() {
            Dnd(n)
        } else {
            Dn(n)
        };
    }
    if sigma_h {
        return Cnh(n);
    }
    if mirrors.iter().any(|m| perpendicular(m, &axis)) {
        return Cnv(n);
    }
    if let Some(&(_, m)) = impropers.iter().find(|(a, m)| parallel(a, &axis) && *m == 2 * n) {
        return Sn(m);
    }
    Cn(n)
}

const AXIS_ALIGNMENT: f64 = 0.035; // ~2°

fn parallel(a: &Vec3, b: &Vec3) -> bool {
    a.dot(b).abs() > 1.0 - AXIS_ALIGNMENT * AXIS_ALIGNMENT / 2.0
}

fn perpendicular(a: &Vec3, b: &Vec3) -> bool {
    a.dot(b).abs() < AXIS_ALIGNMENT
}
