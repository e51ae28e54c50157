use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// A chemical element, identified by atomic number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Element(u8);

// (symbol, standard atomic weight in amu), indexed by Z - 1.
const TABLE: [(&str, f64); 56] = [
    ("H", 1.008),
    ("He", 4.0026),
    ("Li", 6.94),
    ("Be", 9.0122),
    ("B", 10.81),
    ("C", 12.011),
    ("N", 14.007),
    ("O", 15.999),
    ("F", 18.998),
    ("Ne", 20.180),
    ("Na", 22.990),
    ("Mg", 24.305),
    ("Al", 26.982),
    ("Si", 28.085),
    ("P", 30.974),
    ("S", 32.06),
    ("Cl", 35.45),
    ("Ar", 39.948),
    ("K", 39.098),
    ("Ca", 40.078),
    ("Sc", 44.956),
    ("Ti", 47.867),
    ("V", 50.942),
    ("Cr", 51.996),
    ("Mn", 54.938),
    ("Fe", 55.845),
    ("Co", 58.933),
    ("Ni", 58.693),
    ("Cu", 63.546),
    ("Zn", 65.38),
    ("Ga", 69.723),
    ("Ge", 72.630),
    ("As", 74.922),
    ("Se", 78.971),
    ("Br", 79.904),
    ("Kr", 83.798),
    ("Rb", 85.468),
    ("Sr", 87.62),
    ("Y", 88.906),
    ("Zr", 91.224),
    ("Nb", 92.906),
    ("Mo", 95.95),
    ("Tc", 97.0),
    ("Ru", 101.07),
    ("Rh", 102.91),
    ("Pd", 106.42),
    ("Ag", 107.87),
    ("Cd", 112.41),
    ("In", 114.82),
    ("Sn", 118.71),
    ("Sb", 121.76),
    ("Te", 127.60),
    ("I", 126.90),
    ("Xe", 131.29),
    ("Cs", 132.91),
    ("Ba", 137.33),
];

impl Element {
    pub const O: Element = Element(8);
    pub const P: Element = Element(15);
    pub const CA: Element = Element(20);

    pub fn from_atomic_number(z: u8) -> Option<Element> {
        (1..=TABLE.len() as u8).contains(&z).then_some(Element(z))
    }

    /// Case-insensitive symbol lookup (`CA`, `ca` and `Ca` all resolve to calcium).
    pub fn from_symbol(symbol: &str) -> Option<Element> {
        TABLE
            .iter()
            .position(|(s, _)| s.eq_ignore_ascii_case(symbol))
            .map(|i| Element(i as u8 + 1))
    }

    pub fn atomic_number(self) -> u8 {
        self.0
    }

    pub fn symbol(self) -> &'static str {
        TABLE[self.0 as usize - 1].0
    }

    /// Standard atomic weight (amu).
    pub fn mass(self) -> f64 {
        TABLE[self.0 as usize - 1].1
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Element {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Element::from_symbol(s).ok_or_else(|| Error::UnknownElement(s.to_string()))
    }
}

impl TryFrom<String> for Element {
    type Error = Error;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Element> for String {
    fn from(e: Element) -> String {
        e.symbol().to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn posner_species() {
        assert_eq!(Element::CA.symbol(), "Ca");
        assert_eq!(Element::P.symbol(), "P");
        assert_eq!(Element::O.symbol(), "O");
        assert_eq!("ca".parse::<Element>().unwrap(), Element::CA);
        assert!(Element::CA.mass() > Element::P.mass());
    }

    #[test]
    fn masses_positive() {
        for z in 1..=56 {
            let e = Element::from_atomic_number(z).unwrap();
            assert!(e.mass() > 0.0, "{e}");
            assert_eq!(Element::from_symbol(e.symbol()), Some(e));
        }
        assert!(Element::from_atomic_number(0).is_none());
        assert!("Xx".parse::<Element>().is_err());
    }
}
