//! Domain types: species, compositions, unit cells, structures and force fields.
//!
//! Positions are stored in fractional coordinates only. Cartesian positions are
//! derived on demand through the cell's [`LatticeMatrix`].

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeMatrix;

/// Coulomb constant e²/(4πε₀) in eV·Å.
pub const COULOMB_EV_ANGSTROM: f64 = 14.399645;

/// An ionic species: symbol, integer charge (units of e) and hard-sphere radius (Å).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Species {
    pub symbol: String,
    pub charge: i32,
    pub radius: f64,
}

impl Species {
    pub fn new(symbol: impl Into<String>, charge: i32, radius: f64) -> Result<Species> {
        let symbol = symbol.into();
        if symbol.is_empty() {
            return Err(Error::InvalidSpecies {
                symbol,
                reason: "empty symbol".into(),
            });
        }
        if charge == 0 {
            return Err(Error::InvalidSpecies {
                symbol,
                reason: "charge must be non-zero".into(),
            });
        }
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(Error::InvalidSpecies {
                symbol,
                reason: format!("radius {radius} must be a finite non-negative number"),
            });
        }
        Ok(Species {
            symbol,
            charge,
            radius,
        })
    }
}

/// A formula (species with multiplicities) repeated `formula_units` times per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Composition {
    pub entries: Vec<(Species, u32)>,
    pub formula_units: u32,
}

/// The first rule a composition breaks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CompositionViolation {
    Empty,
    ZeroFormulaUnits,
    ZeroMultiplicity { symbol: String },
    DuplicateSymbol { symbol: String },
    NetCharge { charge: i64 },
}

impl fmt::Display for CompositionViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompositionViolation::Empty => write!(f, "composition has no species"),
            CompositionViolation::ZeroFormulaUnits => write!(f, "formula units must be positive"),
            CompositionViolation::ZeroMultiplicity { symbol } => {
                write!(f, "species {symbol} has multiplicity zero")
            }
            CompositionViolation::DuplicateSymbol { symbol } => {
                write!(f, "species {symbol} is listed twice")
            }
            CompositionViolation::NetCharge { charge } => {
                write!(f, "unit cell carries net charge {charge:+}")
            }
        }
    }
}

impl Composition {
    pub fn new(entries: Vec<(Species, u32)>, formula_units: u32) -> Composition {
        Composition {
            entries,
            formula_units,
        }
    }

    /// Number of ions in one cell, Σ nᵢ·Z.
    pub fn site_count(&self) -> usize {
        self.entries
            .iter()
            .map(|(_, n)| *n as usize * self.formula_units as usize)
            .sum()
    }

    pub fn species(&self) -> Vec<Species> {
        self.entries.iter().map(|(s, _)| s.clone()).collect()
    }

    /// Species index of every site, in composition order.
    pub fn site_species(&self) -> Vec<usize> {
        self.entries
            .iter()
            .enumerate()
            .flat_map(|(idx, (_, n))| {
                std::iter::repeat(idx).take(*n as usize * self.formula_units as usize)
            })
            .collect()
    }

    pub fn net_charge(&self) -> i64 {
        self.entries
            .iter()
            .map(|(s, n)| s.charge as i64 * *n as i64 * self.formula_units as i64)
            .sum()
    }

    pub fn validate(&self) -> std::result::Result<(), CompositionViolation> {
        validate_composition(self)
    }
}

/// Checks charge neutrality and multiplicities, reporting the first broken rule.
pub fn validate_composition(c: &Composition) -> std::result::Result<(), CompositionViolation> {
    if c.entries.is_empty() {
        return Err(CompositionViolation::Empty);
    }
    if c.formula_units == 0 {
        return Err(CompositionViolation::ZeroFormulaUnits);
    }
    for (idx, (species, n)) in c.entries.iter().enumerate() {
        if *n == 0 {
            return Err(CompositionViolation::ZeroMultiplicity {
                symbol: species.symbol.clone(),
            });
        }
        if c.entries[..idx].iter().any(|(s, _)| s.symbol == species.symbol) {
            return Err(CompositionViolation::DuplicateSymbol {
                symbol: species.symbol.clone(),
            });
        }
    }
    match c.net_charge() {
        0 => Ok(()),
        charge => Err(CompositionViolation::NetCharge { charge }),
    }
}

/// Triclinic cell parameters. Angles follow the crystallographic convention
/// `[alpha, beta, gamma]`: alpha between a₂ and a₃, beta between a₁ and a₃,
/// gamma between a₁ and a₂.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitCell {
    pub lengths: [f64; 3],
    pub angles_deg: [f64; 3],
}

impl UnitCell {
    pub fn new(lengths: [f64; 3], angles_deg: [f64; 3]) -> Result<UnitCell> {
        for &l in &lengths {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::InvalidCell(format!("length {l} must be positive")));
            }
        }
        for &a in &angles_deg {
            if !(a > 0.0 && a < 180.0) {
                return Err(Error::InvalidCell(format!("angle {a}° outside (0°, 180°)")));
            }
        }
        let cell = UnitCell {
            lengths,
            angles_deg,
        };
        LatticeMatrix::from_cell(&cell)?;
        Ok(cell)
    }

    pub fn cubic(a: f64) -> Result<UnitCell> {
        UnitCell::new([a; 3], [90.0; 3])
    }

    pub fn orthorhombic(a: f64, b: f64, c: f64) -> Result<UnitCell> {
        UnitCell::new([a, b, c], [90.0; 3])
    }

    pub fn matrix(&self) -> LatticeMatrix {
        LatticeMatrix::from_cell(self).expect("cell validated at construction")
    }

    pub fn min_length(&self) -> f64 {
        self.lengths.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// An ion placed in the cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub species: usize,
    pub frac: [f64; 3],
}

/// Maps a coordinate into `[0, 1)`.
pub fn wrap(x: f64) -> f64 {
    let w = x - x.floor();
    // x slightly below an integer can round up to exactly 1.0
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

pub fn wrap3(p: [f64; 3]) -> [f64; 3] {
    [wrap(p[0]), wrap(p[1]), wrap(p[2])]
}

/// A unit cell populated with ions at wrapped fractional coordinates.
///
/// Serializes in the structure file format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "crate::io::StructureFile", try_from = "crate::io::StructureFile")]
pub struct Structure {
    cell: UnitCell,
    lattice: LatticeMatrix,
    species: Vec<Species>,
    sites: Vec<Site>,
}

impl Structure {
    pub fn new(cell: UnitCell, species: Vec<Species>, sites: Vec<Site>) -> Result<Structure> {
        if sites.is_empty() {
            return Err(Error::EmptyStructure);
        }
        let lattice = LatticeMatrix::from_cell(&cell)?;
        let mut wrapped = Vec::with_capacity(sites.len());
        for (idx, site) in sites.into_iter().enumerate() {
            if site.species >= species.len() {
                return Err(Error::UnknownSpecies {
                    site: idx,
                    species: site.species,
                });
            }
            if site.frac.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFiniteCoordinate { site: idx });
            }
            wrapped.push(Site {
                species: site.species,
                frac: wrap3(site.frac),
            });
        }
        Ok(Structure {
            cell,
            lattice,
            species,
            sites: wrapped,
        })
    }

    pub fn cell(&self) -> &UnitCell {
        &self.cell
    }

    pub fn lattice(&self) -> &LatticeMatrix {
        &self.lattice
    }

    pub fn species(&self) -> &[Species] {
        &self.species
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn site_species(&self, site: usize) -> &Species {
        &self.species[self.sites[site].species]
    }

    pub fn radius(&self, site: usize) -> f64 {
        self.site_species(site).radius
    }

    pub fn fractional(&self) -> Vec<[f64; 3]> {
        self.sites.iter().map(|s| s.frac).collect()
    }

    pub fn cartesian(&self) -> Vec<[f64; 3]> {
        self.sites
            .iter()
            .map(|s| self.lattice.to_cartesian(s.frac))
            .collect()
    }

    /// Same cell and species, new fractional positions (wrapped).
    pub fn with_fractional(&self, positions: &[[f64; 3]]) -> Result<Structure> {
        if positions.len() != self.sites.len() {
            return Err(Error::PositionCount {
                expected: self.sites.len(),
                found: positions.len(),
            });
        }
        let mut out = self.clone();
        for (idx, (site, p)) in out.sites.iter_mut().zip(positions).enumerate() {
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFiniteCoordinate { site: idx });
            }
            site.frac = wrap3(*p);
        }
        Ok(out)
    }

    /// Moves a single site; the coordinate is wrapped.
    pub fn set_frac(&mut self, site: usize, frac: [f64; 3]) {
        self.sites[site].frac = wrap3(frac);
    }

    /// Rigid translation of every site by `shift` (fractional), wrapped.
    pub fn translated(&self, shift: [f64; 3]) -> Structure {
        let mut out = self.clone();
        for site in &mut out.sites {
            site.frac = wrap3([
                site.frac[0] + shift[0],
                site.frac[1] + shift[1],
                site.frac[2] + shift[2],
            ]);
        }
        out
    }

    /// True when both structures hold the same species sequence in the same cell.
    pub fn same_composition(&self, other: &Structure) -> bool {
        self.cell == other.cell
            && self.species == other.species
            && self.sites.len() == other.sites.len()
            && self
                .sites
                .iter()
                .zip(&other.sites)
                .all(|(a, b)| a.species == b.species)
    }

    /// Largest radius sum over species present, compared against every cell length.
    pub fn max_contact(&self) -> f64 {
        let mut max_radius = 0.0f64;
        for site in &self.sites {
            max_radius = max_radius.max(self.species[site.species].radius);
        }
        2.0 * max_radius
    }

    /// Net charge of the ions actually present.
    pub fn net_charge(&self) -> i64 {
        self.sites
            .iter()
            .map(|s| self.species[s.species].charge as i64)
            .sum()
    }
}

/// Assigns `frac_positions` to the sites of `composition`, in composition order.
pub fn build_structure(
    cell: UnitCell,
    composition: &Composition,
    frac_positions: &[[f64; 3]],
) -> Result<Structure> {
    let species_of = composition.site_species();
    if frac_positions.len() != species_of.len() {
        return Err(Error::PositionCount {
            expected: species_of.len(),
            found: frac_positions.len(),
        });
    }
    let sites = species_of
        .into_iter()
        .zip(frac_positions)
        .map(|(species, &frac)| Site { species, frac })
        .collect();
    Structure::new(cell, composition.species(), sites)
}

/// Buckingham coefficients for one species pair: `A·exp(−d/rho) − C/d⁶`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Buckingham {
    pub a: f64,
    pub rho: f64,
    pub c: f64,
}

impl Buckingham {
    /// Coefficients of an unlisted pair: no short-range contribution.
    pub const ZERO: Buckingham = Buckingham {
        a: 0.0,
        rho: 1.0,
        c: 0.0,
    };
}

/// Symmetric table of Buckingham coefficients plus the Coulomb prefactor.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceField {
    pairs: BTreeMap<(String, String), Buckingham>,
    pub coulomb_constant: f64,
}

fn pair_key(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_owned(), b.to_owned())
    } else {
        (b.to_owned(), a.to_owned())
    }
}

impl ForceField {
    pub fn new(coulomb_constant: f64) -> ForceField {
        ForceField {
            pairs: BTreeMap::new(),
            coulomb_constant,
        }
    }

    /// Registers (or replaces) the coefficients of the `a`–`b` pair.
    pub fn insert(&mut self, a: &str, b: &str, coeffs: Buckingham) -> Result<()> {
        let reason = if !(coeffs.a >= 0.0) {
            Some("A must be non-negative")
        } else if !(coeffs.rho > 0.0) {
            Some("rho must be positive")
        } else if !(coeffs.c >= 0.0) {
            Some("C must be non-negative")
        } else {
            None
        };
        if let Some(reason) = reason {
            return Err(Error::InvalidForceField {
                a: a.into(),
                b: b.into(),
                reason: reason.into(),
            });
        }
        self.pairs.insert(pair_key(a, b), coeffs);
        Ok(())
    }

    pub fn lookup(&self, a: &str, b: &str) -> Buckingham {
        self.pairs
            .get(&pair_key(a, b))
            .copied()
            .unwrap_or(Buckingham::ZERO)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Listed pairs in canonical (sorted) order.
    pub fn pairs(&self) -> impl Iterator<Item = (&str, &str, Buckingham)> {
        self.pairs
            .iter()
            .map(|((a, b), c)| (a.as_str(), b.as_str(), *c))
    }

    /// Copy with a different Coulomb prefactor; `1.0` gives the bare q·q/d form.
    pub fn with_coulomb_constant(&self, constant: f64) -> ForceField {
        ForceField {
            pairs: self.pairs.clone(),
            coulomb_constant: constant,
        }
    }
}

/// Symmetric lookup; unlisted pairs yield `(0, 1, 0)`.
pub fn forcefield_lookup(ff: &ForceField, a: &Species, b: &Species) -> Buckingham {
    ff.lookup(&a.symbol, &b.symbol)
}
