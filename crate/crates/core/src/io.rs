//! JSON file formats for structures, force fields and compositions.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Buckingham, Composition, ForceField, Site, Species, Structure, UnitCell};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellFile {
    pub lengths: [f64; 3],
    pub angles_deg: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesFile {
    pub symbol: String,
    pub charge: i32,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteFile {
    pub species: usize,
    pub frac: [f64; 3],
}

/// On-disk structure: cell, species table and sites referencing it by index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureFile {
    pub cell: CellFile,
    pub species: Vec<SpeciesFile>,
    pub sites: Vec<SiteFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairFile {
    pub a: String,
    pub b: String,
    #[serde(rename = "A_eV")]
    pub a_ev: f64,
    pub rho_ang: f64,
    #[serde(rename = "C_eV_ang6")]
    pub c_ev_ang6: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForceFieldFile {
    pub coulomb_constant: f64,
    pub pairs: Vec<PairFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompositionEntryFile {
    pub symbol: String,
    pub charge: i32,
    pub radius: f64,
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompositionFile {
    pub formula_units: u32,
    pub species: Vec<CompositionEntryFile>,
}

fn schema(field: impl Into<String>, err: Error) -> Error {
    match err {
        Error::Schema { .. } => err,
        other => Error::Schema {
            field: field.into(),
            message: other.to_string(),
        },
    }
}

impl StructureFile {
    pub fn from_structure(s: &Structure) -> StructureFile {
        StructureFile {
            cell: CellFile {
                lengths: s.cell().lengths,
                angles_deg: s.cell().angles_deg,
            },
            species: s
                .species()
                .iter()
                .map(|sp| SpeciesFile {
                    symbol: sp.symbol.clone(),
                    charge: sp.charge,
                    radius: sp.radius,
                })
                .collect(),
            sites: s
                .sites()
                .iter()
                .map(|site| SiteFile {
                    species: site.species,
                    frac: site.frac,
                })
                .collect(),
        }
    }

    pub fn to_structure(&self) -> Result<Structure> {
        let cell = UnitCell::new(self.cell.lengths, self.cell.angles_deg)
            .map_err(|e| schema("cell", e))?;
        let species = self
            .species
            .iter()
            .enumerate()
            .map(|(i, sp)| {
                Species::new(sp.symbol.clone(), sp.charge, sp.radius)
                    .map_err(|e| schema(format!("species[{i}]"), e))
            })
            .collect::<Result<Vec<_>>>()?;
        let sites = self
            .sites
            .iter()
            .map(|s| Site {
                species: s.species,
                frac: s.frac,
            })
            .collect();
        let structure = Structure::new(cell, species, sites).map_err(|e| match e {
            Error::UnknownSpecies { site, .. } | Error::NonFiniteCoordinate { site } => {
                schema(format!("sites[{site}]"), e)
            }
            other => schema("sites", other),
        })?;
        // depth-1 feasibility checks are only complete when no contact spans a whole cell
        let contact = structure.max_contact();
        if contact >= structure.cell().min_length() {
            return Err(Error::Schema {
                field: "species".into(),
                message: format!(
                    "radius sum {contact} Å is not smaller than the shortest cell length {} Å",
                    structure.cell().min_length()
                ),
            });
        }
        Ok(structure)
    }
}

impl From<Structure> for StructureFile {
    fn from(s: Structure) -> StructureFile {
        StructureFile::from_structure(&s)
    }
}

impl TryFrom<StructureFile> for Structure {
    type Error = Error;

    fn try_from(f: StructureFile) -> Result<Structure> {
        f.to_structure()
    }
}

impl ForceFieldFile {
    pub fn from_forcefield(ff: &ForceField) -> ForceFieldFile {
        ForceFieldFile {
            coulomb_constant: ff.coulomb_constant,
            pairs: ff
                .pairs()
                .map(|(a, b, c)| PairFile {
                    a: a.into(),
                    b: b.into(),
                    a_ev: c.a,
                    rho_ang: c.rho,
                    c_ev_ang6: c.c,
                })
                .collect(),
        }
    }

    pub fn to_forcefield(&self) -> Result<ForceField> {
        if !(self.coulomb_constant > 0.0) || !self.coulomb_constant.is_finite() {
            return Err(Error::Schema {
                field: "coulomb_constant".into(),
                message: "must be a positive number".into(),
            });
        }
        let mut ff = ForceField::new(self.coulomb_constant);
        for (i, p) in self.pairs.iter().enumerate() {
            ff.insert(
                &p.a,
                &p.b,
                Buckingham {
                    a: p.a_ev,
                    rho: p.rho_ang,
                    c: p.c_ev_ang6,
                },
            )
            .map_err(|e| schema(format!("pairs[{i}]"), e))?;
        }
        Ok(ff)
    }
}

impl CompositionFile {
    pub fn from_composition(c: &Composition) -> CompositionFile {
        CompositionFile {
            formula_units: c.formula_units,
            species: c
                .entries
                .iter()
                .map(|(sp, n)| CompositionEntryFile {
                    symbol: sp.symbol.clone(),
                    charge: sp.charge,
                    radius: sp.radius,
                    count: *n,
                })
                .collect(),
        }
    }

    pub fn to_composition(&self) -> Result<Composition> {
        let entries = self
            .species
            .iter()
            .enumerate()
            .map(|(i, e)| {
                Species::new(e.symbol.clone(), e.charge, e.radius)
                    .map(|sp| (sp, e.count))
                    .map_err(|err| schema(format!("species[{i}]"), err))
            })
            .collect::<Result<Vec<_>>>()?;
        let c = Composition::new(entries, self.formula_units);
        c.validate().map_err(|v| Error::Schema {
            field: "species".into(),
            message: v.to_string(),
        })?;
        Ok(c)
    }
}

/// Syntax errors stay [`Error::Json`]; well-formed JSON of the wrong shape
/// becomes [`Error::Schema`] naming the offending field path.
pub fn decode<'de, T: Deserialize<'de>>(json: &'de str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(json);
    let value = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        match inner.classify() {
            serde_json::error::Category::Data => Error::Schema {
                field,
                message: inner.to_string(),
            },
            _ => Error::Json(inner),
        }
    })?;
    Ok(value)
}

pub fn parse_structure(json: &str) -> Result<Structure> {
    decode::<StructureFile>(json)?.to_structure()
}

pub fn parse_forcefield(json: &str) -> Result<ForceField> {
    decode::<ForceFieldFile>(json)?.to_forcefield()
}

pub fn parse_composition(json: &str) -> Result<Composition> {
    decode::<CompositionFile>(json)?.to_composition()
}

/// Pretty JSON with shortest round-trip float formatting.
pub fn structure_to_json(s: &Structure) -> String {
    serde_json::to_string_pretty(&StructureFile::from_structure(s)).expect("plain data")
}

pub fn forcefield_to_json(ff: &ForceField) -> String {
    serde_json::to_string_pretty(&ForceFieldFile::from_forcefield(ff)).expect("plain data")
}

pub fn load_structure(path: impl AsRef<Path>) -> Result<Structure> {
    parse_structure(&fs::read_to_string(path)?)
}

pub fn save_structure(path: impl AsRef<Path>, s: &Structure) -> Result<()> {
    fs::write(path, structure_to_json(s) + "\n")?;
    Ok(())
}

pub fn load_forcefield(path: impl AsRef<Path>) -> Result<ForceField> {
    parse_forcefield(&fs::read_to_string(path)?)
}

pub fn save_forcefield(path: impl AsRef<Path>, ff: &ForceField) -> Result<()> {
    fs::write(path, forcefield_to_json(ff) + "\n")?;
    Ok(())
}

pub fn load_composition(path: impl AsRef<Path>) -> Result<Composition> {
    parse_composition(&fs::read_to_string(path)?)
}

/// Byte offset of a `serde_json` error position (1-based line/column) in `text`.
pub fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line.saturating_sub(1))
        .map(str::len)
        .sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}
