//! Bundled inputs: the four-row SrTiO₃/Y₂Ti₂O₇ Buckingham table, the cubic
//! perovskite SrTiO₃ cell and example compositions.
//!
//! The ionic radii in the bundled files are illustrative values chosen so that
//! the perovskite arrangement is feasible and random cells can still be packed
//! by rejection sampling. They are not reference data.

use crate::io;
use crate::model::{Composition, ForceField, Site, Structure, UnitCell};

pub const TABLE6_JSON: &str = include_str!("../data/table6.forcefield.json");
pub const PEROVSKITE_JSON: &str = include_str!("../data/srtio3_perovskite.structure.json");
pub const SRTIO3_COMPOSITION_JSON: &str = include_str!("../data/srtio3.composition.json");
pub const Y2TI2O7_COMPOSITION_JSON: &str = include_str!("../data/y2ti2o7.composition.json");

/// Experimental SrTiO₃ lattice parameter (Å).
pub const SRTIO3_LATTICE: f64 = 3.905;

pub fn table6() -> ForceField {
    io::parse_forcefield(TABLE6_JSON).expect("bundled force field is valid")
}

/// Five-atom cubic perovskite: Sr at the corner, Ti at the body center, O at the face centers.
pub fn perovskite() -> Structure {
    io::parse_structure(PEROVSKITE_JSON).expect("bundled perovskite is valid")
}

/// `reps` copies of the perovskite cell stacked along each axis.
pub fn perovskite_supercell(reps: [u32; 3]) -> Structure {
    let base = perovskite();
    let cell = UnitCell::orthorhombic(
        SRTIO3_LATTICE * reps[0] as f64,
        SRTIO3_LATTICE * reps[1] as f64,
        SRTIO3_LATTICE * reps[2] as f64,
    )
    .expect("positive lengths");
    // keep the composition order (all Sr, then Ti, then O) used by generated structures
    let mut sites = Vec::new();
    for species in 0..base.species().len() {
        for a in 0..reps[0] {
            for b in 0..reps[1] {
                for c in 0..reps[2] {
                    for site in base.sites().iter().filter(|s| s.species == species) {
                        sites.push(Site {
                            species,
                            frac: [
                                (site.frac[0] + a as f64) / reps[0] as f64,
                                (site.frac[1] + b as f64) / reps[1] as f64,
                                (site.frac[2] + c as f64) / reps[2] as f64,
                            ],
                        });
                    }
                }
            }
        }
    }
    Structure::new(cell, base.species().to_vec(), sites).expect("valid supercell")
}

/// SrTiO₃ with `formula_units` formula units per cell.
pub fn srtio3_composition(formula_units: u32) -> Composition {
    let mut c = io::parse_composition(SRTIO3_COMPOSITION_JSON).expect("bundled composition");
    c.formula_units = formula_units;
    c
}

pub fn y2ti2o7_composition(formula_units: u32) -> Composition {
    let mut c = io::parse_composition(Y2TI2O7_COMPOSITION_JSON).expect("bundled composition");
    c.formula_units = formula_units;
    c
}

/// Cubic cell holding `formula_units` SrTiO₃ units at the perovskite density.
pub fn default_cubic_cell(formula_units: u32) -> UnitCell {
    UnitCell::cubic(SRTIO3_LATTICE * (formula_units as f64).cbrt()).expect("positive length")
}
