//! Shared inputs for the criterion benchmarks in `benches/`.

use csp_core::{fixtures, random_feasible, Structure};

/// Random 15-ion SrTiO₃ arrangement in the 3×1×1 perovskite supercell.
pub fn random_supercell(seed: u64) -> Structure {
    let cell = fixtures::perovskite_supercell([3, 1, 1]).cell().clone();
    random_feasible(cell, &fixtures::srtio3_composition(3), seed, 1_000_000).expect("packs")
}
