//! Crystal structure prediction for ionic compositions.
//!
//! The crate evaluates Buckingham–Coulomb lattice energies with a depth-k
//! image sum ([`energy`]), relaxes arrangements at fixed cell ([`relax`]),
//! searches three combinatorial neighborhoods greedily ([`localsearch`]) and
//! drives basin hopping with an optional local-search stage before each
//! relaxation ([`search`]).

pub mod energy;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod lattice;
pub mod localsearch;
pub mod model;
pub mod relax;
pub mod search;

pub use energy::{
    buckingham_pair, coulomb_pair, depth_energy, depth_energy_gradient, energy_ordering,
    Convention, DepthEvaluator, EnergyOrdering, EnergyReport,
};
pub use error::{Error, Result};
pub use lattice::{distance, is_feasible, lattice_matrix, random_feasible, ImageShell, LatticeMatrix};
pub use localsearch::{
    enumerate_neighbors, greedy_step, local_search, neighbor_moves, LocalSearchResult, Move,
    MoveKind, NeighborhoodKind, NeighborhoodSpec,
};
pub use model::{
    build_structure, forcefield_lookup, validate_composition, Buckingham, Composition,
    CompositionViolation, ForceField, Site, Species, Structure, UnitCell,
};
pub use relax::{relax, RelaxResult, RelaxSettings};
pub use search::{
    axes_bh, basin_hopping, run_stats, IterationRecord, RunRecord, RunStats, SearchMode,
    SearchSettings, StopReason,
};
