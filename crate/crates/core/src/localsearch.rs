//! Combinatorial neighborhoods at fixed cell and the greedy descent over them.
//!
//! * `k_ion_swap`: choose `k` ions and permute their positions.
//! * `k_swap`: move `k` ions onto points of a grid of step `δ` anchored at the
//!   cell origin; an ion already sitting on a chosen point takes the mover's
//!   old position.
//! * `axes`: move one ion along one of the three axis-parallel lines through
//!   it, in steps of `δ`. Points occupied by another ion are not targets.
//!
//! Neighbors are produced lazily, in a fixed order, and only feasible ones are
//! emitted. Arrangements are compared by species, so exchanging two ions of
//! the same species is not a move.

use std::collections::HashSet;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::energy::{DepthEvaluator, TIE_TOLERANCE};
use crate::error::{Error, Result};
use crate::lattice::{site_clear, ImageShell, LatticeMatrix, Vec3};
use crate::model::{wrap, wrap3, ForceField, Structure, UnitCell};

/// Fractional distance below which a site counts as sitting on a grid point.
const SAME_POINT: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborhoodKind {
    KIonSwap,
    KSwap,
    Axes,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeighborhoodSpec {
    pub kind: NeighborhoodKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Grid step in Å.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

impl NeighborhoodSpec {
    pub fn k_ion_swap(k: usize) -> NeighborhoodSpec {
        NeighborhoodSpec {
            kind: NeighborhoodKind::KIonSwap,
            k: Some(k),
            delta: None,
        }
    }

    pub fn k_swap(k: usize, delta: f64) -> NeighborhoodSpec {
        NeighborhoodSpec {
            kind: NeighborhoodKind::KSwap,
            k: Some(k),
            delta: Some(delta),
        }
    }

    pub fn axes(delta: f64) -> NeighborhoodSpec {
        NeighborhoodSpec {
            kind: NeighborhoodKind::Axes,
            k: None,
            delta: Some(delta),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let needs_k = matches!(self.kind, NeighborhoodKind::KIonSwap | NeighborhoodKind::KSwap);
        let needs_delta = matches!(self.kind, NeighborhoodKind::KSwap | NeighborhoodKind::Axes);
        match (needs_k, self.k) {
            (true, None) | (true, Some(0)) => {
                return Err(Error::InvalidSettings("k must be a positive integer".into()))
            }
            (false, Some(_)) => return Err(Error::InvalidSettings("k is not used by axes".into())),
            _ => {}
        }
        match (needs_delta, self.delta) {
            (true, None) => return Err(Error::InvalidSettings("delta is required".into())),
            (true, Some(d)) if !(d > 0.0 && d.is_finite()) => {
                return Err(Error::InvalidSettings("delta must be positive".into()))
            }
            (false, Some(_)) => {
                return Err(Error::InvalidSettings("delta is not used by k_ion_swap".into()))
            }
            _ => {}
        }
        Ok(())
    }
}

/// Origin-anchored `δ` grid: `⌈y_d/δ⌉` points per axis at `j·δ/y_d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub counts: [usize; 3],
    /// Fractional spacing `δ/y_d`.
    pub step: [f64; 3],
}

impl Grid {
    pub fn new(cell: &UnitCell, delta: f64) -> Result<Grid> {
        let min_length = cell.min_length();
        if !(delta > 0.0) || delta > min_length {
            return Err(Error::EmptyGrid { delta, min_length });
        }
        let counts = cell.lengths.map(|y| ((y / delta) - 1e-9).ceil().max(1.0) as usize);
        let step = cell.lengths.map(|y| delta / y);
        Ok(Grid { counts, step })
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Fractional coordinates of point `idx` (last axis fastest).
    pub fn point(&self, idx: usize) -> Vec3 {
        let c = idx % self.counts[2];
        let b = (idx / self.counts[2]) % self.counts[1];
        let a = idx / (self.counts[2] * self.counts[1]);
        [
            a as f64 * self.step[0],
            b as f64 * self.step[1],
            c as f64 * self.step[2],
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveKind {
    /// `sites[m]` takes the position previously held by `sources[m]`.
    IonSwap { sites: Vec<usize>, sources: Vec<usize> },
    /// `sites[m]` moves to grid point `points[m]`.
    GridSwap { sites: Vec<usize>, points: Vec<usize> },
    /// `site` moves `steps` grid steps along lattice direction `axis`.
    Axis { site: usize, axis: usize, steps: usize },
}

/// A neighbor described by the change it makes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Move {
    pub kind: MoveKind,
    /// New fractional position of every site that moves, by ascending site.
    pub changes: Vec<(usize, Vec3)>,
}

impl Move {
    pub fn apply(&self, s: &Structure) -> Structure {
        let mut out = s.clone();
        for &(site, p) in &self.changes {
            out.set_frac(site, p);
        }
        out
    }

    pub fn moved_sites(&self) -> impl Iterator<Item = usize> + '_ {
        self.changes.iter().map(|c| c.0)
    }
}

fn frac_close(a: Vec3, b: Vec3) -> bool {
    (0..3).all(|d| {
        let x = a[d] - b[d];
        (x - x.round()).abs() < SAME_POINT
    })
}

/// Shared, read-only view of the source structure for the move generators.
struct Context<'a> {
    s: &'a Structure,
    fracs: Vec<Vec3>,
    lattice: LatticeMatrix,
    translations: Vec<Vec3>,
}

impl<'a> Context<'a> {
    fn new(s: &'a Structure) -> Context<'a> {
        Context {
            s,
            fracs: s.fractional(),
            lattice: *s.lattice(),
            translations: ImageShell::new(1).translations(s.lattice()),
        }
    }

    fn occupant(&self, p: Vec3) -> Option<usize> {
        self.fracs.iter().position(|&q| frac_close(p, q))
    }

    /// Whether every changed site clears every other site at the new positions.
    fn feasible(&self, changes: &[(usize, Vec3)]) -> bool {
        let mut positions = self.fracs.clone();
        for &(i, p) in changes {
            positions[i] = p;
        }
        let cart: Vec<Vec3> = positions.iter().map(|&p| self.lattice.to_cartesian(p)).collect();
        changes.iter().all(|&(i, _)| {
            let others = (0..cart.len())
                .filter(move |&j| j != i)
                .map(|j| (cart[j], self.s.radius(j)));
            site_clear(cart[i], self.s.radius(i), others, &self.translations)
        })
    }

    /// Species-at-position key of the arrangement after `changes`.
    fn arrangement_key(&self, changes: &[(usize, Vec3)]) -> Vec<(usize, [u64; 3])> {
        let mut positions = self.fracs.clone();
        for &(i, p) in changes {
            positions[i] = p;
        }
        let mut key: Vec<_> = positions
            .iter()
            .enumerate()
            .map(|(i, p)| (self.s.sites()[i].species, p.map(f64::to_bits)))
            .collect();
        key.sort_unstable();
        key
    }
}

/// Every feasible move of `spec` from `s`, lazily and in a fixed order.
pub fn neighbor_moves<'a>(
    s: &'a Structure,
    spec: &NeighborhoodSpec,
) -> Result<Box<dyn Iterator<Item = Move> + 'a>> {
    spec.validate()?;
    let ctx = Context::new(s);
    let n = s.len();
    Ok(match spec.kind {
        NeighborhoodKind::KIonSwap => {
            let k = spec.k.expect("validated");
            Box::new(ion_swaps(ctx, n, k))
        }
        NeighborhoodKind::KSwap => {
            let grid = Grid::new(s.cell(), spec.delta.expect("validated"))?;
            Box::new(grid_swaps(ctx, n, spec.k.expect("validated"), grid))
        }
        NeighborhoodKind::Axes => {
            let grid = Grid::new(s.cell(), spec.delta.expect("validated"))?;
            Box::new(axis_moves(ctx, n, grid))
        }
    })
}

fn ion_swaps<'a>(ctx: Context<'a>, n: usize, k: usize) -> impl Iterator<Item = Move> + 'a {
    let mut seen = HashSet::new();
    (0..n).combinations(k).flat_map(move |sites| {
        (0..k)
            .permutations(k)
            .map(move |perm| (sites.clone(), perm))
    })
    .filter_map(move |(sites, perm)| {
        let species = |i: usize| ctx.s.sites()[i].species;
        if perm.iter().enumerate().all(|(m, &p)| species(sites[m]) == species(sites[p])) {
            return None;
        }
        let sources: Vec<usize> = perm.iter().map(|&p| sites[p]).collect();
        let mut changes: Vec<(usize, Vec3)> = sites
            .iter()
            .zip(&sources)
            .filter(|(a, b)| a != b)
            .map(|(&a, &b)| (a, ctx.fracs[b]))
            .collect();
        changes.sort_by_key(|c| c.0);
        // different permutations can give one arrangement when species repeat
        if !seen.insert(ctx.arrangement_key(&changes)) || !ctx.feasible(&changes) {
            return None;
        }
        Some(Move {
            kind: MoveKind::IonSwap { sites, sources },
            changes,
        })
    })
}

fn grid_swaps<'a>(ctx: Context<'a>, n: usize, k: usize, grid: Grid) -> impl Iterator<Item = Move> + 'a {
    let identity = ctx.arrangement_key(&[]);
    let mut displaced_seen = HashSet::new();
    let points = grid.len();
    (0..n)
        .combinations(k)
        .flat_map(move |sites| (0..points).permutations(k).map(move |pts| (sites.clone(), pts)))
        .filter_map(move |(sites, pts)| {
            let mut changes = Vec::with_capacity(2 * k);
            let mut irregular = false;
            for (&site, &pt) in sites.iter().zip(&pts) {
                let target = grid.point(pt);
                if frac_close(target, ctx.fracs[site]) {
                    return None;
                }
                match ctx.occupant(target) {
                    Some(t) => {
                        // take the occupant's stored coordinates so equal
                        // arrangements get equal keys
                        changes.push((site, ctx.fracs[t]));
                        if !sites.contains(&t) {
                            changes.push((t, ctx.fracs[site]));
                        }
                        irregular = true;
                    }
                    None => changes.push((site, target)),
                }
            }
            changes.sort_by_key(|c| c.0);
            if !irregular {
                // like ions trading vacant targets give one arrangement; keep
                // targets ascending within each species
                let species = |i: usize| ctx.s.sites()[i].species;
                let repeated = (0..k).any(|a| {
                    (a + 1..k).any(|b| species(sites[a]) == species(sites[b]) && pts[a] > pts[b])
                });
                if repeated {
                    return None;
                }
            } else {
                // exchanges and moves onto another mover's point can repeat or
                // restore the start
                let key = ctx.arrangement_key(&changes);
                if key == identity || !displaced_seen.insert(key) {
                    return None;
                }
            }
            if !ctx.feasible(&changes) {
                return None;
            }
            Some(Move {
                kind: MoveKind::GridSwap { sites, points: pts },
                changes,
            })
        })
}

fn axis_moves<'a>(ctx: Context<'a>, n: usize, grid: Grid) -> impl Iterator<Item = Move> + 'a {
    (0..n)
        .flat_map(move |site| (0..3).flat_map(move |axis| (1..grid.counts[axis]).map(move |steps| (site, axis, steps))))
        .filter_map(move |(site, axis, steps)| {
            let mut p = ctx.fracs[site];
            p[axis] = wrap(p[axis] + steps as f64 * grid.step[axis]);
            if ctx.occupant(p).is_some() {
                return None;
            }
            let changes = vec![(site, p)];
            if !ctx.feasible(&changes) {
                return None;
            }
            Some(Move {
                kind: MoveKind::Axis { site, axis, steps },
                changes,
            })
        })
}

/// Every feasible neighbor of `s`, lazily and in a fixed order.
pub fn enumerate_neighbors<'a>(
    s: &'a Structure,
    spec: &NeighborhoodSpec,
) -> Result<impl Iterator<Item = Structure> + 'a> {
    Ok(neighbor_moves(s, spec)?.map(move |m| m.apply(s)))
}

/// Energy change of `mv` from pair totals, touching only pairs with a moved site.
fn move_delta(eval: &DepthEvaluator, cart: &[Vec3], pairs: &[f64], mv: &Move) -> Result<f64> {
    let n = cart.len();
    let lattice = eval.lattice();
    let mut new_cart: Vec<(usize, Vec3)> = mv
        .changes
        .iter()
        .map(|&(i, p)| (i, lattice.to_cartesian(wrap3(p))))
        .collect();
    new_cart.sort_by_key(|c| c.0);
    let moved = |j: usize| new_cart.binary_search_by_key(&j, |c| c.0).ok();
    let mut delta = 0.0;
    for (a, &(i, pi)) in new_cart.iter().enumerate() {
        for j in 0..n {
            if j == i {
                continue;
            }
            match moved(j) {
                // each moved pair once
                Some(b) if b < a => continue,
                Some(b) => delta += 2.0 * (eval.pair_total(i, j, pi, new_cart[b].1)? - pairs[i * n + j]),
                None => delta += 2.0 * (eval.pair_total(i, j, pi, cart[j])? - pairs[i * n + j]),
            }
        }
    }
    Ok(delta)
}

/// One accepted greedy step.
#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub structure: Structure,
    pub mv: Move,
    pub energy: f64,
}

/// Lowest-energy neighbor of `s`, if it beats `E_k(s)` by more than the tie tolerance.
///
/// Ties go to the first minimal neighbor in enumeration order.
pub fn greedy_step(
    s: &Structure,
    spec: &NeighborhoodSpec,
    ff: &ForceField,
    k_energy: u32,
) -> Result<Option<Step>> {
    let eval = DepthEvaluator::new(s, ff, k_energy)?;
    let cart = s.cartesian();
    let energy = eval.energy(&cart)?;
    greedy_step_with(s, spec, &eval, energy)
}

fn greedy_step_with(
    s: &Structure,
    spec: &NeighborhoodSpec,
    eval: &DepthEvaluator,
    energy: f64,
) -> Result<Option<Step>> {
    let cart = s.cartesian();
    let pairs = eval.pair_matrix(&cart)?;
    let mut best: Option<(f64, Move)> = None;
    for mv in neighbor_moves(s, spec)? {
        // a neighbor that lands on a singularity cannot be the minimum
        let Ok(d) = move_delta(eval, &cart, &pairs, &mv) else {
            continue;
        };
        if best.as_ref().map_or(true, |(b, _)| d < *b) {
            best = Some((d, mv));
        }
    }
    let Some((delta, mv)) = best else {
        return Ok(None);
    };
    if delta >= -TIE_TOLERANCE {
        return Ok(None);
    }
    let structure = mv.apply(s);
    let new_energy = eval.energy(&structure.cartesian())?;
    if new_energy >= energy - TIE_TOLERANCE {
        return Ok(None);
    }
    Ok(Some(Step {
        structure,
        mv,
        energy: new_energy,
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalSearchResult {
    pub structure: Structure,
    pub steps: usize,
    /// Depth-k energy of the start and after every step; strictly decreasing.
    pub energy_trace: Vec<f64>,
    /// False when `max_steps` ran out before a local minimum was reached.
    pub at_minimum: bool,
}

/// Repeats [`greedy_step`] until no neighbor improves or `max_steps` is reached.
pub fn local_search(
    s: &Structure,
    spec: &NeighborhoodSpec,
    ff: &ForceField,
    k_energy: u32,
    max_steps: usize,
) -> Result<LocalSearchResult> {
    let eval = DepthEvaluator::new(s, ff, k_energy)?;
    let mut current = s.clone();
    let mut energy = eval.energy(&current.cartesian())?;
    let mut trace = vec![energy];
    let mut steps = 0;
    let mut at_minimum = false;
    while steps < max_steps {
        match greedy_step_with(&current, spec, &eval, energy)? {
            Some(step) => {
                debug_assert!(step.energy < energy);
                current = step.structure;
                energy = step.energy;
                trace.push(energy);
                steps += 1;
            }
            None => {
                at_minimum = true;
                break;
            }
        }
    }
    Ok(LocalSearchResult {
        structure: current,
        steps,
        energy_trace: trace,
        at_minimum,
    })
}
