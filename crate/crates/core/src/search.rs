//! Basin hopping and Axes-enhanced basin hopping at fixed cell, with run statistics.
//!
//! Every iteration draws a start, optionally improves it by combinatorial
//! local search, relaxes it and compares the reported energy with the best
//! so far. A run stops after `patience` consecutive relaxations without an
//! improvement or after `max_relaxations` relaxations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{DepthEvaluator, TIE_TOLERANCE};
use crate::error::{Error, Result};
use crate::lattice::{dot, random_feasible_with, ImageShell, Vec3};
use crate::localsearch::{local_search, NeighborhoodKind, NeighborhoodSpec};
use crate::model::{Composition, ForceField, Structure, UnitCell};
use crate::relax::{relax, RelaxSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    BasinHopping,
    AxesBh,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSettings {
    pub mode: SearchMode,
    pub seed: u64,
    /// Consecutive relaxations without improvement before stopping.
    pub patience: usize,
    pub max_relaxations: usize,
    /// Required for `axes_bh`.
    pub neighborhood: Option<NeighborhoodSpec>,
    pub relax: RelaxSettings,
    /// Depth of reported and compared energies.
    pub k_report: u32,
    /// Greedy steps allowed per local search.
    pub max_ls_steps: usize,
    /// Rejection-sampling budget per random start.
    pub max_attempts: usize,
    /// Metropolis temperature in eV; `None` accepts improvements only.
    pub temperature: Option<f64>,
    /// Jitter amplitude (Å) for perturbing the current structure instead of
    /// drawing a fresh one.
    pub perturb: Option<f64>,
    /// Stop once the best reported energy is at or below this (eV).
    #[serde(default)]
    pub target_energy: Option<f64>,
}

impl SearchSettings {
    pub fn basin_hopping(seed: u64) -> SearchSettings {
        SearchSettings {
            mode: SearchMode::BasinHopping,
            seed,
            patience: 20,
            max_relaxations: 200,
            neighborhood: None,
            relax: RelaxSettings::default(),
            k_report: 6,
            max_ls_steps: 10_000,
            max_attempts: 1_000_000,
            temperature: None,
            perturb: None,
            target_energy: None,
        }
    }

    pub fn axes_bh(seed: u64, delta: f64) -> SearchSettings {
        SearchSettings {
            mode: SearchMode::AxesBh,
            neighborhood: Some(NeighborhoodSpec::axes(delta)),
            ..SearchSettings::basin_hopping(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidSettings(msg.into()));
        if self.patience == 0 {
            return bad("patience must be at least 1");
        }
        if self.max_relaxations == 0 {
            return bad("max_relaxations must be at least 1");
        }
        if self.k_report == 0 {
            return bad("k_report must be at least 1");
        }
        if self.max_attempts == 0 {
            return bad("max_attempts must be at least 1");
        }
        if let Some(t) = self.temperature {
            if !(t > 0.0 && t.is_finite()) {
                return bad("temperature must be positive");
            }
        }
        if let Some(p) = self.perturb {
            if !(p > 0.0 && p.is_finite()) {
                return bad("perturb amplitude must be positive");
            }
        }
        self.relax.validate()?;
        match (self.mode, &self.neighborhood) {
            (SearchMode::AxesBh, Some(spec)) if spec.kind == NeighborhoodKind::Axes => spec.validate(),
            (SearchMode::AxesBh, _) => bad("axes_bh needs an axes neighborhood"),
            (SearchMode::BasinHopping, _) => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Patience,
    Budget,
    Target,
}

/// One relaxation of a run. Energies other than `report_energy` and
/// `best_energy` are at the relaxation depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Index of the generated start structure.
    pub structure_index: usize,
    pub initial_energy: f64,
    pub post_ls_energy: Option<f64>,
    pub relaxed_energy: f64,
    pub report_energy: f64,
    pub best_energy: f64,
    pub improved: bool,
    pub accepted: bool,
    /// Relaxations so far, this one included.
    pub relaxations: usize,
    pub ls_steps: usize,
    pub relax_iterations: usize,
    pub relax_converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub settings: SearchSettings,
    pub iterations: Vec<IterationRecord>,
    pub relaxations: usize,
    pub ls_steps: usize,
    pub best_energy: f64,
    pub best_structure: Structure,
    pub stop: StopReason,
}

impl RunRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data")
    }

    /// Relaxation count at which the best energy first reaches `target`.
    pub fn relaxations_to_reach(&self, target: f64) -> Option<usize> {
        self.iterations
            .iter()
            .find(|it| it.best_energy <= target)
            .map(|it| it.relaxations)
    }

    /// Best energy after each relaxation.
    pub fn best_trace(&self) -> Vec<f64> {
        self.iterations.iter().map(|it| it.best_energy).collect()
    }
}

/// Output of the optional pre-relaxation stage.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalStage {
    pub structure: Structure,
    pub steps: usize,
    /// Relaxation-depth energy of `structure`.
    pub energy: f64,
}

fn jitter<R: Rng>(s: &Structure, amplitude: f64, rng: &mut R) -> Result<Structure> {
    let lattice = s.lattice();
    let fracs: Vec<Vec3> = s
        .cartesian()
        .iter()
        .map(|p| {
            let v: Vec3 = loop {
                let v = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                if dot(v, v) <= 1.0 {
                    break v;
                }
            };
            lattice.to_fractional([
                p[0] + amplitude * v[0],
                p[1] + amplitude * v[1],
                p[2] + amplitude * v[2],
            ])
        })
        .collect();
    s.with_fractional(&fracs)
}

/// Generic driver: draws starts, passes them through `stage` when given,
/// relaxes and keeps the best.
pub fn run_search<F>(
    cell: UnitCell,
    composition: &Composition,
    ff: &ForceField,
    settings: &SearchSettings,
    mut stage: Option<F>,
) -> Result<RunRecord>
where
    F: FnMut(&Structure) -> Result<LocalStage>,
{
    settings.validate()?;
    composition
        .validate()
        .map_err(Error::InvalidComposition)?;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let shell = ImageShell::new(1);

    let mut iterations = Vec::new();
    let mut best: Option<(f64, Structure)> = None;
    let mut current: Option<(f64, Structure)> = None;
    let mut since_improvement = 0;
    let mut ls_total = 0;
    let mut generated = 0;
    let mut evaluator: Option<DepthEvaluator> = None;

    let stop = loop {
        if let (Some(t), Some((b, _))) = (settings.target_energy, &best) {
            if *b <= t {
                break StopReason::Target;
            }
        }
        if iterations.len() == settings.max_relaxations {
            break StopReason::Budget;
        }
        if since_improvement == settings.patience {
            break StopReason::Patience;
        }

        let start = match (settings.perturb, &current) {
            (Some(amplitude), Some((_, cur))) => {
                let mut attempts = 0;
                loop {
                    let s = jitter(cur, amplitude, &mut rng)?;
                    // local search expects a feasible start
                    if stage.is_none() || crate::lattice::is_feasible(&s, &shell) {
                        break s;
                    }
                    attempts += 1;
                    if attempts >= settings.max_attempts {
                        return Err(Error::Exhausted { attempts });
                    }
                }
            }
            _ => random_feasible_with(cell, composition, &mut rng, settings.max_attempts)?,
        };
        let structure_index = generated;
        generated += 1;

        let eval = match &evaluator {
            Some(e) => e,
            None => evaluator.insert(DepthEvaluator::new(&start, ff, settings.relax.depth)?),
        };
        let initial_energy = eval.energy(&start.cartesian())?;

        let (to_relax, post_ls_energy, ls_steps) = match stage.as_mut() {
            Some(f) => {
                let out = f(&start)?;
                debug_assert!(out.energy <= initial_energy);
                (out.structure, Some(out.energy), out.steps)
            }
            None => (start, None, 0),
        };
        ls_total += ls_steps;

        let relaxed = relax(&to_relax, ff, &settings.relax)?;
        debug_assert!(relaxed.energy_trace.windows(2).all(|w| w[1] <= w[0]));
        let relaxed_energy = relaxed.final_relax_energy();
        let report = DepthEvaluator::new(&relaxed.structure, ff, settings.k_report)?
            .report(&relaxed.structure)?;
        let e = report.total;

        let improved = best.as_ref().map_or(true, |(b, _)| e < b - TIE_TOLERANCE);
        if improved {
            best = Some((e, relaxed.structure.clone()));
            since_improvement = 0;
        } else {
            since_improvement += 1;
        }
        let accepted = match (&current, settings.temperature) {
            (None, _) => true,
            (Some((c, _)), None) => e < c - TIE_TOLERANCE,
            (Some((c, _)), Some(t)) => e < c - TIE_TOLERANCE || rng.gen::<f64>() < (-(e - c) / t).exp(),
        };
        if accepted {
            current = Some((e, relaxed.structure.clone()));
        }

        iterations.push(IterationRecord {
            iteration: iterations.len(),
            structure_index,
            initial_energy,
            post_ls_energy,
            relaxed_energy,
            report_energy: e,
            best_energy: best.as_ref().map(|b| b.0).expect("set on first iteration"),
            improved,
            accepted,
            relaxations: iterations.len() + 1,
            ls_steps,
            relax_iterations: relaxed.iterations,
            relax_converged: relaxed.converged,
        });
    };

    let (best_energy, best_structure) = best.expect("at least one relaxation");
    Ok(RunRecord {
        settings: settings.clone(),
        relaxations: iterations.len(),
        iterations,
        ls_steps: ls_total,
        best_energy,
        best_structure,
        stop,
    })
}

/// Fresh random start, relax, keep if better.
pub fn basin_hopping(
    cell: UnitCell,
    composition: &Composition,
    ff: &ForceField,
    settings: &SearchSettings,
) -> Result<RunRecord> {
    run_search(cell, composition, ff, settings, None::<fn(&Structure) -> Result<LocalStage>>)
}

/// As [`basin_hopping`], with a greedy Axes local search at the relaxation
/// depth before each relaxation.
pub fn axes_bh(
    cell: UnitCell,
    composition: &Composition,
    ff: &ForceField,
    settings: &SearchSettings,
) -> Result<RunRecord> {
    settings.validate()?;
    let spec = settings
        .neighborhood
        .ok_or_else(|| Error::InvalidSettings("axes_bh needs an axes neighborhood".into()))?;
    let depth = settings.relax.depth;
    let max_steps = settings.max_ls_steps;
    let stage = |s: &Structure| {
        let r = local_search(s, &spec, ff, depth, max_steps)?;
        debug_assert!(r.energy_trace.windows(2).all(|w| w[1] < w[0]));
        Ok(LocalStage {
            energy: *r.energy_trace.last().expect("trace holds the start"),
            structure: r.structure,
            steps: r.steps,
        })
    };
    run_search(cell, composition, ff, settings, Some(stage))
}

/// Dispatches on `settings.mode`.
pub fn run(cell: UnitCell, composition: &Composition, ff: &ForceField, settings: &SearchSettings) -> Result<RunRecord> {
    match settings.mode {
        SearchMode::BasinHopping => basin_hopping(cell, composition, ff, settings),
        SearchMode::AxesBh => axes_bh(cell, composition, ff, settings),
    }
}

/// Independent runs, one per settings entry, in input order.
pub fn run_many(
    cell: UnitCell,
    composition: &Composition,
    ff: &ForceField,
    settings: &[SearchSettings],
) -> Result<Vec<RunRecord>> {
    settings
        .par_iter()
        .map(|s| run(cell, composition, ff, s))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation; zero for a single value.
    pub stdev: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Result<Summary> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mid = sorted.len() / 2;
        let median = if sorted.len() % 2 == 0 {
            0.5 * (sorted[mid - 1] + sorted[mid])
        } else {
            sorted[mid]
        };
        let stdev = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Ok(Summary {
            mean,
            median,
            stdev,
            min: sorted[0],
            max: sorted[sorted.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub runs: usize,
    pub relaxations: Summary,
    pub ls_steps: Summary,
    pub best_energy: Summary,
    /// Lowest best energy over all runs after each relaxation count; a run
    /// that stopped early keeps its final best.
    pub envelope: Vec<f64>,
}

/// Pointwise minimum of best-energy traces, shorter traces held at their last value.
pub fn lower_envelope(traces: &[Vec<f64>]) -> Vec<f64> {
    let len = traces.iter().map(Vec::len).max().unwrap_or(0);
    (0..len)
        .map(|i| {
            traces
                .iter()
                .filter_map(|t| t.get(i).or(t.last()))
                .fold(f64::INFINITY, |m, &v| m.min(v))
        })
        .collect()
}

pub fn run_stats(records: &[RunRecord]) -> Result<RunStats> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let relaxations: Vec<f64> = records.iter().map(|r| r.relaxations as f64).collect();
    let ls: Vec<f64> = records.iter().map(|r| r.ls_steps as f64).collect();
    let best: Vec<f64> = records.iter().map(|r| r.best_energy).collect();
    let traces: Vec<Vec<f64>> = records.iter().map(RunRecord::best_trace).collect();
    Ok(RunStats {
        runs: records.len(),
        relaxations: Summary::of(&relaxations)?,
        ls_steps: Summary::of(&ls)?,
        best_energy: Summary::of(&best)?,
        envelope: lower_envelope(&traces),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn small(mode: SearchMode, seed: u64) -> SearchSettings {
        let mut s = match mode {
            SearchMode::BasinHopping => SearchSettings::basin_hopping(seed),
            SearchMode::AxesBh => SearchSettings::axes_bh(seed, fixtures::SRTIO3_LATTICE / 4.0),
        };
        s.patience = 3;
        s.max_relaxations = 8;
        s
    }

    fn z1() -> (UnitCell, Composition, ForceField) {
        (fixtures::default_cubic_cell(1), fixtures::srtio3_composition(1), fixtures::table6())
    }

    #[test]
    fn invalid_settings_are_rejected() {
        let (cell, comp, ff) = z1();
        let mut s = small(SearchMode::BasinHopping, 1);
        s.patience = 0;
        assert!(basin_hopping(cell, &comp, &ff, &s).is_err());
        let mut s = small(SearchMode::AxesBh, 1);
        s.neighborhood = Some(NeighborhoodSpec::k_ion_swap(2));
        assert!(axes_bh(cell, &comp, &ff, &s).is_err());
    }

    #[test]
    fn record_invariants() {
        let (cell, comp, ff) = z1();
        for mode in [SearchMode::BasinHopping, SearchMode::AxesBh] {
            let r = run(cell, &comp, &ff, &small(mode, 5)).unwrap();
            assert!(r.relaxations <= 8 && r.relaxations >= 1);
            assert!(r.iterations.windows(2).all(|w| w[1].best_energy <= w[0].best_energy));
            let min = r.iterations.iter().map(|i| i.report_energy).fold(f64::INFINITY, f64::min);
            assert_eq!(min, r.best_energy);
            for it in &r.iterations {
                if let Some(ls) = it.post_ls_energy {
                    assert!(ls <= it.initial_energy);
                    assert!(it.relaxed_energy <= ls);
                } else {
                    assert!(it.relaxed_energy <= it.initial_energy);
                }
            }
            match r.stop {
                StopReason::Patience => {
                    let tail = &r.iterations[r.iterations.len() - 3..];
                    assert!(tail.iter().all(|i| !i.improved));
                }
                StopReason::Budget => assert_eq!(r.relaxations, 8),
                StopReason::Target => unreachable!("no target set"),
            }
        }
    }

    #[test]
    fn patience_one_stops_after_first_failure() {
        let (cell, comp, ff) = z1();
        let mut s = small(SearchMode::BasinHopping, 2);
        s.patience = 1;
        let r = basin_hopping(cell, &comp, &ff, &s).unwrap();
        assert_eq!(r.stop, StopReason::Patience);
        let last = r.iterations.last().unwrap();
        assert!(!last.improved);
        assert!(r.iterations[..r.iterations.len() - 1].iter().all(|i| i.improved));
    }

    #[test]
    fn same_seed_same_record() {
        let (cell, comp, ff) = z1();
        for mode in [SearchMode::BasinHopping, SearchMode::AxesBh] {
            let a = run(cell, &comp, &ff, &small(mode, 9)).unwrap().to_json();
            let b = run(cell, &comp, &ff, &small(mode, 9)).unwrap().to_json();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn idle_stage_reproduces_basin_hopping() {
        let (cell, comp, ff) = z1();
        let settings = small(SearchMode::BasinHopping, 4);
        let plain = basin_hopping(cell, &comp, &ff, &settings).unwrap();
        let depth = settings.relax.depth;
        let stub = |s: &Structure| {
            Ok(LocalStage {
                energy: crate::energy::depth_energy(s, &ff, depth)?.total,
                structure: s.clone(),
                steps: 0,
            })
        };
        let hybrid = run_search(cell, &comp, &ff, &settings, Some(stub)).unwrap();
        assert_eq!(plain.best_structure, hybrid.best_structure);
        assert_eq!(plain.relaxations, hybrid.relaxations);
        for (a, b) in plain.iterations.iter().zip(&hybrid.iterations) {
            assert_eq!(a.report_energy, b.report_energy);
            assert_eq!(a.best_energy, b.best_energy);
            assert_eq!(b.post_ls_energy, Some(b.initial_energy));
        }
    }

    #[test]
    fn target_stops_the_run() {
        let (cell, comp, ff) = z1();
        let full = basin_hopping(cell, &comp, &ff, &small(SearchMode::BasinHopping, 6)).unwrap();
        let mut s = small(SearchMode::BasinHopping, 6);
        s.target_energy = Some(full.iterations[0].best_energy);
        let r = basin_hopping(cell, &comp, &ff, &s).unwrap();
        assert_eq!(r.stop, StopReason::Target);
        assert_eq!(r.relaxations, 1);
        assert_eq!(r.relaxations_to_reach(full.iterations[0].best_energy), Some(1));
        assert_eq!(full.relaxations_to_reach(f64::NEG_INFINITY), None);
    }

    #[test]
    fn perturb_and_metropolis_modes_run() {
        let (cell, comp, ff) = z1();
        let mut s = small(SearchMode::AxesBh, 3);
        s.perturb = Some(0.5);
        s.temperature = Some(0.1);
        let r = axes_bh(cell, &comp, &ff, &s).unwrap();
        assert!(r.iterations.windows(2).all(|w| w[1].best_energy <= w[0].best_energy));
        assert!(r.iterations.iter().skip(1).all(|i| i.structure_index == i.iteration));
    }

    #[test]
    fn summary_of_one_value() {
        let s = Summary::of(&[4.0]).unwrap();
        assert_eq!((s.mean, s.median, s.stdev), (4.0, 4.0, 0.0));
        let s = Summary::of(&[1.0, 2.0, 3.0, 10.0]).unwrap();
        assert_eq!(s.median, 2.5);
        assert!((s.stdev - (50.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!(Summary::of(&[]).is_err());
    }

    #[test]
    fn envelope_of_union_is_pointwise_min() {
        let a = vec![vec![-1.0, -2.0, -2.0], vec![-1.5]];
        let b = vec![vec![-0.5, -3.0], vec![-1.2, -1.3, -1.4, -2.5]];
        let ea = lower_envelope(&a);
        let eb = lower_envelope(&b);
        let all: Vec<_> = a.iter().chain(&b).cloned().collect();
        let merged = lower_envelope(&all);
        let len = ea.len().max(eb.len());
        for i in 0..len {
            let x = ea.get(i).or(ea.last()).unwrap();
            let y = eb.get(i).or(eb.last()).unwrap();
            assert_eq!(merged[i], x.min(*y));
        }
        assert!(merged.windows(2).all(|w| w[1] <= w[0]));
    }
}
