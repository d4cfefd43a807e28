//! Batch experiments driven by a JSON config. Each kind writes per-trial rows
//! and a summary to CSV files in the output directory, and prints the summary.

use std::fs;
use std::path::{Path, PathBuf};

use csp_core::energy::compare_energies;
use csp_core::search::{self, lower_envelope, Summary};
use csp_core::{
    local_search, random_feasible, relax, Composition, DepthEvaluator, EnergyOrdering, ForceField,
    IterationRecord, NeighborhoodKind, NeighborhoodSpec, RelaxSettings, RunRecord, SearchMode,
    SearchSettings, StopReason, UnitCell,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::inputs::{self, CliResult, Failure};

/// Depths at or above which the image sum is not evaluated.
const MAX_DEPTH: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    DepthConvergence,
    Ordering,
    NeighborhoodCompare,
    SearchCompare,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellConfig {
    pub lengths: [f64; 3],
    #[serde(default = "right_angles")]
    pub angles: [f64; 3],
}

fn right_angles() -> [f64; 3] {
    [90.0; 3]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// `srtio3`, `y2ti2o7` or a composition file relative to the config.
    #[serde(default = "default_composition")]
    pub composition: String,
    pub formula_units: Option<u32>,
    pub cell: Option<CellConfig>,
    pub forcefield: Option<String>,
    pub seed: u64,
    /// Structures, pairs, starts or runs, depending on the kind.
    pub count: usize,
    /// Depths compared against `k_ref` (depth_convergence) or against each
    /// other, first vs last (ordering).
    pub k_values: Option<Vec<u32>>,
    #[serde(default = "default_k_ref")]
    pub k_ref: u32,
    pub neighborhoods: Option<Vec<NeighborhoodSpec>>,
    /// Depth of local-search and relaxation energies.
    #[serde(default = "default_energy_depth")]
    pub energy_depth: u32,
    #[serde(default = "default_max_steps")]
    pub max_ls_steps: usize,
    /// Axes step for search_compare; a fifth of the shortest cell length when absent.
    pub delta: Option<f64>,
    #[serde(default = "default_patience")]
    pub patience: usize,
    #[serde(default = "default_max_relaxations")]
    pub max_relaxations: usize,
    pub target_energy: Option<f64>,
    #[serde(default = "default_max_attempts")]
    pub max_attempts: usize,
    /// Output directory relative to the config.
    #[serde(default = "default_out")]
    pub out: String,
}

fn default_composition() -> String {
    "srtio3".into()
}
fn default_k_ref() -> u32 {
    MAX_DEPTH
}
fn default_energy_depth() -> u32 {
    2
}
fn default_max_steps() -> usize {
    10_000
}
fn default_patience() -> usize {
    20
}
fn default_max_relaxations() -> usize {
    200
}
fn default_max_attempts() -> usize {
    1_000_000
}
fn default_out() -> String {
    "results".into()
}

/// Config with its relative paths resolved and its inputs loaded.
struct Prepared {
    config: ExperimentConfig,
    composition: Composition,
    cell: UnitCell,
    ff: ForceField,
    out: PathBuf,
}

fn field(path: &Path, name: &str, message: impl std::fmt::Display) -> Failure {
    Failure::Usage(format!("{}: field `{name}`: {message}", path.display()))
}

fn prepare(path: &Path, config: ExperimentConfig, out: Option<&Path>) -> CliResult<Prepared> {
    let base = path.parent().unwrap_or(Path::new("."));
    let mut composition = inputs::composition(&config.composition, base)?;
    if let Some(z) = config.formula_units {
        composition.formula_units = z;
    }
    composition
        .validate()
        .map_err(|e| field(path, "composition", e))?;
    let cell = match &config.cell {
        Some(c) => UnitCell::new(c.lengths, c.angles).map_err(|e| field(path, "cell", e))?,
        None => inputs::default_cell(&composition),
    };
    let ff = match &config.forcefield {
        Some(f) => inputs::forcefield(Some(&inputs::resolve(base, f)))?,
        None => inputs::forcefield(None)?,
    };
    if config.count == 0 {
        return Err(field(path, "count", "must be at least 1"));
    }
    let depth_ok = |k: u32| (1..=MAX_DEPTH).contains(&k);
    if !depth_ok(config.k_ref) {
        return Err(field(path, "k_ref", format!("must lie in 1..={MAX_DEPTH}")));
    }
    if !depth_ok(config.energy_depth) {
        return Err(field(path, "energy_depth", format!("must lie in 1..={MAX_DEPTH}")));
    }
    if let Some(ks) = &config.k_values {
        if ks.is_empty() || !ks.iter().all(|&k| depth_ok(k)) {
            return Err(field(path, "k_values", format!("needs depths in 1..={MAX_DEPTH}")));
        }
    }
    if let Some(ns) = &config.neighborhoods {
        if ns.is_empty() {
            return Err(field(path, "neighborhoods", "must not be empty"));
        }
        for spec in ns {
            spec.validate().map_err(|e| field(path, "neighborhoods", e))?;
        }
    }
    let out = match out {
        Some(o) => o.to_path_buf(),
        None => inputs::resolve(base, &config.out),
    };
    Ok(Prepared {
        config,
        composition,
        cell,
        ff,
        out,
    })
}

pub fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> CliResult<()> {
    let fail = |e: &dyn std::fmt::Display| Failure::Runtime(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(|e| fail(&e))?;
    for row in rows {
        w.serialize(row).map_err(|e| fail(&e))?;
    }
    w.flush().map_err(|e| fail(&e))
}

fn print_csv(path: &Path) -> CliResult<()> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    print!("{text}");
    Ok(())
}

/// Reads and runs the experiment in `path`.
pub fn run_file(path: &Path, out: Option<&Path>, seed: Option<u64>) -> CliResult<()> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let mut config: ExperimentConfig = csp_core::io::decode(&text)
        .map_err(|e| Failure::Usage(inputs::describe(path, &text, &e)))?;
    if let Some(s) = seed {
        config.seed = s;
    }
    let p = prepare(path, config, out)?;
    fs::create_dir_all(&p.out).map_err(|e| Failure::Runtime(format!("{}: {e}", p.out.display())))?;
    let summary = match p.config.experiment {
        ExperimentKind::DepthConvergence => depth_convergence(&p)?,
        ExperimentKind::Ordering => ordering(&p)?,
        ExperimentKind::NeighborhoodCompare => neighborhood_compare(&p)?,
        ExperimentKind::SearchCompare => search_compare(&p)?,
    };
    print_csv(&summary)
}

fn start(p: &Prepared, index: usize) -> csp_core::Result<csp_core::Structure> {
    random_feasible(p.cell.clone(), &p.composition, trial_seed(p.config.seed, index), p.config.max_attempts)
}

/// Seed of trial `index`; trials are independent of scheduling.
pub fn trial_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add(index as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthRow {
    pub structure: usize,
    pub seed: u64,
    pub k: u32,
    pub per_ion: f64,
    pub ref_per_ion: f64,
    pub abs_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthSummaryRow {
    pub k: u32,
    pub structures: usize,
    pub mean_abs_diff: f64,
    pub median_abs_diff: f64,
    pub stdev_abs_diff: f64,
    pub max_abs_diff: f64,
}

pub fn summarize_depth(rows: &[DepthRow]) -> Vec<DepthSummaryRow> {
    let mut ks: Vec<u32> = rows.iter().map(|r| r.k).collect();
    ks.sort_unstable();
    ks.dedup();
    ks.into_iter()
        .map(|k| {
            let diffs: Vec<f64> = rows.iter().filter(|r| r.k == k).map(|r| r.abs_diff).collect();
            let s = Summary::of(&diffs).expect("every depth has rows");
            DepthSummaryRow {
                k,
                structures: diffs.len(),
                mean_abs_diff: s.mean,
                median_abs_diff: s.median,
                stdev_abs_diff: s.stdev,
                max_abs_diff: s.max,
            }
        })
        .collect()
}

fn depth_convergence(p: &Prepared) -> CliResult<PathBuf> {
    let c = &p.config;
    let ks = c.k_values.clone().unwrap_or_else(|| (1..=6).collect());
    let per_structure: Vec<Vec<DepthRow>> = (0..c.count)
        .into_par_iter()
        .map(|i| -> csp_core::Result<Vec<DepthRow>> {
            let s = start(p, i)?;
            let n = s.len() as f64;
            let cart = s.cartesian();
            let reference = DepthEvaluator::new(&s, &p.ff, c.k_ref)?.energy(&cart)? / n;
            ks.iter()
                .map(|&k| {
                    let e = DepthEvaluator::new(&s, &p.ff, k)?.energy(&cart)? / n;
                    Ok(DepthRow {
                        structure: i,
                        seed: trial_seed(c.seed, i),
                        k,
                        per_ion: e,
                        ref_per_ion: reference,
                        abs_diff: (e - reference).abs(),
                    })
                })
                .collect()
        })
        .collect::<csp_core::Result<_>>()?;
    let rows: Vec<DepthRow> = per_structure.into_iter().flatten().collect();
    write_csv(&p.out.join("rows.csv"), &rows)?;
    let summary = p.out.join("summary.csv");
    write_csv(&summary, summarize_depth(&rows))?;
    Ok(summary)
}

fn verdict(o: EnergyOrdering) -> &'static str {
    match o {
        EnergyOrdering::ALower => "a_lower",
        EnergyOrdering::BLower => "b_lower",
        EnergyOrdering::Tie => "tie",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingRow {
    pub pair: usize,
    pub seed_a: u64,
    pub seed_b: u64,
    pub k_low: u32,
    pub k_high: u32,
    pub low_a: f64,
    pub low_b: f64,
    pub high_a: f64,
    pub high_b: f64,
    pub low_verdict: String,
    pub high_verdict: String,
    pub agree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingSummaryRow {
    pub k_low: u32,
    pub k_high: u32,
    pub pairs: usize,
    pub agreements: usize,
    pub agreement_percent: f64,
}

pub fn summarize_ordering(rows: &[OrderingRow]) -> OrderingSummaryRow {
    let agreements = rows.iter().filter(|r| r.agree).count();
    OrderingSummaryRow {
        k_low: rows[0].k_low,
        k_high: rows[0].k_high,
        pairs: rows.len(),
        agreements,
        agreement_percent: 100.0 * agreements as f64 / rows.len() as f64,
    }
}

fn ordering(p: &Prepared) -> CliResult<PathBuf> {
    let c = &p.config;
    let ks = c.k_values.clone().unwrap_or_else(|| vec![1, 6]);
    let (k_low, k_high) = (ks[0], *ks.last().expect("validated non-empty"));
    let rows: Vec<OrderingRow> = (0..c.count)
        .into_par_iter()
        .map(|pair| -> csp_core::Result<OrderingRow> {
            let a = start(p, 2 * pair)?;
            let b = start(p, 2 * pair + 1)?;
            let low = DepthEvaluator::new(&a, &p.ff, k_low)?;
            let high = DepthEvaluator::new(&a, &p.ff, k_high)?;
            let (ca, cb) = (a.cartesian(), b.cartesian());
            let (low_a, low_b) = (low.energy(&ca)?, low.energy(&cb)?);
            let (high_a, high_b) = (high.energy(&ca)?, high.energy(&cb)?);
            let lv = compare_energies(low_a, low_b);
            let hv = compare_energies(high_a, high_b);
            Ok(OrderingRow {
                pair,
                seed_a: trial_seed(c.seed, 2 * pair),
                seed_b: trial_seed(c.seed, 2 * pair + 1),
                k_low,
                k_high,
                low_a,
                low_b,
                high_a,
                high_b,
                low_verdict: verdict(lv).into(),
                high_verdict: verdict(hv).into(),
                agree: lv == hv,
            })
        })
        .collect::<csp_core::Result<_>>()?;
    write_csv(&p.out.join("rows.csv"), &rows)?;
    let summary = p.out.join("summary.csv");
    write_csv(&summary, [summarize_ordering(&rows)])?;
    Ok(summary)
}

/// Short label such as `axes(0.78)`, `2-ion-swap` or `2-swap(0.98)`.
pub fn label(spec: &NeighborhoodSpec) -> String {
    let k = spec.k.unwrap_or(1);
    let d = spec.delta.unwrap_or(0.0);
    match spec.kind {
        NeighborhoodKind::Axes => format!("axes({d})"),
        NeighborhoodKind::KIonSwap => format!("{k}-ion-swap"),
        NeighborhoodKind::KSwap => format!("{k}-swap({d})"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodRow {
    pub start: usize,
    pub seed: u64,
    pub neighborhood: String,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub energy_drop: f64,
    pub steps: usize,
    pub at_minimum: bool,
    pub relaxed_energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodSummaryRow {
    pub neighborhood: String,
    pub starts: usize,
    pub mean_drop: f64,
    pub median_drop: f64,
    pub stdev_drop: f64,
    pub mean_steps: f64,
    pub mean_relaxed_energy: f64,
    pub min_relaxed_energy: f64,
}

pub fn summarize_neighborhoods(rows: &[NeighborhoodRow]) -> Vec<NeighborhoodSummaryRow> {
    let mut labels: Vec<&str> = Vec::new();
    for r in rows {
        if !labels.contains(&r.neighborhood.as_str()) {
            labels.push(&r.neighborhood);
        }
    }
    labels
        .into_iter()
        .map(|l| {
            let mine: Vec<&NeighborhoodRow> = rows.iter().filter(|r| r.neighborhood == l).collect();
            let drops: Vec<f64> = mine.iter().map(|r| r.energy_drop).collect();
            let steps: Vec<f64> = mine.iter().map(|r| r.steps as f64).collect();
            let relaxed: Vec<f64> = mine.iter().map(|r| r.relaxed_energy).collect();
            let d = Summary::of(&drops).expect("non-empty");
            let s = Summary::of(&steps).expect("non-empty");
            let e = Summary::of(&relaxed).expect("non-empty");
            NeighborhoodSummaryRow {
                neighborhood: l.to_string(),
                starts: mine.len(),
                mean_drop: d.mean,
                median_drop: d.median,
                stdev_drop: d.stdev,
                mean_steps: s.mean,
                mean_relaxed_energy: e.mean,
                min_relaxed_energy: e.min,
            }
        })
        .collect()
}

fn neighborhood_compare(p: &Prepared) -> CliResult<PathBuf> {
    let c = &p.config;
    let specs = c.neighborhoods.clone().ok_or_else(|| {
        Failure::Usage("field `neighborhoods`: required for neighborhood_compare".into())
    })?;
    let relax_settings = RelaxSettings {
        depth: c.energy_depth,
        report_depth: c.energy_depth,
        ..RelaxSettings::default()
    };
    let per_start: Vec<Vec<NeighborhoodRow>> = (0..c.count)
        .into_par_iter()
        .map(|i| -> csp_core::Result<Vec<NeighborhoodRow>> {
            let s = start(p, i)?;
            specs
                .iter()
                .map(|spec| {
                    let r = local_search(&s, spec, &p.ff, c.energy_depth, c.max_ls_steps)?;
                    let first = r.energy_trace[0];
                    let last = *r.energy_trace.last().expect("trace holds the start");
                    let relaxed = relax(&r.structure, &p.ff, &relax_settings)?;
                    Ok(NeighborhoodRow {
                        start: i,
                        seed: trial_seed(c.seed, i),
                        neighborhood: label(spec),
                        initial_energy: first,
                        final_energy: last,
                        energy_drop: first - last,
                        steps: r.steps,
                        at_minimum: r.at_minimum,
                        relaxed_energy: relaxed.final_relax_energy(),
                    })
                })
                .collect()
        })
        .collect::<csp_core::Result<_>>()?;
    let rows: Vec<NeighborhoodRow> = per_start.into_iter().flatten().collect();
    write_csv(&p.out.join("rows.csv"), &rows)?;
    let summary = p.out.join("summary.csv");
    write_csv(&summary, summarize_neighborhoods(&rows))?;
    Ok(summary)
}

pub fn mode_label(mode: SearchMode) -> &'static str {
    match mode {
        SearchMode::BasinHopping => "basin_hopping",
        SearchMode::AxesBh => "axes_bh",
    }
}

/// One relaxation of a search run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRow {
    pub mode: String,
    pub seed: u64,
    pub iteration: usize,
    pub structure_index: usize,
    pub relaxations: usize,
    pub initial_energy: f64,
    pub post_ls_energy: Option<f64>,
    pub relaxed_energy: f64,
    pub report_energy: f64,
    pub best_energy: f64,
    pub improved: bool,
    pub accepted: bool,
    pub ls_steps: usize,
    pub relax_iterations: usize,
    pub relax_converged: bool,
}

impl IterationRow {
    pub fn new(mode: SearchMode, seed: u64, r: &IterationRecord) -> IterationRow {
        IterationRow {
            mode: mode_label(mode).into(),
            seed,
            iteration: r.iteration,
            structure_index: r.structure_index,
            relaxations: r.relaxations,
            initial_energy: r.initial_energy,
            post_ls_energy: r.post_ls_energy,
            relaxed_energy: r.relaxed_energy,
            report_energy: r.report_energy,
            best_energy: r.best_energy,
            improved: r.improved,
            accepted: r.accepted,
            ls_steps: r.ls_steps,
            relax_iterations: r.relax_iterations,
            relax_converged: r.relax_converged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub mode: String,
    pub seed: u64,
    pub relaxations: usize,
    pub structures: usize,
    pub ls_steps: usize,
    pub best_energy: f64,
    /// Relaxations until the target was first reached; empty when never.
    pub reached_at: Option<usize>,
    pub stop: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSummaryRow {
    pub mode: String,
    pub runs: usize,
    pub mean_relaxations: f64,
    pub median_relaxations: f64,
    pub stdev_relaxations: f64,
    pub mean_ls_steps: f64,
    pub mean_best_energy: f64,
    pub min_best_energy: f64,
    pub reached: usize,
}

pub fn summarize_runs(rows: &[RunRow]) -> Vec<SearchSummaryRow> {
    ["basin_hopping", "axes_bh"]
        .iter()
        .filter_map(|&m| {
            let mine: Vec<&RunRow> = rows.iter().filter(|r| r.mode == m).collect();
            if mine.is_empty() {
                return None;
            }
            let relax: Vec<f64> = mine.iter().map(|r| r.relaxations as f64).collect();
            let ls: Vec<f64> = mine.iter().map(|r| r.ls_steps as f64).collect();
            let best: Vec<f64> = mine.iter().map(|r| r.best_energy).collect();
            let rs = Summary::of(&relax).expect("non-empty");
            let bs = Summary::of(&best).expect("non-empty");
            Some(SearchSummaryRow {
                mode: m.into(),
                runs: mine.len(),
                mean_relaxations: rs.mean,
                median_relaxations: rs.median,
                stdev_relaxations: rs.stdev,
                mean_ls_steps: Summary::of(&ls).expect("non-empty").mean,
                mean_best_energy: bs.mean,
                min_best_energy: bs.min,
                reached: mine.iter().filter(|r| r.reached_at.is_some()).count(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub seed: u64,
    pub basin_hopping_reached_at: Option<usize>,
    pub axes_bh_reached_at: Option<usize>,
    /// Axes reached the target in no more relaxations than plain basin hopping.
    pub axes_not_worse: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeRow {
    pub relaxation: usize,
    pub basin_hopping: f64,
    pub axes_bh: f64,
}

fn stop_label(s: StopReason) -> &'static str {
    match s {
        StopReason::Patience => "patience",
        StopReason::Budget => "budget",
        StopReason::Target => "target",
    }
}

fn search_compare(p: &Prepared) -> CliResult<PathBuf> {
    let c = &p.config;
    let delta = c.delta.unwrap_or(p.cell.min_length() / 5.0);
    let settings_for = |mode: SearchMode, i: usize| {
        let seed = trial_seed(c.seed, i);
        let mut s = match mode {
            SearchMode::BasinHopping => SearchSettings::basin_hopping(seed),
            SearchMode::AxesBh => SearchSettings::axes_bh(seed, delta),
        };
        s.patience = c.patience;
        s.max_relaxations = c.max_relaxations;
        s.relax.depth = c.energy_depth;
        s.max_ls_steps = c.max_ls_steps;
        s.max_attempts = c.max_attempts;
        s.target_energy = c.target_energy;
        s
    };
    let mut all = Vec::new();
    for mode in [SearchMode::BasinHopping, SearchMode::AxesBh] {
        for i in 0..c.count {
            all.push(settings_for(mode, i));
        }
    }
    for s in &all {
        s.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let records: Vec<RunRecord> = search::run_many(p.cell.clone(), &p.composition, &p.ff, &all)?;
    let (bh, axes) = records.split_at(c.count);

    let target = c.target_energy;
    let reach = |r: &RunRecord| target.and_then(|t| r.relaxations_to_reach(t));
    let runs: Vec<RunRow> = records
        .iter()
        .map(|r| RunRow {
            mode: mode_label(r.settings.mode).into(),
            seed: r.settings.seed,
            relaxations: r.relaxations,
            structures: r.iterations.last().map_or(0, |it| it.structure_index + 1),
            ls_steps: r.ls_steps,
            best_energy: r.best_energy,
            reached_at: reach(r),
            stop: stop_label(r.stop).into(),
        })
        .collect();
    write_csv(&p.out.join("runs.csv"), &runs)?;
    write_csv(
        &p.out.join("iterations.csv"),
        records.iter().flat_map(|r| {
            r.iterations
                .iter()
                .map(move |it| IterationRow::new(r.settings.mode, r.settings.seed, it))
        }),
    )?;
    let traces = |rs: &[RunRecord]| lower_envelope(&rs.iter().map(RunRecord::best_trace).collect::<Vec<_>>());
    let (eb, ea) = (traces(bh), traces(axes));
    let len = eb.len().max(ea.len());
    let at = |v: &[f64], i: usize| v.get(i).or(v.last()).copied().unwrap_or(f64::NAN);
    write_csv(
        &p.out.join("envelope.csv"),
        (0..len).map(|i| EnvelopeRow {
            relaxation: i + 1,
            basin_hopping: at(&eb, i),
            axes_bh: at(&ea, i),
        }),
    )?;
    if target.is_some() {
        write_csv(
            &p.out.join("pairs.csv"),
            bh.iter().zip(axes).map(|(b, a)| {
                let (tb, ta) = (reach(b), reach(a));
                PairRow {
                    seed: b.settings.seed,
                    basin_hopping_reached_at: tb,
                    axes_bh_reached_at: ta,
                    axes_not_worse: match (ta, tb) {
                        (Some(ta), Some(tb)) => ta <= tb,
                        (Some(_), None) => true,
                        (None, _) => false,
                    },
                }
            }),
        )?;
    }
    let summary = p.out.join("summary.csv");
    write_csv(&summary, summarize_runs(&runs))?;
    Ok(summary)
}
