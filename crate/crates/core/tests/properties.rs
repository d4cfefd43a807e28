use proptest::prelude::*;

use csp_core::search::lower_envelope;
use csp_core::{
    basin_hopping, fixtures, is_feasible, neighbor_moves, random_feasible, relax, ImageShell, NeighborhoodSpec,
    RelaxSettings, SearchSettings, Structure,
};

fn z1(seed: u64) -> Structure {
    random_feasible(fixtures::default_cubic_cell(1), &fixtures::srtio3_composition(1), seed, 100_000).unwrap()
}

fn spec_strategy() -> impl Strategy<Value = NeighborhoodSpec> {
    prop_oneof![
        (1usize..=3).prop_map(NeighborhoodSpec::k_ion_swap),
        (2usize..=5).prop_map(|g| NeighborhoodSpec::axes(fixtures::SRTIO3_LATTICE / g as f64)),
        (2usize..=3).prop_map(|g| NeighborhoodSpec::k_swap(1, fixtures::SRTIO3_LATTICE / g as f64)),
    ]
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn factorial(k: usize) -> usize {
    (1..=k).product()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn every_neighbor_is_feasible(seed in 0u64..100_000, spec in spec_strategy()) {
        let s = z1(seed);
        let shell = ImageShell::new(1);
        for mv in neighbor_moves(&s, &spec).unwrap() {
            prop_assert!(is_feasible(&mv.apply(&s), &shell), "{:?}", mv);
        }
    }

    #[test]
    fn neighborhood_order_is_deterministic(seed in 0u64..100_000, spec in spec_strategy()) {
        let s = z1(seed);
        let a: Vec<_> = neighbor_moves(&s, &spec).unwrap().collect();
        let b: Vec<_> = neighbor_moves(&s, &spec).unwrap().collect();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn neighborhood_sizes_respect_their_bounds(seed in 0u64..100_000, k in 1usize..=3, g in 2usize..=6) {
        let s = z1(seed);
        let n = s.len();
        let swaps = neighbor_moves(&s, &NeighborhoodSpec::k_ion_swap(k)).unwrap().count();
        prop_assert!(swaps <= binomial(n, k) * (factorial(k) - 1));
        let axes = neighbor_moves(&s, &NeighborhoodSpec::axes(fixtures::SRTIO3_LATTICE / g as f64)).unwrap().count();
        prop_assert!(axes <= n * (3 * g - 2) - n);
    }

    #[test]
    fn feasibility_is_translation_invariant(seed in 0u64..100_000, shift in prop::array::uniform3(-1.0f64..1.0)) {
        let s = z1(seed);
        let shell = ImageShell::new(1);
        prop_assert!(is_feasible(&s.translated(shift), &shell));
    }

    #[test]
    fn lower_envelope_is_monotone_and_merges(
        a in prop::collection::vec(prop::collection::vec(-10.0f64..0.0, 1..12), 1..5),
        b in prop::collection::vec(prop::collection::vec(-10.0f64..0.0, 1..12), 1..5),
    ) {
        let running = |t: &Vec<f64>| {
            t.iter().scan(f64::INFINITY, |m, &v| { *m = m.min(v); Some(*m) }).collect::<Vec<_>>()
        };
        let a: Vec<Vec<f64>> = a.iter().map(running).collect();
        let b: Vec<Vec<f64>> = b.iter().map(running).collect();
        let ea = lower_envelope(&a);
        let eb = lower_envelope(&b);
        let both: Vec<Vec<f64>> = a.iter().chain(&b).cloned().collect();
        let merged = lower_envelope(&both);
        prop_assert!(merged.windows(2).all(|w| w[1] <= w[0]));
        for (i, m) in merged.iter().enumerate() {
            let at = |e: &Vec<f64>| *e.get(i).or(e.last()).unwrap();
            prop_assert_eq!(*m, at(&ea).min(at(&eb)));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn relaxation_traces_never_rise(seed in 0u64..100_000) {
        let r = relax(&z1(seed), &fixtures::table6(), &RelaxSettings::default()).unwrap();
        prop_assert!(r.energy_trace.windows(2).all(|w| w[1] <= w[0]));
        prop_assert!(r.iterations <= RelaxSettings::default().max_iters);
    }

    #[test]
    fn run_records_keep_their_invariants(seed in 0u64..100_000, budget in 1usize..6, patience in 1usize..4) {
        let mut settings = SearchSettings::basin_hopping(seed);
        settings.max_relaxations = budget;
        settings.patience = patience;
        let cell = fixtures::default_cubic_cell(1);
        let r = basin_hopping(cell, &fixtures::srtio3_composition(1), &fixtures::table6(), &settings).unwrap();
        prop_assert!(r.relaxations <= budget);
        prop_assert_eq!(r.relaxations, r.iterations.len());
        prop_assert!(r.iterations.windows(2).all(|w| w[1].best_energy <= w[0].best_energy));
        prop_assert_eq!(r.best_energy, r.iterations.last().unwrap().best_energy);
    }
}
