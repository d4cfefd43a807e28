//! Fixed-cell relaxation: gradient descent on the depth-k energy with a
//! backtracking Armijo line search.
//!
//! Each trial step starts from a Barzilai–Borwein length (the plain
//! `initial_step` on the first iteration), capped so that no ion moves further
//! than `max_step`, and is halved until the Armijo condition holds. Trial
//! positions are wrapped into the cell before they are evaluated, so the
//! recorded energies are exactly those of the returned arrangement.
//!
//! Buckingham pairs with `C > 0` or opposite charges fall into an unbounded
//! well once ions pass the peak of the pair potential. Trial steps that push
//! any pair inside its peak radius are rejected (see [`CoreGuard`]); ions are
//! otherwise free to overlap their hard spheres.

use serde::{Deserialize, Serialize};

use crate::energy::{buckingham_pair, coulomb_pair, DepthEvaluator, EnergyReport};
use crate::error::{Error, Result};
use crate::lattice::{add, dot, sub, ImageShell, LatticeMatrix, Vec3};
use crate::model::{wrap3, ForceField, Species, Structure};

/// Trial steps whose largest displacement falls below this (Å) end the line search.
const MIN_DISPLACEMENT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxSettings {
    /// Depth used for the descent.
    pub depth: u32,
    /// Depth of the final reported energy.
    pub report_depth: u32,
    pub max_iters: usize,
    /// Convergence threshold on the largest gradient component (eV/Å).
    pub grad_tol: f64,
    /// Largest ion displacement of the first trial step (Å).
    pub initial_step: f64,
    /// Upper bound on any ion's displacement in one step (Å).
    pub max_step: f64,
    pub backtrack_factor: f64,
    pub armijo_c: f64,
    /// Reject steps that carry a pair past the peak of its pair potential.
    pub core_guard: bool,
}

impl Default for RelaxSettings {
    fn default() -> Self {
        RelaxSettings {
            depth: 2,
            report_depth: 6,
            max_iters: 2000,
            grad_tol: 1e-3,
            initial_step: 0.1,
            max_step: 0.5,
            backtrack_factor: 0.5,
            armijo_c: 1e-4,
            core_guard: true,
        }
    }
}

impl RelaxSettings {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidSettings(msg.into()));
        if self.depth == 0 || self.report_depth == 0 {
            return bad("relaxation depths must be at least 1");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be positive");
        }
        for (name, v) in [
            ("grad_tol", self.grad_tol),
            ("initial_step", self.initial_step),
            ("max_step", self.max_step),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(&format!("{name} must be positive"));
            }
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return bad("backtrack_factor must lie in (0, 1)");
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return bad("armijo_c must lie in (0, 1)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelaxResult {
    pub structure: Structure,
    /// Energy of `structure` at the report depth.
    pub energy: EnergyReport,
    /// Accepted steps.
    pub iterations: usize,
    pub converged: bool,
    /// Relaxation-depth energy before the first step and after every accepted one.
    pub energy_trace: Vec<f64>,
    /// Largest gradient component at the returned positions (relaxation depth).
    pub max_gradient: f64,
}

impl RelaxResult {
    /// Relaxation-depth energy of the returned structure.
    pub fn final_relax_energy(&self) -> f64 {
        *self.energy_trace.last().expect("trace holds the starting energy")
    }
}

/// Radius of the innermost barrier of the bare pair potential `V(r)`: the
/// position of its maximum on `(0, r_max]`, or zero when `V` rises all the
/// way in (no finite barrier within the scan).
pub fn barrier_radius(a: &Species, b: &Species, ff: &ForceField) -> f64 {
    const STEP: f64 = 1e-3;
    const R_MAX: f64 = 5.0;
    let coeffs = ff.lookup(&a.symbol, &b.symbol);
    let v = |r: f64| {
        coulomb_pair(a.charge as f64, b.charge as f64, r, ff.coulomb_constant).unwrap_or(f64::NAN)
            + buckingham_pair(coeffs, r).unwrap_or(f64::NAN)
    };
    let steps = (R_MAX / STEP) as usize;
    let mut best = (f64::NEG_INFINITY, 0.0);
    for i in 1..=steps {
        let r = i as f64 * STEP;
        let e = v(r);
        if e > best.0 {
            best = (e, r);
        }
    }
    if best.1 <= STEP {
        0.0
    } else {
        best.1
    }
}

/// Per-pair minimum approach distances derived from [`barrier_radius`].
#[derive(Debug, Clone)]
pub struct CoreGuard {
    site_species: Vec<usize>,
    n_species: usize,
    cores: Vec<f64>,
    translations: Vec<Vec3>,
}

impl CoreGuard {
    pub fn new(s: &Structure, ff: &ForceField) -> CoreGuard {
        let species = s.species();
        let cores = species
            .iter()
            .flat_map(|a| species.iter().map(move |b| barrier_radius(a, b, ff)))
            .collect();
        CoreGuard {
            site_species: s.sites().iter().map(|x| x.species).collect(),
            n_species: species.len(),
            cores,
            translations: ImageShell::new(1).translations(s.lattice()),
        }
    }

    fn core(&self, i: usize, j: usize) -> f64 {
        self.cores[self.site_species[i] * self.n_species + self.site_species[j]]
    }

    fn closest(&self, p: Vec3, q: Vec3) -> f64 {
        let d = sub(q, p);
        self.translations
            .iter()
            .map(|t| {
                let v = add(d, *t);
                dot(v, v)
            })
            .fold(f64::INFINITY, f64::min)
            .sqrt()
    }

    /// True unless some pair ends inside its core while also moving closer.
    pub fn admits(&self, current: &[Vec3], trial: &[Vec3]) -> bool {
        let n = current.len();
        (0..n).all(|i| {
            (i + 1..n).all(|j| {
                let core = self.core(i, j);
                if core == 0.0 {
                    return true;
                }
                let after = self.closest(trial[i], trial[j]);
                after >= core || after >= self.closest(current[i], current[j])
            })
        })
    }
}

fn max_component(g: &[Vec3]) -> f64 {
    g.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn wrap_cartesian(lattice: &LatticeMatrix, p: Vec3) -> Vec3 {
    lattice.to_cartesian(wrap3(lattice.to_fractional(p)))
}

/// Relaxes ion positions of `s` at fixed cell.
///
/// A line search that cannot find a decreasing step returns the best
/// arrangement so far with `converged == false`.
pub fn relax(s: &Structure, ff: &ForceField, settings: &RelaxSettings) -> Result<RelaxResult> {
    settings.validate()?;
    let eval = DepthEvaluator::new(s, ff, settings.depth)?;
    let guard = settings.core_guard.then(|| CoreGuard::new(s, ff));
    let lattice = *s.lattice();
    let mut x = s.cartesian();
    let (mut e, mut g) = eval.energy_gradient(&x)?;
    let mut trace = vec![e];
    let mut iterations = 0;
    let mut converged = false;
    // previous step and gradient change, for the Barzilai–Borwein length
    let mut bb: Option<f64> = None;

    loop {
        let gmax = max_component(&g);
        if gmax <= settings.grad_tol {
            converged = true;
            break;
        }
        if iterations == settings.max_iters {
            break;
        }
        let gg: f64 = g.iter().map(|v| dot(*v, *v)).sum();
        let mut alpha = bb.unwrap_or(settings.initial_step / gmax);
        alpha = alpha.min(settings.max_step / gmax);

        let mut accepted = None;
        while alpha * gmax >= MIN_DISPLACEMENT {
            let trial: Vec<Vec3> = x
                .iter()
                .zip(&g)
                .map(|(p, d)| {
                    wrap_cartesian(&lattice, [p[0] - alpha * d[0], p[1] - alpha * d[1], p[2] - alpha * d[2]])
                })
                .collect();
            let admitted = guard.as_ref().map_or(true, |g| g.admits(&x, &trial));
            // a trial that lands on another ion is rejected like any other bad step
            let energy = if admitted { eval.energy(&trial).ok() } else { None };
            if let Some(et) = energy {
                if et <= e - settings.armijo_c * alpha * gg && et.is_finite() {
                    accepted = Some((trial, alpha, et));
                    break;
                }
            }
            alpha *= settings.backtrack_factor;
        }
        let Some((trial, step, e_new)) = accepted else {
            break;
        };

        // the checked energy is kept; the gradient pass sums in another order
        let (_, g_new) = eval.energy_gradient(&trial)?;
        // displacement is -step·g; wrapping does not change the gradient difference
        let sy: f64 = g
            .iter()
            .zip(&g_new)
            .map(|(a, b)| -step * dot(*a, [b[0] - a[0], b[1] - a[1], b[2] - a[2]]))
            .sum();
        let ss = step * step * gg;
        bb = (sy > 0.0).then(|| ss / sy);

        x = trial;
        e = e_new;
        g = g_new;
        trace.push(e);
        iterations += 1;
    }

    let fracs: Vec<Vec3> = x.iter().map(|p| wrap3(lattice.to_fractional(*p))).collect();
    let structure = s.with_fractional(&fracs)?;
    let energy = DepthEvaluator::new(&structure, ff, settings.report_depth)?.report(&structure)?;
    Ok(RelaxResult {
        structure,
        energy,
        iterations,
        converged,
        energy_trace: trace,
        max_gradient: max_component(&g),
    })
}
