//! Buckingham–Coulomb pair terms and the depth-k lattice energy.
//!
//! The depth-k energy of a cell with sites `1..n` sums, for every site `i`,
//! the interaction with every ion in the `(2k+1)³` block of cells centred on
//! the unit cell, except `i` itself:
//!
//! ```text
//! E_k = Σᵢ Σ_{(j, o) ∈ D(k), (j, o) ≠ (i, 0)} [ BE(i, j + o) + CE(i, j + o) ]
//! ```
//!
//! Every pair is visited from both endpoints, so `E_k` is twice the usual
//! per-cell pair energy. [`Convention::Conventional`] halves it.
//!
//! The block is built from whole cells of the stored (wrapped) arrangement,
//! so for cells with a net dipole the value depends on which periodic image of
//! each ion sits in the central cell. Moving a single ion by a lattice vector
//! changes `E_k`; a rigid translation that wraps no ion does not.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{add, dot, sub, ImageShell, LatticeMatrix, Vec3};
use crate::model::{Buckingham, ForceField, Structure};

/// Pair distances below this (Å) are treated as a collision.
pub const SINGULAR_DISTANCE: f64 = 1e-9;

/// Energies closer than this (eV) compare as equal.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convention {
    /// Both endpoints of every pair are counted.
    #[default]
    Literal,
    /// Each pair counted once (half the literal value).
    Conventional,
}

impl Convention {
    fn scale(self) -> f64 {
        match self {
            Convention::Literal => 1.0,
            Convention::Conventional => 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub total: f64,
    pub per_ion: f64,
    pub depth: u32,
    pub coulomb_part: f64,
    pub buckingham_part: f64,
}

impl EnergyReport {
    fn new(coulomb: f64, buckingham: f64, depth: u32, ions: usize) -> EnergyReport {
        let total = coulomb + buckingham;
        EnergyReport {
            total,
            per_ion: total / ions as f64,
            depth,
            coulomb_part: coulomb,
            buckingham_part: buckingham,
        }
    }
}

/// `constant · qᵢ·qⱼ / d`.
pub fn coulomb_pair(qi: f64, qj: f64, d: f64, constant: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::InvalidSettings(format!("distance {d} must be positive")));
    }
    Ok(constant * qi * qj / d)
}

/// `A·exp(−d/ρ) − C/d⁶`.
pub fn buckingham_pair(coeffs: Buckingham, d: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::InvalidSettings(format!("distance {d} must be positive")));
    }
    if !(coeffs.rho > 0.0) {
        return Err(Error::InvalidSettings(format!("rho {} must be positive", coeffs.rho)));
    }
    Ok(coeffs.a * (-d / coeffs.rho).exp() - coeffs.c / d.powi(6))
}

#[derive(Debug, Clone, Copy)]
struct PairCoeffs {
    qq: f64,
    a: f64,
    inv_rho: f64,
    c: f64,
}

/// Precomputed depth-k energy model for one species table and cell.
///
/// Energies are functions of Cartesian positions in the cell's frame, so the
/// same evaluator serves every arrangement of the same composition.
#[derive(Debug, Clone)]
pub struct DepthEvaluator {
    depth: u32,
    convention: Convention,
    lattice: LatticeMatrix,
    offsets: Vec<[i32; 3]>,
    translations: Vec<Vec3>,
    zero: usize,
    site_species: Vec<usize>,
    n_species: usize,
    coeffs: Vec<PairCoeffs>,
}

impl DepthEvaluator {
    pub fn new(s: &Structure, ff: &ForceField, depth: u32) -> Result<DepthEvaluator> {
        if depth == 0 {
            return Err(Error::InvalidSettings("depth must be at least 1".into()));
        }
        let shell = ImageShell::new(depth);
        let translations = shell.translations(s.lattice());
        let zero = shell
            .offsets()
            .iter()
            .position(|o| *o == [0, 0, 0])
            .expect("shell contains the origin");
        let species = s.species();
        let n_species = species.len();
        let mut coeffs = Vec::with_capacity(n_species * n_species);
        for a in species {
            for b in species {
                let bk = ff.lookup(&a.symbol, &b.symbol);
                coeffs.push(PairCoeffs {
                    qq: ff.coulomb_constant * a.charge as f64 * b.charge as f64,
                    a: bk.a,
                    inv_rho: 1.0 / bk.rho,
                    c: bk.c,
                });
            }
        }
        Ok(DepthEvaluator {
            depth,
            convention: Convention::Literal,
            lattice: *s.lattice(),
            offsets: shell.offsets().to_vec(),
            translations,
            zero,
            site_species: s.sites().iter().map(|site| site.species).collect(),
            n_species,
            coeffs,
        })
    }

    pub fn with_convention(mut self, convention: Convention) -> DepthEvaluator {
        self.convention = convention;
        self
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    pub fn lattice(&self) -> &LatticeMatrix {
        &self.lattice
    }

    pub fn len(&self) -> usize {
        self.site_species.len()
    }

    pub fn is_empty(&self) -> bool {
        self.site_species.is_empty()
    }

    #[inline]
    fn coeffs(&self, i: usize, j: usize) -> PairCoeffs {
        self.coeffs[self.site_species[i] * self.n_species + self.site_species[j]]
    }

    /// Unscaled `(coulomb, buckingham)` sum of site `i` at `pi` with every
    /// image of site `j` at `pj`. For `i == j` the central copy is skipped.
    #[inline]
    fn pair_block(&self, i: usize, j: usize, pi: Vec3, pj: Vec3) -> Result<(f64, f64)> {
        let k = self.coeffs(i, j);
        let d = sub(pj, pi);
        let mut coul = 0.0;
        let mut buck = 0.0;
        for (idx, t) in self.translations.iter().enumerate() {
            if i == j && idx == self.zero {
                continue;
            }
            let v = add(d, *t);
            let r2 = dot(v, v);
            let r = r2.sqrt();
            if r < SINGULAR_DISTANCE {
                return Err(Error::Singularity {
                    i,
                    j,
                    offset: self.offsets[idx],
                    distance: r,
                });
            }
            coul += k.qq / r;
            if k.a != 0.0 {
                buck += k.a * (-r * k.inv_rho).exp();
            }
            if k.c != 0.0 {
                buck -= k.c / (r2 * r2 * r2);
            }
        }
        Ok((coul, buck))
    }

    /// Scaled `(coulomb, buckingham)` contribution of row `i`: its self-image
    /// block plus twice every pair with a higher-indexed site.
    fn row(&self, i: usize, cart: &[Vec3]) -> Result<(f64, f64)> {
        let (mut coul, mut buck) = self.pair_block(i, i, cart[i], cart[i])?;
        for j in i + 1..cart.len() {
            let (c, b) = self.pair_block(i, j, cart[i], cart[j])?;
            coul += 2.0 * c;
            buck += 2.0 * b;
        }
        let s = self.convention.scale();
        Ok((s * coul, s * buck))
    }

    fn check_len(&self, cart: &[Vec3]) {
        assert_eq!(cart.len(), self.site_species.len(), "position count mismatch");
    }

    /// `(coulomb, buckingham)` parts at Cartesian positions `cart`.
    pub fn parts(&self, cart: &[Vec3]) -> Result<(f64, f64)> {
        self.check_len(cart);
        let mut coul = 0.0;
        let mut buck = 0.0;
        for i in 0..cart.len() {
            let (c, b) = self.row(i, cart)?;
            coul += c;
            buck += b;
        }
        Ok((coul, buck))
    }

    /// As [`parts`](Self::parts) with rows evaluated on the rayon pool. The
    /// reduction runs in row order, so the result is bitwise identical.
    pub fn parts_parallel(&self, cart: &[Vec3]) -> Result<(f64, f64)> {
        self.check_len(cart);
        let rows = (0..cart.len())
            .into_par_iter()
            .map(|i| self.row(i, cart))
            .collect::<Result<Vec<_>>>()?;
        let mut coul = 0.0;
        let mut buck = 0.0;
        for (c, b) in rows {
            coul += c;
            buck += b;
        }
        Ok((coul, buck))
    }

    pub fn energy(&self, cart: &[Vec3]) -> Result<f64> {
        let (c, b) = self.parts(cart)?;
        Ok(c + b)
    }

    pub fn report_positions(&self, cart: &[Vec3]) -> Result<EnergyReport> {
        let (c, b) = self.parts(cart)?;
        Ok(EnergyReport::new(c, b, self.depth, cart.len()))
    }

    pub fn report(&self, s: &Structure) -> Result<EnergyReport> {
        self.report_positions(&s.cartesian())
    }

    /// Energy and its gradient with respect to each site's Cartesian position
    /// (eV/Å). All images of a site move with it.
    pub fn energy_gradient(&self, cart: &[Vec3]) -> Result<(f64, Vec<Vec3>)> {
        self.check_len(cart);
        let n = cart.len();
        let scale = self.convention.scale();
        let mut grad = vec![[0.0; 3]; n];
        let mut energy = 0.0;
        for i in 0..n {
            let (c, b) = self.pair_block(i, i, cart[i], cart[i])?;
            energy += scale * (c + b);
            for j in i + 1..n {
                let k = self.coeffs(i, j);
                let d = sub(cart[j], cart[i]);
                let mut e = 0.0;
                let mut g = [0.0; 3];
                for (idx, t) in self.translations.iter().enumerate() {
                    let v = add(d, *t);
                    let r2 = dot(v, v);
                    let r = r2.sqrt();
                    if r < SINGULAR_DISTANCE {
                        return Err(Error::Singularity {
                            i,
                            j,
                            offset: self.offsets[idx],
                            distance: r,
                        });
                    }
                    let inv_r = 1.0 / r;
                    let mut value = k.qq * inv_r;
                    let mut slope = -k.qq * inv_r * inv_r;
                    if k.a != 0.0 {
                        let ex = k.a * (-r * k.inv_rho).exp();
                        value += ex;
                        slope -= ex * k.inv_rho;
                    }
                    if k.c != 0.0 {
                        let r6 = r2 * r2 * r2;
                        value -= k.c / r6;
                        slope += 6.0 * k.c / (r6 * r);
                    }
                    e += value;
                    let f = slope * inv_r;
                    g[0] += f * v[0];
                    g[1] += f * v[1];
                    g[2] += f * v[2];
                }
                // (i, j) and (j, i) both appear in the double sum
                energy += scale * 2.0 * e;
                for a in 0..3 {
                    let w = scale * 2.0 * g[a];
                    grad[j][a] += w;
                    grad[i][a] -= w;
                }
            }
        }
        Ok((energy, grad))
    }

    /// Symmetric matrix of pair totals `P(i, j)` (scaled), with `E = Σᵢⱼ P(i, j)`.
    pub fn pair_matrix(&self, cart: &[Vec3]) -> Result<Vec<f64>> {
        self.check_len(cart);
        let n = cart.len();
        let mut m = vec![0.0; n * n];
        let scale = self.convention.scale();
        for i in 0..n {
            for j in i..n {
                let (c, b) = self.pair_block(i, j, cart[i], cart[j])?;
                let v = scale * (c + b);
                m[i * n + j] = v;
                m[j * n + i] = v;
            }
        }
        Ok(m)
    }

    /// Scaled `P(i, j)` for sites `i != j` at the given positions.
    pub fn pair_total(&self, i: usize, j: usize, pi: Vec3, pj: Vec3) -> Result<f64> {
        let (c, b) = self.pair_block(i, j, pi, pj)?;
        Ok(self.convention.scale() * (c + b))
    }
}

/// Depth-k energy of `s` (literal double sum).
pub fn depth_energy(s: &Structure, ff: &ForceField, depth: u32) -> Result<EnergyReport> {
    DepthEvaluator::new(s, ff, depth)?.report(s)
}

/// Analytic gradient of [`depth_energy`] per site, in eV/Å.
pub fn depth_energy_gradient(s: &Structure, ff: &ForceField, depth: u32) -> Result<Vec<Vec3>> {
    let (_, grad) = DepthEvaluator::new(s, ff, depth)?.energy_gradient(&s.cartesian())?;
    Ok(grad)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyOrdering {
    ALower,
    BLower,
    Tie,
}

/// Compares the depth-k energies of two arrangements of the same composition.
pub fn energy_ordering(
    a: &Structure,
    b: &Structure,
    ff: &ForceField,
    depth: u32,
) -> Result<EnergyOrdering> {
    if !a.same_composition(b) {
        return Err(Error::CompositionMismatch);
    }
    let eval = DepthEvaluator::new(a, ff, depth)?;
    let ea = eval.energy(&a.cartesian())?;
    let eb = eval.energy(&b.cartesian())?;
    Ok(compare_energies(ea, eb))
}

pub fn compare_energies(ea: f64, eb: f64) -> EnergyOrdering {
    if (ea - eb).abs() <= TIE_TOLERANCE {
        EnergyOrdering::Tie
    } else if ea < eb {
        EnergyOrdering::ALower
    } else {
        EnergyOrdering::BLower
    }
}
