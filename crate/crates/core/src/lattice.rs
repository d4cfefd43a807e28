//! Triclinic geometry: lattice matrix, image shells, periodic distances,
//! hard-sphere feasibility and seeded random feasible structures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Composition, Site, Structure, UnitCell};

/// Cells whose volume relative to `a·b·c` falls below this are rejected.
const MIN_RELATIVE_VOLUME: f64 = 1e-4;

/// Contact distances shorter than `ρᵢ + ρⱼ` by less than this still count as touching.
pub const FEASIBILITY_SLACK: f64 = 1e-10;

pub type Vec3 = [f64; 3];

#[inline]
pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// Column-vector lattice: `cartesian = M · fractional`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeMatrix {
    /// `rows[r][c]`; column `c` is lattice vector `a_c`.
    rows: [[f64; 3]; 3],
    inverse: [[f64; 3]; 3],
    volume: f64,
}

impl LatticeMatrix {
    /// Standard construction with a₁ along x and a₂ in the xy plane.
    pub fn from_cell(cell: &UnitCell) -> Result<LatticeMatrix> {
        let [a, b, c] = cell.lengths;
        let [alpha, beta, gamma] = cell.angles_deg;
        let (_, cos_a) = sin_cos_deg(alpha);
        let (_, cos_b) = sin_cos_deg(beta);
        let (sin_g, cos_g) = sin_cos_deg(gamma);

        let relative_volume_sq =
            1.0 - cos_a * cos_a - cos_b * cos_b - cos_g * cos_g + 2.0 * cos_a * cos_b * cos_g;
        let relative_volume = relative_volume_sq.max(0.0).sqrt();
        if relative_volume_sq <= 0.0 || relative_volume < MIN_RELATIVE_VOLUME {
            return Err(Error::DegenerateCell {
                relative_volume: if relative_volume_sq <= 0.0 { 0.0 } else { relative_volume },
            });
        }

        let cx = c * cos_b;
        let cy = c * (cos_a - cos_b * cos_g) / sin_g;
        let cz = c * relative_volume / sin_g;
        let rows = [
            [a, b * cos_g, cx],
            [0.0, b * sin_g, cy],
            [0.0, 0.0, cz],
        ];
        let volume = a * b * sin_g * cz;
        Ok(LatticeMatrix {
            rows,
            inverse: invert_upper(&rows),
            volume,
        })
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// Lattice vector `a_d` (column `d`).
    pub fn vector(&self, d: usize) -> Vec3 {
        [self.rows[0][d], self.rows[1][d], self.rows[2][d]]
    }

    pub fn rows(&self) -> &[[f64; 3]; 3] {
        &self.rows
    }

    #[inline]
    pub fn to_cartesian(&self, f: Vec3) -> Vec3 {
        let m = &self.rows;
        [
            m[0][0] * f[0] + m[0][1] * f[1] + m[0][2] * f[2],
            m[1][1] * f[1] + m[1][2] * f[2],
            m[2][2] * f[2],
        ]
    }

    #[inline]
    pub fn to_fractional(&self, r: Vec3) -> Vec3 {
        let m = &self.inverse;
        [
            m[0][0] * r[0] + m[0][1] * r[1] + m[0][2] * r[2],
            m[1][1] * r[1] + m[1][2] * r[2],
            m[2][2] * r[2],
        ]
    }

    /// Cartesian translation of an integer image offset.
    #[inline]
    pub fn offset(&self, o: [i32; 3]) -> Vec3 {
        self.to_cartesian([o[0] as f64, o[1] as f64, o[2] as f64])
    }

    /// Lengths and angles (degrees, `[alpha, beta, gamma]`) recovered from the columns.
    pub fn parameters(&self) -> ([f64; 3], [f64; 3]) {
        let v = [self.vector(0), self.vector(1), self.vector(2)];
        let l = [norm(v[0]), norm(v[1]), norm(v[2])];
        let angle = |i: usize, j: usize| (dot(v[i], v[j]) / (l[i] * l[j])).acos().to_degrees();
        (l, [angle(1, 2), angle(0, 2), angle(0, 1)])
    }
}

/// Right angles map to exact zeros so orthogonal cells get diagonal matrices.
fn sin_cos_deg(angle: f64) -> (f64, f64) {
    if angle == 90.0 {
        (1.0, 0.0)
    } else {
        angle.to_radians().sin_cos()
    }
}

fn invert_upper(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let (a, b, c) = (m[0][0], m[0][1], m[0][2]);
    let (d, e) = (m[1][1], m[1][2]);
    let f = m[2][2];
    [
        [1.0 / a, -b / (a * d), (b * e - c * d) / (a * d * f)],
        [0.0, 1.0 / d, -e / (d * f)],
        [0.0, 0.0, 1.0 / f],
    ]
}

/// Builds the lattice matrix of `cell`.
pub fn lattice_matrix(cell: &UnitCell) -> Result<LatticeMatrix> {
    LatticeMatrix::from_cell(cell)
}

/// Every integer offset with max-norm at most `depth`, in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageShell {
    depth: u32,
    offsets: Vec<[i32; 3]>,
}

impl ImageShell {
    pub fn new(depth: u32) -> ImageShell {
        let k = depth as i32;
        let mut offsets = Vec::with_capacity((2 * depth as usize + 1).pow(3));
        for a in -k..=k {
            for b in -k..=k {
                for c in -k..=k {
                    offsets.push([a, b, c]);
                }
            }
        }
        ImageShell { depth, offsets }
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn offsets(&self) -> &[[i32; 3]] {
        &self.offsets
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// Cartesian translations of the offsets for `lattice`.
    pub fn translations(&self, lattice: &LatticeMatrix) -> Vec<Vec3> {
        self.offsets.iter().map(|&o| lattice.offset(o)).collect()
    }
}

/// Distance between site `i` and the image of site `j` displaced by `offset` cells.
pub fn distance(s: &Structure, i: usize, j: usize, offset: [i32; 3]) -> f64 {
    let fi = s.sites()[i].frac;
    let fj = s.sites()[j].frac;
    let df = [
        fj[0] + offset[0] as f64 - fi[0],
        fj[1] + offset[1] as f64 - fi[1],
        fj[2] + offset[2] as f64 - fi[2],
    ];
    norm(s.lattice().to_cartesian(df))
}

/// True when no two hard spheres overlap, over every image in `shell`.
pub fn is_feasible(s: &Structure, shell: &ImageShell) -> bool {
    let cart = s.cartesian();
    let radii: Vec<f64> = (0..s.len()).map(|i| s.radius(i)).collect();
    let translations = shell.translations(s.lattice());
    (0..s.len()).all(|i| {
        (i..s.len()).all(|j| {
            let same = i == j;
            pair_clear(cart[i], cart[j], radii[i] + radii[j], same, &translations)
        })
    })
}

/// Whether `p` and every image of `q` keep at least `contact` apart.
/// With `same_site`, the zero translation is the site itself and is skipped.
#[inline]
pub(crate) fn pair_clear(p: Vec3, q: Vec3, contact: f64, same_site: bool, translations: &[Vec3]) -> bool {
    let d = sub(q, p);
    let limit = contact - FEASIBILITY_SLACK;
    translations.iter().all(|t| {
        let v = add(d, *t);
        let r2 = dot(v, v);
        if same_site && r2 == 0.0 {
            return true;
        }
        limit <= 0.0 || r2 >= limit * limit
    })
}

/// Whether site `site` at Cartesian `p` clears every site listed in `others`.
pub(crate) fn site_clear(
    p: Vec3,
    radius: f64,
    others: impl Iterator<Item = (Vec3, f64)>,
    translations: &[Vec3],
) -> bool {
    if !pair_clear(p, p, 2.0 * radius, true, translations) {
        return false;
    }
    for (q, rq) in others {
        if !pair_clear(p, q, radius + rq, false, translations) {
            return false;
        }
    }
    true
}

/// Seeded uniform rejection sampling of a depth-1 feasible structure.
pub fn random_feasible(
    cell: UnitCell,
    composition: &Composition,
    seed: u64,
    max_attempts: usize,
) -> Result<Structure> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_feasible_with(cell, composition, &mut rng, max_attempts)
}

/// As [`random_feasible`], drawing from a caller-owned generator.
///
/// Sites are placed one at a time at uniform fractional positions; a draw that
/// overlaps an already placed ion (or its own images) is rejected. Every
/// rejection counts against `max_attempts`.
pub fn random_feasible_with<R: Rng + ?Sized>(
    cell: UnitCell,
    composition: &Composition,
    rng: &mut R,
    max_attempts: usize,
) -> Result<Structure> {
    if max_attempts == 0 {
        return Err(Error::InvalidSettings("max_attempts must be at least 1".into()));
    }
    let lattice = LatticeMatrix::from_cell(&cell)?;
    let translations = ImageShell::new(1).translations(&lattice);
    let species = composition.species();
    let site_species = composition.site_species();
    if site_species.is_empty() {
        return Err(Error::EmptyStructure);
    }

    let mut placed: Vec<(Vec3, f64)> = Vec::with_capacity(site_species.len());
    let mut fracs = Vec::with_capacity(site_species.len());
    let mut rejections = 0usize;
    for &sp in &site_species {
        let radius = species[sp].radius;
        loop {
            let f: Vec3 = [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()];
            let p = lattice.to_cartesian(f);
            if site_clear(p, radius, placed.iter().copied(), &translations) {
                placed.push((p, radius));
                fracs.push(f);
                break;
            }
            rejections += 1;
            if rejections >= max_attempts {
                return Err(Error::Exhausted {
                    attempts: rejections,
                });
            }
        }
    }
    let sites = site_species
        .into_iter()
        .zip(fracs)
        .map(|(species, frac)| Site { species, frac })
        .collect();
    Structure::new(cell, species, sites)
}
