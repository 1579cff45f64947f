//! The notched-cube tiling of R^d.
//!
//! For a parameter `alpha` in (0,1) the basic tile set consists of d+1
//! axis-aligned boxes that tile the unit cube. The supertile is two stacked
//! unit cubes with an alpha-cube removed from a top corner; it is a
//! fundamental domain for the lattice `A Z^d`, where `A` is a banded matrix
//! with determinant `2 - alpha^d`. All identities here are checked in exact
//! arithmetic.

use crate::exact::{ExactError, Generator, GeneratorContext, ModuleScalar, Sign};
use crate::geom::{rational, ExactBox, NotchedBox};
use crate::patch::{Patch, PatchError, Placement, TileDef};
use rayon::prelude::*;
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NotchedError {
    #[error("invalid parameter: {0}")]
    Domain(String),
    #[error("supertile volume {volume} does not match the lattice determinant {det}")]
    VolumeMismatch { volume: f64, det: f64 },
    #[error("fundamental domain violated: supertile overlaps its translate by A*{v:?}")]
    Counterexample { v: Vec<i64> },
    #[error("internal inconsistency: {0}")]
    Inconsistency(String),
    #[error("no (k, w) with k <= {k_max} approximates the target within eps={eps}")]
    SearchExhausted { k_max: i64, eps: f64 },
    #[error("requested regions {first} and {second} are not disjoint")]
    RegionsOverlap { first: usize, second: usize },
    #[error("source patch {0} does not tile its slot exactly")]
    BadSource(usize),
    #[error(transparent)]
    Patch(#[from] PatchError),
    #[error(transparent)]
    Exact(#[from] ExactError),
}

/// Square matrix with exact entries, row-major.
#[derive(Debug, Clone)]
pub struct ExactMatrix {
    pub entries: Vec<Vec<ModuleScalar>>,
}

impl ExactMatrix {
    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn mul_int_vec(&self, v: &[i64]) -> Vec<ModuleScalar> {
        (0..self.dim())
            .map(|i| {
                let mut acc = self.entries[i][0].context().zero();
                for (j, &c) in v.iter().enumerate() {
                    if c != 0 {
                        acc = &acc + &self.entries[i][j].scale(&rational(c, 1));
                    }
                }
                acc
            })
            .collect()
    }

    /// Determinant by Laplace expansion along the first row.
    pub fn det(&self) -> Result<ModuleScalar, ExactError> {
        fn minor_det(rows: &[Vec<ModuleScalar>], cols: &[usize]) -> Result<ModuleScalar, ExactError> {
            let ctx = rows[0][0].context().clone();
            if cols.len() == 1 {
                return Ok(rows[rows.len() - cols.len()][cols[0]].clone());
            }
            let row = &rows[rows.len() - cols.len()];
            let mut acc = ctx.zero();
            for (pos, &c) in cols.iter().enumerate() {
                if row[c].is_zero() {
                    continue;
                }
                let rest: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
                let sub = minor_det(rows, &rest)?;
                let term = row[c].try_mul(&sub)?;
                if pos % 2 == 0 {
                    acc = &acc + &term;
                } else {
                    acc = &acc - &term;
                }
            }
            Ok(acc)
        }
        let cols: Vec<usize> = (0..self.dim()).collect();
        minor_det(&self.entries, &cols)
    }

    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        self.entries.iter().map(|r| r.iter().map(|s| s.to_f64()).collect()).collect()
    }
}

/// Inverse of a small f64 matrix by Gauss-Jordan elimination.
pub fn invert_f64(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m.iter().map(|r| {
        let mut row = r.clone();
        row.resize(2 * n, 0.0);
        row
    }).collect();
    for (i, row) in a.iter_mut().enumerate() {
        row[n + i] = 1.0;
    }
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        let p = a[col][col];
        for x in a[col].iter_mut() {
            *x /= p;
        }
        for row in 0..n {
            if row != col {
                let f = a[row][col];
                for k in 0..2 * n {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// The d+1 basic tiles at the origin.
#[derive(Debug, Clone)]
pub struct BasicTileSet {
    pub d: usize,
    pub ctx: GeneratorContext,
    pub alpha: ModuleScalar,
    pub defs: Vec<TileDef>,
}

impl BasicTileSet {
    pub fn new(d: usize, ctx: &GeneratorContext, alpha: &ModuleScalar) -> Result<Self, NotchedError> {
        if d == 0 {
            return Err(NotchedError::Domain("dimension must be at least 1".into()));
        }
        if alpha.sign()? != Sign::Positive || (&ctx.one() - alpha).sign()? != Sign::Positive {
            return Err(NotchedError::Domain("alpha must lie strictly between 0 and 1".into()));
        }
        let one = ctx.one();
        let one_minus = &one - alpha;
        let mut defs = Vec::with_capacity(d + 1);
        for i in 1..=d + 1 {
            let mut extents = Vec::with_capacity(d);
            for c in 1..=d {
                let e = if i <= d {
                    if c < i {
                        alpha.clone()
                    } else if c == i {
                        one_minus.clone()
                    } else {
                        one.clone()
                    }
                } else {
                    alpha.clone()
                };
                extents.push(e);
            }
            defs.push(TileDef { name: format!("tau{i}"), extents });
        }
        Ok(BasicTileSet { d, ctx: ctx.clone(), alpha: alpha.clone(), defs })
    }

    /// Offset of tile `i` (1-based) in the unit-cube decomposition:
    /// `1 - alpha` in the first `i-1` coordinates.
    fn cube_offset(&self, i: usize) -> Vec<ModuleScalar> {
        let one_minus = &self.ctx.one() - &self.alpha;
        (1..=self.d)
            .map(|c| if c < i { one_minus.clone() } else { self.ctx.zero() })
            .collect()
    }
}

/// The d+1 placements tiling `[0,1)^d`.
pub fn unit_cube_decomposition(tiles: &BasicTileSet) -> Vec<Placement> {
    (1..=tiles.d + 1)
        .map(|i| Placement { tile: i - 1, offset: tiles.cube_offset(i) })
        .collect()
}

/// The lattice `A Z^d` together with its fundamental supertile.
#[derive(Debug, Clone)]
pub struct SupertileLattice {
    pub d: usize,
    pub ctx: GeneratorContext,
    pub alpha: ModuleScalar,
    pub tiles: BasicTileSet,
    pub matrix: ExactMatrix,
    pub det: ModuleScalar,
    pub supertile: NotchedBox,
}

/// Builds the lattice for dimension `d`; `alpha_gen` supplies the parameter
/// (defaults elsewhere to e - 2, which is transcendental and hence valid in
/// every dimension).
pub fn build_lattice(d: usize, alpha_gen: Generator) -> Result<SupertileLattice, NotchedError> {
    let ctx = GeneratorContext::alpha_powers(alpha_gen, d.max(1) as u32)?;
    let alpha = ctx.base(0);
    let tiles = BasicTileSet::new(d, &ctx, &alpha)?;
    let one = ctx.one();
    let two = ctx.integer(2);
    let zero = ctx.zero();
    let one_minus = &one - &alpha;
    let two_minus = &two - &alpha;
    // Banded structure: ones on the diagonal, -alpha on the subdiagonal,
    // 1-alpha in the last column, 2-alpha in the corner.
    let mut entries = vec![vec![zero.clone(); d]; d];
    for i in 0..d {
        for j in 0..d {
            entries[i][j] = if j == d - 1 {
                if i == d - 1 { two_minus.clone() } else { one_minus.clone() }
            } else if i == j {
                one.clone()
            } else if i == j + 1 {
                -&alpha
            } else {
                zero.clone()
            };
        }
    }
    let matrix = ExactMatrix { entries };
    let det = matrix.det()?;
    let outer = ExactBox::new(vec![zero.clone(); d], {
        let mut hi = vec![one.clone(); d];
        hi[d - 1] = two.clone();
        hi
    });
    let notch = ExactBox::new(
        {
            let mut lo = vec![one_minus.clone(); d];
            lo[d - 1] = two_minus.clone();
            lo
        },
        {
            let mut hi = vec![one.clone(); d];
            hi[d - 1] = two.clone();
            hi
        },
    );
    let supertile = NotchedBox { outer, notch };
    Ok(SupertileLattice { d, ctx, alpha, tiles, matrix, det, supertile })
}

impl SupertileLattice {
    pub fn with_default_alpha(d: usize) -> Result<Self, NotchedError> {
        build_lattice(d, Generator::e_minus_two("alpha"))
    }

    pub fn cell_position(&self, v: &[i64]) -> Vec<ModuleScalar> {
        self.matrix.mul_int_vec(v)
    }

    pub fn cell(&self, v: &[i64]) -> NotchedBox {
        self.supertile.translate(&self.cell_position(v))
    }

    /// Basic-tile placements of the cell at `A v`, optionally lowered by an
    /// integer number of units in the last coordinate.
    pub fn cell_tiles(&self, v: &[i64], lowered: i64) -> Vec<Placement> {
        let mut pos = self.cell_position(v);
        if lowered != 0 {
            pos[self.d - 1] = &pos[self.d - 1] - &self.ctx.integer(lowered);
        }
        supertile_decomposition(self)
            .into_iter()
            .map(|p| Placement {
                tile: p.tile,
                offset: p.offset.iter().zip(&pos).map(|(a, b)| a + b).collect(),
            })
            .collect()
    }

    /// Tile dictionary shared by patches over this lattice.
    pub fn dict(&self) -> Vec<TileDef> {
        self.tiles.defs.clone()
    }

    /// Integer index range `[-k, m+k)` in every coordinate.
    pub fn index_box(&self, k: i64, m: i64) -> Vec<Vec<i64>> {
        let mut out = Vec::new();
        let mut v = vec![-k; self.d];
        loop {
            out.push(v.clone());
            let mut c = 0;
            loop {
                v[c] += 1;
                if v[c] < m + k {
                    break;
                }
                v[c] = -k;
                c += 1;
                if c == self.d {
                    return out;
                }
            }
        }
    }

    /// Cells of the periodic tiling whose closure meets the window box.
    pub fn cells_meeting(&self, window: &ExactBox) -> Result<Vec<Vec<i64>>, NotchedError> {
        enumerate_cells(self, window, 0, 0)
    }
}

/// The 2d+1 placements decomposing the supertile: the unit-cube tiles plus
/// tiles tau_1..tau_d lifted by one unit.
pub fn supertile_decomposition(lattice: &SupertileLattice) -> Vec<Placement> {
    let d = lattice.d;
    let mut out = unit_cube_decomposition(&lattice.tiles);
    for i in 1..=d {
        let mut offset = lattice.tiles.cube_offset(i);
        offset[d - 1] = &offset[d - 1] + &lattice.ctx.one();
        out.push(Placement { tile: i - 1, offset });
    }
    out
}

/// Report from the exact fundamental-domain check.
#[derive(Debug, Clone)]
pub struct FundamentalDomainReport {
    pub d: usize,
    pub radius: i64,
    pub pairs_checked: usize,
    /// Counts per disjointness case: [v_d = 0, v_d > 0 with a positive
    /// earlier coordinate, v_d > 0 with a negative earlier coordinate,
    /// v_d > 0 with all earlier coordinates zero].
    pub case_counts: [usize; 4],
    pub det: ModuleScalar,
    pub volume: ModuleScalar,
}

fn classify_case(v: &[i64]) -> usize {
    let d = v.len();
    // Normalize to v_d >= 0 by symmetry.
    let w: Vec<i64> = if v[d - 1] < 0 || (v[d - 1] == 0 && v.iter().rev().find(|&&x| x != 0).is_some_and(|&x| x < 0)) {
        v.iter().map(|x| -x).collect()
    } else {
        v.to_vec()
    };
    if w[d - 1] == 0 {
        return 0;
    }
    let earlier = &w[..d - 1];
    if earlier.iter().all(|&x| x == 0) {
        3
    } else if earlier.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0) {
        1
    } else {
        2
    }
}

/// Checks `vol(supertile) = det A` and that the supertile is disjoint from
/// all of its lattice translates with index max-norm up to `radius`.
pub fn verify_fundamental_domain(
    lattice: &SupertileLattice,
    radius: i64,
) -> Result<FundamentalDomainReport, NotchedError> {
    check_fundamental_domain(&lattice.supertile, &lattice.matrix, radius)
}

/// Same check for an arbitrary candidate domain, used as a negative control.
pub fn check_fundamental_domain(
    domain: &NotchedBox,
    matrix: &ExactMatrix,
    radius: i64,
) -> Result<FundamentalDomainReport, NotchedError> {
    let d = matrix.dim();
    let det = matrix.det()?;
    let volume = domain.volume()?;
    if !volume.eq_exact(&det) {
        return Err(NotchedError::VolumeMismatch { volume: volume.to_f64(), det: det.to_f64() });
    }
    let mut vs: Vec<Vec<i64>> = Vec::new();
    let mut v = vec![-radius; d];
    loop {
        if v.iter().any(|&x| x != 0) {
            vs.push(v.clone());
        }
        let mut c = 0;
        loop {
            v[c] += 1;
            if v[c] <= radius {
                break;
            }
            v[c] = -radius;
            c += 1;
            if c == d {
                let results: Vec<Option<Vec<i64>>> = vs
                    .par_iter()
                    .map(|v| {
                        let shifted = domain.translate(&matrix.mul_int_vec(v));
                        match domain.intersects(&shifted) {
                            Ok(true) => Some(v.clone()),
                            Ok(false) => None,
                            Err(_) => Some(v.clone()),
                        }
                    })
                    .collect();
                if let Some(bad) = results.into_iter().flatten().next() {
                    return Err(NotchedError::Counterexample { v: bad });
                }
                let mut case_counts = [0usize; 4];
                for v in &vs {
                    case_counts[classify_case(v)] += 1;
                }
                return Ok(FundamentalDomainReport {
                    d,
                    radius,
                    pairs_checked: vs.len(),
                    case_counts,
                    det,
                    volume,
                });
            }
        }
    }
}

/// One upper neighbor of the supertile: the lattice translate whose bottom
/// face meets the supertile's top in exactly one basic-tile top.
#[derive(Debug, Clone)]
pub struct UpperNeighbor {
    /// Integer vector u_j.
    pub u: Vec<i64>,
    /// A u_j.
    pub position: Vec<ModuleScalar>,
    /// 1-based index of the basic tile whose top is the shared face.
    pub tile: usize,
    /// The shared face as a horizontal box at `face_height`.
    pub face: ExactBox,
    pub face_height: ModuleScalar,
}

/// Computes the d upper neighbors and verifies exactly that their bottoms
/// partition the supertile's top into the tops of its d uppermost tiles.
pub fn upper_neighbors(lattice: &SupertileLattice) -> Result<Vec<UpperNeighbor>, NotchedError> {
    let d = lattice.d;
    let ctx = &lattice.ctx;
    let alpha = &lattice.alpha;
    let one = ctx.one();
    let two = ctx.integer(2);
    let one_minus = &one - alpha;
    let two_minus = &two - alpha;
    let mut out = Vec::with_capacity(d);
    let mut total_face_area = ctx.zero();
    for j in 1..=d {
        let mut u = vec![0i64; d];
        if j < d {
            for c in j - 1..d - 1 {
                u[c] = -1;
            }
        }
        u[d - 1] = 1;
        let position = lattice.matrix.mul_int_vec(&u);
        // Expected vertical coordinate of the neighbor's bottom face.
        let expected_height = if j < d { two.clone() } else { two_minus.clone() };
        if !position[d - 1].eq_exact(&expected_height) {
            return Err(NotchedError::Inconsistency(format!(
                "neighbor {j}: bottom at {} instead of {}",
                position[d - 1].to_f64(),
                expected_height.to_f64()
            )));
        }
        // Horizontal footprint of the neighbor's bottom face.
        let nb_lo: Vec<ModuleScalar> = position[..d - 1].to_vec();
        let nb_hi: Vec<ModuleScalar> = nb_lo.iter().map(|x| x + &one).collect();
        let face_box = ExactBox::new(nb_lo, nb_hi);
        // Horizontal footprint of the supertile piece at that height.
        let top_outer = ExactBox::new(vec![ctx.zero(); d - 1], vec![one.clone(); d - 1]);
        let notch_foot = ExactBox::new(vec![one_minus.clone(); d - 1], vec![one.clone(); d - 1]);
        let (face, tile_idx) = if j < d {
            // Height 2: top of the outer box minus the notch footprint.
            let inter = face_box
                .intersect(&top_outer)?
                .ok_or_else(|| NotchedError::Inconsistency(format!("neighbor {j}: empty face")))?;
            if d >= 2 {
                if let Some(bad) = inter.intersect(&notch_foot)? {
                    if !bad.is_empty()? {
                        return Err(NotchedError::Inconsistency(format!(
                            "neighbor {j}: face overlaps the notch footprint"
                        )));
                    }
                }
            }
            (inter, j)
        } else {
            // Height 2 - alpha: the notch floor.
            let inter = face_box
                .intersect(&notch_foot)?
                .ok_or_else(|| NotchedError::Inconsistency("last neighbor: empty face".into()))?;
            (inter, d)
        };
        // The face must equal the top of basic tile `tile_idx` in the lifted
        // layer: tau_j translated by ((1-alpha)^{j-1}, 0, ..., 0, 1).
        let mut exp_lo = Vec::with_capacity(d - 1);
        let mut exp_hi = Vec::with_capacity(d - 1);
        for c in 1..d {
            if c < tile_idx {
                exp_lo.push(one_minus.clone());
                exp_hi.push(one.clone());
            } else if c == tile_idx {
                exp_lo.push(ctx.zero());
                exp_hi.push(one_minus.clone());
            } else {
                exp_lo.push(ctx.zero());
                exp_hi.push(one.clone());
            }
        }
        let expected = ExactBox::new(exp_lo, exp_hi);
        if d >= 2 && !face.eq_exact(&expected) {
            return Err(NotchedError::Inconsistency(format!(
                "neighbor {j}: face is not the top of tau{tile_idx}"
            )));
        }
        if d >= 2 {
            total_face_area = &total_face_area + &face.volume()?;
        }
        out.push(UpperNeighbor { u, position, tile: tile_idx, face, face_height: expected_height });
    }
    // The faces partition the supertile's top: total horizontal area is 1.
    if d >= 2 && !total_face_area.eq_exact(&ctx.one()) {
        return Err(NotchedError::Inconsistency(
            "face areas do not partition the supertile top".into(),
        ));
    }
    Ok(out)
}

/// The integer vectors u_1..u_d without verification.
pub fn upper_neighbor_vectors(d: usize) -> Vec<Vec<i64>> {
    (1..=d)
        .map(|j| {
            let mut u = vec![0i64; d];
            if j < d {
                for c in j - 1..d - 1 {
                    u[c] = -1;
                }
            }
            u[d - 1] = 1;
            u
        })
        .collect()
}

/// A finite set of supertile cells.
#[derive(Debug, Clone)]
pub struct CellRegion {
    pub cells: BTreeSet<Vec<i64>>,
}

impl CellRegion {
    /// `R_{K,M}`: indices with `-k <= v_i < m + k`.
    pub fn box_region(lattice: &SupertileLattice, k: i64, m: i64) -> Self {
        CellRegion { cells: lattice.index_box(k, m).into_iter().collect() }
    }

    pub fn volume(&self, lattice: &SupertileLattice) -> Result<ModuleScalar, NotchedError> {
        let n = self.cells.len() as i64;
        Ok(lattice.det.scale(&rational(n, 1)))
    }

    /// Exact test that a half-open box lies inside the region (as a union
    /// of cells): the clipped volumes must sum to the box volume.
    pub fn contains_box(
        &self,
        lattice: &SupertileLattice,
        bx: &ExactBox,
        shift_down: i64,
    ) -> Result<bool, NotchedError> {
        let vol = bx.volume()?;
        let mut covered = lattice.ctx.zero();
        for v in &self.cells {
            let mut cell = lattice.cell(v);
            if shift_down != 0 {
                let mut t = vec![lattice.ctx.zero(); lattice.d];
                t[lattice.d - 1] = -&lattice.ctx.integer(shift_down);
                cell = cell.translate(&t);
            }
            let oo = cell.outer.intersection_volume(bx)?;
            let nn = cell.notch.intersection_volume(bx)?;
            covered = &covered + &(&oo - &nn);
        }
        Ok(covered.eq_exact(&vol))
    }
}

/// Enumerates cell indices whose (optionally lowered) supertile could meet
/// the window; conservative in f64, exact filtering is left to callers.
pub(crate) fn enumerate_cells(
    lattice: &SupertileLattice,
    window: &ExactBox,
    max_lower: i64,
    pad_cells: i64,
) -> Result<Vec<Vec<i64>>, NotchedError> {
    let d = lattice.d;
    let a = lattice.matrix.to_f64();
    let ainv = invert_f64(&a).ok_or_else(|| NotchedError::Domain("singular lattice matrix".into()))?;
    let (wlo, whi) = window.f64_bounds();
    // Padded position box: cell occupies [pos, pos + extent) with extent up
    // to 2 vertically (plus fill slabs up to 1 above), lowered up to max_lower.
    let mut plo = vec![0.0; d];
    let mut phi = vec![0.0; d];
    for i in 0..d {
        let size = if i == d - 1 { 3.0 } else { 1.0 };
        plo[i] = wlo[i] - size - 0.5;
        phi[i] = whi[i] + 0.5;
    }
    phi[d - 1] += max_lower as f64;
    // Map the corners of the padded box through A^{-1}.
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for corner in 0..(1usize << d) {
        let p: Vec<f64> = (0..d).map(|i| if corner >> i & 1 == 1 { phi[i] } else { plo[i] }).collect();
        for i in 0..d {
            let y: f64 = (0..d).map(|j| ainv[i][j] * p[j]).sum();
            lo[i] = lo[i].min(y);
            hi[i] = hi[i].max(y);
        }
    }
    let ranges: Vec<(i64, i64)> = (0..d)
        .map(|i| ((lo[i].floor() as i64) - 1 - pad_cells, (hi[i].ceil() as i64) + 1 + pad_cells))
        .collect();
    let mut out = Vec::new();
    let mut v: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    loop {
        out.push(v.clone());
        let mut c = 0;
        loop {
            v[c] += 1;
            if v[c] <= ranges[c].1 {
                break;
            }
            v[c] = ranges[c].0;
            c += 1;
            if c == d {
                return Ok(out);
            }
        }
    }
}

/// Materializes the periodic tiling over a window as a flat patch.
pub fn grid_patch(lattice: &SupertileLattice, window: &ExactBox) -> Result<Patch, NotchedError> {
    let mut placements = Vec::new();
    for v in enumerate_cells(lattice, window, 0, 0)? {
        for p in lattice.cell_tiles(&v, 0) {
            let bx = ExactBox::at_origin(&lattice.ctx, &lattice.tiles.defs[p.tile].extents).translate(&p.offset);
            if bx.overlaps(window)? {
                placements.push(p);
            }
        }
    }
    Ok(Patch { ctx: lattice.ctx.clone(), tiles: lattice.dict(), placements, region: window.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patch::validate_packing;

    #[test]
    fn determinant_matches_closed_form() {
        for d in 1..=4 {
            let lat = SupertileLattice::with_default_alpha(d).unwrap();
            // Closed form 2 - alpha^d, built directly from powers.
            let mut pow = lat.ctx.one();
            for _ in 0..d {
                pow = pow.try_mul(&lat.alpha).unwrap();
            }
            let expected = &lat.ctx.integer(2) - &pow;
            assert!(lat.det.eq_exact(&expected), "det mismatch at d={d}");
            assert!(lat.supertile.volume().unwrap().eq_exact(&expected), "volume mismatch at d={d}");
        }
    }

    #[test]
    fn d2_matrix_entries() {
        let lat = SupertileLattice::with_default_alpha(2).unwrap();
        let a = &lat.matrix.entries;
        let one_minus = &lat.ctx.one() - &lat.alpha;
        let two_minus = &lat.ctx.integer(2) - &lat.alpha;
        assert!(a[0][0].eq_exact(&lat.ctx.one()));
        assert!(a[0][1].eq_exact(&one_minus));
        assert!(a[1][0].eq_exact(&-&lat.alpha));
        assert!(a[1][1].eq_exact(&two_minus));
    }

    #[test]
    fn unit_cube_decomposition_tiles_cube() {
        for d in 1..=3 {
            let lat = SupertileLattice::with_default_alpha(d).unwrap();
            let placements = unit_cube_decomposition(&lat.tiles);
            assert_eq!(placements.len(), d + 1);
            let region = ExactBox::new(vec![lat.ctx.zero(); d], vec![lat.ctx.one(); d]);
            let patch = Patch { ctx: lat.ctx.clone(), tiles: lat.dict(), placements, region };
            let report = validate_packing(&patch).unwrap();
            assert!(report.covered_volume.eq_exact(&lat.ctx.one()));
        }
    }

    #[test]
    fn d1_unit_cube_layout() {
        let lat = SupertileLattice::with_default_alpha(1).unwrap();
        let p = unit_cube_decomposition(&lat.tiles);
        // tau1 covers [0, 1-alpha), tau2 covers [1-alpha, 1)
        assert_eq!(p[0].tile, 0);
        assert!(p[0].offset[0].is_zero());
        let one_minus = &lat.ctx.one() - &lat.alpha;
        assert!(p[1].offset[0].eq_exact(&one_minus));
    }

    #[test]
    fn supertile_decomposition_counts_and_volume() {
        for d in 1..=3 {
            let lat = SupertileLattice::with_default_alpha(d).unwrap();
            let placements = supertile_decomposition(&lat);
            assert_eq!(placements.len(), 2 * d + 1);
            let mut vol = lat.ctx.zero();
            for p in &placements {
                let bx = ExactBox::at_origin(&lat.ctx, &lat.tiles.defs[p.tile].extents);
                vol = &vol + &bx.volume().unwrap();
            }
            assert!(vol.eq_exact(&lat.det));
            // The decomposition is an exact packing of the supertile: check
            // disjointness plus cover of the outer box minus notch via the
            // outer-box region with the notch volume discounted.
            let boxes: Vec<ExactBox> = placements
                .iter()
                .map(|p| ExactBox::at_origin(&lat.ctx, &lat.tiles.defs[p.tile].extents).translate(&p.offset))
                .collect();
            for i in 0..boxes.len() {
                for j in i + 1..boxes.len() {
                    assert!(!boxes[i].overlaps(&boxes[j]).unwrap());
                }
            }
            for b in &boxes {
                // No tile enters the notch.
                assert!(b.intersection_volume(&lat.supertile.notch).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn fundamental_domain_small_radii() {
        let lat = SupertileLattice::with_default_alpha(2).unwrap();
        let report = verify_fundamental_domain(&lat, 3).unwrap();
        assert_eq!(report.pairs_checked, 48);
        assert!(report.case_counts.iter().all(|&c| c > 0));
        let lat3 = SupertileLattice::with_default_alpha(3).unwrap();
        let report3 = verify_fundamental_domain(&lat3, 2).unwrap();
        assert_eq!(report3.pairs_checked, 124);
    }

    #[test]
    fn tampered_domain_fails_volume_check() {
        let lat = SupertileLattice::with_default_alpha(2).unwrap();
        let mut bad = lat.supertile.clone();
        // Shrink the outer box: volume no longer matches the determinant.
        bad.outer.hi[0] = &bad.outer.hi[0] - &lat.alpha.scale(&rational(1, 2));
        match check_fundamental_domain(&bad, &lat.matrix, 1) {
            Err(NotchedError::VolumeMismatch { .. }) => {}
            other => panic!("expected volume mismatch, got {other:?}"),
        }
    }

    #[test]
    fn overlap_counterexample_detected() {
        // A correct-volume but wrong-shape domain must overlap a translate.
        let lat = SupertileLattice::with_default_alpha(2).unwrap();
        let det = lat.det.clone();
        let one = lat.ctx.one();
        // Box [0, det) x [0, 1): right volume, wrong shape.
        let outer = ExactBox::new(vec![lat.ctx.zero(), lat.ctx.zero()], vec![det, one.clone()]);
        let notch = ExactBox::new(vec![one.clone(), one.clone()], vec![one.clone(), one]);
        let bad = NotchedBox { outer, notch };
        match check_fundamental_domain(&bad, &lat.matrix, 2) {
            Err(NotchedError::Counterexample { .. }) => {}
            other => panic!("expected counterexample, got {other:?}"),
        }
    }

    #[test]
    fn upper_neighbors_d2_positions() {
        let lat = SupertileLattice::with_default_alpha(2).unwrap();
        let nbrs = upper_neighbors(&lat).unwrap();
        assert_eq!(nbrs.len(), 2);
        // A u_1 = (-alpha, 2)
        assert!(nbrs[0].position[0].eq_exact(&-&lat.alpha));
        assert!(nbrs[0].position[1].eq_exact(&lat.ctx.integer(2)));
        // A u_2 = (1-alpha, 2-alpha)
        let one_minus = &lat.ctx.one() - &lat.alpha;
        let two_minus = &lat.ctx.integer(2) - &lat.alpha;
        assert!(nbrs[1].position[0].eq_exact(&one_minus));
        assert!(nbrs[1].position[1].eq_exact(&two_minus));
    }

    #[test]
    fn upper_neighbors_partition_top_d3() {
        let lat = SupertileLattice::with_default_alpha(3).unwrap();
        let nbrs = upper_neighbors(&lat).unwrap();
        assert_eq!(nbrs.len(), 3);
        // Verification of the partition happens inside upper_neighbors; the
        // faces must be pairwise disjoint as an extra check.
        for i in 0..3 {
            for j in i + 1..3 {
                if nbrs[i].face_height.eq_exact(&nbrs[j].face_height) {
                    assert!(!nbrs[i].face.overlaps(&nbrs[j].face).unwrap());
                }
            }
        }
    }

    #[test]
    fn exact_cover_of_windows() {
        for d in 1..=2 {
            let lat = SupertileLattice::with_default_alpha(d).unwrap();
            let l = 3i64;
            let window = ExactBox::new(vec![lat.ctx.zero(); d], vec![lat.ctx.integer(l); d]);
            let mut covered = lat.ctx.zero();
            for v in lat.cells_meeting(&window).unwrap() {
                let cell = lat.cell(&v);
                let oo = cell.outer.intersection_volume(&window).unwrap();
                let nn = cell.notch.intersection_volume(&window).unwrap();
                covered = &covered + &(&oo - &nn);
            }
            let expected = lat.ctx.integer(l.pow(d as u32));
            assert!(covered.eq_exact(&expected), "cover failed at d={d}");
        }
    }
}
