//! Grid shifts and patch relocation in the notched-cube tiling.
//!
//! A single grid shift lowers a block of supertiles by one unit: the tiles of
//! neighboring cells covered by the lowered block form complete basic tiles
//! (the tile intersection property), and the vacated slab above the block
//! decomposes into height-1 prisms over basic-tile tops, each filled by one
//! tile `tau_i` (i < d) or by `tau_d` with `tau_{d+1}` stacked on top.
//!
//! Composing k shifts yields a ring-graded tiling: cells at ring distance r
//! from the block are lowered by `max(0, k - r)` units. Vertically adjacent
//! cells then differ by at most one unit, so every interface is either flush,
//! a one-unit prism gap (filled as above), or a one-unit dip (deleting the
//! covered basic tiles). The construction is a pure function of the cell
//! index, which keeps far-away cells untouched and lets windows of the
//! result be materialized on demand.

use crate::exact::ModuleScalar;
use crate::geom::ExactBox;
use crate::notched::{
    enumerate_cells, invert_f64, supertile_decomposition, upper_neighbor_vectors, CellRegion,
    NotchedError, SupertileLattice,
};
use crate::patch::{Patch, Placement};

/// A tiling equal to the periodic tiling outside a bounded zone, with a
/// grid block lowered by `k` units at its core.
#[derive(Debug, Clone)]
pub struct RingShiftTiling {
    pub lattice: SupertileLattice,
    /// Integer anchor of the block: block cells are `w_idx + [0, m)^d`.
    pub w_idx: Vec<i64>,
    pub m: i64,
    pub k: i64,
}

impl RingShiftTiling {
    pub fn new(lattice: SupertileLattice, w_idx: Vec<i64>, m: i64, k: i64) -> Self {
        assert!(m >= 1 && k >= 0);
        assert_eq!(w_idx.len(), lattice.d);
        RingShiftTiling { lattice, w_idx, m, k }
    }

    /// Ring distance of a cell from the block in the index max-metric.
    pub fn ring(&self, v: &[i64]) -> i64 {
        v.iter()
            .zip(&self.w_idx)
            .map(|(&x, &w)| {
                let r = x - w;
                (-r).max(r - self.m + 1).max(0)
            })
            .max()
            .unwrap_or(0)
    }

    /// How many units the cell at `v` is lowered.
    pub fn lowering(&self, v: &[i64]) -> i64 {
        (self.k - self.ring(v)).max(0)
    }

    pub fn is_block_cell(&self, v: &[i64]) -> bool {
        self.ring(v) == 0
    }

    /// Cell indices outside of which the tiling equals the periodic tiling.
    pub fn active_index_bounds(&self) -> (Vec<i64>, Vec<i64>) {
        let lo = self.w_idx.iter().map(|w| w - self.k - 1).collect();
        let hi = self.w_idx.iter().map(|w| w + self.m + self.k + 1).collect();
        (lo, hi)
    }

    /// Body tiles (the cell's basic tiles minus those covered by dipping
    /// upper neighbors) and fill tiles (prisms over exposed top faces).
    pub fn cell_tiles_parts(&self, v: &[i64]) -> (Vec<Placement>, Vec<Placement>) {
        let lat = &self.lattice;
        let d = lat.d;
        let m_v = self.lowering(v);
        let decomposition = supertile_decomposition(lat);
        let mut keep = vec![true; decomposition.len()];
        let mut fills: Vec<Placement> = Vec::new();
        let ctx = &lat.ctx;
        let one = ctx.one();
        let alpha = &lat.alpha;
        let one_minus = &one - alpha;
        if m_v != 0 || self.k > 0 {
            for (j, u) in upper_neighbor_vectors(d).into_iter().enumerate() {
                let n: Vec<i64> = v.iter().zip(&u).map(|(a, b)| a + b).collect();
                let m_n = self.lowering(&n);
                debug_assert!((m_n - m_v).abs() <= 1, "adjacent lowerings must differ by at most 1");
                let tile_j = j + 1; // 1-based basic tile index
                if m_n == m_v + 1 {
                    // The neighbor dips one unit into this cell: it covers
                    // the lifted tau_j (and for j = d also the cube corner).
                    keep[d + 1 + j] = false;
                    if tile_j == d {
                        keep[d] = false;
                    }
                } else if m_n == m_v - 1 {
                    // One-unit gap above the tau_j top face.
                    let mut base: Vec<ModuleScalar> =
                        (1..=d).map(|c| if c < tile_j { one_minus.clone() } else { ctx.zero() }).collect();
                    if tile_j < d {
                        base[d - 1] = ctx.integer(2);
                        fills.push(Placement { tile: tile_j - 1, offset: base });
                    } else {
                        base[d - 1] = &ctx.integer(2) - alpha;
                        fills.push(Placement { tile: d - 1, offset: base.clone() });
                        let mut upper = base;
                        upper[d - 1] = &upper[d - 1] + &one_minus;
                        fills.push(Placement { tile: d, offset: upper });
                    }
                }
            }
        }
        let mut pos = lat.cell_position(v);
        if m_v != 0 {
            pos[d - 1] = &pos[d - 1] - &ctx.integer(m_v);
        }
        let shift = |p: &Placement| Placement {
            tile: p.tile,
            offset: p.offset.iter().zip(&pos).map(|(a, b)| a + b).collect(),
        };
        let body = decomposition
            .iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(p, _)| shift(p))
            .collect();
        let fills = fills.iter().map(|p| shift(p)).collect();
        (body, fills)
    }

    pub fn cell_tiles(&self, v: &[i64]) -> Vec<Placement> {
        let (mut body, mut fills) = self.cell_tiles_parts(v);
        body.append(&mut fills);
        body
    }

    /// All tiles whose closure meets the window.
    pub fn tiles_in(&self, window: &ExactBox) -> Result<Vec<Placement>, NotchedError> {
        let mut placements = Vec::new();
        for v in enumerate_cells(&self.lattice, window, self.k, 0)? {
            for p in self.cell_tiles(&v) {
                let bx = ExactBox::at_origin(&self.lattice.ctx, &self.lattice.tiles.defs[p.tile].extents)
                    .translate(&p.offset);
                if bx.overlaps(window)? {
                    placements.push(p);
                }
            }
        }
        Ok(placements)
    }

    /// Materializes the window as a flat patch.
    pub fn patch_in(&self, window: &ExactBox) -> Result<Patch, NotchedError> {
        Ok(Patch {
            ctx: self.lattice.ctx.clone(),
            tiles: self.lattice.dict(),
            placements: self.tiles_in(window)?,
            region: window.clone(),
        })
    }

    /// Hull box of the block cells at their lowered position.
    pub fn block_window(&self) -> Result<ExactBox, NotchedError> {
        let lat = &self.lattice;
        let d = lat.d;
        let mut lo: Option<Vec<ModuleScalar>> = None;
        let mut hi: Option<Vec<ModuleScalar>> = None;
        for v in lat.index_box(0, self.m) {
            let abs: Vec<i64> = v.iter().zip(&self.w_idx).map(|(a, b)| a + b).collect();
            let mut cell = lat.cell(&abs);
            let mut t = vec![lat.ctx.zero(); d];
            t[d - 1] = -&lat.ctx.integer(self.k);
            cell = cell.translate(&t);
            lo = Some(match lo {
                None => cell.outer.lo.clone(),
                Some(cur) => cur
                    .into_iter()
                    .zip(&cell.outer.lo)
                    .map(|(a, b)| a.min_exact(b.clone()))
                    .collect::<Result<Vec<_>, _>>()?,
            });
            hi = Some(match hi {
                None => cell.outer.hi.clone(),
                Some(cur) => cur
                    .into_iter()
                    .zip(&cell.outer.hi)
                    .map(|(a, b)| a.max_exact(b.clone()))
                    .collect::<Result<Vec<_>, _>>()?,
            });
        }
        Ok(ExactBox::new(lo.unwrap(), hi.unwrap()))
    }

    /// Block cells as a region (absolute indices).
    pub fn block_region(&self) -> CellRegion {
        let cells = self
            .lattice
            .index_box(0, self.m)
            .into_iter()
            .map(|v| v.iter().zip(&self.w_idx).map(|(a, b)| a + b).collect())
            .collect();
        CellRegion { cells }
    }

    /// Deterministic windows straddling each structurally distinct seam, for
    /// exact validation of the construction.
    pub fn seam_windows(&self) -> Result<Vec<ExactBox>, NotchedError> {
        let lat = &self.lattice;
        let d = lat.d;
        let k = self.k;
        let ctx = &lat.ctx;
        let mut out = Vec::new();
        let mut push_around = |center: Vec<f64>, half: f64| {
            let lo: Vec<ModuleScalar> = center
                .iter()
                .map(|&c| ctx.constant(crate::geom::rational(((c - half) * 64.0).floor() as i64, 64)))
                .collect();
            let hi: Vec<ModuleScalar> = center
                .iter()
                .map(|&c| ctx.constant(crate::geom::rational(((c + half) * 64.0).ceil() as i64, 64)))
                .collect();
            out.push(ExactBox::new(lo, hi));
        };
        let a = lat.matrix.to_f64();
        let pos = |v: &[i64], lower: i64| -> Vec<f64> {
            let mut p: Vec<f64> = (0..d)
                .map(|i| (0..d).map(|j| a[i][j] * v[j] as f64).sum())
                .collect();
            p[d - 1] -= lower as f64;
            p
        };
        let block0: Vec<i64> = self.w_idx.clone();
        // Block bottom and top.
        push_around(pos(&block0, k), 2.5);
        let mut top = pos(&block0, k);
        top[d - 1] += 2.0 * self.m as f64;
        push_around(top, 2.5);
        // Lateral seams at a few rings.
        for ring in [1, (k / 2).max(1), k.max(1)] {
            let mut v = block0.clone();
            v[0] += self.m + ring;
            push_around(pos(&v, (k - ring).max(0)), 2.5);
            let mut v = block0.clone();
            v[0] -= ring;
            push_around(pos(&v, (k - ring).max(0)), 2.5);
        }
        // A corner of the active zone and the far field.
        let mut v = block0.clone();
        for c in v.iter_mut() {
            *c -= (k / 2).max(1);
        }
        push_around(pos(&v, 0), 2.5);
        let mut v = block0.clone();
        v[0] += self.m + k + 3;
        push_around(pos(&v, 0), 2.0);
        Ok(out)
    }
}

/// Result of one grid shift: the block `w + [0,M)^d` lowered one unit.
#[derive(Debug)]
pub struct GridShift {
    pub tiling: RingShiftTiling,
    /// Materialization over the hull of the modified zone.
    pub patch: Patch,
}

/// Shifts the grid block at `w = A * w_idx` down one unit, filling the gap
/// with basic tiles.
pub fn grid_shift(lattice: &SupertileLattice, m: i64, w_idx: &[i64]) -> Result<GridShift, NotchedError> {
    let tiling = RingShiftTiling::new(lattice.clone(), w_idx.to_vec(), m, 1);
    let window = hull_of_cells(lattice, &tiling.modified_cells())?;
    let patch = tiling.patch_in(&window)?;
    Ok(GridShift { tiling, patch })
}

impl RingShiftTiling {
    /// Cells whose content can differ from the periodic tiling.
    pub fn modified_cells(&self) -> Vec<Vec<i64>> {
        let (lo, hi) = self.active_index_bounds();
        let mut out = Vec::new();
        let mut v = lo.clone();
        loop {
            out.push(v.clone());
            let mut c = 0;
            loop {
                v[c] += 1;
                if v[c] < hi[c] {
                    break;
                }
                v[c] = lo[c];
                c += 1;
                if c == self.lattice.d {
                    return out;
                }
            }
        }
    }
}

pub(crate) fn hull_of_cells(
    lattice: &SupertileLattice,
    cells: &[Vec<i64>],
) -> Result<ExactBox, NotchedError> {
    let mut lo: Option<Vec<ModuleScalar>> = None;
    let mut hi: Option<Vec<ModuleScalar>> = None;
    for v in cells {
        let cell = lattice.cell(v);
        lo = Some(match lo {
            None => cell.outer.lo.clone(),
            Some(cur) => cur
                .into_iter()
                .zip(&cell.outer.lo)
                .map(|(a, b)| a.min_exact(b.clone()))
                .collect::<Result<Vec<_>, _>>()?,
        });
        hi = Some(match hi {
            None => cell.outer.hi.clone(),
            Some(cur) => cur
                .into_iter()
                .zip(&cell.outer.hi)
                .map(|(a, b)| a.max_exact(b.clone()))
                .collect::<Result<Vec<_>, _>>()?,
        });
    }
    Ok(ExactBox::new(lo.unwrap(), hi.unwrap()))
}

/// A relocation: a grid patch approximating the target within `eps`.
#[derive(Debug)]
pub struct Relocation {
    /// Achieved position `u = A w - k e_d`.
    pub u: Vec<f64>,
    pub k: i64,
    pub w_idx: Vec<i64>,
    pub tiling: RingShiftTiling,
    /// Materialization of a window around the relocated block.
    pub patch: Patch,
}

/// Searches for `k` and `w in A Z^d` with `|target - (A w - k e_d)| < eps`:
/// for each k in turn, rounds `A^{-1}(target + k e_d)` to the nearest
/// integer vector.
pub fn relocate_search(
    lattice: &SupertileLattice,
    target: &[f64],
    eps: f64,
    k_max: i64,
) -> Result<(i64, Vec<i64>, Vec<f64>, f64), NotchedError> {
    let d = lattice.d;
    let a = lattice.matrix.to_f64();
    let ainv = invert_f64(&a).ok_or_else(|| NotchedError::Domain("singular matrix".into()))?;
    for k in 0..=k_max {
        let mut t = target.to_vec();
        t[d - 1] += k as f64;
        let w: Vec<i64> = (0..d)
            .map(|i| (0..d).map(|j| ainv[i][j] * t[j]).sum::<f64>().round() as i64)
            .collect();
        let mut u: Vec<f64> = (0..d)
            .map(|i| (0..d).map(|j| a[i][j] * w[j] as f64).sum())
            .collect();
        u[d - 1] -= k as f64;
        let dist = target
            .iter()
            .zip(&u)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        if dist < eps {
            return Ok((k, w, u, dist));
        }
    }
    Err(NotchedError::SearchExhausted { k_max, eps })
}

/// Builds the tiling with a grid patch near `target`: equal to the periodic
/// tiling away from the descent zone, with the block `R_M` placed at
/// `u = A w - k e_d`, `|target - u| < eps`.
pub fn relocate_patch(
    lattice: &SupertileLattice,
    target: &[f64],
    m: i64,
    eps: f64,
    k_max: i64,
) -> Result<Relocation, NotchedError> {
    let (k, w_idx, u, _dist) = relocate_search(lattice, target, eps, k_max)?;
    let tiling = RingShiftTiling::new(lattice.clone(), w_idx.clone(), m, k);
    let window = tiling.block_window()?;
    // Pad by one unit to include the seams around the block.
    let ctx = &lattice.ctx;
    let pad = ctx.one();
    let window = ExactBox::new(
        window.lo.iter().map(|x| x - &pad).collect(),
        window.hi.iter().map(|x| x + &pad).collect(),
    );
    let patch = tiling.patch_in(&window)?;
    Ok(Relocation { u, k, w_idx, tiling, patch })
}

/// One relocation request: place a patch tiling the slot `R_M` near `target`.
#[derive(Debug, Clone)]
pub struct RelocationRequest {
    pub target: Vec<f64>,
    pub m: i64,
    /// Placements tiling the region `R(R_M)` exactly, in slot coordinates
    /// (the slot anchored at the origin). `None` keeps the grid content.
    pub source: Option<Patch>,
}

#[derive(Debug)]
pub struct MultiRelocation {
    pub lattice: SupertileLattice,
    pub parts: Vec<(Relocation, Option<Patch>)>,
}

/// Relocates several patches simultaneously. The requests' active zones must
/// be pairwise disjoint; each source patch must tile its slot exactly.
pub fn relocate_multi(
    lattice: &SupertileLattice,
    requests: &[RelocationRequest],
    eps: f64,
    k_max: i64,
) -> Result<MultiRelocation, NotchedError> {
    let mut parts = Vec::new();
    for (i, req) in requests.iter().enumerate() {
        let rel = relocate_patch(lattice, &req.target, req.m, eps, k_max)?;
        if let Some(src) = &req.source {
            let slot = CellRegion::box_region(lattice, 0, req.m);
            let vol = slot.volume(lattice)?;
            let mut covered = lattice.ctx.zero();
            let mut boxes = Vec::new();
            for (pi, _) in src.placements.iter().enumerate() {
                let bx = src.placement_box(pi)?;
                if !slot.contains_box(lattice, &bx, 0)? {
                    return Err(NotchedError::BadSource(i));
                }
                covered = &covered + &bx.volume()?;
                boxes.push(bx);
            }
            if !covered.eq_exact(&vol) {
                return Err(NotchedError::BadSource(i));
            }
            for a in 0..boxes.len() {
                for b in a + 1..boxes.len() {
                    if boxes[a].overlaps(&boxes[b])? {
                        return Err(NotchedError::BadSource(i));
                    }
                }
            }
        }
        parts.push((rel, req.source.clone()));
    }
    // Active zones must be pairwise disjoint (conservative hull check).
    let hulls: Vec<(Vec<f64>, Vec<f64>)> = parts
        .iter()
        .map(|(rel, _)| {
            let cells = rel.tiling.modified_cells();
            let hull = hull_of_cells(lattice, &cells)?;
            let (mut lo, hi) = hull.f64_bounds();
            // Account for the downward sweep of the block.
            lo[lattice.d - 1] -= rel.k as f64;
            Ok((lo, hi))
        })
        .collect::<Result<Vec<_>, NotchedError>>()?;
    for i in 0..hulls.len() {
        for j in i + 1..hulls.len() {
            let disjoint = (0..lattice.d)
                .any(|c| hulls[i].1[c] <= hulls[j].0[c] || hulls[j].1[c] <= hulls[i].0[c]);
            if !disjoint {
                return Err(NotchedError::RegionsOverlap { first: i, second: j });
            }
        }
    }
    Ok(MultiRelocation { lattice: lattice.clone(), parts })
}

impl MultiRelocation {
    /// Exact offset of a relocation's slot: `A w - k e_d`.
    fn slot_offset(&self, rel: &Relocation) -> Vec<ModuleScalar> {
        let lat = &self.lattice;
        let mut off = lat.cell_position(&rel.w_idx);
        off[lat.d - 1] = &off[lat.d - 1] - &lat.ctx.integer(rel.k);
        off
    }

    pub fn tiles_in(&self, window: &ExactBox) -> Result<Vec<Placement>, NotchedError> {
        let lat = &self.lattice;
        let k_max = self.parts.iter().map(|(r, _)| r.k).max().unwrap_or(0);
        let mut placements = Vec::new();
        for v in enumerate_cells(lat, window, k_max, 0)? {
            // A cell belongs to at most one active zone.
            let mut owner: Option<&(Relocation, Option<Patch>)> = None;
            for part in &self.parts {
                let (lo, hi) = part.0.tiling.active_index_bounds();
                if v.iter().zip(&lo).zip(&hi).all(|((x, l), h)| l <= x && x < h) {
                    owner = Some(part);
                    break;
                }
            }
            let tiles = match owner {
                None => lat.cell_tiles(&v, 0),
                Some((rel, source)) => {
                    if source.is_some() && rel.tiling.is_block_cell(&v) {
                        // Body replaced by the source; keep the fills.
                        let (_, fills) = rel.tiling.cell_tiles_parts(&v);
                        fills
                    } else {
                        rel.tiling.cell_tiles(&v)
                    }
                }
            };
            for p in tiles {
                let bx = ExactBox::at_origin(&lat.ctx, &lat.tiles.defs[p.tile].extents).translate(&p.offset);
                if bx.overlaps(window)? {
                    placements.push(p);
                }
            }
        }
        // Source content, translated into its slot.
        for (rel, source) in &self.parts {
            if let Some(src) = source {
                let off = self.slot_offset(rel);
                for (pi, p) in src.placements.iter().enumerate() {
                    let bx = src.placement_box(pi)?.translate(&off);
                    if bx.overlaps(window)? {
                        placements.push(Placement {
                            tile: p.tile,
                            offset: p.offset.iter().zip(&off).map(|(a, b)| a + b).collect(),
                        });
                    }
                }
            }
        }
        Ok(placements)
    }

    pub fn patch_in(&self, window: &ExactBox) -> Result<Patch, NotchedError> {
        Ok(Patch {
            ctx: self.lattice.ctx.clone(),
            tiles: self.lattice.dict(),
            placements: self.tiles_in(window)?,
            region: window.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::notched::grid_patch;
    use crate::patch::validate_packing;

    #[test]
    fn grid_shift_d1_is_valid_and_local() {
        let lat = SupertileLattice::with_default_alpha(1).unwrap();
        let shift = grid_shift(&lat, 1, &[0]).unwrap();
        validate_packing(&shift.patch).unwrap();
        // Far away the tiling is the grid.
        let ctx = &lat.ctx;
        let far = ExactBox::new(vec![ctx.integer(9)], vec![ctx.integer(12)]);
        let ours = shift.tiling.patch_in(&far).unwrap();
        let grid = grid_patch(&lat, &far).unwrap();
        assert!(ours.same_tiles_on(&grid, &far).unwrap());
    }

    #[test]
    fn grid_shift_d2_valid_block_and_exterior() {
        let lat = SupertileLattice::with_default_alpha(2).unwrap();
        for m in [1i64, 2] {
            let shift = grid_shift(&lat, m, &[0, 0]).unwrap();
            validate_packing(&shift.patch).unwrap();
            // Block content equals the grid block lowered one unit.
            let tiling = &shift.tiling;
            let mut expected = Vec::new();
            for v in lat.index_box(0, m) {
                expected.extend(lat.cell_tiles(&v, 1));
            }
            let window = tiling.block_window().unwrap();
            let blk_region = tiling.block_region();
            let ours: Vec<Placement> = tiling
                .tiles_in(&window)
                .unwrap()
                .into_iter()
                .filter(|p| {
                    let bx = ExactBox::at_origin(&lat.ctx, &lat.tiles.defs[p.tile].extents)
                        .translate(&p.offset);
                    blk_region.contains_box(&lat, &bx, 1).unwrap()
                })
                .collect();
            let key = |ps: &[Placement]| {
                let mut v: Vec<String> = ps
                    .iter()
                    .map(|p| {
                        let mut s = format!("{}!", p.tile);
                        for c in &p.offset {
                            s.push_str(&c.value_key());
                        }
                        s
                    })
                    .collect();
                v.sort();
                v
            };
            assert_eq!(key(&ours), key(&expected), "block content mismatch at m={m}");
        }
    }

    #[test]
    fn grid_shift_d3_valid() {
        let lat = SupertileLattice::with_default_alpha(3).unwrap();
        let shift = grid_shift(&lat, 1, &[0, 0, 0]).unwrap();
        validate_packing(&shift.patch).unwrap();
    }

    #[test]
    fn deep_shift_seams_are_valid_d2() {
        let lat = SupertileLattice::with_default_alpha(2).unwrap();
        for k in [2i64, 3, 7, 20] {
            let tiling = RingShiftTiling::new(lat.clone(), vec![0, 0], 1, k);
            for w in tiling.seam_windows().unwrap() {
                let patch = tiling.patch_in(&w).unwrap();
                validate_packing(&patch)
                    .unwrap_or_else(|e| panic!("seam window failed at k={k}: {e}"));
            }
        }
    }

    #[test]
    fn deep_shift_seams_are_valid_d1_and_d3() {
        let lat1 = SupertileLattice::with_default_alpha(1).unwrap();
        let t1 = RingShiftTiling::new(lat1, vec![0], 1, 11);
        for w in t1.seam_windows().unwrap() {
            validate_packing(&t1.patch_in(&w).unwrap()).unwrap();
        }
        let lat3 = SupertileLattice::with_default_alpha(3).unwrap();
        let t3 = RingShiftTiling::new(lat3, vec![0, 0, 0], 1, 4);
        for w in t3.seam_windows().unwrap() {
            validate_packing(&t3.patch_in(&w).unwrap()).unwrap();
        }
    }

    #[test]
    fn relocate_lattice_point_needs_no_shift() {
        let lat = SupertileLattice::with_default_alpha(2).unwrap();
        let w = lat.cell_position(&[3, -2]);
        let target: Vec<f64> = w.iter().map(|s| s.to_f64()).collect();
        let rel = relocate_patch(&lat, &target, 1, 1e-6, 100).unwrap();
        assert_eq!(rel.k, 0);
        assert_eq!(rel.w_idx, vec![3, -2]);
    }

    #[test]
    fn relocate_generic_target() {
        let lat = SupertileLattice::with_default_alpha(2).unwrap();
        // Independent search oracle: scan k directly.
        let target = [0.35, 0.60];
        let eps = 0.1;
        let a = lat.matrix.to_f64();
        let ainv = invert_f64(&a).unwrap();
        let mut oracle: Option<(i64, Vec<i64>)> = None;
        for k in 0..=10_000i64 {
            let t = [target[0], target[1] + k as f64];
            let w: Vec<i64> = (0..2)
                .map(|i| (0..2).map(|j| ainv[i][j] * t[j]).sum::<f64>().round() as i64)
                .collect();
            let u = [
                a[0][0] * w[0] as f64 + a[0][1] * w[1] as f64,
                a[1][0] * w[0] as f64 + a[1][1] * w[1] as f64 - k as f64,
            ];
            let dist = ((target[0] - u[0]).powi(2) + (target[1] - u[1]).powi(2)).sqrt();
            if dist < eps {
                oracle = Some((k, w));
                break;
            }
        }
        let (ok, ow) = oracle.expect("oracle must find an approximation");
        let rel = relocate_patch(&lat, &target, 1, eps, 10_000).unwrap();
        assert_eq!(rel.k, ok);
        assert_eq!(rel.w_idx, ow);
        let dist = ((target[0] - rel.u[0]).powi(2) + (target[1] - rel.u[1]).powi(2)).sqrt();
        assert!(dist < eps);
        validate_packing(&rel.patch).unwrap();
    }

    #[test]
    fn relocate_huge_eps_is_k0() {
        let lat = SupertileLattice::with_default_alpha(2).unwrap();
        let rel = relocate_patch(&lat, &[0.4, 0.9], 1, 4.0, 10).unwrap();
        assert_eq!(rel.k, 0);
    }

    #[test]
    fn multi_relocation_disjoint_and_overlap() {
        let lat = SupertileLattice::with_default_alpha(2).unwrap();
        let far = vec![
            RelocationRequest { target: vec![0.3, 0.4], m: 1, source: None },
            RelocationRequest { target: vec![200.0, 180.0], m: 1, source: None },
        ];
        let multi = relocate_multi(&lat, &far, 0.5, 2_000).unwrap();
        for (rel, _) in &multi.parts {
            let w = rel.tiling.block_window().unwrap();
            validate_packing(&multi.patch_in(&w).unwrap()).unwrap();
        }
        let near = vec![
            RelocationRequest { target: vec![0.3, 0.4], m: 1, source: None },
            RelocationRequest { target: vec![0.9, 1.1], m: 1, source: None },
        ];
        match relocate_multi(&lat, &near, 0.5, 2_000) {
            Err(NotchedError::RegionsOverlap { .. }) => {}
            other => panic!("expected overlap error, got {other:?}"),
        }
    }

    #[test]
    fn multi_relocation_with_source_patch() {
        let lat = SupertileLattice::with_default_alpha(2).unwrap();
        // Source: the grid content of the slot R_1 itself.
        let mut placements = Vec::new();
        for v in lat.index_box(0, 1) {
            placements.extend(lat.cell_tiles(&v, 0));
        }
        let slot_hull = hull_of_cells(&lat, &lat.index_box(0, 1)).unwrap();
        let source = Patch { ctx: lat.ctx.clone(), tiles: lat.dict(), placements, region: slot_hull };
        let reqs = vec![RelocationRequest { target: vec![5.0, 7.0], m: 1, source: Some(source) }];
        let multi = relocate_multi(&lat, &reqs, 0.25, 5_000).unwrap();
        let (rel, _) = &multi.parts[0];
        let w = rel.tiling.block_window().unwrap();
        validate_packing(&multi.patch_in(&w).unwrap()).unwrap();
    }
}
