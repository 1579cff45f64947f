//! Finite patches of rectangle tilings: exact packing validation, shear
//! detection, and the combinatorial checks on boundary segments.

use crate::exact::{ExactError, GeneratorContext, ModuleScalar, Sign};
use crate::geom::{cmp_scalar, ExactBox};
use std::cmp::Ordering;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PatchError {
    #[error("placements {first} and {second} have overlapping interiors")]
    Overlap { first: usize, second: usize },
    #[error("region is not covered; witness point {witness:?}")]
    Gap { witness: Vec<String> },
    #[error("placement {0} references tile {1} outside the dictionary")]
    BadTileId(usize, usize),
    #[error("operation requires a two-tile dictionary, found {0} tiles")]
    NotTwoTiles(usize),
    #[error("operation requires dimension {expected}, patch has dimension {got}")]
    WrongDimension { expected: usize, got: usize },
    #[error(transparent)]
    Exact(#[from] ExactError),
}

/// A tile shape: named, with half-open extents from the origin.
#[derive(Debug, Clone)]
pub struct TileDef {
    pub name: String,
    pub extents: Vec<ModuleScalar>,
}

/// A translated tile.
#[derive(Debug, Clone)]
pub struct Placement {
    pub tile: usize,
    pub offset: Vec<ModuleScalar>,
}

/// A finite set of placements with a declared region of asserted legality.
#[derive(Debug, Clone)]
pub struct Patch {
    pub ctx: GeneratorContext,
    pub tiles: Vec<TileDef>,
    pub placements: Vec<Placement>,
    pub region: ExactBox,
}

impl Patch {
    pub fn dim(&self) -> usize {
        self.region.dim()
    }

    pub fn placement_box(&self, idx: usize) -> Result<ExactBox, PatchError> {
        let p = &self.placements[idx];
        let tile = self.tiles.get(p.tile).ok_or(PatchError::BadTileId(idx, p.tile))?;
        Ok(ExactBox::at_origin(&self.ctx, &tile.extents).translate(&p.offset))
    }

    pub fn boxes(&self) -> Result<Vec<ExactBox>, PatchError> {
        (0..self.placements.len()).map(|i| self.placement_box(i)).collect()
    }

    /// Translates every placement and the region by `v`.
    pub fn translate(&self, v: &[ModuleScalar]) -> Patch {
        Patch {
            ctx: self.ctx.clone(),
            tiles: self.tiles.clone(),
            placements: self
                .placements
                .iter()
                .map(|p| Placement {
                    tile: p.tile,
                    offset: p.offset.iter().zip(v).map(|(a, b)| a + b).collect(),
                })
                .collect(),
            region: self.region.translate(v),
        }
    }

    /// Placements whose closure meets the given box.
    pub fn restrict(&self, window: &ExactBox) -> Result<Patch, PatchError> {
        let mut placements = Vec::new();
        for (i, p) in self.placements.iter().enumerate() {
            if self.placement_box(i)?.overlaps(window)? {
                placements.push(p.clone());
            }
        }
        Ok(Patch { ctx: self.ctx.clone(), tiles: self.tiles.clone(), placements, region: window.clone() })
    }

    /// Exact multiset equality of placements restricted to a window:
    /// both patches must place identical tiles at identical offsets among
    /// those whose interior meets the window.
    pub fn same_tiles_on(&self, other: &Patch, window: &ExactBox) -> Result<bool, PatchError> {
        let mut mine = self.keyed_tiles_in(window)?;
        let mut theirs = other.keyed_tiles_in(window)?;
        mine.sort();
        theirs.sort();
        Ok(mine == theirs)
    }

    fn keyed_tiles_in(&self, window: &ExactBox) -> Result<Vec<(String, String)>, PatchError> {
        let mut out = Vec::new();
        for (i, p) in self.placements.iter().enumerate() {
            let b = self.placement_box(i)?;
            if b.overlaps(window)? {
                let name = self.tiles[p.tile].name.clone();
                let mut key = String::new();
                for c in &p.offset {
                    key.push_str(&c.value_key());
                    key.push(';');
                }
                out.push((name, key));
            }
        }
        Ok(out)
    }
}

/// Outcome of an exact packing check.
#[derive(Debug, Clone)]
pub struct PackingReport {
    pub placements: usize,
    pub region_volume: ModuleScalar,
    pub covered_volume: ModuleScalar,
    pub pairs_examined: usize,
}

struct ScreenedBox {
    bx: ExactBox,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

fn screened(bx: ExactBox) -> ScreenedBox {
    let d = bx.dim();
    let mut lo = Vec::with_capacity(d);
    let mut hi = Vec::with_capacity(d);
    for i in 0..d {
        lo.push(bx.lo[i].screen_bounds().0);
        hi.push(bx.hi[i].screen_bounds().1);
    }
    ScreenedBox { bx, lo, hi }
}

fn boxes_overlap(a: &ScreenedBox, b: &ScreenedBox) -> Result<bool, ExactError> {
    let d = a.bx.dim();
    // Certified disjoint when some coordinate separates the screens.
    for i in 0..d {
        if a.hi[i] < b.lo[i] || b.hi[i] < a.lo[i] {
            // Screens are conservative outer bounds; certify exactly.
            let sep = if a.hi[i] < b.lo[i] {
                (&b.bx.lo[i] - &a.bx.hi[i]).sign()? != Sign::Negative
            } else {
                (&a.bx.lo[i] - &b.bx.hi[i]).sign()? != Sign::Negative
            };
            if sep {
                return Ok(false);
            }
        }
    }
    a.bx.overlaps(&b.bx)
}

/// Exact check that placements have pairwise disjoint interiors and cover the
/// declared region.
pub fn validate_packing(patch: &Patch) -> Result<PackingReport, PatchError> {
    let n = patch.placements.len();
    let mut sb: Vec<(usize, ScreenedBox)> = Vec::with_capacity(n);
    for i in 0..n {
        sb.push((i, screened(patch.placement_box(i)?)));
    }
    // Sweep along coordinate 0.
    sb.sort_by(|a, b| a.1.lo[0].partial_cmp(&b.1.lo[0]).unwrap_or(Ordering::Equal));
    let mut pairs = 0usize;
    for i in 0..n {
        let (idx_i, ref bi) = sb[i];
        for item in sb.iter().skip(i + 1) {
            let (idx_j, ref bj) = *item;
            if bj.lo[0] > bi.hi[0] {
                break;
            }
            pairs += 1;
            if boxes_overlap(bi, &bj)? {
                let (first, second) = (idx_i.min(idx_j), idx_i.max(idx_j));
                return Err(PatchError::Overlap { first, second });
            }
        }
    }
    // Exact cover by volume: with disjoint interiors, the region is covered
    // iff the clipped volumes sum to the region volume.
    let region_volume = patch.region.volume()?;
    let mut covered = patch.ctx.zero();
    for (_, b) in &sb {
        covered = &covered + &b.bx.intersection_volume(&patch.region)?;
    }
    if !covered.eq_exact(&region_volume) {
        let witness = gap_witness(patch, &sb)?;
        return Err(PatchError::Gap { witness: witness.iter().map(|s| format!("{s:?}")).collect() });
    }
    Ok(PackingReport { placements: n, region_volume, covered_volume: covered, pairs_examined: pairs })
}

/// Locates an uncovered cell by recursive bisection of the volume deficit.
fn gap_witness(patch: &Patch, boxes: &[(usize, ScreenedBox)]) -> Result<Vec<ModuleScalar>, PatchError> {
    let deficit = |reg: &ExactBox| -> Result<ModuleScalar, PatchError> {
        let mut cov = patch.ctx.zero();
        for (_, b) in boxes {
            cov = &cov + &b.bx.intersection_volume(reg)?;
        }
        Ok(&reg.volume()? - &cov)
    };
    let mut region = patch.region.clone();
    loop {
        // Gather interior cuts of the current region.
        let d = region.dim();
        let mut split: Option<(usize, ModuleScalar)> = None;
        'coords: for i in 0..d {
            for (_, b) in boxes {
                for cand in [&b.bx.lo[i], &b.bx.hi[i]] {
                    let inside = (cand - &region.lo[i]).sign()? == Sign::Positive
                        && (&region.hi[i] - cand).sign()? == Sign::Positive;
                    if inside {
                        split = Some((i, cand.clone()));
                        break 'coords;
                    }
                }
            }
        }
        let Some((axis, at)) = split else {
            // Minimal cell with positive deficit: its low corner is uncovered.
            return Ok(region.lo.clone());
        };
        let mut lower = region.clone();
        lower.hi[axis] = at.clone();
        let mut upper = region;
        upper.lo[axis] = at;
        if deficit(&lower)?.sign()? == Sign::Positive {
            region = lower;
        } else {
            region = upper;
        }
    }
}

// ---------------------------------------------------------------------------
// Shears and boundary-segment structure (dimension 2)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShearAxis {
    Horizontal,
    Vertical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShearStatus {
    Finite,
    ReachesRegionBoundary,
}

/// Ordered tile-type runs along one side of a segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SideProfile {
    pub runs: Vec<(usize, usize)>, // (tile id, consecutive count)
}

impl SideProfile {
    pub fn transitions(&self) -> usize {
        self.runs.len().saturating_sub(1)
    }

    pub fn count(&self, tile: usize) -> usize {
        self.runs.iter().filter(|(t, _)| *t == tile).map(|(_, c)| c).sum()
    }
}

/// A maximal boundary segment free of shared edges.
#[derive(Debug, Clone)]
pub struct ShearRecord {
    pub axis: ShearAxis,
    /// Fixed coordinate of the carrying line.
    pub line: ModuleScalar,
    /// Closed extent along the line.
    pub start: ModuleScalar,
    pub end: ModuleScalar,
    pub status: ShearStatus,
    /// Tiles touching from the low side (below for horizontal, left for vertical).
    pub low_side: SideProfile,
    pub high_side: SideProfile,
}

impl ShearRecord {
    pub fn length(&self) -> ModuleScalar {
        &self.end - &self.start
    }
}

#[derive(Debug, Clone)]
struct Face {
    /// Interval along the line, clipped to the region.
    start: ModuleScalar,
    end: ModuleScalar,
    tile: usize,
    /// True when the owning tile lies on the low side of the line.
    low_side: bool,
    clipped: bool,
}

/// One carrying line with all faces on it.
struct LineFaces {
    line: ModuleScalar,
    faces: Vec<Face>,
}

/// Groups values by exact equality, using the f64 screen for ordering.
fn group_lines(mut items: Vec<(ModuleScalar, Face)>) -> Vec<LineFaces> {
    items.sort_by(|a, b| {
        a.0.to_f64()
            .partial_cmp(&b.0.to_f64())
            .unwrap_or(Ordering::Equal)
    });
    let mut groups: Vec<LineFaces> = Vec::new();
    'next: for (line, face) in items {
        // Values within f64 noise of the current tail are compared exactly.
        for g in groups.iter_mut().rev() {
            let gap = (line.to_f64() - g.line.to_f64()).abs();
            if gap > 1e-6 {
                break;
            }
            if g.line.eq_exact(&line) {
                g.faces.push(face);
                continue 'next;
            }
        }
        groups.push(LineFaces { line, faces: vec![face] });
    }
    groups
}

fn collect_lines(patch: &Patch, axis: ShearAxis) -> Result<Vec<LineFaces>, PatchError> {
    // For vertical lines the fixed coordinate is x (index 0); horizontal, y.
    let (fix, along) = match axis {
        ShearAxis::Vertical => (0usize, 1usize),
        ShearAxis::Horizontal => (1usize, 0usize),
    };
    let mut items = Vec::new();
    for i in 0..patch.placements.len() {
        let b = patch.placement_box(i)?;
        let tile = patch.placements[i].tile;
        for (coord, low_side) in [(b.hi[fix].clone(), true), (b.lo[fix].clone(), false)] {
            // Ignore lines on or outside the region's fixed-coordinate range:
            // the far side is unknown there.
            let inside = (&coord - &patch.region.lo[fix]).sign()? == Sign::Positive
                && (&patch.region.hi[fix] - &coord).sign()? == Sign::Positive;
            if !inside {
                continue;
            }
            let mut start = b.lo[along].clone();
            let mut end = b.hi[along].clone();
            let mut clipped = false;
            if (&start - &patch.region.lo[along]).sign()? == Sign::Negative {
                start = patch.region.lo[along].clone();
                clipped = true;
            }
            if (&patch.region.hi[along] - &end).sign()? == Sign::Negative {
                end = patch.region.hi[along].clone();
                clipped = true;
            }
            if (&end - &start).sign()? != Sign::Positive {
                continue;
            }
            items.push((coord.clone(), Face { start, end, tile, low_side, clipped }));
        }
    }
    Ok(group_lines(items))
}

/// Maximal runs of faces merged along a line (closed segments).
fn merged_segments(faces: &[Face]) -> Vec<(ModuleScalar, ModuleScalar)> {
    let mut ivs: Vec<(&ModuleScalar, &ModuleScalar)> = faces.iter().map(|f| (&f.start, &f.end)).collect();
    ivs.sort_by(|a, b| cmp_scalar(a.0, b.0));
    let mut out: Vec<(ModuleScalar, ModuleScalar)> = Vec::new();
    for (s, e) in ivs {
        match out.last_mut() {
            Some((_, cur_end)) if cmp_scalar(s, cur_end) != Ordering::Greater => {
                if cmp_scalar(e, cur_end) == Ordering::Greater {
                    *cur_end = e.clone();
                }
            }
            _ => out.push((s.clone(), e.clone())),
        }
    }
    out
}

fn profile_of(faces: &[Face], start: &ModuleScalar, end: &ModuleScalar, low: bool) -> SideProfile {
    let mut touching: Vec<&Face> = faces
        .iter()
        .filter(|f| f.low_side == low)
        .filter(|f| cmp_scalar(&f.start, end) == Ordering::Less && cmp_scalar(&f.end, start) == Ordering::Greater)
        .collect();
    touching.sort_by(|a, b| cmp_scalar(&a.start, &b.start));
    let mut runs: Vec<(usize, usize)> = Vec::new();
    for f in touching {
        match runs.last_mut() {
            Some((t, c)) if *t == f.tile => *c += 1,
            _ => runs.push((f.tile, 1)),
        }
    }
    SideProfile { runs }
}

/// All maximal boundary segments free of shared edges, with side profiles.
///
/// Segments touching the region boundary are marked: finiteness cannot be
/// determined from a finite window.
pub fn find_shears(patch: &Patch) -> Result<Vec<ShearRecord>, PatchError> {
    if patch.dim() != 2 {
        return Err(PatchError::WrongDimension { expected: 2, got: patch.dim() });
    }
    let mut records = Vec::new();
    for axis in [ShearAxis::Horizontal, ShearAxis::Vertical] {
        let along = match axis {
            ShearAxis::Vertical => 1usize,
            ShearAxis::Horizontal => 0usize,
        };
        for lf in collect_lines(patch, axis)? {
            // Shared edges: a low-side face exactly equal to a high-side face.
            let lows: Vec<&Face> = lf.faces.iter().filter(|f| f.low_side).collect();
            let highs: Vec<&Face> = lf.faces.iter().filter(|f| !f.low_side).collect();
            let mut shared: Vec<(ModuleScalar, ModuleScalar)> = Vec::new();
            for a in &lows {
                for b in &highs {
                    if !a.clipped && !b.clipped && a.start.eq_exact(&b.start) && a.end.eq_exact(&b.end) {
                        shared.push((a.start.clone(), a.end.clone()));
                    }
                }
            }
            shared.sort_by(|a, b| cmp_scalar(&a.0, &b.0));
            for (seg_start, seg_end) in merged_segments(&lf.faces) {
                // Excise shared-edge interiors, keep closed leftovers.
                let mut cursor = seg_start.clone();
                let mut pieces: Vec<(ModuleScalar, ModuleScalar)> = Vec::new();
                for (ss, se) in shared.iter() {
                    if cmp_scalar(ss, &seg_end) != Ordering::Less || cmp_scalar(se, &seg_start) != Ordering::Greater {
                        continue;
                    }
                    if cmp_scalar(&cursor, ss) == Ordering::Less {
                        pieces.push((cursor.clone(), ss.clone()));
                    }
                    if cmp_scalar(se, &cursor) == Ordering::Greater {
                        cursor = se.clone();
                    }
                }
                if cmp_scalar(&cursor, &seg_end) == Ordering::Less {
                    pieces.push((cursor, seg_end.clone()));
                }
                for (ps, pe) in pieces {
                    let touches_boundary = ps.eq_exact(&patch.region.lo[along])
                        || pe.eq_exact(&patch.region.hi[along]);
                    let status = if touches_boundary { ShearStatus::ReachesRegionBoundary } else { ShearStatus::Finite };
                    let low_side = profile_of(&lf.faces, &ps, &pe, true);
                    let high_side = profile_of(&lf.faces, &ps, &pe, false);
                    records.push(ShearRecord {
                        axis,
                        line: lf.line.clone(),
                        start: ps,
                        end: pe,
                        status,
                        low_side,
                        high_side,
                    });
                }
            }
        }
    }
    // Deterministic order: axis, then line, then extent start.
    records.sort_by(|a, b| {
        let ax = |r: &ShearRecord| matches!(r.axis, ShearAxis::Vertical) as u8;
        ax(a).cmp(&ax(b)).then_with(|| cmp_scalar(&a.line, &b.line)).then_with(|| cmp_scalar(&a.start, &b.start))
    });
    Ok(records)
}

/// A boundary segment whose side shows more than one tile-type transition.
#[derive(Debug, Clone)]
pub struct AbaViolation {
    pub axis: ShearAxis,
    pub line: ModuleScalar,
    pub start: ModuleScalar,
    pub end: ModuleScalar,
    pub low_side: bool,
    pub transitions: usize,
}

#[derive(Debug, Clone, Default)]
pub struct AbaReport {
    pub segments_checked: usize,
    pub violations: Vec<AbaViolation>,
}

impl AbaReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that along every maximal boundary segment the tile-type run on each
/// side has at most one transition.
pub fn check_aba(patch: &Patch) -> Result<AbaReport, PatchError> {
    if patch.dim() != 2 {
        return Err(PatchError::WrongDimension { expected: 2, got: patch.dim() });
    }
    if patch.tiles.len() != 2 {
        return Err(PatchError::NotTwoTiles(patch.tiles.len()));
    }
    let mut report = AbaReport::default();
    for axis in [ShearAxis::Horizontal, ShearAxis::Vertical] {
        for lf in collect_lines(patch, axis)? {
            for (s, e) in merged_segments(&lf.faces) {
                report.segments_checked += 1;
                for low in [true, false] {
                    let prof = profile_of(&lf.faces, &s, &e, low);
                    let transitions = prof.transitions();
                    if transitions > 1 {
                        report.violations.push(AbaViolation {
                            axis,
                            line: lf.line.clone(),
                            start: s.clone(),
                            end: e.clone(),
                            low_side: low,
                            transitions,
                        });
                    }
                }
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct ShearStructureViolation {
    pub axis: ShearAxis,
    pub line: ModuleScalar,
    pub start: ModuleScalar,
    pub end: ModuleScalar,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct ShearStructureReport {
    pub finite_shears_checked: usize,
    pub violations: Vec<ShearStructureViolation>,
}

impl ShearStructureReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// For every finite shear: both sides carry the same number of each tile type
/// in opposite order, and the side lengths satisfy the exact identity
/// `n_0 * dim_0 + n_1 * dim_1 = length`.
pub fn check_shear_structure(patch: &Patch) -> Result<ShearStructureReport, PatchError> {
    if patch.tiles.len() != 2 {
        return Err(PatchError::NotTwoTiles(patch.tiles.len()));
    }
    let shears = find_shears(patch)?;
    let mut report = ShearStructureReport::default();
    for sh in shears.iter().filter(|s| s.status == ShearStatus::Finite) {
        report.finite_shears_checked += 1;
        let mut blame = |reason: String| {
            report.violations.push(ShearStructureViolation {
                axis: sh.axis,
                line: sh.line.clone(),
                start: sh.start.clone(),
                end: sh.end.clone(),
                reason,
            });
        };
        let (n0_low, n1_low) = (sh.low_side.count(0), sh.low_side.count(1));
        let (n0_high, n1_high) = (sh.high_side.count(0), sh.high_side.count(1));
        if n0_low != n0_high || n1_low != n1_high {
            blame(format!(
                "side counts differ: low ({n0_low},{n1_low}) vs high ({n0_high},{n1_high})"
            ));
            continue;
        }
        if n0_low == 0 || n1_low == 0 {
            blame("each side of a shear must carry both tile types".to_string());
            continue;
        }
        if sh.low_side.transitions() > 1 || sh.high_side.transitions() > 1 {
            blame("more than one type transition along a shear side".to_string());
            continue;
        }
        if sh.low_side.runs.first().map(|r| r.0) != sh.high_side.runs.last().map(|r| r.0)
            || sh.low_side.runs.last().map(|r| r.0) != sh.high_side.runs.first().map(|r| r.0)
        {
            blame("types do not occur in opposite order".to_string());
            continue;
        }
        // Exact length identity on both sides.
        let along = match sh.axis {
            ShearAxis::Horizontal => 0usize,
            ShearAxis::Vertical => 1usize,
        };
        let len = sh.length();
        let expected = {
            let d0 = &patch.tiles[0].extents[along];
            let d1 = &patch.tiles[1].extents[along];
            let a = d0.scale(&crate::geom::rational(n0_low as i64, 1));
            let b = d1.scale(&crate::geom::rational(n1_low as i64, 1));
            &a + &b
        };
        if !expected.eq_exact(&len) {
            blame("side lengths fail the exact count identity".to_string());
        }
    }
    Ok(report)
}

/// True when no horizontal shear's open extent crosses a vertical shear's
/// open extent.
pub fn shears_never_cross(shears: &[ShearRecord]) -> bool {
    let horizontals: Vec<&ShearRecord> = shears.iter().filter(|s| s.axis == ShearAxis::Horizontal).collect();
    let verticals: Vec<&ShearRecord> = shears.iter().filter(|s| s.axis == ShearAxis::Vertical).collect();
    for h in &horizontals {
        for v in &verticals {
            // Screen in f64 before exact confirmation.
            let hx = (h.start.to_f64(), h.end.to_f64());
            let vy = (v.start.to_f64(), v.end.to_f64());
            let px = v.line.to_f64();
            let py = h.line.to_f64();
            if px <= hx.0 - 1e-9 || px >= hx.1 + 1e-9 || py <= vy.0 - 1e-9 || py >= vy.1 + 1e-9 {
                continue;
            }
            let x_inside = cmp_scalar(&v.line, &h.start) == Ordering::Greater
                && cmp_scalar(&v.line, &h.end) == Ordering::Less;
            let y_inside = cmp_scalar(&h.line, &v.start) == Ordering::Greater
                && cmp_scalar(&h.line, &v.end) == Ordering::Less;
            if x_inside && y_inside {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::Generator;
    use crate::geom::rational;

    /// Incommensurable two-tile dimensions over the ring generated by 1 and
    /// sqrt(2): A is 1 x sqrt(2), B is sqrt(2) x 1.
    fn two_tile_ctx() -> GeneratorContext {
        GeneratorContext::new(vec![Generator::sqrt("r2", 2)], vec![vec![0], vec![1]], true).unwrap()
    }

    fn dict(ctx: &GeneratorContext) -> Vec<TileDef> {
        vec![
            TileDef { name: "A".into(), extents: vec![ctx.one(), ctx.base(0)] },
            TileDef { name: "B".into(), extents: vec![ctx.base(0), ctx.one()] },
        ]
    }

    fn dims(ctx: &GeneratorContext) -> (ModuleScalar, ModuleScalar, ModuleScalar, ModuleScalar) {
        (ctx.one(), ctx.base(0), ctx.base(0), ctx.one())
    }

    /// Builds the two-row configuration around a single horizontal shear:
    /// above, 2 A's then 3 B's; below, 3 B's then 2 A's.
    fn shear_figure_patch() -> Patch {
        let ctx = two_tile_ctx();
        let tiles = dict(&ctx);
        let (wa, ha, wb, hb) = dims(&ctx);
        let mut placements = Vec::new();
        // Above the line y=0.
        let mut x = ctx.zero();
        for _ in 0..2 {
            placements.push(Placement { tile: 0, offset: vec![x.clone(), ctx.zero()] });
            x = &x + &wa;
        }
        for _ in 0..3 {
            placements.push(Placement { tile: 1, offset: vec![x.clone(), ctx.zero()] });
            x = &x + &wb;
        }
        let total = x.clone();
        // Below: 3 B's then 2 A's, hanging from y=0.
        let mut x = ctx.zero();
        for _ in 0..3 {
            placements.push(Placement { tile: 1, offset: vec![x.clone(), -&hb] });
            x = &x + &wb;
        }
        for _ in 0..2 {
            placements.push(Placement { tile: 0, offset: vec![x.clone(), -&ha] });
            x = &x + &wa;
        }
        // Thin region around the shear, inside both rows.
        let eps = ctx.constant(rational(1, 2));
        let region = ExactBox::new(vec![ctx.zero(), -&eps], vec![total, eps]);
        Patch { ctx, tiles, placements, region }
    }

    #[test]
    fn duplicate_placement_is_an_overlap() {
        let ctx = two_tile_ctx();
        let tiles = dict(&ctx);
        let p = Placement { tile: 0, offset: vec![ctx.zero(), ctx.zero()] };
        let region = ExactBox::new(vec![ctx.zero(), ctx.zero()], vec![ctx.one(), ctx.base(0)]);
        let patch = Patch { ctx, tiles, placements: vec![p.clone(), p], region };
        match validate_packing(&patch) {
            Err(PatchError::Overlap { .. }) => {}
            other => panic!("expected overlap, got {other:?}"),
        }
    }

    #[test]
    fn gap_reports_witness() {
        let ctx = two_tile_ctx();
        let tiles = dict(&ctx);
        let p = Placement { tile: 0, offset: vec![ctx.zero(), ctx.zero()] };
        // Region wider than the single tile.
        let region = ExactBox::new(
            vec![ctx.zero(), ctx.zero()],
            vec![ctx.integer(3), ctx.base(0)],
        );
        let patch = Patch { ctx, tiles, placements: vec![p], region };
        match validate_packing(&patch) {
            Err(PatchError::Gap { .. }) => {}
            other => panic!("expected gap, got {other:?}"),
        }
    }

    #[test]
    fn figure_shear_profile_and_length() {
        let patch = shear_figure_patch();
        validate_packing(&patch).unwrap();
        let shears = find_shears(&patch).unwrap();
        let horiz: Vec<_> = shears.iter().filter(|s| s.axis == ShearAxis::Horizontal).collect();
        assert_eq!(horiz.len(), 1);
        let sh = horiz[0];
        // Length 2 w_A + 3 w_B exactly.
        let ctx = &patch.ctx;
        let (wa, _, wb, _) = dims(ctx);
        let expected = &wa.scale(&rational(2, 1)) + &wb.scale(&rational(3, 1));
        assert!(sh.length().eq_exact(&expected));
        assert_eq!(sh.high_side.runs, vec![(0, 2), (1, 3)]);
        assert_eq!(sh.low_side.runs, vec![(1, 3), (0, 2)]);
        let report = check_shear_structure(&patch).unwrap();
        assert!(report.passed(), "violations: {:?}", report.violations);
        let aba = check_aba(&patch).unwrap();
        assert!(aba.passed());
    }

    #[test]
    fn aba_violation_detected() {
        // Row A B A on a common bottom line.
        let ctx = two_tile_ctx();
        let tiles = dict(&ctx);
        let (wa, _, wb, _) = dims(&ctx);
        let placements = vec![
            Placement { tile: 0, offset: vec![ctx.zero(), ctx.zero()] },
            Placement { tile: 1, offset: vec![wa.clone(), ctx.zero()] },
            Placement { tile: 0, offset: vec![&wa + &wb, ctx.zero()] },
        ];
        let region = ExactBox::new(
            vec![ctx.zero(), ctx.zero()],
            vec![&(&wa + &wb) + &wa, ctx.constant(rational(1, 2))],
        );
        let patch = Patch { ctx: ctx.clone(), tiles, placements, region };
        // The bottom line y=0 is outside the region interior, so lift the
        // region to straddle it.
        let mut patch = patch;
        patch.region.lo[1] = -&ctx.constant(rational(1, 2));
        let report = check_aba(&patch).unwrap();
        assert!(!report.passed());
        assert_eq!(report.violations[0].transitions, 2);
    }

    #[test]
    fn tampered_shear_structure_fails() {
        // (2A,3B) over (2B,3A): counts differ per type, must be flagged.
        let ctx = two_tile_ctx();
        let tiles = dict(&ctx);
        let (wa, ha, wb, hb) = dims(&ctx);
        let mut placements = Vec::new();
        let mut x = ctx.zero();
        for _ in 0..2 {
            placements.push(Placement { tile: 0, offset: vec![x.clone(), ctx.zero()] });
            x = &x + &wa;
        }
        for _ in 0..3 {
            placements.push(Placement { tile: 1, offset: vec![x.clone(), ctx.zero()] });
            x = &x + &wb;
        }
        let mut x = ctx.zero();
        for _ in 0..2 {
            placements.push(Placement { tile: 1, offset: vec![x.clone(), -&hb] });
            x = &x + &wb;
        }
        for _ in 0..3 {
            placements.push(Placement { tile: 0, offset: vec![x.clone(), -&ha] });
            x = &x + &wa;
        }
        // Region extends past both rows so the y=0 segment is finite.
        let reach = &wa.scale(&rational(8, 1)) + &wb.scale(&rational(4, 1));
        let region = ExactBox::new(
            vec![-&ctx.one(), -&ctx.constant(rational(1, 4))],
            vec![reach, ctx.constant(rational(1, 4))],
        );
        let patch = Patch { ctx, tiles, placements, region };
        let report = check_shear_structure(&patch).unwrap();
        assert!(!report.passed());
    }

    #[test]
    fn translation_equivariance_of_shears() {
        let patch = shear_figure_patch();
        let ctx = patch.ctx.clone();
        let v = vec![ctx.constant(rational(7, 3)), ctx.constant(rational(-2, 5))];
        let moved = patch.translate(&v);
        let a = find_shears(&patch).unwrap();
        let b = find_shears(&moved).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.axis, y.axis);
            let shift = match x.axis {
                ShearAxis::Horizontal => (&v[1], &v[0]),
                ShearAxis::Vertical => (&v[0], &v[1]),
            };
            assert!((&x.line + shift.0).eq_exact(&y.line));
            assert!((&x.start + shift.1).eq_exact(&y.start));
            assert!((&x.end + shift.1).eq_exact(&y.end));
        }
    }
}
