//! Staircase tilings of the plane by two rectangles and their sequence codes.
//!
//! A staircase tiling decomposes into rectangular blocks of aligned tiles;
//! blocks pair into basic units (an A block left of a B block on a common
//! bottom) arranged on a Z^2 lattice. A tiling is coded by the block
//! multiplicities along the two staircase directions plus the position of
//! the origin inside its basic unit; `decode` and `encode` realize the two
//! directions of that bijection on finite windows.

use crate::exact::{ExactError, Generator, GeneratorContext, ModuleScalar};
use crate::geom::{rational, ExactBox};
use crate::patch::{Patch, PatchError, Placement, TileDef};
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StaircaseError {
    #[error("window does not contain index {0}")]
    OutOfWindow(i64),
    #[error("window too small: {0}")]
    InsufficientWindow(String),
    #[error("patch is not a staircase tiling: {0}")]
    NotAStaircase(String),
    #[error("sequence entries must be positive")]
    NonPositiveEntry,
    #[error("offset must lie in the (0,0) basic unit")]
    OffsetOutsideUnit,
    #[error("no primitive generators found in the vertical strip (bound {0})")]
    GeneratorSearchExhausted(u64),
    #[error("matrix is singular")]
    SingularMatrix,
    #[error(transparent)]
    Patch(#[from] PatchError),
    #[error(transparent)]
    Exact(#[from] ExactError),
}

/// A finite window of an integer-indexed sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexedSeq<T> {
    pub start: i64,
    pub entries: Vec<T>,
}

impl<T: Copy> IndexedSeq<T> {
    pub fn constant(value: T, lo: i64, hi: i64) -> Self {
        assert!(hi >= lo);
        IndexedSeq { start: lo, entries: vec![value; (hi - lo + 1) as usize] }
    }

    pub fn lo(&self) -> i64 {
        self.start
    }

    pub fn hi(&self) -> i64 {
        self.start + self.entries.len() as i64 - 1
    }

    pub fn get(&self, i: i64) -> Result<T, StaircaseError> {
        if i < self.lo() || i > self.hi() {
            return Err(StaircaseError::OutOfWindow(i));
        }
        Ok(self.entries[(i - self.start) as usize])
    }

    pub fn indices(&self) -> impl Iterator<Item = i64> + '_ {
        self.lo()..=self.hi()
    }
}

/// Rectangle dimensions `(w_a, h_a, w_b, h_b)` bound to a context.
#[derive(Debug, Clone)]
pub struct RectDims {
    pub ctx: GeneratorContext,
    pub w_a: ModuleScalar,
    pub h_a: ModuleScalar,
    pub w_b: ModuleScalar,
    pub h_b: ModuleScalar,
}

impl RectDims {
    /// Dimensions from four generators, declared independent or not.
    pub fn new(gens: [Generator; 4], independent: bool) -> Result<Self, StaircaseError> {
        let ctx = GeneratorContext::rect_dims(gens, independent)?;
        Ok(RectDims {
            w_a: ctx.base(0),
            h_a: ctx.base(1),
            w_b: ctx.base(2),
            h_b: ctx.base(3),
            ctx,
        })
    }

    /// The standard incommensurable pair used by the mixing experiments:
    /// `w_a = h_b = 1`, `w_b = h_a = sqrt(2)`. Coordinates live in the ring
    /// generated by 1 and sqrt(2), where products reduce exactly.
    pub fn unit_sqrt2() -> Result<Self, StaircaseError> {
        let ctx = GeneratorContext::new(
            vec![Generator::sqrt("r2", 2)],
            vec![vec![0], vec![1]],
            true,
        )?;
        let r2 = ctx.base(0);
        Ok(RectDims { w_a: ctx.one(), h_a: r2.clone(), w_b: r2, h_b: ctx.one(), ctx })
    }

    pub fn dict(&self) -> Vec<TileDef> {
        vec![
            TileDef { name: "A".into(), extents: vec![self.w_a.clone(), self.h_a.clone()] },
            TileDef { name: "B".into(), extents: vec![self.w_b.clone(), self.h_b.clone()] },
        ]
    }
}

/// Sequence-plus-offset code for a staircase tiling.
///
/// `ne` holds `(a_i, d_i)` (sizes along the northeast staircases), `nw`
/// holds `(b_j, c_j)`; the offset is the position of the origin inside the
/// (0,0) basic unit.
#[derive(Debug, Clone)]
pub struct StaircaseCode {
    pub dims: RectDims,
    pub ne: IndexedSeq<(u32, u32)>,
    pub nw: IndexedSeq<(u32, u32)>,
    pub offset: [ModuleScalar; 2],
}

impl StaircaseCode {
    /// The all-ones code: the periodic tiling by one basic unit.
    pub fn all_ones(dims: RectDims, window: i64) -> Self {
        let zero = dims.ctx.zero();
        StaircaseCode {
            dims,
            ne: IndexedSeq::constant((1, 1), -window, window),
            nw: IndexedSeq::constant((1, 1), -window, window),
            offset: [zero.clone(), zero],
        }
    }

    pub fn validate(&self) -> Result<(), StaircaseError> {
        if self.ne.entries.iter().chain(&self.nw.entries).any(|&(x, y)| x == 0 || y == 0) {
            return Err(StaircaseError::NonPositiveEntry);
        }
        if !self.offset_in_unit()? {
            return Err(StaircaseError::OffsetOutsideUnit);
        }
        Ok(())
    }

    /// Membership of the offset in the (0,0) unit, the union of the A-block
    /// and B-block rectangles.
    fn offset_in_unit(&self) -> Result<bool, StaircaseError> {
        let (a0, d0) = self.ne.get(0)?;
        let (b0, c0) = self.nw.get(0)?;
        let ctx = &self.dims.ctx;
        let a_box = ExactBox::new(
            vec![ctx.zero(), ctx.zero()],
            vec![self.dims.w_a.scale(&rational(a0 as i64, 1)), self.dims.h_a.scale(&rational(b0 as i64, 1))],
        );
        let aw = self.dims.w_a.scale(&rational(a0 as i64, 1));
        let b_box = ExactBox::new(
            vec![aw.clone(), ctx.zero()],
            vec![&aw + &self.dims.w_b.scale(&rational(c0 as i64, 1)), self.dims.h_b.scale(&rational(d0 as i64, 1))],
        );
        Ok(a_box.contains_point(&self.offset)? || b_box.contains_point(&self.offset)?)
    }

    /// Displacement `U_n` between the (0,0) and (n,0) unit corners.
    pub fn u_displacement(&self, n: i64) -> Result<[ModuleScalar; 2], StaircaseError> {
        let ctx = &self.dims.ctx;
        let mut ax = BigRational::from_integer(0.into());
        let mut dy = BigRational::from_integer(0.into());
        if n >= 0 {
            for i in 0..n {
                let (a, d) = self.ne.get(i)?;
                ax += BigRational::from_integer(a.into());
                dy += BigRational::from_integer(d.into());
            }
        } else {
            for i in n..0 {
                let (a, d) = self.ne.get(i)?;
                ax -= BigRational::from_integer(a.into());
                dy -= BigRational::from_integer(d.into());
            }
        }
        let _ = ctx;
        Ok([self.dims.w_a.scale(&ax), self.dims.h_b.scale(&dy)])
    }

    /// Displacement `V_m` between the (0,0) and (0,m) unit corners.
    pub fn v_displacement(&self, m: i64) -> Result<[ModuleScalar; 2], StaircaseError> {
        let mut cx = BigRational::from_integer(0.into());
        let mut by = BigRational::from_integer(0.into());
        if m >= 0 {
            for j in 1..=m {
                let (_, c) = self.nw.get(j)?;
                cx -= BigRational::from_integer(c.into());
            }
            for j in 0..m {
                let (b, _) = self.nw.get(j)?;
                by += BigRational::from_integer(b.into());
            }
        } else {
            for j in m + 1..=0 {
                let (_, c) = self.nw.get(j)?;
                cx += BigRational::from_integer(c.into());
            }
            for j in m..0 {
                let (b, _) = self.nw.get(j)?;
                by -= BigRational::from_integer(b.into());
            }
        }
        Ok([self.dims.w_b.scale(&cx), self.dims.h_a.scale(&by)])
    }

    /// `U_n + V_m`: corner of the (n,m) unit relative to the (0,0) corner.
    pub fn displacement(&self, n: i64, m: i64) -> Result<[ModuleScalar; 2], StaircaseError> {
        let u = self.u_displacement(n)?;
        let v = self.v_displacement(m)?;
        Ok([&u[0] + &v[0], &u[1] + &v[1]])
    }

    /// Lower-left corner of unit (i,j) in patch coordinates (the origin of
    /// the plane sits at `offset` inside the (0,0) unit).
    pub fn unit_corner(&self, i: i64, j: i64) -> Result<[ModuleScalar; 2], StaircaseError> {
        let d = self.displacement(i, j)?;
        Ok([&d[0] - &self.offset[0], &d[1] - &self.offset[1]])
    }

    /// The two block boxes of unit (i,j): (A block, B block).
    pub fn unit_boxes(&self, i: i64, j: i64) -> Result<(ExactBox, ExactBox), StaircaseError> {
        let (a, d) = self.ne.get(i)?;
        let (b, c) = self.nw.get(j)?;
        let corner = self.unit_corner(i, j)?;
        let aw = self.dims.w_a.scale(&rational(a as i64, 1));
        let ah = self.dims.h_a.scale(&rational(b as i64, 1));
        let bw = self.dims.w_b.scale(&rational(c as i64, 1));
        let bh = self.dims.h_b.scale(&rational(d as i64, 1));
        let a_box = ExactBox::new(corner.to_vec(), vec![&corner[0] + &aw, &corner[1] + &ah]);
        let b_lo = vec![&corner[0] + &aw, corner[1].clone()];
        let b_box = ExactBox::new(b_lo.clone(), vec![&b_lo[0] + &bw, &b_lo[1] + &bh]);
        Ok((a_box, b_box))
    }
}

/// Decodes a code into the patch of all basic units in its windows.
///
/// The declared region is the largest centered box certified (exactly) to be
/// covered by the placed units.
pub fn decode(code: &StaircaseCode) -> Result<Patch, StaircaseError> {
    code.validate()?;
    let ctx = &code.dims.ctx;
    let mut placements = Vec::new();
    let mut block_boxes = Vec::new();
    for i in code.ne.indices() {
        for j in code.nw.indices() {
            let (a, d) = code.ne.get(i)?;
            let (b, c) = code.nw.get(j)?;
            let (a_box, b_box) = code.unit_boxes(i, j)?;
            for r in 0..a {
                for s in 0..b {
                    placements.push(Placement {
                        tile: 0,
                        offset: vec![
                            &a_box.lo[0] + &code.dims.w_a.scale(&rational(r as i64, 1)),
                            &a_box.lo[1] + &code.dims.h_a.scale(&rational(s as i64, 1)),
                        ],
                    });
                }
            }
            for r in 0..c {
                for s in 0..d {
                    placements.push(Placement {
                        tile: 1,
                        offset: vec![
                            &b_box.lo[0] + &code.dims.w_b.scale(&rational(r as i64, 1)),
                            &b_box.lo[1] + &code.dims.h_b.scale(&rational(s as i64, 1)),
                        ],
                    });
                }
            }
            block_boxes.push(a_box);
            block_boxes.push(b_box);
        }
    }
    let region = certified_region(code, &block_boxes)?;
    Ok(Patch { ctx: ctx.clone(), tiles: code.dims.dict(), placements, region })
}

/// Largest centered box that the placed blocks certifiably cover.
fn certified_region(code: &StaircaseCode, blocks: &[ExactBox]) -> Result<ExactBox, StaircaseError> {
    let ctx = &code.dims.ctx;
    // f64 screen: a centered box is covered when a dense boundary sample is.
    let fb: Vec<(f64, f64, f64, f64)> = blocks
        .iter()
        .map(|b| (b.lo[0].to_f64(), b.lo[1].to_f64(), b.hi[0].to_f64(), b.hi[1].to_f64()))
        .collect();
    let covered_pt = |x: f64, y: f64| fb.iter().any(|&(lx, ly, hx, hy)| lx <= x && x < hx && ly <= y && y < hy);
    let boundary_ok = |r: f64| {
        let n = 48;
        (0..=n).all(|t| {
            let s = -r + 2.0 * r * t as f64 / n as f64;
            covered_pt(s, -r) && covered_pt(s, r) && covered_pt(-r, s) && covered_pt(r, s)
        })
    };
    let mut r = {
        // Upper bound: half the shortest window reach in any direction.
        let right = code.u_displacement(code.ne.hi() + 1).map(|u| u[0].to_f64());
        let left = code.u_displacement(code.ne.lo()).map(|u| -u[0].to_f64());
        let up = code.v_displacement(code.nw.hi() + 1).map(|v| v[1].to_f64());
        let down = code.v_displacement(code.nw.lo()).map(|v| -v[1].to_f64());
        let mut r = f64::INFINITY;
        for q in [right, left, up, down].into_iter().flatten() {
            r = r.min(q.abs());
        }
        if !r.is_finite() {
            r = 1.0;
        }
        r
    };
    let min_dim = [&code.dims.w_a, &code.dims.h_a, &code.dims.w_b, &code.dims.h_b]
        .iter()
        .map(|s| s.to_f64())
        .fold(f64::INFINITY, f64::min);
    let mut attempts = 0;
    loop {
        attempts += 1;
        if attempts > 60 || r < min_dim / 4.0 {
            return Err(StaircaseError::InsufficientWindow(
                "could not certify a covered region around the origin".into(),
            ));
        }
        if !boundary_ok(r * 1.02) {
            r *= 0.8;
            continue;
        }
        // Exact certification: clipped block volumes sum to the box volume.
        let half = ctx.constant(rational((r * 1024.0).floor() as i64, 1024));
        let bx = ExactBox::new(vec![-&half, -&half], vec![half.clone(), half.clone()]);
        let vol = bx.volume()?;
        let mut covered = ctx.zero();
        for b in blocks {
            covered = &covered + &b.intersection_volume(&bx)?;
        }
        if covered.eq_exact(&vol) {
            return Ok(bx);
        }
        r *= 0.8;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockRole {
    A,
    B,
}

/// Label data attached to each placement of an encoded patch.
#[derive(Debug, Clone)]
pub struct BasicUnitLabeling {
    /// Per placement: unit label (i,j), role, and block multiplicities
    /// (columns, rows). `None` for tiles outside complete labeled units.
    pub assignments: Vec<Option<((i64, i64), BlockRole, (u32, u32))>>,
    /// Lower-left corners of labeled units.
    pub unit_corners: BTreeMap<(i64, i64), [ModuleScalar; 2]>,
}

/// Result of encoding: the recovered code and the labeling that produced it.
pub struct Encoded {
    pub code: StaircaseCode,
    pub labeling: BasicUnitLabeling,
}

struct Block {
    role: BlockRole,
    members: Vec<usize>,
    lo: [ModuleScalar; 2],
    hi: [ModuleScalar; 2],
    cols: u32,
    rows: u32,
    frontier: bool,
}

/// Recovers the code of a staircase patch containing the origin.
///
/// The patch must decompose into complete rectangular blocks around the
/// origin; blocks touching the materialized frontier are ignored, so the
/// recovered windows are the maximal contiguous index ranges visible in the
/// patch interior.
pub fn encode(patch: &Patch) -> Result<Encoded, StaircaseError> {
    if patch.tiles.len() != 2 {
        return Err(StaircaseError::NotAStaircase("dictionary must have exactly two tiles".into()));
    }
    if patch.dim() != 2 {
        return Err(StaircaseError::NotAStaircase("dimension must be 2".into()));
    }
    let n = patch.placements.len();
    if n == 0 {
        return Err(StaircaseError::NotAStaircase("empty patch".into()));
    }
    let boxes: Vec<ExactBox> = (0..n).map(|i| patch.placement_box(i)).collect::<Result<_, _>>()?;
    // Union-find over same-type full-face adjacency.
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let r = find(parent, parent[i]);
            parent[i] = r;
        }
        parent[i]
    }
    let corner_key = |b: &ExactBox| format!("{}#{}", b.lo[0].value_key(), b.lo[1].value_key());
    let mut by_corner: BTreeMap<String, usize> = BTreeMap::new();
    for (i, b) in boxes.iter().enumerate() {
        by_corner.insert(corner_key(b), i);
    }
    for (i, b) in boxes.iter().enumerate() {
        let t = patch.placements[i].tile;
        // Right neighbor: same type, corner at (hi.x, lo.y).
        let right = format!("{}#{}", b.hi[0].value_key(), b.lo[1].value_key());
        if let Some(&j) = by_corner.get(&right) {
            if patch.placements[j].tile == t {
                let (a, b2) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b2;
            }
        }
        let up = format!("{}#{}", b.lo[0].value_key(), b.hi[1].value_key());
        if let Some(&j) = by_corner.get(&up) {
            if patch.placements[j].tile == t {
                let (a, b2) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b2;
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    // Hull of all placements: blocks touching it may be truncated.
    let mut hull_lo = boxes[0].lo.clone();
    let mut hull_hi = boxes[0].hi.clone();
    for b in &boxes[1..] {
        for c in 0..2 {
            hull_lo[c] = hull_lo[c].clone().min_exact(b.lo[c].clone())?;
            hull_hi[c] = hull_hi[c].clone().max_exact(b.hi[c].clone())?;
        }
    }
    let mut blocks = Vec::new();
    for (_, members) in groups {
        let t = patch.placements[members[0]].tile;
        let role = if t == 0 { BlockRole::A } else { BlockRole::B };
        let (tile_w, tile_h) = (&patch.tiles[t].extents[0], &patch.tiles[t].extents[1]);
        let mut lo = boxes[members[0]].lo.clone();
        let mut hi = boxes[members[0]].hi.clone();
        for &i in &members[1..] {
            for c in 0..2 {
                lo[c] = lo[c].clone().min_exact(boxes[i].lo[c].clone())?;
                hi[c] = hi[c].clone().max_exact(boxes[i].hi[c].clone())?;
            }
        }
        // The block must be a full cols x rows grid of its tile.
        let width = &hi[0] - &lo[0];
        let height = &hi[1] - &lo[1];
        let cols = (width.to_f64() / tile_w.to_f64()).round() as i64;
        let rows = (height.to_f64() / tile_h.to_f64()).round() as i64;
        if cols < 1 || rows < 1 {
            return Err(StaircaseError::NotAStaircase("degenerate block".into()));
        }
        let exact_w = tile_w.scale(&rational(cols, 1));
        let exact_h = tile_h.scale(&rational(rows, 1));
        if !width.eq_exact(&exact_w) || !height.eq_exact(&exact_h) || members.len() as i64 != cols * rows {
            return Err(StaircaseError::NotAStaircase("block is not a full rectangle of tiles".into()));
        }
        let frontier = lo[0].eq_exact(&hull_lo[0])
            || lo[1].eq_exact(&hull_lo[1])
            || hi[0].eq_exact(&hull_hi[0])
            || hi[1].eq_exact(&hull_hi[1]);
        blocks.push(Block {
            role,
            members,
            lo: [lo[0].clone(), lo[1].clone()],
            hi: [hi[0].clone(), hi[1].clone()],
            cols: cols as u32,
            rows: rows as u32,
            frontier,
        });
    }
    // Pair A blocks with the B block sharing their bottom-right corner.
    let mut block_by_corner: BTreeMap<String, usize> = BTreeMap::new();
    let key2 = |x: &ModuleScalar, y: &ModuleScalar| format!("{}#{}", x.value_key(), y.value_key());
    for (bi, b) in blocks.iter().enumerate() {
        block_by_corner.insert(key2(&b.lo[0], &b.lo[1]), bi);
    }
    struct Unit {
        a: usize,
        b: usize,
    }
    let mut units: Vec<Unit> = Vec::new();
    let mut unit_of_a: BTreeMap<usize, usize> = BTreeMap::new();
    for (bi, b) in blocks.iter().enumerate() {
        if b.role != BlockRole::A || b.frontier {
            continue;
        }
        if let Some(&bj) = block_by_corner.get(&key2(&b.hi[0], &b.lo[1])) {
            let other = &blocks[bj];
            if other.role == BlockRole::B && !other.frontier {
                unit_of_a.insert(bi, units.len());
                units.push(Unit { a: bi, b: bj });
            }
        }
    }
    if units.is_empty() {
        return Err(StaircaseError::NotAStaircase("no complete basic units found".into()));
    }
    // Locate the unit containing the origin (units closed on left and bottom).
    let ctx = &patch.ctx;
    let origin = [ctx.zero(), ctx.zero()];
    let unit_contains = |u: &Unit, p: &[ModuleScalar]| -> Result<bool, StaircaseError> {
        let a = &blocks[u.a];
        let b = &blocks[u.b];
        let a_box = ExactBox::new(a.lo.to_vec(), a.hi.to_vec());
        let b_box = ExactBox::new(b.lo.to_vec(), b.hi.to_vec());
        Ok(a_box.contains_point(p)? || b_box.contains_point(p)?)
    };
    let mut origin_unit = None;
    for (ui, u) in units.iter().enumerate() {
        if unit_contains(u, &origin)? {
            origin_unit = Some(ui);
            break;
        }
    }
    let Some(origin_unit) = origin_unit else {
        return Err(StaircaseError::NotAStaircase("origin is not inside a complete basic unit".into()));
    };
    // Neighbor lookups via corner maps.
    let mut unit_by_ll: BTreeMap<String, usize> = BTreeMap::new();
    let mut unit_by_a_ur: BTreeMap<String, usize> = BTreeMap::new();
    let mut unit_by_b_ul: BTreeMap<String, usize> = BTreeMap::new();
    for (ui, u) in units.iter().enumerate() {
        let a = &blocks[u.a];
        let b = &blocks[u.b];
        unit_by_ll.insert(key2(&a.lo[0], &a.lo[1]), ui);
        unit_by_a_ur.insert(key2(&a.hi[0], &a.hi[1]), ui);
        unit_by_b_ul.insert(key2(&b.lo[0], &b.hi[1]), ui);
    }
    // Breadth-first labeling from the origin unit.
    let mut labels: BTreeMap<usize, (i64, i64)> = BTreeMap::new();
    labels.insert(origin_unit, (0, 0));
    let mut queue = std::collections::VecDeque::from([origin_unit]);
    while let Some(ui) = queue.pop_front() {
        let (i, j) = labels[&ui];
        let u = &units[ui];
        let a = &blocks[u.a];
        let b = &blocks[u.b];
        // Northeast neighbor: its LL corner is the UL corner of my B block.
        let moves = [
            (key2(&b.lo[0], &b.hi[1]), &unit_by_ll, (i + 1, j)),
            // Northwest neighbor: its A-block's... its lower-right corner is
            // the UR corner of my A block, i.e. my A-UR is its B block's
            // bottom-right; equivalently its B block's UL is found from my
            // side going the other way. Use the inverse maps instead:
            // the unit whose B block's bottom-right equals my A block's UR
            // has me as its southeast neighbor.
            (key2(&a.lo[0], &a.lo[1]), &unit_by_b_ul, (i - 1, j)), // southwest: my LL is its B-UL
            (key2(&b.hi[0], &b.lo[1]), &unit_by_a_ur, (i, j - 1)), // southeast: my BR is its A-UR
        ];
        for (key, map, lab) in moves {
            if let Some(&vi) = map.get(&key) {
                match labels.get(&vi) {
                    Some(&existing) if existing != lab => {
                        return Err(StaircaseError::NotAStaircase("inconsistent unit labels".into()));
                    }
                    None => {
                        labels.insert(vi, lab);
                        queue.push_back(vi);
                    }
                    _ => {}
                }
            }
        }
        // Northwest neighbor: the unit whose bottom-right corner (B block's
        // lower-right) coincides with my A block's upper-right corner.
        // Search by that corner over units' B blocks.
        let nw_key = key2(&a.hi[0], &a.hi[1]);
        if let Some(&vi) = units
            .iter()
            .enumerate()
            .find(|(_, v)| {
                let vb = &blocks[v.b];
                key2(&vb.hi[0], &vb.lo[1]) == nw_key
            })
            .map(|(idx, _)| idx)
            .as_ref()
        {
            let lab = (i, j + 1);
            match labels.get(&vi) {
                Some(&existing) if existing != lab => {
                    return Err(StaircaseError::NotAStaircase("inconsistent unit labels".into()));
                }
                None => {
                    labels.insert(vi, lab);
                    queue.push_back(vi);
                }
                _ => {}
            }
        }
    }
    // Read sequences; verify constancy across the lattice.
    let mut a_of: BTreeMap<i64, (u32, u32)> = BTreeMap::new();
    let mut b_of: BTreeMap<i64, (u32, u32)> = BTreeMap::new();
    for (&ui, &(i, j)) in &labels {
        let u = &units[ui];
        let a = &blocks[u.a];
        let b = &blocks[u.b];
        let ad = (a.cols, b.rows);
        let bc = (a.rows, b.cols);
        if let Some(prev) = a_of.insert(i, ad) {
            if prev != ad {
                return Err(StaircaseError::NotAStaircase("(a, d) not constant along a column".into()));
            }
        }
        if let Some(prev) = b_of.insert(j, bc) {
            if prev != bc {
                return Err(StaircaseError::NotAStaircase("(b, c) not constant along a row".into()));
            }
        }
    }
    // Maximal contiguous windows around zero.
    let contiguous = |m: &BTreeMap<i64, (u32, u32)>| -> (i64, Vec<(u32, u32)>) {
        let mut lo = 0i64;
        while m.contains_key(&(lo - 1)) {
            lo -= 1;
        }
        let mut hi = 0i64;
        while m.contains_key(&(hi + 1)) {
            hi += 1;
        }
        (lo, (lo..=hi).map(|i| m[&i]).collect())
    };
    let (ne_lo, ne_entries) = contiguous(&a_of);
    let (nw_lo, nw_entries) = contiguous(&b_of);
    // Recover dimensions from the dictionary.
    let dims = dims_from_patch(patch)?;
    // Offset: position of the origin relative to the (0,0) unit corner.
    let origin_ll = &blocks[units[origin_unit].a].lo;
    let offset = [-&origin_ll[0], -&origin_ll[1]];
    let code = StaircaseCode {
        dims,
        ne: IndexedSeq { start: ne_lo, entries: ne_entries },
        nw: IndexedSeq { start: nw_lo, entries: nw_entries },
        offset,
    };
    code.validate()?;
    // Labeling output.
    let mut assignments: Vec<Option<((i64, i64), BlockRole, (u32, u32))>> = vec![None; n];
    let mut unit_corners = BTreeMap::new();
    for (&ui, &(i, j)) in &labels {
        let u = &units[ui];
        let a = &blocks[u.a];
        let b = &blocks[u.b];
        unit_corners.insert((i, j), [a.lo[0].clone(), a.lo[1].clone()]);
        for &m in &a.members {
            assignments[m] = Some(((i, j), BlockRole::A, (a.cols, a.rows)));
        }
        for &m in &b.members {
            assignments[m] = Some(((i, j), BlockRole::B, (b.cols, b.rows)));
        }
    }
    Ok(Encoded { code, labeling: BasicUnitLabeling { assignments, unit_corners } })
}

/// Reads the dimension scalars back from a two-tile patch dictionary.
fn dims_from_patch(patch: &Patch) -> Result<RectDims, StaircaseError> {
    let a = patch
        .tiles
        .iter()
        .find(|t| t.name == "A")
        .ok_or_else(|| StaircaseError::NotAStaircase("dictionary must name tiles A and B".into()))?;
    let b = patch
        .tiles
        .iter()
        .find(|t| t.name == "B")
        .ok_or_else(|| StaircaseError::NotAStaircase("dictionary must name tiles A and B".into()))?;
    Ok(RectDims {
        ctx: patch.ctx.clone(),
        w_a: a.extents[0].clone(),
        h_a: a.extents[1].clone(),
        w_b: b.extents[0].clone(),
        h_b: b.extents[1].clone(),
    })
}

/// Shifts the windows to the unit containing `v` and updates the offset:
/// decoding the result reproduces the original tiling translated by `-v`.
pub fn translate_code(code: &StaircaseCode, v: &[ModuleScalar; 2]) -> Result<StaircaseCode, StaircaseError> {
    code.validate()?;
    // Locate the unit containing the point v (in patch coordinates).
    let mut landing = None;
    'outer: for i in code.ne.indices() {
        for j in code.nw.indices() {
            let (a_box, b_box) = code.unit_boxes(i, j)?;
            if a_box.contains_point(v.as_slice())? || b_box.contains_point(v.as_slice())? {
                landing = Some((i, j));
                break 'outer;
            }
        }
    }
    let Some((i0, j0)) = landing else {
        return Err(StaircaseError::InsufficientWindow(
            "translation lands outside the coded windows".into(),
        ));
    };
    let corner = code.unit_corner(i0, j0)?;
    let new_offset = [&v[0] - &corner[0], &v[1] - &corner[1]];
    let reindex = |seq: &IndexedSeq<(u32, u32)>, shift: i64| IndexedSeq {
        start: seq.start - shift,
        entries: seq.entries.clone(),
    };
    Ok(StaircaseCode {
        dims: code.dims.clone(),
        ne: reindex(&code.ne, i0),
        nw: reindex(&code.nw, j0),
        offset: new_offset,
    })
}

/// A 2x2 rational matrix.
#[derive(Debug, Clone)]
pub struct RationalMatrix(pub [[BigRational; 2]; 2]);

impl RationalMatrix {
    pub fn det(&self) -> BigRational {
        &self.0[0][0] * &self.0[1][1] - &self.0[0][1] * &self.0[1][0]
    }

    pub fn inverse(&self) -> Option<RationalMatrix> {
        let det = self.det();
        if det == BigRational::from_integer(0.into()) {
            return None;
        }
        Some(RationalMatrix([
            [&self.0[1][1] / &det, -&self.0[0][1] / &det],
            [-&self.0[1][0] / &det, &self.0[0][0] / &det],
        ]))
    }

    pub fn mul_int(&self, v: (i64, i64)) -> (BigRational, BigRational) {
        let p = BigRational::from_integer(v.0.into());
        let q = BigRational::from_integer(v.1.into());
        (
            &self.0[0][0] * &p + &self.0[0][1] * &q,
            &self.0[1][0] * &p + &self.0[1][1] * &q,
        )
    }
}

/// Output of the periodic construction from a torus matrix.
pub struct PeriodicConstruction {
    /// The lattice `L = M^{-1}` whose translates leave the tiling invariant.
    pub lattice: RationalMatrix,
    /// Primitive generators in the first and fourth quadrant: (a,b), (c,-d).
    pub gen_first: (BigRational, BigRational),
    pub gen_fourth: (BigRational, BigRational),
    pub dims: RectDims,
    pub code: StaircaseCode,
}

/// Builds the two-tile periodic tiling associated with the torus action
/// `x -> x + M v`: tile dimensions come from primitive generators of
/// `M^{-1} Z^2` in the first and fourth quadrants, and the all-ones code
/// decodes to an `M^{-1} Z^2`-periodic tiling.
pub fn periodic_code_from_matrix(m: &RationalMatrix, window: i64) -> Result<PeriodicConstruction, StaircaseError> {
    let l = m.inverse().ok_or(StaircaseError::SingularMatrix)?;
    periodic_code_from_lattice(&l, window)
}

/// Same construction, starting directly from the lattice matrix `L`.
pub fn periodic_code_from_lattice(l: &RationalMatrix, window: i64) -> Result<PeriodicConstruction, StaircaseError> {
    if l.det() == BigRational::from_integer(0.into()) {
        return Err(StaircaseError::SingularMatrix);
    }
    let zero = BigRational::from_integer(0.into());
    // Vertical strip scan: find lattice vectors with 0 < x < t closest to the
    // horizontal axis from above and below, doubling the strip on failure.
    let col_norm = |c: usize| {
        let x = l.0[0][c].to_f64().unwrap_or(0.0);
        let y = l.0[1][c].to_f64().unwrap_or(0.0);
        (x * x + y * y).sqrt()
    };
    let mut strip = col_norm(0).max(col_norm(1)).max(1e-9);
    for _ in 0..10 {
        let mut above: Option<(BigRational, BigRational)> = None;
        let mut below: Option<(BigRational, BigRational)> = None;
        // Coefficient bound: vectors in the strip with |y| below the strip
        // height have bounded coefficients in the basis.
        let bound = {
            let det = l.det().to_f64().unwrap_or(0.0).abs();
            ((2.0 * strip * strip / det).ceil() as i64 + 2).clamp(2, 4_000)
        };
        for p in -bound..=bound {
            for q in -bound..=bound {
                if (p, q) == (0, 0) || num_integer::gcd(p, q) != 1 {
                    continue;
                }
                let v = l.mul_int((p, q));
                if v.0 <= zero {
                    continue;
                }
                let x = v.0.to_f64().unwrap_or(f64::INFINITY);
                if x >= strip {
                    continue;
                }
                if v.1 > zero {
                    if above.as_ref().map(|cur| v.1 < cur.1).unwrap_or(true) {
                        above = Some(v);
                    }
                } else if v.1 < zero {
                    if below.as_ref().map(|cur| v.1 > cur.1).unwrap_or(true) {
                        below = Some(v);
                    }
                }
            }
        }
        if let (Some(a), Some(b)) = (above, below) {
            // The picked pair must generate the lattice.
            let pair_det = (&a.0 * &b.1 - &a.1 * &b.0).abs();
            if pair_det != l.det().abs() {
                strip *= 2.0;
                continue;
            }
            let (ga, gb) = (a.0.clone(), a.1.clone());
            let (gc, gd) = (b.0.clone(), -b.1.clone());
            // w_a = a, h_a = d, w_b = c, h_b = b.
            let dims = RectDims::new(
                [
                    Generator::rational("w_a", &fraction_literal(&ga)),
                    Generator::rational("h_a", &fraction_literal(&gd)),
                    Generator::rational("w_b", &fraction_literal(&gc)),
                    Generator::rational("h_b", &fraction_literal(&gb)),
                ],
                false,
            )?;
            let code = StaircaseCode::all_ones(dims.clone(), window);
            return Ok(PeriodicConstruction {
                lattice: l.clone(),
                gen_first: (ga, gb),
                gen_fourth: (gc, -gd),
                dims,
                code,
            });
        }
        strip *= 2.0;
    }
    Err(StaircaseError::GeneratorSearchExhausted(1 << 10))
}

fn fraction_literal(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patch::{check_aba, check_shear_structure, find_shears, shears_never_cross, validate_packing};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_code(rng: &mut StdRng, window: i64, max_entry: u32) -> StaircaseCode {
        let dims = RectDims::unit_sqrt2().unwrap();
        let mut seq = |w: i64| IndexedSeq {
            start: -w,
            entries: (0..2 * w + 1)
                .map(|_| (rng.gen_range(1..=max_entry), rng.gen_range(1..=max_entry)))
                .collect(),
        };
        let ne = seq(window);
        let nw = seq(window);
        // Offset strictly inside the A block of the (0,0) unit.
        let ctx = &dims.ctx;
        let x = dims.w_a.scale(&rational(rng.gen_range(0..ne.get(0).unwrap().0 as i64 * 4), 5));
        let y = dims.h_a.scale(&rational(rng.gen_range(0..nw.get(0).unwrap().0 as i64 * 4), 5));
        let _ = ctx;
        StaircaseCode { dims, ne, nw, offset: [x, y] }
    }

    #[test]
    fn all_ones_unit_positions() {
        let dims = RectDims::unit_sqrt2().unwrap();
        let code = StaircaseCode::all_ones(dims, 3);
        let u = code.displacement(1, 0).unwrap();
        assert!(u[0].eq_exact(&code.dims.w_a));
        assert!(u[1].eq_exact(&code.dims.h_b));
        let v = code.displacement(0, 1).unwrap();
        assert!(v[0].eq_exact(&-&code.dims.w_b));
        assert!(v[1].eq_exact(&code.dims.h_a));
        let z = code.displacement(0, 0).unwrap();
        assert!(z[0].is_zero() && z[1].is_zero());
        let u2 = code.displacement(2, 0).unwrap();
        assert!(u2[0].eq_exact(&code.dims.w_a.scale(&rational(2, 1))));
    }

    #[test]
    fn all_ones_decodes_to_periodic_tiling() {
        let dims = RectDims::unit_sqrt2().unwrap();
        let code = StaircaseCode::all_ones(dims, 4);
        let patch = decode(&code).unwrap();
        validate_packing(&patch).unwrap();
        // Invariance under U_1 and V_1 on a central window.
        let ctx = &patch.ctx;
        let w = ExactBox::new(vec![-&ctx.one(), -&ctx.one()], vec![ctx.one(), ctx.one()]);
        for disp in [code.displacement(1, 0).unwrap(), code.displacement(0, 1).unwrap()] {
            let moved = patch.translate(&[disp[0].clone(), disp[1].clone()]);
            assert!(patch.same_tiles_on(&moved, &w).unwrap());
        }
    }

    #[test]
    fn random_codes_roundtrip_and_checks() {
        let mut rng = StdRng::seed_from_u64(0xc0de);
        for trial in 0..12 {
            let code = random_code(&mut rng, 6, 3);
            let patch = decode(&code).unwrap();
            validate_packing(&patch).unwrap_or_else(|e| panic!("trial {trial}: {e}"));
            let aba = check_aba(&patch).unwrap();
            assert!(aba.passed());
            let ss = check_shear_structure(&patch).unwrap();
            assert!(ss.passed(), "trial {trial}: {:?}", ss.violations);
            let shears = find_shears(&patch).unwrap();
            assert!(shears_never_cross(&shears));
            let encoded = encode(&patch).unwrap();
            // Windows shrink to the interior; compare on the overlap.
            let c2 = encoded.code;
            assert!(c2.ne.lo() <= -2 && c2.ne.hi() >= 2, "interior window too small");
            for i in c2.ne.indices() {
                assert_eq!(c2.ne.get(i).unwrap(), code.ne.get(i).unwrap(), "trial {trial} ne[{i}]");
            }
            for j in c2.nw.indices() {
                assert_eq!(c2.nw.get(j).unwrap(), code.nw.get(j).unwrap(), "trial {trial} nw[{j}]");
            }
            assert!(c2.offset[0].eq_exact(&code.offset[0]));
            assert!(c2.offset[1].eq_exact(&code.offset[1]));
        }
    }

    #[test]
    fn full_row_tiling_is_rejected() {
        // Rows of A's only: no basic unit contains the origin.
        let dims = RectDims::unit_sqrt2().unwrap();
        let ctx = &dims.ctx;
        let mut placements = Vec::new();
        for r in -3i64..=3 {
            for s in -2i64..=2 {
                placements.push(Placement {
                    tile: 0,
                    offset: vec![dims.w_a.scale(&rational(r, 1)), dims.h_a.scale(&rational(s, 1))],
                });
            }
        }
        let region = ExactBox::new(vec![-&ctx.one(), -&ctx.one()], vec![ctx.one(), ctx.one()]);
        let patch = Patch { ctx: ctx.clone(), tiles: dims.dict(), placements, region };
        match encode(&patch) {
            Err(StaircaseError::NotAStaircase(_)) => {}
            other => panic!("expected rejection, got {:?}", other.map(|e| e.code.ne)),
        }
    }

    #[test]
    fn translate_identity_and_unit_shift() {
        let mut rng = StdRng::seed_from_u64(7);
        let code = random_code(&mut rng, 5, 3);
        let ctx = &code.dims.ctx;
        // v = 0 leaves everything unchanged.
        let t0 = translate_code(&code, &[ctx.zero(), ctx.zero()]).unwrap();
        assert_eq!(t0.ne, code.ne);
        assert_eq!(t0.nw, code.nw);
        assert!(t0.offset[0].eq_exact(&code.offset[0]));
        // v = U_1 + V_0 exactly shifts the ne window start by one.
        let u1 = code.unit_corner(1, 0).unwrap();
        let v = [&u1[0] + &code.offset[0], &u1[1] + &code.offset[1]];
        let t1 = translate_code(&code, &v).unwrap();
        assert_eq!(t1.ne.start, code.ne.start - 1);
        assert_eq!(t1.nw.start, code.nw.start);
        assert!(t1.offset[0].eq_exact(&code.offset[0]));
        assert!(t1.offset[1].eq_exact(&code.offset[1]));
    }

    #[test]
    fn translate_equivariance_on_overlap() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..4 {
            let code = random_code(&mut rng, 5, 2);
            let ctx = &code.dims.ctx;
            let v = [
                ctx.constant(rational(rng.gen_range(-8..8), 5)),
                ctx.constant(rational(rng.gen_range(-8..8), 5)),
            ];
            let translated = match translate_code(&code, &v) {
                Ok(c) => c,
                Err(StaircaseError::InsufficientWindow(_)) => continue,
                Err(e) => panic!("{e}"),
            };
            let direct = decode(&code).unwrap().translate(&[-&v[0], -&v[1]]);
            let via_code = decode(&translated).unwrap();
            let ctx = &code.dims.ctx;
            let w = ExactBox::new(
                vec![-&ctx.one(), -&ctx.one()],
                vec![ctx.one(), ctx.one()],
            );
            assert!(via_code.same_tiles_on(&direct, &w).unwrap());
        }
    }

    #[test]
    fn periodic_construction_example() {
        // L given directly: generators (0.3, 1) and (1, -0.4).
        let l = RationalMatrix([
            [rational(1, 1), rational(3, 10)],
            [rational(-2, 5), rational(1, 1)],
        ]);
        let built = periodic_code_from_lattice(&l, 4).unwrap();
        assert_eq!(built.gen_first, (rational(3, 10), rational(1, 1)));
        assert_eq!(built.gen_fourth, (rational(1, 1), rational(-2, 5)));
        // dims: w_a = 0.3, h_a = 0.4, w_b = 1, h_b = 1.
        assert!((built.dims.w_a.to_f64() - 0.3).abs() < 1e-12);
        assert!((built.dims.h_a.to_f64() - 0.4).abs() < 1e-12);
        // Unit area equals |det L| exactly.
        let area = &built.dims.w_a.try_mul(&built.dims.h_a).unwrap()
            + &built.dims.w_b.try_mul(&built.dims.h_b).unwrap();
        let det = l.det().abs();
        assert!(area.eq_exact(&built.dims.ctx.constant(det)));
        let patch = decode(&built.code).unwrap();
        validate_packing(&patch).unwrap();
    }

    #[test]
    fn degenerate_lattice_fails() {
        let l = RationalMatrix([
            [rational(0, 1), rational(0, 1)],
            [rational(1, 1), rational(1, 1)],
        ]);
        assert!(matches!(
            periodic_code_from_lattice(&l, 3),
            Err(StaircaseError::SingularMatrix)
        ));
        // Pure-vertical column: no strictly-positive-x generator pair exists.
        let l2 = RationalMatrix([
            [rational(0, 1), rational(1, 1)],
            [rational(1, 1), rational(0, 1)],
        ]);
        // x-axis aligned vectors are excluded, so the search must fail or
        // produce generators; accept either failure mode here.
        let r = periodic_code_from_lattice(&l2, 3);
        if let Ok(built) = r {
            // If generators were found, the construction must still verify.
            let patch = decode(&built.code).unwrap();
            validate_packing(&patch).unwrap();
        }
    }
}
