//! Core geometry: box sets with exact rational coordinates, dyadic cubes,
//! balls, exact distance predicates, and maximal packings.
//!
//! A `BoxSet` stores every coordinate as a `u64` numerator over one common
//! denominator (`denom`), plus an `f64` shadow for fast scans. With
//! `denom <= 2^42` and dyadic levels `<= 20`, every distance comparison used
//! by the decomposition and counting kernels fits in `u128` and is evaluated
//! exactly; floats never decide a selection.

use std::collections::BTreeMap;

use num::integer::Integer;
use num::{BigInt, Signed, ToPrimitive, Zero};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::rational::{format_rat, parse_rat, rat_u64, Rat, MAX_DENOM};

/// Hard cap on dyadic levels in exact kernels; keeps `u128` products safe.
pub const MAX_LEVEL: u32 = 20;

/// Axis-aligned box, exact numerators over the owning set's denominator.
/// Degenerate sides (zero) are allowed: points and segments are boxes too.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) struct BoxRaw {
    pub lo: [u64; 2],
    pub side: [u64; 2],
}

/// `f64` shadow of a box (lo/hi corners), rounded to nearest.
#[derive(Clone, Copy, Debug)]
pub struct BoxF {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

/// Compact set `E ⊂ [0,1]^d` given as a finite union of closed boxes with
/// exact rational coordinates. `d ∈ {1, 2}`.
#[derive(Clone, Debug)]
pub struct BoxSet {
    dim: usize,
    denom: u64,
    boxes: Vec<BoxRaw>,
    views: Vec<BoxF>,
    normalized: bool,
    pub meta: BTreeMap<String, Value>,
}

impl BoxSet {
    /// Builds a set from `(lo, side)` rational pairs. Boxes are validated to
    /// lie inside `[0,1]^d`, canonically sorted, and deduplicated.
    pub fn new(dim: usize, input: Vec<(Vec<Rat>, Vec<Rat>)>) -> Result<Self> {
        if dim == 0 || dim > 2 {
            return Err(Error::InvalidParams(format!(
                "ambient dimension must be 1 or 2, got {dim}"
            )));
        }
        if input.is_empty() {
            return Err(Error::EmptySet("box set must contain at least one box".into()));
        }
        let mut denom = BigInt::from(1u64);
        for (lo, side) in &input {
            if lo.len() != dim || side.len() != dim {
                return Err(Error::InvalidParams(
                    "box coordinate arity does not match ambient dimension".into(),
                ));
            }
            for r in lo.iter().chain(side.iter()) {
                denom = denom.lcm(r.denom());
            }
        }
        let denom = denom
            .to_u64()
            .filter(|&d| d <= MAX_DENOM)
            .ok_or_else(|| {
                Error::Format(format!(
                    "common coordinate denominator exceeds supported maximum 2^40"
                ))
            })?;
        let mut boxes = Vec::with_capacity(input.len());
        for (lo, side) in &input {
            let mut b = BoxRaw { lo: [0; 2], side: [0; 2] };
            for a in 0..dim {
                let l = scaled_num(&lo[a], denom)?;
                let s = scaled_num(&side[a], denom)?;
                if l.checked_add(s).map_or(true, |hi| hi > denom) {
                    return Err(Error::InvalidParams(
                        "boxes must lie inside the unit cube [0,1]^d".into(),
                    ));
                }
                b.lo[a] = l;
                b.side[a] = s;
            }
            boxes.push(b);
        }
        boxes.sort_unstable();
        boxes.dedup();
        let views = boxes.iter().map(|b| box_view(b, denom, dim)).collect();
        Ok(BoxSet {
            dim,
            denom,
            boxes,
            views,
            normalized: false,
            meta: BTreeMap::new(),
        })
    }

    pub(crate) fn from_raw(
        dim: usize,
        denom: u64,
        mut boxes: Vec<BoxRaw>,
        normalized: bool,
    ) -> Result<Self> {
        if boxes.is_empty() {
            return Err(Error::EmptySet("box set must contain at least one box".into()));
        }
        boxes.sort_unstable();
        boxes.dedup();
        let views = boxes.iter().map(|b| box_view(b, denom, dim)).collect();
        Ok(BoxSet {
            dim,
            denom,
            boxes,
            views,
            normalized,
            meta: BTreeMap::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn denom(&self) -> u64 {
        self.denom
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub(crate) fn raw(&self, i: usize) -> &BoxRaw {
        &self.boxes[i]
    }

    pub fn view(&self, i: usize) -> &BoxF {
        &self.views[i]
    }

    pub fn views(&self) -> &[BoxF] {
        &self.views
    }

    pub fn lo_rat(&self, i: usize, axis: usize) -> Rat {
        rat_u64(self.boxes[i].lo[axis], self.denom)
    }

    pub fn side_rat(&self, i: usize, axis: usize) -> Rat {
        rat_u64(self.boxes[i].side[axis], self.denom)
    }

    pub fn hi_rat(&self, i: usize, axis: usize) -> Rat {
        rat_u64(self.boxes[i].lo[axis] + self.boxes[i].side[axis], self.denom)
    }

    /// Rescales the set by `x ↦ x/2 + 1/4`, placing it inside `[1/4,3/4]^d`.
    /// Idempotent: an already-normalized set is returned unchanged.
    pub fn normalize(mut self) -> BoxSet {
        if self.normalized {
            return self;
        }
        let mut denom = self.denom.checked_mul(4).expect("denominator overflow");
        let mut boxes: Vec<BoxRaw> = self
            .boxes
            .iter()
            .map(|b| {
                let mut nb = BoxRaw { lo: [0; 2], side: [0; 2] };
                for a in 0..self.dim {
                    nb.lo[a] = 2 * b.lo[a] + self.denom;
                    nb.side[a] = 2 * b.side[a];
                }
                nb
            })
            .collect();
        let mut g = denom;
        for b in &boxes {
            for a in 0..self.dim {
                g = gcd64(g, b.lo[a]);
                g = gcd64(g, b.side[a]);
            }
        }
        if g > 1 {
            denom /= g;
            for b in &mut boxes {
                for a in 0..self.dim {
                    b.lo[a] /= g;
                    b.side[a] /= g;
                }
            }
        }
        self.views = boxes.iter().map(|b| box_view(b, denom, self.dim)).collect();
        self.denom = denom;
        self.boxes = boxes;
        self.normalized = true;
        self.meta.insert("normalized".into(), json!(true));
        // Every side was halved, so the construction floor moved one level
        // deeper; keep the recorded resolution in step with the stored set.
        if let Some(v) = self.meta.get("min_side_log2").and_then(Value::as_f64) {
            self.meta.insert("min_side_log2".into(), json!(v + 1.0));
        }
        self
    }

    /// Marks a set that is constructed directly in normalized position.
    pub(crate) fn assume_normalized(mut self) -> BoxSet {
        debug_assert!(self.views.iter().all(|v| (0..self.dim).all(|a| {
            v.lo[a] >= 0.25 - 1e-12 && v.hi[a] <= 0.75 + 1e-12
        })));
        self.normalized = true;
        self.meta.insert("normalized".into(), json!(true));
        self
    }

    /// Bounding box of the union, `f64` shadow.
    pub fn bbox(&self) -> BoxF {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &self.views {
            for a in 0..self.dim {
                lo[a] = lo[a].min(v.lo[a]);
                hi[a] = hi[a].max(v.hi[a]);
            }
        }
        BoxF { lo, hi }
    }

    /// Diameter of the union (largest pairwise point distance), `f64`.
    pub fn diam(&self) -> f64 {
        match self.dim {
            1 => {
                let b = self.bbox();
                b.hi[0] - b.lo[0]
            }
            _ => {
                let mut pts: Vec<[f64; 2]> = Vec::with_capacity(self.views.len() * 4);
                for v in &self.views {
                    pts.push([v.lo[0], v.lo[1]]);
                    pts.push([v.hi[0], v.lo[1]]);
                    pts.push([v.lo[0], v.hi[1]]);
                    pts.push([v.hi[0], v.hi[1]]);
                }
                let hull = convex_hull(&mut pts);
                let mut best = 0.0f64;
                for i in 0..hull.len() {
                    for j in (i + 1)..hull.len() {
                        let dx = hull[i][0] - hull[j][0];
                        let dy = hull[i][1] - hull[j][1];
                        best = best.max(dx * dx + dy * dy);
                    }
                }
                best.sqrt()
            }
        }
    }

    /// Exact Lebesgue measure of the union (length for d=1, area for d=2).
    pub fn measure(&self) -> Rat {
        match self.dim {
            1 => {
                let mut iv: Vec<(u64, u64)> = self
                    .boxes
                    .iter()
                    .map(|b| (b.lo[0], b.lo[0] + b.side[0]))
                    .collect();
                iv.sort_unstable();
                let mut total: u128 = 0;
                let mut cur: Option<(u64, u64)> = None;
                for (lo, hi) in iv {
                    match cur {
                        Some((clo, chi)) if lo <= chi => cur = Some((clo, chi.max(hi))),
                        Some((clo, chi)) => {
                            total += (chi - clo) as u128;
                            cur = Some((lo, hi));
                        }
                        None => cur = Some((lo, hi)),
                    }
                }
                if let Some((clo, chi)) = cur {
                    total += (chi - clo) as u128;
                }
                Rat::new(BigInt::from(total), BigInt::from(self.denom))
            }
            _ => {
                // Sweep over x-slabs; covered y-length recomputed per slab.
                #[derive(Clone, Copy)]
                struct Ev {
                    x: u64,
                    open: bool,
                    id: u32,
                }
                let mut evs: Vec<Ev> = Vec::with_capacity(self.boxes.len() * 2);
                for (i, b) in self.boxes.iter().enumerate() {
                    evs.push(Ev { x: b.lo[0], open: true, id: i as u32 });
                    evs.push(Ev { x: b.lo[0] + b.side[0], open: false, id: i as u32 });
                }
                evs.sort_by_key(|e| (e.x, e.open));
                let mut active: Vec<u32> = Vec::new();
                let mut total: u128 = 0;
                let mut prev_x = 0u64;
                let mut idx = 0usize;
                while idx < evs.len() {
                    let x = evs[idx].x;
                    if x > prev_x && !active.is_empty() {
                        let mut iv: Vec<(u64, u64)> = active
                            .iter()
                            .map(|&i| {
                                let b = &self.boxes[i as usize];
                                (b.lo[1], b.lo[1] + b.side[1])
                            })
                            .collect();
                        iv.sort_unstable();
                        let mut cov: u128 = 0;
                        let mut cur: Option<(u64, u64)> = None;
                        for (lo, hi) in iv {
                            match cur {
                                Some((clo, chi)) if lo <= chi => cur = Some((clo, chi.max(hi))),
                                Some((clo, chi)) => {
                                    cov += (chi - clo) as u128;
                                    cur = Some((lo, hi));
                                }
                                None => cur = Some((lo, hi)),
                            }
                        }
                        if let Some((clo, chi)) = cur {
                            cov += (chi - clo) as u128;
                        }
                        total += cov * (x - prev_x) as u128;
                    }
                    prev_x = x;
                    while idx < evs.len() && evs[idx].x == x {
                        let e = evs[idx];
                        if e.open {
                            active.push(e.id);
                        } else if let Some(pos) = active.iter().position(|&i| i == e.id) {
                            active.swap_remove(pos);
                        }
                        idx += 1;
                    }
                }
                let d2 = BigInt::from(self.denom) * BigInt::from(self.denom);
                Rat::new(BigInt::from(total), d2)
            }
        }
    }

    /// Serializes to the interchange JSON shape:
    /// `{"dim": d, "boxes": [{"lo": [..], "side": [..]}], "meta": {..}}`
    /// with every coordinate a reduced `"p/q"` string.
    pub fn to_json(&self) -> Value {
        let boxes: Vec<Value> = self
            .boxes
            .iter()
            .map(|b| {
                let lo: Vec<Value> = (0..self.dim)
                    .map(|a| Value::String(format_rat(&rat_u64(b.lo[a], self.denom))))
                    .collect();
                let side: Vec<Value> = (0..self.dim)
                    .map(|a| Value::String(format_rat(&rat_u64(b.side[a], self.denom))))
                    .collect();
                json!({"lo": lo, "side": side})
            })
            .collect();
        let mut meta = Map::new();
        for (k, v) in &self.meta {
            meta.insert(k.clone(), v.clone());
        }
        meta.insert("normalized".into(), json!(self.normalized));
        json!({"dim": self.dim, "boxes": boxes, "meta": Value::Object(meta)})
    }

    /// Parses the interchange JSON shape produced by [`BoxSet::to_json`].
    pub fn from_json(v: &Value) -> Result<Self> {
        let dim = v
            .get("dim")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Format("missing or invalid \"dim\"".into()))?
            as usize;
        let arr = v
            .get("boxes")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Format("missing \"boxes\" array".into()))?;
        let mut input = Vec::with_capacity(arr.len());
        for b in arr {
            let parse_vec = |key: &str| -> Result<Vec<Rat>> {
                b.get(key)
                    .and_then(Value::as_array)
                    .ok_or_else(|| Error::Format(format!("box missing \"{key}\" array")))?
                    .iter()
                    .map(|x| {
                        x.as_str()
                            .ok_or_else(|| Error::Format("coordinates must be \"p/q\" strings".into()))
                            .and_then(parse_rat)
                    })
                    .collect()
            };
            let lo = parse_vec("lo")?;
            let side = parse_vec("side")?;
            for r in lo.iter().chain(side.iter()) {
                if r.is_negative() {
                    return Err(Error::InvalidParams("negative box coordinate".into()));
                }
            }
            input.push((lo, side));
        }
        let mut set = BoxSet::new(dim, input)?;
        if let Some(Value::Object(meta)) = v.get("meta") {
            for (k, val) in meta {
                set.meta.insert(k.clone(), val.clone());
            }
            if meta.get("normalized").and_then(Value::as_bool) == Some(true) {
                set.normalized = true;
            }
        }
        Ok(set)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(&self.to_json())
            .map_err(|e| Error::Format(e.to_string()))?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let v: Value =
            serde_json::from_str(&text).map_err(|e| Error::Format(format!("{path:?}: {e}")))?;
        Self::from_json(&v)
    }
}

fn scaled_num(r: &Rat, denom: u64) -> Result<u64> {
    if r.is_negative() {
        return Err(Error::InvalidParams("negative box coordinate".into()));
    }
    let scaled = r.numer() * BigInt::from(denom) / r.denom();
    scaled
        .to_u64()
        .ok_or_else(|| Error::InvalidParams("coordinate outside supported range".into()))
}

fn box_view(b: &BoxRaw, denom: u64, dim: usize) -> BoxF {
    let d = denom as f64;
    let mut v = BoxF { lo: [0.0; 2], hi: [0.0; 2] };
    for a in 0..dim {
        v.lo[a] = b.lo[a] as f64 / d;
        v.hi[a] = (b.lo[a] + b.side[a]) as f64 / d;
    }
    v
}

fn gcd64(a: u64, b: u64) -> u64 {
    let (mut a, mut b) = (a, b);
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Andrew's monotone chain; returns hull vertices (counterclockwise).
fn convex_hull(pts: &mut Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    pts.sort_by(|p, q| p.partial_cmp(q).unwrap());
    pts.dedup();
    if pts.len() <= 2 {
        return pts.clone();
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(pts.len() * 2);
    for &p in pts.iter() {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev() {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Half-open dyadic cube `Π [index_a 2^-level, (index_a+1) 2^-level)` in
/// `[0,1]^d`; closures are used for all intersection/distance tests.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadicCube {
    pub level: u32,
    pub index: [u64; 2],
}

impl DyadicCube {
    pub fn root() -> Self {
        DyadicCube { level: 0, index: [0, 0] }
    }

    pub fn side(&self) -> f64 {
        (0.5f64).powi(self.level as i32)
    }

    /// Diameter `√d · 2^-level`.
    pub fn diam(&self, dim: usize) -> f64 {
        (dim as f64).sqrt() * self.side()
    }

    pub fn lo_f(&self, axis: usize) -> f64 {
        self.index[axis] as f64 * self.side()
    }

    pub fn hi_f(&self, axis: usize) -> f64 {
        (self.index[axis] + 1) as f64 * self.side()
    }

    pub fn lo_rat(&self, axis: usize) -> Rat {
        rat_u64(self.index[axis], 1u64 << self.level)
    }

    pub fn hi_rat(&self, axis: usize) -> Rat {
        rat_u64(self.index[axis] + 1, 1u64 << self.level)
    }

    pub fn center_f(&self, dim: usize) -> [f64; 2] {
        let mut c = [0.0; 2];
        for a in 0..dim {
            c[a] = (self.index[a] as f64 + 0.5) * self.side();
        }
        c
    }

    pub fn child(&self, j: usize, dim: usize) -> DyadicCube {
        let mut index = [0u64; 2];
        for a in 0..dim {
            index[a] = self.index[a] * 2 + ((j >> a) & 1) as u64;
        }
        DyadicCube { level: self.level + 1, index }
    }

    pub fn parent(&self) -> Option<DyadicCube> {
        if self.level == 0 {
            return None;
        }
        Some(DyadicCube {
            level: self.level - 1,
            index: [self.index[0] / 2, self.index[1] / 2],
        })
    }

    /// True when `self` is contained in `anc` (or equal to it).
    pub fn descends_from(&self, anc: &DyadicCube) -> bool {
        if anc.level > self.level {
            return false;
        }
        let shift = self.level - anc.level;
        (0..2).all(|a| self.index[a] >> shift == anc.index[a])
    }
}

/// Closed Euclidean ball; `dim` tells how many center coordinates are live.
#[derive(Clone, Copy, Debug)]
pub struct Ball {
    pub center: [f64; 2],
    pub radius: f64,
    pub dim: usize,
}

impl Ball {
    pub fn new(center: [f64; 2], radius: f64, dim: usize) -> Self {
        Ball { center, radius, dim }
    }
}

#[inline]
fn axis_gap(lo: f64, hi: f64, x: f64) -> f64 {
    if x < lo {
        lo - x
    } else if x > hi {
        x - hi
    } else {
        0.0
    }
}

/// Squared distance from a point to one box, `f64`.
#[inline]
pub fn dist2_point_box(p: &[f64], v: &BoxF, dim: usize) -> f64 {
    let mut s = 0.0;
    for a in 0..dim {
        let g = axis_gap(v.lo[a], v.hi[a], p[a]);
        s += g * g;
    }
    s
}

/// Squared distance between two boxes (their closures), `f64`.
#[inline]
pub fn dist2_box_box(u: &BoxF, v: &BoxF, dim: usize) -> f64 {
    let mut s = 0.0;
    for a in 0..dim {
        let g = (u.lo[a] - v.hi[a]).max(v.lo[a] - u.hi[a]).max(0.0);
        s += g * g;
    }
    s
}

/// Euclidean distance from a point to the union, `f64` scan over all boxes.
pub fn dist_point_to_set(p: &[f64], e: &BoxSet) -> f64 {
    let mut best = f64::INFINITY;
    for v in e.views() {
        let d2 = dist2_point_box(p, v, e.dim());
        if d2 < best {
            best = d2;
        }
    }
    best.sqrt()
}

/// Exact squared distance from a rational point to the union.
pub fn dist2_point_to_set_exact(p: &[Rat], e: &BoxSet) -> Rat {
    let mut best: Option<Rat> = None;
    for i in 0..e.len() {
        let mut d2 = Rat::zero();
        for a in 0..e.dim() {
            let lo = e.lo_rat(i, a);
            let hi = e.hi_rat(i, a);
            let g = if p[a] < lo {
                lo - &p[a]
            } else if p[a] > hi {
                &p[a] - hi
            } else {
                Rat::zero()
            };
            d2 += &g * &g;
        }
        best = match best {
            None => Some(d2),
            Some(b) if d2 < b => Some(d2),
            Some(b) => Some(b),
        };
    }
    best.expect("box set is nonempty")
}

/// Euclidean distance from a dyadic cube (closure) to the union, `f64` value
/// of the exact distance.
pub fn dist_box_to_set(cube: &DyadicCube, e: &BoxSet) -> f64 {
    let ids: Vec<u32> = (0..e.len() as u32).collect();
    cube_min_dist2(e, cube, &ids).sqrt()
}

/// Minimum squared cube-to-box distance over `cands`, `f64`.
pub(crate) fn cube_min_dist2(e: &BoxSet, cube: &DyadicCube, cands: &[u32]) -> f64 {
    let side = cube.side();
    let dim = e.dim();
    let mut lo = [0.0; 2];
    let mut hi = [0.0; 2];
    for a in 0..dim {
        lo[a] = cube.index[a] as f64 * side;
        hi[a] = (cube.index[a] + 1) as f64 * side;
    }
    let cv = BoxF { lo, hi };
    let mut best = f64::INFINITY;
    for &i in cands {
        let d2 = dist2_box_box(&cv, e.view(i as usize), dim);
        if d2 < best {
            best = d2;
        }
    }
    best
}

/// Exact axis gap numerators between a cube and a box, in units of
/// `1/(denom · 2^level)`. Values fit `u64` shifted into `u128` products.
#[inline]
fn cube_box_gaps(e: &BoxSet, cube: &DyadicCube, id: u32, gaps: &mut [u128; 2]) {
    let b = e.raw(id as usize);
    let denom = e.denom() as u128;
    let scale = 1u128 << cube.level;
    for a in 0..e.dim() {
        let cube_lo = cube.index[a] as u128 * denom;
        let cube_hi = (cube.index[a] + 1) as u128 * denom;
        let box_lo = b.lo[a] as u128 * scale;
        let box_hi = (b.lo[a] + b.side[a]) as u128 * scale;
        gaps[a] = if box_lo > cube_hi {
            box_lo - cube_hi
        } else if cube_lo > box_hi {
            cube_lo - box_hi
        } else {
            0
        };
    }
}

/// Exact test `dist(cube, box_id)^2 ≥ coef · 4^{-level}` (integer arithmetic).
#[inline]
pub(crate) fn cube_box_dist2_ge(e: &BoxSet, cube: &DyadicCube, id: u32, coef: u64) -> bool {
    let mut gaps = [0u128; 2];
    cube_box_gaps(e, cube, id, &mut gaps);
    let s = gaps[0] * gaps[0] + gaps[1] * gaps[1];
    let denom = e.denom() as u128;
    s >= coef as u128 * denom * denom
}

/// Exact test: does the cube's closure intersect box `id`?
#[inline]
pub(crate) fn cube_meets_box(e: &BoxSet, cube: &DyadicCube, id: u32) -> bool {
    let mut gaps = [0u128; 2];
    cube_box_gaps(e, cube, id, &mut gaps);
    gaps[0] == 0 && gaps[1] == 0
}

/// Exact squared cube-to-box distance numerator in units of
/// `1/(denom · 2^level)^2`. Compare against `coef · denom^2` for thresholds
/// of the form `coef · 4^{-level}`.
#[inline]
pub(crate) fn cube_box_dist2_num(e: &BoxSet, cube: &DyadicCube, id: u32) -> u128 {
    let mut gaps = [0u128; 2];
    cube_box_gaps(e, cube, id, &mut gaps);
    gaps[0] * gaps[0] + gaps[1] * gaps[1]
}

/// Exact test: box `id` contains the cube's closure.
#[inline]
pub(crate) fn cube_inside_box(e: &BoxSet, cube: &DyadicCube, id: u32) -> bool {
    let b = e.raw(id as usize);
    let denom = e.denom() as u128;
    let scale = 1u128 << cube.level;
    for a in 0..e.dim() {
        let cube_lo = cube.index[a] as u128 * denom;
        let cube_hi = (cube.index[a] + 1) as u128 * denom;
        let box_lo = b.lo[a] as u128 * scale;
        let box_hi = (b.lo[a] + b.side[a]) as u128 * scale;
        if box_lo > cube_lo || cube_hi > box_hi {
            return false;
        }
    }
    true
}

/// Exact minimum over `cands` of `dist(cube, box)^2`, returned as a rational.
pub(crate) fn cube_min_dist2_exact(e: &BoxSet, cube: &DyadicCube, cands: &[u32]) -> Rat {
    let denom = e.denom() as u128;
    let l = denom << cube.level; // common unit: 1/(denom·2^level)
    let mut best: Option<u128> = None;
    for &i in cands {
        let mut gaps = [0u128; 2];
        cube_box_gaps(e, cube, i, &mut gaps);
        let s = gaps[0] * gaps[0] + gaps[1] * gaps[1];
        best = Some(match best {
            None => s,
            Some(b) => b.min(s),
        });
    }
    let s = best.expect("candidate list is nonempty");
    Rat::new(BigInt::from(s), BigInt::from(l) * BigInt::from(l))
}

/// Uniform spatial hash over `[0,1]^2` (or `[0,1]` in d=1) for box lookups.
pub struct BoxIndex {
    cell: f64,
    n: usize,
    dim: usize,
    buckets: Vec<Vec<u32>>,
}

impl BoxIndex {
    pub fn new(e: &BoxSet, cell: f64) -> Self {
        let cell = cell.clamp(1e-6, 1.0);
        let n = ((1.0 / cell).ceil() as usize).max(1);
        let dim = e.dim();
        let total = if dim == 1 { n } else { n * n };
        let mut buckets = vec![Vec::new(); total];
        let clampi = |x: f64| -> usize { ((x / cell) as isize).clamp(0, n as isize - 1) as usize };
        for (i, v) in e.views().iter().enumerate() {
            let x0 = clampi(v.lo[0]);
            let x1 = clampi(v.hi[0]);
            if dim == 1 {
                for x in x0..=x1 {
                    buckets[x].push(i as u32);
                }
            } else {
                let y0 = clampi(v.lo[1]);
                let y1 = clampi(v.hi[1]);
                for x in x0..=x1 {
                    for y in y0..=y1 {
                        buckets[x * n + y].push(i as u32);
                    }
                }
            }
        }
        BoxIndex { cell, n, dim, buckets }
    }

    /// Ids of boxes whose bounding cells meet the window `[lo,hi]` inflated
    /// by `pad`. Superset of the true intersecting ids; fast prefilter.
    pub fn query(&self, lo: &[f64], hi: &[f64], pad: f64) -> Vec<u32> {
        let clampi =
            |x: f64| -> usize { ((x / self.cell) as isize).clamp(0, self.n as isize - 1) as usize };
        let x0 = clampi(lo[0] - pad);
        let x1 = clampi(hi[0] + pad);
        let mut out = Vec::new();
        if self.dim == 1 {
            for x in x0..=x1 {
                out.extend_from_slice(&self.buckets[x]);
            }
        } else {
            let y0 = clampi(lo[1] - pad);
            let y1 = clampi(hi[1] + pad);
            for x in x0..=x1 {
                for y in y0..=y1 {
                    out.extend_from_slice(&self.buckets[x * self.n + y]);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Distance from a point to the set, searching outward ring by ring.
    pub fn dist_point(&self, e: &BoxSet, p: &[f64]) -> f64 {
        let mut ring = 0usize;
        let mut best = f64::INFINITY;
        loop {
            let pad = ring as f64 * self.cell;
            let ids = self.query(p, p, pad);
            for &i in &ids {
                let d2 = dist2_point_box(p, e.view(i as usize), e.dim());
                if d2 < best {
                    best = d2;
                }
            }
            // Boxes outside the current window are at least `pad` away.
            if best.sqrt() <= pad || ring >= 2 * self.n {
                return best.sqrt();
            }
            ring = (ring * 2).max(1);
        }
    }
}

/// Exact point with coordinates `num/denom`, used for packing candidates and
/// sampled witnesses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct RatPoint {
    pub num: [u64; 2],
    pub denom: u64,
}

impl RatPoint {
    pub fn to_f64(&self, dim: usize) -> [f64; 2] {
        let mut p = [0.0; 2];
        for a in 0..dim {
            p[a] = self.num[a] as f64 / self.denom as f64;
        }
        p
    }

    pub fn coord_rat(&self, axis: usize) -> Rat {
        rat_u64(self.num[axis], self.denom)
    }
}

/// Exact squared distance between two `RatPoint`s with the same denominator.
fn rp_dist2_num(p: &RatPoint, q: &RatPoint, dim: usize) -> u128 {
    let mut s = 0u128;
    for a in 0..dim {
        let d = p.num[a].abs_diff(q.num[a]) as u128;
        s += d * d;
    }
    s
}

/// Greedy maximal packing of disjoint closed `r`-balls with centers in `E`.
///
/// Candidate centers are all box corners plus the dyadic grid points of
/// spacing `≤ r/8` that lie in `E`, visited in lexicographic coordinate
/// order. A candidate is kept when its ball stays disjoint from all kept
/// balls (strict center distance `> 2r`, decided exactly). Every candidate
/// ends up within `2r` of a kept center, so the packing is maximal over the
/// candidate set.
pub fn maximal_packing(e: &BoxSet, r: f64) -> Result<Vec<RatPoint>> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidParams(format!("packing radius must be positive, got {r}")));
    }
    let k = grid_level_for_spacing(r / 8.0)?;
    maximal_packing_with_grid(e, r, k)
}

/// Smallest dyadic level whose spacing is at most `target`.
pub fn grid_level_for_spacing(target: f64) -> Result<u32> {
    if !(target > 0.0) {
        return Err(Error::InvalidParams("grid spacing must be positive".into()));
    }
    let mut k = 0u32;
    while (0.5f64).powi(k as i32) > target {
        k += 1;
        if k > MAX_LEVEL {
            return Err(Error::ScaleTooFine(format!(
                "requested spacing {target} finer than dyadic level {MAX_LEVEL}"
            )));
        }
    }
    Ok(k)
}

/// Packing with an explicit candidate-grid level (exposed for tests that
/// exercise monotonicity on a fixed candidate set).
pub fn maximal_packing_with_grid(e: &BoxSet, r: f64, k: u32) -> Result<Vec<RatPoint>> {
    if k > MAX_LEVEL {
        return Err(Error::ScaleTooFine(format!("grid level {k} exceeds maximum {MAX_LEVEL}")));
    }
    let dim = e.dim();
    let denom = e
        .denom()
        .checked_shl(k)
        .ok_or_else(|| Error::ResourceLimit("candidate denominator overflow".into()))?;
    let scale = 1u64 << k;
    let mut cands: Vec<RatPoint> = Vec::new();
    // Box corners.
    for i in 0..e.len() {
        let b = e.raw(i);
        let corners: [[u64; 2]; 4] = [
            [b.lo[0], b.lo[1]],
            [b.lo[0] + b.side[0], b.lo[1]],
            [b.lo[0], b.lo[1] + b.side[1]],
            [b.lo[0] + b.side[0], b.lo[1] + b.side[1]],
        ];
        let n_corners = if dim == 1 { 2 } else { 4 };
        for c in corners.iter().take(n_corners) {
            cands.push(RatPoint { num: [c[0] * scale, c[1] * scale], denom });
        }
    }
    // Dyadic grid nodes inside E: intersect the grid with each box.
    let ed = e.denom();
    for i in 0..e.len() {
        let b = e.raw(i);
        // Grid node j/2^k lies in [lo, hi] iff j·denom ∈ [lo·2^k, hi·2^k].
        let range = |lo: u64, hi: u64| -> (u64, u64) {
            let lo_j = ((lo as u128) * (scale as u128)).div_ceil(ed as u128) as u64;
            let hi_j = (((hi as u128) * (scale as u128)) / (ed as u128)) as u64;
            (lo_j, hi_j.min(scale))
        };
        let (x0, x1) = range(b.lo[0], b.lo[0] + b.side[0]);
        if dim == 1 {
            for j in x0..=x1.max(x0).min(scale) {
                if j > x1 {
                    break;
                }
                cands.push(RatPoint { num: [j * ed, 0], denom });
            }
        } else {
            let (y0, y1) = range(b.lo[1], b.lo[1] + b.side[1]);
            let count = (x1.saturating_sub(x0) as u128 + 1) * (y1.saturating_sub(y0) as u128 + 1);
            if count > 4_000_000 {
                return Err(Error::ResourceLimit(
                    "packing candidate grid exceeds 4e6 nodes; increase r".into(),
                ));
            }
            for jx in x0..=x1 {
                if jx > x1 {
                    break;
                }
                for jy in y0..=y1 {
                    cands.push(RatPoint { num: [jx * ed, jy * ed], denom });
                }
            }
        }
    }
    cands.sort_unstable();
    cands.dedup();
    // Strict exact comparison dist² > (2r)²; (2r)² is itself an exact dyadic
    // rational, so the comparison has no tolerance.
    let thr = Rat::from_float(2.0 * r)
        .map(|t| &t * &t)
        .ok_or_else(|| Error::InvalidParams("packing radius is not finite".into()))?;
    let denom2 = BigInt::from(denom) * BigInt::from(denom);
    let mut kept: Vec<RatPoint> = Vec::new();
    let cell = (2.0 * r).min(1.0);
    let ngrid = ((1.0 / cell).ceil() as usize).max(1);
    let mut occupancy: Vec<Vec<u32>> = vec![Vec::new(); ngrid * ngrid];
    let cell_of = |p: &RatPoint| -> (usize, usize) {
        let f = p.to_f64(dim);
        let cx = ((f[0] / cell) as usize).min(ngrid - 1);
        let cy = if dim == 1 { 0 } else { ((f[1] / cell) as usize).min(ngrid - 1) };
        (cx, cy)
    };
    'cand: for c in &cands {
        let (cx, cy) = cell_of(c);
        let x0 = cx.saturating_sub(2);
        let x1 = (cx + 2).min(ngrid - 1);
        let y0 = cy.saturating_sub(2);
        let y1 = (cy + 2).min(ngrid - 1);
        for gx in x0..=x1 {
            for gy in y0..=y1 {
                for &ki in &occupancy[gx * ngrid + gy] {
                    let q = &kept[ki as usize];
                    let d2 = Rat::new(BigInt::from(rp_dist2_num(c, q, dim)), denom2.clone());
                    if d2 <= thr {
                        continue 'cand;
                    }
                }
            }
        }
        occupancy[cx * ngrid + cy].push(kept.len() as u32);
        kept.push(*c);
    }
    Ok(kept)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn quarter_box() -> BoxSet {
        BoxSet::new(2, vec![(vec![rat(0, 1), rat(0, 1)], vec![rat(1, 4), rat(1, 4)])]).unwrap()
    }

    #[test]
    fn point_distances() {
        let e = quarter_box();
        let d = dist_point_to_set(&[0.5, 0.5], &e);
        assert!((d - (2.0f64).sqrt() / 4.0).abs() < 1e-15);
        assert_eq!(dist_point_to_set(&[0.1, 0.2], &e), 0.0);
        assert_eq!(dist_point_to_set(&[0.25, 0.25], &e), 0.0); // boundary
        let exact = dist2_point_to_set_exact(&[rat(1, 2), rat(1, 2)], &e);
        assert_eq!(exact, rat(1, 8)); // (1/4)² + (1/4)²
    }

    #[test]
    fn cube_distances() {
        let e = quarter_box();
        // Cube [1/2,3/4]²: level 2, index (2,2).
        let q = DyadicCube { level: 2, index: [2, 2] };
        let d = dist_box_to_set(&q, &e);
        assert!((d - (2.0f64).sqrt() / 4.0).abs() < 1e-15);
        // Touching cube has distance zero.
        let t = DyadicCube { level: 2, index: [1, 0] };
        assert_eq!(dist_box_to_set(&t, &e), 0.0);
        assert!(cube_meets_box(&e, &t, 0));
        // Overlapping cube: distance zero.
        let o = DyadicCube { level: 1, index: [0, 0] };
        assert_eq!(dist_box_to_set(&o, &e), 0.0);
        // Exact threshold test: dist² = 1/8 = 2·4^{-2} exactly, so the
        // selection predicate at coef = 2 (diam² in d=2) holds with equality.
        assert!(cube_box_dist2_ge(&e, &q, 0, 2));
        assert!(!cube_box_dist2_ge(&e, &q, 0, 3));
    }

    #[test]
    fn measure_handles_overlap_and_touching() {
        let e = BoxSet::new(
            2,
            vec![
                (vec![rat(0, 1), rat(0, 1)], vec![rat(1, 2), rat(1, 2)]),
                (vec![rat(1, 4), rat(1, 4)], vec![rat(1, 2), rat(1, 2)]),
            ],
        )
        .unwrap();
        // Union area = 1/4 + 1/4 − 1/16 = 7/16.
        assert_eq!(e.measure(), rat(7, 16));
        let seg = BoxSet::new(1, vec![(vec![rat(0, 1)], vec![rat(1, 3)])]).unwrap();
        assert_eq!(seg.measure(), rat(1, 3));
    }

    #[test]
    fn normalization_rescales_into_central_window() {
        let e = quarter_box().normalize();
        assert!(e.is_normalized());
        assert_eq!(e.lo_rat(0, 0), rat(1, 4));
        assert_eq!(e.hi_rat(0, 0), rat(3, 8));
        let again = e.clone().normalize();
        assert_eq!(again.lo_rat(0, 0), rat(1, 4));
    }

    #[test]
    fn json_round_trip() {
        let mut e = quarter_box().normalize();
        e.meta.insert("name".into(), serde_json::json!("quarter"));
        let v = e.to_json();
        let back = BoxSet::from_json(&v).unwrap();
        assert_eq!(back.dim(), 2);
        assert_eq!(back.len(), 1);
        assert!(back.is_normalized());
        assert_eq!(back.lo_rat(0, 0), rat(1, 4));
        assert_eq!(back.to_json(), v);
    }

    #[test]
    fn packing_two_far_points() {
        // E = {0} ∪ {1} in d=1, r = 0.4: both survive.
        let e = BoxSet::new(
            1,
            vec![
                (vec![rat(0, 1)], vec![rat(0, 1)]),
                (vec![rat(1, 1)], vec![rat(0, 1)]),
            ],
        )
        .unwrap();
        let p = maximal_packing(&e, 0.4).unwrap();
        assert_eq!(p.len(), 2);
    }

    #[test]
    fn packing_drops_crowded_center() {
        // E = {0, 1/20, 1}, r = 0.1: greedy keeps {0, 1}.
        let e = BoxSet::new(
            1,
            vec![
                (vec![rat(0, 1)], vec![rat(0, 1)]),
                (vec![rat(1, 20)], vec![rat(0, 1)]),
                (vec![rat(1, 1)], vec![rat(0, 1)]),
            ],
        )
        .unwrap();
        let p = maximal_packing(&e, 0.1).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p[0].coord_rat(0), rat(0, 1));
        assert_eq!(p[1].coord_rat(0), rat(1, 1));
    }

    #[test]
    fn packing_single_point() {
        let e = BoxSet::new(2, vec![(vec![rat(1, 2), rat(1, 2)], vec![rat(0, 1), rat(0, 1)])])
            .unwrap();
        for r in [0.01, 0.3, 2.0] {
            assert_eq!(maximal_packing(&e, r).unwrap().len(), 1);
        }
    }

    #[test]
    fn diam_of_union() {
        let e = quarter_box();
        assert!((e.diam() - (2.0f64).sqrt() / 4.0).abs() < 1e-12);
        let two = BoxSet::new(
            2,
            vec![
                (vec![rat(0, 1), rat(0, 1)], vec![rat(0, 1), rat(0, 1)]),
                (vec![rat(1, 1), rat(1, 2)], vec![rat(0, 1), rat(0, 1)]),
            ],
        )
        .unwrap();
        assert!((two.diam() - (1.25f64).sqrt()).abs() < 1e-12);
    }
}
