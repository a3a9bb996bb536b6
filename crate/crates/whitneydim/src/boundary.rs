//! Parallel-set geometry in the plane: tubular neighborhood volumes,
//! contoured r-boundaries, boundary-length profiles, and the spherical
//! dimension estimates they feed.
//!
//! Two length backends cover different scale ranges. Marching squares on a
//! materialized distance field measures any set at radii `r >= 8h`. An exact
//! arc-and-segment arrangement of the dilated box union works piecewise in
//! closed form, so it reaches radii far below any affordable grid and radii
//! past the set diameter, where the neighborhood spills out of the unit
//! square.

use crate::dimension::{clamp_value, fit_dimension, DimensionEstimate, FitOptions, FitVariant};
use crate::error::{Error, Result};
use crate::field::DistanceField;
use crate::geom::{dist_point_to_set, BoxF, BoxSet};
use crate::whitney::GenerationCounts;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashMap;
use std::f64::consts::PI;

/// Iso-level polyline extracted from a distance field.
///
/// Segments are oriented with the sublevel region `{dist < r}` on the left.
/// Endpoints lie on grid edges; matching endpoints of adjacent cells are
/// bitwise identical because each edge is interpolated once, from its
/// lower-indexed node.
#[derive(Debug, Clone, Serialize)]
pub struct BoundaryCurve {
    pub r: f64,
    pub grid_level: u32,
    pub segments: Vec<([f64; 2], [f64; 2])>,
    pub total_length: f64,
    /// Connected components of the segment graph (closed loops, plus any
    /// open chains clipped by the domain edge).
    pub components: usize,
}

impl BoundaryCurve {
    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}

/// One row of a boundary profile: radius, contour length, neighborhood
/// volume.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProfileRow {
    pub r: f64,
    pub length: f64,
    pub volume: f64,
}

/// Volume (area in d=2, length in d=1) of the open r-neighborhood,
/// measured by counting grid nodes with `dist < r`.
///
/// The count times `h^d` carries an `O(h · perimeter)` bias, so the radius
/// must stay well above the grid spacing.
pub fn neighborhood_volume(field: &DistanceField, r: f64) -> Result<f64> {
    let h = field.h();
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidParams(format!("radius {r} must be positive")));
    }
    if r < 4.0 * h {
        return Err(Error::ScaleTooFine(format!(
            "radius {r} below 4h = {} at grid level {}",
            4.0 * h,
            field.k()
        )));
    }
    let count = field.values().iter().filter(|&&v| v < r).count();
    Ok(count as f64 * h.powi(field.dim() as i32))
}

/// Interior segment emitted by one cell, keyed by the global ids of the two
/// crossed edges so components can be linked without float matching.
struct RawSeg {
    from: u64,
    to: u64,
    a: [f64; 2],
    b: [f64; 2],
}

/// Global edge id: each grid edge named by its lower-indexed node and
/// orientation (0 horizontal, 1 vertical).
fn edge_id(n: usize, ix: usize, iy: usize, vertical: bool) -> u64 {
    (((iy * n + ix) as u64) << 1) | vertical as u64
}

struct Crossings {
    n: usize,
    i: usize,
    j: usize,
    h: f64,
    v: [f64; 4], // v00, v10, v11, v01
    r: f64,
}

impl Crossings {
    /// Interpolated crossing on one of the cell's four edges:
    /// 0 bottom, 1 right, 2 top, 3 left. Always interpolates from the
    /// lower-indexed node so shared edges agree bitwise.
    fn point(&self, edge: u8) -> (u64, [f64; 2]) {
        let (i, j, h) = (self.i as f64, self.j as f64, self.h);
        let [v00, v10, v11, v01] = self.v;
        match edge {
            0 => {
                let t = (self.r - v00) / (v10 - v00);
                (edge_id(self.n, self.i, self.j, false), [(i + t) * h, j * h])
            }
            1 => {
                let t = (self.r - v10) / (v11 - v10);
                (edge_id(self.n, self.i + 1, self.j, true), [(i + 1.0) * h, (j + t) * h])
            }
            2 => {
                let t = (self.r - v01) / (v11 - v01);
                (edge_id(self.n, self.i, self.j + 1, false), [(i + t) * h, (j + 1.0) * h])
            }
            _ => {
                let t = (self.r - v00) / (v01 - v00);
                (edge_id(self.n, self.i, self.j, true), [i * h, (j + t) * h])
            }
        }
    }

    fn emit(&self, from: u8, to: u8, out: &mut Vec<RawSeg>) {
        let (fid, a) = self.point(from);
        let (tid, b) = self.point(to);
        out.push(RawSeg { from: fid, to: tid, a, b });
    }
}

/// Marching squares at iso-value `r` with linear edge interpolation.
///
/// Corner classification is strict (`dist < r` is inside). The two
/// ambiguous saddle cases are resolved by the sign of the exact distance at
/// the cell center rather than by a fixed convention, which keeps the
/// topology right near thin features.
pub fn extract_boundary(e: &BoxSet, field: &DistanceField, r: f64) -> Result<BoundaryCurve> {
    if field.dim() != 2 {
        return Err(Error::InvalidParams(
            "contour extraction needs a two-dimensional field".into(),
        ));
    }
    let h = field.h();
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidParams(format!("radius {r} must be positive")));
    }
    if r < 8.0 * h {
        return Err(Error::ScaleTooFine(format!(
            "radius {r} below 8h = {} at grid level {}",
            8.0 * h,
            field.k()
        )));
    }
    let n = field.n();
    let rows: Vec<Vec<RawSeg>> = (0..n - 1)
        .into_par_iter()
        .map(|j| {
            let mut out = Vec::new();
            for i in 0..n - 1 {
                let v00 = field.get(i, j);
                let v10 = field.get(i + 1, j);
                let v11 = field.get(i + 1, j + 1);
                let v01 = field.get(i, j + 1);
                let case = (v00 < r) as u8
                    | ((v10 < r) as u8) << 1
                    | ((v11 < r) as u8) << 2
                    | ((v01 < r) as u8) << 3;
                if case == 0 || case == 15 {
                    continue;
                }
                let cell = Crossings { n, i, j, h, v: [v00, v10, v11, v01], r };
                match case {
                    1 => cell.emit(0, 3, &mut out),
                    2 => cell.emit(1, 0, &mut out),
                    3 => cell.emit(1, 3, &mut out),
                    4 => cell.emit(2, 1, &mut out),
                    5 => {
                        let c = [(i as f64 + 0.5) * h, (j as f64 + 0.5) * h];
                        if dist_point_to_set(&c, e) < r {
                            cell.emit(0, 1, &mut out);
                            cell.emit(2, 3, &mut out);
                        } else {
                            cell.emit(0, 3, &mut out);
                            cell.emit(2, 1, &mut out);
                        }
                    }
                    6 => cell.emit(2, 0, &mut out),
                    7 => cell.emit(2, 3, &mut out),
                    8 => cell.emit(3, 2, &mut out),
                    9 => cell.emit(0, 2, &mut out),
                    10 => {
                        let c = [(i as f64 + 0.5) * h, (j as f64 + 0.5) * h];
                        if dist_point_to_set(&c, e) < r {
                            cell.emit(1, 2, &mut out);
                            cell.emit(3, 0, &mut out);
                        } else {
                            cell.emit(1, 0, &mut out);
                            cell.emit(3, 2, &mut out);
                        }
                    }
                    11 => cell.emit(1, 2, &mut out),
                    12 => cell.emit(3, 1, &mut out),
                    13 => cell.emit(0, 1, &mut out),
                    14 => cell.emit(3, 0, &mut out),
                    _ => unreachable!(),
                }
            }
            out
        })
        .collect();

    let mut segments = Vec::new();
    let mut total = 0.0f64;
    let mut edge_index: HashMap<u64, u32> = HashMap::new();
    let mut dsu = Dsu::new();
    for row in rows {
        for s in row {
            total += ((s.b[0] - s.a[0]).powi(2) + (s.b[1] - s.a[1]).powi(2)).sqrt();
            let next = edge_index.len() as u32;
            let fa = *edge_index.entry(s.from).or_insert(next);
            let next = edge_index.len() as u32;
            let fb = *edge_index.entry(s.to).or_insert(next);
            dsu.grow(edge_index.len());
            dsu.union(fa, fb);
            segments.push((s.a, s.b));
        }
    }
    let components = dsu.roots();
    Ok(BoundaryCurve {
        r,
        grid_level: field.k(),
        segments,
        total_length: total,
        components,
    })
}

struct Dsu {
    parent: Vec<u32>,
}

impl Dsu {
    fn new() -> Self {
        Dsu { parent: Vec::new() }
    }

    fn grow(&mut self, n: usize) {
        while self.parent.len() < n {
            self.parent.push(self.parent.len() as u32);
        }
    }

    fn find(&mut self, x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        let mut cur = x;
        while self.parent[cur as usize] != root {
            let next = self.parent[cur as usize];
            self.parent[cur as usize] = root;
            cur = next;
        }
        root
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra as usize] = rb;
        }
    }

    fn roots(&mut self) -> usize {
        (0..self.parent.len() as u32).filter(|&i| self.find(i) == i).count()
    }
}

/// Geometric radius schedule `r_i = r0 · ratio^i`.
pub fn geometric_schedule(r0: f64, ratio: f64, n: usize) -> Result<Vec<f64>> {
    if !(r0.is_finite() && r0 > 0.0) || !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidParams(format!(
            "schedule needs r0 > 0 and ratio in (0,1); got r0={r0}, ratio={ratio}"
        )));
    }
    if n == 0 || n > 128 {
        return Err(Error::InvalidParams(format!("schedule length {n} out of range [1, 128]")));
    }
    Ok((0..n).map(|i| r0 * ratio.powi(i as i32)).collect())
}

/// Contour length and neighborhood volume at each schedule radius, with the
/// schedule clipped to the field's trustworthy band `[8h, diam(E)/2]` (a
/// degenerate single-point set has no diameter, so its upper clip is 1/4).
/// Rows come back sorted by descending radius.
pub fn boundary_length_profile(
    e: &BoxSet,
    field: &DistanceField,
    schedule: &[f64],
) -> Result<Vec<ProfileRow>> {
    let h = field.h();
    let diam = e.diam();
    let hi = if diam > 0.0 { diam / 2.0 } else { 0.25 };
    let mut rs: Vec<f64> = schedule
        .iter()
        .copied()
        .filter(|&r| r >= 8.0 * h && r <= hi)
        .collect();
    rs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    rs.dedup();
    if rs.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no schedule radii survive clipping to [{}, {hi}]",
            8.0 * h
        )));
    }
    rs.par_iter()
        .map(|&r| {
            let curve = extract_boundary(e, field, r)?;
            let volume = neighborhood_volume(field, r)?;
            Ok(ProfileRow { r, length: curve.total_length, volume })
        })
        .collect()
}

/// Least-squares slope of `log length` against `log r` over the finest
/// `tail` rows with positive length.
pub fn profile_slope(rows: &[ProfileRow], tail: usize) -> Result<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|p| p.length > 0.0)
        .map(|p| (p.r.log2(), p.length.log2()))
        .collect();
    let take = tail.max(2).min(pts.len());
    let tailpts = &pts[pts.len() - take..];
    if tailpts.len() < 2 || tailpts[0].0 - tailpts[tailpts.len() - 1].0 < 0.49 {
        return Err(Error::InsufficientData(format!(
            "{} usable profile rows; need 2 spanning half an octave",
            tailpts.len()
        )));
    }
    Ok(least_squares(tailpts).0)
}

fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let rss: f64 = pts
        .iter()
        .map(|p| {
            let d = p.1 - (slope * p.0 + intercept);
            d * d
        })
        .sum();
    (slope, (rss / n).sqrt())
}

/// Spherical dimension estimates by two routes, reported together with
/// their discrepancy.
#[derive(Debug, Clone, Serialize)]
pub struct SphericalDims {
    pub contour_lower: DimensionEstimate,
    pub contour_upper: DimensionEstimate,
    /// Least-squares slope of `log2 length` vs `log2 r` over the contour
    /// tail; 1 for a point, 0 for a segment, `d - 1 - s` for an s-set.
    pub contour_slope: f64,
    pub whitney_lower: DimensionEstimate,
    pub whitney_upper: DimensionEstimate,
    /// Largest paired gap between the two methods' variants.
    pub discrepancy: f64,
}

/// Estimates the spherical dimension from a boundary-length profile
/// (contour method) and from complement-cube counts (count method).
///
/// The length of the r-boundary scales like `r^{d-1-λ}`, so each secant
/// slope α over the profile tail gives an exponent `λ = d-1-α`; the
/// extremes over secants spanning at least one octave bound the lower and
/// upper versions. The count method reuses the generation-count fit.
pub fn spherical_dims(
    profile: &[ProfileRow],
    counts: &GenerationCounts,
    ambient: usize,
    opts: &FitOptions,
) -> Result<SphericalDims> {
    let d1 = (ambient as f64) - 1.0;
    let pts: Vec<(f64, f64)> = profile
        .iter()
        .filter(|p| p.length > 0.0)
        .map(|p| (p.r.log2(), p.length.log2()))
        .collect();
    // Keep the tail tight: smooth sets carry additive lower-order terms
    // (a stadium is 2L + 2πr) whose bias shrinks with the radius.
    let take = pts.len().min((opts.tail as usize).max(2));
    let tail = &pts[pts.len() - take..];
    let mut alphas: Vec<f64> = Vec::new();
    for i in 0..tail.len() {
        for j in i + 1..tail.len() {
            let dx = tail[i].0 - tail[j].0;
            if dx >= 0.99 {
                alphas.push((tail[i].1 - tail[j].1) / dx);
            }
        }
    }
    if alphas.is_empty() {
        return Err(Error::InsufficientData(format!(
            "{} profile rows span less than one octave",
            tail.len()
        )));
    }
    let a_max = alphas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let a_min = alphas.iter().copied().fold(f64::INFINITY, f64::min);
    let (ls_slope, rms) = least_squares(tail);
    let window = (-tail[0].0, -tail[tail.len() - 1].0);
    let mk = |value: f64, variant: FitVariant| DimensionEstimate {
        value: clamp_value(value, ambient),
        variant,
        method: "spherical-contour".into(),
        window,
        residual: rms,
        samples: tail.len(),
        witness: None,
    };
    let contour_lower = mk(d1 - a_max, FitVariant::Lower);
    let contour_upper = mk(d1 - a_min, FitVariant::Upper);
    let mut whitney_lower = fit_dimension(counts, opts, FitVariant::Lower, "spherical-count")?;
    let mut whitney_upper = fit_dimension(counts, opts, FitVariant::Upper, "spherical-count")?;
    whitney_lower.value = clamp_value(whitney_lower.value, ambient);
    whitney_upper.value = clamp_value(whitney_upper.value, ambient);
    let discrepancy = (contour_lower.value - whitney_lower.value)
        .abs()
        .max((contour_upper.value - whitney_upper.value).abs());
    Ok(SphericalDims {
        contour_lower,
        contour_upper,
        contour_slope: ls_slope,
        whitney_lower,
        whitney_upper,
        discrepancy,
    })
}

/// Total length of `curve ∩ rect` (closed rectangle), by parametric
/// clipping of each segment.
pub fn clip_length(curve: &BoundaryCurve, lo: [f64; 2], hi: [f64; 2]) -> f64 {
    curve
        .segments
        .iter()
        .map(|&(a, b)| seg_rect_len(a, b, lo, hi))
        .sum()
}

/// Length of the part of segment `a..b` inside the closed rectangle.
pub(crate) fn seg_rect_len(a: [f64; 2], b: [f64; 2], lo: [f64; 2], hi: [f64; 2]) -> f64 {
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    for ax in 0..2 {
        let p = b[ax] - a[ax];
        if p == 0.0 {
            if a[ax] < lo[ax] || a[ax] > hi[ax] {
                return 0.0;
            }
        } else {
            let mut ta = (lo[ax] - a[ax]) / p;
            let mut tb = (hi[ax] - a[ax]) / p;
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
            if t0 > t1 {
                return 0.0;
            }
        }
    }
    if t1 <= t0 {
        return 0.0;
    }
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    len * (t1 - t0)
}

const MAX_EXACT_BOXES: usize = 100_000;

fn gap1(x: f64, lo: f64, hi: f64) -> f64 {
    (lo - x).max(x - hi).max(0.0)
}

fn dist_to_view(p: [f64; 2], b: &BoxF) -> f64 {
    let gx = gap1(p[0], b.lo[0], b.hi[0]);
    let gy = gap1(p[1], b.lo[1], b.hi[1]);
    (gx * gx + gy * gy).sqrt()
}

fn box_gap2(a: &BoxF, b: &BoxF) -> f64 {
    let gx = (b.lo[0] - a.hi[0]).max(a.lo[0] - b.hi[0]).max(0.0);
    let gy = (b.lo[1] - a.hi[1]).max(a.lo[1] - b.hi[1]).max(0.0);
    gx * gx + gy * gy
}

/// Merges open intervals and returns the covered measure within `[a, b]`.
fn covered_measure(intervals: &mut Vec<(f64, f64)>, a: f64, b: f64) -> f64 {
    intervals.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut covered = 0.0;
    let mut cur: Option<(f64, f64)> = None;
    for &(s, t) in intervals.iter() {
        let (s, t) = (s.max(a), t.min(b));
        if t <= s {
            continue;
        }
        match cur {
            None => cur = Some((s, t)),
            Some((cs, ct)) => {
                if s <= ct {
                    cur = Some((cs, ct.max(t)));
                } else {
                    covered += ct - cs;
                    cur = Some((s, t));
                }
            }
        }
    }
    if let Some((cs, ct)) = cur {
        covered += ct - cs;
    }
    covered
}

/// Exact length of the r-boundary `{x : dist(x, E) = r}` in the plane,
/// measured on the arrangement of dilated boxes.
///
/// The boundary of each dilated box consists of four offset segments and
/// four quarter arcs; a piece survives exactly where no other dilate covers
/// it. Each covering dilate is convex, so it clips one interval from a
/// segment piece (closed form) and one angular interval from an arc piece
/// (crossing candidates plus midpoint tests). Works at any radius,
/// including `r > diam(E)`, and does not clip to the unit square.
pub fn exact_perimeter(e: &BoxSet, r: f64) -> Result<f64> {
    if e.dim() != 2 {
        return Err(Error::InvalidParams("exact perimeter needs a planar set".into()));
    }
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidParams(format!("radius {r} must be positive")));
    }
    if e.len() > MAX_EXACT_BOXES {
        return Err(Error::ResourceLimit(format!(
            "{} boxes exceed the exact-arrangement cap {MAX_EXACT_BOXES}",
            e.len()
        )));
    }
    let views = e.views();
    let maxside = views
        .iter()
        .map(|b| (b.hi[0] - b.lo[0]).max(b.hi[1] - b.lo[1]))
        .fold(0.0f64, f64::max);
    let cell = 2.0 * r + maxside;
    let key = |x: f64, y: f64| ((x / cell).floor() as i64, (y / cell).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
    for (i, b) in views.iter().enumerate() {
        let c = key(0.5 * (b.lo[0] + b.hi[0]), 0.5 * (b.lo[1] + b.hi[1]));
        grid.entry(c).or_default().push(i as u32);
    }
    let per_box: Vec<f64> = (0..views.len())
        .into_par_iter()
        .map(|i| {
            let me = &views[i];
            let c = key(0.5 * (me.lo[0] + me.hi[0]), 0.5 * (me.lo[1] + me.hi[1]));
            let mut cands: Vec<(f64, u32)> = Vec::new();
            for dy in -1..=1 {
                for dx in -1..=1 {
                    if let Some(list) = grid.get(&(c.0 + dx, c.1 + dy)) {
                        for &j in list {
                            if j as usize != i {
                                let g2 = box_gap2(me, &views[j as usize]);
                                if g2 < 4.0 * r * r {
                                    cands.push((g2, j));
                                }
                            }
                        }
                    }
                }
            }
            cands.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut total = 0.0;
            // Straight pieces: (fixed coordinate axis, offset position,
            // span) for each positive-length side.
            for (vert, pos, a, b) in [
                (false, me.lo[1] - r, me.lo[0], me.hi[0]),
                (false, me.hi[1] + r, me.lo[0], me.hi[0]),
                (true, me.lo[0] - r, me.lo[1], me.hi[1]),
                (true, me.hi[0] + r, me.lo[1], me.hi[1]),
            ] {
                if b <= a {
                    continue;
                }
                total += uncovered_span(views, &cands, i, vert, pos, a, b, r);
            }
            // Quarter arcs, counterclockwise from the top-right corner.
            for (q, th0) in [
                ([me.hi[0], me.hi[1]], 0.0),
                ([me.lo[0], me.hi[1]], 0.5 * PI),
                ([me.lo[0], me.lo[1]], PI),
                ([me.hi[0], me.lo[1]], 1.5 * PI),
            ] {
                total += r * uncovered_arc(views, &cands, i, q, th0, th0 + 0.5 * PI, r);
            }
            total
        })
        .collect();
    Ok(per_box.iter().sum())
}

/// Uncovered measure of a straight piece of the dilate boundary. `vert`
/// selects the orientation: a horizontal piece lives at `y = pos` and spans
/// `x ∈ [a, b]`, a vertical piece at `x = pos` spans `y ∈ [a, b]`.
#[allow(clippy::too_many_arguments)]
fn uncovered_span(
    views: &[BoxF],
    cands: &[(f64, u32)],
    owner: usize,
    vert: bool,
    pos: f64,
    a: f64,
    b: f64,
    r: f64,
) -> f64 {
    let (off_ax, span_ax) = if vert { (0, 1) } else { (1, 0) };
    let mut covered: Vec<(f64, f64)> = Vec::new();
    for &(_, j) in cands {
        let bx = &views[j as usize];
        let g = gap1(pos, bx.lo[off_ax], bx.hi[off_ax]);
        let (lo, hi) = if g < r {
            let rho = (r * r - g * g).sqrt();
            (bx.lo[span_ax] - rho, bx.hi[span_ax] + rho)
        } else if g == r && (j as usize) < owner {
            // Coincident boundary pieces: the lower-indexed box keeps them.
            (bx.lo[span_ax], bx.hi[span_ax])
        } else {
            continue;
        };
        if lo <= a && hi >= b {
            return 0.0;
        }
        if hi > a && lo < b {
            covered.push((lo, hi));
        }
    }
    (b - a) - covered_measure(&mut covered, a, b)
}

/// Uncovered angular measure of the arc of `circle(q, r)` over
/// `[th0, th1]`. Each candidate dilate is convex, so it covers a single
/// angular interval, recovered from boundary-crossing candidates plus a
/// midpoint test per gap.
#[allow(clippy::too_many_arguments)]
fn uncovered_arc(
    views: &[BoxF],
    cands: &[(f64, u32)],
    owner: usize,
    q: [f64; 2],
    th0: f64,
    th1: f64,
    r: f64,
) -> f64 {
    let range = th1 - th0;
    let eps = 1e-9;
    let mut covered: Vec<(f64, f64)> = Vec::new();
    let mut ths: Vec<f64> = Vec::new();
    for &(_, j) in cands {
        let bx = &views[j as usize];
        ths.clear();
        ths.push(th0);
        ths.push(th1);
        // Crossings with the four offset lines of the candidate's dilate.
        for (axis, level, vlo, vhi) in [
            (0usize, bx.lo[0] - r, bx.lo[1], bx.hi[1]),
            (0, bx.hi[0] + r, bx.lo[1], bx.hi[1]),
            (1, bx.lo[1] - r, bx.lo[0], bx.hi[0]),
            (1, bx.hi[1] + r, bx.lo[0], bx.hi[0]),
        ] {
            let c = (level - q[axis]) / r;
            if c.abs() > 1.0 {
                continue;
            }
            let base = c.clamp(-1.0, 1.0).acos();
            let pair = if axis == 0 { [base, -base] } else { [0.5 * PI - base, 0.5 * PI + base] };
            for th in pair {
                let p = [q[0] + r * th.cos(), q[1] + r * th.sin()];
                let other = 1 - axis;
                if p[other] >= vlo - eps && p[other] <= vhi + eps {
                    push_angle(&mut ths, th, th0, th1);
                }
            }
        }
        // Crossings with the candidate's four corner circles.
        for w in [
            [bx.lo[0], bx.lo[1]],
            [bx.hi[0], bx.lo[1]],
            [bx.hi[0], bx.hi[1]],
            [bx.lo[0], bx.hi[1]],
        ] {
            let (dx, dy) = (w[0] - q[0], w[1] - q[1]);
            let dlen = (dx * dx + dy * dy).sqrt();
            if dlen <= 0.0 || dlen >= 2.0 * r {
                continue;
            }
            let phi = dy.atan2(dx);
            let beta = (dlen / (2.0 * r)).clamp(-1.0, 1.0).acos();
            push_angle(&mut ths, phi - beta, th0, th1);
            push_angle(&mut ths, phi + beta, th0, th1);
        }
        ths.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for w in ths.windows(2) {
            if w[1] - w[0] < 1e-15 {
                continue;
            }
            let mid = 0.5 * (w[0] + w[1]);
            let p = [q[0] + r * mid.cos(), q[1] + r * mid.sin()];
            let d = dist_to_view(p, bx);
            if d < r || (d == r && (j as usize) < owner) {
                covered.push((w[0], w[1]));
            }
        }
        let got = covered_measure(&mut covered, th0, th1);
        if got >= range - 1e-12 {
            return 0.0;
        }
    }
    range - covered_measure(&mut covered, th0, th1)
}

/// Normalizes `th` by multiples of 2π into `[th0, th1]` if possible and
/// records it as a partition candidate.
fn push_angle(ths: &mut Vec<f64>, th: f64, th0: f64, th1: f64) {
    for cand in [th, th + 2.0 * PI, th - 2.0 * PI] {
        if cand > th0 && cand < th1 {
            ths.push(cand);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dimension::FitOptions;
    use crate::rational::rat;
    use crate::setgen::named_set;
    use crate::whitney::{generation_counts, whitney_counts_only};

    fn circle_field(k: u32) -> (BoxSet, DistanceField) {
        let e = named_set("point", None).unwrap().normalize();
        let f = DistanceField::build(&e, k).unwrap();
        (e, f)
    }

    #[test]
    fn circle_length_volume_and_topology() {
        let (e, f) = circle_field(11);
        let r = 0.125;
        let curve = extract_boundary(&e, &f, r).unwrap();
        let expect = 2.0 * PI * r;
        assert!(
            (curve.total_length - expect).abs() <= 0.015 * expect,
            "length {} vs {}",
            curve.total_length,
            expect
        );
        assert_eq!(curve.components, 1);
        assert!(curve.segments.len() > 100);

        let vol = neighborhood_volume(&f, r).unwrap();
        let area = PI * r * r;
        assert!((vol - area).abs() <= 0.01 * area, "volume {vol} vs {area}");
    }

    #[test]
    fn two_far_points_two_components() {
        let input = vec![
            (vec![rat(5, 16), rat(1, 2)], vec![rat(0, 1), rat(0, 1)]),
            (vec![rat(11, 16), rat(1, 2)], vec![rat(0, 1), rat(0, 1)]),
        ];
        let e = BoxSet::new(2, input).unwrap().assume_normalized();
        let f = DistanceField::build(&e, 11).unwrap();
        let r = 0.125;
        let curve = extract_boundary(&e, &f, r).unwrap();
        let expect = 4.0 * PI * r;
        assert!((curve.total_length - expect).abs() <= 0.02 * expect);
        assert_eq!(curve.components, 2);
    }

    #[test]
    fn stadium_length_matches_closed_form() {
        let e = named_set("segment", None).unwrap().normalize();
        let f = DistanceField::build(&e, 11).unwrap();
        let r = 1.0 / 16.0;
        let curve = extract_boundary(&e, &f, r).unwrap();
        let expect = 2.0 * 0.5 + 2.0 * PI * r;
        assert!(
            (curve.total_length - expect).abs() <= 0.015 * expect,
            "length {} vs {}",
            curve.total_length,
            expect
        );
        assert_eq!(curve.components, 1);
    }

    #[test]
    fn contour_points_sit_on_the_level_set() {
        let e = named_set("carpet", Some(3)).unwrap().normalize();
        let f = DistanceField::build(&e, 10).unwrap();
        let r = 1.0 / 32.0;
        let curve = extract_boundary(&e, &f, r).unwrap();
        assert!(!curve.is_empty());
        let h = f.h();
        let stride = (curve.segments.len() / 1000).max(1);
        for (a, b) in curve.segments.iter().step_by(stride) {
            let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
            let d = dist_point_to_set(&mid, &e);
            assert!((d - r).abs() <= 2.0 * h, "midpoint off level set: {} vs {}", d, r);
        }
    }

    #[test]
    fn length_stable_under_refinement() {
        let e = named_set("point", None).unwrap().normalize();
        let r = 0.125;
        let coarse = extract_boundary(&e, &DistanceField::build(&e, 10).unwrap(), r).unwrap();
        let fine = extract_boundary(&e, &DistanceField::build(&e, 11).unwrap(), r).unwrap();
        let rel = (coarse.total_length - fine.total_length).abs() / fine.total_length;
        assert!(rel <= 0.01, "refinement moved length by {rel}");
    }

    #[test]
    fn volume_monotone_and_consistent_with_length() {
        let (e, f) = circle_field(11);
        let rs = geometric_schedule(0.125, 0.5f64.sqrt(), 6).unwrap();
        let mut last = f64::INFINITY;
        for &r in &rs {
            let v = neighborhood_volume(&f, r).unwrap();
            assert!(v <= last);
            last = v;
        }
        let r = 0.125;
        let delta = r / 16.0;
        let dv = (neighborhood_volume(&f, r + delta).unwrap()
            - neighborhood_volume(&f, r).unwrap())
            / delta;
        let len = extract_boundary(&e, &f, r).unwrap().total_length;
        assert!((dv - len).abs() <= 0.1 * len, "dV/dr {} vs length {}", dv, len);
    }

    #[test]
    fn rejects_too_fine_radii() {
        let (e, f) = circle_field(8);
        let h = f.h();
        assert!(matches!(
            extract_boundary(&e, &f, 7.9 * h),
            Err(Error::ScaleTooFine(_))
        ));
        assert!(matches!(
            neighborhood_volume(&f, 3.9 * h),
            Err(Error::ScaleTooFine(_))
        ));
    }

    #[test]
    fn empty_curve_above_max_distance() {
        let e = named_set("square", None).unwrap().normalize();
        let f = DistanceField::build(&e, 8).unwrap();
        // Every node of [0,1]^2 is within 1/4·sqrt(2) of the square.
        let curve = extract_boundary(&e, &f, 0.9).unwrap();
        assert!(curve.is_empty());
        assert_eq!(curve.total_length, 0.0);
        assert_eq!(curve.components, 0);
    }

    #[test]
    fn profile_slopes_for_smooth_sets() {
        let (e, f) = circle_field(11);
        let sched = geometric_schedule(0.125, 0.5f64.sqrt(), 10).unwrap();
        let rows = boundary_length_profile(&e, &f, &sched).unwrap();
        assert!(rows.windows(2).all(|w| w[0].r > w[1].r));
        let slope = profile_slope(&rows, 6).unwrap();
        assert!((slope - 1.0).abs() <= 0.05, "point slope {slope}");

        // The stadium length 2L + 2πr needs radii below ~2^-8 before the
        // additive circle term stops biasing the slope, hence the finer
        // grid and the deeper schedule.
        let seg = named_set("segment", None).unwrap().normalize();
        let fs = DistanceField::build(&seg, 12).unwrap();
        let sched = geometric_schedule(0.125, 0.5f64.sqrt(), 14).unwrap();
        let rows = boundary_length_profile(&seg, &fs, &sched).unwrap();
        let slope = profile_slope(&rows, 6).unwrap();
        assert!(slope.abs() <= 0.05, "segment slope {slope}");
    }

    #[test]
    fn spherical_estimates_point_and_segment() {
        let (e, f) = circle_field(11);
        let sched = geometric_schedule(0.125, 0.5f64.sqrt(), 10).unwrap();
        let rows = boundary_length_profile(&e, &f, &sched).unwrap();
        let w = whitney_counts_only(&e, 12).unwrap();
        let counts = generation_counts(&w, None).unwrap();
        let s = spherical_dims(&rows, &counts, 2, &FitOptions::default()).unwrap();
        assert!(s.contour_lower.value <= 0.05, "contour lower {}", s.contour_lower.value);
        assert!(s.contour_upper.value <= 0.05, "contour upper {}", s.contour_upper.value);
        assert!(s.whitney_upper.value <= 0.05, "count upper {}", s.whitney_upper.value);
        assert!(s.discrepancy <= 0.1);

        let seg = named_set("segment", None).unwrap().normalize();
        let fs = DistanceField::build(&seg, 12).unwrap();
        let sched = geometric_schedule(0.125, 0.5f64.sqrt(), 14).unwrap();
        let rows = boundary_length_profile(&seg, &fs, &sched).unwrap();
        let w = whitney_counts_only(&seg, 17).unwrap();
        let counts = generation_counts(&w, None).unwrap();
        let s = spherical_dims(&rows, &counts, 2, &FitOptions::default()).unwrap();
        assert!((s.contour_lower.value - 1.0).abs() <= 0.05);
        assert!((s.contour_upper.value - 1.0).abs() <= 0.05);
        assert!(s.contour_slope.abs() <= 0.05);
        assert!((s.whitney_lower.value - 1.0).abs() <= 0.05);
        assert!((s.whitney_upper.value - 1.0).abs() <= 0.05);
    }

    #[test]
    fn exact_perimeter_closed_forms() {
        let point = named_set("point", None).unwrap().normalize();
        let r = 0.125;
        let p = exact_perimeter(&point, r).unwrap();
        assert!((p - 2.0 * PI * r).abs() <= 1e-12);

        let seg = named_set("segment", None).unwrap().normalize();
        let r = 1.0 / 16.0;
        let p = exact_perimeter(&seg, r).unwrap();
        let expect = 2.0 * 0.5 + 2.0 * PI * r;
        assert!((p - expect).abs() <= 1e-12, "stadium {} vs {}", p, expect);

        // Radius past the diameter: single rounded square.
        let sq = named_set("square", None).unwrap().normalize();
        let p = exact_perimeter(&sq, 1.0).unwrap();
        assert!((p - (4.0 * 0.5 + 2.0 * PI)).abs() <= 1e-12);
    }

    #[test]
    fn exact_perimeter_merged_circle_pair() {
        // Two points distance 1/8 apart, radius 1/8: each circle loses a
        // 2·acos(d/2r) = 2π/3 arc inside its twin.
        let input = vec![
            (vec![rat(7, 16), rat(1, 2)], vec![rat(0, 1), rat(0, 1)]),
            (vec![rat(9, 16), rat(1, 2)], vec![rat(0, 1), rat(0, 1)]),
        ];
        let e = BoxSet::new(2, input).unwrap().assume_normalized();
        let r = 0.125;
        let p = exact_perimeter(&e, r).unwrap();
        let expect = 2.0 * r * (2.0 * PI - 2.0 * PI / 3.0);
        assert!((p - expect).abs() <= 1e-12, "pair {} vs {}", p, expect);
    }

    #[test]
    fn exact_perimeter_abutting_boxes() {
        // Two abutting squares forming a 1/2 x 1/4 rectangle: shared pieces
        // must be dropped, tangent pieces kept once.
        let input = vec![
            (vec![rat(1, 4), rat(1, 4)], vec![rat(1, 4), rat(1, 4)]),
            (vec![rat(1, 2), rat(1, 4)], vec![rat(1, 4), rat(1, 4)]),
        ];
        let e = BoxSet::new(2, input).unwrap().assume_normalized();
        let r = 1.0 / 16.0;
        let p = exact_perimeter(&e, r).unwrap();
        let expect = 2.0 * (0.5 + 0.25) + 2.0 * PI * r;
        assert!((p - expect).abs() <= 1e-12, "rect {} vs {}", p, expect);
    }

    #[test]
    fn exact_matches_contour_on_smooth_case() {
        let (e, f) = circle_field(11);
        let r = 0.125;
        let exact = exact_perimeter(&e, r).unwrap();
        let contour = extract_boundary(&e, &f, r).unwrap().total_length;
        assert!((exact - contour).abs() <= 0.01 * exact);
    }

    #[test]
    fn clip_length_splits_a_known_curve() {
        let (e, f) = circle_field(10);
        let r = 0.125;
        let curve = extract_boundary(&e, &f, r).unwrap();
        // Right half-plane through the center catches half the circle.
        let half = clip_length(&curve, [0.5, 0.0], [1.0, 1.0]);
        let expect = PI * r;
        assert!((half - expect).abs() <= 0.02 * expect, "half {} vs {}", half, expect);
        // The whole domain returns the full length.
        let full = clip_length(&curve, [0.0, 0.0], [1.0, 1.0]);
        assert!((full - curve.total_length).abs() <= 1e-12);
    }

    #[test]
    fn carpet_profile_shows_a_bounded_fractal_band() {
        // At reachable radii the carpet profile slope is still
        // preasymptotic (around -0.6 here, -0.71 by r = 2^-9), so the
        // trustworthy check is the two-sided band of L(r)·r^{s-1} plus a
        // slope guard separating it from the smooth cases 0 and -1... +1.
        let e = named_set("carpet", Some(4)).unwrap().normalize();
        let f = DistanceField::build(&e, 11).unwrap();
        let sched = geometric_schedule(0.0625, 0.5f64.sqrt(), 9).unwrap();
        let rows = boundary_length_profile(&e, &f, &sched).unwrap();
        let slope = profile_slope(&rows, 4).unwrap();
        assert!(slope < -0.4 && slope > -1.0, "carpet profile slope {slope}");
        let s = (8.0f64).ln() / (3.0f64).ln();
        let band: Vec<f64> = rows.iter().map(|p| p.length * p.r.powf(s - 1.0)).collect();
        let hi = band.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = band.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(hi / lo <= 10.0, "regular-law band ratio {}", hi / lo);
    }
}
