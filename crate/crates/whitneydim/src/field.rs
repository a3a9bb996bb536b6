//! Exact distance fields on dyadic grids.
//!
//! `dist(·, E)` is sampled at the nodes `(i·2^{-k}, j·2^{-k})`. Each value is
//! the true Euclidean distance, computed in integer arithmetic and rounded
//! to `f64` exactly once at the end:
//!
//! * For a query point `p` and box `b`, the nearest point of `b` has an
//!   x-coordinate `clamp(p.x, b.lo.x, b.hi.x)`, which is either `p.x` itself
//!   or a box edge. So `dist²(p) = min_c [(p.x − c)² + g_c(p.y)]` where `c`
//!   ranges over all grid x's and all box x-edges, and `g_c(y)` is the exact
//!   1D squared distance from `y` to the union of y-intervals of the boxes
//!   whose x-range covers column `c`.
//! * All coordinates live on the lattice `1/(denom·2^k)`, so `g_c` and the
//!   lower envelope of the column parabolas are evaluated in exact integers
//!   (`i128` when the lattice is coarse enough, big integers otherwise).
//!
//! Rows stream in increasing `y`; a full field is materialized only when it
//! fits a hard memory bound.

use num::{BigInt, ToPrimitive};

use crate::error::{Error, Result};
use crate::geom::{BoxSet, MAX_LEVEL};

/// Default bound on grid nodes per field, overridable via the
/// `WHITNEYDIM_MAX_CELLS` environment variable.
pub const DEFAULT_MAX_CELLS: u64 = 1 << 27;

/// Number of grid nodes a level-`k` field may hold before the computation is
/// refused with `ResourceLimit`.
pub fn max_cells() -> u64 {
    std::env::var("WHITNEYDIM_MAX_CELLS")
        .ok()
        .and_then(|s| s.parse::<u64>().ok())
        .unwrap_or(DEFAULT_MAX_CELLS)
}

fn check_budget(k: u32, dim: usize) -> Result<u64> {
    if k > MAX_LEVEL {
        return Err(Error::ScaleTooFine(format!(
            "grid level {k} exceeds maximum {MAX_LEVEL}"
        )));
    }
    let n = (1u64 << k) + 1;
    let nodes = if dim == 1 { n } else { n * n };
    let cap = max_cells();
    if nodes > cap {
        return Err(Error::ResourceLimit(format!(
            "level-{k} grid needs {nodes} nodes, over the {cap}-node budget \
             (raise WHITNEYDIM_MAX_CELLS to override)"
        )));
    }
    Ok(n)
}

/// Integer type family for the exact envelope; `i128` on coarse lattices,
/// `BigInt` when `denom · 2^k` is too large for safe `i128` products.
trait EnvInt:
    Clone
    + Ord
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
{
    fn from_u128v(v: u128) -> Self;
    fn to_f64v(&self) -> f64;
}

impl EnvInt for i128 {
    fn from_u128v(v: u128) -> Self {
        v as i128
    }
    fn to_f64v(&self) -> f64 {
        *self as f64
    }
}

impl EnvInt for BigInt {
    fn from_u128v(v: u128) -> Self {
        BigInt::from(v)
    }
    fn to_f64v(&self) -> f64 {
        self.to_f64().unwrap_or(f64::INFINITY)
    }
}

/// Merged closed intervals, endpoints in lattice units.
type Merged = Vec<(u64, u64)>;

fn merge_intervals(mut iv: Vec<(u64, u64)>) -> Merged {
    iv.sort_unstable();
    let mut out: Merged = Vec::with_capacity(iv.len());
    for (lo, hi) in iv {
        match out.last_mut() {
            Some((_, chi)) if lo <= *chi => *chi = (*chi).max(hi),
            _ => out.push((lo, hi)),
        }
    }
    out
}

/// Squared 1D distance from ascending queries to a merged interval union,
/// resumable via an external cursor.
#[inline]
fn dist1d_sq(iv: &Merged, cursor: &mut usize, y: u64) -> u128 {
    let m = iv.len();
    while *cursor + 1 < m && iv[*cursor + 1].0 <= y {
        *cursor += 1;
    }
    let (lo, hi) = iv[*cursor];
    let gap = if y < lo {
        lo - y
    } else if y <= hi {
        0
    } else {
        let mut g = y - hi;
        if *cursor + 1 < m {
            g = g.min(iv[*cursor + 1].0 - y);
        }
        g
    };
    (gap as u128) * (gap as u128)
}

/// One parabola `(x − c)² + h` in lattice units (`c` in `1/L`, `h` in `1/L²`).
struct Par<T> {
    c: T,
    h: T,
}

/// Breakpoint between parabolas `a` (left center) and `b` as `num/den`,
/// `den > 0`.
#[inline]
fn breakpoint<T: EnvInt>(a: &Par<T>, b: &Par<T>) -> (T, T) {
    let num = b.h.clone() - a.h.clone() + b.c.clone() * b.c.clone() - a.c.clone() * a.c.clone();
    let den = (b.c.clone() - a.c.clone()) + (b.c.clone() - a.c.clone());
    (num, den)
}

/// Lower envelope of parabolas with strictly increasing centers, evaluated
/// at ascending queries. Returns exact squared distances in `1/L²` units.
fn envelope_eval<T: EnvInt>(pars: &[Par<T>], queries: &[T], out: &mut [u128])
where
    u128: TryFrom<T>,
{
    debug_assert!(!pars.is_empty());
    let mut v: Vec<usize> = Vec::with_capacity(pars.len());
    let mut zn: Vec<T> = Vec::with_capacity(pars.len());
    let mut zd: Vec<T> = Vec::with_capacity(pars.len());
    for (i, p) in pars.iter().enumerate() {
        loop {
            match v.last() {
                None => {
                    v.push(i);
                    break;
                }
                Some(&j) => {
                    let (num, den) = breakpoint(&pars[j], p);
                    if v.len() == 1 {
                        v.push(i);
                        zn.push(num);
                        zd.push(den);
                        break;
                    }
                    // New breakpoint left of (or at) the previous one means
                    // the last parabola never wins: drop it.
                    let ln = zn.last().unwrap();
                    let ld = zd.last().unwrap();
                    if num.clone() * ld.clone() <= ln.clone() * den.clone() {
                        v.pop();
                        zn.pop();
                        zd.pop();
                    } else {
                        v.push(i);
                        zn.push(num);
                        zd.push(den);
                        break;
                    }
                }
            }
        }
    }
    let mut idx = 0usize;
    for (qi, x) in queries.iter().enumerate() {
        while idx < zn.len() && zn[idx].clone() <= x.clone() * zd[idx].clone() {
            idx += 1;
        }
        let p = &pars[v[idx]];
        let d = if x.clone() >= p.c.clone() {
            x.clone() - p.c.clone()
        } else {
            p.c.clone() - x.clone()
        };
        let val = d.clone() * d + p.h.clone();
        out[qi] = u128::try_from(val).ok().expect("squared distance fits u128");
    }
}

/// Column snapshots: merged y-interval unions, constant between box x-edges.
struct Columns {
    /// Ascending distinct column x's in lattice units.
    xs: Vec<u64>,
    /// Snapshot id per column.
    snap_of: Vec<u32>,
    snapshots: Vec<Merged>,
    /// Resumable per-column cursor into its snapshot.
    cursors: Vec<usize>,
}

fn build_columns(e: &BoxSet, k: u32) -> Columns {
    let denom = e.denom();
    let scale = 1u64 << k;
    let n = (1u64 << k) + 1;
    // Candidate columns: all grid x's plus all box x-edges.
    let mut xs: Vec<u64> = (0..n).map(|i| i * denom).collect();
    for i in 0..e.len() {
        let b = e.raw(i);
        xs.push(b.lo[0] * scale);
        xs.push((b.lo[0] + b.side[0]) * scale);
    }
    xs.sort_unstable();
    xs.dedup();
    // Sweep events at box edges.
    #[derive(Clone, Copy)]
    struct Ev {
        x: u64,
        open: bool,
        id: u32,
    }
    let mut evs: Vec<Ev> = Vec::with_capacity(e.len() * 2);
    for i in 0..e.len() {
        let b = e.raw(i);
        evs.push(Ev { x: b.lo[0] * scale, open: true, id: i as u32 });
        evs.push(Ev { x: (b.lo[0] + b.side[0]) * scale, open: false, id: i as u32 });
    }
    evs.sort_by_key(|ev| (ev.x, !ev.open));
    let mut snapshots: Vec<Merged> = Vec::new();
    let mut snap_of: Vec<u32> = vec![u32::MAX; xs.len()];
    let mut active: Vec<u32> = Vec::new();
    let yint = |id: u32| -> (u64, u64) {
        let b = e.raw(id as usize);
        if e.dim() == 1 {
            // In d=1 the "y-interval" is a point at 0: distance is purely
            // horizontal.
            (0, 0)
        } else {
            (b.lo[1] * scale, (b.lo[1] + b.side[1]) * scale)
        }
    };
    let mut col = 0usize;
    let mut ei = 0usize;
    let mut between: Option<u32> = None; // snapshot valid strictly between events
    while col < xs.len() {
        let x = xs[col];
        // Advance events up to x.
        while ei < evs.len() && evs[ei].x < x {
            let ev = evs[ei];
            if ev.open {
                active.push(ev.id);
            } else if let Some(pos) = active.iter().position(|&i| i == ev.id) {
                active.swap_remove(pos);
            }
            between = None;
            ei += 1;
        }
        if ei < evs.len() && evs[ei].x == x {
            // Column sits on an edge: include boxes opening here, and boxes
            // closing here are still active at x itself.
            let mut at: Vec<u32> = active.clone();
            let mut ej = ei;
            while ej < evs.len() && evs[ej].x == x {
                if evs[ej].open {
                    at.push(evs[ej].id);
                }
                ej += 1;
            }
            let merged = merge_intervals(at.iter().map(|&i| yint(i)).collect());
            if !merged.is_empty() {
                snapshots.push(merged);
                snap_of[col] = (snapshots.len() - 1) as u32;
            }
        } else {
            // Strictly between events: snapshot is shared by such columns.
            if between.is_none() && !active.is_empty() {
                let merged = merge_intervals(active.iter().map(|&i| yint(i)).collect());
                if !merged.is_empty() {
                    snapshots.push(merged);
                    between = Some((snapshots.len() - 1) as u32);
                }
            }
            if let Some(s) = between {
                snap_of[col] = s;
            }
        }
        col += 1;
    }
    let cursors = vec![0usize; xs.len()];
    Columns { xs, snap_of, snapshots, cursors }
}

/// Streams the exact distance field row by row (`j = 0..=2^k`, ascending);
/// the callback receives the row index and the `2^k + 1` distances.
pub fn stream_rows<F>(e: &BoxSet, k: u32, mut f: F) -> Result<()>
where
    F: FnMut(usize, &[f64]) -> Result<()>,
{
    let n = check_budget(k, e.dim())? as usize;
    let denom = e.denom();
    let l = (denom as u128) << k;
    if e.dim() == 1 {
        // Single row: exact 1D distances to the merged x-interval union.
        let scale = 1u64 << k;
        let iv = merge_intervals(
            (0..e.len())
                .map(|i| {
                    let b = e.raw(i);
                    (b.lo[0] * scale, (b.lo[0] + b.side[0]) * scale)
                })
                .collect(),
        );
        let mut cursor = 0usize;
        let mut row = vec![0.0f64; n];
        for (i, slot) in row.iter_mut().enumerate() {
            let g = dist1d_sq(&iv, &mut cursor, i as u64 * denom);
            *slot = (g as f64).sqrt() / l as f64;
        }
        return f(0, &row);
    }
    let mut cols = build_columns(e, k);
    // Fast integer path is safe when envelope products stay within i128.
    let fast = l <= (1u128 << 31);
    let block = 256usize.min(n);
    let ncols = cols.xs.len();
    let mut g = vec![0u128; ncols * block];
    let queries_u: Vec<u64> = (0..n as u64).map(|i| i * denom).collect();
    let mut row_sq = vec![0u128; n];
    let mut row = vec![0.0f64; n];
    let mut y0 = 0usize;
    while y0 < n {
        let rows = block.min(n - y0);
        // Pass 1: per-column exact vertical distances for this row block.
        for ci in 0..ncols {
            let snap = cols.snap_of[ci];
            let base = ci * block;
            if snap == u32::MAX {
                for t in 0..rows {
                    g[base + t] = u128::MAX;
                }
                continue;
            }
            let iv = &cols.snapshots[snap as usize];
            let cursor = &mut cols.cursors[ci];
            for t in 0..rows {
                let y = (y0 + t) as u64 * denom;
                g[base + t] = dist1d_sq(iv, cursor, y);
            }
        }
        // Pass 2: per-row lower envelope over finite columns.
        for t in 0..rows {
            if fast {
                let mut pars: Vec<Par<i128>> = Vec::with_capacity(ncols);
                for ci in 0..ncols {
                    let h = g[ci * block + t];
                    if h == u128::MAX {
                        continue;
                    }
                    let c = cols.xs[ci] as i128;
                    // Equal centers can only come from a grid x coinciding
                    // with a box edge; keep the smaller height.
                    if let Some(last) = pars.last_mut() {
                        if last.c == c {
                            last.h = last.h.min(h as i128);
                            continue;
                        }
                    }
                    pars.push(Par { c, h: h as i128 });
                }
                let queries: Vec<i128> = queries_u.iter().map(|&x| x as i128).collect();
                envelope_eval(&pars, &queries, &mut row_sq);
            } else {
                let mut pars: Vec<Par<BigInt>> = Vec::with_capacity(ncols);
                for ci in 0..ncols {
                    let h = g[ci * block + t];
                    if h == u128::MAX {
                        continue;
                    }
                    let c = BigInt::from(cols.xs[ci]);
                    if let Some(last) = pars.last_mut() {
                        if last.c == c {
                            if BigInt::from(h) < last.h {
                                last.h = BigInt::from(h);
                            }
                            continue;
                        }
                    }
                    pars.push(Par { c, h: BigInt::from(h) });
                }
                let queries: Vec<BigInt> = queries_u.iter().map(|&x| BigInt::from(x)).collect();
                envelope_eval(&pars, &queries, &mut row_sq);
            }
            for (i, slot) in row.iter_mut().enumerate() {
                *slot = (row_sq[i] as f64).sqrt() / l as f64;
            }
            f(y0 + t, &row)?;
        }
        y0 += rows;
    }
    Ok(())
}

/// Materialized distance field on the level-`k` dyadic grid.
#[derive(Debug)]
pub struct DistanceField {
    k: u32,
    dim: usize,
    n: usize,
    values: Vec<f64>,
}

/// Node-count bound for materialized fields (streaming has no such bound).
const MAX_MATERIALIZED: u64 = 1 << 25;

impl DistanceField {
    pub fn build(e: &BoxSet, k: u32) -> Result<Self> {
        let n = check_budget(k, e.dim())?;
        let nodes = if e.dim() == 1 { n } else { n * n };
        if nodes > MAX_MATERIALIZED {
            return Err(Error::ResourceLimit(format!(
                "level-{k} field needs {nodes} stored nodes (max {MAX_MATERIALIZED}); \
                 use row streaming instead"
            )));
        }
        let n = n as usize;
        let mut values = vec![0.0f64; if e.dim() == 1 { n } else { n * n }];
        let dim = e.dim();
        stream_rows(e, k, |j, row| {
            if dim == 1 {
                values.copy_from_slice(row);
            } else {
                values[j * n..(j + 1) * n].copy_from_slice(row);
            }
            Ok(())
        })?;
        Ok(DistanceField { k, dim: e.dim(), n, values })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Nodes per axis (`2^k + 1`).
    pub fn n(&self) -> usize {
        self.n
    }

    /// Grid spacing `2^{-k}`.
    pub fn h(&self) -> f64 {
        (0.5f64).powi(self.k as i32)
    }

    /// Distance at node `(ix, iy)`; `iy` is ignored in d=1.
    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        if self.dim == 1 {
            self.values[ix]
        } else {
            self.values[iy * self.n + ix]
        }
    }

    pub fn node(&self, ix: usize, iy: usize) -> [f64; 2] {
        let h = self.h();
        [ix as f64 * h, if self.dim == 1 { 0.0 } else { iy as f64 * h }]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::dist2_point_box;
    use crate::rational::rat;

    fn brute_force(e: &BoxSet, k: u32) -> Vec<f64> {
        // Independent exact computation: per-box integer gap arithmetic on
        // the common lattice, minimized directly.
        let n = (1usize << k) + 1;
        let denom = e.denom() as u128;
        let l = denom << k;
        let scale = 1u128 << k;
        let mut out = vec![0.0f64; if e.dim() == 1 { n } else { n * n }];
        for jy in 0..(if e.dim() == 1 { 1 } else { n }) {
            for jx in 0..n {
                let px = jx as u128 * denom;
                let py = jy as u128 * denom;
                let mut best = u128::MAX;
                for i in 0..e.len() {
                    let b = e.raw(i);
                    let gx = axis_gap_u(px, b.lo[0] as u128 * scale, (b.lo[0] + b.side[0]) as u128 * scale);
                    let gy = if e.dim() == 1 {
                        0
                    } else {
                        axis_gap_u(py, b.lo[1] as u128 * scale, (b.lo[1] + b.side[1]) as u128 * scale)
                    };
                    best = best.min(gx * gx + gy * gy);
                }
                let idx = if e.dim() == 1 { jx } else { jy * n + jx };
                out[idx] = (best as f64).sqrt() / l as f64;
            }
        }
        out
    }

    fn axis_gap_u(x: u128, lo: u128, hi: u128) -> u128 {
        if x < lo {
            lo - x
        } else if x > hi {
            x - hi
        } else {
            0
        }
    }

    #[test]
    fn single_point_field_is_exact() {
        let e = BoxSet::new(2, vec![(vec![rat(1, 2), rat(1, 2)], vec![rat(0, 1), rat(0, 1)])])
            .unwrap();
        let f = DistanceField::build(&e, 6).unwrap();
        let expect = brute_force(&e, 6);
        assert_eq!(f.values(), expect.as_slice());
        // Spot value: node (0,0) is at distance √2/2.
        assert_eq!(f.get(0, 0), (0.5f64).sqrt());
        assert_eq!(f.get(32, 32), 0.0);
    }

    #[test]
    fn multi_box_field_matches_brute_force() {
        let e = BoxSet::new(
            2,
            vec![
                (vec![rat(0, 1), rat(0, 1)], vec![rat(1, 8), rat(1, 2)]),
                (vec![rat(3, 4), rat(1, 3)], vec![rat(1, 8), rat(1, 8)]),
                (vec![rat(1, 3), rat(2, 3)], vec![rat(0, 1), rat(1, 4)]),
                (vec![rat(5, 8), rat(1, 16)], vec![rat(1, 4), rat(0, 1)]),
            ],
        )
        .unwrap();
        for k in [3, 5, 7] {
            let f = DistanceField::build(&e, k).unwrap();
            let expect = brute_force(&e, k);
            assert_eq!(f.values(), expect.as_slice(), "level {k}");
        }
    }

    #[test]
    fn one_dimensional_field_matches_brute_force() {
        let e = BoxSet::new(
            1,
            vec![
                (vec![rat(0, 1)], vec![rat(1, 5)]),
                (vec![rat(1, 2)], vec![rat(0, 1)]),
                (vec![rat(7, 9)], vec![rat(1, 9)]),
            ],
        )
        .unwrap();
        let f = DistanceField::build(&e, 8).unwrap();
        assert_eq!(f.values(), brute_force(&e, 8).as_slice());
        assert_eq!(f.get(128, 0), 0.0); // x = 1/2 is in E
    }

    #[test]
    fn lipschitz_along_rows_and_columns() {
        let e = BoxSet::new(
            2,
            vec![
                (vec![rat(1, 7), rat(2, 7)], vec![rat(1, 7), rat(1, 7)]),
                (vec![rat(2, 3), rat(2, 3)], vec![rat(1, 5), rat(1, 5)]),
            ],
        )
        .unwrap();
        let f = DistanceField::build(&e, 7).unwrap();
        let h = f.h();
        let n = f.n();
        for j in 0..n {
            for i in 0..n {
                if i + 1 < n {
                    assert!((f.get(i + 1, j) - f.get(i, j)).abs() <= h * (1.0 + 1e-12));
                }
                if j + 1 < n {
                    assert!((f.get(i, j + 1) - f.get(i, j)).abs() <= h * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn field_agrees_with_float_scan_loosely() {
        let e = BoxSet::new(
            2,
            vec![
                (vec![rat(1, 4), rat(1, 4)], vec![rat(1, 4), rat(1, 8)]),
                (vec![rat(9, 16), rat(5, 8)], vec![rat(1, 16), rat(1, 16)]),
            ],
        )
        .unwrap();
        let f = DistanceField::build(&e, 6).unwrap();
        for j in 0..f.n() {
            for i in 0..f.n() {
                let p = f.node(i, j);
                let mut best = f64::INFINITY;
                for v in e.views() {
                    best = best.min(dist2_point_box(&p, v, 2));
                }
                assert!((f.get(i, j) - best.sqrt()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        let e = BoxSet::new(2, vec![(vec![rat(1, 2), rat(1, 2)], vec![rat(0, 1), rat(0, 1)])])
            .unwrap();
        let err = DistanceField::build(&e, 14).unwrap_err();
        assert!(matches!(err, Error::ResourceLimit(_)));
        assert_eq!(err.exit_code(), 3);
    }
}
