//! Whitney decomposition of box-set complements.
//!
//! The decomposition subdivides `[0,1]^d` dyadically and selects a cube `Q`
//! as soon as `dist(Q, E) >= diam(Q)` while its parent was still too close.
//! Selected cubes are pairwise non-overlapping, tile the complement of `E`
//! up to the level-`k_max` truncation residual, and satisfy the two-sided
//! bound `diam(Q) <= dist(Q, E) <= 4 diam(Q)`.
//!
//! All selection decisions are exact: cube and box coordinates share the
//! lattice `1/(denom * 2^level)`, so `dist^2 >= c * 4^{-level}` reduces to a
//! `u128` integer comparison. Floating point only enters when reporting the
//! distance value of an already-selected cube.

use std::collections::{BTreeMap, HashSet};
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::max_cells;
use crate::geom::{
    cube_box_dist2_num, cube_inside_box, dist2_point_box, dist_point_to_set, Ball, BoxF, BoxSet,
    DyadicCube, MAX_LEVEL,
};

/// Default truncation depth used by the command-line tools.
pub const DEFAULT_KMAX: u32 = 12;

/// Hard cap on the number of cubes a collecting run may materialize.
const MAX_COLLECTED: usize = 1 << 24;

/// Depth at which the recursion splits into parallel subtree walks.
const SPLIT_LEVEL: u32 = 3;

/// Relative slack used for float ball/cube intersection tests. Ball queries
/// are float-valued by design; counts near an exactly tangent sphere may
/// include the tangent cube.
const BALL_EPS: f64 = 1e-12;

/// One selected cube together with its exact distance to the set, rounded
/// to `f64` once.
#[derive(Clone, Copy, Debug)]
pub struct WhitneyCube {
    pub cube: DyadicCube,
    pub dist: f64,
}

/// Scope of a generation count: the whole domain or a metric ball.
#[derive(Clone, Debug, PartialEq)]
pub enum CountScope {
    Global,
    Ball { center: [f64; 2], radius: f64 },
}

/// Per-level cube counts over a trusted window `[k_lo, k_hi]`.
#[derive(Clone, Debug)]
pub struct GenerationCounts {
    pub counts: BTreeMap<u32, u64>,
    pub k_lo: u32,
    pub k_hi: u32,
    pub scope: CountScope,
}

impl GenerationCounts {
    pub fn get(&self, k: u32) -> u64 {
        self.counts.get(&k).copied().unwrap_or(0)
    }

    /// `(k, count)` pairs for every level in the window, zeros included.
    pub fn window(&self) -> impl Iterator<Item = (u32, u64)> + '_ {
        (self.k_lo..=self.k_hi).map(move |k| (k, self.get(k)))
    }

    pub fn total(&self) -> u64 {
        self.window().map(|(_, n)| n).sum()
    }
}

/// Result of a decomposition run.
///
/// `level_counts[k]` counts the cubes selected at level `k` over the whole
/// domain; these are complete for every `k <= k_max - 1` (a level-`k_max`
/// count would miss cubes that only resolve deeper). `residual_cells`
/// counts level-`k_max` cells at positive distance from `E` that are still
/// closer than their diameter, and `e_units` measures the region absorbed
/// by `E` itself in units of level-`k_max` cells.
#[derive(Debug)]
pub struct WhitneyDecomposition {
    pub dim: usize,
    pub k_max: u32,
    pub cubes: Vec<WhitneyCube>,
    pub collected: bool,
    pub level_counts: Vec<u64>,
    pub residual_cells: u64,
    pub e_units: u128,
    pub visited: u64,
}

impl WhitneyDecomposition {
    pub fn total_selected(&self) -> u64 {
        self.level_counts.iter().sum()
    }

    /// Total volume of unresolved complement cells at level `k_max`.
    pub fn residual_volume(&self) -> f64 {
        self.residual_cells as f64 * (-(self.dim as f64) * self.k_max as f64).exp2()
    }

    /// Exact tiling identity: selected cubes, the `E`-covered region and the
    /// residual partition the unit cube. Counted in level-`k_max` cells so
    /// the check is pure integer arithmetic.
    pub fn coverage_identity(&self) -> bool {
        let d = self.dim as u32;
        let mut total: u128 = 0;
        for (k, &n) in self.level_counts.iter().enumerate() {
            total += (n as u128) << (d * (self.k_max - k as u32));
        }
        total += self.residual_cells as u128;
        total += self.e_units;
        total == 1u128 << (d * self.k_max)
    }
}

struct Ctx<'a> {
    e: &'a BoxSet,
    k_max: u32,
    collect: bool,
    // stop_level: subtrees reaching this level are handed back as tasks
    // instead of being walked (used to fan out across threads).
    stop_level: u32,
    ball: Option<&'a Ball>,
    sel_thr: u128,
    keep_thr: u128,
    budget: u64,
    visited: &'a AtomicU64,
}

#[derive(Default)]
struct SubResult {
    cubes: Vec<WhitneyCube>,
    level_counts: Vec<u64>,
    residual_cells: u64,
    e_units: u128,
    tasks: Vec<(DyadicCube, Vec<u32>)>,
}

impl SubResult {
    fn new(k_max: u32) -> Self {
        SubResult {
            level_counts: vec![0; k_max as usize + 1],
            ..Default::default()
        }
    }

    fn merge(&mut self, other: SubResult) {
        for (a, b) in self.level_counts.iter_mut().zip(other.level_counts) {
            *a += b;
        }
        self.residual_cells += other.residual_cells;
        self.e_units += other.e_units;
        self.cubes.extend(other.cubes);
        self.tasks.extend(other.tasks);
    }
}

fn cube_view(cube: &DyadicCube, dim: usize) -> BoxF {
    let mut lo = [0.0; 2];
    let mut hi = [0.0; 2];
    for a in 0..dim {
        lo[a] = cube.lo_f(a);
        hi[a] = cube.hi_f(a);
    }
    BoxF { lo, hi }
}

fn cube_touches_ball(cube: &DyadicCube, ball: &Ball, dim: usize) -> bool {
    let v = cube_view(cube, dim);
    let d2 = dist2_point_box(&ball.center, &v, dim);
    d2 <= ball.radius * ball.radius * (1.0 + BALL_EPS)
}

fn walk(ctx: &Ctx<'_>, cube: DyadicCube, cands: &[u32], out: &mut SubResult) -> Result<()> {
    if ctx.visited.fetch_add(1, Ordering::Relaxed) >= ctx.budget {
        return Err(Error::ResourceLimit(format!(
            "whitney recursion exceeded {} visited cells; raise WHITNEYDIM_MAX_CELLS or lower k_max",
            ctx.budget
        )));
    }
    let d = ctx.e.dim();
    if let Some(ball) = ctx.ball {
        if !cube_touches_ball(&cube, ball, d) {
            return Ok(());
        }
    }
    for &i in cands {
        if cube_inside_box(ctx.e, &cube, i) {
            out.e_units += 1u128 << ((d as u32) * (ctx.k_max - cube.level));
            return Ok(());
        }
    }
    debug_assert!(!cands.is_empty(), "visited cube lost its distance realizer");
    let mut min_s = u128::MAX;
    let mut child_cands: Vec<u32> = Vec::new();
    for &i in cands {
        let s = cube_box_dist2_num(ctx.e, &cube, i);
        if s < min_s {
            min_s = s;
        }
        if s <= ctx.keep_thr {
            child_cands.push(i);
        }
    }
    if min_s >= ctx.sel_thr {
        out.level_counts[cube.level as usize] += 1;
        if ctx.collect {
            let l = (ctx.e.denom() as f64) * (cube.level as f64).exp2();
            out.cubes.push(WhitneyCube {
                cube,
                dist: (min_s as f64).sqrt() / l,
            });
            if out.cubes.len() > MAX_COLLECTED {
                return Err(Error::ResourceLimit(format!(
                    "whitney decomposition produced more than {} cubes; use a counts-only run",
                    MAX_COLLECTED
                )));
            }
        }
        return Ok(());
    }
    if cube.level == ctx.k_max {
        if min_s == 0 {
            out.e_units += 1;
        } else {
            out.residual_cells += 1;
        }
        return Ok(());
    }
    if cube.level == ctx.stop_level {
        out.tasks.push((cube, child_cands));
        return Ok(());
    }
    for j in 0..(1usize << d) {
        walk(ctx, cube.child(j, d), &child_cands, out)?;
    }
    Ok(())
}

fn decompose_impl(e: &BoxSet, k_max: u32, collect: bool) -> Result<WhitneyDecomposition> {
    if e.len() == 0 {
        return Err(Error::EmptySet("cannot decompose around an empty set".into()));
    }
    if !e.is_normalized() {
        return Err(Error::InvalidParams(
            "whitney decomposition requires a normalized set (call normalize first)".into(),
        ));
    }
    if !(3..=MAX_LEVEL).contains(&k_max) {
        return Err(Error::InvalidParams(format!(
            "k_max must lie in [3, {}], got {}",
            MAX_LEVEL, k_max
        )));
    }
    let d = e.dim();
    let denom = e.denom() as u128;
    let visited = AtomicU64::new(0);
    let ctx = Ctx {
        e,
        k_max,
        collect,
        stop_level: if k_max > SPLIT_LEVEL + 1 { SPLIT_LEVEL } else { k_max + 1 },
        ball: None,
        sel_thr: d as u128 * denom * denom,
        keep_thr: 25 * d as u128 * denom * denom,
        budget: max_cells(),
        visited: &visited,
    };
    let all: Vec<u32> = (0..e.len() as u32).collect();
    let mut out = SubResult::new(k_max);
    walk(&ctx, DyadicCube::root(), &all, &mut out)?;

    let tasks = std::mem::take(&mut out.tasks);
    if !tasks.is_empty() {
        let leaf_ctx = Ctx {
            stop_level: k_max + 1,
            visited: &visited,
            ..ctx
        };
        let results: Result<Vec<SubResult>> = tasks
            .into_par_iter()
            .map(|(cube, cands)| {
                let mut sub = SubResult::new(k_max);
                walk(&leaf_ctx, cube, &cands, &mut sub)?;
                Ok(sub)
            })
            .collect();
        for sub in results? {
            out.merge(sub);
        }
    }
    if collect && out.cubes.len() > MAX_COLLECTED {
        return Err(Error::ResourceLimit(format!(
            "whitney decomposition produced more than {} cubes; use a counts-only run",
            MAX_COLLECTED
        )));
    }
    out.cubes
        .sort_unstable_by_key(|wc| (wc.cube.level, wc.cube.index));
    Ok(WhitneyDecomposition {
        dim: d,
        k_max,
        cubes: out.cubes,
        collected: collect,
        level_counts: out.level_counts,
        residual_cells: out.residual_cells,
        e_units: out.e_units,
        visited: visited.load(Ordering::Relaxed),
    })
}

/// Decompose the complement of `e` down to level `k_max`, materializing
/// every selected cube in canonical `(level, index)` order.
pub fn whitney_decompose(e: &BoxSet, k_max: u32) -> Result<WhitneyDecomposition> {
    decompose_impl(e, k_max, true)
}

/// Same recursion as [`whitney_decompose`] but only accumulates per-level
/// counts, so it scales to runs whose cube lists would not fit in memory.
pub fn whitney_counts_only(e: &BoxSet, k_max: u32) -> Result<WhitneyDecomposition> {
    decompose_impl(e, k_max, false)
}

/// Per-generation counts of `w`, optionally restricted to cubes whose
/// closure meets a ball. The window is clipped to `[3, k_max - 1]`: counts
/// below level 3 are boundary-dominated and the level-`k_max` generation is
/// incomplete by construction.
pub fn generation_counts(
    w: &WhitneyDecomposition,
    scope: Option<&Ball>,
) -> Result<GenerationCounts> {
    let k_hi = w.k_max - 1;
    let k_lo = 3u32.min(k_hi);
    match scope {
        None => {
            let mut counts = BTreeMap::new();
            for k in k_lo..=k_hi {
                counts.insert(k, w.level_counts[k as usize]);
            }
            Ok(GenerationCounts {
                counts,
                k_lo,
                k_hi,
                scope: CountScope::Global,
            })
        }
        Some(ball) => {
            if !w.collected {
                return Err(Error::InvalidParams(
                    "ball-scoped counts need a decomposition with collected cubes".into(),
                ));
            }
            if ball.dim != w.dim {
                return Err(Error::InvalidParams(
                    "ball dimension does not match the decomposition".into(),
                ));
            }
            let mut counts = BTreeMap::new();
            for wc in &w.cubes {
                let k = wc.cube.level;
                if k < k_lo || k > k_hi {
                    continue;
                }
                if cube_touches_ball(&wc.cube, ball, w.dim) {
                    *counts.entry(k).or_insert(0) += 1;
                }
            }
            Ok(GenerationCounts {
                counts,
                k_lo,
                k_hi,
                scope: CountScope::Ball {
                    center: ball.center,
                    radius: ball.radius,
                },
            })
        }
    }
}

/// Number of generation-`k` cubes meeting `b0`, for a ball centered on the
/// set. Runs a fresh recursion pruned to the ball, so it never pays for the
/// full decomposition.
pub fn local_count(e: &BoxSet, b0: &Ball, k: u32) -> Result<u64> {
    if b0.dim != e.dim() {
        return Err(Error::InvalidParams(
            "ball dimension does not match the set".into(),
        ));
    }
    if !(b0.radius > 0.0) {
        return Err(Error::InvalidParams("ball radius must be positive".into()));
    }
    if !(3..=MAX_LEVEL).contains(&k) {
        return Err(Error::InvalidParams(format!(
            "generation must lie in [3, {}], got {}",
            MAX_LEVEL, k
        )));
    }
    if !e.is_normalized() {
        return Err(Error::InvalidParams(
            "local counts require a normalized set".into(),
        ));
    }
    let center_dist = dist_point_to_set(&b0.center[..e.dim()], e);
    if center_dist > 1e-9 {
        return Err(Error::InvalidParams(format!(
            "ball center must lie on the set (distance {:.3e})",
            center_dist
        )));
    }
    let d = e.dim();
    let denom = e.denom() as u128;
    let visited = AtomicU64::new(0);
    let ctx = Ctx {
        e,
        k_max: k,
        collect: false,
        stop_level: k + 1,
        ball: Some(b0),
        sel_thr: d as u128 * denom * denom,
        keep_thr: 25 * d as u128 * denom * denom,
        budget: max_cells(),
        visited: &visited,
    };
    let all: Vec<u32> = (0..e.len() as u32).collect();
    let mut out = SubResult::new(k);
    walk(&ctx, DyadicCube::root(), &all, &mut out)?;
    Ok(out.level_counts[k as usize])
}

/// Exact check of the defining bound `diam(Q) <= dist(Q, E) <= 4 diam(Q)`
/// for every cube, against the full box list (not the pruned candidate
/// set). Quadratic in `cubes * boxes`; intended for tests and reports.
pub fn verify_sandwich_exact(e: &BoxSet, w: &WhitneyDecomposition) -> bool {
    let d = e.dim() as u128;
    let denom = e.denom() as u128;
    let lower = d * denom * denom;
    let upper = 16 * d * denom * denom;
    w.cubes.iter().all(|wc| {
        let mut min_s = u128::MAX;
        for i in 0..e.len() as u32 {
            min_s = min_s.min(cube_box_dist2_num(e, &wc.cube, i));
        }
        min_s >= lower && min_s <= upper
    })
}

/// Maximum level difference between touching selected cubes, or `None` for
/// counts-only runs. Bounded for any Whitney decomposition; the concrete
/// spread is a useful regularity diagnostic.
pub fn neighbor_level_spread(w: &WhitneyDecomposition) -> Option<u32> {
    if !w.collected {
        return None;
    }
    let set: HashSet<(u32, [u64; 2])> = w
        .cubes
        .iter()
        .map(|wc| (wc.cube.level, wc.cube.index))
        .collect();
    let d = w.dim;
    let mut spread = 0u32;
    let offsets: &[[i64; 2]] = if d == 1 {
        &[[-1, 0], [1, 0]]
    } else {
        &[
            [-1, -1],
            [-1, 0],
            [-1, 1],
            [0, -1],
            [0, 1],
            [1, -1],
            [1, 0],
            [1, 1],
        ]
    };
    for wc in &w.cubes {
        let k = wc.cube.level;
        let n = 1u64 << k;
        for off in offsets {
            let mut idx = [0u64; 2];
            let mut ok = true;
            for a in 0..d {
                match wc.cube.index[a].checked_add_signed(off[a]) {
                    Some(v) if v < n => idx[a] = v,
                    _ => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                continue;
            }
            // Look for the selected ancestor cell covering this neighbor;
            // finer touching cubes are caught when they run the same query
            // in the other direction.
            for k2 in (0..=k).rev() {
                let shift = k - k2;
                let key = (k2, [idx[0] >> shift, idx[1] >> shift]);
                if set.contains(&key) {
                    spread = spread.max(k - k2);
                    break;
                }
            }
        }
    }
    Some(spread)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{dist_box_to_set, BoxSet};
    use crate::rational::rat;
    use crate::setgen::named_set;

    fn normalized(name: &str, depth: Option<u32>) -> BoxSet {
        named_set(name, depth).unwrap().normalize()
    }

    /// Brute-force reference: enumerate every cube level by level and apply
    /// the selection rule with float arithmetic on an instance whose
    /// distances stay far from the float noise floor.
    fn brute_force_levels(e: &BoxSet, k_max: u32) -> Vec<Vec<DyadicCube>> {
        let d = e.dim();
        let mut selected: Vec<Vec<DyadicCube>> = vec![Vec::new(); k_max as usize + 1];
        let mut frontier = vec![DyadicCube::root()];
        for k in 0..=k_max {
            let mut next = Vec::new();
            for cube in frontier {
                let dist = dist_box_to_set(&cube, e);
                if dist >= cube.diam(d) - 1e-12 {
                    selected[k as usize].push(cube);
                } else if k < k_max {
                    for j in 0..(1usize << d) {
                        next.push(cube.child(j, d));
                    }
                }
            }
            frontier = next;
        }
        selected
    }

    #[test]
    fn point_on_line_matches_brute_force() {
        let e = BoxSet::new(1, vec![(vec![rat(1, 2)], vec![rat(0, 1)])])
            .unwrap()
            .normalize();
        let k_max = 12;
        let w = whitney_decompose(&e, k_max).unwrap();
        let brute = brute_force_levels(&e, k_max);
        for k in 0..=k_max {
            assert_eq!(
                w.level_counts[k as usize],
                brute[k as usize].len() as u64,
                "level {}",
                k
            );
        }
        let got: Vec<(u32, [u64; 2])> =
            w.cubes.iter().map(|wc| (wc.cube.level, wc.cube.index)).collect();
        let mut want: Vec<(u32, [u64; 2])> = brute
            .iter()
            .flatten()
            .map(|c| (c.level, c.index))
            .collect();
        want.sort_unstable();
        assert_eq!(got, want);
        // A one-point set yields the same number of cubes in every interior
        // generation.
        let counts = generation_counts(&w, None).unwrap();
        let window: Vec<u64> = counts.window().map(|(_, n)| n).collect();
        assert!(window.windows(2).all(|p| p[0] == p[1]), "{:?}", window);
        assert!(w.coverage_identity());
    }

    #[test]
    fn segment_matches_brute_force_and_scales_linearly() {
        let e = normalized("segment", None);
        let k_max = 10;
        let w = whitney_decompose(&e, k_max).unwrap();
        let brute = brute_force_levels(&e, k_max);
        for k in 0..=k_max {
            assert_eq!(w.level_counts[k as usize], brute[k as usize].len() as u64);
        }
        // #W_k / 2^k approaches 2 like 2 + c·2^-k for a 1-dimensional set;
        // from level 7 on, successive ratios agree within 10%.
        let counts = generation_counts(&w, None).unwrap();
        let ratios: Vec<f64> = counts
            .window()
            .skip(4)
            .map(|(k, n)| n as f64 / (k as f64).exp2())
            .collect();
        for pair in ratios.windows(2) {
            assert!((pair[0] - pair[1]).abs() / pair[0] < 0.10, "{:?}", ratios);
        }
        assert!(w.coverage_identity());
        assert!(verify_sandwich_exact(&e, &w));
    }

    #[test]
    fn full_box_resolves_with_tiny_residual() {
        let e = BoxSet::new(
            2,
            vec![(vec![rat(1, 4), rat(1, 4)], vec![rat(1, 2), rat(1, 2)])],
        )
        .unwrap()
        .assume_normalized();
        for k_max in [6u32, 8] {
            let w = whitney_decompose(&e, k_max).unwrap();
            // Cells one grid row off an edge stay unresolved at every level,
            // so the residual is positive but its volume shrinks like 2^-k.
            assert!(
                w.residual_volume() <= (2.0f64).powi(2 - k_max as i32),
                "k_max {}: residual {}",
                k_max,
                w.residual_volume()
            );
            assert!(w.coverage_identity());
        }
    }

    #[test]
    fn cantor_dust_counts_and_exact_sandwich() {
        let e = normalized("cantor3x3", Some(4));
        let w = whitney_decompose(&e, 8).unwrap();
        assert!(w.total_selected() > 0);
        assert!(verify_sandwich_exact(&e, &w));
        assert!(w.coverage_identity());
        // Pairwise disjoint interiors: canonical order makes duplicates
        // adjacent, and distinct dyadic cubes overlap iff one contains the
        // other, which the ancestor scan below would catch.
        let set: HashSet<(u32, [u64; 2])> = w
            .cubes
            .iter()
            .map(|wc| (wc.cube.level, wc.cube.index))
            .collect();
        assert_eq!(set.len(), w.cubes.len());
        for wc in &w.cubes {
            for k2 in 0..wc.cube.level {
                let shift = wc.cube.level - k2;
                let key = (
                    k2,
                    [wc.cube.index[0] >> shift, wc.cube.index[1] >> shift],
                );
                assert!(!set.contains(&key), "nested selected cubes");
            }
        }
    }

    #[test]
    fn counts_are_prefix_stable_in_kmax() {
        let e = normalized("cantor3", Some(6));
        let w1 = whitney_counts_only(&e, 8).unwrap();
        let w2 = whitney_counts_only(&e, 10).unwrap();
        for k in 0..=8usize {
            if k < 8 {
                assert_eq!(w1.level_counts[k], w2.level_counts[k], "level {}", k);
            }
        }
    }

    #[test]
    fn counts_only_matches_collected_run() {
        let e = normalized("carpet", Some(3));
        let a = whitney_decompose(&e, 9).unwrap();
        let b = whitney_counts_only(&e, 9).unwrap();
        assert_eq!(a.level_counts, b.level_counts);
        assert_eq!(a.residual_cells, b.residual_cells);
        assert_eq!(a.e_units, b.e_units);
        assert!(b.cubes.is_empty() && !b.collected);
    }

    #[test]
    fn ball_scope_counts_subset_of_global() {
        let e = normalized("segment", None);
        let w = whitney_decompose(&e, 8).unwrap();
        let ball = Ball {
            center: [0.5, 0.5],
            radius: 0.1,
            dim: 2,
        };
        let global = generation_counts(&w, None).unwrap();
        let local = generation_counts(&w, Some(&ball)).unwrap();
        for (k, n) in local.window() {
            assert!(n <= global.get(k), "level {}", k);
        }
        assert!(local.total() > 0);
        // A ball covering the whole domain reproduces the global counts.
        let big = Ball {
            center: [0.5, 0.5],
            radius: 2.0,
            dim: 2,
        };
        let all = generation_counts(&w, Some(&big)).unwrap();
        for (k, n) in global.window() {
            assert_eq!(all.get(k), n);
        }
    }

    #[test]
    fn local_count_prunes_to_the_ball() {
        let e = normalized("point", None);
        // Around an isolated point, generation-k cubes live at distance
        // about 2^-k, so a radius-2^-m ball meets none of them for k much
        // coarser than m.
        let m = 8;
        let ball = Ball {
            center: [0.5, 0.5],
            radius: (-(m as f64)).exp2(),
            dim: 2,
        };
        for k in 3..(m - 2) {
            assert_eq!(local_count(&e, &ball, k).unwrap(), 0, "k = {}", k);
        }
        assert!(local_count(&e, &ball, m + 1).unwrap() > 0);
        // Full-domain ball agrees with the global decomposition.
        let w = whitney_counts_only(&e, 9).unwrap();
        let big = Ball {
            center: [0.5, 0.5],
            radius: 2.0,
            dim: 2,
        };
        assert_eq!(
            local_count(&e, &big, 8).unwrap(),
            w.level_counts[8],
        );
    }

    #[test]
    fn local_count_rejects_off_set_centers() {
        let e = normalized("point", None);
        let ball = Ball {
            center: [0.9, 0.9],
            radius: 0.05,
            dim: 2,
        };
        let err = local_count(&e, &ball, 5).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn neighbor_levels_stay_comparable() {
        for name in ["segment", "cantor3x3"] {
            let e = normalized(name, Some(3));
            let w = whitney_decompose(&e, 8).unwrap();
            let spread = neighbor_level_spread(&w).unwrap();
            assert!(spread <= 4, "{}: spread {}", name, spread);
        }
    }

    #[test]
    fn requires_normalized_input() {
        let e = named_set("segment", None).unwrap();
        assert!(whitney_decompose(&e, 6).is_err());
    }

    #[test]
    fn selected_dist_matches_exact_recomputation() {
        let e = normalized("cantor3", Some(4));
        let w = whitney_decompose(&e, 7).unwrap();
        for wc in w.cubes.iter().step_by(7) {
            let exact = dist_box_to_set(&wc.cube, &e);
            assert!(
                (wc.dist - exact).abs() <= 1e-12 * exact.max(1.0),
                "stored {} vs exact {}",
                wc.dist,
                exact
            );
        }
        let total: u64 = w.level_counts.iter().sum();
        assert_eq!(total, w.cubes.len() as u64);
    }
}
