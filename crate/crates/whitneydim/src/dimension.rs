//! Dimension estimators: box-count and Whitney-count Minkowski dimensions,
//! two-scale Assouad dimensions, porosity, uniform perfectness, and Lebesgue
//! codimensions.
//!
//! Counting is exact (integer cell/box incidence); only the final fits are
//! floating point. All limits are replaced by finite-scale proxies: slopes
//! are least-squares over a reported window, and limsup/liminf become the
//! max/min of fixed-width secant slopes, which cancel the multiplicative
//! constants that pollute raw `log N / k` quotients at reachable depths.

use std::collections::BTreeMap;

use num::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{max_cells, DistanceField};
use crate::geom::{cube_meets_box, BoxSet, DyadicCube};
use crate::rational::{rat, rat_to_f64, Rat};
use crate::setgen::resolution_budget;
use crate::whitney::{
    generation_counts, whitney_counts_only, CountScope, GenerationCounts,
};

/// Area threshold under which a box set is treated as measure zero.
pub const ZERO_AREA_EPS_LOG2: i64 = -20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FitVariant {
    Upper,
    Lower,
    Slope,
}

/// A single dimension estimate with enough provenance to re-derive it.
#[derive(Clone, Debug, Serialize)]
pub struct DimensionEstimate {
    pub value: f64,
    pub variant: FitVariant,
    pub method: String,
    /// Fit window; generation indices for count fits, radii for profiles.
    pub window: (f64, f64),
    /// RMS deviation of the data from the fitted value/line.
    pub residual: f64,
    /// Number of data points that entered the fit.
    pub samples: usize,
    /// Attaining center/scale for extremal variants, when meaningful.
    pub witness: Option<String>,
}

#[derive(Clone, Copy, Debug)]
pub struct FitOptions {
    /// Explicit fit window `[k_lo, k_hi]`; defaults to the last `tail`
    /// levels of the data.
    pub window: Option<(u32, u32)>,
    /// Tail-window width when `window` is not given.
    pub tail: u32,
    /// Secant step for the upper/lower variants.
    pub step: u32,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            window: None,
            tail: 4,
            step: 4,
        }
    }
}

/// Porosity estimate: the largest relative hole radius guaranteed across
/// all sampled centers and scales.
#[derive(Clone, Debug, Serialize)]
pub struct PorosityEstimate {
    pub rho: f64,
    pub sample_centers: usize,
    pub scales_tested: Vec<f64>,
    pub attained_min_at: ([f64; 2], f64),
}

/// Uniform perfectness: smallest tested annulus ratio that never isolates
/// a sampled point, or `None` when even the widest ratio fails.
#[derive(Clone, Debug, Serialize)]
pub struct PerfectnessEstimate {
    pub c_hat: Option<f64>,
    pub witnesses: Vec<([f64; 2], f64)>,
}

/// Whitney-count Minkowski estimates plus the hypotheses under which they
/// equal the box-count dimensions.
#[derive(Clone, Debug)]
pub struct WhitneyDims {
    pub upper: DimensionEstimate,
    pub lower: DimensionEstimate,
    pub slope: DimensionEstimate,
    pub counts: GenerationCounts,
    pub zero_area: bool,
    /// Filled by callers that also run a porosity estimate.
    pub porosity: Option<f64>,
}

pub(crate) fn clamp_value(v: f64, dim: usize) -> f64 {
    v.max(0.0).min(dim as f64 + 0.25)
}

/// Exact rational area is below `2^-20`, or the set came from a generator
/// whose attractor has similarity dimension strictly below the ambient one
/// (its prefractals carry area that vanishes in depth).
pub fn effectively_zero_area(e: &BoxSet) -> bool {
    let eps = rat(1, 1i64 << (-ZERO_AREA_EPS_LOG2));
    if e.measure() < eps {
        return true;
    }
    if let Some(s) = e.meta.get("similarity_dim").and_then(|v| v.as_f64()) {
        return s < e.dim() as f64 - 1e-9;
    }
    false
}

/// Exact level-`k` dyadic cell counts of cells whose closure meets `E`,
/// for every `k` in `[k_lo, k_hi]`.
pub fn box_counts(e: &BoxSet, k_lo: u32, k_hi: u32) -> Result<GenerationCounts> {
    if e.len() == 0 {
        return Err(Error::EmptySet("cannot count cells of an empty set".into()));
    }
    if k_lo > k_hi || k_hi > crate::geom::MAX_LEVEL {
        return Err(Error::InvalidParams(format!(
            "bad count range [{}, {}]",
            k_lo, k_hi
        )));
    }
    let d = e.dim();
    let mut counts: Vec<u64> = vec![0; k_hi as usize + 1];
    let mut visited: u64 = 0;
    let budget = max_cells();
    let all: Vec<u32> = (0..e.len() as u32).collect();
    let mut stack: Vec<(DyadicCube, Vec<u32>)> = vec![(DyadicCube::root(), all)];
    while let Some((cube, cands)) = stack.pop() {
        visited += 1;
        if visited > budget {
            return Err(Error::ResourceLimit(format!(
                "cell counting exceeded {} visited cells; raise WHITNEYDIM_MAX_CELLS",
                budget
            )));
        }
        let meets: Vec<u32> = cands
            .iter()
            .copied()
            .filter(|&i| cube_meets_box(e, &cube, i))
            .collect();
        if meets.is_empty() {
            continue;
        }
        if cube.level >= k_lo {
            counts[cube.level as usize] += 1;
        }
        if cube.level < k_hi {
            for j in 0..(1usize << d) {
                stack.push((cube.child(j, d), meets.clone()));
            }
        }
    }
    let mut map = BTreeMap::new();
    for k in k_lo..=k_hi {
        map.insert(k, counts[k as usize]);
    }
    Ok(GenerationCounts {
        counts: map,
        k_lo,
        k_hi,
        scope: CountScope::Global,
    })
}

/// Fits a dimension estimate from per-level counts.
///
/// `slope` is the least-squares slope of `log2 N_k` against `k` over the
/// window. `upper`/`lower` are the max/min of secant slopes
/// `(log2 N_k - log2 N_{k-step}) / step` for `k` in the window (the base
/// point may reach below the window but not below the data). Zero counts
/// are skipped; an all-zero window yields value 0.
pub fn fit_dimension(
    counts: &GenerationCounts,
    opts: &FitOptions,
    variant: FitVariant,
    method: &str,
) -> Result<DimensionEstimate> {
    let data: BTreeMap<u32, f64> = counts
        .window()
        .filter(|&(_, n)| n > 0)
        .map(|(k, n)| (k, (n as f64).log2()))
        .collect();
    let (mut w_lo, mut w_hi) = opts.window.unwrap_or_else(|| {
        let hi = counts.k_hi;
        (hi.saturating_sub(opts.tail.max(1) - 1).max(counts.k_lo), hi)
    });
    w_lo = w_lo.max(counts.k_lo);
    w_hi = w_hi.min(counts.k_hi);
    if w_lo > w_hi {
        return Err(Error::InsufficientData(
            "fit window is empty after clipping to the data range".into(),
        ));
    }
    if data.is_empty() {
        return Ok(DimensionEstimate {
            value: 0.0,
            variant,
            method: method.into(),
            window: (w_lo as f64, w_hi as f64),
            residual: 0.0,
            samples: 0,
            witness: None,
        });
    }
    let in_window: Vec<(u32, f64)> = data
        .range(w_lo..=w_hi)
        .map(|(&k, &y)| (k, y))
        .collect();
    if in_window.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} nonzero counts in window [{}, {}]; need at least 3",
            in_window.len(),
            w_lo,
            w_hi
        )));
    }
    let est = match variant {
        FitVariant::Slope => {
            let n = in_window.len() as f64;
            let sx: f64 = in_window.iter().map(|&(k, _)| k as f64).sum();
            let sy: f64 = in_window.iter().map(|&(_, y)| y).sum();
            let sxx: f64 = in_window.iter().map(|&(k, _)| (k as f64) * (k as f64)).sum();
            let sxy: f64 = in_window.iter().map(|&(k, y)| k as f64 * y).sum();
            let denom = n * sxx - sx * sx;
            let slope = (n * sxy - sx * sy) / denom;
            let intercept = (sy - slope * sx) / n;
            let rss: f64 = in_window
                .iter()
                .map(|&(k, y)| {
                    let p = slope * k as f64 + intercept;
                    (y - p) * (y - p)
                })
                .sum();
            DimensionEstimate {
                value: slope,
                variant,
                method: method.into(),
                window: (w_lo as f64, w_hi as f64),
                residual: (rss / n).sqrt(),
                samples: in_window.len(),
                witness: None,
            }
        }
        FitVariant::Upper | FitVariant::Lower => {
            let mut step = opts.step.max(1);
            // Shrink the step if the data cannot support it.
            let span = counts.k_hi - counts.k_lo;
            if step > span {
                step = span.max(1);
            }
            let mut secants: Vec<(u32, f64)> = Vec::new();
            for &(k, y) in &in_window {
                if k < counts.k_lo + step {
                    continue;
                }
                if let Some(&y0) = data.get(&(k - step)) {
                    secants.push((k, (y - y0) / step as f64));
                }
            }
            if secants.is_empty() {
                return Err(Error::InsufficientData(
                    "no secant pairs with nonzero counts".into(),
                ));
            }
            let pick = if variant == FitVariant::Upper {
                secants
                    .iter()
                    .copied()
                    .fold((0u32, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a })
            } else {
                secants
                    .iter()
                    .copied()
                    .fold((0u32, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
            };
            let mean = secants.iter().map(|&(_, s)| s).sum::<f64>() / secants.len() as f64;
            let rms = (secants
                .iter()
                .map(|&(_, s)| (s - mean) * (s - mean))
                .sum::<f64>()
                / secants.len() as f64)
                .sqrt();
            DimensionEstimate {
                value: pick.1,
                variant,
                method: method.into(),
                window: (w_lo as f64, w_hi as f64),
                residual: rms,
                samples: secants.len(),
                witness: Some(format!("secant ending at k={} (step {})", pick.0, step)),
            }
        }
    };
    Ok(est)
}

/// Convenience: upper and lower box-count Minkowski estimates with the fit
/// window clipped to the set's resolution budget.
pub fn minkowski_dims_box(
    e: &BoxSet,
    opts: &FitOptions,
) -> Result<(DimensionEstimate, DimensionEstimate)> {
    let k_hi = match opts.window {
        Some((_, hi)) => hi,
        None => resolution_budget(e).unwrap_or(10),
    };
    let counts = box_counts(e, 0, k_hi)?;
    let d = e.dim();
    let mut upper = fit_dimension(&counts, opts, FitVariant::Upper, "box")?;
    let mut lower = fit_dimension(&counts, opts, FitVariant::Lower, "box")?;
    upper.value = clamp_value(upper.value, d);
    lower.value = clamp_value(lower.value, d);
    Ok((upper, lower))
}

/// Whitney-count Minkowski estimates: decompose, count generations, fit.
///
/// The fit window top excludes the two incomplete generations at `k_max`
/// and also clips to the resolution budget when the generator recorded one.
pub fn minkowski_dims_whitney(
    e: &BoxSet,
    k_max: Option<u32>,
    opts: &FitOptions,
) -> Result<WhitneyDims> {
    let budget = resolution_budget(e);
    let k_max = k_max.unwrap_or_else(|| (budget.unwrap_or(8) + 2).min(crate::geom::MAX_LEVEL));
    let w = whitney_counts_only(e, k_max)?;
    let counts = generation_counts(&w, None)?;
    let mut k_hi = k_max.saturating_sub(2);
    if let Some(b) = budget {
        k_hi = k_hi.min(b);
    }
    let fit_opts = FitOptions {
        window: Some(match opts.window {
            Some(win) => win,
            None => (k_hi.saturating_sub(opts.tail.max(1) - 1), k_hi),
        }),
        ..*opts
    };
    let d = e.dim();
    let mut upper = fit_dimension(&counts, &fit_opts, FitVariant::Upper, "whitney")?;
    let mut lower = fit_dimension(&counts, &fit_opts, FitVariant::Lower, "whitney")?;
    let mut slope = fit_dimension(&counts, &fit_opts, FitVariant::Slope, "whitney")?;
    upper.value = clamp_value(upper.value, d);
    lower.value = clamp_value(lower.value, d);
    slope.value = clamp_value(slope.value, d);
    Ok(WhitneyDims {
        upper,
        lower,
        slope,
        counts,
        zero_area: effectively_zero_area(e),
        porosity: None,
    })
}

/// Deterministic center samples: one exact rational point of `E` per
/// level-`coarse` cell that meets `E`, capped by stride subsampling.
pub(crate) fn sample_centers(e: &BoxSet, coarse: u32, cap: usize) -> Vec<Vec<Rat>> {
    let d = e.dim();
    let mut centers: Vec<Vec<Rat>> = Vec::new();
    let n = 1u64 << coarse;
    let mut cells: Vec<[u64; 2]> = Vec::new();
    let mut stack = vec![DyadicCube::root()];
    let all: Vec<u32> = (0..e.len() as u32).collect();
    while let Some(cube) = stack.pop() {
        if !all.iter().any(|&i| cube_meets_box(e, &cube, i)) {
            continue;
        }
        if cube.level == coarse {
            cells.push(cube.index);
            continue;
        }
        for j in 0..(1usize << d) {
            stack.push(cube.child(j, d));
        }
    }
    cells.sort_unstable();
    for idx in cells {
        // First box (canonical order) meeting the cell supplies the point:
        // componentwise max of box corner and cell corner lies in both.
        let cell_cube = DyadicCube {
            level: coarse,
            index: idx,
        };
        let hit = (0..e.len() as u32).find(|&i| cube_meets_box(e, &cell_cube, i));
        if let Some(i) = hit {
            let mut p = Vec::with_capacity(d);
            for a in 0..d {
                let cell_lo = rat(idx[a] as i64, n as i64);
                let box_lo = e.lo_rat(i as usize, a);
                let box_hi = e.hi_rat(i as usize, a);
                let v = if box_lo > cell_lo { box_lo } else { cell_lo };
                // Clamp into the box in case the cell corner overshoots.
                p.push(if v > box_hi { box_hi } else { v });
            }
            centers.push(p);
        }
    }
    centers.dedup();
    if centers.len() > cap && cap > 0 {
        let stride = centers.len().div_ceil(cap);
        centers = centers.into_iter().step_by(stride).collect();
    }
    centers
}

/// Exact count of level-`k` cells meeting both `E` and the closed ball of
/// dyadic radius `2^-m` around a rational center.
fn cells_in_ball(e: &BoxSet, center: &[Rat], m: u32, k: u32) -> u64 {
    let d = e.dim();
    let r2 = rat(1, 1i64 << m) * rat(1, 1i64 << m);
    let mut count = 0u64;
    let mut stack = vec![(DyadicCube::root(), (0..e.len() as u32).collect::<Vec<u32>>())];
    while let Some((cube, cands)) = stack.pop() {
        let meets: Vec<u32> = cands
            .iter()
            .copied()
            .filter(|&i| cube_meets_box(e, &cube, i))
            .collect();
        if meets.is_empty() {
            continue;
        }
        // Exact cell/ball distance test.
        let side = rat(1, 1i64 << cube.level);
        let mut d2 = Rat::zero();
        for a in 0..d {
            let lo = rat(cube.index[a] as i64, 1) * &side;
            let hi = rat(cube.index[a] as i64 + 1, 1) * &side;
            let g = if center[a] < lo {
                lo - &center[a]
            } else if center[a] > hi {
                &center[a] - hi
            } else {
                Rat::zero()
            };
            d2 += &g * &g;
        }
        if d2 > r2 {
            continue;
        }
        if cube.level == k {
            count += 1;
            continue;
        }
        for j in 0..(1usize << d) {
            stack.push((cube.child(j, d), meets.clone()));
        }
    }
    count
}

#[derive(Clone, Copy, Debug)]
pub struct AssouadOptions {
    /// Coarse level whose cells seed the center samples.
    pub coarse: u32,
    /// Maximum number of centers kept (deterministic stride subsampling).
    pub max_centers: usize,
    /// Base scales `R = 2^-m` for `m` in this range.
    pub m_range: (u32, u32),
    /// Scale gaps `g`; the two-scale count uses cells of size `2^-(m+g)`.
    pub gap_range: (u32, u32),
}

impl Default for AssouadOptions {
    fn default() -> Self {
        AssouadOptions {
            coarse: 3,
            max_centers: 48,
            m_range: (3, 4),
            gap_range: (2, 8),
        }
    }
}

/// Two-scale Assouad estimates.
///
/// For each sampled center and base scale `R = 2^-m`, counts level-`(m+g)`
/// cells meeting `E ∩ B(x, R)` across the gap range and fits the exponent
/// in `g` (the per-location covering constant cancels). Upper estimate =
/// max over samples, lower = min, witnesses attached.
pub fn assouad_dims(
    e: &BoxSet,
    opts: &AssouadOptions,
) -> Result<(DimensionEstimate, DimensionEstimate)> {
    let d = e.dim();
    let diam = e.diam();
    let budget = resolution_budget(e).unwrap_or(crate::geom::MAX_LEVEL);
    let centers = sample_centers(e, opts.coarse, opts.max_centers);
    if centers.is_empty() {
        return Err(Error::InsufficientData("no center samples on the set".into()));
    }
    let (g_lo, g_hi) = opts.gap_range;
    let mut best: Option<(f64, String)> = None;
    let mut worst: Option<(f64, String)> = None;
    let mut samples = 0usize;
    for center in &centers {
        for m in opts.m_range.0..=opts.m_range.1 {
            let r = (-(m as f64)).exp2();
            if r >= diam && diam > 0.0 {
                continue;
            }
            let g_top = g_hi.min(budget.saturating_sub(m));
            if g_top < g_lo + 2 {
                continue;
            }
            let mut pts: Vec<(f64, f64)> = Vec::new();
            for g in g_lo..=g_top {
                let n = cells_in_ball(e, center, m, m + g);
                if n > 0 {
                    pts.push((g as f64, (n as f64).log2()));
                }
            }
            if pts.len() < 3 {
                continue;
            }
            let n = pts.len() as f64;
            let sx: f64 = pts.iter().map(|p| p.0).sum();
            let sy: f64 = pts.iter().map(|p| p.1).sum();
            let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
            let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
            let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
            samples += 1;
            let cf: Vec<f64> = center.iter().map(rat_to_f64).collect();
            let wit = format!("center=({:.6},{:.6}) R=2^-{}", cf[0], cf.get(1).copied().unwrap_or(0.0), m);
            if best.as_ref().map_or(true, |b| slope > b.0) {
                best = Some((slope, wit.clone()));
            }
            if worst.as_ref().map_or(true, |w| slope < w.0) {
                worst = Some((slope, wit));
            }
        }
    }
    let (best, worst) = match (best, worst) {
        (Some(b), Some(w)) => (b, w),
        _ => {
            return Err(Error::InsufficientData(
                "no valid (center, R, gap) triples under the resolution budget".into(),
            ))
        }
    };
    let window = (g_lo as f64, g_hi as f64);
    Ok((
        DimensionEstimate {
            value: clamp_value(best.0, d),
            variant: FitVariant::Upper,
            method: "assouad-upper".into(),
            window,
            residual: 0.0,
            samples,
            witness: Some(best.1),
        },
        DimensionEstimate {
            value: clamp_value(worst.0, d),
            variant: FitVariant::Lower,
            method: "assouad-lower".into(),
            window,
            residual: 0.0,
            samples,
            witness: Some(worst.1),
        },
    ))
}

/// Porosity lower bound from a distance field: for every sampled center
/// and scale, find the deepest complement hole inside the ball.
pub fn porosity_estimate(
    e: &BoxSet,
    field: &DistanceField,
    scales: &[f64],
) -> Result<PorosityEstimate> {
    if field.dim() != e.dim() {
        return Err(Error::InvalidParams("field/set dimension mismatch".into()));
    }
    let h = field.h();
    for &r in scales {
        if r < 16.0 * h {
            return Err(Error::ScaleTooFine(format!(
                "porosity scale {} is below 16h = {}",
                r,
                16.0 * h
            )));
        }
    }
    if scales.is_empty() {
        return Err(Error::InvalidParams("no porosity scales given".into()));
    }
    let centers = sample_centers(e, 3, 48);
    if centers.is_empty() {
        return Err(Error::InsufficientData("no center samples on the set".into()));
    }
    let d = e.dim();
    let n = field.n();
    let mut rho = f64::INFINITY;
    let mut attained = ([0.0; 2], 0.0);
    for center in &centers {
        let mut x = [0.0; 2];
        for a in 0..d {
            x[a] = rat_to_f64(&center[a]);
        }
        for &r in scales {
            let mut best = 0.0f64;
            let lo_ix = (((x[0] - r) / h).floor().max(0.0)) as usize;
            let hi_ix = (((x[0] + r) / h).ceil() as usize).min(n - 1);
            let (lo_iy, hi_iy) = if d == 2 {
                (
                    (((x[1] - r) / h).floor().max(0.0)) as usize,
                    (((x[1] + r) / h).ceil() as usize).min(n - 1),
                )
            } else {
                (0, 0)
            };
            for iy in lo_iy..=hi_iy {
                for ix in lo_ix..=hi_ix {
                    let y = field.node(ix, iy);
                    let dx = y[0] - x[0];
                    let dy = if d == 2 { y[1] - x[1] } else { 0.0 };
                    let dist_xy = (dx * dx + dy * dy).sqrt();
                    if dist_xy > r {
                        continue;
                    }
                    let hole = field.get(ix, iy).min(r - dist_xy);
                    if hole > best {
                        best = hole;
                    }
                }
            }
            let ratio = best / r;
            if ratio < rho {
                rho = ratio;
                attained = (x, r);
            }
        }
    }
    Ok(PorosityEstimate {
        rho,
        sample_centers: centers.len(),
        scales_tested: scales.to_vec(),
        attained_min_at: attained,
    })
}

/// Candidate annulus ratios for the uniform perfectness scan.
const PERFECTNESS_GRID: [(i64, i64); 8] = [
    (5, 4),
    (3, 2),
    (2, 1),
    (3, 1),
    (4, 1),
    (8, 1),
    (16, 1),
    (32, 1),
];

/// Smallest grid ratio `C` such that every sampled annulus
/// `B(x,r) ∖ B(x, r/C)` meets `E`, tested exactly on rational samples.
/// Samples where `E ⊆ B(x,r)` are skipped, matching the definition's
/// "whenever `E ∖ B(x,r) ≠ ∅`" guard.
pub fn uniform_perfectness(e: &BoxSet, radii: &[Rat]) -> Result<PerfectnessEstimate> {
    if radii.is_empty() {
        return Err(Error::InvalidParams("no annulus radii given".into()));
    }
    let d = e.dim();
    let centers = sample_centers(e, 3, 48);
    if centers.is_empty() {
        return Err(Error::InsufficientData("no center samples on the set".into()));
    }
    // Exact min/max squared distance from a rational point to a box.
    let box_dist_bounds = |x: &[Rat], i: usize| -> (Rat, Rat) {
        let mut dmin = Rat::zero();
        let mut dmax = Rat::zero();
        for a in 0..d {
            let lo = e.lo_rat(i, a);
            let hi = e.hi_rat(i, a);
            let g = if x[a] < lo {
                &lo - &x[a]
            } else if x[a] > hi {
                &x[a] - &hi
            } else {
                Rat::zero()
            };
            dmin += &g * &g;
            let far_lo = (&x[a] - &lo).abs();
            let far_hi = (&x[a] - &hi).abs();
            let far = if far_lo > far_hi { far_lo } else { far_hi };
            dmax += &far * &far;
        }
        (dmin, dmax)
    };
    for (num, den) in PERFECTNESS_GRID {
        let c2 = rat(num, den) * rat(num, den);
        let mut all_ok = true;
        let mut gated = 0usize;
        let mut failures: Vec<([f64; 2], f64)> = Vec::new();
        for x in &centers {
            for r in radii {
                let r2 = r * r;
                // Definition guard: the annulus only has to meet E when E
                // extends beyond B(x, r).
                let outside = (0..e.len()).any(|i| {
                    let (_, dmax) = box_dist_bounds(x, i);
                    dmax > r2
                });
                if !outside {
                    continue;
                }
                gated += 1;
                let inner2 = &r2 / &c2;
                let hit = (0..e.len()).any(|i| {
                    let (dmin, dmax) = box_dist_bounds(x, i);
                    dmin <= r2 && dmax > inner2
                });
                if !hit {
                    all_ok = false;
                    let mut xf = [0.0; 2];
                    for a in 0..d {
                        xf[a] = rat_to_f64(&x[a]);
                    }
                    failures.push((xf, rat_to_f64(r)));
                }
            }
        }
        if gated == 0 {
            // Every sampled ball swallowed the whole set: isolated points
            // or radii at the set's scale. No finite ratio is certified.
            return Ok(PerfectnessEstimate {
                c_hat: None,
                witnesses: Vec::new(),
            });
        }
        if all_ok {
            return Ok(PerfectnessEstimate {
                c_hat: Some(num as f64 / den as f64),
                witnesses: Vec::new(),
            });
        }
        if (num, den) == *PERFECTNESS_GRID.last().unwrap() {
            failures.truncate(8);
            return Ok(PerfectnessEstimate {
                c_hat: None,
                witnesses: failures,
            });
        }
    }
    unreachable!("grid scan always returns");
}

#[derive(Clone, Copy, Debug)]
pub struct CodimOptions {
    /// Base radii `R = 2^-m`.
    pub m_range: (u32, u32),
    /// Tube radii are `r = R · 2^-j` for `j` in this range.
    pub j_range: (u32, u32),
    pub max_centers: usize,
}

impl Default for CodimOptions {
    fn default() -> Self {
        CodimOptions {
            m_range: (3, 3),
            j_range: (1, 4),
            max_centers: 24,
        }
    }
}

/// Assouad codimension estimates from Lebesgue measure ratios
/// `μ(E_r ∩ B(x,R)) / μ(B(x,R))`, measured by node counting on the field
/// and fitted against `log(r/R)`. Lower codimension takes the min fitted
/// exponent over samples (the bound that must hold everywhere), upper the
/// max.
pub fn codimension_estimates(
    e: &BoxSet,
    field: &DistanceField,
    opts: &CodimOptions,
) -> Result<(DimensionEstimate, DimensionEstimate)> {
    let d = e.dim();
    if field.dim() != d {
        return Err(Error::InvalidParams("field/set dimension mismatch".into()));
    }
    let h = field.h();
    let n = field.n();
    let centers = sample_centers(e, 3, opts.max_centers);
    if centers.is_empty() {
        return Err(Error::InsufficientData("no center samples on the set".into()));
    }
    let mut fits: Vec<(f64, String)> = Vec::new();
    for center in &centers {
        let mut x = [0.0; 2];
        for a in 0..d {
            x[a] = rat_to_f64(&center[a]);
        }
        for m in opts.m_range.0..=opts.m_range.1 {
            let big_r = (-(m as f64)).exp2();
            let r_min = big_r * (-(opts.j_range.1 as f64)).exp2();
            if r_min < 4.0 * h {
                return Err(Error::ScaleTooFine(format!(
                    "codimension tube radius {} is below 4h = {}",
                    r_min,
                    4.0 * h
                )));
            }
            // One pass over the ball accumulates all tube counts.
            let jn = (opts.j_range.1 - opts.j_range.0 + 1) as usize;
            let mut tube = vec![0u64; jn];
            let mut ball = 0u64;
            let lo_ix = (((x[0] - big_r) / h).floor().max(0.0)) as usize;
            let hi_ix = (((x[0] + big_r) / h).ceil() as usize).min(n - 1);
            let (lo_iy, hi_iy) = if d == 2 {
                (
                    (((x[1] - big_r) / h).floor().max(0.0)) as usize,
                    (((x[1] + big_r) / h).ceil() as usize).min(n - 1),
                )
            } else {
                (0, 0)
            };
            for iy in lo_iy..=hi_iy {
                for ix in lo_ix..=hi_ix {
                    let y = field.node(ix, iy);
                    let dx = y[0] - x[0];
                    let dy = if d == 2 { y[1] - x[1] } else { 0.0 };
                    if dx * dx + dy * dy > big_r * big_r {
                        continue;
                    }
                    ball += 1;
                    let v = field.get(ix, iy);
                    for (ji, j) in (opts.j_range.0..=opts.j_range.1).enumerate() {
                        if v < big_r * (-(j as f64)).exp2() {
                            tube[ji] += 1;
                        }
                    }
                }
            }
            if ball == 0 {
                continue;
            }
            let pts: Vec<(f64, f64)> = (opts.j_range.0..=opts.j_range.1)
                .enumerate()
                .filter(|&(ji, _)| tube[ji] > 0)
                .map(|(ji, j)| (-(j as f64), (tube[ji] as f64 / ball as f64).log2()))
                .collect();
            if pts.len() < 3 {
                continue;
            }
            let np = pts.len() as f64;
            let sx: f64 = pts.iter().map(|p| p.0).sum();
            let sy: f64 = pts.iter().map(|p| p.1).sum();
            let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
            let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
            let slope = (np * sxy - sx * sy) / (np * sxx - sx * sx);
            fits.push((
                slope,
                format!("center=({:.6},{:.6}) R=2^-{}", x[0], x[1], m),
            ));
        }
    }
    if fits.is_empty() {
        return Err(Error::InsufficientData(
            "no codimension samples with enough nonzero tube counts".into(),
        ));
    }
    let lo = fits
        .iter()
        .cloned()
        .fold((f64::INFINITY, String::new()), |a, b| if b.0 < a.0 { b } else { a });
    let hi = fits
        .iter()
        .cloned()
        .fold((f64::NEG_INFINITY, String::new()), |a, b| if b.0 > a.0 { b } else { a });
    let window = (
        -(opts.j_range.1 as f64),
        -(opts.j_range.0 as f64),
    );
    Ok((
        DimensionEstimate {
            value: clamp_value(lo.0, d),
            variant: FitVariant::Lower,
            method: "codim".into(),
            window,
            residual: 0.0,
            samples: fits.len(),
            witness: Some(lo.1),
        },
        DimensionEstimate {
            value: clamp_value(hi.0, d),
            variant: FitVariant::Upper,
            method: "codim".into(),
            window,
            residual: 0.0,
            samples: fits.len(),
            witness: Some(hi.1),
        },
    ))
}

/// Exact count of level-`k` cells meeting `E ∩ B(x, radius)` for a float
/// ball; used by the local-count comparability suite.
pub fn box_cells_in_ball_f64(e: &BoxSet, center: [f64; 2], radius: f64, k: u32) -> u64 {
    let d = e.dim();
    let mut count = 0u64;
    let mut stack = vec![(DyadicCube::root(), (0..e.len() as u32).collect::<Vec<u32>>())];
    while let Some((cube, cands)) = stack.pop() {
        let meets: Vec<u32> = cands
            .iter()
            .copied()
            .filter(|&i| cube_meets_box(e, &cube, i))
            .collect();
        if meets.is_empty() {
            continue;
        }
        let side = cube.side();
        let mut d2 = 0.0f64;
        for a in 0..d {
            let lo = cube.index[a] as f64 * side;
            let hi = lo + side;
            let g = if center[a] < lo {
                lo - center[a]
            } else if center[a] > hi {
                center[a] - hi
            } else {
                0.0
            };
            d2 += g * g;
        }
        if d2 > radius * radius * (1.0 + 1e-12) {
            continue;
        }
        if cube.level == k {
            count += 1;
            continue;
        }
        for j in 0..(1usize << d) {
            stack.push((cube.child(j, d), meets.clone()));
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::BoxSet;
    use crate::setgen::named_set;
    use crate::whitney::CountScope;

    fn synth_counts(pairs: &[(u32, u64)]) -> GenerationCounts {
        let counts: BTreeMap<u32, u64> = pairs.iter().copied().collect();
        let k_lo = *counts.keys().next().unwrap();
        let k_hi = *counts.keys().last().unwrap();
        GenerationCounts {
            counts,
            k_lo,
            k_hi,
            scope: CountScope::Global,
        }
    }

    #[test]
    fn exact_geometric_counts_fit_exactly() {
        let counts = synth_counts(&(3..=12).map(|k| (k, 1u64 << k)).collect::<Vec<_>>());
        let opts = FitOptions::default();
        for variant in [FitVariant::Upper, FitVariant::Lower, FitVariant::Slope] {
            let est = fit_dimension(&counts, &opts, variant, "box").unwrap();
            assert!((est.value - 1.0).abs() < 1e-12, "{:?}: {}", variant, est.value);
        }
    }

    #[test]
    fn constant_counts_give_zero() {
        let counts = synth_counts(&(3..=12).map(|k| (k, 7u64)).collect::<Vec<_>>());
        let opts = FitOptions::default();
        for variant in [FitVariant::Upper, FitVariant::Lower, FitVariant::Slope] {
            let est = fit_dimension(&counts, &opts, variant, "box").unwrap();
            assert!(est.value.abs() < 1e-12);
        }
    }

    #[test]
    fn parity_alternating_counts_split_upper_lower() {
        // N_k = 2^{0.9k} at even k, 2^{0.6k} at odd k. Parity-preserving
        // secants (step 4) recover both exponents.
        let pairs: Vec<(u32, u64)> = (20..=30)
            .map(|k| {
                let e = if k % 2 == 0 { 0.9 } else { 0.6 };
                (k, (e * k as f64).exp2().round() as u64)
            })
            .collect();
        let counts = synth_counts(&pairs);
        let opts = FitOptions {
            window: Some((27, 30)),
            ..Default::default()
        };
        let upper = fit_dimension(&counts, &opts, FitVariant::Upper, "box").unwrap();
        let lower = fit_dimension(&counts, &opts, FitVariant::Lower, "box").unwrap();
        assert!((upper.value - 0.9).abs() < 0.02, "upper {}", upper.value);
        assert!((lower.value - 0.6).abs() < 0.02, "lower {}", lower.value);
        assert!(upper.value >= lower.value);
    }

    #[test]
    fn all_zero_counts_fit_to_zero() {
        let counts = synth_counts(&(3..=10).map(|k| (k, 0u64)).collect::<Vec<_>>());
        let est = fit_dimension(&counts, &FitOptions::default(), FitVariant::Slope, "box").unwrap();
        assert_eq!(est.value, 0.0);
        assert_eq!(est.samples, 0);
    }

    #[test]
    fn sparse_counts_are_rejected() {
        let counts = synth_counts(&[(3, 5), (4, 0), (5, 0), (6, 0), (7, 9)]);
        let err =
            fit_dimension(&counts, &FitOptions::default(), FitVariant::Slope, "box").unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn box_counts_point_are_constant_four() {
        // The normalized point sits on a dyadic grid node, so exactly four
        // cell closures meet it at every level.
        let e = named_set("point", None).unwrap().normalize();
        let counts = box_counts(&e, 1, 10).unwrap();
        for (k, n) in counts.window() {
            assert_eq!(n, 4, "level {}", k);
        }
    }

    #[test]
    fn box_counts_match_triadic_structure_for_cantor() {
        // Sanity against the exact construction: depth-n cantor3 has 2^n
        // boxes of side 3^-n; at dyadic level k the count is sandwiched by
        // the covering/packing relation N_dyadic(k) ≤ 2 * N_triadic(n) for
        // 2^-k ≥ 3^-n.
        let depth = 6;
        let e = named_set("cantor3", Some(depth)).unwrap().normalize();
        let counts = box_counts(&e, 3, 9).unwrap();
        for (k, n) in counts.window() {
            // Smallest triadic level with 3^-n ≤ 2^-k (after the normalize
            // halving, sides are 3^-n/2).
            let n_tri = ((k as f64 - 1.0) * 3.0f64.log2().recip()).ceil() as u32;
            let tri_count = 2u64.pow(n_tri.min(depth));
            assert!(n <= 4 * tri_count, "k={} n={} tri={}", k, n, tri_count);
            assert!(n as f64 >= 0.5 * (0.6309 * (k as f64 - 1.0)).exp2(), "k={} n={}", k, n);
        }
    }

    #[test]
    fn whitney_dims_point_and_segment() {
        let point = named_set("point", None).unwrap().normalize();
        let dims = minkowski_dims_whitney(&point, Some(10), &FitOptions::default()).unwrap();
        assert!(dims.upper.value <= 0.05, "upper {}", dims.upper.value);
        assert!(dims.lower.value <= 0.05);
        assert!(dims.zero_area);

        // Counts along a segment carry an additive endcap constant
        // (N_k = 2^{k+1} + 36), so the secants need deep generations
        // before they settle near 1.
        let seg = named_set("segment", None).unwrap().normalize();
        let dims = minkowski_dims_whitney(&seg, Some(17), &FitOptions::default()).unwrap();
        assert!((dims.upper.value - 1.0).abs() <= 0.05, "upper {}", dims.upper.value);
        assert!((dims.lower.value - 1.0).abs() <= 0.05, "lower {}", dims.lower.value);
        assert!(dims.upper.value >= dims.lower.value);
    }

    #[test]
    fn assouad_segment_is_one() {
        let seg = named_set("segment", None).unwrap().normalize();
        let (upper, lower) = assouad_dims(&seg, &AssouadOptions::default()).unwrap();
        assert!((upper.value - 1.0).abs() <= 0.1, "upper {}", upper.value);
        assert!((lower.value - 1.0).abs() <= 0.1, "lower {}", lower.value);
        assert!(upper.witness.is_some());
    }

    #[test]
    fn assouad_point_plus_segment_splits() {
        // A segment plus a far-away isolated point: near the point the
        // two-scale counts are constant (slope 0), on the segment they
        // double per level (slope 1).
        let input = vec![
            (vec![rat(1, 4), rat(5, 8)], vec![rat(0, 1), rat(0, 1)]),
            (vec![rat(1, 4), rat(1, 4)], vec![rat(1, 2), rat(0, 1)]),
        ];
        let e = BoxSet::new(2, input).unwrap().assume_normalized();
        let (upper, lower) = assouad_dims(&e, &AssouadOptions::default()).unwrap();
        assert!((upper.value - 1.0).abs() <= 0.1, "upper {}", upper.value);
        assert!(lower.value <= 0.1, "lower {}", lower.value);
    }

    #[test]
    fn perfectness_segment_vs_point() {
        let seg = named_set("segment", None).unwrap().normalize();
        let radii = vec![rat(1, 8), rat(1, 16), rat(1, 32)];
        let p = uniform_perfectness(&seg, &radii).unwrap();
        assert_eq!(p.c_hat, Some(1.25));

        // A single point: every ball swallows the set, so no annulus is
        // ever required to be nonempty and no finite ratio is certified.
        let point = named_set("point", None).unwrap().normalize();
        let p = uniform_perfectness(&point, &radii).unwrap();
        assert!(p.c_hat.is_none());
        assert!(p.witnesses.is_empty());
    }

    #[test]
    fn perfectness_cantor_bounded_by_gap_ratio() {
        let e = named_set("cantor3", Some(6)).unwrap().normalize();
        let radii = vec![rat(1, 8), rat(1, 16), rat(1, 32), rat(1, 64)];
        let p = uniform_perfectness(&e, &radii).unwrap();
        let c = p.c_hat.expect("cantor set is uniformly perfect");
        assert!(c <= 4.0, "C_hat = {}", c);
    }

    #[test]
    fn zero_area_gate() {
        let point = named_set("point", None).unwrap();
        assert!(effectively_zero_area(&point));
        let carpet = named_set("carpet", Some(3)).unwrap();
        // Positive area but similarity dimension < 2: gate admits it.
        assert!(effectively_zero_area(&carpet));
        let square = named_set("square", None).unwrap();
        assert!(!effectively_zero_area(&square));
    }

    #[test]
    fn sample_centers_lie_on_the_set() {
        let e = named_set("cantor3x3", Some(3)).unwrap().normalize();
        let centers = sample_centers(&e, 3, 32);
        assert!(!centers.is_empty() && centers.len() <= 32);
        for c in &centers {
            let p: Vec<Rat> = c.clone();
            let d2 = crate::geom::dist2_point_to_set_exact(&p, &e);
            assert!(d2.is_zero(), "center off the set");
        }
    }

    #[test]
    fn codimension_point_is_ambient() {
        let e = named_set("point", None).unwrap().normalize();
        let field = DistanceField::build(&e, 9).unwrap();
        let opts = CodimOptions {
            m_range: (3, 3),
            j_range: (1, 4),
            max_centers: 4,
        };
        let (lower, upper) = codimension_estimates(&e, &field, &opts).unwrap();
        assert!((lower.value - 2.0).abs() <= 0.1, "lower {}", lower.value);
        assert!((upper.value - 2.0).abs() <= 0.1, "upper {}", upper.value);
    }

    #[test]
    fn codimension_segment_is_one() {
        let e = named_set("segment", None).unwrap().normalize();
        let field = DistanceField::build(&e, 10).unwrap();
        let opts = CodimOptions {
            m_range: (3, 3),
            j_range: (1, 5),
            max_centers: 8,
        };
        let (lower, upper) = codimension_estimates(&e, &field, &opts).unwrap();
        assert!((lower.value - 1.0).abs() <= 0.1, "lower {}", lower.value);
        assert!((upper.value - 1.0).abs() <= 0.15, "upper {}", upper.value);
    }

    #[test]
    fn porosity_of_segment_near_half() {
        let e = named_set("segment", None).unwrap().normalize();
        let field = DistanceField::build(&e, 10).unwrap();
        let est = porosity_estimate(&e, &field, &[1.0 / 16.0]).unwrap();
        assert!(est.rho >= 0.4, "rho {}", est.rho);
        assert!(est.rho <= 0.5 + 1e-9);
    }

    #[test]
    fn porosity_zero_inside_full_square() {
        let e = named_set("square", None).unwrap().normalize();
        let field = DistanceField::build(&e, 9).unwrap();
        let est = porosity_estimate(&e, &field, &[1.0 / 16.0]).unwrap();
        assert!(est.rho <= 1.0 / 16.0, "rho {}", est.rho);
    }

    #[test]
    fn porosity_rejects_too_fine_scales() {
        let e = named_set("segment", None).unwrap().normalize();
        let field = DistanceField::build(&e, 6).unwrap();
        let err = porosity_estimate(&e, &field, &[4.0 * field.h()]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn consistency_chain_on_cantor_dust() {
        // At depth 6 the resolution budget leaves a short generation
        // window, so the secant extremes are still transient; the
        // least-squares slope is the stable quantity to bracket.
        let e = named_set("cantor3x3", Some(6)).unwrap().normalize();
        let dims = minkowski_dims_whitney(&e, None, &FitOptions::default()).unwrap();
        let (a_up, a_lo) = assouad_dims(&e, &AssouadOptions::default()).unwrap();
        assert!(dims.lower.value <= dims.upper.value + 1e-9);
        assert!(a_lo.value <= dims.slope.value + 0.1, "a_lo {} slope {}", a_lo.value, dims.slope.value);
        assert!(dims.slope.value <= a_up.value + 0.1, "slope {} a_up {}", dims.slope.value, a_up.value);
    }
}
