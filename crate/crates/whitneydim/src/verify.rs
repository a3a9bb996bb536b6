//! Quantitative law checks.
//!
//! Each checker here ties together two quantities the rest of the crate
//! computes independently — Whitney generation counts against contour
//! lengths, neighborhood boundary length against scale power laws, generated
//! corner-construction scalars against their closed forms — and reports
//! fitted constants alongside a pass/fail verdict. The fitted constants are
//! regression guards for the concrete test sets, not universal values; the
//! structural content of each check is that the relevant ratio exists, stays
//! positive, and stays within a configured band.

use rayon::prelude::*;
use serde::Serialize;
use std::cmp::Ordering;

use crate::algebraic::RootExpr;
use crate::boundary::{
    boundary_length_profile, exact_perimeter, extract_boundary, seg_rect_len,
};
use crate::dimension::{box_counts, fit_dimension, FitOptions, FitVariant};
use crate::error::{Error, Result};
use crate::field::DistanceField;
use crate::geom::{dist_point_to_set, BoxSet, MAX_LEVEL};
use crate::rational::Rat;
use crate::setgen::{thick_cantor_generate, ThickCantorParams};
use crate::whitney::{generation_counts, whitney_counts_only, whitney_decompose};
use num::{BigInt, Zero};

fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

// ---------------------------------------------------------------------------
// Generation/length sandwich.
// ---------------------------------------------------------------------------

/// Options for [`sandwich_check`].
#[derive(Clone, Debug)]
pub struct SandwichOptions {
    /// Generations to test; defaults to `[4, k_cap]` where `k_cap` is the
    /// finest generation whose matched radius the field still resolves.
    pub k_range: Option<(u32, u32)>,
    /// Generation band `[k+a, k+b]` summed on the upper side.
    pub offsets: (u32, u32),
    /// Try shifting both offsets by `-3..=3` and keep the tightest band.
    pub search: bool,
    /// Largest acceptable ratio between the upper and lower constants.
    pub bound: f64,
    /// Matched radius per generation: `r = r_factor·2^{-k}`. The default
    /// 3/4 is the midpoint of the dyadic bucket `(2^{-k-1}, 2^{-k}]`.
    pub r_factor: f64,
}

impl Default for SandwichOptions {
    fn default() -> Self {
        SandwichOptions {
            k_range: None,
            offsets: (2, 4),
            search: false,
            bound: 50.0,
            r_factor: 0.75,
        }
    }
}

/// One generation of the sandwich comparison.
#[derive(Clone, Debug, Serialize)]
pub struct SandwichRow {
    pub k: u32,
    pub r: f64,
    /// Contour length at the matched radius.
    pub length: f64,
    /// Whitney cube count at generation `k`.
    pub w_k: u64,
    /// Summed counts over the offset band `[k+a, k+b]`.
    pub w_sum: u64,
    /// `length / (r·w_k)` — the largest constant the lower bound admits here.
    pub lower_ratio: f64,
    /// `length / (r·w_sum)` — the smallest constant the upper bound needs here.
    pub upper_ratio: f64,
}

/// Result of [`sandwich_check`].
#[derive(Clone, Debug, Serialize)]
pub struct SandwichReport {
    /// Offsets actually used (after any search).
    pub offsets: (u32, u32),
    /// Shift applied to the requested offsets, zero unless searched.
    pub shift: i32,
    pub searched: bool,
    pub r_factor: f64,
    pub rows: Vec<SandwichRow>,
    /// `min` of the per-row lower ratios.
    pub lower_constant: f64,
    /// `max` of the per-row upper ratios.
    pub upper_constant: f64,
    /// `upper_constant / lower_constant`.
    pub spread: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Checks the two-sided comparison between boundary length and Whitney
/// counts: at the radius matched to generation `k`, the contour length must
/// be bounded below by `c·r·#W_k` and above by `C·r·Σ_{j=k+a}^{k+b} #W_j`.
///
/// Rows are emitted for every generation in range with a positive cube
/// count. The report passes when the fitted lower constant is positive, the
/// fitted upper constant is finite, and their ratio stays under
/// `opts.bound`.
pub fn sandwich_check(
    e: &BoxSet,
    field: &DistanceField,
    opts: &SandwichOptions,
) -> Result<SandwichReport> {
    if e.dim() != 2 {
        return Err(Error::InvalidParams(
            "the sandwich comparison measures planar contour length".into(),
        ));
    }
    if !(opts.r_factor > 0.5 && opts.r_factor <= 1.0) {
        return Err(Error::InvalidParams(format!(
            "radius factor {} outside the bucket (1/2, 1]",
            opts.r_factor
        )));
    }
    let h = field.h();
    // Finest generation whose matched radius the contour extractor accepts.
    let k_cap = (opts.r_factor / (8.0 * h)).log2().floor();
    if k_cap < 3.0 {
        return Err(Error::ScaleTooFine(format!(
            "grid level {} resolves no generation at or above 3",
            field.k()
        )));
    }
    let k_cap = k_cap as u32;
    let (k_lo, k_hi) = opts.k_range.unwrap_or((4.min(k_cap), k_cap));
    if k_lo > k_hi || k_lo < 3 {
        return Err(Error::InvalidParams(format!(
            "bad generation range [{k_lo}, {k_hi}]; generations start at 3"
        )));
    }
    if k_hi > k_cap {
        return Err(Error::ScaleTooFine(format!(
            "generation {k_hi} needs radius {} but the grid only resolves \
             radii down to {}; no overlap between generations and contour scales",
            opts.r_factor * (-(k_hi as f64)).exp2(),
            8.0 * h
        )));
    }
    let search_margin = if opts.search { 3 } else { 0 };
    let k_count = k_hi + opts.offsets.1 + search_margin + 1;
    if k_count > MAX_LEVEL {
        return Err(Error::InvalidParams(format!(
            "offset band reaches generation {k_count}, past the level cap {MAX_LEVEL}"
        )));
    }
    let w = whitney_counts_only(e, k_count)?;
    let counts = generation_counts(&w, None)?;

    let ks: Vec<u32> = (k_lo..=k_hi).filter(|&k| counts.get(k) > 0).collect();
    if ks.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no generation in [{k_lo}, {k_hi}] selects any cube"
        )));
    }
    let lens: Vec<(u32, f64, f64)> = ks
        .par_iter()
        .map(|&k| {
            let r = opts.r_factor * (-(k as f64)).exp2();
            let curve = extract_boundary(e, field, r)?;
            Ok((k, r, curve.total_length))
        })
        .collect::<Result<_>>()?;

    let evaluate = |shift: i32| -> Option<(Vec<SandwichRow>, f64, f64)> {
        let a = opts.offsets.0 as i64 + shift as i64;
        let b = opts.offsets.1 as i64 + shift as i64;
        if a < 0 {
            return None;
        }
        let mut rows = Vec::with_capacity(lens.len());
        let mut lo_c = f64::INFINITY;
        let mut hi_c = 0.0f64;
        for &(k, r, length) in &lens {
            let w_k = counts.get(k);
            let w_sum: u64 = (a..=b).map(|j| counts.get((k as i64 + j) as u32)).sum();
            let lower_ratio = length / (r * w_k as f64);
            let upper_ratio = if w_sum > 0 {
                length / (r * w_sum as f64)
            } else {
                f64::INFINITY
            };
            lo_c = lo_c.min(lower_ratio);
            hi_c = hi_c.max(upper_ratio);
            rows.push(SandwichRow {
                k,
                r,
                length,
                w_k,
                w_sum,
                lower_ratio,
                upper_ratio,
            });
        }
        Some((rows, lo_c, hi_c))
    };

    let shifts: Vec<i32> = if opts.search { (-3..=3).collect() } else { vec![0] };
    let mut best: Option<(i32, Vec<SandwichRow>, f64, f64)> = None;
    for s in shifts {
        if let Some((rows, lo_c, hi_c)) = evaluate(s) {
            let spread = hi_c / lo_c;
            let replace = match &best {
                None => true,
                Some((bs, _, blo, bhi)) => {
                    let bspread = bhi / blo;
                    spread < bspread || (spread == bspread && s.abs() < bs.abs())
                }
            };
            if replace {
                best = Some((s, rows, lo_c, hi_c));
            }
        }
    }
    let (shift, rows, lower_constant, upper_constant) =
        best.ok_or_else(|| Error::InvalidParams("offset search left no valid band".into()))?;
    let spread = upper_constant / lower_constant;
    let pass = lower_constant > 0.0 && upper_constant.is_finite() && spread <= opts.bound;
    Ok(SandwichReport {
        offsets: (
            (opts.offsets.0 as i64 + shift as i64) as u32,
            (opts.offsets.1 as i64 + shift as i64) as u32,
        ),
        shift,
        searched: opts.search,
        r_factor: opts.r_factor,
        rows,
        lower_constant,
        upper_constant,
        spread,
        bound: opts.bound,
        pass,
    })
}

// ---------------------------------------------------------------------------
// Per-cube clipping checks.
// ---------------------------------------------------------------------------

/// A bucket grid over contour segments for fast rectangle queries.
struct SegIndex<'a> {
    segs: &'a [([f64; 2], [f64; 2])],
    n: usize,
    cell: f64,
    buckets: Vec<Vec<u32>>,
    seen: Vec<u64>,
    stamp: u64,
}

impl<'a> SegIndex<'a> {
    fn new(segs: &'a [([f64; 2], [f64; 2])]) -> Self {
        let n = 32usize;
        let cell = 1.0 / n as f64;
        let mut buckets = vec![Vec::new(); n * n];
        let clampi = |v: f64| -> usize { (v.max(0.0) / cell) as usize % n.max(1) };
        let clamp = |v: f64| -> usize { clampi(v).min(n - 1) };
        for (i, &(a, b)) in segs.iter().enumerate() {
            let x0 = clamp(a[0].min(b[0]));
            let x1 = clamp(a[0].max(b[0]));
            let y0 = clamp(a[1].min(b[1]));
            let y1 = clamp(a[1].max(b[1]));
            for iy in y0..=y1 {
                for ix in x0..=x1 {
                    buckets[iy * n + ix].push(i as u32);
                }
            }
        }
        SegIndex {
            segs,
            n,
            cell,
            buckets,
            seen: vec![0; segs.len()],
            stamp: 0,
        }
    }

    /// Total clipped length of the indexed segments inside `[lo, hi]`.
    fn clip_len(&mut self, lo: [f64; 2], hi: [f64; 2]) -> f64 {
        self.stamp += 1;
        let b = |v: f64| -> usize {
            ((v.max(0.0) / self.cell) as usize).min(self.n - 1)
        };
        let (x0, x1) = (b(lo[0]), b(hi[0]));
        let (y0, y1) = (b(lo[1]), b(hi[1]));
        let mut total = 0.0;
        for iy in y0..=y1 {
            for ix in x0..=x1 {
                for &id in &self.buckets[iy * self.n + ix] {
                    if self.seen[id as usize] == self.stamp {
                        continue;
                    }
                    self.seen[id as usize] = self.stamp;
                    let (a, bb) = self.segs[id as usize];
                    total += seg_rect_len(a, bb, lo, hi);
                }
            }
        }
        total
    }
}

/// Result of [`per_cube_boundary_checks`].
#[derive(Clone, Debug, Serialize)]
pub struct PerCubeReport {
    pub r: f64,
    /// Generation matched to `r` by the dyadic bucket `(2^{-k-1}, 2^{-k}]`.
    pub matched_k: u32,
    /// Cubes at the matched generation.
    pub matched_cubes: usize,
    /// Cubes (any generation) the contour actually enters.
    pub touched_cubes: usize,
    /// Max over all cubes of clipped length / side.
    pub upper_max: f64,
    /// Per-generation maxima of the upper ratio.
    pub upper_by_level: Vec<(u32, f64)>,
    /// Min over matched-generation cubes of (length inside the 8× dilate)/r.
    pub lower_min: f64,
    pub upper_bound: f64,
    pub lower_floor: f64,
    pub pass: bool,
}

/// Per-cube contour checks at a radius matched to one Whitney generation.
///
/// Upper: inside any Whitney cube `B` (every generation), the clipped
/// contour length must stay below `upper_bound·side(B)` — a cube whose
/// distance band does not straddle `r` contributes length zero and passes
/// trivially. Lower: inside the 8× dilate of each matched-generation cube,
/// the clipped length must reach `lower_floor·r`. The extreme ratios are
/// reported as fitted constants.
pub fn per_cube_boundary_checks(
    e: &BoxSet,
    field: &DistanceField,
    r: f64,
    upper_bound: f64,
    lower_floor: f64,
) -> Result<PerCubeReport> {
    if e.dim() != 2 {
        return Err(Error::InvalidParams(
            "per-cube checks clip planar contours".into(),
        ));
    }
    if !(r > 0.0 && r.is_finite()) || r > 0.5 {
        return Err(Error::InvalidParams(format!(
            "radius {r} outside (0, 1/2]"
        )));
    }
    let k = (-r.log2()).floor() as u32;
    if k < 3 {
        return Err(Error::InvalidParams(format!(
            "radius {r} matches generation {k}; generations start at 3"
        )));
    }
    if k + 5 > MAX_LEVEL {
        return Err(Error::ScaleTooFine(format!(
            "generation {k} needs a decomposition past the level cap"
        )));
    }
    let curve = extract_boundary(e, field, r)?;
    let w = whitney_decompose(e, k + 5)?;
    let mut index = SegIndex::new(&curve.segments);

    let mut upper_max = 0.0f64;
    let mut by_level: std::collections::BTreeMap<u32, f64> = std::collections::BTreeMap::new();
    let mut lower_min = f64::INFINITY;
    let mut matched = 0usize;
    let mut touched = 0usize;
    for wc in &w.cubes {
        let side = wc.cube.side();
        let lo = [wc.cube.lo_f(0), wc.cube.lo_f(1)];
        let hi = [wc.cube.hi_f(0), wc.cube.hi_f(1)];
        let clip = index.clip_len(lo, hi);
        if clip > 0.0 {
            touched += 1;
        }
        let ratio = clip / side;
        upper_max = upper_max.max(ratio);
        let entry = by_level.entry(wc.cube.level).or_insert(0.0);
        *entry = entry.max(ratio);
        if wc.cube.level == k {
            matched += 1;
            let half = 4.0 * side;
            let c = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
            let clip8 = index.clip_len([c[0] - half, c[1] - half], [c[0] + half, c[1] + half]);
            lower_min = lower_min.min(clip8 / r);
        }
    }
    if matched == 0 {
        return Err(Error::InsufficientData(format!(
            "no Whitney cube at the matched generation {k}"
        )));
    }
    let pass = upper_max <= upper_bound && lower_min >= lower_floor;
    Ok(PerCubeReport {
        r,
        matched_k: k,
        matched_cubes: matched,
        touched_cubes: touched,
        upper_max,
        upper_by_level: by_level.into_iter().collect(),
        lower_min,
        upper_bound,
        lower_floor,
        pass,
    })
}

// ---------------------------------------------------------------------------
// Two-regime length envelope.
// ---------------------------------------------------------------------------

/// One radius of an envelope scan; `scaled` is the regime-specific ratio.
#[derive(Clone, Debug, Serialize)]
pub struct EnvelopeRow {
    pub r: f64,
    pub length: f64,
    pub scaled: f64,
}

/// Result of [`length_envelope_check`].
#[derive(Clone, Debug, Serialize)]
pub struct LengthEnvelopeReport {
    /// Rows with `r ≤ diam(E)`; `scaled = r·length`.
    pub small_rows: Vec<EnvelopeRow>,
    /// Fitted bound on `r·length` below the diameter.
    pub c2_hat: f64,
    /// Rows with `r > diam(E)`, measured exactly; `scaled = length/r`.
    pub large_rows: Vec<EnvelopeRow>,
    /// Fitted bound on `length/r` above the diameter.
    pub c1_hat: f64,
    pub c1_bound: f64,
    pub pass: bool,
}

/// Checks the two-regime boundary length envelope: below the diameter the
/// product `r·length(r)` stays bounded (reported, not gated), and above the
/// diameter `length(r) ≤ c1·r` with `c1` at most `c1_bound`.
///
/// Small-regime lengths come from grid contours over `schedule`;
/// large-regime lengths are exact perimeters at `multipliers × diam(E)`
/// (a set with zero diameter uses base radius 1/4).
pub fn length_envelope_check(
    e: &BoxSet,
    field: &DistanceField,
    schedule: &[f64],
    multipliers: &[f64],
    c1_bound: f64,
) -> Result<LengthEnvelopeReport> {
    if multipliers.is_empty() || multipliers.iter().any(|&m| !(m > 1.0) || !m.is_finite()) {
        return Err(Error::InvalidParams(
            "need multipliers > 1 to probe radii above the diameter".into(),
        ));
    }
    let profile = boundary_length_profile(e, field, schedule)?;
    let small_rows: Vec<EnvelopeRow> = profile
        .iter()
        .map(|p| EnvelopeRow {
            r: p.r,
            length: p.length,
            scaled: p.r * p.length,
        })
        .collect();
    let c2_hat = small_rows.iter().map(|p| p.scaled).fold(0.0, f64::max);

    let base = if e.diam() > 0.0 { e.diam() } else { 0.25 };
    let mut large_rows = Vec::with_capacity(multipliers.len());
    for &m in multipliers {
        let r = m * base;
        let length = exact_perimeter(e, r)?;
        large_rows.push(EnvelopeRow {
            r,
            length,
            scaled: length / r,
        });
    }
    let c1_hat = large_rows.iter().map(|p| p.scaled).fold(0.0, f64::max);
    let pass = c1_hat <= c1_bound;
    Ok(LengthEnvelopeReport {
        small_rows,
        c2_hat,
        large_rows,
        c1_hat,
        c1_bound,
        pass,
    })
}

// ---------------------------------------------------------------------------
// Power-law band.
// ---------------------------------------------------------------------------

/// Result of [`regular_law_check`].
#[derive(Clone, Debug, Serialize)]
pub struct RegularLawReport {
    /// Exponent the set's construction predicts.
    pub s: f64,
    /// Rows with `scaled = length·r^{s-1}`.
    pub rows: Vec<EnvelopeRow>,
    pub band: (f64, f64),
    /// `band.1 / band.0`.
    pub ratio: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Checks that `length(r)·r^{s-1}` stays inside a bounded band over the
/// schedule, where `s` is the expected scaling exponent of the set. The
/// report passes when the band's max/min ratio is at most `bound`.
pub fn regular_law_check(
    e: &BoxSet,
    field: &DistanceField,
    s: f64,
    schedule: &[f64],
    bound: f64,
) -> Result<RegularLawReport> {
    let d = e.dim() as f64;
    if !(s > 0.0 && s < d) {
        return Err(Error::InvalidParams(format!(
            "exponent {s} outside (0, {d})"
        )));
    }
    let profile = boundary_length_profile(e, field, schedule)?;
    let rows: Vec<EnvelopeRow> = profile
        .iter()
        .map(|p| EnvelopeRow {
            r: p.r,
            length: p.length,
            scaled: p.length * p.r.powf(s + 1.0 - d),
        })
        .collect();
    let live: Vec<f64> = rows
        .iter()
        .filter(|p| p.length > 0.0)
        .map(|p| p.scaled)
        .collect();
    if live.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} radii with positive length; need 3 for a band",
            live.len()
        )));
    }
    let lo = live.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = live.iter().copied().fold(0.0, f64::max);
    let ratio = hi / lo;
    Ok(RegularLawReport {
        s,
        rows,
        band: (lo, hi),
        ratio,
        bound,
        pass: ratio <= bound,
    })
}

// ---------------------------------------------------------------------------
// Window-local profile exponent.
// ---------------------------------------------------------------------------

/// Result of [`local_boundary_profile`].
#[derive(Clone, Debug, Serialize)]
pub struct LocalProfileReport {
    pub center: [f64; 2],
    pub radius: f64,
    /// Fitted local exponent: `length(r)/r ∝ (r/R)^{-lambda}` inside the
    /// window.
    pub lambda: f64,
    /// Rows `(r, clipped length, clipped length / r)`.
    pub rows: Vec<EnvelopeRow>,
    /// Rows that entered the fit.
    pub used: usize,
}

/// Length of the part of segment `a..b` inside the closed disc of radius
/// `rad` around `c`.
fn seg_disc_len(a: [f64; 2], b: [f64; 2], c: [f64; 2], rad: f64) -> f64 {
    let w = [b[0] - a[0], b[1] - a[1]];
    let u = [a[0] - c[0], a[1] - c[1]];
    let qa = w[0] * w[0] + w[1] * w[1];
    if qa == 0.0 {
        return 0.0;
    }
    let qb = 2.0 * (w[0] * u[0] + w[1] * u[1]);
    let qc = u[0] * u[0] + u[1] * u[1] - rad * rad;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc <= 0.0 {
        return 0.0;
    }
    let sq = disc.sqrt();
    let t0 = ((-qb - sq) / (2.0 * qa)).max(0.0);
    let t1 = ((-qb + sq) / (2.0 * qa)).min(1.0);
    if t1 <= t0 {
        return 0.0;
    }
    qa.sqrt() * (t1 - t0)
}

/// Fits the local scaling exponent of contour length inside a window
/// `B(center, radius)` centered on the set: clip each contour to the window
/// and regress `log(length/r)` on `log(r/radius)`. For a point the clipped
/// length is a full circle (`lambda ≈ 0`); along a straight edge it is a
/// pair of chords (`lambda ≈ 1`); on a fractal it tracks the local
/// dimension.
pub fn local_boundary_profile(
    e: &BoxSet,
    field: &DistanceField,
    center: [f64; 2],
    radius: f64,
    schedule: &[f64],
) -> Result<LocalProfileReport> {
    if e.dim() != 2 {
        return Err(Error::InvalidParams("local profiles clip planar contours".into()));
    }
    if dist_point_to_set(&center, e) > 1e-9 {
        return Err(Error::InvalidParams(
            "window center must lie on the set".into(),
        ));
    }
    if !(radius > 0.0 && radius <= 1.0) {
        return Err(Error::InvalidParams(format!(
            "window radius {radius} outside (0, 1]"
        )));
    }
    let h = field.h();
    let mut rs: Vec<f64> = schedule
        .iter()
        .copied()
        .filter(|&r| r >= 8.0 * h && r <= radius / 2.0)
        .collect();
    rs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    rs.dedup();
    if rs.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} schedule radii inside [{}, {}]; need 3",
            rs.len(),
            8.0 * h,
            radius / 2.0
        )));
    }
    let rows: Vec<EnvelopeRow> = rs
        .par_iter()
        .map(|&r| {
            let curve = extract_boundary(e, field, r)?;
            let length: f64 = curve
                .segments
                .iter()
                .map(|&(a, b)| seg_disc_len(a, b, center, radius))
                .sum();
            Ok(EnvelopeRow { r, length, scaled: length / r })
        })
        .collect::<Result<_>>()?;
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|p| p.length > 0.0)
        .map(|p| ((p.r / radius).log2(), p.scaled.log2()))
        .collect();
    if pts.len() < 3 || pts[0].0 - pts[pts.len() - 1].0 < 1.0 {
        return Err(Error::InsufficientData(format!(
            "{} usable rows; need 3 spanning an octave",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    Ok(LocalProfileReport {
        center,
        radius,
        lambda: -slope,
        used: pts.len(),
        rows,
    })
}

// ---------------------------------------------------------------------------
// Corner-construction stage checks.
// ---------------------------------------------------------------------------

/// One perimeter probe near a stage's separation scale.
#[derive(Clone, Debug, Serialize)]
pub struct ProbeRow {
    pub r: f64,
    pub length: f64,
    /// `length / (count·ℓ)` at the probed stage.
    pub ratio: f64,
}

/// Result of [`thick_stage_check`].
#[derive(Clone, Debug, Serialize)]
pub struct ThickStageReport {
    /// Stage probed (the last even stage).
    pub stage: usize,
    pub count: u128,
    pub ell: f64,
    pub min_sep: f64,
    pub probe: f64,
    /// Stage scalars recomputed from closed forms agree exactly with the
    /// generator's incremental arithmetic.
    pub scalars_exact: bool,
    /// Minimum positive lattice gap of the generated set matches the
    /// closed-form separation within the corner-rounding slack.
    pub gap_ok: bool,
    /// Observed minimum positive gap, in lattice cells.
    pub lattice_gap_cells: u64,
    /// Closed-form separation in lattice cells.
    pub expected_gap_cells: f64,
    pub probes: Vec<ProbeRow>,
    pub band: (f64, f64),
    /// Counting exponent over the coarse scales the first stage tiles.
    pub box_exponent: f64,
    pub exponent_floor: f64,
    /// Cell counts backing the exponent.
    pub coarse_counts: Vec<(u32, u64)>,
    pub pass: bool,
}

/// Verifies a corner construction stage-locally.
///
/// Generates the instance, recomputes the probed stage's scalars (count,
/// side `ℓ`, separation `D`, probe scale `d`) from closed forms in exact
/// ring arithmetic and compares them with the generator's values, checks the
/// generated set's minimum positive lattice gap against `D`, measures exact
/// perimeters at `d` and `d/2` and requires `length/(count·ℓ)` inside
/// `band`, and fits the coarse box-counting exponent over the scales the
/// first (gap-free) stage tiles, requiring at least `exponent_floor`.
pub fn thick_stage_check(
    params: &ThickCantorParams,
    band: (f64, f64),
    exponent_floor: f64,
) -> Result<ThickStageReport> {
    let inst = thick_cantor_generate(params)?;
    let stage = inst
        .stages
        .iter()
        .rev()
        .find(|st| st.probe.is_some())
        .ok_or_else(|| {
            Error::InvalidParams("needs an even stage with a probe scale".into())
        })?;
    let j = stage.j;
    let q = inst.q;

    // Closed forms, recomputed in one shot rather than by the generator's
    // per-operation accumulation.
    let mut expo = Rat::zero();
    let mut total_reps = 0u32;
    for i in 1..=j {
        let reps = params.reps[i - 1];
        expo += rat(reps as i64, 1) * ThickCantorParams::lambda_log2_exponent(i);
        total_reps += reps;
    }
    let ell = RootExpr::pow2(q, &expo)?;
    let count: u128 = 1u128 << (2 * total_reps);
    let lam_inv = RootExpr::pow2(q, &rat(j as i64 + 1, j as i64))?;
    let two = RootExpr::from_rat(q, rat(2, 1));
    let dsep = ell.mul(&lam_inv.sub(&two));
    let rho = rat(2 * total_reps as i64, 1) + expo;
    let s = &params.s[j - 1];
    let alt = RootExpr::pow2(q, &(-rho / (s - Rat::from(BigInt::from(1)))))?;
    let third = dsep.scale(&rat(1, 3));
    let probe = if third.cmp_val(&alt) == Ordering::Less {
        third.clone()
    } else {
        alt
    };
    let scalars_exact = count == stage.count
        && ell.cmp_val(&stage.ell) == Ordering::Equal
        && stage
            .min_sep
            .as_ref()
            .is_some_and(|m| dsep.cmp_val(m) == Ordering::Equal)
        && stage
            .probe
            .as_ref()
            .is_some_and(|p| probe.cmp_val(p) == Ordering::Equal);

    // Minimum positive gap of the generated lattice set, per axis. Corner
    // coordinates are sums of at most ten floored offsets, so a true
    // abutment can show up as a gap of a few cells; anything past the slack
    // must be a genuine separation.
    let slack: u64 = 16;
    let denom = inst.set.denom();
    let expected_gap_cells = dsep.to_f64() * denom as f64;
    let mut min_gap = u64::MAX;
    for axis in 0..2 {
        let mut iv: Vec<(u64, u64)> = (0..inst.set.len())
            .map(|i| {
                let r = inst.set.raw(i);
                (r.lo[axis], r.lo[axis] + r.side[axis])
            })
            .collect();
        iv.sort_unstable();
        iv.dedup();
        for w in iv.windows(2) {
            let (_, hi0) = w[0];
            let (lo1, _) = w[1];
            if lo1 > hi0 + slack {
                min_gap = min_gap.min(lo1 - hi0);
            }
        }
    }
    let gap_ok = min_gap != u64::MAX
        && (min_gap as f64 - expected_gap_cells).abs() <= slack as f64;

    let d_probe = probe.to_f64();
    let mass = stage.count as f64 * stage.ell_f64();
    let mut probes = Vec::new();
    let mut probes_ok = true;
    for r in [d_probe, d_probe / 2.0] {
        let length = exact_perimeter(&inst.set, r)?;
        let ratio = length / mass;
        probes_ok &= ratio >= band.0 && ratio <= band.1;
        probes.push(ProbeRow { r, length, ratio });
    }

    // The first stage tiles the unit square, so cell counts up to its depth
    // must grow at the full ambient rate.
    let k_tiled = params.reps[0];
    let counts = box_counts(&inst.set, 0, k_tiled)?;
    let coarse_counts: Vec<(u32, u64)> = counts.window().collect();
    let box_exponent = if k_tiled >= 2 {
        fit_dimension(
            &counts,
            &FitOptions { window: Some((0, k_tiled)), ..FitOptions::default() },
            FitVariant::Slope,
            "box",
        )?
        .value
    } else {
        (counts.get(k_tiled) as f64).log2() / k_tiled as f64
    };

    let pass = scalars_exact && gap_ok && probes_ok && box_exponent >= exponent_floor;
    Ok(ThickStageReport {
        stage: j,
        count: stage.count,
        ell: stage.ell_f64(),
        min_sep: stage.min_sep_f64().unwrap_or(f64::NAN),
        probe: d_probe,
        scalars_exact,
        gap_ok,
        lattice_gap_cells: if min_gap == u64::MAX { 0 } else { min_gap },
        expected_gap_cells,
        probes,
        band,
        box_exponent,
        exponent_floor,
        coarse_counts,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::geometric_schedule;
    use crate::setgen::{embed_in_plane, named_set};

    const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn field_for(e: &BoxSet, k: u32) -> DistanceField {
        DistanceField::build(e, k).unwrap()
    }

    #[test]
    fn sandwich_point_ratios_are_flat() {
        let e = named_set("point", None).unwrap().normalize();
        let field = field_for(&e, 10);
        let rep = sandwich_check(&e, &field, &SandwichOptions::default()).unwrap();
        assert!(rep.pass, "spread {} over bound {}", rep.spread, rep.bound);
        assert_eq!(rep.offsets, (2, 4));
        assert_eq!(rep.shift, 0);
        // Around an isolated point both the cube counts and the circle
        // length scale exactly with 2^{-k}, so the rows barely move.
        let lows: Vec<f64> = rep.rows.iter().map(|r| r.lower_ratio).collect();
        let lo = lows.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = lows.iter().copied().fold(0.0, f64::max);
        assert!(hi / lo < 1.35, "lower ratios vary: {lows:?}");
        assert!(rep.lower_constant > 0.0);
    }

    #[test]
    fn sandwich_segment_window_is_tight() {
        let e = named_set("segment", None).unwrap().normalize();
        let field = field_for(&e, 12);
        let opts = SandwichOptions { k_range: Some((5, 8)), ..Default::default() };
        let rep = sandwich_check(&e, &field, &opts).unwrap();
        assert!(rep.pass);
        assert_eq!(rep.rows.len(), 4);
        let lows: Vec<f64> = rep.rows.iter().map(|r| r.lower_ratio).collect();
        let lo = lows.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = lows.iter().copied().fold(0.0, f64::max);
        assert!(hi / lo < 3.0, "lower ratios vary beyond 3x: {lows:?}");
    }

    #[test]
    fn sandwich_rejects_unresolvable_generations() {
        let e = named_set("point", None).unwrap().normalize();
        let field = field_for(&e, 8);
        let opts = SandwichOptions { k_range: Some((4, 6)), ..Default::default() };
        match sandwich_check(&e, &field, &opts) {
            Err(Error::ScaleTooFine(_)) => {}
            other => panic!("expected a scale error, got {other:?}"),
        }
    }

    #[test]
    fn sandwich_offset_search_cannot_lose() {
        let e = named_set("carpet", Some(3)).unwrap().normalize();
        let field = field_for(&e, 10);
        let base = SandwichOptions { k_range: Some((4, 5)), ..Default::default() };
        let plain = sandwich_check(&e, &field, &base).unwrap();
        let searched = sandwich_check(
            &e,
            &field,
            &SandwichOptions { search: true, ..base },
        )
        .unwrap();
        assert!(searched.searched);
        assert!(searched.spread <= plain.spread + 1e-12);
        assert!(searched.shift.abs() <= 3);
        assert_eq!(searched.offsets.1 - searched.offsets.0, 2);
    }

    #[test]
    fn per_cube_point_circle_fills_the_dilate() {
        let e = named_set("point", None).unwrap().normalize();
        let field = field_for(&e, 11);
        let rep = per_cube_boundary_checks(&e, &field, 0.75 / 64.0, 6.0, 0.5).unwrap();
        assert_eq!(rep.matched_k, 6);
        assert!(rep.matched_cubes > 0);
        // Matched cubes sit within a few side lengths of the point, so each
        // 8x dilate captures a long arc of the circle; the nearest ones get
        // all of it (ratio 2π), the farthest still see well over r of arc.
        assert!(rep.lower_min >= 2.0, "lower_min {}", rep.lower_min);
        assert!(rep.lower_min <= std::f64::consts::TAU + 1e-9);
        assert!(rep.upper_max <= 6.0, "upper_max {}", rep.upper_max);
        assert!(rep.pass);
    }

    #[test]
    fn per_cube_carpet_stays_under_guard() {
        let e = named_set("carpet", Some(3)).unwrap().normalize();
        let field = field_for(&e, 10);
        let rep = per_cube_boundary_checks(&e, &field, 0.75 / 32.0, 6.0, 0.25).unwrap();
        assert!(rep.upper_max <= 6.0, "upper_max {}", rep.upper_max);
        assert!(rep.lower_min > 0.0, "lower_min {}", rep.lower_min);
        assert!(rep.touched_cubes > 0);
        assert!(rep.pass, "lower_min {} upper_max {}", rep.lower_min, rep.upper_max);
    }

    #[test]
    fn envelope_point_is_a_circle_in_both_regimes() {
        let e = named_set("point", None).unwrap().normalize();
        let field = field_for(&e, 10);
        let sched = geometric_schedule(0.125, SQRT_HALF, 8).unwrap();
        let rep = length_envelope_check(&e, &field, &sched, &[2.0, 3.0], 8.0).unwrap();
        // Exact circles above the (zero) diameter: length/r = 2π.
        assert!((rep.c1_hat - std::f64::consts::TAU).abs() < 1e-12);
        assert!(rep.pass);
        // Below: r·length = 2πr² grows with r, so the max sits at the
        // coarsest surviving radius.
        let r0 = rep.small_rows[0].r;
        assert!((rep.c2_hat - std::f64::consts::TAU * r0 * r0).abs() < 0.01 * rep.c2_hat);
    }

    #[test]
    fn envelope_carpet_obeys_the_linear_cap() {
        let e = named_set("carpet", Some(3)).unwrap();
        let field = field_for(&e, 10);
        let sched = geometric_schedule(1.0 / 16.0, SQRT_HALF, 8).unwrap();
        let rep = length_envelope_check(&e, &field, &sched, &[2.0, 3.0], 8.0).unwrap();
        assert!(rep.pass, "c1_hat {}", rep.c1_hat);
        assert!(rep.c1_hat >= std::f64::consts::TAU - 1e-9);
        // Far dilates are contained in a disc of radius r + diam ≤ 1.5r.
        for row in &rep.large_rows {
            assert!(row.length <= 2.0 * std::f64::consts::TAU * row.r);
        }
    }

    #[test]
    fn regular_law_segment_band_is_narrow() {
        let e = named_set("segment", None).unwrap();
        let field = field_for(&e, 11);
        let sched = geometric_schedule(1.0 / 16.0, SQRT_HALF, 10).unwrap();
        let rep = regular_law_check(&e, &field, 1.0, &sched, 1.5).unwrap();
        // length·r^0 runs from 2L up to 2L + 2πr_max.
        assert!(rep.band.0 >= 1.9, "band {:?}", rep.band);
        assert!(rep.ratio <= 1.5, "ratio {}", rep.ratio);
        assert!(rep.pass);
    }

    #[test]
    fn regular_law_line_dust_band() {
        let line = named_set("cantor3", Some(6)).unwrap();
        let e = embed_in_plane(&line).unwrap();
        let field = field_for(&e, 11);
        let sched = geometric_schedule(1.0 / 16.0, SQRT_HALF, 11).unwrap();
        let s = 2f64.log2() / 3f64.log2();
        let rep = regular_law_check(&e, &field, s, &sched, 10.0).unwrap();
        assert!(rep.pass, "ratio {}", rep.ratio);
        assert!(rep.rows.len() >= 6);
    }

    #[test]
    fn regular_law_rejects_bad_exponents() {
        let e = named_set("segment", None).unwrap();
        let field = field_for(&e, 8);
        let sched = geometric_schedule(1.0 / 16.0, SQRT_HALF, 4).unwrap();
        assert!(regular_law_check(&e, &field, 0.0, &sched, 2.0).is_err());
        assert!(regular_law_check(&e, &field, 2.0, &sched, 2.0).is_err());
    }

    #[test]
    fn local_profile_point_is_flat() {
        let e = named_set("point", None).unwrap();
        let field = field_for(&e, 11);
        let sched = geometric_schedule(1.0 / 32.0, SQRT_HALF, 10).unwrap();
        let rep =
            local_boundary_profile(&e, &field, [0.5, 0.5], 0.25, &sched).unwrap();
        assert!(rep.lambda.abs() < 0.15, "lambda {}", rep.lambda);
        // The whole circle sits inside the window at every radius.
        for row in &rep.rows {
            assert!((row.scaled - std::f64::consts::TAU).abs() < 0.1);
        }
    }

    #[test]
    fn local_profile_straight_edge_is_one() {
        let e = named_set("segment", None).unwrap();
        let field = field_for(&e, 11);
        let sched = geometric_schedule(1.0 / 32.0, SQRT_HALF, 10).unwrap();
        let rep =
            local_boundary_profile(&e, &field, [0.5, 0.5], 0.25, &sched).unwrap();
        assert!((rep.lambda - 1.0).abs() < 0.15, "lambda {}", rep.lambda);
    }

    #[test]
    fn local_profile_requires_center_on_set() {
        let e = named_set("point", None).unwrap();
        let field = field_for(&e, 10);
        let sched = geometric_schedule(1.0 / 32.0, SQRT_HALF, 6).unwrap();
        assert!(matches!(
            local_boundary_profile(&e, &field, [0.25, 0.25], 0.25, &sched),
            Err(Error::InvalidParams(_))
        ));
    }

    #[test]
    fn thick_stage_small_instance_checks_out() {
        let params = ThickCantorParams::new(
            2,
            vec![1, 1],
            vec![rat(2, 1), rat(3, 2)],
        )
        .unwrap();
        let rep = thick_stage_check(&params, (0.1, 10.0), 1.8).unwrap();
        assert_eq!(rep.stage, 2);
        assert_eq!(rep.count, 16);
        assert!(rep.scalars_exact);
        assert!(rep.gap_ok, "gap {} expected {}", rep.lattice_gap_cells, rep.expected_gap_cells);
        assert!((rep.ell - 0.17677669529663687).abs() < 1e-12);
        assert!((rep.probe - 0.04881553646890875).abs() < 1e-12);
        // One operation of the tiling stage: 4 cells at level 1, exponent 2.
        assert_eq!(rep.coarse_counts, vec![(0, 1), (1, 4)]);
        assert!((rep.box_exponent - 2.0).abs() < 1e-12);
        for p in &rep.probes {
            assert!(p.ratio >= 0.1 && p.ratio <= 10.0, "ratio {}", p.ratio);
        }
        assert!(rep.pass);
    }

    #[test]
    fn thick_stage_needs_an_even_stage() {
        let params = ThickCantorParams::new(1, vec![2], vec![rat(2, 1)]).unwrap();
        assert!(matches!(
            thick_stage_check(&params, (0.1, 10.0), 1.8),
            Err(Error::InvalidParams(_))
        ));
    }
}
