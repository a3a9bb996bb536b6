//! Test-set generators: self-similar pre-fractals with known dimensions, a
//! two-scale corner construction with irrational contraction ratios, and
//! raster ingestion.

use std::collections::BTreeMap;

use num::integer::Integer;
use num::{BigInt, One, Signed, ToPrimitive, Zero};
use serde_json::json;

use crate::algebraic::RootExpr;
use crate::error::{Error, Result};
use crate::geom::{BoxRaw, BoxSet};
use crate::rational::{format_rat, parse_rat_flexible, rat, rat_to_f64, rat_u64, Rat};

/// Cap on generated boxes for every generator in this module.
pub const MAX_GENERATED_BOXES: usize = 1 << 21;

/// One contracting similarity `x ↦ ratio·x + translate` (no rotation).
#[derive(Clone, Debug)]
pub struct IfsMap {
    pub ratio: Rat,
    pub translate: Vec<Rat>,
}

/// Iterated function system of axis-aligned contractions on `[0,1]^d`.
#[derive(Clone, Debug)]
pub struct IfsSpec {
    pub name: String,
    pub dim: usize,
    pub maps: Vec<IfsMap>,
}

impl IfsSpec {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.dim > 2 {
            return Err(Error::InvalidParams("system dimension must be 1 or 2".into()));
        }
        if self.maps.is_empty() {
            return Err(Error::InvalidParams("system needs at least one map".into()));
        }
        for m in &self.maps {
            if m.ratio <= Rat::zero() || m.ratio >= Rat::one() {
                return Err(Error::InvalidParams("contraction ratio must be in (0,1)".into()));
            }
            if m.translate.len() != self.dim {
                return Err(Error::InvalidParams("translation arity mismatch".into()));
            }
            for t in &m.translate {
                if t.is_negative() || t + &m.ratio > Rat::one() {
                    return Err(Error::InvalidParams(
                        "map image must stay inside the unit cube".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Root `s` of the Moran equation `Σ ratio_i^s = 1`, by bisection.
    pub fn similarity_dim(&self) -> f64 {
        let ratios: Vec<f64> = self.maps.iter().map(|m| rat_to_f64(&m.ratio)).collect();
        let f = |s: f64| ratios.iter().map(|r| r.powf(s)).sum::<f64>() - 1.0;
        let (mut lo, mut hi) = (0.0f64, 8.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn min_ratio(&self) -> Rat {
        self.maps
            .iter()
            .map(|m| m.ratio.clone())
            .min()
            .expect("system has maps")
    }
}

fn third_offsets_1d() -> Vec<Vec<Rat>> {
    vec![vec![rat(0, 1)], vec![rat(2, 3)]]
}

/// Named systems with analytically known dimensions.
pub fn catalog(name: &str) -> Result<IfsSpec> {
    let maps = |dim: usize, ratio: Rat, offs: Vec<Vec<Rat>>| IfsSpec {
        name: name.to_string(),
        dim,
        maps: offs
            .into_iter()
            .map(|translate| IfsMap { ratio: ratio.clone(), translate })
            .collect(),
    };
    let spec = match name {
        // Middle-thirds set on the line, dim log2/log3.
        "cantor3" => maps(1, rat(1, 3), third_offsets_1d()),
        // Quarter construction keeping the outer fourths, dim 1/2.
        "cantor4" => maps(1, rat(1, 4), vec![vec![rat(0, 1)], vec![rat(3, 4)]]),
        // Product of two middle-thirds sets, dim 2·log2/log3.
        "cantor3x3" => {
            let mut offs = Vec::new();
            for x in [rat(0, 1), rat(2, 3)] {
                for y in [rat(0, 1), rat(2, 3)] {
                    offs.push(vec![x.clone(), y]);
                }
            }
            maps(2, rat(1, 3), offs)
        }
        // Eight thirds-squares around a removed center, dim log8/log3.
        "carpet" => {
            let mut offs = Vec::new();
            for x in 0..3u32 {
                for y in 0..3u32 {
                    if x == 1 && y == 1 {
                        continue;
                    }
                    offs.push(vec![rat(x as i64, 3), rat(y as i64, 3)]);
                }
            }
            maps(2, rat(1, 3), offs)
        }
        // Center plus four corner thirds-squares, dim log5/log3.
        "vicsek" => {
            let offs = vec![
                vec![rat(0, 1), rat(0, 1)],
                vec![rat(2, 3), rat(0, 1)],
                vec![rat(1, 3), rat(1, 3)],
                vec![rat(0, 1), rat(2, 3)],
                vec![rat(2, 3), rat(2, 3)],
            ];
            maps(2, rat(1, 3), offs)
        }
        _ => {
            return Err(Error::Config(format!(
                "unknown system {name:?}; available: {}",
                CATALOG_NAMES.join(", ")
            )))
        }
    };
    spec.validate()?;
    Ok(spec)
}

pub const CATALOG_NAMES: [&str; 5] = ["cantor3", "cantor4", "cantor3x3", "carpet", "vicsek"];

/// Depth-`depth` pre-fractal: all images of `[0,1]^d` under `depth`-fold map
/// compositions, as exact rational boxes. Unnormalized; metadata records the
/// name, depth, similarity dimension, and finest side length.
pub fn ifs_generate(spec: &IfsSpec, depth: u32) -> Result<BoxSet> {
    spec.validate()?;
    let count = (spec.maps.len() as u128).checked_pow(depth).unwrap_or(u128::MAX);
    if count > MAX_GENERATED_BOXES as u128 {
        return Err(Error::ResourceLimit(format!(
            "depth {depth} would generate {count} boxes (max {MAX_GENERATED_BOXES})"
        )));
    }
    // Fold: each generation replaces (lo, side) by its images under all maps.
    let mut frames: Vec<(Vec<Rat>, Rat)> = vec![(vec![Rat::zero(); spec.dim], Rat::one())];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(frames.len() * spec.maps.len());
        for (lo, side) in &frames {
            for m in &spec.maps {
                let nlo: Vec<Rat> = (0..spec.dim)
                    .map(|a| &lo[a] + &side.clone() * &m.translate[a])
                    .collect();
                next.push((nlo, side * &m.ratio));
            }
        }
        frames = next;
    }
    let input: Vec<(Vec<Rat>, Vec<Rat>)> = frames
        .into_iter()
        .map(|(lo, side)| {
            let sides = vec![side; spec.dim];
            (lo, sides)
        })
        .collect();
    let mut set = BoxSet::new(spec.dim, input)?;
    let min_side = spec.min_ratio();
    let min_side_log2 = -(rat_to_f64(&min_side).log2()) * depth as f64;
    set.meta.insert("kind".into(), json!("ifs"));
    set.meta.insert("name".into(), json!(spec.name));
    set.meta.insert("depth".into(), json!(depth));
    set.meta.insert("similarity_dim".into(), json!(spec.similarity_dim()));
    set.meta.insert("min_side_log2".into(), json!(min_side_log2));
    Ok(set)
}

/// Built-in sets by name: the catalog systems at a given depth plus the
/// degenerate references `point`, `segment`, `interval`, and `square`.
pub fn named_set(name: &str, depth: Option<u32>) -> Result<BoxSet> {
    let builtin = |dim: usize, lo: Vec<Rat>, side: Vec<Rat>| -> Result<BoxSet> {
        let mut s = BoxSet::new(dim, vec![(lo, side)])?;
        s.meta.insert("kind".into(), json!("builtin"));
        s.meta.insert("name".into(), json!(name));
        Ok(s)
    };
    match name {
        "point" => builtin(2, vec![rat(1, 2), rat(1, 2)], vec![rat(0, 1), rat(0, 1)]),
        "segment" => builtin(2, vec![rat(0, 1), rat(1, 2)], vec![rat(1, 1), rat(0, 1)]),
        "interval" => builtin(1, vec![rat(0, 1)], vec![rat(1, 1)]),
        "square" => builtin(2, vec![rat(0, 1), rat(0, 1)], vec![rat(1, 1), rat(1, 1)]),
        _ => {
            let spec = catalog(name)?;
            let depth = depth.unwrap_or(default_depth(name));
            ifs_generate(&spec, depth)
        }
    }
}

/// Depths sized so box counts stay near or below a quarter million.
pub fn default_depth(name: &str) -> u32 {
    match name {
        "cantor3" | "cantor4" => 8,
        "carpet" | "cantor3x3" | "vicsek" => 6,
        _ => 6,
    }
}

/// Finest meaningful dyadic counting level for a generated set: below the
/// construction's own resolution a pre-fractal stops looking like its limit,
/// so estimators clip their scale windows to this.
pub fn resolution_budget(set: &BoxSet) -> Option<u32> {
    let v = set.meta.get("min_side_log2")?.as_f64()?;
    let b = v.floor() as i64 - 2;
    Some(b.max(1) as u32)
}

/// Embeds a one-dimensional set into the plane as the degenerate product
/// `E × {1/2}`, keeping coordinates exact. Planar tools (distance fields,
/// contours) then see the same set a segment builtin would present.
pub fn embed_in_plane(e: &BoxSet) -> Result<BoxSet> {
    if e.dim() != 1 {
        return Err(Error::InvalidParams(format!(
            "embedding expects a 1-d set, got dimension {}",
            e.dim()
        )));
    }
    let input: Vec<(Vec<Rat>, Vec<Rat>)> = (0..e.len())
        .map(|i| {
            (
                vec![e.lo_rat(i, 0), rat(1, 2)],
                vec![e.side_rat(i, 0), rat(0, 1)],
            )
        })
        .collect();
    let mut set = BoxSet::new(2, input)?;
    set.meta = e.meta.clone();
    set.meta.insert("embedded_from_dim".into(), json!(1));
    Ok(set)
}

// ---------------------------------------------------------------------------
// Two-scale corner construction.
// ---------------------------------------------------------------------------

/// Parameters of the corner construction: `reps[j-1]` applications of the
/// stage-`j` corner operation, `j = 1..=stages`, with contraction `1/2` at
/// odd stages and `(1/2)^{(j+1)/j}` at even stages. `s[j-1]` are the target
/// scaling exponents (used for probe scales), each `> 1`, nonincreasing.
#[derive(Clone, Debug)]
pub struct ThickCantorParams {
    pub stages: usize,
    pub reps: Vec<u32>,
    pub s: Vec<Rat>,
}

impl ThickCantorParams {
    pub fn new(stages: usize, reps: Vec<u32>, s: Vec<Rat>) -> Result<Self> {
        let p = ThickCantorParams { stages, reps, s };
        p.validate()?;
        Ok(p)
    }

    /// Default two-stage schedule: 2 coarse ops, 6 fine ops, s = (2, 3/2).
    pub fn default_two_stage() -> Self {
        ThickCantorParams {
            stages: 2,
            reps: vec![2, 6],
            s: vec![rat(2, 1), rat(3, 2)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.stages == 0 {
            return Err(Error::InvalidParams("need at least one stage".into()));
        }
        if self.reps.len() != self.stages || self.s.len() != self.stages {
            return Err(Error::InvalidParams(
                "reps and s must have one entry per stage".into(),
            ));
        }
        if self.reps.iter().any(|&n| n == 0) {
            return Err(Error::InvalidParams("every stage needs at least one operation".into()));
        }
        for (i, s) in self.s.iter().enumerate() {
            if *s <= Rat::one() {
                return Err(Error::InvalidParams(format!(
                    "scaling exponent s_{} must exceed 1",
                    i + 1
                )));
            }
            if i > 0 && *s > self.s[i - 1] {
                return Err(Error::InvalidParams(
                    "scaling exponents must be nonincreasing".into(),
                ));
            }
        }
        let total: u32 = self.reps.iter().sum();
        if total > 10 {
            return Err(Error::ResourceLimit(format!(
                "{total} operations would generate 4^{total} rectangles (max 4^10)"
            )));
        }
        Ok(())
    }

    /// Parses CLI-style text like `"J=2,n=2;6,s=2;1.5"`. Omitted fields take
    /// defaults: `n` from the two-stage schedule pattern, `s_j = (j+1)/j`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut stages: Option<usize> = None;
        let mut reps: Option<Vec<u32>> = None;
        let mut s: Option<Vec<Rat>> = None;
        for part in text.split(',').filter(|p| !p.trim().is_empty()) {
            let (key, val) = part
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("bad parameter {part:?}")))?;
            match key.trim() {
                "J" => {
                    stages = Some(val.trim().parse().map_err(|_| {
                        Error::Config(format!("bad stage count {val:?}"))
                    })?)
                }
                "n" => {
                    let v: Result<Vec<u32>> = val
                        .split(';')
                        .map(|x| {
                            x.trim()
                                .parse::<u32>()
                                .map_err(|_| Error::Config(format!("bad repetition {x:?}")))
                        })
                        .collect();
                    reps = Some(v?);
                }
                "s" => {
                    let v: Result<Vec<Rat>> =
                        val.split(';').map(|x| parse_rat_flexible(x).map_err(|e| {
                            Error::Config(format!("bad exponent {x:?}: {e}"))
                        })).collect();
                    s = Some(v?);
                }
                other => return Err(Error::Config(format!("unknown parameter {other:?}"))),
            }
        }
        let stages = stages
            .or_else(|| reps.as_ref().map(Vec::len))
            .unwrap_or(2);
        let reps = reps.unwrap_or_else(|| {
            if stages == 2 {
                vec![2, 6]
            } else {
                vec![1; stages]
            }
        });
        let s = s.unwrap_or_else(|| {
            (1..=stages).map(|j| rat(j as i64 + 1, j as i64)).collect()
        });
        ThickCantorParams::new(stages, reps, s)
    }

    /// Contraction ratio at stage `j` (1-based): `1/2` when odd,
    /// `2^{-(j+1)/j}` when even, as an exact exponent of 2.
    pub fn lambda_log2_exponent(j: usize) -> Rat {
        if j % 2 == 1 {
            rat(-1, 1)
        } else {
            rat(-(j as i64 + 1), j as i64)
        }
    }
}

/// Per-stage scalars of a generated instance; values live in `Q(2^{1/q})`.
#[derive(Clone, Debug)]
pub struct StageInfo {
    /// Stage index `j`, 1-based.
    pub j: usize,
    /// Rectangle count `4^{n_1+…+n_j}`.
    pub count: u128,
    /// Rectangle side length `ℓ_j`.
    pub ell: RootExpr,
    /// Minimum positive separation `D_j = ℓ_j(λ_j^{-1} − 2)`, even stages.
    pub min_sep: Option<RootExpr>,
    /// Probe scale `d_j = min{D_j/3, (count_j·ℓ_j)^{-1/(s_j−1)}}`, even stages.
    pub probe: Option<RootExpr>,
}

impl StageInfo {
    pub fn ell_f64(&self) -> f64 {
        self.ell.to_f64()
    }
    pub fn min_sep_f64(&self) -> Option<f64> {
        self.min_sep.as_ref().map(RootExpr::to_f64)
    }
    pub fn probe_f64(&self) -> Option<f64> {
        self.probe.as_ref().map(RootExpr::to_f64)
    }
}

/// Which structural cross-checks ran during generation.
#[derive(Clone, Debug, Default)]
pub struct ThickChecks {
    /// Even stages whose minimum positive gap was verified exhaustively in
    /// exact arithmetic (done whenever the stage has ≤ 2048 rectangles).
    pub min_gap_verified: Vec<usize>,
    /// Odd stages whose union was verified equal to the previous stage's
    /// union by exact area (done while coordinates are still rational).
    pub odd_union_verified: Vec<usize>,
}

/// A generated corner-construction instance.
#[derive(Clone, Debug)]
pub struct ThickCantorInstance {
    pub params: ThickCantorParams,
    /// Root order of the coordinate field `Q(2^{1/q})`.
    pub q: u32,
    pub stages: Vec<StageInfo>,
    /// Final-stage rectangles. Exact when `q = 1`; otherwise coordinates are
    /// rounded down to the `2^{-40}` lattice (error < 2^{-37}, far below
    /// every stage scalar).
    pub set: BoxSet,
    /// Exact final-stage corner coordinates, kept for instances small enough
    /// to verify pairwise (≤ 2048 rectangles).
    pub exact_corners: Option<Vec<[RootExpr; 2]>>,
    pub final_ell: RootExpr,
    pub checks: ThickChecks,
}

/// Builds the instance: `reps[j-1]` corner operations per stage, exact
/// scalars, and the structural cross-checks described on [`ThickChecks`].
pub fn thick_cantor_generate(params: &ThickCantorParams) -> Result<ThickCantorInstance> {
    params.validate()?;
    let q = ring_order(params)?;
    let one = RootExpr::from_rat(q, Rat::one());
    // Corner coordinates are sums over operations t of chosen offsets
    // δ_t = ℓ_{t−1} − ℓ_t; a rectangle is a bit choice per operation/axis.
    let mut deltas: Vec<RootExpr> = Vec::new();
    let mut ell = one.clone();
    let mut stages: Vec<StageInfo> = Vec::new();
    let mut count: u128 = 1;
    for j in 1..=params.stages {
        let lam = RootExpr::pow2(q, &ThickCantorParams::lambda_log2_exponent(j))?;
        for _ in 0..params.reps[j - 1] {
            let next = ell.mul(&lam);
            deltas.push(ell.sub(&next));
            ell = next;
            count *= 4;
        }
        let (min_sep, probe) = if j % 2 == 0 {
            // D_j = ℓ_j(λ_j^{-1} − 2); λ_j^{-1} = 2^{(j+1)/j}.
            let lam_inv = RootExpr::pow2(q, &rat(j as i64 + 1, j as i64))?;
            let d_sep = ell.mul(&lam_inv.sub(&RootExpr::from_rat(q, rat(2, 1))));
            if !d_sep.is_positive() {
                return Err(Error::InvalidParams(format!(
                    "stage {j} separation is not positive"
                )));
            }
            // Second branch: (count_j·ℓ_j)^{-1/(s_j−1)}. count·ℓ is an exact
            // power of two, so the power is again an exact power of two.
            let rho = count_ell_log2(params, j);
            let exponent = -rho / (&params.s[j - 1] - Rat::one());
            let alt = RootExpr::pow2(q, &exponent)?;
            let third = d_sep.scale(&rat(1, 3));
            let probe = if third.cmp_val(&alt) == std::cmp::Ordering::Less {
                third
            } else {
                alt
            };
            (Some(d_sep), Some(probe))
        } else {
            (None, None)
        };
        stages.push(StageInfo { j, count, ell: ell.clone(), min_sep, probe });
    }
    // Enumerate rectangles. Exact ring corners for small instances; lattice
    // (or exact rational, when q = 1) coordinates for the box set.
    let total_ops = deltas.len();
    let keep_exact = count <= 2048;
    let exact_corners = if keep_exact {
        let mut corners: Vec<[RootExpr; 2]> = vec![[
            RootExpr::zero(q),
            RootExpr::zero(q),
        ]];
        for delta in &deltas {
            let mut next = Vec::with_capacity(corners.len() * 4);
            for c in &corners {
                for bits in 0..4u32 {
                    let x = if bits & 1 == 1 { c[0].add(delta) } else { c[0].clone() };
                    let y = if bits & 2 == 2 { c[1].add(delta) } else { c[1].clone() };
                    next.push([x, y]);
                }
            }
            corners = next;
        }
        Some(corners)
    } else {
        None
    };
    let set = if q == 1 {
        // Fully rational: exact coordinates.
        let delta_rats: Vec<Rat> = deltas
            .iter()
            .map(|d| {
                let (lo, hi) = d.bracket(&rat(1, 1));
                debug_assert_eq!(lo, hi);
                lo
            })
            .collect();
        let (ell_lo, _) = ell.bracket(&rat(1, 1));
        build_rect_set(&delta_rats, &ell_lo, total_ops)?
    } else {
        // Round each offset down to the 2^{-40} lattice once; sums of ≤ 10
        // floored offsets keep every coordinate below its exact value.
        let denom = 1u64 << 40;
        let delta_rats: Vec<Rat> = deltas.iter().map(|d| floor_to_denom(d, denom)).collect();
        let ell_lat = floor_to_denom(&ell, denom);
        build_rect_set(&delta_rats, &ell_lat, total_ops)?
    };
    let mut set = set;
    set.meta.insert("kind".into(), json!("thick"));
    set.meta.insert("stages".into(), json!(params.stages));
    set.meta.insert(
        "reps".into(),
        json!(params.reps.clone()),
    );
    set.meta.insert(
        "s".into(),
        json!(params.s.iter().map(format_rat).collect::<Vec<_>>()),
    );
    set.meta.insert("count".into(), json!(count as u64));
    set.meta.insert("min_side_log2".into(), json!(-ell.to_f64().log2()));
    if let Some(st) = stages.iter().rev().find(|st| st.probe.is_some()) {
        set.meta.insert("probe_scale".into(), json!(st.probe_f64().unwrap()));
        set.meta.insert("min_sep".into(), json!(st.min_sep_f64().unwrap()));
    }
    let mut checks = ThickChecks::default();
    run_structure_checks(params, &stages, &deltas, exact_corners.as_deref(), &mut checks)?;
    Ok(ThickCantorInstance {
        params: params.clone(),
        q,
        stages,
        set,
        exact_corners,
        final_ell: ell,
        checks,
    })
}

/// `log2(count_j · ℓ_j)` as an exact rational.
fn count_ell_log2(params: &ThickCantorParams, j: usize) -> Rat {
    let mut rho = Rat::zero();
    for i in 1..=j {
        let n = rat(params.reps[i - 1] as i64, 1);
        rho += &n * rat(2, 1); // count contributes 4^{n_i}
        rho += &n * ThickCantorParams::lambda_log2_exponent(i); // ℓ contributes λ_i^{n_i}
    }
    rho
}

/// Smallest root order housing every exponent the instance needs.
fn ring_order(params: &ThickCantorParams) -> Result<u32> {
    let mut q: u64 = 1;
    for j in 1..=params.stages {
        let lam = ThickCantorParams::lambda_log2_exponent(j);
        q = q.lcm(&lam.denom().to_u64().unwrap_or(u64::MAX));
        if j % 2 == 0 {
            let rho = count_ell_log2(params, j);
            let exponent = -rho / (&params.s[j - 1] - Rat::one());
            q = q.lcm(&exponent.denom().to_u64().unwrap_or(u64::MAX));
        }
        if q > 64 {
            return Err(Error::ResourceLimit(
                "scaling exponents require a root order beyond 64".into(),
            ));
        }
    }
    Ok(q as u32)
}

fn floor_to_denom(x: &RootExpr, denom: u64) -> Rat {
    let eps = Rat::new(BigInt::one(), BigInt::from(4u64) * BigInt::from(denom));
    let (lo, _) = x.bracket(&eps);
    let scaled = lo * rat_u64(denom, 1);
    Rat::new(scaled.floor().numer().clone(), BigInt::from(denom))
}

/// Enumerates all `4^total_ops` rectangles from per-operation offsets and a
/// common side, building the box set directly on the common denominator.
fn build_rect_set(deltas: &[Rat], side: &Rat, total_ops: usize) -> Result<BoxSet> {
    let mut denom = BigInt::from(1u32);
    for d in deltas.iter().chain(std::iter::once(side)) {
        denom = denom.lcm(d.denom());
    }
    let denom = denom
        .to_u64()
        .ok_or_else(|| Error::Format("coordinate denominator overflow".into()))?;
    let to_num = |r: &Rat| -> u64 {
        (r.numer() * BigInt::from(denom) / r.denom())
            .to_u64()
            .expect("coordinate fits u64")
    };
    let delta_nums: Vec<u64> = deltas.iter().map(to_num).collect();
    let side_num = to_num(side);
    let mut boxes: Vec<BoxRaw> = vec![BoxRaw { lo: [0, 0], side: [side_num, side_num] }];
    for &d in delta_nums.iter().take(total_ops) {
        let mut next = Vec::with_capacity(boxes.len() * 4);
        for b in &boxes {
            for bits in 0..4u32 {
                let mut nb = *b;
                if bits & 1 == 1 {
                    nb.lo[0] += d;
                }
                if bits & 2 == 2 {
                    nb.lo[1] += d;
                }
                next.push(nb);
            }
        }
        next.sort_unstable();
        next.dedup();
        boxes = next;
    }
    BoxSet::from_raw(2, denom, boxes, false)
}

/// Exhaustive exact minimum positive gap at verifiable even stages, and
/// exact-area union preservation at rational odd stages.
fn run_structure_checks(
    params: &ThickCantorParams,
    stages: &[StageInfo],
    deltas: &[RootExpr],
    exact_corners: Option<&[[RootExpr; 2]]>,
    checks: &mut ThickChecks,
) -> Result<()> {
    // Odd-stage union preservation: while every contraction so far is 1/2,
    // coordinates are dyadic rationals and the union must still be the full
    // unit square (corner squares of ratio exactly 1/2 tile their parent).
    let mut ops_done = 0usize;
    let mut rational_so_far = true;
    for j in 1..=params.stages {
        ops_done += params.reps[j - 1] as usize;
        if j % 2 == 1 && rational_so_far {
            let delta_rats: Vec<Rat> = deltas[..ops_done]
                .iter()
                .map(|d| {
                    let (lo, hi) = d.bracket(&rat(1, 1000));
                    if lo != hi {
                        return Rat::zero(); // non-rational; filtered below
                    }
                    lo
                })
                .collect();
            let st = &stages[j - 1];
            let (ell_lo, ell_hi) = st.ell.bracket(&rat(1, 1000));
            if ell_lo == ell_hi {
                let stage_set = build_rect_set(&delta_rats, &ell_lo, ops_done)?;
                if stage_set.measure() != Rat::one() {
                    return Err(Error::InvalidParams(format!(
                        "stage {j} union no longer tiles the unit square"
                    )));
                }
                checks.odd_union_verified.push(j);
            }
        }
        if j % 2 == 0 {
            rational_so_far = false;
        }
    }
    // Even-stage exhaustive min-gap on the final stage, exact ring compare.
    if let Some(corners) = exact_corners {
        let last = stages.last().expect("at least one stage");
        if last.j % 2 == 0 {
            if let Some(expected) = &last.min_sep {
                let got = exact_min_positive_gap(corners, &last.ell);
                let got = got.ok_or_else(|| {
                    Error::InvalidParams("no positive gaps found at final stage".into())
                })?;
                // got is squared distance; expected is a length.
                if got.cmp_val(&expected.mul(expected)) != std::cmp::Ordering::Equal {
                    return Err(Error::InvalidParams(format!(
                        "stage {} min gap {} does not match predicted {}",
                        last.j,
                        got.to_f64().sqrt(),
                        expected.to_f64()
                    )));
                }
                checks.min_gap_verified.push(last.j);
            }
        }
    }
    Ok(())
}

/// Minimum positive squared distance between equal-size squares, exact. An
/// `f64` screening pass narrows the candidate pairs first; corner sums carry
/// at most ~1e-14 of float error, so a 1e-9 margin cannot lose the minimum.
fn exact_min_positive_gap(corners: &[[RootExpr; 2]], ell: &RootExpr) -> Option<RootExpr> {
    let q = ell.order();
    let zero = RootExpr::zero(q);
    let ell_f = ell.to_f64();
    let pts: Vec<[f64; 2]> = corners
        .iter()
        .map(|c| [c[0].to_f64(), c[1].to_f64()])
        .collect();
    let gap_f = |a: f64, b: f64| (b - (a + ell_f)).max(a - (b + ell_f)).max(0.0);
    // First pass: float minimum over pairs that are clearly not touching.
    // Pairs under the cutoff are not lost: they are all re-examined exactly
    // below, since the cutoff is far smaller than any candidate minimum.
    let mut best_f = f64::INFINITY;
    for i in 0..pts.len() {
        for k in (i + 1)..pts.len() {
            let gx = gap_f(pts[i][0], pts[k][0]);
            let gy = gap_f(pts[i][1], pts[k][1]);
            let d2 = gx * gx + gy * gy;
            if d2 > 1e-18 && d2 < best_f {
                best_f = d2;
            }
        }
    }
    if !best_f.is_finite() {
        best_f = 0.0;
    }
    let axis_gap = |a: &RootExpr, b: &RootExpr| -> RootExpr {
        // gap = max(0, b − (a+ℓ), a − (b+ℓ)) along one axis
        let g1 = b.sub(&a.add(ell));
        let g2 = a.sub(&b.add(ell));
        let g = if g1.cmp_val(&g2) == std::cmp::Ordering::Less { g2 } else { g1 };
        if g.is_positive() {
            g
        } else {
            zero.clone()
        }
    };
    let mut best: Option<RootExpr> = None;
    for i in 0..pts.len() {
        for k in (i + 1)..pts.len() {
            let gx = gap_f(pts[i][0], pts[k][0]);
            let gy = gap_f(pts[i][1], pts[k][1]);
            let d2f = gx * gx + gy * gy;
            if d2f > best_f + 1e-9 {
                continue;
            }
            let gx = axis_gap(&corners[i][0], &corners[k][0]);
            let gy = axis_gap(&corners[i][1], &corners[k][1]);
            let d2 = gx.mul(&gx).add(&gy.mul(&gy));
            if !d2.is_zero() {
                best = Some(match best {
                    None => d2,
                    Some(b) => {
                        if d2.cmp_val(&b) == std::cmp::Ordering::Less {
                            d2
                        } else {
                            b
                        }
                    }
                });
            }
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Raster ingestion.
// ---------------------------------------------------------------------------

/// Loads a binary PGM (P5, maxval ≤ 255); cells with value ≥ threshold
/// become boxes with side `1/max(W,H)`. The result is normalized into
/// `[1/4,3/4]²`.
pub fn load_raster(path: &std::path::Path, threshold: u8) -> Result<BoxSet> {
    let bytes = std::fs::read(path)?;
    let (w, h, pixels) = parse_pgm(&bytes).map_err(|e| Error::Format(format!("{path:?}: {e}")))?;
    let side = w.max(h) as i64;
    let mut input = Vec::new();
    for row in 0..h {
        for col in 0..w {
            if pixels[row * w + col] >= threshold {
                // Image row 0 is the top; flip so it maps to high y.
                let y = (h - 1 - row) as i64;
                input.push((
                    vec![rat(col as i64, side), rat(y, side)],
                    vec![rat(1, side), rat(1, side)],
                ));
            }
        }
    }
    if input.is_empty() {
        return Err(Error::EmptySet(format!(
            "no pixel reaches threshold {threshold}"
        )));
    }
    if input.len() > MAX_GENERATED_BOXES {
        return Err(Error::ResourceLimit(format!(
            "raster produces {} cells (max {MAX_GENERATED_BOXES})",
            input.len()
        )));
    }
    let mut set = BoxSet::new(2, input)?.normalize();
    set.meta.insert("kind".into(), json!("raster"));
    set.meta
        .insert("min_side_log2".into(), json!((side as f64).log2()));
    Ok(set)
}

fn parse_pgm(bytes: &[u8]) -> std::result::Result<(usize, usize, Vec<u8>), String> {
    let mut pos = 0usize;
    let mut token = || -> std::result::Result<String, String> {
        // Skip whitespace and '#' comments.
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err("truncated header".into());
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token()? != "P5" {
        return Err("not a binary PGM (magic P5)".into());
    }
    let w: usize = token()?.parse().map_err(|_| "bad width")?;
    let h: usize = token()?.parse().map_err(|_| "bad height")?;
    let maxval: usize = token()?.parse().map_err(|_| "bad maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(format!("unsupported maxval {maxval}"));
    }
    if w == 0 || h == 0 {
        return Err("empty raster".into());
    }
    pos += 1; // single whitespace after maxval
    if bytes.len() < pos + w * h {
        return Err("truncated pixel data".into());
    }
    Ok((w, h, bytes[pos..pos + w * h].to_vec()))
}

/// Lightweight set description used in reports and the CLI.
pub fn describe(set: &BoxSet) -> BTreeMap<String, serde_json::Value> {
    let mut m = BTreeMap::new();
    m.insert("dim".into(), json!(set.dim()));
    m.insert("boxes".into(), json!(set.len()));
    m.insert("measure".into(), json!(rat_to_f64(&set.measure())));
    m.insert("diam".into(), json!(set.diam()));
    for (k, v) in &set.meta {
        m.insert(k.clone(), v.clone());
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn middle_thirds_depth_two() {
        let set = ifs_generate(&catalog("cantor3").unwrap(), 2).unwrap();
        assert_eq!(set.len(), 4);
        let los: Vec<Rat> = (0..4).map(|i| set.lo_rat(i, 0)).collect();
        assert_eq!(los, vec![rat(0, 1), rat(2, 9), rat(2, 3), rat(8, 9)]);
        for i in 0..4 {
            assert_eq!(set.side_rat(i, 0), rat(1, 9));
        }
    }

    #[test]
    fn carpet_depth_one() {
        let set = ifs_generate(&catalog("carpet").unwrap(), 1).unwrap();
        assert_eq!(set.len(), 8);
        for i in 0..8 {
            assert_eq!(set.side_rat(i, 0), rat(1, 3));
            assert_eq!(set.side_rat(i, 1), rat(1, 3));
        }
        // The central square is missing: no box with lo = (1/3, 1/3).
        assert!(!(0..8).any(|i| set.lo_rat(i, 0) == rat(1, 3) && set.lo_rat(i, 1) == rat(1, 3)));
    }

    #[test]
    fn similarity_dims_match_closed_forms() {
        let cases = [
            ("cantor3", (2.0f64).ln() / (3.0f64).ln()),
            ("cantor4", 0.5),
            ("cantor3x3", 2.0 * (2.0f64).ln() / (3.0f64).ln()),
            ("carpet", (8.0f64).ln() / (3.0f64).ln()),
            ("vicsek", (5.0f64).ln() / (3.0f64).ln()),
        ];
        for (name, expect) in cases {
            let got = catalog(name).unwrap().similarity_dim();
            assert!((got - expect).abs() < 1e-9, "{name}: {got} vs {expect}");
        }
    }

    #[test]
    fn prefractals_are_nested() {
        let spec = catalog("vicsek").unwrap();
        let coarse = ifs_generate(&spec, 2).unwrap();
        let fine = ifs_generate(&spec, 3).unwrap();
        for i in 0..fine.len() {
            let inside = (0..coarse.len()).any(|j| {
                (0..2).all(|a| {
                    fine.lo_rat(i, a) >= coarse.lo_rat(j, a)
                        && fine.hi_rat(i, a) <= coarse.hi_rat(j, a)
                })
            });
            assert!(inside, "fine box {i} escapes the coarse pre-fractal");
        }
    }

    #[test]
    fn corner_construction_single_odd_stage_tiles_square() {
        let params = ThickCantorParams::new(1, vec![1], vec![rat(2, 1)]).unwrap();
        let inst = thick_cantor_generate(&params).unwrap();
        assert_eq!(inst.q, 1);
        assert_eq!(inst.set.len(), 4);
        assert_eq!(inst.set.measure(), rat(1, 1));
        assert_eq!(inst.checks.odd_union_verified, vec![1]);
        for i in 0..4 {
            assert_eq!(inst.set.side_rat(i, 0), rat(1, 2));
        }
    }

    #[test]
    fn two_stage_small_instance_scalars() {
        let params = ThickCantorParams::new(2, vec![1, 1], vec![rat(2, 1), rat(3, 2)]).unwrap();
        let inst = thick_cantor_generate(&params).unwrap();
        assert_eq!(inst.q, 2);
        let last = inst.stages.last().unwrap();
        assert_eq!(last.count, 16);
        // ℓ_2 = 2^{-5/2} ≈ 0.1767767, D_2 = ℓ_2(2^{3/2}−2) ≈ 0.1464466.
        assert!((last.ell_f64() - 0.17677669529663687).abs() < 1e-12);
        assert!((last.min_sep_f64().unwrap() - 0.14644660940672624).abs() < 1e-12);
        // d_2 = min{D_2/3, (16·ℓ_2)^{-2}} = min{0.0488155…, 1/8} = D_2/3.
        assert!((last.probe_f64().unwrap() - 0.04881553646890875).abs() < 1e-12);
        // The exhaustive exact min-gap check ran and agreed.
        assert_eq!(inst.checks.min_gap_verified, vec![2]);
        assert_eq!(inst.set.len(), 16);
    }

    #[test]
    fn probe_scale_picks_the_smaller_branch() {
        // With s_2 very close to 1 the second branch becomes tiny and wins.
        let params = ThickCantorParams::new(2, vec![1, 1], vec![rat(2, 1), rat(5, 4)]).unwrap();
        let inst = thick_cantor_generate(&params).unwrap();
        let last = inst.stages.last().unwrap();
        // (16·2^{-5/2})^{-4} = (2^{3/2})^{-4} = 2^{-6} = 0.015625 < D_2/3.
        assert!((last.probe_f64().unwrap() - 0.015625).abs() < 1e-15);
    }

    #[test]
    fn default_schedule_scalars() {
        let inst = thick_cantor_generate(&ThickCantorParams::default_two_stage()).unwrap();
        let last = inst.stages.last().unwrap();
        assert_eq!(last.count, 65536);
        // ℓ_2 = (1/2)²·(2^{-3/2})⁶ = 2^{-11} exactly.
        assert_eq!(
            last.ell.cmp_val(&RootExpr::from_rat(inst.q, rat(1, 2048))),
            std::cmp::Ordering::Equal
        );
        // D_2 = 2^{-11}(2^{3/2} − 2) ≈ 4.0450543e-4; d_2 = D_2/3.
        assert!((last.min_sep_f64().unwrap() - 4.045054310276e-4).abs() < 1e-12);
        assert!((last.probe_f64().unwrap() - last.min_sep_f64().unwrap() / 3.0).abs() < 1e-15);
        assert_eq!(inst.set.len(), 65536);
        // Union through the two odd coarse ops still tiled the square.
        assert_eq!(inst.checks.odd_union_verified, vec![1]);
    }

    #[test]
    fn parameter_validation() {
        assert!(ThickCantorParams::new(1, vec![1], vec![rat(1, 1)]).is_err()); // s = 1
        assert!(ThickCantorParams::new(2, vec![1, 1], vec![rat(3, 2), rat(2, 1)]).is_err()); // increasing
        assert!(ThickCantorParams::new(2, vec![1], vec![rat(2, 1), rat(3, 2)]).is_err()); // arity
        assert!(ThickCantorParams::new(2, vec![6, 6], vec![rat(2, 1), rat(3, 2)]).is_err()); // cap
        let p = ThickCantorParams::parse("J=2,n=2;6,s=2;1.5").unwrap();
        assert_eq!(p.reps, vec![2, 6]);
        assert_eq!(p.s, vec![rat(2, 1), rat(3, 2)]);
        let d = ThickCantorParams::parse("").unwrap();
        assert_eq!(d.reps, vec![2, 6]);
        assert_eq!(d.s, vec![rat(2, 1), rat(3, 2)]);
        assert!(ThickCantorParams::parse("J=two").is_err());
    }

    #[test]
    fn raster_round_trip() {
        let dir = std::env::temp_dir();
        let all = dir.join("setgen_test_all.pgm");
        std::fs::write(&all, b"P5\n4 4\n255\n".iter().chain([255u8; 16].iter()).copied().collect::<Vec<u8>>()).unwrap();
        let set = load_raster(&all, 128).unwrap();
        assert_eq!(set.len(), 16);
        assert!(set.is_normalized());
        // One lit pixel at image top-left of a 2×2 → cell with high y.
        let one = dir.join("setgen_test_one.pgm");
        std::fs::write(&one, b"P5\n2 2\n255\n".iter().copied().chain([200u8, 0, 0, 0]).collect::<Vec<u8>>()).unwrap();
        let set = load_raster(&one, 100).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.lo_rat(0, 0), rat(1, 4)); // x = 0 → normalized 1/4
        assert_eq!(set.lo_rat(0, 1), rat(1, 2)); // y = 1/2 → normalized 1/2
        // All-dark raster: empty-set error.
        assert!(matches!(load_raster(&one, 201), Err(Error::EmptySet(_))));
        // Bad magic: format error.
        let bad = dir.join("setgen_test_bad.pgm");
        std::fs::write(&bad, b"P6\n2 2\n255\n0000").unwrap();
        assert!(matches!(load_raster(&bad, 1), Err(Error::Format(_))));
        for p in [all, one, bad] {
            let _ = std::fs::remove_file(p);
        }
    }

    #[test]
    fn named_sets_and_budget() {
        let seg = named_set("segment", None).unwrap();
        assert_eq!(seg.dim(), 2);
        assert_eq!(seg.measure(), rat(0, 1));
        let c = named_set("cantor3", Some(4)).unwrap();
        assert_eq!(c.len(), 16);
        // Budget: depth 4 of ratio 1/3 → floor(4·log2 3) − 2 = 4.
        assert_eq!(resolution_budget(&c), Some(4));
        assert!(resolution_budget(&seg).is_none());
        assert!(named_set("nonesuch", None).is_err());
    }

    #[test]
    fn plane_embedding_is_exact() {
        let line = named_set("interval", None).unwrap();
        let e = embed_in_plane(&line).unwrap();
        assert_eq!(e.dim(), 2);
        assert_eq!(e.len(), 1);
        // [0,1] × {1/2}: distance from (1/4, 1) is exactly 1/2.
        assert!((crate::geom::dist_point_to_set(&[0.25, 1.0], &e) - 0.5).abs() < 1e-15);
        let c = named_set("cantor3", Some(2)).unwrap();
        let ec = embed_in_plane(&c).unwrap();
        assert_eq!(ec.len(), 4);
        // Middle-third gap: nearest interval endpoints sit at 1/3 and 2/3.
        assert!((crate::geom::dist_point_to_set(&[0.5, 0.5], &ec) - 1.0 / 6.0).abs() < 1e-15);
        assert!(embed_in_plane(&e).is_err());
    }
}
