//! Run orchestration and machine-readable artifacts.
//!
//! A [`RunConfig`] names a set, the scales to work at, and the suites to
//! run; [`run`] executes the pipeline (generate → decompose → estimate →
//! contour → check) and returns a [`VerificationReport`] whose serialized
//! form is byte-stable: identical configs produce identical bytes across
//! runs and thread counts. Wall-clock timings are returned alongside the
//! report and written to a separate sidecar file, never into the canonical
//! report, so determinism of the report itself is preservable.
//!
//! CSV artifacts use fixed column orders, newline termination, and reals
//! formatted with nine significant digits; emit→parse→emit is a fixpoint.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::boundary::{
    boundary_length_profile, geometric_schedule, spherical_dims, ProfileRow,
};
use crate::dimension::{
    assouad_dims, minkowski_dims_box, minkowski_dims_whitney, sample_centers,
    AssouadOptions, FitOptions,
};
use crate::error::{Error, Result};
use crate::field::DistanceField;
use crate::geom::{BoxSet, MAX_LEVEL};
use crate::rational::rat_to_f64;
use crate::setgen::{load_raster, named_set, thick_cantor_generate, ThickCantorParams};
use crate::verify::{
    length_envelope_check, local_boundary_profile, per_cube_boundary_checks,
    regular_law_check, sandwich_check, thick_stage_check, SandwichOptions,
};
use crate::whitney::{generation_counts, whitney_counts_only, GenerationCounts};

/// Suites [`run`] knows how to execute, in their fixed execution order.
pub const KNOWN_SUITES: [&str; 9] = [
    "whitney", "dims", "boundary", "sandwich", "op", "regular", "percube", "local", "thick",
];

/// Everything a run needs; serializable so a report can echo it and a
/// reader can re-run it.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Catalog name, or a path to a saved `.json` box set or `.pgm` raster.
    pub set: String,
    /// Construction depth for catalog systems.
    pub depth: Option<u32>,
    /// Corner-construction parameters like `"J=2,n=2;6,s=2;1.5"`; takes
    /// precedence over `set` and is required by the `thick` suite.
    pub thick: Option<String>,
    /// Raster threshold for `.pgm` inputs.
    pub threshold: u8,
    /// Rescale the set into `[1/4, 3/4]^d` before measuring.
    pub normalize: bool,
    /// Whitney decomposition depth.
    pub k_max: u32,
    /// Distance-field grid level (spacing `2^-grid`).
    pub grid: u32,
    /// Fit window override for count-based estimates.
    pub window: Option<(u32, u32)>,
    /// Generation range for the sandwich comparison; derived when absent.
    pub sandwich_range: Option<(u32, u32)>,
    /// Sandwich upper-band offsets.
    pub offsets: (u32, u32),
    /// Search offsets over shifts of `-3..=3`.
    pub search: bool,
    /// Radius schedule, `"geo:r0,ratio,n"`.
    pub schedule: String,
    /// Suites to execute; always run in the order of [`KNOWN_SUITES`].
    pub suites: Vec<String>,
    pub sandwich_bound: f64,
    pub envelope_bound: f64,
    pub regular_bound: f64,
    /// Expected exponent for the power-law band; defaults to the
    /// generator-recorded similarity dimension.
    pub regular_exponent: Option<f64>,
    pub percube_upper: f64,
    pub percube_lower: f64,
    /// Radius for the per-cube checks; defaults to `0.75·2^-5`.
    pub percube_radius: Option<f64>,
    /// Window center for the local profile; defaults to a point of the set.
    pub local_center: Option<[f64; 2]>,
    pub local_radius: f64,
    pub thick_band: (f64, f64),
    pub thick_exponent_floor: f64,
    /// Echoed for provenance; every sampler in this crate is deterministic,
    /// so the seed only matters if stochastic subsampling is ever added.
    pub seed: u64,
    /// Where to write artifacts (`set.json`, CSVs, `report.json`,
    /// `timings.json`); nothing is written when absent.
    pub out_dir: Option<PathBuf>,
    /// Worker threads; `None` uses the process default.
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            set: "point".into(),
            depth: None,
            thick: None,
            threshold: 128,
            normalize: true,
            k_max: 12,
            grid: 11,
            window: None,
            sandwich_range: None,
            offsets: (2, 4),
            search: false,
            schedule: "geo:0.25,0.7071067811865476,16".into(),
            suites: vec!["dims".into()],
            sandwich_bound: 50.0,
            envelope_bound: 8.0,
            regular_bound: 10.0,
            regular_exponent: None,
            percube_upper: 6.0,
            percube_lower: 0.25,
            percube_radius: None,
            local_center: None,
            local_radius: 0.25,
            thick_band: (0.1, 10.0),
            thick_exponent_floor: 1.8,
            seed: 0,
            out_dir: None,
            threads: None,
        }
    }
}

/// Suites that consume contours and therefore need grid resolution below
/// the finest generation in play.
fn needs_field(suite: &str) -> bool {
    matches!(
        suite,
        "boundary" | "sandwich" | "op" | "regular" | "percube" | "local"
    )
}

impl RunConfig {
    /// Parses a JSON config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{path:?}: {e}")))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{path:?}: {e}")))
    }

    /// Checks the config before anything runs or gets written.
    pub fn validate(&self) -> Result<()> {
        if self.suites.is_empty() {
            return Err(Error::Config("no suites requested".into()));
        }
        for s in &self.suites {
            if !KNOWN_SUITES.contains(&s.as_str()) {
                return Err(Error::Config(format!(
                    "unknown suite {s:?}; known: {}",
                    KNOWN_SUITES.join("|")
                )));
            }
        }
        if self.set.ends_with(".json") || self.set.ends_with(".pgm") {
            if !Path::new(&self.set).exists() {
                return Err(Error::Config(format!("input file {:?} not found", self.set)));
            }
        }
        if self.k_max > MAX_LEVEL || self.k_max < 4 {
            return Err(Error::Config(format!(
                "k_max {} outside [4, {MAX_LEVEL}]",
                self.k_max
            )));
        }
        if self.suites.iter().any(|s| needs_field(s)) && self.grid + 1 < self.k_max {
            return Err(Error::Config(format!(
                "grid level {} too coarse for k_max {}: contour suites need \
                 grid ≥ k_max - 1",
                self.grid, self.k_max
            )));
        }
        if self.suites.iter().any(|s| s == "thick") && self.thick.is_none() {
            return Err(Error::Config(
                "the thick suite needs corner-construction parameters".into(),
            ));
        }
        parse_schedule(&self.schedule)?;
        Ok(())
    }
}

/// Parses a schedule spec `"geo:r0,ratio,n"` into explicit radii.
pub fn parse_schedule(text: &str) -> Result<Vec<f64>> {
    let body = text
        .strip_prefix("geo:")
        .ok_or_else(|| Error::Config(format!("schedule {text:?} must start with \"geo:\"")))?;
    let parts: Vec<&str> = body.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!(
            "schedule {text:?} needs three fields r0,ratio,n"
        )));
    }
    let r0: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad schedule start {:?}", parts[0])))?;
    let ratio: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad schedule ratio {:?}", parts[1])))?;
    let n: usize = parts[2]
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad schedule length {:?}", parts[2])))?;
    geometric_schedule(r0, ratio, n)
}

/// One suite's verdict and its full numeric payload.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteResult {
    pub suite: String,
    pub pass: bool,
    pub details: Value,
}

/// Aggregate result of a run. Serializes byte-stably: keys are sorted,
/// floats use the shortest round-trip form, and nothing time-dependent is
/// included.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerificationReport {
    pub version: String,
    pub config: RunConfig,
    pub suites: Vec<SuiteResult>,
    pub all_pass: bool,
}

/// Wall-clock seconds per suite; written to a sidecar, never the report.
#[derive(Clone, Debug, Serialize)]
pub struct SuiteTiming {
    pub suite: String,
    pub seconds: f64,
}

/// A finished run: the canonical report plus its timing sidecar.
#[derive(Debug)]
pub struct RunOutcome {
    pub report: VerificationReport,
    pub timings: Vec<SuiteTiming>,
}

/// Builds or loads the configured set.
pub fn resolve_set(config: &RunConfig) -> Result<BoxSet> {
    let set = if let Some(text) = &config.thick {
        thick_cantor_generate(&ThickCantorParams::parse(text)?)?.set
    } else if config.set.ends_with(".json") {
        BoxSet::load(Path::new(&config.set))?
    } else if config.set.ends_with(".pgm") {
        load_raster(Path::new(&config.set), config.threshold)?
    } else {
        named_set(&config.set, config.depth)?
    };
    Ok(if config.normalize { set.normalize() } else { set })
}

fn to_value<T: Serialize>(t: &T) -> Result<Value> {
    serde_json::to_value(t).map_err(|e| Error::Format(format!("serialization: {e}")))
}

/// Executes the configured pipeline and returns the aggregate report.
///
/// Suites run in the fixed [`KNOWN_SUITES`] order regardless of how the
/// config lists them. A suite that completes with a failing verdict still
/// produces its rows (callers map that to a nonzero exit); configuration
/// and resource errors abort instead. When `out_dir` is set, artifacts are
/// written there: the resolved set, per-suite CSVs, `report.json`, and
/// `timings.json`.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    match config.threads {
        None => run_inner(config),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            pool.install(|| run_inner(config))
        }
    }
}

fn run_inner(config: &RunConfig) -> Result<RunOutcome> {
    let e = resolve_set(config)?;
    if let Some(dir) = &config.out_dir {
        std::fs::create_dir_all(dir)?;
        e.save(&dir.join("set.json"))?;
    }

    // The field and the generation counts are shared across suites; build
    // each at most once.
    let mut field: Option<DistanceField> = None;
    let mut counts: Option<GenerationCounts> = None;
    let mut suites = Vec::new();
    let mut timings = Vec::new();

    let ordered: Vec<&str> = KNOWN_SUITES
        .iter()
        .copied()
        .filter(|s| config.suites.iter().any(|c| c == s))
        .collect();
    for suite in ordered {
        let t0 = Instant::now();
        let (pass, details) = run_suite(suite, config, &e, &mut field, &mut counts)?;
        timings.push(SuiteTiming {
            suite: suite.into(),
            seconds: t0.elapsed().as_secs_f64(),
        });
        suites.push(SuiteResult { suite: suite.into(), pass, details });
    }
    let all_pass = suites.iter().all(|s| s.pass);
    let report = VerificationReport {
        version: env!("CARGO_PKG_VERSION").into(),
        config: config.clone(),
        suites,
        all_pass,
    };
    if let Some(dir) = &config.out_dir {
        emit_json(&dir.join("report.json"), &to_value(&report)?)?;
        emit_json(&dir.join("timings.json"), &to_value(&timings)?)?;
    }
    Ok(RunOutcome { report, timings })
}

fn get_field<'a>(
    config: &RunConfig,
    e: &BoxSet,
    field: &'a mut Option<DistanceField>,
) -> Result<&'a DistanceField> {
    if field.is_none() {
        *field = Some(DistanceField::build(e, config.grid)?);
    }
    Ok(field.as_ref().unwrap())
}

fn get_counts<'a>(
    config: &RunConfig,
    e: &BoxSet,
    counts: &'a mut Option<GenerationCounts>,
) -> Result<&'a GenerationCounts> {
    if counts.is_none() {
        let w = whitney_counts_only(e, config.k_max)?;
        *counts = Some(generation_counts(&w, None)?);
    }
    Ok(counts.as_ref().unwrap())
}

fn run_suite(
    suite: &str,
    config: &RunConfig,
    e: &BoxSet,
    field: &mut Option<DistanceField>,
    counts: &mut Option<GenerationCounts>,
) -> Result<(bool, Value)> {
    match suite {
        "whitney" => {
            let w = whitney_counts_only(e, config.k_max)?;
            let gc = generation_counts(&w, None)?;
            if let Some(dir) = &config.out_dir {
                emit_csv(&dir.join("counts.csv"), &counts_csv(&gc))?;
            }
            let pass = w.coverage_identity();
            let rows: Vec<(u32, u64)> = gc.window().collect();
            *counts = Some(gc);
            Ok((
                pass,
                json!({
                    "k_max": config.k_max,
                    "total_selected": w.total_selected(),
                    "residual_volume": w.residual_volume(),
                    "tiling_identity": pass,
                    "counts": rows,
                }),
            ))
        }
        "dims" => {
            let fit = FitOptions { window: config.window, ..FitOptions::default() };
            let (box_upper, box_lower) = minkowski_dims_box(e, &fit)?;
            let wd = minkowski_dims_whitney(e, Some(config.k_max), &fit)?;
            let (a_upper, a_lower) = assouad_dims(e, &AssouadOptions::default())?;
            *counts = Some(wd.counts.clone());
            Ok((
                true,
                json!({
                    "box": { "upper": to_value(&box_upper)?, "lower": to_value(&box_lower)? },
                    "whitney": {
                        "upper": to_value(&wd.upper)?,
                        "lower": to_value(&wd.lower)?,
                        "slope": to_value(&wd.slope)?,
                        "zero_area": wd.zero_area,
                    },
                    "assouad": { "upper": to_value(&a_upper)?, "lower": to_value(&a_lower)? },
                }),
            ))
        }
        "boundary" => {
            let sched = parse_schedule(&config.schedule)?;
            let f = get_field(config, e, field)?;
            let rows = boundary_length_profile(e, f, &sched)?;
            if let Some(dir) = &config.out_dir {
                emit_csv(&dir.join("profile.csv"), &profile_csv(&rows))?;
            }
            let spherical = if e.dim() == 2 {
                let gc = get_counts(config, e, counts)?;
                match spherical_dims(&rows, gc, 2, &FitOptions::default()) {
                    Ok(sd) => to_value(&sd)?,
                    Err(err) => json!({ "unavailable": err.to_string() }),
                }
            } else {
                Value::Null
            };
            Ok((
                true,
                json!({
                    "rows": rows.len(),
                    "r_min": rows.last().map(|p| p.r),
                    "r_max": rows.first().map(|p| p.r),
                    "spherical": spherical,
                }),
            ))
        }
        "sandwich" => {
            let f = get_field(config, e, field)?;
            let rep = sandwich_check(
                e,
                f,
                &SandwichOptions {
                    k_range: config.sandwich_range,
                    offsets: config.offsets,
                    search: config.search,
                    bound: config.sandwich_bound,
                    ..SandwichOptions::default()
                },
            )?;
            Ok((rep.pass, to_value(&rep)?))
        }
        "op" => {
            let sched = parse_schedule(&config.schedule)?;
            let f = get_field(config, e, field)?;
            let rep =
                length_envelope_check(e, f, &sched, &[2.0, 3.0], config.envelope_bound)?;
            Ok((rep.pass, to_value(&rep)?))
        }
        "regular" => {
            let s = config
                .regular_exponent
                .or_else(|| e.meta.get("similarity_dim").and_then(Value::as_f64))
                .ok_or_else(|| {
                    Error::Config(
                        "regular suite needs an exponent: set regular_exponent or \
                         use a generated set that records one"
                            .into(),
                    )
                })?;
            let sched = parse_schedule(&config.schedule)?;
            let f = get_field(config, e, field)?;
            let rep = regular_law_check(e, f, s, &sched, config.regular_bound)?;
            Ok((rep.pass, to_value(&rep)?))
        }
        "percube" => {
            let r = config.percube_radius.unwrap_or(0.75 / 32.0);
            let f = get_field(config, e, field)?;
            let rep = per_cube_boundary_checks(
                e,
                f,
                r,
                config.percube_upper,
                config.percube_lower,
            )?;
            Ok((rep.pass, to_value(&rep)?))
        }
        "local" => {
            if e.dim() != 2 {
                return Err(Error::Config("the local suite needs a planar set".into()));
            }
            let center = match config.local_center {
                Some(c) => c,
                None => {
                    let cs = sample_centers(e, 3, 1);
                    let c = cs.first().ok_or_else(|| {
                        Error::InsufficientData("no center samples on the set".into())
                    })?;
                    [rat_to_f64(&c[0]), rat_to_f64(&c[1])]
                }
            };
            let sched = parse_schedule(&config.schedule)?;
            let f = get_field(config, e, field)?;
            let rep = local_boundary_profile(e, f, center, config.local_radius, &sched)?;
            Ok((rep.lambda.is_finite(), to_value(&rep)?))
        }
        "thick" => {
            let text = config.thick.as_ref().expect("validated");
            let params = ThickCantorParams::parse(text)?;
            let rep =
                thick_stage_check(&params, config.thick_band, config.thick_exponent_floor)?;
            Ok((rep.pass, to_value(&rep)?))
        }
        other => Err(Error::Config(format!("unknown suite {other:?}"))),
    }
}

// ---------------------------------------------------------------------------
// Canonical text formats.
// ---------------------------------------------------------------------------

/// Formats a real with nine significant digits, the canonical CSV form.
/// Parsing the result and formatting again reproduces the same bytes.
pub fn format_sig9(x: f64) -> String {
    format!("{x:.8e}")
}

/// `"k,count"` rows sorted by level.
pub fn counts_csv(counts: &GenerationCounts) -> String {
    let mut out = String::from("k,count\n");
    for (k, n) in counts.window() {
        out.push_str(&format!("{k},{n}\n"));
    }
    out
}

/// Parses the output of [`counts_csv`].
pub fn parse_counts_csv(text: &str) -> Result<Vec<(u32, u64)>> {
    let mut lines = text.lines();
    match lines.next() {
        Some("k,count") => {}
        other => return Err(Error::Format(format!("bad counts header {other:?}"))),
    }
    lines
        .map(|line| {
            let (k, n) = line
                .split_once(',')
                .ok_or_else(|| Error::Format(format!("bad counts row {line:?}")))?;
            Ok((
                k.parse().map_err(|_| Error::Format(format!("bad level {k:?}")))?,
                n.parse().map_err(|_| Error::Format(format!("bad count {n:?}")))?,
            ))
        })
        .collect()
}

/// `"r,length,volume"` rows sorted by descending radius.
pub fn profile_csv(rows: &[ProfileRow]) -> String {
    let mut sorted: Vec<&ProfileRow> = rows.iter().collect();
    sorted.sort_by(|a, b| b.r.partial_cmp(&a.r).unwrap());
    let mut out = String::from("r,length,volume\n");
    for p in sorted {
        out.push_str(&format!(
            "{},{},{}\n",
            format_sig9(p.r),
            format_sig9(p.length),
            format_sig9(p.volume)
        ));
    }
    out
}

/// Parses the output of [`profile_csv`].
pub fn parse_profile_csv(text: &str) -> Result<Vec<ProfileRow>> {
    let mut lines = text.lines();
    match lines.next() {
        Some("r,length,volume") => {}
        other => return Err(Error::Format(format!("bad profile header {other:?}"))),
    }
    lines
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 3 {
                return Err(Error::Format(format!("bad profile row {line:?}")));
            }
            let num = |s: &str| -> Result<f64> {
                s.parse().map_err(|_| Error::Format(format!("bad number {s:?}")))
            };
            Ok(ProfileRow { r: num(f[0])?, length: num(f[1])?, volume: num(f[2])? })
        })
        .collect()
}

/// Writes text to `path`, guaranteeing newline termination. The parent
/// directory must exist.
pub fn emit_csv(path: &Path, text: &str) -> Result<()> {
    let mut owned = text.to_string();
    if !owned.ends_with('\n') {
        owned.push('\n');
    }
    std::fs::write(path, owned)?;
    Ok(())
}

/// Writes a JSON value in its canonical form: pretty-printed with sorted
/// keys (the value representation is sorted by construction) and a final
/// newline.
pub fn emit_json(path: &Path, v: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(v)
        .map_err(|e| Error::Format(format!("json: {e}")))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::whitney::CountScope;
    use std::collections::BTreeMap;

    fn tmpdir(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("whitneydim_report_{tag}_{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn config_validation_catches_bad_requests() {
        assert!(RunConfig::default().validate().is_ok());
        let unknown = RunConfig { suites: vec!["nope".into()], ..Default::default() };
        assert!(matches!(unknown.validate(), Err(Error::Config(_))));
        let coarse = RunConfig {
            suites: vec!["boundary".into()],
            grid: 9,
            k_max: 12,
            ..Default::default()
        };
        assert!(matches!(coarse.validate(), Err(Error::Config(_))));
        let missing = RunConfig { set: "nowhere.json".into(), ..Default::default() };
        assert!(matches!(missing.validate(), Err(Error::Config(_))));
        let thickless = RunConfig { suites: vec!["thick".into()], ..Default::default() };
        assert!(matches!(thickless.validate(), Err(Error::Config(_))));
        let badsched = RunConfig { schedule: "lin:1,2,3".into(), ..Default::default() };
        assert!(matches!(badsched.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn csv_emission_is_a_parse_fixpoint() {
        let counts = GenerationCounts {
            counts: BTreeMap::from([(3, 7u64), (4, 19), (5, 40)]),
            k_lo: 3,
            k_hi: 5,
            scope: CountScope::Global,
        };
        let text = counts_csv(&counts);
        assert_eq!(text, "k,count\n3,7\n4,19\n5,40\n");
        assert_eq!(parse_counts_csv(&text).unwrap(), vec![(3, 7), (4, 19), (5, 40)]);

        let rows = vec![
            ProfileRow { r: 0.125, length: 0.785398163, volume: 0.0490873852 },
            ProfileRow { r: 0.0625, length: 0.392699081, volume: 0.0122718463 },
        ];
        let text = profile_csv(&rows);
        let parsed = parse_profile_csv(&text).unwrap();
        assert_eq!(profile_csv(&parsed), text);
        assert!(text.starts_with("r,length,volume\n1.25000000e-1,"));

        // Fixpoint on pseudo-random records: one emit→parse trip may round
        // to nine digits, after which emit∘parse is the identity.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut rnd = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..100 {
            let rows = vec![ProfileRow {
                r: rnd() * 0.5,
                length: rnd() * 10.0,
                volume: rnd(),
            }];
            let once = profile_csv(&parse_profile_csv(&profile_csv(&rows)).unwrap());
            let twice = profile_csv(&parse_profile_csv(&once).unwrap());
            assert_eq!(once, twice);
        }
    }

    #[test]
    fn run_point_dims_reports_zeros() {
        let config = RunConfig {
            suites: vec!["dims".into()],
            k_max: 10,
            grid: 9,
            ..Default::default()
        };
        let out = run(&config).unwrap();
        assert!(out.report.all_pass);
        let d = &out.report.suites[0].details;
        for group in ["box", "whitney", "assouad"] {
            for variant in ["upper", "lower"] {
                let v = d[group][variant]["value"].as_f64().unwrap();
                assert!(v.abs() <= 0.05, "{group}.{variant} = {v}");
                assert!(d[group][variant]["window"].is_array());
            }
        }
        assert_eq!(out.timings.len(), 1);
    }

    #[test]
    fn runs_are_byte_identical_across_thread_counts() {
        let base = RunConfig {
            suites: vec!["whitney".into(), "dims".into(), "boundary".into()],
            k_max: 10,
            grid: 9,
            schedule: "geo:0.125,0.7071067811865476,8".into(),
            ..Default::default()
        };
        let mut artifacts: Vec<(String, String, String, String)> = Vec::new();
        for (tag, threads) in [("a", 1usize), ("b", 4usize)] {
            let dir = tmpdir(tag);
            let config = RunConfig {
                out_dir: Some(dir.clone()),
                threads: Some(threads),
                ..base.clone()
            };
            let out = run(&config).unwrap();
            assert!(out.report.all_pass);
            let read = |n: &str| std::fs::read_to_string(dir.join(n)).unwrap();
            // The echoed config differs in out_dir/threads by construction;
            // compare the suite payloads.
            let report: VerificationReport =
                serde_json::from_str(&read("report.json")).unwrap();
            let suites = serde_json::to_string(&report.suites).unwrap();
            artifacts.push((suites, read("counts.csv"), read("profile.csv"), read("set.json")));
            assert!(dir.join("timings.json").exists());
            let loaded = BoxSet::load(&dir.join("set.json")).unwrap();
            assert_eq!(loaded.len(), 1);
            let _ = std::fs::remove_dir_all(&dir);
        }
        assert_eq!(artifacts[0], artifacts[1]);
    }

    #[test]
    fn missing_input_aborts_before_writing() {
        let dir = tmpdir("missing");
        let config = RunConfig {
            set: "no_such_set.json".into(),
            out_dir: Some(dir.clone()),
            ..Default::default()
        };
        assert!(matches!(run(&config), Err(Error::Config(_))));
        assert_eq!(std::fs::read_dir(&dir).unwrap().count(), 0);
        let _ = std::fs::remove_dir_all(&dir);
    }

    #[test]
    fn failing_suite_still_writes_the_report() {
        let dir = tmpdir("fail");
        let config = RunConfig {
            suites: vec!["sandwich".into()],
            k_max: 10,
            grid: 9,
            sandwich_bound: 1e-6,
            out_dir: Some(dir.clone()),
            ..Default::default()
        };
        let out = run(&config).unwrap();
        assert!(!out.report.all_pass);
        assert!(dir.join("report.json").exists());
        let report: VerificationReport =
            serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap())
                .unwrap();
        assert!(!report.all_pass);
        assert_eq!(report.suites[0].suite, "sandwich");
        let _ = std::fs::remove_dir_all(&dir);
    }
}
