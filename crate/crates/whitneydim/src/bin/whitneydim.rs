//! Thin command-line front end over the library pipeline.
//!
//! Exit codes: 0 success / all suites pass, 1 a suite ran and failed,
//! 2 configuration error, 3 resource limit. The `WHITNEYDIM_MAX_CELLS`
//! environment variable caps grid/decomposition memory.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use whitneydim::boundary::boundary_length_profile;
use whitneydim::dimension::{
    assouad_dims, minkowski_dims_box, minkowski_dims_whitney, AssouadOptions,
    DimensionEstimate, FitOptions,
};
use whitneydim::error::{Error, Result};
use whitneydim::field::DistanceField;
use whitneydim::geom::BoxSet;
use whitneydim::report::{
    counts_csv, emit_csv, emit_json, parse_schedule, profile_csv, run, RunConfig,
};
use whitneydim::setgen::{load_raster, named_set, thick_cantor_generate, ThickCantorParams};
use whitneydim::whitney::{generation_counts, whitney_decompose, whitney_counts_only};

#[derive(Parser)]
#[command(name = "whitneydim", version, about = "Whitney covers, dimensions, and neighborhood boundaries for exact box sets")]
struct Cli {
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a set and save it as a box-set JSON file.
    Gen(GenArgs),
    /// Whitney-decompose the complement of a saved set.
    Whitney(WhitneyArgs),
    /// Estimate dimensions of a saved set.
    Dims(DimsArgs),
    /// Measure r-neighborhood boundary lengths and volumes.
    Boundary(BoundaryArgs),
    /// Run one quantitative check suite against a saved set.
    Verify(VerifyArgs),
    /// Execute a full configured run and write its report.
    Run(RunArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Catalog name (point|segment|interval|square|cantor3|carpet|...) or a
    /// path ending in .json/.pgm.
    #[arg(long, default_value = "point")]
    set: String,
    /// Construction depth for catalog systems.
    #[arg(long)]
    depth: Option<u32>,
    /// Corner-construction parameters, e.g. "J=2,n=2;6,s=2;1.5".
    #[arg(long = "thick-cantor")]
    thick_cantor: Option<String>,
    /// Raster threshold for .pgm input.
    #[arg(long, default_value_t = 128)]
    threshold: u8,
    /// Keep original coordinates instead of rescaling into the middle of
    /// the unit cube (the decomposition stages require rescaled input).
    #[arg(long)]
    raw: bool,
    /// Output path for the box-set JSON.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct WhitneyArgs {
    /// Box-set JSON input.
    #[arg(long = "in")]
    input: PathBuf,
    /// Decomposition depth.
    #[arg(long, default_value_t = 12)]
    kmax: u32,
    /// Where to write the "k,count" CSV.
    #[arg(long = "counts-out")]
    counts_out: Option<PathBuf>,
    /// Where to write the full cube dump (JSON list of {level, index, dist}).
    #[arg(long = "dump-out")]
    dump_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DimMethod {
    Box,
    Whitney,
    Assouad,
    All,
}

#[derive(Args)]
struct DimsArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 12)]
    kmax: u32,
    #[arg(long, value_enum, default_value_t = DimMethod::All)]
    method: DimMethod,
    /// Fit window "k_lo,k_hi"; defaults to the deepest usable levels.
    #[arg(long, value_parser = parse_u32_pair)]
    window: Option<(u32, u32)>,
    /// Where to write the estimate records; stdout when omitted.
    #[arg(long = "json-out")]
    json_out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundaryArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Distance-field grid level (spacing 2^-K).
    #[arg(long, default_value_t = 11)]
    grid: u32,
    /// Radius schedule "geo:r0,ratio,n".
    #[arg(long = "r-schedule", default_value = "geo:0.25,0.7071067811865476,16")]
    r_schedule: String,
    /// Where to write the "r,length,volume" CSV.
    #[arg(long = "profile-out")]
    profile_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteName {
    Sandwich,
    Op,
    Regular,
    Percube,
    Local,
    Thick,
}

impl SuiteName {
    fn as_str(self) -> &'static str {
        match self {
            SuiteName::Sandwich => "sandwich",
            SuiteName::Op => "op",
            SuiteName::Regular => "regular",
            SuiteName::Percube => "percube",
            SuiteName::Local => "local",
            SuiteName::Thick => "thick",
        }
    }
}

#[derive(Args)]
struct VerifyArgs {
    /// Box-set JSON input (not needed for --suite thick).
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long, value_enum)]
    suite: SuiteName,
    #[arg(long, default_value_t = 12)]
    kmax: u32,
    #[arg(long, default_value_t = 11)]
    grid: u32,
    #[arg(long = "r-schedule", default_value = "geo:0.25,0.7071067811865476,16")]
    r_schedule: String,
    /// Sandwich generation range "k_lo,k_hi".
    #[arg(long, value_parser = parse_u32_pair)]
    range: Option<(u32, u32)>,
    /// Search sandwich offsets over shifts of -3..=3.
    #[arg(long)]
    search: bool,
    /// Power-law exponent for --suite regular; defaults to the exponent the
    /// generator recorded with the set.
    #[arg(long)]
    exponent: Option<f64>,
    /// Corner-construction parameters for --suite thick.
    #[arg(long = "thick-cantor")]
    thick_cantor: Option<String>,
    /// Where to write the report; stdout when omitted.
    #[arg(long = "json-out")]
    json_out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration JSON.
    #[arg(long)]
    config: PathBuf,
    /// Artifact directory; overrides the config's out_dir.
    #[arg(long = "out-dir")]
    out_dir: Option<PathBuf>,
}

fn parse_u32_pair(s: &str) -> std::result::Result<(u32, u32), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("{s:?} is not \"lo,hi\""))?;
    let lo = a.trim().parse().map_err(|_| format!("bad level {a:?}"))?;
    let hi = b.trim().parse().map_err(|_| format!("bad level {b:?}"))?;
    Ok((lo, hi))
}

fn load_set(path: &Path) -> Result<BoxSet> {
    if !path.exists() {
        return Err(Error::Config(format!("input file {path:?} not found")));
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some("pgm") => load_raster(path, 128),
        _ => BoxSet::load(path),
    }
}

fn write_or_print(path: &Option<PathBuf>, v: &serde_json::Value) -> Result<()> {
    match path {
        Some(p) => emit_json(p, v),
        None => {
            println!(
                "{}",
                serde_json::to_string_pretty(v).map_err(|e| Error::Format(e.to_string()))?
            );
            Ok(())
        }
    }
}

/// Runs `f` inside a dedicated pool when a thread count was requested.
fn with_pool<T>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T>
where
    T: Send,
{
    match threads {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(f),
    }
}

/// `Ok(true)` means success with every requested check passing.
fn dispatch(cli: Cli) -> Result<bool> {
    let threads = cli.threads;
    match cli.command {
        Command::Gen(a) => with_pool(threads, || {
            let path = Path::new(&a.set);
            let set = if let Some(text) = &a.thick_cantor {
                thick_cantor_generate(&ThickCantorParams::parse(text)?)?.set
            } else if a.set.ends_with(".pgm") {
                load_raster(path, a.threshold)?
            } else if a.set.ends_with(".json") {
                if !path.exists() {
                    return Err(Error::Config(format!("input file {path:?} not found")));
                }
                BoxSet::load(path)?
            } else {
                named_set(&a.set, a.depth)?
            };
            let set = if a.raw { set } else { set.normalize() };
            set.save(&a.out)?;
            println!(
                "wrote {} ({} boxes, dim {})",
                a.out.display(),
                set.len(),
                set.dim()
            );
            Ok(true)
        }),
        Command::Whitney(a) => with_pool(threads, || {
            let set = load_set(&a.input)?;
            let want_dump = a.dump_out.is_some();
            let w = if want_dump {
                whitney_decompose(&set, a.kmax)?
            } else {
                whitney_counts_only(&set, a.kmax)?
            };
            let counts = generation_counts(&w, None)?;
            if let Some(p) = &a.counts_out {
                emit_csv(p, &counts_csv(&counts))?;
            }
            if let Some(p) = &a.dump_out {
                let dump: Vec<_> = w
                    .cubes
                    .iter()
                    .map(|c| {
                        json!({
                            "level": c.cube.level,
                            "index": c.cube.index[..set.dim()],
                            "dist": c.dist,
                        })
                    })
                    .collect();
                emit_json(p, &serde_json::Value::Array(dump))?;
            }
            println!(
                "selected {} cubes to level {} (residual volume {:.3e}, tiling identity {})",
                w.total_selected(),
                w.k_max,
                w.residual_volume(),
                w.coverage_identity()
            );
            Ok(w.coverage_identity())
        }),
        Command::Dims(a) => with_pool(threads, || {
            let set = load_set(&a.input)?;
            let fit = FitOptions { window: a.window, ..FitOptions::default() };
            let mut records: Vec<DimensionEstimate> = Vec::new();
            if matches!(a.method, DimMethod::Box | DimMethod::All) {
                let (upper, lower) = minkowski_dims_box(&set, &fit)?;
                records.extend([upper, lower]);
            }
            if matches!(a.method, DimMethod::Whitney | DimMethod::All) {
                let wd = minkowski_dims_whitney(&set, Some(a.kmax), &fit)?;
                records.extend([wd.upper, wd.lower, wd.slope]);
            }
            if matches!(a.method, DimMethod::Assouad | DimMethod::All) {
                let (upper, lower) = assouad_dims(&set, &AssouadOptions::default())?;
                records.extend([upper, lower]);
            }
            let v = serde_json::to_value(&records).map_err(|e| Error::Format(e.to_string()))?;
            write_or_print(&a.json_out, &v)?;
            Ok(true)
        }),
        Command::Boundary(a) => with_pool(threads, || {
            let set = load_set(&a.input)?;
            let schedule = parse_schedule(&a.r_schedule)?;
            let field = DistanceField::build(&set, a.grid)?;
            let rows = boundary_length_profile(&set, &field, &schedule)?;
            let text = profile_csv(&rows);
            match &a.profile_out {
                Some(p) => emit_csv(p, &text)?,
                None => print!("{text}"),
            }
            Ok(true)
        }),
        Command::Verify(a) => {
            let suite = a.suite.as_str();
            let mut config = RunConfig {
                suites: vec![suite.into()],
                k_max: a.kmax,
                grid: a.grid,
                schedule: a.r_schedule.clone(),
                sandwich_range: a.range,
                search: a.search,
                regular_exponent: a.exponent,
                thick: a.thick_cantor.clone(),
                threads,
                ..RunConfig::default()
            };
            match &a.input {
                Some(p) => config.set = p.display().to_string(),
                None => {
                    if config.thick.is_none() {
                        return Err(Error::Config(
                            "verify needs --in (or --thick-cantor for --suite thick)".into(),
                        ));
                    }
                }
            }
            let out = run(&config)?;
            let v = serde_json::to_value(&out.report)
                .map_err(|e| Error::Format(e.to_string()))?;
            write_or_print(&a.json_out, &v)?;
            for s in &out.report.suites {
                println!("{}: {}", s.suite, if s.pass { "PASS" } else { "FAIL" });
            }
            Ok(out.report.all_pass)
        }
        Command::Run(a) => {
            let mut config = RunConfig::load(&a.config)?;
            if let Some(dir) = a.out_dir {
                config.out_dir = Some(dir);
            }
            if threads.is_some() {
                config.threads = threads;
            }
            let out = run(&config)?;
            for s in &out.report.suites {
                println!("{}: {}", s.suite, if s.pass { "PASS" } else { "FAIL" });
            }
            if let Some(dir) = &config.out_dir {
                println!("report: {}", dir.join("report.json").display());
            }
            Ok(out.report.all_pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
