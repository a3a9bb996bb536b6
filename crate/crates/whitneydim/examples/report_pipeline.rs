//! Configured runs: a RunConfig names a set and a list of check suites;
//! run() executes them in a fixed order and produces a report whose
//! serialized form is byte-identical across repeated runs and across
//! thread counts. Timings are kept out of the canonical report in a
//! sidecar, which is what makes that guarantee possible.
//!
//! Run with: cargo run --release --example report_pipeline

use whitneydim::report::{run, RunConfig};

fn main() -> whitneydim::Result<()> {
    let dir = std::env::temp_dir().join("whitneydim_report_example");
    std::fs::create_dir_all(&dir)?;

    let config = RunConfig {
        set: "carpet".into(),
        depth: Some(4),
        suites: vec!["whitney".into(), "dims".into(), "boundary".into(), "sandwich".into()],
        k_max: 10,
        grid: 10,
        sandwich_range: Some((4, 5)),
        schedule: "geo:0.125,0.7071067811865476,8".into(),
        out_dir: Some(dir.clone()),
        ..RunConfig::default()
    };

    let out = run(&config)?;
    for s in &out.report.suites {
        println!("{:>9}: {}", s.suite, if s.pass { "PASS" } else { "FAIL" });
    }
    for t in &out.timings {
        println!("{:>9}: {:.2}s", t.suite, t.seconds);
    }
    println!("artifacts in {}:", dir.display());
    let mut names: Vec<_> = std::fs::read_dir(&dir)?
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    for n in &names {
        println!("  {n}");
    }

    // Determinism: a second identical run must reproduce report.json and
    // the CSVs byte for byte (set.json too). Only timings.json differs.
    let report1 = std::fs::read(dir.join("report.json"))?;
    let counts1 = std::fs::read(dir.join("counts.csv"))?;
    let out2 = run(&config)?;
    assert!(out2.report.all_pass == out.report.all_pass);
    let report2 = std::fs::read(dir.join("report.json"))?;
    let counts2 = std::fs::read(dir.join("counts.csv"))?;
    assert_eq!(report1, report2, "report must be byte-stable");
    assert_eq!(counts1, counts2, "counts must be byte-stable");
    println!("re-run produced byte-identical report.json and counts.csv");

    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
