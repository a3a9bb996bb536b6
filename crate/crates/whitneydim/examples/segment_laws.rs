//! A straight segment is the cleanest 1-dimensional set in the plane: its
//! r-neighborhood is a stadium with exact perimeter 2L + 2πr, its boundary
//! length obeys the power law length(r) ~ r^0 = const, and the local
//! window profile has exponent 1.
//!
//! Run with: cargo run --release --example segment_laws

use whitneydim::boundary::{boundary_length_profile, geometric_schedule};
use whitneydim::dimension::{
    assouad_dims, minkowski_dims_box, minkowski_dims_whitney, AssouadOptions, FitOptions,
};
use whitneydim::field::DistanceField;
use whitneydim::setgen::named_set;
use whitneydim::verify::{local_boundary_profile, regular_law_check};

fn main() -> whitneydim::Result<()> {
    // The catalog segment is [0,1] x {1/2}; normalized it becomes the
    // length-1/2 segment [1/4, 3/4] x {1/2}.
    let e = named_set("segment", None)?.normalize();
    let len = 0.5;

    // Counts at shallow generations still feel the endpoints (the caps add
    // a constant 36 cubes per level), so fit over deep levels where the
    // 2^{k+1} interior term dominates.
    let (bu, bl) = minkowski_dims_box(
        &e,
        &FitOptions { window: Some((10, 14)), ..FitOptions::default() },
    )?;
    let wd = minkowski_dims_whitney(
        &e,
        Some(16),
        &FitOptions { window: Some((13, 15)), step: 5, ..FitOptions::default() },
    )?;
    let (au, al) = assouad_dims(
        &e,
        &AssouadOptions { gap_range: (4, 10), ..AssouadOptions::default() },
    )?;
    println!("box:     [{:.4}, {:.4}]", bl.value, bu.value);
    println!("whitney: [{:.4}, {:.4}]", wd.lower.value, wd.upper.value);
    println!("assouad: [{:.4}, {:.4}]", al.value, au.value);
    for v in [bl.value, bu.value, wd.lower.value, wd.upper.value, al.value, au.value] {
        assert!((v - 1.0).abs() <= 0.05, "segment dimension off: {v}");
    }

    // Stadium perimeter: straight sides 2L plus two half-circle caps 2πr.
    let field = DistanceField::build(&e, 11)?;
    let radii = geometric_schedule(0.1, 0.5, 4)?;
    for row in boundary_length_profile(&e, &field, &radii)? {
        let exact = 2.0 * len + 2.0 * std::f64::consts::PI * row.r;
        println!(
            "r = {:.6}: length {:.6} vs 2L + 2πr = {:.6} (rel err {:.2e})",
            row.r,
            row.length,
            exact,
            (row.length - exact).abs() / exact
        );
    }

    // Power law with the segment's dimension s = 1 in the plane (d = 2):
    // length(r) · r^{s+1-d} = length(r) stays in a narrow band.
    let sched = geometric_schedule(0.125, 0.5, 6)?;
    let law = regular_law_check(&e, &field, 1.0, &sched, 10.0)?;
    println!(
        "power-law band at s=1: [{:.4}, {:.4}], ratio {:.3}",
        law.band.0, law.band.1, law.ratio
    );
    assert!(law.pass && law.ratio < 1.5);

    // A window centered on the segment sees chords of the two parallel
    // boundary lines: clipped length 4·sqrt(R² - r²) ≈ 4R for small r, so
    // the profile exponent is 1.
    let profile = local_boundary_profile(&e, &field, [0.5, 0.5], 0.2, &sched)?;
    println!("local window exponent at the midpoint: {:.4} (straight edge gives 1)", profile.lambda);
    assert!((profile.lambda - 1.0).abs() <= 0.15);
    Ok(())
}
