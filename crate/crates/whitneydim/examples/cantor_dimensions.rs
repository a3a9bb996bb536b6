//! The middle-thirds Cantor set has dimension log 2 / log 3 = 0.630929...
//! This example estimates it three ways on a depth-8 prefractal (6561
//! subintervals of length 3^-8), then embeds the set in the plane and
//! checks the r-neighborhood power law with the same exponent.
//!
//! Run with: cargo run --release --example cantor_dimensions

use whitneydim::boundary::geometric_schedule;
use whitneydim::dimension::{
    assouad_dims, minkowski_dims_box, minkowski_dims_whitney, AssouadOptions, FitOptions,
};
use whitneydim::field::DistanceField;
use whitneydim::setgen::{embed_in_plane, named_set};
use whitneydim::verify::regular_law_check;

fn main() -> whitneydim::Result<()> {
    let s = 2f64.log2() / 3f64.log2();
    let e = named_set("cantor3", Some(8))?.normalize();
    println!("middle-thirds Cantor set, depth 8: {} intervals", e.len());
    println!("target dimension log2/log3 = {s:.6}");

    let fit = FitOptions::default();
    let (bu, bl) = minkowski_dims_box(&e, &fit)?;
    println!("box:     [{:.4}, {:.4}]", bl.value, bu.value);

    // The Whitney route counts complement cubes instead of covering cells;
    // for a compact set with zero measure the two exponents agree. Ternary
    // gaps open at scale steps of log2(3) ≈ 1.585 dyadic levels, so cube
    // counts climb a staircase with that period and short secants wobble
    // between 0.5 and 0.75. A step of 8 levels spans ~5 full periods
    // (8/log2(3) = 5.047), cancelling the wobble.
    let wd = minkowski_dims_whitney(
        &e,
        Some(14),
        &FitOptions { window: Some((9, 11)), step: 8, ..FitOptions::default() },
    )?;
    println!(
        "whitney: [{:.4}, {:.4}] (slope {:.4}, zero area: {})",
        wd.lower.value, wd.upper.value, wd.slope.value, wd.zero_area
    );
    assert!((wd.upper.value - s).abs() <= 0.05);
    assert!((wd.lower.value - s).abs() <= 0.05);

    // Assouad sees the worst local scaling; for a self-similar set it
    // coincides with the global dimension. The tolerance is looser because
    // two-scale counts at desk depth carry lacunarity wobble.
    let (au, al) = assouad_dims(&e, &AssouadOptions::default())?;
    println!("assouad: [{:.4}, {:.4}]", al.value, au.value);
    assert!((au.value - s).abs() <= 0.1 && (al.value - s).abs() <= 0.1);

    // Place the line set on the horizontal midline of the square and
    // measure its neighborhood boundary: length(r) ~ r^{1-s} in the plane,
    // so length(r) · r^{s-1} should stay within a constant band.
    let planar = embed_in_plane(&named_set("cantor3", Some(6))?)?.normalize();
    let field = DistanceField::build(&planar, 11)?;
    let sched = geometric_schedule(0.0625, 0.5, 5)?;
    let law = regular_law_check(&planar, &field, s, &sched, 10.0)?;
    println!(
        "planar power law at s = {s:.4}: band [{:.4}, {:.4}], ratio {:.3}, pass: {}",
        law.band.0, law.band.1, law.ratio, law.pass
    );
    assert!(law.pass);
    Ok(())
}
