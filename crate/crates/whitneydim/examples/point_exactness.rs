//! The one-point set is the smallest end-to-end check the pipeline has:
//! every dimension estimate should be 0, the r-neighborhood is a disc whose
//! boundary is a circle of length 2πr, and the Whitney cubes tile the
//! complement exactly.
//!
//! Run with: cargo run --release --example point_exactness

use whitneydim::boundary::{boundary_length_profile, geometric_schedule};
use whitneydim::dimension::{
    assouad_dims, minkowski_dims_box, minkowski_dims_whitney, AssouadOptions, FitOptions,
};
use whitneydim::field::DistanceField;
use whitneydim::setgen::named_set;
use whitneydim::whitney::whitney_counts_only;

fn main() -> whitneydim::Result<()> {
    let e = named_set("point", None)?.normalize();
    println!("set: one point at (1/2, 1/2)");

    // Whitney cubes around a point: every generation k >= 1 has a bounded
    // number of cubes (between 16 and 36 in the plane), so log2 N_k / k -> 0.
    let w = whitney_counts_only(&e, 12)?;
    println!(
        "whitney cubes to level 12: {} selected, tiling identity: {}",
        w.total_selected(),
        w.coverage_identity()
    );
    for (k, n) in w.level_counts.iter().enumerate().skip(4).take(6) {
        println!("  level {k:2}: {n} cubes");
    }

    let fit = FitOptions::default();
    let (bu, bl) = minkowski_dims_box(&e, &fit)?;
    let wd = minkowski_dims_whitney(&e, Some(12), &fit)?;
    let (au, al) = assouad_dims(&e, &AssouadOptions::default())?;
    println!("box dimension:      [{:+.4}, {:+.4}]", bl.value, bu.value);
    println!("whitney dimension:  [{:+.4}, {:+.4}]", wd.lower.value, wd.upper.value);
    println!("assouad dimension:  [{:+.4}, {:+.4}]", al.value, au.value);
    assert!(bu.value.abs() <= 0.05 && au.value.abs() <= 0.05);

    // The r-neighborhood boundary is a circle; at r = 1/8 the contour
    // should measure 2π/8 = 0.785398... to a fraction of a percent on a
    // 2^-11 grid.
    let field = DistanceField::build(&e, 11)?;
    let radii = geometric_schedule(0.125, 0.5, 4)?;
    for row in boundary_length_profile(&e, &field, &radii)? {
        let circle = 2.0 * std::f64::consts::PI * row.r;
        println!(
            "r = {:.6}: contour length {:.6} vs 2πr = {:.6} (rel err {:.2e})",
            row.r,
            row.length,
            circle,
            (row.length - circle).abs() / circle
        );
    }
    Ok(())
}
