//! Boundary profiles measure the length of the level set {dist = r} and
//! the area of {dist < r} across a geometric radius schedule. The decay
//! exponent of the length identifies the dimension of the underlying set:
//! length(r) ~ r^{d-1-s} for an s-dimensional set in dimension d, so a
//! point gives slope 1, a segment slope 0, and the carpet slope
//! 1 - log8/log3 ≈ -0.8928.
//!
//! Run with: cargo run --release --example boundary_profiles

use whitneydim::boundary::{
    boundary_length_profile, geometric_schedule, spherical_dims,
};
use whitneydim::dimension::FitOptions;
use whitneydim::field::DistanceField;
use whitneydim::setgen::named_set;
use whitneydim::whitney::{generation_counts, whitney_counts_only};

fn main() -> whitneydim::Result<()> {
    // Per-set slope tolerances: the point and segment profiles are exact
    // power laws at these radii. The carpet is not: radii 2^-8..2^-3 only
    // reach the first four hole generations and the surrounding square
    // contributes a constant length 2, so the measured slope (about -0.61
    // here) still sits well above the asymptotic -0.8928 and converges only
    // as r drops below the finest holes.
    let sched = geometric_schedule(0.125, std::f64::consts::FRAC_1_SQRT_2, 10)?;
    for (name, depth, expected_s, tol) in [
        ("point", None, 0.0, 0.05),
        ("segment", None, 1.0, 0.05),
        ("carpet", Some(5), 8f64.log2() / 3f64.log2(), 0.35),
    ] {
        let e = named_set(name, depth)?.normalize();
        let field = DistanceField::build(&e, 11)?;
        let rows = boundary_length_profile(&e, &field, &sched)?;
        println!("{name}: {} profile rows, r from {:.4} down to {:.4}",
            rows.len(), rows.first().unwrap().r, rows.last().unwrap().r);
        for row in rows.iter().step_by(3) {
            println!(
                "  r = {:.5}: length {:.5}, area {:.6}",
                row.r, row.length, row.volume
            );
        }

        // Two independent reads of the same exponent: secant slopes of the
        // contour profile, and Whitney generation counts. Their agreement
        // is the content of the spherical-dimension comparison.
        let w = whitney_counts_only(&e, 12)?;
        let counts = generation_counts(&w, None)?;
        let sd = spherical_dims(&rows, &counts, 2, &FitOptions::default())?;
        println!(
            "  contour slope {:+.4} -> s in [{:.4}, {:.4}]; whitney s in [{:.4}, {:.4}]",
            sd.contour_slope,
            sd.contour_lower.value,
            sd.contour_upper.value,
            sd.whitney_lower.value,
            sd.whitney_upper.value
        );
        println!("  expected s = {expected_s:.4}\n");
        assert!((sd.contour_slope - (1.0 - expected_s)).abs() <= tol);
    }
    Ok(())
}
