//! Two regularity properties that separate "thin" fractals from solid
//! shapes. Porosity asks for holes: a set is porous when every ball B(x,r)
//! around the set contains a hole of radius ρ·r in the complement. Uniform
//! perfectness forbids isolated islands: every annulus B(x,r) ∖ B(x,r/C)
//! around a point of the set must meet the set again. The carpet scores on
//! both; the solid square has no holes, and a single point is the extreme
//! non-perfect set.
//!
//! Run with: cargo run --release --example porosity_perfectness

use whitneydim::dimension::{porosity_estimate, uniform_perfectness};
use whitneydim::field::DistanceField;
use whitneydim::rational::rat;
use whitneydim::setgen::named_set;

fn main() -> whitneydim::Result<()> {
    let scales = [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0];
    let radii = [rat(1, 8), rat(1, 16), rat(1, 32)];

    let carpet = named_set("carpet", Some(5))?.normalize();
    let field = DistanceField::build(&carpet, 11)?;
    let p = porosity_estimate(&carpet, &field, &scales)?;
    println!(
        "carpet porosity: ρ = {:.4} over {} centers (worst at ({:.3}, {:.3}), scale {:.4})",
        p.rho, p.sample_centers, p.attained_min_at.0[0], p.attained_min_at.0[1], p.attained_min_at.1
    );
    // Every carpet square of side 3^-k has the deleted middle third of a
    // neighbor within distance ~ its side, so holes of a definite relative
    // size always exist.
    assert!(p.rho > 0.02, "carpet should be porous, got {}", p.rho);

    let square = named_set("square", None)?.normalize();
    let field = DistanceField::build(&square, 11)?;
    let q = porosity_estimate(&square, &field, &scales)?;
    println!("square porosity: ρ = {:.4} (solid sets have none)", q.rho);
    assert!(q.rho < p.rho);

    let perf = uniform_perfectness(&carpet, &radii)?;
    match perf.c_hat {
        Some(c) => println!("carpet uniform perfectness: annuli of ratio {c} never isolate a point"),
        None => println!("carpet: no tested ratio worked"),
    }
    assert!(perf.c_hat.is_some());

    // cantor3 × cantor3 dust is perfect too, but needs a wider annulus:
    // the middle-thirds gap means a point's nearest distinct neighbor can
    // sit 3x closer to one annulus edge than the other.
    let dust = named_set("cantor3x3", Some(5))?.normalize();
    let perf = uniform_perfectness(&dust, &radii)?;
    println!(
        "cantor dust: ratio {:?}, {} witness annuli checked",
        perf.c_hat,
        perf.witnesses.len()
    );

    let point = named_set("point", None)?;
    let perf = uniform_perfectness(&point, &radii)?;
    println!("point: ratio {:?} (a singleton isolates immediately)", perf.c_hat);
    assert!(perf.c_hat.is_none());
    Ok(())
}
