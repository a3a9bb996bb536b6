//! Tube volumes measure dimension from the complement side: the volume of
//! {dist(x, E) < r} inside a window B(z, R) scales like (r/R)^{d-s} when E
//! is s-dimensional, so the fitted exponent is the codimension d - s. For
//! sets whose upper and lower dimensions agree, adding the two-scale
//! (Assouad) upper dimension to the lower codimension recovers the ambient
//! dimension.
//!
//! Run with: cargo run --release --example tube_codimension

use whitneydim::dimension::{
    assouad_dims, codimension_estimates, AssouadOptions, CodimOptions,
};
use whitneydim::field::DistanceField;
use whitneydim::setgen::named_set;

fn main() -> whitneydim::Result<()> {
    for (name, depth, s) in [
        ("point", None, 0.0),
        ("segment", None, 1.0),
        ("carpet", Some(5), 8f64.log2() / 3f64.log2()),
    ] {
        let e = named_set(name, depth)?.normalize();
        let field = DistanceField::build(&e, 11)?;
        let (codim_lower, codim_upper) = codimension_estimates(&e, &field, &CodimOptions::default())?;
        let (assouad_upper, _) = assouad_dims(&e, &AssouadOptions::default())?;
        let identity = assouad_upper.value + codim_lower.value;
        println!(
            "{name:>8}: codim in [{:.4}, {:.4}] (expect {:.4}); assouad_upper + codim_lower = {:.4}",
            codim_lower.value,
            codim_upper.value,
            2.0 - s,
            identity
        );
        // The identity holds to the precision the finite scale range
        // allows; both estimators share the same dyadic windows.
        assert!(
            (identity - 2.0).abs() <= 0.15,
            "{name}: dimension + codimension drifted from the ambient 2"
        );
    }
    Ok(())
}
