use std::time::Instant;
use whitneydim::boundary::{
    boundary_length_profile, geometric_schedule, spherical_dims,
};
use whitneydim::dimension::{
    assouad_dims, box_counts, minkowski_dims_box, minkowski_dims_whitney, AssouadOptions,
    FitOptions,
};
use whitneydim::field::DistanceField;
use whitneydim::setgen::{embed_in_plane, named_set, thick_cantor_generate, ThickCantorParams};
use whitneydim::verify::{length_envelope_check, regular_law_check};
use whitneydim::whitney::{generation_counts, whitney_counts_only};

fn main() -> whitneydim::Result<()> {
    let which = std::env::args().nth(1).unwrap_or_default();

    if which == "carpet4" {
        let t0 = Instant::now();
        let e = named_set("carpet", Some(6))?.normalize();
        let (bu, bl) = minkowski_dims_box(&e, &FitOptions { window: Some((9, 11)), ..FitOptions::default() })?;
        println!("box (9,11): [{:.4}, {:.4}] ({:.1?})", bl.value, bu.value, t0.elapsed());
        let t = Instant::now();
        let wd = minkowski_dims_whitney(&e, Some(14), &FitOptions { window: Some((10, 13)), step: 3, ..FitOptions::default() })?;
        println!(
            "whitney (10,13) s3: slope {:.4} [{:.4}, {:.4}] ({:.1?})",
            wd.slope.value, wd.lower.value, wd.upper.value, t.elapsed()
        );
        let t = Instant::now();
        let (au, al) = assouad_dims(&e, &AssouadOptions { gap_range: (3, 8), ..AssouadOptions::default() })?;
        println!("assouad g(3,8): [{:.4}, {:.4}] ({:.1?})", al.value, au.value, t.elapsed());
        let t = Instant::now();
        let field = DistanceField::build(&e, 11)?;
        let sched = geometric_schedule(0.0625, std::f64::consts::FRAC_1_SQRT_2, 11)?;
        let profile = boundary_length_profile(&e, &field, &sched)?;
        let sd = spherical_dims(&profile, &wd.counts, 2, &FitOptions { window: Some((10, 13)), step: 3, ..FitOptions::default() })?;
        println!(
            "spherical: contour [{:.4}, {:.4}] slope {:.4} whitney [{:.4}, {:.4}] disc {:.3} ({:.1?})",
            sd.contour_lower.value, sd.contour_upper.value, sd.contour_slope,
            sd.whitney_lower.value, sd.whitney_upper.value, sd.discrepancy, t.elapsed()
        );
        let t = Instant::now();
        let rep = regular_law_check(&e, &field, (8f64).log2() / (3f64).log2(), &sched, 10.0)?;
        println!(
            "regular grid11: rows {} band [{:.4}, {:.4}] ratio {:.3} pass {} ({:.1?})",
            rep.rows.len(), rep.band.0, rep.band.1, rep.ratio, rep.pass, t.elapsed()
        );
        let t = Instant::now();
        let field12 = DistanceField::build(&e, 12)?;
        let rep = regular_law_check(&e, &field12, (8f64).log2() / (3f64).log2(), &sched, 10.0)?;
        println!(
            "regular grid12: rows {} band [{:.4}, {:.4}] ratio {:.3} pass {} ({:.1?})",
            rep.rows.len(), rep.band.0, rep.band.1, rep.ratio, rep.pass, t.elapsed()
        );
        println!("criterion-4 total {:.1?}", t0.elapsed());
    }

    if which == "c3x3" {
        let e = named_set("cantor3x3", Some(6))?.normalize();
        let t = Instant::now();
        let bc = box_counts(&e, 0, 12)?;
        println!("box: {:?} ({:.1?})", bc.counts, t.elapsed());
        let t = Instant::now();
        let w = whitney_counts_only(&e, 13)?;
        let wc = generation_counts(&w, None)?;
        println!("whitney k13: {:?} ({:.1?})", wc.counts, t.elapsed());
    }

    if which == "carpet7" {
        let e = named_set("carpet", Some(7))?.normalize();
        let t = Instant::now();
        let bc = box_counts(&e, 0, 12)?;
        println!("box: {:?} ({:.1?})", bc.counts, t.elapsed());
        let t = Instant::now();
        let w = whitney_counts_only(&e, 15)?;
        let wc = generation_counts(&w, None)?;
        println!("whitney k15: {:?} ({:.1?})", wc.counts, t.elapsed());
    }

    if which == "thick6" {
        let params = ThickCantorParams::parse("J=2,n=2;6,s=2;1.5")?;
        let inst = thick_cantor_generate(&params)?;
        let e = inst.set.normalize();
        let t = Instant::now();
        let bc = box_counts(&e, 0, 11)?;
        println!("thick box counts: {:?} ({:.1?})", bc.counts, t.elapsed());
        let (bu, bl) = minkowski_dims_box(&e, &FitOptions::default())?;
        println!("thick box: [{:.4}, {:.4}] ({:.1?})", bl.value, bu.value, t.elapsed());
        let t = Instant::now();
        let wd = minkowski_dims_whitney(&e, None, &FitOptions::default())?;
        println!(
            "thick whitney: slope {:.4} [{:.4}, {:.4}] counts {:?} ({:.1?})",
            wd.slope.value, wd.lower.value, wd.upper.value, wd.counts.counts, t.elapsed()
        );
    }

    if which == "envelope" {
        let thick = {
            let params = ThickCantorParams::parse("J=2,n=2;2,s=2;1.5")?;
            thick_cantor_generate(&params)?.set
        };
        let cases: Vec<(&str, whitneydim::BoxSet)> = vec![
            ("point", named_set("point", None)?),
            ("segment", named_set("segment", None)?),
            ("carpet4", named_set("carpet", Some(4))?),
            ("cantor3x3", named_set("cantor3x3", Some(4))?),
            ("cantor3emb", embed_in_plane(&named_set("cantor3", Some(8))?)?),
            ("thick", thick),
        ];
        let sched = geometric_schedule(0.25, std::f64::consts::FRAC_1_SQRT_2, 16)?;
        for (name, raw) in cases {
            let e = raw.normalize();
            let t = Instant::now();
            let field = DistanceField::build(&e, 11)?;
            let rep = length_envelope_check(&e, &field, &sched, &[2.0, 3.0, 4.0], 8.0)?;
            println!(
                "{name}: small rows {} c2 {:.4} c1 {:.4} pass {} ({:.1?})",
                rep.small_rows.len(), rep.c2_hat, rep.c1_hat, rep.pass, t.elapsed()
            );
        }
    }

    if which == "seg2" {
        let t0 = Instant::now();
        let e = named_set("segment", None)?.normalize();
        let (bu, bl) = minkowski_dims_box(&e, &FitOptions { window: Some((10, 14)), ..FitOptions::default() })?;
        println!("box (10,14): [{:.4}, {:.4}]", bl.value, bu.value);
        let wd = minkowski_dims_whitney(&e, Some(16), &FitOptions { window: Some((13, 15)), step: 5, ..FitOptions::default() })?;
        println!("whitney (13,15) s5: slope {:.4} [{:.4}, {:.4}]", wd.slope.value, wd.lower.value, wd.upper.value);
        let (au, al) = assouad_dims(&e, &AssouadOptions { gap_range: (4, 10), ..AssouadOptions::default() })?;
        println!("assouad g(4,10): [{:.4}, {:.4}]", al.value, au.value);
        let field = DistanceField::build(&e, 11)?;
        let sched = geometric_schedule(0.0625, std::f64::consts::FRAC_1_SQRT_2, 11)?;
        let profile = boundary_length_profile(&e, &field, &sched)?;
        let sd = spherical_dims(&profile, &wd.counts, 2, &FitOptions { window: Some((13, 15)), step: 5, ..FitOptions::default() })?;
        println!(
            "spherical: contour [{:.4}, {:.4}] slope {:.4} whitney [{:.4}, {:.4}]",
            sd.contour_lower.value, sd.contour_upper.value, sd.contour_slope,
            sd.whitney_lower.value, sd.whitney_upper.value
        );
        let row = profile.iter().find(|p| (p.r - 0.0625).abs() < 1e-12).unwrap();
        let want = 2.0 * 0.5 + 2.0 * std::f64::consts::PI * row.r;
        println!("stadium at r={}: {:.6} vs {:.6} rel {:.2e}", row.r, row.length, want, (row.length - want).abs() / want);
        println!("criterion-2 total {:.1?}", t0.elapsed());
    }

    if which == "seg5" {
        use whitneydim::verify::{sandwich_check, SandwichOptions};
        let e = named_set("segment", None)?.normalize();
        let field = DistanceField::build(&e, 11)?;
        let opts = SandwichOptions { search: true, ..SandwichOptions::default() };
        let rep = sandwich_check(&e, &field, &opts)?;
        println!(
            "segment auto: rows {} all_pos {} c {:.4} C {:.4} spread {:.3} shift {:+} pass {}",
            rep.rows.len(),
            rep.rows.iter().all(|r| r.lower_ratio > 0.0),
            rep.lower_constant, rep.upper_constant, rep.spread, rep.shift, rep.pass
        );
        let t = Instant::now();
        let field12 = DistanceField::build(&e, 12)?;
        let sched = geometric_schedule(0.0625, std::f64::consts::FRAC_1_SQRT_2, 13)?;
        let profile = boundary_length_profile(&e, &field12, &sched)?;
        let wd = minkowski_dims_whitney(&e, Some(16), &FitOptions { window: Some((13, 15)), step: 5, ..FitOptions::default() })?;
        let sd = spherical_dims(&profile, &wd.counts, 2, &FitOptions { window: Some((13, 15)), step: 5, ..FitOptions::default() })?;
        println!(
            "segment grid12: contour [{:.4}, {:.4}] slope {:.4} ({:.1?})",
            sd.contour_lower.value, sd.contour_upper.value, sd.contour_slope, t.elapsed()
        );
    }

    if which == "point1" {
        let t0 = Instant::now();
        let e = named_set("point", None)?.normalize();
        let (bu, bl) = minkowski_dims_box(&e, &FitOptions::default())?;
        let wd = minkowski_dims_whitney(&e, Some(12), &FitOptions::default())?;
        let (au, al) = assouad_dims(&e, &AssouadOptions::default())?;
        let field = DistanceField::build(&e, 11)?;
        let sched = geometric_schedule(0.25, std::f64::consts::FRAC_1_SQRT_2, 12)?;
        let profile = boundary_length_profile(&e, &field, &sched)?;
        let sd = spherical_dims(&profile, &wd.counts, 2, &FitOptions::default())?;
        let row = profile.iter().find(|p| (p.r - 0.0625).abs() < 1e-12).unwrap();
        let want = 2.0 * std::f64::consts::PI * row.r;
        println!(
            "box [{:.4},{:.4}] whitney [{:.4},{:.4}] assouad [{:.4},{:.4}] spherical c[{:.4},{:.4}] w[{:.4},{:.4}]",
            bl.value, bu.value, wd.lower.value, wd.upper.value, al.value, au.value,
            sd.contour_lower.value, sd.contour_upper.value, sd.whitney_lower.value, sd.whitney_upper.value
        );
        println!(
            "circle at r={}: {:.6} vs {:.6} rel {:.2e}; total {:.1?}",
            row.r, row.length, want, (row.length - want).abs() / want, t0.elapsed()
        );
    }

    Ok(())
}
