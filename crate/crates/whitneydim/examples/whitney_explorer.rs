//! A guided tour of the Whitney decomposition itself: which dyadic cubes
//! get selected, why the selection tiles the complement exactly, and how
//! the per-generation counts encode dimension. A cube Q is selected when
//! dist(Q, E) ≥ diam(Q) and its parent was not selected, so selected cubes
//! satisfy diam(Q) ≤ dist(Q, E) ≤ 4·diam(Q) + diam(parent overshoot): they
//! scale with their distance to the set, which is the Whitney property.
//!
//! Run with: cargo run --release --example whitney_explorer

use whitneydim::setgen::named_set;
use whitneydim::whitney::{generation_counts, whitney_decompose};
use whitneydim::geom::Ball;

fn main() -> whitneydim::Result<()> {
    let e = named_set("carpet", Some(4))?.normalize();
    let w = whitney_decompose(&e, 10)?;

    println!(
        "carpet depth 4: {} cubes selected down to level {}, {} residual cells",
        w.total_selected(),
        w.k_max,
        w.residual_cells
    );

    // The tiling identity: selected volume + residual volume + set volume
    // (in closed dyadic units) must equal the whole square, exactly, in
    // integer arithmetic. No floating point is involved in selection.
    println!("exact tiling identity: {}", w.coverage_identity());
    println!("residual volume: {:.3e} (halves with each extra level)", w.residual_volume());

    let counts = generation_counts(&w, None)?;
    println!("\n k | W_k    | log2 ratio");
    let mut prev: Option<u64> = None;
    for (k, n) in counts.window() {
        match prev {
            Some(p) if p > 0 && n > 0 => println!(
                "{k:>2} | {n:>6} | {:+.3}",
                (n as f64 / p as f64).log2()
            ),
            _ => println!("{k:>2} | {n:>6} |"),
        }
        prev = Some(n);
    }
    println!("(the ratios approach log2 8/3 trisection growth ≈ 1.893 as k grows)");

    // Every selected cube is distance-proportional. Verify the defining
    // inequalities on the actual cube list.
    let mut min_ratio = f64::INFINITY;
    let mut max_ratio: f64 = 0.0;
    for c in &w.cubes {
        let ratio = c.dist / (c.cube.side() * 2f64.sqrt());
        min_ratio = min_ratio.min(ratio);
        max_ratio = max_ratio.max(ratio);
    }
    println!(
        "\ndist(Q,E) / diam(Q) over all {} cubes: [{:.4}, {:.4}] (≥ 1 by selection)",
        w.cubes.len(),
        min_ratio,
        max_ratio
    );
    assert!(min_ratio >= 1.0);

    // Counts can also be taken inside a metric ball, the localized form
    // used by two-scale (Assouad-style) estimates.
    let ball = Ball { center: [0.5, 0.5], radius: 0.25, dim: 2 };
    let local = generation_counts(&w, Some(&ball))?;
    println!(
        "cubes meeting B(({:.1}, {:.1}), {:.2}): {} of {}",
        ball.center[0],
        ball.center[1],
        ball.radius,
        local.total(),
        counts.total()
    );
    Ok(())
}
