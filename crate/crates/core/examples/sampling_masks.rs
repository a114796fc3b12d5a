//! Variable-density Cartesian masks and the per-epoch Λ/Υ splits.
//!
//! ```text
//! cargo run --release --example sampling_masks -- 4
//! ```

use csmri::sampling::{generate_cartesian_mask, split_subsets, split_subsets_with_mode, MaskSpec, SplitMode};
use csmri::Result;

fn main() -> Result<()> {
    let reduction: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4.0);
    let spec = MaskSpec::new(128, 128, reduction, 7);
    let omega = generate_cartesian_mask(&spec)?;
    let row: String = (0..128).map(|c| if omega.is_sampled(0, c) { '|' } else { '.' }).collect();
    println!("R = {reduction}: {} lines\n{row}", spec.line_count());

    let pair = split_subsets(&omega, 0.5, spec.acs_size, 0)?;
    println!(
        "pointwise split: |Ω| = {}, |Λ| = {}, |Υ| = {}, shared = {}",
        omega.count(),
        pair.lambda.count(),
        pair.upsilon.count(),
        pair.lambda.intersection_count(&pair.upsilon)
    );
    let lines = split_subsets_with_mode(&omega, 0.5, spec.acs_size, 0, SplitMode::Linewise)?;
    println!("linewise split: |Λ| = {}, |Υ| = {}", lines.lambda.count(), lines.upsilon.count());

    for epoch in 0..3 {
        let p = split_subsets(&omega, 0.5, spec.acs_size, epoch)?;
        println!("epoch {epoch}: Λ ∩ previous-epoch-0 Λ = {}", p.lambda.intersection_count(&pair.lambda));
    }
    Ok(())
}
