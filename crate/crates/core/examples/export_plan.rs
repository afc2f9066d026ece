//! Expands an optimal depth design into an explicit pair list, writes it as
//! CSV, reads it back and checks the information matrix against the blocks.

use pcdesign::document::{read_plan_csv, write_plan_csv};
use pcdesign::{info_matrix_exact, mix_h, optimize_full, ExplicitDesign, ModelSpec, OptimOptions};

fn main() {
    let spec = ModelSpec::new(5, 4).unwrap();
    let result = optimize_full(spec, OptimOptions::default()).unwrap();
    let weights: Vec<(usize, f64)> = result.design.iter().filter(|(_, w)| *w > 0.0).collect();
    let plan = ExplicitDesign::from_depth_weights(spec, &weights).unwrap();

    let mut csv = Vec::new();
    write_plan_csv(&plan, &mut csv).unwrap();
    println!("{} pairs, {} bytes of CSV", plan.entries().len(), csv.len());
    for line in String::from_utf8_lossy(&csv).lines().take(4) {
        println!("  {line}");
    }

    let back = read_plan_csv(csv.as_slice()).unwrap();
    let dense = info_matrix_exact(&back).unwrap();
    let deviation = (dense.matrix() - mix_h(&result.design).to_dense()).amax();
    println!("max |dense - block| = {deviation:.2e}");
}
