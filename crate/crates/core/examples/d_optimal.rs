//! D-optimal depth weights for a given K and S.
//!
//! `cargo run --example d_optimal -- 9 7`

use pcdesign::{optimize_full, ModelSpec, OptimOptions};

fn main() {
    let args: Vec<usize> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("K and S must be integers"))
        .collect();
    let (k, s) = match args[..] {
        [k, s] => (k, s),
        [k] => (k, k),
        _ => (8, 8),
    };
    let spec = ModelSpec::new(k, s).unwrap_or_else(|e| {
        eprintln!("{e}");
        std::process::exit(2);
    });
    let result = optimize_full(spec, OptimOptions::default()).expect("optimizer converges");
    println!("{spec} p={}", spec.p());
    for d in &result.support {
        let exact = result
            .exact_weights
            .as_ref()
            .and_then(|w| w.iter().find(|(e, _)| e == d))
            .map(|(_, f)| f.to_string())
            .unwrap_or_default();
        println!("  d={d}: {:.6} {exact}", result.design.weight(*d));
    }
    println!(
        "log det = {:.8}, KW excess = {:.2e}",
        result.log_det, result.kw_excess
    );
    println!("{}", result.certificate.table());
}
