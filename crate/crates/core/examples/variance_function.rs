//! Variance function of single-depth designs and of a mixture, with a
//! Kiefer-Wolfowitz certificate.

use pcdesign::{kw_certify, variance_uniform, DepthDesign, ModelSpec, DEFAULT_KW_TOL};

fn main() {
    let spec = ModelSpec::new(7, 7).unwrap();
    println!("V(d, ξ_d') / p for the uniform design on one depth d'");
    for dp in 1..spec.s() {
        let row: Vec<String> = (1..=spec.s())
            .map(|d| match variance_uniform(d, dp, &spec) {
                Ok(v) => format!("{:7.3}", v / spec.p() as f64),
                Err(_) => "      -".to_string(),
            })
            .collect();
        println!("d'={dp}: {}", row.join(""));
    }

    let design = DepthDesign::new(spec, &[(2, 0.75), (6, 0.25)]).unwrap();
    let cert = kw_certify(&design, DEFAULT_KW_TOL).unwrap();
    println!("\n{}\nverdict: {}", cert.table(), cert.verdict);
}
