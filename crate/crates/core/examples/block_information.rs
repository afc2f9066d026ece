//! Exact block values h_r(d) and the information of a depth mixture.

use pcdesign::{h_values, log_det, mix_h, DepthDesign, ModelSpec};

fn main() {
    let spec = ModelSpec::new(6, 6).unwrap();
    println!(
        "{:>3} {:>10} {:>10} {:>10} {:>10}",
        "d", "h1", "h2", "h3", "h4"
    );
    for d in 0..=spec.s() {
        let h = h_values(&spec, d).unwrap();
        let [h1, h2, h3, h4] = h.h();
        println!("{d:>3} {h1:>10} {h2:>10} {h3:>10} {h4:>10}");
    }

    let design = DepthDesign::new(spec, &[(2, 5.0 / 7.0), (5, 2.0 / 7.0)]).unwrap();
    let info = mix_h(&design);
    println!("\nmixture h = {:?}", info.h());
    println!("log det M = {:.6}", log_det(&info).unwrap());
}
