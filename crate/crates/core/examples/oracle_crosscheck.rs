//! Brute-force check: summing (f(i)-f(j))(f(i)-f(j))ᵀ over an orbit gives a
//! diagonal matrix carrying the closed-form block values.

use pcdesign::{h_values, orbit_gram, ModelSpec};

fn main() {
    let spec = ModelSpec::new(5, 5).unwrap();
    let [p1, p2, p3, _] = spec.dims().blocks();
    let firsts = [0, p1, p1 + p2, p1 + p2 + p3];
    for d in 1..=spec.s() {
        let gram = orbit_gram(&spec, d).unwrap();
        let closed = h_values(&spec, d).unwrap();
        let mut off_diagonal = 0i64;
        for r in 0..spec.p() {
            for c in 0..spec.p() {
                if r != c {
                    off_diagonal = off_diagonal.max(gram.sum(r, c).abs());
                }
            }
        }
        let agree = firsts
            .iter()
            .zip(closed.h())
            .all(|(&i, h)| gram.entry(i, i) == *h);
        println!(
            "d={d}: {} pairs, max |off-diagonal| = {off_diagonal}, diagonal matches closed form: {agree}",
            gram.count()
        );
    }
}
