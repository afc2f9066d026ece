//! Walks the depth orbits of a small pair space and shows a few members.

use pcdesign::{count_pairs, difference_vector, enumerate_orbit, ModelSpec};

fn main() {
    let spec = ModelSpec::new(5, 4).unwrap();
    let space = spec.space();
    for d in 0..=spec.s() {
        let n = count_pairs(&space, d).unwrap();
        let first: Vec<String> = enumerate_orbit(&space, d)
            .unwrap()
            .take(2)
            .map(|p| p.to_string())
            .collect();
        println!("d={d}  N_d={n:<5} first pairs: {}", first.join("  "));
    }

    let pair = enumerate_orbit(&space, 2).unwrap().next().unwrap();
    let delta = difference_vector(&pair, &spec).unwrap();
    let nonzero = delta.iter().filter(|v| **v != 0).count();
    println!(
        "\n{pair}: {nonzero} of {} regression terms differ",
        spec.p()
    );
}
