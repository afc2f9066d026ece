//! Parameter block sizes for a range of attribute counts.

use pcdesign::param_dims;

fn main() {
    println!(
        "{:>3} {:>4} {:>5} {:>6} {:>6} {:>6}",
        "K", "p1", "p2", "p3", "p4", "p"
    );
    for k in 4..=12 {
        let d = param_dims(k).expect("K >= 4");
        println!(
            "{k:>3} {:>4} {:>5} {:>6} {:>6} {:>6}",
            d.p1, d.p2, d.p3, d.p4, d.p
        );
    }
}
