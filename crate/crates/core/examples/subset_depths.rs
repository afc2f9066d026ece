//! Best depths when only one parameter block is of interest.

use pcdesign::{
    optimal_depth_first_order, optimal_depth_main, optimal_depth_second_order,
    optimal_depth_third_order, PairSpace,
};

fn main() {
    println!(
        "{:>3} {:>8} {:>8} {:>8} {:>8}",
        "S", "main", "2-way", "3-way", "4-way"
    );
    for s in 4..=12 {
        let space = PairSpace::new(s, s).unwrap();
        let show = |set: std::collections::BTreeSet<usize>| {
            set.iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        println!(
            "{s:>3} {:>8} {:>8} {:>8} {:>8}",
            show(optimal_depth_main(&space)),
            show(optimal_depth_first_order(&space)),
            show(optimal_depth_second_order(&space).unwrap()),
            show(optimal_depth_third_order(&space).unwrap()),
        );
    }
}
