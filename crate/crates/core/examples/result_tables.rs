//! Regenerates the three result tables and compares them with the printed
//! values.

use pcdesign::tables;

fn main() {
    let t1 = tables::table1().unwrap();
    print!("{}", tables::format_table1(&t1));
    report(tables::check_table1(&t1));

    let t2 = tables::table2().unwrap();
    print!("\n{}", tables::format_table2(&t2));
    report(tables::check_table2(&t2));

    let t3 = tables::table3().unwrap();
    print!("\n{}", tables::format_table3(&t3));
    report(tables::check_table3(&t3));
}

fn report(issues: Vec<String>) {
    if issues.is_empty() {
        println!("matches the printed values");
    }
    for issue in issues {
        println!("mismatch: {issue}");
    }
}
