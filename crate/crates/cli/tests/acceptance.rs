//! Full acceptance matrix: one line per criterion, nonzero exit on failure.
//!
//! Runs without the libtest harness so the lines reach the test log.

use fracdecay::reproduce::{render_rows, reproduce_all, ReproduceOptions, Row};

fn main() {
    let opts = ReproduceOptions { skip_determinism: true, ..Default::default() };
    let first = reproduce_all(&opts);
    let second = reproduce_all(&opts);

    let identical = first.tables.len() == second.tables.len()
        && first.tables.iter().zip(&second.tables).all(|((a, x), (b, y))| a == b && x.render() == y.render());
    let mut rows: Vec<Row> = first.rows.iter().filter(|r| r.id != 12).cloned().collect();
    rows.push(Row {
        id: 12,
        label: "determinism",
        passed: identical,
        detail: format!("{} tables from two complete runs byte-identical: {identical}", first.tables.len()),
        seconds: 0.0,
        budget: None,
    });

    println!();
    for r in &rows {
        let time = r.budget.map_or(String::new(), |b| format!(" [{:.2}s / {b:.0}s]", r.seconds));
        println!("criterion {:>2} {:<36} {}{time}  {}", r.id, r.label, if r.passed { "PASS" } else { "FAIL" }, r.detail);
    }
    let failed: Vec<u32> = rows.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    if !failed.is_empty() {
        eprintln!("\n{}", render_rows(&rows));
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
    println!("acceptance: all {} criteria passed\n", rows.len());
}
