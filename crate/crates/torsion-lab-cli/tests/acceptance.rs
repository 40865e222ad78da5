//! The acceptance suite: one PASS/FAIL line per criterion, with the
//! tolerances and runtime budgets pinned in `torsion_lab_cli::verify`.

use torsion_lab_cli::verify::{verify_all, VerifyOptions};

#[test]
fn acceptance_criteria() {
    let results = verify_all(&VerifyOptions::default(), |r| {
        println!("{}  [{:.2} s of {} s]", r.line(), r.elapsed.as_secs_f64(), r.budget.as_secs());
    });
    assert_eq!(results.len(), 10);
    let mut ids: Vec<usize> = results.iter().map(|r| r.id).collect();
    ids.sort();
    assert_eq!(ids, (1..=10).collect::<Vec<_>>());
    let failed: Vec<String> = results.iter().filter(|r| !r.passed).map(|r| r.line()).collect();
    assert!(failed.is_empty(), "failing criteria:\n{}", failed.join("\n"));
}

#[test]
fn summary_is_deterministic() {
    let opts = VerifyOptions::default();
    let a: Vec<String> = [3usize, 8, 9].iter().map(|&id| torsion_lab_cli::verify::verify_one(id, &opts).unwrap().line()).collect();
    let b: Vec<String> = [3usize, 8, 9].iter().map(|&id| torsion_lab_cli::verify::verify_one(id, &opts).unwrap().line()).collect();
    assert_eq!(a, b);
}
