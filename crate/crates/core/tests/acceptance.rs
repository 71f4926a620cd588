//! One line per acceptance criterion. Every check runs to completion before
//! the verdict so a red criterion does not hide the others.

use qpu::audit;

#[test]
fn acceptance() {
    let mut failed = Vec::new();
    for check in audit::ALL {
        let t = std::time::Instant::now();
        let outcome = check();
        println!("{outcome}  ({:.1?})", t.elapsed());
        if !outcome.passed {
            failed.push(outcome.number);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
