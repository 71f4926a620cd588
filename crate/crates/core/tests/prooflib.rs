use qpu::prooflib::{bundled_scripts, bundled_transfers, verify_all, verify_mate_transfer};

#[test]
fn bundled_scripts_verify() {
    let scripts = bundled_scripts();
    let reports = verify_all(&scripts, 1_000_000).unwrap();
    let mut failed = Vec::new();
    for r in &reports {
        println!("{r}");
        if !r.verified() {
            println!("  gaps {:?}", r.coverage_gaps);
            for u in r.unsafe_classes.iter().take(5) {
                println!("  unsafe {u:?}");
            }
            println!("  first prime failures {:?}", &r.prime_failures[..r.prime_failures.len().min(5)]);
            println!("  small {:?}", r.small_prime_mismatches);
            failed.push(r.script.clone());
        }
    }
    assert!(failed.is_empty(), "{failed:?}");
}

#[test]
fn bundled_transfers_hold() {
    for claim in bundled_transfers() {
        let r = verify_mate_transfer(&claim, 10_000).unwrap();
        assert!(r.verified() && r.checked > 0, "{} <- {}: {:?}", r.target, r.mate, r.counterexamples);
    }
}

#[test]
fn single_subtrahend_for_every_residue_fails() {
    // one fixed d = 6 sends p = 5 mod 8 into the excluded class 8t+1
    let text = "script literal\nform 2,2,3,17\ntarget 2,2,3\nmodulus 24\nsubtract 17 1\nbase 613\nexceptions 41\n\
                d 6 otherwise\nsafe exclude 8t+1\nsafe exclude 9^s(9t+6)\n";
    let script = qpu::prooflib::parse_scripts(text).unwrap().remove(0);
    let report = &verify_all(&[script], 100_000).unwrap()[0];
    assert!(!report.verified());
    assert!(!report.unsafe_classes.is_empty());
    assert!(report.unsafe_classes.iter().all(|u| u.residue % 8 == 5), "{:?}", report.unsafe_classes);
    assert!(report.prime_failures.iter().all(|f| f.p % 8 == 5));
    assert!(report.prime_failures.iter().any(|f| f.p > 613));
}
