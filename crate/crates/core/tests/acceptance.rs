use kmpflow::acceptance::{run_with, AcceptanceConfig, CRITERIA, KNOWN_FAILURES};

#[test]
fn acceptance_criteria() {
    let cfg = AcceptanceConfig::default();
    let results = run_with(&cfg, |r| println!("{}  ({:.1}s)", r.line(), r.seconds));
    assert_eq!(results.len(), CRITERIA.len());
    let passed = results.iter().filter(|r| r.passed).count();
    println!("{passed}/{} criteria passed; known failures {:?}", results.len(), KNOWN_FAILURES);
    for r in &results {
        if KNOWN_FAILURES.contains(&r.id) {
            assert!(!r.passed, "criterion {} now passes; drop it from KNOWN_FAILURES", r.id);
        } else {
            assert!(r.passed, "criterion {} failed: {}", r.id, r.detail);
        }
    }
}
