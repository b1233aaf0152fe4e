use texsem::diagnostics::{network_cases, op_cases, DEFAULT_SEED, TOLERANCE};

#[test]
fn every_op_matches_finite_differences() {
    for seed in [0, 1] {
        let cases = op_cases(seed).unwrap();
        assert_eq!(cases.len(), 21);
        for c in cases {
            assert!(c.report.checked > 0 && c.report.kinks == 0, "{}: {:?}", c.name, c.report);
            assert!(c.report.max_relative_error <= TOLERANCE, "{}: {:?}", c.name, c.report);
        }
    }
}

#[test]
fn networks_match_finite_differences() {
    for c in network_cases(DEFAULT_SEED).unwrap() {
        assert!(c.report.checked > 0 && c.report.kinks == 0, "{}: {:?}", c.name, c.report);
        assert!(c.report.max_relative_error <= TOLERANCE, "{}: {:?}", c.name, c.report);
    }
}
