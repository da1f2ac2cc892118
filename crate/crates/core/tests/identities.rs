mod common;

#[test]
fn closed_forms_match_direct_evaluation() {
    for (name, tally) in common::identity_suite(400, 11) {
        assert_eq!(tally.violations, 0, "{name}: {tally:?}");
    }
}
