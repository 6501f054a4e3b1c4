use pfasst_lfa::verify::*;

#[test]
fn small_scale_checks_pass() {
    let checks = run_verify(Scale::Small, None).unwrap();
    assert_eq!(checks.len(), 10);
    for c in &checks {
        assert!(c.passed, "{c}");
        assert!(c.residual <= c.tolerance);
    }
    assert!(checks[0].to_string().starts_with("ok"));
}

#[test]
fn negated_qdelta_is_caught() {
    let checks = run_verify(Scale::Small, Some(Fault::NegateQDelta)).unwrap();
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    assert!(failed.iter().any(|n| n.contains("block vs full spectrum")), "{failed:?}");
    assert!(failed.iter().any(|n| n.contains("norm")), "{failed:?}");
    // The algorithmic and matrix routes are untouched by the fault.
    assert!(checks.iter().filter(|c| c.name.contains("algorithmic")).all(|c| c.passed));
}

#[test]
fn parsing() {
    assert_eq!("paper".parse::<Scale>().unwrap(), Scale::Paper);
    assert_eq!(Scale::Small.name(), "small");
    assert!("huge".parse::<Scale>().is_err());
    assert_eq!("negate-qdelta".parse::<Fault>().unwrap(), Fault::NegateQDelta);
    assert!("other".parse::<Fault>().is_err());
}
