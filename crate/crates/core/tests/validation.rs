use sentinel::wat::{assemble, parse_wat, validate_module, Rule, MAX_PAGES};

fn rules(text: &str) -> Vec<Rule> {
    validate_module(&parse_wat(text).unwrap())
        .violations
        .iter()
        .map(|v| v.rule)
        .collect()
}

#[test]
fn memory_maximum_boundary() {
    assert_eq!(MAX_PAGES, 65536);
    assert!(rules("(module (memory 1 65535))").is_empty());
    assert!(rules("(module (memory 1 65536))").is_empty());
    assert_eq!(rules("(module (memory 1 65537))"), vec![Rule::MemMaxExceeded]);
    assert_eq!(rules("(module (memory 1 4294967295))"), vec![Rule::MemMaxExceeded]);
    assert_eq!(
        rules(r#"(module (import "env" "m" (memory 1 65537)))"#),
        vec![Rule::MemMaxExceeded]
    );
}

#[test]
fn boundary_agrees_with_wasmparser() {
    for max in [65535u32, 65536, 65537, 70000] {
        let text = format!("(module (memory 1 {max}))");
        let ours = validate_module(&parse_wat(&text).unwrap()).is_valid();
        let theirs = wasmparser::Validator::new()
            .validate_all(&assemble(&text).unwrap())
            .is_ok();
        assert_eq!(ours, theirs, "max {max}");
        assert_eq!(ours, max <= 65536, "max {max}");
    }
}

#[test]
fn rule_codes_are_stable() {
    let report = validate_module(&parse_wat("(module (memory 1 65537))").unwrap());
    let json = serde_json::to_string(&report).unwrap();
    assert!(json.contains("MEM_MAX_EXCEEDED"), "{json}");
}
