use serde_json::Value;

use asram_wasm::{check, formula, tower_demo, BROWSER_TOWER_CAP};

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn tower_demo_reports_a_correct_run() {
    let v = parse(tower_demo(2, 1));
    assert_eq!(v["output"], "65536");
    assert_eq!(v["correct"], true);
    assert_eq!(v["steps"], 12);
    assert_eq!(v["trace"].as_array().unwrap().len(), 12);
    assert_eq!(v["plan"], serde_json::json!([18, 73]));
    let v = parse(tower_demo(3, 2));
    assert_eq!(v["correct"], true);
    assert_eq!(v["draw_bits"], serde_json::json!([517, 8259, 33035]));
}

#[test]
fn tower_demo_refuses_beyond_the_browser_cap() {
    let v = parse(tower_demo(BROWSER_TOWER_CAP as u32 + 1, 1));
    assert!(v["error"].as_str().unwrap().contains("cap"));
}

#[test]
fn check_verdicts() {
    let mod4 = ".profile ARITH\nALN r1\nMOD r0, r1, 4\nHALT\n";
    let v = parse(check(mod4, "0", "jitter:j=0|1|2|3", "1,2,3,4,5,6"));
    assert_eq!(v["verdict"], "unstable");
    let v = parse(check(".profile ARITH\nSET r0, 5\nHALT", "0", "pow2", "1,2,3"));
    assert_eq!(v["verdict"], "stabilized");
    assert_eq!(v["value"], "5");
    let v = parse(check(mod4, "0", "plan:@x.plan", "1,2"));
    assert!(v["error"].as_str().unwrap().contains("no file access"));
    let v = parse(check(".profile ARITH\nSHL r0, r0, 1\nHALT", "0", "pow2", "1,2"));
    assert!(v["error"].is_string());
}

#[test]
fn formula_verdicts() {
    let v = parse(formula("EXISTS a . a*a = inp", "49"));
    assert_eq!(v["truth"], true);
    let v = parse(formula("EXISTS a . a*a = inp", "50"));
    assert_eq!(v["truth"], false);
    let v = parse(formula("EXISTS a . b = 1", "0"));
    assert!(v["error"].as_str().unwrap().contains("column 12"));
}
