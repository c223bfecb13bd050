use cga_core::realizations::ParamValue;
use cga_core::report::{Document, Status};
use cga_core::verify::{l1_suite, verify_similarity, Picture};

#[test]
fn suite_round_trips_through_json() {
    let mut sections = l1_suite(Picture::Free, &ParamValue::Symbolic, &ParamValue::Symbolic, true).unwrap();
    sections.push(verify_similarity().unwrap());
    let doc = Document::new("all", sections);
    assert!(doc.passed);
    let json = doc.to_json();
    assert_eq!(Document::from_json(&json).unwrap(), doc);
    assert_eq!(doc.to_json(), json);

    let table = &doc.sections[0];
    assert_eq!(table.calibration.get("z0").map(String::as_str), Some("-2"));
    assert_eq!(table.count(Status::ExactAfterCalibration), 1);
    let md = doc.to_markdown();
    assert!(md.starts_with("# all report: passed"));
    assert!(md.contains("constant-shift"));
}

#[test]
fn uncalibrated_free_fails_once() {
    let sections = l1_suite(Picture::Free, &ParamValue::int(3), &ParamValue::int(-2), false).unwrap();
    let doc = Document::new("verify", sections);
    assert!(!doc.passed);
    // the table fails only on [z+, z-]; the unshifted z0 then spoils the triplet
    let lhs = |k: usize| -> Vec<(String, String)> {
        doc.sections[k].failures().map(|r| (r.lhs.clone(), r.residual_text.clone())).collect()
    };
    assert_eq!(lhs(0), vec![("[z+, z-]".to_string(), "-4".to_string())]);
    let onshell: Vec<String> = lhs(1).into_iter().map(|(l, _)| l).collect();
    assert_eq!(onshell, ["[z+, Omega0]", "[z-, Omega0]"]);
    assert_eq!(lhs(2), vec![("[Omega+1, Omega-1]".to_string(), "-4".to_string())]);
}
