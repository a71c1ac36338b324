use std::ffi::{CStr, CString};
use std::ptr;

use grouprec::aggregation::{aggregate, StrategyKind};
use grouprec::scenario::generate_scenario;
use grouprec_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(gr_last_error()) }.to_string_lossy().into_owned()
}

fn take(s: *mut std::ffi::c_char) -> String {
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_string();
    unsafe { gr_string_free(s) };
    out
}

fn scenario(users: usize, items: usize, seed: u64) -> *mut GrScenario {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { gr_scenario_generate(users, items, seed, &mut s) }, GrStatus::Ok);
    assert!(!s.is_null());
    s
}

#[test]
fn aggregate_matches_library() {
    let s = scenario(4, 25, 11);
    let expected = aggregate(&generate_scenario(4, 25, 11).unwrap(), StrategyKind::app(), 10);
    let mut items = [0usize; 10];
    let mut scores = [0f64; 10];
    let mut len = 0;
    let status = unsafe { gr_aggregate(s, GrStrategy::App, 50, 10, items.as_mut_ptr(), scores.as_mut_ptr(), 10, &mut len) };
    assert_eq!(status, GrStatus::Ok);
    assert_eq!(len, 10);
    for (i, (label, score)) in expected.entries.iter().enumerate() {
        assert_eq!(format!("item_{}", items[i] + 1), *label);
        assert_eq!(scores[i], *score);
    }
    unsafe { gr_scenario_free(s) };
}

#[test]
fn small_buffer_reports_required_length() {
    let s = scenario(4, 25, 1);
    let mut items = [0usize; 3];
    let mut len = 0;
    let status = unsafe { gr_aggregate(s, GrStrategy::Add, 0, 10, items.as_mut_ptr(), ptr::null_mut(), 3, &mut len) };
    assert_eq!(status, GrStatus::BufferTooSmall);
    assert_eq!(len, 10);
    assert!(last_error().contains("need 10"));
    unsafe { gr_scenario_free(s) };
}

#[test]
fn ndcg_of_strategy_list_is_one() {
    let s = scenario(4, 50, 3);
    let mut items = [0usize; 10];
    let mut len = 0;
    unsafe { gr_aggregate(s, GrStrategy::Lms, 0, 10, items.as_mut_ptr(), ptr::null_mut(), 10, &mut len) };
    let mut v = 0.0;
    let status = unsafe { gr_ndcg(s, GrStrategy::Lms, 0, items.as_ptr(), len, 10, GrGain::Linear, &mut v) };
    assert_eq!(status, GrStatus::Ok);
    assert!((v - 1.0).abs() < 1e-12);

    let bad = [99usize];
    let status = unsafe { gr_ndcg(s, GrStrategy::Lms, 0, bad.as_ptr(), 1, 10, GrGain::Linear, &mut v) };
    assert_eq!(status, GrStatus::Dimension);
    unsafe { gr_scenario_free(s) };
}

#[test]
fn table_round_trip_and_lookup() {
    let s = scenario(3, 25, 7);
    let mut table = ptr::null_mut();
    assert_eq!(unsafe { gr_scenario_render_table(s, &mut table) }, GrStatus::Ok);
    let text = CString::new(take(table)).unwrap();

    let mut parsed = ptr::null_mut();
    assert_eq!(unsafe { gr_scenario_parse_table(text.as_ptr(), &mut parsed) }, GrStatus::Ok);
    let (mut u, mut i) = (0, 0);
    assert_eq!(unsafe { gr_scenario_dims(parsed, &mut u, &mut i) }, GrStatus::Ok);
    assert_eq!((u, i), (3, 25));
    let (mut a, mut b) = (0u8, 0u8);
    unsafe {
        gr_scenario_rating(s, 2, 24, &mut a);
        gr_scenario_rating(parsed, 2, 24, &mut b);
    }
    assert_eq!(a, b);
    assert_eq!(unsafe { gr_scenario_rating(parsed, 3, 0, &mut a) }, GrStatus::Dimension);

    let mut d = -1.0;
    assert_eq!(unsafe { gr_normalized_distance(parsed, &mut d) }, GrStatus::Ok);
    assert!((0.0..=1.0).contains(&d));
    unsafe {
        gr_scenario_free(s);
        gr_scenario_free(parsed);
    }
}

#[test]
fn errors_are_reported_not_raised() {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { gr_scenario_generate(1, 25, 0, &mut s) }, GrStatus::Dimension);
    assert!(s.is_null());
    assert!(!last_error().is_empty());

    let garbage = CString::new("not a table").unwrap();
    assert_eq!(unsafe { gr_scenario_parse_table(garbage.as_ptr(), &mut s) }, GrStatus::Parse);
    assert_eq!(unsafe { gr_scenario_parse_table(ptr::null(), &mut s) }, GrStatus::NullPointer);

    let bytes = b"\xff\xfe\0";
    assert_eq!(unsafe { gr_scenario_parse_table(bytes.as_ptr().cast(), &mut s) }, GrStatus::InvalidUtf8);

    let mut d = 0.0;
    assert_eq!(unsafe { gr_normalized_distance(ptr::null(), &mut d) }, GrStatus::NullPointer);

    let ok = scenario(2, 25, 0);
    assert_eq!(last_error(), "");
    let mut len = 0;
    let status = unsafe { gr_aggregate(ok, GrStrategy::App, 101, 5, ptr::null_mut(), ptr::null_mut(), 0, &mut len) };
    assert_eq!(status, GrStatus::InvalidArgument);
    unsafe {
        gr_scenario_free(ok);
        gr_scenario_free(ptr::null_mut());
        gr_string_free(ptr::null_mut());
    }
}

#[test]
fn explanation_classification() {
    let mut rules = ptr::null_mut();
    assert_eq!(unsafe { gr_ruleset_default(&mut rules) }, GrStatus::Ok);
    let text = CString::new("These items have the highest average rating across the group.").unwrap();
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { gr_classify_explanation(rules, text.as_ptr(), &mut json) }, GrStatus::Ok);
    let verdict: serde_json::Value = serde_json::from_str(&take(json)).unwrap();
    let labels: Vec<&str> = verdict["labels"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(labels.contains(&"average"), "{verdict}");
    unsafe { gr_ruleset_free(rules) };

    let bad = CString::new(r#"{"categories": []}"#).unwrap();
    let mut rules = ptr::null_mut();
    assert_ne!(unsafe { gr_ruleset_from_json(bad.as_ptr(), &mut rules) }, GrStatus::Ok);
    assert!(rules.is_null());
}

#[test]
fn response_parsing() {
    let s = scenario(4, 25, 5);
    let raw = CString::new(r#"{"recommendation": ["item_3", "item_1", "item_7"], "explanation": "they are popular"}"#).unwrap();
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { gr_parse_response(s, raw.as_ptr(), 3, &mut json) }, GrStatus::Ok);
    let parsed: serde_json::Value = serde_json::from_str(&take(json)).unwrap();
    assert_eq!(parsed["recommendation"]["items"][0], "item_3");
    assert_eq!(parsed["parse_status"]["status"], "ok");
    unsafe { gr_scenario_free(s) };
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(gr_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_entry_point() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/grouprec.h")).unwrap();
    for name in [
        "gr_last_error",
        "gr_version",
        "gr_string_free",
        "gr_scenario_generate",
        "gr_scenario_parse_table",
        "gr_scenario_render_table",
        "gr_scenario_free",
        "gr_scenario_dims",
        "gr_scenario_rating",
        "gr_aggregate",
        "gr_ndcg",
        "gr_normalized_distance",
        "gr_ruleset_default",
        "gr_ruleset_from_json",
        "gr_ruleset_free",
        "gr_classify_explanation",
        "gr_parse_response",
        "typedef struct GrScenario GrScenario",
        "GR_STATUS_BUFFER_TOO_SMALL",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
}
