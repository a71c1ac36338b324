//! C ABI over the `grouprec` library.
//!
//! Conventions:
//! - every fallible function returns a [`GrStatus`]; results go through out-pointers
//! - on failure, [`gr_last_error`] describes the most recent error on the calling thread
//! - scenarios and rulesets are opaque handles released with their `*_free` function
//! - strings returned to the caller are owned by the caller and released with [`gr_string_free`]
//! - item indices are 0-based

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use grouprec::aggregation::{aggregate, strategy_scores, RankedList, StrategyKind};
use grouprec::explain::{classify_explanation, RuleSet};
use grouprec::llm::parse_response;
use grouprec::metrics::{ndcg_at_k_with, GainKind};
use grouprec::scenario::{generate_scenario, parse_table, render_table, GroupScenario};
use grouprec::structure::pairwise_distances;
use grouprec::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Dimension = 3,
    Parse = 4,
    Validation = 5,
    Degenerate = 6,
    Config = 7,
    Transport = 8,
    Io = 9,
    Json = 10,
    BufferTooSmall = 11,
    InvalidArgument = 12,
    Panic = 13,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrStrategy {
    Add = 0,
    Mpl = 1,
    Lms = 2,
    /// Approval voting; the threshold argument applies.
    App = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GrGain {
    Linear = 0,
    Binary = 1,
}

/// Opaque group scenario.
pub struct GrScenario(GroupScenario);

/// Opaque explanation ruleset.
pub struct GrRuleSet(RuleSet);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> GrStatus {
    match e {
        Error::Dimension(_) => GrStatus::Dimension,
        Error::Parse { .. } => GrStatus::Parse,
        Error::Validation(_) | Error::MissingResponses { .. } => GrStatus::Validation,
        Error::DegeneratePopulation(_) | Error::DegenerateReference | Error::UndefinedKappa => GrStatus::Degenerate,
        Error::Config(_) => GrStatus::Config,
        Error::Transport { .. } => GrStatus::Transport,
        Error::Io { .. } => GrStatus::Io,
        Error::Json(_) => GrStatus::Json,
    }
}

struct Fail(GrStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> GrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            GrStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            GrStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| Fail(GrStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| Fail(GrStatus::NullPointer, format!("{what} is null")))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(GrStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(GrStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

fn owned_string(s: String) -> Result<*mut c_char, Fail> {
    CString::new(s).map(CString::into_raw).map_err(|_| Fail(GrStatus::InvalidArgument, "result contains a NUL byte".into()))
}

fn strategy(kind: GrStrategy, threshold: u8) -> Result<StrategyKind, Fail> {
    match kind {
        GrStrategy::Add => Ok(StrategyKind::Add),
        GrStrategy::Mpl => Ok(StrategyKind::Mpl),
        GrStrategy::Lms => Ok(StrategyKind::Lms),
        GrStrategy::App if threshold <= 100 => Ok(StrategyKind::App(threshold)),
        GrStrategy::App => Err(Fail(GrStatus::InvalidArgument, format!("APP threshold {threshold} exceeds 100"))),
    }
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn gr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn gr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Seeded random scenario with `num_users` users and `num_items` items.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gr_scenario_generate(
    num_users: usize,
    num_items: usize,
    seed: u64,
    out_scenario: *mut *mut GrScenario,
) -> GrStatus {
    guard(|| {
        let slot = out(out_scenario, "out_scenario")?;
        let s = generate_scenario(num_users, num_items, seed)?;
        *slot = Box::into_raw(Box::new(GrScenario(s)));
        Ok(())
    })
}

/// Parses a tab-separated rating table.
///
/// # Safety
/// `table` must be a NUL-terminated string; `out_scenario` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gr_scenario_parse_table(table: *const c_char, out_scenario: *mut *mut GrScenario) -> GrStatus {
    guard(|| {
        let slot = out(out_scenario, "out_scenario")?;
        let s = parse_table(text(table, "table")?)?;
        *slot = Box::into_raw(Box::new(GrScenario(s)));
        Ok(())
    })
}

/// Renders the scenario as the tab-separated table shown to generators.
///
/// # Safety
/// `scenario` must be a live handle; `out_table` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gr_scenario_render_table(scenario: *const GrScenario, out_table: *mut *mut c_char) -> GrStatus {
    guard(|| {
        let s = deref(scenario, "scenario")?;
        let slot = out(out_table, "out_table")?;
        *slot = owned_string(render_table(&s.0))?;
        Ok(())
    })
}

/// # Safety
/// `scenario` must come from this library and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn gr_scenario_free(scenario: *mut GrScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// # Safety
/// `scenario` must be a live handle; the out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn gr_scenario_dims(scenario: *const GrScenario, out_users: *mut usize, out_items: *mut usize) -> GrStatus {
    guard(|| {
        let s = deref(scenario, "scenario")?;
        *out(out_users, "out_users")? = s.0.num_users();
        *out(out_items, "out_items")? = s.0.num_items();
        Ok(())
    })
}

/// # Safety
/// `scenario` must be a live handle; `out_rating` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gr_scenario_rating(scenario: *const GrScenario, user: usize, item: usize, out_rating: *mut u8) -> GrStatus {
    guard(|| {
        let s = deref(scenario, "scenario")?;
        let slot = out(out_rating, "out_rating")?;
        if user >= s.0.num_users() || item >= s.0.num_items() {
            return Err(Fail(GrStatus::Dimension, format!("({user}, {item}) is outside {}×{}", s.0.num_users(), s.0.num_items())));
        }
        *slot = s.0.rating(user, item);
        Ok(())
    })
}

/// Top-`k` items under a strategy, written as 0-based item indices and scores
/// into caller buffers of `capacity` entries. `out_len` receives min(k, I);
/// when that exceeds `capacity`, nothing is written and `BufferTooSmall` is returned.
///
/// # Safety
/// `scenario` must be a live handle; `out_items` and `out_scores` must hold
/// `capacity` entries (`out_scores` may be null); `out_len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gr_aggregate(
    scenario: *const GrScenario,
    kind: GrStrategy,
    app_threshold: u8,
    k: usize,
    out_items: *mut usize,
    out_scores: *mut f64,
    capacity: usize,
    out_len: *mut usize,
) -> GrStatus {
    guard(|| {
        let s = deref(scenario, "scenario")?;
        let len_slot = out(out_len, "out_len")?;
        let list = aggregate(&s.0, strategy(kind, app_threshold)?, k);
        *len_slot = list.len();
        if list.len() > capacity {
            return Err(Fail(GrStatus::BufferTooSmall, format!("need {} entries, got {capacity}", list.len())));
        }
        if out_items.is_null() {
            return Err(Fail(GrStatus::NullPointer, "out_items is null".into()));
        }
        for (i, (item, score)) in list.entries.iter().enumerate() {
            *out_items.add(i) = s.0.item_position(item).expect("aggregate returns scenario items");
            if !out_scores.is_null() {
                *out_scores.add(i) = *score;
            }
        }
        Ok(())
    })
}

/// NDCG@k of a candidate list (0-based item indices) against a strategy.
///
/// # Safety
/// `scenario` must be a live handle; `candidate` must hold `len` entries;
/// `out_ndcg` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gr_ndcg(
    scenario: *const GrScenario,
    kind: GrStrategy,
    app_threshold: u8,
    candidate: *const usize,
    len: usize,
    k: usize,
    gain: GrGain,
    out_ndcg: *mut f64,
) -> GrStatus {
    guard(|| {
        let s = deref(scenario, "scenario")?;
        let slot = out(out_ndcg, "out_ndcg")?;
        if candidate.is_null() && len > 0 {
            return Err(Fail(GrStatus::NullPointer, "candidate is null".into()));
        }
        let indices = if len == 0 { &[][..] } else { std::slice::from_raw_parts(candidate, len) };
        let mut items = Vec::with_capacity(len);
        for &i in indices {
            let Some(label) = s.0.items.get(i) else {
                return Err(Fail(GrStatus::Dimension, format!("item index {i} out of range")));
            };
            items.push(label.clone());
        }
        let reference = strategy_scores(&s.0, strategy(kind, app_threshold)?);
        let gain = match gain {
            GrGain::Linear => GainKind::Linear,
            GrGain::Binary => GainKind::Binary,
        };
        *slot = ndcg_at_k_with(&RankedList::unscored("ffi", items, k), &reference, k, gain)?;
        Ok(())
    })
}

/// Mean pairwise user distance divided by its maximum, in [0, 1].
///
/// # Safety
/// `scenario` must be a live handle; `out_distance` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gr_normalized_distance(scenario: *const GrScenario, out_distance: *mut f64) -> GrStatus {
    guard(|| {
        let s = deref(scenario, "scenario")?;
        *out(out_distance, "out_distance")? = pairwise_distances(&s.0).normalized_distance;
        Ok(())
    })
}

/// The shipped default ruleset.
///
/// # Safety
/// `out_rules` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gr_ruleset_default(out_rules: *mut *mut GrRuleSet) -> GrStatus {
    guard(|| {
        *out(out_rules, "out_rules")? = Box::into_raw(Box::new(GrRuleSet(RuleSet::default_rules())));
        Ok(())
    })
}

/// A ruleset from its JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out_rules` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gr_ruleset_from_json(json: *const c_char, out_rules: *mut *mut GrRuleSet) -> GrStatus {
    guard(|| {
        let slot = out(out_rules, "out_rules")?;
        let rules = RuleSet::from_json(text(json, "json")?)?;
        *slot = Box::into_raw(Box::new(GrRuleSet(rules)));
        Ok(())
    })
}

/// # Safety
/// `rules` must come from this library and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn gr_ruleset_free(rules: *mut GrRuleSet) {
    if !rules.is_null() {
        drop(Box::from_raw(rules));
    }
}

/// Classifies an explanation; the verdict is returned as a JSON string.
///
/// # Safety
/// `rules` must be a live handle; `explanation` a NUL-terminated string;
/// `out_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gr_classify_explanation(
    rules: *const GrRuleSet,
    explanation: *const c_char,
    out_json: *mut *mut c_char,
) -> GrStatus {
    guard(|| {
        let r = deref(rules, "rules")?;
        let slot = out(out_json, "out_json")?;
        let verdict = classify_explanation(text(explanation, "explanation")?, &r.0);
        *slot = owned_string(serde_json::to_string(&verdict).map_err(Error::from)?)?;
        Ok(())
    })
}

/// Parses raw generator output against a scenario; the parsed response
/// (including its status) is returned as a JSON string.
///
/// # Safety
/// `scenario` must be a live handle; `raw_text` a NUL-terminated string;
/// `out_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gr_parse_response(
    scenario: *const GrScenario,
    raw_text: *const c_char,
    k: usize,
    out_json: *mut *mut c_char,
) -> GrStatus {
    guard(|| {
        let s = deref(scenario, "scenario")?;
        let slot = out(out_json, "out_json")?;
        let response = parse_response(text(raw_text, "raw_text")?, &s.0, k);
        *slot = owned_string(serde_json::to_string(&response).map_err(Error::from)?)?;
        Ok(())
    })
}
