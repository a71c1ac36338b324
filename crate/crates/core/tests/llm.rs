use std::collections::HashSet;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;

use grouprec::aggregation::{aggregate, StrategyKind};
use grouprec::llm::{
    build_prompt, parse_response, query_endpoint, synthetic_generator, synthetic_template_count, EndpointConfig, ParseStatus,
    SCENARIO_CLOSE_TAG, SCENARIO_OPEN_TAG,
};
use grouprec::scenario::{generate_scenario, render_table};
use grouprec::Error;
use proptest::prelude::*;

fn response_text() -> impl Strategy<Value = String> {
    let item = prop_oneof![
        (0usize..40).prop_map(|n| format!("\"item_{n}\"")),
        (0usize..40).prop_map(|n| format!("\"Item {n}\"")),
        (0usize..40).prop_map(|n| n.to_string()),
        Just("null".to_string()),
        Just("\"banana\"".to_string()),
        Just("{}".to_string()),
    ];
    let list = prop::collection::vec(item, 0..14).prop_map(|v| format!("[{}]", v.join(",")));
    let expl = prop_oneof![
        Just("\"I summed ratings.\"".to_string()),
        Just("\"\"".to_string()),
        Just("null".to_string()),
        Just("[\"a\", 1]".to_string()),
        Just("42".to_string()),
    ];
    prop_oneof![
        any::<String>(),
        "[{}\\[\\]\":,a-z0-9 \\\\]{0,80}",
        (list.clone(), expl.clone()).prop_map(|(l, e)| format!("{{\"recommendation\": {l}, \"explanation\": {e}}}")),
        (list, expl, ".{0,20}", ".{0,20}")
            .prop_map(|(l, e, pre, post)| format!("{pre}```json\n{{\"explanation\": {e}, \"recommendation\": {l}}}\n```{post}")),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(3000))]

    #[test]
    fn parser_is_total(text in response_text(), items in 1usize..=30, k in 1usize..=12) {
        let s = generate_scenario(3, items, 1).unwrap();
        let r = parse_response(&text, &s, k);
        if r.parse_status.is_usable() {
            let got: Vec<&str> = r.recommendation.items().collect();
            prop_assert_eq!(got.len(), k.min(items));
            prop_assert_eq!(got.iter().collect::<HashSet<_>>().len(), got.len());
            prop_assert!(got.iter().all(|i| s.item_position(i).is_some()));
            prop_assert!(!r.explanation.is_empty());
        } else {
            prop_assert_eq!(r.recommendation.len(), 0);
        }
        prop_assert_eq!(r.raw_text, text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn synthetic_responses_round_trip(items in 10usize..=75, seed in any::<u64>(), t in 0u8..=100, template in 0usize..4) {
        let s = generate_scenario(4, items, seed).unwrap();
        for st in [StrategyKind::Add, StrategyKind::Mpl, StrategyKind::Lms, StrategyKind::App(t)] {
            let raw = synthetic_generator(&s, st, 10, template);
            let r = parse_response(&raw, &s, 10);
            prop_assert_eq!(&r.parse_status, &ParseStatus::Ok);
            let expected = aggregate(&s, st, 10);
            prop_assert_eq!(r.recommendation.items().collect::<Vec<_>>(), expected.items().collect::<Vec<_>>());
        }
    }

    #[test]
    fn prompt_is_pure(items in 10usize..=40, seed in any::<u64>(), k in 1usize..=10) {
        let s = generate_scenario(4, items, seed).unwrap();
        let a = build_prompt(&s, k);
        prop_assert_eq!(&a, &build_prompt(&s, k));
        prop_assert!(a.full_text.contains(&a.system_text));
        prop_assert!(a.full_text.contains(&a.format_instructions));
        let table = render_table(&s);
        prop_assert!(a.scenario_block.starts_with(SCENARIO_OPEN_TAG));
        prop_assert!(a.scenario_block.trim_end().ends_with(SCENARIO_CLOSE_TAG));
        prop_assert!(a.scenario_block.contains(&table));
    }
}

#[test]
fn every_template_parses() {
    let s = generate_scenario(4, 25, 3).unwrap();
    for st in StrategyKind::standard() {
        for t in 0..synthetic_template_count(st) {
            assert_eq!(parse_response(&synthetic_generator(&s, st, 10, t), &s, 10).parse_status, ParseStatus::Ok);
        }
    }
}

/// Serves canned (status, body) replies in order, one per connection.
fn serve(replies: Vec<(u16, String)>) -> (String, Arc<AtomicUsize>, thread::JoinHandle<Vec<String>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = hits.clone();
    let handle = thread::spawn(move || {
        let mut bodies = Vec::new();
        for (status, body) in replies {
            let (mut stream, _) = listener.accept().unwrap();
            counter.fetch_add(1, Ordering::SeqCst);
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
            }
            let mut buf = vec![0; len];
            reader.read_exact(&mut buf).unwrap();
            bodies.push(String::from_utf8(buf).unwrap());
            let reply = format!(
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
            stream.write_all(reply.as_bytes()).unwrap();
        }
        bodies
    });
    (url, hits, handle)
}

fn config(url: String) -> EndpointConfig {
    EndpointConfig {
        base_url: url,
        model: "test-model".into(),
        temperature: Some(0.0),
        timeout_secs: 5.0,
        retries: 2,
        backoff_ms: 10,
        api_key: None,
    }
}

fn ok_body(content: &str) -> String {
    serde_json::json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string()
}

#[test]
fn retries_transient_failures() {
    let (url, hits, handle) = serve(vec![(503, "{}".into()), (429, "{}".into()), (200, ok_body("hello"))]);
    let prompt = build_prompt(&generate_scenario(4, 12, 0).unwrap(), 10);
    assert_eq!(query_endpoint(&config(url), &prompt).unwrap(), "hello");
    assert_eq!(hits.load(Ordering::SeqCst), 3);
    let bodies = handle.join().unwrap();
    let sent: serde_json::Value = serde_json::from_str(&bodies[0]).unwrap();
    assert_eq!(sent["model"], "test-model");
    assert_eq!(sent["temperature"], 0.0);
    assert_eq!(sent["messages"][0]["content"], prompt.full_text);
}

#[test]
fn gives_up_after_the_budget() {
    let (url, hits, handle) = serve(vec![(500, "{}".into()); 3]);
    let prompt = build_prompt(&generate_scenario(4, 12, 0).unwrap(), 10);
    match query_endpoint(&config(url), &prompt) {
        Err(Error::Transport { attempts, status, .. }) => {
            assert_eq!(attempts, 3);
            assert_eq!(status, Some(500));
        }
        other => panic!("{other:?}"),
    }
    handle.join().unwrap();
    assert_eq!(hits.load(Ordering::SeqCst), 3);
}

#[test]
fn client_errors_are_not_retried() {
    let (url, hits, handle) = serve(vec![(404, "{\"error\": \"no such model\"}".into())]);
    let prompt = build_prompt(&generate_scenario(4, 12, 0).unwrap(), 10);
    let err = query_endpoint(&config(url), &prompt).unwrap_err();
    assert!(matches!(err, Error::Transport { attempts: 1, status: Some(404), .. }), "{err}");
    handle.join().unwrap();
    assert_eq!(hits.load(Ordering::SeqCst), 1);
}

#[test]
fn unreachable_endpoint_is_a_transport_error() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let mut c = config(format!("http://127.0.0.1:{port}/v1"));
    c.retries = 1;
    let prompt = build_prompt(&generate_scenario(4, 12, 0).unwrap(), 10);
    assert!(matches!(query_endpoint(&c, &prompt), Err(Error::Transport { attempts: 2, status: None, .. })));
}
