use acluster_core::strategy::is_chordal_graph;
use acluster_core::{AggregatedGraph, Partition, Query, QueryLog};
use acluster_service::{router, AppState};
use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

struct Client {
    app: Router,
}

impl Client {
    fn new(dir: &std::path::Path) -> Self {
        Client {
            app: router(AppState::open(dir).unwrap()),
        }
    }

    async fn raw(&self, method: &str, uri: &str, body: Option<Value>, bearer: Option<&str>) -> (StatusCode, Vec<u8>) {
        let mut req = Request::builder().method(method).uri(uri);
        if let Some(t) = bearer {
            req = req.header(header::AUTHORIZATION, format!("Bearer {t}"));
        }
        let req = match body {
            Some(b) => req
                .header(header::CONTENT_TYPE, "application/json")
                .body(Body::from(b.to_string()))
                .unwrap(),
            None => req.body(Body::empty()).unwrap(),
        };
        let resp = self.app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
        (status, bytes)
    }

    async fn call(&self, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
        let (s, b) = self.raw(method, uri, body, None).await;
        (s, serde_json::from_slice(&b).unwrap_or(Value::Null))
    }

    async fn create(&self, n: usize, strategy: &str, plan: Option<Value>) -> String {
        let items: Vec<Value> = (0..n).map(|i| json!({"id": format!("item{i}"), "payload": format!("text {i}")})).collect();
        let mut body = json!({"items": items, "strategy": strategy, "seed": 42});
        if let Some(p) = plan {
            body["plan"] = p;
        }
        let (s, v) = self.call("POST", "/sessions", Some(body)).await;
        assert_eq!(s, StatusCode::CREATED, "{v}");
        v["id"].as_str().unwrap().to_string()
    }

    async fn next(&self, id: &str, token: &str) -> Value {
        let (s, v) = self.call("GET", &format!("/sessions/{id}/next?annotator={token}"), None).await;
        assert_eq!(s, StatusCode::OK, "{v}");
        v
    }

    async fn answer(&self, id: &str, u: u64, v: u64, positive: bool) -> (StatusCode, Value) {
        self.call("POST", &format!("/sessions/{id}/answers"), Some(json!({"u": u, "v": v, "positive": positive})))
            .await
    }

    /// Answers from `truth` until the session stops handing out queries,
    /// flipping the answers whose 0-based position is in `wrong`.
    async fn drive(&self, id: &str, truth: &[usize], wrong: &[usize]) -> Vec<Value> {
        let mut responses = Vec::new();
        for step in 0.. {
            assert!(step < 10_000, "session does not terminate");
            let next = self.next(id, "robot").await;
            if next["kind"] != "query" {
                break;
            }
            let (u, v) = (next["query"]["u"].as_u64().unwrap(), next["query"]["v"].as_u64().unwrap());
            let same = truth[u as usize] == truth[v as usize];
            let (s, r) = self.answer(id, u, v, same != wrong.contains(&step)).await;
            assert_eq!(s, StatusCode::OK, "{r}");
            responses.push(r);
        }
        responses
    }
}

fn pair(q: &Value) -> (u64, u64) {
    let (u, v) = (q["u"].as_u64().unwrap(), q["v"].as_u64().unwrap());
    (u.min(v), u.max(v))
}

#[tokio::test]
async fn fresh_clique_session_flow() {
    let tmp = tempfile::tempdir().unwrap();
    let c = Client::new(tmp.path());
    let id = c.create(3, "clique", None).await;
    let (s, view) = c.call("GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(view["status"], "active");
    assert_eq!(view["n"], 3);

    let q = c.next(&id, "a").await;
    assert_eq!(q["kind"], "query");
    assert_eq!((q["query"]["u"].as_u64(), q["query"]["v"].as_u64()), (Some(1), Some(0)));
    assert_eq!(q["query"]["items"][0]["payload"], "text 1");
    assert_eq!(q["query"]["purpose"], "strategy");
    assert_eq!(c.next(&id, "a").await, q, "next is idempotent");

    let (s, err) = c.answer(&id, 2, 1, true).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(err["code"], "stale_query");
    assert!(err["message"].is_string());

    let (s, r) = c.answer(&id, 1, 0, true).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(r["delta"]["kind"], "merged");
    let (_, view) = c.call("GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(view["blocks"][0]["members"], json!(["item0", "item1"]));
    assert_eq!(view["answered"], 1);
    assert!(view["estimate"]["expected_total"].as_f64().unwrap() > 2.0);
}

#[tokio::test]
async fn creation_validation() {
    let tmp = tempfile::tempdir().unwrap();
    let c = Client::new(tmp.path());
    let (s, v) = c
        .call("POST", "/sessions", Some(json!({"items": [{"id": "x"}], "strategy": "clique"})))
        .await;
    assert_eq!(s, StatusCode::CREATED);
    assert_eq!(v["status"], "resolved");
    let id = v["id"].as_str().unwrap();
    assert_eq!(c.next(id, "a").await, json!({"kind": "resolved", "labeled": false}));

    for body in [
        json!({"items": [{"id": "x"}, {"id": "y"}], "strategy": "greedy"}),
        json!({"items": [], "strategy": "clique"}),
        json!({"items": [{"id": "x"}, {"id": "x"}], "strategy": "clique"}),
        json!({"items": [{"id": "x"}, {"id": "y"}], "strategy": "clique", "plan": {"r": 0}}),
        json!({"strategy": "clique"}),
    ] {
        let (s, v) = c.call("POST", "/sessions", Some(body.clone())).await;
        assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY, "{body}");
        assert_eq!(v["code"], "validation");
    }
    let (s, v) = c.call("GET", "/sessions/missing", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(v["code"], "not_found");
    let (s, _) = c.call("GET", "/sessions/..%2F..%2Fetc/next", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn labels_and_export() {
    let tmp = tempfile::tempdir().unwrap();
    let c = Client::new(tmp.path());
    let id = c.create(4, "universal", None).await;
    let (s, v) = c.call("POST", &format!("/sessions/{id}/labels"), Some(json!({"labels": {}}))).await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::CONFLICT, Some("not_resolved")));

    let truth = [0, 1, 0, 1];
    c.drive(&id, &truth, &[]).await;
    let (_, view) = c.call("GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(view["status"], "resolved");
    let keys: Vec<&str> = view["blocks"].as_array().unwrap().iter().map(|b| b["key"].as_str().unwrap()).collect();
    assert_eq!(keys, vec!["item0", "item1"]);
    let (s, v) = c.call("GET", &format!("/sessions/{id}/export"), None).await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::CONFLICT, Some("not_labeled")));

    let (s, v) = c
        .call("POST", &format!("/sessions/{id}/labels"), Some(json!({"labels": {"item0": "even"}})))
        .await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::UNPROCESSABLE_ENTITY, Some("validation")));
    let (s, posted) = c
        .raw(
            "POST",
            &format!("/sessions/{id}/labels"),
            Some(json!({"labels": {"item0": "even", "item1": "odd"}})),
            None,
        )
        .await;
    assert_eq!(s, StatusCode::OK);
    let (s, fetched) = c.raw("GET", &format!("/sessions/{id}/export"), None, None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(posted, fetched, "export is byte-stable");

    let ex: acluster_service::Export = serde_json::from_slice(&fetched).unwrap();
    let labels: Vec<&str> = ex.items.iter().map(|i| i.label.as_str()).collect();
    assert_eq!(labels, vec!["even", "odd", "even", "odd"]);
    // Replaying the exported log through a fresh aggregated graph gives the
    // same partition as the engine replay.
    let mut log = QueryLog::new(4);
    for a in &ex.log {
        log.push(*a).unwrap();
    }
    let truth_p = Partition::from_labels(&truth);
    assert_eq!(AggregatedGraph::replay(&log).unwrap().partition(), truth_p);
    assert_eq!(ex.replay().unwrap(), truth_p);

    let (s, v) = c
        .call("POST", &format!("/sessions/{id}/labels"), Some(json!({"labels": {"item0": "a", "item1": "b"}})))
        .await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::CONFLICT, Some("already_labeled")));
    assert_eq!(c.next(&id, "a").await, json!({"kind": "resolved", "labeled": true}));
}

#[tokio::test]
async fn wrong_answer_triggers_midpoint_repair_and_true_export() {
    let tmp = tempfile::tempdir().unwrap();
    let c = Client::new(tmp.path());
    let id = c.create(12, "clique", Some(json!({"r": 2}))).await;
    let truth: Vec<usize> = (0..12).map(|i| i % 3).collect();
    let responses = c.drive(&id, &truth, &[0]).await;

    let hit = responses
        .iter()
        .find(|r| r["delta"]["kind"] == "contradiction")
        .expect("the wrong answer is caught");
    assert_eq!(hit["status"], "repairing");
    let cycle: Vec<u64> = hit["delta"]["cycle"]["vertices"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_u64().unwrap())
        .collect();
    // The first chord joins the cycle's start to its midpoint.
    let (a, b) = (cycle[0], cycle[cycle.len() / 2]);
    assert_eq!(pair(&hit["repair_query"]), (a.min(b), a.max(b)));
    assert_eq!(hit["repair_query"]["purpose"], "repair");
    assert!(responses.iter().any(|r| !r["corrections"].as_array().unwrap().is_empty()));

    let (_, view) = c.call("GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(view["status"], "resolved");
    assert_eq!(view["flips"], 1);
    let labels: serde_json::Map<String, Value> = view["blocks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|b| {
            let key = b["key"].as_str().unwrap().to_string();
            let k: usize = key.trim_start_matches("item").parse().unwrap();
            (key, json!(format!("class{}", truth[k])))
        })
        .collect();
    let (s, ex) = c.call("POST", &format!("/sessions/{id}/labels"), Some(json!({"labels": labels}))).await;
    assert_eq!(s, StatusCode::OK, "{ex}");
    for (i, item) in ex["items"].as_array().unwrap().iter().enumerate() {
        assert_eq!(item["label"], format!("class{}", truth[i]));
    }
    assert!(ex["log"].as_array().unwrap().iter().any(|a| a["repair"] == true));
}

#[tokio::test]
async fn restart_restores_pending_state() {
    let tmp = tempfile::tempdir().unwrap();
    let truth: Vec<usize> = (0..9).map(|i| i % 4).collect();
    let (id, before, view) = {
        let c = Client::new(tmp.path());
        let id = c.create(9, "chordal-any", None).await;
        for _ in 0..5 {
            let q = c.next(&id, "a").await;
            let (u, v) = pair(&q["query"]);
            let (s, _) = c.answer(&id, u, v, truth[u as usize] == truth[v as usize]).await;
            assert_eq!(s, StatusCode::OK);
        }
        let before = (c.next(&id, "a").await, c.next(&id, "b").await);
        let (_, view) = c.call("GET", &format!("/sessions/{id}"), None).await;
        (id, before, view)
    };
    // A crash mid-append leaves a torn line that was never acknowledged.
    let log = tmp.path().join(&id).join("log.jsonl");
    let mut text = std::fs::read_to_string(&log).unwrap();
    text.push_str("{\"t\":99,\"u\":1");
    std::fs::write(&log, text).unwrap();

    let c = Client::new(tmp.path());
    assert_eq!((c.next(&id, "a").await, c.next(&id, "b").await), before);
    let (_, again) = c.call("GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(again, view);
    // And the session still finishes correctly.
    c.drive(&id, &truth, &[]).await;
    let (_, done) = c.call("GET", &format!("/sessions/{id}"), None).await;
    assert_eq!(done["blocks"].as_array().unwrap().len(), 4);
}

#[tokio::test]
async fn annotators_get_distinct_chordality_safe_pairs() {
    let tmp = tempfile::tempdir().unwrap();
    let c = Client::new(tmp.path());
    let id = c.create(8, "chordal-any", None).await;
    let mut held = Vec::new();
    for tok in ["a", "b", "c"] {
        let r = c.next(&id, tok).await;
        match r["kind"].as_str().unwrap() {
            "query" => held.push(pair(&r["query"])),
            "wait" => {}
            other => panic!("{other}"),
        }
    }
    let mut unique = held.clone();
    unique.sort();
    unique.dedup();
    assert_eq!(unique.len(), held.len());
    assert!(held.len() >= 2, "an 8-item fresh session has room for parallel queries");
    let mut g = AggregatedGraph::new(8).unwrap();
    for &(u, v) in &held {
        g.observe(Query { u: u as usize, v: v as usize }, false).unwrap();
    }
    assert!(is_chordal_graph(&g));

    // Bearer tokens identify annotators when the query names none.
    let (s, b) = c.raw("GET", &format!("/sessions/{id}/next"), None, Some("b")).await;
    assert_eq!(s, StatusCode::OK);
    let b: Value = serde_json::from_slice(&b).unwrap();
    if held.len() >= 2 {
        assert_eq!(pair(&b["query"]), held[1]);
    }
}

#[tokio::test]
async fn other_sessions_serialize_annotators() {
    let tmp = tempfile::tempdir().unwrap();
    let c = Client::new(tmp.path());
    for (strategy, plan) in [("clique", None), ("chordal-any", Some(json!({"r": 3})))] {
        let id = c.create(6, strategy, plan).await;
        assert_eq!(c.next(&id, "a").await["kind"], "query");
        assert_eq!(c.next(&id, "b").await, json!({"kind": "wait"}), "{strategy}");
    }
}

#[tokio::test]
async fn malformed_bodies_are_validation_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let c = Client::new(tmp.path());
    let id = c.create(3, "clique", None).await;
    let (s, v) = c
        .call("POST", &format!("/sessions/{id}/answers"), Some(json!({"u": 1, "positive": true})))
        .await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::UNPROCESSABLE_ENTITY, Some("validation")));
    let (s, v) = c.answer(&id, 1, 1, true).await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::UNPROCESSABLE_ENTITY, Some("validation")));
    let (s, v) = c.answer(&id, 1, 7, true).await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::UNPROCESSABLE_ENTITY, Some("validation")));
}
