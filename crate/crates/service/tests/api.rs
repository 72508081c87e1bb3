use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use dotedge::dataset::{
    generate_dataset, plan, synthesize, write_stimulus, DatasetKind, DatasetManifest, MANIFEST_FILE, SCHEMA_VERSION,
};
use dotedge::evaluation::{build_grid, read_response_log, score_click, Response, ScoringCase};
use dotedge::synthesis::VideoSpec;
use dotedge_service::session::{
    permutation, CreateSession, KindSelector, Next, SubmitResponse, LOG_DIR, RESPONSES_LOG,
};
use dotedge_service::{cors, router, DisplayGeometry, Service};
use serde_json::{json, Value};
use tower::ServiceExt;

/// Shared datasets: the full 620-image static set and two short videos.
fn datasets() -> &'static Path {
    static DIR: OnceLock<tempfile::TempDir> = OnceLock::new();
    DIR.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        generate_dataset(DatasetKind::StaticImage, 11, 5, &dir.path().join("static-image")).unwrap();
        let video_root = dir.path().join("static-video");
        let mut entries = Vec::new();
        for p in &plan(DatasetKind::StaticVideo, 1)[..2] {
            let (stimulus, entry) = synthesize(DatasetKind::StaticVideo, p, 11).unwrap();
            write_stimulus(&video_root.join(&entry.path), &stimulus).unwrap();
            entries.push(entry);
        }
        DatasetManifest {
            schema_version: SCHEMA_VERSION,
            kind: DatasetKind::StaticVideo,
            seed: 11,
            canvas: (300, 300),
            video: Some(VideoSpec::PAPER),
            entries,
        }
        .write(&video_root.join(MANIFEST_FILE))
        .unwrap();
        dir
    })
    .path()
}

/// A fresh data root linking the shared datasets, with its own logs.
fn data_root() -> tempfile::TempDir {
    let root = tempfile::tempdir().unwrap();
    for kind in ["static-image", "static-video"] {
        std::os::unix::fs::symlink(datasets().join(kind), root.path().join(kind)).unwrap();
    }
    root
}

fn app(root: &Path) -> Router {
    router(Arc::new(Service::open(root).unwrap()), cors(&[]).unwrap())
}

async fn send(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let mut req = Request::builder().method(method).uri(uri);
    let body = match body {
        Some(v) => {
            req = req.header("content-type", "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let status = resp.status();
    (status, axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap().to_vec())
}

async fn send_json(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let (status, bytes) = send(app, method, uri, body).await;
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

fn click(id: &str, clicks: Value, extra: Value) -> Value {
    let mut r = json!({"type": "click", "stimulus_id": id, "clicks": clicks, "elapsed": 3.5});
    r.as_object_mut().unwrap().extend(extra.as_object().unwrap().clone());
    r
}

fn responses_log(root: &Path) -> PathBuf {
    root.join(LOG_DIR).join(RESPONSES_LOG)
}

#[tokio::test]
async fn click_session_over_http() {
    let root = data_root();
    let app = app(root.path());
    let (status, created) =
        send_json(&app, Method::POST, "/sessions", Some(json!({"kind": 1, "subject": "a", "seed": 5}))).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(created["total"], 620);
    let sid = created["session_id"].as_str().unwrap().to_string();
    let base = format!("/sessions/{sid}");

    let (status, next) = send_json(&app, Method::GET, &format!("{base}/next"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(next["status"], "trial");
    assert_eq!(next["task"], "click");
    assert_eq!(next["time_limit_s"], 10.0);
    let id = next["stimulus_id"].as_str().unwrap().to_string();

    // The image is reachable, the manifest is not.
    let url = next["media"]["url"].as_str().unwrap();
    let (status, bytes) = send(&app, Method::GET, url, None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(bytes.starts_with(b"P4"));
    for hidden in ["/stimuli/static-image/manifest.json", "/stimuli/static-image/images/../manifest.json", "/logs/sessions.jsonl"] {
        assert_ne!(send(&app, Method::GET, hidden, None).await.0, StatusCode::OK, "{hidden}");
    }

    // Asking again before answering returns the same trial.
    let (_, again) = send_json(&app, Method::GET, &format!("{base}/next"), None).await;
    assert_eq!(again["stimulus_id"], id.as_str());

    let post = |nonce: &str, response: Value| {
        (format!("{base}/responses"), json!({"nonce": nonce, "response": response}))
    };
    let cases = [
        (post("n0", click("si-9999", json!([]), json!({}))), StatusCode::CONFLICT),
        (post("n1", json!({"type": "yes_no", "stimulus_id": id, "answer": "yes", "elapsed": 1.0})), StatusCode::UNPROCESSABLE_ENTITY),
        (post("n2", click(&id, json!([[1, 2]]), json!({"elapsed": 11.0}))), StatusCode::UNPROCESSABLE_ENTITY),
        (post("n3", click(&id, json!([[1, 2], [300, 5]]), json!({}))), StatusCode::UNPROCESSABLE_ENTITY),
        (post("n4", json!({"type": "dismissed", "stimulus_id": id, "x": 10, "y": 10, "elapsed": 1.0})), StatusCode::UNPROCESSABLE_ENTITY),
        (post("", click(&id, json!([]), json!({}))), StatusCode::BAD_REQUEST),
    ];
    for ((uri, body), want) in cases {
        let (status, err) = send_json(&app, Method::POST, &uri, Some(body)).await;
        assert_eq!(status, want, "{err}");
        assert!(err["message"].is_string());
    }
    let (status, _) = send(&app, Method::POST, &format!("{base}/responses"), None).await;
    assert!(status.is_client_error());

    // A click outside the image and the reject box is stored but the trial goes on.
    let (uri, body) = post("d1", json!({"type": "dismissed", "stimulus_id": id, "x": -40, "y": 120, "elapsed": 2.0}));
    let (status, ack) = send_json(&app, Method::POST, &uri, Some(body)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(ack["trial_complete"], false);
    let (_, still) = send_json(&app, Method::GET, &format!("{base}/next"), None).await;
    assert_eq!(still["stimulus_id"], id.as_str());

    // Timeout, then a retried final answer with the same nonce.
    let (uri, body) = post("f1", click(&id, json!([[3, 4]]), json!({"timed_out": true, "elapsed": 10.0})));
    let (_, first) = send_json(&app, Method::POST, &uri, Some(body.clone())).await;
    let (status, retry) = send_json(&app, Method::POST, &uri, Some(body)).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(first["duplicate"], false);
    assert_eq!(retry["duplicate"], true);
    assert_eq!(first["seq"], retry["seq"]);

    let records = read_response_log(&responses_log(root.path())).unwrap();
    assert_eq!(records.len(), 2);
    assert!(matches!(&records[1].response, Response::Click(c) if c.timed_out));
    assert_eq!(records.iter().filter(|r| r.nonce == "f1").count(), 1);

    let (_, summary) = send_json(&app, Method::GET, &format!("{base}/summary"), None).await;
    assert_eq!(summary["completed"], 1);
    assert_eq!(summary["remaining"], 619);
    assert_eq!(summary["dismissed_clicks"], 1);
    assert_eq!(summary["timeouts"], 1);
    assert_eq!(summary["resumed"], false);
    assert_eq!(summary["open_stimulus"], Value::Null);

    let (_, next2) = send_json(&app, Method::GET, &format!("{base}/next"), None).await;
    assert_eq!(next2["trial"], 1);
    assert_ne!(next2["stimulus_id"], id.as_str());
}

/// Keys a trial payload may carry; anything else could leak ground truth.
const PAYLOAD_KEYS: [&str; 11] = [
    "status", "schema_version", "session_id", "trial", "total", "stimulus_id", "task", "time_limit_s", "width", "height", "media",
];

fn assert_no_ground_truth(payload: &Value) {
    let keys: HashSet<&str> = payload.as_object().unwrap().keys().map(String::as_str).collect();
    assert!(keys.iter().all(|k| PAYLOAD_KEYS.contains(k)), "{keys:?}");
    let text = payload.to_string();
    for field in ["edge", "poses", "params", "has_edge", "p_b", "p_f", "center", "angle", "theta", "merge_count"] {
        assert!(!text.contains(&format!("\"{field}\"")), "payload exposes {field}");
    }
}

#[tokio::test]
async fn video_payload_lists_frames() {
    let root = data_root();
    let app = app(root.path());
    let display = json!({"pixel_pitch_mm": 0.35, "viewing_distance_mm": 700.0});
    let (status, created) = send_json(
        &app,
        Method::POST,
        "/sessions",
        Some(json!({"kind": "static-video", "subject": "b", "seed": 1, "display": display})),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED);
    let base = format!("/sessions/{}", created["session_id"].as_str().unwrap());
    for (trial, answer) in ["yes", "timeout"].into_iter().enumerate() {
        let (_, next) = send_json(&app, Method::GET, &format!("{base}/next"), None).await;
        assert_no_ground_truth(&next);
        assert_eq!(next["task"], "yes_no");
        assert_eq!(next["media"]["type"], "frames");
        assert_eq!(next["media"]["fps"], 30.0);
        assert_eq!(next["media"]["frame_count"], 300);
        let urls = next["media"]["urls"].as_array().unwrap();
        assert_eq!(urls.len(), 300);
        let (status, bytes) = send(&app, Method::GET, urls[299].as_str().unwrap(), None).await;
        assert_eq!(status, StatusCode::OK);
        assert!(bytes.starts_with(b"P4"));

        let id = next["stimulus_id"].as_str().unwrap();
        let wrong_task = json!({"nonce": format!("c{trial}"), "response": click(id, json!([]), json!({"reject": true}))});
        let (status, _) = send_json(&app, Method::POST, &format!("{base}/responses"), Some(wrong_task)).await;
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
        let body = json!({"nonce": format!("y{trial}"), "response": {"type": "yes_no", "stimulus_id": id, "answer": answer, "elapsed": 10.0}});
        let (status, ack) = send_json(&app, Method::POST, &format!("{base}/responses"), Some(body)).await;
        assert_eq!(status, StatusCode::OK);
        assert_eq!(ack["trial_complete"], true);
    }
    let (_, summary) = send_json(&app, Method::GET, &format!("{base}/summary"), None).await;
    assert_eq!((summary["completed"].as_u64(), summary["timeouts"].as_u64()), (Some(2), Some(1)));
    assert!((summary["display"]["degrees_per_pixel"].as_f64().unwrap() - 0.028_647_9).abs() < 1e-6);
}

#[tokio::test]
async fn end_marker_and_errors() {
    let root = data_root();
    let app = app(root.path());
    let (status, err) = send_json(&app, Method::POST, "/sessions", Some(json!({"kind": 9, "subject": "a", "seed": 1}))).await;
    assert_eq!((status, err["error"].as_str()), (StatusCode::BAD_REQUEST, Some("bad_request")));
    let (status, _) = send_json(&app, Method::POST, "/sessions", Some(json!({"kind": 4, "subject": "a", "seed": 1}))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = send(&app, Method::POST, "/sessions", Some(json!({"kind": 1}))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = send(&app, Method::GET, "/sessions/s9999/next", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let (_, created) =
        send_json(&app, Method::POST, "/sessions", Some(json!({"kind": 3, "subject": "a", "seed": 2}))).await;
    let base = format!("/sessions/{}", created["session_id"].as_str().unwrap());
    for i in 0..2 {
        let (_, next) = send_json(&app, Method::GET, &format!("{base}/next"), None).await;
        let id = next["stimulus_id"].as_str().unwrap();
        let body = json!({"nonce": format!("n{i}"), "response": {"type": "yes_no", "stimulus_id": id, "answer": "no", "elapsed": 4.0}});
        assert_eq!(send(&app, Method::POST, &format!("{base}/responses"), Some(body)).await.0, StatusCode::OK);
    }
    let (status, end) = send_json(&app, Method::GET, &format!("{base}/next"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(end, json!({"status": "end", "schema_version": 1, "session_id": created["session_id"], "total": 2}));
}

#[tokio::test]
async fn cors_preflight_is_answered() {
    let root = data_root();
    let app = router(Arc::new(Service::open(root.path()).unwrap()), cors(&["http://localhost:5173".into()]).unwrap());
    let req = Request::builder()
        .method(Method::OPTIONS)
        .uri("/sessions")
        .header("origin", "http://localhost:5173")
        .header("access-control-request-method", "POST")
        .header("access-control-request-headers", "content-type")
        .body(Body::empty())
        .unwrap();
    let resp = app.oneshot(req).await.unwrap();
    assert_eq!(resp.headers()["access-control-allow-origin"], "http://localhost:5173");
}

fn answer(svc: &Service, sid: &str, nonce: &str) -> String {
    let Next::Trial(t) = svc.next(sid).unwrap() else { panic!("session ended") };
    let response = serde_json::from_value(click(&t.stimulus_id, json!([[10, 10], [200, 200]]), json!({}))).unwrap();
    svc.record(sid, &SubmitResponse { nonce: nonce.into(), response }).unwrap();
    t.stimulus_id
}

fn create(svc: &Service, subject: &str, seed: u64) -> String {
    svc.create_session(&CreateSession {
        kind: KindSelector::Number(1),
        subject: subject.into(),
        seed,
        display: Some(DisplayGeometry::LAB),
    })
    .unwrap()
    .session_id
}

#[test]
fn full_session_covers_every_image_and_feeds_evaluation() {
    let root = data_root();
    let svc = Service::open(root.path()).unwrap();
    let sid = create(&svc, "a", 8);
    let served: Vec<String> = (0..620).map(|i| answer(&svc, &sid, &format!("n{i}"))).collect();
    assert!(matches!(svc.next(&sid).unwrap(), Next::End { total: 620, .. }));

    let manifest = DatasetManifest::read(&datasets().join("static-image").join(MANIFEST_FILE)).unwrap();
    let want: Vec<String> = permutation(8, 620).into_iter().map(|i| manifest.entries[i].id.clone()).collect();
    assert_eq!(served, want);
    assert_eq!(served.iter().collect::<HashSet<_>>().len(), 620);

    let records = read_response_log(&responses_log(root.path())).unwrap();
    assert_eq!(records.len(), 620);
    assert!(records.iter().enumerate().all(|(i, r)| r.seq == i as u64 && r.subject == "a"));
    let outcomes: Vec<(String, bool)> = records
        .iter()
        .map(|r| {
            let Response::Click(c) = &r.response else { panic!() };
            let entry = manifest.entry(&c.stimulus_id).unwrap();
            (c.stimulus_id.clone(), score_click(c, entry.edge.as_ref().filter(|_| entry.has_edge), ScoringCase::Static).unwrap())
        })
        .collect();
    let grid = build_grid(&outcomes, &manifest).unwrap();
    assert_eq!(grid.rows().map(|row| row.3).sum::<u64>(), 620);

    let other = create(&svc, "b", 9);
    let Next::Trial(t) = svc.next(&other).unwrap() else { panic!() };
    assert_eq!(t.stimulus_id, manifest.entries[permutation(9, 620)[0]].id);
}

#[test]
fn restart_replays_logs() {
    let root = data_root();
    let (sid, served) = {
        let svc = Service::open(root.path()).unwrap();
        let sid = create(&svc, "a", 3);
        let served: Vec<String> = (0..3).map(|i| answer(&svc, &sid, &format!("n{i}"))).collect();
        svc.next(&sid).unwrap();
        (sid, served)
    };
    // A crash mid-write leaves a partial line that was never acknowledged.
    let log = responses_log(root.path());
    let mut text = std::fs::read_to_string(&log).unwrap();
    text.push_str("{\"schema_version\":1,\"session_id\":\"s00");
    std::fs::write(&log, text).unwrap();

    let svc = Service::open(root.path()).unwrap();
    assert!(svc.repaired_bytes() > 0);
    let summary = svc.summary(&sid).unwrap();
    assert_eq!((summary.completed, summary.records, summary.resumed), (3, 3, true));
    assert!(summary.display.is_some());

    let Next::Trial(t) = svc.next(&sid).unwrap() else { panic!() };
    let manifest = DatasetManifest::read(&datasets().join("static-image").join(MANIFEST_FILE)).unwrap();
    let order = permutation(3, 620);
    assert_eq!(served[2], manifest.entries[order[2]].id);
    assert_eq!(t.stimulus_id, manifest.entries[order[3]].id);

    // Retried nonces stay idempotent across the restart.
    let response = serde_json::from_value(click(&served[2], json!([]), json!({}))).unwrap();
    let ack = svc.record(&sid, &SubmitResponse { nonce: "n2".into(), response }).unwrap();
    assert!(ack.duplicate);
    assert_eq!(ack.seq, 2);
    assert_eq!(create(&svc, "c", 1), "s0001");
    assert_eq!(read_response_log(&log).unwrap().len(), 3);
}

#[test]
fn concurrent_sessions_append_whole_records() {
    let root = data_root();
    let svc = Service::open(root.path()).unwrap();
    let ids: Vec<String> = (0..4).map(|i| create(&svc, &format!("p{i}"), i)).collect();
    std::thread::scope(|scope| {
        for sid in &ids {
            let svc = &svc;
            scope.spawn(move || (0..50).for_each(|i| drop(answer(svc, sid, &format!("n{i}")))));
        }
    });
    let records = read_response_log(&responses_log(root.path())).unwrap();
    assert_eq!(records.len(), 200);
    for sid in &ids {
        let seqs: Vec<u64> = records.iter().filter(|r| &r.session_id == sid).map(|r| r.seq).collect();
        assert_eq!(seqs, (0..50).collect::<Vec<_>>());
    }
}
