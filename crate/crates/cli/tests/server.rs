use axum::body::{Body, Bytes};
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use padkit_cli::server::router;
use padkit_cli::store::SignalStore;
use serde_json::{json, Value};
use tower::ServiceExt;

async fn send(app: &Router, method: &str, uri: &str, body: Option<Vec<u8>>) -> (StatusCode, Bytes) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map(Body::from).unwrap_or_else(Body::empty))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    (status, resp.into_body().collect().await.unwrap().to_bytes())
}

async fn post(app: &Router, uri: &str, body: Value) -> (StatusCode, Value) {
    let (s, b) = send(app, "POST", uri, Some(serde_json::to_vec(&body).unwrap())).await;
    (s, serde_json::from_slice(&b).unwrap())
}

fn app() -> (tempfile::TempDir, Router) {
    let dir = tempfile::tempdir().unwrap();
    let r = router(SignalStore::new(dir.path().join("signals")));
    (dir, r)
}

fn periodic(n: usize) -> Vec<f64> {
    (0..n).map(|t| (t as f64 * 0.21).sin() + 0.4 * (t as f64 * 0.05).cos()).collect()
}

#[tokio::test]
async fn healthz_and_empty_listing() {
    let (_d, app) = app();
    let (s, _) = send(&app, "GET", "/healthz", None).await;
    assert_eq!(s, StatusCode::OK);
    let (s, b) = send(&app, "GET", "/api/signals", None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(serde_json::from_slice::<Value>(&b).unwrap(), json!({"signals": []}));
}

#[tokio::test]
async fn detect_on_values() {
    let (_d, app) = app();
    let (s, v) = post(&app, "/api/detect", json!({"values": periodic(300), "L": 10, "S": 200, "delta": 0.5})).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["flags"].as_array().unwrap().len(), 300);
    assert_eq!(v["scores"].as_array().unwrap().len(), 291);
    assert_eq!(v["warm_up"], 10);
    assert_eq!(v["degraded"], false);
    assert_eq!(v["regions"], json!([]));
    assert!(v["residual"].as_f64().unwrap() < 1e-6);
}

#[tokio::test]
async fn identical_requests_give_identical_bytes() {
    let (_d, app) = app();
    let body = serde_json::to_vec(&json!({"values": periodic(400), "L": 12, "S": 250, "N": 380, "method": "eigh"})).unwrap();
    let (s1, b1) = send(&app, "POST", "/api/detect", Some(body.clone())).await;
    let (s2, b2) = send(&app, "POST", "/api/detect", Some(body)).await;
    assert_eq!((s1, s2), (StatusCode::OK, StatusCode::OK));
    assert_eq!(b1, b2);
}

#[tokio::test]
async fn validation_errors_name_the_field() {
    let (_d, app) = app();
    let v = periodic(100);
    let cases = [
        (json!({"values": v, "L": 60, "S": 50}), "L"),
        (json!({"values": v, "L": 5, "S": 500}), "S"),
        (json!({"values": v, "L": 5, "S": 50, "N": 3}), "N"),
        (json!({"values": v, "L": 5, "S": 50, "delta": -1.0}), "delta"),
        (json!({"values": v, "L": 5, "S": 50, "nu": 0.0}), "nu"),
        (json!({"values": v, "L": 5, "S": 50, "method": "qr"}), "method"),
        (json!({"values": v, "S": 50}), "L"),
        (json!({"values": v, "L": "five", "S": 50}), "L"),
        (json!({"L": 5, "S": 50}), "values"),
        (json!({"values": [], "L": 5, "S": 50}), "values"),
        (json!({"values": v, "L": 5, "S": 50, "bogus": 1}), "bogus"),
        (json!({"signal_id": "../x", "L": 5, "S": 50}), "signal_id"),
    ];
    for (body, field) in cases {
        let (s, resp) = post(&app, "/api/detect", body.clone()).await;
        assert_eq!(s, StatusCode::BAD_REQUEST, "{body}: {resp}");
        assert_eq!(resp["field"], field, "{body}: {resp}");
        assert!(resp["error"].as_str().unwrap().len() > 3);
    }
    let (s, _) = send(&app, "POST", "/api/detect", Some(b"{not json".to_vec())).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, resp) = post(&app, "/api/detect", json!({"values": v, "L": 60, "S": 50})).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let msg = resp["error"].as_str().unwrap();
    assert!(msg.contains('L') && msg.contains('S'));
}

#[tokio::test]
async fn unknown_signal_is_404() {
    let (_d, app) = app();
    let (s, resp) = post(&app, "/api/detect", json!({"signal_id": "nope", "L": 5, "S": 50})).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(resp["field"], "signal_id");
}

#[tokio::test]
async fn numerical_failure_is_422() {
    let (_d, app) = app();
    // A huge dynamic range drives the Gram matrix to overflow.
    let v: Vec<f64> = (0..200).map(|t| if t % 7 == 0 { 1e200 } else { 1.0 }).collect();
    let (s, resp) = post(&app, "/api/detect", json!({"values": v, "L": 10, "S": 150, "method": "ipm"})).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY, "{resp}");
}

#[tokio::test]
async fn generate_store_and_detect_round_trip() {
    let (_d, app) = app();
    let body = json!({"length": 2000, "windows": [[1801, 2000]], "noise_amp": 80.0, "profile": "chirp", "seed": 0});
    let (s, g) = post(&app, "/api/generate", body.clone()).await;
    assert_eq!(s, StatusCode::OK, "{g}");
    let id = g["signal_id"].as_str().unwrap().to_string();
    assert_eq!(g["values"].as_array().unwrap().len(), 2000);
    assert_eq!(g["labels"], json!([[1801, 2000]]));
    let (_, again) = post(&app, "/api/generate", body).await;
    assert_eq!(again["signal_id"], id);

    let (_, list) = send(&app, "GET", "/api/signals", None).await;
    assert_eq!(serde_json::from_slice::<Value>(&list).unwrap(), json!({"signals": [id]}));

    let (s, d) = post(&app, "/api/detect", json!({"signal_id": id, "L": 150, "S": 1200, "delta": 1.2, "method": "svd"})).await;
    assert_eq!(s, StatusCode::OK, "{d}");
    let regions = d["regions"].as_array().unwrap();
    assert!(!regions.is_empty());
    assert!(regions.iter().all(|r| r[0].as_u64().unwrap() >= 1801));

    let (s2, d2) = post(&app, "/api/detect", json!({"values": g["values"], "L": 150, "S": 1200, "delta": 1.2, "method": "svd"})).await;
    assert_eq!(s2, StatusCode::OK);
    assert_eq!(d["flags"], d2["flags"]);
}

#[tokio::test]
async fn generate_validation() {
    let (_d, app) = app();
    let cases = [
        (json!({"length": 0}), "length"),
        (json!({"length": 100, "windows": [[90, 120]]}), "windows"),
        (json!({"length": 100, "noise_amp": -1.0}), "noise_amp"),
        (json!({"length": 100, "profile": "square"}), "profile"),
        (json!({"windows": []}), "length"),
        (json!({"length": 10_000_000}), "length"),
    ];
    for (body, field) in cases {
        let (s, resp) = post(&app, "/api/generate", body.clone()).await;
        assert_eq!(s, StatusCode::BAD_REQUEST, "{body}: {resp}");
        assert_eq!(resp["field"], field, "{body}: {resp}");
    }
}
