mod common;

use std::sync::{Arc, Mutex};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use chiller_ddo::control::ControlSource;
use chiller_ddo::optimize::RunLogEntry;
use chiller_ddo::simplant::{AppliedControl, OperatorSchedule, PlantConfig, SensorRecord};
use chiller_ddo::units::MINUTES_PER_DAY;
use plantd::api::{router, Shared};
use plantd::service::ServiceState;

use common::{config, read_jsonl};

fn service(dir: &std::path::Path, bundle: bool) -> (Shared, Router) {
    let state: Shared = Arc::new(Mutex::new(ServiceState::start(&config(dir, bundle)).unwrap()));
    let app = router(Arc::clone(&state));
    (state, app)
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())).unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

fn advance(state: &Shared, minutes: u64) {
    state.lock().unwrap().advance(minutes).unwrap();
}

#[tokio::test]
async fn latest_telemetry_is_available_immediately() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = service(dir.path(), false);
    let (status, body) = call(&app, "GET", "/telemetry/latest", None).await;
    assert_eq!(status, StatusCode::OK);
    let record: SensorRecord = serde_json::from_value(body).unwrap();
    assert_eq!(record.ts, 0);
    assert!(record.total_kw > 0.0);
}

#[tokio::test]
async fn range_is_half_open_and_validated() {
    let dir = tempfile::tempdir().unwrap();
    let (state, app) = service(dir.path(), false);
    advance(&state, 10);
    let (status, body) = call(&app, "GET", "/telemetry/range?from=2&to=5", None).await;
    assert_eq!(status, StatusCode::OK);
    let records: Vec<SensorRecord> = serde_json::from_value(body).unwrap();
    assert_eq!(records.iter().map(|r| r.ts).collect::<Vec<_>>(), vec![2, 3, 4]);
    let (status, _) = call(&app, "GET", "/telemetry/range?from=5&to=2", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, body) = call(&app, "GET", "/telemetry/range?from=2", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(body["error"].as_str().unwrap().contains("to"));
    let (status, body) = call(&app, "POST", "/setpoint", Some(json!({ "temp": 7 }))).await;
    assert!(status.is_client_error());
    assert!(body["error"].is_string());
}

#[tokio::test]
async fn setpoint_applies_and_rejects_out_of_range() {
    let dir = tempfile::tempdir().unwrap();
    let (state, app) = service(dir.path(), false);
    let (status, _) = call(&app, "POST", "/setpoint", Some(json!({ "chsp": 8.5 }))).await;
    assert_eq!(status, StatusCode::OK);
    advance(&state, 1);
    let (_, latest) = call(&app, "GET", "/telemetry/latest", None).await;
    assert_eq!(latest["chsp"], json!(8.5));
    let (status, _) = call(&app, "POST", "/setpoint", Some(json!({ "chsp": 20.0 }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn schedule_round_trips_through_status() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = service(dir.path(), false);
    let mut schedule = OperatorSchedule::rotation(&PlantConfig::default());
    schedule.days[0].chsp = 8.0;
    schedule.days.truncate(2);
    let (status, _) = call(&app, "POST", "/schedule", Some(serde_json::to_value(&schedule).unwrap())).await;
    assert_eq!(status, StatusCode::OK);
    let (_, st) = call(&app, "GET", "/status", None).await;
    let echoed: OperatorSchedule = serde_json::from_value(st["schedule"].clone()).unwrap();
    assert_eq!(echoed, schedule);

    let (status, _) = call(&app, "POST", "/schedule", Some(json!({ "days": [] }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let mut off = schedule.clone();
    off.days[0].config.ch = vec![false; 3];
    let (status, _) = call(&app, "POST", "/schedule", Some(serde_json::to_value(&off).unwrap())).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (_, st) = call(&app, "GET", "/status", None).await;
    assert_eq!(serde_json::from_value::<OperatorSchedule>(st["schedule"].clone()).unwrap(), schedule);
}

#[tokio::test]
async fn concurrent_schedule_posts_leave_one_of_them() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = service(dir.path(), false);
    let plant = PlantConfig::default();
    let a = OperatorSchedule::rotation(&plant);
    let mut b = a.clone();
    for d in &mut b.days {
        d.chsp = 9.0;
        d.config.cwp = vec![true; 3];
    }
    let (ra, rb) = tokio::join!(
        call(&app, "POST", "/schedule", Some(serde_json::to_value(&a).unwrap())),
        call(&app, "POST", "/schedule", Some(serde_json::to_value(&b).unwrap())),
    );
    assert_eq!((ra.0, rb.0), (StatusCode::OK, StatusCode::OK));
    let (_, st) = call(&app, "GET", "/status", None).await;
    let got: OperatorSchedule = serde_json::from_value(st["schedule"].clone()).unwrap();
    assert!(got == a || got == b);
}

#[tokio::test]
async fn ddo_requires_a_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = service(dir.path(), false);
    let (status, body) = call(&app, "POST", "/ddo", Some(json!({ "enabled": true }))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert!(body["error"].as_str().unwrap().contains("bundle"));
    let (status, _) = call(&app, "POST", "/ddo", Some(json!({ "enabled": false }))).await;
    assert_eq!(status, StatusCode::OK);
    let (_, st) = call(&app, "GET", "/status", None).await;
    assert_eq!(st["ddo_enabled"], json!(false));
    assert_eq!(st["bundle_loaded"], json!(false));
}

#[tokio::test]
async fn enrichment_window_perturbs_and_restores() {
    let dir = tempfile::tempdir().unwrap();
    let (state, app) = service(dir.path(), false);
    advance(&state, 4);
    let (status, body) = call(&app, "POST", "/enrichment/window", Some(json!({ "duration_min": 10 }))).await;
    assert_eq!(status, StatusCode::CREATED);
    let start = body["start"].as_u64().unwrap();
    assert_eq!(start, 6);
    let (status, _) = call(&app, "POST", "/enrichment/window", Some(json!({ "duration_min": 10 }))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    let (_, st) = call(&app, "GET", "/status", None).await;
    assert_eq!(st["enrichment_windows"].as_array().unwrap().len(), 1);
    advance(&state, 20);

    let records: Vec<SensorRecord> = read_jsonl(&dir.path().join("telemetry.jsonl"));
    let before = records[5].control;
    let inside: Vec<_> = records[6..16].iter().map(|r| r.control).collect();
    assert!(inside.iter().all(|&c| c != before));
    assert!(inside.windows(2).any(|w| w[0] != w[1]));
    assert_eq!(records[16].control, before);

    let controls: Vec<AppliedControl> = read_jsonl(&dir.path().join("controls.jsonl"));
    let enrich = controls.iter().filter(|c| c.source == ControlSource::Enrichment).count();
    assert_eq!(enrich, 10);
}

#[tokio::test]
async fn savings_needs_history() {
    let dir = tempfile::tempdir().unwrap();
    let (_, app) = service(dir.path(), false);
    let (status, body) = call(&app, "GET", "/savings", None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert!(body["error"].is_string());
}

/// Every control change in telemetry is explained by exactly one control-log
/// entry, and every applied optimizer tick shows up in telemetry.
fn check_logs(dir: &std::path::Path) -> (Vec<SensorRecord>, Vec<RunLogEntry>) {
    let records: Vec<SensorRecord> = read_jsonl(&dir.join("telemetry.jsonl"));
    let runs: Vec<RunLogEntry> = read_jsonl(&dir.join("runlog.jsonl"));
    let controls: Vec<AppliedControl> = read_jsonl(&dir.join("controls.jsonl"));
    for w in records.windows(2) {
        if w[0].control != w[1].control {
            let matching: Vec<_> = controls.iter().filter(|c| c.ts == w[1].ts).collect();
            assert_eq!(matching.len(), 1, "minute {}", w[1].ts);
            assert_eq!(matching[0].control, w[1].control);
        }
    }
    let last = records.last().unwrap().ts;
    for c in controls[1..].iter().filter(|c| c.ts <= last) {
        let r = records.iter().find(|r| r.ts == c.ts).unwrap();
        assert_eq!(r.control, c.control);
    }
    for e in &runs {
        let Some(r) = records.iter().find(|r| r.ts == e.ts) else { continue };
        assert_eq!(r.control, e.applied, "optimizer tick for minute {}", e.ts);
        let prev = records.iter().find(|p| p.ts + 1 == e.ts).unwrap();
        assert_eq!(e.measured_kw, prev.total_kw);
        if e.error.is_none() && r.control != prev.control {
            assert!(controls.iter().any(|c| c.ts == e.ts && c.source == ControlSource::Optimizer));
        }
    }
    (records, runs)
}

#[tokio::test]
async fn served_day_with_ddo_keeps_logs_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let (state, app) = service(dir.path(), true);
    let (status, _) = call(&app, "POST", "/ddo", Some(json!({ "enabled": true }))).await;
    assert_eq!(status, StatusCode::OK);
    let (status, _) = call(&app, "POST", "/enrichment/window", Some(json!({ "duration_min": 30 }))).await;
    assert_eq!(status, StatusCode::CREATED);
    advance(&state, MINUTES_PER_DAY - 1);

    let (records, runs) = check_logs(dir.path());
    assert_eq!(records.len() as u64, MINUTES_PER_DAY);
    // One tick per three minutes outside the enrichment window.
    let expected = (0..MINUTES_PER_DAY).filter(|t| (t + 1) % 3 == 0 && !(2..32).contains(&(t + 1))).count();
    assert_eq!(runs.len(), expected);
    assert!(runs.iter().filter(|e| e.error.is_none()).count() * 10 >= runs.len() * 9);
    assert!(runs.iter().all(|e| !(2..32).contains(&e.ts)));

    let (_, st) = call(&app, "GET", "/status", None).await;
    assert_eq!(st["controller"], json!("ddo"));
    assert_eq!(st["last_solve"]["ts"], json!(runs.last().unwrap().ts));

    let (status, _) = call(&app, "POST", "/ddo", Some(json!({ "enabled": false }))).await;
    assert_eq!(status, StatusCode::OK);
    advance(&state, 60);
    let after: Vec<RunLogEntry> = read_jsonl(&dir.path().join("runlog.jsonl"));
    assert_eq!(after.len(), runs.len());
    check_logs(dir.path());
}

#[tokio::test]
async fn savings_compares_optimized_days_with_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let (state, app) = service(dir.path(), true);
    advance(&state, 3 * MINUTES_PER_DAY - 1);
    let (status, _) = call(&app, "GET", "/savings", None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    call(&app, "POST", "/ddo", Some(json!({ "enabled": true }))).await;
    advance(&state, MINUTES_PER_DAY);
    let (status, body) = call(&app, "GET", "/savings", None).await;
    assert_eq!(status, StatusCode::OK);
    let days = body["days"].as_array().unwrap();
    assert_eq!(days.len(), 1);
    assert_eq!(days[0]["date"], json!(3));
    let measured: f64 = read_jsonl::<SensorRecord>(&dir.path().join("telemetry.jsonl"))
        .iter()
        .filter(|r| r.ts >= 3 * MINUTES_PER_DAY)
        .map(|r| r.total_kw / 60.0)
        .sum();
    let reported = days[0]["measured_kwh"].as_f64().unwrap();
    assert!((reported - measured).abs() <= 1e-9 * measured);
    assert!(body["mean_saving_pct"].as_f64().unwrap() > 0.0);
}
