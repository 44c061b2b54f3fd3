#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use chiller_ddo::control::FixedVsdController;
use chiller_ddo::enrich::{EnrichmentController, EnrichmentPlan};
use chiller_ddo::optimize::percentile_bounds;
use chiller_ddo::simplant::{simulate, Scenario, DEFAULT_START};
use chiller_ddo::surrogate::{train_graph, MlpConfig, ModelBundle, TrainConfig};
use chiller_ddo::telemetry::{clean_records, CleanConfig};
use plantd::config::ServiceConfig;

/// A quickly trained bundle shared by every test in the binary. Accuracy is
/// beside the point here; the service only needs a working model graph.
pub fn bundle_path() -> &'static Path {
    static PATH: OnceLock<PathBuf> = OnceLock::new();
    PATH.get_or_init(|| {
        let mut s = Scenario { seed: 5, days: 4, ..Scenario::default() };
        let plan = EnrichmentPlan::daily(s.days, 6, 30, 5).unwrap();
        s.enrichment = Some(plan.clone());
        let mut c = EnrichmentController::new(plan, FixedVsdController::new(DEFAULT_START), 5);
        let raw = simulate(&s, &mut c, s.duration_minutes()).unwrap();
        let records = clean_records(&raw, &CleanConfig::default()).records;
        let cfg = TrainConfig { folds: 2, days_per_fold: 2, mlp: MlpConfig { max_epochs: 400, ..MlpConfig::default() } };
        let (graph, _) = train_graph(&records, &cfg).unwrap();
        let bounds = percentile_bounds(&records, s.enrichment.as_ref(), 5.0, 95.0);
        let dir = tempfile::tempdir().unwrap().keep();
        let path = dir.join("bundle.json");
        ModelBundle::new(graph, bounds, None).save(&path).unwrap();
        path
    })
}

/// Instant-speed config writing into `dir`.
pub fn config(dir: &Path, bundle: bool) -> ServiceConfig {
    ServiceConfig {
        telemetry: dir.join("telemetry.jsonl"),
        run_log: dir.join("runlog.jsonl"),
        control_log: dir.join("controls.jsonl"),
        bundle: bundle.then(|| bundle_path().to_path_buf()),
        speedup: None,
        ..ServiceConfig::default()
    }
}

pub fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Vec<T> {
    std::fs::read_to_string(path).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}
