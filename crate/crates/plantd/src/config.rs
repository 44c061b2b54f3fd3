use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use chiller_ddo::enrich::SpeedRanges;

/// Environment variable that overrides the config path given on the command line.
pub const CONFIG_ENV: &str = "PLANTD_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    /// Scenario file; the built-in default scenario when absent.
    pub scenario: Option<PathBuf>,
    pub telemetry: PathBuf,
    /// Trained model bundle; without one the optimizer cannot be enabled.
    pub bundle: Option<PathBuf>,
    pub run_log: PathBuf,
    pub control_log: PathBuf,
    pub optimizer_period: u64,
    pub solver: String,
    pub enrichment: EnrichmentDefaults,
    pub listen: String,
    /// Simulated minutes per wall-clock minute; `None` runs as fast as possible.
    pub speedup: Option<f64>,
    pub ddo_enabled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnrichmentDefaults {
    pub duration_min: u64,
    pub redraw_minutes: u64,
    pub ranges: Option<SpeedRanges>,
}

impl Default for EnrichmentDefaults {
    fn default() -> Self {
        Self { duration_min: chiller_ddo::enrich::DEFAULT_WINDOW_MINUTES, redraw_minutes: chiller_ddo::enrich::DEFAULT_REDRAW_MINUTES, ranges: None }
    }
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            scenario: None,
            telemetry: PathBuf::from("telemetry.jsonl"),
            bundle: None,
            run_log: PathBuf::from("runlog.jsonl"),
            control_log: PathBuf::from("controls.jsonl"),
            optimizer_period: 3,
            solver: "cobyla".into(),
            enrichment: EnrichmentDefaults::default(),
            listen: "127.0.0.1:8080".into(),
            speedup: Some(60.0),
            ddo_enabled: false,
        }
    }
}

impl ServiceConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| anyhow::anyhow!("reading config {}: {e}", path.display()))?;
        let cfg: ServiceConfig = serde_json::from_str(&text).map_err(|e| anyhow::anyhow!("parsing config {}: {e}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Config path from the environment if set, else `cli`.
    pub fn resolve_path(cli: Option<PathBuf>) -> Option<PathBuf> {
        std::env::var_os(CONFIG_ENV).map(PathBuf::from).or(cli)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if !(2..=3).contains(&self.optimizer_period) {
            anyhow::bail!("optimizer_period must be 2 or 3 minutes, got {}", self.optimizer_period);
        }
        if let Some(s) = self.speedup {
            if !(s > 0.0 && s.is_finite()) {
                anyhow::bail!("speedup must be positive");
            }
        }
        if self.enrichment.duration_min == 0 || self.enrichment.redraw_minutes == 0 {
            anyhow::bail!("enrichment duration and redraw period must be positive");
        }
        for p in [&self.scenario, &self.bundle].into_iter().flatten() {
            if !p.exists() {
                anyhow::bail!("{} does not exist", p.display());
            }
        }
        Ok(())
    }
}
