use std::f64::consts::PI;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::config::PlantConfig;
use super::record::Weather;
use super::schedule::OperatorSchedule;
use crate::enrich::EnrichmentPlan;
use crate::units::MINUTES_PER_DAY;

/// Diurnal weather generator parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WeatherSpec {
    pub db_min: f64,
    pub db_max: f64,
    pub rh_min: f64,
    pub rh_max: f64,
    /// Additive σ of per-minute dry-bulb noise, °C.
    pub db_noise_c: f64,
    /// Additive σ of per-minute humidity noise, percent.
    pub rh_noise: f64,
    /// Minute of day at which dry bulb peaks.
    pub peak_minute: u64,
}

impl Default for WeatherSpec {
    fn default() -> Self {
        Self { db_min: 24.0, db_max: 36.0, rh_min: 55.0, rh_max: 95.0, db_noise_c: 0.2, rh_noise: 1.0, peak_minute: 840 }
    }
}

/// Cooling load profile. The building load follows the outdoor temperature
/// cycle between `night_fraction · peak_rt` and `peak_rt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LoadSpec {
    pub peak_rt: f64,
    pub night_fraction: f64,
}

impl Default for LoadSpec {
    fn default() -> Self {
        Self { peak_rt: 700.0, night_fraction: 0.5 }
    }
}

/// Everything needed to reproduce a simulated run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Scenario {
    pub seed: u64,
    pub days: u64,
    pub weather: WeatherSpec,
    pub load: LoadSpec,
    pub plant: PlantConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<OperatorSchedule>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub enrichment: Option<EnrichmentPlan>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            seed: 42,
            days: 15,
            weather: WeatherSpec { db_min: 25.0, db_max: 33.0, rh_min: 60.0, rh_max: 95.0, ..WeatherSpec::default() },
            load: LoadSpec::default(),
            plant: PlantConfig::default(),
            schedule: None,
            enrichment: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("reading scenario {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parsing scenario: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let scenario: Scenario = serde_json::from_str(text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let w = &self.weather;
        if !(w.db_min <= w.db_max && w.db_min.is_finite() && w.db_max.is_finite()) {
            return Err(ScenarioError::Invalid("db_min must not exceed db_max".into()));
        }
        if !(0.0 <= w.rh_min && w.rh_min <= w.rh_max && w.rh_max <= 100.0) {
            return Err(ScenarioError::Invalid("humidity range must satisfy 0 <= rh_min <= rh_max <= 100".into()));
        }
        if !(w.db_noise_c >= 0.0 && w.rh_noise >= 0.0) {
            return Err(ScenarioError::Invalid("weather noise must be non-negative".into()));
        }
        let l = &self.load;
        if !(l.peak_rt > 0.0 && (0.0..=1.0).contains(&l.night_fraction) && l.night_fraction > 0.0) {
            return Err(ScenarioError::Invalid("load needs peak_rt > 0 and night_fraction in (0, 1]".into()));
        }
        self.plant.validate().map_err(ScenarioError::Invalid)?;
        if l.peak_rt > self.plant.design_capacity_rt() {
            return Err(ScenarioError::Invalid("peak load exceeds plant design capacity".into()));
        }
        if let Some(schedule) = &self.schedule {
            schedule.validate(&self.plant, l.peak_rt).map_err(ScenarioError::Invalid)?;
        }
        if let Some(plan) = &self.enrichment {
            plan.validate(&self.plant.speed).map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        }
        Ok(())
    }

    pub fn duration_minutes(&self) -> u64 {
        self.days * MINUTES_PER_DAY
    }

    /// The operator schedule, or a default rotation when none is given.
    pub fn operator_schedule(&self) -> OperatorSchedule {
        self.schedule.clone().unwrap_or_else(|| OperatorSchedule::rotation(&self.plant))
    }

    /// Noise-free diurnal shape in `[0, 1]`, peaking at `peak_minute`.
    fn diurnal(&self, t: u64) -> f64 {
        // Reduce to minute-of-day first so the profile repeats bit-exactly every day.
        let phase = ((t % MINUTES_PER_DAY) as f64 - self.weather.peak_minute as f64) / MINUTES_PER_DAY as f64;
        0.5 * (1.0 + (2.0 * PI * phase).cos())
    }

    /// Weather at minute `t`. Deterministic in `(seed, t)` regardless of call order.
    pub fn weather_at(&self, t: u64) -> Weather {
        let w = &self.weather;
        let shape = self.diurnal(t);
        let mut db = w.db_min + (w.db_max - w.db_min) * shape;
        let mut rh = w.rh_max - (w.rh_max - w.rh_min) * shape;
        if w.db_noise_c > 0.0 || w.rh_noise > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(minute_seed(self.seed, t));
            let e1: f64 = StandardNormal.sample(&mut rng);
            let e2: f64 = StandardNormal.sample(&mut rng);
            db += w.db_noise_c * e1;
            rh += w.rh_noise * e2;
        }
        Weather { db, rh: rh.clamp(0.0, 100.0) }
    }

    /// Cooling load at minute `t`, RT.
    pub fn load_at(&self, t: u64) -> f64 {
        let l = &self.load;
        l.peak_rt * (l.night_fraction + (1.0 - l.night_fraction) * self.diurnal(t))
    }
}

fn minute_seed(seed: u64, t: u64) -> u64 {
    // SplitMix64 finalizer over the pair, so neighbouring minutes decorrelate.
    let mut z = seed ^ t.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
