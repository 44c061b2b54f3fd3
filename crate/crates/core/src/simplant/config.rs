use serde::{Deserialize, Serialize};

/// Closed interval `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

impl Bounds {
    pub const fn new(lower: f64, upper: f64) -> Self {
        Self { lower, upper }
    }

    pub fn span(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lower && v <= self.upper
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.clamp(self.lower, self.upper)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChillerSpec {
    pub capacity_rt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FanSpec {
    pub rated_kw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpSpec {
    pub rated_kw: f64,
    pub rated_flow_lps: f64,
}

/// `COP = c0 - c1 (cwshdr - chsp) - c2 (PLR - plr_opt)^2 + c3 ln(cwfhdr / design)`,
/// clipped to `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CopCurve {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub plr_opt: f64,
    pub min: f64,
    pub max: f64,
}

impl Default for CopCurve {
    fn default() -> Self {
        Self { c0: 6.5, c1: 0.15, c2: 2.0, c3: 0.3, plr_opt: 0.8, min: 2.0, max: 8.0 }
    }
}

/// `approach = a0 + a1 · Q_rej / (n_on · s · a_ref_kw)`, clipped to
/// `[min_approach, max_approach]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TowerCurve {
    pub a0: f64,
    pub a1: f64,
    pub a_ref_kw: f64,
    pub min_approach: f64,
    pub max_approach: f64,
}

impl Default for TowerCurve {
    fn default() -> Self {
        Self { a0: 2.0, a1: 1.0, a_ref_kw: 1450.0, min_approach: 1.5, max_approach: 12.0 }
    }
}

/// Sensor imperfections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    /// Relative σ of multiplicative Gaussian noise on power and flow readings.
    pub sigma: f64,
    /// Additive σ on the condenser temperature reading, °C.
    pub temp_sigma_c: f64,
    /// Per-reading probability that a power reading is a gross outlier.
    pub outlier_rate: f64,
    /// Per-reading probability that a running unit reports zero power.
    pub dropout_rate: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { sigma: 0.01, temp_sigma_c: 0.1, outlier_rate: 0.002, dropout_rate: 0.001 }
    }
}

impl NoiseConfig {
    pub fn none() -> Self {
        Self { sigma: 0.0, temp_sigma_c: 0.0, outlier_rate: 0.0, dropout_rate: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpeedLimits {
    pub cwp: Bounds,
    pub chwp: Bounds,
    pub ct: Bounds,
}

impl Default for SpeedLimits {
    fn default() -> Self {
        let b = Bounds::new(20.0, 100.0);
        Self { cwp: b, chwp: b, ct: b }
    }
}

impl SpeedLimits {
    /// `[cwp, chwp, ct]`
    pub fn to_array(&self) -> [Bounds; 3] {
        [self.cwp, self.chwp, self.ct]
    }
}

/// Ratings and closure coefficients of the simulated plant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantConfig {
    pub chillers: Vec<ChillerSpec>,
    pub cooling_towers: Vec<FanSpec>,
    pub cw_pumps: Vec<PumpSpec>,
    pub chw_pumps: Vec<PumpSpec>,
    /// Condenser flow each running chiller is designed for, L/s.
    pub design_cw_flow_per_chiller_lps: f64,
    /// Largest chilled-water temperature difference the loop can carry, °C.
    pub max_chw_delta_t: f64,
    pub cop: CopCurve,
    pub tower: TowerCurve,
    pub noise: NoiseConfig,
    pub speed: SpeedLimits,
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self {
            chillers: vec![ChillerSpec { capacity_rt: 450.0 }; 3],
            cooling_towers: vec![FanSpec { rated_kw: 30.0 }; 3],
            cw_pumps: vec![PumpSpec { rated_kw: 37.0, rated_flow_lps: 80.0 }; 3],
            chw_pumps: vec![PumpSpec { rated_kw: 45.0, rated_flow_lps: 68.0 }; 3],
            design_cw_flow_per_chiller_lps: 80.0,
            max_chw_delta_t: 7.0,
            cop: CopCurve::default(),
            tower: TowerCurve::default(),
            noise: NoiseConfig::default(),
            speed: SpeedLimits::default(),
        }
    }
}

impl PlantConfig {
    pub fn noiseless(mut self) -> Self {
        self.noise = NoiseConfig::none();
        self
    }

    pub fn design_capacity_rt(&self) -> f64 {
        self.chillers.iter().map(|c| c.capacity_rt).sum()
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.chillers.is_empty() || self.cooling_towers.is_empty() || self.cw_pumps.is_empty() || self.chw_pumps.is_empty() {
            return Err("plant needs at least one unit of every equipment type".into());
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !self.chillers.iter().all(|c| positive(c.capacity_rt)) {
            return Err("chiller capacities must be positive".into());
        }
        if !self.cooling_towers.iter().all(|f| positive(f.rated_kw)) {
            return Err("cooling tower ratings must be positive".into());
        }
        if !self.cw_pumps.iter().chain(&self.chw_pumps).all(|p| positive(p.rated_kw) && positive(p.rated_flow_lps)) {
            return Err("pump ratings must be positive".into());
        }
        if !positive(self.design_cw_flow_per_chiller_lps) || !positive(self.max_chw_delta_t) || !positive(self.tower.a_ref_kw) {
            return Err("design flow, ΔT limit and tower reference must be positive".into());
        }
        let n = &self.noise;
        if !(n.sigma >= 0.0 && n.temp_sigma_c >= 0.0) {
            return Err("noise σ must be non-negative".into());
        }
        if !((0.0..=1.0).contains(&n.outlier_rate) && (0.0..=1.0).contains(&n.dropout_rate)) {
            return Err("outlier and dropout rates must lie in [0, 1]".into());
        }
        for (name, b) in [("cwp", self.speed.cwp), ("chwp", self.speed.chwp), ("ct", self.speed.ct)] {
            if !(b.lower >= 20.0 && b.upper <= 100.0 && b.lower <= b.upper) {
                return Err(format!("{name} speed bounds must satisfy 20 <= lower <= upper <= 100"));
            }
        }
        Ok(())
    }
}
