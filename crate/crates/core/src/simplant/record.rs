use serde::{Deserialize, Serialize};

/// Outdoor conditions at one minute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weather {
    /// Dry-bulb temperature, °C.
    pub db: f64,
    /// Relative humidity, percent.
    pub rh: f64,
}

impl Weather {
    /// Rule-of-thumb wet-bulb estimate, °C.
    pub fn wet_bulb(&self) -> f64 {
        self.db - (100.0 - self.rh) / 5.0
    }
}

/// VSD speeds in percent: the optimizer's decision vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlVector {
    pub cwp_speed: f64,
    pub chwp_speed: f64,
    pub ct_speed: f64,
}

impl ControlVector {
    pub const fn new(cwp_speed: f64, chwp_speed: f64, ct_speed: f64) -> Self {
        Self { cwp_speed, chwp_speed, ct_speed }
    }

    /// `[cwp, chwp, ct]`
    pub fn to_array(self) -> [f64; 3] {
        [self.cwp_speed, self.chwp_speed, self.ct_speed]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

/// Per-equipment on/off flags (macro-control). Serialized as arrays of 0/1.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Configuration {
    #[serde(rename = "on_ch", with = "flags")]
    pub ch: Vec<bool>,
    #[serde(rename = "on_ct", with = "flags")]
    pub ct: Vec<bool>,
    #[serde(rename = "on_cwp", with = "flags")]
    pub cwp: Vec<bool>,
    #[serde(rename = "on_chwp", with = "flags")]
    pub chwp: Vec<bool>,
}

impl Configuration {
    pub fn all_off(n_ch: usize, n_ct: usize, n_cwp: usize, n_chwp: usize) -> Self {
        Self { ch: vec![false; n_ch], ct: vec![false; n_ct], cwp: vec![false; n_cwp], chwp: vec![false; n_chwp] }
    }

    pub fn count_on(flags: &[bool]) -> usize {
        flags.iter().filter(|&&on| on).count()
    }

    pub fn any_on(&self) -> bool {
        [&self.ch, &self.ct, &self.cwp, &self.chwp].iter().any(|f| f.iter().any(|&on| on))
    }
}

/// One per-minute telemetry snapshot.
///
/// Field order and names are the telemetry line format; nested structs are
/// flattened so a line carries exactly the keys `ts, db, rh, cwp_speed,
/// chwp_speed, ct_speed, on_ch, on_ct, on_cwp, on_chwp, chfhdr, cwfhdr,
/// cwshdr, chsp, load_rt, chkw, ctkw, cwpkw, chwpkw, total_kw`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorRecord {
    pub ts: u64,
    #[serde(flatten)]
    pub weather: Weather,
    #[serde(flatten)]
    pub control: ControlVector,
    #[serde(flatten)]
    pub config: Configuration,
    /// Chilled-water header flow, L/s.
    pub chfhdr: f64,
    /// Condenser-water header flow, L/s.
    pub cwfhdr: f64,
    /// Condenser-water supply temperature into the chillers, °C.
    pub cwshdr: f64,
    pub chsp: f64,
    pub load_rt: f64,
    pub chkw: Vec<f64>,
    pub ctkw: Vec<f64>,
    pub cwpkw: Vec<f64>,
    pub chwpkw: Vec<f64>,
    pub total_kw: f64,
}

impl SensorRecord {
    pub fn power_sum(&self) -> f64 {
        [&self.chkw, &self.ctkw, &self.cwpkw, &self.chwpkw].iter().flat_map(|v| v.iter()).sum()
    }
}

mod flags {
    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(flags: &[bool], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(flags.iter().map(|&on| u8::from(on)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<bool>, D::Error> {
        let raw = Vec::<u8>::deserialize(d)?;
        raw.into_iter()
            .map(|v| match v {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(D::Error::custom(format!("on/off flag must be 0 or 1, got {other}"))),
            })
            .collect()
    }
}
