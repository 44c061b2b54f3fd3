use serde::{Deserialize, Serialize};

use crate::simplant::{Configuration, ControlVector, SensorRecord, Weather};

use super::{MlpModel, PolyModel};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("module {0} is not trained")]
    UntrainedModule(String),
    #[error("configuration has {got} {kind} flags, graph has {expected}")]
    Shape { kind: &'static str, expected: usize, got: usize },
}

/// Inputs of the plant model that are not decision variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub weather: Weather,
    pub load_rt: f64,
    pub chsp: f64,
    pub configuration: Configuration,
}

impl OperatingPoint {
    pub fn of(record: &SensorRecord) -> Self {
        Self { weather: record.weather, load_rt: record.load_rt, chsp: record.chsp, configuration: record.config.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerBreakdown {
    pub chfhdr: f64,
    pub cwfhdr: f64,
    pub cwshdr: f64,
    pub chkw: Vec<f64>,
    pub ctkw: Vec<f64>,
    pub cwpkw: Vec<f64>,
    pub chwpkw: Vec<f64>,
    pub total_kw: f64,
}

pub const CH_INPUTS: [&str; 5] = ["chfhdr", "cwfhdr", "cwshdr", "load_rt", "chsp"];

fn flags(f: &[bool]) -> impl Iterator<Item = f64> + '_ {
    f.iter().map(|&on| if on { 1.0 } else { 0.0 })
}

pub fn chfm_features(control: &ControlVector, config: &Configuration) -> Vec<f64> {
    std::iter::once(control.chwp_speed).chain(flags(&config.chwp)).collect()
}

pub fn cwfm_features(control: &ControlVector, config: &Configuration) -> Vec<f64> {
    std::iter::once(control.cwp_speed).chain(flags(&config.cwp)).collect()
}

/// Fan speed, tower flags, weather. Condenser pump speed is deliberately absent.
pub fn cwtm_features(control: &ControlVector, config: &Configuration, weather: &Weather) -> Vec<f64> {
    std::iter::once(control.ct_speed).chain(flags(&config.ct)).chain([weather.db, weather.rh]).collect()
}

pub fn ch_features(chfhdr: f64, cwfhdr: f64, cwshdr: f64, load_rt: f64, chsp: f64) -> Vec<f64> {
    vec![chfhdr, cwfhdr, cwshdr, load_rt, chsp]
}

pub fn feature_names(lead: &[&str], flag_prefix: &str, n: usize, tail: &[&str]) -> Vec<String> {
    lead.iter()
        .map(|s| s.to_string())
        .chain((1..=n).map(|i| format!("{flag_prefix}{i}")))
        .chain(tail.iter().map(|s| s.to_string()))
        .collect()
}

/// Module-wise plant model: one cubic per pump/fan, perceptrons for the
/// header flows, condenser supply temperature and each chiller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantModelGraph {
    pub chwp: Vec<Option<PolyModel>>,
    pub cwp: Vec<Option<PolyModel>>,
    pub ct: Vec<Option<PolyModel>>,
    pub chfm: Option<MlpModel>,
    pub cwfm: Option<MlpModel>,
    pub cwtm: Option<MlpModel>,
    pub ch: Vec<Option<MlpModel>>,
}

impl PlantModelGraph {
    pub fn empty(n_ch: usize, n_ct: usize, n_cwp: usize, n_chwp: usize) -> Self {
        Self {
            chwp: vec![None; n_chwp],
            cwp: vec![None; n_cwp],
            ct: vec![None; n_ct],
            chfm: None,
            cwfm: None,
            cwtm: None,
            ch: vec![None; n_ch],
        }
    }

    pub fn predict(&self, control: &ControlVector, point: &OperatingPoint) -> Result<PowerBreakdown, GraphError> {
        let cfg = &point.configuration;
        for (kind, expected, got) in [
            ("chiller", self.ch.len(), cfg.ch.len()),
            ("tower", self.ct.len(), cfg.ct.len()),
            ("condenser pump", self.cwp.len(), cfg.cwp.len()),
            ("chilled-water pump", self.chwp.len(), cfg.chwp.len()),
        ] {
            if expected != got {
                return Err(GraphError::Shape { kind, expected, got });
            }
        }
        let chwpkw = siso(&self.chwp, &cfg.chwp, control.chwp_speed, "CHWP")?;
        let cwpkw = siso(&self.cwp, &cfg.cwp, control.cwp_speed, "CWP")?;
        let ctkw = siso(&self.ct, &cfg.ct, control.ct_speed, "CT")?;

        let any_ch = cfg.ch.iter().any(|&b| b);
        let (mut chfhdr, mut cwfhdr, mut cwshdr) = (0.0, 0.0, 0.0);
        if any_ch || cfg.chwp.iter().any(|&b| b) {
            chfhdr = need(&self.chfm, "CHFM")?.predict(&chfm_features(control, cfg));
        }
        if any_ch || cfg.cwp.iter().any(|&b| b) {
            cwfhdr = need(&self.cwfm, "CWFM")?.predict(&cwfm_features(control, cfg));
        }
        if any_ch || cfg.ct.iter().any(|&b| b) {
            cwshdr = need(&self.cwtm, "CWTM")?.predict(&cwtm_features(control, cfg, &point.weather));
        }
        let mut chkw = vec![0.0; cfg.ch.len()];
        if any_ch {
            let x = ch_features(chfhdr, cwfhdr, cwshdr, point.load_rt, point.chsp);
            for (i, (m, &on)) in self.ch.iter().zip(&cfg.ch).enumerate() {
                if on {
                    chkw[i] = m.as_ref().ok_or_else(|| GraphError::UntrainedModule(format!("CH{}", i + 1)))?.predict(&x);
                }
            }
        }
        let total_kw = chkw.iter().chain(&ctkw).chain(&cwpkw).chain(&chwpkw).sum();
        Ok(PowerBreakdown { chfhdr, cwfhdr, cwshdr, chkw, ctkw, cwpkw, chwpkw, total_kw })
    }
}

fn need<'m>(m: &'m Option<MlpModel>, name: &str) -> Result<&'m MlpModel, GraphError> {
    m.as_ref().ok_or_else(|| GraphError::UntrainedModule(name.into()))
}

fn siso(models: &[Option<PolyModel>], on: &[bool], speed: f64, kind: &str) -> Result<Vec<f64>, GraphError> {
    models
        .iter()
        .zip(on)
        .enumerate()
        .map(|(i, (m, &on))| match (on, m) {
            (false, _) => Ok(0.0),
            (true, Some(m)) => Ok(m.eval(speed)),
            (true, None) => Err(GraphError::UntrainedModule(format!("{kind}{}", i + 1))),
        })
        .collect()
}
