use std::collections::BTreeMap;
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::simplant::SensorRecord;
use crate::telemetry::{kfold_by_days, mape, FoldError};

use super::graph::{ch_features, chfm_features, cwfm_features, cwtm_features, feature_names, OperatingPoint, CH_INPUTS};
use super::{FitError, MlpConfig, MlpModel, PlantModelGraph, PolyModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub folds: usize,
    pub days_per_fold: u64,
    pub mlp: MlpConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { folds: 5, days_per_fold: 3, mlp: MlpConfig::default() }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("no records to train on")]
    Empty,
    #[error(transparent)]
    Folds(#[from] FoldError),
    #[error("module {module}: {source}")]
    Module { module: String, source: FitError },
}

/// Cross-validated MAPE of one module.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleRow {
    pub module: String,
    pub group: String,
    /// One entry per fold; `None` when the fold had no rows for this module.
    pub fold_mape: Vec<Option<f64>>,
    /// Mean over the folds that had rows; `None` when none did.
    pub mape: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub folds: Vec<Range<u64>>,
    pub rows: Vec<ModuleRow>,
    /// Mean over the equipment rows of each group (CHWP, CWP, CT, CH, ...).
    /// Groups without any evaluated row are absent.
    pub averages: BTreeMap<String, f64>,
    pub total_fold_mape: Vec<Option<f64>>,
    pub total_mape: Option<f64>,
}

impl TrainReport {
    pub fn row(&self, module: &str) -> Option<&ModuleRow> {
        self.rows.iter().find(|r| r.module == module)
    }

    /// Fixed-width table, one line per module plus group averages and total.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("{:<8}", "module"));
        for i in 0..self.folds.len() {
            s.push_str(&format!("{:>9}", format!("fold{}", i + 1)));
        }
        s.push_str(&format!("{:>9}\n", "mean"));
        for r in &self.rows {
            s.push_str(&format!("{:<8}", r.module));
            for m in &r.fold_mape {
                push_cell(&mut s, *m);
            }
            push_cell(&mut s, r.mape);
            s.push('\n');
        }
        for (g, v) in &self.averages {
            s.push_str(&format!("avg {g:<4}{:>width$.3}%\n", v, width = 9 * self.folds.len() + 8));
        }
        s.push_str(&format!("{:<8}", "total"));
        for v in &self.total_fold_mape {
            push_cell(&mut s, *v);
        }
        push_cell(&mut s, self.total_mape);
        s.push('\n');
        s
    }
}

fn push_cell(s: &mut String, v: Option<f64>) {
    match v {
        Some(v) => s.push_str(&format!("{v:>8.3}%")),
        None => s.push_str(&format!("{:>9}", "-")),
    }
}

#[derive(Clone, Copy)]
enum Module {
    Chwp(usize),
    Cwp(usize),
    Ct(usize),
    Chfm,
    Cwfm,
    Cwtm,
    Ch(usize),
}

impl Module {
    fn all(n_ch: usize, n_ct: usize, n_cwp: usize, n_chwp: usize) -> Vec<Module> {
        let mut v: Vec<Module> = (0..n_chwp).map(Module::Chwp).collect();
        v.extend((0..n_cwp).map(Module::Cwp));
        v.extend((0..n_ct).map(Module::Ct));
        v.extend([Module::Chfm, Module::Cwfm, Module::Cwtm]);
        v.extend((0..n_ch).map(Module::Ch));
        v
    }

    fn name(self) -> String {
        match self {
            Module::Chwp(i) => format!("CHWP{}", i + 1),
            Module::Cwp(i) => format!("CWP{}", i + 1),
            Module::Ct(i) => format!("CT{}", i + 1),
            Module::Chfm => "CHFM".into(),
            Module::Cwfm => "CWFM".into(),
            Module::Cwtm => "CWTM".into(),
            Module::Ch(i) => format!("CH{}", i + 1),
        }
    }

    fn group(self) -> &'static str {
        match self {
            Module::Chwp(_) => "CHWP",
            Module::Cwp(_) => "CWP",
            Module::Ct(_) => "CT",
            Module::Chfm => "CHFM",
            Module::Cwfm => "CWFM",
            Module::Cwtm => "CWTM",
            Module::Ch(_) => "CH",
        }
    }

    fn seed_offset(self) -> u64 {
        match self {
            Module::Chwp(i) => 100 + i as u64,
            Module::Cwp(i) => 200 + i as u64,
            Module::Ct(i) => 300 + i as u64,
            Module::Chfm => 400,
            Module::Cwfm => 500,
            Module::Cwtm => 600,
            Module::Ch(i) => 700 + i as u64,
        }
    }

    /// Training/evaluation samples: `(x, y)` for every record where the
    /// module's equipment runs. SISO samples carry a single x value.
    fn samples(self, r: &SensorRecord) -> Option<(Vec<f64>, f64)> {
        let c = &r.config;
        match self {
            Module::Chwp(i) => c.chwp[i].then(|| (vec![r.control.chwp_speed], r.chwpkw[i])),
            Module::Cwp(i) => c.cwp[i].then(|| (vec![r.control.cwp_speed], r.cwpkw[i])),
            Module::Ct(i) => c.ct[i].then(|| (vec![r.control.ct_speed], r.ctkw[i])),
            Module::Chfm => c.chwp.iter().any(|&b| b).then(|| (chfm_features(&r.control, c), r.chfhdr)),
            Module::Cwfm => c.cwp.iter().any(|&b| b).then(|| (cwfm_features(&r.control, c), r.cwfhdr)),
            Module::Cwtm => c.ct.iter().any(|&b| b).then(|| (cwtm_features(&r.control, c, &r.weather), r.cwshdr)),
            Module::Ch(i) => c.ch[i].then(|| (ch_features(r.chfhdr, r.cwfhdr, r.cwshdr, r.load_rt, r.chsp), r.chkw[i])),
        }
    }
}

enum Fitted {
    Poly(PolyModel),
    Mlp(MlpModel),
}

fn fit_module(m: Module, records: &[SensorRecord], rows: &[usize], cfg: &MlpConfig) -> Result<Option<Fitted>, TrainError> {
    let (x, y): (Vec<Vec<f64>>, Vec<f64>) = rows.iter().filter_map(|&i| m.samples(&records[i])).unzip();
    if x.is_empty() {
        return Ok(None);
    }
    let wrap = |source| TrainError::Module { module: m.name(), source };
    let r0 = &records[rows[0]];
    Ok(Some(match m {
        Module::Chwp(_) | Module::Cwp(_) | Module::Ct(_) => {
            let xs: Vec<f64> = x.iter().map(|v| v[0]).collect();
            let (input, output) = match m {
                Module::Chwp(_) => ("chwp_speed", "chwpkw"),
                Module::Cwp(_) => ("cwp_speed", "cwpkw"),
                _ => ("ct_speed", "ctkw"),
            };
            Fitted::Poly(PolyModel::fit(&xs, &y, input, output).map_err(wrap)?)
        }
        _ => {
            let (names, output) = match m {
                Module::Chfm => (feature_names(&["chwp_speed"], "on_chwp", r0.config.chwp.len(), &[]), "chfhdr"),
                Module::Cwfm => (feature_names(&["cwp_speed"], "on_cwp", r0.config.cwp.len(), &[]), "cwfhdr"),
                Module::Cwtm => (feature_names(&["ct_speed"], "on_ct", r0.config.ct.len(), &["db", "rh"]), "cwshdr"),
                _ => (CH_INPUTS.iter().map(|s| s.to_string()).collect(), "chkw"),
            };
            let names: Vec<&str> = names.iter().map(String::as_str).collect();
            let cfg = MlpConfig { seed: cfg.seed.wrapping_add(m.seed_offset()), ..cfg.clone() };
            Fitted::Mlp(MlpModel::fit(&names, output, &x, &y, &cfg).map_err(wrap)?)
        }
    }))
}

/// Trains every module on the records at `rows`.
pub fn fit_graph(records: &[SensorRecord], rows: &[usize], cfg: &MlpConfig) -> Result<PlantModelGraph, TrainError> {
    let first = records.get(*rows.first().ok_or(TrainError::Empty)?).ok_or(TrainError::Empty)?;
    let c = &first.config;
    let (n_ch, n_ct, n_cwp, n_chwp) = (c.ch.len(), c.ct.len(), c.cwp.len(), c.chwp.len());
    let modules = Module::all(n_ch, n_ct, n_cwp, n_chwp);
    let fitted: Vec<Option<Fitted>> =
        modules.par_iter().map(|&m| fit_module(m, records, rows, cfg)).collect::<Result<_, _>>()?;
    let mut g = PlantModelGraph::empty(n_ch, n_ct, n_cwp, n_chwp);
    for (m, f) in modules.into_iter().zip(fitted) {
        match (m, f) {
            (_, None) => {}
            (Module::Chwp(i), Some(Fitted::Poly(p))) => g.chwp[i] = Some(p),
            (Module::Cwp(i), Some(Fitted::Poly(p))) => g.cwp[i] = Some(p),
            (Module::Ct(i), Some(Fitted::Poly(p))) => g.ct[i] = Some(p),
            (Module::Chfm, Some(Fitted::Mlp(n))) => g.chfm = Some(n),
            (Module::Cwfm, Some(Fitted::Mlp(n))) => g.cwfm = Some(n),
            (Module::Cwtm, Some(Fitted::Mlp(n))) => g.cwtm = Some(n),
            (Module::Ch(i), Some(Fitted::Mlp(n))) => g.ch[i] = Some(n),
            _ => unreachable!("model family fixed per module"),
        }
    }
    Ok(g)
}

fn module_mape(g: &PlantModelGraph, m: Module, records: &[SensorRecord], rows: &[usize]) -> Option<f64> {
    let (x, y): (Vec<Vec<f64>>, Vec<f64>) = rows.iter().filter_map(|&i| m.samples(&records[i])).unzip();
    if x.is_empty() {
        return None;
    }
    let poly = |p: &Option<PolyModel>| p.clone();
    let pred: Vec<f64> = match m {
        Module::Chwp(i) | Module::Cwp(i) | Module::Ct(i) => {
            let model = match m {
                Module::Chwp(_) => poly(&g.chwp[i]),
                Module::Cwp(_) => poly(&g.cwp[i]),
                _ => poly(&g.ct[i]),
            }?;
            x.iter().map(|v| model.eval(v[0])).collect()
        }
        _ => {
            let model = match m {
                Module::Chfm => g.chfm.as_ref(),
                Module::Cwfm => g.cwfm.as_ref(),
                Module::Cwtm => g.cwtm.as_ref(),
                Module::Ch(i) => g.ch[i].as_ref(),
                _ => None,
            }?;
            x.iter().map(|v| model.predict(v)).collect()
        }
    };
    mape(&y, &pred).ok()
}

/// MAPE of the composed total-power prediction against measured total.
pub fn total_mape(g: &PlantModelGraph, records: &[SensorRecord], rows: &[usize]) -> Option<f64> {
    let (y, pred): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter_map(|&i| {
            let r = &records[i];
            let p = g.predict(&r.control, &OperatingPoint::of(r)).ok()?;
            Some((r.total_kw, p.total_kw))
        })
        .unzip();
    mape(&y, &pred).ok()
}

/// K-fold cross-validation by consecutive days, then a final fit on all
/// records. Module rows report MAPE on measured module inputs; the total
/// row composes the whole graph from controls, weather and load.
pub fn train_graph(records: &[SensorRecord], cfg: &TrainConfig) -> Result<(PlantModelGraph, TrainReport), TrainError> {
    let first = records.first().ok_or(TrainError::Empty)?;
    let split = kfold_by_days(records, cfg.folds, cfg.days_per_fold)?;
    let c = &first.config;
    let modules = Module::all(c.ch.len(), c.ct.len(), c.cwp.len(), c.chwp.len());

    type FoldOut = (Vec<Option<f64>>, Option<f64>);
    let fold_results: Vec<FoldOut> = (0..split.k())
        .into_par_iter()
        .map(|i| {
            let (train, test) = split.split(records, i);
            let g = fit_graph(records, &train, &cfg.mlp)?;
            let per_module = modules.iter().map(|&m| module_mape(&g, m, records, &test)).collect();
            Ok((per_module, total_mape(&g, records, &test)))
        })
        .collect::<Result<_, TrainError>>()?;

    let all: Vec<usize> = (0..records.len()).collect();
    let graph = fit_graph(records, &all, &cfg.mlp)?;

    let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    let rows: Vec<ModuleRow> = modules
        .iter()
        .enumerate()
        .map(|(j, &m)| {
            let fold_mape: Vec<Option<f64>> = fold_results.iter().map(|(pm, _)| pm[j]).collect();
            let present: Vec<f64> = fold_mape.iter().flatten().copied().collect();
            ModuleRow { module: m.name(), group: m.group().into(), fold_mape, mape: mean(&present) }
        })
        .collect();
    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in &rows {
        if let Some(m) = r.mape {
            groups.entry(r.group.clone()).or_default().push(m);
        }
    }
    let averages = groups.into_iter().filter_map(|(g, v)| Some((g, mean(&v)?))).collect();
    let total_fold_mape: Vec<Option<f64>> = fold_results.iter().map(|(_, t)| *t).collect();
    let total_mape = mean(&total_fold_mape.iter().flatten().copied().collect::<Vec<_>>());
    Ok((graph, TrainReport { folds: split.folds, rows, averages, total_fold_mape, total_mape }))
}
