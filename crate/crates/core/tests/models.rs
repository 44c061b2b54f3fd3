//! Checks on fitted models and on the simulator physics they learn from.

use chiller_ddo::baselining::fit_baseline;
use chiller_ddo::control::FixedVsdController;
use chiller_ddo::enrich::{EnrichmentController, EnrichmentPlan};
use chiller_ddo::numeric::fit_poly_lstsq;
use chiller_ddo::simplant::{closure, simulate, ControlVector, OperatorSchedule, PlantConfig, PlantState, Scenario, SensorRecord, Weather, DEFAULT_START};
use chiller_ddo::surrogate::{fit_graph, MlpConfig, OperatingPoint, PolyModel};

fn noiseless_enriched(days: u64, windows: usize) -> (Scenario, Vec<SensorRecord>) {
    let mut s = Scenario { seed: 21, days, ..Scenario::default() };
    s.plant = s.plant.noiseless();
    let plan = EnrichmentPlan::daily(days, windows, 30, 21).unwrap();
    s.enrichment = Some(plan.clone());
    let mut c = EnrichmentController::new(plan, FixedVsdController::new(DEFAULT_START), 21);
    let records = simulate(&s, &mut c, s.duration_minutes()).unwrap();
    (s, records)
}

#[test]
fn least_squares_residuals_are_orthogonal_to_design() {
    let xs: Vec<f64> = (0..200).map(|i| 20.0 + 0.4 * i as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|x| 3.0 + 0.2 * x - 0.01 * x * x + 4e-5 * x * x * x + (x * 1.7).sin()).collect();
    let c = fit_poly_lstsq(&xs, &ys, 3).unwrap();
    let r: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| y - (c[0] + c[1] * x + c[2] * x * x + c[3] * x * x * x)).collect();
    for p in 0..4 {
        let col: Vec<f64> = xs.iter().map(|x| x.powi(p)).collect();
        let dot: f64 = col.iter().zip(&r).map(|(a, b)| a * b).sum();
        let scale = col.iter().map(|a| a * a).sum::<f64>().sqrt() * r.iter().map(|b| b * b).sum::<f64>().sqrt();
        assert!(dot.abs() <= 1e-8 * scale, "column {p}: {dot:e} vs {scale:e}");
    }
}

#[test]
fn pump_models_recover_the_cube_law_from_noise_free_data() {
    let (s, records) = noiseless_enriched(1, 6);
    let rated = s.plant.cw_pumps[0].rated_kw;
    let (xs, ys): (Vec<f64>, Vec<f64>) = records.iter().filter(|r| r.config.cwp[0]).map(|r| (r.control.cwp_speed, r.cwpkw[0])).unzip();
    let m = PolyModel::fit(&xs, &ys, "cwp_speed", "cwpkw").unwrap();
    let a3 = rated / 1e6;
    assert!((m.coefficients[3] - a3).abs() <= 1e-3 * a3, "{:?}", m.coefficients);
    // Lower-order terms are negligible at full scale.
    let full = a3 * 100f64.powi(3);
    assert!(m.coefficients[1].abs() * 100.0 <= 1e-6 * full);
    assert!(m.coefficients[2].abs() * 1e4 <= 1e-6 * full);
}

#[test]
fn towers_trade_fan_power_against_chiller_power() {
    let plant = PlantConfig::default().noiseless();
    let rotation = OperatorSchedule::rotation(&plant);
    let (lo, hi) = (plant.tower.min_approach, plant.tower.max_approach);
    let mut strict = 0;
    let mut total = 0;
    for (db, rh) in [(25.0, 60.0), (29.0, 80.0), (33.0, 95.0)] {
        for load in [350.0, 525.0, 700.0] {
            for day in &rotation.days {
                let at = |ct: f64| {
                    let state = PlantState { config: day.config.clone(), control: ControlVector::new(70.0, 80.0, ct), chsp: 7.0, minute: 0 };
                    closure(&plant, &state, Weather { db, rh }, load).unwrap()
                };
                for ct in (20..100).step_by(5).map(f64::from) {
                    let (a, b) = (at(ct), at(ct + 1.0));
                    let fan = |c: &chiller_ddo::simplant::Closure| c.ctkw.iter().sum::<f64>();
                    let ch = |c: &chiller_ddo::simplant::Closure| c.chkw.iter().sum::<f64>();
                    assert!(fan(&b) > fan(&a));
                    assert!(ch(&b) <= ch(&a), "db {db} rh {rh} load {load} ct {ct}");
                    // Once the approach hits a clip, extra fan speed buys nothing.
                    let inside = |x: &f64| *x == 0.0 || (*x > plant.cop.min && *x < plant.cop.max);
                    let cop_free = a.cop.iter().chain(&b.cop).all(inside);
                    total += 1;
                    if a.approach < hi && a.approach > lo && b.approach > lo && cop_free {
                        assert!(ch(&b) < ch(&a), "db {db} rh {rh} load {load} ct {ct}");
                        strict += 1;
                    }
                }
            }
        }
    }
    assert!(strict * 2 > total, "only {strict} of {total} points unclipped");
}

#[test]
fn graph_follows_module_topology() {
    let (_, records) = noiseless_enriched(2, 12);
    let rows: Vec<usize> = (0..records.len()).collect();
    let cfg = MlpConfig { max_epochs: 300, ..MlpConfig::default() };
    let g = fit_graph(&records, &rows, &cfg).unwrap();
    let r = &records[700];
    let point = OperatingPoint::of(r);
    let at = |u: ControlVector| g.predict(&u, &point).unwrap();
    let base = at(ControlVector::new(60.0, 70.0, 50.0));
    let ct = at(ControlVector::new(60.0, 70.0, 90.0));
    let cwp = at(ControlVector::new(95.0, 70.0, 50.0));
    assert_ne!(base.chkw, ct.chkw);
    assert_ne!(base.cwshdr, ct.cwshdr);
    assert_eq!(base.cwshdr, cwp.cwshdr);
    assert_ne!(base.cwfhdr, cwp.cwfhdr);
    assert_eq!(base.chfhdr, cwp.chfhdr);
}

#[test]
fn baseline_ignores_control_settings() {
    let s = Scenario { seed: 2, days: 3, ..Scenario::default() };
    let records = simulate(&s, &mut FixedVsdController::new(DEFAULT_START), s.duration_minutes()).unwrap();
    let model = fit_baseline(&records, 0..u64::MAX, &MlpConfig { max_epochs: 200, ..MlpConfig::default() }).unwrap();
    for r in records.iter().step_by(97) {
        let moved = SensorRecord { control: ControlVector::new(30.0, 40.0, 99.0), chfhdr: 1.0, cwshdr: 40.0, ..r.clone() };
        assert_eq!(model.predict(r), model.predict(&moved));
    }
}
