//! Property tests for the invariants each module promises.

use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use chiller_ddo::baselining::savings_with;
use chiller_ddo::control::FixedVsdController;
use chiller_ddo::enrich::{EnrichmentController, EnrichmentPlan};
use chiller_ddo::numeric::eval_poly;
use chiller_ddo::optimize::{
    control_step, realtime_loop, DdoController, DdoSettings, LinearTrustRegion, OptimizationProblem, PlantModel, Solver,
    TruePlant,
};
use chiller_ddo::simplant::{
    closure, simulate, ControlVector, OperatorSchedule, PlantConfig, PlantState, Scenario, SensorRecord, Simulation, Weather,
    DEFAULT_START,
};
use chiller_ddo::surrogate::OperatingPoint;
use chiller_ddo::telemetry::{kfold_by_days, mape, ransac_filter, read_records, RecordStore};
use chiller_ddo::units::{day_of, KW_PER_RT, MINUTES_PER_DAY};

fn short_run(seed: u64, minutes: u64) -> Vec<SensorRecord> {
    let s = Scenario { seed, days: 1, ..Scenario::default() };
    simulate(&s, &mut FixedVsdController::new(DEFAULT_START), minutes).unwrap()
}

fn weather() -> impl Strategy<Value = Weather> {
    (24.0..36.0f64, 55.0..95.0f64).prop_map(|(db, rh)| Weather { db, rh })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn closure_is_exact_and_off_units_are_silent(
        cwp in 20.0..100.0f64, chwp in 20.0..100.0f64, ct in 20.0..100.0f64,
        w in weather(), load in 300.0..800.0f64, day in 0usize..3,
    ) {
        let plant = PlantConfig::default().noiseless();
        let config = OperatorSchedule::rotation(&plant).days[day].config.clone();
        let state = PlantState { config: config.clone(), control: ControlVector::new(cwp, chwp, ct), chsp: 7.0, minute: 0 };
        let c = closure(&plant, &state, w, load).unwrap();
        prop_assert_eq!(c.q_rej_kw, load * KW_PER_RT + c.chkw.iter().sum::<f64>());
        let parts: f64 = c.chkw.iter().chain(&c.ctkw).chain(&c.cwpkw).chain(&c.chwpkw).sum();
        prop_assert_eq!(c.total_kw, parts);
        prop_assert!(c.chfhdr >= 0.0 && c.cwfhdr >= 0.0);
        for (flags, kw) in [(&config.ch, &c.chkw), (&config.ct, &c.ctkw), (&config.cwp, &c.cwpkw), (&config.chwp, &c.chwpkw)] {
            for (&on, &p) in flags.iter().zip(kw.iter()) {
                prop_assert_eq!(on, p > 0.0);
            }
        }
    }

    #[test]
    fn store_round_trip_is_lossless(seed in any::<u64>(), db in any::<f64>(), kw in 1e-300..1e300f64) {
        prop_assume!(db.is_finite());
        let mut records = short_run(seed, 5);
        records[2].weather.db = db;
        records[3].total_kw = kw;
        records[4].chkw[0] = f64::MIN_POSITIVE;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        let mut store = RecordStore::create(&path).unwrap();
        for r in &records {
            store.append(r.clone()).unwrap();
        }
        store.flush().unwrap();
        prop_assert_eq!(read_records(&path).unwrap(), records.clone());
        let reopened = RecordStore::open(&path).unwrap();
        prop_assert_eq!(reopened.records(), &records[..]);
    }

    #[test]
    fn store_rejects_time_going_backwards(seed in any::<u64>(), back in 0u64..5) {
        let records = short_run(seed, 5);
        let mut store = RecordStore::in_memory();
        for r in &records {
            store.append(r.clone()).unwrap();
        }
        let mut stale = records[0].clone();
        stale.ts = 4 - back;
        prop_assert!(store.append(stale).is_err());
        prop_assert_eq!(store.len(), 5);
    }

    #[test]
    fn mape_is_scale_invariant(
        pairs in prop::collection::vec((1.0..1e4f64, 0.0..2e4f64), 1..50),
        c in 1e-6..1e6f64,
    ) {
        let (y, p): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let a = mape(&y, &p).unwrap();
        let cy: Vec<f64> = y.iter().map(|v| c * v).collect();
        let cp: Vec<f64> = p.iter().map(|v| c * v).collect();
        let b = mape(&cy, &cp).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }

    #[test]
    fn ransac_without_outliers_keeps_nearly_everything(seed in any::<u64>(), sigma in 0.01..1.0f64, k in 3.0..5.0f64) {
        let truth = [3.0, -1.0, 0.4, 0.05];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, sigma).unwrap();
        let pts: Vec<(f64, f64)> = (0..500)
            .map(|_| {
                let x = rng.random_range(-5.0..5.0);
                (x, eval_poly(&truth, x) + noise.sample(&mut rng))
            })
            .collect();
        let fit = ransac_filter(&pts, 3, k * sigma, 200, seed).unwrap();
        prop_assert!(fit.inlier_count() as f64 >= 0.99 * pts.len() as f64, "kept {}", fit.inlier_count());
    }

    #[test]
    fn folds_are_disjoint_consecutive_and_cover(k in 1usize..5, dpf in 1u64..4) {
        let days = k as u64 * dpf;
        let records: Vec<SensorRecord> = {
            let base = short_run(1, 1).remove(0);
            (0..days * 24).map(|h| SensorRecord { ts: h * 60, ..base.clone() }).collect()
        };
        let split = kfold_by_days(&records, k, dpf).unwrap();
        prop_assert_eq!(split.k(), k);
        let mut seen = vec![0usize; records.len()];
        for i in 0..k {
            let (train, test) = split.split(&records, i);
            prop_assert_eq!(train.len() + test.len(), records.len());
            for &j in &test {
                seen[j] += 1;
                prop_assert!(!train.contains(&j));
            }
            let test_days: Vec<u64> = test.iter().map(|&j| day_of(records[j].ts)).collect();
            let (lo, hi) = (test_days[0], *test_days.last().unwrap());
            prop_assert_eq!(hi - lo + 1, dpf);
            prop_assert!(test_days.windows(2).all(|w| w[0] <= w[1]));
        }
        prop_assert!(seen.iter().all(|&n| n == 1));
        prop_assert!(kfold_by_days(&records, k + 1, dpf).is_err());
    }

    #[test]
    fn control_step_stays_within_reach(
        c in prop::array::uniform3(20.0..100.0f64), t in prop::array::uniform3(20.0..100.0f64), d in 0.1..20.0f64,
    ) {
        let next = control_step(ControlVector::from_array(c), ControlVector::from_array(t), d).to_array();
        for i in 0..3 {
            prop_assert!((next[i] - c[i]).abs() <= d + 1e-12);
            let (lo, hi) = (c[i].min(t[i]), c[i].max(t[i]));
            prop_assert!(next[i] >= lo && next[i] <= hi);
            if (t[i] - c[i]).abs() <= d {
                prop_assert_eq!(next[i], t[i]);
            }
        }
    }

    #[test]
    fn savings_numerator_is_antisymmetric(seed in any::<u64>(), f in 0.5..1.5f64) {
        let records = short_run(seed, 180);
        let est = |r: &SensorRecord| r.total_kw * f + 3.0;
        let forward = savings_with(&records, est);
        let swapped: Vec<SensorRecord> = records.iter().map(|r| SensorRecord { total_kw: est(r), ..r.clone() }).collect();
        let originals: std::collections::HashMap<u64, f64> = records.iter().map(|r| (r.ts, r.total_kw)).collect();
        let backward = savings_with(&swapped, |r| originals[&r.ts]);
        for (a, b) in forward.days.iter().zip(&backward.days) {
            let na = a.estimated_kwh - a.measured_kwh;
            let nb = b.estimated_kwh - b.measured_kwh;
            prop_assert!((na + nb).abs() <= 1e-9 * a.measured_kwh);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn enrichment_never_switches_equipment_or_leaves_bounds(seed in any::<u64>()) {
        let s = Scenario { seed, days: 1, ..Scenario::default() };
        let plan = EnrichmentPlan::daily(1, 3, 30, seed).unwrap();
        let mut c = EnrichmentController::new(plan.clone(), FixedVsdController::new(DEFAULT_START), seed);
        let enriched = simulate(&s, &mut c, MINUTES_PER_DAY).unwrap();
        let plain = simulate(&s, &mut FixedVsdController::new(DEFAULT_START), MINUTES_PER_DAY).unwrap();
        let limits = s.plant.speed.to_array();
        for (e, p) in enriched.iter().zip(&plain) {
            prop_assert_eq!(&e.config, &p.config);
            let u = e.control.to_array();
            prop_assert!((0..3).all(|i| limits[i].contains(u[i])));
        }
        // Coverage: every speed's empirical support spans >= 90% of its range.
        let inside: Vec<[f64; 3]> = enriched.iter().filter(|r| plan.contains(r.ts)).map(|r| r.control.to_array()).collect();
        for i in 0..3 {
            let lo = inside.iter().map(|u| u[i]).fold(f64::INFINITY, f64::min);
            let hi = inside.iter().map(|u| u[i]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(hi - lo >= 0.9 * limits[i].span(), "speed {i} covers [{lo}, {hi}]");
        }
    }

    #[test]
    fn solve_never_worsens_a_feasible_start(
        start in prop::array::uniform3(20.0..100.0f64), w in weather(), load in 350.0..700.0f64, day in 0usize..3,
    ) {
        let plant = PlantConfig::default().noiseless();
        let model = TruePlant { config: plant.clone() };
        let settings = DdoSettings::for_plant(&plant);
        let point = OperatingPoint {
            weather: w,
            load_rt: load,
            chsp: 7.0,
            configuration: OperatorSchedule::rotation(&plant).days[day].config.clone(),
        };
        let problem = OptimizationProblem {
            model: &model,
            point,
            bounds: settings.speed,
            predicted: settings.bounds_for(&plant, load),
            start: ControlVector::from_array(start),
        };
        let at_start = problem.assess(start).unwrap();
        prop_assume!(at_start.feasible());
        let found = LinearTrustRegion::default().solve(&problem).unwrap();
        prop_assert!(found.feasible);
        prop_assert!(found.predicted_kw <= at_start.evaluation.total_kw);
        let x = found.control.to_array();
        prop_assert!((0..3).all(|i| settings.speed[i].contains(x[i])));
    }
}

#[test]
fn applied_controls_respect_box_and_ramp() {
    let s = Scenario { seed: 3, days: 1, ..Scenario::default() };
    let plant = s.plant.clone();
    let settings = DdoSettings::for_plant(&plant);
    let model: Arc<dyn PlantModel + Send> = Arc::new(TruePlant { config: plant.clone().noiseless() });
    let mut ddo = DdoController::new(model, Box::new(LinearTrustRegion::default()), settings.clone(), plant);
    let mut sim = Simulation::starting_at(&s, 600, ControlVector::new(100.0, 100.0, 100.0)).unwrap();
    sim.step().unwrap();
    let log = realtime_loop(&mut sim, &mut ddo, 40).unwrap();
    assert_eq!(log.len(), 40);
    let mut prev = ControlVector::new(100.0, 100.0, 100.0).to_array();
    for e in &log {
        let u = e.applied.to_array();
        for i in 0..3 {
            assert!(settings.speed[i].contains(u[i]));
            assert!((u[i] - prev[i]).abs() <= settings.max_delta + 1e-9, "tick {}: {prev:?} -> {u:?}", e.ts);
        }
        prev = u;
    }
    // The optimizer walked away from full speed.
    assert!(log.last().unwrap().applied.chwp_speed < 100.0 - 4.0 * settings.max_delta);
}
