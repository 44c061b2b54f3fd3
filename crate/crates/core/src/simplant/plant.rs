use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::config::PlantConfig;
use super::record::{Configuration, ControlVector, SensorRecord, Weather};
use super::schedule::CHSP_RANGE;
use crate::units::{KW_PER_RT, WATER_KJ_PER_L_K};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlantError {
    #[error("{equipment} all off while cooling load is {load_rt:.1} RT")]
    EquipmentOff { equipment: &'static str, load_rt: f64 },
    #[error("load of {load_rt:.1} RT infeasible: {reason}")]
    LoadInfeasible { load_rt: f64, reason: String },
    #[error("invalid plant state: {0}")]
    InvalidState(String),
}

/// Mutable operating state of the plant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantState {
    pub config: Configuration,
    pub control: ControlVector,
    pub chsp: f64,
    pub minute: u64,
}

impl PlantState {
    pub fn validate(&self, plant: &PlantConfig) -> Result<(), PlantError> {
        let c = &self.config;
        if c.ch.len() != plant.chillers.len()
            || c.ct.len() != plant.cooling_towers.len()
            || c.cwp.len() != plant.cw_pumps.len()
            || c.chwp.len() != plant.chw_pumps.len()
        {
            return Err(PlantError::InvalidState("on/off arrays do not match equipment counts".into()));
        }
        if !(CHSP_RANGE.0..=CHSP_RANGE.1).contains(&self.chsp) {
            return Err(PlantError::InvalidState(format!("chsp {} outside [5, 10] °C", self.chsp)));
        }
        let limits = plant.speed.to_array();
        for (v, b) in self.control.to_array().into_iter().zip(limits) {
            if !b.contains(v) {
                return Err(PlantError::InvalidState(format!("speed {v} outside [{}, {}]", b.lower, b.upper)));
            }
        }
        Ok(())
    }
}

/// Noise-free physical response of the plant to one operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct Closure {
    pub chfhdr: f64,
    pub cwfhdr: f64,
    pub cwshdr: f64,
    pub approach: f64,
    /// Heat rejected to the towers, kW: load plus compressor work.
    pub q_rej_kw: f64,
    pub cop: Vec<f64>,
    pub chkw: Vec<f64>,
    pub ctkw: Vec<f64>,
    pub cwpkw: Vec<f64>,
    pub chwpkw: Vec<f64>,
    pub total_kw: f64,
}

/// Smallest chilled-water flow that carries `load_rt` within the ΔT limit, L/s.
pub fn required_chw_flow(plant: &PlantConfig, load_rt: f64) -> f64 {
    load_rt * KW_PER_RT / (WATER_KJ_PER_L_K * plant.max_chw_delta_t)
}

fn cube_power(rated_kw: f64, speed_pct: f64, on: bool) -> f64 {
    if on {
        let s = speed_pct / 100.0;
        rated_kw * s * s * s
    } else {
        0.0
    }
}

/// Solves the plant's steady state for one minute.
///
/// Condenser temperature depends on the heat rejected, which depends on
/// chiller power, which depends on condenser temperature; the loop is a
/// contraction and is iterated to machine precision.
pub fn closure(plant: &PlantConfig, state: &PlantState, weather: Weather, load_rt: f64) -> Result<Closure, PlantError> {
    state.validate(plant)?;
    let cfg = &state.config;
    let u = &state.control;

    let chwpkw: Vec<f64> = plant.chw_pumps.iter().zip(&cfg.chwp).map(|(p, &on)| cube_power(p.rated_kw, u.chwp_speed, on)).collect();
    let cwpkw: Vec<f64> = plant.cw_pumps.iter().zip(&cfg.cwp).map(|(p, &on)| cube_power(p.rated_kw, u.cwp_speed, on)).collect();
    let ctkw: Vec<f64> = plant.cooling_towers.iter().zip(&cfg.ct).map(|(f, &on)| cube_power(f.rated_kw, u.ct_speed, on)).collect();

    let header_flow = |pumps: &[super::config::PumpSpec], flags: &[bool], speed: f64| -> f64 {
        pumps.iter().zip(flags).filter(|(_, &on)| on).map(|(p, _)| p.rated_flow_lps * speed / 100.0).sum()
    };
    let chfhdr = header_flow(&plant.chw_pumps, &cfg.chwp, u.chwp_speed);
    let cwfhdr = header_flow(&plant.cw_pumps, &cfg.cwp, u.cwp_speed);

    let tower = &plant.tower;
    let n_ct_on = Configuration::count_on(&cfg.ct) as f64;
    let approach_for = |q_rej: f64| -> f64 {
        if q_rej <= 0.0 {
            return tower.a0.clamp(tower.min_approach, tower.max_approach);
        }
        let capacity = n_ct_on * (u.ct_speed / 100.0) * tower.a_ref_kw;
        if capacity <= 0.0 {
            return tower.max_approach;
        }
        (tower.a0 + tower.a1 * q_rej / capacity).clamp(tower.min_approach, tower.max_approach)
    };
    let wet_bulb = weather.wet_bulb();
    let n_ch = plant.chillers.len();

    let finish = |chkw: Vec<f64>, cop: Vec<f64>, cwshdr: f64, approach: f64, q_rej_kw: f64| {
        let total_kw = chkw.iter().chain(&ctkw).chain(&cwpkw).chain(&chwpkw).sum();
        Closure {
            chfhdr,
            cwfhdr,
            cwshdr,
            approach,
            q_rej_kw,
            cop,
            chkw,
            ctkw: ctkw.clone(),
            cwpkw: cwpkw.clone(),
            chwpkw: chwpkw.clone(),
            total_kw,
        }
    };

    if load_rt <= 0.0 {
        let approach = approach_for(0.0);
        return Ok(finish(vec![0.0; n_ch], vec![0.0; n_ch], wet_bulb + approach, approach, 0.0));
    }

    let n_ch_on = Configuration::count_on(&cfg.ch);
    if n_ch_on == 0 {
        return Err(PlantError::EquipmentOff { equipment: "chillers", load_rt });
    }
    if !cfg.chwp.iter().any(|&on| on) {
        return Err(PlantError::EquipmentOff { equipment: "chilled water pumps", load_rt });
    }
    if !cfg.cwp.iter().any(|&on| on) {
        return Err(PlantError::EquipmentOff { equipment: "condenser water pumps", load_rt });
    }
    let capacity_on: f64 = plant.chillers.iter().zip(&cfg.ch).filter(|(_, &on)| on).map(|(c, _)| c.capacity_rt).sum();
    if load_rt > capacity_on {
        return Err(PlantError::LoadInfeasible {
            load_rt,
            reason: format!("running chiller capacity is {capacity_on:.1} RT"),
        });
    }
    let max_chfhdr = header_flow(&plant.chw_pumps, &cfg.chwp, plant.speed.chwp.upper);
    let needed = required_chw_flow(plant, load_rt);
    if max_chfhdr < needed {
        return Err(PlantError::LoadInfeasible {
            load_rt,
            reason: format!("chilled-water flow at full speed {max_chfhdr:.1} L/s, need {needed:.1} L/s"),
        });
    }

    let q_load = load_rt * KW_PER_RT;
    let share_rt = load_rt / n_ch_on as f64;
    let cw_design = n_ch_on as f64 * plant.design_cw_flow_per_chiller_lps;
    let flow_term = plant.cop.c3 * (cwfhdr / cw_design).ln();
    let chiller_powers = |cwshdr: f64| -> (Vec<f64>, Vec<f64>) {
        let c = &plant.cop;
        let mut powers = vec![0.0; n_ch];
        let mut cops = vec![0.0; n_ch];
        for (i, (spec, &on)) in plant.chillers.iter().zip(&cfg.ch).enumerate() {
            if !on {
                continue;
            }
            let plr = share_rt / spec.capacity_rt;
            let cop = (c.c0 - c.c1 * (cwshdr - state.chsp) - c.c2 * (plr - c.plr_opt).powi(2) + flow_term).clamp(c.min, c.max);
            cops[i] = cop;
            powers[i] = share_rt * KW_PER_RT / cop;
        }
        (powers, cops)
    };

    let mut compressor = q_load / 4.0;
    let mut cwshdr = wet_bulb;
    let mut approach = 0.0;
    for _ in 0..200 {
        approach = approach_for(q_load + compressor);
        cwshdr = wet_bulb + approach;
        let next: f64 = chiller_powers(cwshdr).0.iter().sum();
        let converged = (next - compressor).abs() <= 1e-13 * next.abs().max(1.0);
        compressor = next;
        if converged {
            break;
        }
    }
    let (chkw, cop) = chiller_powers(cwshdr);
    let q_rej_kw = q_load + chkw.iter().sum::<f64>();
    Ok(finish(chkw, cop, cwshdr, approach, q_rej_kw))
}

/// The simulated plant: physics plus a seeded sensor layer.
#[derive(Debug, Clone)]
pub struct Plant {
    config: PlantConfig,
    state: PlantState,
    rng: ChaCha8Rng,
}

impl Plant {
    pub fn new(config: PlantConfig, state: PlantState, seed: u64) -> Result<Self, PlantError> {
        config.validate().map_err(PlantError::InvalidState)?;
        state.validate(&config)?;
        Ok(Self { config, state, rng: ChaCha8Rng::seed_from_u64(seed) })
    }

    pub fn config(&self) -> &PlantConfig {
        &self.config
    }

    pub fn state(&self) -> &PlantState {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut PlantState {
        &mut self.state
    }

    /// Advances one minute and returns what the sensors report.
    pub fn step(&mut self, weather: Weather, load_rt: f64) -> Result<SensorRecord, PlantError> {
        let truth = closure(&self.config, &self.state, weather, load_rt)?;
        let noise = self.config.noise;
        let rng = &mut self.rng;

        // Fixed draw count per reading keeps paired runs on the same noise stream.
        let gauss = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };
        let read_power = |rng: &mut ChaCha8Rng, value: f64, on: bool| -> f64 {
            let e = gauss(rng);
            let u_out: f64 = rng.random();
            let u_drop: f64 = rng.random();
            let factor: f64 = rng.random_range(0.0..1.0);
            if !on {
                return 0.0;
            }
            let mut reading = value * (1.0 + noise.sigma * e);
            if u_out < noise.outlier_rate {
                reading *= if factor < 0.5 { 2.0 + 6.0 * factor } else { 0.1 + 0.6 * (factor - 0.5) };
            }
            if u_drop < noise.dropout_rate {
                reading = 0.0;
            }
            reading
        };
        let cfg = &self.state.config;
        let chkw: Vec<f64> = truth.chkw.iter().zip(&cfg.ch).map(|(&v, &on)| read_power(rng, v, on)).collect();
        let ctkw: Vec<f64> = truth.ctkw.iter().zip(&cfg.ct).map(|(&v, &on)| read_power(rng, v, on)).collect();
        let cwpkw: Vec<f64> = truth.cwpkw.iter().zip(&cfg.cwp).map(|(&v, &on)| read_power(rng, v, on)).collect();
        let chwpkw: Vec<f64> = truth.chwpkw.iter().zip(&cfg.chwp).map(|(&v, &on)| read_power(rng, v, on)).collect();
        let e_chf: f64 = StandardNormal.sample(rng);
        let e_cwf: f64 = StandardNormal.sample(rng);
        let e_cws: f64 = StandardNormal.sample(rng);

        let total_kw = chkw.iter().chain(&ctkw).chain(&cwpkw).chain(&chwpkw).sum();
        let record = SensorRecord {
            ts: self.state.minute,
            weather,
            control: self.state.control,
            config: cfg.clone(),
            chfhdr: truth.chfhdr * (1.0 + noise.sigma * e_chf),
            cwfhdr: truth.cwfhdr * (1.0 + noise.sigma * e_cwf),
            cwshdr: truth.cwshdr + noise.temp_sigma_c * e_cws,
            chsp: self.state.chsp,
            load_rt,
            chkw,
            ctkw,
            cwpkw,
            chwpkw,
            total_kw,
        };
        self.state.minute += 1;
        Ok(record)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplant::OperatorSchedule;

    fn state(control: ControlVector) -> PlantState {
        let plant = PlantConfig::default();
        PlantState { config: OperatorSchedule::rotation(&plant).days[0].config.clone(), control, chsp: 7.0, minute: 0 }
    }

    const W: Weather = Weather { db: 31.0, rh: 70.0 };

    #[test]
    fn cube_law_on_pump_power() {
        let plant = PlantConfig::default().noiseless();
        let half = closure(&plant, &state(ControlVector::new(50.0, 60.0, 40.0)), W, 600.0).unwrap();
        let full = closure(&plant, &state(ControlVector::new(100.0, 60.0, 40.0)), W, 600.0).unwrap();
        assert_eq!(half.cwpkw[0] / full.cwpkw[0], 0.125);
    }

    #[test]
    fn off_equipment_draws_nothing() {
        let plant = PlantConfig::default();
        let mut s = state(ControlVector::new(80.0, 80.0, 50.0));
        s.config = Configuration::all_off(3, 3, 3, 3);
        let c = closure(&plant, &s, W, 0.0).unwrap();
        assert_eq!(c.chfhdr, 0.0);
        assert_eq!(c.total_kw, 0.0);
        assert!(c.chwpkw.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn heat_balance_is_exact() {
        let plant = PlantConfig::default().noiseless();
        let c = closure(&plant, &state(ControlVector::new(70.0, 65.0, 55.0)), W, 650.0).unwrap();
        assert_eq!(c.q_rej_kw, 650.0 * KW_PER_RT + c.chkw.iter().sum::<f64>());
    }

    #[test]
    fn faster_fans_cool_condenser_water_and_unload_chillers() {
        let plant = PlantConfig::default().noiseless();
        let mut prev: Option<Closure> = None;
        for ct in (20..=100).step_by(5) {
            let c = closure(&plant, &state(ControlVector::new(80.0, 80.0, ct as f64)), W, 650.0).unwrap();
            if let Some(p) = &prev {
                assert!(c.cwshdr < p.cwshdr, "ct={ct}");
                assert!(c.chkw.iter().sum::<f64>() < p.chkw.iter().sum::<f64>(), "ct={ct}");
            }
            prev = Some(c);
        }
    }

    #[test]
    fn no_chiller_with_load_is_an_error() {
        let plant = PlantConfig::default();
        let mut s = state(ControlVector::new(80.0, 80.0, 50.0));
        s.config.ch = vec![false; 3];
        assert!(matches!(closure(&plant, &s, W, 300.0), Err(PlantError::EquipmentOff { .. })));
    }

    #[test]
    fn undersized_chilled_water_flow_is_infeasible() {
        let mut plant = PlantConfig::default();
        for p in &mut plant.chw_pumps {
            p.rated_flow_lps = 20.0;
        }
        let s = state(ControlVector::new(80.0, 80.0, 50.0));
        assert!(matches!(closure(&plant, &s, W, 600.0), Err(PlantError::LoadInfeasible { .. })));
    }

    #[test]
    fn noiseless_readings_equal_truth() {
        let plant = PlantConfig::default().noiseless();
        let s = state(ControlVector::new(70.0, 65.0, 55.0));
        let truth = closure(&plant, &s, W, 650.0).unwrap();
        let mut p = Plant::new(plant, s, 1).unwrap();
        let r = p.step(W, 650.0).unwrap();
        assert_eq!(r.chkw, truth.chkw);
        assert_eq!(r.cwshdr, truth.cwshdr);
        assert_eq!(r.total_kw, truth.total_kw);
        assert_eq!(p.state().minute, 1);
    }

    #[test]
    fn total_is_sum_of_readings_under_noise() {
        let mut p = Plant::new(PlantConfig::default(), state(ControlVector::new(70.0, 65.0, 55.0)), 3).unwrap();
        for _ in 0..50 {
            let r = p.step(W, 650.0).unwrap();
            assert_eq!(r.total_kw, r.power_sum());
            assert!(r.chfhdr >= 0.0 && r.cwfhdr >= 0.0);
        }
    }
}
