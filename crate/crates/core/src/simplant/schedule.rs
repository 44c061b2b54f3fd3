use serde::{Deserialize, Serialize};

use super::config::PlantConfig;
use super::record::Configuration;
use crate::units::{KW_PER_RT, WATER_KJ_PER_L_K};

/// Equipment set and setpoint for one whole day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayPlan {
    #[serde(flatten)]
    pub config: Configuration,
    pub chsp: f64,
}

/// Operator macro-control: a timetable of day plans, repeated cyclically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorSchedule {
    pub days: Vec<DayPlan>,
}

pub const CHSP_RANGE: (f64, f64) = (5.0, 10.0);

impl OperatorSchedule {
    /// Two units of each kind on, rotating daily so every unit accumulates
    /// running hours. Chilled-water setpoint 7 °C.
    pub fn rotation(plant: &PlantConfig) -> Self {
        let n = plant.chillers.len().max(plant.cooling_towers.len()).max(plant.cw_pumps.len()).max(plant.chw_pumps.len());
        let days = (0..n)
            .map(|d| {
                let pick = |count: usize| -> Vec<bool> {
                    let on = count.min(2);
                    (0..count).map(|i| (i + count - d % count) % count < on).collect()
                };
                DayPlan {
                    config: Configuration {
                        ch: pick(plant.chillers.len()),
                        ct: pick(plant.cooling_towers.len()),
                        cwp: pick(plant.cw_pumps.len()),
                        chwp: pick(plant.chw_pumps.len()),
                    },
                    chsp: 7.0,
                }
            })
            .collect();
        Self { days }
    }

    pub fn for_day(&self, day: u64) -> &DayPlan {
        &self.days[(day % self.days.len() as u64) as usize]
    }

    /// Every day plan must be able to carry `peak_rt`.
    pub fn validate(&self, plant: &PlantConfig, peak_rt: f64) -> Result<(), String> {
        if self.days.is_empty() {
            return Err("schedule has no day plans".into());
        }
        for (i, plan) in self.days.iter().enumerate() {
            check_plan(plant, plan, peak_rt).map_err(|e| format!("day plan {i}: {e}"))?;
        }
        Ok(())
    }
}

fn check_plan(plant: &PlantConfig, plan: &DayPlan, peak_rt: f64) -> Result<(), String> {
    let c = &plan.config;
    if c.ch.len() != plant.chillers.len()
        || c.ct.len() != plant.cooling_towers.len()
        || c.cwp.len() != plant.cw_pumps.len()
        || c.chwp.len() != plant.chw_pumps.len()
    {
        return Err("flag arrays do not match the plant's equipment counts".into());
    }
    if !(CHSP_RANGE.0..=CHSP_RANGE.1).contains(&plan.chsp) {
        return Err(format!("chsp {} outside [5, 10] °C", plan.chsp));
    }
    let capacity: f64 = plant.chillers.iter().zip(&c.ch).filter(|(_, &on)| on).map(|(s, _)| s.capacity_rt).sum();
    if capacity < peak_rt {
        return Err(format!("running chillers provide {capacity} RT, below peak {peak_rt} RT"));
    }
    if !c.cwp.iter().any(|&on| on) || !c.ct.iter().any(|&on| on) {
        return Err("at least one condenser pump and cooling tower must run".into());
    }
    let max_flow: f64 = plant
        .chw_pumps
        .iter()
        .zip(&c.chwp)
        .filter(|(_, &on)| on)
        .map(|(p, _)| p.rated_flow_lps * plant.speed.chwp.upper / 100.0)
        .sum();
    let needed = peak_rt * KW_PER_RT / (WATER_KJ_PER_L_K * plant.max_chw_delta_t);
    if max_flow < needed {
        return Err(format!("chilled-water pumps deliver {max_flow:.1} L/s, peak needs {needed:.1} L/s"));
    }
    Ok(())
}
