//! Unit constants shared by the plant simulator and the optimizer.

/// Thermal kilowatts per refrigeration ton.
pub const KW_PER_RT: f64 = 3.517;

/// Volumetric heat capacity of water in kJ/(L·K).
pub const WATER_KJ_PER_L_K: f64 = 4.186;

/// Telemetry is sampled once per minute.
pub const MINUTES_PER_DAY: u64 = 1440;

/// Minutes to hours, for kW → kWh integration of per-minute records.
pub const HOURS_PER_MINUTE: f64 = 1.0 / 60.0;

/// Day index of a minute timestamp on the simulated clock.
pub fn day_of(ts: u64) -> u64 {
    ts / MINUTES_PER_DAY
}
