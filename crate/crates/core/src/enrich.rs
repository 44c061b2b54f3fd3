//! Active data enrichment: short windows in which the VSD speeds are
//! randomized across their admissible ranges so the logged data covers
//! more than the narrow band normal operation visits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::control::{Command, ControlSource, Controller};
use crate::simplant::{Bounds, ControlVector, SensorRecord, SpeedLimits};
use crate::units::MINUTES_PER_DAY;

pub const DEFAULT_WINDOW_MINUTES: u64 = 30;
pub const DEFAULT_WINDOWS_PER_DAY: usize = 3;
pub const DEFAULT_REDRAW_MINUTES: u64 = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EnrichError {
    #[error("{n} windows of {duration} min do not fit in {day_length} min")]
    DoesNotFit { n: usize, duration: u64, day_length: u64 },
    #[error("windows at minute {0} and {1} overlap")]
    Overlap(u64, u64),
    #[error("{0} range {1:?} outside speed limits")]
    RangeOutsideLimits(&'static str, Bounds),
    #[error("invalid plan: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: u64,
    pub duration: u64,
}

impl Window {
    pub fn end(&self) -> u64 {
        self.start + self.duration
    }

    pub fn contains(&self, minute: u64) -> bool {
        minute >= self.start && minute < self.end()
    }
}

/// Speed ranges (percent) the enrichment draws from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedRanges {
    pub cwp: Bounds,
    pub chwp: Bounds,
    pub ct: Bounds,
}

impl Default for SpeedRanges {
    fn default() -> Self {
        Self::from(&SpeedLimits::default())
    }
}

impl From<&SpeedLimits> for SpeedRanges {
    fn from(l: &SpeedLimits) -> Self {
        let [cwp, chwp, ct] = l.to_array();
        Self { cwp, chwp, ct }
    }
}

impl SpeedRanges {
    pub fn to_array(&self) -> [Bounds; 3] {
        [self.cwp, self.chwp, self.ct]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnrichmentPlan {
    pub windows: Vec<Window>,
    pub ranges: SpeedRanges,
    pub redraw_minutes: u64,
}

impl Default for EnrichmentPlan {
    fn default() -> Self {
        Self { windows: Vec::new(), ranges: SpeedRanges::default(), redraw_minutes: DEFAULT_REDRAW_MINUTES }
    }
}

impl EnrichmentPlan {
    /// Same number of random windows on each of `days` consecutive days.
    pub fn daily(days: u64, n_windows: usize, duration: u64, seed: u64) -> Result<Self, EnrichError> {
        let mut windows = Vec::new();
        for d in 0..days {
            let day = plan_windows(MINUTES_PER_DAY, n_windows, duration, seed.wrapping_add(d))?;
            windows.extend(day.windows.into_iter().map(|w| Window { start: w.start + d * MINUTES_PER_DAY, ..w }));
        }
        Ok(Self { windows, ..Self::default() })
    }

    /// One window spanning every minute of `minutes`.
    pub fn continuous(minutes: u64) -> Self {
        Self { windows: vec![Window { start: 0, duration: minutes }], ..Self::default() }
    }

    pub fn validate(&self, limits: &SpeedLimits) -> Result<(), EnrichError> {
        if self.redraw_minutes == 0 {
            return Err(EnrichError::Invalid("redraw period must be at least one minute".into()));
        }
        let names = ["cwp", "chwp", "ct"];
        for ((name, r), l) in names.iter().zip(self.ranges.to_array()).zip(limits.to_array()) {
            if !(r.lower <= r.upper && r.lower >= l.lower && r.upper <= l.upper) {
                return Err(EnrichError::RangeOutsideLimits(name, r));
            }
        }
        let mut sorted = self.windows.clone();
        sorted.sort_by_key(|w| w.start);
        if let Some(w) = sorted.iter().find(|w| w.duration == 0) {
            return Err(EnrichError::Invalid(format!("window at minute {} has zero duration", w.start)));
        }
        for pair in sorted.windows(2) {
            if pair[1].start < pair[0].end() {
                return Err(EnrichError::Overlap(pair[0].start, pair[1].start));
            }
        }
        Ok(())
    }

    pub fn window_at(&self, minute: u64) -> Option<&Window> {
        self.windows.iter().find(|w| w.contains(minute))
    }

    pub fn contains(&self, minute: u64) -> bool {
        self.window_at(minute).is_some()
    }

    /// Adds a window; rejects it if it would overlap an existing one.
    pub fn add_window(&mut self, window: Window) -> Result<(), EnrichError> {
        if window.duration == 0 {
            return Err(EnrichError::Invalid("window duration must be positive".into()));
        }
        if let Some(w) = self.windows.iter().find(|w| w.start < window.end() && window.start < w.end()) {
            return Err(EnrichError::Overlap(w.start, window.start));
        }
        self.windows.push(window);
        self.windows.sort_by_key(|w| w.start);
        Ok(())
    }
}

/// `n_windows` disjoint windows of `duration` minutes placed uniformly at random in `[0, day_length)`.
pub fn plan_windows(day_length: u64, n_windows: usize, duration: u64, seed: u64) -> Result<EnrichmentPlan, EnrichError> {
    let used = n_windows as u64 * duration;
    if used > day_length {
        return Err(EnrichError::DoesNotFit { n: n_windows, duration, day_length });
    }
    let slack = day_length - used;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Sorted offsets into the slack; window i is shifted by the i windows before it.
    let mut offsets: Vec<u64> = (0..n_windows).map(|_| rng.random_range(0..=slack)).collect();
    offsets.sort_unstable();
    let windows = offsets
        .into_iter()
        .enumerate()
        .map(|(i, o)| Window { start: o + i as u64 * duration, duration })
        .collect();
    Ok(EnrichmentPlan { windows, ..EnrichmentPlan::default() })
}

/// Independent uniform draw of each speed from its range.
pub fn perturb<R: Rng + ?Sized>(ranges: &SpeedRanges, rng: &mut R) -> ControlVector {
    let draw = |b: Bounds, rng: &mut R| if b.lower == b.upper { b.lower } else { rng.random_range(b.lower..=b.upper) };
    let cwp = draw(ranges.cwp, rng);
    let chwp = draw(ranges.chwp, rng);
    let ct = draw(ranges.ct, rng);
    ControlVector::new(cwp, chwp, ct)
}

/// Wraps a base controller; inside windows the speeds are randomized,
/// outside them the base controller is in charge.
pub struct EnrichmentController<C> {
    plan: EnrichmentPlan,
    base: C,
    rng: ChaCha8Rng,
    held: Option<ControlVector>,
}

impl<C: Controller> EnrichmentController<C> {
    pub fn new(plan: EnrichmentPlan, base: C, seed: u64) -> Self {
        Self { plan, base, rng: ChaCha8Rng::seed_from_u64(seed), held: None }
    }

    pub fn plan(&self) -> &EnrichmentPlan {
        &self.plan
    }

    pub fn plan_mut(&mut self) -> &mut EnrichmentPlan {
        &mut self.plan
    }

    pub fn base(&self) -> &C {
        &self.base
    }

    pub fn base_mut(&mut self) -> &mut C {
        &mut self.base
    }
}

impl<C: Controller> Controller for EnrichmentController<C> {
    fn name(&self) -> &str {
        "enrichment"
    }

    fn on_record(&mut self, record: &SensorRecord) -> Option<Command> {
        // A command issued now takes effect next minute.
        // The base controller is consulted only outside windows, so a
        // periodic optimizer never logs ticks whose commands are discarded.
        let next = record.ts + 1;
        match self.plan.window_at(next).copied() {
            Some(w) => {
                if next == w.start {
                    self.held = Some(record.control);
                }
                if (next - w.start) % self.plan.redraw_minutes == 0 {
                    let control = perturb(&self.plan.ranges, &mut self.rng);
                    return Some(Command::new(control, ControlSource::Enrichment));
                }
                None
            }
            None => {
                let base_cmd = self.base.on_record(record);
                match self.held.take() {
                    Some(prev) => Some(base_cmd.unwrap_or_else(|| Command::new(prev, ControlSource::Operator))),
                    None => base_cmd,
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::FixedVsdController;
    use crate::simplant::{simulate, Scenario, DEFAULT_START};

    #[test]
    fn three_windows_fit_a_day() {
        let plan = plan_windows(1440, 3, 30, 7).unwrap();
        assert_eq!(plan.windows.len(), 3);
        assert!(plan.windows.iter().all(|w| w.duration == 30 && w.end() <= 1440));
        plan.validate(&SpeedLimits::default()).unwrap();
    }

    #[test]
    fn zero_windows_is_empty() {
        assert!(plan_windows(1440, 0, 30, 1).unwrap().windows.is_empty());
    }

    #[test]
    fn too_many_windows_do_not_fit() {
        assert!(matches!(plan_windows(1440, 49, 30, 1), Err(EnrichError::DoesNotFit { .. })));
        assert!(plan_windows(1440, 48, 30, 1).is_ok());
    }

    #[test]
    fn degenerate_range_is_exact() {
        let b = Bounds::new(50.0, 50.0);
        let ranges = SpeedRanges { cwp: b, chwp: b, ct: b };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(perturb(&ranges, &mut rng), ControlVector::new(50.0, 50.0, 50.0));
    }

    #[test]
    fn overlapping_windows_rejected() {
        let mut plan = EnrichmentPlan::default();
        plan.add_window(Window { start: 100, duration: 30 }).unwrap();
        assert!(plan.add_window(Window { start: 129, duration: 5 }).is_err());
        plan.add_window(Window { start: 130, duration: 5 }).unwrap();
        plan.windows.push(Window { start: 110, duration: 5 });
        assert!(matches!(plan.validate(&SpeedLimits::default()), Err(EnrichError::Overlap(..))));
    }

    #[test]
    fn ranges_must_sit_inside_limits() {
        let plan = EnrichmentPlan {
            ranges: SpeedRanges { ct: Bounds::new(10.0, 100.0), ..SpeedRanges::default() },
            ..EnrichmentPlan::default()
        };
        assert!(matches!(plan.validate(&SpeedLimits::default()), Err(EnrichError::RangeOutsideLimits("ct", _))));
    }

    fn one_window_scenario() -> Scenario {
        let mut s = Scenario::default();
        s.days = 1;
        s.enrichment = Some(EnrichmentPlan { windows: vec![Window { start: 600, duration: 30 }], ..Default::default() });
        s
    }

    #[test]
    fn window_randomizes_then_hands_back() {
        let s = one_window_scenario();
        let plan = s.enrichment.clone().unwrap();
        let mut c = EnrichmentController::new(plan, FixedVsdController::new(DEFAULT_START), 1);
        let recs = simulate(&s, &mut c, 700).unwrap();
        assert_eq!(recs[599].control, DEFAULT_START);
        for r in &recs[600..630] {
            assert_ne!(r.control, DEFAULT_START);
        }
        assert_eq!(recs[630].control, DEFAULT_START);
        // on/off never touched
        let plain = simulate(&s, &mut FixedVsdController::new(DEFAULT_START), 700).unwrap();
        assert!(recs.iter().zip(&plain).all(|(a, b)| a.config == b.config));
    }

    #[test]
    fn empty_plan_matches_base() {
        let s = Scenario { days: 1, ..Scenario::default() };
        let mut c = EnrichmentController::new(EnrichmentPlan::default(), FixedVsdController::new(DEFAULT_START), 1);
        let a = simulate(&s, &mut c, 200).unwrap();
        let b = simulate(&s, &mut FixedVsdController::new(DEFAULT_START), 200).unwrap();
        assert_eq!(a, b);
    }
}
