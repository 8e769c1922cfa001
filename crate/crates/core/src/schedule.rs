//! Time dependence of the two-photon detuning.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// A detuning history `δ(t)` on `[0, duration]`.
pub trait DetuningProfile {
    fn delta_at(&self, t: f64) -> f64;
    fn duration(&self) -> f64;
    /// Detuning change per unit time, zero for a static profile.
    fn sweep_rate(&self) -> f64;
}

/// Linear chirp from `delta_start` to `delta_end` at `|dδ/dt| = rate`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChirpSchedule {
    delta_start: f64,
    delta_end: f64,
    rate: f64,
}

impl ChirpSchedule {
    pub fn new(delta_start: f64, delta_end: f64, rate: f64) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(invalid("rate", "must be positive and finite"));
        }
        if !delta_start.is_finite() || !delta_end.is_finite() {
            return Err(invalid("delta", "sweep bounds must be finite"));
        }
        if delta_start == delta_end {
            return Err(invalid("delta_end", "sweep must span a nonzero detuning range"));
        }
        Ok(Self {
            delta_start,
            delta_end,
            rate,
        })
    }

    /// Chirp with `dδ/dt < 0` across the span `[lo, hi]`.
    pub fn downward(lo: f64, hi: f64, rate: f64) -> Result<Self> {
        Self::new(lo.max(hi), lo.min(hi), rate)
    }

    /// Chirp with `dδ/dt > 0` across the span `[lo, hi]`.
    pub fn upward(lo: f64, hi: f64, rate: f64) -> Result<Self> {
        Self::new(lo.min(hi), lo.max(hi), rate)
    }

    pub fn delta_start(&self) -> f64 {
        self.delta_start
    }

    pub fn delta_end(&self) -> f64 {
        self.delta_end
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Sign of `dδ/dt`, +1 or -1.
    pub fn direction(&self) -> f64 {
        if self.delta_end > self.delta_start {
            1.0
        } else {
            -1.0
        }
    }

    /// Same span and rate, opposite direction.
    pub fn reversed(&self) -> Self {
        Self {
            delta_start: self.delta_end,
            delta_end: self.delta_start,
            rate: self.rate,
        }
    }

    pub fn with_rate(&self, rate: f64) -> Result<Self> {
        Self::new(self.delta_start, self.delta_end, rate)
    }
}

impl DetuningProfile for ChirpSchedule {
    fn delta_at(&self, t: f64) -> f64 {
        self.delta_start + self.direction() * self.rate * t
    }

    fn duration(&self) -> f64 {
        (self.delta_end - self.delta_start).abs() / self.rate
    }

    fn sweep_rate(&self) -> f64 {
        self.direction() * self.rate
    }
}

/// Detuning held at one value for a fixed time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantDetuning {
    pub delta: f64,
    pub duration: f64,
}

impl DetuningProfile for ConstantDetuning {
    fn delta_at(&self, _t: f64) -> f64 {
        self.delta
    }

    fn duration(&self) -> f64 {
        self.duration
    }

    fn sweep_rate(&self) -> f64 {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direction_and_duration() {
        let s = ChirpSchedule::new(40.0, -60.0, 4.0).unwrap();
        assert_eq!(s.direction(), -1.0);
        assert_eq!(s.duration(), 25.0);
        assert_eq!(s.delta_at(25.0), -60.0);
        let r = s.reversed();
        assert_eq!(r.direction(), 1.0);
        assert_eq!(r.delta_at(0.0), -60.0);
        assert_eq!(ChirpSchedule::downward(-60.0, 40.0, 4.0).unwrap(), s);
        assert_eq!(ChirpSchedule::upward(40.0, -60.0, 4.0).unwrap(), r);
    }

    #[test]
    fn rejects_bad_schedules() {
        assert!(ChirpSchedule::new(0.0, 1.0, 0.0).is_err());
        assert!(ChirpSchedule::new(0.0, 1.0, -1.0).is_err());
        assert!(ChirpSchedule::new(1.0, 1.0, 1.0).is_err());
        assert!(ChirpSchedule::new(f64::NAN, 1.0, 1.0).is_err());
    }
}
