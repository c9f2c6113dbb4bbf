use super::SimError;
use serde::{Deserialize, Serialize};

/// Distance held from `start_s` until the next segment starts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub start_s: f64,
    pub distance_m: f64,
}

/// Piecewise-constant node-to-interrogator distance over `[0, duration_s)`,
/// plus the fixed distance of the BLE link.
#[derive(Debug, Clone, PartialEq)]
pub struct MobilityTrace {
    segments: Vec<Segment>,
    duration_s: f64,
    ble_distance_m: f64,
}

impl MobilityTrace {
    pub fn new(
        segments: Vec<Segment>,
        duration_s: f64,
        ble_distance_m: f64,
    ) -> Result<Self, SimError> {
        if !(duration_s > 0.0 && duration_s.is_finite()) {
            return Err(SimError::invalid("duration_s", "must be positive"));
        }
        if !(ble_distance_m > 0.0 && ble_distance_m.is_finite()) {
            return Err(SimError::invalid("trace.ble_distance_m", "must be positive"));
        }
        let Some(first) = segments.first() else {
            return Err(SimError::invalid("trace.segments", "must not be empty"));
        };
        if first.start_s != 0.0 {
            return Err(SimError::invalid("trace.segments[0].start_s", "must be 0"));
        }
        for (i, s) in segments.iter().enumerate() {
            if !(s.distance_m > 0.0 && s.distance_m.is_finite()) {
                return Err(SimError::invalid(
                    format!("trace.segments[{i}].distance_m"),
                    "must be positive",
                ));
            }
            if !(s.start_s < duration_s) {
                return Err(SimError::invalid(
                    format!("trace.segments[{i}].start_s"),
                    "must lie before duration_s",
                ));
            }
            if i > 0 && !(s.start_s > segments[i - 1].start_s) {
                return Err(SimError::invalid(
                    format!("trace.segments[{i}].start_s"),
                    "segments must be sorted by strictly increasing start",
                ));
            }
        }
        Ok(Self {
            segments,
            duration_s,
            ble_distance_m,
        })
    }

    pub fn constant(
        distance_m: f64,
        duration_s: f64,
        ble_distance_m: f64,
    ) -> Result<Self, SimError> {
        Self::new(
            vec![Segment {
                start_s: 0.0,
                distance_m,
            }],
            duration_s,
            ble_distance_m,
        )
    }

    /// Switches between `first_m` and `second_m` every `interval_s`, starting at `first_m`.
    pub fn alternating(
        first_m: f64,
        second_m: f64,
        interval_s: f64,
        duration_s: f64,
        ble_distance_m: f64,
    ) -> Result<Self, SimError> {
        if !(interval_s > 0.0 && interval_s.is_finite()) {
            return Err(SimError::invalid(
                "trace.alternating.interval_s",
                "must be positive",
            ));
        }
        let mut segments = Vec::new();
        let mut k = 0u64;
        loop {
            let start_s = k as f64 * interval_s;
            if start_s >= duration_s {
                break;
            }
            let distance_m = if k % 2 == 0 { first_m } else { second_m };
            segments.push(Segment {
                start_s,
                distance_m,
            });
            k += 1;
        }
        Self::new(segments, duration_s, ble_distance_m)
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn duration_s(&self) -> f64 {
        self.duration_s
    }

    pub fn ble_distance_m(&self) -> f64 {
        self.ble_distance_m
    }

    pub fn max_distance_m(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| s.distance_m)
            .fold(0.0, f64::max)
    }

    /// Distance of the segment containing `t`.
    pub fn distance_at(&self, t: f64) -> Result<f64, SimError> {
        if !(t >= 0.0 && t < self.duration_s) {
            return Err(SimError::TimeOutOfRange {
                t,
                duration_s: self.duration_s,
            });
        }
        let idx = self.segments.partition_point(|s| s.start_s <= t);
        Ok(self.segments[idx - 1].distance_m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alt() -> MobilityTrace {
        MobilityTrace::alternating(5.0, 60.0, 10.0, 120.0, 5.0).unwrap()
    }

    #[test]
    fn alternating_lookup() {
        let tr = alt();
        assert_eq!(tr.distance_at(3.0).unwrap(), 5.0);
        assert_eq!(tr.distance_at(12.0).unwrap(), 60.0);
        assert_eq!(tr.distance_at(20.0).unwrap(), 5.0);
        assert_eq!(tr.distance_at(10.0).unwrap(), 60.0);
        assert_eq!(tr.distance_at(119.999).unwrap(), 60.0);
        assert_eq!(tr.segments().len(), 12);
    }

    #[test]
    fn out_of_range_time() {
        let tr = alt();
        assert!(matches!(tr.distance_at(120.0), Err(SimError::TimeOutOfRange { .. })));
        assert!(tr.distance_at(-0.5).is_err());
    }

    #[test]
    fn rejects_bad_segments() {
        let s = |start_s, distance_m| Segment {
            start_s,
            distance_m,
        };
        assert!(MobilityTrace::new(vec![], 10.0, 5.0).is_err());
        assert!(MobilityTrace::new(vec![s(1.0, 5.0)], 10.0, 5.0).is_err());
        assert!(MobilityTrace::new(vec![s(0.0, 5.0), s(0.0, 6.0)], 10.0, 5.0).is_err());
        assert!(MobilityTrace::new(vec![s(0.0, 5.0), s(12.0, 6.0)], 10.0, 5.0).is_err());
        assert!(MobilityTrace::new(vec![s(0.0, -5.0)], 10.0, 5.0).is_err());
        let err = MobilityTrace::new(vec![s(0.0, 5.0), s(3.0, 0.0)], 10.0, 5.0).unwrap_err();
        assert!(err.to_string().contains("trace.segments[1].distance_m"), "{err}");
    }
}
