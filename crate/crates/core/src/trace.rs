//! Anytime traces: the best objective value known to a solver over time.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::evaluation::PartitionScore;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    /// Seconds since the solver started.
    pub elapsed_s: f64,
    pub best: PartitionScore,
}

/// Incumbent improvements in time order.
///
/// Points are only appended when the log-objective strictly increases, so the
/// sequence is monotone by construction.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AnytimeTrace {
    points: Vec<TracePoint>,
}

impl AnytimeTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn points(&self) -> &[TracePoint] {
        &self.points
    }

    pub fn last(&self) -> Option<&TracePoint> {
        self.points.last()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Appends `best` if it beats the last recorded value. Returns whether it was kept.
    ///
    /// Both the log and the linear objective must not go down; the two can
    /// disagree by an ulp when scores are practically tied.
    pub fn record(&mut self, elapsed_s: f64, best: PartitionScore) -> bool {
        if self
            .points
            .last()
            .is_some_and(|p| best.log_value <= p.best.log_value || best.value < p.best.value)
        {
            return false;
        }
        self.points.push(TracePoint { elapsed_s, best });
        true
    }

    pub fn is_monotone(&self) -> bool {
        self.points.windows(2).all(|w| {
            w[0].elapsed_s <= w[1].elapsed_s
                && w[0].best.log_value <= w[1].best.log_value
                && w[0].best.value <= w[1].best.value
        })
    }

    /// Best value known at time `t`, if any point precedes it.
    pub fn best_at(&self, t: f64) -> Option<PartitionScore> {
        self.points
            .iter()
            .take_while(|p| p.elapsed_s <= t)
            .last()
            .map(|p| p.best)
    }
}

/// Wall clock started at solver entry.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Clock(Instant);

impl Clock {
    pub fn start() -> Self {
        Clock(Instant::now())
    }

    pub fn elapsed(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn score(v: f64) -> PartitionScore {
        PartitionScore {
            value: v,
            log_value: v.ln(),
        }
    }

    #[test]
    fn only_improvements_kept() {
        let mut t = AnytimeTrace::new();
        assert!(t.record(0.0, score(0.2)));
        assert!(!t.record(0.1, score(0.2)));
        assert!(!t.record(0.2, score(0.1)));
        assert!(t.record(0.3, score(0.4)));
        assert_eq!(t.len(), 2);
        assert!(t.is_monotone());
        assert_eq!(t.best_at(0.25).unwrap().value, 0.2);
        assert!(t.best_at(-1.0).is_none());
    }
}
