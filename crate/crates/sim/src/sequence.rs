use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// Item slot value for a served break.
pub const BREAK_MARKER: u32 = u32::MAX;

/// One batch of `B` slots delivered at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub items: Vec<u32>,
    /// `true` where content was served, `false` where a break was.
    pub indicators: Vec<bool>,
}

impl Event {
    pub fn served(&self) -> usize {
        self.indicators.iter().filter(|&&i| i).count()
    }
}

/// How events are counted toward the engagement rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventCounting {
    /// One per batch.
    #[default]
    Batches,
    /// `B` per batch.
    Slots,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionSequence {
    pub events: Vec<Event>,
    pub horizon: f64,
    pub batch: usize,
    pub churned: bool,
}

impl InteractionSequence {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.events.iter().map(|e| e.t)
    }

    /// Checks ordering, horizon and slot-shape invariants.
    pub fn validate(&self) -> Result<()> {
        let mut prev = f64::NEG_INFINITY;
        for (i, e) in self.events.iter().enumerate() {
            if !(e.t.is_finite() && e.t >= 0.0 && e.t > prev && e.t < self.horizon) {
                return Err(SimError::Config(format!("event {i} at t = {} breaks time ordering", e.t)));
            }
            prev = e.t;
            if e.items.len() != self.batch || e.indicators.len() != self.batch {
                return Err(SimError::Config(format!("event {i} does not have {} slots", self.batch)));
            }
            if e.items.iter().zip(&e.indicators).any(|(&x, &served)| (x == BREAK_MARKER) == served) {
                return Err(SimError::Config(format!("event {i} break markers disagree with indicators")));
            }
        }
        Ok(())
    }

    /// Rows `t,items,indicators`; slots are `|`-joined, breaks print as `-`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,items,indicators\n");
        for e in &self.events {
            let items: Vec<String> =
                e.items.iter().map(|&x| if x == BREAK_MARKER { "-".to_string() } else { x.to_string() }).collect();
            let inds: Vec<&str> = e.indicators.iter().map(|&i| if i { "1" } else { "0" }).collect();
            let _ = writeln!(out, "{:.16e},{},{}", e.t, items.join("|"), inds.join("|"));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let seq: Self = serde_json::from_str(text)?;
        seq.validate()?;
        Ok(seq)
    }
}

/// `|S| / T`, one count per batch.
pub fn engagement_rate(seq: &InteractionSequence) -> f64 {
    engagement_rate_counting(seq, EventCounting::Batches)
}

pub fn engagement_rate_counting(seq: &InteractionSequence, counting: EventCounting) -> f64 {
    let per = match counting {
        EventCounting::Batches => 1,
        EventCounting::Slots => seq.batch,
    };
    (seq.events.len() * per) as f64 / seq.horizon
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(n: usize) -> InteractionSequence {
        let events = (0..n)
            .map(|i| Event { t: i as f64 * 0.1, items: vec![7, BREAK_MARKER], indicators: vec![true, false] })
            .collect();
        InteractionSequence { events, horizon: 100.0, batch: 2, churned: false }
    }

    #[test]
    fn rates() {
        assert_eq!(engagement_rate(&seq(0)), 0.0);
        assert_eq!(engagement_rate(&seq(1000)), 10.0);
        assert_eq!(engagement_rate_counting(&seq(1000), EventCounting::Slots), 20.0);
    }

    #[test]
    fn csv_keeps_seventeen_digits() {
        let mut s = seq(2);
        s.events[1].t = 0.1 + 0.2;
        let csv = s.to_csv();
        let line = csv.lines().nth(2).unwrap();
        assert_eq!(line, "3.0000000000000004e-1,7|-,1|0");
        let t: f64 = line.split(',').next().unwrap().parse().unwrap();
        assert_eq!(t.to_bits(), (0.1f64 + 0.2).to_bits());
    }

    #[test]
    fn json_round_trip_and_validation() {
        let s = seq(5);
        assert_eq!(InteractionSequence::from_json(&s.to_json().unwrap()).unwrap(), s);
        let mut bad = seq(3);
        bad.events[2].t = 0.05;
        assert!(bad.validate().is_err());
        let mut bad = seq(1);
        bad.events[0].items[0] = BREAK_MARKER;
        assert!(bad.validate().is_err());
    }
}
