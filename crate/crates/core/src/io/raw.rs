//! Raw `timestamp,event,x,y` event logs.

use std::io::Read;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::trajectory::{Point, Trajectory};

/// Trajectories shorter than this are dropped from datasets.
pub const MIN_TRAJECTORY_POINTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Event {
    Move,
    Click,
}

#[derive(Debug, Deserialize)]
struct Row {
    timestamp: i64,
    event: Event,
    x: f64,
    y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawParse {
    pub trajectories: Vec<Trajectory>,
    /// Segments dropped for having fewer than [`MIN_TRAJECTORY_POINTS`] points.
    pub dropped: usize,
}

/// Splits an event log at its clicks. Each pair of consecutive clicks and
/// the moves between them form one trajectory, clicks included. Samples that
/// repeat the previous timestamp are skipped, except a closing click, which
/// replaces the sample it collides with.
pub fn parse_raw_events(reader: impl Read) -> Result<RawParse> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| csv_err(&e, 1))?.clone();
    let want = ["timestamp", "event", "x", "y"];
    if header.len() != 4 || header.iter().zip(want).any(|(a, b)| a != b) {
        return Err(Error::Parse { line: 1, msg: format!("expected header 'timestamp,event,x,y', got '{}'", header.iter().collect::<Vec<_>>().join(",")) });
    }
    let mut out = RawParse { trajectories: Vec::new(), dropped: 0 };
    let mut current: Option<Vec<Point>> = None;
    let mut last_t: Option<i64> = None;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(&e, 0))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let row: Row = rec.deserialize(None).map_err(|e| Error::Parse { line, msg: e.to_string() })?;
        if !(row.x.is_finite() && row.y.is_finite()) {
            return Err(Error::Parse { line, msg: "non-finite coordinate".into() });
        }
        if last_t.is_some_and(|t| row.timestamp < t) {
            return Err(Error::Parse { line, msg: format!("timestamp {} decreases", row.timestamp) });
        }
        last_t = Some(row.timestamp);
        let p = Point::new(row.x, row.y, row.timestamp as f64 / 1000.0);
        match row.event {
            Event::Move => {
                if let Some(seg) = current.as_mut() {
                    if seg.last().is_none_or(|q| q.t < p.t) {
                        seg.push(p);
                    }
                }
            }
            Event::Click => {
                if let Some(mut seg) = current.take() {
                    if seg.len() > 1 && seg.last().is_some_and(|q| q.t == p.t) {
                        seg.pop();
                    }
                    if seg.last().is_none_or(|q| q.t < p.t) {
                        seg.push(p);
                    }
                    if seg.len() >= MIN_TRAJECTORY_POINTS {
                        out.trajectories.push(Trajectory::new(seg)?);
                    } else {
                        out.dropped += 1;
                    }
                }
                current = Some(vec![p]);
            }
        }
    }
    if out.dropped > 0 {
        log::warn!("dropped {} segments shorter than {MIN_TRAJECTORY_POINTS} points", out.dropped);
    }
    Ok(out)
}

fn csv_err(e: &csv::Error, fallback: usize) -> Error {
    let line = e.position().map_or(fallback, |p| p.line() as usize);
    Error::Parse { line, msg: e.to_string() }
}
