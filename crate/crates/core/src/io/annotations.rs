//! Behavior annotations: `start_s,end_s,label` CSV rows with the interval
//! label vocabulary (`lying_lateral`, `lying_sternal`, `sitting`,
//! `standing`, `movement`, `environmental_event`).

use std::path::Path;

use crate::error::{Error, Result};
use crate::trace::{BehaviorTimeline, IntervalLabel, TimeInterval};

pub fn write_annotations(path: &Path, timeline: &BehaviorTimeline) -> Result<()> {
    let mut text = String::from("start_s,end_s,label\n");
    for iv in &timeline.intervals {
        text.push_str(&format!("{},{},{}\n", iv.start_s, iv.end_s, iv.label.as_str()));
    }
    super::atomic_write(path, text.as_bytes())
}

/// Parse annotations into a timeline spanning `total_duration_s`.
pub fn read_annotations(path: &Path, total_duration_s: f64) -> Result<BehaviorTimeline> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::data(format!("reading {}: {e}", path.display())))?;
    let mut intervals = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line.starts_with("start_s")) {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::data(format!(
                "{}:{}: expected start_s,end_s,label",
                path.display(),
                lineno + 1
            )));
        }
        let start: f64 = parts[0].parse().map_err(|_| {
            Error::data(format!("{}:{}: bad start_s '{}'", path.display(), lineno + 1, parts[0]))
        })?;
        let end: f64 = parts[1].parse().map_err(|_| {
            Error::data(format!("{}:{}: bad end_s '{}'", path.display(), lineno + 1, parts[1]))
        })?;
        let label = IntervalLabel::parse(parts[2]).ok_or_else(|| {
            Error::data(format!("{}:{}: unknown label '{}'", path.display(), lineno + 1, parts[2]))
        })?;
        intervals.push(TimeInterval::new(start, end, label)?);
    }
    BehaviorTimeline::new(intervals, total_duration_s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn annotations_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("annotations.csv");
        let timeline = BehaviorTimeline::new(
            vec![
                TimeInterval::new(0.0, 50.0, IntervalLabel::LyingLateral).unwrap(),
                TimeInterval::new(50.0, 60.0, IntervalLabel::Standing).unwrap(),
            ],
            60.0,
        )
        .unwrap();
        write_annotations(&path, &timeline).unwrap();
        let back = read_annotations(&path, 60.0).unwrap();
        assert_eq!(back, timeline);
    }

    #[test]
    fn malformed_rows_are_data_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("annotations.csv");
        std::fs::write(&path, "0.0,10.0\n").unwrap();
        assert!(read_annotations(&path, 60.0).is_err());
        std::fs::write(&path, "0.0,10.0,flying\n").unwrap();
        assert!(read_annotations(&path, 60.0).is_err());
    }
}
