use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CorpusError;

/// Speech regions of an utterance as ordered, disjoint `[start, end)`
/// intervals in seconds. The sidecar file format is one `start end` pair per
/// line.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LabelTrack {
    segments: Vec<(f64, f64)>,
}

impl LabelTrack {
    pub fn new(segments: Vec<(f64, f64)>) -> Result<LabelTrack, CorpusError> {
        let mut prev_end = 0.0f64;
        for &(start, end) in &segments {
            if !start.is_finite() || !end.is_finite() || start < 0.0 || end <= start {
                return Err(CorpusError::InvalidLabels(format!(
                    "segment [{start}, {end}) is not a forward interval"
                )));
            }
            if start < prev_end {
                return Err(CorpusError::InvalidLabels(format!(
                    "segment [{start}, {end}) overlaps or reorders the previous one"
                )));
            }
            prev_end = end;
        }
        Ok(LabelTrack { segments })
    }

    pub fn empty() -> LabelTrack {
        LabelTrack::default()
    }

    pub fn segments(&self) -> &[(f64, f64)] {
        &self.segments
    }

    /// Seconds of labelled speech.
    pub fn speech_duration(&self) -> f64 {
        self.segments.iter().map(|(s, e)| e - s).sum()
    }

    /// End of the last segment, or 0 for an empty track.
    pub fn end_time(&self) -> f64 {
        self.segments.last().map_or(0.0, |&(_, e)| e)
    }

    /// Translates every segment later by `offset` seconds (the direct-path
    /// delay when aligning labels to a reverberant signal).
    pub fn shifted(&self, offset: f64) -> Result<LabelTrack, CorpusError> {
        if !offset.is_finite() || offset < 0.0 {
            return Err(CorpusError::InvalidLabels(format!(
                "label shift must be a non-negative time, got {offset}"
            )));
        }
        LabelTrack::new(
            self.segments
                .iter()
                .map(|&(s, e)| (s + offset, e + offset))
                .collect(),
        )
    }

    /// Total overlap in seconds between `[start, end)` and the speech
    /// segments.
    pub fn overlap(&self, start: f64, end: f64) -> f64 {
        self.segments
            .iter()
            .map(|&(s, e)| (e.min(end) - s.max(start)).max(0.0))
            .sum()
    }

    pub fn from_text(text: &str) -> Result<LabelTrack, CorpusError> {
        let mut segments = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let parse = |field: Option<&str>| {
                field
                    .and_then(|f| f.parse::<f64>().ok())
                    .ok_or_else(|| {
                        CorpusError::InvalidLabels(format!(
                            "line {}: expected `start end`, got {line:?}",
                            idx + 1
                        ))
                    })
            };
            let start = parse(parts.next())?;
            let end = parse(parts.next())?;
            if parts.next().is_some() {
                return Err(CorpusError::InvalidLabels(format!(
                    "line {}: trailing fields in {line:?}",
                    idx + 1
                )));
            }
            segments.push((start, end));
        }
        LabelTrack::new(segments)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (s, e) in &self.segments {
            out.push_str(&format!("{s} {e}\n"));
        }
        out
    }

    pub fn load(path: &Path) -> Result<LabelTrack, CorpusError> {
        LabelTrack::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), CorpusError> {
        Ok(std::fs::write(path, self.to_text())?)
    }
}
