//! Domain types shared across the toolkit.
//!
//! All types are plain values: once constructed through their checked
//! constructors they are immutable in practice and `Send + Sync`.

use crate::error::{Error, Result};
use crate::num::Real;

fn is_boundary_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(
            c,
            '\u{2018}'..='\u{201F}' | '\u{2026}' | '\u{2013}' | '\u{2014}' | '\u{00AB}' | '\u{00BB}' | '\u{00BF}' | '\u{00A1}'
        )
}

/// Lowercases a single word and strips its boundary punctuation.
pub fn normalize_token(word: &str) -> String {
    word.trim_matches(is_boundary_punct).to_lowercase()
}

/// Lowercases, splits on whitespace, strips leading/trailing punctuation
/// from each token and drops tokens that become empty.
pub fn tokenize(raw: &str) -> Vec<String> {
    raw.split_whitespace()
        .map(normalize_token)
        .filter(|t| !t.is_empty())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimedWord<T: Real> {
    pub text: String,
    pub t0: T,
    pub t1: T,
}

impl<T: Real> TimedWord<T> {
    pub fn new(text: impl Into<String>, t0: T, t1: T) -> Result<Self> {
        let text = text.into();
        if text.is_empty() {
            return Err(Error::InvalidWord("empty text".into()));
        }
        if text.chars().any(char::is_whitespace) {
            return Err(Error::InvalidWord(format!("`{text}` contains whitespace")));
        }
        if !(t0 >= T::zero()) || !(t1 >= t0) {
            return Err(Error::InvalidWord(format!(
                "`{text}` has invalid interval [{t0}, {t1}]"
            )));
        }
        Ok(Self { text, t0, t1 })
    }
}

/// Timestamped word stream from a speech recognizer (or any proxy for one).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AutomaticTranscript<T: Real> {
    pub words: Vec<TimedWord<T>>,
}

impl<T: Real> AutomaticTranscript<T> {
    /// Start times must be non-decreasing; intervals may overlap.
    pub fn new(words: Vec<TimedWord<T>>) -> Result<Self> {
        if let Some(w) = words.windows(2).find(|w| w[1].t0 < w[0].t0) {
            return Err(Error::InvalidWord(format!(
                "start time of `{}` ({}) precedes previous word `{}` ({})",
                w[1].text, w[1].t0, w[0].text, w[0].t0
            )));
        }
        Ok(Self { words })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Words normalized the same way manual tokens are.
    pub fn normalized_tokens(&self) -> Vec<String> {
        self.words.iter().map(|w| normalize_token(&w.text)).collect()
    }
}

/// Accurate typed caption; `words` is always `tokenize(raw_caption)`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ManualTranscript {
    pub raw_caption: String,
    pub words: Vec<String>,
}

impl ManualTranscript {
    pub fn from_caption(raw: impl Into<String>) -> Self {
        let raw_caption = raw.into();
        let words = tokenize(&raw_caption);
        Self { raw_caption, words }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Pointer sample in normalized image coordinates. Coordinates may overshoot
/// `[0, 1]` when the pointer leaves the image.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TracePoint<T: Real> {
    pub x: T,
    pub y: T,
    pub t: T,
}

impl<T: Real> TracePoint<T> {
    pub fn new(x: T, y: T, t: T) -> Self {
        Self { x, y, t }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MouseTrace<T: Real> {
    pub strokes: Vec<Vec<TracePoint<T>>>,
}

impl<T: Real> MouseTrace<T> {
    /// Checks `t >= 0` everywhere and strictly increasing time within each
    /// stroke. An empty trace is a valid value; sessions reject it separately.
    pub fn new(strokes: Vec<Vec<TracePoint<T>>>) -> Result<Self> {
        for (s, stroke) in strokes.iter().enumerate() {
            for (k, p) in stroke.iter().enumerate() {
                if !(p.t >= T::zero()) || !p.x.is_finite() || !p.y.is_finite() {
                    return Err(Error::InvalidTrace(format!(
                        "stroke {s} point {k} has invalid value ({}, {}, {})",
                        p.x, p.y, p.t
                    )));
                }
                if k > 0 && !(p.t > stroke[k - 1].t) {
                    return Err(Error::InvalidTrace(format!(
                        "stroke {s} time not strictly increasing at point {k}"
                    )));
                }
            }
        }
        Ok(Self { strokes })
    }

    pub fn single_stroke(points: Vec<TracePoint<T>>) -> Result<Self> {
        Self::new(vec![points])
    }

    pub fn points(&self) -> impl Iterator<Item = &TracePoint<T>> + '_ {
        self.strokes.iter().flatten()
    }

    pub fn point_count(&self) -> usize {
        self.strokes.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.point_count() == 0
    }

    /// All points on one timeline, ordered by time (stable across strokes).
    pub fn flattened_by_time(&self) -> Vec<TracePoint<T>> {
        let mut pts: Vec<_> = self.points().copied().collect();
        pts.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap_or(std::cmp::Ordering::Equal));
        pts
    }

    /// Drops empty strokes.
    pub fn compact(mut self) -> Self {
        self.strokes.retain(|s| !s.is_empty());
        self
    }
}

/// One manual word with its transferred interval and the trace portion it spans.
#[derive(Debug, Clone, PartialEq)]
pub struct WordGrounding<T: Real> {
    pub word: String,
    pub t0_bar: T,
    pub t1_bar: T,
    /// Stroke boundaries of the source trace are preserved.
    pub segment: MouseTrace<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QcFailure {
    /// Nothing in the automatic transcript corroborates the caption.
    EmptyAutomaticTranscript,
    EmptyManualTranscript,
}

impl QcFailure {
    pub fn as_str(self) -> &'static str {
        match self {
            QcFailure::EmptyAutomaticTranscript => "empty_automatic_transcript",
            QcFailure::EmptyManualTranscript => "empty_manual_transcript",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "empty_automatic_transcript" => Some(QcFailure::EmptyAutomaticTranscript),
            "empty_manual_transcript" => Some(QcFailure::EmptyManualTranscript),
            _ => None,
        }
    }
}

/// Outcome of the transcription quality gate.
///
/// When `reason` is `None`, `pass == (normalized_distance <= threshold)`.
/// A forced failure carries its reason.
#[derive(Debug, Clone, PartialEq)]
pub struct QcVerdict<T: Real> {
    pub raw_distance: u64,
    pub normalized_distance: T,
    pub threshold: T,
    pub pass: bool,
    pub reason: Option<QcFailure>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalizedNarrative<T: Real> {
    pub dataset_id: String,
    pub image_id: String,
    pub annotator_id: String,
    pub caption: String,
    pub timed_caption: Vec<WordGrounding<T>>,
    pub traces: MouseTrace<T>,
    pub qc: Option<QcVerdict<T>>,
}

impl<T: Real> LocalizedNarrative<T> {
    /// Checks the record-level invariants with an absolute slack `tol` on the
    /// interval bounds.
    pub fn validate(&self, tol: T) -> Result<()> {
        let tokens = tokenize(&self.caption);
        let words: Vec<&str> = self.timed_caption.iter().map(|w| w.word.as_str()).collect();
        if tokens != words {
            return Err(Error::InvalidNarrative(
                "timed_caption words differ from the tokenized caption".into(),
            ));
        }
        MouseTrace::new(self.traces.strokes.clone())?;
        let bounds = crate::sync::trace_bounds(&self.traces).ok();
        for (j, w) in self.timed_caption.iter().enumerate() {
            if !(w.t0_bar <= w.t1_bar) {
                return Err(Error::InvalidNarrative(format!(
                    "word {j} `{}` has inverted interval [{}, {}]",
                    w.word, w.t0_bar, w.t1_bar
                )));
            }
            if let Some((lo, hi)) = bounds {
                if w.t0_bar < lo - tol || w.t1_bar > hi + tol {
                    return Err(Error::InvalidNarrative(format!(
                        "word {j} `{}` interval [{}, {}] outside trace bounds [{lo}, {hi}]",
                        w.word, w.t0_bar, w.t1_bar
                    )));
                }
            }
            if let Some(p) = w
                .segment
                .points()
                .find(|p| p.t < w.t0_bar - tol || p.t > w.t1_bar + tol)
            {
                return Err(Error::InvalidNarrative(format!(
                    "word {j} `{}` segment point at t={} outside its interval",
                    w.word, p.t
                )));
            }
        }
        if let Some(qc) = &self.qc {
            if qc.reason.is_none() && qc.pass != (qc.normalized_distance <= qc.threshold) {
                return Err(Error::InvalidNarrative(
                    "qc verdict disagrees with its threshold".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn words(&self) -> impl Iterator<Item = &str> + '_ {
        self.timed_caption.iter().map(|w| w.word.as_str())
    }
}

/// Axis-aligned box in normalized image coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundingBox<T: Real> {
    pub x0: T,
    pub y0: T,
    pub x1: T,
    pub y1: T,
    pub class_name: Option<String>,
}

impl<T: Real> BoundingBox<T> {
    pub fn new(x0: T, y0: T, x1: T, y1: T, class_name: Option<String>) -> Result<Self> {
        if !(x0 <= x1) || !(y0 <= y1) {
            return Err(Error::InvalidArgument(format!(
                "box corners out of order: ({x0}, {y0}, {x1}, {y1})"
            )));
        }
        Ok(Self { x0, y0, x1, y1, class_name })
    }

    pub fn center(&self) -> (T, T) {
        let two = T::lit(2.0);
        ((self.x0 + self.x1) / two, (self.y0 + self.y1) / two)
    }
}
