//! Newline-delimited corpus records.
//!
//! One narrative per line:
//!
//! ```text
//! {"dataset_id":…,"image_id":…,"annotator_id":…,"caption":…,
//!  "timed_caption":[{"utterance":…,"start_time":…,"end_time":…},…],
//!  "traces":[[{"x":…,"y":…,"t":…},…],…],
//!  "qc":{"raw_distance":…,"normalized_distance":…,"threshold":…,"pass":…}}
//! ```
//!
//! Keys are written in this fixed order and every real number with six
//! decimals, so re-serializing a parsed record is byte-identical. Per-word
//! trace segments are not stored; they are recomputed from `traces` on read.

use std::fmt::Write as _;
use std::io::BufRead;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::{
    AutomaticTranscript, BoundingBox, LocalizedNarrative, MouseTrace, QcFailure, QcVerdict,
    TimedWord, TracePoint, WordGrounding,
};
use crate::num::Real;
use crate::sync::extract_segments;

/// Absolute slack used when validating records that went through 6-decimal text.
pub const ROUND_TRIP_TOLERANCE: f64 = 1e-6;

pub(crate) fn push_num<T: Real>(out: &mut String, v: T) {
    let s = format!("{:.6}", v.as_f64());
    if s == "-0.000000" {
        out.push_str("0.000000");
    } else {
        out.push_str(&s);
    }
}

pub(crate) fn push_str(out: &mut String, s: &str) {
    // serde_json escaping of a &str cannot fail
    out.push_str(&serde_json::to_string(s).expect("string serialization"));
}

/// Formats a real with the corpus precision.
pub fn format_num<T: Real>(v: T) -> String {
    let mut s = String::new();
    push_num(&mut s, v);
    s
}

#[derive(Deserialize)]
struct RawWord {
    utterance: String,
    start_time: f64,
    end_time: f64,
}

#[derive(Deserialize)]
struct RawPoint {
    x: f64,
    y: f64,
    t: f64,
}

#[derive(Deserialize)]
struct RawQc {
    raw_distance: u64,
    normalized_distance: f64,
    threshold: f64,
    pass: bool,
    #[serde(default)]
    reason: Option<String>,
}

#[derive(Deserialize)]
struct RawRecord {
    dataset_id: String,
    image_id: String,
    annotator_id: String,
    caption: String,
    timed_caption: Vec<RawWord>,
    traces: Vec<Vec<RawPoint>>,
    #[serde(default)]
    qc: Option<RawQc>,
}

fn trace_from_raw<T: Real>(raw: Vec<Vec<RawPoint>>) -> Result<MouseTrace<T>> {
    MouseTrace::new(
        raw.into_iter()
            .map(|s| {
                s.into_iter()
                    .map(|p| TracePoint::new(T::lit(p.x), T::lit(p.y), T::lit(p.t)))
                    .collect()
            })
            .collect(),
    )
}

fn narrative_from_raw<T: Real>(raw: RawRecord) -> Result<LocalizedNarrative<T>> {
    let traces = trace_from_raw::<T>(raw.traces)?;
    let intervals: Vec<(T, T)> = raw
        .timed_caption
        .iter()
        .map(|w| (T::lit(w.start_time), T::lit(w.end_time)))
        .collect();
    let segments = extract_segments(&traces, &intervals);
    let timed_caption = raw
        .timed_caption
        .into_iter()
        .zip(segments)
        .map(|(w, segment)| WordGrounding {
            word: w.utterance,
            t0_bar: T::lit(w.start_time),
            t1_bar: T::lit(w.end_time),
            segment,
        })
        .collect();
    let qc = match raw.qc {
        None => None,
        Some(q) => {
            let reason = match q.reason.as_deref() {
                None => None,
                Some(r) => Some(QcFailure::parse(r).ok_or_else(|| {
                    Error::InvalidNarrative(format!("unknown qc reason `{r}`"))
                })?),
            };
            Some(QcVerdict {
                raw_distance: q.raw_distance,
                normalized_distance: T::lit(q.normalized_distance),
                threshold: T::lit(q.threshold),
                pass: q.pass,
                reason,
            })
        }
    };
    let n = LocalizedNarrative {
        dataset_id: raw.dataset_id,
        image_id: raw.image_id,
        annotator_id: raw.annotator_id,
        caption: raw.caption,
        timed_caption,
        traces,
        qc,
    };
    n.validate(T::lit(ROUND_TRIP_TOLERANCE))?;
    Ok(n)
}

/// Parses a single corpus line. `line_no` is 1-based and only used for errors.
pub fn parse_narrative_line<T: Real>(line: &str, line_no: usize) -> Result<LocalizedNarrative<T>> {
    let raw: RawRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
        line: line_no,
        reason: e.to_string(),
    })?;
    narrative_from_raw(raw).map_err(|e| Error::Parse {
        line: line_no,
        reason: e.to_string(),
    })
}

/// Streaming reader over a corpus. Blank lines are skipped; each item is a
/// narrative or the error for that line.
pub struct NarrativeReader<R, T> {
    inner: R,
    line_no: usize,
    buf: String,
    _scalar: std::marker::PhantomData<T>,
}

impl<R: BufRead, T: Real> NarrativeReader<R, T> {
    pub fn new(inner: R) -> Self {
        Self {
            inner,
            line_no: 0,
            buf: String::new(),
            _scalar: std::marker::PhantomData,
        }
    }
}

impl<R: BufRead, T: Real> Iterator for NarrativeReader<R, T> {
    type Item = Result<LocalizedNarrative<T>>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            self.line_no += 1;
            match self.inner.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {
                    let line = self.buf.trim();
                    if line.is_empty() {
                        continue;
                    }
                    return Some(parse_narrative_line(line, self.line_no));
                }
                Err(e) => {
                    return Some(Err(Error::Parse {
                        line: self.line_no,
                        reason: e.to_string(),
                    }))
                }
            }
        }
    }
}

/// Result of a lenient corpus read.
#[derive(Debug, Clone)]
pub struct ParsedCorpus<T: Real> {
    pub narratives: Vec<LocalizedNarrative<T>>,
    /// Per-line failures (always `Error::Parse`), in input order.
    pub errors: Vec<Error>,
}

/// Reads a whole corpus. In strict mode the first bad line aborts the read;
/// otherwise bad lines are collected in `errors` and the rest is kept.
pub fn parse_narrative_jsonl<T: Real, R: BufRead>(reader: R, strict: bool) -> Result<ParsedCorpus<T>> {
    let mut out = ParsedCorpus { narratives: Vec::new(), errors: Vec::new() };
    for item in NarrativeReader::<R, T>::new(reader) {
        match item {
            Ok(n) => out.narratives.push(n),
            Err(e) if strict => return Err(e),
            Err(e) => out.errors.push(e),
        }
    }
    Ok(out)
}

/// Canonical one-line record, without the trailing newline.
pub fn serialize_narrative<T: Real>(n: &LocalizedNarrative<T>) -> Result<String> {
    n.validate(T::lit(ROUND_TRIP_TOLERANCE))?;
    let mut out = String::with_capacity(256 + 48 * n.traces.point_count());
    out.push_str("{\"dataset_id\":");
    push_str(&mut out, &n.dataset_id);
    out.push_str(",\"image_id\":");
    push_str(&mut out, &n.image_id);
    out.push_str(",\"annotator_id\":");
    push_str(&mut out, &n.annotator_id);
    out.push_str(",\"caption\":");
    push_str(&mut out, &n.caption);
    out.push_str(",\"timed_caption\":[");
    for (k, w) in n.timed_caption.iter().enumerate() {
        if k > 0 {
            out.push(',');
        }
        out.push_str("{\"utterance\":");
        push_str(&mut out, &w.word);
        out.push_str(",\"start_time\":");
        push_num(&mut out, w.t0_bar);
        out.push_str(",\"end_time\":");
        push_num(&mut out, w.t1_bar);
        out.push('}');
    }
    out.push_str("],\"traces\":");
    push_trace(&mut out, &n.traces);
    if let Some(qc) = &n.qc {
        let _ = write!(out, ",\"qc\":{{\"raw_distance\":{}", qc.raw_distance);
        out.push_str(",\"normalized_distance\":");
        push_num(&mut out, qc.normalized_distance);
        out.push_str(",\"threshold\":");
        push_num(&mut out, qc.threshold);
        out.push_str(if qc.pass { ",\"pass\":true" } else { ",\"pass\":false" });
        if let Some(r) = qc.reason {
            out.push_str(",\"reason\":");
            push_str(&mut out, r.as_str());
        }
        out.push('}');
    }
    out.push('}');
    Ok(out)
}

pub(crate) fn push_trace<T: Real>(out: &mut String, trace: &MouseTrace<T>) {
    out.push('[');
    for (s, stroke) in trace.strokes.iter().enumerate() {
        if s > 0 {
            out.push(',');
        }
        out.push('[');
        for (k, p) in stroke.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            out.push_str("{\"x\":");
            push_num(out, p.x);
            out.push_str(",\"y\":");
            push_num(out, p.y);
            out.push_str(",\"t\":");
            push_num(out, p.t);
            out.push('}');
        }
        out.push(']');
    }
    out.push(']');
}

/// Serializes a trace as nested stroke arrays of `{x,y,t}`.
pub fn serialize_trace<T: Real>(trace: &MouseTrace<T>) -> String {
    let mut out = String::new();
    push_trace(&mut out, trace);
    out
}

/// Parses a JSON array of strokes of `{x,y,t}` points.
pub fn parse_trace_json<T: Real>(json: &str) -> Result<MouseTrace<T>> {
    let raw: Vec<Vec<RawPoint>> =
        serde_json::from_str(json).map_err(|e| Error::InvalidTrace(e.to_string()))?;
    trace_from_raw(raw)
}

/// Parses a JSON array of `{utterance,start_time,end_time}` words.
pub fn parse_timed_words_json<T: Real>(json: &str) -> Result<AutomaticTranscript<T>> {
    let raw: Vec<RawWord> =
        serde_json::from_str(json).map_err(|e| Error::InvalidWord(e.to_string()))?;
    let words = raw
        .into_iter()
        .map(|w| TimedWord::new(w.utterance, T::lit(w.start_time), T::lit(w.end_time)))
        .collect::<Result<Vec<_>>>()?;
    AutomaticTranscript::new(words)
}

/// Box annotation keyed by image.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBox<T: Real> {
    pub image_id: String,
    pub bbox: BoundingBox<T>,
}

#[derive(Deserialize)]
struct RawBox {
    image_id: String,
    class_name: String,
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
}

/// Reads a box file: one `{image_id,class_name,x0,y0,x1,y1}` record per line.
pub fn parse_boxes_jsonl<T: Real, R: BufRead>(reader: R) -> Result<Vec<ImageBox<T>>> {
    let mut out = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |reason: String| Error::Parse { line: k + 1, reason };
        let raw: RawBox = serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
        let bbox = BoundingBox::new(
            T::lit(raw.x0),
            T::lit(raw.y0),
            T::lit(raw.x1),
            T::lit(raw.y1),
            Some(raw.class_name.to_lowercase()),
        )
        .map_err(|e| parse_err(e.to_string()))?;
        out.push(ImageBox { image_id: raw.image_id, bbox });
    }
    Ok(out)
}
