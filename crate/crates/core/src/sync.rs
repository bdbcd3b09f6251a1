//! Timestamp transfer from automatic to manual words, per-word trace
//! segments, and the transcription quality gate.

use crate::align::{align, alignment_cost, Matching};
use crate::error::{Error, Result};
use crate::model::{
    AutomaticTranscript, LocalizedNarrative, ManualTranscript, MouseTrace, QcFailure, QcVerdict,
    WordGrounding,
};
use crate::num::Real;

/// Default normalized-distance threshold for [`quality_gate`].
pub const DEFAULT_QC_THRESHOLD: f64 = 0.30;

/// First and last timestamps over every point of the trace.
pub fn trace_bounds<T: Real>(trace: &MouseTrace<T>) -> Result<(T, T)> {
    let mut pts = trace.points();
    let first = pts.next().ok_or(Error::EmptyTrace)?;
    Ok(pts.fold((first.t, first.t), |(lo, hi), p| (lo.min(p.t), hi.max(p.t))))
}

/// Transfers automatic word timestamps onto manual words.
///
/// A manual word with matches spans `[min t0, max t1]` of its matched words.
/// An unmatched word spans from the latest end of any matched word before it
/// (or `t_first`) to the earliest start of any matched word after it (or
/// `t_last`). Afterwards the end is raised to the start if it fell below it,
/// which only happens when automatic intervals overlap.
pub fn transfer_timestamps<T: Real>(
    a: &AutomaticTranscript<T>,
    m: &ManualTranscript,
    mu: &Matching,
    t_first: T,
    t_last: T,
) -> Result<Vec<(T, T)>> {
    mu.validate(a.len(), m.len())?;
    if !(t_first <= t_last) {
        return Err(Error::InvalidArgument(format!(
            "trace bounds out of order: [{t_first}, {t_last}]"
        )));
    }
    let n = m.len();
    let sets = mu.matches_per_manual(n);
    let span = |j: usize| -> Option<(T, T)> {
        let words = sets[j].iter().map(|&i| &a.words[i]);
        words.fold(None, |acc, w| match acc {
            None => Some((w.t0, w.t1)),
            Some((lo, hi)) => Some((lo.min(w.t0), hi.max(w.t1))),
        })
    };
    let spans: Vec<Option<(T, T)>> = (0..n).map(span).collect();

    // prior_end[j] = max t1 over matches of words k < j
    let mut prior_end = vec![None; n];
    let mut acc: Option<T> = None;
    for j in 0..n {
        prior_end[j] = acc;
        if let Some((_, hi)) = spans[j] {
            acc = Some(acc.map_or(hi, |v: T| v.max(hi)));
        }
    }
    // later_start[j] = min t0 over matches of words k > j
    let mut later_start = vec![None; n];
    let mut acc: Option<T> = None;
    for j in (0..n).rev() {
        later_start[j] = acc;
        if let Some((lo, _)) = spans[j] {
            acc = Some(acc.map_or(lo, |v: T| v.min(lo)));
        }
    }

    Ok((0..n)
        .map(|j| {
            let (t0, t1) = match spans[j] {
                Some(s) => s,
                None => (
                    prior_end[j].unwrap_or(t_first),
                    later_start[j].unwrap_or(t_last),
                ),
            };
            (t0, t1.max(t0))
        })
        .collect())
}

/// Sub-trace of every point with `t0 <= t <= t1` (inclusive on both ends),
/// one per interval, in original order with stroke boundaries kept. Strokes
/// that contribute no points are dropped.
pub fn extract_segments<T: Real>(trace: &MouseTrace<T>, intervals: &[(T, T)]) -> Vec<MouseTrace<T>> {
    intervals
        .iter()
        .map(|&(t0, t1)| MouseTrace {
            strokes: trace
                .strokes
                .iter()
                .map(|s| s.iter().filter(|p| p.t >= t0 && p.t <= t1).copied().collect::<Vec<_>>())
                .filter(|s| !s.is_empty())
                .collect(),
        })
        .collect()
}

/// Total character count of the normalized automatic words.
fn automatic_char_count<T: Real>(a: &AutomaticTranscript<T>) -> usize {
    a.normalized_tokens().iter().map(|w| w.chars().count()).sum()
}

/// Scores agreement between the two transcriptions.
///
/// The optimal matching cost is divided by the number of characters in the
/// automatic transcript and compared against `threshold`. An empty manual or
/// empty automatic transcript fails unconditionally with a reason.
pub fn quality_gate<T: Real>(
    a: &AutomaticTranscript<T>,
    m: &ManualTranscript,
    threshold: T,
) -> Result<QcVerdict<T>> {
    if !(threshold >= T::zero()) {
        return Err(Error::InvalidArgument(format!("threshold must be >= 0, got {threshold}")));
    }
    let forced = |reason| QcVerdict {
        raw_distance: 0,
        normalized_distance: T::zero(),
        threshold,
        pass: false,
        reason: Some(reason),
    };
    if m.is_empty() {
        return Ok(forced(QcFailure::EmptyManualTranscript));
    }
    if a.is_empty() {
        return Ok(forced(QcFailure::EmptyAutomaticTranscript));
    }
    let raw = alignment_cost(a, m)?;
    let chars = automatic_char_count(a);
    let normalized = if chars > 0 {
        T::lit(raw as f64) / T::from_usize_lossy(chars)
    } else if raw == 0 {
        T::zero()
    } else {
        T::infinity()
    };
    Ok(QcVerdict {
        raw_distance: raw,
        normalized_distance: normalized,
        threshold,
        pass: normalized <= threshold,
        reason: None,
    })
}

/// Identifiers attached to a built narrative.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NarrativeMeta {
    pub dataset_id: String,
    pub image_id: String,
    pub annotator_id: String,
}

/// Full pipeline: align, transfer timestamps, clamp each interval into the
/// trace bounds, cut trace segments and attach the QC verdict. A failing
/// verdict does not prevent the narrative from being returned.
pub fn build_narrative<T: Real>(
    a: &AutomaticTranscript<T>,
    m: &ManualTranscript,
    trace: &MouseTrace<T>,
    meta: NarrativeMeta,
    threshold: T,
) -> Result<LocalizedNarrative<T>> {
    let (t_first, t_last) = trace_bounds(trace)?;
    let qc = quality_gate(a, m, threshold)?;
    let intervals: Vec<(T, T)> = if m.is_empty() {
        Vec::new()
    } else {
        let mu = align(a, m)?;
        transfer_timestamps(a, m, &mu, t_first, t_last)?
            .into_iter()
            .map(|(t0, t1)| {
                let t0 = t0.clamp_to(t_first, t_last);
                (t0, t1.clamp_to(t_first, t_last).max(t0))
            })
            .collect()
    };
    let segments = extract_segments(trace, &intervals);
    let timed_caption = m
        .words
        .iter()
        .zip(intervals)
        .zip(segments)
        .map(|((word, (t0, t1)), segment)| WordGrounding {
            word: word.clone(),
            t0_bar: t0,
            t1_bar: t1,
            segment,
        })
        .collect();
    Ok(LocalizedNarrative {
        dataset_id: meta.dataset_id,
        image_id: meta.image_id,
        annotator_id: meta.annotator_id,
        caption: m.raw_caption.clone(),
        timed_caption,
        traces: trace.clone(),
        qc: Some(qc),
    })
}
