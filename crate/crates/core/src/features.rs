//! Trace-conditioning features for controlled captioning.
//!
//! A trace is cut into fixed-duration pseudo-segments, each represented by
//! the box around its points (`[x0, y0, x1, y1, area]`). Boxes are grown by
//! an offset `delta`; `delta = 1.0` turns every box into the whole image so
//! only the sequence length (the trace duration) survives, while a small
//! offset such as 0.1 keeps the position signal. The order of boxes is
//! encoded with fixed sine/cosine vectors.
//!
//! Learned projections and normalization layers are not part of this module.

use crate::error::{Error, Result};
use crate::model::{MouseTrace, TracePoint};
use crate::num::Real;
use crate::sync::trace_bounds;

/// Median spoken word duration used as the pseudo-segment length, in seconds.
pub const DEFAULT_SEGMENT_DURATION: f64 = 0.4;
pub const DEFAULT_DELTA: f64 = 0.1;
pub const DEFAULT_SINUSOID_DIM: usize = 512;
/// Number of object proposals per image.
pub const DEFAULT_PROPOSALS: usize = 16;
pub const DEFAULT_APPEARANCE_DIM: usize = 2048;

/// Box in normalized coordinates together with its relative area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocationVector<T: Real> {
    pub x0: T,
    pub y0: T,
    pub x1: T,
    pub y1: T,
    pub area: T,
}

impl<T: Real> LocationVector<T> {
    /// Builds the vector with `area` computed from the corners.
    pub fn from_corners(x0: T, y0: T, x1: T, y1: T) -> Self {
        Self { x0, y0, x1, y1, area: (x1 - x0) * (y1 - y0) }
    }

    pub fn whole_image() -> Self {
        Self::from_corners(T::zero(), T::zero(), T::one(), T::one())
    }

    pub fn to_array(&self) -> [T; 5] {
        [self.x0, self.y0, self.x1, self.y1, self.area]
    }

    pub fn contains(&self, other: &Self) -> bool {
        self.x0 <= other.x0 && self.y0 <= other.y0 && self.x1 >= other.x1 && self.y1 >= other.y1
    }
}

/// Fixed-duration window of a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoSegment<T: Real> {
    pub t_start: T,
    pub t_end: T,
    pub points: Vec<TracePoint<T>>,
}

/// Appearance descriptor of one detected region plus its location.
#[derive(Debug, Clone, PartialEq)]
pub struct ProposalFeature<T: Real> {
    pub appearance: Vec<T>,
    pub location: LocationVector<T>,
}

/// Proposals for one image; every appearance vector has the same dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct ProposalBatch<T: Real> {
    proposals: Vec<ProposalFeature<T>>,
}

impl<T: Real> ProposalBatch<T> {
    pub fn new(proposals: Vec<ProposalFeature<T>>) -> Result<Self> {
        if let Some(first) = proposals.first() {
            let dim = first.appearance.len();
            if let Some(k) = proposals.iter().position(|p| p.appearance.len() != dim) {
                return Err(Error::ShapeMismatch(format!(
                    "proposal {k} has appearance dimension {}, expected {dim}",
                    proposals[k].appearance.len()
                )));
            }
        }
        Ok(Self { proposals })
    }

    pub fn appearance_dim(&self) -> Option<usize> {
        self.proposals.first().map(|p| p.appearance.len())
    }

    pub fn proposals(&self) -> &[ProposalFeature<T>] {
        &self.proposals
    }
}

/// Number of windows of `segment_duration` needed to cover `duration`.
/// A zero-length trace still gets one window.
pub fn window_count<T: Real>(duration: T, segment_duration: T) -> usize {
    let n = (duration / segment_duration).ceil();
    n.to_usize().unwrap_or(0).max(1)
}

/// Cuts `[T0, T1]` into consecutive windows of `segment_duration` (the last
/// one may be shorter). Windows are half-open `[start, end)` except the last,
/// which is closed; every point lands in exactly one window and empty
/// windows are kept. Strokes are merged onto one timeline first.
pub fn pseudo_segment<T: Real>(trace: &MouseTrace<T>, segment_duration: T) -> Result<Vec<PseudoSegment<T>>> {
    if !(segment_duration > T::zero()) || !segment_duration.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "segment duration must be positive, got {segment_duration}"
        )));
    }
    let (t_first, t_last) = trace_bounds(trace)?;
    let n = window_count(t_last - t_first, segment_duration);
    let start = |k: usize| (t_first + T::from_usize_lossy(k) * segment_duration).min(t_last);
    let mut windows: Vec<PseudoSegment<T>> = (0..n)
        .map(|k| PseudoSegment {
            t_start: start(k),
            t_end: if k + 1 == n { t_last } else { start(k + 1) },
            points: Vec::new(),
        })
        .collect();
    for p in trace.flattened_by_time() {
        // estimate then settle on the last window whose start is <= t, using
        // the same boundary values stored in the windows
        let mut k = ((p.t - t_first) / segment_duration)
            .floor()
            .to_usize()
            .unwrap_or(0)
            .min(n - 1);
        while k > 0 && p.t < windows[k].t_start {
            k -= 1;
        }
        while k + 1 < n && p.t >= windows[k + 1].t_start {
            k += 1;
        }
        windows[k].points.push(p);
    }
    Ok(windows)
}

/// Smallest axis-aligned box around the points, clamped to `[0, 1]`.
pub fn encapsulating_box<T: Real>(points: &[TracePoint<T>]) -> Result<LocationVector<T>> {
    let first = points.first().ok_or(Error::EmptyPoints)?;
    let (mut x0, mut y0, mut x1, mut y1) = (first.x, first.y, first.x, first.y);
    for p in &points[1..] {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    let (lo, hi) = (T::zero(), T::one());
    Ok(LocationVector::from_corners(
        x0.clamp_to(lo, hi),
        y0.clamp_to(lo, hi),
        x1.clamp_to(lo, hi),
        y1.clamp_to(lo, hi),
    ))
}

/// Grows the box by `delta` on every side and clamps to the image.
pub fn expand_box<T: Real>(b: &LocationVector<T>, delta: T) -> LocationVector<T> {
    let (lo, hi) = (T::zero(), T::one());
    LocationVector::from_corners(
        (b.x0 - delta).clamp_to(lo, hi),
        (b.y0 - delta).clamp_to(lo, hi),
        (b.x1 + delta).clamp_to(lo, hi),
        (b.y1 + delta).clamp_to(lo, hi),
    )
}

/// One expanded box per pseudo-segment. A window without points reuses the
/// box of the most recent non-empty window (the first window always holds
/// the earliest point).
pub fn trace_feature_sequence<T: Real>(
    trace: &MouseTrace<T>,
    segment_duration: T,
    delta: T,
) -> Result<Vec<LocationVector<T>>> {
    if !(delta >= T::zero()) {
        return Err(Error::InvalidArgument(format!("delta must be >= 0, got {delta}")));
    }
    let windows = pseudo_segment(trace, segment_duration)?;
    let mut last: Option<LocationVector<T>> = None;
    let mut out = Vec::with_capacity(windows.len());
    for w in &windows {
        let b = match encapsulating_box(&w.points) {
            Ok(b) => b,
            Err(_) => match last {
                Some(b) => b,
                None => {
                    let first = trace.flattened_by_time()[0];
                    encapsulating_box(&[first])?
                }
            },
        };
        last = Some(b);
        out.push(expand_box(&b, delta));
    }
    Ok(out)
}

/// Fixed positional encoding: entry `2k` is `sin(pos / 10000^(2k/dim))`,
/// entry `2k+1` the matching cosine.
pub fn sinusoid_encoding<T: Real>(position: usize, dim: usize) -> Result<Vec<T>> {
    if dim == 0 || !dim.is_multiple_of(2) {
        return Err(Error::OddDimension(dim));
    }
    let pos = position as f64;
    let mut out = Vec::with_capacity(dim);
    for k in 0..dim / 2 {
        let angle = pos / 10000f64.powf((2 * k) as f64 / dim as f64);
        out.push(T::lit(angle.sin()));
        out.push(T::lit(angle.cos()));
    }
    Ok(out)
}

/// Normalizes a pixel box `[x0, y0, x1, y1]` by the image size, clamping to
/// the image first.
pub fn proposal_location<T: Real>(pixel_box: [T; 4], image_w: T, image_h: T) -> Result<LocationVector<T>> {
    if !(image_w > T::zero()) || !(image_h > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "image dimensions must be positive, got {image_w}x{image_h}"
        )));
    }
    let [x0, y0, x1, y1] = pixel_box;
    if !(x0 <= x1) || !(y0 <= y1) {
        return Err(Error::InvalidArgument("pixel box corners out of order".into()));
    }
    let z = T::zero();
    Ok(LocationVector::from_corners(
        x0.clamp_to(z, image_w) / image_w,
        y0.clamp_to(z, image_h) / image_h,
        x1.clamp_to(z, image_w) / image_w,
        y1.clamp_to(z, image_h) / image_h,
    ))
}
