//! Planar helpers for turning trace points into masks.

use crate::error::{Error, Result};
use crate::num::Real;

/// Twice the signed area of triangle `o, a, b`; positive when `b` is to the
/// left of `o → a`.
pub fn cross<T: Real>(o: (T, T), a: (T, T), b: (T, T)) -> T {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn lex_cmp<T: Real>(a: &(T, T), b: &(T, T)) -> std::cmp::Ordering {
    a.0.partial_cmp(&b.0)
        .unwrap_or(std::cmp::Ordering::Equal)
        .then(a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal))
}

/// Convex hull by Andrew's monotone chain.
///
/// Vertices come out counter-clockwise in a y-up frame (clockwise on screen
/// where y grows downward), starting from the lexicographically smallest
/// point. Collinear boundary points are dropped. Inputs with fewer than
/// three distinct points, or all collinear, return their distinct extreme
/// points.
pub fn convex_hull<T: Real>(points: &[(T, T)]) -> Result<Vec<(T, T)>> {
    if points.is_empty() {
        return Err(Error::EmptyPoints);
    }
    let mut pts = points.to_vec();
    pts.sort_by(lex_cmp);
    pts.dedup();
    if pts.len() < 3 {
        return Ok(pts);
    }
    let mut lower: Vec<(T, T)> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= T::zero() {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(T, T)> = Vec::with_capacity(pts.len());
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= T::zero() {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() == 2 && lower[0] == lower[1] {
        lower.pop();
    }
    Ok(lower)
}

/// Row-major boolean grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    pub width: usize,
    pub height: usize,
    pub data: Vec<bool>,
}

/// Inclusive pixel bounds `(x0, y0, x1, y1)`.
pub type PixelBounds = (usize, usize, usize, usize);

impl BinaryMask {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![false; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut m = Self::new(width, height);
        for y in 0..height {
            for x in 0..width {
                m.data[y * width + x] = f(x, y);
            }
        }
        m
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.data[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Tight bounds of the set cells, if any.
    pub fn bounds(&self) -> Option<PixelBounds> {
        let mut b: Option<PixelBounds> = None;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    b = Some(match b {
                        None => (x, y, x, y),
                        Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x), y1.max(y)),
                    });
                }
            }
        }
        b
    }

    /// Intersection over union; 0 when both are empty or shapes differ.
    pub fn iou(&self, other: &Self) -> f64 {
        if self.width != other.width || self.height != other.height {
            return 0.0;
        }
        let (mut inter, mut union) = (0usize, 0usize);
        for (&a, &b) in self.data.iter().zip(&other.data) {
            inter += usize::from(a && b);
            union += usize::from(a || b);
        }
        if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        }
    }
}

fn cell_of<T: Real>(v: T, n: usize) -> Option<usize> {
    let k = (v * T::from_usize_lossy(n)).floor();
    if k < T::zero() || !k.is_finite() {
        return None;
    }
    k.to_usize().filter(|&k| k < n).or_else(|| {
        // exactly on the far edge belongs to the last cell
        (v == T::one()).then_some(n - 1)
    })
}

fn mark_point<T: Real>(mask: &mut BinaryMask, p: (T, T)) {
    if let (Some(x), Some(y)) = (cell_of(p.0, mask.width), cell_of(p.1, mask.height)) {
        mask.set(x, y, true);
    }
}

fn mark_segment<T: Real>(mask: &mut BinaryMask, a: (T, T), b: (T, T)) {
    let w = T::from_usize_lossy(mask.width);
    let h = T::from_usize_lossy(mask.height);
    let span = ((b.0 - a.0) * w).abs().max(((b.1 - a.1) * h).abs());
    let steps = (span * T::lit(2.0)).ceil().to_usize().unwrap_or(0).max(1);
    for k in 0..=steps {
        let s = T::from_usize_lossy(k) / T::from_usize_lossy(steps);
        mark_point(mask, (a.0 + (b.0 - a.0) * s, a.1 + (b.1 - a.1) * s));
    }
}

/// Rasterizes a polygon in normalized coordinates onto a `width × height`
/// grid: a cell is set when its center is inside (even-odd rule). Point and
/// segment polygons, and polygons too thin to cover any cell center, mark
/// the cells their outline passes through.
pub fn rasterize_polygon<T: Real>(poly: &[(T, T)], width: usize, height: usize) -> BinaryMask {
    let mut mask = BinaryMask::new(width, height);
    if poly.is_empty() || width == 0 || height == 0 {
        return mask;
    }
    if poly.len() >= 3 {
        let w = T::from_usize_lossy(width);
        let half = T::lit(0.5);
        let mut xs: Vec<T> = Vec::new();
        for row in 0..height {
            let cy = (T::from_usize_lossy(row) + half) / T::from_usize_lossy(height);
            xs.clear();
            for k in 0..poly.len() {
                let (a, b) = (poly[k], poly[(k + 1) % poly.len()]);
                if (a.1 <= cy && cy < b.1) || (b.1 <= cy && cy < a.1) {
                    xs.push(a.0 + (cy - a.1) * (b.0 - a.0) / (b.1 - a.1));
                }
            }
            xs.sort_by(|p, q| p.partial_cmp(q).unwrap_or(std::cmp::Ordering::Equal));
            for pair in xs.chunks_exact(2) {
                // cells whose center c = (col + 0.5)/w satisfies lo <= c < hi
                let first = (pair[0] * w - half).ceil().max(T::zero());
                let last = (pair[1] * w - half).ceil().min(w);
                let (Some(first), Some(last)) = (first.to_usize(), last.to_usize()) else {
                    continue;
                };
                for col in first..last {
                    mask.set(col, row, true);
                }
            }
        }
        if mask.count() > 0 {
            return mask;
        }
    }
    match poly.len() {
        1 => mark_point(&mut mask, poly[0]),
        2 => mark_segment(&mut mask, poly[0], poly[1]),
        n => {
            for k in 0..n {
                mark_segment(&mut mask, poly[k], poly[(k + 1) % n]);
            }
        }
    }
    mask
}
