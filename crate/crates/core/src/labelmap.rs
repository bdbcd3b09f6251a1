//! Semantic label maps from labelled trace segments.
//!
//! Each class mention's trace segment is turned into its convex hull, the
//! library mask of that class that best overlaps the hull is retrieved, and
//! masks are pasted in mention order. Object masks overwrite anything;
//! background masks only write cells that are unlabelled or hold another
//! background class.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::Deserialize;

use crate::analysis::match_class_mentions;
use crate::error::{Error, Result};
use crate::geometry::{convex_hull, rasterize_polygon, BinaryMask, PixelBounds};
use crate::model::LocalizedNarrative;
use crate::num::Real;

pub type ClassId = u16;

/// Label of a cell nobody wrote.
pub const UNLABELLED: ClassId = ClassId::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassKind {
    Object,
    Background,
}

impl ClassKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ClassKind::Object => "object",
            ClassKind::Background => "background",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "object" | "thing" => Some(ClassKind::Object),
            "background" | "stuff" => Some(ClassKind::Background),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    pub width: usize,
    pub height: usize,
    /// Row-major class ids, [`UNLABELLED`] where empty.
    pub labels: Vec<ClassId>,
    /// `classes[id]` names the class with that id, in order of first use.
    pub classes: Vec<(String, ClassKind)>,
}

impl LabelMap {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, labels: vec![UNLABELLED; width * height], classes: Vec::new() }
    }

    pub fn get(&self, x: usize, y: usize) -> ClassId {
        self.labels[y * self.width + x]
    }

    pub fn class_id(&self, name: &str) -> Option<ClassId> {
        self.classes.iter().position(|(n, _)| n == name).map(|k| k as ClassId)
    }

    pub fn class_name(&self, id: ClassId) -> Option<&str> {
        self.classes.get(id as usize).map(|(n, _)| n.as_str())
    }

    pub fn labelled_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l != UNLABELLED).count()
    }

    fn kind_of(&self, id: ClassId) -> Option<ClassKind> {
        self.classes.get(id as usize).map(|&(_, k)| k)
    }

    fn register(&mut self, name: &str, kind: ClassKind) -> Result<ClassId> {
        if let Some(id) = self.class_id(name) {
            if self.classes[id as usize].1 != kind {
                return Err(Error::InvalidArgument(format!(
                    "class `{name}` used both as object and background"
                )));
            }
            return Ok(id);
        }
        if self.classes.len() >= UNLABELLED as usize {
            return Err(Error::InvalidArgument("too many classes for one label map".into()));
        }
        self.classes.push((name.to_string(), kind));
        Ok((self.classes.len() - 1) as ClassId)
    }

    /// Binary PGM (`P5`) of class ids; 8-bit with unlabelled cells at 255
    /// when fewer than 255 classes are used, 16-bit big-endian otherwise.
    pub fn write_pgm<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let wide = self.classes.len() >= 255;
        let maxval = if wide { 65535 } else { 255 };
        write!(out, "P5\n{} {}\n{}\n", self.width, self.height, maxval)?;
        if wide {
            let bytes: Vec<u8> = self.labels.iter().flat_map(|l| l.to_be_bytes()).collect();
            out.write_all(&bytes)
        } else {
            let bytes: Vec<u8> =
                self.labels.iter().map(|&l| if l == UNLABELLED { 255 } else { l as u8 }).collect();
            out.write_all(&bytes)
        }
    }

    /// Tab-separated `id  class  kind` lines, unlabelled value last.
    pub fn legend(&self) -> String {
        let mut s = String::new();
        for (id, (name, kind)) in self.classes.iter().enumerate() {
            s.push_str(&format!("{id}\t{name}\t{}\n", kind.as_str()));
        }
        let unl = if self.classes.len() >= 255 { UNLABELLED as u32 } else { 255 };
        s.push_str(&format!("{unl}\tunlabelled\t-\n"));
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassMasks {
    pub kind: ClassKind,
    pub masks: Vec<BinaryMask>,
}

/// Example instance masks per class, each at its own resolution.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MaskLibrary {
    classes: BTreeMap<String, ClassMasks>,
}

impl MaskLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, class: &str, kind: ClassKind, mask: BinaryMask) -> Result<()> {
        let entry = self
            .classes
            .entry(class.to_lowercase())
            .or_insert_with(|| ClassMasks { kind, masks: Vec::new() });
        if entry.kind != kind {
            return Err(Error::InvalidArgument(format!("class `{class}` has conflicting kinds")));
        }
        entry.masks.push(mask);
        Ok(())
    }

    pub fn get(&self, class: &str) -> Option<&ClassMasks> {
        self.classes.get(class)
    }

    pub fn class_names(&self) -> impl Iterator<Item = &str> + '_ {
        self.classes.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }
}

#[derive(Deserialize)]
struct RawMask {
    class: String,
    kind: String,
    width: usize,
    height: usize,
    rle: Vec<Vec<usize>>,
}

/// Run lengths of one row, alternating unset/set and starting with unset.
pub fn encode_row(row: &[bool]) -> Vec<usize> {
    let mut runs = Vec::new();
    let mut cur = false;
    let mut n = 0;
    for &b in row {
        if b == cur {
            n += 1;
        } else {
            runs.push(n);
            cur = b;
            n = 1;
        }
    }
    runs.push(n);
    runs
}

fn decode_rows(width: usize, height: usize, rle: &[Vec<usize>]) -> std::result::Result<BinaryMask, String> {
    if rle.len() != height {
        return Err(format!("expected {height} rows, got {}", rle.len()));
    }
    let mut mask = BinaryMask::new(width, height);
    for (y, runs) in rle.iter().enumerate() {
        if runs.iter().sum::<usize>() != width {
            return Err(format!("row {y} runs do not sum to width {width}"));
        }
        let mut x = 0;
        for (k, &n) in runs.iter().enumerate() {
            if k % 2 == 1 {
                for xx in x..x + n {
                    mask.set(xx, y, true);
                }
            }
            x += n;
        }
    }
    Ok(mask)
}

/// Reads a library file: one `{class,kind,width,height,rle}` record per line.
pub fn parse_mask_library<R: BufRead>(reader: R) -> Result<MaskLibrary> {
    let mut lib = MaskLibrary::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let err = |reason: String| Error::Parse { line: k + 1, reason };
        let raw: RawMask = serde_json::from_str(&line).map_err(|e| err(e.to_string()))?;
        let kind = ClassKind::parse(&raw.kind).ok_or_else(|| err(format!("unknown kind `{}`", raw.kind)))?;
        let mask = decode_rows(raw.width, raw.height, &raw.rle).map_err(err)?;
        lib.add(&raw.class, kind, mask).map_err(|e| err(e.to_string()))?;
    }
    Ok(lib)
}

/// One library record line for `mask`.
pub fn serialize_mask_record(class: &str, kind: ClassKind, mask: &BinaryMask) -> String {
    let rle: Vec<Vec<usize>> = mask.data.chunks(mask.width.max(1)).map(encode_row).collect();
    serde_json::json!({
        "class": class,
        "kind": kind.as_str(),
        "width": mask.width,
        "height": mask.height,
        "rle": rle,
    })
    .to_string()
}

/// Scales the set region of `candidate` onto `target` bounds of a
/// `width × height` canvas with nearest-neighbour sampling.
pub fn place_mask(candidate: &BinaryMask, target: PixelBounds, width: usize, height: usize) -> BinaryMask {
    let mut out = BinaryMask::new(width, height);
    let Some((cx0, cy0, cx1, cy1)) = candidate.bounds() else {
        return out;
    };
    let (tx0, ty0, tx1, ty1) = target;
    let (cw, ch) = (cx1 - cx0 + 1, cy1 - cy0 + 1);
    let (tw, th) = (tx1 - tx0 + 1, ty1 - ty0 + 1);
    for y in ty0..=ty1.min(height.saturating_sub(1)) {
        let sy = cy0 + ((2 * (y - ty0) + 1) * ch) / (2 * th);
        for x in tx0..=tx1.min(width.saturating_sub(1)) {
            let sx = cx0 + ((2 * (x - tx0) + 1) * cw) / (2 * tw);
            if candidate.get(sx, sy) {
                out.set(x, y, true);
            }
        }
    }
    out
}

/// Library mask retrieved for one hull.
#[derive(Debug, Clone, PartialEq)]
pub struct Retrieved {
    /// Candidate placed on the hull's bounding box, at map resolution.
    pub mask: BinaryMask,
    pub index: usize,
    pub iou: f64,
}

/// Picks the candidate of `class` with the highest IoU against `hull_mask`
/// once placed on the hull's bounding box; ties go to the lowest index.
pub fn retrieve_mask(hull_mask: &BinaryMask, class: &str, lib: &MaskLibrary) -> Result<Retrieved> {
    let entry = lib
        .get(class)
        .filter(|e| !e.masks.is_empty())
        .ok_or_else(|| Error::UnknownClass(class.to_string()))?;
    let (w, h) = (hull_mask.width, hull_mask.height);
    let target = hull_mask
        .bounds()
        .unwrap_or((0, 0, w.saturating_sub(1), h.saturating_sub(1)));
    let mut best: Option<Retrieved> = None;
    for (index, cand) in entry.masks.iter().enumerate() {
        let mask = place_mask(cand, target, w, h);
        let iou = mask.iou(hull_mask);
        if best.as_ref().is_none_or(|b| iou > b.iou) {
            best = Some(Retrieved { mask, index, iou });
        }
    }
    Ok(best.expect("class has at least one mask"))
}

/// Pastes `mask` as `class` following the object/background rule.
pub fn composite(map: &mut LabelMap, mask: &BinaryMask, class: &str, kind: ClassKind) -> Result<()> {
    if mask.width != map.width || mask.height != map.height {
        return Err(Error::ShapeMismatch(format!(
            "mask {}x{} vs map {}x{}",
            mask.width, mask.height, map.width, map.height
        )));
    }
    let id = map.register(class, kind)?;
    for (cell, &set) in (0..map.labels.len()).zip(&mask.data) {
        if !set {
            continue;
        }
        let cur = map.labels[cell];
        let writable = match kind {
            ClassKind::Object => true,
            ClassKind::Background => {
                cur == UNLABELLED || map.kind_of(cur) == Some(ClassKind::Background)
            }
        };
        if writable {
            map.labels[cell] = id;
        }
    }
    Ok(())
}

/// One compositing step of [`narrative_to_labelmap`].
#[derive(Debug, Clone, PartialEq)]
pub struct PasteStep {
    pub class_name: String,
    pub library_index: usize,
    pub iou: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelMapOutcome {
    pub map: LabelMap,
    pub steps: Vec<PasteStep>,
    /// Mentions with no trace points.
    pub skipped_empty: usize,
}

/// Builds a label map from the class mentions of a narrative, in caption
/// (and therefore trace) order.
pub fn narrative_to_labelmap<T: Real, S: AsRef<str>>(
    narrative: &LocalizedNarrative<T>,
    class_names: &[S],
    lib: &MaskLibrary,
    width: usize,
    height: usize,
) -> Result<LabelMapOutcome> {
    let mut map = LabelMap::new(width, height);
    let mut steps = Vec::new();
    let mut skipped_empty = 0;
    for mention in match_class_mentions(narrative, class_names) {
        if mention.segment.is_empty() {
            skipped_empty += 1;
            continue;
        }
        let (lo, hi) = (T::zero(), T::one());
        let pts: Vec<(T, T)> = mention
            .segment
            .iter()
            .map(|p| (p.x.clamp_to(lo, hi), p.y.clamp_to(lo, hi)))
            .collect();
        let hull = convex_hull(&pts)?;
        let hull_mask = rasterize_polygon(&hull, width, height);
        let entry = lib
            .get(&mention.class_name)
            .ok_or_else(|| Error::UnknownClass(mention.class_name.clone()))?;
        let found = retrieve_mask(&hull_mask, &mention.class_name, lib)?;
        composite(&mut map, &found.mask, &mention.class_name, entry.kind)?;
        steps.push(PasteStep {
            class_name: mention.class_name,
            library_index: found.index,
            iou: found.iou,
        });
    }
    Ok(LabelMapOutcome { map, steps, skipped_empty })
}
