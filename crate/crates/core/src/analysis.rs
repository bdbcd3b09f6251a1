//! Corpus statistics: how well trace segments land on boxes of the object
//! they name, and how rich the captions are.

use std::collections::{BTreeMap, HashSet};

use crate::error::{Error, Result};
use crate::model::{tokenize, BoundingBox, LocalizedNarrative, TracePoint};
use crate::num::Real;

pub const DEFAULT_HISTOGRAM_BINS: usize = 50;
pub const DEFAULT_HISTOGRAM_EXTENT: f64 = 3.0;

/// A class name found in a caption and the trace points of its words.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassMention<T: Real> {
    pub class_name: String,
    /// Word range `[start, end)` in the timed caption.
    pub word_start: usize,
    pub word_end: usize,
    /// Union of the words' segments, ordered by time.
    pub segment: Vec<TracePoint<T>>,
}

/// Finds class names in the caption by exact token-sequence matching.
///
/// Multi-word names are tried longest first, and the caption is scanned
/// left to right without overlapping mentions.
pub fn match_class_mentions<T: Real, S: AsRef<str>>(
    narrative: &LocalizedNarrative<T>,
    class_names: &[S],
) -> Vec<ClassMention<T>> {
    let mut patterns: Vec<(Vec<String>, String)> = class_names
        .iter()
        .map(|c| (tokenize(c.as_ref()), c.as_ref().to_lowercase()))
        .filter(|(toks, _)| !toks.is_empty())
        .collect();
    patterns.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.1.cmp(&b.1)));
    patterns.dedup_by(|a, b| a.0 == b.0);

    let words: Vec<String> = narrative.words().map(str::to_lowercase).collect();
    let mut mentions = Vec::new();
    let mut i = 0;
    while i < words.len() {
        let hit = patterns
            .iter()
            .find(|(toks, _)| i + toks.len() <= words.len() && words[i..i + toks.len()] == toks[..]);
        match hit {
            Some((toks, name)) => {
                let end = i + toks.len();
                mentions.push(ClassMention {
                    class_name: name.clone(),
                    word_start: i,
                    word_end: end,
                    segment: union_segment(&narrative.timed_caption[i..end]),
                });
                i = end;
            }
            None => i += 1,
        }
    }
    mentions
}

fn union_segment<T: Real>(words: &[crate::model::WordGrounding<T>]) -> Vec<TracePoint<T>> {
    let mut seen = HashSet::new();
    let mut pts: Vec<TracePoint<T>> = words
        .iter()
        .flat_map(|w| w.segment.points().copied())
        .filter(|p| seen.insert((p.x.as_f64().to_bits(), p.y.as_f64().to_bits(), p.t.as_f64().to_bits())))
        .collect();
    pts.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap_or(std::cmp::Ordering::Equal));
    pts
}

/// Square binning of box-normalized coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramConfig<T: Real> {
    pub x_range: (T, T),
    pub y_range: (T, T),
    pub bins: usize,
}

impl<T: Real> Default for HistogramConfig<T> {
    fn default() -> Self {
        let e = T::lit(DEFAULT_HISTOGRAM_EXTENT);
        Self { x_range: (-e, e), y_range: (-e, e), bins: DEFAULT_HISTOGRAM_BINS }
    }
}

/// `bins × bins` count grid. Each axis range is half-open except that the
/// upper edge belongs to the last bin.
///
/// Invariant: `counts.sum() + out_of_range == total`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram2D<T: Real> {
    pub x_range: (T, T),
    pub y_range: (T, T),
    pub bins: usize,
    /// Row-major, `counts[iy * bins + ix]`.
    pub counts: Vec<u64>,
    pub total: u64,
    pub out_of_range: u64,
    /// Points with `|u| <= 1` and `|v| <= 1`, i.e. inside the box.
    pub within_box: u64,
}

impl<T: Real> Histogram2D<T> {
    pub fn new(config: HistogramConfig<T>) -> Result<Self> {
        let ok = |(lo, hi): (T, T)| lo < hi && lo.is_finite() && hi.is_finite();
        if config.bins == 0 || !ok(config.x_range) || !ok(config.y_range) {
            return Err(Error::InvalidArgument("histogram needs bins > 0 and non-empty ranges".into()));
        }
        Ok(Self {
            x_range: config.x_range,
            y_range: config.y_range,
            bins: config.bins,
            counts: vec![0; config.bins * config.bins],
            total: 0,
            out_of_range: 0,
            within_box: 0,
        })
    }

    fn axis_bin(&self, v: T, (lo, hi): (T, T)) -> Option<usize> {
        if !(v >= lo && v <= hi) {
            return None;
        }
        let k = ((v - lo) / (hi - lo) * T::from_usize_lossy(self.bins)).floor();
        Some(k.to_usize().unwrap_or(0).min(self.bins - 1))
    }

    /// Bin containing `(u, v)`, if in range.
    pub fn bin_of(&self, u: T, v: T) -> Option<(usize, usize)> {
        Some((self.axis_bin(u, self.x_range)?, self.axis_bin(v, self.y_range)?))
    }

    pub fn add(&mut self, u: T, v: T) {
        self.total += 1;
        if u.abs() <= T::one() && v.abs() <= T::one() {
            self.within_box += 1;
        }
        match self.bin_of(u, v) {
            Some((ix, iy)) => self.counts[iy * self.bins + ix] += 1,
            None => self.out_of_range += 1,
        }
    }

    pub fn count(&self, ix: usize, iy: usize) -> u64 {
        self.counts[iy * self.bins + ix]
    }

    pub fn binned(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn within_box_fraction(&self) -> Option<f64> {
        (self.total > 0).then(|| self.within_box as f64 / self.total as f64)
    }

    fn same_shape(&self, o: &Self) -> bool {
        self.bins == o.bins && self.x_range == o.x_range && self.y_range == o.y_range
    }
}

/// Elementwise sum of two histograms over the same grid.
pub fn merge_histograms<T: Real>(h1: &Histogram2D<T>, h2: &Histogram2D<T>) -> Result<Histogram2D<T>> {
    if !h1.same_shape(h2) {
        return Err(Error::ShapeMismatch(format!(
            "cannot merge {}x{} over {:?}/{:?} with {}x{} over {:?}/{:?}",
            h1.bins, h1.bins, h1.x_range, h1.y_range, h2.bins, h2.bins, h2.x_range, h2.y_range
        )));
    }
    let mut out = h1.clone();
    for (a, b) in out.counts.iter_mut().zip(&h2.counts) {
        *a += b;
    }
    out.total += h2.total;
    out.out_of_range += h2.out_of_range;
    out.within_box += h2.within_box;
    Ok(out)
}

/// Mentions that could not be placed in the histogram.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SkipCounts {
    /// No box of the mention's class on the image.
    pub no_box: u64,
    pub empty_segment: u64,
    /// Closest box had zero width or height.
    pub degenerate_box: u64,
}

impl std::ops::Add for SkipCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            no_box: self.no_box + o.no_box,
            empty_segment: self.empty_segment + o.empty_segment,
            degenerate_box: self.degenerate_box + o.degenerate_box,
        }
    }
}

/// Same-class box whose center is nearest the segment centroid; lowest index
/// wins ties.
pub fn closest_box<'a, T: Real>(
    segment: &[TracePoint<T>],
    class_name: &str,
    boxes: &'a [BoundingBox<T>],
) -> Option<&'a BoundingBox<T>> {
    if segment.is_empty() {
        return None;
    }
    let n = T::from_usize_lossy(segment.len());
    let cx = segment.iter().map(|p| p.x).sum::<T>() / n;
    let cy = segment.iter().map(|p| p.y).sum::<T>() / n;
    let mut best: Option<(T, &BoundingBox<T>)> = None;
    for b in boxes.iter().filter(|b| b.class_name.as_deref() == Some(class_name)) {
        let (bx, by) = b.center();
        let d = (bx - cx).hypot(by - cy);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, b));
        }
    }
    best.map(|(_, b)| b)
}

/// Maps a point into coordinates where the box spans `[-1, 1]²`.
pub fn box_normalized<T: Real>(p: &TracePoint<T>, b: &BoundingBox<T>) -> (T, T) {
    let two = T::lit(2.0);
    (
        two * (p.x - b.x0) / (b.x1 - b.x0) - T::one(),
        two * (p.y - b.y0) / (b.y1 - b.y0) - T::one(),
    )
}

/// Adds every mention's points, normalized by its closest same-class box,
/// into `hist`.
pub fn accumulate_mentions<T: Real>(
    hist: &mut Histogram2D<T>,
    mentions: &[ClassMention<T>],
    boxes: &[BoundingBox<T>],
) -> SkipCounts {
    let mut skipped = SkipCounts::default();
    for m in mentions {
        if m.segment.is_empty() {
            skipped.empty_segment += 1;
            continue;
        }
        let Some(b) = closest_box(&m.segment, &m.class_name, boxes) else {
            skipped.no_box += 1;
            continue;
        };
        if !(b.x1 > b.x0) || !(b.y1 > b.y0) {
            skipped.degenerate_box += 1;
            continue;
        }
        for p in &m.segment {
            let (u, v) = box_normalized(p, b);
            hist.add(u, v);
        }
    }
    skipped
}

/// Fresh histogram of the mentions against the boxes of one image.
pub fn localization_histogram<T: Real>(
    mentions: &[ClassMention<T>],
    boxes: &[BoundingBox<T>],
    config: HistogramConfig<T>,
) -> Result<(Histogram2D<T>, SkipCounts)> {
    let mut h = Histogram2D::new(config)?;
    let skipped = accumulate_mentions(&mut h, mentions, boxes);
    Ok((h, skipped))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WordClass {
    Noun,
    Pronoun,
    Adjective,
    Adposition,
    Verb,
    Other,
}

/// Assigns a coarse part of speech to a normalized token.
pub trait WordClassTagger {
    fn tag(&self, token: &str) -> WordClass;
}

impl<F: Fn(&str) -> WordClass> WordClassTagger for F {
    fn tag(&self, token: &str) -> WordClass {
        self(token)
    }
}

/// Closed-class word lists plus suffix rules. Good enough for smoke tests
/// and rough statistics; plug a real tagger in for anything serious.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexiconTagger;

const PRONOUNS: &[&str] = &[
    "i", "me", "my", "mine", "myself", "you", "your", "yours", "he", "him", "his", "she", "her",
    "hers", "it", "its", "we", "us", "our", "ours", "they", "them", "their", "theirs", "this",
    "that", "these", "those", "who", "whom", "whose", "which", "what", "something", "someone",
    "anything", "everything", "nothing", "itself", "themselves", "one",
];
const ADPOSITIONS: &[&str] = &[
    "in", "on", "at", "of", "to", "from", "with", "without", "by", "for", "over", "under",
    "above", "below", "behind", "beside", "besides", "between", "near", "into", "onto", "across",
    "through", "around", "along", "against", "among", "beneath", "inside", "outside", "towards",
    "toward", "up", "down", "off", "like", "beyond", "within", "upon", "via", "during", "after",
    "before", "about",
];
const OTHER: &[&str] = &[
    "a", "an", "the", "and", "or", "but", "so", "some", "there", "here", "also", "very", "too",
    "not", "no", "all", "both", "each", "few", "many", "more", "most", "other", "such", "only",
    "just", "then", "than", "as", "if", "where", "when", "while", "because", "few", "two",
    "three", "four", "five", "six", "seven", "eight", "nine", "ten", "can", "could", "may",
    "might", "will", "would", "should", "must", "think", "alright", "okay",
];
const VERBS: &[&str] = &[
    "is", "are", "was", "were", "be", "been", "am", "has", "have", "had", "do", "does", "did",
    "see", "sees", "saw", "sit", "sits", "sat", "stand", "stands", "stood", "hold", "holds",
    "wear", "wears", "ride", "rides", "look", "looks", "eat", "eats", "play", "plays", "fly",
    "flies", "seem", "seems", "appear", "appears", "go", "goes", "run", "runs", "lie", "lies",
    "walk", "walks", "made",
];
const ADJECTIVES: &[&str] = &[
    "red", "blue", "green", "yellow", "white", "black", "brown", "grey", "gray", "orange",
    "pink", "purple", "big", "small", "large", "little", "tall", "short", "long", "old", "new",
    "young", "left", "right", "top", "bottom", "front", "back", "dark", "light", "bright",
    "blurry", "wooden", "open", "closed", "cloudy", "sunny", "empty", "full", "few", "huge",
    "tiny", "round", "square", "different", "same",
];

impl WordClassTagger for LexiconTagger {
    fn tag(&self, token: &str) -> WordClass {
        let t = token;
        if t.is_empty() || t.chars().all(|c| c.is_ascii_digit()) {
            return WordClass::Other;
        }
        if PRONOUNS.contains(&t) {
            return WordClass::Pronoun;
        }
        if ADPOSITIONS.contains(&t) {
            return WordClass::Adposition;
        }
        if OTHER.contains(&t) {
            return WordClass::Other;
        }
        if VERBS.contains(&t) {
            return WordClass::Verb;
        }
        if ADJECTIVES.contains(&t) {
            return WordClass::Adjective;
        }
        if t.ends_with("ly") {
            return WordClass::Other;
        }
        if t.len() > 4 && (t.ends_with("ing") || t.ends_with("ed")) {
            return WordClass::Verb;
        }
        if t.len() > 4
            && ["ous", "ful", "ive", "able", "ible", "ish", "less", "ic", "al"]
                .iter()
                .any(|s| t.ends_with(s))
        {
            return WordClass::Adjective;
        }
        WordClass::Noun
    }
}

/// Per-caption averages of word-class counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RichnessReport {
    pub captions: usize,
    pub mean_words: f64,
    pub mean_nouns: f64,
    pub mean_pronouns: f64,
    pub mean_adjectives: f64,
    pub mean_adpositions: f64,
    pub mean_verbs: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct ClassCounts {
    words: usize,
    nouns: usize,
    pronouns: usize,
    adjectives: usize,
    adpositions: usize,
    verbs: usize,
}

fn count_classes(caption: &str, tagger: &dyn WordClassTagger) -> ClassCounts {
    let mut c = ClassCounts::default();
    for tok in tokenize(caption) {
        c.words += 1;
        match tagger.tag(&tok) {
            WordClass::Noun => c.nouns += 1,
            WordClass::Pronoun => c.pronouns += 1,
            WordClass::Adjective => c.adjectives += 1,
            WordClass::Adposition => c.adpositions += 1,
            WordClass::Verb => c.verbs += 1,
            WordClass::Other => {}
        }
    }
    c
}

/// Averages class counts over individual captions.
pub fn richness_report<I, S>(captions: I, tagger: &dyn WordClassTagger) -> Result<RichnessReport>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut n = 0usize;
    let mut sum = ClassCounts::default();
    for cap in captions {
        let c = count_classes(cap.as_ref(), tagger);
        n += 1;
        sum.words += c.words;
        sum.nouns += c.nouns;
        sum.pronouns += c.pronouns;
        sum.adjectives += c.adjectives;
        sum.adpositions += c.adpositions;
        sum.verbs += c.verbs;
    }
    if n == 0 {
        return Err(Error::EmptyCorpus);
    }
    let mean = |v: usize| v as f64 / n as f64;
    Ok(RichnessReport {
        captions: n,
        mean_words: mean(sum.words),
        mean_nouns: mean(sum.nouns),
        mean_pronouns: mean(sum.pronouns),
        mean_adjectives: mean(sum.adjectives),
        mean_adpositions: mean(sum.adpositions),
        mean_verbs: mean(sum.verbs),
    })
}

/// Number of captions for each noun count.
pub fn nouns_per_caption_histogram<I, S>(captions: I, tagger: &dyn WordClassTagger) -> BTreeMap<usize, u64>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut h = BTreeMap::new();
    for cap in captions {
        *h.entry(count_classes(cap.as_ref(), tagger).nouns).or_insert(0) += 1;
    }
    h
}
