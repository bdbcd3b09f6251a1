//! Single-reference caption metrics: ROUGE-L, ROUGE-1-F1, BLEU-1 and BLEU-4.
//!
//! Tokens can be any `Eq + Hash` type; callers normally pass the output of
//! [`crate::model::tokenize`].

use std::collections::HashMap;
use std::hash::Hash;

use crate::num::Real;

/// Length of the longest common subsequence.
pub fn lcs_len<W: PartialEq>(a: &[W], b: &[W]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        let mut diag = 0;
        for (j, y) in b.iter().enumerate() {
            let above = row[j + 1];
            row[j + 1] = if x == y { diag + 1 } else { above.max(row[j]) };
            diag = above;
        }
    }
    row[b.len()]
}

/// F1 of a match count against both lengths. `2PR/(P+R)` reduces to
/// `2·matched/(|c|+|r|)`, which is what is evaluated.
fn f1<T: Real>(matched: usize, cand_len: usize, ref_len: usize) -> T {
    if matched == 0 || cand_len == 0 || ref_len == 0 {
        return T::zero();
    }
    T::from_usize_lossy(2 * matched) / T::from_usize_lossy(cand_len + ref_len)
}

pub fn rouge_l<T: Real, W: PartialEq>(candidate: &[W], reference: &[W]) -> T {
    f1(lcs_len(candidate, reference), candidate.len(), reference.len())
}

fn counts<W: Eq + Hash>(words: &[W]) -> HashMap<&W, usize> {
    let mut m = HashMap::new();
    for w in words {
        *m.entry(w).or_insert(0) += 1;
    }
    m
}

/// Multiset intersection size of two token sequences.
pub fn unigram_overlap<W: Eq + Hash>(a: &[W], b: &[W]) -> usize {
    let cb = counts(b);
    counts(a)
        .into_iter()
        .map(|(w, n)| n.min(cb.get(w).copied().unwrap_or(0)))
        .sum()
}

pub fn rouge_1_f1<T: Real, W: Eq + Hash>(candidate: &[W], reference: &[W]) -> T {
    f1(unigram_overlap(candidate, reference), candidate.len(), reference.len())
}

/// Clipped n-gram matches and the candidate n-gram total for order `n`.
pub fn clipped_ngram_matches<W: Eq + Hash>(candidate: &[W], reference: &[W], n: usize) -> (usize, usize) {
    if n == 0 || candidate.len() < n {
        return (0, 0);
    }
    let mut reference_counts: HashMap<&[W], usize> = HashMap::new();
    if reference.len() >= n {
        for g in reference.windows(n) {
            *reference_counts.entry(g).or_insert(0) += 1;
        }
    }
    let mut candidate_counts: HashMap<&[W], usize> = HashMap::new();
    for g in candidate.windows(n) {
        *candidate_counts.entry(g).or_insert(0) += 1;
    }
    let matched = candidate_counts
        .iter()
        .map(|(g, &c)| c.min(reference_counts.get(g).copied().unwrap_or(0)))
        .sum();
    (matched, candidate.len() - n + 1)
}

/// Unsmoothed BLEU with uniform weights over orders `1..=max_n` and the
/// usual brevity penalty `exp(1 - |r|/|c|)` for short candidates.
///
/// An order for which neither sequence has any n-gram (both shorter than
/// `n`) carries no evidence and is left out of the geometric mean, so equal
/// non-empty sequences always score 1. Any order with a zero clipped
/// precision makes the score 0, and an empty candidate scores 0.
pub fn bleu<T: Real, W: Eq + Hash>(candidate: &[W], reference: &[W], max_n: usize) -> T {
    if candidate.is_empty() || max_n == 0 {
        return T::zero();
    }
    let mut log_sum = 0f64;
    let mut orders = 0usize;
    for n in 1..=max_n {
        if candidate.len() < n && reference.len() < n {
            continue;
        }
        let (matched, total) = clipped_ngram_matches(candidate, reference, n);
        if matched == 0 {
            return T::zero();
        }
        log_sum += (matched as f64 / total as f64).ln();
        orders += 1;
    }
    let c = candidate.len() as f64;
    let r = reference.len() as f64;
    let bp = if c < r { (1.0 - r / c).exp() } else { 1.0 };
    T::lit(bp * (log_sum / orders as f64).exp())
}

pub fn bleu1<T: Real, W: Eq + Hash>(candidate: &[W], reference: &[W]) -> T {
    bleu(candidate, reference, 1)
}

pub fn bleu4<T: Real, W: Eq + Hash>(candidate: &[W], reference: &[W]) -> T {
    bleu(candidate, reference, 4)
}

/// All four scores for one candidate/reference pair.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CaptionScores<T: Real> {
    pub rouge_l: T,
    pub rouge_1_f1: T,
    pub bleu1: T,
    pub bleu4: T,
}

impl<T: Real> CaptionScores<T> {
    pub fn compute<W: Eq + Hash>(candidate: &[W], reference: &[W]) -> Self {
        Self {
            rouge_l: rouge_l(candidate, reference),
            rouge_1_f1: rouge_1_f1(candidate, reference),
            bleu1: bleu1(candidate, reference),
            bleu4: bleu4(candidate, reference),
        }
    }

    pub fn mean(scores: &[Self]) -> Option<Self> {
        if scores.is_empty() {
            return None;
        }
        let n = T::from_usize_lossy(scores.len());
        let s = scores.iter().copied().fold(Self::default(), |a, b| a + b);
        Some(Self {
            rouge_l: s.rouge_l / n,
            rouge_1_f1: s.rouge_1_f1 / n,
            bleu1: s.bleu1 / n,
            bleu4: s.bleu4 / n,
        })
    }
}

/// Elementwise sum; used for associative mean reduction.
impl<T: Real> std::ops::Add for CaptionScores<T> {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            rouge_l: self.rouge_l + o.rouge_l,
            rouge_1_f1: self.rouge_1_f1 + o.rouge_1_f1,
            bleu1: self.bleu1 + o.bleu1,
            bleu4: self.bleu4 + o.bleu4,
        }
    }
}
