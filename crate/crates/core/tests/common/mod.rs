//! Independent oracles and fixture generators shared by the integration tests.
#![allow(dead_code)]

use narrative_core::model::{
    AutomaticTranscript, LocalizedNarrative, ManualTranscript, MouseTrace, TimedWord, TracePoint,
};
use narrative_core::sync::{build_narrative, NarrativeMeta};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

/// Plain recursive Levenshtein, exponential but fine for short words.
pub fn edit_oracle(u: &[char], v: &[char]) -> u64 {
    match (u.split_first(), v.split_first()) {
        (None, _) => v.len() as u64,
        (_, None) => u.len() as u64,
        (Some((cu, ru)), Some((cv, rv))) => {
            let rep = edit_oracle(ru, rv) + u64::from(cu != cv);
            rep.min(edit_oracle(ru, v) + 1).min(edit_oracle(u, rv) + 1)
        }
    }
}

/// Minimum summed cost over every non-decreasing assignment of `a` into `m`,
/// by explicit enumeration. Also returns how many assignments were visited.
pub fn brute_force_alignment(a: &[String], m: &[String]) -> (u64, u64) {
    let d: Vec<Vec<u64>> = a
        .iter()
        .map(|ai| {
            let ca: Vec<char> = ai.chars().collect();
            m.iter().map(|mj| edit_oracle(&ca, &mj.chars().collect::<Vec<_>>())).collect()
        })
        .collect();
    let mut best = u64::MAX;
    let mut visited = 0;
    let mut assignment = vec![0usize; a.len()];
    fn rec(i: usize, lo: usize, d: &[Vec<u64>], m_len: usize, asg: &mut Vec<usize>, best: &mut u64, visited: &mut u64) {
        if i == asg.len() {
            *visited += 1;
            let cost = asg.iter().enumerate().map(|(i, &j)| d[i][j]).sum();
            *best = (*best).min(cost);
            return;
        }
        for j in lo..m_len {
            asg[i] = j;
            rec(i + 1, j, d, m_len, asg, best, visited);
        }
    }
    rec(0, 0, &d, m.len(), &mut assignment, &mut best, &mut visited);
    (if a.is_empty() { 0 } else { best }, visited)
}

/// Random character edit: replace, insert or delete.
pub fn corrupt(word: &str, rng: &mut StdRng) -> String {
    let mut cs: Vec<char> = word.chars().collect();
    let letters: Vec<char> = "abcdefghijklmnopqrstuvwxyz".chars().collect();
    match rng.gen_range(0..3) {
        0 if !cs.is_empty() => {
            let k = rng.gen_range(0..cs.len());
            cs[k] = *letters.choose(rng).unwrap();
        }
        1 => {
            let k = rng.gen_range(0..=cs.len());
            cs.insert(k, *letters.choose(rng).unwrap());
        }
        _ if cs.len() > 1 => {
            let k = rng.gen_range(0..cs.len());
            cs.remove(k);
        }
        _ => cs.push('x'),
    }
    cs.into_iter().collect()
}

/// Vertex set of the convex hull via the O(n³) edge test: a directed pair
/// is a hull edge when every point is left of or on it, and points on its
/// line lie between the endpoints.
pub fn hull_oracle(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    if pts.len() == 1 {
        return pts;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut verts = Vec::new();
    for &p in &pts {
        for &q in &pts {
            if p == q {
                continue;
            }
            let edge = pts.iter().all(|&r| {
                let c = cross(p, q, r);
                if c > 0.0 {
                    return true;
                }
                if c < 0.0 {
                    return false;
                }
                let t = (r.0 - p.0) * (q.0 - p.0) + (r.1 - p.1) * (q.1 - p.1);
                let len2 = (q.0 - p.0).powi(2) + (q.1 - p.1).powi(2);
                (0.0..=len2).contains(&t)
            });
            if edge {
                verts.push(p);
                verts.push(q);
            }
        }
    }
    verts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    verts.dedup();
    verts
}

/// Longest common subsequence by enumerating every subsequence of `a`.
pub fn lcs_oracle(a: &[&str], b: &[&str]) -> usize {
    let is_subseq = |sub: &[&str]| {
        let mut it = b.iter();
        sub.iter().all(|w| it.any(|x| x == w))
    };
    (0u32..(1 << a.len()))
        .filter_map(|bits| {
            let sub: Vec<&str> = (0..a.len()).filter(|k| bits >> k & 1 == 1).map(|k| a[k]).collect();
            is_subseq(&sub).then_some(sub.len())
        })
        .max()
        .unwrap_or(0)
}

pub const VOCAB: &[&str] = &[
    "a", "woman", "holding", "balloon", "dog", "grass", "sky", "the", "on", "in", "front",
    "there", "is", "car", "road", "traffic", "light", "tree", "person", "bottle", "table",
];

/// Microsecond-quantized value, exactly representable after 6-decimal text.
pub fn q(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

/// Random trace with quantized coordinates and strictly increasing times.
pub fn random_trace(rng: &mut StdRng, strokes: usize, points: usize, t_start: f64, t_span: f64) -> MouseTrace<f64> {
    let total = strokes * points;
    let mut ts: Vec<f64> = (0..total).map(|_| q(t_start + rng.gen::<f64>() * t_span)).collect();
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ts.dedup();
    let mut out = Vec::new();
    for chunk in ts.chunks(points.max(1)) {
        out.push(
            chunk
                .iter()
                .map(|&t| TracePoint::new(q(rng.gen_range(-0.05..1.05)), q(rng.gen_range(-0.05..1.05)), t))
                .collect(),
        );
    }
    MouseTrace::new(out).unwrap()
}

/// A narrative built through the real pipeline from a random caption, a
/// noisy word stream and a random trace. All numbers are quantized.
pub fn random_narrative(rng: &mut StdRng) -> LocalizedNarrative<f64> {
    let n_words = rng.gen_range(0..12);
    let mut caption_words: Vec<String> = (0..n_words)
        .map(|_| VOCAB.choose(rng).unwrap().to_string())
        .collect();
    if let Some(w) = caption_words.first_mut() {
        *w = capitalize(w);
    }
    let mut caption = caption_words.join(" ");
    if rng.gen_bool(0.5) {
        caption.push('.');
    }
    let m = ManualTranscript::from_caption(caption.clone());

    let mut t = q(rng.gen_range(0.0..1.0));
    let mut words = Vec::new();
    for w in &m.words {
        if rng.gen_bool(0.1) {
            continue;
        }
        let text = if rng.gen_bool(0.2) { corrupt(w, rng) } else { w.clone() };
        let len = q(rng.gen_range(0.1..0.6));
        words.push(TimedWord::new(text, t, q(t + len)).unwrap());
        t = q(t + len + rng.gen_range(0.0..0.3));
    }
    let a = AutomaticTranscript::new(words).unwrap();
    let strokes = rng.gen_range(1..4);
    let points = rng.gen_range(1..8);
    let trace = random_trace(rng, strokes, points, 0.0, t.max(0.5) + 0.5);
    let ids = ["coco", "open_images", "flickr30k", "ade20k", "weird \"quoted\" \\ id", "données"];
    let meta = NarrativeMeta {
        dataset_id: ids.choose(rng).unwrap().to_string(),
        image_id: format!("{:012}", rng.gen_range(0..1_000_000u64)),
        annotator_id: rng.gen_range(0..200).to_string(),
    };
    let threshold = q(rng.gen_range(0.0..1.0));
    build_narrative(&a, &m, &trace, meta, threshold).unwrap()
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}
