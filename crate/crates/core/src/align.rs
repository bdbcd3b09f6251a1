//! Order-preserving matching of automatic words onto manual words.
//!
//! Every automatic word `a_i` is assigned to exactly one manual word
//! `m_mu(i)` with `mu` non-decreasing; a manual word may receive zero or many
//! automatic words. The optimal matching minimizes the summed character edit
//! distance `sum_i d(a_i, m_mu(i))`. Manual words left unmatched cost nothing.
//!
//! The dynamic program is
//!
//! ```text
//! f(i, j) = d(a_i, m_j) + min_{j' <= j} f(i-1, j'),   f(0, .) = 0
//! ```
//!
//! evaluated with running prefix minima, so the table work is `O(|a|·|m|)`.
//! Among equal-cost predecessors the largest `j'` wins, as does the largest
//! final `j`; this keeps matches as far right as possible and makes the
//! output deterministic.
//!
//! Indices in [`Matching::assignment`] are 0-based.

use crate::error::{Error, Result};
use crate::model::{normalize_token, AutomaticTranscript, ManualTranscript};
use crate::num::Real;

/// Levenshtein distance with unit insert/delete/replace costs over `char`s.
pub fn edit_distance(u: &str, v: &str) -> u32 {
    let u: Vec<char> = u.chars().collect();
    let v: Vec<char> = v.chars().collect();
    let mut rows = (Vec::new(), Vec::new());
    edit_distance_chars(&u, &v, &mut rows)
}

/// Two-row DP over char slices; `rows` is scratch space reused across calls.
fn edit_distance_chars(u: &[char], v: &[char], rows: &mut (Vec<u32>, Vec<u32>)) -> u32 {
    if u.is_empty() {
        return v.len() as u32;
    }
    if v.is_empty() {
        return u.len() as u32;
    }
    let (prev, cur) = rows;
    prev.clear();
    prev.extend(0..=v.len() as u32);
    cur.clear();
    cur.resize(v.len() + 1, 0);
    for (i, cu) in u.iter().enumerate() {
        cur[0] = i as u32 + 1;
        for (j, cv) in v.iter().enumerate() {
            let sub = prev[j] + u32::from(cu != cv);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(prev, cur);
    }
    prev[v.len()]
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    /// `assignment[i]` is the manual word index matched by automatic word `i`.
    pub assignment: Vec<usize>,
    pub total_cost: u64,
    pub per_pair_cost: Vec<u32>,
}

impl Matching {
    /// Checks length, range and monotonicity against transcript sizes.
    pub fn validate(&self, auto_len: usize, manual_len: usize) -> Result<()> {
        if self.assignment.len() != auto_len {
            return Err(Error::InvalidMatching(format!(
                "assignment has {} entries for {auto_len} automatic words",
                self.assignment.len()
            )));
        }
        if let Some((i, j)) = self.assignment.iter().enumerate().find(|(_, &j)| j >= manual_len) {
            return Err(Error::InvalidMatching(format!(
                "automatic word {i} maps to {j}, outside {manual_len} manual words"
            )));
        }
        if let Some(i) = self.assignment.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::InvalidMatching(format!(
                "assignment decreases between automatic words {i} and {}",
                i + 1
            )));
        }
        Ok(())
    }

    /// Automatic word indices matched to each manual word (the sets `A_j`).
    pub fn matches_per_manual(&self, manual_len: usize) -> Vec<Vec<usize>> {
        let mut sets = vec![Vec::new(); manual_len];
        for (i, &j) in self.assignment.iter().enumerate() {
            sets[j].push(i);
        }
        sets
    }
}

fn check_sizes(auto_len: usize, manual_len: usize) -> Result<()> {
    if manual_len == 0 && auto_len > 0 {
        return Err(Error::EmptyManualTranscript(auto_len));
    }
    Ok(())
}

/// Cost table `d(a_i, m_j)` in row-major order.
fn cost_table(a: &[String], m: &[String]) -> Vec<u32> {
    let a: Vec<Vec<char>> = a.iter().map(|w| w.chars().collect()).collect();
    let m: Vec<Vec<char>> = m.iter().map(|w| w.chars().collect()).collect();
    let mut rows = (Vec::new(), Vec::new());
    let mut costs = Vec::with_capacity(a.len() * m.len());
    for ai in &a {
        costs.extend(m.iter().map(|mj| edit_distance_chars(ai, mj, &mut rows)));
    }
    costs
}

/// Optimal matching over already-normalized token sequences.
pub fn align_tokens(a: &[String], m: &[String]) -> Result<Matching> {
    check_sizes(a.len(), m.len())?;
    if a.is_empty() {
        return Ok(Matching { assignment: Vec::new(), total_cost: 0, per_pair_cost: Vec::new() });
    }
    let (na, nm) = (a.len(), m.len());
    let costs = cost_table(a, m);
    // back[i*nm + j] = predecessor column for row i (unused for row 0)
    let mut back = vec![0usize; na * nm];
    let mut prev = vec![0u64; nm];
    let mut cur = vec![0u64; nm];
    for j in 0..nm {
        prev[j] = u64::from(costs[j]);
    }
    for i in 1..na {
        let mut best = u64::MAX;
        let mut best_j = 0;
        for j in 0..nm {
            if prev[j] <= best {
                best = prev[j];
                best_j = j;
            }
            cur[j] = u64::from(costs[i * nm + j]) + best;
            back[i * nm + j] = best_j;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let mut end_j = 0;
    for j in 0..nm {
        if prev[j] <= prev[end_j] {
            end_j = j;
        }
    }
    let total_cost = prev[end_j];
    let mut assignment = vec![0usize; na];
    let mut j = end_j;
    for i in (0..na).rev() {
        assignment[i] = j;
        if i > 0 {
            j = back[i * nm + j];
        }
    }
    let per_pair_cost: Vec<u32> = assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| costs[i * nm + j])
        .collect();
    debug_assert_eq!(per_pair_cost.iter().map(|&c| u64::from(c)).sum::<u64>(), total_cost);
    Ok(Matching { assignment, total_cost, per_pair_cost })
}

/// Optimal cost only, in `O(|m|)` memory.
pub fn alignment_cost_tokens(a: &[String], m: &[String]) -> Result<u64> {
    check_sizes(a.len(), m.len())?;
    let m: Vec<Vec<char>> = m.iter().map(|w| w.chars().collect()).collect();
    let mut rows = (Vec::new(), Vec::new());
    let mut row = vec![0u64; m.len()];
    for ai in a {
        let ai: Vec<char> = ai.chars().collect();
        let mut best = u64::MAX;
        for (j, mj) in m.iter().enumerate() {
            best = best.min(row[j]);
            row[j] = best + u64::from(edit_distance_chars(&ai, mj, &mut rows));
        }
    }
    Ok(row.into_iter().min().unwrap_or(0))
}

/// Aligns an automatic transcript onto a manual one. Automatic words are
/// normalized the same way manual tokens are before comparison.
pub fn align<T: Real>(a: &AutomaticTranscript<T>, m: &ManualTranscript) -> Result<Matching> {
    align_tokens(&a.normalized_tokens(), &m.words)
}

/// The optimal matching cost `D*` without building the assignment.
pub fn alignment_cost<T: Real>(a: &AutomaticTranscript<T>, m: &ManualTranscript) -> Result<u64> {
    alignment_cost_tokens(&a.normalized_tokens(), &m.words)
}

/// Normalizes an arbitrary word list the way [`align`] does.
pub fn normalize_words<S: AsRef<str>>(words: &[S]) -> Vec<String> {
    words.iter().map(|w| normalize_token(w.as_ref())).collect()
}
