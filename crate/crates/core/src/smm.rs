//! Subsequence match merging: joins neighboring matches that are separated
//! by short unmatched gaps in both sequences.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matcher::Match;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmmParams {
    pub max_gap: usize,
    pub min_neighbor_len: usize,
    pub count_gap_tokens: bool,
}

impl Default for SmmParams {
    fn default() -> Self {
        SmmParams {
            max_gap: 6,
            min_neighbor_len: 2,
            count_gap_tokens: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmmError {
    #[error("matches overlap in sequence {side}: {first:?} and {second:?}")]
    OverlappingMatches { side: char, first: Match, second: Match },
}

fn check_disjoint(matches: &[Match]) -> Result<(), SmmError> {
    let mut by_a: Vec<&Match> = matches.iter().collect();
    by_a.sort_by_key(|m| m.start_a);
    for w in by_a.windows(2) {
        if w[0].end_a() > w[1].start_a {
            return Err(SmmError::OverlappingMatches {
                side: 'a',
                first: *w[0],
                second: *w[1],
            });
        }
    }
    let mut by_b: Vec<&Match> = matches.iter().collect();
    by_b.sort_by_key(|m| m.start_b);
    for w in by_b.windows(2) {
        if w[0].end_b() > w[1].start_b {
            return Err(SmmError::OverlappingMatches {
                side: 'b',
                first: *w[0],
                second: *w[1],
            });
        }
    }
    Ok(())
}

fn mergeable(m1: &Match, m2: &Match, all: &[Match], p: &SmmParams) -> bool {
    if m2.start_b < m1.end_b() {
        return false;
    }
    let gap_a = m2.start_a - m1.end_a();
    let gap_b = m2.start_b - m1.end_b();
    if gap_a > p.max_gap || gap_b > p.max_gap {
        return false;
    }
    let shortest = m1.len_a.min(m1.len_b).min(m2.len_a).min(m2.len_b);
    if shortest < p.min_neighbor_len {
        return false;
    }
    !all.iter().any(|m| m.start_b > m1.start_b && m.start_b < m2.start_b)
}

fn join(m1: &Match, m2: &Match) -> Match {
    let gap_a = m2.start_a - m1.end_a();
    let gap_b = m2.start_b - m1.end_b();
    Match {
        start_a: m1.start_a,
        start_b: m1.start_b,
        len_a: m2.end_a() - m1.start_a,
        len_b: m2.end_b() - m1.start_b,
        merged: true,
        gap_a: m1.gap_a + m2.gap_a + gap_a,
        gap_b: m1.gap_b + m2.gap_b + gap_b,
    }
}

/// Merges the leftmost eligible neighbor pair, if any. Output is sorted by
/// `start_a`.
pub fn merge_once(matches: &[Match], params: &SmmParams) -> Result<(Vec<Match>, bool), SmmError> {
    check_disjoint(matches)?;
    let mut sorted = matches.to_vec();
    sorted.sort_by_key(|m| m.start_a);
    for k in 0..sorted.len().saturating_sub(1) {
        if mergeable(&sorted[k], &sorted[k + 1], &sorted, params) {
            let merged = join(&sorted[k], &sorted[k + 1]);
            sorted[k] = merged;
            sorted.remove(k + 1);
            return Ok((sorted, true));
        }
    }
    Ok((sorted, false))
}

pub fn merge_to_fixpoint(matches: &[Match], params: &SmmParams) -> Result<Vec<Match>, SmmError> {
    let (mut current, mut changed) = merge_once(matches, params)?;
    while changed {
        (current, changed) = merge_once(&current, params)?;
    }
    Ok(current)
}
