//! Greedy string tiling, similarity scoring and the comparison pipeline.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::{tokenize, FrontendError, Program};
use crate::smm::{self, SmmParams};
use crate::token::{EnrichedSequence, Token, TokenSequence};
use crate::tsn;

pub const DEFAULT_MIN_MATCH_LEN: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Match {
    pub start_a: usize,
    pub start_b: usize,
    pub len_a: usize,
    pub len_b: usize,
    pub merged: bool,
    /// Tokens inside the span that were bridged by merging rather than matched.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub gap_a: usize,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub gap_b: usize,
}

fn is_zero(v: &usize) -> bool {
    *v == 0
}

impl Match {
    pub fn raw(start_a: usize, start_b: usize, len: usize) -> Self {
        Match {
            start_a,
            start_b,
            len_a: len,
            len_b: len,
            merged: false,
            gap_a: 0,
            gap_b: 0,
        }
    }

    pub fn end_a(&self) -> usize {
        self.start_a + self.len_a
    }

    pub fn end_b(&self) -> usize {
        self.start_b + self.len_b
    }

    fn swapped(self) -> Match {
        Match {
            start_a: self.start_b,
            start_b: self.start_a,
            len_a: self.len_b,
            len_b: self.len_a,
            merged: self.merged,
            gap_a: self.gap_b,
            gap_b: self.gap_a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchParams {
    pub min_match_len: usize,
}

impl Default for MatchParams {
    fn default() -> Self {
        MatchParams {
            min_match_len: DEFAULT_MIN_MATCH_LEN,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DefenseConfig {
    pub tsn: bool,
    pub smm: bool,
    #[serde(default)]
    pub smm_params: SmmParams,
}

impl DefenseConfig {
    pub fn none() -> Self {
        DefenseConfig::default()
    }

    pub fn tsn() -> Self {
        DefenseConfig {
            tsn: true,
            ..Default::default()
        }
    }

    pub fn smm() -> Self {
        DefenseConfig {
            smm: true,
            ..Default::default()
        }
    }

    pub fn both() -> Self {
        DefenseConfig {
            tsn: true,
            smm: true,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub id_a: String,
    pub id_b: String,
    pub matches: Vec<Match>,
    pub len_seq_a: usize,
    pub len_seq_b: usize,
    pub similarity: f64,
    pub coverage_a: usize,
    pub coverage_b: usize,
    pub defenses: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

#[derive(Serialize)]
struct ResultLine<'a> {
    a: &'a str,
    b: &'a str,
    similarity: f64,
    coverage_a: usize,
    coverage_b: usize,
    len_a: usize,
    len_b: usize,
    defenses: &'a [String],
}

impl ComparisonResult {
    /// Larger of the two one-sided coverage percentages.
    pub fn max_similarity(&self) -> f64 {
        let side = |c: usize, l: usize| if l == 0 { 0.0 } else { 100.0 * c as f64 / l as f64 };
        side(self.coverage_a, self.len_seq_a).max(side(self.coverage_b, self.len_seq_b))
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(&ResultLine {
            a: &self.id_a,
            b: &self.id_b,
            similarity: self.similarity,
            coverage_a: self.coverage_a,
            coverage_b: self.coverage_b,
            len_a: self.len_seq_a,
            len_b: self.len_seq_b,
            defenses: &self.defenses,
        })
        .expect("result line serializes")
    }
}

#[derive(Debug, Error)]
pub enum MatcherError {
    #[error("duplicate program id `{0}`")]
    DuplicateProgramId(String),
    #[error("program `{id}`: {source}")]
    Frontend {
        id: String,
        #[source]
        source: FrontendError,
    },
    #[error("failed to build worker pool: {0}")]
    Pool(String),
}

/// Covered tokens per side. With `count_gaps == false`, bridged gap tokens of
/// merged matches are not counted.
pub fn coverage(matches: &[Match], count_gaps: bool) -> (usize, usize) {
    matches.iter().fold((0, 0), |(a, b), m| {
        if count_gaps {
            (a + m.len_a, b + m.len_b)
        } else {
            (a + m.len_a - m.gap_a, b + m.len_b - m.gap_b)
        }
    })
}

pub fn similarity(matches: &[Match], len_a: usize, len_b: usize) -> f64 {
    let (ca, cb) = coverage(matches, true);
    similarity_from_coverage(ca, cb, len_a, len_b)
}

pub fn similarity_from_coverage(cov_a: usize, cov_b: usize, len_a: usize, len_b: usize) -> f64 {
    if len_a + len_b == 0 {
        0.0
    } else {
        100.0 * (cov_a + cov_b) as f64 / (len_a + len_b) as f64
    }
}

const HASH_BASE: u64 = 0x100_0000_01b3;

fn symbol(t: &Token) -> u64 {
    t.kind as u64 + 1
}

/// Start positions of every window of length `w` that stays inside one file,
/// with its rolling hash.
fn window_hashes(tokens: &[Token], w: usize) -> Vec<(usize, u64)> {
    let n = tokens.len();
    if w == 0 || n < w {
        return Vec::new();
    }
    let mut pow = 1u64;
    for _ in 1..w {
        pow = pow.wrapping_mul(HASH_BASE);
    }
    let mut out = Vec::with_capacity(n - w + 1);
    let mut h = 0u64;
    // Length of the same-file run ending at the current position.
    let mut run = 0usize;
    for i in 0..n {
        if i >= w {
            h = h.wrapping_sub(symbol(&tokens[i - w]).wrapping_mul(pow));
        }
        h = h.wrapping_mul(HASH_BASE).wrapping_add(symbol(&tokens[i]));
        run = if i > 0 && tokens[i - 1].file_id == tokens[i].file_id {
            run + 1
        } else {
            1
        };
        if i + 1 >= w && run >= w {
            out.push((i + 1 - w, h));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Run {
    i: usize,
    j: usize,
    len: usize,
}

impl Ord for Run {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.len, Reverse(self.i), Reverse(self.j)).cmp(&(other.len, Reverse(other.i), Reverse(other.j)))
    }
}

impl PartialOrd for Run {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn same(a: &[Token], b: &[Token], i: usize, j: usize) -> bool {
    a[i].kind == b[j].kind
}

/// All maximal common diagonal runs of length at least `min` that stay
/// within one file on both sides.
fn maximal_runs(a: &[Token], b: &[Token], min: usize) -> Vec<Run> {
    let wa = window_hashes(a, min);
    let wb = window_hashes(b, min);
    let mut by_hash: HashMap<u64, Vec<usize>> = HashMap::new();
    for &(i, h) in &wa {
        by_hash.entry(h).or_default().push(i);
    }
    let mut runs = Vec::new();
    for &(j, h) in &wb {
        let Some(starts) = by_hash.get(&h) else {
            continue;
        };
        for &i in starts {
            if !(0..min).all(|k| same(a, b, i + k, j + k)) {
                continue;
            }
            let extends_back = i > 0
                && j > 0
                && same(a, b, i - 1, j - 1)
                && a[i - 1].file_id == a[i].file_id
                && b[j - 1].file_id == b[j].file_id;
            if extends_back {
                continue;
            }
            let mut len = min;
            while i + len < a.len()
                && j + len < b.len()
                && same(a, b, i + len, j + len)
                && a[i + len].file_id == a[i].file_id
                && b[j + len].file_id == b[j].file_id
            {
                len += 1;
            }
            runs.push(Run { i, j, len });
        }
    }
    runs
}

/// Greedy string tiling: repeatedly takes the longest common unmarked run of
/// at least `min_match_len` tokens, ties broken by smallest start in A then
/// in B. Output is sorted by `start_a`.
pub fn greedy_string_tiling(a: &TokenSequence, b: &TokenSequence, params: MatchParams) -> Vec<Match> {
    let min = params.min_match_len.max(1);
    let (ta, tb) = (&a.tokens, &b.tokens);
    let mut heap: BinaryHeap<Run> = maximal_runs(ta, tb, min).into_iter().collect();
    let mut marked_a = vec![false; ta.len()];
    let mut marked_b = vec![false; tb.len()];
    let mut tiles = Vec::new();

    while let Some(run) = heap.pop() {
        let free = |k: usize| !marked_a[run.i + k] && !marked_b[run.j + k];
        if (0..run.len).all(free) {
            for k in 0..run.len {
                marked_a[run.i + k] = true;
                marked_b[run.j + k] = true;
            }
            tiles.push(Match::raw(run.i, run.j, run.len));
            continue;
        }
        // Stale entry: re-queue its unmarked pieces that are still long enough.
        let mut k = 0;
        while k < run.len {
            if !free(k) {
                k += 1;
                continue;
            }
            let start = k;
            while k < run.len && free(k) {
                k += 1;
            }
            if k - start >= min {
                heap.push(Run {
                    i: run.i + start,
                    j: run.j + start,
                    len: k - start,
                });
            }
        }
    }
    tiles.sort_by_key(|m| (m.start_a, m.start_b));
    tiles
}

fn canonical_key(s: &TokenSequence) -> impl Ord + '_ {
    s.tokens.iter().map(|t| (t.kind, t.file_id)).collect::<Vec<_>>()
}

/// Tiling plus optional merging on already prepared sequences. The pair is
/// processed in a canonical order so the score does not depend on argument
/// order.
pub fn compare_sequences(
    a: &TokenSequence,
    b: &TokenSequence,
    params: MatchParams,
    smm_params: Option<&SmmParams>,
) -> (Vec<Match>, usize, usize) {
    let swap = canonical_key(a) > canonical_key(b);
    let (x, y) = if swap { (b, a) } else { (a, b) };
    let count_gaps = smm_params.is_none_or(|p| p.count_gap_tokens);
    let mut matches = match smm_params {
        None => greedy_string_tiling(x, y, params),
        Some(p) => {
            // Tiles below the cut-off only serve as merge neighbors: a merged
            // match survives if it contains a tile that reaches the cut-off.
            let neighbor = MatchParams {
                min_match_len: p.min_neighbor_len.clamp(1, params.min_match_len.max(1)),
            };
            let raw = greedy_string_tiling(x, y, neighbor);
            let anchors: Vec<&Match> = raw.iter().filter(|t| t.len_a >= params.min_match_len).collect();
            smm::merge_to_fixpoint(&raw, p)
                .expect("tiling output never overlaps")
                .into_iter()
                .filter(|m| anchors.iter().any(|t| t.start_a >= m.start_a && t.end_a() <= m.end_a()))
                .collect()
        }
    };
    if swap {
        matches = matches.into_iter().map(Match::swapped).collect();
        matches.sort_by_key(|m| (m.start_a, m.start_b));
    }
    let (ca, cb) = coverage(&matches, count_gaps);
    (matches, ca, cb)
}

/// A sequence ready for tiling, and whether normalization was applied.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub sequence: TokenSequence,
    pub tsn_applied: bool,
}

pub fn prepare(enriched: &EnrichedSequence, tsn: bool) -> Prepared {
    if tsn {
        match tsn::normalize(enriched) {
            Ok(seq) => {
                return Prepared {
                    sequence: seq,
                    tsn_applied: true,
                }
            }
            Err(e) => log::warn!("{}: {e}; comparing without normalization", enriched.sequence.program_id),
        }
    }
    Prepared {
        sequence: enriched.sequence.clone(),
        tsn_applied: false,
    }
}

pub fn compare_prepared(a: &Prepared, b: &Prepared, params: MatchParams, defenses: &DefenseConfig) -> ComparisonResult {
    let smm_params = defenses.smm.then_some(&defenses.smm_params);
    let (matches, coverage_a, coverage_b) = compare_sequences(&a.sequence, &b.sequence, params, smm_params);
    let (len_a, len_b) = (a.sequence.len(), b.sequence.len());
    let mut ran = Vec::new();
    let mut warnings = Vec::new();
    if defenses.tsn {
        if a.tsn_applied && b.tsn_applied {
            ran.push("tsn".to_string());
        } else {
            warnings.push("TsnUnavailable: normalization skipped, semantics missing".to_string());
        }
    }
    if defenses.smm {
        ran.push("smm".to_string());
    }
    ComparisonResult {
        id_a: a.sequence.program_id.clone(),
        id_b: b.sequence.program_id.clone(),
        matches,
        len_seq_a: len_a,
        len_seq_b: len_b,
        similarity: similarity_from_coverage(coverage_a, coverage_b, len_a, len_b),
        coverage_a,
        coverage_b,
        defenses: ran,
        warnings,
    }
}

/// Normalization only applies when both sides have semantics, so that the
/// two sequences live in the same token space.
pub fn compare_enriched(
    a: &EnrichedSequence,
    b: &EnrichedSequence,
    params: MatchParams,
    defenses: &DefenseConfig,
) -> ComparisonResult {
    let tsn = defenses.tsn && a.has_semantics() && b.has_semantics();
    compare_prepared(&prepare(a, tsn), &prepare(b, tsn), params, defenses)
}

pub fn compare(
    a: &Program,
    b: &Program,
    params: MatchParams,
    defenses: &DefenseConfig,
) -> Result<ComparisonResult, MatcherError> {
    let ea = tokenize_named(a)?;
    let eb = tokenize_named(b)?;
    Ok(compare_enriched(&ea, &eb, params, defenses))
}

fn tokenize_named(p: &Program) -> Result<EnrichedSequence, MatcherError> {
    tokenize(p).map_err(|source| MatcherError::Frontend {
        id: p.id.clone(),
        source,
    })
}

/// Compares every unordered pair of a corpus. Results are ordered by
/// `(id_a, id_b)` with `id_a < id_b`, independent of `jobs`.
pub fn compare_corpus(
    corpus: &[Program],
    params: MatchParams,
    defenses: &DefenseConfig,
    jobs: usize,
) -> Result<Vec<ComparisonResult>, MatcherError> {
    let mut ids = BTreeSet::new();
    for p in corpus {
        if !ids.insert(p.id.as_str()) {
            return Err(MatcherError::DuplicateProgramId(p.id.clone()));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| MatcherError::Pool(e.to_string()))?;
    pool.install(|| {
        let mut sorted: Vec<&Program> = corpus.iter().collect();
        sorted.sort_by(|x, y| x.id.cmp(&y.id));
        let enriched = sorted
            .par_iter()
            .map(|p| tokenize_named(p))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(compare_all_enriched(&enriched, params, defenses))
    })
}

/// All-pairs comparison over pre-tokenized programs, in input order pairs
/// `(i, j)` with `i < j`. Runs on the current rayon pool.
pub fn compare_all_enriched(
    enriched: &[EnrichedSequence],
    params: MatchParams,
    defenses: &DefenseConfig,
) -> Vec<ComparisonResult> {
    let all_semantic = enriched.iter().all(EnrichedSequence::has_semantics);
    let tsn = defenses.tsn && all_semantic;
    let prepared: Vec<Prepared> = enriched.par_iter().map(|e| prepare(e, tsn)).collect();
    let pairs: Vec<(usize, usize)> = (0..prepared.len())
        .flat_map(|i| (i + 1..prepared.len()).map(move |j| (i, j)))
        .collect();
    pairs
        .par_iter()
        .map(|&(i, j)| compare_prepared(&prepared[i], &prepared[j], params, defenses))
        .collect()
}
