//! Test-time selection over a candidate pool: first candidate, majority vote
//! over execution clusters, execution-heuristic best-of-N, and verifier
//! best-of-N.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::scoring::CandidateScore;
use crate::sqlexec::Executed;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    BaselineFirst,
    Majority,
    ExBon,
    OrmBon,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::BaselineFirst, Strategy::Majority, Strategy::ExBon, Strategy::OrmBon];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::BaselineFirst => "baseline-first",
            Strategy::Majority => "majority",
            Strategy::ExBon => "ex-bon",
            Strategy::OrmBon => "orm-bon",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| format!("unknown strategy `{s}` (expected baseline-first, majority, ex-bon or orm-bon)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum SelectionError {
    #[error("cannot select from an empty pool")]
    EmptyPool,
    #[error("{found} scores for a pool of {expected}")]
    ScoreCount { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    /// Pool index whose result set represents the cluster.
    pub representative: usize,
    pub members: Vec<usize>,
    /// `false` only for the optional cluster of non-executable candidates.
    pub executable: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterPartition {
    pub clusters: Vec<Cluster>,
    pub excluded: Vec<usize>,
}

impl ClusterPartition {
    pub fn pool_len(&self) -> usize {
        self.clusters.iter().map(|c| c.members.len()).sum::<usize>() + self.excluded.len()
    }
}

/// Groups executable candidates by result-set equality. Clusters are ordered
/// by their first member. Non-executable candidates go to `excluded`, or form
/// one extra cluster when `include_errors` is set.
pub fn partition_by_execution<O: Executed>(outcomes: &[O], include_errors: bool) -> ClusterPartition {
    let mut clusters: Vec<Cluster> = Vec::new();
    let mut excluded = Vec::new();
    for (i, outcome) in outcomes.iter().enumerate() {
        if !outcome.executed() {
            excluded.push(i);
            continue;
        }
        let home = clusters.iter_mut().find(|c| outcomes[c.representative].same_result(outcome));
        match home {
            Some(c) => c.members.push(i),
            None => clusters.push(Cluster { representative: i, members: vec![i], executable: true }),
        }
    }
    if include_errors && !excluded.is_empty() {
        let first = excluded[0];
        let pos = clusters.iter().position(|c| c.members[0] > first).unwrap_or(clusters.len());
        clusters.insert(pos, Cluster { representative: first, members: std::mem::take(&mut excluded), executable: false });
    }
    ClusterPartition { clusters, excluded }
}

/// Heuristic ladder: 0 not executable, 0.5 executes with no rows, 1 otherwise.
pub fn heuristic_h<O: Executed>(outcome: &O) -> f64 {
    if !outcome.executed() {
        0.0
    } else if outcome.empty_result() {
        0.5
    } else {
        1.0
    }
}

/// Per-question seed for the sampling strategies, from the run seed, the pool
/// prefix length and the question id.
pub fn derive_seed(base: u64, n: usize, question_id: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(base.to_le_bytes());
    h.update((n as u64).to_le_bytes());
    h.update(question_id.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Uniform index in `0..len` from a ChaCha8 stream seeded with `seed`.
pub fn uniform_draw(seed: u64, len: usize) -> usize {
    ChaCha8Rng::seed_from_u64(seed).gen_range(0..len)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evidence {
    None,
    ClusterSizes(Vec<usize>),
    HeuristicScores(Vec<f64>),
    OrmScores(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub strategy: Strategy,
    pub chosen_index: usize,
    pub evidence: Evidence,
    pub rng_seed_used: u64,
}

pub fn select_baseline_first(pool_len: usize) -> Result<SelectionResult, SelectionError> {
    if pool_len == 0 {
        return Err(SelectionError::EmptyPool);
    }
    Ok(SelectionResult { strategy: Strategy::BaselineFirst, chosen_index: 0, evidence: Evidence::None, rng_seed_used: 0 })
}

/// Samples uniformly from the largest cluster (earliest cluster on ties).
/// Falls back to index 0 when there are no clusters.
pub fn select_majority(partition: &ClusterPartition, seed: u64) -> Result<SelectionResult, SelectionError> {
    if partition.pool_len() == 0 {
        return Err(SelectionError::EmptyPool);
    }
    let sizes: Vec<usize> = partition.clusters.iter().map(|c| c.members.len()).collect();
    let mut best: Option<&Cluster> = None;
    for c in &partition.clusters {
        if best.map_or(true, |b| c.members.len() > b.members.len()) {
            best = Some(c);
        }
    }
    let chosen_index = match best {
        Some(c) => c.members[uniform_draw(seed, c.members.len())],
        None => 0,
    };
    Ok(SelectionResult { strategy: Strategy::Majority, chosen_index, evidence: Evidence::ClusterSizes(sizes), rng_seed_used: seed })
}

/// Samples uniformly among the candidates with maximal [`heuristic_h`].
pub fn select_ex_bon<O: Executed>(outcomes: &[O], seed: u64) -> Result<SelectionResult, SelectionError> {
    if outcomes.is_empty() {
        return Err(SelectionError::EmptyPool);
    }
    let h: Vec<f64> = outcomes.iter().map(|o| heuristic_h(o)).collect();
    let top = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let argmax: Vec<usize> = (0..h.len()).filter(|&i| h[i] == top).collect();
    let chosen_index = argmax[uniform_draw(seed, argmax.len())];
    Ok(SelectionResult { strategy: Strategy::ExBon, chosen_index, evidence: Evidence::HeuristicScores(h), rng_seed_used: seed })
}

/// Highest `p_yes` wins, lowest index on ties. With `eligible`, only
/// candidates marked `true` compete, unless none is.
pub fn select_orm_bon(scores: &[CandidateScore], eligible: Option<&[bool]>) -> Result<SelectionResult, SelectionError> {
    if scores.is_empty() {
        return Err(SelectionError::EmptyPool);
    }
    if let Some(mask) = eligible {
        if mask.len() != scores.len() {
            return Err(SelectionError::ScoreCount { expected: mask.len(), found: scores.len() });
        }
    }
    let allowed = |i: usize| eligible.map_or(true, |m| m[i] || !m.iter().any(|&e| e));
    let mut chosen: Option<usize> = None;
    for (i, s) in scores.iter().enumerate() {
        if allowed(i) && chosen.map_or(true, |c| s.p_yes > scores[c].p_yes) {
            chosen = Some(i);
        }
    }
    Ok(SelectionResult {
        strategy: Strategy::OrmBon,
        chosen_index: chosen.expect("at least one candidate allowed"),
        evidence: Evidence::OrmScores(scores.iter().map(|s| s.p_yes).collect()),
        rng_seed_used: 0,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionOptions {
    pub maj_include_errors: bool,
    pub prefilter_executable: bool,
}

/// Runs one strategy on a pool prefix. `scores` is only read by
/// [`Strategy::OrmBon`].
pub fn run_strategy<O: Executed>(
    strategy: Strategy,
    outcomes: &[O],
    scores: &[CandidateScore],
    seed: u64,
    opts: SelectionOptions,
) -> Result<SelectionResult, SelectionError> {
    match strategy {
        Strategy::BaselineFirst => select_baseline_first(outcomes.len()),
        Strategy::Majority => select_majority(&partition_by_execution(outcomes, opts.maj_include_errors), seed),
        Strategy::ExBon => select_ex_bon(outcomes, seed),
        Strategy::OrmBon => {
            if scores.len() != outcomes.len() {
                return Err(SelectionError::ScoreCount { expected: outcomes.len(), found: scores.len() });
            }
            let mask: Vec<bool> = outcomes.iter().map(Executed::executed).collect();
            select_orm_bon(scores, opts.prefilter_executable.then_some(mask.as_slice()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sqlexec::{canonicalize_result, ExecutionOutcome, Value};

    fn rs(v: i64) -> ExecutionOutcome {
        ExecutionOutcome::Ok(canonicalize_result(vec!["a".into()], vec![vec![Value::Integer(v)]]).unwrap())
    }

    fn empty() -> ExecutionOutcome {
        ExecutionOutcome::Ok(canonicalize_result(vec!["a".into()], vec![]).unwrap())
    }

    fn err() -> ExecutionOutcome {
        ExecutionOutcome::Error("no such column".into())
    }

    fn scores(p: &[f64]) -> Vec<CandidateScore> {
        p.iter().enumerate().map(|(i, &p_yes)| CandidateScore { candidate_index: i, p_yes }).collect()
    }

    fn members(p: &ClusterPartition) -> Vec<Vec<usize>> {
        p.clusters.iter().map(|c| c.members.clone()).collect()
    }

    #[test]
    fn partition_examples() {
        assert_eq!(members(&partition_by_execution(&[rs(1), rs(1), rs(2)], false)), vec![vec![0, 1], vec![2]]);
        let p = partition_by_execution(&[rs(1), err(), rs(1)], false);
        assert_eq!(members(&p), vec![vec![0, 2]]);
        assert_eq!(p.excluded, vec![1]);
        let p = partition_by_execution(&[err(), ExecutionOutcome::Timeout], false);
        assert!(p.clusters.is_empty());
        assert_eq!(p.excluded, vec![0, 1]);
    }

    #[test]
    fn errors_can_form_their_own_cluster() {
        let p = partition_by_execution(&[rs(1), err(), err(), rs(2), err()], true);
        assert_eq!(members(&p), vec![vec![0], vec![1, 2, 4], vec![3]]);
        assert!(p.excluded.is_empty());
        assert!([1, 2, 4].contains(&select_majority(&p, 7).unwrap().chosen_index));
    }

    #[test]
    fn majority_examples() {
        let p = partition_by_execution(&[rs(1), rs(1), rs(2)], false);
        assert!([0, 1].contains(&select_majority(&p, 42).unwrap().chosen_index));

        let tie = partition_by_execution(&[rs(1), rs(2), rs(1), rs(2), rs(1), rs(2)], false);
        for seed in 0..20 {
            assert!([0, 2, 4].contains(&select_majority(&tie, seed).unwrap().chosen_index));
        }

        let none = partition_by_execution(&[err(), err()], false);
        assert_eq!(select_majority(&none, 1).unwrap().chosen_index, 0);
        assert_eq!(select_majority(&partition_by_execution::<ExecutionOutcome>(&[], false), 1), Err(SelectionError::EmptyPool));
    }

    #[test]
    fn majority_seeded_draw_matches_replay() {
        let (a, b) = (rs(1), rs(2));
        let outcomes = [a.clone(), b, a.clone(), a, err()];
        let p = partition_by_execution(&outcomes, false);
        // Brute-force partition: indices whose outcome equals index 0's.
        let biggest: Vec<usize> = (0..5).filter(|&i| outcomes[i] == outcomes[0]).collect();
        assert_eq!(biggest, vec![0, 2, 3]);
        let replay = biggest[ChaCha8Rng::seed_from_u64(42).gen_range(0..biggest.len())];
        let chosen = select_majority(&p, 42).unwrap();
        assert_eq!(chosen.chosen_index, replay);
        assert_eq!(chosen.evidence, Evidence::ClusterSizes(vec![3, 1]));
    }

    #[test]
    fn heuristic_ladder() {
        assert_eq!(heuristic_h(&err()), 0.0);
        assert_eq!(heuristic_h(&ExecutionOutcome::Timeout), 0.0);
        assert_eq!(heuristic_h(&empty()), 0.5);
        let three = canonicalize_result(vec!["a".into()], (0..3).map(|i| vec![Value::Integer(i)]).collect()).unwrap();
        assert_eq!(heuristic_h(&ExecutionOutcome::Ok(three)), 1.0);
    }

    #[test]
    fn ex_bon_examples() {
        for seed in 0..20 {
            assert!([0, 2].contains(&select_ex_bon(&[rs(1), empty(), rs(3)], seed).unwrap().chosen_index));
        }
        let seen: std::collections::BTreeSet<usize> =
            (0..200).map(|s| select_ex_bon(&[err(), err(), err()], s).unwrap().chosen_index).collect();
        assert_eq!(seen.into_iter().collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!(select_ex_bon(&[err()], 5).unwrap().chosen_index, 0);
    }

    #[test]
    fn orm_examples() {
        assert_eq!(select_orm_bon(&scores(&[0.2, 0.9, 0.9]), None).unwrap().chosen_index, 1);
        assert_eq!(select_orm_bon(&scores(&[0.5, 0.5, 0.5]), None).unwrap().chosen_index, 0);
        assert_eq!(select_orm_bon(&scores(&[0.0, 0.0, 1.0, 0.0]), None).unwrap().chosen_index, 2);
        assert_eq!(select_orm_bon(&[], None), Err(SelectionError::EmptyPool));
    }

    #[test]
    fn orm_prefilter() {
        let s = scores(&[0.9, 0.3, 0.5]);
        assert_eq!(select_orm_bon(&s, Some(&[false, true, true])).unwrap().chosen_index, 2);
        assert_eq!(select_orm_bon(&s, Some(&[false, false, false])).unwrap().chosen_index, 0);
    }

    #[test]
    fn baseline_is_first() {
        assert_eq!(select_baseline_first(8).unwrap().chosen_index, 0);
        assert_eq!(select_baseline_first(1).unwrap().chosen_index, 0);
        assert_eq!(select_baseline_first(0), Err(SelectionError::EmptyPool));
    }

    #[test]
    fn derived_seeds_differ_by_component() {
        let s = derive_seed(42, 8, "q1");
        assert_eq!(s, derive_seed(42, 8, "q1"));
        assert_ne!(s, derive_seed(42, 4, "q1"));
        assert_ne!(s, derive_seed(42, 8, "q2"));
        assert_ne!(s, derive_seed(7, 8, "q1"));
    }
}
