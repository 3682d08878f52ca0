use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::StageId;
use crate::evaluation::{Candidate, Score};

/// Holdout results attached by the validation stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationScore {
    pub holdout_error: f64,
    pub weight: f64,
    pub final_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub key: String,
    pub candidate: Candidate,
    /// Internal (MCCV) score on the optimization data.
    pub score: Score,
    pub origin: StageId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation: Option<ValidationScore>,
}

/// Successfully scored candidates in insertion order, unique by key.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<ScoredCandidate>", into = "Vec<ScoredCandidate>")]
pub struct CandidatePool {
    entries: Vec<ScoredCandidate>,
    index: HashMap<String, usize>,
}

impl From<Vec<ScoredCandidate>> for CandidatePool {
    fn from(entries: Vec<ScoredCandidate>) -> Self {
        let mut pool = CandidatePool::new();
        for e in entries {
            pool.push(e);
        }
        pool
    }
}

impl From<CandidatePool> for Vec<ScoredCandidate> {
    fn from(pool: CandidatePool) -> Self {
        pool.entries
    }
}

impl CandidatePool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, key: &str) -> bool {
        self.index.contains_key(key)
    }

    pub fn get(&self, key: &str) -> Option<&ScoredCandidate> {
        self.index.get(key).map(|&i| &self.entries[i])
    }

    pub fn entries(&self) -> &[ScoredCandidate] {
        &self.entries
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.key.as_str())
    }

    /// Adds an ok-scored candidate with a new key; returns whether it was added.
    pub fn insert(&mut self, candidate: Candidate, score: Score, origin: StageId) -> bool {
        self.push(ScoredCandidate {
            key: candidate.key(),
            candidate,
            score,
            origin,
            validation: None,
        })
    }

    pub fn push(&mut self, entry: ScoredCandidate) -> bool {
        if !entry.score.is_ok() || self.index.contains_key(&entry.key) {
            return false;
        }
        self.index.insert(entry.key.clone(), self.entries.len());
        self.entries.push(entry);
        true
    }

    /// Entries by ascending internal mean; pool order breaks ties.
    pub fn ranked(&self) -> Vec<&ScoredCandidate> {
        let mut v: Vec<&ScoredCandidate> = self.entries.iter().collect();
        v.sort_by(|a, b| a.score.mean.total_cmp(&b.score.mean));
        v
    }

    /// Lowest internal mean; the earliest entry wins ties.
    pub fn best(&self) -> Option<&ScoredCandidate> {
        self.entries
            .iter()
            .fold(None, |best: Option<&ScoredCandidate>, e| match best {
                Some(b) if b.score.mean <= e.score.mean => Some(b),
                _ => Some(e),
            })
    }
}
