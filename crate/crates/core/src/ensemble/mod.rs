//! Per-field majority voting over several extractors.
//!
//! Each of the four fields is voted independently. Candidates are grouped
//! with [`values_match`], so "EVD" and "Ebola virus disease" are one vote,
//! and an absent value is a candidate like any other: two members saying
//! "nothing" outvote one member with a value.

mod record;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub use record::{ExtractionRecord, Extracted, FieldWarning, RecordFlags};

use crate::normalize::{values_match, Field, FieldValue};

/// Members of the default open-model ensemble, in priority order.
pub const OPEN_ENSEMBLE_MEMBERS: [&str; 3] = ["Llama-2-70b-chat", "Mistral-7b-openorca", "Zephyr-7b-alpha"];
pub const OPEN_ENSEMBLE_ID: &str = "Open-Ensemble";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// The tied group holding the highest-priority member wins.
    #[default]
    PriorityOrder,
    /// A tie yields an absent value.
    Abstain,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VotePolicy {
    pub min_agreement: usize,
    pub tie_break: TieBreak,
    /// Member ids, highest priority first. Empty means member order.
    #[serde(default)]
    pub priority: Vec<String>,
}

impl Default for VotePolicy {
    fn default() -> Self {
        VotePolicy { min_agreement: 2, tie_break: TieBreak::PriorityOrder, priority: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EnsembleError {
    #[error("an ensemble needs at least 2 members, got {0}")]
    TooFewMembers(usize),
    #[error("member `{0}` is listed twice")]
    DuplicateMember(String),
    #[error("min_agreement must be between 1 and {members}, got {min_agreement}")]
    MinAgreement { min_agreement: usize, members: usize },
    #[error("priority order must list every member exactly once; `{0}` is missing or unknown")]
    Priority(String),
    #[error("expected {expected} candidates (one per member), got {got}")]
    CandidateCount { expected: usize, got: usize },
    #[error("no record from member `{0}`")]
    MissingMember(String),
    #[error("record from `{0}`, which is not a member or appears twice")]
    UnexpectedRecord(String),
    #[error("records mix documents `{0}` and `{1}`")]
    MixedDocuments(String, String),
}

/// A validated ensemble definition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnsembleConfig {
    pub id: String,
    pub members: Vec<String>,
    pub policy: VotePolicy,
    ranks: Vec<usize>,
}

impl EnsembleConfig {
    pub fn new(id: impl Into<String>, members: Vec<String>, policy: VotePolicy) -> Result<Self, EnsembleError> {
        if members.len() < 2 {
            return Err(EnsembleError::TooFewMembers(members.len()));
        }
        for (i, m) in members.iter().enumerate() {
            if members[..i].contains(m) {
                return Err(EnsembleError::DuplicateMember(m.clone()));
            }
        }
        if policy.min_agreement == 0 || policy.min_agreement > members.len() {
            return Err(EnsembleError::MinAgreement { min_agreement: policy.min_agreement, members: members.len() });
        }
        let ranks = if policy.priority.is_empty() {
            (0..members.len()).collect()
        } else {
            if policy.priority.len() != members.len() {
                let missing = members.iter().find(|m| !policy.priority.contains(m));
                let extra = policy.priority.iter().find(|p| !members.contains(p));
                let name = missing.or(extra).unwrap_or(&policy.priority[0]);
                return Err(EnsembleError::Priority(name.clone()));
            }
            members
                .iter()
                .map(|m| {
                    policy.priority.iter().position(|p| p == m).ok_or_else(|| EnsembleError::Priority(m.clone()))
                })
                .collect::<Result<Vec<_>, _>>()?
        };
        Ok(EnsembleConfig { id: id.into(), members, policy, ranks })
    }

    /// Llama-2-70b-chat, Mistral-7b-openorca and Zephyr-7b-alpha, 2 of 3,
    /// ties to the first listed.
    pub fn open_ensemble() -> Self {
        let members = OPEN_ENSEMBLE_MEMBERS.iter().map(|s| s.to_string()).collect();
        EnsembleConfig::new(OPEN_ENSEMBLE_ID, members, VotePolicy::default()).expect("default ensemble is valid")
    }

    /// Priority rank of each member position (0 = highest).
    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    /// Index of the member whose value wins, or `None` when the vote yields
    /// an absent value.
    fn winner(&self, field: Field, candidates: &[Option<FieldValue>]) -> Result<Option<usize>, EnsembleError> {
        if candidates.len() != self.members.len() {
            return Err(EnsembleError::CandidateCount { expected: self.members.len(), got: candidates.len() });
        }
        // each group lists member positions sharing one value (or absence)
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for (i, cand) in candidates.iter().enumerate() {
            let home = groups.iter_mut().find(|g| match (&candidates[g[0]], cand) {
                (None, None) => true,
                (Some(a), Some(b)) => values_match(field, a, b),
                _ => false,
            });
            match home {
                Some(g) => g.push(i),
                None => groups.push(vec![i]),
            }
        }
        let largest = groups.iter().map(Vec::len).max().unwrap_or(0);
        let tied: Vec<&Vec<usize>> = groups.iter().filter(|g| g.len() == largest).collect();
        let best_member = |g: &Vec<usize>| g.iter().copied().min_by_key(|&i| self.ranks[i]).unwrap();

        let winning_group = if tied.len() == 1 && largest >= self.policy.min_agreement {
            tied[0]
        } else {
            match self.policy.tie_break {
                TieBreak::Abstain => return Ok(None),
                TieBreak::PriorityOrder => *tied.iter().min_by_key(|g| self.ranks[best_member(g)]).unwrap(),
            }
        };
        let member = best_member(winning_group);
        Ok(candidates[member].as_ref().map(|_| member))
    }

    /// Votes one field. `candidates` holds one value per member, in member
    /// order.
    pub fn vote_field(&self, field: Field, candidates: &[Option<FieldValue>]) -> Result<Option<FieldValue>, EnsembleError> {
        Ok(self.winner(field, candidates)?.and_then(|i| candidates[i].clone()))
    }

    /// Combines one record per member (any order) for a single document.
    /// The winning raw text is taken from the highest-priority member of the
    /// winning group.
    pub fn combine(&self, records: &[ExtractionRecord]) -> Result<ExtractionRecord, EnsembleError> {
        let mut by_member: HashMap<&str, &ExtractionRecord> = HashMap::new();
        for r in records {
            if !self.members.contains(&r.extractor_id) || by_member.insert(&r.extractor_id, r).is_some() {
                return Err(EnsembleError::UnexpectedRecord(r.extractor_id.clone()));
            }
        }
        let ordered = self
            .members
            .iter()
            .map(|m| by_member.get(m.as_str()).copied().ok_or_else(|| EnsembleError::MissingMember(m.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        let doc_id = &ordered[0].document_id;
        if let Some(other) = ordered.iter().find(|r| &r.document_id != doc_id) {
            return Err(EnsembleError::MixedDocuments(doc_id.clone(), other.document_id.clone()));
        }

        let mut out = ExtractionRecord::empty(doc_id, &self.id);
        for field in Field::ALL {
            let candidates: Vec<Option<FieldValue>> = ordered.iter().map(|r| r.value(field)).collect();
            let won = self.winner(field, &candidates)?.map(|i| {
                let raw = ordered[i].raw(field).unwrap_or_default().to_string();
                (raw, candidates[i].clone().expect("winner has a value"))
            });
            out.set(field, won);
        }
        out.flags.truncated_input = ordered.iter().any(|r| r.flags.truncated_input);
        out.flags.parse_failure = ordered.iter().all(|r| r.flags.parse_failure);
        Ok(out)
    }
}

/// Free-function form of [`EnsembleConfig::vote_field`].
pub fn vote_field(
    field: Field,
    candidates: &[Option<FieldValue>],
    config: &EnsembleConfig,
) -> Result<Option<FieldValue>, EnsembleError> {
    config.vote_field(field, candidates)
}

/// Free-function form of [`EnsembleConfig::combine`].
pub fn ensemble_records(records: &[ExtractionRecord], config: &EnsembleConfig) -> Result<ExtractionRecord, EnsembleError> {
    config.combine(records)
}
