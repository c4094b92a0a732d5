use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::space::SimParams;
use super::SysidError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontMember {
    pub params: SimParams,
    pub l_exc: f64,
    pub w: f64,
}

impl FrontMember {
    /// No worse in both objectives and strictly better in one.
    pub fn dominates(&self, other: &Self) -> bool {
        self.l_exc <= other.l_exc && self.w <= other.w && (self.l_exc < other.l_exc || self.w < other.w)
    }
}

/// Non-dominated (φ, L_exc, W) triples, ordered by increasing L_exc.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ParetoFront {
    pub members: Vec<FrontMember>,
}

impl ParetoFront {
    /// Keeps the non-dominated candidates. Non-finite objectives are dropped.
    pub fn from_candidates(candidates: impl IntoIterator<Item = FrontMember>) -> Self {
        let all: Vec<FrontMember> = candidates
            .into_iter()
            .filter(|m| m.l_exc.is_finite() && m.w.is_finite())
            .collect();
        let mut members: Vec<FrontMember> = all
            .iter()
            .filter(|m| !all.iter().any(|o| o.dominates(m)))
            .cloned()
            .collect();
        members.sort_by(|a, b| a.l_exc.total_cmp(&b.l_exc).then(a.w.total_cmp(&b.w)));
        members.dedup_by(|a, b| a == b);
        Self { members }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// CSV `l_exc,w,param_0,...`.
    pub fn to_csv(&self) -> String {
        let d = self.members.first().map_or(0, |m| m.params.values.len());
        let mut out = String::from("l_exc,w");
        for i in 0..d {
            write!(out, ",param_{i}").unwrap();
        }
        out.push('\n');
        for m in &self.members {
            write!(out, "{:?},{:?}", m.l_exc, m.w).unwrap();
            for v in &m.params.values {
                write!(out, ",{v:?}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Picks the training φ from a front: the lowest-W member whose L_exc is
/// within twice the reference, or else the lowest-L_exc member.
pub fn select_operating_point(front: &ParetoFront, l_exc_ref: f64) -> Result<&FrontMember, SysidError> {
    let cap = 2.0 * l_exc_ref;
    front
        .members
        .iter()
        .filter(|m| m.l_exc <= cap)
        .min_by(|a, b| a.w.total_cmp(&b.w).then(a.l_exc.total_cmp(&b.l_exc)))
        .or_else(|| {
            front
                .members
                .iter()
                .min_by(|a, b| a.l_exc.total_cmp(&b.l_exc).then(a.w.total_cmp(&b.w)))
        })
        .ok_or(SysidError::EmptyFront)
}
