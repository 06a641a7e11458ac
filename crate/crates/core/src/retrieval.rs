//! Cross-modal ranking: propagated two-source scores read as correlation
//! coefficients, sorted per query.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::propagation::PropagatedConstraints;

/// Which modality an index refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceTag {
    X,
    Y,
}

/// Query side for a ranking: `XToY` ranks Y candidates for an X query
/// (a row of the score matrix), `YToX` the reverse (a column).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankingDirection {
    XToY,
    YToX,
}

impl RankingDirection {
    pub fn query_source(self) -> SourceTag {
        match self {
            RankingDirection::XToY => SourceTag::X,
            RankingDirection::YToX => SourceTag::Y,
        }
    }
}

/// One query's candidates ordered by non-increasing score; every candidate
/// index appears exactly once.
#[derive(Debug, Clone, PartialEq)]
pub struct RankingResult {
    query: (SourceTag, usize),
    ranked: Vec<(usize, f64)>,
}

impl RankingResult {
    pub fn query(&self) -> (SourceTag, usize) {
        self.query
    }

    pub fn ranked(&self) -> &[(usize, f64)] {
        &self.ranked
    }

    /// Candidate indices in rank order.
    pub fn items(&self) -> impl Iterator<Item = usize> + '_ {
        self.ranked.iter().map(|&(item, _)| item)
    }

    pub fn len(&self) -> usize {
        self.ranked.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranked.is_empty()
    }
}

/// Rank the opposite modality's candidates for one query by descending
/// propagated score, ties broken toward the smaller candidate index.
pub fn rank_cross_modal(
    f: &PropagatedConstraints,
    query_index: usize,
    direction: RankingDirection,
) -> Result<RankingResult> {
    let (bound, candidates) = match direction {
        RankingDirection::XToY => (f.rows(), f.cols()),
        RankingDirection::YToX => (f.cols(), f.rows()),
    };
    if query_index >= bound {
        return Err(Error::InvalidInput(format!(
            "query index {query_index} out of bounds for {bound} items"
        )));
    }
    let mut ranked: Vec<(usize, f64)> = (0..candidates)
        .map(|j| {
            let score = match direction {
                RankingDirection::XToY => f.values()[(query_index, j)],
                RankingDirection::YToX => f.values()[(j, query_index)],
            };
            (j, score)
        })
        .collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    Ok(RankingResult {
        query: (direction.query_source(), query_index),
        ranked,
    })
}

/// Rankings for every query on one side, computed concurrently.
pub fn rank_all(f: &PropagatedConstraints, direction: RankingDirection) -> Result<Vec<RankingResult>> {
    let queries = match direction {
        RankingDirection::XToY => f.rows(),
        RankingDirection::YToX => f.cols(),
    };
    (0..queries)
        .into_par_iter()
        .map(|q| rank_cross_modal(f, q, direction))
        .collect()
}
