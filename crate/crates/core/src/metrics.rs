//! Evaluation: adjusted Rand index for partitions, mean average precision
//! for rankings, and the serializable report wrapper.

use std::collections::HashSet;

use serde::Serialize;

use crate::clustering::Partition;
use crate::error::{Error, Result};
use crate::retrieval::RankingResult;

/// One evaluated metric, optionally averaged over repeated runs.
/// `value` is the arithmetic mean of `per_run` when runs are present.
#[derive(Debug, Clone, Serialize)]
pub struct EvaluationReport {
    pub metric: String,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_run: Option<Vec<f64>>,
    pub seeds: Vec<u64>,
}

impl EvaluationReport {
    pub fn single(metric: impl Into<String>, value: f64, seed: u64) -> Self {
        EvaluationReport {
            metric: metric.into(),
            value,
            per_run: None,
            seeds: vec![seed],
        }
    }

    pub fn from_runs(metric: impl Into<String>, per_run: Vec<f64>, seeds: Vec<u64>) -> Result<Self> {
        if per_run.is_empty() {
            return Err(Error::InvalidInput("report needs at least one run".into()));
        }
        if seeds.len() != per_run.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} run values but {} seeds",
                per_run.len(),
                seeds.len()
            )));
        }
        let value = per_run.iter().sum::<f64>() / per_run.len() as f64;
        Ok(EvaluationReport {
            metric: metric.into(),
            value,
            per_run: Some(per_run),
            seeds,
        })
    }
}

fn pairs2(x: f64) -> f64 {
    x * (x - 1.0) / 2.0
}

/// Hubert-Arabie adjusted Rand index between two partitions of the same
/// items, in [-1, 1]; 1 means identical up to label names, near 0 means
/// chance-level agreement.
pub fn adjusted_rand_index(a: &Partition, b: &Partition) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "partitions cover {} and {} items",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::InvalidInput(
            "adjusted Rand index needs at least 2 items".into(),
        ));
    }
    let ka = a.k();
    let kb = b.k();
    let mut contingency = vec![0u64; ka * kb];
    let mut rows = vec![0u64; ka];
    let mut cols = vec![0u64; kb];
    for (&ca, &cb) in a.assignment().iter().zip(b.assignment()) {
        contingency[ca * kb + cb] += 1;
        rows[ca] += 1;
        cols[cb] += 1;
    }
    let sum_cells: f64 = contingency.iter().map(|&c| pairs2(c as f64)).sum();
    let sum_rows: f64 = rows.iter().map(|&c| pairs2(c as f64)).sum();
    let sum_cols: f64 = cols.iter().map(|&c| pairs2(c as f64)).sum();
    let expected = sum_rows * sum_cols / pairs2(n as f64);
    let maximum = 0.5 * (sum_rows + sum_cols);
    let denom = maximum - expected;
    if denom.abs() < 1e-12 {
        // Both partitions are all-singletons or both one big cluster: they
        // agree perfectly and the index degenerates to 0/0.
        return Ok(1.0);
    }
    Ok((sum_cells - expected) / denom)
}

/// Precision at each relevant item's rank, averaged over the relevant
/// items. Errors when the relevance set is empty or names an item the
/// ranking does not contain.
pub fn average_precision(ranking: &RankingResult, relevant: &HashSet<usize>) -> Result<f64> {
    if relevant.is_empty() {
        return Err(Error::InvalidInput(format!(
            "query {:?} has no relevant item",
            ranking.query()
        )));
    }
    let mut hits = 0usize;
    let mut acc = 0.0;
    for (pos, item) in ranking.items().enumerate() {
        if relevant.contains(&item) {
            hits += 1;
            acc += hits as f64 / (pos + 1) as f64;
        }
    }
    if hits != relevant.len() {
        return Err(Error::InvalidInput(format!(
            "ranking for query {:?} is missing {} relevant items",
            ranking.query(),
            relevant.len() - hits
        )));
    }
    Ok(acc / relevant.len() as f64)
}

/// Mean of per-query average precisions.
pub fn mean_average_precision(
    rankings: &[RankingResult],
    relevance: &[HashSet<usize>],
) -> Result<f64> {
    if rankings.is_empty() {
        return Err(Error::InvalidInput("no rankings to evaluate".into()));
    }
    if rankings.len() != relevance.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} rankings but {} relevance sets",
            rankings.len(),
            relevance.len()
        )));
    }
    let mut total = 0.0;
    for (r, rel) in rankings.iter().zip(relevance) {
        total += average_precision(r, rel)?;
    }
    Ok(total / rankings.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagation::PropagatedConstraints;
    use crate::retrieval::{rank_cross_modal, RankingDirection};
    use ndarray::Array2;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn part(labels: &[usize]) -> Partition {
        Partition::from_labels(labels).unwrap()
    }

    /// Pair-counting oracle: classify every item pair as together or apart
    /// in each partition, then 2(ad - bc) / ((a+b)(b+d) + (a+c)(c+d)).
    fn ari_pairs(a: &Partition, b: &Partition) -> f64 {
        let n = a.len();
        let (mut tt, mut ts, mut st, mut ss) = (0.0f64, 0.0, 0.0, 0.0);
        for i in 0..n {
            for j in 0..i {
                let in_a = a.assignment()[i] == a.assignment()[j];
                let in_b = b.assignment()[i] == b.assignment()[j];
                match (in_a, in_b) {
                    (true, true) => tt += 1.0,
                    (true, false) => ts += 1.0,
                    (false, true) => st += 1.0,
                    (false, false) => ss += 1.0,
                }
            }
        }
        let denom = (tt + ts) * (ts + ss) + (tt + st) * (st + ss);
        if denom == 0.0 {
            return 1.0;
        }
        2.0 * (tt * ss - ts * st) / denom
    }

    #[test]
    fn identical_partitions_score_one() {
        let a = part(&[0, 0, 1, 1, 2]);
        assert_eq!(adjusted_rand_index(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn label_permutation_scores_one() {
        let a = part(&[0, 0, 1, 1, 2, 2]);
        let b = part(&[2, 2, 0, 0, 1, 1]);
        assert!((adjusted_rand_index(&a, &b).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn crossed_partition_matches_pair_counting_oracle() {
        let a = part(&[0, 0, 1, 1]);
        let b = part(&[0, 1, 0, 1]);
        let ari = adjusted_rand_index(&a, &b).unwrap();
        assert!((ari - ari_pairs(&a, &b)).abs() < 1e-12);
        // Contingency is uniform 1s: index 0, expected 2/3, maximum 2.
        assert!((ari - (-0.5)).abs() < 1e-12);
    }

    #[test]
    fn random_partitions_match_oracle_and_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = rng.random_range(5..40);
            let ka = rng.random_range(2..5);
            let kb = rng.random_range(2..5);
            let la: Vec<usize> = (0..n).map(|_| rng.random_range(0..ka)).collect();
            let lb: Vec<usize> = (0..n).map(|_| rng.random_range(0..kb)).collect();
            let a = Partition::new(la, ka).unwrap();
            let b = Partition::new(lb, kb).unwrap();
            let ab = adjusted_rand_index(&a, &b).unwrap();
            let ba = adjusted_rand_index(&b, &a).unwrap();
            assert!((ab - ba).abs() < 1e-12, "asymmetric: {ab} vs {ba}");
            assert!((ab - ari_pairs(&a, &b)).abs() < 1e-10, "oracle mismatch");
            assert!((-1.0..=1.0).contains(&ab));

            // Relabeling either argument changes nothing.
            let swap: Vec<usize> = a.assignment().iter().map(|&c| (c + 1) % ka).collect();
            let a2 = Partition::new(swap, ka).unwrap();
            let relabeled = adjusted_rand_index(&a2, &b).unwrap();
            assert!((relabeled - ab).abs() < 1e-12);
        }
    }

    #[test]
    fn random_partitions_average_near_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut sum = 0.0;
        for _ in 0..1000 {
            let la: Vec<usize> = (0..100).map(|_| rng.random_range(0..4)).collect();
            let lb: Vec<usize> = (0..100).map(|_| rng.random_range(0..4)).collect();
            let a = Partition::new(la, 4).unwrap();
            let b = Partition::new(lb, 4).unwrap();
            sum += adjusted_rand_index(&a, &b).unwrap();
        }
        let mean = sum / 1000.0;
        assert!(mean.abs() < 0.02, "chance-level mean drifted to {mean}");
    }

    #[test]
    fn ari_degenerate_and_error_cases() {
        let singletons = part(&[0, 1, 2, 3]);
        assert_eq!(adjusted_rand_index(&singletons, &singletons).unwrap(), 1.0);
        let lumped = part(&[0, 0, 0, 0]);
        assert_eq!(adjusted_rand_index(&lumped, &lumped).unwrap(), 1.0);

        let short = part(&[0, 1]);
        assert!(adjusted_rand_index(&short, &singletons).is_err());
        let tiny = part(&[0]);
        assert!(adjusted_rand_index(&tiny, &tiny).is_err());
    }

    fn ranking_from_row(row: Vec<f64>) -> RankingResult {
        let m = row.len();
        let f =
            PropagatedConstraints::from_values(Array2::from_shape_vec((1, m), row).unwrap())
                .unwrap();
        rank_cross_modal(&f, 0, RankingDirection::XToY).unwrap()
    }

    fn rel(items: &[usize]) -> HashSet<usize> {
        items.iter().copied().collect()
    }

    /// Definition-level oracle: for each relevant item, count relevant
    /// items at or above its position and divide by the position.
    fn ap_oracle(r: &RankingResult, relevant: &HashSet<usize>) -> f64 {
        let order: Vec<usize> = r.items().collect();
        let mut total = 0.0;
        for (pos, item) in order.iter().enumerate() {
            if relevant.contains(item) {
                let above = order[..=pos]
                    .iter()
                    .filter(|x| relevant.contains(x))
                    .count();
                total += above as f64 / (pos + 1) as f64;
            }
        }
        total / relevant.len() as f64
    }

    #[test]
    fn all_relevant_first_gives_one() {
        let r = ranking_from_row(vec![0.9, 0.8, 0.1, 0.0]);
        assert_eq!(average_precision(&r, &rel(&[0, 1])).unwrap(), 1.0);
    }

    #[test]
    fn single_relevant_at_rank_r_gives_reciprocal() {
        let r = ranking_from_row(vec![0.9, 0.5, 0.3]);
        assert!((average_precision(&r, &rel(&[2])).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        for target in 0..3 {
            let ap = average_precision(&r, &rel(&[target])).unwrap();
            assert!((ap - 1.0 / (target as f64 + 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn second_and_fourth_relevant_gives_half() {
        // Descending scores, so item index = rank position.
        let r = ranking_from_row(vec![0.9, 0.7, 0.5, 0.3, 0.1]);
        let relevant = rel(&[1, 3]);
        let ap = average_precision(&r, &relevant).unwrap();
        assert!((ap - 0.5).abs() < 1e-15);
        assert!((ap - ap_oracle(&r, &relevant)).abs() < 1e-15);
    }

    #[test]
    fn random_rankings_match_definition_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let m = rng.random_range(2..15);
            let row: Vec<f64> = (0..m).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let r = ranking_from_row(row);
            let count = rng.random_range(1..=m);
            let mut relevant = HashSet::new();
            while relevant.len() < count {
                relevant.insert(rng.random_range(0..m));
            }
            let ap = average_precision(&r, &relevant).unwrap();
            assert!((ap - ap_oracle(&r, &relevant)).abs() < 1e-12);
            assert!((0.0..=1.0).contains(&ap));
        }
    }

    #[test]
    fn map_is_one_exactly_when_relevant_lead() {
        // Relevant items carry the top scores.
        let perfect = vec![
            ranking_from_row(vec![0.9, 0.8, -0.5, -0.9]),
            ranking_from_row(vec![-0.2, 0.7, -0.8, -0.9]),
        ];
        let relevance = vec![rel(&[0, 1]), rel(&[1])];
        assert_eq!(mean_average_precision(&perfect, &relevance).unwrap(), 1.0);

        // One irrelevant item slips above a relevant one.
        let flawed = vec![
            ranking_from_row(vec![0.9, -0.5, 0.8, -0.9]),
            ranking_from_row(vec![-0.2, 0.7, -0.8, -0.9]),
        ];
        let map = mean_average_precision(&flawed, &relevance).unwrap();
        assert!(map < 1.0);
    }

    #[test]
    fn map_input_validation() {
        let r = ranking_from_row(vec![0.5, 0.1]);
        assert!(average_precision(&r, &rel(&[])).is_err());
        assert!(average_precision(&r, &rel(&[5])).is_err());
        assert!(mean_average_precision(&[], &[]).is_err());
        assert!(mean_average_precision(&[r], &[]).is_err());
    }

    #[test]
    fn report_mean_and_serialization() {
        let report =
            EvaluationReport::from_runs("ari", vec![0.5, 0.7, 0.9], vec![1, 2, 3]).unwrap();
        assert!((report.value - 0.7).abs() < 1e-15);
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains("\"metric\":\"ari\""));
        assert!(json.contains("per_run"));

        let single = EvaluationReport::single("map", 0.25, 7);
        let json = serde_json::to_string(&single).unwrap();
        assert!(!json.contains("per_run"));

        assert!(EvaluationReport::from_runs("x", vec![], vec![]).is_err());
        assert!(EvaluationReport::from_runs("x", vec![0.1], vec![1, 2]).is_err());
    }
}
