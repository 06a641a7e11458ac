//! Cross-source retrieval: build one graph per source, derive training
//! constraints from the split, propagate, rank every test query in both
//! directions, and report mean average precision.

use std::collections::HashSet;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use e2cp::constraints::{to_matrix_cross, PairwiseConstraint};
use e2cp::graph::{build_knn_graph, normalized_affinity};
use e2cp::io::{write_json, write_ranking_csv};
use e2cp::metrics::mean_average_precision;
use e2cp::propagation::{mscp, PropagationParams};
use e2cp::retrieval::{rank_cross_modal, RankingDirection, RankingResult};
use e2cp::EvaluationReport;

use crate::config::RunConfig;
use crate::inputs::{load_primary, load_secondary, load_split, Split};
use crate::CliError;

#[derive(Serialize)]
struct Report<'a> {
    config: &'a RunConfig,
    train_pairs: usize,
    clipped: bool,
    iterations: usize,
    map_x_to_y: EvaluationReport,
    map_y_to_x: EvaluationReport,
    rankings_x_to_y: String,
    rankings_y_to_x: String,
}

/// One propagation pass and its MAP in both directions.
struct RunOutcome {
    map_xy: f64,
    map_yx: f64,
    clipped: bool,
    iterations: usize,
    rankings_xy: Vec<RankingResult>,
    rankings_yx: Vec<RankingResult>,
}

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.num_constraints.len() != 1 {
        return Err(CliError::Config(
            "retrieve takes a single num_constraints value".into(),
        ));
    }
    let mx = load_primary(cfg)?;
    let my = load_secondary(cfg)?;
    let labels_x = mx
        .labels
        .clone()
        .ok_or_else(|| CliError::Config("retrieve needs labels on source x".into()))?;
    let labels_y = my
        .labels
        .clone()
        .ok_or_else(|| CliError::Config("retrieve needs labels on source y".into()))?;
    let split_path = cfg
        .split
        .as_ref()
        .ok_or_else(|| CliError::Config("retrieve needs --split".into()))?;
    let split = load_split(split_path, mx.n(), my.n())?;
    if split.test_x.is_empty() || split.test_y.is_empty() {
        return Err(CliError::Config("split has no test queries".into()));
    }
    if split.train_x.is_empty() || split.train_y.is_empty() {
        return Err(CliError::Config("split has no training items".into()));
    }

    let lbar_x = normalized_affinity(&build_knn_graph(&mx.kernel, cfg.k)?);
    let lbar_y = normalized_affinity(&build_knn_graph(&my.kernel, cfg.k)?);
    let mut p = PropagationParams::two_source(cfg.alpha_x, cfg.alpha_y);
    p.tol = cfg.tol;
    p.max_iter = cfg.max_iter;
    p.solver = cfg.solver.to_core();

    let nc = cfg.num_constraints[0];
    let runs = if nc == 0 { 1 } else { cfg.runs };
    let outcomes: Vec<RunOutcome> = (0..runs as u64)
        .into_par_iter()
        .map(|run| -> Result<RunOutcome, CliError> {
            let cs = training_constraints(&split, &labels_x, &labels_y, nc, cfg.seed + run);
            let z = to_matrix_cross(&cs, mx.n(), my.n())?;
            let f = mscp(&lbar_x, &lbar_y, &z, &p)?;
            let rankings_xy = split
                .test_x
                .iter()
                .map(|&q| rank_cross_modal(&f, q, RankingDirection::XToY))
                .collect::<Result<Vec<_>, _>>()?;
            let rankings_yx = split
                .test_y
                .iter()
                .map(|&q| rank_cross_modal(&f, q, RankingDirection::YToX))
                .collect::<Result<Vec<_>, _>>()?;
            let map_xy = directional_map(&rankings_xy, &split.test_x, &labels_x, &labels_y)?;
            let map_yx = directional_map(&rankings_yx, &split.test_y, &labels_y, &labels_x)?;
            Ok(RunOutcome {
                map_xy,
                map_yx,
                clipped: f.clipped(),
                iterations: f.iterations(),
                rankings_xy,
                rankings_yx,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let seeds: Vec<u64> = (0..runs as u64).map(|r| cfg.seed + r).collect();
    let map_x_to_y = EvaluationReport::from_runs(
        "map_x_to_y",
        outcomes.iter().map(|o| o.map_xy).collect(),
        seeds.clone(),
    )?;
    let map_y_to_x = EvaluationReport::from_runs(
        "map_y_to_x",
        outcomes.iter().map(|o| o.map_yx).collect(),
        seeds,
    )?;
    let first = &outcomes[0];
    let xy_path = cfg.out_path("rankings_x_to_y.csv");
    let yx_path = cfg.out_path("rankings_y_to_x.csv");
    write_ranking_csv(&xy_path, &first.rankings_xy)?;
    write_ranking_csv(&yx_path, &first.rankings_yx)?;

    let train_pairs = if nc == 0 {
        split.train_x.len() * split.train_y.len()
    } else {
        nc
    };
    println!(
        "retrieve runs={runs} train_pairs={train_pairs} map_x_to_y={:.4} map_y_to_x={:.4} clipped={} iterations={}",
        map_x_to_y.value, map_y_to_x.value, first.clipped, first.iterations
    );
    let report_path = cfg.out_path("report.json");
    write_json(
        &report_path,
        &Report {
            config: cfg,
            train_pairs,
            clipped: first.clipped,
            iterations: first.iterations,
            map_x_to_y,
            map_y_to_x,
            rankings_x_to_y: xy_path.clone(),
            rankings_y_to_x: yx_path.clone(),
        },
    )?;
    println!("wrote {report_path}, {xy_path}, {yx_path}");
    Ok(())
}

/// All train x train cross pairs labeled by class agreement, or a seeded
/// sample of `nc` of them.
fn training_constraints(
    split: &Split,
    labels_x: &[usize],
    labels_y: &[usize],
    nc: usize,
    seed: u64,
) -> Vec<PairwiseConstraint> {
    let (tx, ty) = (&split.train_x, &split.train_y);
    let make = |i: usize, j: usize| PairwiseConstraint {
        i,
        j,
        strength: if labels_x[i] == labels_y[j] { 1.0 } else { -1.0 },
    };
    if nc == 0 || nc >= tx.len() * ty.len() {
        let mut out = Vec::with_capacity(tx.len() * ty.len());
        for &i in tx {
            for &j in ty {
                out.push(make(i, j));
            }
        }
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rand::seq::index::sample(&mut rng, tx.len() * ty.len(), nc)
        .iter()
        .map(|t| make(tx[t / ty.len()], ty[t % ty.len()]))
        .collect()
}

/// MAP over test queries; an item is relevant when its class matches the
/// query's class.
fn directional_map(
    rankings: &[RankingResult],
    queries: &[usize],
    query_labels: &[usize],
    candidate_labels: &[usize],
) -> Result<f64, CliError> {
    let relevance: Vec<HashSet<usize>> = queries
        .iter()
        .map(|&q| {
            candidate_labels
                .iter()
                .enumerate()
                .filter(|(_, &l)| l == query_labels[q])
                .map(|(j, _)| j)
                .collect()
        })
        .collect();
    Ok(mean_average_precision(rankings, &relevance)?)
}
