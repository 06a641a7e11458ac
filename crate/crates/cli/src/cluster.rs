//! Clustering experiments over a method x constraint-count grid, with
//! per-run constraint sampling, partition files, a long-format CSV for
//! plotting, and a JSON report.

use rayon::prelude::*;
use serde::Serialize;

use e2cp::clustering::{cluster_pipeline, ClusterParams};
use e2cp::constraints::{constraints_from_labels, load_constraints, PairwiseConstraint};
use e2cp::io::{atomic_write, write_json, write_partition_csv};
use e2cp::metrics::adjusted_rand_index;
use e2cp::propagation::PropagationParams;
use e2cp::{EvaluationReport, Partition};

use crate::config::{MethodArg, RunConfig};
use crate::inputs::load_primary;
use crate::CliError;

#[derive(Serialize)]
struct Cell {
    method: MethodArg,
    num_constraints: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    ari: Option<EvaluationReport>,
    partitions: Vec<String>,
}

#[derive(Serialize)]
struct Report<'a> {
    config: &'a RunConfig,
    cells: Vec<Cell>,
}

struct RunOutcome {
    ari: Option<f64>,
    partition_file: String,
}

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let modality = load_primary(cfg)?;
    let truth = match &modality.labels {
        Some(labels) => Some(Partition::from_labels(labels)?),
        None => None,
    };
    let fixed: Option<Vec<PairwiseConstraint>> = match &cfg.constraints {
        Some(path) => Some(load_constraints(path)?),
        None => None,
    };
    // A constraint file replaces sampling, so the count grid collapses to
    // the file's size.
    let counts: Vec<usize> = match &fixed {
        Some(cs) => vec![cs.len()],
        None => cfg.num_constraints.clone(),
    };
    if fixed.is_none() && counts.iter().any(|&c| c > 0) && modality.labels.is_none() {
        return Err(CliError::Config(
            "sampling constraints needs labeled features; pass --constraints or labels".into(),
        ));
    }

    let mut propagation = PropagationParams::single_source(cfg.alpha);
    propagation.tol = cfg.tol;
    propagation.max_iter = cfg.max_iter;
    propagation.solver = cfg.solver.to_core();

    let mut cells = Vec::new();
    let mut long_rows = String::from("method,num_constraints,run,ari\n");
    for &method in &cfg.method {
        for &nc in &counts {
            let outcomes: Vec<RunOutcome> = (0..cfg.runs as u64)
                .into_par_iter()
                .map(|run| -> Result<RunOutcome, CliError> {
                    let cs: Vec<PairwiseConstraint> = match &fixed {
                        Some(v) => v.clone(),
                        None if nc == 0 => Vec::new(),
                        None => constraints_from_labels(
                            modality.labels.as_ref().expect("checked above"),
                            modality.labels.as_ref().expect("checked above"),
                            nc,
                            cfg.seed + run,
                        )?,
                    };
                    let params = ClusterParams {
                        neighbors: cfg.k,
                        propagation,
                        adjust_mode: cfg.adjust_mode.to_core(),
                        directions: cfg.directions.map(|d| d.stages()),
                        restarts: cfg.restarts,
                        seed: cfg.seed + run,
                        keep_trivial: cfg.keep_trivial,
                    };
                    let part = cluster_pipeline(
                        &modality.kernel,
                        &cs,
                        cfg.clusters,
                        method.to_core(),
                        &params,
                    )?;
                    let ari = match &truth {
                        Some(t) => Some(adjusted_rand_index(&part, t)?),
                        None => None,
                    };
                    let partition_file = cfg.out_path(&format!(
                        "partition_{}_c{}_r{}.csv",
                        method.token(),
                        nc,
                        run
                    ));
                    write_partition_csv(&partition_file, &part)?;
                    Ok(RunOutcome { ari, partition_file })
                })
                .collect::<Result<Vec<_>, _>>()?;

            for (run, o) in outcomes.iter().enumerate() {
                let ari_text = o.ari.map_or("nan".to_string(), |v| v.to_string());
                long_rows.push_str(&format!("{},{nc},{run},{ari_text}\n", method.token()));
            }
            let ari_report = if outcomes.iter().all(|o| o.ari.is_some()) {
                let per_run: Vec<f64> = outcomes.iter().map(|o| o.ari.unwrap()).collect();
                let seeds: Vec<u64> = (0..cfg.runs as u64).map(|r| cfg.seed + r).collect();
                let report = EvaluationReport::from_runs("ari", per_run, seeds)?;
                println!(
                    "cluster method={} num_constraints={nc} runs={} mean_ari={:.4}",
                    method.token(),
                    cfg.runs,
                    report.value
                );
                Some(report)
            } else {
                println!(
                    "cluster method={} num_constraints={nc} runs={}: no labels, ARI skipped",
                    method.token(),
                    cfg.runs
                );
                None
            };
            cells.push(Cell {
                method,
                num_constraints: nc,
                ari: ari_report,
                partitions: outcomes.into_iter().map(|o| o.partition_file).collect(),
            });
        }
    }

    let runs_csv = cfg.out_path("runs.csv");
    atomic_write(&runs_csv, long_rows.as_bytes())?;
    let report_path = cfg.out_path("report.json");
    write_json(&report_path, &Report { config: cfg, cells })?;
    println!("wrote {report_path} and {runs_csv}");
    Ok(())
}
