//! Propagation only: read constraints, run the selected solver over one
//! or two sources, and write the score matrix.

use e2cp::constraints::{load_constraints, to_matrix, to_matrix_cross};
use e2cp::graph::{build_knn_graph, normalized_affinity};
use e2cp::io::{write_matrix_binary, write_matrix_csv};
use e2cp::propagation::{e2cp, mscp, propagate_directions, PropagationParams};

use crate::config::RunConfig;
use crate::inputs::{load_primary, load_secondary};
use crate::CliError;

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let constraints_path = cfg
        .constraints
        .as_ref()
        .ok_or_else(|| CliError::Config("propagate needs --constraints".into()))?;
    let cs = load_constraints(constraints_path)?;
    let mx = load_primary(cfg)?;
    let lbar_x = normalized_affinity(&build_knn_graph(&mx.kernel, cfg.k)?);

    let two_source = cfg.features_y.is_some() || cfg.kernel_y.is_some();
    let f = if two_source {
        let my = load_secondary(cfg)?;
        let lbar_y = normalized_affinity(&build_knn_graph(&my.kernel, cfg.k)?);
        let mut p = PropagationParams::two_source(cfg.alpha_x, cfg.alpha_y);
        p.tol = cfg.tol;
        p.max_iter = cfg.max_iter;
        p.solver = cfg.solver.to_core();
        let z = to_matrix_cross(&cs, mx.n(), my.n())?;
        mscp(&lbar_x, &lbar_y, &z, &p)?
    } else {
        let mut p = PropagationParams::single_source(cfg.alpha);
        p.tol = cfg.tol;
        p.max_iter = cfg.max_iter;
        p.solver = cfg.solver.to_core();
        let z = to_matrix(&cs, mx.n(), mx.n())?;
        match cfg.directions {
            Some(d) => propagate_directions(&lbar_x, &z, &p, &d.stages())?,
            None => e2cp(&lbar_x, &z, &p)?,
        }
    };

    let name = cfg.out.clone().unwrap_or_else(|| "fstar.csv".to_string());
    let path = cfg.out_path(&name);
    if path.ends_with(".bin") {
        write_matrix_binary(&path, f.values())?;
    } else {
        write_matrix_csv(&path, f.values())?;
    }
    println!(
        "propagated {} constraints to a {}x{} score matrix: iterations={} clipped={}",
        cs.len(),
        f.rows(),
        f.cols(),
        f.iterations(),
        f.clipped()
    );
    println!("wrote {path}");
    Ok(())
}
