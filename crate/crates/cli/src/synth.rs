//! Synthetic data generation: labeled two-moons or Gaussian blobs plus a
//! four-constraint demo file (two must-links, two cannot-links).

use ndarray::Array2;

use e2cp::constraints::{save_constraints, PairwiseConstraint};
use e2cp::dataset::{synth_blobs, synth_two_moons, Dataset};
use e2cp::io::write_dataset_csv;

use crate::config::{RunConfig, ShapeArg};
use crate::CliError;

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let (ds, stem) = match cfg.shape {
        ShapeArg::TwoMoons => (synth_two_moons(cfg.n, cfg.noise, cfg.seed)?, "two_moons"),
        ShapeArg::Blobs => {
            if cfg.clusters < 2 || !cfg.n.is_multiple_of(cfg.clusters) {
                return Err(CliError::Config(format!(
                    "blobs need n divisible by clusters >= 2, got n = {} clusters = {}",
                    cfg.n, cfg.clusters
                )));
            }
            let k = cfg.clusters;
            let centers = Array2::from_shape_fn((k, 2), |(c, j)| {
                let angle = 2.0 * std::f64::consts::PI * c as f64 / k as f64;
                cfg.sep * if j == 0 { angle.cos() } else { angle.sin() }
            });
            (synth_blobs(cfg.n / k, k, &centers, cfg.std, cfg.seed)?, "blobs")
        }
    };

    let data_path = cfg.out_path(&format!("{stem}.csv"));
    write_dataset_csv(&data_path, &ds)?;
    let cs = demo_constraints(&ds)?;
    let constraints_path = cfg.out_path("constraints.csv");
    save_constraints(&cs, &constraints_path)?;
    let classes = ds.labels.as_ref().map_or(0, |l| l.iter().max().map_or(0, |m| m + 1));
    println!(
        "wrote {data_path} ({} points, {classes} classes) and {constraints_path} (2 must-link + 2 cannot-link)",
        ds.points.nrows()
    );
    Ok(())
}

/// Four demo constraints spanning the first two classes: one long-range
/// must-link inside each, and cannot-links joining their extremes.
fn demo_constraints(ds: &Dataset) -> Result<Vec<PairwiseConstraint>, CliError> {
    let labels = ds
        .labels
        .as_ref()
        .ok_or_else(|| CliError::Config("synthetic dataset lost its labels".into()))?;
    let extremes = |class: usize| {
        let first = labels.iter().position(|&l| l == class);
        let last = labels.iter().rposition(|&l| l == class);
        first.zip(last)
    };
    let ((a0, a1), (b0, b1)) = extremes(0)
        .zip(extremes(1))
        .ok_or_else(|| CliError::Config("demo constraints need two classes".into()))?;
    Ok(vec![
        PairwiseConstraint::new(a0, a1, 1.0)?,
        PairwiseConstraint::new(b0, b1, 1.0)?,
        PairwiseConstraint::new(a0, b0, -1.0)?,
        PairwiseConstraint::new(a1, b1, -1.0)?,
    ])
}
