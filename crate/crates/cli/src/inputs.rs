//! Shared input plumbing: turn feature or kernel files into a validated
//! kernel matrix plus optional labels, and parse retrieval split files.

use e2cp::dataset::{compute_kernel, load_dataset, median_heuristic_sigma, KernelSpec};
use e2cp::io::read_matrix_csv;
use e2cp::KernelMatrix;

use crate::config::{KernelFnArg, RunConfig};
use crate::CliError;

pub struct Modality {
    pub kernel: KernelMatrix,
    pub labels: Option<Vec<usize>>,
}

impl Modality {
    pub fn n(&self) -> usize {
        self.kernel.n()
    }
}

/// Build one source from `--features` and/or a precomputed `--kernel`
/// file. A kernel file wins for similarities; features then only supply
/// labels. `what` names the source in error messages.
pub fn load_modality(
    what: &str,
    features: &Option<String>,
    kernel_path: &Option<String>,
    kernel_fn: KernelFnArg,
    sigma: Option<f64>,
    no_labels: bool,
) -> Result<Modality, CliError> {
    let dataset = match features {
        Some(path) => Some(load_dataset(path, !no_labels)?),
        None => None,
    };
    let kernel = match kernel_path {
        Some(path) => {
            let k = KernelMatrix::new(read_matrix_csv(path)?)?;
            if let Some(ds) = &dataset {
                if ds.points.nrows() != k.n() {
                    return Err(CliError::Config(format!(
                        "{what}: kernel is {0}x{0} but the feature file has {1} rows",
                        k.n(),
                        ds.points.nrows()
                    )));
                }
            }
            k
        }
        None => {
            let ds = dataset.as_ref().ok_or_else(|| {
                CliError::Config(format!("{what}: needs --features or a precomputed kernel"))
            })?;
            let spec = match kernel_fn {
                KernelFnArg::Gaussian => KernelSpec::Gaussian {
                    sigma: sigma.unwrap_or_else(|| median_heuristic_sigma(ds)),
                },
                KernelFnArg::Correlation => KernelSpec::NormalizedCorrelation,
            };
            compute_kernel(ds, &spec)?
        }
    };
    Ok(Modality {
        kernel,
        labels: dataset.and_then(|ds| ds.labels),
    })
}

pub fn load_primary(cfg: &RunConfig) -> Result<Modality, CliError> {
    load_modality(
        "source x",
        &cfg.features,
        &cfg.kernel,
        cfg.kernel_fn,
        cfg.sigma,
        cfg.no_labels,
    )
}

pub fn load_secondary(cfg: &RunConfig) -> Result<Modality, CliError> {
    load_modality(
        "source y",
        &cfg.features_y,
        &cfg.kernel_y,
        cfg.kernel_fn_y,
        cfg.sigma_y,
        cfg.no_labels,
    )
}

/// Train/test membership per source, parsed from CSV rows
/// "source,index,role" with source x|y and role train|test. Every index
/// of both sources must be listed exactly once.
pub struct Split {
    pub train_x: Vec<usize>,
    pub test_x: Vec<usize>,
    pub train_y: Vec<usize>,
    pub test_y: Vec<usize>,
}

pub fn load_split(path: &str, n_x: usize, n_y: usize) -> Result<Split, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read split {path}: {e}")))?;
    let mut seen_x = vec![false; n_x];
    let mut seen_y = vec![false; n_y];
    let mut split = Split {
        train_x: Vec::new(),
        test_x: Vec::new(),
        train_y: Vec::new(),
        test_y: Vec::new(),
    };
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |msg: String| CliError::Config(format!("{path}:{}: {msg}", lineno + 1));
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != 3 {
            return Err(bad(format!("expected 3 fields source,index,role, found {}", cells.len())));
        }
        let index: usize = cells[1]
            .parse()
            .map_err(|e| bad(format!("bad index '{}': {e}", cells[1])))?;
        let (seen, n, train, test) = match cells[0] {
            "x" => (&mut seen_x, n_x, &mut split.train_x, &mut split.test_x),
            "y" => (&mut seen_y, n_y, &mut split.train_y, &mut split.test_y),
            other => return Err(bad(format!("source must be x or y, got '{other}'"))),
        };
        if index >= n {
            return Err(bad(format!("index {index} out of range for {n} items")));
        }
        if seen[index] {
            return Err(bad(format!("index {index} listed twice")));
        }
        seen[index] = true;
        match cells[2] {
            "train" => train.push(index),
            "test" => test.push(index),
            other => return Err(bad(format!("role must be train or test, got '{other}'"))),
        }
    }
    for (seen, tag) in [(&seen_x, "x"), (&seen_y, "y")] {
        if let Some(miss) = seen.iter().position(|s| !s) {
            return Err(CliError::Config(format!(
                "{path}: source {tag} index {miss} has no train/test role"
            )));
        }
    }
    Ok(split)
}
