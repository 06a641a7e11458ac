//! Layered run configuration: an optional JSON file provides defaults,
//! same-named command-line flags override individual keys, and built-in
//! defaults fill the rest. The fully resolved config is embedded in every
//! report so a run can be reproduced from its output alone.

use clap::{Args, ValueEnum};
use serde::{Deserialize, Deserializer, Serialize};

use e2cp::clustering::{AdjustMode, ClusterMethod, DEFAULT_NEIGHBORS, DEFAULT_RESTARTS};
use e2cp::propagation::{
    Direction, Solver, DEFAULT_ALPHA, DEFAULT_ALPHA_X, DEFAULT_ALPHA_Y, DEFAULT_MAX_ITER,
    DEFAULT_TOL,
};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverArg {
    Iterative,
    #[value(name = "closed_form")]
    ClosedForm,
    Exact,
}

impl SolverArg {
    pub fn to_core(self) -> Solver {
        match self {
            SolverArg::Iterative => Solver::Iterative,
            SolverArg::ClosedForm => Solver::ClosedForm,
            SolverArg::Exact => Solver::ExactMatrixEquation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodArg {
    E2cp,
    Lyap,
    Sl,
    Ncuts,
}

impl MethodArg {
    pub fn to_core(self) -> ClusterMethod {
        match self {
            MethodArg::E2cp => ClusterMethod::E2cp,
            MethodArg::Lyap => ClusterMethod::Lyap,
            MethodArg::Sl => ClusterMethod::Sl,
            MethodArg::Ncuts => ClusterMethod::Ncuts,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            MethodArg::E2cp => "e2cp",
            MethodArg::Lyap => "lyap",
            MethodArg::Sl => "sl",
            MethodArg::Ncuts => "ncuts",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdjustArg {
    Blend,
    #[value(name = "shift_only")]
    ShiftOnly,
    #[value(name = "scale_only")]
    ScaleOnly,
}

impl AdjustArg {
    pub fn to_core(self) -> AdjustMode {
        match self {
            AdjustArg::Blend => AdjustMode::Blend,
            AdjustArg::ShiftOnly => AdjustMode::ShiftOnly,
            AdjustArg::ScaleOnly => AdjustMode::ScaleOnly,
        }
    }
}

/// Sweep-stage ablation sequences for the propagation step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionsArg {
    Vp,
    #[value(name = "vp_hp")]
    VpHp,
    #[value(name = "vp_hp_vp")]
    VpHpVp,
}

impl DirectionsArg {
    pub fn stages(self) -> Vec<Direction> {
        match self {
            DirectionsArg::Vp => vec![Direction::Vertical],
            DirectionsArg::VpHp => vec![Direction::Vertical, Direction::Horizontal],
            DirectionsArg::VpHpVp => vec![
                Direction::Vertical,
                Direction::Horizontal,
                Direction::Vertical,
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFnArg {
    Gaussian,
    Correlation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeArg {
    #[value(name = "two_moons")]
    TwoMoons,
    Blobs,
}

/// Accept either a bare value or a list for grid-style JSON keys.
fn one_or_many<'de, D, T>(de: D) -> Result<Option<Vec<T>>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany<T> {
        One(T),
        Many(Vec<T>),
    }
    Ok(match Option::<OneOrMany<T>>::deserialize(de)? {
        None => None,
        Some(OneOrMany::One(v)) => Some(vec![v]),
        Some(OneOrMany::Many(v)) => Some(v),
    })
}

/// JSON config file contents. Every key matches a flag name; unknown keys
/// are rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub features: Option<String>,
    pub features_y: Option<String>,
    pub kernel: Option<String>,
    pub kernel_y: Option<String>,
    pub kernel_fn: Option<KernelFnArg>,
    pub kernel_fn_y: Option<KernelFnArg>,
    pub sigma: Option<f64>,
    pub sigma_y: Option<f64>,
    pub constraints: Option<String>,
    pub split: Option<String>,
    pub no_labels: Option<bool>,
    pub k: Option<usize>,
    pub alpha: Option<f64>,
    pub alpha_x: Option<f64>,
    pub alpha_y: Option<f64>,
    pub clusters: Option<usize>,
    #[serde(default, deserialize_with = "one_or_many")]
    pub num_constraints: Option<Vec<usize>>,
    pub runs: Option<usize>,
    pub seed: Option<u64>,
    pub solver: Option<SolverArg>,
    #[serde(default, deserialize_with = "one_or_many")]
    pub method: Option<Vec<MethodArg>>,
    pub adjust_mode: Option<AdjustArg>,
    pub directions: Option<DirectionsArg>,
    pub out_dir: Option<String>,
    pub out: Option<String>,
    pub keep_trivial: Option<bool>,
    pub restarts: Option<usize>,
    pub jobs: Option<usize>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub shape: Option<ShapeArg>,
    pub n: Option<usize>,
    pub noise: Option<f64>,
    pub std: Option<f64>,
    pub sep: Option<f64>,
}

/// Flags shared by every subcommand; each overrides the same-named config
/// key when given.
#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON config file; same-named flags override its keys.
    #[arg(long, value_name = "PATH")]
    pub config: Option<String>,
    /// Feature CSV (one row per item; trailing label column unless --no-labels).
    #[arg(long, value_name = "PATH")]
    pub features: Option<String>,
    /// Feature CSV for the second source in two-source commands.
    #[arg(long, value_name = "PATH")]
    pub features_y: Option<String>,
    /// Precomputed kernel matrix CSV (overrides --kernel-fn/--sigma).
    #[arg(long, value_name = "PATH")]
    pub kernel: Option<String>,
    /// Precomputed kernel matrix CSV for the second source.
    #[arg(long, value_name = "PATH")]
    pub kernel_y: Option<String>,
    /// Kernel applied to --features [default: gaussian].
    #[arg(long)]
    pub kernel_fn: Option<KernelFnArg>,
    /// Kernel applied to --features-y [default: gaussian].
    #[arg(long)]
    pub kernel_fn_y: Option<KernelFnArg>,
    /// Gaussian bandwidth [default: median pairwise distance].
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Gaussian bandwidth for the second source.
    #[arg(long)]
    pub sigma_y: Option<f64>,
    /// Constraint CSV "i,j,strength" used for every run instead of sampling.
    #[arg(long, value_name = "PATH")]
    pub constraints: Option<String>,
    /// Split CSV "source,index,role" with role train|test (retrieve).
    #[arg(long, value_name = "PATH")]
    pub split: Option<String>,
    /// Feature files carry no trailing label column.
    #[arg(long)]
    pub no_labels: bool,
    /// Neighbors per vertex in the k-NN graph.
    #[arg(long)]
    pub k: Option<usize>,
    /// Propagation strength for single-source commands, in [0, 1).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Propagation strength over the first source (two-source commands).
    #[arg(long)]
    pub alpha_x: Option<f64>,
    /// Propagation strength over the second source (two-source commands).
    #[arg(long)]
    pub alpha_y: Option<f64>,
    /// Number of clusters (cluster, synth blobs).
    #[arg(long)]
    pub clusters: Option<usize>,
    /// Constraints sampled per run; comma list sweeps a grid (cluster).
    #[arg(long, value_delimiter = ',')]
    pub num_constraints: Option<Vec<usize>>,
    /// Repetitions with derived seeds.
    #[arg(long)]
    pub runs: Option<usize>,
    /// Base seed; run r uses seed + r.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Propagation solver.
    #[arg(long)]
    pub solver: Option<SolverArg>,
    /// Clustering method; comma list sweeps a grid (cluster).
    #[arg(long, value_delimiter = ',')]
    pub method: Option<Vec<MethodArg>>,
    /// Weight-adjustment rule.
    #[arg(long)]
    pub adjust_mode: Option<AdjustArg>,
    /// Override the propagation sweeps with an explicit stage sequence.
    #[arg(long)]
    pub directions: Option<DirectionsArg>,
    /// Output directory [default: .].
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<String>,
    /// Score-matrix file name inside --out-dir; .bin selects binary (propagate).
    #[arg(long, value_name = "NAME")]
    pub out: Option<String>,
    /// Keep the stationary leading eigenvector in the spectral embedding.
    #[arg(long)]
    pub keep_trivial: bool,
    /// k-means restarts per run.
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Worker threads; 0 uses all cores.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Solver tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Iteration cap for iterative solves.
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Synthetic dataset shape (synth).
    #[arg(long)]
    pub shape: Option<ShapeArg>,
    /// Total points to synthesize (synth).
    #[arg(long)]
    pub n: Option<usize>,
    /// Arc noise for two-moons (synth).
    #[arg(long)]
    pub noise: Option<f64>,
    /// Per-axis standard deviation for blobs (synth).
    #[arg(long)]
    pub std: Option<f64>,
    /// Circumradius of the blob-center circle (synth).
    #[arg(long)]
    pub sep: Option<f64>,
}

/// Fully resolved parameters for one command invocation.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub features: Option<String>,
    pub features_y: Option<String>,
    pub kernel: Option<String>,
    pub kernel_y: Option<String>,
    pub kernel_fn: KernelFnArg,
    pub kernel_fn_y: KernelFnArg,
    pub sigma: Option<f64>,
    pub sigma_y: Option<f64>,
    pub constraints: Option<String>,
    pub split: Option<String>,
    pub no_labels: bool,
    pub k: usize,
    pub alpha: f64,
    pub alpha_x: f64,
    pub alpha_y: f64,
    pub clusters: usize,
    pub num_constraints: Vec<usize>,
    pub runs: usize,
    pub seed: u64,
    pub solver: SolverArg,
    pub method: Vec<MethodArg>,
    pub adjust_mode: AdjustArg,
    pub directions: Option<DirectionsArg>,
    pub out_dir: String,
    pub out: Option<String>,
    pub keep_trivial: bool,
    pub restarts: usize,
    pub jobs: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub shape: ShapeArg,
    pub n: usize,
    pub noise: f64,
    pub std: f64,
    pub sep: f64,
}

impl RunConfig {
    /// Join a file name onto the output directory.
    pub fn out_path(&self, name: &str) -> String {
        if self.out_dir == "." || self.out_dir.is_empty() {
            name.to_string()
        } else {
            format!("{}/{}", self.out_dir.trim_end_matches('/'), name)
        }
    }
}

pub fn resolve(command: &str, args: &CommonArgs) -> Result<RunConfig, CliError> {
    let file = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read config {path}: {e}")))?;
            serde_json::from_str::<FileConfig>(&text)
                .map_err(|e| CliError::Config(format!("{path}: {e}")))?
        }
        None => FileConfig::default(),
    };
    // Flag wins, then config file, then the built-in default.
    macro_rules! pick {
        ($field:ident, $default:expr) => {
            args.$field.clone().or(file.$field).unwrap_or($default)
        };
    }
    macro_rules! pick_opt {
        ($field:ident) => {
            args.$field.clone().or(file.$field)
        };
    }
    let cfg = RunConfig {
        command: command.to_string(),
        features: pick_opt!(features),
        features_y: pick_opt!(features_y),
        kernel: pick_opt!(kernel),
        kernel_y: pick_opt!(kernel_y),
        kernel_fn: pick!(kernel_fn, KernelFnArg::Gaussian),
        kernel_fn_y: pick!(kernel_fn_y, KernelFnArg::Gaussian),
        sigma: pick_opt!(sigma),
        sigma_y: pick_opt!(sigma_y),
        constraints: pick_opt!(constraints),
        split: pick_opt!(split),
        no_labels: args.no_labels || file.no_labels.unwrap_or(false),
        k: pick!(k, DEFAULT_NEIGHBORS),
        alpha: pick!(alpha, DEFAULT_ALPHA),
        alpha_x: pick!(alpha_x, DEFAULT_ALPHA_X),
        alpha_y: pick!(alpha_y, DEFAULT_ALPHA_Y),
        clusters: pick!(clusters, 2),
        num_constraints: pick!(num_constraints, vec![0]),
        runs: pick!(runs, 25),
        seed: pick!(seed, 0),
        solver: pick!(solver, SolverArg::ClosedForm),
        method: pick!(method, vec![MethodArg::E2cp]),
        adjust_mode: pick!(adjust_mode, AdjustArg::Blend),
        directions: pick_opt!(directions),
        out_dir: pick!(out_dir, ".".to_string()),
        out: pick_opt!(out),
        keep_trivial: args.keep_trivial || file.keep_trivial.unwrap_or(false),
        restarts: pick!(restarts, DEFAULT_RESTARTS),
        jobs: pick!(jobs, 0),
        tol: pick!(tol, DEFAULT_TOL),
        max_iter: pick!(max_iter, DEFAULT_MAX_ITER),
        shape: pick!(shape, ShapeArg::TwoMoons),
        n: pick!(n, 100),
        noise: pick!(noise, 0.08),
        std: pick!(std, 1.0),
        sep: pick!(sep, 3.5),
    };
    if cfg.runs == 0 {
        return Err(CliError::Config("runs must be at least 1".into()));
    }
    if cfg.method.is_empty() {
        return Err(CliError::Config("method list must not be empty".into()));
    }
    if cfg.num_constraints.is_empty() {
        return Err(CliError::Config("num_constraints list must not be empty".into()));
    }
    Ok(cfg)
}
