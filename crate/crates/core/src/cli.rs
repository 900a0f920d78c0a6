//! Command-line front end. Values come from flags first, then from the
//! optional JSON config file, then from built-in defaults.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::experiments::{
    census_horizontal, census_vertical, horizontal_product, lemma_suite, return_time_check, speed_sweep,
    write_lemma_csv, write_sweep_csv, ExperimentError, ModelSpec, ReplicateSpec, SuiteOptions, Verdict,
    DEFAULT_MAX_CENSUS_ORDER,
};
use crate::geometry::{audit_window, window_edges, Configuration, FractalConfig, Vertex, Window};
use crate::network::{escape_probability, Bias};
use crate::walker::{replicate_rng, run, StopRule, WalkOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION_FAILED: i32 = 1;
pub const EXIT_CONFIG_ERROR: i32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Warmup,
    Fractal,
}

/// Experiment settings read from `--config`. Every field is optional and
/// unknown fields are rejected.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: Option<Model>,
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub max_order: Option<u32>,
    pub beta: Option<f64>,
    pub betas: Option<Vec<f64>>,
    pub t_max: Option<u64>,
    pub checkpoints: Option<Vec<u64>>,
    pub x_checkpoints: Option<Vec<i128>>,
    pub replicates: Option<u64>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| {
            CliError::Config(format!("{}: line {} column {}: {e}", path.display(), e.line(), e.column()))
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl From<crate::geometry::GeometryError> for CliError {
    fn from(e: crate::geometry::GeometryError) -> Self {
        CliError::Experiment(e.into())
    }
}

impl From<crate::network::NetworkError> for CliError {
    fn from(e: crate::network::NetworkError) -> Self {
        CliError::Experiment(e.into())
    }
}

impl From<crate::walker::WalkError> for CliError {
    fn from(e: crate::walker::WalkError) -> Self {
        CliError::Experiment(e.into())
    }
}

#[derive(Debug, Parser)]
#[command(name = "trapwalk", version, about = "Biased random walks on trapped percolation configurations")]
pub struct Cli {
    /// JSON experiment config; explicit flags take precedence over it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub model: Option<Model>,
    /// Trap entrance growth for the trapped line.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Entrance growth base for the fractal.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Truncation order of the fractal.
    #[arg(long)]
    pub max_order: Option<u32>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dump the open edges inside a window as `x1 y1 x2 y2` lines.
    Gen {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, num_args = 4, value_names = ["X_MIN", "X_MAX", "Y_MIN", "Y_MAX"], allow_negative_numbers = true)]
        window: Vec<i128>,
        /// Also run the structural audit and fail on any violation.
        #[arg(long)]
        audit: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// One instrumented walk.
    Walk {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        tmax: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Start vertex; defaults to (0,0) for warmup and (0,3) for fractal.
        #[arg(long, num_args = 2, value_names = ["X", "Y"], allow_negative_numbers = true)]
        start: Option<Vec<i128>>,
        /// Write the trajectory as CSV `t,x,y,in_trap,trap_index`.
        #[arg(long)]
        trajectory: Option<PathBuf>,
        /// Keep every N-th step in the trajectory dump.
        #[arg(long, default_value_t = 1)]
        stride: u64,
    },
    /// Trap lemma checks plus corner and root excursion checks.
    Lemmas {
        #[arg(long, value_delimiter = ',')]
        betas: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', default_values_t = [1u64, 2, 5])]
        entrances: Vec<u64>,
        #[arg(long, default_value_t = 5)]
        core_len: u64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Branch orders for the excursion checks (at most 4).
        #[arg(long, value_delimiter = ',', default_values_t = [2u32, 3])]
        orders: Vec<u32>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Exact shift census: vertical with `--k` alone, horizontal with `--n`.
    Census {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        max_order: Option<u32>,
        /// Allow enumerating more than b(5) shifts.
        #[arg(long)]
        allow_large: bool,
    },
    /// Escape probability bounds at a vertex.
    Escape {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, allow_negative_numbers = true)]
        x: i128,
        #[arg(long, allow_negative_numbers = true)]
        y: i128,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long, default_value_t = 200)]
        horizon: i128,
    },
    /// Speed statistics over replicates for a grid of biases.
    Sweep {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_delimiter = ',')]
        betas: Option<Vec<f64>>,
        #[arg(long)]
        tmax: Option<u64>,
        #[arg(long, value_delimiter = ',')]
        checkpoints: Option<Vec<u64>>,
        #[arg(long, value_delimiter = ',')]
        x_checkpoints: Option<Vec<i128>>,
        #[arg(long)]
        replicates: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; defaults to the available parallelism.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn model_spec(args: &ModelArgs, cfg: &ExperimentConfig) -> Result<ModelSpec, CliError> {
    let model = args.model.or(cfg.model).unwrap_or(Model::Warmup);
    Ok(match model {
        Model::Warmup => ModelSpec::Warmup { alpha: args.alpha.or(cfg.alpha).unwrap_or(1.0) },
        Model::Fractal => ModelSpec::Fractal {
            gamma: args.gamma.or(cfg.gamma).unwrap_or(2.0),
            max_order: args.max_order.or(cfg.max_order).unwrap_or(crate::geometry::DEFAULT_MAX_ORDER),
        },
    })
}

fn build(spec: &ModelSpec) -> Result<Box<dyn Configuration>, CliError> {
    spec.build().map_err(|e| CliError::Config(e.to_string()))
}

fn bias(beta: f64) -> Result<Bias, CliError> {
    Bias::new(beta).map_err(|e| CliError::Config(e.to_string()))
}

fn sink<'a>(path: Option<&PathBuf>, out: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(out),
    })
}

/// Parses `args` and runs the command, writing results to `out`. Returns
/// the process exit code.
pub fn dispatch<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG_ERROR } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_VERIFICATION_FAILED,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_CONFIG_ERROR
        }
    }
}

/// Runs a parsed command; `Ok(false)` means a verification failed.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<bool, CliError> {
    let cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    match &cli.command {
        Command::Gen { model, window, audit, output } => {
            let spec = model_spec(model, &cfg)?;
            let oracle = build(&spec)?;
            let w = Window::new(window[0], window[1], window[2], window[3])
                .map_err(|e| CliError::Config(e.to_string()))?;
            let edges = window_edges(oracle.as_ref(), &w)?;
            let mut sink = sink(output.as_ref().or(cfg.output.as_ref()), out)?;
            for e in &edges {
                writeln!(sink, "{e}")?;
            }
            sink.flush()?;
            if *audit {
                let report = audit_window(oracle.as_ref(), &w)?;
                for v in &report.violations {
                    eprintln!("violation: {v}");
                }
                return Ok(report.is_clean());
            }
            Ok(true)
        }
        Command::Walk { model, beta, tmax, seed, start, trajectory, stride } => {
            let spec = model_spec(model, &cfg)?;
            let oracle = build(&spec)?;
            let b = bias(beta.or(cfg.beta).unwrap_or(2.0))?;
            let t_max = tmax.or(cfg.t_max).unwrap_or(1_000_000);
            let seed = seed.or(cfg.seed).unwrap_or(0);
            let start = start.as_ref().map(|s| Vertex::new(s[0], s[1])).unwrap_or(spec.default_start());
            let options = WalkOptions {
                trajectory_stride: trajectory.as_ref().map(|_| (*stride).max(1)),
                ..WalkOptions::standard()
            };
            let mut rng = replicate_rng(seed, 0);
            let rec = run(start, oracle.as_ref(), &b, t_max, StopRule::Horizon, &options, &mut rng)?;
            writeln!(out, "# seed={seed} beta={} t_max={t_max} start={start}", b.beta())?;
            writeln!(out, "final_position {} {}", rec.final_state.position.x, rec.final_state.position.y)?;
            writeln!(out, "time {}", rec.elapsed())?;
            writeln!(out, "speed {}", rec.speed())?;
            let done: Vec<_> = rec.trap_visits.iter().filter(|v| v.completed).collect();
            let core_hits = rec.trap_visits.iter().filter(|v| v.hit_core).count();
            let trap_time: u64 = rec.trap_visits.iter().map(|v| v.duration).sum();
            writeln!(out, "trap_visits {} completed {} core_hits {core_hits} trap_time {trap_time}", rec.trap_visits.len(), done.len())?;
            if let Some(v) = rec.trap_visits.iter().max_by_key(|v| v.duration) {
                writeln!(out, "longest_visit trap {} anchor {} duration {}", v.trap_index, v.anchor, v.duration)?;
            }
            writeln!(
                out,
                "time_on_path {} time_off_path {} time_in_traps_on_path {}",
                rec.time_on_path, rec.time_off_path, rec.time_in_traps_on_path
            )?;
            if let Some(path) = trajectory {
                let mut f = BufWriter::new(File::create(path)?);
                writeln!(f, "t,x,y,in_trap,trap_index")?;
                for r in &rec.trajectory {
                    let idx = r.trap_index.map(|i| i.to_string()).unwrap_or_default();
                    writeln!(f, "{},{},{},{},{idx}", r.t, r.x, r.y, u8::from(r.in_trap))?;
                }
                f.flush()?;
            }
            Ok(true)
        }
        Command::Lemmas { betas, entrances, core_len, samples, orders, seed, output } => {
            let betas = betas.clone().or(cfg.betas.clone()).unwrap_or(vec![1.5, 2.0, 3.0]);
            for &b in &betas {
                bias(b)?;
            }
            let seed = seed.or(cfg.seed).unwrap_or(0);
            let mut rows = lemma_suite(&SuiteOptions {
                betas: betas.clone(),
                entrances: entrances.clone(),
                core_len: *core_len,
                samples: *samples,
                seed,
            })?;
            let fractal = FractalConfig::new(cfg.gamma.unwrap_or(2.0), cfg.max_order.unwrap_or(crate::geometry::DEFAULT_MAX_ORDER))?;
            for &b in &betas {
                rows.extend(return_time_check(&fractal, &bias(b)?, orders, (*samples).min(20_000), seed)?);
            }
            let mut sink = sink(output.as_ref().or(cfg.output.as_ref()), out)?;
            write_lemma_csv(&rows, seed, &mut sink)?;
            sink.flush()?;
            Ok(rows.iter().all(|r| r.verdict == Verdict::Pass))
        }
        Command::Census { k, n, gamma, max_order, allow_large } => {
            let max_order = max_order.or(cfg.max_order).unwrap_or(crate::geometry::DEFAULT_MAX_ORDER);
            let fractal = FractalConfig::new(gamma.or(cfg.gamma).unwrap_or(2.0), max_order)
                .map_err(|e| CliError::Config(e.to_string()))?;
            let (result, expected) = match n {
                Some(n) => {
                    let limit = if *allow_large { fractal.max_order() } else { DEFAULT_MAX_CENSUS_ORDER };
                    let r = census_horizontal(&fractal, *k, *n, limit).map_err(|e| CliError::Config(e.to_string()))?;
                    (r, horizontal_product(*k, *n))
                }
                None => {
                    let r = census_vertical(&fractal, *k).map_err(|e| CliError::Config(e.to_string()))?;
                    (r, num_rational::Ratio::new(1, 3i128 << k))
                }
            };
            writeln!(out, "{}", result.probability)?;
            Ok(result.probability == expected)
        }
        Command::Escape { model, x, y, beta, horizon } => {
            let spec = model_spec(model, &cfg)?;
            let oracle = build(&spec)?;
            let b = bias(beta.or(cfg.beta).unwrap_or(2.0))?;
            let p = escape_probability(Vertex::new(*x, *y), oracle.as_ref(), &b, *horizon)?;
            writeln!(out, "escape_probability [{:.15e}, {:.15e}] width {:.3e}", p.lo, p.hi, p.width())?;
            Ok(true)
        }
        Command::Sweep { model, betas, tmax, checkpoints, x_checkpoints, replicates, seed, jobs, output } => {
            let spec_model = model_spec(model, &cfg)?;
            build(&spec_model)?;
            let betas = betas
                .clone()
                .or(cfg.betas.clone())
                .or(cfg.beta.map(|b| vec![b]))
                .unwrap_or(vec![2.0]);
            let t_max = tmax.or(cfg.t_max).unwrap_or(1_000_000);
            let spec = ReplicateSpec {
                model: spec_model,
                beta: betas[0],
                start: spec_model.default_start(),
                t_max,
                time_checkpoints: checkpoints.clone().or(cfg.checkpoints.clone()).unwrap_or(vec![t_max]),
                x_checkpoints: x_checkpoints.clone().or(cfg.x_checkpoints.clone()).unwrap_or_default(),
                replicates: replicates.or(cfg.replicates).unwrap_or(20),
                seed: seed.or(cfg.seed).unwrap_or(0),
            };
            spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
            let rows = speed_sweep(&spec, &betas, *jobs)?;
            let mut sink = sink(output.as_ref().or(cfg.output.as_ref()), out)?;
            write_sweep_csv(&rows, spec.seed, &mut sink)?;
            sink.flush()?;
            Ok(true)
        }
    }
}
