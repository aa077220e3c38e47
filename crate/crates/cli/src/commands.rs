//! Subcommand definitions and handlers for the `bsf` binary.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use bezier_simplex::exec::Execution;
use bezier_simplex::fitting::FitReport;
use bezier_simplex::metrics::{gd_with, grid_sample_with, igd_with};
use bezier_simplex::problems::{make_training_set_from, Normalization, DEFAULT_POOL_SIZE};
use bezier_simplex::response_surface::{fit_response_surface, ResponseSurface};
use bezier_simplex::{
    fit_all_at_once, fit_inductive_skeleton, BezierSimplex, Error, Face, FitConfig, FrontSampleSpec, SampleSet,
    Target,
};
use clap::{Args, Parser, Subcommand};
use log::info;
use serde::{Deserialize, Serialize};

use crate::experiment::{
    parse_sizes, read_rows, render_summary, run_experiment, summarize, write_rows, ExperimentConfig, Method,
    ProblemSpec,
};
use crate::plot::{metric_boxplots, pairwise_scatter, Series};

pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "bsf", version, about = "Fit Bezier simplices to Pareto front samples")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw per-face training subsamples and a validation sample.
    Generate(GenerateArgs),
    /// Fit a model to generated training data.
    Fit(FitArgs),
    /// GD and IGD of a fitted model against a validation sample.
    Evaluate(EvaluateArgs),
    /// Repeated trials of one or more methods, with summary statistics.
    Experiment(ExperimentArgs),
    /// Static SVG of sample scatter panels or metric box plots.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// schaffer | constrex | osyczka2 | viennet2 | med3 | med5 | medM:<M> | file:<path>
    #[arg(long)]
    pub problem: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Size of the validation sample.
    #[arg(long, default_value_t = 1000)]
    pub validation: usize,
    /// Feasible pool size for brute-force problems.
    #[arg(long, default_value_t = DEFAULT_POOL_SIZE)]
    pub pool_size: usize,
    /// Keep raw objective values instead of rescaling the front to [0, 1].
    #[arg(long)]
    pub no_normalize: bool,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Subsample sizes per face dimension, e.g. 1,2,1.
    #[arg(long)]
    pub sizes: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long, default_value = "inductive")]
    pub method: String,
    /// Directory written by `generate`, or one sample CSV (not for inductive).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub degree: u32,
    /// Fit solution-objective pairs instead of objectives only.
    #[arg(long)]
    pub graph: bool,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// model.json or response_surface.json
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub validation: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub resolution: u32,
    /// Optional metrics CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Repeatable, or comma separated.
    #[arg(long = "method", value_delimiter = ',', default_values_t = ["inductive".to_string(), "all-at-once".to_string()])]
    pub methods: Vec<String>,
    /// Repeat for a sweep, e.g. --sizes 1,2,1 --sizes 1,2,2
    #[arg(long, required = true)]
    pub sizes: Vec<String>,
    #[arg(long, default_value_t = 3)]
    pub degree: u32,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 20)]
    pub resolution: u32,
    #[arg(long)]
    pub graph: bool,
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Sample CSVs (one scatter series each) or one experiment results CSV.
    #[arg(long, required = true)]
    pub input: Vec<PathBuf>,
    /// Adds a grid sample of this model to the scatter panels.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub resolution: u32,
    #[arg(long)]
    pub out: PathBuf,
}

/// Failure with its exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InsufficientData { .. } | Error::InsufficientFront { .. } | Error::Domain(_) | Error::Io(_) => {
                Failure::Runtime(e.into())
            }
            _ => Failure::Usage(e.into()),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

fn runtime(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Runtime(e.into())
}

/// Reading inputs: any failure, including a missing file, is a usage error.
fn read_input<T>(path: &Path, read: impl FnOnce(&Path) -> bezier_simplex::Result<T>) -> Outcome<T> {
    read(path).with_context(|| format!("reading {}", path.display())).map_err(usage)
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(f) => {
            let (Failure::Usage(e) | Failure::Runtime(e)) = &f;
            eprintln!("error: {e:#}");
            f.code()
        }
    }
}

pub fn execute(command: Command) -> Outcome<()> {
    match command {
        Command::Generate(a) => generate(&a),
        Command::Fit(a) => with_jobs(a.jobs, || fit(&a)),
        Command::Evaluate(a) => with_jobs(a.jobs, || evaluate(&a)),
        Command::Experiment(a) => with_jobs(a.jobs, || experiment(&a)),
        Command::Plot(a) => plot(&a),
    }
}

#[cfg(feature = "parallel")]
fn with_jobs<R>(jobs: Option<usize>, f: impl FnOnce() -> Outcome<R> + Send) -> Outcome<R>
where
    R: Send,
{
    match jobs {
        Some(0) => Err(usage(anyhow!("--jobs must be at least 1"))),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(runtime)?
            .install(f),
        None => f(),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_jobs<R>(jobs: Option<usize>, f: impl FnOnce() -> Outcome<R>) -> Outcome<R> {
    if jobs == Some(0) {
        return Err(usage(anyhow!("--jobs must be at least 1")));
    }
    f()
}

/// What `generate` records next to the CSV files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub problem: String,
    pub seed: u64,
    pub sizes: Vec<usize>,
    pub validation_size: usize,
    pub pool_size: usize,
    pub normalization: Option<Normalization>,
    pub training: Vec<ManifestEntry>,
    pub validation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// 1-based objective indices joined by `-`.
    pub face: String,
    pub file: String,
    pub points: usize,
}

pub const MANIFEST: &str = "manifest.json";

fn write_json<T: Serialize>(path: &Path, value: &T) -> Outcome<()> {
    let text = serde_json::to_string_pretty(value).map_err(runtime)?;
    fs::write(path, text + "\n")
        .with_context(|| format!("writing {}", path.display()))
        .map_err(runtime)
}

fn create_dir(path: &Path) -> Outcome<()> {
    fs::create_dir_all(path)
        .with_context(|| format!("creating {}", path.display()))
        .map_err(runtime)
}

fn generate(a: &GenerateArgs) -> Outcome<()> {
    let problem: ProblemSpec = a.data.problem.parse()?;
    let sizes = parse_sizes(&a.sizes)?;
    let exec = Execution::default();
    let mut source = problem.source(a.data.seed, a.data.pool_size, exec)?;
    let spec = FrontSampleSpec {
        validation: a.data.validation,
        normalize: !a.data.no_normalize,
        pool_size: a.data.pool_size,
        ..FrontSampleSpec::new(sizes.clone(), a.data.seed)
    };
    let data = make_training_set_from(&mut source, &spec)?;
    create_dir(&a.out)?;
    let mut training = Vec::new();
    for (face, set) in &data.subsamples {
        let file = format!("train_{}.csv", face.label());
        set.save(a.out.join(&file))?;
        training.push(ManifestEntry {
            face: face.label(),
            file,
            points: set.len(),
        });
    }
    data.validation.save(a.out.join("validation.csv"))?;
    let manifest = Manifest {
        problem: problem.to_string(),
        seed: a.data.seed,
        sizes,
        validation_size: data.validation.len(),
        pool_size: a.data.pool_size,
        normalization: data.normalization.clone(),
        training,
        validation: "validation.csv".into(),
    };
    write_json(&a.out.join(MANIFEST), &manifest)?;
    println!(
        "wrote {} training files ({} points) and {} validation points to {}",
        manifest.training.len(),
        data.total_training(),
        data.validation.len(),
        a.out.display()
    );
    Ok(())
}

/// Per-face training samples of a `generate` directory, in skeleton order.
pub fn load_training_dir(dir: &Path) -> Outcome<Vec<(Face, SampleSet)>> {
    let manifest: Manifest = read_input(&dir.join(MANIFEST), |p| {
        Ok(serde_json::from_str(&fs::read_to_string(p)?)?)
    })?;
    let mut out = Vec::new();
    let mut dim = None;
    for entry in &manifest.training {
        let set = read_input(&dir.join(&entry.file), |p| SampleSet::load(p))?;
        let d = *dim.get_or_insert(set.dim());
        let face = Face::parse_label(&entry.face, d)?;
        out.push((face, set));
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(out)
}

/// Per-objective minimizers of a sample, as fitting targets.
fn argmin_vertices(set: &SampleSet, target: Target) -> Outcome<Vec<Vec<f64>>> {
    let targets = set.targets(target)?;
    let objectives = set.objectives();
    if objectives.is_empty() {
        return Err(usage(anyhow!("empty training sample")));
    }
    Ok((0..set.dim())
        .map(|m| {
            let best = (0..objectives.len())
                .min_by(|&i, &j| objectives[i][m].total_cmp(&objectives[j][m]))
                .unwrap_or(0);
            targets[best].clone()
        })
        .collect())
}

fn fit(a: &FitArgs) -> Outcome<()> {
    let method: Method = a.method.parse()?;
    let target = if a.graph { Target::Graph } else { Target::Front };
    let cfg = FitConfig::new(a.degree);
    cfg.validate()?;

    let faces = if a.input.is_dir() {
        Some(load_training_dir(&a.input)?)
    } else {
        None
    };
    let union = match &faces {
        Some(faces) => {
            let first = &faces.first().ok_or_else(|| usage(anyhow!("no training files")))?.1;
            let mut u = SampleSet::empty(first.dim(), first.solution_dim());
            for (_, s) in faces {
                u = u.union(s)?;
            }
            u
        }
        None => read_input(&a.input, |p| SampleSet::load(p))?,
    };
    let vertices = match &faces {
        Some(faces) => (0..union.dim())
            .map(|m| {
                let face = Face::vertex(m);
                faces
                    .iter()
                    .find(|(f, s)| *f == face && !s.is_empty())
                    .ok_or_else(|| {
                        Failure::from(Error::InsufficientData {
                            face: face.to_string(),
                            reason: "no training file for this vertex".into(),
                        })
                    })
                    .and_then(|(_, s)| Ok(s.targets(target)?.swap_remove(0)))
            })
            .collect::<Outcome<Vec<_>>>()?,
        None => argmin_vertices(&union, target)?,
    };
    create_dir(&a.out)?;

    let result = match method {
        Method::ResponseSurface => {
            if a.graph {
                return Err(usage(anyhow!("the response surface models objectives only")));
            }
            let rs = fit_response_surface(&union.objectives())?;
            rs.save(a.out.join("response_surface.json"))?;
            println!("response surface with {} coefficients", rs.coefficients.len());
            return Ok(());
        }
        Method::AllAtOnce => fit_all_at_once(&union.targets(target)?, &vertices, &cfg)?,
        Method::Inductive => {
            let Some(faces) = &faces else {
                return Err(usage(anyhow!(
                    "inductive fitting needs the per-face files of a generate directory"
                )));
            };
            let per_face = faces
                .iter()
                .map(|(f, s)| Ok((f.clone(), s.targets(target)?)))
                .collect::<bezier_simplex::Result<_>>()?;
            fit_inductive_skeleton(&per_face, &vertices, &cfg)?
        }
    };
    result.model.save(a.out.join("model.json"))?;
    let report: FitReport = result.report();
    write_json(&a.out.join("fit_report.json"), &report)?;
    for r in &result.face_reports {
        if let Some(w) = &r.warning {
            eprintln!("warning: {w}");
        }
        info!("face {:?}: {} iterations", r.face, r.iterations);
    }
    println!("outer iterations: {}", result.outer_iterations);
    println!("final sqrt(SSR)/N: {:e}", result.final_rms());
    Ok(())
}

/// A fitted model of either kind.
pub enum Model {
    Bezier(BezierSimplex),
    Surface(ResponseSurface),
}

impl Model {
    pub fn load(path: &Path) -> Outcome<Model> {
        let text = read_input(path, |p| Ok(fs::read_to_string(p)?))?;
        match BezierSimplex::from_json(&text) {
            Ok(m) => Ok(Model::Bezier(m)),
            Err(first) => ResponseSurface::from_json(&text)
                .map(Model::Surface)
                .map_err(|_| usage(anyhow!("{}: not a model file: {first}", path.display()))),
        }
    }

    pub fn grid(&self, resolution: u32, exec: Execution) -> Outcome<Vec<Vec<f64>>> {
        Ok(match self {
            Model::Bezier(m) => grid_sample_with(m, resolution, exec)?,
            Model::Surface(s) => s.sample(resolution)?,
        })
    }
}

/// Validation points in the coordinates the model lives in.
fn validation_targets(model: &Model, validation: &SampleSet) -> Outcome<Vec<Vec<f64>>> {
    let ambient = match model {
        Model::Bezier(m) => m.ambient(),
        Model::Surface(s) => s.dim,
    };
    let target = if ambient == validation.dim() {
        Target::Front
    } else if Some(ambient) == validation.solution_dim().map(|l| l + validation.dim()) {
        Target::Graph
    } else {
        return Err(usage(anyhow!(
            "model has dimension {ambient}, validation sample has {} objectives and {} solution variables",
            validation.dim(),
            validation.solution_dim().unwrap_or(0)
        )));
    };
    Ok(validation.targets(target)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub gd: f64,
    pub igd: f64,
}

fn evaluate(a: &EvaluateArgs) -> Outcome<()> {
    if a.resolution == 0 {
        return Err(usage(anyhow!("--resolution must be at least 1")));
    }
    let exec = Execution::default();
    let model = Model::load(&a.model)?;
    let validation = read_input(&a.validation, |p| SampleSet::load(p))?;
    let targets = validation_targets(&model, &validation)?;
    let grid = model.grid(a.resolution, exec)?;
    let m = Metrics {
        gd: gd_with(&grid, &targets, exec)?,
        igd: igd_with(&grid, &targets, exec)?,
    };
    println!("GD: {:e}", m.gd);
    println!("IGD: {:e}", m.igd);
    if let Some(out) = &a.out {
        let file = fs::File::create(out)
            .with_context(|| format!("writing {}", out.display()))
            .map_err(runtime)?;
        let mut w = csv::Writer::from_writer(file);
        w.serialize(m).map_err(runtime)?;
        w.flush().map_err(runtime)?;
    }
    Ok(())
}

fn experiment(a: &ExperimentArgs) -> Outcome<()> {
    let problem: ProblemSpec = a.data.problem.parse()?;
    let methods = a
        .methods
        .iter()
        .map(|m| m.parse())
        .collect::<bezier_simplex::Result<Vec<Method>>>()?;
    let sizes = a
        .sizes
        .iter()
        .map(|s| parse_sizes(s))
        .collect::<bezier_simplex::Result<Vec<_>>>()?;
    let cfg = ExperimentConfig {
        degree: a.degree,
        trials: a.trials,
        seed: a.data.seed,
        resolution: a.resolution,
        target: if a.graph { Target::Graph } else { Target::Front },
        validation: a.data.validation,
        pool_size: a.data.pool_size,
        normalize: !a.data.no_normalize,
        ..ExperimentConfig::new(problem, methods, sizes)
    };
    let rows = run_experiment(&cfg)?;
    create_dir(&a.out)?;
    let results = a.out.join("results.csv");
    let file = fs::File::create(&results)
        .with_context(|| format!("writing {}", results.display()))
        .map_err(runtime)?;
    write_rows(&rows, file)?;
    let summary = summarize(&rows);
    write_json(&a.out.join("summary.json"), &summary)?;
    let text = render_summary(&summary);
    fs::write(a.out.join("summary.txt"), &text).map_err(runtime)?;
    print!("{text}");
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    for r in rows.iter().filter(|r| r.error.is_some()) {
        eprintln!(
            "trial {} ({}, {}) failed: {}",
            r.trial,
            r.method,
            r.sizes,
            r.error.as_deref().unwrap_or("")
        );
    }
    if failed == rows.len() {
        return Err(runtime(anyhow!("all {failed} trials failed")));
    }
    Ok(())
}

fn is_results_csv(path: &Path) -> Outcome<bool> {
    let text = read_input(path, |p| Ok(fs::read_to_string(p)?))?;
    Ok(text.lines().next().is_some_and(|l| l.starts_with("problem,")))
}

fn plot(a: &PlotArgs) -> Outcome<()> {
    let svg = if a.input.len() == 1 && is_results_csv(&a.input[0])? {
        let rows = read_input(&a.input[0], |p| read_rows(fs::File::open(p)?))?;
        metric_boxplots(&rows)
    } else {
        let mut sets = Vec::new();
        for path in &a.input {
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            sets.push((name, read_input(path, |p| SampleSet::load(p))?.objectives()));
        }
        let dim = sets[0].1.first().map(Vec::len).unwrap_or(0);
        if let Some(path) = &a.model {
            let model = Model::load(path)?;
            let mut grid = model.grid(a.resolution, Execution::default())?;
            // graph models: plot their objective part
            let ambient = grid.first().map(Vec::len).unwrap_or(0);
            if ambient > dim {
                for p in &mut grid {
                    p.drain(..ambient - dim);
                }
            }
            sets.insert(0, ("model".into(), grid));
        }
        if sets.iter().any(|(_, pts)| pts.iter().any(|p| p.len() != dim)) {
            return Err(usage(anyhow!("plot inputs differ in dimension")));
        }
        let series: Vec<Series> = sets
            .iter()
            .map(|(n, pts)| Series { name: n, points: pts })
            .collect();
        pairwise_scatter(&series, dim)
    };
    fs::write(&a.out, svg)
        .with_context(|| format!("writing {}", a.out.display()))
        .map_err(runtime)?;
    Ok(())
}
