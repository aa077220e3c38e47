//! Repeated-trial experiments: draw training data, fit each method, score
//! GD / IGD against the validation sample.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use bezier_simplex::exec::Execution;
use bezier_simplex::metrics::{gd_with, grid_sample_with, igd_with};
use bezier_simplex::problems::{make_training_set_from, FrontSource, DEFAULT_POOL_SIZE};
use bezier_simplex::response_surface::fit_response_surface;
use bezier_simplex::{
    fit_all_at_once, fit_inductive_skeleton, Error, FitConfig, FrontSampleSpec, Problem, Result, SampleSet,
    Target, TrainingSet,
};
use serde::{Deserialize, Serialize};

use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Inductive,
    AllAtOnce,
    ResponseSurface,
}

impl Method {
    pub const NAMES: &'static [&'static str] = &["inductive", "all-at-once", "response-surface"];
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inductive" | "inductive-skeleton" => Ok(Method::Inductive),
            "all-at-once" | "allatonce" => Ok(Method::AllAtOnce),
            "response-surface" | "rs" => Ok(Method::ResponseSurface),
            _ => Err(Error::InvalidInput(format!(
                "unknown method '{s}'; valid methods: {}",
                Method::NAMES.join(", ")
            ))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Inductive => "inductive",
            Method::AllAtOnce => "all-at-once",
            Method::ResponseSurface => "response-surface",
        })
    }
}

/// A built-in problem or a CSV front sample (`file:<path>`).
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    Builtin(Problem),
    File(PathBuf),
}

impl FromStr for ProblemSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.strip_prefix("file:") {
            Some(path) if !path.is_empty() => Ok(ProblemSpec::File(PathBuf::from(path))),
            Some(_) => Err(Error::InvalidInput("file: needs a path".into())),
            None => Problem::from_name(s).map(ProblemSpec::Builtin).map_err(|_| {
                Error::InvalidInput(format!(
                    "unknown problem '{s}'; valid names: {}, file:<path>",
                    Problem::NAMES.join(", ")
                ))
            }),
        }
    }
}

impl fmt::Display for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProblemSpec::Builtin(p) => write!(f, "{p}"),
            ProblemSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl ProblemSpec {
    /// Front source seeded with `seed`. Pool-backed sources are rebuilt per
    /// call so every trial owns its state.
    pub fn source(&self, seed: u64, pool_size: usize, exec: Execution) -> Result<FrontSource> {
        match self {
            ProblemSpec::Builtin(p) => FrontSource::new(*p, seed, pool_size, exec),
            ProblemSpec::File(path) => {
                let pool = SampleSet::load(path)?;
                Ok(FrontSource::from_pool(self.to_string(), pool, seed))
            }
        }
    }
}

/// Parses `1,2,1` (also `1-2-1`) into subsample sizes.
pub fn parse_sizes(s: &str) -> Result<Vec<usize>> {
    let sizes: Vec<usize> = s
        .split([',', '-'])
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidInput(format!("bad subsample sizes '{s}'")))
        })
        .collect::<Result<_>>()?;
    if sizes.is_empty() || sizes[0] == 0 {
        return Err(Error::InvalidInput(format!(
            "subsample sizes '{s}' must start with a positive vertex count"
        )));
    }
    Ok(sizes)
}

pub fn sizes_label(sizes: &[usize]) -> String {
    sizes.iter().map(usize::to_string).collect::<Vec<_>>().join("-")
}

/// Everything shared by the trials of one experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub methods: Vec<Method>,
    pub degree: u32,
    /// One entry per sweep point.
    pub sizes: Vec<Vec<usize>>,
    pub trials: usize,
    pub seed: u64,
    pub resolution: u32,
    pub target: Target,
    pub validation: usize,
    pub pool_size: usize,
    pub normalize: bool,
    pub execution: Execution,
}

impl ExperimentConfig {
    pub fn new(problem: ProblemSpec, methods: Vec<Method>, sizes: Vec<Vec<usize>>) -> Self {
        ExperimentConfig {
            problem,
            methods,
            degree: 3,
            sizes,
            trials: 20,
            seed: 0,
            resolution: 20,
            target: Target::Front,
            validation: 1000,
            pool_size: DEFAULT_POOL_SIZE,
            normalize: true,
            execution: Execution::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidInput("trials must be at least 1".into()));
        }
        if self.methods.is_empty() || self.sizes.is_empty() {
            return Err(Error::InvalidInput("need at least one method and one size vector".into()));
        }
        if self.resolution == 0 {
            return Err(Error::InvalidInput("grid resolution must be at least 1".into()));
        }
        if self.target == Target::Graph && self.methods.contains(&Method::ResponseSurface) {
            return Err(Error::InvalidInput(
                "the response surface models objectives only; drop it in graph mode".into(),
            ));
        }
        FitConfig::new(self.degree).validate()
    }

    fn fit_config(&self) -> FitConfig {
        FitConfig::new(self.degree).with_execution(self.execution)
    }

    pub fn training_set(&self, sizes: &[usize], seed: u64) -> Result<TrainingSet> {
        let mut source = self.problem.source(seed, self.pool_size, self.execution)?;
        let spec = FrontSampleSpec {
            validation: self.validation,
            normalize: self.normalize,
            pool_size: self.pool_size,
            ..FrontSampleSpec::new(sizes.to_vec(), seed)
        };
        make_training_set_from(&mut source, &spec)
    }
}

/// GD / IGD of one fitted method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    pub gd: f64,
    pub igd: f64,
    /// Outer iterations; `None` for the response surface.
    pub iterations: Option<usize>,
}

/// Fits `method` to `data` and scores a grid sample of the result against
/// the validation set.
pub fn score_method(
    method: Method,
    data: &TrainingSet,
    degree: u32,
    resolution: u32,
    target: Target,
    exec: Execution,
) -> Result<Score> {
    let cfg = FitConfig::new(degree).with_execution(exec);
    let validation = data.validation.targets(target)?;
    let (grid, iterations) = match method {
        Method::Inductive => {
            let fit = fit_inductive_skeleton(&data.face_targets(target)?, &data.vertex_optima(target)?, &cfg)?;
            (grid_sample_with(&fit.model, resolution, exec)?, Some(fit.outer_iterations))
        }
        Method::AllAtOnce => {
            let fit = fit_all_at_once(&data.union()?.targets(target)?, &data.vertex_optima(target)?, &cfg)?;
            (grid_sample_with(&fit.model, resolution, exec)?, Some(fit.outer_iterations))
        }
        Method::ResponseSurface => {
            if target == Target::Graph {
                return Err(Error::InvalidInput("the response surface models objectives only".into()));
            }
            let rs = fit_response_surface(&data.union()?.objectives())?;
            (rs.sample(resolution)?, None)
        }
    };
    Ok(Score {
        gd: gd_with(&grid, &validation, exec)?,
        igd: igd_with(&grid, &validation, exec)?,
        iterations,
    })
}

/// One row of the results CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub problem: String,
    pub method: Method,
    pub sizes: String,
    pub trial: usize,
    pub seed: u64,
    pub gd: Option<f64>,
    pub igd: Option<f64>,
    pub iterations: Option<usize>,
    pub error: Option<String>,
}

impl TrialRow {
    fn sort_key(&self) -> (Vec<usize>, Method, usize) {
        let sizes = self.sizes.split('-').filter_map(|s| s.parse().ok()).collect();
        (sizes, self.method, self.trial)
    }
}

/// Runs trial `trial` of one sweep point: seed `seed + trial`, one training
/// set shared by every method.
pub fn run_trial(cfg: &ExperimentConfig, sizes: &[usize], trial: usize) -> Vec<TrialRow> {
    let seed = cfg.seed.wrapping_add(trial as u64);
    let row = |method: Method, outcome: Result<Score>| {
        let (score, error) = match outcome {
            Ok(s) => (Some(s), None),
            Err(e) => (None, Some(e.to_string())),
        };
        TrialRow {
            problem: cfg.problem.to_string(),
            method,
            sizes: sizes_label(sizes),
            trial,
            seed,
            gd: score.map(|s| s.gd),
            igd: score.map(|s| s.igd),
            iterations: score.and_then(|s| s.iterations),
            error,
        }
    };
    match cfg.training_set(sizes, seed) {
        Ok(data) => cfg
            .methods
            .iter()
            .map(|&m| {
                let fit = cfg.fit_config();
                row(m, score_method(m, &data, fit.degree, cfg.resolution, cfg.target, cfg.execution))
            })
            .collect(),
        Err(e) => {
            let msg = e.to_string();
            cfg.methods
                .iter()
                .map(|&m| row(m, Err(Error::InvalidInput(msg.clone()))))
                .collect()
        }
    }
}

/// All trials of all sweep points, rows sorted by sizes, method and trial.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<TrialRow>> {
    cfg.validate()?;
    let jobs: Vec<(Vec<usize>, usize)> = cfg
        .sizes
        .iter()
        .flat_map(|s| (0..cfg.trials).map(move |t| (s.clone(), t)))
        .collect();
    let nested = bezier_simplex::exec::map_slice(cfg.execution, &jobs, |(sizes, t)| run_trial(cfg, sizes, *t));
    let mut rows: Vec<TrialRow> = nested.into_iter().flatten().collect();
    rows.sort_by_key(TrialRow::sort_key);
    Ok(rows)
}

pub fn write_rows<W: std::io::Write>(rows: &[TrialRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<R: std::io::Read>(reader: R) -> Result<Vec<TrialRow>> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub sd: f64,
    pub median: f64,
}

impl MetricSummary {
    fn of(xs: &[f64]) -> Option<Self> {
        (!xs.is_empty()).then(|| MetricSummary {
            mean: stats::mean(xs),
            sd: stats::std_dev(xs),
            median: stats::median(xs),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub sizes: String,
    pub method: Method,
    pub trials: usize,
    pub failures: usize,
    pub gd: Option<MetricSummary>,
    pub igd: Option<MetricSummary>,
    pub iterations: Option<MetricSummary>,
}

/// One-tailed U test of the first method against the second on one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub sizes: String,
    pub metric: String,
    /// Alternative: `less` has smaller values than `greater`.
    pub less: Method,
    pub greater: Method,
    pub u: f64,
    pub p: f64,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub problem: String,
    pub groups: Vec<GroupSummary>,
    /// Present when exactly two methods were run. p-values are not corrected
    /// for multiple comparisons.
    pub comparisons: Vec<Comparison>,
}

pub fn summarize(rows: &[TrialRow]) -> Summary {
    let mut groups: BTreeMap<(Vec<usize>, String, Method), Vec<&TrialRow>> = BTreeMap::new();
    for r in rows {
        let (key_sizes, method, _) = r.sort_key();
        groups.entry((key_sizes, r.sizes.clone(), method)).or_default().push(r);
    }
    let metric = |rs: &[&TrialRow], f: fn(&TrialRow) -> Option<f64>| -> Vec<f64> {
        rs.iter().filter_map(|r| f(r)).collect()
    };
    let mut out = Vec::new();
    type Groups<'a> = BTreeMap<(Vec<usize>, String), Vec<(Method, Vec<&'a TrialRow>)>>;
    let mut by_sizes: Groups = BTreeMap::new();
    for ((key, label, method), rs) in &groups {
        out.push(GroupSummary {
            sizes: label.clone(),
            method: *method,
            trials: rs.len(),
            failures: rs.iter().filter(|r| r.error.is_some()).count(),
            gd: MetricSummary::of(&metric(rs, |r| r.gd)),
            igd: MetricSummary::of(&metric(rs, |r| r.igd)),
            iterations: MetricSummary::of(&metric(rs, |r| r.iterations.map(|i| i as f64))),
        });
        by_sizes
            .entry((key.clone(), label.clone()))
            .or_default()
            .push((*method, rs.clone()));
    }

    let mut comparisons = Vec::new();
    let mut method_order: Vec<Method> = Vec::new();
    for r in rows {
        if !method_order.contains(&r.method) {
            method_order.push(r.method);
        }
    }
    if method_order.len() == 2 {
        for ((_, label), entries) in &by_sizes {
            let find = |m: Method| entries.iter().find(|(k, _)| *k == m).map(|(_, rs)| rs);
            let (Some(a), Some(b)) = (find(method_order[0]), find(method_order[1])) else {
                continue;
            };
            for (name, f) in [
                ("gd", (|r: &TrialRow| r.gd) as fn(&TrialRow) -> Option<f64>),
                ("igd", |r: &TrialRow| r.igd),
            ] {
                if let Some(t) = stats::mann_whitney_less(&metric(a, f), &metric(b, f)) {
                    comparisons.push(Comparison {
                        sizes: label.clone(),
                        metric: name.into(),
                        less: method_order[0],
                        greater: method_order[1],
                        u: t.u,
                        p: t.p,
                        exact: t.exact,
                    });
                }
            }
        }
    }
    Summary {
        problem: rows.first().map(|r| r.problem.clone()).unwrap_or_default(),
        groups: out,
        comparisons,
    }
}

fn fmt_metric(m: &Option<MetricSummary>) -> String {
    match m {
        Some(s) => format!("{:.3e} ± {:.2e}", s.mean, s.sd),
        None => "n/a".into(),
    }
}

/// Plain-text table of a summary.
pub fn render_summary(summary: &Summary) -> String {
    let mut s = format!("problem: {}\n", summary.problem);
    s += &format!(
        "{:<10} {:<17} {:>6} {:>22} {:>22} {:>18}\n",
        "sizes", "method", "ok", "GD", "IGD", "iterations"
    );
    for g in &summary.groups {
        let iters = g
            .iterations
            .as_ref()
            .map(|i| format!("{:.2} ± {:.2}", i.mean, i.sd))
            .unwrap_or_else(|| "-".into());
        s += &format!(
            "{:<10} {:<17} {:>6} {:>22} {:>22} {:>18}\n",
            g.sizes,
            g.method.to_string(),
            format!("{}/{}", g.trials - g.failures, g.trials),
            fmt_metric(&g.gd),
            fmt_metric(&g.igd),
            iters
        );
    }
    if !summary.comparisons.is_empty() {
        s += "\none-tailed Mann-Whitney U (uncorrected):\n";
        for c in &summary.comparisons {
            s += &format!(
                "{:<10} {:<4} {} < {}: U = {}, p = {:.4}{}\n",
                c.sizes,
                c.metric,
                c.less,
                c.greater,
                c.u,
                c.p,
                if c.exact { " (exact)" } else { "" }
            );
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_names() {
        assert_eq!("med3".parse::<ProblemSpec>().unwrap(), ProblemSpec::Builtin(Problem::Med(3)));
        assert_eq!(
            "file:a/b.csv".parse::<ProblemSpec>().unwrap(),
            ProblemSpec::File("a/b.csv".into())
        );
        let err = "nope".parse::<ProblemSpec>().unwrap_err().to_string();
        assert!(err.contains("schaffer") && err.contains("file:<path>"));
        assert_eq!("all-at-once".parse::<Method>().unwrap(), Method::AllAtOnce);
        assert!("newton".parse::<Method>().is_err());
        assert_eq!(parse_sizes("1,2,1").unwrap(), vec![1, 2, 1]);
        assert!(parse_sizes("0,2").is_err());
        assert!(parse_sizes("1,x").is_err());
    }

    #[test]
    fn rows_per_method_and_sorted() {
        let mut cfg = ExperimentConfig::new(
            ProblemSpec::Builtin(Problem::Med(3)),
            vec![Method::AllAtOnce, Method::Inductive],
            vec![vec![1, 2, 1]],
        );
        cfg.trials = 3;
        cfg.validation = 200;
        let rows = run_experiment(&cfg).unwrap();
        assert_eq!(rows.len(), 6);
        assert!(rows.windows(2).all(|w| w[0].sort_key() <= w[1].sort_key()));
        assert!(rows.iter().all(|r| r.error.is_none()));
        let summary = summarize(&rows);
        assert_eq!(summary.groups.len(), 2);
        assert_eq!(summary.comparisons.len(), 2);
    }

    #[test]
    fn summary_matches_rows() {
        let rows: Vec<TrialRow> = (0..4)
            .map(|t| TrialRow {
                problem: "med3".into(),
                method: Method::Inductive,
                sizes: "1-2-1".into(),
                trial: t,
                seed: t as u64,
                gd: Some(t as f64),
                igd: if t == 3 { None } else { Some(1.0) },
                iterations: Some(2),
                error: if t == 3 { Some("boom".into()) } else { None },
            })
            .collect();
        let s = summarize(&rows);
        assert_eq!(s.groups[0].failures, 1);
        assert_eq!(s.groups[0].gd.as_ref().unwrap().mean, 1.5);
        assert_eq!(s.groups[0].igd.as_ref().unwrap().sd, 0.0);
        let mut buf = Vec::new();
        write_rows(&rows, &mut buf).unwrap();
        assert_eq!(read_rows(buf.as_slice()).unwrap(), rows);
    }
}
