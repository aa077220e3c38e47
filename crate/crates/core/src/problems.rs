//! Benchmark problems, Pareto front sampling and training/validation splits.
//!
//! Fronts of Schaffer and M-MED are sampled analytically. ConstrEx, Osyczka2
//! and Viennet2 are sampled by brute force: a Latin-hypercube pool of feasible
//! points is evaluated and each subproblem front is read off the pool by
//! non-dominated filtering on the relevant objectives. An external CSV sample
//! can stand in for the pool.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_range, Execution};
use crate::face::Face;
use crate::pareto::{nondominated_mask, SamplePoint, SampleSet, Target};

pub const DEFAULT_POOL_SIZE: usize = 100_000;

/// Built-in benchmark problems (all minimization).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Problem {
    Schaffer,
    ConstrEx,
    Osyczka2,
    Viennet2,
    /// M-MED with the given number of objectives.
    Med(usize),
}

/// Objective vector and constraint status of one decision vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub objectives: Vec<f64>,
    pub feasible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrontGenerator {
    Analytic,
    BruteForce,
}

impl Problem {
    pub const NAMES: &'static [&'static str] =
        &["schaffer", "constrex", "osyczka2", "viennet2", "med3", "med5", "medM:<M>"];

    pub fn from_name(name: &str) -> Result<Self> {
        let lower = name.trim().to_ascii_lowercase();
        match lower.as_str() {
            "schaffer" => Ok(Problem::Schaffer),
            "constrex" => Ok(Problem::ConstrEx),
            "osyczka2" => Ok(Problem::Osyczka2),
            "viennet2" => Ok(Problem::Viennet2),
            "med3" => Ok(Problem::Med(3)),
            "med5" => Ok(Problem::Med(5)),
            other => other
                .strip_prefix("medm:")
                .and_then(|m| m.parse::<usize>().ok())
                .filter(|&m| m >= 2)
                .map(Problem::Med)
                .ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "unknown problem '{name}'; valid names: {}",
                        Problem::NAMES.join(", ")
                    ))
                }),
        }
    }

    pub fn num_vars(&self) -> usize {
        match self {
            Problem::Schaffer => 1,
            Problem::ConstrEx | Problem::Viennet2 => 2,
            Problem::Osyczka2 => 6,
            Problem::Med(m) => *m,
        }
    }

    pub fn num_objectives(&self) -> usize {
        match self {
            Problem::Schaffer | Problem::ConstrEx | Problem::Osyczka2 => 2,
            Problem::Viennet2 => 3,
            Problem::Med(m) => *m,
        }
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        match self {
            Problem::Schaffer => vec![(-100_000.0, 100_000.0)],
            Problem::ConstrEx => vec![(0.1, 1.0), (0.0, 5.0)],
            Problem::Osyczka2 => vec![
                (0.0, 10.0),
                (0.0, 10.0),
                (1.0, 5.0),
                (0.0, 6.0),
                (1.0, 5.0),
                (0.0, 10.0),
            ],
            Problem::Viennet2 => vec![(-4.0, 4.0), (-4.0, 4.0)],
            Problem::Med(m) => vec![(-5.12, 5.12); *m],
        }
    }

    pub fn front_generator(&self) -> FrontGenerator {
        match self {
            Problem::Schaffer | Problem::Med(_) => FrontGenerator::Analytic,
            _ => FrontGenerator::BruteForce,
        }
    }

    fn objectives_unchecked(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Problem::Schaffer => vec![x[0] * x[0], (x[0] - 2.0).powi(2)],
            Problem::ConstrEx => vec![x[0], (1.0 + x[1]) / x[0]],
            Problem::Osyczka2 => vec![
                -25.0 * (x[0] - 2.0).powi(2)
                    - (x[1] - 2.0).powi(2)
                    - (x[2] - 1.0).powi(2)
                    - (x[3] - 4.0).powi(2)
                    - (x[4] - 1.0).powi(2),
                x.iter().map(|v| v * v).sum(),
            ],
            Problem::Viennet2 => {
                let (a, b) = (x[0], x[1]);
                vec![
                    (a - 2.0).powi(2) / 2.0 + (b + 1.0).powi(2) / 13.0 + 3.0,
                    (a + b - 3.0).powi(2) / 36.0 + (-a + b + 2.0).powi(2) / 8.0 - 17.0,
                    (a + 2.0 * b - 1.0).powi(2) / 175.0 + (2.0 * b - a).powi(2) / 17.0 - 13.0,
                ]
            }
            Problem::Med(m) => (0..*m)
                .map(|k| {
                    let dist: f64 = x
                        .iter()
                        .enumerate()
                        .map(|(i, v)| {
                            let e = if i == k { 1.0 } else { 0.0 };
                            (v - e) * (v - e)
                        })
                        .sum::<f64>()
                        .sqrt();
                    (dist / 2f64.sqrt()).powf(med_exponent(k, *m))
                })
                .collect(),
        }
    }

    /// Inequality constraints in `g(x) >= 0` form.
    pub fn constraints(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Problem::ConstrEx => vec![x[1] + 9.0 * x[0] - 6.0, -x[1] + 9.0 * x[0] - 1.0],
            Problem::Osyczka2 => vec![
                x[0] + x[1] - 2.0,
                6.0 - x[0] - x[1],
                2.0 - x[1] + x[0],
                2.0 - x[0] + 3.0 * x[1],
                4.0 - (x[2] - 3.0).powi(2) - x[3],
                (x[4] - 3.0).powi(2) + x[5] - 4.0,
            ],
            _ => Vec::new(),
        }
    }

    pub fn evaluate_objectives(&self, x: &[f64]) -> Result<Evaluation> {
        let bounds = self.bounds();
        if x.len() != bounds.len() {
            return Err(Error::InvalidDimension(format!(
                "{self} takes {} variables, got {}",
                bounds.len(),
                x.len()
            )));
        }
        if let Some(i) = (0..x.len()).find(|&i| !(x[i] >= bounds[i].0 && x[i] <= bounds[i].1)) {
            return Err(Error::Domain(format!(
                "x{} = {} outside [{}, {}] for {self}",
                i + 1,
                x[i],
                bounds[i].0,
                bounds[i].1
            )));
        }
        Ok(Evaluation {
            objectives: self.objectives_unchecked(x),
            feasible: self.constraints(x).iter().all(|&g| g >= 0.0),
        })
    }

    /// Decision vector on the front of the subproblem `face`, parametrized by
    /// a point of `Delta^{|face|-1}`. Only defined for analytic problems.
    fn analytic_solution(&self, face: &Face, weights: &[f64]) -> Vec<f64> {
        match self {
            Problem::Schaffer => {
                // f1 optimum at x = 0, f2 optimum at x = 2
                let anchors = [0.0, 2.0];
                vec![face
                    .members()
                    .iter()
                    .zip(weights)
                    .map(|(&m, w)| w * anchors[m])
                    .sum()]
            }
            Problem::Med(dim) => {
                let mut x = vec![0.0; *dim];
                for (&m, w) in face.members().iter().zip(weights) {
                    x[m] = *w;
                }
                x
            }
            _ => unreachable!("brute-force problem has no analytic front"),
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Problem::Schaffer => write!(f, "schaffer"),
            Problem::ConstrEx => write!(f, "constrex"),
            Problem::Osyczka2 => write!(f, "osyczka2"),
            Problem::Viennet2 => write!(f, "viennet2"),
            Problem::Med(3) => write!(f, "med3"),
            Problem::Med(5) => write!(f, "med5"),
            Problem::Med(m) => write!(f, "medM:{m}"),
        }
    }
}

/// `p_m = exp(2(m-1)/(M-1) - 1)` with 1-based `m`; `k` here is 0-based.
fn med_exponent(k: usize, dim: usize) -> f64 {
    if dim < 2 {
        return 1.0;
    }
    (2.0 * k as f64 / (dim as f64 - 1.0) - 1.0).exp()
}

fn random_simplex_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let sum: f64 = raw.iter().sum();
    raw.iter().map(|v| v / sum).collect()
}

/// Latin-hypercube sample of `n` points in the box `bounds`.
pub fn latin_hypercube(rng: &mut ChaCha8Rng, bounds: &[(f64, f64)], n: usize) -> Vec<Vec<f64>> {
    let mut points = vec![vec![0.0; bounds.len()]; n];
    for (j, &(lo, hi)) in bounds.iter().enumerate() {
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(rng);
        for (i, s) in strata.into_iter().enumerate() {
            let u: f64 = rng.random();
            points[i][j] = lo + (hi - lo) * (s as f64 + u) / n as f64;
        }
    }
    points
}

/// Draws fronts of subproblems, without replacement for finite pools.
pub struct FrontSource {
    kind: SourceKind,
    rng: ChaCha8Rng,
    used: HashSet<usize>,
    fronts: HashMap<Face, Vec<usize>>,
}

enum SourceKind {
    Analytic(Problem),
    Pool { label: String, pool: SampleSet },
}

impl FrontSource {
    /// Source for a built-in problem; brute-force problems build their pool
    /// of `pool_size` feasible points here.
    pub fn new(problem: Problem, seed: u64, pool_size: usize, exec: Execution) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kind = match problem.front_generator() {
            FrontGenerator::Analytic => SourceKind::Analytic(problem),
            FrontGenerator::BruteForce => SourceKind::Pool {
                label: problem.to_string(),
                pool: feasible_pool(problem, pool_size, &mut rng, exec)?,
            },
        };
        Ok(FrontSource {
            kind,
            rng,
            used: HashSet::new(),
            fronts: HashMap::new(),
        })
    }

    /// Source backed by a fixed sample, e.g. one loaded from CSV.
    pub fn from_pool(label: impl Into<String>, pool: SampleSet, seed: u64) -> Self {
        FrontSource {
            kind: SourceKind::Pool {
                label: label.into(),
                pool,
            },
            rng: ChaCha8Rng::seed_from_u64(seed),
            used: HashSet::new(),
            fronts: HashMap::new(),
        }
    }

    pub fn num_objectives(&self) -> usize {
        match &self.kind {
            SourceKind::Analytic(p) => p.num_objectives(),
            SourceKind::Pool { pool, .. } => pool.dim(),
        }
    }

    pub fn solution_dim(&self) -> Option<usize> {
        match &self.kind {
            SourceKind::Analytic(p) => Some(p.num_vars()),
            SourceKind::Pool { pool, .. } => pool.solution_dim(),
        }
    }

    /// Pool indices on the front of the subproblem `face`.
    fn pool_front(&mut self, face: &Face) -> Vec<usize> {
        let SourceKind::Pool { pool, .. } = &self.kind else {
            return Vec::new();
        };
        self.fronts
            .entry(face.clone())
            .or_insert_with(|| {
                let projected: Vec<Vec<f64>> = pool
                    .points()
                    .iter()
                    .map(|p| face.members().iter().map(|&m| p.objectives[m]).collect())
                    .collect();
                nondominated_mask(&projected)
                    .into_iter()
                    .enumerate()
                    .filter_map(|(i, k)| k.then_some(i))
                    .collect()
            })
            .clone()
    }

    /// Per-objective `(min, max)` over the full front.
    pub fn front_range(&mut self) -> Vec<(f64, f64)> {
        let dim = self.num_objectives();
        match &self.kind {
            SourceKind::Analytic(Problem::Schaffer) => vec![(0.0, 4.0); 2],
            SourceKind::Analytic(_) => vec![(0.0, 1.0); dim],
            SourceKind::Pool { .. } => {
                let front = self.pool_front(&Face::full(dim));
                let SourceKind::Pool { pool, .. } = &self.kind else {
                    unreachable!()
                };
                (0..dim)
                    .map(|m| {
                        front.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                            let v = pool.points()[i].objectives[m];
                            (lo.min(v), hi.max(v))
                        })
                    })
                    .collect()
            }
        }
    }

    /// Draws `n` points from the front of the subproblem `face`. Pool-backed
    /// sources never return a point twice across calls.
    pub fn draw(&mut self, face: &Face, n: usize) -> Result<SampleSet> {
        let dim = self.num_objectives();
        if face.members().iter().any(|&m| m >= dim) {
            return Err(Error::InvalidFace(format!("{face} outside {dim} objectives")));
        }
        match &self.kind {
            SourceKind::Analytic(problem) => {
                let problem = *problem;
                let points = (0..n)
                    .map(|_| {
                        let w = random_simplex_weights(&mut self.rng, face.len());
                        let x = problem.analytic_solution(face, &w);
                        SamplePoint::with_solution(problem.objectives_unchecked(&x), x)
                    })
                    .collect();
                SampleSet::new(dim, Some(problem.num_vars()), points)
            }
            SourceKind::Pool { .. } => {
                let front = self.pool_front(face);
                let mut available: Vec<usize> =
                    front.into_iter().filter(|i| !self.used.contains(i)).collect();
                let SourceKind::Pool { label, pool } = &self.kind else {
                    unreachable!()
                };
                if available.len() < n {
                    return Err(Error::InsufficientFront {
                        requested: n,
                        available: available.len(),
                        context: format!("{label}, face {face}"),
                    });
                }
                available.shuffle(&mut self.rng);
                available.truncate(n);
                available.sort_unstable();
                let points = available.iter().map(|&i| pool.points()[i].clone()).collect();
                self.used.extend(available);
                SampleSet::new(pool.dim(), pool.solution_dim(), points)
            }
        }
    }

    /// Up to `n` unused points of the full front.
    fn draw_at_most(&mut self, n: usize) -> Result<SampleSet> {
        let full = Face::full(self.num_objectives());
        if let SourceKind::Pool { .. } = &self.kind {
            let left = self
                .pool_front(&full)
                .into_iter()
                .filter(|i| !self.used.contains(i))
                .count();
            return self.draw(&full, n.min(left));
        }
        self.draw(&full, n)
    }
}

fn feasible_pool(problem: Problem, size: usize, rng: &mut ChaCha8Rng, exec: Execution) -> Result<SampleSet> {
    let bounds = problem.bounds();
    let mut points: Vec<SamplePoint> = Vec::with_capacity(size);
    for _ in 0..50 {
        let batch = latin_hypercube(rng, &bounds, size);
        let evaluated: Vec<Option<SamplePoint>> = map_range(exec, batch.len(), |i| {
            let x = &batch[i];
            problem
                .evaluate_objectives(x)
                .ok()
                .filter(|e| e.feasible)
                .map(|e| SamplePoint::with_solution(e.objectives, x.clone()))
        });
        points.extend(evaluated.into_iter().flatten().take(size - points.len()));
        if points.len() == size {
            break;
        }
    }
    if points.len() < size {
        return Err(Error::InsufficientFront {
            requested: size,
            available: points.len(),
            context: format!("feasible pool for {problem}"),
        });
    }
    SampleSet::new(problem.num_objectives(), Some(problem.num_vars()), points)
}

/// `n` mutually non-dominated points of the full front of `problem`.
pub fn generate_front_sample(problem: Problem, n: usize, seed: u64) -> Result<SampleSet> {
    generate_front_sample_with(problem, n, seed, &FrontOptions::default())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontOptions {
    /// Start the sample with the single-objective optima.
    pub include_endpoints: bool,
    pub pool_size: usize,
    pub execution: Execution,
}

impl Default for FrontOptions {
    fn default() -> Self {
        FrontOptions {
            include_endpoints: false,
            pool_size: DEFAULT_POOL_SIZE,
            execution: Execution::default(),
        }
    }
}

pub fn generate_front_sample_with(problem: Problem, n: usize, seed: u64, opts: &FrontOptions) -> Result<SampleSet> {
    if n == 0 {
        return Err(Error::InvalidInput("front sample size must be at least 1".into()));
    }
    let mut source = FrontSource::new(problem, seed, opts.pool_size, opts.execution)?;
    let dim = problem.num_objectives();
    let mut sample = SampleSet::empty(dim, Some(problem.num_vars()));
    if opts.include_endpoints {
        for m in 0..dim.min(n) {
            sample = sample.union(&source.draw(&Face::vertex(m), 1)?)?;
        }
    }
    let rest = n - sample.len();
    if rest > 0 {
        sample = sample.union(&source.draw(&Face::full(dim), rest)?)?;
    }
    Ok(sample)
}

/// Subsample sizes per face cardinality and the validation size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontSampleSpec {
    /// `sizes[k]` points for every face with `k + 1` vertices.
    pub sizes: Vec<usize>,
    pub validation: usize,
    pub seed: u64,
    /// Rescale objectives so the front spans `[0, 1]` in every coordinate.
    pub normalize: bool,
    pub pool_size: usize,
}

impl FrontSampleSpec {
    pub fn new(sizes: Vec<usize>, seed: u64) -> Self {
        FrontSampleSpec {
            sizes,
            validation: 1000,
            seed,
            normalize: true,
            pool_size: DEFAULT_POOL_SIZE,
        }
    }

    /// `sum_k C(M, k) N_k`.
    pub fn total_training(&self, dim: usize) -> usize {
        self.sizes
            .iter()
            .enumerate()
            .map(|(k, &n)| crate::bezier::binomial(dim as u64, k as u64 + 1) as usize * n)
            .sum()
    }
}

/// Affine rescaling `(f - lo) / (hi - lo)` per objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Normalization {
    pub fn from_range(range: &[(f64, f64)]) -> Self {
        Normalization {
            lower: range.iter().map(|r| r.0).collect(),
            upper: range.iter().map(|r| r.1).collect(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.lower.iter().all(|&v| v == 0.0) && self.upper.iter().all(|&v| v == 1.0)
    }

    pub fn apply(&self, set: &SampleSet) -> Result<SampleSet> {
        let points = set
            .points()
            .iter()
            .map(|p| {
                let mut q = p.clone();
                for (m, v) in q.objectives.iter_mut().enumerate() {
                    let span = self.upper[m] - self.lower[m];
                    *v = if span > 0.0 { (*v - self.lower[m]) / span } else { *v - self.lower[m] };
                }
                q
            })
            .collect();
        SampleSet::new(set.dim(), set.solution_dim(), points)
    }
}

/// Training subsamples per face plus a disjoint validation sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub subsamples: BTreeMap<Face, SampleSet>,
    pub validation: SampleSet,
    pub normalization: Option<Normalization>,
}

impl TrainingSet {
    pub fn dim(&self) -> usize {
        self.validation.dim()
    }

    /// All training points, in skeleton order of their faces.
    pub fn union(&self) -> Result<SampleSet> {
        let mut out = SampleSet::empty(self.validation.dim(), self.validation.solution_dim());
        for s in self.subsamples.values() {
            out = out.union(s)?;
        }
        Ok(out)
    }

    pub fn total_training(&self) -> usize {
        self.subsamples.values().map(SampleSet::len).sum()
    }

    /// First point of every vertex subsample, as fitting targets.
    pub fn vertex_optima(&self, target: Target) -> Result<Vec<Vec<f64>>> {
        (0..self.dim())
            .map(|m| {
                let face = Face::vertex(m);
                self.subsamples
                    .get(&face)
                    .filter(|s| !s.is_empty())
                    .ok_or_else(|| Error::InsufficientData {
                        face: face.to_string(),
                        reason: "no single-objective optimum in the training set".into(),
                    })
                    .and_then(|s| s.targets(target))
                    .map(|mut t| t.swap_remove(0))
            })
            .collect()
    }

    pub fn face_targets(&self, target: Target) -> Result<BTreeMap<Face, Vec<Vec<f64>>>> {
        self.subsamples
            .iter()
            .map(|(f, s)| s.targets(target).map(|t| (f.clone(), t)))
            .collect()
    }
}

/// Draws pairwise disjoint subsamples of every subproblem front and a
/// validation sample of the full front, disjoint from all of them.
pub fn make_training_set(problem: Problem, spec: &FrontSampleSpec) -> Result<TrainingSet> {
    let mut source = FrontSource::new(problem, spec.seed, spec.pool_size, Execution::default())?;
    make_training_set_from(&mut source, spec)
}

pub fn make_training_set_from(source: &mut FrontSource, spec: &FrontSampleSpec) -> Result<TrainingSet> {
    let dim = source.num_objectives();
    let max_len = spec.sizes.len().min(dim);
    let mut subsamples = BTreeMap::new();
    for face in Face::all(dim, max_len) {
        let n = spec.sizes[face.len() - 1];
        if n == 0 {
            continue;
        }
        subsamples.insert(face.clone(), source.draw(&face, n)?);
    }
    let validation = source.draw_at_most(spec.validation)?;
    if validation.is_empty() {
        return Err(Error::InsufficientFront {
            requested: spec.validation,
            available: 0,
            context: "validation sample".into(),
        });
    }
    let mut set = TrainingSet {
        subsamples,
        validation,
        normalization: None,
    };
    if spec.normalize {
        let norm = Normalization::from_range(&source.front_range());
        if !norm.is_identity() {
            for s in set.subsamples.values_mut() {
                *s = norm.apply(s)?;
            }
            set.validation = norm.apply(&set.validation)?;
        }
        set.normalization = Some(norm);
    }
    Ok(set)
}

pub fn load_sample(path: impl AsRef<Path>) -> Result<SampleSet> {
    SampleSet::load(path)
}
