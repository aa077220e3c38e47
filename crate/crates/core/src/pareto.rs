//! Pareto dominance, non-dominated filtering and the skeleton decomposition
//! of a sample into per-face subsamples.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::face::Face;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub objectives: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
}

impl SamplePoint {
    pub fn new(objectives: Vec<f64>) -> Self {
        SamplePoint {
            objectives,
            solution: None,
            tag: None,
        }
    }

    pub fn with_solution(objectives: Vec<f64>, solution: Vec<f64>) -> Self {
        SamplePoint {
            objectives,
            solution: Some(solution),
            tag: None,
        }
    }
}

/// Which vectors of a sample a model is fitted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    /// Objective vectors only (`A = M`).
    #[default]
    Front,
    /// Solution followed by objectives, `(x, f(x))` (`A = L + M`).
    Graph,
}

/// A point cloud in objective space, optionally paired with solutions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampleSet {
    dim: usize,
    solution_dim: Option<usize>,
    points: Vec<SamplePoint>,
}

impl SampleSet {
    pub fn new(dim: usize, solution_dim: Option<usize>, points: Vec<SamplePoint>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension("sample needs at least one objective".into()));
        }
        for (i, p) in points.iter().enumerate() {
            if p.objectives.len() != dim {
                return Err(Error::InvalidDimension(format!(
                    "point {i} has {} objectives, expected {dim}",
                    p.objectives.len()
                )));
            }
            if p.objectives.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("point {i} has non-finite objectives")));
            }
            match (solution_dim, &p.solution) {
                (None, None) => {}
                (Some(l), Some(x)) if x.len() == l && x.iter().all(|v| v.is_finite()) => {}
                _ => {
                    return Err(Error::InvalidDimension(format!(
                        "point {i} does not carry a finite solution of length {solution_dim:?}"
                    )))
                }
            }
        }
        Ok(SampleSet {
            dim,
            solution_dim,
            points,
        })
    }

    /// Builds an objective-only set from raw vectors.
    pub fn from_objectives(dim: usize, objectives: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(dim, None, objectives.into_iter().map(SamplePoint::new).collect())
    }

    pub fn empty(dim: usize, solution_dim: Option<usize>) -> Self {
        SampleSet {
            dim,
            solution_dim,
            points: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn solution_dim(&self) -> Option<usize> {
        self.solution_dim
    }

    pub fn points(&self) -> &[SamplePoint] {
        &self.points
    }

    pub fn into_points(self) -> Vec<SamplePoint> {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn objectives(&self) -> Vec<Vec<f64>> {
        self.points.iter().map(|p| p.objectives.clone()).collect()
    }

    /// Ambient dimension of fitting targets for `target`.
    pub fn target_dim(&self, target: Target) -> Result<usize> {
        match target {
            Target::Front => Ok(self.dim),
            Target::Graph => self.solution_dim.map(|l| l + self.dim).ok_or_else(|| {
                Error::InvalidInput("graph fitting needs samples with solutions".into())
            }),
        }
    }

    /// The vectors a model is fitted to: objectives, or `(x, f(x))`.
    pub fn targets(&self, target: Target) -> Result<Vec<Vec<f64>>> {
        self.target_dim(target)?;
        Ok(self
            .points
            .iter()
            .map(|p| match target {
                Target::Front => p.objectives.clone(),
                Target::Graph => {
                    let mut v = p.solution.clone().unwrap_or_default();
                    v.extend_from_slice(&p.objectives);
                    v
                }
            })
            .collect())
    }

    /// Points of `self` followed by points of `other`.
    pub fn union(&self, other: &SampleSet) -> Result<SampleSet> {
        if self.dim != other.dim || self.solution_dim != other.solution_dim {
            return Err(Error::InvalidDimension("cannot join samples of different shapes".into()));
        }
        let mut points = self.points.clone();
        points.extend(other.points.iter().cloned());
        Ok(SampleSet {
            dim: self.dim,
            solution_dim: self.solution_dim,
            points,
        })
    }

    fn select(&self, keep: &[bool]) -> SampleSet {
        SampleSet {
            dim: self.dim,
            solution_dim: self.solution_dim,
            points: self
                .points
                .iter()
                .zip(keep)
                .filter(|(_, &k)| k)
                .map(|(p, _)| p.clone())
                .collect(),
        }
    }

    /// Writes the `f1,..,fM[,x1,..,xL]` CSV form.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (1..=self.dim).map(|m| format!("f{m}")).collect();
        if let Some(l) = self.solution_dim {
            header.extend((1..=l).map(|i| format!("x{i}")));
        }
        w.write_record(&header)?;
        for p in &self.points {
            let mut row: Vec<String> = p.objectives.iter().map(|v| v.to_string()).collect();
            if let Some(x) = &p.solution {
                row.extend(x.iter().map(|v| v.to_string()));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header = r.headers()?.clone();
        let mut dim = 0;
        let mut solution_dim = 0;
        for name in header.iter().map(str::trim) {
            if solution_dim == 0 && name == format!("f{}", dim + 1) {
                dim += 1;
            } else if dim > 0 && name == format!("x{}", solution_dim + 1) {
                solution_dim += 1;
            } else {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("unexpected column '{name}'"),
                });
            }
        }
        if dim == 0 {
            return Err(Error::Parse {
                line: 1,
                message: "header has no objective columns".into(),
            });
        }
        let mut points = Vec::new();
        for (row, record) in r.records().enumerate() {
            let line = row + 2;
            let record = record.map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })?;
            if record.len() != dim + solution_dim {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {} fields, found {}", dim + solution_dim, record.len()),
                });
            }
            let values = record
                .iter()
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| Error::Parse {
                            line,
                            message: format!("'{s}' is not a finite number"),
                        })
                })
                .collect::<Result<Vec<f64>>>()?;
            let objectives = values[..dim].to_vec();
            points.push(if solution_dim > 0 {
                SamplePoint::with_solution(objectives, values[dim..].to_vec())
            } else {
                SamplePoint::new(objectives)
            });
        }
        SampleSet::new(dim, (solution_dim > 0).then_some(solution_dim), points)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

/// Minimization dominance: `x <= y` everywhere and `x < y` somewhere.
pub fn dominates(x: &[f64], y: &[f64]) -> Result<bool> {
    if x.len() != y.len() {
        return Err(Error::InvalidDimension(format!(
            "cannot compare vectors of length {} and {}",
            x.len(),
            y.len()
        )));
    }
    Ok(dominates_unchecked(x, y))
}

pub(crate) fn dominates_unchecked(x: &[f64], y: &[f64]) -> bool {
    let mut strict = false;
    for (a, b) in x.iter().zip(y) {
        if a > b {
            return false;
        }
        if a < b {
            strict = true;
        }
    }
    strict
}

/// Flags the vectors not dominated by any other vector of the list.
///
/// Vectors are visited in lexicographic order: a dominator always sorts
/// strictly before what it dominates, and anything dominated by an earlier
/// vector is also dominated by some already-kept one, so each candidate is
/// only compared with the kept set.
pub fn nondominated_mask(vectors: &[Vec<f64>]) -> Vec<bool> {
    let mut order: Vec<usize> = (0..vectors.len()).collect();
    order.sort_by(|&a, &b| {
        vectors[a]
            .iter()
            .zip(&vectors[b])
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut keep = vec![false; vectors.len()];
    let mut front: Vec<usize> = Vec::new();
    for &i in &order {
        if !front.iter().any(|&k| dominates_unchecked(&vectors[k], &vectors[i])) {
            keep[i] = true;
            front.push(i);
        }
    }
    keep
}

/// Points of `set` not dominated by any other point, in input order.
/// Duplicates do not dominate each other and are all kept.
pub fn nondominated_filter(set: &SampleSet) -> SampleSet {
    let vectors: Vec<Vec<f64>> = set.points.iter().map(|p| p.objectives.clone()).collect();
    set.select(&nondominated_mask(&vectors))
}

/// `X_J`: points whose objectives restricted to `face` are non-dominated
/// within the whole sample.
pub fn subsample(set: &SampleSet, face: &Face) -> Result<SampleSet> {
    if face.is_empty() {
        return Err(Error::InvalidFace("face must be nonempty".into()));
    }
    if face.members().iter().any(|&m| m >= set.dim) {
        return Err(Error::InvalidFace(format!(
            "{face} outside {} objectives",
            set.dim
        )));
    }
    let projected: Vec<Vec<f64>> = set
        .points
        .iter()
        .map(|p| face.members().iter().map(|&m| p.objectives[m]).collect())
        .collect();
    Ok(set.select(&nondominated_mask(&projected)))
}

/// Subsamples for every face with at most `max_len` vertices, keyed in
/// skeleton order.
pub fn skeleton_decompose(set: &SampleSet, max_len: usize) -> Result<BTreeMap<Face, SampleSet>> {
    if max_len == 0 || max_len > set.dim {
        return Err(Error::InvalidInput(format!(
            "face size bound {max_len} must lie in 1..={}",
            set.dim
        )));
    }
    Face::all(set.dim, max_len)
        .into_iter()
        .map(|face| subsample(set, &face).map(|s| (face, s)))
        .collect()
}
