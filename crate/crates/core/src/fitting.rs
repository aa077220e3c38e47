//! Fitting Bezier simplices to point samples.
//!
//! Both algorithms alternate two block updates until the root-mean residual
//! stops improving:
//!
//! * parameters: each sample is projected onto the current model by a
//!   constrained Newton iteration (foot-point projection);
//! * control points: with parameters fixed the model is linear in its control
//!   points, so the free ones are solved for by linear least squares.
//!
//! [`fit_all_at_once`] frees every control point at once. [`fit_inductive_skeleton`]
//! walks the faces of the simplex by increasing dimension, fitting only the
//! control points interior to each face against that face's subsample while
//! everything on lower faces stays fixed.

use std::collections::BTreeMap;

use log::{debug, warn};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bezier::{lift_index, Barycentric, BezierSimplex, MultiIndex};
use crate::error::{Error, Result};
use crate::exec::{map_range, Execution};
use crate::face::Face;

const MAX_HALVINGS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub degree: u32,
    pub max_outer_iters: usize,
    pub max_newton_iters: usize,
    pub newton_tol: f64,
    pub outer_tol: f64,
    pub init_grid_resolution: u32,
    #[serde(skip)]
    pub execution: Execution,
}

impl FitConfig {
    pub fn new(degree: u32) -> Self {
        FitConfig {
            degree,
            ..FitConfig::default()
        }
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.newton_tol > 0.0) || !(self.outer_tol > 0.0) {
            return Err(Error::InvalidInput("tolerances must be positive".into()));
        }
        if self.max_outer_iters == 0 || self.max_newton_iters == 0 {
            return Err(Error::InvalidInput("iteration caps must be at least 1".into()));
        }
        if self.init_grid_resolution == 0 {
            return Err(Error::InvalidInput("initial grid resolution must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            degree: 3,
            max_outer_iters: 100,
            max_newton_iters: 100,
            newton_tol: 1e-5,
            outer_tol: 1e-5,
            init_grid_resolution: 10,
            execution: Execution::default(),
        }
    }
}

/// Outcome of fitting one face during skeleton fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceReport {
    /// 1-based objective indices of the face.
    pub face: Vec<usize>,
    pub samples: usize,
    pub free_points: usize,
    pub iterations: usize,
    pub ssr: f64,
    pub ssr_trace: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: BezierSimplex,
    /// Final parameters per sample. Skeleton fits list the samples of every
    /// fitted face in skeleton order, embedded into the full simplex.
    pub parameters: Vec<Barycentric>,
    /// SSR of every iterate, starting with the initialization. For skeleton
    /// fits this is the trace of the last face fitted.
    pub ssr_trace: Vec<f64>,
    /// Index of the returned iterate, counting the initialization as 1, so
    /// it equals `ssr_trace.len()`. For skeleton fits the largest count over
    /// all faces.
    pub outer_iterations: usize,
    pub face_reports: Vec<FaceReport>,
}

impl FitResult {
    /// `sqrt(SSR) / N` at the end of the fit (of the last face, for skeleton fits).
    pub fn final_rms(&self) -> f64 {
        match (self.ssr_trace.last(), self.face_reports.last()) {
            (Some(ssr), Some(r)) if r.samples > 0 => ssr.sqrt() / r.samples as f64,
            (Some(ssr), _) if !self.parameters.is_empty() => {
                ssr.sqrt() / self.parameters.len() as f64
            }
            _ => 0.0,
        }
    }

    /// JSON sidecar stored next to the model file.
    pub fn report(&self) -> FitReport {
        FitReport {
            ssr_trace: self.ssr_trace.clone(),
            outer_iterations: self.outer_iterations,
            per_face_report: self.face_reports.clone(),
            parameters: self.parameters.iter().map(|t| t.coords().to_vec()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub ssr_trace: Vec<f64>,
    pub outer_iterations: usize,
    pub per_face_report: Vec<FaceReport>,
    pub parameters: Vec<Vec<f64>>,
}

/// Control net with the given vertices and every other control point on the
/// barycentric grid they span: `p_d = sum_m (d_m / D) v_m`.
pub fn initialize_control_net(vertex_optima: &[Vec<f64>], dim: usize, degree: u32) -> Result<BezierSimplex> {
    if vertex_optima.len() != dim || dim == 0 {
        return Err(Error::InvalidDimension(format!(
            "expected {dim} vertex points, got {}",
            vertex_optima.len()
        )));
    }
    let ambient = vertex_optima[0].len();
    if ambient == 0 || vertex_optima.iter().any(|v| v.len() != ambient) {
        return Err(Error::InvalidDimension("vertex points must share one nonzero dimension".into()));
    }
    BezierSimplex::from_fn(dim, degree, ambient, |d| {
        let mut p = vec![0.0; ambient];
        for (m, v) in vertex_optima.iter().enumerate() {
            let w = if degree == 0 {
                1.0 / dim as f64
            } else {
                d.entries()[m] as f64 / degree as f64
            };
            for (o, x) in p.iter_mut().zip(v) {
                *o += w * x;
            }
        }
        p
    })
}

fn check_targets(model: &BezierSimplex, targets: &[Vec<f64>]) -> Result<()> {
    if let Some(bad) = targets.iter().find(|x| x.len() != model.ambient()) {
        return Err(Error::InvalidDimension(format!(
            "sample point has {} coordinates, model ambient dimension is {}",
            bad.len(),
            model.ambient()
        )));
    }
    Ok(())
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Sum of squared residuals `sum_n |b(t_n) - x_n|^2`.
pub fn sse(model: &BezierSimplex, targets: &[Vec<f64>], params: &[Barycentric]) -> Result<f64> {
    if targets.len() != params.len() {
        return Err(Error::InvalidDimension(format!(
            "{} samples but {} parameters",
            targets.len(),
            params.len()
        )));
    }
    check_targets(model, targets)?;
    if let Some(t) = params.iter().find(|t| t.dim() != model.dim()) {
        return Err(Error::InvalidDimension(format!(
            "parameter has {} coordinates, model has {}",
            t.dim(),
            model.dim()
        )));
    }
    Ok(sse_unchecked(model, targets, params))
}

fn sse_unchecked(model: &BezierSimplex, targets: &[Vec<f64>], params: &[Barycentric]) -> f64 {
    targets
        .iter()
        .zip(params)
        .map(|(x, t)| squared_distance(&model.evaluate_unchecked(t.coords()), x))
        .sum()
}

/// Grid search start: the point of the barycentric grid of resolution
/// `cfg.init_grid_resolution` closest to each sample. Ties keep the first
/// grid point in index order.
pub fn init_parameters(model: &BezierSimplex, targets: &[Vec<f64>], cfg: &FitConfig) -> Result<Vec<Barycentric>> {
    check_targets(model, targets)?;
    let grid = Barycentric::grid(model.dim(), cfg.init_grid_resolution)?;
    let images: Vec<Vec<f64>> = map_range(cfg.execution, grid.len(), |k| {
        model.evaluate_unchecked(grid[k].coords())
    });
    Ok(map_range(cfg.execution, targets.len(), |n| {
        let x = &targets[n];
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (k, img) in images.iter().enumerate() {
            let d = squared_distance(img, x);
            if d < best_d {
                best_d = d;
                best = k;
            }
        }
        grid[best].clone()
    }))
}

/// Foot-point projection of `x` onto the model, started at `t0`.
///
/// Minimizes `g(t) = |b(t) - x|^2` over the simplex with an active-set Newton
/// method using the analytic Hessian. Coordinates at zero stay fixed unless
/// the gradient pulls them inward; Newton runs in reduced coordinates on the
/// remaining face (the largest free coordinate is eliminated through
/// `sum t = 1`). Steps are cut at the simplex boundary and halved up to 20
/// times until `g` decreases; if the Newton direction is unusable a
/// normalized projected-gradient step is tried instead, so `g` never
/// increases. Iteration stops when `sqrt(sum_m <db/dt_m, b - x>^2) <=
/// newton_tol`, when the projected gradient on the active face is below the
/// same tolerance with no coordinate pulled inward, when no step lowers `g`,
/// or after `max_newton_iters` iterations.
pub fn project_parameter(model: &BezierSimplex, x: &[f64], t0: &Barycentric, cfg: &FitConfig) -> Result<Barycentric> {
    if x.len() != model.ambient() {
        return Err(Error::InvalidDimension(format!(
            "point has {} coordinates, model ambient dimension is {}",
            x.len(),
            model.ambient()
        )));
    }
    if t0.dim() != model.dim() {
        return Err(Error::InvalidDimension(format!(
            "start has {} coordinates, model has {}",
            t0.dim(),
            model.dim()
        )));
    }
    Ok(project_unchecked(model, x, t0, cfg))
}

fn project_unchecked(model: &BezierSimplex, x: &[f64], t0: &Barycentric, cfg: &FitConfig) -> Barycentric {
    let m_dim = model.dim();
    let mut t = t0.clone();
    if m_dim == 1 {
        return t;
    }
    let g_of = |t: &[f64]| squared_distance(&model.evaluate_unchecked(t), x);
    let mut g = g_of(t.coords());

    for _ in 0..cfg.max_newton_iters {
        let jet = model.jet_unchecked(t.coords());
        let r = DVector::from_iterator(x.len(), jet.value.iter().zip(x).map(|(b, y)| b - y));
        // half gradient of g in full coordinates: G^T r
        let grad = jet.gradient.transpose() * &r;
        if grad.norm() <= cfg.newton_tol {
            break;
        }

        let tc = t.coords();
        let support: Vec<usize> = (0..m_dim).filter(|&i| tc[i] > 0.0).collect();
        // multiplier estimate of the sum constraint on the current face
        let lambda: f64 = support.iter().map(|&i| tc[i] * grad[i]).sum();
        let entering: Vec<usize> = (0..m_dim)
            .filter(|&i| tc[i] == 0.0 && grad[i] < lambda - cfg.newton_tol)
            .collect();
        let mut active = support.clone();
        active.extend(&entering);
        active.sort_unstable();

        let pivot = *support
            .iter()
            .max_by(|&&a, &&b| tc[a].total_cmp(&tc[b]))
            .expect("simplex point has positive support");
        let others: Vec<usize> = active.iter().copied().filter(|&i| i != pivot).collect();
        if others.is_empty() {
            break;
        }
        let reduced = DVector::from_iterator(others.len(), others.iter().map(|&i| grad[i] - grad[pivot]));
        if entering.is_empty() {
            let on_face: f64 = support
                .iter()
                .filter(|&&i| i != pivot)
                .map(|&i| (grad[i] - grad[pivot]).powi(2))
                .sum::<f64>()
                .sqrt();
            if on_face <= cfg.newton_tol {
                break;
            }
        }

        // half Hessian of g: G^T G + sum_a r_a H_a
        let mut hess = jet.gradient.transpose() * &jet.gradient;
        for (a, h) in jet.hessian.iter().enumerate() {
            hess += h * r[a];
        }
        let q = pivot;
        let reduced_hess = DMatrix::from_fn(others.len(), others.len(), |i, j| {
            let (a, b) = (others[i], others[j]);
            hess[(a, b)] - hess[(a, q)] - hess[(q, b)] + hess[(q, q)]
        });

        let to_full = |du: &DVector<f64>| -> Vec<f64> {
            let mut dt = vec![0.0; m_dim];
            for (k, &i) in others.iter().enumerate() {
                dt[i] = du[k];
                dt[q] -= du[k];
            }
            dt
        };
        let line_search = |dt: &[f64]| -> Option<(Barycentric, f64)> {
            // longest step keeping every coordinate nonnegative
            let mut limit = 1.0f64;
            let mut blocking = None;
            for i in 0..m_dim {
                if dt[i] < 0.0 {
                    let room = tc[i] / -dt[i];
                    if room < limit {
                        limit = room;
                        blocking = Some(i);
                    }
                }
            }
            if !(limit > 0.0) {
                return None;
            }
            let mut scale = limit;
            for h in 0..=MAX_HALVINGS {
                let mut raw: Vec<f64> = (0..m_dim).map(|i| tc[i] + scale * dt[i]).collect();
                if h == 0 {
                    if let Some(b) = blocking {
                        raw[b] = 0.0;
                    }
                }
                let cand = Barycentric::project_clamped(raw);
                let gc = g_of(cand.coords());
                if gc < g {
                    return Some((cand, gc));
                }
                scale *= 0.5;
            }
            None
        };

        let newton = reduced_hess
            .cholesky()
            .map(|ch| -ch.solve(&reduced))
            .filter(|d| d.iter().all(|v| v.is_finite()));
        let mut accepted = newton.as_ref().and_then(|d| line_search(&to_full(d)));
        if accepted.is_none() {
            let mean = active.iter().map(|&i| grad[i]).sum::<f64>() / active.len() as f64;
            let mut dt = vec![0.0; m_dim];
            for &i in &active {
                dt[i] = mean - grad[i];
            }
            let norm = dt.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 && norm.is_finite() {
                dt.iter_mut().for_each(|v| *v /= norm);
                accepted = line_search(&dt);
            }
        }
        match accepted {
            Some((next, gn)) => {
                let moved = next.coords() != t.coords();
                t = next;
                g = gn;
                if !moved {
                    break;
                }
            }
            None => break,
        }
    }
    t
}

/// Least-squares update of the control points at positions `free`, holding
/// every other control point of `model` fixed.
///
/// The unknowns are offsets from the current free control points; the design
/// matrix has one row `multinomial(D, d) * t_n^d` per sample over the free
/// indices `d`, and the right-hand side is the current residual
/// `x_n - b(t_n)`. Rank-deficient or underdetermined systems take the
/// minimum-norm offset, so data that cannot move a control point leaves it
/// where it was.
pub fn solve_control_points(
    model: &BezierSimplex,
    targets: &[Vec<f64>],
    params: &[Barycentric],
    free: &[MultiIndex],
) -> Result<BezierSimplex> {
    let positions = free
        .iter()
        .map(|d| {
            model
                .position(d)
                .ok_or_else(|| Error::InvalidIndex(format!("{d} is not an index of the model")))
        })
        .collect::<Result<Vec<_>>>()?;
    if targets.len() != params.len() {
        return Err(Error::InvalidDimension(format!(
            "{} samples but {} parameters",
            targets.len(),
            params.len()
        )));
    }
    check_targets(model, targets)?;
    solve_free_positions(model, targets, params, &positions, "<model>")
}

fn solve_free_positions(
    model: &BezierSimplex,
    targets: &[Vec<f64>],
    params: &[Barycentric],
    free: &[usize],
    face_label: &str,
) -> Result<BezierSimplex> {
    if free.is_empty() {
        return Ok(model.clone());
    }
    if targets.is_empty() {
        return Err(Error::InsufficientData {
            face: face_label.to_string(),
            reason: format!("{} free control points but no samples", free.len()),
        });
    }
    let n = targets.len();
    let k = free.len();
    let a_dim = model.ambient();
    let mut design = DMatrix::zeros(n, k);
    let mut rhs = DMatrix::zeros(n, a_dim);
    for (row, (x, t)) in targets.iter().zip(params).enumerate() {
        let basis = model.basis_unchecked(t.coords());
        for (col, &pos) in free.iter().enumerate() {
            design[(row, col)] = basis[pos];
        }
        let b = model.evaluate_unchecked(t.coords());
        for a in 0..a_dim {
            rhs[(row, a)] = x[a] - b[a];
        }
    }
    let svd = design.svd(true, true);
    let largest = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cutoff = largest * (n.max(k) as f64) * f64::EPSILON;
    let offsets = svd
        .solve(&rhs, cutoff)
        .map_err(|e| Error::InvalidInput(format!("least-squares solve failed: {e}")))?;
    let mut next = model.clone();
    for (col, &pos) in free.iter().enumerate() {
        let delta: Vec<f64> = offsets.row(col).iter().cloned().collect();
        next.add_to_control_point(pos, &delta);
    }
    Ok(next)
}

struct Alternation {
    model: BezierSimplex,
    params: Vec<Barycentric>,
    trace: Vec<f64>,
    iterations: usize,
}

/// The alternating loop on one (possibly face-restricted) model.
///
/// Iterate 1 is the initial net with grid-initialized parameters; each pass
/// of projection plus least squares yields the next iterate. Stops once the
/// improvement `(sqrt(SSR_i) - sqrt(SSR_{i+1})) / N` is at most `outer_tol`,
/// when iterate `max_outer_iters` is reached, or right away if the initial
/// residual is exactly zero.
fn alternate(
    model: BezierSimplex,
    free: &[usize],
    targets: &[Vec<f64>],
    cfg: &FitConfig,
    face_label: &str,
) -> Result<Alternation> {
    let n = targets.len() as f64;
    let mut model = model;
    let mut params = init_parameters(&model, targets, cfg)?;
    let mut previous = sse_unchecked(&model, targets, &params);
    // iterate i = 1 is the initialization; each pass produces iterate i + 1
    let mut trace = vec![previous];
    if free.is_empty() || previous == 0.0 {
        return Ok(Alternation {
            model,
            params,
            trace,
            iterations: 1,
        });
    }
    while trace.len() < cfg.max_outer_iters {
        let current = &model;
        params = map_range(cfg.execution, targets.len(), |k| {
            project_unchecked(current, &targets[k], &params[k], cfg)
        });
        model = solve_free_positions(&model, targets, &params, free, face_label)?;
        let ssr = sse_unchecked(&model, targets, &params);
        trace.push(ssr);
        let improvement = (previous.sqrt() - ssr.sqrt()) / n;
        debug!(
            "face {face_label} iteration {}: ssr {ssr:e}, improvement {improvement:e}",
            trace.len()
        );
        if improvement <= cfg.outer_tol {
            break;
        }
        previous = ssr;
    }
    let iterations = trace.len();
    Ok(Alternation {
        model,
        params,
        trace,
        iterations,
    })
}

/// Fits all control points simultaneously to `targets`, starting from the
/// simplex grid spanned by `vertex_optima`.
pub fn fit_all_at_once(targets: &[Vec<f64>], vertex_optima: &[Vec<f64>], cfg: &FitConfig) -> Result<FitResult> {
    cfg.validate()?;
    if targets.is_empty() {
        return Err(Error::InsufficientData {
            face: Face::full(vertex_optima.len().max(1)).to_string(),
            reason: "all-at-once fitting needs at least one sample".into(),
        });
    }
    let dim = vertex_optima.len();
    let model = initialize_control_net(vertex_optima, dim, cfg.degree)?;
    check_targets(&model, targets)?;
    let face = Face::full(dim);
    let free: Vec<usize> = (0..model.len()).collect();
    let out = alternate(model, &free, targets, cfg, &face.to_string())?;
    let ssr = out.trace.last().copied().unwrap_or(0.0);
    let report = FaceReport {
        face: face.members().iter().map(|m| m + 1).collect(),
        samples: targets.len(),
        free_points: free.len(),
        iterations: out.iterations,
        ssr,
        ssr_trace: out.trace.clone(),
        warning: None,
    };
    Ok(FitResult {
        model: out.model,
        parameters: out.params,
        ssr_trace: out.trace,
        outer_iterations: out.iterations,
        face_reports: vec![report],
    })
}

/// Fits the faces of the simplex in ascending dimension, each against its own
/// subsample, with control points of lower faces held fixed.
///
/// `subsamples` maps faces to their sample points; every vertex face needs at
/// least one point. Faces with interior control points but no samples keep
/// their grid initialization and are reported with a warning. Faces with more
/// than `min(D, M)` vertices have no interior control points and are skipped.
pub fn fit_inductive_skeleton(
    subsamples: &BTreeMap<Face, Vec<Vec<f64>>>,
    vertex_optima: &[Vec<f64>],
    cfg: &FitConfig,
) -> Result<FitResult> {
    cfg.validate()?;
    let dim = vertex_optima.len();
    let mut model = initialize_control_net(vertex_optima, dim, cfg.degree)?;
    for m in 0..dim {
        let face = Face::vertex(m);
        if subsamples.get(&face).is_none_or(|s| s.is_empty()) {
            return Err(Error::InsufficientData {
                face: face.to_string(),
                reason: "every vertex face needs at least one sample".into(),
            });
        }
    }
    for (face, pts) in subsamples {
        if face.members().iter().any(|&m| m >= dim) {
            return Err(Error::InvalidFace(format!("{face} outside {dim} objectives")));
        }
        check_targets(&model, pts)?;
    }

    let top = (cfg.degree as usize).min(dim).max(1);
    let mut reports = Vec::new();
    let mut parameters = Vec::new();
    let mut last_trace = Vec::new();
    let mut max_iterations = 0;

    for face in Face::all(dim, top) {
        let sub = model.restrict_to_face(&face)?;
        let free: Vec<usize> = (0..sub.len())
            .filter(|&k| sub.indices()[k].entries().iter().all(|&v| v > 0))
            .collect();
        if free.is_empty() {
            continue;
        }
        let empty = Vec::new();
        let data = subsamples.get(&face).unwrap_or(&empty);
        let face_members: Vec<usize> = face.members().iter().map(|m| m + 1).collect();
        if data.is_empty() {
            let msg = format!(
                "no samples for face {face}; {} interior control points keep their initial values",
                free.len()
            );
            warn!("{msg}");
            reports.push(FaceReport {
                face: face_members,
                samples: 0,
                free_points: free.len(),
                iterations: 0,
                ssr: 0.0,
                ssr_trace: Vec::new(),
                warning: Some(msg),
            });
            continue;
        }
        let out = alternate(sub, &free, data, cfg, &face.to_string())?;
        for &k in &free {
            let parent = lift_index(&out.model.indices()[k], &face, dim);
            let pos = model
                .position(&parent)
                .expect("face index lifts into the parent net");
            model.set_control_point(pos, out.model.control_point(k));
        }
        for t in &out.params {
            parameters.push(t.embed(&face, dim)?);
        }
        max_iterations = max_iterations.max(out.iterations);
        debug!(
            "face {face}: {} samples, {} free, {} iterations",
            data.len(),
            free.len(),
            out.iterations
        );
        reports.push(FaceReport {
            face: face_members,
            samples: data.len(),
            free_points: free.len(),
            iterations: out.iterations,
            ssr: out.trace.last().copied().unwrap_or(0.0),
            ssr_trace: out.trace.clone(),
            warning: None,
        });
        last_trace = out.trace;
    }

    Ok(FitResult {
        model,
        parameters,
        ssr_trace: last_trace,
        outer_iterations: max_iterations,
        face_reports: reports,
    })
}
