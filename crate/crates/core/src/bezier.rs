//! Bezier simplices over the standard simplex.
//!
//! A Bezier simplex of degree `D` in `M` barycentric coordinates is the map
//!
//! ```text
//! b(t) = sum_{d in N_D^M} multinomial(D, d) * t^d * p_d
//! ```
//!
//! where `N_D^M` is the set of compositions of `D` into `M` nonnegative parts
//! and `p_d` are control points in an ambient space `R^A`. Compositions are
//! always kept in descending lexicographic order, starting at `(D, 0, .., 0)`;
//! this order is the column order of every design matrix and the order of the
//! control points in the model file.

use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::face::Face;

/// Largest degree for which multinomial coefficients are computed exactly.
pub const MAX_DEGREE: u32 = 20;

const SUM_TOLERANCE: f64 = 1e-12;
const RENORMALIZE_TOLERANCE: f64 = 1e-9;

/// A composition `d = (d_1, .., d_M)` of the degree `D = sum d_m`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidDimension(
                "multi-index needs at least one entry".into(),
            ));
        }
        Ok(MultiIndex(entries))
    }

    /// `D * e_m` in `M` coordinates.
    pub fn vertex(dim: usize, degree: u32, m: usize) -> Self {
        let mut e = vec![0; dim];
        e[m] = degree;
        MultiIndex(e)
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Coordinates with a positive entry.
    pub fn support(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&m| self.0[m] > 0).collect()
    }

    /// True when every positive entry lies inside `face`.
    pub fn supported_in(&self, face: &Face) -> bool {
        self.0
            .iter()
            .enumerate()
            .all(|(m, &v)| v == 0 || face.contains(m))
    }

    /// True when the support is exactly `face`.
    pub fn has_support(&self, face: &Face) -> bool {
        self.0
            .iter()
            .enumerate()
            .all(|(m, &v)| (v > 0) == face.contains(m))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// All compositions of `degree` into `dim` parts, descending lexicographic.
pub fn enumerate_multi_indices(dim: usize, degree: u32) -> Result<Vec<MultiIndex>> {
    if dim == 0 {
        return Err(Error::InvalidDimension(
            "number of barycentric coordinates must be at least 1".into(),
        ));
    }
    let mut out = Vec::with_capacity(index_count(dim, degree));
    let mut current = vec![0u32; dim];
    fill_compositions(&mut current, 0, degree, &mut out);
    Ok(out)
}

fn fill_compositions(current: &mut [u32], pos: usize, remaining: u32, out: &mut Vec<MultiIndex>) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(MultiIndex(current.to_vec()));
        return;
    }
    for v in (0..=remaining).rev() {
        current[pos] = v;
        fill_compositions(current, pos + 1, remaining - v, out);
    }
    current[pos] = 0;
}

/// `C(D+M-1, D)`, the number of control points.
pub fn index_count(dim: usize, degree: u32) -> usize {
    if dim == 0 {
        return 0;
    }
    binomial(degree as u64 + dim as u64 - 1, degree as u64) as usize
}

pub(crate) fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    // exact: the running product is always C(n-k+i, i)
    (1..=k).fold(1u64, |acc, i| acc * (n - k + i) / i)
}

/// `D! / (d_1! .. d_M!)`.
pub fn multinomial(degree: u32, index: &MultiIndex) -> Result<u64> {
    if index.degree() != degree {
        return Err(Error::InvalidIndex(format!(
            "{index} sums to {} but degree is {degree}",
            index.degree()
        )));
    }
    if degree > MAX_DEGREE {
        return Err(Error::InvalidIndex(format!(
            "degree {degree} exceeds the supported maximum {MAX_DEGREE}"
        )));
    }
    let mut remaining = degree as u64;
    let mut acc = 1u64;
    for &d in index.entries() {
        acc *= binomial(remaining, d as u64);
        remaining -= d as u64;
    }
    Ok(acc)
}

/// A point `t` of the standard simplex: `t_m >= 0`, `sum t_m = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Barycentric(Vec<f64>);

impl Barycentric {
    /// Validates `coords`. Sums within `1e-9` of one are renormalized and
    /// negative entries down to `-1e-9` are clamped to zero; anything further
    /// off is rejected.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidDimension(
                "barycentric coordinates need at least one entry".into(),
            ));
        }
        if coords.iter().any(|v| !v.is_finite() || *v < -RENORMALIZE_TOLERANCE) {
            return Err(Error::InvalidInput(format!(
                "{coords:?} is not on the standard simplex"
            )));
        }
        let mut coords: Vec<f64> = coords.into_iter().map(|v| v.max(0.0)).collect();
        let sum: f64 = coords.iter().sum();
        if (sum - 1.0).abs() > RENORMALIZE_TOLERANCE {
            return Err(Error::InvalidInput(format!(
                "barycentric coordinates sum to {sum}, expected 1"
            )));
        }
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            coords.iter_mut().for_each(|v| *v /= sum);
        }
        Ok(Barycentric(coords))
    }

    /// Clamps negative entries to zero and rescales onto the simplex.
    /// Falls back to the centroid when nothing positive is left.
    pub fn project_clamped(mut coords: Vec<f64>) -> Self {
        coords.iter_mut().for_each(|v| {
            if !(*v > 0.0) {
                *v = 0.0
            }
        });
        let sum: f64 = coords.iter().sum();
        if sum > 0.0 && sum.is_finite() {
            coords.iter_mut().for_each(|v| *v /= sum);
            Barycentric(coords)
        } else {
            Barycentric::centroid(coords.len())
        }
    }

    pub fn vertex(dim: usize, m: usize) -> Self {
        let mut t = vec![0.0; dim];
        t[m] = 1.0;
        Barycentric(t)
    }

    pub fn centroid(dim: usize) -> Self {
        Barycentric(vec![1.0 / dim as f64; dim])
    }

    /// Every point with `resolution * t` integral, in multi-index order.
    pub fn grid(dim: usize, resolution: u32) -> Result<Vec<Barycentric>> {
        if resolution == 0 {
            return Err(Error::InvalidInput("grid resolution must be at least 1".into()));
        }
        let r = resolution as f64;
        Ok(enumerate_multi_indices(dim, resolution)?
            .into_iter()
            .map(|d| Barycentric(d.entries().iter().map(|&k| k as f64 / r).collect()))
            .collect())
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Zero-pads a point of the face simplex `Delta^J` into `Delta^{M-1}`.
    pub fn embed(&self, face: &Face, dim: usize) -> Result<Self> {
        if face.len() != self.dim() {
            return Err(Error::InvalidDimension(format!(
                "face {face} has {} vertices but point has {} coordinates",
                face.len(),
                self.dim()
            )));
        }
        let mut t = vec![0.0; dim];
        for (k, &m) in face.members().iter().enumerate() {
            if m >= dim {
                return Err(Error::InvalidFace(format!("{face} outside {dim} coordinates")));
            }
            t[m] = self.0[k];
        }
        Ok(Barycentric(t))
    }
}

/// Value and analytic derivatives of a Bezier simplex at one parameter.
#[derive(Debug, Clone)]
pub struct Jet {
    pub value: Vec<f64>,
    /// `A x M`, column `m` is the partial derivative along `t_m`.
    pub gradient: DMatrix<f64>,
    /// One symmetric `M x M` block per ambient coordinate.
    pub hessian: Vec<DMatrix<f64>>,
}

/// A Bezier simplex `b: Delta^{M-1} -> R^A`.
#[derive(Debug, Clone, PartialEq)]
pub struct BezierSimplex {
    dim: usize,
    degree: u32,
    ambient: usize,
    indices: Vec<MultiIndex>,
    coefficients: Vec<f64>,
    // row-major, one row of length `ambient` per index
    points: Vec<f64>,
}

impl BezierSimplex {
    /// Builds a model from control points given in canonical index order.
    pub fn new(dim: usize, degree: u32, ambient: usize, control_points: Vec<Vec<f64>>) -> Result<Self> {
        if ambient == 0 {
            return Err(Error::InvalidDimension("ambient dimension must be at least 1".into()));
        }
        if degree > MAX_DEGREE {
            return Err(Error::InvalidIndex(format!(
                "degree {degree} exceeds the supported maximum {MAX_DEGREE}"
            )));
        }
        let indices = enumerate_multi_indices(dim, degree)?;
        if control_points.len() != indices.len() {
            return Err(Error::InvalidDimension(format!(
                "expected {} control points for M={dim}, D={degree}, got {}",
                indices.len(),
                control_points.len()
            )));
        }
        let mut points = Vec::with_capacity(indices.len() * ambient);
        for p in &control_points {
            if p.len() != ambient {
                return Err(Error::InvalidDimension(format!(
                    "control point has {} coordinates, expected {ambient}",
                    p.len()
                )));
            }
            points.extend_from_slice(p);
        }
        let coefficients = indices
            .iter()
            .map(|d| multinomial(degree, d).map(|c| c as f64))
            .collect::<Result<Vec<_>>>()?;
        Ok(BezierSimplex {
            dim,
            degree,
            ambient,
            indices,
            coefficients,
            points,
        })
    }

    pub fn from_fn<F>(dim: usize, degree: u32, ambient: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(&MultiIndex) -> Vec<f64>,
    {
        let points = enumerate_multi_indices(dim, degree)?.iter().map(&mut f).collect();
        Self::new(dim, degree, ambient, points)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn coefficient(&self, k: usize) -> f64 {
        self.coefficients[k]
    }

    pub fn control_point(&self, k: usize) -> &[f64] {
        &self.points[k * self.ambient..(k + 1) * self.ambient]
    }

    pub fn control_points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.ambient)
    }

    /// Position of `index` in canonical order.
    pub fn position(&self, index: &MultiIndex) -> Option<usize> {
        if index.dim() != self.dim || index.degree() != self.degree {
            return None;
        }
        // canonical order is descending lexicographic
        self.indices.binary_search_by(|probe| index.cmp(probe)).ok()
    }

    pub fn control_point_of(&self, index: &MultiIndex) -> Option<&[f64]> {
        self.position(index).map(|k| self.control_point(k))
    }

    pub(crate) fn set_control_point(&mut self, k: usize, p: &[f64]) {
        self.points[k * self.ambient..(k + 1) * self.ambient].copy_from_slice(p);
    }

    pub(crate) fn add_to_control_point(&mut self, k: usize, delta: &[f64]) {
        for (dst, d) in self.points[k * self.ambient..(k + 1) * self.ambient]
            .iter_mut()
            .zip(delta)
        {
            *dst += d;
        }
    }

    fn check_parameter(&self, t: &Barycentric) -> Result<()> {
        if t.dim() != self.dim {
            return Err(Error::InvalidDimension(format!(
                "model has {} barycentric coordinates, parameter has {}",
                self.dim,
                t.dim()
            )));
        }
        Ok(())
    }

    fn power_table(&self, t: &[f64]) -> Vec<Vec<f64>> {
        t.iter()
            .map(|&x| {
                let mut row = Vec::with_capacity(self.degree as usize + 1);
                let mut acc = 1.0;
                for _ in 0..=self.degree {
                    row.push(acc);
                    acc *= x;
                }
                row
            })
            .collect()
    }

    /// The Bernstein weights `multinomial(D, d) * t^d`, one per index.
    pub fn basis(&self, t: &Barycentric) -> Result<Vec<f64>> {
        self.check_parameter(t)?;
        Ok(self.basis_unchecked(t.coords()))
    }

    pub(crate) fn basis_unchecked(&self, t: &[f64]) -> Vec<f64> {
        let pow = self.power_table(t);
        self.indices
            .iter()
            .zip(&self.coefficients)
            .map(|(d, c)| {
                d.entries()
                    .iter()
                    .enumerate()
                    .fold(*c, |acc, (m, &k)| acc * pow[m][k as usize])
            })
            .collect()
    }

    pub fn evaluate(&self, t: &Barycentric) -> Result<Vec<f64>> {
        self.check_parameter(t)?;
        Ok(self.evaluate_unchecked(t.coords()))
    }

    pub(crate) fn evaluate_unchecked(&self, t: &[f64]) -> Vec<f64> {
        let weights = self.basis_unchecked(t);
        let mut out = vec![0.0; self.ambient];
        for (w, p) in weights.iter().zip(self.points.chunks_exact(self.ambient)) {
            for (o, x) in out.iter_mut().zip(p) {
                *o += w * x;
            }
        }
        out
    }

    /// Partial derivatives along each `t_m`, treating the coordinates as
    /// independent variables.
    pub fn gradient(&self, t: &Barycentric) -> Result<DMatrix<f64>> {
        Ok(self.jet(t)?.gradient)
    }

    /// Second partials, one `M x M` block per ambient coordinate.
    pub fn hessian(&self, t: &Barycentric) -> Result<Vec<DMatrix<f64>>> {
        Ok(self.jet(t)?.hessian)
    }

    pub fn jet(&self, t: &Barycentric) -> Result<Jet> {
        self.check_parameter(t)?;
        Ok(self.jet_unchecked(t.coords()))
    }

    pub(crate) fn jet_unchecked(&self, t: &[f64]) -> Jet {
        let m_dim = self.dim;
        let a_dim = self.ambient;
        let pow = self.power_table(t);
        // t_m^k for k possibly negative after differentiation
        let p = |m: usize, k: i64| -> f64 {
            if k < 0 {
                0.0
            } else {
                pow[m][k as usize]
            }
        };

        let mut value = vec![0.0; a_dim];
        let mut gradient = DMatrix::zeros(a_dim, m_dim);
        let mut hessian = vec![DMatrix::zeros(m_dim, m_dim); a_dim];
        let mut dmono = vec![0.0; m_dim];
        let mut ddmono = vec![0.0; m_dim * m_dim];

        for (k, d) in self.indices.iter().enumerate() {
            let c = self.coefficients[k];
            let e = d.entries();
            let point = &self.points[k * a_dim..(k + 1) * a_dim];

            let mono: f64 = (0..m_dim).map(|m| p(m, e[m] as i64)).product();
            for i in 0..m_dim {
                let di = e[i] as i64;
                dmono[i] = if di == 0 {
                    0.0
                } else {
                    let rest: f64 = (0..m_dim)
                        .filter(|&m| m != i)
                        .map(|m| p(m, e[m] as i64))
                        .product();
                    c * di as f64 * p(i, di - 1) * rest
                };
                for j in 0..m_dim {
                    let dj = e[j] as i64;
                    ddmono[i * m_dim + j] = if i == j {
                        if di < 2 {
                            0.0
                        } else {
                            let rest: f64 = (0..m_dim)
                                .filter(|&m| m != i)
                                .map(|m| p(m, e[m] as i64))
                                .product();
                            c * (di * (di - 1)) as f64 * p(i, di - 2) * rest
                        }
                    } else if di == 0 || dj == 0 {
                        0.0
                    } else {
                        let rest: f64 = (0..m_dim)
                            .filter(|&m| m != i && m != j)
                            .map(|m| p(m, e[m] as i64))
                            .product();
                        c * (di * dj) as f64 * p(i, di - 1) * p(j, dj - 1) * rest
                    };
                }
            }

            for a in 0..a_dim {
                let x = point[a];
                value[a] += c * mono * x;
                for i in 0..m_dim {
                    gradient[(a, i)] += dmono[i] * x;
                }
                let h = &mut hessian[a];
                for i in 0..m_dim {
                    for j in 0..m_dim {
                        h[(i, j)] += ddmono[i * m_dim + j] * x;
                    }
                }
            }
        }
        Jet {
            value,
            gradient,
            hessian,
        }
    }

    /// The `J`-face of this simplex as a Bezier simplex over `Delta^{|J|-1}`.
    pub fn restrict_to_face(&self, face: &Face) -> Result<BezierSimplex> {
        check_face(face, self.dim)?;
        let sub_indices = enumerate_multi_indices(face.len(), self.degree)?;
        let points = sub_indices
            .iter()
            .map(|s| {
                let parent = lift_index(s, face, self.dim);
                let k = self
                    .position(&parent)
                    .expect("lifted index belongs to the parent net");
                self.control_point(k).to_vec()
            })
            .collect();
        BezierSimplex::new(face.len(), self.degree, self.ambient, points)
    }

    /// The same map written as a Bezier simplex of degree `D + 1`.
    pub fn elevate(&self) -> Result<BezierSimplex> {
        let new_degree = self.degree + 1;
        let dd = new_degree as f64;
        BezierSimplex::from_fn(self.dim, new_degree, self.ambient, |e| {
            let mut acc = vec![0.0; self.ambient];
            for m in 0..self.dim {
                let em = e.entries()[m];
                if em == 0 {
                    continue;
                }
                let mut lower = e.entries().to_vec();
                lower[m] -= 1;
                let k = self
                    .position(&MultiIndex(lower))
                    .expect("lowered index belongs to the net");
                let w = em as f64 / dd;
                for (o, x) in acc.iter_mut().zip(self.control_point(k)) {
                    *o += w * x;
                }
            }
            acc
        })
    }

    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            dim: self.dim,
            degree: self.degree,
            ambient: self.ambient,
            control_points: self
                .indices
                .iter()
                .zip(self.control_points())
                .map(|(d, p)| ControlPointEntry {
                    index: d.entries().to_vec(),
                    point: p.to_vec(),
                })
                .collect(),
        }
    }

    pub fn from_file(file: ModelFile) -> Result<Self> {
        let expected = enumerate_multi_indices(file.dim, file.degree)?;
        if expected.len() != file.control_points.len() {
            return Err(Error::InvalidInput(format!(
                "model file lists {} control points, expected {}",
                file.control_points.len(),
                expected.len()
            )));
        }
        for (want, got) in expected.iter().zip(&file.control_points) {
            if want.entries() != got.index.as_slice() {
                return Err(Error::InvalidInput(format!(
                    "control point index {:?} out of canonical order (expected {want})",
                    got.index
                )));
            }
            if got.point.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "non-finite control point at {want}"
                )));
            }
        }
        let points = file.control_points.into_iter().map(|e| e.point).collect();
        BezierSimplex::new(file.dim, file.degree, file.ambient, points)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Serialized form of a [`BezierSimplex`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    #[serde(rename = "M")]
    pub dim: usize,
    #[serde(rename = "D")]
    pub degree: u32,
    #[serde(rename = "A")]
    pub ambient: usize,
    pub control_points: Vec<ControlPointEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlPointEntry {
    pub index: Vec<u32>,
    pub point: Vec<f64>,
}

fn check_face(face: &Face, dim: usize) -> Result<()> {
    if face.is_empty() {
        return Err(Error::InvalidFace("face must be nonempty".into()));
    }
    if face.members().iter().any(|&m| m >= dim) {
        return Err(Error::InvalidFace(format!("{face} outside {dim} coordinates")));
    }
    Ok(())
}

/// Scatters a multi-index of the face simplex into `M` coordinates.
pub fn lift_index(sub: &MultiIndex, face: &Face, dim: usize) -> MultiIndex {
    let mut e = vec![0u32; dim];
    for (k, &m) in face.members().iter().enumerate() {
        e[m] = sub.entries()[k];
    }
    MultiIndex(e)
}

/// `N_D^J` and its interior (indices whose support is exactly `J`), both in
/// canonical order.
pub fn face_indices(dim: usize, degree: u32, face: &Face) -> Result<(Vec<MultiIndex>, Vec<MultiIndex>)> {
    check_face(face, dim)?;
    let all: Vec<MultiIndex> = enumerate_multi_indices(dim, degree)?
        .into_iter()
        .filter(|d| d.supported_in(face))
        .collect();
    let interior = all.iter().filter(|d| d.has_support(face)).cloned().collect();
    Ok((all, interior))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex(v.to_vec())
    }

    fn random_model(rng: &mut ChaCha8Rng, dim: usize, degree: u32, ambient: usize) -> BezierSimplex {
        BezierSimplex::from_fn(dim, degree, ambient, |_| {
            (0..ambient).map(|_| rng.random_range(-1.0..1.0)).collect()
        })
        .unwrap()
    }

    fn random_point(rng: &mut ChaCha8Rng, dim: usize) -> Barycentric {
        let raw: Vec<f64> = (0..dim).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
        let s: f64 = raw.iter().sum();
        Barycentric::new(raw.iter().map(|v| v / s).collect()).unwrap()
    }

    #[test]
    fn enumeration_examples() {
        let idx = enumerate_multi_indices(2, 3).unwrap();
        assert_eq!(idx, vec![mi(&[3, 0]), mi(&[2, 1]), mi(&[1, 2]), mi(&[0, 3])]);
        assert_eq!(enumerate_multi_indices(5, 3).unwrap().len(), 35);
        assert_eq!(enumerate_multi_indices(3, 0).unwrap(), vec![mi(&[0, 0, 0])]);
        assert!(matches!(
            enumerate_multi_indices(0, 3),
            Err(Error::InvalidDimension(_))
        ));
    }

    #[test]
    fn enumeration_is_sorted_descending_and_sized() {
        for dim in 1..6 {
            for degree in 0..6 {
                let idx = enumerate_multi_indices(dim, degree).unwrap();
                assert_eq!(idx.len(), index_count(dim, degree));
                assert!(idx.windows(2).all(|w| w[0] > w[1]));
                assert!(idx.iter().all(|d| d.degree() == degree));
            }
        }
    }

    #[test]
    fn multinomial_examples() {
        assert_eq!(multinomial(3, &mi(&[1, 1, 1])).unwrap(), 6);
        assert_eq!(multinomial(3, &mi(&[3, 0, 0])).unwrap(), 1);
        assert_eq!(multinomial(4, &mi(&[2, 2])).unwrap(), 6);
        assert_eq!(multinomial(20, &mi(&[20])).unwrap(), 1);
        assert_eq!(multinomial(20, &mi(&[10, 10])).unwrap(), 184_756);
        assert!(matches!(multinomial(3, &mi(&[1, 1])), Err(Error::InvalidIndex(_))));
        assert!(matches!(multinomial(21, &mi(&[21])), Err(Error::InvalidIndex(_))));
    }

    #[test]
    fn barycentric_validation() {
        assert!(Barycentric::new(vec![0.5, 0.5]).is_ok());
        let t = Barycentric::new(vec![0.5, 0.5 + 5e-10]).unwrap();
        assert!((t.coords().iter().sum::<f64>() - 1.0).abs() <= 1e-15);
        assert!(Barycentric::new(vec![0.5, 0.6]).is_err());
        assert!(Barycentric::new(vec![1.5, -0.5]).is_err());
        assert!(Barycentric::new(vec![f64::NAN, 1.0]).is_err());
        assert_eq!(Barycentric::grid(3, 20).unwrap().len(), 231);
    }

    #[test]
    fn vertex_interpolation_and_centroid() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let model = random_model(&mut rng, 3, 3, 2);
        for m in 0..3 {
            let v = model.evaluate(&Barycentric::vertex(3, m)).unwrap();
            assert_eq!(v, model.control_point_of(&MultiIndex::vertex(3, 3, m)).unwrap());
        }
        let affine = BezierSimplex::new(
            3,
            1,
            2,
            vec![vec![0.0, 0.0], vec![3.0, 0.0], vec![0.0, 6.0]],
        )
        .unwrap();
        let c = affine.evaluate(&Barycentric::centroid(3)).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-15 && (c[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn evaluate_matches_naive_summation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let model = random_model(&mut rng, 3, 3, 3);
        let t: [f64; 3] = [0.2, 0.3, 0.5];
        let fact = |n: u32| (1..=n).product::<u32>() as f64;
        let mut naive = [0.0; 3];
        for i in 0..=3u32 {
            for j in 0..=(3 - i) {
                let k = 3 - i - j;
                let coeff = fact(3) / (fact(i) * fact(j) * fact(k));
                let w = coeff * t[0].powi(i as i32) * t[1].powi(j as i32) * t[2].powi(k as i32);
                let p = model.control_point_of(&mi(&[i, j, k])).unwrap();
                for a in 0..3 {
                    naive[a] += w * p[a];
                }
            }
        }
        let got = model.evaluate(&Barycentric::new(t.to_vec()).unwrap()).unwrap();
        for a in 0..3 {
            assert!((got[a] - naive[a]).abs() < 1e-14);
        }
    }

    #[test]
    fn gradient_examples() {
        let affine = BezierSimplex::new(
            3,
            1,
            2,
            vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]],
        )
        .unwrap();
        let g = affine.gradient(&Barycentric::new(vec![0.2, 0.3, 0.5]).unwrap()).unwrap();
        for m in 0..3 {
            assert_eq!(g.column(m).as_slice(), affine.control_point(m));
        }
        // a constant net is constant on the simplex: every tangent direction
        // e_i - e_j has zero derivative
        let constant = BezierSimplex::from_fn(3, 3, 2, |_| vec![7.0, -1.0]).unwrap();
        let g = constant.gradient(&Barycentric::new(vec![0.2, 0.3, 0.5]).unwrap()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let tangent = g.column(i) - g.column(j);
                assert!(tangent.iter().all(|v| v.abs() < 1e-12));
            }
        }
        let h = affine.hessian(&Barycentric::centroid(3)).unwrap();
        assert!(h.iter().all(|blk| blk.iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let model = random_model(&mut rng, 3, 3, 2);
        let t = vec![0.25, 0.35, 0.4];
        let g = model.gradient(&Barycentric::new(t.clone()).unwrap()).unwrap();
        let h = 1e-6;
        for m in 0..3 {
            let mut tp = t.clone();
            let mut tm = t.clone();
            tp[m] += h;
            tm[m] -= h;
            let fp = model.evaluate_unchecked(&tp);
            let fm = model.evaluate_unchecked(&tm);
            for a in 0..2 {
                let fd = (fp[a] - fm[a]) / (2.0 * h);
                assert!((fd - g[(a, m)]).abs() <= 1e-5 * g[(a, m)].abs().max(1.0));
            }
        }
    }

    #[test]
    fn hessian_is_symmetric_and_matches_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let model = random_model(&mut rng, 2, 3, 3);
        let t = vec![0.3, 0.7];
        let hess = model.hessian(&Barycentric::new(t.clone()).unwrap()).unwrap();
        let step = 1e-6;
        for blk in &hess {
            assert_eq!(blk, &blk.transpose());
        }
        for j in 0..2 {
            let mut tp = t.clone();
            let mut tm = t.clone();
            tp[j] += step;
            tm[j] -= step;
            let gp = model.jet_unchecked(&tp).gradient;
            let gm = model.jet_unchecked(&tm).gradient;
            for a in 0..3 {
                for i in 0..2 {
                    let fd = (gp[(a, i)] - gm[(a, i)]) / (2.0 * step);
                    let an = hess[a][(i, j)];
                    assert!((fd - an).abs() <= 1e-4 * an.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn face_index_examples() {
        let (all, interior) = face_indices(3, 3, &Face::new([0, 1], 3).unwrap()).unwrap();
        assert_eq!(all.len(), 4);
        assert_eq!(interior, vec![mi(&[2, 1, 0]), mi(&[1, 2, 0])]);
        let (_, interior) = face_indices(3, 3, &Face::full(3)).unwrap();
        assert_eq!(interior, vec![mi(&[1, 1, 1])]);
        let (all, interior) = face_indices(5, 3, &Face::vertex(1)).unwrap();
        assert_eq!(all, interior);
        assert_eq!(all, vec![mi(&[0, 3, 0, 0, 0])]);
    }

    #[test]
    fn restriction_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let model = random_model(&mut rng, 4, 3, 3);
        let vertex = model.restrict_to_face(&Face::vertex(2)).unwrap();
        assert_eq!(vertex.len(), 1);
        assert_eq!(
            vertex.control_point(0),
            model.control_point_of(&MultiIndex::vertex(4, 3, 2)).unwrap()
        );
        assert_eq!(model.restrict_to_face(&Face::full(4)).unwrap(), model);

        let face = Face::new([0, 2], 4).unwrap();
        let sub = model.restrict_to_face(&face).unwrap();
        for _ in 0..50 {
            let s = random_point(&mut rng, 2);
            let lhs = model.evaluate(&s.embed(&face, 4).unwrap()).unwrap();
            let rhs = sub.evaluate(&s).unwrap();
            for a in 0..3 {
                assert!((lhs[a] - rhs[a]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn elevation_preserves_the_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let model = random_model(&mut rng, 3, 2, 2);
        let up = model.elevate().unwrap();
        assert_eq!(up.degree(), 3);
        for _ in 0..100 {
            let t = random_point(&mut rng, 3);
            let a = model.evaluate(&t).unwrap();
            let b = up.evaluate(&t).unwrap();
            assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= 1e-10));
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let model = BezierSimplex::from_fn(3, 2, 1, |_| vec![0.0]).unwrap();
        assert!(matches!(
            model.evaluate(&Barycentric::centroid(2)),
            Err(Error::InvalidDimension(_))
        ));
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let model = random_model(&mut rng, 3, 3, 4);
        let text = model.to_json().unwrap();
        assert!(text.contains("\"M\": 3"));
        let back = BezierSimplex::from_json(&text).unwrap();
        assert_eq!(back, model);
        for (p, q) in back.control_points().zip(model.control_points()) {
            for (x, y) in p.iter().zip(q) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn json_rejects_out_of_order_indices() {
        let model = BezierSimplex::from_fn(2, 1, 1, |_| vec![0.0]).unwrap();
        let mut file = model.to_file();
        file.control_points.swap(0, 1);
        assert!(BezierSimplex::from_file(file).is_err());
    }
}
