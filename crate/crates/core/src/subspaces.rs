//! Points of the Grassmannian `G_l(R^n)` and measurement matrices.
//!
//! Subspaces are stored as `n × l` matrices with orthonormal columns; the
//! projector metric `‖P_ν − P_ν′‖₂` does not depend on which basis is used.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::search::gaussian_vec;
use crate::tolerance;

/// An `l`-dimensional subspace of `R^n`, `1 ≤ l < n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: DMatrix<f64>,
}

/// Orthonormalizes the columns of `m` by Householder QR with the sign of
/// `R`'s diagonal folded into `Q`. Fails if the columns are dependent.
fn orthonormalize(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (n, l) = m.shape();
    if l == 0 || l > n {
        return Err(Error::RankDeficient { rank: l.min(n), required: l });
    }
    let scale = m.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::RankDeficient { rank: 0, required: l });
    }
    let qr = m.clone().qr();
    let r = qr.r();
    let mut q = qr.q();
    let mut rank = 0;
    for j in 0..l {
        let d = r[(j, j)];
        if d.abs() > tolerance::RANK_REL * scale * (n as f64) {
            rank += 1;
        }
        if d < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if rank < l {
        return Err(Error::RankDeficient { rank, required: l });
    }
    Ok(q)
}

/// Orthonormal basis of the orthogonal complement of the column span of
/// the orthonormal matrix `b` (`n × l`), as an `n × (n − l)` matrix.
fn complement_of(b: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, l) = b.shape();
    let mut padded = DMatrix::zeros(n, n);
    padded.columns_mut(0, l).copy_from(b);
    let svd = padded.svd(true, false);
    let u = svd.u.expect("u requested");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let mut out = DMatrix::zeros(n, n - l);
    for (c, &i) in order[l..].iter().enumerate() {
        out.set_column(c, &u.column(i));
    }
    out
}

impl Subspace {
    /// Wraps a basis that must already be orthonormal to within 1e−10.
    pub fn from_orthonormal(basis: DMatrix<f64>) -> Result<Self> {
        let (n, l) = basis.shape();
        if l == 0 || l >= n {
            return Err(Error::param("l", format!("need 1 ≤ l < n, got l={l}, n={n}")));
        }
        let gram = basis.transpose() * &basis;
        let err = (gram - DMatrix::<f64>::identity(l, l)).amax();
        if !(err <= tolerance::MEMBERSHIP) {
            return Err(Error::param("basis", format!("not orthonormal (residual {err:e})")));
        }
        Ok(Subspace { basis })
    }

    /// Span of the columns of `generators` (`n × l`, full column rank).
    pub fn from_generators(generators: &DMatrix<f64>) -> Result<Self> {
        let (n, l) = generators.shape();
        if l == 0 || l >= n {
            return Err(Error::param("l", format!("need 1 ≤ l < n, got l={l}, n={n}")));
        }
        Ok(Subspace { basis: orthonormalize(generators)? })
    }

    /// Span of the given vectors.
    pub fn span(vectors: &[&[f64]]) -> Result<Self> {
        let l = vectors.len();
        let n = vectors.first().map_or(0, |v| v.len());
        if let Some(v) = vectors.iter().find(|v| v.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, got: v.len() });
        }
        Self::from_generators(&DMatrix::from_fn(n, l, |i, j| vectors[j][i]))
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn projector(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }

    /// The point `B w` for coordinates `w ∈ R^l`.
    pub fn point(&self, coords: &[f64]) -> Vec<f64> {
        debug_assert_eq!(coords.len(), self.dim());
        let n = self.ambient_dim();
        let mut out = vec![0.0; n];
        for (j, &c) in coords.iter().enumerate() {
            if c != 0.0 {
                for (i, o) in out.iter_mut().enumerate() {
                    *o += self.basis[(i, j)] * c;
                }
            }
        }
        out
    }

    /// Coordinates `Bᵀ v`.
    pub fn coords(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|j| self.basis.column(j).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `‖v − P v‖`.
    pub fn residual(&self, v: &[f64]) -> Result<f64> {
        if v.len() != self.ambient_dim() {
            return Err(Error::DimensionMismatch { expected: self.ambient_dim(), got: v.len() });
        }
        let p = self.point(&self.coords(v));
        Ok(v.iter().zip(&p).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
    }

    /// `ν^⊥`, of dimension `n − l`.
    pub fn orthogonal_complement(&self) -> Subspace {
        Subspace { basis: complement_of(&self.basis) }
    }

    /// Applies an orthogonal matrix: `Q ν`.
    pub fn rotate(&self, q: &DMatrix<f64>) -> Result<Subspace> {
        if q.shape() != (self.ambient_dim(), self.ambient_dim()) {
            return Err(Error::DimensionMismatch { expected: self.ambient_dim(), got: q.nrows() });
        }
        Subspace::from_generators(&(q * &self.basis))
    }
}

/// `‖P_ν − P_ν′‖₂`, the sine of the largest principal angle.
pub fn grassmann_distance(a: &Subspace, b: &Subspace) -> Result<f64> {
    if a.ambient_dim() != b.ambient_dim() {
        return Err(Error::DimensionMismatch { expected: a.ambient_dim(), got: b.ambient_dim() });
    }
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    if a.dim() == 1 {
        return Ok(line_distance(a, b));
    }
    Ok(projector_distance(a, b))
}

/// Closed form for lines: `‖v − (u·v)u‖`, i.e. `sqrt(1 − (u·v)²)` without
/// the cancellation.
fn line_distance(a: &Subspace, b: &Subspace) -> f64 {
    let (u, v) = (a.basis.column(0), b.basis.column(0));
    (v - u * u.dot(&v)).norm().min(1.0)
}

/// Spectral norm of the projector difference via SVD.
pub fn projector_distance(a: &Subspace, b: &Subspace) -> f64 {
    let diff = a.projector() - b.projector();
    diff.singular_values().max().clamp(0.0, 1.0)
}

/// Draws a Haar-distributed point of `G_l(R^n)`: orthonormalized i.i.d.
/// Gaussian columns with sign-corrected QR.
pub fn sample_haar(n: usize, l: usize, rng: &mut Rng) -> Result<Subspace> {
    if l == 0 || l >= n {
        return Err(Error::param("l", format!("need 1 ≤ l < n, got l={l}, n={n}")));
    }
    loop {
        let data = gaussian_vec(rng, n * l);
        let g = DMatrix::from_column_slice(n, l, &data);
        match orthonormalize(&g) {
            Ok(basis) => return Ok(Subspace { basis }),
            Err(Error::RankDeficient { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
}

/// Haar-distributed `n × n` orthogonal matrix.
pub fn sample_orthogonal(n: usize, rng: &mut Rng) -> DMatrix<f64> {
    loop {
        let g = DMatrix::from_column_slice(n, n, &gaussian_vec(rng, n * n));
        if let Ok(q) = orthonormalize(&g) {
            return q;
        }
    }
}

/// Builds `ν′ = span(z + n) ⊕ (ν ∩ z^⊥)`, which contains `z + n` and lies
/// within distance `‖n‖/‖z‖` of `ν`.
pub fn perturb_subspace(nu: &Subspace, z: &[f64], n_vec: &[f64]) -> Result<Subspace> {
    let dim = nu.ambient_dim();
    for v in [z, n_vec] {
        if v.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: v.len() });
        }
    }
    let z_norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    if z_norm == 0.0 {
        return Err(Error::param("z", "must be non-zero"));
    }
    let residual = nu.residual(z)?;
    if residual > tolerance::MEMBERSHIP * z_norm.max(1.0) {
        return Err(Error::NotInSubspace { residual });
    }
    let n_norm = n_vec.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n_norm >= z_norm {
        return Err(Error::param("n_vec", format!("‖n‖ = {n_norm} must be below ‖z‖ = {z_norm}")));
    }
    let l = nu.dim();
    let c = DMatrix::from_column_slice(l, 1, &nu.coords(z));
    let c = &c / c.norm();
    let mut generators = DMatrix::zeros(dim, l);
    let moved: Vec<f64> = z.iter().zip(n_vec).map(|(a, b)| a + b).collect();
    generators.set_column(0, &DVector::from_vec(moved));
    if l > 1 {
        let w = complement_of(&c);
        let rest = &nu.basis * w;
        generators.columns_mut(1, l - 1).copy_from(&rest);
    }
    Subspace::from_generators(&generators)
}

/// A full-row-rank `m × n` matrix (`1 ≤ m < n`) with its SVD cached.
#[derive(Debug, Clone)]
pub struct MeasurementMatrix {
    entries: DMatrix<f64>,
    u: DMatrix<f64>,
    singular: DVector<f64>,
    v_t: DMatrix<f64>,
    sigma_min: f64,
    sigma_max: f64,
    null_space: Subspace,
}

impl MeasurementMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let (m, n) = entries.shape();
        if m == 0 || m >= n {
            return Err(Error::param("A", format!("need 1 ≤ m < n, got {m}×{n}")));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("A", "entries must be finite"));
        }
        let svd = entries.clone().svd(true, true);
        let singular = svd.singular_values.clone();
        let sigma_max = singular.max();
        let sigma_min = singular.min();
        let rank = singular.iter().filter(|&&s| s > tolerance::RANK_REL * sigma_max * n as f64).count();
        if rank < m || !(sigma_max > 0.0) {
            return Err(Error::RankDeficient { rank, required: m });
        }
        let row_space = Subspace { basis: orthonormalize(&entries.transpose())? };
        let null_space = row_space.orthogonal_complement();
        Ok(MeasurementMatrix {
            entries,
            u: svd.u.expect("u requested"),
            singular,
            v_t: svd.v_t.expect("v_t requested"),
            sigma_min,
            sigma_max,
            null_space,
        })
    }

    /// A matrix with orthonormal rows spanning `ν^⊥`, so `N(A) = ν`.
    pub fn from_null_space(nu: &Subspace) -> Result<Self> {
        let rows = nu.orthogonal_complement();
        Self::new(rows.basis().transpose())
    }

    /// `m × n` with i.i.d. `N(0, 1/n)` entries.
    pub fn gaussian(m: usize, n: usize, rng: &mut Rng) -> Result<Self> {
        let scale = 1.0 / (n as f64).sqrt();
        loop {
            let data: Vec<f64> = gaussian_vec(rng, m * n).into_iter().map(|v| v * scale).collect();
            match Self::new(DMatrix::from_column_slice(m, n, &data)) {
                Err(Error::RankDeficient { .. }) => continue,
                other => return other,
            }
        }
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn null_space(&self) -> &Subspace {
        &self.null_space
    }

    /// `(σ_min, σ_max)` of `Aᵀ`.
    pub fn singular_extremes(&self) -> (f64, f64) {
        (self.sigma_min, self.sigma_max)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let v = &self.entries * DVector::from_column_slice(x);
        v.as_slice().to_vec()
    }

    /// `‖A x − y‖`.
    pub fn residual(&self, x: &[f64], y: &[f64]) -> f64 {
        self.apply(x).iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
    }

    /// `A⁺ y`, the minimum-norm solution of `A x = y`.
    pub fn min_norm_solution(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.rows() {
            return Err(Error::DimensionMismatch { expected: self.rows(), got: y.len() });
        }
        let b = self.u.transpose() * DVector::from_column_slice(y);
        let scaled = b.component_div(&self.singular);
        Ok((self.v_t.transpose() * scaled).as_slice().to_vec())
    }

    /// Euclidean projection of `p` onto `{x : ‖A x − y‖ ≤ radius}`.
    pub fn project_onto_residual_ball(&self, p: &[f64], y: &[f64], radius: f64) -> Vec<f64> {
        let pv = DVector::from_column_slice(p);
        let c = &self.v_t * &pv;
        let b = self.u.transpose() * DVector::from_column_slice(y);
        let s = &self.singular;
        let gap: Vec<f64> = (0..s.len()).map(|i| s[i] * c[i] - b[i]).collect();
        let resid = |lam: f64| -> f64 {
            gap.iter()
                .zip(s.iter())
                .map(|(g, si)| (g / (1.0 + lam * si * si)).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        if resid(0.0) <= radius {
            return p.to_vec();
        }
        let mut hi = 1.0;
        while resid(hi) > radius && hi < 1e300 {
            hi *= 4.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if resid(mid) > radius {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        let lam = hi;
        let par = DVector::from_fn(s.len(), |i, _| (c[i] + lam * s[i] * b[i]) / (1.0 + lam * s[i] * s[i]));
        let x = &pv - self.v_t.transpose() * (&c - par);
        x.as_slice().to_vec()
    }
}

/// Row-major JSON form of a matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Vec<f64>>,
}

impl From<&DMatrix<f64>> for MatrixJson {
    fn from(m: &DMatrix<f64>) -> Self {
        MatrixJson {
            rows: m.nrows(),
            cols: m.ncols(),
            data: (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect(),
        }
    }
}

impl TryFrom<MatrixJson> for DMatrix<f64> {
    type Error = Error;

    fn try_from(j: MatrixJson) -> Result<Self> {
        if j.data.len() != j.rows || j.data.iter().any(|r| r.len() != j.cols) {
            return Err(Error::MatrixParse { line: 0, reason: "data does not match declared shape".into() });
        }
        Ok(DMatrix::from_fn(j.rows, j.cols, |i, k| j.data[i][k]))
    }
}

/// Formats with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Row-major CSV with a `# shape RxC` header line.
pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = format!("# shape {}x{}\n", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|&v| fmt17(v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Parses the CSV written by [`matrix_to_csv`]. The shape header is
/// optional; blank lines are skipped and entries must be finite.
pub fn matrix_from_csv(text: &str) -> Result<DMatrix<f64>> {
    let mut declared: Option<(usize, usize)> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = lineno + 1;
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(shape) = comment.trim().strip_prefix("shape") {
                let (r, c) = shape
                    .trim()
                    .split_once('x')
                    .ok_or_else(|| Error::MatrixParse { line: lineno, reason: "shape must be RxC".into() })?;
                let parse = |s: &str| {
                    s.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::MatrixParse { line: lineno, reason: "bad shape".into() })
                };
                declared = Some((parse(r)?, parse(c)?));
            }
            continue;
        }
        let row = line
            .split(',')
            .map(|tok| {
                let v: f64 = tok.trim().parse().map_err(|_| Error::MatrixParse {
                    line: lineno,
                    reason: format!("`{}` is not a number", tok.trim()),
                })?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::MatrixParse { line: lineno, reason: "non-finite entry".into() })
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::MatrixParse {
                    line: lineno,
                    reason: format!("row has {} entries, expected {}", row.len(), first.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::MatrixParse { line: 0, reason: "no data rows".into() });
    }
    let (r, c) = (rows.len(), rows[0].len());
    if let Some((dr, dc)) = declared {
        if (dr, dc) != (r, c) {
            return Err(Error::MatrixParse { line: 0, reason: format!("shape header {dr}x{dc} but data is {r}x{c}") });
        }
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

/// Reads a vector stored as a single row or a single column.
pub fn vector_from_csv(text: &str) -> Result<Vec<f64>> {
    let m = matrix_from_csv(text)?;
    if m.nrows() == 1 || m.ncols() == 1 {
        Ok(m.iter().copied().collect())
    } else {
        Err(Error::MatrixParse { line: 0, reason: format!("expected a vector, got {}x{}", m.nrows(), m.ncols()) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use approx::assert_relative_eq;

    fn line(v: &[f64]) -> Subspace {
        Subspace::span(&[v]).unwrap()
    }

    #[test]
    fn distance_examples() {
        let a = line(&[1.0, 0.0]);
        assert_eq!(grassmann_distance(&a, &a).unwrap(), 0.0);
        assert_relative_eq!(grassmann_distance(&a, &line(&[0.0, 1.0])).unwrap(), 1.0);
        let t = std::f64::consts::PI / 6.0;
        let b = line(&[t.cos(), t.sin()]);
        // oracle: spectral norm of the explicit 2x2 projector difference
        let d = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0])
            - DMatrix::from_row_slice(2, 2, &[t.cos().powi(2), t.cos() * t.sin(), t.cos() * t.sin(), t.sin().powi(2)]);
        let oracle = d.singular_values().max();
        assert_relative_eq!(oracle, 0.5, epsilon = 1e-12);
        assert_relative_eq!(grassmann_distance(&a, &b).unwrap(), 0.5, epsilon = 1e-12);
        assert_relative_eq!(projector_distance(&a, &b), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn distance_dimension_errors() {
        let a = line(&[1.0, 0.0, 0.0]);
        let b = line(&[1.0, 0.0]);
        assert!(grassmann_distance(&a, &b).is_err());
        let c = Subspace::span(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]).unwrap();
        assert!(grassmann_distance(&a, &c).is_err());
    }

    #[test]
    fn null_space_examples() {
        let a = MeasurementMatrix::new(DMatrix::from_row_slice(1, 2, &[1.0, -1.0])).unwrap();
        let nu = a.null_space();
        assert_eq!(nu.dim(), 1);
        assert_relative_eq!(grassmann_distance(nu, &line(&[1.0, 1.0])).unwrap(), 0.0, epsilon = 1e-12);

        let a = MeasurementMatrix::new(DMatrix::from_row_slice(2, 3, &[1.0, 0.0, -1.0, 0.0, 1.0, -1.0])).unwrap();
        assert_relative_eq!(grassmann_distance(a.null_space(), &line(&[1.0, 1.0, 1.0])).unwrap(), 0.0, epsilon = 1e-12);

        let mut r = rng::seeded(5);
        let a = MeasurementMatrix::gaussian(3, 5, &mut r).unwrap();
        let nb = a.null_space().basis();
        assert!((a.entries() * nb).amax() < 1e-10);
        assert!((nb.transpose() * nb - DMatrix::<f64>::identity(2, 2)).amax() < 1e-10);
    }

    #[test]
    fn rank_deficient_rejected() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        assert!(matches!(MeasurementMatrix::new(a), Err(Error::RankDeficient { .. })));
        assert!(MeasurementMatrix::new(DMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn singular_extreme_examples() {
        let a = MeasurementMatrix::new(DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0])).unwrap();
        let (lo, hi) = a.singular_extremes();
        assert_relative_eq!(lo, 1.0, epsilon = 1e-12);
        assert_relative_eq!(hi, 1.0, epsilon = 1e-12);
        let a = MeasurementMatrix::new(DMatrix::from_row_slice(2, 4, &[2.0, 0.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0])).unwrap();
        let (lo, hi) = a.singular_extremes();
        assert_relative_eq!(lo, 2.0, epsilon = 1e-12);
        assert_relative_eq!(hi, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn haar_sampling_is_seeded() {
        let a = sample_haar(3, 1, &mut rng::seeded(42)).unwrap();
        let b = sample_haar(3, 1, &mut rng::seeded(42)).unwrap();
        assert_eq!(a, b);
        let c = sample_haar(3, 1, &mut rng::seeded(43)).unwrap();
        assert_ne!(a, c);
        assert!(sample_haar(3, 3, &mut rng::seeded(1)).is_err());
    }

    #[test]
    fn perturbation_examples() {
        let nu = line(&[1.0, 0.0, 0.0]);
        let same = perturb_subspace(&nu, &[1.0, 0.0, 0.0], &[0.0; 3]).unwrap();
        assert_relative_eq!(grassmann_distance(&nu, &same).unwrap(), 0.0, epsilon = 1e-15);

        let moved = perturb_subspace(&nu, &[1.0, 0.0, 0.0], &[0.0, 0.1, 0.0]).unwrap();
        let expected = line(&[1.0, 0.1, 0.0]);
        assert!(grassmann_distance(&moved, &expected).unwrap() < 1e-12);
        let d = projector_distance(&nu, &moved);
        assert_relative_eq!(d, 0.1f64.atan().sin(), epsilon = 1e-12);
        assert_relative_eq!(d, 0.09950, epsilon = 1e-5);
    }

    #[test]
    fn perturbation_errors() {
        let nu = line(&[1.0, 0.0, 0.0]);
        assert!(matches!(perturb_subspace(&nu, &[0.0, 1.0, 0.0], &[0.0; 3]), Err(Error::NotInSubspace { .. })));
        assert!(perturb_subspace(&nu, &[0.0; 3], &[0.0; 3]).is_err());
        assert!(perturb_subspace(&nu, &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn min_norm_and_projection() {
        let mut r = rng::seeded(8);
        let a = MeasurementMatrix::gaussian(3, 6, &mut r).unwrap();
        let y = vec![0.3, -1.0, 2.0];
        let x0 = a.min_norm_solution(&y).unwrap();
        assert!(a.residual(&x0, &y) < 1e-12);
        assert!(a.null_space().coords(&x0).iter().all(|c| c.abs() < 1e-10));

        let p = vec![5.0, 0.0, -3.0, 1.0, 0.0, 2.0];
        let radius = 0.25;
        let q = a.project_onto_residual_ball(&p, &y, radius);
        assert!((a.residual(&q, &y) - radius).abs() < 1e-9);
        // projection optimality: p − q is normal to the constraint, so any
        // feasible point along a random chord is no closer
        for t in [0.1, 0.5, 0.9] {
            let w: Vec<f64> = q.iter().zip(&x0).map(|(a, b)| (1.0 - t) * a + t * b).collect();
            let dq: f64 = p.iter().zip(&q).map(|(a, b)| (a - b).powi(2)).sum();
            let dw: f64 = p.iter().zip(&w).map(|(a, b)| (a - b).powi(2)).sum();
            assert!(dw >= dq - 1e-9);
        }
        let inside = a.project_onto_residual_ball(&x0, &y, radius);
        assert_eq!(inside, x0);
    }

    #[test]
    fn csv_and_json_io() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, -0.1, 1e-300, 3.5, 0.0, 1.0 / 3.0]);
        let text = matrix_to_csv(&m);
        assert!(text.starts_with("# shape 2x3\n"));
        assert_eq!(matrix_from_csv(&text).unwrap(), m);
        let j = serde_json::to_string(&MatrixJson::from(&m)).unwrap();
        let back: DMatrix<f64> = serde_json::from_str::<MatrixJson>(&j).unwrap().try_into().unwrap();
        assert_eq!(back, m);
        assert!(matrix_from_csv("# shape 2x2\n1,2\n").is_err());
        assert!(matrix_from_csv("1,2\n3\n").is_err());
        assert!(matrix_from_csv("1,NaN\n").is_err());
        assert!(matrix_from_csv("").is_err());
        assert_eq!(vector_from_csv("1\n2\n3\n").unwrap(), vec![1.0, 2.0, 3.0]);
        assert_eq!(vector_from_csv("1,2,3").unwrap(), vec![1.0, 2.0, 3.0]);
    }
}
