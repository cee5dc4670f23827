//! Small dense complex linear algebra.
//!
//! Everything here works on [`CMatrix`], a finite-entry wrapper around a
//! dynamically sized `nalgebra` matrix. The factorizations the rest of the
//! crate depends on are pivot-free LU with an explicit choice of which factor
//! carries the unit diagonal, and an eigen-decomposition that clusters nearly
//! equal eigenvalues and reports multiplicities.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default absolute tolerance for grouping eigenvalues into one cluster.
pub const TOL_EIG: f64 = 1e-9;
/// Relative threshold under which an LU pivot counts as zero.
pub const TOL_PIVOT: f64 = 1e-13;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Orders complex numbers lexicographically on `(re, im)`.
pub fn cmp_complex(a: &C64, b: &C64) -> std::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Dense complex matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct CMatrix(DMatrix<C64>);

impl CMatrix {
    /// Builds a matrix from row-major data.
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Self::checked(DMatrix::from_row_iterator(rows, cols, data))
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::new(nrows, ncols, rows.concat())
    }

    /// Convenience constructor for real test data.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| cr(x)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn checked(m: DMatrix<C64>) -> Result<Self> {
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let z = m[(i, j)];
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
            }
        }
        Ok(CMatrix(m))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        CMatrix(DMatrix::identity(n, n))
    }

    pub fn scalar(n: usize, z: C64) -> Self {
        CMatrix(DMatrix::identity(n, n) * z)
    }

    pub fn from_diagonal(d: &[C64]) -> Self {
        let mut m = DMatrix::zeros(d.len(), d.len());
        for (i, &z) in d.iter().enumerate() {
            m[(i, i)] = z;
        }
        CMatrix(m)
    }

    pub fn column_vector(v: &[C64]) -> Self {
        CMatrix(DMatrix::from_column_slice(v.len(), 1, v))
    }

    pub fn row_vector(v: &[C64]) -> Self {
        CMatrix(DMatrix::from_row_slice(1, v.len(), v))
    }

    pub fn as_na(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_na(self) -> DMatrix<C64> {
        self.0
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn dim(&self) -> usize {
        debug_assert!(self.is_square());
        self.rows()
    }

    pub fn to_rows(&self) -> Vec<Vec<C64>> {
        (0..self.rows())
            .map(|i| (0..self.cols()).map(|j| self[(i, j)]).collect())
            .collect()
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows()).map(|i| self[(i, j)]).collect()
    }

    pub fn row(&self, i: usize) -> Vec<C64> {
        (0..self.cols()).map(|j| self[(i, j)]).collect()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.rows().min(self.cols()))
            .map(|i| self[(i, i)])
            .collect()
    }

    pub fn trace(&self) -> C64 {
        self.diagonal().iter().sum()
    }

    pub fn transpose(&self) -> Self {
        CMatrix(self.0.transpose())
    }

    pub fn adjoint(&self) -> Self {
        CMatrix(self.0.adjoint())
    }

    pub fn scale(&self, z: C64) -> Self {
        CMatrix(&self.0 * z)
    }

    /// `self + z I`.
    pub fn shift(&self, z: C64) -> Self {
        let mut m = self.0.clone();
        for i in 0..m.nrows().min(m.ncols()) {
            m[(i, i)] += z;
        }
        CMatrix(m)
    }

    pub fn norm_fro(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Self {
        CMatrix(self.0.view((r0, c0), (nr, nc)).into_owned())
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &CMatrix) {
        self.0.view_mut((r0, c0), (b.rows(), b.cols())).copy_from(&b.0);
    }

    /// Upper triangle; `strict` drops the diagonal.
    pub fn upper(&self, strict: bool) -> Self {
        let mut m = self.0.clone();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if j < i || (strict && i == j) {
                    m[(i, j)] = C64::default();
                }
            }
        }
        CMatrix(m)
    }

    /// Lower triangle; `strict` drops the diagonal.
    pub fn lower(&self, strict: bool) -> Self {
        self.transpose().upper(strict).transpose()
    }

    /// Direct sum `self ⊕ other`.
    pub fn direct_sum(&self, other: &CMatrix) -> Self {
        let mut m = CMatrix::zeros(self.rows() + other.rows(), self.cols() + other.cols());
        m.set_block(0, 0, self);
        m.set_block(self.rows(), self.cols(), other);
        m
    }

    pub fn inverse(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::Dimension("inverse of a non-square matrix".into()));
        }
        let lu = self.0.clone().lu();
        let inv = lu.try_inverse().ok_or(Error::Singular)?;
        CMatrix::checked(inv).map_err(|_| Error::Singular)
    }

    /// Solves `self · X = rhs` with partial pivoting.
    pub fn solve(&self, rhs: &CMatrix) -> Result<Self> {
        let lu = self.0.clone().lu();
        let x = lu.solve(&rhs.0).ok_or(Error::Singular)?;
        CMatrix::checked(x).map_err(|_| Error::Singular)
    }

    /// `g · self · g⁻¹`.
    pub fn conjugate_by(&self, g: &CMatrix) -> Result<Self> {
        let gi = g.inverse()?;
        Ok(g * self * &gi)
    }

    /// Singular values in decreasing order.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.0.clone().svd(false, false).singular_values.iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    /// Orthonormal basis (as columns) of the numerical null space: right
    /// singular vectors whose singular value is at most `tol`.
    pub fn nullspace(&self, tol: f64) -> CMatrix {
        let n = self.cols();
        let mut a = self.0.clone();
        if a.nrows() < n {
            let mut padded = DMatrix::zeros(n, n);
            padded.view_mut((0, 0), (a.nrows(), n)).copy_from(&a);
            a = padded;
        }
        let svd = a.svd(false, true);
        let v_t = svd.v_t.expect("requested V^T");
        let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
        idx.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
        let keep: Vec<usize> = idx
            .into_iter()
            .filter(|&i| svd.singular_values[i] <= tol)
            .collect();
        let mut out = DMatrix::zeros(n, keep.len());
        for (k, &i) in keep.iter().enumerate() {
            for j in 0..n {
                out[(j, k)] = v_t[(i, j)].conj();
            }
        }
        CMatrix(out)
    }

    /// Numerical rank: number of singular values above `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        self.singular_values().iter().filter(|&&s| s > tol).count()
    }

    /// Largest absolute entry of `self - other`, relative to `max(1, ‖other‖_max)`.
    pub fn rel_diff(&self, other: &CMatrix) -> f64 {
        (self - other).max_abs() / other.max_abs().max(1.0)
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.0[idx]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, idx: (usize, usize)) -> &mut C64 {
        &mut self.0[idx]
    }
}

macro_rules! binop {
    ($tr:ident, $f:ident, $op:tt) => {
        impl $tr<&CMatrix> for &CMatrix {
            type Output = CMatrix;
            fn $f(self, rhs: &CMatrix) -> CMatrix {
                CMatrix(&self.0 $op &rhs.0)
            }
        }
        impl $tr<CMatrix> for CMatrix {
            type Output = CMatrix;
            fn $f(self, rhs: CMatrix) -> CMatrix {
                CMatrix(self.0 $op rhs.0)
            }
        }
        impl $tr<&CMatrix> for CMatrix {
            type Output = CMatrix;
            fn $f(self, rhs: &CMatrix) -> CMatrix {
                CMatrix(self.0 $op &rhs.0)
            }
        }
        impl $tr<CMatrix> for &CMatrix {
            type Output = CMatrix;
            fn $f(self, rhs: CMatrix) -> CMatrix {
                CMatrix(&self.0 $op rhs.0)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);

impl Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        CMatrix(-&self.0)
    }
}

impl Neg for CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        CMatrix(-self.0)
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows(), self.cols())?;
        for i in 0..self.rows() {
            write!(f, "  ")?;
            for j in 0..self.cols() {
                let z = self[(i, j)];
                write!(f, "{:>11.4e}{:+.4e}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

// JSON: a list of rows, each entry an [re, im] pair.
impl Serialize for CMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for CMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<C64>> = Vec::deserialize(d)?;
        CMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Which LU factor carries the unit diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LuNormalization {
    /// Crout: `U` has unit diagonal.
    UnitDiagonalU,
    /// Doolittle: `L` has unit diagonal.
    UnitDiagonalL,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LuFactors {
    pub l: CMatrix,
    pub u: CMatrix,
    pub normalization: LuNormalization,
}

/// Pivot-free LU factorization `M = L U`.
///
/// Row exchanges are never performed; a vanishing leading principal minor is
/// reported as [`Error::ZeroPivot`] with the 1-based index of the minor.
pub fn lu_decompose(m: &CMatrix, normalization: LuNormalization) -> Result<LuFactors> {
    if !m.is_square() {
        return Err(Error::Dimension("LU of a non-square matrix".into()));
    }
    let n = m.rows();
    let scale = m.norm_fro().max(f64::MIN_POSITIVE);
    let mut l = CMatrix::identity(n);
    let mut u = CMatrix::zeros(n, n);
    for k in 0..n {
        for j in k..n {
            let s: C64 = (0..k).map(|p| l[(k, p)] * u[(p, j)]).sum();
            u[(k, j)] = m[(k, j)] - s;
        }
        if u[(k, k)].norm() <= TOL_PIVOT * scale {
            return Err(Error::ZeroPivot(k + 1));
        }
        for i in k + 1..n {
            let s: C64 = (0..k).map(|p| l[(i, p)] * u[(p, k)]).sum();
            l[(i, k)] = (m[(i, k)] - s) / u[(k, k)];
        }
    }
    if normalization == LuNormalization::UnitDiagonalU {
        // Move the pivots from U into L: L ← L·D, U ← D⁻¹·U.
        for k in 0..n {
            let d = u[(k, k)];
            for i in k..n {
                l[(i, k)] *= d;
            }
            for j in k..n {
                u[(k, j)] /= d;
            }
            u[(k, k)] = C64::new(1.0, 0.0);
        }
    }
    Ok(LuFactors { l, u, normalization })
}

/// One group of numerically equal eigenvalues.
#[derive(Debug, Clone)]
pub struct EigenCluster {
    pub value: C64,
    pub multiplicity: usize,
    /// Dimension of the numerical eigenspace (capped at `multiplicity`).
    pub geometric: usize,
    /// Orthonormal eigenspace basis as columns.
    pub vectors: CMatrix,
}

impl EigenCluster {
    pub fn is_semisimple(&self) -> bool {
        self.geometric == self.multiplicity
    }
}

#[derive(Debug, Clone)]
pub struct Eigen {
    pub clusters: Vec<EigenCluster>,
}

impl Eigen {
    /// All eigenvalues repeated by multiplicity, in cluster order.
    pub fn values(&self) -> Vec<C64> {
        self.clusters
            .iter()
            .flat_map(|c| std::iter::repeat_n(c.value, c.multiplicity))
            .collect()
    }

    pub fn pairs(&self) -> Vec<(C64, usize)> {
        self.clusters.iter().map(|c| (c.value, c.multiplicity)).collect()
    }

    pub fn is_diagonalizable(&self) -> bool {
        self.clusters.iter().all(EigenCluster::is_semisimple)
    }

    pub fn require_diagonalizable(&self) -> Result<()> {
        match self.clusters.iter().find(|c| !c.is_semisimple()) {
            Some(c) => Err(Error::NotDiagonalizable {
                re: c.value.re,
                im: c.value.im,
            }),
            None => Ok(()),
        }
    }

    /// Eigenvector matrix `V` with `M V = V diag(values())`.
    pub fn basis(&self) -> Result<CMatrix> {
        self.require_diagonalizable()?;
        let n: usize = self.clusters.iter().map(|c| c.multiplicity).sum();
        let mut v = CMatrix::zeros(n, n);
        let mut col = 0;
        for c in &self.clusters {
            v.set_block(0, col, &c.vectors);
            col += c.multiplicity;
        }
        Ok(v)
    }
}

/// Raw eigenvalues (unsorted, with repetition) from the complex Schur form.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<C64>> {
    if !m.is_square() {
        return Err(Error::Dimension("eigenvalues of a non-square matrix".into()));
    }
    if m.rows() == 0 {
        return Ok(Vec::new());
    }
    let schur = m.as_na().clone().schur();
    let ev = schur
        .eigenvalues()
        .ok_or_else(|| Error::Unsupported("Schur iteration did not converge".into()))?;
    Ok(ev.iter().copied().collect())
}

/// Sorts eigenvalues, clusters them within `tol` (absolute, single linkage)
/// and measures each cluster's eigenspace.
pub fn eigen_sorted(m: &CMatrix, tol: f64) -> Result<Eigen> {
    let mut ev = eigenvalues(m)?;
    ev.sort_by(cmp_complex);
    let n = ev.len();
    // union-find over pairs closer than tol
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            if (ev[i] - ev[j]).norm() <= tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<(usize, Vec<C64>)> = Vec::new();
    for (i, &z) in ev.iter().enumerate() {
        let r = find(&mut parent, i);
        match groups.iter_mut().find(|(root, _)| *root == r) {
            Some((_, g)) => g.push(z),
            None => groups.push((r, vec![z])),
        }
    }
    let scale = m.norm_fro().max(1.0);
    let null_tol = (1e-8 * scale).max(10.0 * tol);
    let mut clusters: Vec<EigenCluster> = groups
        .into_iter()
        .map(|(_, g)| {
            let k = g.len();
            let value = g.iter().sum::<C64>() / k as f64;
            let shifted = m.shift(-value);
            let ns = shifted.nullspace(null_tol);
            let geometric = ns.cols().min(k);
            let vectors = ns.block(0, 0, ns.rows(), geometric);
            EigenCluster {
                value,
                multiplicity: k,
                geometric,
                vectors,
            }
        })
        .collect();
    clusters.sort_by(|a, b| cmp_complex(&a.value, &b.value));
    Ok(Eigen { clusters })
}

/// Matches two multisets of complex numbers greedily after sorting and
/// returns the largest pairwise distance (infinite if the sizes differ).
pub fn multiset_distance(a: &[C64], b: &[C64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut rest: Vec<C64> = b.to_vec();
    let mut worst: f64 = 0.0;
    let mut sorted = a.to_vec();
    sorted.sort_by(cmp_complex);
    for z in sorted {
        let (k, d) = rest
            .iter()
            .enumerate()
            .map(|(k, w)| (k, (z - w).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("nonempty");
        worst = worst.max(d);
        rest.swap_remove(k);
    }
    worst
}
