//! Row-major dense matrices and finite real vectors.
//!
//! All reductions run in a fixed sequential order so that results are
//! bit-reproducible regardless of how callers schedule work.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::ops::Deref;

use crate::error::{usage, Error, Result};

/// A real vector whose entries are all finite.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct RealVector(Vec<f64>);

impl RealVector {
    pub fn new(data: Vec<f64>) -> Result<Self> {
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return usage(format!("vector entry {i} is not finite"));
        }
        Ok(Self(data))
    }

    pub(crate) fn from_vec_unchecked(data: Vec<f64>) -> Self {
        Self(data)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    /// The `i`-th standard basis vector of length `n`.
    pub fn basis(n: usize, i: usize) -> Self {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        Self(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm_squared(&self) -> f64 {
        norm_squared(&self.0)
    }
}

impl Deref for RealVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<RealVector> for Vec<f64> {
    fn from(v: RealVector) -> Self {
        v.0
    }
}

pub(crate) fn norm_squared(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |acc, v| acc + v * v)
}

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).fold(0.0, |acc, (a, b)| acc + a * b)
}

/// Row-major real matrix with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return usage(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            ));
        }
        if data.len() != rows * cols {
            return usage(format!(
                "matrix data has {} entries, expected {rows}x{cols} = {}",
                data.len(),
                rows * cols
            ));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return usage(format!(
                "matrix entry ({}, {}) is not finite",
                i / cols,
                i % cols
            ));
        }
        Ok(Self { rows, cols, data })
    }

    pub(crate) fn from_vec_unchecked(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return usage("ragged rows");
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_vec_unchecked(rows, cols, vec![0.0; rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let n = values.len();
        let mut data = vec![0.0; n * n];
        for (i, v) in values.iter().enumerate() {
            data[i * n + i] = *v;
        }
        Self::new(n, n, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm_squared(&self.data).sqrt()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows == self.cols
            && (0..self.rows)
                .all(|i| (i + 1..self.cols).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }

    /// Matrix product `self · other`.
    ///
    /// Entry `(r, p)` accumulates `self[r, i] · other[i, p]` for `i = 0, 1, …`
    /// in order, which is bit-identical to [`mat_vec`] applied column by
    /// column. The loop nest streams rows of `other` so it vectorizes over `p`.
    pub fn mat_mul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return usage(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            ));
        }
        const ROW_BLOCK: usize = 4;
        const COL_BLOCK: usize = 256;
        let p = other.cols;
        let mut out = vec![0.0; self.rows * p];
        for r0 in (0..self.rows).step_by(ROW_BLOCK) {
            let r1 = (r0 + ROW_BLOCK).min(self.rows);
            for c0 in (0..p).step_by(COL_BLOCK) {
                let c1 = (c0 + COL_BLOCK).min(p);
                for i in 0..self.cols {
                    let src = &other.data[i * p + c0..i * p + c1];
                    for r in r0..r1 {
                        let a = self.data[r * self.cols + i];
                        let dst = &mut out[r * p + c0..r * p + c1];
                        for (d, s) in dst.iter_mut().zip(src) {
                            *d += a * s;
                        }
                    }
                }
            }
        }
        Ok(Self::from_vec_unchecked(self.rows, p, out))
    }

    /// `selfᵀ · self`.
    pub fn gram(&self) -> DenseMatrix {
        let n = self.cols;
        let mut g = Self::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut s = 0.0;
                for r in 0..self.rows {
                    s += self.data[r * n + i] * self.data[r * n + j];
                }
                g.data[i * n + j] = s;
                g.data[j * n + i] = s;
            }
        }
        g
    }

    /// Squared Euclidean norm of every column.
    pub fn column_norms_squared(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for r in 0..self.rows {
            for (o, v) in out.iter_mut().zip(self.row(r)) {
                *o += v * v;
            }
        }
        out
    }

    /// Multiplies column `j` by `factors[j]`.
    pub fn scale_columns(&self, factors: &[f64]) -> Result<DenseMatrix> {
        if factors.len() != self.cols {
            return usage(format!(
                "{} column factors for a matrix with {} columns",
                factors.len(),
                self.cols
            ));
        }
        let mut out = self.clone();
        for r in 0..self.rows {
            for (v, f) in out.data[r * self.cols..(r + 1) * self.cols]
                .iter_mut()
                .zip(factors)
            {
                *v *= f;
            }
        }
        Ok(out)
    }

    /// Multiplies row `i` by `factors[i]`.
    pub fn scale_rows(&self, factors: &[f64]) -> Result<DenseMatrix> {
        if factors.len() != self.rows {
            return usage(format!(
                "{} row factors for a matrix with {} rows",
                factors.len(),
                self.rows
            ));
        }
        let mut out = self.clone();
        for (r, f) in factors.iter().enumerate() {
            for v in &mut out.data[r * self.cols..(r + 1) * self.cols] {
                *v *= f;
            }
        }
        Ok(out)
    }

    /// Principal submatrix on the given (sorted) index set.
    pub fn principal_submatrix(&self, idx: &[usize]) -> DenseMatrix {
        let k = idx.len();
        let mut out = Self::zeros(k, k);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                out.data[a * k + b] = self.get(i, j);
            }
        }
        out
    }

    /// Columns `idx` of `self` as a new `rows × idx.len()` matrix.
    pub fn select_columns(&self, idx: &[usize]) -> DenseMatrix {
        let k = idx.len();
        let mut out = Self::zeros(self.rows, k);
        for r in 0..self.rows {
            for (b, &j) in idx.iter().enumerate() {
                out.data[r * k + b] = self.get(r, j);
            }
        }
        out
    }

    /// Text serialization: a `"m n"` line followed by `m` lines of `n`
    /// space-separated reals in shortest round-trip decimal form.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.data.len() * 20);
        let _ = writeln!(s, "{} {}", self.rows, self.cols);
        for r in 0..self.rows {
            for (j, v) in self.row(r).iter().enumerate() {
                if j > 0 {
                    s.push(' ');
                }
                let _ = write!(s, "{v}");
            }
            s.push('\n');
        }
        s
    }

    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<DenseMatrix> {
        Self::read_text(text.as_bytes())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<DenseMatrix> {
        let mut lines = r
            .lines()
            .enumerate()
            .filter(|(_, l)| l.as_ref().map_or(true, |l| !l.trim().is_empty()));
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Parse("empty matrix file".into()))?;
        let header = header?;
        let dims: Vec<&str> = header.split_whitespace().collect();
        if dims.len() != 2 {
            return Err(Error::Parse(format!("bad matrix header {header:?}")));
        }
        let parse_dim = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| Error::Parse(format!("bad matrix dimension {s:?}: {e}")))
        };
        let (rows, cols) = (parse_dim(dims[0])?, parse_dim(dims[1])?);
        let mut data = Vec::with_capacity(rows * cols);
        let mut seen = 0;
        for (lineno, line) in lines {
            let line = line?;
            let before = data.len();
            for tok in line.split_whitespace() {
                let v: f64 = tok.parse().map_err(|e| {
                    Error::Parse(format!("line {}: bad value {tok:?}: {e}", lineno + 1))
                })?;
                data.push(v);
            }
            if data.len() - before != cols {
                return Err(Error::Parse(format!(
                    "line {}: expected {cols} values, found {}",
                    lineno + 1,
                    data.len() - before
                )));
            }
            seen += 1;
        }
        if seen != rows {
            return Err(Error::Parse(format!("expected {rows} rows, found {seen}")));
        }
        Self::new(rows, cols, data)
    }
}

/// `A·x` with each row summed left to right.
pub fn mat_vec(a: &DenseMatrix, x: &[f64]) -> Result<RealVector> {
    if a.cols != x.len() {
        return usage(format!(
            "cannot apply a {}x{} matrix to a vector of length {}",
            a.rows,
            a.cols,
            x.len()
        ));
    }
    let out = (0..a.rows).map(|r| dot(a.row(r), x)).collect();
    Ok(RealVector(out))
}
