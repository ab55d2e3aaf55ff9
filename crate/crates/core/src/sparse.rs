//! Compressed sparse row matrices, block placement and a sparse LU wrapper.

use std::io::{self, Write};

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SolveError {
    #[error("matrix is {rows}x{cols}, expected a square system")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("sparse LU factorization failed: {0}")]
    Factorization(String),
    #[error("system is numerically singular (relative residual {residual:.3e})")]
    Singular { residual: f64 },
}

/// Real sparse matrix in CSR form with sorted, duplicate-free columns.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CsrMatrix { nrows, ncols, indptr: vec![0; nrows + 1], indices: Vec::new(), values: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, 1.0)).collect())
    }

    pub fn diagonal(d: &[f64]) -> Self {
        Self::from_triplets(d.len(), d.len(), d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect())
    }

    /// Builds a matrix from `(row, col, value)` triplets; duplicates are
    /// summed in input order, so the result is reproducible bit for bit.
    pub fn from_triplets(nrows: usize, ncols: usize, mut trip: Vec<(usize, usize, f64)>) -> Self {
        trip.sort_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0; nrows + 1];
        let mut indices = Vec::with_capacity(trip.len());
        let mut values: Vec<f64> = Vec::with_capacity(trip.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in trip {
            assert!(r < nrows && c < ncols, "triplet ({r},{c}) outside {nrows}x{ncols}");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        CsrMatrix { nrows, ncols, indptr, indices, values }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates the stored entries of row `r`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.indptr[r]..self.indptr[r + 1];
        match self.indices[span.clone()].binary_search(&c) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn transpose(&self) -> CsrMatrix {
        CsrMatrix::from_triplets(self.ncols, self.nrows, self.triplets().map(|(r, c, v)| (c, r, v)).collect())
    }

    pub fn scaled(&self, s: f64) -> CsrMatrix {
        CsrMatrix { values: self.values.iter().map(|v| v * s).collect(), ..self.clone() }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows).map(|r| self.row(r).map(|(c, v)| v * x[c]).sum()).collect()
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        self.matvec(y).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|A_ij − A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        self.triplets().map(|(r, c, v)| (v - self.get(c, r)).abs()).fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (r, c, v) in self.triplets() {
            d[r][c] = v;
        }
        d
    }

    /// Coordinate dump, one `row col value` line per stored entry.
    pub fn write_coo<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# {} {} {}", self.nrows, self.ncols, self.nnz())?;
        for (r, c, v) in self.triplets() {
            writeln!(w, "{r} {c} {v:.17e}")?;
        }
        Ok(())
    }
}

/// Accumulates scaled blocks into a large matrix.
#[derive(Clone, Debug)]
pub struct BlockBuilder {
    nrows: usize,
    ncols: usize,
    trip: Vec<(usize, usize, f64)>,
}

impl BlockBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        BlockBuilder { nrows, ncols, trip: Vec::new() }
    }

    pub fn add(&mut self, r0: usize, c0: usize, block: &CsrMatrix, scale: f64) -> &mut Self {
        assert!(r0 + block.nrows() <= self.nrows && c0 + block.ncols() <= self.ncols);
        self.trip.extend(block.triplets().map(|(r, c, v)| (r0 + r, c0 + c, scale * v)));
        self
    }

    pub fn add_transposed(&mut self, r0: usize, c0: usize, block: &CsrMatrix, scale: f64) -> &mut Self {
        assert!(r0 + block.ncols() <= self.nrows && c0 + block.nrows() <= self.ncols);
        self.trip.extend(block.triplets().map(|(r, c, v)| (r0 + c, c0 + r, scale * v)));
        self
    }

    pub fn add_entry(&mut self, r: usize, c: usize, v: f64) -> &mut Self {
        self.trip.push((r, c, v));
        self
    }

    pub fn build(self) -> CsrMatrix {
        CsrMatrix::from_triplets(self.nrows, self.ncols, self.trip)
    }
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Sparse LU factorization of a square matrix.
pub struct SparseLu {
    n: usize,
    matrix: CsrMatrix,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
}

/// Relative residual above which a solve is declared singular.
const SINGULAR_RESIDUAL: f64 = 1e-6;

impl SparseLu {
    pub fn factor(a: &CsrMatrix) -> Result<Self, SolveError> {
        if a.nrows() != a.ncols() {
            return Err(SolveError::NotSquare { rows: a.nrows(), cols: a.ncols() });
        }
        let n = a.nrows();
        let trip: Vec<Triplet<usize, usize, f64>> = a.triplets().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trip)
            .map_err(|e| SolveError::Factorization(format!("{e:?}")))?;
        let lu = mat.sp_lu().map_err(|e| SolveError::Factorization(format!("{e:?}")))?;
        Ok(SparseLu { n, matrix: a.clone(), lu })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn raw_solve(&self, b: &[f64], transpose: bool) -> Vec<f64> {
        let mut rhs = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        if transpose {
            self.lu.solve_transpose_in_place(rhs.as_mut());
        } else {
            self.lu.solve_in_place(rhs.as_mut());
        }
        (0..self.n).map(|i| rhs[(i, 0)]).collect()
    }

    fn checked(&self, b: &[f64], transpose: bool) -> Result<Vec<f64>, SolveError> {
        if b.len() != self.n {
            return Err(SolveError::Dimension { expected: self.n, got: b.len() });
        }
        let apply = |x: &[f64]| {
            if transpose {
                // Aᵀx without forming the transpose
                let mut y = vec![0.0; self.n];
                for (r, c, v) in self.matrix.triplets() {
                    y[c] += v * x[r];
                }
                y
            } else {
                self.matrix.matvec(x)
            }
        };
        let mut x = self.raw_solve(b, transpose);
        let scale = norm2(b).max(f64::MIN_POSITIVE);
        let mut res: Vec<f64> = b.iter().zip(apply(&x)).map(|(bi, ai)| bi - ai).collect();
        let mut rel = norm2(&res) / scale;
        if rel > 1e-12 && rel.is_finite() {
            // one step of iterative refinement
            let dx = self.raw_solve(&res, transpose);
            x.iter_mut().zip(&dx).for_each(|(a, d)| *a += d);
            res = b.iter().zip(apply(&x)).map(|(bi, ai)| bi - ai).collect();
            rel = norm2(&res) / scale;
        }
        if norm2(b) == 0.0 {
            rel = norm2(&x);
        }
        if !rel.is_finite() || x.iter().any(|v| !v.is_finite()) || rel > SINGULAR_RESIDUAL {
            return Err(SolveError::Singular { residual: rel });
        }
        Ok(x)
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, SolveError> {
        self.checked(b, false)
    }

    pub fn solve_transpose(&self, b: &[f64]) -> Result<Vec<f64>, SolveError> {
        self.checked(b, true)
    }
}

/// Factorizes and solves in one call.
pub fn solve(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>, SolveError> {
    SparseLu::factor(a)?.solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let m = CsrMatrix::from_triplets(2, 3, vec![(1, 2, 1.0), (0, 0, 2.0), (1, 2, 0.5), (0, 1, -1.0)]);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(1, 2), 1.5);
        assert_eq!(m.get(1, 1), 0.0);
        assert_eq!(m.matvec(&[1.0, 1.0, 2.0]), vec![1.0, 3.0]);
        assert_eq!(m.transpose().get(2, 1), 1.5);
    }

    #[test]
    fn block_placement() {
        let b = CsrMatrix::from_triplets(1, 2, vec![(0, 0, 1.0), (0, 1, 2.0)]);
        let mut bb = BlockBuilder::new(3, 3);
        bb.add(0, 1, &b, 1.0).add_transposed(1, 0, &b, -1.0);
        let m = bb.build();
        assert_eq!(m.get(0, 2), 2.0);
        assert_eq!(m.get(2, 0), -2.0);
        assert_eq!(m.get(1, 0), -1.0);
    }

    #[test]
    fn lu_solves_and_transposes() {
        let a = CsrMatrix::from_triplets(
            3,
            3,
            vec![(0, 0, 4.0), (0, 1, 1.0), (1, 0, 2.0), (1, 1, 5.0), (1, 2, 1.0), (2, 2, 3.0), (2, 0, -1.0)],
        );
        let lu = SparseLu::factor(&a).unwrap();
        let x = lu.solve(&[1.0, 2.0, 3.0]).unwrap();
        let r = a.matvec(&x);
        assert!((r[0] - 1.0).abs() < 1e-14 && (r[1] - 2.0).abs() < 1e-14 && (r[2] - 3.0).abs() < 1e-14);
        let y = lu.solve_transpose(&[1.0, 0.0, 0.0]).unwrap();
        let ry = a.transpose().matvec(&y);
        assert!((ry[0] - 1.0).abs() < 1e-14 && ry[1].abs() < 1e-14 && ry[2].abs() < 1e-14);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]);
        let res = SparseLu::factor(&a).and_then(|lu| lu.solve(&[1.0, 0.0]));
        assert!(res.is_err());
    }
}
