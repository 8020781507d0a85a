use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Diagonal loading applied when a covariance fails to factor.
pub const REGULARIZATION: f64 = 1e-12;

const SYMMETRY_TOL: f64 = 1e-12;

/// Dense symmetric matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Wraps `m` after checking it is square, finite and symmetric to
    /// within 1e-12 relative. The stored matrix is exactly symmetric.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "symmetric matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "matrix has non-finite entries".into(),
            ));
        }
        let scale = m.amax().max(1.0);
        let n = m.nrows();
        for i in 0..n {
            for j in 0..i {
                if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::InvalidArgument(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self::symmetrized(m))
    }

    /// Averages `m` with its transpose. Use for matrices symmetric up to
    /// rounding, e.g. products `A·B·Aᵀ`.
    pub fn symmetrized(m: DMatrix<f64>) -> Self {
        let t = m.transpose();
        SymMatrix((m + t) * 0.5)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch(
                "matrix rows have unequal lengths".into(),
            ));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix(DMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        SymMatrix(DMatrix::zeros(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn diagonal(&self) -> DVector<f64> {
        self.0.diagonal()
    }

    /// `A·self·Aᵀ`.
    pub fn congruence(&self, a: &DMatrix<f64>) -> SymMatrix {
        SymMatrix::symmetrized(a * &self.0 * a.transpose())
    }

    pub fn scaled(&self, c: f64) -> SymMatrix {
        SymMatrix(&self.0 * c)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| self.0.row(i).iter().copied().collect())
            .collect()
    }
}

impl std::ops::Index<(usize, usize)> for SymMatrix {
    type Output = f64;
    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

/// Lower Cholesky factor `L` with `L·Lᵀ = m` and a positive diagonal.
pub fn cholesky_lower(m: &SymMatrix) -> Result<DMatrix<f64>> {
    let a = m.as_matrix();
    let n = a.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Cholesky with a single fallback: on failure the diagonal is loaded with
/// [`REGULARIZATION`] and the factorization retried. The flag reports
/// whether loading was needed.
pub fn cholesky_regularized(m: &SymMatrix) -> Result<(DMatrix<f64>, bool)> {
    match cholesky_lower(m) {
        Ok(l) => Ok((l, false)),
        Err(first) => {
            let n = m.dim();
            let loaded = SymMatrix(m.as_matrix() + DMatrix::identity(n, n) * REGULARIZATION);
            cholesky_lower(&loaded)
                .map(|l| (l, true))
                .map_err(|_| first)
        }
    }
}

/// Solves `L·x = b` for lower-triangular `L`.
pub fn solve_lower(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = l.nrows();
    let mut x = b.clone();
    for i in 0..n {
        let mut s = x[i];
        for k in 0..i {
            s -= l[(i, k)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Solves `L·Lᵀ·x = b` given the Cholesky factor.
pub fn cholesky_solve(l: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = l.nrows();
    let mut z = solve_lower(l, b);
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * z[k];
        }
        z[i] = s / l[(i, i)];
    }
    z
}

/// Column-stacked lower triangle: `[[a,b],[b,c]] -> (a,b,c)`.
pub fn vech(m: &SymMatrix) -> DVector<f64> {
    let n = m.dim();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for j in 0..n {
        for i in j..n {
            out.push(m[(i, j)]);
        }
    }
    DVector::from_vec(out)
}

/// Side length `n` with `n(n+1)/2 = len`, if `len` is triangular.
pub fn triangular_side(len: usize) -> Option<usize> {
    let mut n = 0usize;
    while n * (n + 1) / 2 < len {
        n += 1;
    }
    (n * (n + 1) / 2 == len).then_some(n)
}

/// Inverse of [`vech`].
pub fn unvech(v: &DVector<f64>) -> Result<SymMatrix> {
    let n = triangular_side(v.len()).ok_or_else(|| {
        Error::DimensionMismatch(format!("length {} is not a triangular number", v.len()))
    })?;
    let mut m = DMatrix::zeros(n, n);
    let mut idx = 0;
    for j in 0..n {
        for i in j..n {
            m[(i, j)] = v[idx];
            m[(j, i)] = v[idx];
            idx += 1;
        }
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(
            "vech vector has non-finite entries".into(),
        ));
    }
    Ok(SymMatrix(m))
}

/// Block lower-triangular matrix with identity diagonal blocks.
///
/// Rows are numbered from 1. The sub-block stored under `(row, lag)` sits at
/// block position `(row, row - lag)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockLowerSystem {
    blocks: usize,
    block_dim: usize,
    sub_blocks: BTreeMap<(usize, usize), DMatrix<f64>>,
}

impl BlockLowerSystem {
    pub fn identity(blocks: usize, block_dim: usize) -> Self {
        Self {
            blocks,
            block_dim,
            sub_blocks: BTreeMap::new(),
        }
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    pub fn dim(&self) -> usize {
        self.blocks * self.block_dim
    }

    pub fn sub_blocks(&self) -> &BTreeMap<(usize, usize), DMatrix<f64>> {
        &self.sub_blocks
    }

    pub fn get(&self, row: usize, lag: usize) -> Option<&DMatrix<f64>> {
        self.sub_blocks.get(&(row, lag))
    }

    pub fn insert(&mut self, row: usize, lag: usize, block: DMatrix<f64>) -> Result<()> {
        if row == 0 || row > self.blocks || lag == 0 || lag >= row {
            return Err(Error::DimensionMismatch(format!(
                "sub-block ({row}, {lag}) outside a {}-block system",
                self.blocks
            )));
        }
        if block.nrows() != self.block_dim || block.ncols() != self.block_dim {
            return Err(Error::DimensionMismatch(format!(
                "sub-block is {}x{}, expected {d}x{d}",
                block.nrows(),
                block.ncols(),
                d = self.block_dim
            )));
        }
        self.sub_blocks.insert((row, lag), block);
        Ok(())
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side has length {len}, expected {}",
                self.dim()
            )));
        }
        Ok(())
    }

    /// Forward substitution for `Ψ·x = rhs`.
    pub fn solve(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(rhs.len())?;
        let d = self.block_dim;
        let mut x = rhs.clone();
        for (&(row, lag), block) in &self.sub_blocks {
            // BTreeMap iterates rows in increasing order, so every source
            // block is final before it is used.
            let src = (row - lag - 1) * d;
            let dst = (row - 1) * d;
            let contrib = block * x.rows(src, d);
            let mut target = x.rows_mut(dst, d);
            target -= contrib;
        }
        Ok(x)
    }

    /// Column-wise [`solve`](Self::solve).
    pub fn solve_matrix(&self, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_len(rhs.nrows())?;
        let d = self.block_dim;
        let mut x = rhs.clone();
        for (&(row, lag), block) in &self.sub_blocks {
            let src = (row - lag - 1) * d;
            let dst = (row - 1) * d;
            let contrib = block * x.rows(src, d);
            let mut target = x.rows_mut(dst, d);
            target -= contrib;
        }
        Ok(x)
    }

    /// `Ψ·x`.
    pub fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(x.len())?;
        let d = self.block_dim;
        let mut out = x.clone();
        for (&(row, lag), block) in &self.sub_blocks {
            let src = (row - lag - 1) * d;
            let dst = (row - 1) * d;
            let contrib = block * x.rows(src, d);
            let mut target = out.rows_mut(dst, d);
            target += contrib;
        }
        Ok(out)
    }

    /// `Ψᵀ·x`.
    pub fn apply_transpose(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len(x.len())?;
        let d = self.block_dim;
        let mut out = x.clone();
        for (&(row, lag), block) in &self.sub_blocks {
            let src = (row - lag - 1) * d;
            let dst = (row - 1) * d;
            let contrib = block.transpose() * x.rows(dst, d);
            let mut target = out.rows_mut(src, d);
            target += contrib;
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let d = self.block_dim;
        let mut m = DMatrix::identity(self.dim(), self.dim());
        for (&(row, lag), block) in &self.sub_blocks {
            m.view_mut(((row - 1) * d, (row - lag - 1) * d), (d, d))
                .copy_from(block);
        }
        m
    }
}
