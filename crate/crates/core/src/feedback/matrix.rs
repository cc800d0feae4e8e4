use crate::error::{Error, Result};
use crate::scalar::Real;

/// Row-major square matrix over sequences.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<R = f64> {
    dim: usize,
    data: Vec<R>,
}

/// Read access shared by dense and structured loss matrices.
pub trait MatrixView<R: Real> {
    fn dim(&self) -> usize;
    fn at(&self, row: usize, col: usize) -> R;

    /// Whether column `col` is identically zero.
    fn column_is_zero(&self, _col: usize) -> bool {
        false
    }

    fn trace(&self) -> R {
        (0..self.dim()).map(|i| self.at(i, i)).sum()
    }
}

impl<R: Real> DenseMatrix<R> {
    pub fn zeros(dim: usize) -> Self {
        DenseMatrix {
            dim,
            data: vec![R::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, R::one());
        }
        m
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> R) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.data[i * dim + j] = f(i, j);
            }
        }
        m
    }

    pub fn set(&mut self, row: usize, col: usize, v: R) {
        self.data[row * self.dim + col] = v;
    }

    pub fn add_at(&mut self, row: usize, col: usize, v: R) {
        self.data[row * self.dim + col] = self.data[row * self.dim + col] + v;
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &impl MatrixView<R>, scale: R) -> Result<()> {
        if other.dim() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: other.dim(),
            });
        }
        for j in 0..self.dim {
            if other.column_is_zero(j) {
                continue;
            }
            for i in 0..self.dim {
                self.add_at(i, j, scale * other.at(i, j));
            }
        }
        Ok(())
    }

    pub fn scaled(&self, s: R) -> Self {
        DenseMatrix {
            dim: self.dim,
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }

    /// Frobenius inner product.
    pub fn dot(&self, other: &impl MatrixView<R>) -> R {
        let mut acc = R::zero();
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc = acc + self.data[i * self.dim + j] * other.at(i, j);
            }
        }
        acc
    }

    pub fn mul_vec(&self, v: &[R]) -> Vec<R> {
        (0..self.dim)
            .map(|i| {
                self.data[i * self.dim..(i + 1) * self.dim]
                    .iter()
                    .zip(v)
                    .map(|(&a, &b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn max_abs_diff(&self, other: &Self) -> R {
        self.data
            .iter()
            .zip(&other.data)
            .fold(R::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    pub fn as_slice(&self) -> &[R] {
        &self.data
    }
}

impl<R: Real> MatrixView<R> for DenseMatrix<R> {
    fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn at(&self, row: usize, col: usize) -> R {
        self.data[row * self.dim + col]
    }
}

/// Per-episode loss matrix: `ℓ μᵀ` under full feedback, or a handful of sparse columns
/// under bandit feedback.
#[derive(Clone, Debug, PartialEq)]
pub enum LossMatrix<R = f64> {
    RankOne { loss: Vec<R>, policy: Vec<R> },
    /// `columns[k]` lists `(row, value)` pairs of column `k`; absent columns are zero.
    Columns { dim: usize, columns: Vec<Vec<(usize, R)>> },
}

impl<R: Real> LossMatrix<R> {
    pub fn to_dense(&self) -> DenseMatrix<R> {
        DenseMatrix::from_fn(self.dim(), |i, j| self.at(i, j))
    }

    /// Column `k` as a sparse list.
    pub fn column(&self, k: usize) -> Vec<(usize, R)> {
        match self {
            LossMatrix::RankOne { loss, policy } => {
                if policy[k] == R::zero() {
                    return Vec::new();
                }
                loss.iter()
                    .enumerate()
                    .filter(|(_, &l)| l != R::zero())
                    .map(|(i, &l)| (i, l * policy[k]))
                    .collect()
            }
            LossMatrix::Columns { columns, .. } => columns[k].clone(),
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        match self {
            LossMatrix::RankOne { loss, policy } => {
                loss.iter().chain(policy).all(|&v| v >= R::zero())
            }
            LossMatrix::Columns { columns, .. } => columns.iter().flatten().all(|&(_, v)| v >= R::zero()),
        }
    }
}

impl<R: Real> MatrixView<R> for LossMatrix<R> {
    fn dim(&self) -> usize {
        match self {
            LossMatrix::RankOne { loss, .. } => loss.len(),
            LossMatrix::Columns { dim, .. } => *dim,
        }
    }

    fn at(&self, row: usize, col: usize) -> R {
        match self {
            LossMatrix::RankOne { loss, policy } => loss[row] * policy[col],
            LossMatrix::Columns { columns, .. } => columns[col]
                .iter()
                .find(|(i, _)| *i == row)
                .map_or(R::zero(), |&(_, v)| v),
        }
    }

    fn column_is_zero(&self, col: usize) -> bool {
        match self {
            LossMatrix::RankOne { loss, policy } => {
                policy[col] == R::zero() || loss.iter().all(|&l| l == R::zero())
            }
            LossMatrix::Columns { columns, .. } => columns[col].iter().all(|&(_, v)| v == R::zero()),
        }
    }

    fn trace(&self) -> R {
        match self {
            LossMatrix::RankOne { loss, policy } => loss.iter().zip(policy).map(|(&l, &p)| l * p).sum(),
            LossMatrix::Columns { columns, .. } => columns
                .iter()
                .enumerate()
                .map(|(k, col)| col.iter().filter(|(i, _)| *i == k).map(|&(_, v)| v).sum::<R>())
                .sum(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_entries() {
        let m = LossMatrix::RankOne { loss: vec![1.0, 2.0], policy: vec![0.5, 0.0] };
        assert_eq!(m.at(1, 0), 1.0);
        assert!(m.column_is_zero(1));
        assert_eq!(m.trace(), 0.5);
        assert_eq!(m.to_dense().trace(), 0.5);
    }

    #[test]
    fn sparse_columns() {
        let m = LossMatrix::Columns { dim: 3, columns: vec![vec![(0, 2.0)], vec![], vec![(1, 1.0), (2, 3.0)]] };
        assert_eq!(m.at(2, 2), 3.0);
        assert_eq!(m.at(0, 1), 0.0);
        assert_eq!(m.trace(), 5.0);
        let mut d = DenseMatrix::zeros(3);
        d.add_scaled(&m, 2.0).unwrap();
        assert_eq!(d.at(1, 2), 2.0);
    }
}
