//! Small dense matrices and exact Gaussian elimination.

use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use std::ops::{Index, IndexMut};

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Builds a matrix from row-major data; `None` if the length is wrong.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Option<Self> {
        (data.len() == rows * cols).then_some(Self { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Option<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return None;
        }
        Self::from_row_major(r, c, rows.into_iter().flatten().collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Matrix<U> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    /// `M v`
    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
            })
            .collect()
    }

    /// `vᵀ M`
    pub fn vec_mul(&self, v: &[T]) -> Vec<T> {
        debug_assert_eq!(v.len(), self.rows);
        let mut out = vec![T::zero(); self.cols];
        for (i, vi) in v.iter().enumerate() {
            if vi.is_zero() {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o = o.clone() + vi.clone() * a.clone();
            }
        }
        out
    }

    /// Rows permuted so that row `k` of the result is row `perm[k]` of `self`.
    pub fn permute_rows(&self, perm: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for &p in perm {
            data.extend_from_slice(self.row(p));
        }
        Self { rows: self.rows, cols: self.cols, data }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Outcome of solving `M z = b`.
#[derive(Clone, Debug, PartialEq)]
pub enum LinearSolution<T> {
    Unique(Vec<T>),
    /// Rank-deficient but consistent: a particular solution plus a basis of
    /// the null space.
    Continuum { particular: Vec<T>, null_space: Vec<Vec<T>> },
    Inconsistent,
}

/// Gauss-Jordan elimination. Exact for rational scalars; for floats a pivot
/// with magnitude at most `T::default_eps()` counts as zero.
pub fn solve<T: Scalar>(m: &Matrix<T>, b: &[T]) -> LinearSolution<T> {
    let (rows, cols) = (m.rows(), m.cols());
    assert_eq!(b.len(), rows);
    let eps = T::default_eps();
    let negligible = |v: &T| v.abs() <= eps;

    // augmented [M | b]
    let mut a: Vec<Vec<T>> = (0..rows)
        .map(|i| {
            let mut r = m.row(i).to_vec();
            r.push(b[i].clone());
            r
        })
        .collect();

    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        // largest magnitude pivot keeps floats stable; any nonzero works exactly
        let Some(p) = (r..rows)
            .filter(|&i| !negligible(&a[i][c]))
            .max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap())
        else {
            continue;
        };
        a.swap(r, p);
        let piv = a[r][c].clone();
        for v in a[r].iter_mut() {
            *v = v.clone() / piv.clone();
        }
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for k in c..=cols {
                    let sub = f.clone() * a[r][k].clone();
                    a[i][k] = a[i][k].clone() - sub;
                }
            }
        }
        pivot_cols.push(c);
        r += 1;
    }

    if a[r..].iter().any(|row| !negligible(&row[cols])) {
        return LinearSolution::Inconsistent;
    }

    let mut particular = vec![T::zero(); cols];
    for (i, &c) in pivot_cols.iter().enumerate() {
        particular[c] = a[i][cols].clone();
    }
    if pivot_cols.len() == cols {
        return LinearSolution::Unique(particular);
    }

    let free: Vec<usize> = (0..cols).filter(|c| !pivot_cols.contains(c)).collect();
    let null_space = free
        .iter()
        .map(|&f| {
            let mut v = vec![T::zero(); cols];
            v[f] = T::one();
            for (i, &c) in pivot_cols.iter().enumerate() {
                v[c] = -a[i][f].clone();
            }
            v
        })
        .collect();
    LinearSolution::Continuum { particular, null_space }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational_from_str;
    use num_rational::BigRational;

    fn q(s: &str) -> BigRational {
        rational_from_str(s).unwrap()
    }

    fn qm(rows: &[&[&str]]) -> Matrix<BigRational> {
        Matrix::from_rows(rows.iter().map(|r| r.iter().map(|s| q(s)).collect()).collect()).unwrap()
    }

    #[test]
    fn unique_rational_solution() {
        let m = qm(&[&["2", "1"], &["1", "3"]]);
        let sol = solve(&m, &[q("1"), q("2")]);
        assert_eq!(sol, LinearSolution::Unique(vec![q("1/5"), q("3/5")]));
    }

    #[test]
    fn singular_consistent_and_inconsistent() {
        let m = qm(&[&["1", "1"], &["2", "2"]]);
        match solve(&m, &[q("1"), q("2")]) {
            LinearSolution::Continuum { particular, null_space } => {
                assert_eq!(m.mul_vec(&particular), vec![q("1"), q("2")]);
                assert_eq!(null_space.len(), 1);
                assert_eq!(m.mul_vec(&null_space[0]), vec![q("0"), q("0")]);
            }
            other => panic!("expected continuum, got {other:?}"),
        }
        assert_eq!(solve(&m, &[q("1"), q("3")]), LinearSolution::Inconsistent);
    }

    #[test]
    fn overdetermined_systems() {
        let m = qm(&[&["1", "0"], &["0", "1"], &["1", "1"]]);
        assert_eq!(solve(&m, &[q("1"), q("2"), q("3")]), LinearSolution::Unique(vec![q("1"), q("2")]));
        assert_eq!(solve(&m, &[q("1"), q("2"), q("4")]), LinearSolution::Inconsistent);
    }

    #[test]
    fn float_solve_and_products() {
        let m = Matrix::from_rows(vec![vec![4.0, 1.0], vec![2.0, 3.0]]).unwrap();
        let LinearSolution::Unique(z) = solve::<f64>(&m, &[1.0, 2.0]) else { panic!() };
        let back: Vec<f64> = m.mul_vec(&z);
        assert!((back[0] - 1.0).abs() < 1e-14 && (back[1] - 2.0).abs() < 1e-14);
        assert_eq!(m.vec_mul(&[1.0, 1.0]), vec![6.0, 4.0]);
        assert_eq!(m.transpose()[(0, 1)], 2.0);
    }
}
