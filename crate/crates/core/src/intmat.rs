//! Dense integer matrices, just enough for the basis/dual-basis identities.

use num::bigint::BigInt;
use num::Zero;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<i64>>) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Self { rows: rows.len(), cols, data: rows.into_iter().flatten().collect() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: i64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[i64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<i64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// `selfᵀ · other`; zero entries of `self` are skipped.
    pub fn transpose_mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.rows, other.rows, "row counts differ");
        let mut out = IntMatrix::zeros(self.cols, other.cols);
        for x in 0..self.rows {
            let right = other.row(x);
            for (b, &g) in self.row(x).iter().enumerate() {
                if g == 0 {
                    continue;
                }
                let dst = &mut out.data[b * other.cols..(b + 1) * other.cols];
                for (d, &p) in dst.iter_mut().zip(right) {
                    *d += g * p;
                }
            }
        }
        out
    }

    /// First entry where `self` differs from the identity, if any.
    pub fn identity_defect(&self) -> Option<(usize, usize, i64)> {
        if self.rows != self.cols {
            return Some((self.rows.min(self.cols), 0, 0));
        }
        (0..self.rows)
            .flat_map(|i| (0..self.cols).map(move |j| (i, j)))
            .map(|(i, j)| (i, j, self.get(i, j)))
            .find(|&(i, j, v)| v != i64::from(i == j))
    }

    /// Rank over the rationals by fraction-free (Bareiss) elimination.
    pub fn rank(&self) -> usize {
        let mut m: Vec<Vec<BigInt>> =
            (0..self.rows).map(|i| self.row(i).iter().map(|&v| BigInt::from(v)).collect()).collect();
        let mut rank = 0;
        let mut prev = BigInt::from(1);
        for col in 0..self.cols {
            let Some(pivot) = (rank..self.rows).find(|&i| !m[i][col].is_zero()) else {
                continue;
            };
            m.swap(rank, pivot);
            for i in rank + 1..self.rows {
                for j in col + 1..self.cols {
                    let v = &m[rank][col] * &m[i][j] - &m[i][col] * &m[rank][j];
                    m[i][j] = v / &prev;
                }
                m[i][col] = BigInt::zero();
            }
            prev = m[rank][col].clone();
            rank += 1;
            if rank == self.rows {
                break;
            }
        }
        rank
    }
}
