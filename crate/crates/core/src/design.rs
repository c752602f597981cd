//! Block/column model of an ordered orthogonal array and the shape family.
//!
//! Columns are numbered two ways: as a `(block, depth)` pair, both 1-based,
//! and as a flat 1-based index `(block - 1) * r + depth`. Symbols are 0-based.

use std::fmt;

use num::bigint::{BigInt, BigUint};
use num::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact binomial coefficient.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrayParams {
    pub q: u32,
    pub n: usize,
    pub r: usize,
    pub t: usize,
    pub lambda: u64,
}

impl ArrayParams {
    pub fn new(q: u32, n: usize, r: usize, t: usize, lambda: u64) -> Result<Self> {
        if q < 2 {
            return Err(Error::InvalidParams(format!("alphabet size q = {q} must be at least 2")));
        }
        if n == 0 || r == 0 {
            return Err(Error::InvalidParams(format!("need n, r >= 1, got n = {n}, r = {r}")));
        }
        if t == 0 || t > n * r {
            return Err(Error::InvalidStrength { t, max: n * r });
        }
        if lambda == 0 {
            return Err(Error::InvalidParams("lambda must be positive".into()));
        }
        Ok(Self { q, n, r, t, lambda })
    }

    /// `M = λ q^t`.
    pub fn rows(&self) -> BigUint {
        BigUint::from(self.lambda) * BigUint::from(self.q).pow(self.t as u32)
    }

    pub fn columns(&self) -> usize {
        self.n * self.r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ColumnIndex {
    pub block: usize,
    pub depth: usize,
}

impl ColumnIndex {
    pub fn new(block: usize, depth: usize, n: usize, r: usize) -> Result<Self> {
        if block == 0 || block > n || depth == 0 || depth > r {
            return Err(Error::ColumnOutOfRange { block, depth, n, r });
        }
        Ok(Self { block, depth })
    }

    /// 1-based flat index.
    pub fn flat(&self, r: usize) -> usize {
        (self.block - 1) * r + self.depth
    }

    /// 0-based position within a row.
    pub fn offset(&self, r: usize) -> usize {
        self.flat(r) - 1
    }

    pub fn from_flat(flat: usize, r: usize) -> Self {
        Self { block: (flat - 1) / r + 1, depth: (flat - 1) % r + 1 }
    }

    pub fn from_offset(offset: usize, r: usize) -> Self {
        Self::from_flat(offset + 1, r)
    }
}

impl fmt::Display for ColumnIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.block, self.depth)
    }
}

/// Per-block prefix lengths `(t_1, ..., t_n)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Shape {
    parts: Vec<usize>,
}

impl Shape {
    pub fn new(parts: Vec<usize>, r: usize, t: usize) -> Result<Self> {
        if let Some(&p) = parts.iter().find(|&&p| p > r) {
            return Err(Error::InvalidParams(format!("shape part {p} exceeds depth {r}")));
        }
        let sum: usize = parts.iter().sum();
        if sum != t {
            return Err(Error::InvalidParams(format!("shape parts sum to {sum}, expected {t}")));
        }
        Ok(Self { parts })
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn strength(&self) -> usize {
        self.parts.iter().sum()
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.parts.iter().map(ToString::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Every shape for `(n, r, t)` in lexicographic order of parts.
pub fn enumerate_shapes(n: usize, r: usize, t: usize) -> Result<Vec<Shape>> {
    if t == 0 || t > n * r {
        return Err(Error::InvalidStrength { t, max: n * r });
    }
    let mut out = Vec::new();
    let mut parts = Vec::with_capacity(n);
    fill_shapes(n, r, t, &mut parts, &mut out);
    Ok(out)
}

fn fill_shapes(n: usize, r: usize, remaining: usize, parts: &mut Vec<usize>, out: &mut Vec<Shape>) {
    let placed = parts.len();
    if placed == n {
        if remaining == 0 {
            out.push(Shape { parts: parts.clone() });
        }
        return;
    }
    let capacity_after = (n - placed - 1) * r;
    let lo = remaining.saturating_sub(capacity_after);
    for part in lo..=remaining.min(r) {
        parts.push(part);
        fill_shapes(n, r, remaining - part, parts, out);
        parts.pop();
    }
}

/// Number of tuples `(t_1..t_n)` with `0 <= t_i <= r` summing to `t`, by
/// inclusion-exclusion over the parts that overflow the cap.
pub fn count_shapes(n: usize, r: usize, t: usize) -> BigUint {
    if n == 0 {
        return if t == 0 { BigUint::one() } else { BigUint::zero() };
    }
    let mut total = BigInt::zero();
    let mut j = 0usize;
    while j <= n && j * (r + 1) <= t {
        let rest = (t - j * (r + 1) + n - 1) as u64;
        let term = BigInt::from(binomial(n as u64, j as u64) * binomial(rest, n as u64 - 1));
        if j.is_multiple_of(2) {
            total += term;
        } else {
            total -= term;
        }
        j += 1;
    }
    total.to_biguint().expect("inclusion-exclusion count is nonnegative")
}

/// Depths `1..=t_i` of each block `i`, block-major.
pub fn shape_to_columns(shape: &Shape, r: usize) -> Vec<ColumnIndex> {
    debug_assert!(shape.parts.iter().all(|&p| p <= r));
    shape
        .parts
        .iter()
        .enumerate()
        .flat_map(|(i, &ti)| (1..=ti).map(move |d| ColumnIndex { block: i + 1, depth: d }))
        .collect()
}

/// An `M × (n·r)` grid of symbols in `0..q`, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolArray {
    q: u32,
    n: usize,
    r: usize,
    nrows: usize,
    data: Vec<u32>,
}

impl SymbolArray {
    pub fn new(q: u32, n: usize, r: usize, rows: Vec<Vec<u32>>) -> Result<Self> {
        if q < 2 {
            return Err(Error::InvalidParams(format!("alphabet size q = {q} must be at least 2")));
        }
        let width = n * r;
        let nrows = rows.len();
        let mut data = Vec::with_capacity(nrows * width);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != width {
                return Err(Error::DimensionMismatch(format!(
                    "row {} has {} entries, expected {width}",
                    i + 1,
                    row.len()
                )));
            }
            if let Some(&s) = row.iter().find(|&&s| s >= q) {
                return Err(Error::SymbolOutOfRange { row: i + 1, symbol: s, q });
            }
            data.extend(row);
        }
        Ok(Self { q, n, r, nrows, data })
    }

    /// Builds from flat row-major data without per-row allocation.
    pub fn from_flat(q: u32, n: usize, r: usize, data: Vec<u32>) -> Result<Self> {
        let width = n * r;
        if width == 0 {
            return Err(Error::DimensionMismatch("use zero_width for arrays without columns".into()));
        }
        if !data.len().is_multiple_of(width) {
            return Err(Error::DimensionMismatch(format!(
                "{} entries is not a multiple of the row width {width}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|&s| s >= q) {
            return Err(Error::SymbolOutOfRange { row: pos / width + 1, symbol: data[pos], q });
        }
        let nrows = data.len() / width;
        Ok(Self { q, n, r, nrows, data })
    }

    /// `rows` empty rows over `n` blocks of depth 0.
    pub fn zero_width(q: u32, n: usize, rows: usize) -> Self {
        Self { q, n, r: 0, nrows: rows, data: Vec::new() }
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn blocks(&self) -> usize {
        self.n
    }

    pub fn depth(&self) -> usize {
        self.r
    }

    pub fn width(&self) -> usize {
        self.n * self.r
    }

    pub fn num_rows(&self) -> usize {
        self.nrows
    }

    pub fn row(&self, i: usize) -> &[u32] {
        let w = self.width();
        &self.data[i * w..(i + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> + '_ {
        let w = self.width();
        (0..self.nrows).map(move |i| &self.data[i * w..(i + 1) * w])
    }

    pub fn to_rows(&self) -> Vec<Vec<u32>> {
        self.rows().map(<[u32]>::to_vec).collect()
    }

    pub fn get(&self, row: usize, col: ColumnIndex) -> u32 {
        self.data[row * self.width() + col.offset(self.r)]
    }

    pub fn set(&mut self, row: usize, offset: usize, symbol: u32) {
        assert!(symbol < self.q);
        let w = self.width();
        self.data[row * w + offset] = symbol;
    }

    pub fn as_flat(&self) -> &[u32] {
        &self.data
    }

    /// Same grid, different block structure; `n * r` must match the width.
    pub fn regroup(&self, n: usize, r: usize) -> Result<Self> {
        if n * r != self.width() {
            return Err(Error::DimensionMismatch(format!("cannot view {} columns as {n} blocks of {r}", self.width())));
        }
        Ok(Self { q: self.q, n, r, nrows: self.nrows, data: self.data.clone() })
    }

    /// Rows sorted lexicographically; handy for comparing row multisets.
    pub fn sorted_rows(&self) -> Vec<Vec<u32>> {
        let mut rows = self.to_rows();
        rows.sort();
        rows
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parts(shapes: &[Shape]) -> Vec<Vec<usize>> {
        shapes.iter().map(|s| s.parts().to_vec()).collect()
    }

    /// Oracle: every tuple in {0..r}^n, filtered by sum.
    fn brute_shapes(n: usize, r: usize, t: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let total = (r + 1).pow(n as u32);
        for code in 0..total {
            let mut rest = code;
            let mut tuple = vec![0; n];
            for slot in tuple.iter_mut().rev() {
                *slot = rest % (r + 1);
                rest /= r + 1;
            }
            if tuple.iter().sum::<usize>() == t {
                out.push(tuple);
            }
        }
        out
    }

    #[test]
    fn shape_examples() {
        assert_eq!(parts(&enumerate_shapes(2, 2, 2).unwrap()), vec![vec![0, 2], vec![1, 1], vec![2, 0]]);
        assert_eq!(parts(&enumerate_shapes(2, 1, 2).unwrap()), vec![vec![1, 1]]);
        let s = parts(&enumerate_shapes(3, 2, 3).unwrap());
        assert_eq!(s.len(), 7);
        assert!(s.contains(&vec![1, 1, 1]));
        assert!(s.contains(&vec![0, 1, 2]));
        assert_eq!(enumerate_shapes(2, 2, 5), Err(Error::InvalidStrength { t: 5, max: 4 }));
        assert_eq!(enumerate_shapes(2, 2, 0), Err(Error::InvalidStrength { t: 0, max: 4 }));
    }

    #[test]
    fn count_examples() {
        assert_eq!(count_shapes(2, 2, 2), BigUint::from(3u32));
        assert_eq!(count_shapes(3, 2, 3), BigUint::from(7u32));
        assert_eq!(count_shapes(5, 10, 4), BigUint::from(70u32));
        assert_eq!(count_shapes(2, 2, 5), BigUint::zero());
        assert_eq!(count_shapes(3, 2, 0), BigUint::one());
    }

    #[test]
    fn enumeration_matches_brute_force_and_count() {
        for n in 1..=5 {
            for r in 1..=4 {
                for t in 1..=n * r {
                    let got = parts(&enumerate_shapes(n, r, t).unwrap());
                    assert_eq!(got, brute_shapes(n, r, t), "({n},{r},{t})");
                    assert_eq!(count_shapes(n, r, t), BigUint::from(got.len()));
                }
            }
        }
    }

    #[test]
    fn counts_over_all_strengths_sum_to_capped_tuples() {
        for n in 1..=6 {
            for r in 1..=6 {
                let total: BigUint = (0..=n * r).map(|t| count_shapes(n, r, t)).sum();
                assert_eq!(total, BigUint::from(r + 1).pow(n as u32));
            }
        }
    }

    #[test]
    fn columns_of_shapes() {
        let c = |b, d| ColumnIndex { block: b, depth: d };
        assert_eq!(shape_to_columns(&Shape::new(vec![2, 0], 2, 2).unwrap(), 2), vec![c(1, 1), c(1, 2)]);
        assert_eq!(shape_to_columns(&Shape::new(vec![1, 1], 2, 2).unwrap(), 2), vec![c(1, 1), c(2, 1)]);
        assert_eq!(shape_to_columns(&Shape::new(vec![0, 2], 2, 2).unwrap(), 2), vec![c(2, 1), c(2, 2)]);
    }

    #[test]
    fn column_index_round_trip() {
        for r in 1..5 {
            for flat in 1..=4 * r {
                let c = ColumnIndex::from_flat(flat, r);
                assert_eq!(c.flat(r), flat);
                assert!(ColumnIndex::new(c.block, c.depth, 4, r).is_ok());
            }
        }
        assert!(ColumnIndex::new(3, 1, 2, 2).is_err());
        assert!(ColumnIndex::new(1, 0, 2, 2).is_err());
    }

    #[test]
    fn params_validation() {
        let p = ArrayParams::new(2, 2, 2, 2, 1).unwrap();
        assert_eq!(p.rows(), BigUint::from(4u32));
        assert!(ArrayParams::new(1, 2, 2, 2, 1).is_err());
        assert!(ArrayParams::new(2, 2, 2, 5, 1).is_err());
        assert!(ArrayParams::new(2, 2, 2, 2, 0).is_err());
    }

    #[test]
    fn symbol_array_checks() {
        assert!(matches!(
            SymbolArray::new(2, 2, 1, vec![vec![0, 2]]),
            Err(Error::SymbolOutOfRange { row: 1, symbol: 2, q: 2 })
        ));
        assert!(matches!(SymbolArray::new(2, 2, 1, vec![vec![0]]), Err(Error::DimensionMismatch(_))));
        let a = SymbolArray::new(3, 1, 2, vec![vec![2, 1], vec![0, 0]]).unwrap();
        assert_eq!(a.num_rows(), 2);
        assert_eq!(a.sorted_rows(), vec![vec![0, 0], vec![2, 1]]);
        assert_eq!(a.get(0, ColumnIndex { block: 1, depth: 2 }), 1);
    }

    proptest! {
        #[test]
        fn count_bounded_by_binomial(n in 1usize..=8, r in 1usize..=8, t in 1usize..=10) {
            let count = count_shapes(n, r, t);
            let bound = binomial((n + t - 1) as u64, t as u64);
            prop_assert!(count <= bound);
            prop_assert_eq!(count == bound, r >= t);
        }

        #[test]
        fn shape_columns_increase(n in 1usize..=5, r in 1usize..=4, t in 1usize..=8) {
            prop_assume!(t <= n * r);
            for s in enumerate_shapes(n, r, t).unwrap() {
                let flats: Vec<usize> = shape_to_columns(&s, r).iter().map(|c| c.flat(r)).collect();
                prop_assert_eq!(flats.len(), t);
                prop_assert!(flats.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }
}
