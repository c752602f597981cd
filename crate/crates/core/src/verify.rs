//! Deciding whether an array is an ordered orthogonal array (or a plain
//! orthogonal array), with per-selection evidence.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{enumerate_shapes, shape_to_columns, ColumnIndex, Shape, SymbolArray};
use crate::error::{Error, Result};

/// Row-major `M × t` projection.
pub type Grid = Vec<Vec<u32>>;

pub const DEFAULT_MAX_FAILURES: usize = 100;
pub const DEFAULT_SUBSET_CAP: u128 = 1_000_000;

pub fn project_columns(array: &SymbolArray, columns: &[ColumnIndex]) -> Result<Grid> {
    let (n, r) = (array.blocks(), array.depth());
    let offsets = columns
        .iter()
        .map(|c| ColumnIndex::new(c.block, c.depth, n, r).map(|c| c.offset(r)))
        .collect::<Result<Vec<_>>>()?;
    Ok(array.rows().map(|row| offsets.iter().map(|&o| row[o]).collect()).collect())
}

/// Multiplicities of the rows of a projected grid. Tuples never seen have count 0.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Census {
    counts: BTreeMap<Vec<u32>, u64>,
    rows: u64,
}

impl Census {
    pub fn count(&self, tuple: &[u32]) -> u64 {
        self.counts.get(tuple).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Observed tuples with their counts, in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (&[u32], u64)> + '_ {
        self.counts.iter().map(|(k, &v)| (k.as_slice(), v))
    }

    /// `true` when all `q^width` tuples occur equally often.
    pub fn is_uniform(&self, q: u32, width: usize) -> bool {
        let cells = (q as u64).pow(width as u32);
        self.rows.is_multiple_of(cells)
            && self.counts.len() as u64 == cells
            && self.counts.values().all(|&c| c == self.rows / cells)
    }
}

pub fn tuple_census(sub: &[Vec<u32>], q: u32) -> Result<Census> {
    let mut census = Census::default();
    for (i, row) in sub.iter().enumerate() {
        if let Some(&s) = row.iter().find(|&&s| s >= q) {
            return Err(Error::SymbolOutOfRange { row: i + 1, symbol: s, q });
        }
        *census.counts.entry(row.clone()).or_insert(0) += 1;
        census.rows += 1;
    }
    Ok(census)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifyOptions {
    /// Cap on the failures copied into the report.
    pub max_failures: usize,
    /// Reject arrays with repeated rows.
    pub strict_set: bool,
    /// When given, must equal `M / q^t`.
    pub lambda: Option<u64>,
    /// Largest number of column subsets `verify_oa` will examine.
    pub subset_cap: u128,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { max_failures: DEFAULT_MAX_FAILURES, strict_set: false, lambda: None, subset_cap: DEFAULT_SUBSET_CAP }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    Ooa,
    Oa,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    /// Present for OOA checks.
    pub shape: Option<Shape>,
    /// Flat 1-based column indices of the selection.
    pub columns: Vec<usize>,
    pub tuple: Vec<u32>,
    pub observed: u64,
    pub expected: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub pass: bool,
    pub kind: CheckKind,
    pub strength_checked: usize,
    pub rows: usize,
    pub lambda_observed: Option<u64>,
    pub selections_checked: usize,
    pub failing_selections: usize,
    pub total_failures: usize,
    pub truncated: bool,
    pub failures: Vec<Failure>,
    /// Pairs of 1-based row numbers `(first, repeat)`; only filled in strict-set mode.
    pub duplicate_rows: Vec<(usize, usize)>,
}

impl VerifyReport {
    /// The distinct column selections that failed, in report order.
    pub fn failing_columns(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = Vec::new();
        for f in &self.failures {
            if out.last() != Some(&f.columns) {
                out.push(f.columns.clone());
            }
        }
        out
    }

    /// Tuples with zero occurrences in the given selection.
    pub fn missing_tuples(&self, columns: &[usize]) -> Vec<Vec<u32>> {
        self.failures.iter().filter(|f| f.columns == columns && f.observed == 0).map(|f| f.tuple.clone()).collect()
    }
}

struct Selection {
    shape: Option<Shape>,
    offsets: Vec<usize>,
}

/// Checks the array against every shape of `(n, r, t)`.
pub fn verify_ooa(
    array: &SymbolArray,
    q: u32,
    n: usize,
    r: usize,
    t: usize,
    opts: &VerifyOptions,
) -> Result<VerifyReport> {
    if array.width() != n * r {
        return Err(Error::DimensionMismatch(format!("array has {} columns, expected n*r = {}", array.width(), n * r)));
    }
    let shapes = enumerate_shapes(n, r, t)?;
    let selections = shapes
        .into_iter()
        .map(|s| {
            let offsets = shape_to_columns(&s, r).iter().map(|c| c.offset(r)).collect();
            Selection { shape: Some(s), offsets }
        })
        .collect();
    run_checks(array, q, t, CheckKind::Ooa, selections, opts)
}

/// Checks every `t`-subset of columns, ignoring block structure.
pub fn verify_oa(array: &SymbolArray, q: u32, t: usize, opts: &VerifyOptions) -> Result<VerifyReport> {
    let width = array.width();
    if t == 0 || t > width {
        return Err(Error::InvalidStrength { t, max: width });
    }
    let subsets = crate::design::binomial(width as u64, t as u64);
    let cap = num::BigUint::from(opts.subset_cap);
    if subsets > cap {
        let subsets = u128::try_from(&subsets).unwrap_or(u128::MAX);
        return Err(Error::CombinatorialBlowup { subsets, cap: opts.subset_cap });
    }
    let selections = combinations(width, t).into_iter().map(|offsets| Selection { shape: None, offsets }).collect();
    run_checks(array, q, t, CheckKind::Oa, selections, opts)
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn run_checks(
    array: &SymbolArray,
    q: u32,
    t: usize,
    kind: CheckKind,
    selections: Vec<Selection>,
    opts: &VerifyOptions,
) -> Result<VerifyReport> {
    if let Some(pos) = array.as_flat().iter().position(|&s| s >= q) {
        let w = array.width();
        return Err(Error::SymbolOutOfRange { row: pos / w + 1, symbol: array.as_flat()[pos], q });
    }
    let rows = array.num_rows();
    let cells =
        (q as u64).checked_pow(t as u32).ok_or_else(|| Error::ScaleExceeded(format!("q^t = {q}^{t} overflows")))?;
    if rows == 0 {
        return Err(Error::InvalidParams("array has no rows".into()));
    }
    if !(rows as u64).is_multiple_of(cells) {
        return Err(Error::NonDivisibleRows { rows, qt: cells });
    }
    let lambda = rows as u64 / cells;
    if let Some(supplied) = opts.lambda {
        if supplied != lambda {
            return Err(Error::LambdaMismatch { supplied, inferred: lambda });
        }
    }

    let per_selection: Vec<Vec<Failure>> =
        selections.par_iter().map(|sel| selection_failures(array, q, lambda, sel)).collect();

    let selections_checked = per_selection.len();
    let failing_selections = per_selection.iter().filter(|f| !f.is_empty()).count();
    let total_failures: usize = per_selection.iter().map(Vec::len).sum();
    let failures: Vec<Failure> = per_selection.into_iter().flatten().take(opts.max_failures).collect();

    let duplicate_rows = if opts.strict_set { duplicate_rows(array) } else { Vec::new() };
    let pass = total_failures == 0 && duplicate_rows.is_empty();
    Ok(VerifyReport {
        pass,
        kind,
        strength_checked: t,
        rows,
        lambda_observed: (total_failures == 0).then_some(lambda),
        selections_checked,
        failing_selections,
        total_failures,
        truncated: total_failures > failures.len(),
        failures,
        duplicate_rows,
    })
}

fn selection_failures(array: &SymbolArray, q: u32, lambda: u64, sel: &Selection) -> Vec<Failure> {
    let t = sel.offsets.len();
    let mut counts = vec![0u64; (q as usize).pow(t as u32)];
    for row in array.rows() {
        let code = sel.offsets.iter().fold(0usize, |acc, &o| acc * q as usize + row[o] as usize);
        counts[code] += 1;
    }
    let columns: Vec<usize> = sel.offsets.iter().map(|o| o + 1).collect();
    counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != lambda)
        .map(|(code, &observed)| Failure {
            shape: sel.shape.clone(),
            columns: columns.clone(),
            tuple: decode(code, q, t),
            observed,
            expected: lambda,
        })
        .collect()
}

fn decode(mut code: usize, q: u32, t: usize) -> Vec<u32> {
    let mut tuple = vec![0; t];
    for slot in tuple.iter_mut().rev() {
        *slot = (code % q as usize) as u32;
        code /= q as usize;
    }
    tuple
}

fn duplicate_rows(array: &SymbolArray) -> Vec<(usize, usize)> {
    let mut seen: HashMap<&[u32], usize> = HashMap::new();
    let mut dups = Vec::new();
    for (i, row) in array.rows().enumerate() {
        match seen.get(row) {
            Some(&first) => dups.push((first + 1, i + 1)),
            None => {
                seen.insert(row, i);
            }
        }
    }
    dups
}
