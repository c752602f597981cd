//! Array constructions: the full factorial, the OA/OOA reductions, the
//! finite-field evaluation construction of index one, and digit extraction
//! from point sets in the unit cube.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::design::SymbolArray;
use crate::error::{Error, Result};
use crate::gf::{FieldElement, FieldSpec, Polynomial};

/// Largest number of rows any constructor will materialize.
pub const ROW_CAP: u64 = 1 << 20;

fn row_count(q: u32, exponent: usize) -> Result<u64> {
    (q as u64)
        .checked_pow(exponent as u32)
        .filter(|&m| m <= ROW_CAP)
        .ok_or_else(|| Error::ScaleExceeded(format!("{q}^{exponent} rows exceeds the cap of {ROW_CAP}")))
}

/// Digits of `index` in base `q`, most significant first.
fn digits(mut index: u64, q: u32, len: usize) -> Vec<u32> {
    let mut out = vec![0u32; len];
    for slot in out.iter_mut().rev() {
        *slot = (index % q as u64) as u32;
        index /= q as u64;
    }
    out
}

/// Every word of length `n·r`, lexicographic.
pub fn full_factorial(q: u32, n: usize, r: usize) -> Result<SymbolArray> {
    if q < 2 {
        return Err(Error::InvalidParams(format!("alphabet size q = {q} must be at least 2")));
    }
    let width = n * r;
    let rows = row_count(q, width)?;
    if width == 0 {
        return Ok(SymbolArray::zero_width(q, n, 1));
    }
    let data: Vec<u32> = (0..rows).into_par_iter().flat_map_iter(|i| digits(i, q, width)).collect();
    SymbolArray::from_flat(q, n, r, data)
}

fn expect_shape(array: &SymbolArray, n: usize, r: usize) -> Result<()> {
    if array.width() != n * r {
        return Err(Error::DimensionMismatch(format!(
            "array has {} columns, expected {n}·{r} = {}",
            array.width(),
            n * r
        )));
    }
    Ok(())
}

/// Keeps the first column of every block.
pub fn ooa_to_oa(array: &SymbolArray, n: usize, r: usize) -> Result<SymbolArray> {
    expect_shape(array, n, r)?;
    if r == 0 {
        return Ok(SymbolArray::zero_width(array.q(), n, array.num_rows()));
    }
    let data = array.rows().flat_map(|row| row.iter().step_by(r).copied()).collect();
    SymbolArray::from_flat(array.q(), n, 1, data)
}

/// Views `n·r` columns as `n` blocks of `r` consecutive columns.
pub fn oa_to_ooa(array: &SymbolArray, n: usize, r: usize) -> Result<SymbolArray> {
    expect_shape(array, n, r)?;
    array.regroup(n, r)
}

/// Rows are the polynomials `f` of degree below `t`, ordered by coefficient
/// vector `(c₀, …, c_{t-1})`. Block `i` holds the first `r` Hasse derivatives
/// of `f` at the `i`-th evaluation point. Index one for every shape because
/// Hermite interpolation with multiplicities is unique.
pub fn hermite_ooa(
    field: &FieldSpec,
    n: usize,
    r: usize,
    t: usize,
    points: Option<&[FieldElement]>,
) -> Result<SymbolArray> {
    let q = field.order();
    if t == 0 || t > n * r {
        return Err(Error::InvalidStrength { t, max: n * r });
    }
    if (q as usize) < n {
        return Err(Error::TooFewPoints { q, n });
    }
    let points: Vec<FieldElement> = match points {
        Some(p) => {
            if p.len() != n {
                return Err(Error::DimensionMismatch(format!("{} evaluation points for {n} blocks", p.len())));
            }
            if let Some(bad) = p.iter().find(|e| !field.contains(e)) {
                return Err(Error::ForeignElement(bad.coefficients().to_vec()));
            }
            let mut sorted = p.to_vec();
            sorted.sort();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::DuplicatePoints);
            }
            p.to_vec()
        }
        None => field.elements().take(n).collect(),
    };
    let rows = row_count(q, t)?;
    let width = n * r;
    let tables = (q <= TABLE_LIMIT).then(|| OpTables::new(field));
    let point_idx: Vec<u32> = points.iter().map(|a| field.index_of(a)).collect();
    let data: Vec<u32> = (0..rows)
        .into_par_iter()
        .flat_map_iter(|index| {
            let coeffs = digits(index, q, t);
            let mut row = vec![0u32; width];
            for (i, a) in points.iter().enumerate() {
                let block = &mut row[i * r..(i + 1) * r];
                match &tables {
                    Some(tab) => {
                        let shifted = tab.taylor_shift(&coeffs, point_idx[i]);
                        for (slot, c) in block.iter_mut().zip(shifted) {
                            *slot = c;
                        }
                    }
                    None => {
                        let f = Polynomial::new(coeffs.iter().map(|&c| field.element(c)).collect());
                        for (slot, c) in block.iter_mut().zip(&field.taylor_shift(&f, a).coeffs) {
                            *slot = field.index_of(c);
                        }
                    }
                }
            }
            row
        })
        .collect();
    SymbolArray::from_flat(q, n, r, data)
}

/// Fields up to this order get addition and multiplication tables.
const TABLE_LIMIT: u32 = 256;

/// Field arithmetic on canonical element indices.
struct OpTables {
    q: usize,
    add: Vec<u32>,
    mul: Vec<u32>,
}

impl OpTables {
    fn new(field: &FieldSpec) -> Self {
        let q = field.order() as usize;
        let elems: Vec<FieldElement> = field.elements().collect();
        let mut add = vec![0; q * q];
        let mut mul = vec![0; q * q];
        for (i, a) in elems.iter().enumerate() {
            for (j, b) in elems.iter().enumerate() {
                add[i * q + j] = field.index_of(&field.add(a, b));
                mul[i * q + j] = field.index_of(&field.mul(a, b));
            }
        }
        Self { q, add, mul }
    }

    /// Coefficients of `f(z + a)` by repeated synthetic division.
    fn taylor_shift(&self, coeffs: &[u32], a: u32) -> Vec<u32> {
        let mut c = coeffs.to_vec();
        let len = c.len();
        for i in 0..len.saturating_sub(1) {
            for j in (i..len - 1).rev() {
                let prod = self.mul[a as usize * self.q + c[j + 1] as usize];
                c[j] = self.add[c[j] as usize * self.q + prod as usize];
            }
        }
        c
    }
}

/// Points of `[0,1)^s` whose coordinates have exact base-`q` expansions of length `m`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointSet {
    pub q: u32,
    pub m: usize,
    pub s: usize,
    pub points: Vec<Vec<BigRational>>,
}

impl PointSet {
    pub fn new(q: u32, m: usize, points: Vec<Vec<BigRational>>) -> Result<Self> {
        if q < 2 {
            return Err(Error::InvalidParams(format!("base q = {q} must be at least 2")));
        }
        let s = points.first().map_or(0, Vec::len);
        if let Some(i) = points.iter().position(|p| p.len() != s) {
            return Err(Error::DimensionMismatch(format!(
                "point {} has {} coordinates, expected {s}",
                i + 1,
                points[i].len()
            )));
        }
        let scale = BigInt::from(q).pow(m as u32);
        for (i, p) in points.iter().enumerate() {
            for x in p {
                if x.is_negative() || *x >= BigRational::one() {
                    return Err(Error::InexactCoordinate(format!("point {}: {x} is outside [0,1)", i + 1)));
                }
                if !(x * &scale).is_integer() {
                    return Err(Error::InexactCoordinate(format!(
                        "point {}: {x} has no {m}-digit base-{q} expansion",
                        i + 1
                    )));
                }
            }
        }
        Ok(Self { q, m, s, points })
    }

    /// A net in base `q` with precision `m` has exactly `q^m` points.
    pub fn has_net_size(&self) -> bool {
        (self.q as u64).checked_pow(self.m as u32) == Some(self.points.len() as u64)
    }
}

/// Block `i` is coordinate `i`; depth `j` is its `j`-th base-`q` digit.
pub fn points_to_array(ps: &PointSet, d: usize) -> Result<SymbolArray> {
    if d > ps.m {
        return Err(Error::InvalidParams(format!("{d} digits requested but precision is {}", ps.m)));
    }
    if d == 0 || ps.s == 0 {
        return Ok(SymbolArray::zero_width(ps.q, ps.s, ps.points.len()));
    }
    let q = BigInt::from(ps.q);
    let mut data = Vec::with_capacity(ps.points.len() * ps.s * d);
    for p in &ps.points {
        for x in p {
            let mut frac = x.clone();
            for _ in 0..d {
                frac *= &q;
                let digit = frac.to_integer();
                data.push(digit.to_u32().expect("digit below q"));
                frac -= BigRational::from_integer(digit);
            }
        }
    }
    SymbolArray::from_flat(ps.q, ps.s, d, data)
}

/// Reads each block as the base-`q` digits of one coordinate.
pub fn array_to_points(array: &SymbolArray) -> PointSet {
    let q = BigInt::from(array.q());
    let (n, r) = (array.blocks(), array.depth());
    let points = array
        .rows()
        .map(|row| {
            (0..n)
                .map(|b| {
                    let mut num = BigInt::zero();
                    for &digit in &row[b * r..(b + 1) * r] {
                        num = num * &q + BigInt::from(digit);
                    }
                    BigRational::new(num, q.pow(r as u32))
                })
                .collect()
        })
        .collect();
    PointSet { q: array.q(), m: r, s: n, points }
}
